//! Bound states of the 1D Schrödinger equation on a hard-wall grid, with the
//! Pöschl–Teller well as the exactly solvable benchmark.

use rayon::prelude::*;
use serde::Serialize;

use crate::eigen::lowest_eigenpairs;
use crate::error::{Error, Result};
use crate::grid::{Boundary, GridSpec, PhysScale};
use crate::operator::{build_hamiltonian, sample_potential, PotentialGrid};
use crate::stencil::StencilOrder;

/// `V(x) = −U₀ / cosh²(αx)`, an attractive well of depth `U₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoschlTellerPotential {
    depth: f64,
    alpha: f64,
}

impl PoschlTellerPotential {
    pub fn new(depth: f64, alpha: f64) -> Result<Self> {
        if !(depth > 0.0 && depth.is_finite()) {
            return Err(Error::Domain(format!(
                "well depth U0 must be positive, got {depth}"
            )));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!(
                "well width alpha must be positive, got {alpha}"
            )));
        }
        Ok(Self { depth, alpha })
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn value(&self, x: f64) -> f64 {
        let c = (self.alpha * x).cosh();
        // cosh overflows to inf far out, which correctly gives -0.
        -self.depth / (c * c)
    }

    pub fn sample(&self, grid: &GridSpec) -> Result<PotentialGrid> {
        sample_potential(|x| self.value(x), grid)
    }
}

/// Ascending list of energy levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundStateSpectrum {
    energies: Vec<f64>,
}

impl BoundStateSpectrum {
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::Domain("energies must be finite".into()));
        }
        if energies.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Domain("energies must be ascending".into()));
        }
        Ok(Self { energies })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.energies.iter().sum()
    }
}

/// Closed-form bound-state energies of the Pöschl–Teller well.
///
/// With `s = √(U₀/(α²ħ²/2μ) + 1/4) − 1/2` the levels are `E_n = −(ħ²/2μ)α²(s − n)²`
/// for every integer `n ≥ 0` with `s − n > 0`. There is always at least one.
pub fn exact_poschl_teller_levels(
    pot: &PoschlTellerPotential,
    scale: &PhysScale,
) -> BoundStateSpectrum {
    let unit = scale.hbar2_over_2mu() * pot.alpha * pot.alpha;
    let s = (pot.depth / unit + 0.25).sqrt() - 0.5;
    let energies = (0..)
        .map(|n| s - n as f64)
        .take_while(|&d| d > 0.0)
        .map(|d| -unit * d * d)
        .collect();
    BoundStateSpectrum { energies }
}

/// Lowest eigenpairs of a discretized Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundStates {
    pub spectrum: BoundStateSpectrum,
    /// Real eigenvectors normalized so that `Σ_n |ψ_n|² a = 1`.
    pub wavefunctions: Vec<Vec<f64>>,
    /// `‖Hv − λv‖` for unit-norm `v`.
    pub residuals: Vec<f64>,
    /// `‖H‖_∞`, the scale of the residuals.
    pub norm: f64,
}

impl BoundStates {
    pub fn energies(&self) -> &[f64] {
        self.spectrum.energies()
    }

    /// `max |⟨ψ_i|ψ_j⟩ a − δ_ij|`.
    pub fn orthonormality_error(&self, spacing: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, u) in self.wavefunctions.iter().enumerate() {
            for (j, v) in self.wavefunctions.iter().enumerate() {
                let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() * spacing;
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// Sign convention: the first local extremum of `|ψ|` that carries a visible fraction of
/// the peak amplitude is positive.
fn fix_sign(v: &mut [f64]) {
    let peak = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if peak == 0.0 {
        return;
    }
    let floor = 1e-3 * peak;
    let n = v.len();
    let pivot = (0..n).find(|&i| {
        let here = v[i].abs();
        let left = if i > 0 { v[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { v[i + 1].abs() } else { 0.0 };
        here > floor && here >= left && here >= right
    });
    if let Some(i) = pivot {
        if v[i] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// The `count` lowest eigenpairs of `T̂ + V` on a hard-wall grid.
pub fn solve_hamiltonian(
    grid: &GridSpec,
    order: StencilOrder,
    potential: &PotentialGrid,
    scale: &PhysScale,
    count: usize,
) -> Result<BoundStates> {
    if grid.boundary() != Boundary::Dirichlet {
        return Err(Error::Domain(
            "bound-state solves need a Dirichlet grid".into(),
        ));
    }
    if count == 0 {
        return Err(Error::Size("count must be at least 1".into()));
    }
    if count > grid.points() {
        return Err(Error::Size(format!(
            "requested {count} states from a grid of {} points",
            grid.points()
        )));
    }
    let h = build_hamiltonian(grid, order, scale, potential)?;
    let pairs = lowest_eigenpairs(&h, count)?;
    let inv_sqrt_a = 1.0 / grid.spacing().sqrt();
    let wavefunctions = pairs
        .vectors
        .into_iter()
        .map(|mut v| {
            v.iter_mut().for_each(|x| *x *= inv_sqrt_a);
            fix_sign(&mut v);
            v
        })
        .collect();
    Ok(BoundStates {
        spectrum: BoundStateSpectrum::new(pairs.values)?,
        wavefunctions,
        residuals: pairs.residuals,
        norm: pairs.norm,
    })
}

/// The `count` lowest states of the Pöschl–Teller well, centred in the box.
pub fn solve_bound_states(
    grid: &GridSpec,
    order: StencilOrder,
    pot: &PoschlTellerPotential,
    scale: &PhysScale,
    count: usize,
) -> Result<BoundStates> {
    solve_hamiltonian(grid, order, &pot.sample(grid)?, scale, count)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScanAxis {
    /// Grid points at fixed box length and stencil order.
    N,
    /// Stencil order at fixed grid.
    M,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub value: usize,
    pub energies: Vec<f64>,
    pub sum: f64,
    /// `E_numeric − E_exact`; negative means below the exact level.
    pub errors: Vec<f64>,
    pub sum_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub axis: ScanAxis,
    /// The axis that is held fixed (`M` for an N-scan, `N` for an M-scan).
    pub fixed: usize,
    pub length: f64,
    pub exact: Vec<f64>,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Smallest axis value from which on every level lies at or below its exact value
    /// and every error magnitude is non-increasing.
    pub fn monotonic_threshold(&self) -> Option<usize> {
        let ok_row = |r: &ConvergenceRow| r.errors.iter().all(|&e| e <= 0.0);
        let ok_step = |a: &ConvergenceRow, b: &ConvergenceRow| {
            a.errors
                .iter()
                .zip(&b.errors)
                .all(|(x, y)| y.abs() <= x.abs())
        };
        let n = self.rows.len();
        let mut start = n;
        for i in (0..n).rev() {
            if !ok_row(&self.rows[i]) || (i + 1 < n && !ok_step(&self.rows[i], &self.rows[i + 1])) {
                break;
            }
            start = i;
        }
        self.rows.get(start).map(|r| r.value)
    }
}

fn validate_axis(values: &[usize]) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::Size("a scan needs at least two axis values".into()));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(
            "scan values must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// `(N, M)` for one point of a scan.
fn grid_and_order(axis: ScanAxis, value: usize, fixed: usize) -> (usize, usize) {
    match axis {
        ScanAxis::N => (value, fixed),
        ScanAxis::M => (fixed, value),
    }
}

fn scan(
    axis: ScanAxis,
    fixed: usize,
    values: &[usize],
    pot: &PoschlTellerPotential,
    scale: &PhysScale,
    length: f64,
    count: usize,
) -> Result<ConvergenceTable> {
    validate_axis(values)?;
    let exact = exact_poschl_teller_levels(pot, scale).energies().to_vec();
    if count == 0 || count > exact.len() {
        return Err(Error::Size(format!(
            "count must be between 1 and the {} bound states of the well",
            exact.len()
        )));
    }
    let exact = exact[..count].to_vec();
    for &v in values {
        let (n, m) = grid_and_order(axis, v, fixed);
        StencilOrder::new(m)?;
        if n < 2 * m + 1 {
            return Err(Error::Size(format!(
                "N = {n} is below 2M+1 = {} for M = {m}",
                2 * m + 1
            )));
        }
    }
    let exact_sum: f64 = exact.iter().sum();
    let rows = values
        .par_iter()
        .map(|&v| {
            let (n, m) = grid_and_order(axis, v, fixed);
            let grid = GridSpec::with_length(n, length, Boundary::Dirichlet)?;
            let states = solve_bound_states(&grid, StencilOrder::new(m)?, pot, scale, count)?;
            let energies = states.energies().to_vec();
            let errors = energies.iter().zip(&exact).map(|(e, x)| e - x).collect();
            let sum = energies.iter().sum::<f64>();
            Ok(ConvergenceRow {
                value: v,
                energies,
                sum,
                errors,
                sum_error: sum - exact_sum,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable {
        axis,
        fixed,
        length,
        exact,
        rows,
    })
}

/// Eigenvalues versus grid points `N` at fixed `M` and box length.
pub fn scan_vs_n(
    ns: &[usize],
    order: StencilOrder,
    pot: &PoschlTellerPotential,
    scale: &PhysScale,
    length: f64,
    count: usize,
) -> Result<ConvergenceTable> {
    scan(ScanAxis::N, order.get(), ns, pot, scale, length, count)
}

/// Eigenvalues versus stencil order `M` at fixed grid.
pub fn scan_vs_m(
    ms: &[usize],
    points: usize,
    pot: &PoschlTellerPotential,
    scale: &PhysScale,
    length: f64,
    count: usize,
) -> Result<ConvergenceTable> {
    scan(ScanAxis::M, points, ms, pot, scale, length, count)
}
