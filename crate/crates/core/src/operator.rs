//! Banded matrix representations of `p`, `T` and `H = T + V` on a uniform grid.
//!
//! Operators are stored by diagonals: for each offset `m` in `-M..=M` and each row `n`
//! the coefficient coupling `n` to `n + m`. Periodic closure wraps the column index
//! modulo `N`, so periodic operators are circulant; when `N < 2M + 1` wrapped couplings
//! that land on the same column add up. Dirichlet closure drops couplings that leave the
//! grid.
//!
//! Kinetic and Hamiltonian coefficients are the physical (real symmetric) matrix
//! elements. Momentum coefficients are the real antisymmetric `W_m`; the physical matrix
//! is `-iħ` times the stored band.

use num_complex::Complex64;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::stencil::{kinetic_weights, momentum_weights, Stencil, StencilOrder};

pub use crate::grid::{Boundary, GridSpec, PhysScale};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Momentum,
    Kinetic,
    Hamiltonian,
}

/// Potential energy sampled on the grid points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialGrid {
    values: Vec<f64>,
}

impl PotentialGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "potential value at point {i} is not finite"
            )));
        }
        Ok(Self { values })
    }

    pub fn zeros(points: usize) -> Self {
        Self {
            values: vec![0.0; points],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Samples `f` pointwise on the grid: `V_n = f(x_n)`.
pub fn sample_potential<F>(f: F, grid: &GridSpec) -> Result<PotentialGrid>
where
    F: Fn(f64) -> f64,
{
    let values = grid
        .coordinates()
        .into_iter()
        .map(|x| {
            let v = f(x);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Domain(format!("potential is not finite at x = {x}")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PotentialGrid { values })
}

/// Grid amplitudes `φ_n` of a state `|ψ⟩ = Σ φ_n |x_n⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    amplitudes: Vec<Complex64>,
}

impl Wavefunction {
    pub fn new(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self {
            amplitudes: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    /// `φ_n = exp(i k x_n)`.
    pub fn plane_wave(grid: &GridSpec, k: f64) -> Self {
        Self {
            amplitudes: grid
                .coordinates()
                .into_iter()
                .map(|x| Complex64::from_polar(1.0, k * x))
                .collect(),
        }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// Euclidean norm of the amplitude vector (no grid-spacing weight).
    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Banded Hermitian matrix of order `M` on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct BandedHermitianOperator {
    grid: GridSpec,
    order: StencilOrder,
    kind: OperatorKind,
    scale: PhysScale,
    // diagonal-major: bands[(m + M) * N + n] couples row n to column n + m
    bands: Vec<f64>,
}

impl BandedHermitianOperator {
    fn from_stencil<S: Stencil>(
        grid: GridSpec,
        stencil: &S,
        factor: f64,
        kind: OperatorKind,
        scale: PhysScale,
    ) -> Result<Self> {
        let n = grid.points();
        let half = stencil.order().get();
        if grid.boundary() == Boundary::Dirichlet && n < 2 * half + 1 {
            return Err(Error::Size(format!(
                "stencil of order {half} needs at least {} points, grid has {n}",
                2 * half + 1
            )));
        }
        let mut bands = vec![0.0; (2 * half + 1) * n];
        for (d, m) in (-(half as i64)..=half as i64).enumerate() {
            let coeff = factor * stencil.weight(m);
            let row = &mut bands[d * n..(d + 1) * n];
            match grid.boundary() {
                Boundary::Periodic => row.fill(coeff),
                Boundary::Dirichlet => {
                    for (i, slot) in row.iter_mut().enumerate() {
                        let j = i as i64 + m;
                        if j >= 0 && j < n as i64 {
                            *slot = coeff;
                        }
                    }
                }
            }
        }
        Ok(Self {
            grid,
            order: stencil.order(),
            kind,
            scale,
            bands,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn order(&self) -> StencilOrder {
        self.order
    }

    pub fn half_bandwidth(&self) -> usize {
        self.order.get()
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn scale(&self) -> &PhysScale {
        &self.scale
    }

    pub fn dim(&self) -> usize {
        self.grid.points()
    }

    /// Stored coefficient coupling `row` to `row + offset` (before wrap-around).
    pub fn coefficient(&self, row: usize, offset: i64) -> f64 {
        let half = self.half_bandwidth() as i64;
        if offset.abs() > half || row >= self.dim() {
            return 0.0;
        }
        self.bands[(offset + half) as usize * self.dim() + row]
    }

    /// Column reached from `row` at `offset`, or `None` if a Dirichlet coupling leaves the grid.
    fn column(&self, row: usize, offset: i64) -> Option<usize> {
        let n = self.dim() as i64;
        let j = row as i64 + offset;
        match self.grid.boundary() {
            Boundary::Periodic => Some(j.rem_euclid(n) as usize),
            Boundary::Dirichlet => (0..n).contains(&j).then_some(j as usize),
        }
    }

    fn apply_band<T>(&self, v: &[T]) -> Vec<T>
    where
        T: Copy + Zero + std::ops::Mul<f64, Output = T>,
    {
        let n = self.dim();
        let half = self.half_bandwidth() as i64;
        (0..n)
            .map(|row| {
                let mut acc = T::zero();
                for m in -half..=half {
                    if let Some(col) = self.column(row, m) {
                        acc = acc + v[col] * self.coefficient(row, m);
                    }
                }
                acc
            })
            .collect()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len == self.dim() {
            Ok(())
        } else {
            Err(Error::Size(format!(
                "vector of length {len} applied to an operator of dimension {}",
                self.dim()
            )))
        }
    }

    /// Matrix-vector product honouring the boundary closure; `O(N M)` work.
    pub fn apply(&self, v: &Wavefunction) -> Result<Wavefunction> {
        self.check_len(v.len())?;
        let mut out = self.apply_band(v.amplitudes());
        if self.kind == OperatorKind::Momentum {
            let factor = Complex64::new(0.0, -self.scale.hbar());
            out.iter_mut().for_each(|z| *z *= factor);
        }
        Ok(Wavefunction::new(out))
    }

    /// Real matrix-vector product for the real symmetric kinds.
    pub fn apply_real(&self, v: &[f64]) -> Result<Vec<f64>> {
        if self.kind == OperatorKind::Momentum {
            return Err(Error::Domain(
                "the momentum operator is not real; use apply".into(),
            ));
        }
        self.check_len(v.len())?;
        Ok(self.apply_band(v))
    }

    /// Dense matrix of the stored real coefficients (wrapped couplings summed).
    pub fn coefficient_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let half = self.half_bandwidth() as i64;
        let mut dense = vec![vec![0.0; n]; n];
        // offsets in the order 0, 1, -1, 2, -2, ... so that aliased sums stay exactly (anti)symmetric
        let offsets: Vec<i64> = std::iter::once(0)
            .chain((1..=half).flat_map(|k| [k, -k]))
            .collect();
        for (row, dense_row) in dense.iter_mut().enumerate() {
            for &m in &offsets {
                if let Some(col) = self.column(row, m) {
                    dense_row[col] += self.coefficient(row, m);
                }
            }
        }
        dense
    }

    /// Dense physical matrix, including the `-iħ` factor for the momentum kind.
    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let factor = match self.kind {
            OperatorKind::Momentum => Complex64::new(0.0, -self.scale.hbar()),
            _ => Complex64::new(1.0, 0.0),
        };
        self.coefficient_matrix()
            .into_iter()
            .map(|row| row.into_iter().map(|x| factor * x).collect())
            .collect()
    }

    /// Maximum absolute row sum of the physical matrix; bounds the spectral norm.
    pub fn norm_inf(&self) -> f64 {
        let half = self.half_bandwidth() as i64;
        let factor = match self.kind {
            OperatorKind::Momentum => self.scale.hbar(),
            _ => 1.0,
        };
        (0..self.dim())
            .map(|row| {
                (-half..=half)
                    .filter(|&m| self.column(row, m).is_some())
                    .map(|m| self.coefficient(row, m).abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
            * factor
    }
}

/// `-iħ W_m` couplings; zero diagonal.
pub fn build_momentum_operator(
    grid: &GridSpec,
    order: StencilOrder,
    scale: &PhysScale,
) -> Result<BandedHermitianOperator> {
    let stencil = momentum_weights(order, grid.spacing())?;
    BandedHermitianOperator::from_stencil(*grid, &stencil, 1.0, OperatorKind::Momentum, *scale)
}

/// `-(ħ²/2μ) c_m` couplings.
pub fn build_kinetic_operator(
    grid: &GridSpec,
    order: StencilOrder,
    scale: &PhysScale,
) -> Result<BandedHermitianOperator> {
    let stencil = kinetic_weights(order, grid.spacing())?;
    BandedHermitianOperator::from_stencil(
        *grid,
        &stencil,
        -scale.hbar2_over_2mu(),
        OperatorKind::Kinetic,
        *scale,
    )
}

/// Kinetic operator with `V_n` added to the diagonal.
pub fn build_hamiltonian(
    grid: &GridSpec,
    order: StencilOrder,
    scale: &PhysScale,
    potential: &PotentialGrid,
) -> Result<BandedHermitianOperator> {
    if potential.len() != grid.points() {
        return Err(Error::Size(format!(
            "potential has {} values for a grid of {} points",
            potential.len(),
            grid.points()
        )));
    }
    let mut op = build_kinetic_operator(grid, order, scale)?;
    let n = op.dim();
    let diag_start = op.half_bandwidth() * n;
    for (slot, v) in op.bands[diag_start..diag_start + n]
        .iter_mut()
        .zip(potential.values())
    {
        *slot += v;
    }
    op.kind = OperatorKind::Hamiltonian;
    Ok(op)
}
