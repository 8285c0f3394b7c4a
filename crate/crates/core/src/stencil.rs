//! Central finite-difference weights for the momentum and kinetic-energy operators.
//!
//! Both stencils are built from the dimensionless product
//!
//! ```text
//! Ω(M, m) = Π_{l=1..M, l≠m} [1 − (m/l)²]
//! ```
//!
//! giving `W_m = 1 / (2 a m Ω(M, m))` for the first derivative and
//! `c_m = 1 / (a² m² Ω(M, m))` for the second. Only the `m ≥ 1` half of each stencil
//! is stored; the other half follows from antisymmetry (momentum) or symmetry (kinetic).
//!
//! [`fornberg_weights`] is an independent route to the same numbers and is used as an
//! oracle in the tests.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::PhysScale;

/// Representation order `M`: the stencil half-bandwidth (`2M + 1` points per row).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct StencilOrder(usize);

impl StencilOrder {
    /// Largest accepted order. `Ω(M, M) = C(2M, M) / 2` overflows `f64` just above `M = 510`.
    pub const MAX: usize = 500;

    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::Domain(
                "representation order must be at least 1".into(),
            ));
        }
        if order > Self::MAX {
            return Err(Error::Range(format!(
                "representation order {order} exceeds the supported maximum {}",
                Self::MAX
            )));
        }
        Ok(Self(order))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl std::fmt::Display for StencilOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// `Ω(M, m)` for `1 ≤ m ≤ M`. The empty product (`M = 1`) is 1.
pub fn omega(order: StencilOrder, m: usize) -> Result<f64> {
    if m == 0 || m > order.get() {
        return Err(Error::Domain(format!(
            "omega index m = {m} outside 1..={order}"
        )));
    }
    Ok(omega_unchecked(order.get(), m))
}

pub(crate) fn omega_unchecked(order: usize, m: usize) -> f64 {
    let mf = m as f64;
    let factor = |l: usize| {
        let r = mf / l as f64;
        1.0 - r * r
    };
    // Factors with l < m can be large and those with l > m are below one in magnitude.
    // Interleave them so the running product never overflows before the result does.
    let (mut large, mut small): (Vec<f64>, Vec<f64>) = (1..=order)
        .filter(|&l| l != m)
        .map(factor)
        .partition(|f| f.abs() >= 1.0);
    let mut acc: f64 = 1.0;
    while !large.is_empty() || !small.is_empty() {
        let next = if acc.abs() >= 1.0 {
            small.pop().or_else(|| large.pop())
        } else {
            large.pop().or_else(|| small.pop())
        };
        acc *= next.unwrap_or(1.0);
    }
    acc
}

fn check_spacing(spacing: f64) -> Result<()> {
    if spacing > 0.0 && spacing.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "grid spacing must be positive, got {spacing}"
        )))
    }
}

/// Common view of a centred stencil as signed weights `w_m`, `m = -M..=M`.
pub trait Stencil {
    fn order(&self) -> StencilOrder;

    fn spacing(&self) -> f64;

    /// Weight at signed offset `m`; zero outside `-M..=M`.
    fn weight(&self, m: i64) -> f64;

    /// All `2M + 1` weights ordered from `-M` to `M`.
    fn full(&self) -> Vec<f64> {
        let half = self.order().get() as i64;
        (-half..=half).map(|m| self.weight(m)).collect()
    }

    /// `Σ_{m=-M..M} m^s w_m` over the full signed stencil.
    fn moment(&self, s: u32) -> f64 {
        let half = self.order().get() as i64;
        (-half..=half)
            .map(|m| (m as f64).powi(s as i32) * self.weight(m))
            .sum()
    }
}

/// Antisymmetric first-derivative weights `W_m`, stored for `m = 1..=M` in units of 1/length.
///
/// The momentum matrix element is `⟨x_n|p|x_{n+m}⟩ = -iħ W_m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentumStencil {
    order: StencilOrder,
    spacing: f64,
    weights: Vec<f64>,
}

impl MomentumStencil {
    /// `W_1..=W_M`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ_{m=1..M} m^s W_m`, the one-sided sums used by the commutator conditions.
    pub fn half_moment(&self, s: u32) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, w)| ((i + 1) as f64).powi(s as i32) * w)
            .sum()
    }
}

impl Stencil for MomentumStencil {
    fn order(&self) -> StencilOrder {
        self.order
    }

    fn spacing(&self) -> f64 {
        self.spacing
    }

    fn weight(&self, m: i64) -> f64 {
        match m {
            0 => 0.0,
            m if m > 0 => self.weights.get(m as usize - 1).copied().unwrap_or(0.0),
            m => -self.weights.get((-m) as usize - 1).copied().unwrap_or(0.0),
        }
    }
}

/// Symmetric second-derivative weights: `d²ψ/dx²(x_n) ≈ Σ_m c_m ψ(x_{n+m})`.
///
/// The kinetic matrix element is `-(ħ²/2μ) c_m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KineticStencil {
    order: StencilOrder,
    spacing: f64,
    offdiag: Vec<f64>,
    diag: f64,
}

impl KineticStencil {
    /// `c_1..=c_M`.
    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// `c_0`.
    pub fn diag(&self) -> f64 {
        self.diag
    }
}

impl Stencil for KineticStencil {
    fn order(&self) -> StencilOrder {
        self.order
    }

    fn spacing(&self) -> f64 {
        self.spacing
    }

    fn weight(&self, m: i64) -> f64 {
        if m == 0 {
            self.diag
        } else {
            self.offdiag
                .get(m.unsigned_abs() as usize - 1)
                .copied()
                .unwrap_or(0.0)
        }
    }
}

/// First-derivative weights `W_m = 1 / (2 a m Ω(M, m))`.
pub fn momentum_weights(order: StencilOrder, spacing: f64) -> Result<MomentumStencil> {
    check_spacing(spacing)?;
    let big_m = order.get();
    let weights = (1..=big_m)
        .map(|m| 1.0 / (2.0 * spacing * m as f64 * omega_unchecked(big_m, m)))
        .collect();
    Ok(MomentumStencil {
        order,
        spacing,
        weights,
    })
}

/// Second-derivative weights `c_m = 1 / (a² m² Ω(M, m))`, `c_0 = -2 Σ_l c_l`.
pub fn kinetic_weights(order: StencilOrder, spacing: f64) -> Result<KineticStencil> {
    check_spacing(spacing)?;
    let big_m = order.get();
    let a2 = spacing * spacing;
    let offdiag: Vec<f64> = (1..=big_m)
        .map(|m| {
            let mf = m as f64;
            1.0 / (a2 * mf * mf * omega_unchecked(big_m, m))
        })
        .collect();
    let diag = -2.0 * offdiag.iter().sum::<f64>();
    Ok(KineticStencil {
        order,
        spacing,
        offdiag,
        diag,
    })
}

/// Central-difference weights on the unit-spaced nodes `-M..=M` from Fornberg's recursion.
///
/// Returns the `2M + 1` weights of the `derivative`-th derivative at the centre node,
/// ordered from `-M` to `M`. Only first and second derivatives are supported. The result
/// is checked against the monomials `x^0..x^{2M}` before it is returned.
pub fn fornberg_weights(derivative: usize, order: StencilOrder) -> Result<Vec<f64>> {
    if !(derivative == 1 || derivative == 2) {
        return Err(Error::Domain(format!(
            "only first and second derivatives are supported, got {derivative}"
        )));
    }
    let half = order.get() as i64;
    let nodes: Vec<f64> = (-half..=half).map(|m| m as f64).collect();
    let table = fornberg_table(0.0, &nodes, derivative);
    let weights = table[derivative].clone();
    verify_on_monomials(&nodes, &weights, derivative)?;
    Ok(weights)
}

/// Fornberg's algorithm: `c[k][j]` is the weight of node `j` for the `k`-th derivative at `x0`.
fn fornberg_table(x0: f64, nodes: &[f64], max_derivative: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; max_derivative + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(max_derivative);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

fn verify_on_monomials(nodes: &[f64], weights: &[f64], derivative: usize) -> Result<()> {
    let degree = nodes.len() - 1;
    for p in 0..=degree {
        let (sum, scale) = nodes
            .iter()
            .zip(weights)
            .fold((0.0, 0.0), |(s, t), (&x, &w)| {
                let term = w * x.powi(p as i32);
                (s + term, t + term.abs())
            });
        // d^k/dx^k x^p at 0 is k! when p == k and zero otherwise
        let expected = match (p, derivative) {
            (1, 1) => 1.0,
            (2, 2) => 2.0,
            _ => 0.0,
        };
        if (sum - expected).abs() > 1e-9 * scale.max(1.0) {
            return Err(Error::Range(format!(
                "Fornberg weights fail the x^{p} exactness check: {sum} vs {expected}"
            )));
        }
    }
    Ok(())
}

/// Real coefficient `r` of the `M → ∞` momentum element `⟨x_n|p|x_{n+m}⟩ = iħ r`,
/// with `r = (-1)^m / (a m)` and `r = 0` on the diagonal.
pub fn infinite_order_momentum_element(m: i64, spacing: f64) -> Result<f64> {
    check_spacing(spacing)?;
    if m == 0 {
        return Ok(0.0);
    }
    Ok(sign_alternating(m) / (spacing * m as f64))
}

/// `M → ∞` kinetic element: `(ħ²/2μa²) 2(-1)^m / m²`, and `(ħ²/2μa²) π²/3` on the diagonal.
pub fn infinite_order_kinetic_element(m: i64, spacing: f64, scale: &PhysScale) -> Result<f64> {
    check_spacing(spacing)?;
    let prefactor = scale.hbar2_over_2mu() / (spacing * spacing);
    if m == 0 {
        return Ok(prefactor * PI * PI / 3.0);
    }
    let mf = m as f64;
    Ok(prefactor * 2.0 * sign_alternating(m) / (mf * mf))
}

fn sign_alternating(m: i64) -> f64 {
    if m % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Whittaker cardinal function centred on `x_n = n a`: `sin(π(x − na)/a) / (π(x − na)/a)`.
pub fn sinc_cardinal(x: f64, n: i64, spacing: f64) -> f64 {
    let offset = x - n as f64 * spacing;
    if offset.abs() < 1e-12 * spacing {
        return 1.0;
    }
    let u = PI * offset / spacing;
    u.sin() / u
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn order(m: usize) -> StencilOrder {
        StencilOrder::new(m).unwrap()
    }

    fn assert_rel(actual: f64, expected: f64, tol: f64) {
        let err = (actual - expected).abs() / expected.abs().max(f64::MIN_POSITIVE);
        assert!(
            err <= tol,
            "{actual} vs {expected}: relative error {err:e} > {tol:e}"
        );
    }

    #[test]
    fn order_bounds() {
        assert!(matches!(StencilOrder::new(0), Err(Error::Domain(_))));
        assert!(matches!(
            StencilOrder::new(StencilOrder::MAX + 1),
            Err(Error::Range(_))
        ));
        assert_eq!(StencilOrder::new(StencilOrder::MAX).unwrap().get(), 500);
    }

    #[test]
    fn omega_examples() {
        assert_eq!(omega(order(1), 1).unwrap(), 1.0);
        assert_eq!(omega(order(2), 2).unwrap(), -3.0);
        assert_rel(omega(order(4), 1).unwrap(), 5.0 / 8.0, 1e-15);
        assert_rel(omega(order(200), 1).unwrap(), 0.5025, 1e-13);
    }

    #[test]
    fn omega_index_out_of_range() {
        assert!(matches!(omega(order(3), 0), Err(Error::Domain(_))));
        assert!(matches!(omega(order(3), 4), Err(Error::Domain(_))));
    }

    #[test]
    fn omega_stays_finite_at_the_cap() {
        let big = omega(order(StencilOrder::MAX), StencilOrder::MAX).unwrap();
        assert!(big.is_finite() && big.abs() > 1e290);
    }

    #[test]
    fn omega_telescopes_for_m_one() {
        for big_m in 1..=60 {
            let expected = (big_m + 1) as f64 / (2 * big_m) as f64;
            assert_rel(omega(order(big_m), 1).unwrap(), expected, 1e-13);
        }
    }

    #[test]
    fn omega_approaches_alternating_half() {
        // Ω(M, m) = (-1)^{m+1} (M-m)! (M+m)! / (2 M!²): the gap to ±1/2 closes like m²/(2M).
        let exact_100 = [
            0.505,
            -0.5203030303030303,
            0.5468491032776747,
            -0.58631244062761,
        ];
        for m in 1..=4 {
            assert_rel(omega(order(100), m).unwrap(), exact_100[m - 1], 1e-13);
        }
        for m in 1..=4usize {
            let limit: f64 = if m % 2 == 1 { 0.5 } else { -0.5 };
            let mut previous = f64::INFINITY;
            for big_m in [10, 100, StencilOrder::MAX] {
                let gap = (omega(order(big_m), m).unwrap() - limit).abs();
                assert!(gap < previous);
                if big_m >= 100 {
                    assert!(gap <= (m * m) as f64 / big_m as f64);
                }
                previous = gap;
            }
        }
    }

    #[test]
    fn momentum_weight_examples() {
        let w1 = momentum_weights(order(1), 1.0).unwrap();
        assert_eq!(w1.weights(), &[0.5]);
        let w2 = momentum_weights(order(2), 1.0).unwrap();
        assert_rel(w2.weights()[0], 2.0 / 3.0, 1e-15);
        assert_rel(w2.weights()[1], -1.0 / 12.0, 1e-15);
        let w4 = momentum_weights(order(4), 0.5).unwrap();
        assert_rel(w4.weights()[0], 1.6, 1e-15);
    }

    #[test]
    fn momentum_full_stencil_is_antisymmetric() {
        let w = momentum_weights(order(3), 0.7).unwrap();
        let full = w.full();
        assert_eq!(full.len(), 7);
        assert_eq!(full[3], 0.0);
        for m in 1..=3 {
            assert_eq!(full[3 + m], -full[3 - m]);
        }
    }

    #[test]
    fn kinetic_weight_examples() {
        let k1 = kinetic_weights(order(1), 1.0).unwrap();
        assert_eq!(k1.full(), vec![1.0, -2.0, 1.0]);

        let k2 = kinetic_weights(order(2), 1.0).unwrap();
        let expected = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
        for (got, want) in k2.full().iter().zip(expected) {
            assert_rel(*got, want, 1e-15);
        }

        let k3 = kinetic_weights(order(3), 1.0).unwrap();
        assert_rel(k3.diag(), -49.0 / 18.0, 1e-15);
    }

    #[test]
    fn weights_reject_bad_spacing() {
        assert!(matches!(
            momentum_weights(order(2), 0.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            kinetic_weights(order(2), -1.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            kinetic_weights(order(2), f64::INFINITY),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn fornberg_examples() {
        assert_eq!(fornberg_weights(1, order(1)).unwrap(), vec![-0.5, 0.0, 0.5]);
        assert_eq!(fornberg_weights(2, order(1)).unwrap(), vec![1.0, -2.0, 1.0]);
        let d2 = fornberg_weights(2, order(2)).unwrap();
        let expected = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
        for (got, want) in d2.iter().zip(expected) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn fornberg_rejects_other_derivatives() {
        assert!(matches!(
            fornberg_weights(0, order(2)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            fornberg_weights(3, order(2)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn closed_form_matches_fornberg() {
        for big_m in 1..=8 {
            let d1 = fornberg_weights(1, order(big_m)).unwrap();
            let d2 = fornberg_weights(2, order(big_m)).unwrap();
            for a in [0.25, 0.5, 1.0] {
                let w = momentum_weights(order(big_m), a).unwrap().full();
                let c = kinetic_weights(order(big_m), a).unwrap().full();
                let centre = big_m;
                for i in 0..w.len() {
                    if i == centre {
                        // Fornberg leaves rounding noise where the exact weight is zero
                        assert_eq!(w[i], 0.0);
                        assert!(d1[i].abs() < 1e-14);
                    } else {
                        assert_rel(w[i] * a, d1[i], 1e-12);
                    }
                    assert_rel(c[i] * a * a, d2[i], 1e-12);
                }
            }
        }
    }

    #[test]
    fn moment_examples() {
        let a = 0.8;
        let w = momentum_weights(order(3), a).unwrap();
        assert_rel(w.half_moment(1), 1.0 / (2.0 * a), 1e-14);
        // The full signed stencil counts both halves.
        assert_rel(w.moment(1), 1.0 / a, 1e-14);
        assert!(w.half_moment(3).abs() < 1e-10);
        assert!(w.moment(2).abs() < 1e-15);

        let k = kinetic_weights(order(2), 1.0).unwrap();
        assert!(k.moment(0).abs() < 1e-12);
    }

    #[test]
    fn infinite_order_examples() {
        assert_eq!(infinite_order_momentum_element(1, 1.0).unwrap(), -1.0);
        assert_eq!(infinite_order_momentum_element(2, 1.0).unwrap(), 0.5);
        assert_eq!(infinite_order_momentum_element(-2, 1.0).unwrap(), -0.5);
        assert_eq!(infinite_order_momentum_element(0, 1.0).unwrap(), 0.0);
        assert!(infinite_order_momentum_element(1, 0.0).is_err());

        let unit = PhysScale::default();
        assert_rel(
            infinite_order_kinetic_element(0, 1.0, &unit).unwrap(),
            3.289868133696453,
            1e-15,
        );
        assert_eq!(infinite_order_kinetic_element(1, 1.0, &unit).unwrap(), -2.0);
        assert_rel(
            infinite_order_kinetic_element(3, 2.0, &unit).unwrap(),
            -1.0 / 18.0,
            1e-15,
        );
    }

    #[test]
    fn large_order_weights_approach_infinite_order() {
        let w = momentum_weights(order(400), 1.0).unwrap();
        for m in 1..=5i64 {
            // -iħ W_m → iħ (-1)^m / (a m)
            let limit = -infinite_order_momentum_element(m, 1.0).unwrap();
            let gap = (m * m) as f64 / 400.0;
            assert!((w.weight(m) - limit).abs() < gap * limit.abs());
        }
    }

    #[test]
    fn sinc_examples() {
        let a = 0.3;
        assert_eq!(sinc_cardinal(4.0 * a, 4, a), 1.0);
        assert!(sinc_cardinal(5.0 * a, 4, a).abs() < 1e-15);
        assert_rel(sinc_cardinal(4.5 * a, 4, a), 2.0 / PI, 1e-15);
    }

    #[test]
    fn sinc_second_derivative_matches_infinite_order_kinetic() {
        let scale = PhysScale::new(1.0, 0.5).unwrap();
        for a in [0.5, 1.0, 2.0] {
            let h = 1e-4 * a;
            for m in [-3i64, -1, 1, 2, 5] {
                let x = m as f64 * a;
                let f = |x: f64| sinc_cardinal(x, 0, a);
                let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
                let numeric = -d2 * scale.hbar2_over_2mu();
                let exact = infinite_order_kinetic_element(m, a, &scale).unwrap();
                assert_rel(numeric, exact, 1e-6);
            }
        }
    }

    proptest! {
        #[test]
        fn commutator_moment_conditions(big_m in 1usize..=12, a in 0.05f64..4.0) {
            let w = momentum_weights(order(big_m), a).unwrap();
            prop_assert!((w.half_moment(1) * 2.0 * a - 1.0).abs() < 1e-10);
            for l in 1..big_m {
                let s = 2 * l as u32 + 1;
                let max_term = w.weights().iter().enumerate()
                    .map(|(i, x)| (((i + 1) as f64).powi(s as i32) * x).abs())
                    .fold(0.0, f64::max);
                prop_assert!(w.half_moment(s).abs() <= 1e-10 * max_term);
            }
        }

        #[test]
        fn kinetic_moments(big_m in 1usize..=12, a in 0.05f64..4.0) {
            let c = kinetic_weights(order(big_m), a).unwrap();
            prop_assert!(c.moment(0).abs() <= 1e-12 * c.diag().abs());
            prop_assert!((c.moment(2) * a * a - 2.0).abs() < 1e-10);
            for l in 2..=big_m {
                let s = 2 * l as u32;
                let scale: f64 = (1..=big_m)
                    .map(|m| (m as f64).powi(s as i32) * c.weight(m as i64).abs())
                    .sum();
                prop_assert!(c.moment(s).abs() <= 1e-9 * scale);
            }
        }

        #[test]
        fn kinetic_follows_from_momentum(big_m in 1usize..=12, a in 0.05f64..4.0) {
            let w = momentum_weights(order(big_m), a).unwrap();
            let c = kinetic_weights(order(big_m), a).unwrap();
            for m in 1..=big_m {
                let from_w = 2.0 * w.weights()[m - 1] / (a * m as f64);
                prop_assert!((c.offdiag()[m - 1] - from_w).abs() <= 1e-12 * from_w.abs());
            }
        }

        #[test]
        fn momentum_weights_invert_omega(big_m in 1usize..=30, a in 0.05f64..4.0) {
            let w = momentum_weights(order(big_m), a).unwrap();
            for m in 1..=big_m {
                let om = omega(order(big_m), m).unwrap();
                prop_assert!((w.weights()[m - 1] * 2.0 * a * m as f64 * om - 1.0).abs() < 1e-14);
            }
        }
    }
}
