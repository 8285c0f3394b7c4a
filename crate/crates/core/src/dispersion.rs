//! Eigenvalues of the periodic-grid momentum and kinetic operators and their
//! leading-order error against the continuum.
//!
//! On a periodic grid of `N` points the plane waves `exp(i k_ν x_n)`, `k_ν = 2πν/(Na)`,
//! diagonalise both operators:
//!
//! ```text
//! p_ν = (ħ/a)      Σ_m sin(m a k_ν)      / (m  Ω(M, m))
//! ε_ν = (ħ²/2μa²)  Σ_m 4 sin²(m a k_ν/2) / (m² Ω(M, m))
//! ```
//!
//! For small `k a` both fall below the continuum values `ħk` and `ħ²k²/2μ` by a relative
//! amount `(k a)^{2M} Δ(M)` with `Δ > 0`.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::PhysScale;
use crate::stencil::{omega_unchecked, StencilOrder};

/// Largest order for which [`delta_p`] and [`delta_eps`] are evaluated.
pub const MAX_DELTA_ORDER: usize = 12;

/// Periodic-grid wavevector `k_ν = 2πν / (N a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveVector {
    pub index: usize,
    pub k: f64,
}

pub fn wavevectors(points: usize, spacing: f64) -> Result<Vec<WaveVector>> {
    if points == 0 {
        return Err(Error::Size("need at least one grid point".into()));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::Domain(format!(
            "grid spacing must be positive, got {spacing}"
        )));
    }
    let length = points as f64 * spacing;
    Ok((0..points)
        .map(|index| WaveVector {
            index,
            k: 2.0 * PI * index as f64 / length,
        })
        .collect())
}

/// Dispersion relations of one stencil order and spacing, with `1/Ω(M, m)` precomputed.
#[derive(Debug, Clone)]
pub struct Dispersion {
    spacing: f64,
    scale: PhysScale,
    inv_omega: Vec<f64>,
}

impl Dispersion {
    pub fn new(order: StencilOrder, spacing: f64, scale: &PhysScale) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Domain(format!(
                "grid spacing must be positive, got {spacing}"
            )));
        }
        let big_m = order.get();
        let inv_omega = (1..=big_m)
            .map(|m| 1.0 / omega_unchecked(big_m, m))
            .collect();
        Ok(Self {
            spacing,
            scale: *scale,
            inv_omega,
        })
    }

    /// `p(k)`.
    pub fn momentum(&self, k: f64) -> f64 {
        let ka = k * self.spacing;
        let sum: f64 = self
            .inv_omega
            .iter()
            .enumerate()
            .map(|(i, inv)| {
                let m = (i + 1) as f64;
                (m * ka).sin() * inv / m
            })
            .sum();
        self.scale.hbar() / self.spacing * sum
    }

    /// `ε(k)`.
    pub fn energy(&self, k: f64) -> f64 {
        let ka = k * self.spacing;
        let sum: f64 = self
            .inv_omega
            .iter()
            .enumerate()
            .map(|(i, inv)| {
                let m = (i + 1) as f64;
                let s = (0.5 * m * ka).sin();
                4.0 * s * s * inv / (m * m)
            })
            .sum();
        self.scale.hbar2_over_2mu() / (self.spacing * self.spacing) * sum
    }

    /// Continuum momentum `ħk`.
    pub fn exact_momentum(&self, k: f64) -> f64 {
        self.scale.hbar() * k
    }

    /// Continuum energy `ħ²k²/2μ`.
    pub fn exact_energy(&self, k: f64) -> f64 {
        self.scale.hbar2_over_2mu() * k * k
    }
}

pub fn momentum_dispersion(
    order: StencilOrder,
    spacing: f64,
    scale: &PhysScale,
    k: WaveVector,
) -> Result<f64> {
    Ok(Dispersion::new(order, spacing, scale)?.momentum(k.k))
}

pub fn kinetic_dispersion(
    order: StencilOrder,
    spacing: f64,
    scale: &PhysScale,
    k: WaveVector,
) -> Result<f64> {
    Ok(Dispersion::new(order, spacing, scale)?.energy(k.k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionRow {
    pub index: usize,
    pub k: f64,
    pub momentum: f64,
    pub energy: f64,
}

/// `(ν, k_ν, p_ν, ε_ν)` over the whole periodic grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionCurve {
    pub order: StencilOrder,
    pub points: usize,
    pub spacing: f64,
    pub rows: Vec<DispersionRow>,
}

pub fn dispersion_curve(
    order: StencilOrder,
    points: usize,
    spacing: f64,
    scale: &PhysScale,
) -> Result<DispersionCurve> {
    let relation = Dispersion::new(order, spacing, scale)?;
    let rows = wavevectors(points, spacing)?
        .into_iter()
        .map(|wv| DispersionRow {
            index: wv.index,
            k: wv.k,
            momentum: relation.momentum(wv.k),
            energy: relation.energy(wv.k),
        })
        .collect();
    Ok(DispersionCurve {
        order,
        points,
        spacing,
        rows,
    })
}

/// `|Σ_{m=1..M} m^{2M} / Ω(M, m)|` in exact rational arithmetic.
fn leading_moment(order: usize) -> BigRational {
    let big = |x: usize| BigInt::from(x);
    let mut total = BigRational::zero();
    for m in 1..=order {
        // Ω(M, m) = Π_{l≠m} (l² − m²) / l²
        let mut numer = BigInt::from(1);
        let mut denom = BigInt::from(1);
        for l in (1..=order).filter(|&l| l != m) {
            numer *= big(l * l) - big(m * m);
            denom *= big(l * l);
        }
        let power = num_traits::pow(big(m), 2 * order);
        total += BigRational::new(power * denom, numer);
    }
    total.abs()
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::from(1), |acc, k| acc * BigInt::from(k))
}

fn guarded(order: StencilOrder) -> Result<usize> {
    let m = order.get();
    if m > MAX_DELTA_ORDER {
        return Err(Error::Range(format!(
            "error coefficients are evaluated only up to M = {MAX_DELTA_ORDER}, got {m}"
        )));
    }
    Ok(m)
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `Δ_p(M) = 2(M+1)/(2M+2)! · |Σ m^{2M}/Ω(M, m)|`.
pub fn delta_p(order: StencilOrder) -> Result<f64> {
    let m = guarded(order)?;
    let value = leading_moment(m) * BigInt::from(2 * (m + 1))
        / BigRational::from_integer(factorial(2 * m + 2));
    Ok(to_f64(&value))
}

/// `Δ_ε(M) = 2/(2M+2)! · |Σ m^{2M}/Ω(M, m)|`.
pub fn delta_eps(order: StencilOrder) -> Result<f64> {
    let m = guarded(order)?;
    let value =
        leading_moment(m) * BigInt::from(2) / BigRational::from_integer(factorial(2 * m + 2));
    Ok(to_f64(&value))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorCoefficients {
    pub order: StencilOrder,
    pub delta_p: f64,
    pub delta_eps: f64,
}

pub fn error_coefficients(order: StencilOrder) -> Result<ErrorCoefficients> {
    Ok(ErrorCoefficients {
        order,
        delta_p: delta_p(order)?,
        delta_eps: delta_eps(order)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DispersionKind {
    Momentum,
    Kinetic,
}

/// Power law `relative error ≈ coefficient · (k a)^exponent` fitted in log-log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeadingErrorFit {
    pub exponent: f64,
    pub coefficient: f64,
    pub points: usize,
}

const FIT_SAMPLES: usize = 12;

/// Fits the relative dispersion error on `k a ∈ [k_max/4, k_max]`, `k_max = k_max_fraction`.
///
/// The relative error is `(continuum − discrete) / continuum`, positive when the discrete
/// value lies below. Samples whose error is not positive and finite are discarded.
pub fn leading_error_fit(
    order: StencilOrder,
    spacing: f64,
    scale: &PhysScale,
    k_max_fraction: f64,
    kind: DispersionKind,
) -> Result<LeadingErrorFit> {
    if !(k_max_fraction > 0.0 && k_max_fraction <= 0.2) {
        return Err(Error::Domain(format!(
            "k a upper bound must lie in (0, 0.2], got {k_max_fraction}"
        )));
    }
    let relation = Dispersion::new(order, spacing, scale)?;
    let lo = (0.25 * k_max_fraction).ln();
    let hi = k_max_fraction.ln();
    let samples: Vec<(f64, f64)> = (0..FIT_SAMPLES)
        .filter_map(|i| {
            let log_ka = lo + (hi - lo) * i as f64 / (FIT_SAMPLES - 1) as f64;
            let k = log_ka.exp() / spacing;
            let (approx, exact) = match kind {
                DispersionKind::Momentum => (relation.momentum(k), relation.exact_momentum(k)),
                DispersionKind::Kinetic => (relation.energy(k), relation.exact_energy(k)),
            };
            let rel = (exact - approx) / exact;
            (rel > 0.0 && rel.is_finite()).then(|| (log_ka, rel.ln()))
        })
        .collect();
    if samples.len() < 3 {
        return Err(Error::Fit(format!(
            "only {} of {FIT_SAMPLES} samples have a resolvable error",
            samples.len()
        )));
    }
    let (slope, intercept) = least_squares(&samples);
    Ok(LeadingErrorFit {
        exponent: slope,
        coefficient: intercept.exp(),
        points: samples.len(),
    })
}

fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points
        .iter()
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mean_x).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, mean_y - slope * mean_x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn order(m: usize) -> StencilOrder {
        StencilOrder::new(m).unwrap()
    }

    /// Δ_p from Ω(M, m) = (-1)^{m+1} (M-m)! (M+m)! / (2 M!²), independent of the product route.
    fn delta_p_oracle(big_m: usize) -> f64 {
        let f = factorial;
        let mut sum = BigRational::zero();
        for m in 1..=big_m {
            let sign = if m % 2 == 1 { 1 } else { -1 };
            let omega = BigRational::new(
                BigInt::from(sign) * f(big_m - m) * f(big_m + m),
                BigInt::from(2) * f(big_m) * f(big_m),
            );
            sum += BigRational::from_integer(num_traits::pow(BigInt::from(m), 2 * big_m)) / omega;
        }
        let value =
            sum.abs() * BigInt::from(2 * (big_m + 1)) / BigRational::from_integer(f(2 * big_m + 2));
        value.to_f64().unwrap()
    }

    #[test]
    fn wavevector_examples() {
        let k: Vec<f64> = wavevectors(4, 1.0).unwrap().iter().map(|w| w.k).collect();
        assert_eq!(k, vec![0.0, PI / 2.0, PI, 3.0 * PI / 2.0]);
        let k: Vec<f64> = wavevectors(2, 0.5).unwrap().iter().map(|w| w.k).collect();
        assert_eq!(k, vec![0.0, 2.0 * PI]);
        let last = wavevectors(7, 0.3).unwrap()[6].k;
        assert!((last - 2.0 * PI * 6.0 / (7.0 * 0.3)).abs() < 1e-14);
        assert!(wavevectors(0, 1.0).is_err());
        assert!(wavevectors(3, 0.0).is_err());
    }

    #[test]
    fn zero_wavevector_has_zero_momentum_and_energy() {
        let wv = WaveVector { index: 0, k: 0.0 };
        for m in [1, 3, 8] {
            let s = PhysScale::default();
            assert_eq!(momentum_dispersion(order(m), 0.4, &s, wv).unwrap(), 0.0);
            assert_eq!(kinetic_dispersion(order(m), 0.4, &s, wv).unwrap(), 0.0);
        }
    }

    #[test]
    fn first_order_closed_forms() {
        let scale = PhysScale::new(1.3, 0.7).unwrap();
        let a = 0.4;
        let rel = Dispersion::new(order(1), a, &scale).unwrap();
        for k in [0.1, 1.0, 2.5, 7.0] {
            let p = 1.3 / a * (k * a).sin();
            let e = 0.7 * 4.0 / (a * a) * (k * a / 2.0).sin().powi(2);
            assert!((rel.momentum(k) - p).abs() < 1e-14 * p.abs().max(1.0));
            assert!((rel.energy(k) - e).abs() < 1e-14 * e.max(1.0));
        }
    }

    #[test]
    fn large_order_recovers_continuum() {
        let scale = PhysScale::default();
        let a = 0.25;
        let rel = Dispersion::new(order(400), a, &scale).unwrap();
        let k = 0.1 / a;
        assert!((rel.momentum(k) / (scale.hbar() * k) - 1.0).abs() < 1e-6);
        assert!((rel.energy(k) / (k * k) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn delta_first_order() {
        assert!((delta_p(order(1)).unwrap() - 1.0 / 6.0).abs() < 1e-12);
        assert!((delta_eps(order(1)).unwrap() - 1.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn delta_matches_factorial_oracle() {
        for m in 1..=MAX_DELTA_ORDER {
            let expected = delta_p_oracle(m);
            let got = delta_p(order(m)).unwrap();
            assert!((got - expected).abs() <= 1e-9 * expected, "M = {m}");
        }
    }

    #[test]
    fn delta_ratio_positivity_and_decay() {
        let mut previous = (f64::INFINITY, f64::INFINITY);
        for m in 1..=8 {
            let c = error_coefficients(order(m)).unwrap();
            assert!(c.delta_p > 0.0 && c.delta_eps > 0.0);
            assert!((c.delta_p / c.delta_eps - (m + 1) as f64).abs() < 1e-12 * (m + 1) as f64);
            assert!(c.delta_p < previous.0 && c.delta_eps < previous.1);
            previous = (c.delta_p, c.delta_eps);
        }
    }

    #[test]
    fn delta_guarded_range() {
        assert!(matches!(delta_p(order(13)), Err(Error::Range(_))));
        assert!(matches!(delta_eps(order(20)), Err(Error::Range(_))));
    }

    #[test]
    fn fit_examples() {
        let scale = PhysScale::default();
        let p1 = leading_error_fit(order(1), 0.5, &scale, 0.2, DispersionKind::Momentum).unwrap();
        assert!((p1.exponent - 2.0).abs() < 0.05);
        assert!((p1.coefficient / (1.0 / 6.0) - 1.0).abs() < 0.05);

        let t2 = leading_error_fit(order(2), 0.5, &scale, 0.2, DispersionKind::Kinetic).unwrap();
        assert!((t2.exponent - 4.0).abs() < 0.1);
        let expected = delta_eps(order(2)).unwrap();
        assert!((t2.coefficient / expected - 1.0).abs() < 0.05);
    }

    #[test]
    fn fit_rejects_bad_range_and_unresolvable_errors() {
        let scale = PhysScale::default();
        for bad in [0.0, -0.1, 0.25] {
            assert!(matches!(
                leading_error_fit(order(1), 1.0, &scale, bad, DispersionKind::Momentum),
                Err(Error::Domain(_))
            ));
        }
        // At M = 12 the error near k a = 0.01 is far below double precision.
        assert!(matches!(
            leading_error_fit(order(12), 1.0, &scale, 0.01, DispersionKind::Momentum),
            Err(Error::Fit(_))
        ));
    }

    #[test]
    fn momentum_converges_from_below() {
        let scale = PhysScale::default();
        for m in 1..=6 {
            let rel = Dispersion::new(order(m), 1.0, &scale).unwrap();
            for i in 1..=30 {
                let k = 0.01 * i as f64;
                let p = rel.momentum(k);
                // once the gap drops below rounding the two can only tie
                if k.powi(2 * m as i32) > 1e-12 {
                    assert!(p < k, "M = {m}, k = {k}");
                } else {
                    assert!(p <= k * (1.0 + 4.0 * f64::EPSILON));
                }
            }
        }
    }

    #[test]
    fn small_ka_energy_ordering() {
        let scale = PhysScale::default();
        for m in 1..=7 {
            let lower = Dispersion::new(order(m), 1.0, &scale).unwrap();
            let upper = Dispersion::new(order(m + 1), 1.0, &scale).unwrap();
            for i in 1..=30 {
                let k = 0.01 * i as f64;
                let (e_lo, e_hi, exact) = (lower.energy(k), upper.energy(k), k * k);
                let ulp = 4.0 * f64::EPSILON * exact;
                assert!(e_lo <= e_hi + ulp && e_hi <= exact + ulp);
                // leading-order envelope of the error
                let envelope = exact * k.powi(2 * m as i32) * delta_eps(order(m)).unwrap();
                assert!((exact - e_lo) <= 1.05 * envelope + ulp);
            }
        }
    }

    proptest! {
        #[test]
        fn dispersion_symmetries(points in 2usize..=64, m in 1usize..=6, a in 0.1f64..2.0) {
            let curve = dispersion_curve(order(m), points, a, &PhysScale::default()).unwrap();
            prop_assert_eq!(curve.rows[0].momentum, 0.0);
            prop_assert_eq!(curve.rows[0].energy, 0.0);
            let scale = curve.rows.iter().map(|r| r.energy).fold(0.0, f64::max).max(1.0);
            for nu in 1..points {
                let row = curve.rows[nu];
                let mirror = curve.rows[points - nu];
                prop_assert!(row.energy >= 0.0);
                prop_assert!((row.energy - mirror.energy).abs() <= 1e-12 * scale);
                prop_assert!((row.momentum + mirror.momentum).abs() <= 1e-12 * scale.sqrt().max(1.0 / a));
            }
        }
    }
}
