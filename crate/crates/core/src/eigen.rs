//! Lowest eigenpairs of real symmetric banded operators.
//!
//! The band is reduced to tridiagonal form by Givens rotations with bulge chasing
//! (`O(N² M)` work, `O(N M)` storage). Eigenvalues come from Sturm-count bisection on the
//! tridiagonal matrix. Eigenvectors are obtained by inverse iteration on the original band
//! using a partially pivoted banded LU factorisation. Each eigenvalue is then replaced by
//! the Rayleigh quotient of its vector, evaluated with error-free transformations, which
//! removes the `ε‖H‖` rounding floor of the bisection.

use crate::error::{Error, Result};
use crate::grid::Boundary;
use crate::operator::{BandedHermitianOperator, OperatorKind};

/// Residual contract: `‖H v − λ v‖ ≤ RESIDUAL_TOL · ‖H‖` for unit `v`.
pub const RESIDUAL_TOL: f64 = 1e-10;

const MAX_INVERSE_ITERATIONS: usize = 8;
const TARGET_RESIDUAL: f64 = 1e-13;

/// Eigenvalues in ascending order with unit-norm (Euclidean) eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// `‖H v − λ v‖` for each pair.
    pub residuals: Vec<f64>,
    /// Infinity norm of the operator, the scale of the residual contract.
    pub norm: f64,
}

/// Symmetric band stored as its lower triangle, `width` sub-diagonals.
#[derive(Debug, Clone)]
struct LowerBand {
    n: usize,
    width: usize,
    data: Vec<f64>,
}

impl LowerBand {
    fn zeros(n: usize, width: usize) -> Self {
        Self {
            n,
            width,
            data: vec![0.0; n * (width + 1)],
        }
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let d = i - j;
        (d <= self.width).then(|| i * (self.width + 1) + d)
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    fn set(&mut self, i: usize, j: usize, value: f64) {
        if let Some(s) = self.slot(i, j) {
            self.data[s] = value;
        }
    }

    /// Similarity rotation of rows/columns `(p, p + 1)` that zeroes entry `(p + 1, col)`.
    fn rotate_out(&mut self, p: usize, col: usize) {
        let q = p + 1;
        let a = self.get(p, col);
        let b = self.get(q, col);
        if b == 0.0 {
            return;
        }
        let r = a.hypot(b);
        let (c, s) = (a / r, b / r);
        let lo = p.saturating_sub(self.width);
        let hi = (q + self.width).min(self.n - 1);
        for k in lo..=hi {
            if k == p || k == q {
                continue;
            }
            let apk = self.get(p, k);
            let aqk = self.get(q, k);
            if apk == 0.0 && aqk == 0.0 {
                continue;
            }
            self.set(p, k, c * apk + s * aqk);
            self.set(q, k, -s * apk + c * aqk);
        }
        let (app, aqq, apq) = (self.get(p, p), self.get(q, q), self.get(p, q));
        self.set(p, p, c * c * app + 2.0 * c * s * apq + s * s * aqq);
        self.set(q, q, s * s * app - 2.0 * c * s * apq + c * c * aqq);
        self.set(p, q, c * s * (aqq - app) + (c * c - s * s) * apq);
        self.set(p, col, r);
        self.set(q, col, 0.0);
    }
}

fn check_operator(op: &BandedHermitianOperator) -> Result<()> {
    if op.kind() == OperatorKind::Momentum {
        return Err(Error::Domain(
            "the banded eigensolver handles real symmetric operators only".into(),
        ));
    }
    if op.grid().boundary() != Boundary::Dirichlet {
        return Err(Error::Domain(
            "periodic operators are circulant, not banded; densify them instead".into(),
        ));
    }
    Ok(())
}

fn lower_band(op: &BandedHermitianOperator, extra: usize) -> LowerBand {
    let n = op.dim();
    let b = op.half_bandwidth().min(n.saturating_sub(1));
    let mut band = LowerBand::zeros(n, b + extra);
    for i in 0..n {
        for d in 0..=b.min(i) {
            band.set(i, i - d, op.coefficient(i, -(d as i64)));
        }
    }
    band
}

/// Diagonal and off-diagonal of a tridiagonal matrix orthogonally similar to `op`.
pub fn tridiagonalize(op: &BandedHermitianOperator) -> Result<(Vec<f64>, Vec<f64>)> {
    check_operator(op)?;
    let n = op.dim();
    let b = op.half_bandwidth().min(n.saturating_sub(1));
    // one extra sub-diagonal holds the bulge while it is chased down the band
    let mut band = lower_band(op, 1);
    if b > 1 {
        for j in 0..n.saturating_sub(2) {
            for i in (j + 2..=(j + b).min(n - 1)).rev() {
                let mut p = i - 1;
                let mut col = j;
                loop {
                    band.rotate_out(p, col);
                    let bulge_row = p + 1 + b;
                    if bulge_row >= n {
                        break;
                    }
                    col = p;
                    p = bulge_row - 1;
                }
            }
        }
    }
    let diag = (0..n).map(|i| band.get(i, i)).collect();
    let offdiag = (1..n).map(|i| band.get(i, i - 1)).collect();
    Ok((diag, offdiag))
}

/// Number of eigenvalues of the tridiagonal matrix strictly below `x`.
fn sturm_count(diag: &[f64], offdiag: &[f64], x: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for (i, &d) in diag.iter().enumerate() {
        let coupling = if i == 0 {
            0.0
        } else {
            offdiag[i - 1] * offdiag[i - 1] / q
        };
        q = d - x - coupling;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// `k`-th smallest (0-based) eigenvalue of a symmetric tridiagonal matrix by bisection.
pub fn tridiagonal_eigenvalue(diag: &[f64], offdiag: &[f64], k: usize) -> f64 {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let radius = if i > 0 { offdiag[i - 1].abs() } else { 0.0 }
            + if i + 1 < n { offdiag[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - radius);
        hi = hi.max(diag[i] + radius);
    }
    let max_e2 = offdiag.iter().map(|e| e * e).fold(1.0, f64::max);
    let pivmin = f64::MIN_POSITIVE * max_e2;
    let spread = hi - lo;
    lo -= 2.0 * f64::EPSILON * spread + pivmin;
    hi += 2.0 * f64::EPSILON * spread + pivmin;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, offdiag, mid, pivmin) > k {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) + pivmin {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Partially pivoted LU of a band matrix with `kl = b` sub- and `2b` super-diagonals of fill.
struct BandLu {
    n: usize,
    b: usize,
    // row i holds columns i - b ..= i + 2b
    data: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandLu {
    fn stride(&self) -> usize {
        3 * self.b + 1
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let offset = j as i64 - i as i64 + self.b as i64;
        (0..self.stride() as i64)
            .contains(&offset)
            .then(|| i * self.stride() + offset as usize)
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        if let Some(s) = self.slot(i, j) {
            self.data[s] = v;
        }
    }

    fn factor(op: &BandedHermitianOperator, shift: f64, tiny: f64) -> Self {
        let n = op.dim();
        let b = op.half_bandwidth().min(n.saturating_sub(1));
        let mut lu = Self {
            n,
            b,
            data: vec![0.0; n * (3 * b + 1)],
            pivots: vec![0; n],
        };
        for i in 0..n {
            for m in -(b as i64)..=b as i64 {
                let j = i as i64 + m;
                if j >= 0 && j < n as i64 {
                    let mut v = op.coefficient(i, m);
                    if m == 0 {
                        v -= shift;
                    }
                    lu.set(i, j as usize, v);
                }
            }
        }
        for k in 0..n {
            let last = (k + b).min(n - 1);
            let pivot = (k..=last)
                .max_by(|&x, &y| lu.get(x, k).abs().total_cmp(&lu.get(y, k).abs()))
                .unwrap_or(k);
            lu.pivots[k] = pivot;
            let right = (k + 2 * b).min(n - 1);
            if pivot != k {
                for j in k..=right {
                    let (x, y) = (lu.get(k, j), lu.get(pivot, j));
                    lu.set(k, j, y);
                    lu.set(pivot, j, x);
                }
            }
            if lu.get(k, k).abs() < tiny {
                lu.set(k, k, tiny);
            }
            let diag = lu.get(k, k);
            for i in k + 1..=last {
                let factor = lu.get(i, k) / diag;
                if factor == 0.0 {
                    continue;
                }
                lu.set(i, k, factor);
                for j in k + 1..=right {
                    let v = lu.get(i, j) - factor * lu.get(k, j);
                    lu.set(i, j, v);
                }
            }
        }
        lu
    }

    fn solve(&self, rhs: &mut [f64]) {
        let (n, b) = (self.n, self.b);
        for k in 0..n {
            rhs.swap(k, self.pivots[k]);
            let xk = rhs[k];
            for i in k + 1..=(k + b).min(n - 1) {
                rhs[i] -= self.get(i, k) * xk;
            }
        }
        for k in (0..n).rev() {
            let mut acc = rhs[k];
            for j in k + 1..=(k + 2 * b).min(n - 1) {
                acc -= self.get(k, j) * rhs[j];
            }
            rhs[k] = acc / self.get(k, k);
        }
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Dot product accurate to roughly twice working precision.
fn dot2(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for (x, y) in pairs {
        let p = x * y;
        let perr = x.mul_add(y, -p);
        let (s, serr) = two_sum(sum, p);
        sum = s;
        comp += perr + serr;
    }
    sum + comp
}

fn band_matvec(op: &BandedHermitianOperator, v: &[f64], compensated: bool) -> Vec<f64> {
    let n = op.dim();
    let b = op.half_bandwidth() as i64;
    (0..n)
        .map(|i| {
            let terms = (-b..=b).filter_map(|m| {
                let j = i as i64 + m;
                (j >= 0 && j < n as i64).then(|| (op.coefficient(i, m), v[j as usize]))
            });
            if compensated {
                dot2(terms)
            } else {
                terms.map(|(x, y)| x * y).sum()
            }
        })
        .collect()
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual(op: &BandedHermitianOperator, v: &[f64], lambda: f64) -> f64 {
    let hv = band_matvec(op, v, true);
    norm2(
        &hv.iter()
            .zip(v)
            .map(|(h, x)| h - lambda * x)
            .collect::<Vec<_>>(),
    )
}

fn start_vector(n: usize, seed: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let h = ((i + 1) as u64 * 2_654_435_761 + seed as u64 * 40_503) % 4_294_967_296;
            h as f64 / 4_294_967_296.0 - 0.5
        })
        .collect()
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for u in basis {
            let proj = dot2(u.iter().copied().zip(v.iter().copied()));
            v.iter_mut().zip(u).for_each(|(x, y)| *x -= proj * y);
        }
    }
}

/// The `count` lowest eigenpairs of a Dirichlet kinetic or Hamiltonian operator.
pub fn lowest_eigenpairs(op: &BandedHermitianOperator, count: usize) -> Result<Eigenpairs> {
    check_operator(op)?;
    let n = op.dim();
    if count == 0 || count > n {
        return Err(Error::Size(format!(
            "requested {count} eigenpairs from an operator of dimension {n}"
        )));
    }
    let norm = op.norm_inf();
    let (diag, offdiag) = tridiagonalize(op)?;
    let tiny = f64::EPSILON * norm.max(f64::MIN_POSITIVE);

    let mut values = Vec::with_capacity(count);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut residuals = Vec::with_capacity(count);
    for k in 0..count {
        let estimate = tridiagonal_eigenvalue(&diag, &offdiag, k);
        let lu = BandLu::factor(op, estimate, tiny);
        let mut v = start_vector(n, k);
        orthogonalize(&mut v, &vectors);
        let mut res = f64::INFINITY;
        for _ in 0..MAX_INVERSE_ITERATIONS {
            lu.solve(&mut v);
            orthogonalize(&mut v, &vectors);
            let len = norm2(&v);
            if !(len.is_finite() && len > 0.0) {
                break;
            }
            v.iter_mut().for_each(|x| *x /= len);
            res = residual(op, &v, estimate);
            if res <= TARGET_RESIDUAL * norm {
                break;
            }
        }
        let hv = band_matvec(op, &v, true);
        let lambda = dot2(v.iter().copied().zip(hv.iter().copied()));
        let refined = residual(op, &v, lambda);
        res = res.min(refined);
        if !(res <= RESIDUAL_TOL * norm) || (lambda - estimate).abs() > 1e-8 * norm.max(1.0) {
            return Err(Error::Convergence(format!(
                "eigenpair {k}: residual {res:e} against operator norm {norm:e}, \
                 Rayleigh quotient {lambda} vs bisection {estimate}"
            )));
        }
        values.push(lambda);
        vectors.push(v);
        residuals.push(refined);
    }
    Ok(Eigenpairs {
        values,
        vectors,
        residuals,
        norm,
    })
}
