//! Truncated Fock-basis matrices of the algebra generators and observables,
//! commutators, and a tridiagonal eigensolver.
//!
//! Matrices act on column vectors of Fock coefficients: entry `(m, n)` is
//! the coefficient of `e_m` in `T eₙ`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{q_number, DeformationContext};
use crate::qhermite::{jacobi_coeff, Sign};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Tridiagonal matrix in the truncated Fock basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TridiagonalOperator {
    diag: Vec<f64>,
    /// `upper[n]` is entry `(n, n+1)`.
    upper: Vec<Complex64>,
    /// `lower[n]` is entry `(n+1, n)`, the `e_{n+1}` component of `T eₙ`.
    lower: Vec<Complex64>,
    hermitian: bool,
}

impl TridiagonalOperator {
    /// Hermitian operator with real diagonal and couplings `lower[n]` on
    /// `(n+1, n)`; the upper side is the conjugate.
    pub fn hermitian(diag: Vec<f64>, lower: Vec<Complex64>) -> Result<Self> {
        check_lengths(diag.len(), lower.len())?;
        let upper = lower.iter().map(|z| z.conj()).collect();
        Ok(TridiagonalOperator {
            diag,
            upper,
            lower,
            hermitian: true,
        })
    }

    /// General tridiagonal operator; never flagged hermitian.
    pub fn general(diag: Vec<f64>, upper: Vec<Complex64>, lower: Vec<Complex64>) -> Result<Self> {
        check_lengths(diag.len(), upper.len())?;
        check_lengths(diag.len(), lower.len())?;
        Ok(TridiagonalOperator {
            diag,
            upper,
            lower,
            hermitian: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn upper(&self) -> &[Complex64] {
        &self.upper
    }

    pub fn lower(&self) -> &[Complex64] {
        &self.lower
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        TridiagonalOperator {
            diag: self.diag.clone(),
            upper: self.lower.iter().map(|z| z.conj()).collect(),
            lower: self.upper.iter().map(|z| z.conj()).collect(),
            hermitian: self.hermitian,
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut m = DMatrix::from_element(n, n, ZERO);
        for (i, &d) in self.diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        for i in 0..self.upper.len() {
            m[(i, i + 1)] = self.upper[i];
            m[(i + 1, i)] = self.lower[i];
        }
        m
    }

    /// `T v`.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.dim();
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: v.len(),
            });
        }
        let mut out: Vec<Complex64> = self
            .diag
            .iter()
            .zip(v)
            .map(|(d, x)| x * d)
            .collect();
        for i in 0..self.upper.len() {
            out[i] += self.upper[i] * v[i + 1];
            out[i + 1] += self.lower[i] * v[i];
        }
        Ok(out)
    }

    /// Largest `|λ|` of a hermitian operator.
    pub fn spectral_norm(&self) -> Result<f64> {
        let (vals, _) = eigendecompose(self)?;
        Ok(vals.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }
}

fn check_lengths(diag: usize, off: usize) -> Result<()> {
    if diag == 0 {
        return Err(Error::Domain("operator dimension must be positive".into()));
    }
    if off + 1 != diag {
        return Err(Error::DimensionMismatch {
            left: diag - 1,
            right: off,
        });
    }
    Ok(())
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Position `Q`: zero diagonal, couplings `aₙ = sqrt(qⁿ(1 - q^{n+1}))`.
#[allow(non_snake_case)]
pub fn build_Q(ctx: &DeformationContext) -> TridiagonalOperator {
    let n = ctx.fock_dim();
    let lower = (0..n - 1).map(|k| real(jacobi_coeff(k, ctx.q()))).collect();
    TridiagonalOperator::hermitian(vec![0.0; n], lower).expect("fock_dim >= 2")
}

/// Momentum `P`: `P eₙ = i(aₙ e_{n+1} - a_{n-1} e_{n-1})`.
#[allow(non_snake_case)]
pub fn build_P(ctx: &DeformationContext) -> TridiagonalOperator {
    let n = ctx.fock_dim();
    let lower = (0..n - 1)
        .map(|k| Complex64::new(0.0, jacobi_coeff(k, ctx.q())))
        .collect();
    TridiagonalOperator::hermitian(vec![0.0; n], lower).expect("fock_dim >= 2")
}

/// Hamiltonian `H = diag(n + ½)`.
#[allow(non_snake_case)]
pub fn build_H(ctx: &DeformationContext) -> TridiagonalOperator {
    let n = ctx.fock_dim();
    let diag = (0..n).map(|k| k as f64 + 0.5).collect();
    TridiagonalOperator::hermitian(diag, vec![ZERO; n - 1]).expect("fock_dim >= 2")
}

/// `F(H) = diag(2(1 - q⁻¹)(qⁿ - (1+q) q^{2n}))`.
#[allow(non_snake_case)]
pub fn build_F_of_H(ctx: &DeformationContext) -> TridiagonalOperator {
    let q = ctx.q();
    let n = ctx.fock_dim();
    let diag = (0..n)
        .map(|k| {
            let qn = q.powi(k as i32);
            2.0 * (1.0 - 1.0 / q) * (qn - (1.0 + q) * qn * qn)
        })
        .collect();
    TridiagonalOperator::hermitian(diag, vec![ZERO; n - 1]).expect("fock_dim >= 2")
}

fn raising_coeff(n: usize, q: f64) -> f64 {
    // sqrt(q^{n+1} [n+1])
    (q.powi(n as i32 + 1) * q_number(n as f64 + 1.0, q)).sqrt()
}

/// Raising and lowering generators `(I₊, I₋)`.
pub fn build_generators(ctx: &DeformationContext) -> (TridiagonalOperator, TridiagonalOperator) {
    let n = ctx.fock_dim();
    let coeffs: Vec<Complex64> = (0..n - 1).map(|k| real(raising_coeff(k, ctx.q()))).collect();
    let zeros = vec![ZERO; n - 1];
    let raise = TridiagonalOperator::general(vec![0.0; n], zeros.clone(), coeffs.clone())
        .expect("fock_dim >= 2");
    let lower = TridiagonalOperator::general(vec![0.0; n], coeffs, zeros).expect("fock_dim >= 2");
    (raise, lower)
}

/// Ladder operators `(a_q, a_q⁺)` with `a_q eₙ = sqrt(qⁿ[n]) e_{n-1}` and
/// `a_q⁺ eₙ = sqrt(q^{n+1}[n+1]) e_{n+1}`.
pub fn build_ladders(ctx: &DeformationContext) -> (TridiagonalOperator, TridiagonalOperator) {
    let (raise, lower) = build_generators(ctx);
    (lower, raise)
}

/// Weight generator `I₀ = diag(n)`.
#[allow(non_snake_case)]
pub fn build_I0(ctx: &DeformationContext) -> TridiagonalOperator {
    let n = ctx.fock_dim();
    TridiagonalOperator::hermitian((0..n).map(|k| k as f64).collect(), vec![ZERO; n - 1])
        .expect("fock_dim >= 2")
}

/// `I₁ = I₊ + I₋`.
#[allow(non_snake_case)]
pub fn build_I1(ctx: &DeformationContext) -> TridiagonalOperator {
    let n = ctx.fock_dim();
    let lower = (0..n - 1).map(|k| real(raising_coeff(k, ctx.q()))).collect();
    TridiagonalOperator::hermitian(vec![0.0; n], lower).expect("fock_dim >= 2")
}

/// `I₂ = i(I₊ - I₋)`.
#[allow(non_snake_case)]
pub fn build_I2(ctx: &DeformationContext) -> TridiagonalOperator {
    let n = ctx.fock_dim();
    let lower = (0..n - 1)
        .map(|k| Complex64::new(0.0, raising_coeff(k, ctx.q())))
        .collect();
    TridiagonalOperator::hermitian(vec![0.0; n], lower).expect("fock_dim >= 2")
}

/// `AB - BA` as a dense matrix.
pub fn commutator(a: &TridiagonalOperator, b: &TridiagonalOperator) -> Result<DMatrix<Complex64>> {
    commutator_dense(&a.to_dense(), &b.to_dense())
}

pub fn commutator_dense(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            left: a.nrows(),
            right: b.nrows(),
        });
    }
    Ok(a * b - b * a)
}

/// Largest entry modulus of the leading `k × k` block.
pub fn block_max(m: &DMatrix<Complex64>, k: usize) -> f64 {
    let k = k.min(m.nrows()).min(m.ncols());
    let mut worst: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            worst = worst.max(m[(i, j)].norm());
        }
    }
    worst
}

const MAX_QL_SWEEPS: usize = 100;

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a
/// hermitian tridiagonal operator.
///
/// Complex couplings are first rotated to non-negative reals by a diagonal
/// phase change `ẽₙ = dₙ eₙ` (for `P` this is `dₙ = iⁿ`), then the real
/// symmetric matrix is diagonalized by implicit-shift QL.
pub fn eigendecompose(t: &TridiagonalOperator) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    if !t.hermitian {
        return Err(Error::NotHermitian);
    }
    let n = t.dim();
    for i in 0..n - 1 {
        if (t.upper[i] - t.lower[i].conj()).norm() > 0.0 {
            return Err(Error::NotHermitian);
        }
    }
    if t.diag.iter().any(|d| !d.is_finite()) || t.lower.iter().any(|z| !z.is_finite()) {
        return Err(Error::Domain("operator entries must be finite".into()));
    }
    let mut phases = Vec::with_capacity(n);
    phases.push(Complex64::new(1.0, 0.0));
    let mut off = vec![0.0; n];
    for i in 0..n - 1 {
        let b = t.lower[i];
        let r = b.norm();
        off[i] = r;
        let unit = if r > 0.0 { b / r } else { Complex64::new(1.0, 0.0) };
        phases.push(phases[i] * unit);
    }
    let mut vals = t.diag.clone();
    let mut z = DMatrix::<f64>::identity(n, n);
    tql(&mut vals, &mut off, &mut z)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let sorted = order.iter().map(|&i| vals[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |row, col| phases[row] * z[(row, order[col])]);
    Ok((sorted, vecs))
}

// Implicit-shift QL on a real symmetric tridiagonal matrix. `e[i]` couples
// rows i and i+1; `z` accumulates the rotations.
fn tql(d: &mut [f64], e: &mut [f64], z: &mut DMatrix<f64>) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(Error::NoConvergence {
                    iterations: MAX_QL_SWEEPS,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let f = z[(k, i + 1)];
                    z[(k, i + 1)] = s * z[(k, i)] + c * f;
                    z[(k, i)] = c * z[(k, i)] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// An eigenvalue paired with the lattice point `±qˢ` it approximates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedEigenvalue {
    pub sign: Sign,
    pub s: usize,
    pub lambda: f64,
    pub error: f64,
}

/// Comparison of a computed spectrum with the lattice `{±qˢ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub q: f64,
    #[serde(rename = "N")]
    pub dim: usize,
    /// Number of leading levels `s` whose `+qˢ` and `-qˢ` are both
    /// reproduced within the match tolerance.
    pub matched_levels: usize,
    /// Largest such level, absent when `±1` is already missed.
    pub s_match: Option<usize>,
    pub max_error: f64,
    pub matched: Vec<MatchedEigenvalue>,
    /// Eigenvalues beyond the matched levels, descending by modulus.
    pub unmatched: Vec<f64>,
}

/// Pair eigenvalues with lattice points: within each sign bucket, the k-th
/// largest `|λ|` is paired with level k.
pub fn spectrum_report(t: &TridiagonalOperator, ctx: &DeformationContext) -> Result<SpectrumReport> {
    let (vals, _) = eigendecompose(t)?;
    Ok(match_spectrum(&vals, ctx))
}

pub fn match_spectrum(eigenvalues: &[f64], ctx: &DeformationContext) -> SpectrumReport {
    let q = ctx.q();
    let tol = ctx.match_tol();
    let mut plus: Vec<f64> = eigenvalues.iter().copied().filter(|v| *v > 0.0).collect();
    let mut minus: Vec<f64> = eigenvalues.iter().copied().filter(|v| *v <= 0.0).collect();
    plus.sort_by(|a, b| b.total_cmp(a));
    minus.sort_by(|a, b| a.total_cmp(b));

    let err = |v: f64, s: usize| (v.abs() - q.powi(s as i32)).abs();
    let mut levels = 0;
    while levels < plus.len().min(minus.len())
        && err(plus[levels], levels) < tol
        && err(minus[levels], levels) < tol
    {
        levels += 1;
    }
    let mut matched = Vec::with_capacity(2 * levels);
    for s in 0..levels {
        for (sign, v) in [(Sign::Plus, plus[s]), (Sign::Minus, minus[s])] {
            matched.push(MatchedEigenvalue {
                sign,
                s,
                lambda: v,
                error: err(v, s),
            });
        }
    }
    let mut unmatched: Vec<f64> = plus[levels..]
        .iter()
        .chain(&minus[levels..])
        .copied()
        .collect();
    unmatched.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    let max_error = matched.iter().fold(0.0f64, |m, p| m.max(p.error));
    SpectrumReport {
        q,
        dim: eigenvalues.len(),
        matched_levels: levels,
        s_match: levels.checked_sub(1),
        max_error,
        matched,
        unmatched,
    }
}
