//! Position and momentum eigenfunctions in the auxiliary variable `y`, and
//! the isometries `Ω`, `Ω̃` of the Fock space onto functions on the lattice.
//!
//! In the Fock basis the position eigenfunction for `x = ±qˢ` has
//! coefficients `pₙ(x)`, so `ψ_x(y) = Σ pₙ(x) cₙ yⁿ` with the monomial
//! normalization `cₙ`. The momentum eigenfunction has coefficients
//! `gₙ(p) = iⁿ pₙ(p)`.
//!
//! Operators act on lattice functions through mode space: a function is
//! expanded in modes, the tridiagonal action is applied to the
//! coefficients, and the result is summed back. Multiplication by the
//! lattice variable is applied pointwise.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{build_H, build_P, build_Q, TridiagonalOperator};
use crate::qcore::{monomial_norms, qpoch_inf, DeformationContext};
use crate::qhermite::{
    i_pow, lattice_modes, lattice_window, mode_polys, norm_c, window_modes, Kind, LatticeMeasure,
    LatticePoint, Sign,
};

/// Complex values over lattice points, in position or momentum form.
///
/// `rescaled` marks functions that carry the square root of the lattice
/// weight, `F(x) = sqrt((q²x²; q²)_∞) f(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeFunction {
    pub kind: Kind,
    pub points: Vec<LatticePoint>,
    pub values: Vec<Complex64>,
    pub rescaled: bool,
}

impl LatticeFunction {
    pub fn new(kind: Kind, points: Vec<LatticePoint>, values: Vec<Complex64>, rescaled: bool) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::DimensionMismatch {
                left: points.len(),
                right: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("lattice function values must be finite".into()));
        }
        Ok(LatticeFunction {
            kind,
            points,
            values,
            rescaled,
        })
    }

    /// Sample `f` over the context window.
    pub fn from_fn(
        kind: Kind,
        ctx: &DeformationContext,
        f: impl Fn(&LatticePoint) -> Complex64,
    ) -> Self {
        let points = lattice_window(ctx);
        let values = points.iter().map(&f).collect();
        LatticeFunction {
            kind,
            points,
            values,
            rescaled: false,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value_at(&self, pt: &LatticePoint) -> Option<Complex64> {
        self.points.iter().position(|p| p == pt).map(|i| self.values[i])
    }

    fn with_values(&self, values: Vec<Complex64>) -> Self {
        LatticeFunction {
            kind: self.kind,
            points: self.points.clone(),
            values,
            rescaled: self.rescaled,
        }
    }

    pub(crate) fn expect(&self, kind: Kind, rescaled: bool) -> Result<()> {
        if self.kind != kind {
            return Err(Error::KindMismatch {
                expected: kind.name(),
                found: self.kind.name(),
            });
        }
        match (self.rescaled, rescaled) {
            (true, false) => Err(Error::AlreadyRescaled),
            (false, true) => Err(Error::NotRescaled),
            _ => Ok(()),
        }
    }
}

/// How [`psi_eval`] and [`phi_eval`] evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Series,
    Product,
}

/// Eigenvalue point, auxiliary variable `y` with `|y| < 1`, and mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavefunctionQuery {
    pub point: LatticePoint,
    pub y: Complex64,
    pub mode: EvalMode,
}

impl WavefunctionQuery {
    pub fn new(point: LatticePoint, y: Complex64, mode: EvalMode) -> Result<Self> {
        if !(y.norm() < 1.0) {
            return Err(Error::Domain(format!("|y| must be below 1, got {}", y.norm())));
        }
        Ok(WavefunctionQuery { point, y, mode })
    }
}

const MAX_SERIES_TERMS: usize = 100_000;

// Σ pₙ(x) cₙ zⁿ over enough terms that the remainder is below the tail
// tolerance.
fn mode_series(pt: &LatticePoint, z: Complex64, ctx: &DeformationContext) -> Result<Complex64> {
    if !(z.norm() < 1.0) {
        return Err(Error::Domain(format!("|y| must be below 1, got {}", z.norm())));
    }
    let q = ctx.q();
    // |pₙ(±qˢ)| ≤ c_s^{-1/2}
    let bound = 1.0 / norm_c(pt.level(), ctx)?.sqrt();
    let r = z.norm();
    let mut count = 1;
    let mut c = 1.0;
    let mut qn: f64 = 1.0;
    let mut rn = 1.0;
    while c * rn * bound >= ctx.tail_tol() * 1e-3 {
        c *= qn.sqrt() / (1.0 - qn * q).sqrt();
        qn *= q;
        rn *= r;
        count += 1;
        if count > MAX_SERIES_TERMS {
            return Err(Error::NonConvergent { terms: count });
        }
    }
    let p = lattice_modes(pt, count, q);
    let norms = monomial_norms(count, q);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut zn = Complex64::new(1.0, 0.0);
    for n in 0..count {
        sum += zn * (p[n] * norms[n]);
        zn *= z;
    }
    Ok(sum)
}

/// Position eigenfunction `ψ_x(y)`: the series `Σ hₙ(x) yⁿ / (q;q)ₙ` or the
/// product `(y²; q²)_∞ / (xy; q)_∞`.
pub fn psi_eval(qry: &WavefunctionQuery, ctx: &DeformationContext) -> Result<Complex64> {
    let y = qry.y;
    match qry.mode {
        EvalMode::Series => mode_series(&qry.point, y, ctx),
        EvalMode::Product => {
            let q = ctx.q();
            let num = qpoch_inf(y * y, q * q, ctx.tail_tol())?.value;
            let den = qpoch_inf(y * qry.point.value(), q, ctx.tail_tol())?.value;
            Ok(num / den)
        }
    }
}

/// Momentum eigenfunction value with the residuals of candidate product
/// forms against the series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiEvaluation {
    /// `Σ hₙ(p) (iy)ⁿ / (q;q)ₙ`.
    pub series: Complex64,
    /// `(-y²; q²)_∞ / (iyp; q)_∞`, the series summed in closed form.
    pub product: Complex64,
    /// `|series - (y²; q)_∞ / (iyp; q)_∞| / |series|`.
    pub residual_numerator_q: f64,
    /// `|series - (y²; q²)_∞ / (iyp; q)_∞| / |series|`.
    pub residual_numerator_q2: f64,
    /// `|series - product| / |series|`.
    pub residual: f64,
}

/// Momentum eigenfunction `φ_p(y)`. The series is authoritative; since it
/// is `ψ_p` at `iy`, its closed form has numerator `(-y²; q²)_∞`.
pub fn phi_eval(qry: &WavefunctionQuery, ctx: &DeformationContext) -> Result<PhiEvaluation> {
    let q = ctx.q();
    let tol = ctx.tail_tol();
    let y = qry.y;
    let iy = Complex64::i() * y;
    let series = mode_series(&qry.point, iy, ctx)?;
    let den = qpoch_inf(iy * qry.point.value(), q, tol)?.value;
    let product = qpoch_inf(-y * y, q * q, tol)?.value / den;
    let printed_q = qpoch_inf(y * y, q, tol)?.value / den;
    let printed_q2 = qpoch_inf(y * y, q * q, tol)?.value / den;
    let rel = |v: Complex64| (series - v).norm() / series.norm();
    Ok(PhiEvaluation {
        series,
        product,
        residual_numerator_q: rel(printed_q),
        residual_numerator_q2: rel(printed_q2),
        residual: rel(product),
    })
}

/// Fock coefficients of the normalized eigenfunction `sqrt(c_s) ψ_{±qˢ}`
/// (position) or `sqrt(c_s) φ_{±qˢ}` (momentum), degrees below `n_max`.
pub fn normalized_eigenfunction(
    kind: Kind,
    pt: &LatticePoint,
    n_max: usize,
    ctx: &DeformationContext,
) -> Result<Vec<Complex64>> {
    let w = norm_c(pt.level(), ctx)?.sqrt();
    let p = lattice_modes(pt, n_max, ctx.q());
    Ok(p.iter()
        .enumerate()
        .map(|(n, v)| {
            let phase = match kind {
                Kind::Position => Complex64::new(1.0, 0.0),
                Kind::Momentum => i_pow(n),
            };
            phase * (w * v)
        })
        .collect())
}

// Phase of Ω eₙ: 1 for position, (-i)ⁿ for momentum.
fn basis_phase(kind: Kind, n: usize) -> Complex64 {
    match kind {
        Kind::Position => Complex64::new(1.0, 0.0),
        Kind::Momentum => i_pow(n).conj(),
    }
}

fn check_coeffs(b: &[Complex64], ctx: &DeformationContext) -> Result<()> {
    if b.len() > ctx.fock_dim() {
        return Err(Error::DimensionMismatch {
            left: ctx.fock_dim(),
            right: b.len(),
        });
    }
    Ok(())
}

fn resum(kind: Kind, b: &[Complex64], points: Vec<LatticePoint>, q: f64) -> LatticeFunction {
    let modes = window_modes(&points, b.len(), q);
    let values = modes
        .iter()
        .map(|p| {
            b.iter()
                .enumerate()
                .map(|(n, bn)| bn * basis_phase(kind, n) * p[n])
                .sum()
        })
        .collect();
    LatticeFunction {
        kind,
        points,
        values,
        rescaled: false,
    }
}

/// `Ω b = Σ bₙ pₙ(x)` over the context window.
pub fn fock_to_position(b: &[Complex64], ctx: &DeformationContext) -> Result<LatticeFunction> {
    check_coeffs(b, ctx)?;
    Ok(resum(Kind::Position, b, lattice_window(ctx), ctx.q()))
}

/// `Ω̃ b = Σ bₙ (-i)ⁿ pₙ(p)` over the context window; `P` acts on it as
/// multiplication by `p`.
pub fn fock_to_momentum(b: &[Complex64], ctx: &DeformationContext) -> Result<LatticeFunction> {
    check_coeffs(b, ctx)?;
    Ok(resum(Kind::Momentum, b, lattice_window(ctx), ctx.q()))
}

// Spectral weights c_s for every point of a function.
pub(crate) fn point_weights(points: &[LatticePoint], ctx: &DeformationContext) -> Result<Vec<f64>> {
    let depth = points.iter().map(|p| p.level() + 1).max().unwrap_or(1);
    let measure = LatticeMeasure::new(&ctx.clone().with_lattice_depth(depth)?)?;
    Ok(points.iter().map(|p| measure.spectral(p.level())).collect())
}

// Σ weight · a · conj(b), with the +qˢ and -qˢ terms of each level added
// together before accumulating over levels.
pub(crate) fn paired_sum(
    points: &[LatticePoint],
    weights: &[f64],
    a: &[Complex64],
    b: &[Complex64],
) -> Complex64 {
    let depth = points.iter().map(|p| p.level() + 1).max().unwrap_or(0);
    let mut plus = vec![Complex64::new(0.0, 0.0); depth];
    let mut minus = plus.clone();
    for (i, pt) in points.iter().enumerate() {
        let term = a[i] * b[i].conj() * weights[i];
        match pt.sign() {
            Sign::Plus => plus[pt.level()] += term,
            Sign::Minus => minus[pt.level()] += term,
        }
    }
    plus.iter().zip(&minus).map(|(p, m)| p + m).sum()
}

fn same_points(f1: &LatticeFunction, f2: &LatticeFunction) -> Result<()> {
    if f1.points != f2.points {
        return Err(Error::DimensionMismatch {
            left: f1.len(),
            right: f2.len(),
        });
    }
    Ok(())
}

fn lattice_inner(kind: Kind, f1: &LatticeFunction, f2: &LatticeFunction, ctx: &DeformationContext) -> Result<Complex64> {
    f1.expect(kind, false)?;
    f2.expect(kind, false)?;
    same_points(f1, f2)?;
    let w = point_weights(&f1.points, ctx)?;
    Ok(paired_sum(&f1.points, &w, &f1.values, &f2.values))
}

/// `⟨f₁, f₂⟩ = Σ_s c_s (f₁ f₂*(qˢ) + f₁ f₂*(-qˢ))` on `L²(𝒳)`.
pub fn position_inner(f1: &LatticeFunction, f2: &LatticeFunction, ctx: &DeformationContext) -> Result<Complex64> {
    lattice_inner(Kind::Position, f1, f2, ctx)
}

/// Momentum twin of [`position_inner`]; the weights coincide.
pub fn momentum_inner(f1: &LatticeFunction, f2: &LatticeFunction, ctx: &DeformationContext) -> Result<Complex64> {
    lattice_inner(Kind::Momentum, f1, f2, ctx)
}

/// Mode coefficients `bₙ`, `n < N`, with `f ≈ Ω b` (or `Ω̃ b`).
///
/// Fails with [`Error::TruncationTail`] when the modes miss more than
/// `match_tol` of the squared norm.
pub fn decompose(f: &LatticeFunction, ctx: &DeformationContext) -> Result<Vec<Complex64>> {
    f.expect(f.kind, false)?;
    let n = ctx.fock_dim();
    let weights = point_weights(&f.points, ctx)?;
    let modes = window_modes(&f.points, n, ctx.q());
    let b: Vec<Complex64> = (0..n)
        .map(|k| {
            let mode: Vec<Complex64> = modes
                .iter()
                .map(|p| basis_phase(f.kind, k) * p[k])
                .collect();
            paired_sum(&f.points, &weights, &f.values, &mode)
        })
        .collect();
    let total = paired_sum(&f.points, &weights, &f.values, &f.values).re;
    let captured: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    let tail = if total > 0.0 { (total - captured) / total } else { 0.0 };
    if tail > ctx.match_tol() {
        return Err(Error::TruncationTail {
            tail,
            tol: ctx.match_tol(),
        });
    }
    Ok(b)
}

/// Observable acting on lattice functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Q,
    P,
    H,
}

fn fock_operator(obs: Observable, ctx: &DeformationContext) -> TridiagonalOperator {
    match obs {
        Observable::Q => build_Q(ctx),
        Observable::P => build_P(ctx),
        Observable::H => build_H(ctx),
    }
}

/// Apply `Q`, `P` or `H` to a position or momentum function.
///
/// The variable of the realization (`Q` on position, `P` on momentum) acts
/// pointwise; every other action goes through mode space.
pub fn apply(obs: Observable, f: &LatticeFunction, ctx: &DeformationContext) -> Result<LatticeFunction> {
    f.expect(f.kind, false)?;
    let pointwise = matches!(
        (obs, f.kind),
        (Observable::Q, Kind::Position) | (Observable::P, Kind::Momentum)
    );
    if pointwise {
        let values = f
            .points
            .iter()
            .zip(&f.values)
            .map(|(p, v)| v * p.value())
            .collect();
        return Ok(f.with_values(values));
    }
    let b = decompose(f, ctx)?;
    let b2 = fock_operator(obs, ctx).apply(&b)?;
    Ok(resum(f.kind, &b2, f.points.clone(), ctx.q()))
}

#[allow(non_snake_case)]
pub fn apply_Q_position(f: &LatticeFunction, ctx: &DeformationContext) -> Result<LatticeFunction> {
    f.expect(Kind::Position, false)?;
    apply(Observable::Q, f, ctx)
}

#[allow(non_snake_case)]
pub fn apply_P_position(f: &LatticeFunction, ctx: &DeformationContext) -> Result<LatticeFunction> {
    f.expect(Kind::Position, false)?;
    apply(Observable::P, f, ctx)
}

#[allow(non_snake_case)]
pub fn apply_H_position(f: &LatticeFunction, ctx: &DeformationContext) -> Result<LatticeFunction> {
    f.expect(Kind::Position, false)?;
    apply(Observable::H, f, ctx)
}

#[allow(non_snake_case)]
pub fn apply_Q_momentum(f: &LatticeFunction, ctx: &DeformationContext) -> Result<LatticeFunction> {
    f.expect(Kind::Momentum, false)?;
    apply(Observable::Q, f, ctx)
}

#[allow(non_snake_case)]
pub fn apply_P_momentum(f: &LatticeFunction, ctx: &DeformationContext) -> Result<LatticeFunction> {
    f.expect(Kind::Momentum, false)?;
    apply(Observable::P, f, ctx)
}

#[allow(non_snake_case)]
pub fn apply_H_momentum(f: &LatticeFunction, ctx: &DeformationContext) -> Result<LatticeFunction> {
    f.expect(Kind::Momentum, false)?;
    apply(Observable::H, f, ctx)
}

// pₙ at ±qˢ⁺ᵏ for any integer k: lattice values where they exist, the
// forward recurrence outside [-1, 1] where it is stable.
fn mode_at_shift(pt: &LatticePoint, shift: i64, count: usize, q: f64) -> Vec<f64> {
    let level = pt.level() as i64 + shift;
    if level >= 0 {
        lattice_modes(&LatticePoint::new(pt.sign(), level as usize, q), count, q)
    } else {
        mode_polys(count, pt.value() * q.powi(shift as i32), q)
    }
}

/// The q-difference part of `P` applied to `pₙ`,
/// `(D_q + q⁻² w⁻¹ D_{q⁻¹} w) pₙ` at `x`, where `w(x) = (q²x²; q²)_∞`,
/// `D_q f(x) = (f(x) - f(qx)) / ((1-q)x)` and
/// `D_{q⁻¹} f(x) = (f(x) - f(x/q)) / ((1-q⁻¹)x)`.
pub fn p_difference_bracket(n: usize, pt: &LatticePoint, q: f64) -> f64 {
    let x = pt.value();
    let here = mode_at_shift(pt, 0, n + 1, q)[n];
    let inner = mode_at_shift(pt, 1, n + 1, q)[n];
    let outer = mode_at_shift(pt, -1, n + 1, q)[n];
    let dq = (here - inner) / ((1.0 - q) * x);
    // w(x/q) = (1 - x²) w(x)
    let back = (here - (1.0 - x * x) * outer) / ((1.0 - 1.0 / q) * x * q * q);
    dq + back
}

/// Mode coefficients of `P pₙ` computed from the q-difference form
/// `-i(1-q) q^{H-1/2} (D_q + q⁻² w⁻¹ D_{q⁻¹} w)`: the bracket is sampled on
/// the window, expanded in modes, and `q^{H-1/2}` scales mode `k` by `qᵏ`.
pub fn p_difference_oracle(n: usize, ctx: &DeformationContext) -> Result<Vec<Complex64>> {
    let q = ctx.q();
    let f = LatticeFunction::from_fn(Kind::Position, ctx, |pt| {
        Complex64::new(p_difference_bracket(n, pt, q), 0.0)
    });
    let b = decompose(&f, ctx)?;
    let scale = Complex64::new(0.0, -(1.0 - q));
    Ok(b.iter()
        .enumerate()
        .map(|(k, v)| v * scale * q.powi(k as i32))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::build_P;
    use crate::qhermite::jacobi_coeff;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ctx(q: f64, n: usize, s: usize) -> DeformationContext {
        DeformationContext::new(q)
            .unwrap()
            .with_fock_dim(n)
            .unwrap()
            .with_lattice_depth(s)
            .unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn unit(n: usize, len: usize) -> Vec<Complex64> {
        let mut v = vec![c(0.0); len];
        v[n] = c(1.0);
        v
    }

    fn query(sign: Sign, s: usize, q: f64, y: Complex64, mode: EvalMode) -> WavefunctionQuery {
        WavefunctionQuery::new(LatticePoint::new(sign, s, q), y, mode).unwrap()
    }

    #[test]
    fn psi_at_origin_is_one() {
        let cx = ctx(0.5, 64, 32);
        for mode in [EvalMode::Series, EvalMode::Product] {
            let v = psi_eval(&query(Sign::Minus, 3, 0.5, c(0.0), mode), &cx).unwrap();
            assert_eq!(v, c(1.0));
        }
    }

    #[test]
    fn psi_pinned_value() {
        // (0.25;0.25)_∞ / (0.5;0.5)_∞ = 2.38423102903137 (mpmath, 50 digits)
        let cx = ctx(0.5, 64, 32);
        for mode in [EvalMode::Series, EvalMode::Product] {
            let v = psi_eval(&query(Sign::Plus, 0, 0.5, c(0.5), mode), &cx).unwrap();
            assert_relative_eq!(v.re, 2.384_231_029_031_37, max_relative = 1e-13);
            assert_eq!(v.im, 0.0);
        }
    }

    #[test]
    fn psi_rejects_outside_disk() {
        let pt = LatticePoint::new(Sign::Plus, 0, 0.5);
        assert!(WavefunctionQuery::new(pt, c(1.0), EvalMode::Series).is_err());
        assert!(WavefunctionQuery::new(pt, Complex64::new(0.8, 0.7), EvalMode::Product).is_err());
    }

    #[test]
    fn psi_series_matches_product_over_grid() {
        for q in [0.3, 0.5, 0.8] {
            let cx = ctx(q, 64, 32);
            for s in 0..=8 {
                for sign in [Sign::Plus, Sign::Minus] {
                    for k in 1..=9 {
                        let y = Complex64::from_polar(k as f64 / 10.0, 0.37 * k as f64);
                        let a = psi_eval(&query(sign, s, q, y, EvalMode::Series), &cx).unwrap();
                        let b = psi_eval(&query(sign, s, q, y, EvalMode::Product), &cx).unwrap();
                        assert!((a - b).norm() <= 1e-10 * b.norm(), "q={q} s={s} y={y}");
                    }
                }
            }
        }
    }

    #[test]
    fn psi_coefficients_are_q_eigenvector() {
        // Fock coefficients of ψ_x are pₙ(x); Q acts on them as x
        let cx = ctx(0.5, 40, 32);
        let pt = LatticePoint::new(Sign::Minus, 2, 0.5);
        let v = normalized_eigenfunction(Kind::Position, &pt, 40, &cx).unwrap();
        let qv = build_Q(&cx).apply(&v).unwrap();
        for n in 0..39 {
            assert!((qv[n] - v[n] * pt.value()).norm() < 1e-12);
        }
    }

    #[test]
    fn phi_series_is_psi_at_iy() {
        let cx = ctx(0.5, 64, 32);
        let pt = LatticePoint::new(Sign::Plus, 0, 0.5);
        let y = c(0.3);
        let phi = phi_eval(&WavefunctionQuery::new(pt, y, EvalMode::Series).unwrap(), &cx).unwrap();
        let psi = psi_eval(&WavefunctionQuery::new(pt, Complex64::i() * y, EvalMode::Series).unwrap(), &cx).unwrap();
        assert_eq!(phi.series, psi);
        assert!(phi.residual < 1e-12);
        // both printed numerators miss
        assert!(phi.residual_numerator_q > 1e-3);
        assert!(phi.residual_numerator_q2 > 1e-3);
    }

    #[test]
    fn phi_at_origin_is_one() {
        let cx = ctx(0.8, 64, 32);
        let phi = phi_eval(&query(Sign::Minus, 5, 0.8, c(0.0), EvalMode::Series), &cx).unwrap();
        assert_eq!(phi.series, c(1.0));
        assert_eq!(phi.product, c(1.0));
    }

    #[test]
    fn normalized_eigenfunctions_orthonormal() {
        let cx = ctx(0.5, 60, 32);
        let e = |sign, s| normalized_eigenfunction(Kind::Position, &LatticePoint::new(sign, s, 0.5), 60, &cx).unwrap();
        let dot = |a: &[Complex64], b: &[Complex64]| crate::qcore::fock_dot(a, b);
        let a = e(Sign::Plus, 0);
        assert!((dot(&a, &a) - c(1.0)).norm() < 1e-8);
        assert!(dot(&a, &e(Sign::Minus, 0)).norm() < 1e-8);
        assert!(dot(&a, &e(Sign::Plus, 1)).norm() < 1e-8);
        let m = normalized_eigenfunction(Kind::Momentum, &LatticePoint::new(Sign::Plus, 1, 0.5), 60, &cx).unwrap();
        let pm = build_P(&cx).apply(&m).unwrap();
        for n in 0..59 {
            assert!((pm[n] - m[n] * 0.5).norm() < 1e-12);
        }
    }

    #[test]
    fn omega_basics() {
        let cx = ctx(0.5, 20, 16);
        let f0 = fock_to_position(&unit(0, 20), &cx).unwrap();
        assert!(f0.values.iter().all(|v| *v == c(1.0)));
        let f1 = fock_to_position(&unit(1, 20), &cx).unwrap();
        for s in 0..16 {
            assert_eq!(f1.values[s], -f1.values[16 + s]);
        }
        let b = [c(1.0 / 2f64.sqrt()), c(1.0 / 2f64.sqrt())];
        let f = fock_to_position(&b, &ctx(0.5, 64, 40)).unwrap();
        let norm = position_inner(&f, &f, &ctx(0.5, 64, 40)).unwrap();
        assert!((norm - c(1.0)).norm() < 1e-9);
        assert!(fock_to_position(&unit(0, 21), &cx).is_err());
    }

    #[test]
    fn position_inner_values() {
        let cx = ctx(0.5, 64, 40);
        let p = |n| fock_to_position(&unit(n, 64), &cx).unwrap();
        assert!((position_inner(&p(0), &p(0), &cx).unwrap() - c(1.0)).norm() < 1e-10);
        assert_eq!(position_inner(&p(0), &p(1), &cx).unwrap(), c(0.0));
        let deep = ctx(0.8, 64, 80);
        let p5 = fock_to_position(&unit(5, 64), &deep).unwrap();
        assert!((position_inner(&p5, &p5, &deep).unwrap() - c(1.0)).norm() < 1e-7);
        let m = fock_to_momentum(&unit(0, 64), &cx).unwrap();
        assert!(matches!(position_inner(&m, &m, &cx), Err(Error::KindMismatch { .. })));
    }

    #[test]
    fn q_and_p_on_ground_mode() {
        let cx = ctx(0.5, 64, 40);
        let p0 = fock_to_position(&unit(0, 64), &cx).unwrap();
        let qp0 = apply_Q_position(&p0, &cx).unwrap();
        let b = decompose(&qp0, &cx).unwrap();
        assert!((b[1] - c(0.5f64.sqrt())).norm() < 1e-10);
        assert!(b.iter().enumerate().filter(|(k, _)| *k != 1).all(|(_, v)| v.norm() < 1e-10));
        let pp0 = apply_P_position(&p0, &cx).unwrap();
        let expect = fock_to_position(&unit(1, 64), &cx).unwrap();
        for (a, e) in pp0.values.iter().zip(&expect.values) {
            assert!((a - Complex64::new(0.0, 0.5f64.sqrt()) * e).norm() < 1e-9 * e.norm().max(1.0));
        }
    }

    #[test]
    fn h_on_modes() {
        let cx = ctx(0.5, 64, 40);
        let mut b = unit(0, 64);
        b[1] = c(1.0);
        let f = fock_to_position(&b, &cx).unwrap();
        let hf = decompose(&apply_H_position(&f, &cx).unwrap(), &cx).unwrap();
        assert!((hf[0] - c(0.5)).norm() < 1e-9);
        assert!((hf[1] - c(1.5)).norm() < 1e-9);
        // q = 0.9 needs a deeper window; the tail guard says so
        let shallow = ctx(0.9, 64, 40);
        let g = apply_H_position(&fock_to_position(&unit(0, 64), &shallow).unwrap(), &shallow);
        assert!(matches!(g, Err(Error::TruncationTail { .. })));
    }

    #[test]
    fn p_is_hermitian_on_position_functions() {
        let cx = ctx(0.5, 64, 40);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let mut rand_vec = || -> Vec<Complex64> {
                (0..12).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
            };
            let (f, g) = (fock_to_position(&rand_vec(), &cx).unwrap(), fock_to_position(&rand_vec(), &cx).unwrap());
            let lhs = position_inner(&apply_P_position(&f, &cx).unwrap(), &g, &cx).unwrap();
            let rhs = position_inner(&f, &apply_P_position(&g, &cx).unwrap(), &cx).unwrap();
            assert!((lhs - rhs).norm() < 1e-9);
        }
    }

    #[test]
    fn q_difference_oracle_matches_mode_action() {
        let cx = ctx(0.5, 64, 40);
        for n in 0..6 {
            let oracle = p_difference_oracle(n, &cx).unwrap();
            let direct = build_P(&cx).apply(&unit(n, 64)).unwrap();
            for k in 0..20 {
                assert!((oracle[k] - direct[k]).norm() < 1e-9, "n={n} k={k}");
            }
        }
        assert_relative_eq!(jacobi_coeff(0, 0.5), direct_coeff(&cx), epsilon = 1e-9);
    }

    fn direct_coeff(cx: &DeformationContext) -> f64 {
        p_difference_oracle(0, cx).unwrap()[1].im
    }

    #[test]
    fn momentum_realization() {
        let cx = ctx(0.5, 64, 40);
        // P acts by multiplication by p on Ω̃ functions
        for n in 0..4 {
            let f = fock_to_momentum(&unit(n, 64), &cx).unwrap();
            let via_modes = resum(Kind::Momentum, &build_P(&cx).apply(&unit(n, 64)).unwrap(), f.points.clone(), 0.5);
            let pointwise = apply_P_momentum(&f, &cx).unwrap();
            for (a, b) in via_modes.values.iter().zip(&pointwise.values) {
                assert!((a - b).norm() < 1e-12);
            }
        }
        // Q on momentum has the position recurrence coefficients
        let g0 = fock_to_momentum(&unit(0, 64), &cx).unwrap();
        let b = decompose(&apply_Q_momentum(&g0, &cx).unwrap(), &cx).unwrap();
        assert!((b[1] - c(0.5f64.sqrt())).norm() < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let coeffs: Vec<Complex64> = (0..16).map(|_| Complex64::new(rng.gen(), rng.gen())).collect();
        let total: f64 = coeffs.iter().map(|z| z.norm_sqr()).sum();
        let f = fock_to_momentum(&coeffs, &cx).unwrap();
        assert!((momentum_inner(&f, &f, &cx).unwrap().re - total).abs() < 1e-8 * total);
    }

    #[test]
    fn gauge_conjugates_q_into_p() {
        let cx = ctx(0.7, 30, 10);
        let q = build_Q(&cx).to_dense();
        let p = build_P(&cx).to_dense();
        let d = nalgebra::DMatrix::from_fn(30, 30, |i, j| if i == j { i_pow(i) } else { c(0.0) });
        let conj = &d * q * d.adjoint();
        assert!((conj - p).iter().all(|z| z.norm() < 1e-13));
    }

    #[test]
    fn eigenfunction_restriction_is_q_eigenvector() {
        let cx = ctx(0.5, 80, 30);
        for s in [0, 3, 10] {
            for sign in [Sign::Plus, Sign::Minus] {
                let pt = LatticePoint::new(sign, s, 0.5);
                let coeffs = normalized_eigenfunction(Kind::Position, &pt, 80, &cx).unwrap();
                let f = fock_to_position(&coeffs, &cx).unwrap();
                let qf = apply_Q_position(&f, &cx).unwrap();
                for (a, b) in qf.values.iter().zip(&f.values) {
                    assert!((a - b * pt.value()).norm() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn decompose_rejects_wrong_flags() {
        let cx = ctx(0.5, 16, 8);
        let mut f = fock_to_position(&unit(0, 16), &cx).unwrap();
        f.rescaled = true;
        assert_eq!(decompose(&f, &cx), Err(Error::AlreadyRescaled));
        assert!(LatticeFunction::new(Kind::Position, vec![], vec![c(1.0)], false).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn omega_is_isometric(re in proptest::collection::vec(-1.0f64..1.0, 32), im in proptest::collection::vec(-1.0f64..1.0, 32)) {
            // modes near n = 30 peak close to 0, so the window must reach deeper than S = 40
            let cx = ctx(0.5, 64, 60);
            let b: Vec<Complex64> = re.iter().zip(&im).map(|(r, i)| Complex64::new(*r, *i)).collect();
            let b2: Vec<Complex64> = b.iter().rev().copied().collect();
            let f = fock_to_position(&b, &cx).unwrap();
            let g = fock_to_position(&b2, &cx).unwrap();
            let ip = position_inner(&f, &g, &cx).unwrap();
            let expect = crate::qcore::fock_dot(&b, &b2);
            prop_assert!((ip - expect).norm() < 1e-8);
        }

        #[test]
        fn position_inner_hermitian(re in proptest::collection::vec(-1.0f64..1.0, 8), im in proptest::collection::vec(-1.0f64..1.0, 8)) {
            let cx = ctx(0.5, 16, 12);
            let f = LatticeFunction::from_fn(Kind::Position, &cx, |p| Complex64::new(re[p.level() % 8], im[p.level() % 8]) * p.value());
            let g = fock_to_position(&unit(3, 16), &cx).unwrap();
            let a = position_inner(&f, &g, &cx).unwrap();
            let b = position_inner(&g, &f, &cx).unwrap();
            prop_assert!((a - b.conj()).norm() < 1e-15);
            prop_assert!(position_inner(&f, &f, &cx).unwrap().re > 0.0);
        }
    }
}
