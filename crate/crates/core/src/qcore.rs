//! q-arithmetic primitives.
//!
//! Box q-numbers, finite and infinite q-Pochhammer symbols, and the scale and
//! q-difference operators acting on power series in the auxiliary variable
//! `y` of the Fock realization.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Hard cap on the number of factors of an infinite product.
pub const MAX_PRODUCT_FACTORS: usize = 1_000_000;

/// Validated deformation parameter together with the truncation settings
/// shared by every computation in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawContext", into = "RawContext")]
pub struct DeformationContext {
    q: f64,
    fock_dim: usize,
    lattice_depth: usize,
    tail_tol: f64,
    match_tol: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawContext {
    q: f64,
    #[serde(default = "defaults::fock_dim")]
    fock_dim: usize,
    #[serde(default = "defaults::lattice_depth")]
    lattice_depth: usize,
    #[serde(default = "defaults::tail_tol")]
    tail_tol: f64,
    #[serde(default = "defaults::match_tol")]
    match_tol: f64,
}

/// Default truncation settings.
pub mod defaults {
    pub const fn fock_dim() -> usize {
        64
    }
    pub const fn lattice_depth() -> usize {
        32
    }
    pub const fn tail_tol() -> f64 {
        1e-15
    }
    pub const fn match_tol() -> f64 {
        1e-10
    }
}

impl TryFrom<RawContext> for DeformationContext {
    type Error = Error;

    fn try_from(raw: RawContext) -> Result<Self> {
        DeformationContext::new(raw.q)?
            .with_fock_dim(raw.fock_dim)?
            .with_lattice_depth(raw.lattice_depth)?
            .with_tail_tol(raw.tail_tol)?
            .with_match_tol(raw.match_tol)
    }
}

impl From<DeformationContext> for RawContext {
    fn from(ctx: DeformationContext) -> Self {
        RawContext {
            q: ctx.q,
            fock_dim: ctx.fock_dim,
            lattice_depth: ctx.lattice_depth,
            tail_tol: ctx.tail_tol,
            match_tol: ctx.match_tol,
        }
    }
}

impl DeformationContext {
    /// Context with the default truncation (N = 64, S = 32, ε = 1e-15,
    /// match tolerance 1e-10).
    pub fn new(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(invalid("q", format!("must lie strictly inside (0, 1), got {q}")));
        }
        Ok(DeformationContext {
            q,
            fock_dim: defaults::fock_dim(),
            lattice_depth: defaults::lattice_depth(),
            tail_tol: defaults::tail_tol(),
            match_tol: defaults::match_tol(),
        })
    }

    pub fn with_fock_dim(mut self, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("fock_dim", format!("must be at least 2, got {n}")));
        }
        self.fock_dim = n;
        Ok(self)
    }

    pub fn with_lattice_depth(mut self, s: usize) -> Result<Self> {
        if s < 1 {
            return Err(invalid("lattice_depth", "must be at least 1"));
        }
        self.lattice_depth = s;
        Ok(self)
    }

    pub fn with_tail_tol(mut self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(invalid("tail_tol", format!("must lie in (0, 1), got {eps}")));
        }
        self.tail_tol = eps;
        Ok(self)
    }

    pub fn with_match_tol(mut self, tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(invalid("match_tol", format!("must lie in (0, 1), got {tol}")));
        }
        self.match_tol = tol;
        Ok(self)
    }

    /// Lattice depth chosen so that the weight q^S of the deepest level
    /// falls below the tail tolerance.
    pub fn with_auto_depth(self) -> Result<Self> {
        let depth = auto_lattice_depth(self.q, self.tail_tol);
        self.with_lattice_depth(depth)
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    pub fn lattice_depth(&self) -> usize {
        self.lattice_depth
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    pub fn match_tol(&self) -> f64 {
        self.match_tol
    }

    /// `[a]_q` for this context.
    pub fn q_number(&self, a: f64) -> f64 {
        q_number(a, self.q)
    }

    /// `(a; q)_∞` in base q with the context tolerance.
    pub fn qpoch_inf(&self, a: f64) -> Result<f64> {
        qpoch_inf(a, self.q, self.tail_tol).map(|t| t.value)
    }

    /// `(a; q²)_∞` with the context tolerance.
    pub fn qpoch_inf_sq(&self, a: f64) -> Result<f64> {
        qpoch_inf(a, self.q * self.q, self.tail_tol).map(|t| t.value)
    }
}

/// Smallest S with q^S below `eps`.
pub fn auto_lattice_depth(q: f64, eps: f64) -> usize {
    (eps.ln() / q.ln()).ceil().max(1.0) as usize
}

/// Box q-number `[a]_q = (1 - q^a) / (1 - q)`.
pub fn q_number(a: f64, q: f64) -> f64 {
    (1.0 - q.powf(a)) / (1.0 - q)
}

/// Scalars accepted by the q-Pochhammer routines.
pub trait QScalar: Copy + std::ops::Mul<Output = Self> + std::ops::Sub<Output = Self> {
    fn one() -> Self;
    fn scaled(self, by: f64) -> Self;
    fn modulus(self) -> f64;
    /// True for a real value ≥ 1, where some factor 1 − a qᵏ is non-positive.
    fn is_real_at_least_one(self) -> bool;
}

impl QScalar for f64 {
    fn one() -> Self {
        1.0
    }
    fn scaled(self, by: f64) -> Self {
        self * by
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn is_real_at_least_one(self) -> bool {
        self >= 1.0
    }
}

impl QScalar for Complex64 {
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn scaled(self, by: f64) -> Self {
        self * by
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn is_real_at_least_one(self) -> bool {
        self.im == 0.0 && self.re >= 1.0
    }
}

/// Finite q-Pochhammer symbol `(a; q)_n = (1 - a)(1 - aq)…(1 - aq^{n-1})`.
///
/// The powers q^k are built by repeated multiplication, so
/// `qpoch(a, q, n + 1) == qpoch(a, q, n) * (1 - a q^n)` holds bit for bit.
pub fn qpoch<T: QScalar>(a: T, q: f64, n: usize) -> T {
    let mut acc = T::one();
    let mut qk = 1.0;
    for _ in 0..n {
        acc = acc * (T::one() - a.scaled(qk));
        qk *= q;
    }
    acc
}

/// Value of a truncated infinite product together with the number of
/// factors actually multiplied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncated<T> {
    pub value: T,
    pub terms: usize,
}

/// Infinite q-Pochhammer symbol `(a; q)_∞`.
///
/// Factors are multiplied in linear space until `|a qᵏ| < tol`, leaving a
/// relative truncation error of about `tol / (1 - q)`. A real
/// `a ≥ 1` is rejected since the product then has a non-positive factor;
/// use [`qpoch_inf_unchecked`] to opt in.
pub fn qpoch_inf<T: QScalar>(a: T, q: f64, tol: f64) -> Result<Truncated<T>> {
    if a.is_real_at_least_one() {
        return Err(Error::Domain(
            "(a; q)_inf with real a >= 1 has a non-positive factor".into(),
        ));
    }
    qpoch_inf_unchecked(a, q, tol)
}

/// [`qpoch_inf`] without the `a ≥ 1` guard.
pub fn qpoch_inf_unchecked<T: QScalar>(a: T, q: f64, tol: f64) -> Result<Truncated<T>> {
    if !(q > 0.0 && q < 1.0) {
        return Err(invalid("base", format!("must lie in (0, 1), got {q}")));
    }
    if !(tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    let mut acc = T::one();
    let mut term = a;
    for k in 0..MAX_PRODUCT_FACTORS {
        if term.modulus() < tol {
            return Ok(Truncated { value: acc, terms: k });
        }
        acc = acc * (T::one() - term);
        term = term.scaled(q);
    }
    Err(Error::NonConvergent {
        terms: MAX_PRODUCT_FACTORS,
    })
}

/// Normalization `c_n = q^{n(n-1)/4} / (q; q)_n^{1/2}` of the Fock monomial
/// `e_n(y) = c_n yⁿ`, built by the running recurrence
/// `c_{n+1} = c_n q^{n/2} / (1 - q^{n+1})^{1/2}`.
pub fn monomial_norm(n: usize, q: f64) -> f64 {
    monomial_norms(n + 1, q)[n]
}

/// `c_0, …, c_{len-1}`.
pub fn monomial_norms(len: usize, q: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut c = 1.0;
    let mut qn: f64 = 1.0; // q^n
    for _ in 0..len {
        out.push(c);
        // q^{n/2} / sqrt(1 - q^{n+1})
        c *= qn.sqrt() / (1.0 - qn * q).sqrt();
        qn *= q;
    }
    out
}

/// Power series `Σ aₙ yⁿ` in the auxiliary variable of the Fock realization.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CoefficientVector {
    pub coeffs: Vec<Complex64>,
}

impl CoefficientVector {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        CoefficientVector { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        CoefficientVector {
            coeffs: coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect(),
        }
    }

    /// Series with Fock-basis coefficients `b`, i.e. `Σ bₙ eₙ(y)`.
    pub fn from_fock(b: &[Complex64], q: f64) -> Self {
        let norms = monomial_norms(b.len(), q);
        CoefficientVector {
            coeffs: b.iter().zip(&norms).map(|(bn, cn)| bn * cn).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Scale operator `T_a f(y) = f(a y)`.
    pub fn scale(&self, a: f64) -> Self {
        let mut an = 1.0;
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                let out = c * an;
                an *= a;
                out
            })
            .collect();
        CoefficientVector { coeffs }
    }

    /// q-difference operator `D_q f(y) = (f(y) - f(qy)) / ((1 - q) y)`, so
    /// `D_q yⁿ = [n]_q y^{n-1}`.
    pub fn q_diff(&self, q: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, c)| c * q_number(n as f64, q))
            .collect();
        CoefficientVector { coeffs }
    }

    /// Multiplication by `y`.
    pub fn times_y(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(Complex64::new(0.0, 0.0));
        coeffs.extend_from_slice(&self.coeffs);
        CoefficientVector { coeffs }
    }

    pub fn scaled_by(&self, k: Complex64) -> Self {
        CoefficientVector {
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    /// Evaluate the truncated series at `y`.
    pub fn eval(&self, y: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * y + c)
    }
}

/// Fock monomial `e_n(y) = c_n yⁿ`.
pub fn fock_monomial(n: usize, ctx: &DeformationContext) -> Result<CoefficientVector> {
    if n >= ctx.fock_dim() {
        return Err(Error::IndexOutOfRange {
            index: n,
            bound: ctx.fock_dim(),
        });
    }
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
    coeffs[n] = Complex64::new(monomial_norm(n, ctx.q()), 0.0);
    Ok(CoefficientVector { coeffs })
}

/// Scalar product `⟨f₁, f₂⟩ = Σ aₙ conj(a′ₙ) / |cₙ|²` on series in `y`.
///
/// Fails if a nonzero coefficient sits at a degree where `cₙ` underflows.
pub fn fock_inner(
    f1: &CoefficientVector,
    f2: &CoefficientVector,
    ctx: &DeformationContext,
) -> Result<Complex64> {
    let len = f1.len().min(f2.len());
    let norms = monomial_norms(len, ctx.q());
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, cn) in norms.iter().enumerate() {
        let (a, b) = (f1.coeffs[n], f2.coeffs[n]);
        if a == Complex64::new(0.0, 0.0) || b == Complex64::new(0.0, 0.0) {
            continue;
        }
        if *cn == 0.0 {
            return Err(Error::Domain(format!("monomial norm c_{n} underflows")));
        }
        acc += (a / cn) * (b / cn).conj();
    }
    Ok(acc)
}

/// Plain `Σ bₙ conj(b′ₙ)` on Fock-basis coefficients.
pub fn fock_dot(b1: &[Complex64], b2: &[Complex64]) -> Complex64 {
    b1.iter().zip(b2).map(|(a, b)| a * b.conj()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    // independent oracle: powf-based product, no shared code path
    fn naive_inf(a: f64, q: f64) -> f64 {
        let mut p = 1.0;
        let mut k = 0;
        while (a * q.powi(k)).abs() >= 1e-17 {
            p *= 1.0 - a * q.powi(k);
            k += 1;
        }
        p
    }

    #[test]
    fn context_rejects_bad_q() {
        for q in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(DeformationContext::new(q).is_err(), "q = {q}");
        }
        let ctx = DeformationContext::new(0.5).unwrap();
        assert!(ctx.with_fock_dim(1).is_err());
        assert!(ctx.with_lattice_depth(0).is_err());
        assert!(ctx.with_tail_tol(0.0).is_err());
        assert!(ctx.with_match_tol(1.0).is_err());
    }

    #[test]
    fn context_from_json_applies_defaults_and_validation() {
        let ctx: DeformationContext = serde_json::from_str(r#"{"q": 0.3}"#).unwrap();
        assert_eq!(ctx.fock_dim(), 64);
        assert_eq!(ctx.lattice_depth(), 32);
        assert!(serde_json::from_str::<DeformationContext>(r#"{"q": 1.2}"#).is_err());
        assert!(serde_json::from_str::<DeformationContext>(r#"{"q": 0.5, "fock_dim": 1}"#).is_err());
    }

    #[test]
    fn box_numbers() {
        assert_eq!(q_number(0.0, 0.7), 0.0);
        assert_relative_eq!(q_number(1.0, 0.7), 1.0, epsilon = 1e-15);
        assert_relative_eq!(q_number(2.0, 0.5), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn finite_pochhammer() {
        assert_eq!(qpoch(0.3, 0.5, 0), 1.0);
        assert_eq!(qpoch(c(2.0), 0.5, 0), c(1.0));
        for n in 1..6 {
            assert_eq!(qpoch(1.0, 0.5, n), 0.0);
        }
        assert_relative_eq!(qpoch(0.5, 0.5, 2), 0.375, epsilon = 1e-15);
    }

    #[test]
    fn infinite_pochhammer_values() {
        assert_eq!(qpoch_inf(0.0, 0.5, 1e-15).unwrap().value, 1.0);
        let v = qpoch_inf(0.5, 0.5, 1e-16).unwrap();
        assert_relative_eq!(v.value, naive_inf(0.5, 0.5), max_relative = 1e-14);
        assert_relative_eq!(v.value, 0.288_788_095_086_602_4, max_relative = 1e-14);
        assert!(v.terms > 40 && v.terms < 60);
        let v = qpoch_inf(0.25, 0.25, 1e-16).unwrap().value;
        assert_relative_eq!(v, naive_inf(0.25, 0.25), max_relative = 1e-14);
        assert_relative_eq!(v, 0.688_537_537_120_339_7, max_relative = 1e-14);
    }

    #[test]
    fn infinite_pochhammer_guards() {
        assert!(qpoch_inf(1.0, 0.5, 1e-15).is_err());
        assert!(qpoch_inf(c(1.5), 0.5, 1e-15).is_err());
        assert_eq!(qpoch_inf_unchecked(1.0, 0.5, 1e-15).unwrap().value, 0.0);
        // a = -1 has modulus one but every factor is positive
        assert!(qpoch_inf(-1.0, 0.5, 1e-15).is_ok());
        assert!(qpoch_inf(0.5, 1.0, 1e-15).is_err());
    }

    #[test]
    fn complex_pochhammer_matches_real_on_real_axis() {
        let r = qpoch_inf(0.3, 0.6, 1e-16).unwrap().value;
        let z = qpoch_inf(c(0.3), 0.6, 1e-16).unwrap().value;
        assert_relative_eq!(z.re, r, max_relative = 1e-15);
        assert_eq!(z.im, 0.0);
    }

    #[test]
    fn scale_and_difference() {
        let f = CoefficientVector::from_real(&[1.0, 1.0]);
        assert_eq!(f.scale(1.0), f);
        assert_eq!(f.scale(0.5), CoefficientVector::from_real(&[1.0, 0.5]));
        let y2 = CoefficientVector::from_real(&[0.0, 0.0, 1.0]);
        assert_eq!(y2.scale(0.5).coeffs[2], c(0.25));
        assert!(CoefficientVector::from_real(&[3.0]).q_diff(0.5).coeffs.iter().all(|z| z.norm() == 0.0));
        assert_eq!(CoefficientVector::from_real(&[0.0, 1.0]).q_diff(0.5).coeffs, vec![c(1.0)]);
        let d = y2.q_diff(0.5);
        assert_eq!(d.coeffs, vec![c(0.0), c(1.5)]);
    }

    #[test]
    fn q_diff_matches_difference_quotient() {
        let f = CoefficientVector::from_real(&[0.3, -1.0, 2.0, 0.7]);
        let q = 0.6;
        let y = Complex64::new(0.4, 0.2);
        let lhs = f.q_diff(q).eval(y);
        let rhs = (f.eval(y) - f.eval(y * q)) / ((1.0 - q) * y);
        assert_relative_eq!(lhs.re, rhs.re, epsilon = 1e-13);
        assert_relative_eq!(lhs.im, rhs.im, epsilon = 1e-13);
    }

    #[test]
    fn monomial_norm_values() {
        assert_eq!(monomial_norm(0, 0.5), 1.0);
        assert_relative_eq!(monomial_norm(1, 0.5), 2f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(monomial_norm(2, 0.5), 0.5f64.sqrt() / (0.5f64 * 0.75).sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn monomial_norm_recurrence_matches_closed_form() {
        for q in [0.3, 0.5, 0.9, 0.99] {
            let running = monomial_norms(201, q);
            let mut log_poch = 0.0;
            for n in 0..=200usize {
                if n > 0 {
                    log_poch += (1.0 - q.powi(n as i32)).ln();
                }
                let log_direct = (n * n.saturating_sub(1)) as f64 / 4.0 * q.ln() - 0.5 * log_poch;
                let r = running[n];
                if r.is_normal() && r > 1e-280 {
                    assert_relative_eq!(r.ln(), log_direct, epsilon = 1e-13 * log_direct.abs().max(1.0));
                    assert_relative_eq!(r, log_direct.exp(), max_relative = 1e-13 * (1.0 + log_direct.abs()));
                }
            }
        }
    }

    #[test]
    fn fock_monomials_are_orthonormal() {
        let ctx = DeformationContext::new(0.5).unwrap();
        let e0 = fock_monomial(0, &ctx).unwrap();
        assert_relative_eq!(fock_inner(&e0, &e0, &ctx).unwrap().re, 1.0, epsilon = 1e-15);
        let e1 = fock_monomial(1, &ctx).unwrap();
        let e2 = fock_monomial(2, &ctx).unwrap();
        assert_eq!(fock_inner(&e1, &e2, &ctx).unwrap(), c(0.0));
        for n in 0..30 {
            let en = fock_monomial(n, &ctx).unwrap();
            assert_relative_eq!(fock_inner(&en, &en, &ctx).unwrap().re, 1.0, epsilon = 1e-13);
        }
        assert!(fock_monomial(64, &ctx).is_err());
        let y = CoefficientVector::from_real(&[0.0, 1.0]);
        assert_relative_eq!(fock_inner(&y, &y, &ctx).unwrap().re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn generators_realized_by_scale_and_difference() {
        for q in [0.3, 0.5, 0.8] {
            let ctx = DeformationContext::new(q).unwrap().with_fock_dim(40).unwrap();
            let raise = (q / (1.0 - q)).sqrt();
            let lower = (q * (1.0 - q)).sqrt();
            for n in 0..38 {
                let en = fock_monomial(n, &ctx).unwrap();
                // I₋ eₙ = sqrt(qⁿ[n]) e_{n-1}
                let im = en.q_diff(q).scaled_by(c(lower));
                if n > 0 {
                    let expect = fock_monomial(n - 1, &ctx)
                        .unwrap()
                        .scaled_by(c((q.powi(n as i32) * q_number(n as f64, q)).sqrt()));
                    for (a, b) in im.coeffs.iter().zip(&expect.coeffs) {
                        assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0), "I- q={q} n={n}");
                    }
                } else {
                    assert!(im.coeffs.iter().all(|z| z.norm() == 0.0));
                }
                // I₊ eₙ = sqrt(q^{n+1}[n+1]) e_{n+1}
                let ip = en.scale(q).times_y().scaled_by(c(raise));
                let expect = fock_monomial(n + 1, &ctx)
                    .unwrap()
                    .scaled_by(c((q.powi(n as i32 + 1) * q_number(n as f64 + 1.0, q)).sqrt()));
                for (a, b) in ip.coeffs.iter().zip(&expect.coeffs) {
                    assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0), "I+ q={q} n={n}");
                }
                // q^{I₀} eₙ = qⁿ eₙ
                let w = en.scale(q);
                let expect = en.scaled_by(c(q.powi(n as i32)));
                for (a, b) in w.coeffs.iter().zip(&expect.coeffs) {
                    assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn qpoch_step_is_exact(a in -2.0f64..2.0, q in 0.01f64..0.99, n in 0usize..60) {
            let lhs = qpoch(a, q, n + 1);
            let mut qn = 1.0;
            for _ in 0..n { qn *= q; }
            prop_assert_eq!(lhs, qpoch(a, q, n) * (1.0 - a * qn));
        }

        #[test]
        fn qpoch_inf_is_stable_under_tighter_tolerance(a in -1.0f64..0.99, q in 0.05f64..0.99) {
            let coarse = qpoch_inf(a, q, 1e-12).unwrap().value;
            let fine = qpoch_inf(a, q, 1e-13).unwrap().value;
            // dropped factors multiply to about 1 - tol / (1 - q)
            prop_assert!((coarse - fine).abs() <= 2e-12 / (1.0 - q) * fine.abs().max(1e-300));
        }

        #[test]
        fn fock_inner_is_hermitian_and_positive(
            re1 in proptest::collection::vec(-1.0f64..1.0, 8),
            im1 in proptest::collection::vec(-1.0f64..1.0, 8),
            re2 in proptest::collection::vec(-1.0f64..1.0, 8),
            im2 in proptest::collection::vec(-1.0f64..1.0, 8),
        ) {
            let ctx = DeformationContext::new(0.6).unwrap();
            let f1 = CoefficientVector::new(re1.iter().zip(&im1).map(|(r, i)| Complex64::new(*r, *i)).collect());
            let f2 = CoefficientVector::new(re2.iter().zip(&im2).map(|(r, i)| Complex64::new(*r, *i)).collect());
            let a = fock_inner(&f1, &f2, &ctx).unwrap();
            let b = fock_inner(&f2, &f1, &ctx).unwrap();
            prop_assert!((a - b.conj()).norm() <= 1e-12 * a.norm().max(1.0));
            let n1 = fock_inner(&f1, &f1, &ctx).unwrap();
            prop_assert!(n1.im.abs() <= 1e-12 * n1.re.abs().max(1.0));
            if f1.coeffs.iter().any(|z| z.norm() > 0.0) {
                prop_assert!(n1.re > 0.0);
            }
        }
    }
}
