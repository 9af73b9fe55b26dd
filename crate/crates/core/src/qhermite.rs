//! Discrete q-Hermite polynomials of type I and the orthonormal mode
//! polynomials `pₙ(x)` on the lattice `{±qˢ}`.
//!
//! Two evaluation routes exist for `pₙ`:
//!
//! * [`mode_poly`] runs the three-term recurrence forward. It evaluates the
//!   polynomial at any real `x` and is the right tool off the lattice.
//! * [`lattice_modes`] is for lattice points. There the values `pₙ(±qˢ)`
//!   form the decaying (minimal) solution of the recurrence once `n` passes
//!   the turning index (roughly `2s`), which forward iteration cannot follow
//!   in floating point: rounding feeds the growing solution and the error
//!   grows like `q^{-n²/4}`. It iterates forward up to the turning index and
//!   takes ratios from a backward continued fraction beyond it.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::qcore::{qpoch, qpoch_inf, DeformationContext};

/// Sign of a lattice point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn from_i64(v: i64) -> Option<Sign> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// A point `±qˢ` of the position (and momentum) spectrum.
///
/// Identity and ordering are by `(sign, level)`; the cached value is never
/// compared.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LatticePoint {
    sign: Sign,
    level: usize,
    value: f64,
}

impl LatticePoint {
    pub fn new(sign: Sign, level: usize, q: f64) -> Self {
        LatticePoint {
            sign,
            level,
            value: sign.factor() * q.powi(level as i32),
        }
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn mirrored(&self) -> Self {
        LatticePoint {
            sign: self.sign.flip(),
            level: self.level,
            value: -self.value,
        }
    }
}

impl PartialEq for LatticePoint {
    fn eq(&self, other: &Self) -> bool {
        self.sign == other.sign && self.level == other.level
    }
}

impl Eq for LatticePoint {}

impl Hash for LatticePoint {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.sign.hash(state);
        self.level.hash(state);
    }
}

impl PartialOrd for LatticePoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LatticePoint {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.sign, self.level).cmp(&(other.sign, other.level))
    }
}

/// The lattice window `+q⁰ … +q^{S-1}, -q⁰ … -q^{S-1}` of a context.
pub fn lattice_window(ctx: &DeformationContext) -> Vec<LatticePoint> {
    let q = ctx.q();
    let depth = ctx.lattice_depth();
    [Sign::Plus, Sign::Minus]
        .into_iter()
        .flat_map(|sign| (0..depth).map(move |s| LatticePoint::new(sign, s, q)))
        .collect()
}

/// Off-diagonal Jacobi coefficient `aₙ = sqrt(qⁿ (1 - q^{n+1}))`.
pub fn jacobi_coeff(n: usize, q: f64) -> f64 {
    let qn = q.powi(n as i32);
    (qn * (1.0 - qn * q)).sqrt()
}

/// `a_0, …, a_{len-1}`.
pub fn jacobi_coeffs(len: usize, q: f64) -> Vec<f64> {
    (0..len).map(|n| jacobi_coeff(n, q)).collect()
}

/// Discrete q-Hermite polynomial of type I, `hₙ(z; q)`, by the forward
/// recurrence `z hₙ = h_{n+1} + q^{n-1}(1 - qⁿ) h_{n-1}`.
pub fn hermite_eval(n: usize, z: f64, q: f64) -> f64 {
    hermite_eval_all(n + 1, z, q)[n]
}

/// `h_0(z), …, h_{count-1}(z)`.
pub fn hermite_eval_all(count: usize, z: f64, q: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let (mut prev, mut cur) = (0.0, 1.0);
    let mut qn = 1.0; // qⁿ
    for n in 0..count {
        out.push(cur);
        // q^{n-1}(1 - qⁿ), zero at n = 0
        let b = if n == 0 { 0.0 } else { qn / q * (1.0 - qn) };
        let next = z * cur - b * prev;
        prev = cur;
        cur = next;
        qn *= q;
    }
    out
}

/// Scale linking the two families: `hₙ(x) = (q;q)ₙ^{1/2} q^{n(n-1)/4} pₙ(x)`.
pub fn hermite_scale(n: usize, q: f64) -> f64 {
    qpoch(q, q, n).sqrt() * q.powf((n * n.saturating_sub(1)) as f64 / 4.0)
}

/// Mode polynomial `pₙ(x)` by the forward recurrence
/// `x pₙ = aₙ p_{n+1} + a_{n-1} p_{n-1}`, `p_{-1} = 0`, `p_0 = 1`.
pub fn mode_poly(n: usize, x: f64, q: f64) -> f64 {
    mode_polys(n + 1, x, q)[n]
}

/// `p_0(x), …, p_{count-1}(x)` by forward recurrence.
pub fn mode_polys(count: usize, x: f64, q: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let (mut prev, mut cur) = (0.0, 1.0);
    let mut a_prev = 0.0;
    for n in 0..count {
        out.push(cur);
        let a_n = jacobi_coeff(n, q);
        let next = (x * cur - a_prev * prev) / a_n;
        prev = cur;
        cur = next;
        a_prev = a_n;
    }
    out
}

// Contamination by the growing solution is damped by ((a_k + a_{k-1}) / x)²
// per backward step; start deep enough that the accumulated damping
// exceeds e^{-DAMPING_LOG}.
const DAMPING_LOG: f64 = 92.0;
const MAX_BACKWARD_START: usize = 1 << 22;

fn backward_start(count: usize, x: f64, q: f64) -> usize {
    let mut acc = 0.0;
    let mut a_prev = 0.0;
    let mut k = 0usize;
    loop {
        let a_k = jacobi_coeff(k, q);
        let rho = (a_k + a_prev) / x;
        if k > count && rho < 1.0 {
            acc += 2.0 * rho.ln();
            if acc < -DAMPING_LOG || a_k == 0.0 {
                return k;
            }
        }
        if k >= MAX_BACKWARD_START {
            return k;
        }
        a_prev = a_k;
        k += 1;
    }
}

// Last index of the region where the forward recurrence is stable: beyond
// it `a_n + a_{n-1} < |x|` for good and the wanted solution decays.
fn turning_index(x: f64, q: f64) -> usize {
    let mut last = 0;
    let mut a_prev = 0.0;
    let mut n = 0usize;
    loop {
        let a_n = jacobi_coeff(n, q);
        if a_n + a_prev >= x {
            last = n;
        } else if a_n <= a_prev || a_n == 0.0 {
            return last;
        }
        if n >= MAX_BACKWARD_START {
            return last;
        }
        a_prev = a_n;
        n += 1;
    }
}

/// Values `p_0(x), …, p_{count-1}(x)` at a lattice point.
///
/// The forward recurrence runs up to the turning index, where the
/// polynomial stops growing or oscillating; past it the values follow the
/// minimal solution, whose ratios come from a backward continued fraction.
/// Parity `pₙ(-x) = (-1)ⁿ pₙ(x)` is applied exactly.
pub fn lattice_modes(pt: &LatticePoint, count: usize, q: f64) -> Vec<f64> {
    if count == 0 {
        return Vec::new();
    }
    let x = pt.value().abs();
    let turn = turning_index(x, q).min(count - 1);
    let mut out = mode_polys(turn + 1, x, q);
    if count > turn + 1 {
        let start = backward_start(count, x, q);
        // r_n = p_n / p_{n-1} = a_{n-1} / (x - a_n r_{n+1})
        let mut ratios = vec![0.0; count];
        let mut r_next = 0.0;
        let mut a_n = jacobi_coeff(start, q);
        for n in (turn + 1..=start).rev() {
            let a_prev = jacobi_coeff(n - 1, q);
            let r = a_prev / (x - a_n * r_next);
            if n < count {
                ratios[n] = r;
            }
            r_next = r;
            a_n = a_prev;
        }
        let mut v = out[turn];
        for r in &ratios[turn + 1..] {
            v *= r;
            out.push(v);
        }
    }
    if pt.sign() == Sign::Minus {
        for (n, val) in out.iter_mut().enumerate() {
            if n % 2 == 1 {
                *val = -*val;
            }
        }
    }
    out
}

/// Lattice weight `(q^{2s+2}; q²)_∞ = (q² x²; q²)_∞` at `x = ±qˢ`.
pub fn lattice_weight(pt: &LatticePoint, ctx: &DeformationContext) -> Result<f64> {
    level_weight(pt.level(), ctx)
}

fn level_weight(level: usize, ctx: &DeformationContext) -> Result<f64> {
    let q = ctx.q();
    let q2 = q * q;
    qpoch_inf(q2.powi(level as i32 + 1), q2, ctx.tail_tol()).map(|t| t.value)
}

/// `2 (q;q)_∞ (-q;q)_∞²`, the total mass of the unnormalized lattice measure.
pub fn measure_normalization(ctx: &DeformationContext) -> Result<f64> {
    let q = ctx.q();
    let a = qpoch_inf(q, q, ctx.tail_tol())?.value;
    let b = qpoch_inf(-q, q, ctx.tail_tol())?.value;
    Ok(2.0 * a * b * b)
}

/// Spectral weight `c_s = qˢ (q^{2s+2}; q²)_∞ / (2 (q;q)_∞ (-q;q)_∞²)` of
/// the lattice points `±qˢ`.
pub fn norm_c(level: usize, ctx: &DeformationContext) -> Result<f64> {
    let z = measure_normalization(ctx)?;
    Ok(ctx.q().powi(level as i32) * level_weight(level, ctx)? / z)
}

/// Normalized `h̃ₙ(±qˢ) = sqrt(c_s) pₙ(±qˢ)`.
pub fn normalized_hermite(n: usize, pt: &LatticePoint, ctx: &DeformationContext) -> Result<f64> {
    if n >= ctx.fock_dim() {
        return Err(Error::IndexOutOfRange {
            index: n,
            bound: ctx.fock_dim(),
        });
    }
    let c = norm_c(pt.level(), ctx)?;
    Ok(c.sqrt() * lattice_modes(pt, n + 1, ctx.q())[n])
}

/// Precomputed lattice weights and spectral weights over a context window.
#[derive(Debug, Clone)]
pub struct LatticeMeasure {
    q: f64,
    normalization: f64,
    weights: Vec<f64>,
    spectral: Vec<f64>,
    tail_mass: f64,
}

impl LatticeMeasure {
    pub fn new(ctx: &DeformationContext) -> Result<Self> {
        let q = ctx.q();
        let normalization = measure_normalization(ctx)?;
        let weights = (0..ctx.lattice_depth())
            .map(|s| level_weight(s, ctx))
            .collect::<Result<Vec<_>>>()?;
        let spectral = weights
            .iter()
            .enumerate()
            .map(|(s, w)| q.powi(s as i32) * w / normalization)
            .collect();
        // Σ_{s ≥ S} 2 c_s, summed directly to avoid cancellation against 1
        let mut tail_mass = 0.0;
        let mut s = ctx.lattice_depth();
        loop {
            let term = 2.0 * q.powi(s as i32) * level_weight(s, ctx)? / normalization;
            tail_mass += term;
            if term < 1e-18 * tail_mass.max(1e-300) || term == 0.0 {
                break;
            }
            s += 1;
        }
        Ok(LatticeMeasure {
            q,
            normalization,
            weights,
            spectral,
            tail_mass,
        })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    /// `2 (q;q)_∞ (-q;q)_∞²`.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// `(q^{2s+2}; q²)_∞`.
    pub fn weight(&self, level: usize) -> f64 {
        self.weights[level]
    }

    /// `c_s`.
    pub fn spectral(&self, level: usize) -> f64 {
        self.spectral[level]
    }

    /// Mass of the constant mode `p_0 = 1` on lattice levels outside the
    /// window, i.e. `Σ_{s ≥ S} 2 c_s`.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Estimated relative truncation error of window sums at level `s`,
    /// `tail_mass / (2 c_s)`.
    pub fn level_defect(&self, level: usize) -> f64 {
        self.tail_mass / (2.0 * self.spectral[level])
    }

    /// Number of leading levels whose [`level_defect`](Self::level_defect)
    /// stays within `tol`.
    pub fn trusted_depth(&self, tol: f64) -> usize {
        (0..self.depth())
            .take_while(|&s| self.level_defect(s) <= tol)
            .count()
    }
}

/// Mode values `pₙ(x)` at every point of a window, one row per point.
pub(crate) fn window_modes(points: &[LatticePoint], count: usize, q: f64) -> Vec<Vec<f64>> {
    points
        .par_iter()
        .map(|pt| lattice_modes(pt, count, q))
        .collect()
}

/// Left- and right-hand sides of the summed orthogonality relation in the
/// `hₙ` normalization,
/// `Σ_s (q^{2s+2};q²)_∞ qˢ (h_k h_m(qˢ) + h_k h_m(-qˢ))` against
/// `2 δ_{km} (q;q)_∞ (-q;q)_∞² (q;q)_m q^{m(m-1)/2}`, truncated at the
/// lattice depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthogonalitySum {
    pub lhs: f64,
    pub rhs: f64,
    /// `|Σ c_s (p_k p_m(qˢ) + p_k p_m(-qˢ)) - δ_{km}|`.
    pub residual: f64,
}

pub fn orthogonality_sum(k: usize, m: usize, ctx: &DeformationContext) -> Result<OrthogonalitySum> {
    let n_max = ctx.fock_dim();
    for idx in [k, m] {
        if idx >= n_max {
            return Err(Error::IndexOutOfRange { index: idx, bound: n_max });
        }
    }
    let q = ctx.q();
    let measure = LatticeMeasure::new(ctx)?;
    let count = k.max(m) + 1;
    let mut normalized = 0.0;
    for s in 0..measure.depth() {
        let plus = lattice_modes(&LatticePoint::new(Sign::Plus, s, q), count, q);
        let minus = lattice_modes(&LatticePoint::new(Sign::Minus, s, q), count, q);
        // pair ±qˢ before accumulating
        let pair = plus[k] * plus[m] + minus[k] * minus[m];
        normalized += measure.spectral(s) * pair;
    }
    let delta = if k == m { 1.0 } else { 0.0 };
    let scale = hermite_scale(k, q) * hermite_scale(m, q);
    let z = measure.normalization();
    let rhs = if k == m {
        z * qpoch(q, q, m) * q.powf((m * m.saturating_sub(1)) as f64 / 2.0)
    } else {
        0.0
    };
    Ok(OrthogonalitySum {
        lhs: normalized * z * scale,
        rhs,
        residual: (normalized - delta).abs(),
    })
}

/// Residual of the summed orthogonality relation for the orthonormal
/// polynomials `p_k`, `p_m` over the lattice window.
pub fn orthogonality_residual(k: usize, m: usize, ctx: &DeformationContext) -> Result<f64> {
    orthogonality_sum(k, m, ctx).map(|o| o.residual)
}

/// `|Σ c_s (p_k p_m(qˢ) + p_k p_m(-qˢ)) - δ_{km}|` for all `k, m ≤ max_degree`
/// at once; entry `(k, m)` matches [`orthogonality_residual`].
pub fn orthogonality_residuals(max_degree: usize, ctx: &DeformationContext) -> Result<DMatrix<f64>> {
    let q = ctx.q();
    let measure = LatticeMeasure::new(ctx)?;
    let count = max_degree + 1;
    let levels: Vec<usize> = (0..measure.depth()).collect();
    let rows: Vec<Vec<f64>> = levels
        .par_iter()
        .map(|&s| lattice_modes(&LatticePoint::new(Sign::Plus, s, q), count, q))
        .collect();
    let mut out = DMatrix::zeros(count, count);
    for k in 0..count {
        for m in 0..count {
            let mut sum = 0.0;
            for (s, p) in rows.iter().enumerate() {
                // the -qˢ term equals the +qˢ term up to (-1)^{k+m}
                let pair = if (k + m) % 2 == 0 { 2.0 * p[k] * p[m] } else { 0.0 };
                sum += measure.spectral(s) * pair;
            }
            let delta = if k == m { 1.0 } else { 0.0 };
            out[(k, m)] = (sum - delta).abs();
        }
    }
    Ok(out)
}

/// Largest `|c_s Σ_{n<N} pₙ(x) pₙ(x′) - δ_{x x′}|` over window points with
/// level below `max_level`, both sign combinations included.
pub fn dual_orthogonality_defect(ctx: &DeformationContext, max_level: usize) -> Result<f64> {
    let q = ctx.q();
    let measure = LatticeMeasure::new(ctx)?;
    let points: Vec<_> = lattice_window(ctx)
        .into_iter()
        .filter(|p| p.level() < max_level)
        .collect();
    let modes = window_modes(&points, ctx.fock_dim(), q);
    let mut worst: f64 = 0.0;
    for (i, pi) in points.iter().enumerate() {
        for (j, pj) in points.iter().enumerate() {
            let dot: f64 = modes[i].iter().zip(&modes[j]).map(|(a, b)| a * b).sum();
            // c_s and c_{s'} coincide whenever the target is nonzero
            let weight = (measure.spectral(pi.level()) * measure.spectral(pj.level())).sqrt();
            let target = if pi == pj { 1.0 } else { 0.0 };
            worst = worst.max((weight * dot - target).abs());
        }
    }
    Ok(worst)
}

/// Position or momentum realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Position,
    Momentum,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Position => "position",
            Kind::Momentum => "momentum",
        }
    }
}

/// `iⁿ`.
pub fn i_pow(n: usize) -> Complex64 {
    match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Values of `pₙ(x)` (position) or `gₙ(p) = iⁿ pₙ(p)` (momentum) over the
/// lattice window, degrees `0 … N-1` by rows.
#[derive(Debug, Clone)]
pub struct ModeTable {
    pub kind: Kind,
    pub points: Vec<LatticePoint>,
    pub values: DMatrix<Complex64>,
}

/// Tabulate a [`ModeTable`] over the context window.
pub fn build_mode_table(kind: Kind, ctx: &DeformationContext) -> ModeTable {
    ModeTable::build(kind, ctx)
}

impl ModeTable {
    pub fn build(kind: Kind, ctx: &DeformationContext) -> ModeTable {
        Self::with_degrees(kind, ctx, ctx.fock_dim())
    }

    /// Table of degrees `0 … n-1` over the context window.
    pub fn with_degrees(kind: Kind, ctx: &DeformationContext, n: usize) -> ModeTable {
        let points = lattice_window(ctx);
        let columns = window_modes(&points, n, ctx.q());
        let values = DMatrix::from_fn(n, points.len(), |row, col| {
            let p = Complex64::new(columns[col][row], 0.0);
            match kind {
                Kind::Position => p,
                Kind::Momentum => i_pow(row) * p,
            }
        });
        ModeTable { kind, points, values }
    }

    pub fn degrees(&self) -> usize {
        self.values.nrows()
    }

    pub fn value(&self, n: usize, col: usize) -> Complex64 {
        self.values[(n, col)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ctx(q: f64) -> DeformationContext {
        DeformationContext::new(q).unwrap()
    }

    #[test]
    fn lattice_point_identity_ignores_value() {
        let a = LatticePoint::new(Sign::Plus, 3, 0.5);
        let b = LatticePoint::new(Sign::Plus, 3, 0.5000001);
        assert_eq!(a, b);
        assert!(LatticePoint::new(Sign::Plus, 9, 0.5) < LatticePoint::new(Sign::Minus, 0, 0.5));
        assert_eq!(a.mirrored().value(), -a.value());
        let w = lattice_window(&ctx(0.5));
        assert_eq!(w.len(), 64);
        assert!(w.windows(2).all(|p| p[0] < p[1]));
        assert!(w.iter().all(|p| p.value().abs() <= 1.0 && p.value() != 0.0));
    }

    #[test]
    fn hermite_seeds() {
        for z in [-0.7, 0.0, 0.3, 1.0] {
            assert_eq!(hermite_eval(0, z, 0.4), 1.0);
            assert_eq!(hermite_eval(1, z, 0.4), z);
        }
        assert_relative_eq!(hermite_eval(2, 1.0, 0.5), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn mode_poly_seeds() {
        assert_eq!(mode_poly(0, 0.37, 0.5), 1.0);
        assert_relative_eq!(mode_poly(1, 0.5, 0.5), 0.5 / 0.5f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn two_routes_to_mode_polys_agree() {
        for q in [0.3, 0.5, 0.8, 0.95] {
            for &x in &[-0.83, -0.41, 0.05, 0.27, 0.66, 0.999] {
                let p = mode_polys(31, x, q);
                let h = hermite_eval_all(31, x, q);
                let scale_max = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                for n in 0..=30 {
                    let via_h = h[n] / hermite_scale(n, q);
                    // compare relative to the running magnitude so zero crossings do not
                    // inflate the relative error
                    let mag = p[..=n].iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
                    assert!(
                        (p[n] - via_h).abs() <= 1e-9 * mag,
                        "q={q} x={x} n={n}: {} vs {via_h} (scale {scale_max})",
                        p[n]
                    );
                }
            }
        }
    }

    // Frozen from a 600-digit forward recurrence (mpmath), which follows the
    // minimal solution exactly at the working precision used there.
    const ORACLE: &[(f64, usize, usize, f64)] = &[
        (0.5, 0, 10, 3.1356195401426739e-7),
        (0.5, 0, 20, 4.6974326472393664e-29),
        (0.5, 2, 10, 0.020249164671089108),
        (0.5, 2, 20, 3.2280049576551067e-18),
        (0.5, 5, 20, -1.772908805465946e-6),
        (0.5, 5, 30, -2.6572679173764242e-28),
        (0.3, 0, 10, 2.1959483293922161e-12),
        (0.3, 2, 20, 1.8052961790481634e-31),
        (0.3, 5, 30, -5.4968071046233658e-49),
        (0.8, 0, 20, 1.0467004786417122e-8),
        (0.8, 0, 30, 1.4365150984953053e-20),
        (0.8, 2, 30, 3.8121050795089721e-15),
        (0.8, 5, 30, -1.7908473434939587e-8),
        (0.95, 3, 60, -1.5790463216532851e-10),
    ];

    #[test]
    fn lattice_modes_match_high_precision_oracle() {
        for &(q, s, n, expect) in ORACLE {
            let got = lattice_modes(&LatticePoint::new(Sign::Plus, s, q), n + 1, q)[n];
            assert_relative_eq!(got, expect, max_relative = 1e-11);
            let mirrored = lattice_modes(&LatticePoint::new(Sign::Minus, s, q), n + 1, q)[n];
            let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(mirrored, parity * got);
        }
    }

    #[test]
    fn lattice_modes_agree_with_forward_recurrence_where_it_is_stable() {
        // forward iteration is reliable while n stays well below 2s
        let q = 0.5;
        let pt = LatticePoint::new(Sign::Plus, 12, q);
        let back = lattice_modes(&pt, 12, q);
        let fwd = mode_polys(12, pt.value(), q);
        for n in 0..12 {
            assert_relative_eq!(back[n], fwd[n], max_relative = 1e-12, epsilon = 1e-14);
        }
    }

    #[test]
    fn lattice_weight_values() {
        let c = ctx(0.5).with_tail_tol(1e-17).unwrap();
        let w0 = lattice_weight(&LatticePoint::new(Sign::Plus, 0, 0.5), &c).unwrap();
        assert_relative_eq!(w0, 0.688_537_537_120_339_7, max_relative = 1e-14);
        let wm = lattice_weight(&LatticePoint::new(Sign::Minus, 0, 0.5), &c).unwrap();
        assert_eq!(w0, wm);
        let mut prev = 0.0;
        for s in 0..40 {
            let w = lattice_weight(&LatticePoint::new(Sign::Plus, s, 0.5), &c).unwrap();
            assert!(w >= prev && w <= 1.0);
            prev = w;
        }
    }

    #[test]
    fn spectral_weight_values() {
        let c = ctx(0.5).with_tail_tol(1e-17).unwrap();
        // (0.25;0.25)_∞ / (2 (0.5;0.5)_∞ (-0.5;0.5)_∞²), from mpmath
        assert_relative_eq!(norm_c(0, &c).unwrap(), 0.209_711_220_897_553_8, max_relative = 1e-13);
        for s in 0..30 {
            let ratio = norm_c(s + 1, &c).unwrap() / norm_c(s, &c).unwrap();
            let expect = 0.5 / (1.0 - 0.5f64.powi(2 * s as i32 + 2));
            assert_relative_eq!(ratio, expect, max_relative = 1e-12);
        }
        assert!(norm_c(200, &c).unwrap() < 1e-50);
    }

    #[test]
    fn spectral_weight_sums_inverse_mode_norm() {
        // c_s = 1 / Σₙ pₙ(qˢ)²
        let c = ctx(0.5);
        for s in [0, 3, 10] {
            let pt = LatticePoint::new(Sign::Plus, s, 0.5);
            let sum: f64 = lattice_modes(&pt, 120, 0.5).iter().map(|v| v * v).sum();
            assert_relative_eq!(norm_c(s, &c).unwrap(), 1.0 / sum, max_relative = 1e-12);
        }
    }

    #[test]
    fn normalized_hermite_ground_value() {
        let c = ctx(0.5).with_tail_tol(1e-17).unwrap();
        let v = normalized_hermite(0, &LatticePoint::new(Sign::Plus, 0, 0.5), &c).unwrap();
        assert_relative_eq!(v, 0.209_711_220_897_553_8f64.sqrt(), max_relative = 1e-13);
        assert!(normalized_hermite(64, &LatticePoint::new(Sign::Plus, 0, 0.5), &c).is_err());
    }

    #[test]
    fn normalized_hermite_columns_and_rows_orthonormal() {
        let c = ctx(0.5).with_fock_dim(90).unwrap().with_lattice_depth(30).unwrap();
        let n = 90;
        let col = |pt: LatticePoint| -> Vec<f64> {
            let w = norm_c(pt.level(), &c).unwrap().sqrt();
            lattice_modes(&pt, n, 0.5).into_iter().map(|v| v * w).collect()
        };
        for s in 0..12 {
            for t in 0..12 {
                let a = col(LatticePoint::new(Sign::Plus, s, 0.5));
                let b = col(LatticePoint::new(Sign::Plus, t, 0.5));
                let m = col(LatticePoint::new(Sign::Minus, t, 0.5));
                let same: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
                let mixed: f64 = a.iter().zip(&m).map(|(x, y)| x * y).sum();
                assert!((same - if s == t { 1.0 } else { 0.0 }).abs() < 1e-12);
                assert!(mixed.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn orthogonality_examples() {
        let c = ctx(0.5).with_lattice_depth(40).unwrap();
        let o = orthogonality_sum(0, 0, &c).unwrap();
        assert!(o.residual < 1e-10);
        assert_relative_eq!(o.lhs, o.rhs, max_relative = 1e-10);
        let odd = orthogonality_sum(0, 1, &c).unwrap();
        assert!(odd.lhs.abs() < 1e-12);
        let c8 = ctx(0.8).with_lattice_depth(80).unwrap();
        // the window itself leaves 2.2856867e-8 (400-digit sum over s < 80)
        let r = orthogonality_residual(2, 4, &c8).unwrap();
        assert_relative_eq!(r, 2.285_686_666e-8, max_relative = 1e-6);
        let deeper = ctx(0.8).with_lattice_depth(100).unwrap();
        assert!(orthogonality_residual(2, 4, &deeper).unwrap() < 1e-8);
        assert!(orthogonality_residual(64, 0, &c).is_err());
    }

    #[test]
    fn batched_orthogonality_matches_pairwise() {
        let c = ctx(0.8).with_lattice_depth(60).unwrap();
        let all = orthogonality_residuals(6, &c).unwrap();
        for k in 0..=6 {
            for m in 0..=6 {
                let one = orthogonality_residual(k, m, &c).unwrap();
                assert!((all[(k, m)] - one).abs() < 1e-14, "{k} {m}");
            }
        }
    }

    #[test]
    fn edge_of_spectrum_near_one() {
        // p_10(1) at q = 0.95, where the values grow before they decay
        let v = lattice_modes(&LatticePoint::new(Sign::Plus, 0, 0.95), 11, 0.95)[10];
        assert_relative_eq!(v, 924.156_240_967_750_05, max_relative = 1e-13);
    }

    #[test]
    fn dual_orthogonality_holds_inside_window() {
        let c = ctx(0.5).with_lattice_depth(20).unwrap().with_fock_dim(70).unwrap();
        assert!(dual_orthogonality_defect(&c, 16).unwrap() < 1e-12);
    }

    #[test]
    fn lattice_measure_trusted_depth_is_monotone_in_tolerance() {
        let m = LatticeMeasure::new(&ctx(0.5).with_lattice_depth(60).unwrap()).unwrap();
        assert!(m.tail_mass() > 0.0 && m.tail_mass() < 1e-15);
        assert!(m.trusted_depth(1e-8) < m.trusted_depth(1e-4));
        assert!(m.trusted_depth(1e-8) >= 30);
    }

    #[test]
    fn mode_table_shapes_and_parity() {
        let c = ctx(0.5).with_fock_dim(12).unwrap().with_lattice_depth(10).unwrap();
        let pos = ModeTable::build(Kind::Position, &c);
        let mom = ModeTable::build(Kind::Momentum, &c);
        assert_eq!(pos.values.shape(), (12, 20));
        for col in 0..20 {
            assert_eq!(pos.value(0, col), Complex64::new(1.0, 0.0));
        }
        let depth = 10;
        for n in 0..12 {
            for s in 0..depth {
                let plus = pos.value(n, s);
                let minus = pos.value(n, depth + s);
                let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
                assert_eq!(minus, plus * parity);
                assert_eq!(pos.value(n, s).im, 0.0);
                assert_eq!(mom.value(n, s), i_pow(n) * plus);
            }
        }
    }

    proptest! {
        #[test]
        fn forward_recurrence_parity_is_exact(x in -1.0f64..1.0, q in 0.05f64..0.98, n in 0usize..40) {
            let a = mode_poly(n, x, q);
            let b = mode_poly(n, -x, q);
            prop_assume!(a.is_finite());
            let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert!((b - parity * a).abs() <= 1e-14 * a.abs().max(1e-300));
        }

        #[test]
        fn lattice_weights_positive_and_bounded(q in 0.05f64..0.98, s in 0usize..200) {
            let c = DeformationContext::new(q).unwrap();
            let w = lattice_weight(&LatticePoint::new(Sign::Plus, s, q), &c).unwrap();
            prop_assert!(w > 0.0 && w <= 1.0);
        }
    }
}
