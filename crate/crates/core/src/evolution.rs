//! Harmonic time evolution on the position lattice: the summation kernel
//! `K^τ`, the rescaled fractional Fourier transform `Φ(τ)`, and the
//! Heisenberg rotation of `Q` into `P`.
//!
//! In mode space `Φ(τ)` is `e^{iτ I₀}`, so on a rescaled mode
//! `√w pₖ` it acts by the phase `e^{ikτ}`. The kernel entries are
//!
//! ```text
//! K^τ(x, x′) = e^{iτ/2} c(x′) Σ_{n<N} pₙ(x) pₙ(x′) e^{inτ}
//! Φ(x, x′; τ) = e^{-iτ/2} sqrt(w(x) / w(x′)) K^τ(x, x′)
//! ```
//!
//! with `c(±qᵐ) = c_m` and `w(x) = (q²x²; q²)_∞`. The spectral weight sits
//! on the summed variable `x′`, so `evolve` is a plain matrix-vector product.
//!
//! Two truncations limit the kernel: the mode sum stops at `N`, and the
//! lattice window stops at level `S`. Both are reported per level, and
//! [`EvolutionKernel::trusted_depth`] gives the levels on which entrywise
//! identities hold to a requested tolerance.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::fock::{block_max, build_P, build_Q};
use crate::hilbert::{paired_sum, LatticeFunction};
use crate::qcore::{qpoch_inf, DeformationContext};
use crate::qhermite::{lattice_window, window_modes, Kind, LatticeMeasure, LatticePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelVariant {
    RawK,
    RescaledPhi,
}

/// Kernel matrix over a lattice window with its truncation data.
#[derive(Debug, Clone)]
pub struct EvolutionKernel {
    pub tau: f64,
    pub q: f64,
    pub variant: KernelVariant,
    pub n_max: usize,
    pub points: Vec<LatticePoint>,
    /// Entry `(i, j)` is the kernel at `(points[i], points[j])`.
    pub matrix: DMatrix<Complex64>,
    /// `Σ_{s ≥ S} 2 c_s`, the measure outside the window.
    pub lattice_tail: f64,
    /// Per level: the larger of the completeness defect of the mode sum,
    /// `1 - c_s Σ_{n<N} pₙ(±qˢ)²`, and the lattice tail relative to
    /// `2 c_s`.
    pub level_defects: Vec<f64>,
}

impl EvolutionKernel {
    pub fn dim(&self) -> usize {
        self.points.len()
    }

    /// Number of leading levels whose defect is at most `tol`.
    pub fn trusted_depth(&self, tol: f64) -> usize {
        self.level_defects.iter().take_while(|d| **d <= tol).count()
    }

    /// Whether entries touching level `s` are outside the trusted depth for
    /// `tol`.
    pub fn low_confidence(&self, level: usize, tol: f64) -> bool {
        level >= self.trusted_depth(tol)
    }

    /// `Φ F` for a rescaled position function on the same window.
    pub fn apply(&self, f: &LatticeFunction) -> Result<LatticeFunction> {
        if self.variant != KernelVariant::RescaledPhi {
            return Err(Error::Domain("only the rescaled kernel acts on functions".into()));
        }
        f.expect(Kind::Position, true)?;
        if f.points != self.points {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: f.len(),
            });
        }
        let v = nalgebra::DVector::from_column_slice(&f.values);
        let out = &self.matrix * v;
        LatticeFunction::new(Kind::Position, f.points.clone(), out.iter().copied().collect(), true)
    }
}

struct WindowData {
    modes: Vec<Vec<f64>>,
    spectral: Vec<f64>,
    weights: Vec<f64>,
    lattice_tail: f64,
    level_defects: Vec<f64>,
}

fn window_data(points: &[LatticePoint], ctx: &DeformationContext) -> Result<WindowData> {
    let depth = points.iter().map(|p| p.level() + 1).max().unwrap_or(1);
    let measure = LatticeMeasure::new(&ctx.clone().with_lattice_depth(depth)?)?;
    let n = ctx.fock_dim();
    let modes = window_modes(points, n, ctx.q());
    let spectral: Vec<f64> = points.iter().map(|p| measure.spectral(p.level())).collect();
    let weights = points.iter().map(|p| measure.weight(p.level())).collect();
    let mut level_defects: Vec<f64> = (0..depth).map(|s| measure.level_defect(s)).collect();
    for (i, pt) in points.iter().enumerate() {
        let sum: f64 = modes[i].iter().map(|v| v * v).sum();
        let defect = (1.0 - spectral[i] * sum).abs();
        let slot = &mut level_defects[pt.level()];
        *slot = slot.max(defect);
    }
    Ok(WindowData {
        modes,
        spectral,
        weights,
        lattice_tail: measure.tail_mass(),
        level_defects,
    })
}

// Σ_{n<N} pₙ(x) pₙ(x′) e^{inτ} for all window pairs.
fn bilinear_sum(data: &WindowData, n: usize, tau: f64) -> DMatrix<Complex64> {
    let m = data.modes.len();
    let t = tau.rem_euclid(TAU);
    let phases: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(1.0, (k as f64 * t).rem_euclid(TAU)))
        .collect();
    let left = DMatrix::from_fn(m, n, |i, k| phases[k] * data.modes[i][k]);
    let right = DMatrix::from_fn(n, m, |k, j| Complex64::new(data.modes[j][k], 0.0));
    left * right
}

fn assemble(
    points: Vec<LatticePoint>,
    tau: f64,
    variant: KernelVariant,
    ctx: &DeformationContext,
) -> Result<EvolutionKernel> {
    if !tau.is_finite() {
        return Err(Error::Domain("tau must be finite".into()));
    }
    let data = window_data(&points, ctx)?;
    let n = ctx.fock_dim();
    let mut matrix = bilinear_sum(&data, n, tau);
    let prefactor = Complex64::from_polar(1.0, tau / 2.0);
    for j in 0..points.len() {
        for i in 0..points.len() {
            let entry = &mut matrix[(i, j)];
            *entry *= data.spectral[j];
            match variant {
                KernelVariant::RawK => *entry *= prefactor,
                // e^{-iτ/2} e^{iτ/2} = 1
                KernelVariant::RescaledPhi => *entry *= (data.weights[i] / data.weights[j]).sqrt(),
            }
        }
    }
    Ok(EvolutionKernel {
        tau,
        q: ctx.q(),
        variant,
        n_max: n,
        points,
        matrix,
        lattice_tail: data.lattice_tail,
        level_defects: data.level_defects,
    })
}

/// Summation kernel `K^τ` over the context window.
#[allow(non_snake_case)]
pub fn kernel_K(tau: f64, ctx: &DeformationContext) -> Result<EvolutionKernel> {
    assemble(lattice_window(ctx), tau, KernelVariant::RawK, ctx)
}

/// Fractional Fourier transform `Φ(τ)` over the context window.
pub fn fractional_ft(tau: f64, ctx: &DeformationContext) -> Result<EvolutionKernel> {
    assemble(lattice_window(ctx), tau, KernelVariant::RescaledPhi, ctx)
}

/// `Φ(τ)` over an arbitrary set of lattice points.
pub fn fractional_ft_on(points: Vec<LatticePoint>, tau: f64, ctx: &DeformationContext) -> Result<EvolutionKernel> {
    assemble(points, tau, KernelVariant::RescaledPhi, ctx)
}

/// `Φ(τ) F` for a rescaled position function.
pub fn evolve(f: &LatticeFunction, tau: f64, ctx: &DeformationContext) -> Result<LatticeFunction> {
    f.expect(Kind::Position, true)?;
    fractional_ft_on(f.points.clone(), tau, ctx)?.apply(f)
}

/// `(q²; q²)_∞ (-1; q)_∞`, the normalization of the standard product.
pub fn standard_normalization(ctx: &DeformationContext) -> Result<f64> {
    let q = ctx.q();
    let a = qpoch_inf(q * q, q * q, ctx.tail_tol())?.value;
    let b = qpoch_inf(-1.0, q, ctx.tail_tol())?.value;
    Ok(a * b)
}

/// `⟨F₁, F₂⟩ = Σ_x |x| F₁(x) F₂(x)* / ((q²;q²)_∞ (-1;q)_∞)` for rescaled
/// functions.
pub fn standard_inner(f1: &LatticeFunction, f2: &LatticeFunction, ctx: &DeformationContext) -> Result<Complex64> {
    f1.expect(f1.kind, true)?;
    f2.expect(f1.kind, true)?;
    if f1.points != f2.points {
        return Err(Error::DimensionMismatch {
            left: f1.len(),
            right: f2.len(),
        });
    }
    let z = standard_normalization(ctx)?;
    let w: Vec<f64> = f1.points.iter().map(|p| p.value().abs() / z).collect();
    Ok(paired_sum(&f1.points, &w, &f1.values, &f2.values))
}

fn point_lattice_weights(points: &[LatticePoint], ctx: &DeformationContext) -> Result<Vec<f64>> {
    let depth = points.iter().map(|p| p.level() + 1).max().unwrap_or(1);
    let measure = LatticeMeasure::new(&ctx.clone().with_lattice_depth(depth)?)?;
    Ok(points.iter().map(|p| measure.weight(p.level())).collect())
}

/// `F(x) = sqrt((q²x²; q²)_∞) f(x)`.
pub fn rescale(f: &LatticeFunction, ctx: &DeformationContext) -> Result<LatticeFunction> {
    f.expect(f.kind, false)?;
    let w = point_lattice_weights(&f.points, ctx)?;
    let values = f.values.iter().zip(&w).map(|(v, w)| v * w.sqrt()).collect();
    LatticeFunction::new(f.kind, f.points.clone(), values, true)
}

/// Inverse of [`rescale`].
pub fn unrescale(f: &LatticeFunction, ctx: &DeformationContext) -> Result<LatticeFunction> {
    f.expect(f.kind, true)?;
    let w = point_lattice_weights(&f.points, ctx)?;
    let values = f.values.iter().zip(&w).map(|(v, w)| v / w.sqrt()).collect();
    LatticeFunction::new(f.kind, f.points.clone(), values, false)
}

/// Read a momentum function as a position function; the two lattices
/// coincide pointwise.
pub fn transplant(f: &LatticeFunction) -> Result<LatticeFunction> {
    f.expect(Kind::Momentum, f.rescaled)?;
    LatticeFunction::new(Kind::Position, f.points.clone(), f.values.clone(), f.rescaled)
}

/// Largest entry of `e^{iτH} Q e^{-iτH} - (cos τ Q + sin τ P)` on the
/// leading `(N-2) × (N-2)` block, with `e^{iτH} = diag(e^{iτ(n+½)})`.
pub fn heisenberg_rotation_check(tau: f64, ctx: &DeformationContext) -> f64 {
    let n = ctx.fock_dim();
    let q = build_Q(ctx).to_dense();
    let p = build_P(ctx).to_dense();
    let phase = |k: usize| Complex64::from_polar(1.0, tau * (k as f64 + 0.5));
    let rotated = DMatrix::from_fn(n, n, |i, j| phase(i) * q[(i, j)] * phase(j).conj());
    let expect = q * Complex64::new(tau.cos(), 0.0) + p * Complex64::new(tau.sin(), 0.0);
    block_max(&(rotated - expect), n.saturating_sub(2))
}

/// Largest entry of `a - b` restricted to rows and columns with level
/// below `depth`.
pub fn window_block_residual(
    points: &[LatticePoint],
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
    depth: usize,
) -> f64 {
    let idx: Vec<usize> = (0..points.len()).filter(|&i| points[i].level() < depth).collect();
    let mut worst: f64 = 0.0;
    for &i in &idx {
        for &j in &idx {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

/// `M^{1/2} Φ M^{-1/2}` for the standard Gram matrix `M = diag(|x|)` is
/// unitary up to truncation; returns the largest entry of `U†U - I` over
/// levels below `depth`.
pub fn unitarity_defect(kernel: &EvolutionKernel, depth: usize) -> f64 {
    let m = kernel.dim();
    let s: Vec<f64> = kernel.points.iter().map(|p| p.value().abs().sqrt()).collect();
    let u = DMatrix::from_fn(m, m, |i, j| kernel.matrix[(i, j)] * (s[i] / s[j]));
    let gram = u.adjoint() * u;
    window_block_residual(&kernel.points, &gram, &DMatrix::identity(m, m), depth)
}
