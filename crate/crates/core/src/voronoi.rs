//! Both sides of the Voronoi summation formula for `τ_{α,β,γ}(n) e(nH/K)`,
//! and of its alternating-sum specialisation for `τ₃(n)(−1)^n`.
//!
//! The right-hand side is assembled from
//!
//! * the dual sum `Σ_ε Σ_{d|K} Σ_{h|d} Σ_m τ_{−α,−β,−γ}(m) S(1, −ε₁ε₂ε₃H̄hm; K/d) F(x)`
//!   with `F(x) = (1/2πi) ∫ φ̃(1−s) Γ(s−α)Γ(s−β)Γ(s−γ) x^{−s} ds`;
//! * the residual terms at the poles `1−α, 1−β, 1−γ` of `D`;
//! * when `φ̃` itself has poles (as `Γ(s)` does for `φ = e^{−t}`), the residues
//!   `Res φ̃(p) · D(p)` at the poles crossed when the Perron line `Re s = 2` is
//!   moved to `Re s = 1 − σ_F`, with `σ_F` the abscissa of the `F` kernel.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{divisor_tau, divisors, kloosterman, mobius, tau_table};
use crate::arith::{AdditiveTwist, ShiftTriple, Signs};
use crate::compensated::NeumaierSum;
use crate::estermann::{
    estermann_hurwitz, formula_residue, pole_clusters, principal_part_model, smoothed_dirichlet, CLUSTER_JOIN,
};
use crate::report::{CheckReport, Metric};
use crate::special::factors::chi_factor;
use crate::special::gamma::ln_gamma;
use crate::special::zeta::riemann_zeta;
use crate::special::{contour_residue, mellin_barnes, ContourSpec, PhasedKernel, Quadrature};
use crate::{Error, Result, C64};

// ---------------------------------------------------------------------------
// Test functions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    Exponential,
    PowerExponential,
    NumericBump,
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    /// `t^a e^{−t}`, `a ≥ 0`; `a = 0` is the plain exponential.
    PowerExponential { a: f64 },
    /// `exp(4/w − 1/(t−lo) − 1/(hi−t))` on `(lo, hi)`, `w = hi − lo`.
    Bump { lo: f64, hi: f64, nodes: Arc<Vec<(f64, f64)>> },
}

/// A weight `φ` on `(0, ∞)` together with its Mellin transform
/// `φ̃(s) = ∫_0^∞ φ(t) t^{s−1} dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    shape: Shape,
}

/// Trapezoid nodes in `u = ln t` for the numeric Mellin transform of a bump.
/// The integrand vanishes to all orders at both ends.
const BUMP_NODES: usize = 4000;

fn bump_value(t: f64, lo: f64, hi: f64) -> f64 {
    if t <= lo || t >= hi {
        return 0.0;
    }
    (4.0 / (hi - lo) - 1.0 / (t - lo) - 1.0 / (hi - t)).exp()
}

impl TestFunction {
    /// `φ(t) = e^{−t}`, `φ̃(s) = Γ(s)`.
    pub fn exponential() -> Self {
        Self { shape: Shape::PowerExponential { a: 0.0 } }
    }

    /// `φ(t) = t^a e^{−t}`, `φ̃(s) = Γ(s + a)`.
    pub fn power_exponential(a: f64) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::InvalidArgument(format!("power-exponential exponent must be ≥ 0, got {a}")));
        }
        Ok(Self { shape: Shape::PowerExponential { a } })
    }

    /// A smooth bump supported in `[lo, hi]` with numerically computed `φ̃`.
    pub fn bump(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!("bump support must satisfy 0 < lo < hi, got [{lo}, {hi}]")));
        }
        let (ul, uh) = (lo.ln(), hi.ln());
        let h = (uh - ul) / BUMP_NODES as f64;
        let nodes = (1..BUMP_NODES)
            .map(|j| {
                let u = ul + j as f64 * h;
                (u, bump_value(u.exp(), lo, hi) * h)
            })
            .filter(|&(_, w)| w != 0.0)
            .collect();
        Ok(Self { shape: Shape::Bump { lo, hi, nodes: Arc::new(nodes) } })
    }

    pub fn kind(&self) -> TestKind {
        match self.shape {
            Shape::PowerExponential { a: 0.0 } => TestKind::Exponential,
            Shape::PowerExponential { .. } => TestKind::PowerExponential,
            Shape::Bump { .. } => TestKind::NumericBump,
        }
    }

    /// `φ(t)` for `t > 0`.
    pub fn eval(&self, t: f64) -> f64 {
        match &self.shape {
            Shape::PowerExponential { a } => t.powf(*a) * (-t).exp(),
            Shape::Bump { lo, hi, .. } => bump_value(t, *lo, *hi),
        }
    }

    /// `φ̃(s)`.
    pub fn mellin(&self, s: C64) -> Result<C64> {
        match &self.shape {
            Shape::PowerExponential { .. } => self.ln_mellin(s).map(C64::exp),
            Shape::Bump { nodes, .. } => Ok(crate::compensated::sum(nodes.iter().map(|&(u, w)| (s * u).exp() * w))),
        }
    }

    /// `ln φ̃(s)` modulo `2πi`; for the Γ kinds this avoids under- and
    /// overflow far up the line.
    pub fn ln_mellin(&self, s: C64) -> Result<C64> {
        match &self.shape {
            Shape::PowerExponential { a } => ln_gamma(s + a),
            Shape::Bump { .. } => Ok(self.mellin(s)?.ln()),
        }
    }

    /// The strip `(σ₀, σ₁)` in which `φ̃` is regular.
    pub fn strip(&self) -> (f64, f64) {
        match self.shape {
            Shape::PowerExponential { a } => (-a, f64::INFINITY),
            Shape::Bump { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Poles of `φ̃` with `lo < Re p < hi`, with their residues.
    pub fn mellin_poles(&self, lo: f64, hi: f64) -> Vec<(C64, f64)> {
        match self.shape {
            Shape::PowerExponential { a } => {
                // Γ(s + a) has residue (−1)^n/n! at s = −a − n.
                let mut out = Vec::new();
                let mut factorial = 1.0;
                for n in 0..200u32 {
                    if n > 0 {
                        factorial *= n as f64;
                    }
                    let p = -a - n as f64;
                    if p <= lo {
                        break;
                    }
                    if p < hi {
                        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                        out.push((C64::new(p, 0.0), sign / factorial));
                    }
                }
                out
            }
            Shape::Bump { .. } => Vec::new(),
        }
    }

    /// Default abscissa for the `F` and `H` kernels: `2` unless `φ̃(1−s)` has a
    /// pole within `1/4` of that line, in which case `2.5`.
    pub fn kernel_sigma(&self) -> f64 {
        let near = |sigma: f64| !self.mellin_poles(1.0 - sigma - 0.25, 1.0 - sigma + 0.25).is_empty();
        if near(2.0) {
            2.5
        } else {
            2.0
        }
    }

    /// Abscissa used for the dual sums: midway between consecutive poles of
    /// `φ̃(1−s)` in `[3, 4)` (or `3.5` when there are none). Moving the line
    /// right of the paper's `Re s = 2` speeds the dual sums from an `m^{−3}`
    /// to an `m^{−4}` kernel decay, at the price of crossing more poles of
    /// `φ̃`, which [`test_function_pole_terms`] accounts for.
    pub fn dual_sigma(&self) -> f64 {
        match self.shape {
            Shape::PowerExponential { a } => {
                // Poles of φ̃(1−s) = Γ(1−s+a) sit at 1 + a + n.
                let mid = 1.5 + a;
                mid + (3.0 - mid).max(0.0).ceil()
            }
            Shape::Bump { .. } => 3.5,
        }
    }

    /// `n` beyond which `φ(n)` is negligible or zero.
    fn support_end(&self) -> Option<f64> {
        match self.shape {
            Shape::Bump { hi, .. } => Some(hi),
            _ => None,
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.shape {
            Shape::PowerExponential { a } if *a == 0.0 => write!(f, "exp"),
            Shape::PowerExponential { a } => write!(f, "pow:{a}"),
            Shape::Bump { lo, hi, .. } => write!(f, "bump:{lo},{hi}"),
        }
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    /// `exp`, `texp` (`t e^{−t}`), `t2exp` (`t² e^{−t}`), `pow:<a>`,
    /// `bump` (support `[1, 3]`) or `bump:<lo>,<hi>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown test function `{s}`"));
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
        match s.trim() {
            "exp" => Ok(Self::exponential()),
            "texp" => Self::power_exponential(1.0),
            "t2exp" => Self::power_exponential(2.0),
            "bump" => Self::bump(1.0, 3.0),
            other => {
                if let Some(a) = other.strip_prefix("pow:") {
                    Self::power_exponential(num(a)?)
                } else if let Some(range) = other.strip_prefix("bump:") {
                    let (lo, hi) = range.split_once(',').ok_or_else(bad)?;
                    Self::bump(num(lo)?, num(hi)?)
                } else {
                    Err(bad())
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

/// A kernel argument `|x| e^{iθ}` with the phase kept unreduced, so that
/// `x^{−s} = exp(−s(ln|x| + iθ))` on the chosen branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasedModulus {
    pub modulus: f64,
    pub theta: f64,
}

impl PhasedModulus {
    pub fn new(modulus: f64, theta: f64) -> Result<Self> {
        if !(modulus > 0.0 && modulus.is_finite() && theta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "phased modulus needs |x| > 0 and finite θ, got ({modulus}, {theta})"
            )));
        }
        Ok(Self { modulus, theta })
    }

    pub fn real(modulus: f64) -> Result<Self> {
        Self::new(modulus, 0.0)
    }

    /// `θ = (π/2)(ε₁ + ε₂ + ε₃)`.
    pub fn from_signs(modulus: f64, eps: Signs) -> Result<Self> {
        Self::new(modulus, FRAC_PI_2 * eps.sum() as f64)
    }

    pub fn ln_modulus(&self) -> f64 {
        self.modulus.ln()
    }
}

/// Which Mellin–Barnes integrand the `F` machinery integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelMode {
    /// `φ̃(1−s) Γ(s−α)Γ(s−β)Γ(s−γ) e^{−isθ}`.
    #[default]
    Full,
    /// Harness: the Γ-triple and `φ̃(1−s)` replaced by `φ̃(s)` alone, so the
    /// kernel is Mellin inversion `φ(|x|)` (for `φ = e^{−t}`, the single `Γ(s)`
    /// integrand giving `e^{−x}`).
    SingleGamma,
}

fn f_integrand(shifts: ShiftTriple, theta: f64, phi: TestFunction, mode: KernelMode) -> impl Fn(C64) -> Result<C64> {
    move |s: C64| {
        let phase = -C64::i() * s * theta;
        let ln = match mode {
            KernelMode::Full => {
                let mut ln = phi.ln_mellin(1.0 - s)? + phase;
                for a in shifts.to_array() {
                    ln += ln_gamma(s - a)?;
                }
                ln
            }
            KernelMode::SingleGamma => phi.ln_mellin(s)? + phase,
        };
        Ok(ln.exp())
    }
}

/// `F_{α,β,γ}(x; φ)` at one point, with the quadrature's error indicators.
pub fn f_kernel(
    shifts: &ShiftTriple,
    x: PhasedModulus,
    phi: &TestFunction,
    contour: &ContourSpec,
) -> Result<Quadrature> {
    f_kernel_mode(shifts, x, phi, contour, KernelMode::Full)
}

pub fn f_kernel_mode(
    shifts: &ShiftTriple,
    x: PhasedModulus,
    phi: &TestFunction,
    contour: &ContourSpec,
    mode: KernelMode,
) -> Result<Quadrature> {
    let g = f_integrand(*shifts, x.theta, phi.clone(), mode);
    let ln_x = x.ln_modulus();
    mellin_barnes(|s| Ok(g(s)? * (-s * ln_x).exp()), contour)
}

/// `F` at a fixed phase, prepared for many moduli.
#[derive(Debug, Clone)]
pub struct FKernel {
    pub theta: f64,
    kernel: PhasedKernel,
}

impl FKernel {
    pub fn build(shifts: &ShiftTriple, theta: f64, phi: &TestFunction, contour: &ContourSpec) -> Result<Self> {
        let kernel = PhasedKernel::build(f_integrand(*shifts, theta, phi.clone(), KernelMode::Full), contour)?;
        Ok(Self { theta, kernel })
    }

    pub fn eval(&self, modulus: f64) -> C64 {
        self.kernel.eval(modulus.ln())
    }

    pub fn eval_ln(&self, ln_modulus: f64) -> C64 {
        self.kernel.eval(ln_modulus)
    }

    pub fn nodes(&self) -> usize {
        self.kernel.nodes()
    }
}

/// `G^{3,0}_{0,3}([ ], [−α,−β,−γ]; y) = (1/2πi) ∫ Γ(s−α)Γ(s−β)Γ(s−γ) y^{−s} ds`
/// on `Re s = max Re(shift) + 1`.
pub fn meijer_g_303(shifts: &ShiftTriple, y: f64) -> Result<Quadrature> {
    if !(y > 0.0) {
        return Err(Error::InvalidArgument(format!("Meijer G needs y > 0, got {y}")));
    }
    let ln_y = y.ln();
    let spec = ContourSpec::on_line(shifts.max_re() + 1.0);
    let sh = shifts.to_array();
    mellin_barnes(
        |s| {
            let mut ln = -s * ln_y;
            for a in sh {
                ln += ln_gamma(s - a)?;
            }
            Ok(ln.exp())
        },
        &spec,
    )
}

/// `H(x) = (1/2πi) ∫ φ̃(1−s) χ(1−s)³ x^{−s} ds`.
pub fn h_kernel(x: f64, phi: &TestFunction, contour: &ContourSpec) -> Result<Quadrature> {
    if !(x > 0.0) {
        return Err(Error::InvalidArgument(format!("H kernel needs x > 0, got {x}")));
    }
    let ln_x = x.ln();
    mellin_barnes(|s| Ok(phi.mellin(1.0 - s)? * chi_factor(s)?.powi(3) * (-s * ln_x).exp()), contour)
}

/// `H` prepared for many arguments.
#[derive(Debug, Clone)]
pub struct HKernel {
    kernel: PhasedKernel,
}

impl HKernel {
    pub fn build(phi: &TestFunction, contour: &ContourSpec) -> Result<Self> {
        let phi = phi.clone();
        let kernel = PhasedKernel::build(move |s| Ok(phi.mellin(1.0 - s)? * chi_factor(s)?.powi(3)), contour)?;
        Ok(Self { kernel })
    }

    pub fn eval(&self, x: f64) -> C64 {
        self.kernel.eval(x.ln())
    }
}

/// `ε₁ε₂ε₃ · i · e^{(πi/2)(ε₁+ε₂+ε₃)}`, which equals 1 for every sign pattern;
/// this is what removes the sign product from the dual sum.
pub fn sign_collapse(eps: Signs) -> C64 {
    eps.product() as f64 * C64::i() * (C64::i() * FRAC_PI_2 * eps.sum() as f64).exp()
}

// ---------------------------------------------------------------------------
// Left-hand side
// ---------------------------------------------------------------------------

/// Hard cap on the number of terms of the left-hand sum.
pub const LHS_MAX_TERMS: u64 = 1_000_000;

/// `Σ_n τ_{α,β,γ}(n) e(nH/K) φ(n)`, stopped once `φ(n)·n³` (a bound for the
/// remaining terms up to a constant) drops below `tol·10^{−3}` of the sum.
pub fn voronoi_lhs(twist: AdditiveTwist, shifts: &ShiftTriple, phi: &TestFunction, tol: f64) -> Result<C64> {
    let sh = shifts.to_array();
    let mut acc = NeumaierSum::new();
    let end = phi.support_end();
    let peak = match phi.shape {
        Shape::PowerExponential { a } => a + 1.0,
        Shape::Bump { .. } => 0.0,
    };
    let mut n = 1u64;
    loop {
        if let Some(hi) = end {
            if n as f64 >= hi {
                break;
            }
        }
        let w = phi.eval(n as f64);
        if w != 0.0 {
            acc.add(divisor_tau(&sh, n) * twist.phase(n) * w);
        }
        let nf = n as f64;
        if end.is_none() && nf > peak && w * nf.powi(3) <= tol * 1e-3 * acc.value().norm() {
            break;
        }
        n += 1;
        if n > LHS_MAX_TERMS {
            return Err(Error::TruncationFailure { cap: LHS_MAX_TERMS as usize, tail: w });
        }
    }
    Ok(acc.value())
}

/// `(1/2πi) ∫_{(σ)} φ̃(s) D(s, H/K) ds` with `D` from the Hurwitz route.
pub fn perron_lhs(
    twist: AdditiveTwist,
    shifts: &ShiftTriple,
    phi: &TestFunction,
    contour: &ContourSpec,
) -> Result<Quadrature> {
    mellin_barnes(|s| Ok(phi.mellin(s)? * estermann_hurwitz(s, twist, shifts)?), contour)
}

// ---------------------------------------------------------------------------
// Polar contributions
// ---------------------------------------------------------------------------

/// `Σ_{poles} φ̃(1−α) K^{−1+α} ζ(1−α+β) ζ(1−α+γ) G(1−α, K)` for distinct
/// shifts; coincident shifts go through [`residual_terms_by_contour`].
pub fn voronoi_residual_terms(twist: AdditiveTwist, shifts: &ShiftTriple, phi: &TestFunction) -> Result<C64> {
    let poles: Vec<C64> = shifts.to_array().iter().map(|a| 1.0 - a).collect();
    if shifts.min_gap() < CLUSTER_JOIN {
        return residual_terms_by_contour(twist, shifts, phi);
    }
    let mut acc = NeumaierSum::new();
    for (i, &p) in poles.iter().enumerate() {
        acc.add(phi.mellin(p)? * formula_residue(twist.k(), shifts, i)?);
    }
    Ok(acc.value())
}

/// Residues of `φ̃(s) K^{−s} ζ(s+α)ζ(s+β)ζ(s+γ) G(s, K)` around every pole
/// cluster by circular contours.
pub fn residual_terms_by_contour(twist: AdditiveTwist, shifts: &ShiftTriple, phi: &TestFunction) -> Result<C64> {
    let poles: Vec<C64> = shifts.to_array().iter().map(|a| 1.0 - a).collect();
    let avoid: Vec<C64> = phi.mellin_poles(-1.0, 3.0).into_iter().map(|(p, _)| p).collect();
    let mut acc = NeumaierSum::new();
    for cluster in pole_clusters(&poles, &avoid) {
        acc.add(contour_residue(
            |s| Ok(phi.mellin(s)? * principal_part_model(s, twist.k(), shifts)?),
            cluster.center,
            cluster.radius,
        )?);
    }
    Ok(acc.value())
}

/// Abscissa of the Perron integral.
pub const PERRON_SIGMA: f64 = 2.0;

/// `Σ Res φ̃(p) · D(p, H/K)` over the poles `p` of `φ̃` with
/// `1 − σ_F < Re p < 2`: the contribution of `φ̃`'s own poles when the
/// Perron line moves to `Re s = 1 − σ_F`. Empty for entire `φ̃`.
pub fn test_function_pole_terms(
    twist: AdditiveTwist,
    shifts: &ShiftTriple,
    phi: &TestFunction,
    kernel_sigma: f64,
) -> Result<C64> {
    let mut acc = NeumaierSum::new();
    for (p, res) in phi.mellin_poles(1.0 - kernel_sigma, PERRON_SIGMA) {
        acc.add(estermann_hurwitz(p, twist, shifts)? * res);
    }
    Ok(acc.value())
}

fn check_line(phi: &TestFunction, sigma: f64) -> Result<()> {
    if !phi.mellin_poles(1.0 - sigma - 1e-9, 1.0 - sigma + 1e-9).is_empty() {
        return Err(Error::Pole { function: "test-function Mellin transform", at: C64::new(1.0 - sigma, 0.0) });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Dual sums
// ---------------------------------------------------------------------------

/// Truncation controls for the dual `m`-sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualSumOptions {
    /// Target relative size of the neglected tail.
    pub tol: f64,
    /// Hard cap on `m`.
    pub cap: usize,
    /// Kernel contour; `None` uses [`TestFunction::dual_sigma`].
    pub contour: Option<ContourSpec>,
}

impl Default for DualSumOptions {
    fn default() -> Self {
        Self { tol: 1e-6, cap: 5000, contour: None }
    }
}

impl DualSumOptions {
    pub fn contour_for(&self, phi: &TestFunction) -> ContourSpec {
        self.contour.unwrap_or_else(|| ContourSpec::on_line(phi.dual_sigma()))
    }
}

/// A truncated dual sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualSeries {
    pub value: C64,
    pub terms: usize,
    /// Modelled size of the neglected tail.
    pub tail: f64,
}

/// Consecutive small terms required before the tail model is consulted.
const SMALL_RUN: usize = 10;
const MIN_TERMS: usize = 20;
const CHUNK: usize = 64;

/// `Σ_m term(m)`, where `term(m) = (value, k)` with `|value| ≤ τ₃(m) m^g k`.
///
/// Tolerances are relative to `max(|S_M|, scale)`, where `scale` is the size
/// of the remaining (polar) part of the formula. Stops at the first `M`
/// where the last [`SMALL_RUN`] terms are below that, the envelope `k` decays like `m^{−p}` with `p > 1 + g`, the
/// resulting tail model `k(M)(ln M + 1)² M^{1+g}/(p − 1 − g)` is below
/// `tol·|S_M|`, and the observed contribution of `(M/2, M]` does not exceed
/// ten times what the same model predicts for it. Terms are computed in
/// parallel chunks and reduced in order.
fn sum_dual<T>(opts: &DualSumOptions, growth: f64, scale: f64, term: T) -> Result<DualSeries>
where
    T: Fn(u64) -> (C64, f64) + Sync,
{
    let mut partial = vec![C64::default()];
    let mut envelope = vec![0.0f64];
    let mut acc = NeumaierSum::new();
    let mut run = 0usize;
    let mut last_tail = f64::INFINITY;
    let window_max = |env: &[f64], m: usize| -> f64 {
        let lo = m.saturating_sub(SMALL_RUN - 1).max(1);
        env[lo..=m].iter().copied().fold(0.0, f64::max)
    };
    let tail_model = |k: f64, m: usize, p: f64| -> f64 {
        if k == 0.0 {
            return 0.0;
        }
        let mf = m as f64;
        k * (mf.ln() + 1.0).powi(2) * mf.powf(1.0 + growth) / (p - 1.0 - growth)
    };
    let mut start = 1usize;
    while start <= opts.cap {
        let end = (start + CHUNK).min(opts.cap + 1);
        let chunk: Vec<(C64, f64)> = (start..end).into_par_iter().map(|m| term(m as u64)).collect();
        for (offset, (value, k)) in chunk.into_iter().enumerate() {
            let m = start + offset;
            acc.add(value);
            let sum = acc.value();
            partial.push(sum);
            envelope.push(k);
            let target = opts.tol * sum.norm().max(scale);
            let bound = tau3_bound(m as u64) * (m as f64).powf(growth) * k;
            run = if bound <= target { run + 1 } else { 0 };
            if m < MIN_TERMS || run < SMALL_RUN {
                continue;
            }
            let half = m / 2;
            let (k_half, k_now) = (window_max(&envelope, half), window_max(&envelope, m));
            let p = if k_now == 0.0 {
                f64::INFINITY
            } else {
                (k_half / k_now).log2() / ((m as f64) / (half as f64)).log2()
            };
            if !(p > 1.2 + growth) {
                continue;
            }
            let tail = tail_model(k_now, m, p);
            last_tail = tail;
            let observed = (sum - partial[half]).norm();
            let predicted = tail_model(k_half, half, p);
            if tail <= target && observed <= 10.0 * predicted + target {
                return Ok(DualSeries { value: sum, terms: m, tail });
            }
        }
        start = end;
    }
    Err(Error::TruncationFailure { cap: opts.cap, tail: last_tail })
}

/// `τ₃(m) = Π_p C(e+2, 2)`, the modulus bound for any shifted `τ` up to `m^{max|Re|}`.
fn tau3_bound(m: u64) -> f64 {
    crate::arith::factorize(m).factors().iter().map(|&(_, e)| ((e + 1) * (e + 2) / 2) as f64).product()
}

/// The right-hand side of the summation formula, by component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoronoiRhs {
    pub total: C64,
    pub dual: C64,
    pub residual: C64,
    pub test_poles: C64,
    pub terms: usize,
    pub tail: f64,
    pub sigma: f64,
}

/// One `(d, h)` block of the dual sum.
struct DualBlock {
    coeff: C64,
    q: u64,
    ln_x: f64,
    /// `S(1, −σ H̄ h r; q)` for `r mod q`, indexed by phase class then `r`.
    kloosterman: [Vec<C64>; 2],
}

/// The phases `Σε = 3, 1, −1, −3` in that order, with the sign product of
/// each class.
const PHASE_SUMS: [i64; 4] = [3, 1, -1, -3];

fn sign_product_of_sum(sum: i64) -> i64 {
    if sum == 3 || sum == -1 {
        1
    } else {
        -1
    }
}

/// The right-hand side of the summation formula with its components.
pub fn voronoi_rhs(
    twist: AdditiveTwist,
    shifts: &ShiftTriple,
    phi: &TestFunction,
    opts: &DualSumOptions,
) -> Result<VoronoiRhs> {
    let k = twist.k();
    let kf = k as f64;
    let spec = opts.contour_for(phi);
    check_line(phi, spec.sigma)?;
    let hbar = twist.inverse() as i64;
    let total_shift = shifts.sum();
    let pair = shifts.pair_sums();
    let neg = shifts.negated().to_array();

    // Φ_θ = Σ_{ε : Σε fixed} e^{(πi/2) ε·(α,β,γ)}.
    let mut phase = [C64::default(); 4];
    for eps in Signs::all() {
        let idx = PHASE_SUMS.iter().position(|&t| t == eps.sum()).expect("Σε ∈ {±1, ±3}");
        phase[idx] += (C64::i() * FRAC_PI_2 * eps.dot(shifts)).exp();
    }
    let kernels: Vec<FKernel> = PHASE_SUMS
        .par_iter()
        .map(|&t| FKernel::build(shifts, FRAC_PI_2 * t as f64, phi, &spec))
        .collect::<Result<_>>()?;

    let mut blocks = Vec::new();
    for d in divisors(k) {
        let q = k / d;
        for h in divisors(d) {
            let mu = mobius(h);
            if mu == 0 {
                continue;
            }
            let coeff = divisor_tau(&pair, d / h) * (d as f64 * mu as f64) * (total_shift * (h as f64).ln()).exp();
            let row = |sigma: i64| -> Vec<C64> {
                (0..q).map(|r| kloosterman(1, -sigma * hbar * h as i64 * r as i64, q)).collect()
            };
            let ln_x = 3.0 * TAU.ln() + 2.0 * (d as f64).ln() + (h as f64).ln() - 3.0 * kf.ln();
            blocks.push(DualBlock { coeff, q, ln_x, kloosterman: [row(1), row(-1)] });
        }
    }
    let prefactor = (total_shift * (TAU / kf).ln()).exp() / (kf * kf);

    let term = |m: u64| -> (C64, f64) {
        let ln_m = (m as f64).ln();
        let mut value = NeumaierSum::new();
        let mut bound = 0.0;
        for b in &blocks {
            let r = (m % b.q) as usize;
            let mut inner = C64::default();
            for (idx, kernel) in kernels.iter().enumerate() {
                let f = kernel.eval_ln(b.ln_x + ln_m);
                let class = if sign_product_of_sum(PHASE_SUMS[idx]) == 1 { 0 } else { 1 };
                inner += phase[idx] * b.kloosterman[class][r] * f;
                bound += b.coeff.norm() * b.q as f64 * phase[idx].norm() * f.norm();
            }
            value.add(b.coeff * inner);
        }
        (divisor_tau(&neg, m) * value.value() * prefactor, bound * prefactor.norm())
    };
    let residual = voronoi_residual_terms(twist, shifts, phi)?;
    let test_poles = test_function_pole_terms(twist, shifts, phi, spec.sigma)?;
    let dual = sum_dual(opts, shifts.max_abs_re(), (residual + test_poles).norm(), term)?;
    Ok(VoronoiRhs {
        total: dual.value + residual + test_poles,
        dual: dual.value,
        residual,
        test_poles,
        terms: dual.terms,
        tail: dual.tail,
        sigma: spec.sigma,
    })
}

// ---------------------------------------------------------------------------
// The alternating sum
// ---------------------------------------------------------------------------

/// `D(s, 1/2) = ζ(s)³ (−1 + 6/2^s − 6/4^s + 2/8^s)` at zero shifts.
pub fn alternating_dirichlet(s: C64) -> Result<C64> {
    let p = |b: f64| (-s * b.ln()).exp();
    Ok(riemann_zeta(s)?.powi(3) * (-1.0 + 6.0 * p(2.0) - 6.0 * p(4.0) + 2.0 * p(8.0)))
}

/// `Σ τ₃(m)(−1)^m φ(m)`.
pub fn corollary_lhs(phi: &TestFunction, tol: f64) -> Result<C64> {
    voronoi_lhs(AdditiveTwist::new(1, 2)?, &ShiftTriple::zero(), phi, tol)
}

/// The right-hand side of the alternating-sum formula, by component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorollaryRhs {
    pub total: C64,
    pub dual: C64,
    pub residue: C64,
    pub test_poles: C64,
    pub terms: usize,
    pub tail: f64,
    pub sigma: f64,
}

/// `res_{s=1} φ̃(s) ζ(s)³(−1 + 6/2^s − 6/4^s + 2/8^s)`, a triple pole, by contour.
pub fn corollary_residue(phi: &TestFunction) -> Result<C64> {
    let avoid: Vec<C64> = phi.mellin_poles(-1.0, 3.0).into_iter().map(|(p, _)| p).collect();
    let cluster = pole_clusters(&[C64::new(1.0, 0.0); 3], &avoid)[0];
    contour_residue(|s| Ok(phi.mellin(s)? * alternating_dirichlet(s)?), cluster.center, cluster.radius)
}

/// `res + Σ_m τ₃(m)(−H(m) + 3H(m/2) − (3/2)H(m/4) + (1/4)H(m/8))`, plus the
/// poles of `φ̃` crossed by the contour shift.
pub fn corollary_rhs(phi: &TestFunction, opts: &DualSumOptions) -> Result<CorollaryRhs> {
    let spec = opts.contour_for(phi);
    check_line(phi, spec.sigma)?;
    let kernel = HKernel::build(phi, &spec)?;
    const WEIGHTS: [(f64, f64); 4] = [(1.0, -1.0), (2.0, 3.0), (4.0, -1.5), (8.0, 0.25)];
    let term = |m: u64| -> (C64, f64) {
        let mut value = C64::default();
        let mut bound = 0.0;
        for (div, w) in WEIGHTS {
            let h = kernel.eval(m as f64 / div);
            value += h * w;
            bound += w.abs() * h.norm();
        }
        (value * tau3_bound(m), bound)
    };
    let residue = corollary_residue(phi)?;
    let mut poles = NeumaierSum::new();
    for (p, res) in phi.mellin_poles(1.0 - spec.sigma, PERRON_SIGMA) {
        poles.add(alternating_dirichlet(p)? * res);
    }
    let test_poles = poles.value();
    let dual = sum_dual(opts, 0.0, (residue + test_poles).norm(), term)?;
    Ok(CorollaryRhs {
        total: dual.value + residue + test_poles,
        dual: dual.value,
        residue,
        test_poles,
        terms: dual.terms,
        tail: dual.tail,
        sigma: spec.sigma,
    })
}

/// `ζ(s)³ (3 − 3/2^s + 1/4^s)`.
pub fn even_tau3_closed(s: C64) -> Result<C64> {
    let p = |b: f64| (-s * b.ln()).exp();
    Ok(riemann_zeta(s)?.powi(3) * (3.0 - 3.0 * p(2.0) + p(4.0)))
}

/// `Σ τ₃(2m) m^{−s}` from the series itself (`Re s > 1`), by the smoothed sum
/// whose polar correction uses the triple pole at `s = 1`.
pub fn even_tau3_series(s: C64, tol: f64) -> Result<C64> {
    if s.re <= 1.0 {
        return Err(Error::OutOfDomain(format!("series needs Re s > 1, got {s}")));
    }
    // τ₃(2m) m^{−s} = 2^s τ_{s,s,s}(2m).
    let two_s = (s * std::f64::consts::LN_2).exp();
    let terms = |len: usize| -> Vec<C64> {
        let taus = tau_table(&[s; 3], 2 * len);
        (0..len).map(|m| if m == 0 { C64::default() } else { two_s * taus[2 * m] }).collect()
    };
    smoothed_dirichlet(s, tol, terms, &[C64::new(1.0, 0.0)], even_tau3_closed)
}

/// `Σ τ₃(2m) m^{−s}` against `ζ(s)³(3 − 3/2^s + 1/4^s)`.
pub fn check_even_tau3(s: C64) -> CheckReport {
    let start = Instant::now();
    let result = even_tau3_series(s, 1e-14).and_then(|lhs| Ok((lhs, even_tau3_closed(s)?)));
    CheckReport::from_result("even_tau3_dirichlet", result, 1e-10, Metric::Relative)
        .param("s", s)
        .timed(start.elapsed())
}

// ---------------------------------------------------------------------------
// Checks
// ---------------------------------------------------------------------------

/// Summation formula, both sides, at relative tolerance `tol`.
pub fn check_voronoi(
    twist: AdditiveTwist,
    shifts: &ShiftTriple,
    phi: &TestFunction,
    opts: &DualSumOptions,
    tol: f64,
) -> CheckReport {
    let start = Instant::now();
    let mut detail = String::new();
    let result = voronoi_lhs(twist, shifts, phi, 1e-15).and_then(|lhs| {
        let rhs = voronoi_rhs(twist, shifts, phi, opts)?;
        detail = format!("m ≤ {}, tail ≈ {:.1e}, σ_F = {}", rhs.terms, rhs.tail, rhs.sigma);
        Ok((lhs, rhs.total))
    });
    let report = CheckReport::from_result("voronoi_summation", result, tol, Metric::Relative)
        .param("twist", twist)
        .param("shifts", shifts)
        .param("phi", phi)
        .timed(start.elapsed());
    if detail.is_empty() {
        report
    } else {
        report.note(detail)
    }
}

/// Perron integral against the direct weighted sum.
pub fn check_perron(twist: AdditiveTwist, shifts: &ShiftTriple, phi: &TestFunction, tol: f64) -> CheckReport {
    let start = Instant::now();
    let result = voronoi_lhs(twist, shifts, phi, 1e-15)
        .and_then(|lhs| Ok((lhs, perron_lhs(twist, shifts, phi, &ContourSpec::on_line(PERRON_SIGMA))?.value)));
    CheckReport::from_result("voronoi_perron", result, tol, Metric::Relative)
        .param("twist", twist)
        .param("shifts", shifts)
        .param("phi", phi)
        .timed(start.elapsed())
}

/// The alternating-sum formula, both sides, at relative tolerance `tol`.
pub fn check_corollary(phi: &TestFunction, opts: &DualSumOptions, tol: f64) -> CheckReport {
    let start = Instant::now();
    let result = corollary_lhs(phi, 1e-15).and_then(|lhs| Ok((lhs, corollary_rhs(phi, opts)?.total)));
    CheckReport::from_result("corollary_alternating", result, tol, Metric::Relative)
        .param("phi", phi)
        .timed(start.elapsed())
}

/// Largest change of `f` at `x` under `h → h/2`, `T → T + 10` and `σ → σ'`.
pub fn kernel_stability<F>(eval: F, base: &ContourSpec, shifted_sigma: f64) -> Result<(C64, f64)>
where
    F: Fn(&ContourSpec) -> Result<C64>,
{
    let reference = eval(base)?;
    let variants =
        [base.with_step(base.step / 2.0), base.with_height(base.height + 10.0), base.with_sigma(shifted_sigma)];
    let mut worst: f64 = 0.0;
    for v in variants {
        worst = worst.max((eval(&v)? - reference).norm() / reference.norm());
    }
    Ok((reference, worst))
}

/// Whether `φ̃(1−s)` stays regular between the two abscissas.
pub fn kernel_shift_is_clean(phi: &TestFunction, from: f64, to: f64) -> bool {
    let (lo, hi) = if from < to { (from, to) } else { (to, from) };
    phi.mellin_poles(1.0 - hi - 1e-12, 1.0 - lo + 1e-12).is_empty()
}

/// `|x| = e^{ln}` helper for sweeping kernels over `m`.
pub fn dual_argument(d: u64, h: u64, m: u64, k: u64) -> f64 {
    TAU.powi(3) * (d * d * h * m) as f64 / (k as f64).powi(3)
}
