//! Vertical-line (Mellin–Barnes) quadrature and circular-contour residues.
//!
//! Both are trapezoid rules: on a vertical line an analytic integrand with
//! exponential decay converges geometrically in `1/h`; on a circle the rule is
//! spectrally accurate for periodic analytic integrands.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::compensated::NeumaierSum;
use crate::{Error, Result, C64};

/// Consecutive sub-threshold nodes required before a line is truncated.
pub const DECAY_RUN: usize = 20;
/// Hard cap on the truncation height of the adaptive rule.
pub const MAX_HEIGHT: f64 = 2000.0;

/// The line `σ + it`, `|t| ≤ T`, sampled at step `h`.
///
/// In the adaptive rule `height` is the minimum height: integration continues
/// past it until [`DECAY_RUN`] consecutive nodes fall below `tol` times the
/// peak integrand magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub sigma: f64,
    pub height: f64,
    pub step: f64,
    pub tol: f64,
}

impl ContourSpec {
    pub const DEFAULT_HEIGHT: f64 = 10.0;
    pub const DEFAULT_STEP: f64 = 0.05;
    pub const DEFAULT_TOL: f64 = 1e-17;

    pub fn new(sigma: f64, height: f64, step: f64) -> Result<Self> {
        let spec = Self { sigma, height, step, tol: Self::DEFAULT_TOL };
        spec.validate()?;
        Ok(spec)
    }

    pub fn on_line(sigma: f64) -> Self {
        Self { sigma, height: Self::DEFAULT_HEIGHT, step: Self::DEFAULT_STEP, tol: Self::DEFAULT_TOL }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.sigma.is_finite()
            && self.height > 0.0
            && self.step > 0.0
            && self.step <= self.height / 50.0
            && self.tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "contour needs T > 0, 0 < h ≤ T/50 and tol > 0 (got σ = {}, T = {}, h = {}, tol = {:e})",
                self.sigma, self.height, self.step, self.tol
            )))
        }
    }

    pub fn with_sigma(self, sigma: f64) -> Self {
        Self { sigma, ..self }
    }

    pub fn with_height(self, height: f64) -> Self {
        Self { height, ..self }
    }

    pub fn with_step(self, step: f64) -> Self {
        Self { step, ..self }
    }

    pub fn with_tol(self, tol: f64) -> Self {
        Self { tol, ..self }
    }

    fn node(&self, k: i64) -> C64 {
        C64::new(self.sigma, k as f64 * self.step)
    }
}

impl Default for ContourSpec {
    fn default() -> Self {
        Self::on_line(2.0)
    }
}

/// A quadrature value with its error indicators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub value: C64,
    /// `(h/2π)·Σ|g|` over the final [`DECAY_RUN`] nodes on each side.
    pub tail_estimate: f64,
    /// `|I_h − I_{2h}|`, a conservative bound on the discretisation error.
    pub error_estimate: f64,
    pub nodes: usize,
}

impl Quadrature {
    pub fn error_bound(&self) -> f64 {
        self.tail_estimate + self.error_estimate
    }
}

/// Integrand samples `g(σ + ikh)` for `k = −k_neg..=k_pos`, in increasing `k`.
struct LineSamples {
    k_neg: i64,
    values: Vec<C64>,
    tail: f64,
}

fn sample_adaptive<F>(mut g: F, spec: &ContourSpec) -> Result<LineSamples>
where
    F: FnMut(C64) -> Result<C64>,
{
    spec.validate()?;
    let center = g(spec.node(0))?;
    let min_k = (spec.height / spec.step).ceil() as i64;
    let max_k = (MAX_HEIGHT / spec.step).ceil() as i64;
    let mut peak = center.norm();
    let mut sides: [Vec<C64>; 2] = [Vec::new(), Vec::new()];
    let mut runs = [0usize; 2];
    let mut done = [false; 2];
    let mut k = 0i64;
    // Walk both directions in lockstep so the peak is shared.
    while !(done[0] && done[1]) {
        k += 1;
        if k > max_k {
            let last = sides.iter().filter_map(|v| v.last()).map(|z| z.norm()).fold(0.0, f64::max);
            return Err(Error::NonDecaying { height: MAX_HEIGHT, last });
        }
        for (side, dir) in [(0usize, -1i64), (1, 1)] {
            if done[side] {
                continue;
            }
            let v = g(spec.node(dir * k))?;
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonDecaying { height: (k as f64) * spec.step, last: v.norm() });
            }
            peak = peak.max(v.norm());
            sides[side].push(v);
            runs[side] = if v.norm() <= spec.tol * peak { runs[side] + 1 } else { 0 };
            if k >= min_k && runs[side] >= DECAY_RUN {
                done[side] = true;
            }
        }
    }
    let w = spec.step / TAU;
    let tail: f64 = sides.iter().map(|v| v.iter().rev().take(DECAY_RUN).map(|z| z.norm()).sum::<f64>() * w).sum();
    let [neg, pos] = sides;
    let k_neg = neg.len() as i64;
    let mut values: Vec<C64> = neg.into_iter().rev().collect();
    values.push(center);
    values.extend(pos);
    Ok(LineSamples { k_neg, values, tail })
}

fn sample_fixed<F>(mut g: F, spec: &ContourSpec) -> Result<LineSamples>
where
    F: FnMut(C64) -> Result<C64>,
{
    spec.validate()?;
    let kmax = (spec.height / spec.step).floor() as i64;
    let values = (-kmax..=kmax).map(|k| g(spec.node(k))).collect::<Result<Vec<_>>>()?;
    let w = spec.step / TAU;
    let edge = |it: &mut dyn Iterator<Item = &C64>| it.take(DECAY_RUN).map(|z| z.norm()).sum::<f64>() * w;
    let tail = edge(&mut values.iter()) + edge(&mut values.iter().rev());
    Ok(LineSamples { k_neg: kmax, values, tail })
}

fn integrate(samples: &LineSamples, step: f64) -> Quadrature {
    let mut fine = NeumaierSum::new();
    let mut coarse = NeumaierSum::new();
    for (i, &v) in samples.values.iter().enumerate() {
        fine.add(v);
        if (i as i64 - samples.k_neg) % 2 == 0 {
            coarse.add(v);
        }
    }
    let w = step / TAU;
    let value = fine.value() * w;
    let coarse = coarse.value() * 2.0 * w;
    Quadrature {
        value,
        tail_estimate: samples.tail,
        error_estimate: (value - coarse).norm(),
        nodes: samples.values.len(),
    }
}

/// `(1/2πi) ∫_{(σ)} g(s) ds` with the adaptive decay monitor.
pub fn mellin_barnes<F>(g: F, spec: &ContourSpec) -> Result<Quadrature>
where
    F: FnMut(C64) -> Result<C64>,
{
    Ok(integrate(&sample_adaptive(g, spec)?, spec.step))
}

/// `(1/2πi) ∫_{σ−iT}^{σ+iT} g(s) ds` on exactly the nodes `|kh| ≤ T`.
pub fn mellin_barnes_fixed<F>(g: F, spec: &ContourSpec) -> Result<Quadrature>
where
    F: FnMut(C64) -> Result<C64>,
{
    Ok(integrate(&sample_fixed(g, spec)?, spec.step))
}

/// A Mellin–Barnes integral `(1/2πi) ∫ g(s) x^{−s} ds` prepared for many
/// positive `x`.
///
/// `|x^{−s}|` is constant on a vertical line, so the node set is fixed by `g`
/// alone. The weights `(h/2π) g(s_k)` are stored once; each evaluation then
/// costs one complex exponential per node. Any phase `e^{−iθs}` belongs in
/// `g`, since it changes the decay along the line.
#[derive(Debug, Clone)]
pub struct PhasedKernel {
    sigma: f64,
    step: f64,
    k_neg: i64,
    weights: Vec<C64>,
    tail: f64,
    weight_mass: f64,
}

impl PhasedKernel {
    pub fn build<F>(g: F, spec: &ContourSpec) -> Result<Self>
    where
        F: FnMut(C64) -> Result<C64>,
    {
        Ok(Self::from_samples(sample_adaptive(g, spec)?, spec))
    }

    pub fn build_fixed<F>(g: F, spec: &ContourSpec) -> Result<Self>
    where
        F: FnMut(C64) -> Result<C64>,
    {
        Ok(Self::from_samples(sample_fixed(g, spec)?, spec))
    }

    fn from_samples(samples: LineSamples, spec: &ContourSpec) -> Self {
        let w = spec.step / TAU;
        let weights: Vec<C64> = samples.values.iter().map(|v| v * w).collect();
        let weight_mass = weights.iter().map(|z| z.norm()).sum();
        Self { sigma: spec.sigma, step: spec.step, k_neg: samples.k_neg, weights, tail: samples.tail, weight_mass }
    }

    pub fn nodes(&self) -> usize {
        self.weights.len()
    }

    /// Tail estimate of the integrand without the `x^{−s}` factor.
    pub fn tail_estimate(&self) -> f64 {
        self.tail
    }

    /// `Σ_k |w_k|`: absolute rounding error of any evaluation is ~ε times this,
    /// scaled by `|x|^{−σ}`.
    pub fn weight_mass(&self) -> f64 {
        self.weight_mass
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `(1/2πi) ∫ g(s) x^{−s} ds` at `x = e^{ln_x}`.
    pub fn eval(&self, ln_x: f64) -> C64 {
        let scale = (-self.sigma * ln_x).exp();
        let mut acc = NeumaierSum::new();
        for (i, &w) in self.weights.iter().enumerate() {
            let t = (i as i64 - self.k_neg) as f64 * self.step;
            acc.add(w * C64::from_polar(1.0, -t * ln_x));
        }
        acc.value() * scale
    }

    /// As [`eval`](Self::eval), with `|I_h − I_{2h}|` as error estimate.
    pub fn eval_with_error(&self, ln_x: f64) -> (C64, f64) {
        let scale = (-self.sigma * ln_x).exp();
        let mut fine = NeumaierSum::new();
        let mut coarse = NeumaierSum::new();
        for (i, &w) in self.weights.iter().enumerate() {
            let k = i as i64 - self.k_neg;
            let term = w * C64::from_polar(scale, -(k as f64) * self.step * ln_x);
            fine.add(term);
            if k % 2 == 0 {
                coarse.add(term);
            }
        }
        let value = fine.value();
        (value, (value - 2.0 * coarse.value()).norm())
    }
}

/// Smallest and largest node counts tried by [`contour_residue`].
pub const RESIDUE_MIN_NODES: usize = 16;
pub const RESIDUE_MAX_NODES: usize = 1 << 14;
pub const RESIDUE_TOL: f64 = 1e-12;

/// `(1/2πi) ∮_{|s−c|=r} f(s) ds` by the trapezoid rule on the circle,
/// doubling the node count (reusing earlier nodes) until two successive
/// values agree to [`RESIDUE_TOL`] relative to the integrand scale `r·max|f|`.
pub fn contour_residue<F>(mut f: F, center: C64, radius: f64) -> Result<C64>
where
    F: FnMut(C64) -> Result<C64>,
{
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("contour radius must be positive, got {radius}")));
    }
    let mut sample = |theta: f64| -> Result<C64> {
        let u = C64::from_polar(1.0, theta);
        let v = f(center + radius * u)?;
        Ok(v * u)
    };
    let mut m = RESIDUE_MIN_NODES;
    let mut sum = NeumaierSum::new();
    let mut scale: f64 = 0.0;
    for j in 0..m {
        let v = sample(TAU * j as f64 / m as f64)?;
        scale = scale.max(v.norm());
        sum.add(v);
    }
    let mut value = sum.value() * radius / m as f64;
    while m < RESIDUE_MAX_NODES {
        // New nodes sit at the odd multiples of π/m.
        for j in 0..m {
            let v = sample(TAU * (2 * j + 1) as f64 / (2 * m) as f64)?;
            scale = scale.max(v.norm());
            sum.add(v);
        }
        m *= 2;
        let next = sum.value() * radius / m as f64;
        let change = (next - value).norm();
        value = next;
        if change <= RESIDUE_TOL * radius * scale {
            return Ok(value);
        }
    }
    Err(Error::ResidueNotConverged { nodes: m, change: f64::NAN })
}
