//! The shifted Estermann function
//! `D_{α,β,γ}(s, H/K) = Σ τ_{α,β,γ}(n) e(nH/K) n^{−s}`.
//!
//! Two evaluation routes are kept deliberately independent:
//!
//! * [`estermann_direct`] sums the Dirichlet series with a smooth cutoff and
//!   removes the cutoff's polar contribution, for `Re s ≥ 1.25`;
//! * [`estermann_hurwitz`] continues `D` to the whole plane through the grid
//!   `Σ_{L,M,N} e(HLMN/K) ζ(s+α,L,K) ζ(s+β,M,K) ζ(s+γ,N,K)`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::OnceLock;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::arith::{divisor_tau, divisors, euler_phi, factorize, mobius, prime_power_taus, tau_table, UnitRoots};
use crate::arith::{gcd, AdditiveTwist, ShiftTriple, Signs};
use crate::compensated::{self, NeumaierSum};
use crate::report::{CheckReport, Metric};
use crate::special::contour_residue;
use crate::special::factors::{gamma_factor_triple, sign_sum_closed};
use crate::special::zeta::{hurwitz_zeta, riemann_zeta};
use crate::{Error, Result, C64};

/// Distance to a pole below which the Hurwitz route refuses to evaluate.
pub const POLE_GUARD: f64 = 1e-6;
/// Left edge of the validated strip: `Re(s + shift) > −3`.
pub const HURWITZ_MIN_RE: f64 = -3.0;
/// Default cap on the modulus for the `O(K²)`-after-`3K` Hurwitz grid.
pub const DEFAULT_MAX_MODULUS: u64 = 12;
/// The direct series is only used well inside absolute convergence.
pub const DIRECT_MIN_RE: f64 = 1.25;

/// A point `(s, H/K, (α,β,γ))` at which `D` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstermannPoint {
    pub s: C64,
    pub twist: AdditiveTwist,
    pub shifts: ShiftTriple,
}

impl EstermannPoint {
    pub fn new(s: C64, twist: AdditiveTwist, shifts: ShiftTriple) -> Self {
        Self { s, twist, shifts }
    }

    /// The poles `1−α, 1−β, 1−γ`.
    pub fn poles(&self) -> [C64; 3] {
        self.shifts.to_array().map(|a| 1.0 - a)
    }

    pub fn hurwitz(&self) -> Result<C64> {
        estermann_hurwitz(self.s, self.twist, &self.shifts)
    }

    pub fn direct(&self, tol: f64) -> Result<C64> {
        estermann_direct(self.s, self.twist, &self.shifts, tol)
    }
}

// ---------------------------------------------------------------------------
// Hurwitz-grid continuation
// ---------------------------------------------------------------------------

fn guard_poles(s: C64, shifts: &ShiftTriple) -> Result<()> {
    for a in shifts.to_array() {
        let pole = 1.0 - a;
        let distance = (s - pole).norm();
        if distance < POLE_GUARD {
            return Err(Error::PoleProximity { at: s, pole, distance });
        }
        if (s + a).re <= HURWITZ_MIN_RE {
            return Err(Error::OutOfDomain(format!("Re(s + shift) = {} ≤ {HURWITZ_MIN_RE}", (s + a).re)));
        }
    }
    Ok(())
}

/// `ζ(s, L, K)` for `L = 1..=K`, without the common factor `K^{−s}`.
fn hurwitz_row(s: C64, k: u64) -> Result<Vec<C64>> {
    (1..=k).map(|l| hurwitz_zeta(s, l as f64 / k as f64)).collect()
}

/// `D_{α,β,γ}(s, H/K)` by the Hurwitz grid, with the default modulus cap.
pub fn estermann_hurwitz(s: C64, twist: AdditiveTwist, shifts: &ShiftTriple) -> Result<C64> {
    estermann_hurwitz_capped(s, twist, shifts, DEFAULT_MAX_MODULUS)
}

/// `D_{α,β,γ}(s, H/K)` by the Hurwitz grid.
///
/// After the `3K` Hurwitz values, the innermost sum over `N` depends on
/// `(L, M)` only through `r = HLM mod K`, so it is tabulated once per residue.
pub fn estermann_hurwitz_capped(s: C64, twist: AdditiveTwist, shifts: &ShiftTriple, max_k: u64) -> Result<C64> {
    let k = twist.k();
    if k > max_k {
        return Err(Error::OutOfDomain(format!("modulus K = {k} exceeds the configured cap {max_k}")));
    }
    guard_poles(s, shifts)?;
    let [a, b, c] = shifts.to_array();
    if k == 1 {
        return Ok(riemann_zeta(s + a)? * riemann_zeta(s + b)? * riemann_zeta(s + c)?);
    }
    let za = hurwitz_row(s + a, k)?;
    let zb = hurwitz_row(s + b, k)?;
    let zc = hurwitz_row(s + c, k)?;
    let roots = UnitRoots::new(k);
    // row[r] = Σ_N e(rN/K) ζ(s+γ, N/K)
    let row: Vec<C64> =
        (0..k).map(|r| compensated::sum((1..=k).map(|n| roots.at(r * n % k) * zc[(n - 1) as usize]))).collect();
    let h = twist.h() % k;
    let mut acc = NeumaierSum::new();
    for l in 1..=k {
        let hl = h * l % k;
        let mut inner = NeumaierSum::new();
        for m in 1..=k {
            inner.add(zb[(m - 1) as usize] * row[(hl * m % k) as usize]);
        }
        acc.add(za[(l - 1) as usize] * inner.value());
    }
    // Common factor K^{−(3s+α+β+γ)}.
    let scale = (-(3.0 * s + shifts.sum()) * (k as f64).ln()).exp();
    Ok(acc.value() * scale)
}

// ---------------------------------------------------------------------------
// Local factors g_A, G_A and the principal-part model
// ---------------------------------------------------------------------------

/// Series cut-off for the `j`-sums of `g_A`.
const LOCAL_SERIES_TOL: f64 = 1e-18;
const LOCAL_SERIES_MAX_TERMS: usize = 4000;

/// `(∏_α (1 − p^{−s−α})) Σ_{j≥0} τ_A(p^{j+k}) p^{−js}` for one prime.
fn local_factor(s: C64, p: u64, k: u32, shifts: &[C64]) -> Result<C64> {
    let lnp = (p as f64).ln();
    let ratios: Vec<C64> = shifts.iter().map(|a| (-(s + a) * lnp).exp()).collect();
    let worst = ratios.iter().map(|r| r.norm()).fold(0.0, f64::max);
    if worst >= 1.0 {
        return Err(Error::DivergentSeries { ratio: worst });
    }
    let euler: C64 = ratios.iter().map(|r| 1.0 - r).product();
    let ps = (-s * lnp).exp();
    // Terms decay like j^{r−1} worst^j; pick the length up front from that envelope.
    let r = shifts.len() as f64;
    let mut len = 16usize;
    while len < LOCAL_SERIES_MAX_TERMS {
        let j = len as f64;
        if (j + k as f64 + 1.0).powf(r - 1.0) * worst.powf(j) < LOCAL_SERIES_TOL {
            break;
        }
        len *= 2;
    }
    if len >= LOCAL_SERIES_MAX_TERMS {
        return Err(Error::DivergentSeries { ratio: worst });
    }
    let taus = prime_power_taus(shifts, p, len + k as usize);
    let mut acc = NeumaierSum::new();
    let mut pw = C64::new(1.0, 0.0);
    for j in 0..=len {
        acc.add(taus[j + k as usize] * pw);
        pw *= ps;
    }
    Ok(euler * acc.value())
}

/// `g_A(s, K) = ∏_{p | K} (∏_{α∈A} (1 − p^{−s−α})) Σ_j τ_A(p^{j+K_p}) p^{−js}`.
pub fn g_local(s: C64, k: u64, shifts: &[C64]) -> Result<C64> {
    factorize(k).factors().iter().map(|&(p, e)| local_factor(s, p, e, shifts)).product()
}

/// `G_A(s, K) = Σ_{d|K} μ(d)/φ(d) d^s Σ_{e|d} μ(e) e^{−s} g_A(s, Ke/d)`.
pub fn g_global(s: C64, k: u64, shifts: &[C64]) -> Result<C64> {
    let mut acc = NeumaierSum::new();
    for d in divisors(k) {
        let mu_d = mobius(d);
        if mu_d == 0 {
            continue;
        }
        let ds = (s * (d as f64).ln()).exp();
        let mut inner = NeumaierSum::new();
        for e in divisors(d) {
            let mu_e = mobius(e);
            if mu_e == 0 {
                continue;
            }
            let es = (-s * (e as f64).ln()).exp();
            inner.add(es * mu_e as f64 * g_local(s, k * e / d, shifts)?);
        }
        acc.add(ds * inner.value() * (mu_d as f64 / euler_phi(d) as f64));
    }
    Ok(acc.value())
}

/// Closed form `G(s, p) = p^s (1 − (1 − 1/p)^{−1} ∏_α (1 − p^{−s−α}))` for prime `p`.
pub fn g_global_prime(s: C64, p: u64, shifts: &[C64]) -> C64 {
    let lnp = (p as f64).ln();
    let euler: C64 = shifts.iter().map(|a| 1.0 - (-(s + a) * lnp).exp()).product();
    (s * lnp).exp() * (1.0 - euler / (1.0 - 1.0 / p as f64))
}

/// `K^{−s} ζ(s+α) ζ(s+β) ζ(s+γ) G_{α,β,γ}(s, K)`: same principal part as `D`.
pub fn principal_part_model(s: C64, k: u64, shifts: &ShiftTriple) -> Result<C64> {
    let zetas: C64 = shifts.to_array().iter().map(|&a| riemann_zeta(s + a)).product::<Result<C64>>()?;
    Ok((-s * (k as f64).ln()).exp() * zetas * g_global(s, k, &shifts.to_array())?)
}

// ---------------------------------------------------------------------------
// Pole clustering for contour residues
// ---------------------------------------------------------------------------

/// A circle enclosing one cluster of poles and no other singularity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleCluster {
    pub center: C64,
    pub radius: f64,
    /// Number of poles (with multiplicity) inside.
    pub size: usize,
}

/// Poles closer than this are treated as one cluster; it is also the
/// smallest shift gap at which the closed-form residues are used.
pub const CLUSTER_JOIN: f64 = 1e-3;
/// Largest radius used around an isolated pole.
pub const MAX_RESIDUE_RADIUS: f64 = 0.25;

/// Groups `poles` into clusters (single linkage at [`CLUSTER_JOIN`]) and picks
/// for each a circle that stays clear of the other clusters and of `avoid`.
///
/// An isolated pole gets radius `min(gap/3, 0.25)`; a spread cluster gets the
/// geometric mean of its spread and its clearance, balancing the two
/// geometric convergence rates of the circular trapezoid rule.
pub fn pole_clusters(poles: &[C64], avoid: &[C64]) -> Vec<PoleCluster> {
    let n = poles.len();
    let mut label: Vec<usize> = (0..n).collect();
    // Tiny n: repeated relaxation is fine.
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                if (poles[i] - poles[j]).norm() < CLUSTER_JOIN && label[j] > label[i] {
                    label[j] = label[i];
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut ids: Vec<usize> = label.clone();
    ids.sort_unstable();
    ids.dedup();
    ids.iter()
        .map(|&id| {
            let members: Vec<C64> = (0..n).filter(|&i| label[i] == id).map(|i| poles[i]).collect();
            let center = members.iter().sum::<C64>() / members.len() as f64;
            let spread = members.iter().map(|p| (p - center).norm()).fold(0.0, f64::max);
            let clearance = (0..n)
                .filter(|&i| label[i] != id)
                .map(|i| poles[i])
                .chain(avoid.iter().copied())
                .map(|q| (q - center).norm())
                .fold(f64::INFINITY, f64::min);
            let radius = if spread < 1e-12 {
                (clearance / 3.0).min(MAX_RESIDUE_RADIUS)
            } else {
                (spread * clearance).sqrt().min(spread + MAX_RESIDUE_RADIUS)
            };
            PoleCluster { center, radius, size: members.len() }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Smoothed direct series
// ---------------------------------------------------------------------------

/// `w(x) = 1` on `[0,1]`, `0` on `[2,∞)`, smooth in between:
/// `w = ψ(2−x) / (ψ(2−x) + ψ(x−1))` with `ψ(u) = e^{−1/u}`.
fn cutoff(x: f64) -> f64 {
    if x <= 1.0 {
        1.0
    } else if x >= 2.0 {
        0.0
    } else {
        let a = (-1.0 / (2.0 - x)).exp();
        let b = (-1.0 / (x - 1.0)).exp();
        a / (a + b)
    }
}

fn cutoff_derivative(x: f64) -> f64 {
    if x <= 1.0 || x >= 2.0 {
        return 0.0;
    }
    let (u, v) = (2.0 - x, x - 1.0);
    let a = (-1.0 / u).exp();
    let b = (-1.0 / v).exp();
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    -a * b * (1.0 / (u * u) + 1.0 / (v * v)) / ((a + b) * (a + b))
}

/// Nodes for `∫_1^2 w'(x) x^z dx`. The integrand vanishes to all orders at
/// both ends, so the plain trapezoid rule converges faster than any power.
struct CutoffMellin {
    ln_x: Vec<f64>,
    weight: Vec<f64>,
}

const CUTOFF_NODES: usize = 1200;

fn cutoff_mellin() -> &'static CutoffMellin {
    static TABLE: OnceLock<CutoffMellin> = OnceLock::new();
    TABLE.get_or_init(|| {
        let h = 1.0 / CUTOFF_NODES as f64;
        let (ln_x, weight) = (1..CUTOFF_NODES)
            .map(|j| {
                let x = 1.0 + j as f64 * h;
                (x.ln(), cutoff_derivative(x) * h)
            })
            .filter(|&(_, w)| w != 0.0)
            .unzip();
        CutoffMellin { ln_x, weight }
    })
}

/// `W(z) = ∫_0^∞ w(x) x^{z−1} dx = −(1/z) ∫_1^2 w'(x) x^z dx`.
fn cutoff_transform(z: C64) -> C64 {
    let t = cutoff_mellin();
    let integral = compensated::sum(t.ln_x.iter().zip(&t.weight).map(|(&l, &w)| w * (z * l).exp()));
    -integral / z
}

/// `Σ_n a(n) n^{−s} w(n/N)` minus the polar correction
/// `Σ_poles Res_z W(z) N^z P(s+z)`, where `P` shares the principal parts of
/// the Dirichlet series at `poles`.
/// `Σ b(m) w(m/N) − Σ Res W(z) N^z P(s+z)` with `b(m) = a(m) m^{−s}`
/// precomputed. The factor `W(z) P(s+z)` does not depend on `N`, and the
/// contour nodes repeat from one cutoff to the next, so it is cached by node.
fn smoothed_estimate<P>(
    s: C64,
    terms: &[C64],
    n: usize,
    poles: &[C64],
    principal: &P,
    cache: &RefCell<HashMap<(u64, u64), C64>>,
) -> Result<C64>
where
    P: Fn(C64) -> Result<C64>,
{
    let mut acc = NeumaierSum::new();
    for (m, &b) in terms.iter().enumerate().take(2 * n).skip(1) {
        let w = cutoff(m as f64 / n as f64);
        if w == 0.0 {
            continue;
        }
        acc.add(b * w);
    }
    let ln_n = (n as f64).ln();
    let shifted: Vec<C64> = poles.iter().map(|p| p - s).collect();
    let mut correction = NeumaierSum::new();
    for cluster in pole_clusters(&shifted, &[C64::default()]) {
        correction.add(contour_residue(
            |z| {
                let key = (z.re.to_bits(), z.im.to_bits());
                let cached = cache.borrow().get(&key).copied();
                let fixed = match cached {
                    Some(v) => v,
                    None => {
                        let v = cutoff_transform(z) * principal(s + z)?;
                        cache.borrow_mut().insert(key, v);
                        v
                    }
                };
                Ok(fixed * (z * ln_n).exp())
            },
            cluster.center,
            cluster.radius,
        )?);
    }
    Ok(acc.value() - correction.value())
}

/// Largest cut-off tried by the smoothed series.
pub const DIRECT_MAX_TERMS: usize = 1 << 20;

/// Value at `s` of a Dirichlet series `Σ a(n) n^{−s}` with finitely many poles.
///
/// The sum is taken with the smooth weight `w(n/N)`; by Mellin inversion the
/// weighted sum equals the series value plus the residues of
/// `W(z) N^z A(s+z)` at the poles, plus a remainder that decays faster than
/// any power of `N`. Those residues only involve principal parts, which
/// `principal` must reproduce. `N` doubles until two estimates agree to `tol`.
/// `terms(len)` returns the weighted coefficients `a(m) m^{−s}` for
/// `0 ≤ m < len` (index 0 is ignored).
pub fn smoothed_dirichlet<A, P>(s: C64, tol: f64, terms: A, poles: &[C64], principal: P) -> Result<C64>
where
    A: Fn(usize) -> Vec<C64>,
    P: Fn(C64) -> Result<C64>,
{
    let cache = RefCell::new(HashMap::new());
    let mut n = 128usize;
    let mut table = terms(4 * n);
    let mut prev = smoothed_estimate(s, &table, n, poles, &principal, &cache)?;
    let mut change = f64::INFINITY;
    while n < DIRECT_MAX_TERMS {
        n *= 2;
        if table.len() < 2 * n {
            table = terms(4 * n);
        }
        let next = smoothed_estimate(s, &table, n, poles, &principal, &cache)?;
        change = (next - prev).norm();
        if change <= tol * next.norm().max(1e-300) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::TruncationFailure { cap: DIRECT_MAX_TERMS, tail: change })
}

/// `D_{α,β,γ}(s, H/K)` from the Dirichlet series itself (`Re s ≥ 1.25`),
/// via [`smoothed_dirichlet`] with [`principal_part_model`] for the poles.
pub fn estermann_direct(s: C64, twist: AdditiveTwist, shifts: &ShiftTriple, tol: f64) -> Result<C64> {
    estermann_direct_batch(s, &[twist], shifts, tol).pop().expect("one twist in, one value out")
}

/// [`estermann_direct`] for several twists at once, sharing the coefficient
/// sieve (which depends on `s` and the shifts only).
pub fn estermann_direct_batch(s: C64, twists: &[AdditiveTwist], shifts: &ShiftTriple, tol: f64) -> Vec<Result<C64>> {
    if s.re < DIRECT_MIN_RE {
        let err = Error::OutOfDomain(format!("direct series needs Re s ≥ {DIRECT_MIN_RE}, got {s}"));
        return twists.iter().map(|_| Err(err.clone())).collect();
    }
    // τ_A(m) m^{−s} = τ_{A+s}(m): the sieve absorbs the power.
    let weighted: Vec<C64> = shifts.to_array().iter().map(|a| a + s).collect();
    let base: RefCell<Vec<C64>> = RefCell::new(Vec::new());
    let poles: Vec<C64> = shifts.to_array().iter().map(|a| 1.0 - a).collect();
    twists
        .iter()
        .map(|&twist| {
            let roots = UnitRoots::new(twist.k());
            let terms = |len: usize| -> Vec<C64> {
                if base.borrow().len() < len {
                    *base.borrow_mut() = tau_table(&weighted, len - 1);
                }
                base.borrow()[..len]
                    .iter()
                    .enumerate()
                    .map(|(m, t)| t * roots.at(twist.h() * (m as u64 % twist.k()) % twist.k()))
                    .collect()
            };
            smoothed_dirichlet(s, tol, terms, &poles, |u| principal_part_model(u, twist.k(), shifts))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Polar data
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolarSource {
    Formula,
    Contour,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarDatum {
    pub pole: C64,
    pub residue: C64,
    pub source: PolarSource,
}

/// `Res_{s=1−α} D = K^{−(1−α)} ζ(1−α+β) ζ(1−α+γ) G_{α,β,γ}(1−α, K)` for the
/// shift at `index`; requires the three shifts to be pairwise distinct.
pub fn formula_residue(k: u64, shifts: &ShiftTriple, index: usize) -> Result<C64> {
    let all = shifts.to_array();
    if shifts.min_gap() < CLUSTER_JOIN {
        return Err(Error::InvalidArgument("formula residues need pairwise distinct shifts".into()));
    }
    let a = all[index];
    let pole = 1.0 - a;
    let mut value = (-pole * (k as f64).ln()).exp() * g_global(pole, k, &all)?;
    for (j, &b) in all.iter().enumerate() {
        if j != index {
            value *= riemann_zeta(1.0 - a + b)?;
        }
    }
    Ok(value)
}

/// Residues of `D` at its poles by both routes.
///
/// With pairwise-distinct shifts each pole carries a formula datum and a
/// contour datum (in that order). Coincident shifts give one contour datum
/// per cluster, centred on the cluster.
pub fn polar_data(twist: AdditiveTwist, shifts: &ShiftTriple) -> Result<Vec<PolarDatum>> {
    let poles: Vec<C64> = shifts.to_array().iter().map(|a| 1.0 - a).collect();
    let clusters = pole_clusters(&poles, &[]);
    let distinct = shifts.min_gap() >= CLUSTER_JOIN;
    let mut out = Vec::new();
    for (i, cluster) in clusters.iter().enumerate() {
        if distinct {
            out.push(PolarDatum {
                pole: cluster.center,
                residue: formula_residue(twist.k(), shifts, i)?,
                source: PolarSource::Formula,
            });
        }
        let residue = contour_residue(|s| estermann_hurwitz(s, twist, shifts), cluster.center, cluster.radius)?;
        out.push(PolarDatum { pole: cluster.center, residue, source: PolarSource::Contour });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Functional equation
// ---------------------------------------------------------------------------

/// The right-hand side of the functional equation, expressing `D(s, H/K)`
/// through `D_{−α,−β,−γ}(1−s, ·)`.
///
/// The inner twist `−ε₁ε₂ε₃ H̄ h a / (K/d)` is reduced to lowest terms before
/// evaluation. Within each sign class `ε₁ε₂ε₃ = ±1` the inner sums agree, so
/// the eight phase factors are pre-summed per class.
pub fn functional_equation_rhs(s: C64, twist: AdditiveTwist, shifts: &ShiftTriple) -> Result<C64> {
    let k = twist.k();
    let hbar = twist.inverse() as i64;
    let neg = shifts.negated();
    let pair = shifts.pair_sums();
    let total = shifts.sum();
    let i = C64::i();
    let z = shifts.to_array().map(|a| s + a);
    // Phase sums per class of ε₁ε₂ε₃.
    let mut class = [C64::default(); 2];
    for eps in Signs::all() {
        let phase =
            (i * std::f64::consts::FRAC_PI_2 * eps.0.iter().zip(z).map(|(&e, zj)| zj * e as f64).sum::<C64>()).exp();
        let idx = if eps.product() == 1 { 0 } else { 1 };
        class[idx] += phase * eps.product() as f64;
    }
    debug_assert!((class[0] + class[1] - sign_sum_closed(z)).norm() <= 1e-12 * (class[0].norm() + class[1].norm()));
    let mut acc = NeumaierSum::new();
    for d in divisors(k) {
        let q = k / d;
        let roots = UnitRoots::new(q);
        let ds = ((2.0 * s - 1.0) * (d as f64).ln()).exp();
        for h in divisors(d) {
            let mu = mobius(h);
            if mu == 0 {
                continue;
            }
            let coeff = divisor_tau(&pair, d / h) * mu as f64 * (-(1.0 - s - total) * (h as f64).ln()).exp();
            for (idx, sign) in [(0usize, 1i64), (1, -1)] {
                let mut inner = NeumaierSum::new();
                for a in (1..=q).filter(|&a| gcd(a, q) == 1) {
                    let abar = crate::arith::mod_inverse(a as i64, q)? % q;
                    let num = -sign * hbar * h as i64 * a as i64;
                    let inner_twist = AdditiveTwist::from_fraction(num.rem_euclid(q as i64), q)?;
                    inner.add(roots.at(abar) * estermann_hurwitz(1.0 - s, inner_twist, &neg)?);
                }
                acc.add(class[idx] * ds * coeff * inner.value());
            }
        }
    }
    let front = ((1.0 - 3.0 * s - total) * (k as f64).ln()).exp() * gamma_factor_triple(s, shifts)?;
    Ok(front * acc.value())
}

/// Two-sided functional-equation check at relative tolerance `tol`.
pub fn check_functional_equation(s: C64, twist: AdditiveTwist, shifts: &ShiftTriple, tol: f64) -> CheckReport {
    let start = Instant::now();
    let result =
        estermann_hurwitz(s, twist, shifts).and_then(|lhs| Ok((lhs, functional_equation_rhs(s, twist, shifts)?)));
    CheckReport::from_result("estermann_functional_equation", result, tol, Metric::Relative)
        .param("s", s)
        .param("twist", twist)
        .param("shifts", shifts)
        .timed(start.elapsed())
}

/// Sweeps the functional equation and reports the worst case, annotated with
/// the number of points checked and skipped.
pub fn verify_functional_equation(
    grid: &[C64],
    twists: &[AdditiveTwist],
    shifts: &[ShiftTriple],
    tol: f64,
) -> CheckReport {
    let start = Instant::now();
    let mut reports = Vec::new();
    for &s in grid {
        for &t in twists {
            for sh in shifts {
                reports.push(check_functional_equation(s, t, sh, tol));
            }
        }
    }
    let checked = reports.iter().filter(|r| r.status != crate::Status::Skipped).count();
    let skipped = reports.len() - checked;
    let worst = reports
        .iter()
        .filter(|r| r.status != crate::Status::Skipped)
        .max_by(|a, b| a.deviation().partial_cmp(&b.deviation()).unwrap_or(std::cmp::Ordering::Greater))
        .cloned();
    match worst {
        Some(r) => r.param("points", checked).param("skipped", skipped).timed(start.elapsed()),
        None => CheckReport::skipped(
            "estermann_functional_equation",
            &Error::InvalidArgument("no evaluable points in the sweep".into()),
            tol,
            Metric::Relative,
        )
        .param("skipped", skipped),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm()
    }

    fn twist(h: i64, k: u64) -> AdditiveTwist {
        AdditiveTwist::new(h, k).unwrap()
    }

    fn shifts(a: C64, b: C64, g: C64) -> ShiftTriple {
        ShiftTriple::new(a, b, g).unwrap()
    }

    #[test]
    fn cutoff_transform_values() {
        // W(1) = ∫_0^∞ w = 1 + ½ by the symmetry w(3/2 + u) = 1 − w(3/2 − u).
        assert!((cutoff_transform(c(1.0, 0.0)) - 1.5).norm() < 1e-14);
        // W(z) − 1/z is entire; at z = −1 compare with direct quadrature of
        // ∫_0^1 (x^{−2}) … diverges, so use ∫_1^2 w(x) x^{z−1} with Simpson instead.
        let z = c(-1.0, 0.3);
        let n = 200_000;
        let h = 1.0 / n as f64;
        let f = |x: f64| cutoff(x) * (C64::new(x.ln(), 0.0) * (z - 1.0)).exp();
        let mut acc = f(1.0) + f(2.0);
        for j in 1..n {
            acc += f(1.0 + j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 };
        }
        let expect = 1.0 / z + acc * h / 3.0;
        assert!((cutoff_transform(z) - expect).norm() < 1e-12, "{} vs {expect}", cutoff_transform(z));
    }

    #[test]
    fn hurwitz_route_trivial_modulus() {
        let sh = shifts(c(0.1, 0.0), c(-0.2, 0.1), c(0.0, 0.0));
        let s = c(0.3, 4.0);
        let expect: C64 = sh.to_array().iter().map(|&a| riemann_zeta(s + a).unwrap()).product();
        assert!(rel(estermann_hurwitz(s, AdditiveTwist::trivial(), &sh).unwrap(), expect) < 1e-14);
    }

    #[test]
    fn alternating_twist_closed_form() {
        let z2 = PI * PI / 6.0;
        let expect = c(z2.powi(3) * (-1.0 + 6.0 / 4.0 - 6.0 / 16.0 + 2.0 / 64.0), 0.0);
        let s = c(2.0, 0.0);
        let h = estermann_hurwitz(s, twist(1, 2), &ShiftTriple::zero()).unwrap();
        let d = estermann_direct(s, twist(1, 2), &ShiftTriple::zero(), 1e-13).unwrap();
        assert!(rel(h, expect) < 1e-13, "{h} vs {expect}");
        assert!(rel(d, expect) < 1e-11, "{d} vs {expect}");
    }

    #[test]
    fn direct_untwisted_is_zeta_cubed() {
        for s in [c(2.0, 0.0), c(1.5, 3.0)] {
            let expect = riemann_zeta(s).unwrap().powi(3);
            let d = estermann_direct(s, AdditiveTwist::trivial(), &ShiftTriple::zero(), 1e-13).unwrap();
            assert!(rel(d, expect) < 1e-11, "s = {s}: {d} vs {expect}");
        }
    }

    #[test]
    fn direct_against_hurwitz_twisted_shifted() {
        let sh = shifts(c(0.1, 0.0), c(-0.05, 0.0), c(0.0, 0.02));
        let s = c(2.5, 1.0);
        let t = twist(2, 5);
        let d = estermann_direct(s, t, &sh, 1e-13).unwrap();
        let h = estermann_hurwitz(s, t, &sh).unwrap();
        assert!(rel(d, h) < 1e-10, "{d} vs {h}");
        // Plain truncation at 2·10^5 terms agrees to its own (slow) accuracy.
        let taus = tau_table(&sh.to_array(), 200_000);
        let plain: C64 = (1..=200_000u64).map(|n| taus[n as usize] * t.phase(n) * (-s * (n as f64).ln()).exp()).sum();
        assert!(rel(plain, h) < 1e-6);
    }

    #[test]
    fn direct_rejects_left_half() {
        assert!(matches!(
            estermann_direct(c(1.2, 0.0), AdditiveTwist::trivial(), &ShiftTriple::zero(), 1e-10),
            Err(Error::OutOfDomain(_))
        ));
    }

    #[test]
    fn pole_guard_trips() {
        let sh = shifts(c(0.1, 0.0), c(0.0, 0.0), c(-0.1, 0.0));
        let err = estermann_hurwitz(c(0.9 + 1e-8, 0.0), twist(1, 3), &sh).unwrap_err();
        assert!(err.is_pole());
    }

    #[test]
    fn g_local_values() {
        let z = [C64::default(); 3];
        assert_eq!(g_local(c(1.0, 0.0), 1, &z).unwrap(), c(1.0, 0.0));
        for p in [2u64, 3, 7] {
            let s = c(1.5, 0.0);
            // (1 − p^{−s})³ Σ_{j<200} τ₃(p^{j+1}) p^{−js}, with τ₃(p^k) = (k+1)(k+2)/2.
            let x = (p as f64).powf(-1.5);
            let series: f64 = (0..200).map(|j| ((j + 2) * (j + 3)) as f64 / 2.0 * x.powi(j)).sum();
            let expect = (1.0 - x).powi(3) * series;
            assert!((g_local(s, p, &z).unwrap().re - expect).abs() < 1e-13 * expect);
        }
        let sh = [c(0.1, 0.0), c(0.0, 0.2), c(-0.1, 0.0)];
        let s = c(1.3, 0.4);
        let prod = g_local(s, 4, &sh).unwrap() * g_local(s, 3, &sh).unwrap();
        assert!(rel(g_local(s, 12, &sh).unwrap(), prod) < 1e-14);
    }

    #[test]
    fn g_local_signals_divergence() {
        let err = g_local(c(-0.2, 0.0), 2, &[C64::default(); 3]).unwrap_err();
        assert!(err.is_decay_failure());
    }

    #[test]
    fn big_g_prime_closed_form() {
        let sh = [c(0.1, 0.05), c(-0.15, 0.0), c(0.0, -0.1)];
        for p in [2u64, 3, 5, 7] {
            for s in [c(0.8, 0.0), c(1.2, 1.0), c(2.0, -3.0), c(0.95, 0.3)] {
                let def = g_global(s, p, &sh).unwrap();
                let closed = g_global_prime(s, p, &sh);
                assert!(rel(def, closed) < 1e-12, "p = {p}, s = {s}");
            }
        }
        assert_eq!(g_global(c(1.3, 0.0), 1, &sh).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn big_g_at_pole_matches_displayed_value() {
        let (a, b, g) = (c(0.2, 0.0), c(-0.1, 0.1), c(0.05, 0.0));
        for p in [2u64, 3, 5] {
            let pf = p as f64;
            let pw = |z: C64| (z * pf.ln()).exp();
            let expect =
                pw(1.0 - a) * (1.0 / pw(1.0 - a + b) + 1.0 / pw(1.0 - a + g) - 1.0 / pw(2.0 - 2.0 * a + b + g));
            let got = g_global(1.0 - a, p, &[a, b, g]).unwrap();
            assert!(rel(got, expect) < 1e-12, "p = {p}");
        }
    }

    #[test]
    fn big_g_definition_brute_force() {
        // Independent evaluation for K = 6: j-sums to 150 terms from brute-force τ.
        let sh = [c(0.1, 0.0), c(0.0, 0.0), c(-0.1, 0.0)];
        let s = c(1.2, 0.0);
        let tau_pk = |p: u64, k: u32| -> C64 {
            let lp = (p as f64).ln();
            let mut acc = C64::default();
            for i in 0..=k {
                for j in 0..=(k - i) {
                    let l = k - i - j;
                    acc += (-(sh[0] * i as f64 + sh[1] * j as f64 + sh[2] * l as f64) * lp).exp();
                }
            }
            acc
        };
        let g_brute = |k: u64| -> C64 {
            let mut out = c(1.0, 0.0);
            for (p, e) in [(2u64, 0u32), (3, 0)].map(|(p, _)| {
                let mut e = 0;
                let mut m = k;
                while m.is_multiple_of(p) {
                    m /= p;
                    e += 1;
                }
                (p, e)
            }) {
                if e == 0 {
                    continue;
                }
                let x = (-s * (p as f64).ln()).exp();
                let euler: C64 = sh.iter().map(|a| 1.0 - (-(s + a) * (p as f64).ln()).exp()).product();
                let mut series = C64::default();
                let mut xp = c(1.0, 0.0);
                for j in 0..150u32 {
                    series += tau_pk(p, j + e) * xp;
                    xp *= x;
                }
                out *= euler * series;
            }
            out
        };
        let mut expect = C64::default();
        for d in [1u64, 2, 3, 6] {
            let mu_d = [0.0, 1.0, -1.0, -1.0, 0.0, 0.0, 1.0][d as usize];
            let phi_d = [0.0, 1.0, 1.0, 2.0, 0.0, 0.0, 2.0][d as usize];
            for e in (1..=d).filter(|e| d % e == 0) {
                let mu_e = [0.0, 1.0, -1.0, -1.0, 0.0, 0.0, 1.0][e as usize];
                expect += mu_d / phi_d
                    * (s * (d as f64).ln()).exp()
                    * mu_e
                    * (-s * (e as f64).ln()).exp()
                    * g_brute(6 * e / d);
            }
        }
        let got = g_global(s, 6, &sh).unwrap();
        assert!(rel(got, expect) < 1e-12, "{got} vs {expect}");
    }

    #[test]
    fn pole_clusters_geometry() {
        let poles = [c(0.9, 0.0), c(1.0, 0.0), c(1.2, 0.0)];
        let cl = pole_clusters(&poles, &[]);
        assert_eq!(cl.len(), 3);
        assert!((cl[0].radius - 0.1 / 3.0).abs() < 1e-15);
        let cl = pole_clusters(&[c(1.0, 0.0); 3], &[c(0.0, 0.0)]);
        assert_eq!(cl.len(), 1);
        assert_eq!(cl[0].size, 3);
        assert!((cl[0].radius - 0.25).abs() < 1e-15);
        let cl = pole_clusters(&[c(1.0, 0.0), c(1.0005, 0.0)], &[c(2.0, 0.0)]);
        assert_eq!(cl.len(), 1);
        assert!(cl[0].radius > 0.00025 && cl[0].radius < 0.99975);
        assert_eq!(pole_clusters(&[c(1.0, 0.0), c(1.01, 0.0)], &[]).len(), 2);
    }

    #[test]
    fn polar_formula_matches_contour() {
        let sh = shifts(c(0.3, 0.0), c(0.0, 0.0), c(-0.2, 0.0));
        for t in [AdditiveTwist::trivial(), twist(1, 2), twist(1, 6)] {
            let data = polar_data(t, &sh).unwrap();
            assert_eq!(data.len(), 6);
            for pair in data.chunks(2) {
                assert_eq!(pair[0].source, PolarSource::Formula);
                assert!(rel(pair[1].residue, pair[0].residue) < 1e-8, "{t}: {:?}", pair);
            }
        }
    }

    #[test]
    fn polar_data_independent_of_h() {
        let sh = shifts(c(0.1, 0.05), c(-0.1, 0.0), c(0.0, -0.15));
        let a = polar_data(twist(1, 5), &sh).unwrap();
        let b = polar_data(twist(2, 5), &sh).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(rel(x.residue, y.residue) < 1e-9);
        }
    }

    #[test]
    fn polar_data_coincident_shifts_contour_only() {
        let data = polar_data(twist(1, 2), &ShiftTriple::zero()).unwrap();
        assert_eq!(data.len(), 1);
        assert_eq!(data[0].source, PolarSource::Contour);
        // Residue of D(s, 1/2) = ζ(s)³(−1 + 6/2^s − 6/4^s + 2/8^s) at s = 1.
        let expect = contour_residue(
            |s| {
                let f =
                    -1.0 + 6.0 * (-s * 2f64.ln()).exp() - 6.0 * (-s * 4f64.ln()).exp() + 2.0 * (-s * 8f64.ln()).exp();
                Ok(riemann_zeta(s)?.powi(3) * f)
            },
            c(1.0, 0.0),
            0.25,
        )
        .unwrap();
        assert!((data[0].residue - expect).norm() < 1e-10);
    }

    #[test]
    fn functional_equation_untwisted_reduces_to_zeta() {
        let s = c(0.3, 1.0);
        let rhs = functional_equation_rhs(s, AdditiveTwist::trivial(), &ShiftTriple::zero()).unwrap();
        let expect = riemann_zeta(s).unwrap().powi(3);
        assert!(rel(rhs, expect) < 1e-10, "{rhs} vs {expect}");
    }

    #[test]
    fn functional_equation_examples() {
        let sh = shifts(c(0.1, 0.0), c(-0.1, 0.0), c(0.05, 0.0));
        let r = check_functional_equation(c(0.5, 0.0), twist(1, 2), &sh, 1e-8);
        assert!(r.passed(), "{r:?}");
        let r = check_functional_equation(c(0.5, 2.0), twist(2, 3), &sh, 1e-8);
        assert!(r.passed(), "{r:?}");
        let r = check_functional_equation(c(0.3, 1.0), twist(5, 6), &sh, 1e-8);
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn continuation_example_left_of_strip() {
        // s = −0.5, (1,3): the Hurwitz value re-derived through the functional equation.
        let sh = shifts(c(0.1, 0.0), c(0.2, 0.0), c(-0.1, 0.0));
        let r = check_functional_equation(c(-0.5, 0.0), twist(1, 3), &sh, 1e-8);
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn verify_sweep_reports_worst_case() {
        let sh = shifts(c(0.1, 0.0), c(-0.1, 0.0), c(0.05, 0.0));
        let r = verify_functional_equation(&[c(0.5, 0.0), c(0.3, 1.0)], &[twist(1, 4), twist(3, 4)], &[sh], 1e-8);
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.params["points"], "4");
    }
}
