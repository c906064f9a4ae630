//! Named check suites over parameter grids.
//!
//! The default grids are exactly the acceptance grids; [`SuiteConfig`]
//! overrides narrow or widen them. Cases run in parallel and the reports come
//! back sorted by [`CheckReport::key`], so output is independent of
//! scheduling.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{
    check_selberg_identity, gcd, ramanujan_sum, ramanujan_sum_direct, triple_exp_sum_closed, triple_exp_sum_direct,
};
use crate::estermann::{check_functional_equation, estermann_direct_batch, estermann_hurwitz, polar_data, PolarSource};
use crate::special::zeta::check_hurwitz_fe;
use crate::voronoi::{
    check_corollary, check_even_tau3, check_perron, check_voronoi, corollary_rhs, f_kernel, f_kernel_mode, h_kernel,
    voronoi_rhs, DualSumOptions, KernelMode,
};
use crate::{
    AdditiveTwist, CheckReport, ContourSpec, Error, Metric, PhasedModulus, ShiftTriple, Signs, Status, TestFunction,
    C64,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Identities,
    HurwitzFe,
    Continuation,
    Polar,
    EstermannFe,
    Voronoi,
    Corollary,
    Kernels,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Identities,
        Suite::HurwitzFe,
        Suite::Continuation,
        Suite::Polar,
        Suite::EstermannFe,
        Suite::Voronoi,
        Suite::Corollary,
        Suite::Kernels,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::HurwitzFe => "hurwitz-fe",
            Suite::Continuation => "continuation",
            Suite::Polar => "polar",
            Suite::EstermannFe => "estermann-fe",
            Suite::Voronoi => "voronoi",
            Suite::Corollary => "corollary",
            Suite::Kernels => "kernels",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite `{s}`")))
    }
}

/// Per-check tolerances; defaults are the acceptance tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Tolerances {
    /// Absolute, per summed term.
    pub identities: f64,
    pub hurwitz_fe: f64,
    pub continuation: f64,
    pub polar: f64,
    pub polar_h_independence: f64,
    pub estermann_fe: f64,
    pub voronoi: f64,
    pub perron: f64,
    pub corollary: f64,
    pub even_tau3: f64,
    pub kernels: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identities: 1e-8,
            hurwitz_fe: 1e-10,
            continuation: 1e-10,
            polar: 1e-8,
            polar_h_independence: 1e-9,
            estermann_fe: 1e-8,
            voronoi: 1e-4,
            perron: 1e-8,
            corollary: 1e-4,
            even_tau3: 1e-10,
            kernels: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<(), Error> {
        let all = [
            self.identities,
            self.hurwitz_fe,
            self.continuation,
            self.polar,
            self.polar_h_independence,
            self.estermann_fe,
            self.voronoi,
            self.perron,
            self.corollary,
            self.even_tau3,
            self.kernels,
        ];
        if all.iter().all(|t| *t > 0.0 && t.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidArgument("tolerances must be positive and finite".into()))
        }
    }
}

/// Grid overrides for the suites. `None` keeps the acceptance grid.
#[derive(Debug, Clone, Default)]
pub struct SuiteConfig {
    pub moduli: Option<Vec<u64>>,
    pub shifts: Option<Vec<ShiftTriple>>,
    pub s_values: Option<Vec<C64>>,
    pub phi: Option<TestFunction>,
    pub tolerances: Tolerances,
    /// Contour for the dual-sum kernels.
    pub contour: Option<ContourSpec>,
    pub dual_cap: Option<usize>,
}

impl SuiteConfig {
    fn moduli_or(&self, default: &[u64]) -> Vec<u64> {
        self.moduli.clone().unwrap_or_else(|| default.to_vec())
    }

    fn shifts_or(&self, default: &[ShiftTriple]) -> Vec<ShiftTriple> {
        self.shifts.clone().unwrap_or_else(|| default.to_vec())
    }

    fn s_or(&self, default: &[C64]) -> Vec<C64> {
        self.s_values.clone().unwrap_or_else(|| default.to_vec())
    }

    fn dual_options(&self) -> DualSumOptions {
        let base = DualSumOptions::default();
        DualSumOptions { cap: self.dual_cap.unwrap_or(base.cap), contour: self.contour, ..base }
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn triple(a: C64, b: C64, g: C64) -> ShiftTriple {
    ShiftTriple::new(a, b, g).expect("grid shifts are within bounds")
}

/// Shift triples for the continuation grid (coincident and complex included).
pub fn continuation_shifts() -> Vec<ShiftTriple> {
    vec![
        ShiftTriple::zero(),
        triple(c(0.1, 0.0), c(-0.05, 0.0), c(-0.02, 0.0)),
        triple(c(0.2, 0.0), c(0.0, 0.0), c(-0.2, 0.0)),
        triple(c(0.1, 0.05), c(-0.1, 0.0), c(0.0, 0.03)),
        triple(c(0.3, 0.0), c(-0.25, 0.0), c(0.0, 0.1)),
    ]
}

/// Pairwise-distinct shift triples with `|shift| ≤ 0.2`.
pub fn polar_shifts() -> Vec<ShiftTriple> {
    vec![
        triple(c(0.2, 0.0), c(0.0, 0.0), c(-0.2, 0.0)),
        triple(c(0.1, 0.1), c(-0.1, 0.0), c(0.0, -0.05)),
        triple(c(0.15, 0.0), c(-0.1, 0.0), c(0.02, 0.0)),
    ]
}

/// Pairwise-distinct shift triples for the functional equation.
pub fn fe_shifts() -> Vec<ShiftTriple> {
    vec![
        triple(c(0.1, 0.0), c(-0.1, 0.0), c(0.05, 0.0)),
        triple(c(0.2, 0.0), c(0.0, 0.0), c(-0.15, 0.0)),
        triple(c(0.05, 0.1), c(-0.1, 0.0), c(0.0, 0.02)),
    ]
}

pub fn voronoi_shifts() -> ShiftTriple {
    triple(c(0.1, 0.0), c(-0.05, 0.0), c(-0.02, 0.0))
}

/// All `H/K` with `1 ≤ H ≤ K`, `(H, K) = 1`, for `K` in `moduli`.
pub fn twists(moduli: &[u64]) -> Vec<AdditiveTwist> {
    moduli
        .iter()
        .flat_map(|&k| {
            (1..=k).filter(move |&h| gcd(h, k) == 1).map(move |h| AdditiveTwist::new(h as i64, k).expect("coprime"))
        })
        .collect()
}

type Case<'a> = Box<dyn Fn() -> Vec<CheckReport> + Send + Sync + 'a>;

/// Runs `suite`, returning reports sorted by key.
pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Vec<CheckReport> {
    let cases: Vec<Case> = match suite {
        Suite::Identities => identity_cases(cfg),
        Suite::HurwitzFe => hurwitz_fe_cases(cfg),
        Suite::Continuation => continuation_cases(cfg),
        Suite::Polar => polar_cases(cfg),
        Suite::EstermannFe => estermann_fe_cases(cfg),
        Suite::Voronoi => voronoi_cases(cfg),
        Suite::Corollary => corollary_cases(cfg),
        Suite::Kernels => kernel_cases(cfg),
    };
    let mut reports: Vec<CheckReport> =
        cases.par_iter().flat_map_iter(|case| case()).map(|r| r.in_suite(suite.name())).collect();
    reports.sort_by_key(|r| r.key());
    reports
}

/// Collapses a batch of per-case reports into one: the case with the largest
/// deviation-to-tolerance ratio, annotated with the batch size and failures.
pub fn aggregate(reports: Vec<CheckReport>) -> CheckReport {
    let cases = reports.len();
    let failures = reports.iter().filter(|r| r.status == Status::Fail).count();
    let skipped = reports.iter().filter(|r| r.status == Status::Skipped).count();
    let wall: f64 = reports.iter().map(|r| r.wall_time_s).sum();
    let ratio = |r: &CheckReport| match r.status {
        Status::Skipped => -1.0,
        _ if r.deviation().is_nan() => f64::INFINITY,
        _ => r.deviation() / r.tolerance,
    };
    let mut worst = reports
        .into_iter()
        .max_by(|a, b| ratio(a).partial_cmp(&ratio(b)).unwrap_or(std::cmp::Ordering::Equal))
        .expect("non-empty batch");
    worst.params.insert("cases".into(), cases.to_string());
    worst.params.insert("failures".into(), failures.to_string());
    worst.params.insert("skipped".into(), skipped.to_string());
    if failures > 0 {
        worst.status = Status::Fail;
    }
    worst.wall_time_s = wall;
    worst
}

fn identity_cases(cfg: &SuiteConfig) -> Vec<Case<'static>> {
    let tol = cfg.tolerances.identities;
    let mut cases: Vec<Case> = Vec::new();
    for k in cfg.moduli_or(&(1..=12).collect::<Vec<_>>()) {
        cases.push(Box::new(move || {
            let start = Instant::now();
            let mut batch = Vec::new();
            for h in (1..=k).filter(|&h| gcd(h, k) == 1) {
                for l in 1..=k as i64 {
                    for m in 1..=k as i64 {
                        for n in 1..=k as i64 {
                            for eps in Signs::all() {
                                let result = triple_exp_sum_direct(h as i64, k, l, m, n, eps)
                                    .and_then(|d| Ok((d, triple_exp_sum_closed(h as i64, k, l, m, n, eps)?)));
                                let terms = (k * k * k) as f64;
                                batch.push(
                                    CheckReport::from_result(
                                        "triple_exponential_sum",
                                        result,
                                        tol * terms,
                                        Metric::Absolute,
                                    )
                                    .param("K", k)
                                    .param("H", h)
                                    .param("lmn", format!("{l},{m},{n}"))
                                    .param("signs", format!("{:?}", eps.0)),
                                );
                            }
                        }
                    }
                }
            }
            vec![aggregate(batch).timed(start.elapsed())]
        }));
    }
    for q in 1..=30u64 {
        cases.push(Box::new(move || {
            let start = Instant::now();
            let q_i = q as i64;
            let batch: Vec<CheckReport> = (-q_i..=q_i)
                .flat_map(|a| (-q_i..=q_i).map(move |b| (a, b)))
                .map(|(a, b)| {
                    let r = check_selberg_identity(a, b, q);
                    // Rescale to the suite tolerance, keeping the term-count factor.
                    let tolerance = r.tolerance / 1e-8 * tol;
                    CheckReport::compare(&r.check, r.lhs, r.rhs, tolerance, Metric::Absolute)
                        .param("a", a)
                        .param("b", b)
                })
                .collect();
            vec![aggregate(batch).param("q", q).timed(start.elapsed())]
        }));
    }
    for k in 1..=60u64 {
        cases.push(Box::new(move || {
            let start = Instant::now();
            let batch = (1..=60i64)
                .map(|n| {
                    CheckReport::compare(
                        "ramanujan_sum",
                        ramanujan_sum_direct(k, n),
                        c(ramanujan_sum(k, n), 0.0),
                        tol * k as f64,
                        Metric::Absolute,
                    )
                    .param("n", n)
                })
                .collect();
            vec![aggregate(batch).param("K", k).timed(start.elapsed())]
        }));
    }
    cases
}

fn hurwitz_fe_cases(cfg: &SuiteConfig) -> Vec<Case<'static>> {
    let tol = cfg.tolerances.hurwitz_fe;
    let s_values = cfg.s_or(&[c(-1.5, 0.0), c(-0.5, 0.0), c(0.3, 2.0), c(0.5, 0.0), c(2.5, 0.0)]);
    let mut cases: Vec<Case> = Vec::new();
    for t in twists(&cfg.moduli_or(&[1, 2, 5])) {
        for &s in &s_values {
            cases.push(Box::new(move || {
                let r = check_hurwitz_fe(s, t.h(), t.k());
                vec![CheckReport { tolerance: tol, status: status_for(&r, tol), ..r }]
            }));
        }
    }
    cases
}

fn status_for(r: &CheckReport, tol: f64) -> Status {
    match r.status {
        Status::Skipped => Status::Skipped,
        _ if r.deviation() <= tol => Status::Pass,
        _ => Status::Fail,
    }
}

/// Stopping rule for the direct series: consecutive cutoffs agreeing to this.
/// Summing ~10⁶ terms leaves a round-off floor near 5e-14, so 1e-13 can stall.
const DIRECT_TOL: f64 = 1e-12;

fn continuation_cases(cfg: &SuiteConfig) -> Vec<Case<'static>> {
    let tol = cfg.tolerances.continuation;
    let s_values = cfg.s_or(&[c(2.0, 0.0), c(2.0, 3.0)]);
    let all = twists(&cfg.moduli_or(&[1, 2, 3, 4, 5, 6, 7, 8]));
    let mut cases: Vec<Case> = Vec::new();
    // One case per (shifts, s): the direct route shares its sieve over twists.
    for sh in cfg.shifts_or(&continuation_shifts()) {
        for &s in &s_values {
            let all = all.clone();
            cases.push(Box::new(move || {
                let start = Instant::now();
                let direct = estermann_direct_batch(s, &all, &sh, DIRECT_TOL);
                let share = start.elapsed() / all.len() as u32;
                all.iter()
                    .zip(direct)
                    .map(|(&t, d)| {
                        let start = Instant::now();
                        let result = estermann_hurwitz(s, t, &sh).and_then(|h| Ok((h, d?)));
                        CheckReport::from_result("estermann_continuation", result, tol, Metric::Relative)
                            .param("s", s)
                            .param("twist", t)
                            .param("shifts", sh)
                            .timed(start.elapsed() + share)
                    })
                    .collect()
            }));
        }
    }
    cases
}

fn polar_cases(cfg: &SuiteConfig) -> Vec<Case<'static>> {
    let tol = cfg.tolerances.polar;
    let tol_h = cfg.tolerances.polar_h_independence;
    let mut cases: Vec<Case> = Vec::new();
    for k in cfg.moduli_or(&[1, 2, 3, 4, 6]) {
        for sh in cfg.shifts_or(&polar_shifts()) {
            cases.push(Box::new(move || {
                let start = Instant::now();
                let mut out = Vec::new();
                let per_h: Vec<(AdditiveTwist, Result<Vec<_>, Error>)> =
                    twists(&[k]).into_iter().map(|t| (t, polar_data(t, &sh))).collect();
                for (t, data) in &per_h {
                    match data {
                        Ok(data) => {
                            for (i, pair) in data.chunks(2).enumerate() {
                                if let [formula, contour] = pair {
                                    debug_assert_eq!(formula.source, PolarSource::Formula);
                                    out.push(
                                        CheckReport::compare(
                                            "polar_residue",
                                            formula.residue,
                                            contour.residue,
                                            tol,
                                            Metric::Relative,
                                        )
                                        .param("twist", t)
                                        .param("shifts", sh)
                                        .param("pole", i),
                                    );
                                }
                            }
                        }
                        Err(e) => out.push(
                            CheckReport::skipped("polar_residue", e, tol, Metric::Relative)
                                .param("twist", t)
                                .param("shifts", sh),
                        ),
                    }
                }
                // H-independence of the contour residues.
                let contour: Vec<(AdditiveTwist, Vec<C64>)> =
                    per_h.iter().filter_map(|(t, d)| d.as_ref().ok().map(|d| (*t, contour_residues(d)))).collect();
                if let Some((t0, base)) = contour.first() {
                    for (t, res) in contour.iter().skip(1) {
                        for (i, (a, b)) in base.iter().zip(res).enumerate() {
                            out.push(
                                CheckReport::compare("polar_h_independence", *a, *b, tol_h, Metric::Relative)
                                    .param("K", k)
                                    .param("H", format!("{}~{}", t0.h(), t.h()))
                                    .param("shifts", sh)
                                    .param("pole", i),
                            );
                        }
                    }
                }
                let elapsed = start.elapsed().as_secs_f64() / out.len().max(1) as f64;
                out.into_iter()
                    .map(|mut r| {
                        r.wall_time_s = elapsed;
                        r
                    })
                    .collect()
            }));
        }
    }
    cases
}

fn contour_residues(data: &[crate::estermann::PolarDatum]) -> Vec<C64> {
    data.iter().filter(|d| d.source == PolarSource::Contour).map(|d| d.residue).collect()
}

fn estermann_fe_cases(cfg: &SuiteConfig) -> Vec<Case<'static>> {
    let tol = cfg.tolerances.estermann_fe;
    let s_values = cfg.s_or(&[c(0.5, 0.0), c(0.5, 2.0), c(0.3, 1.0)]);
    let mut cases: Vec<Case> = Vec::new();
    for t in twists(&cfg.moduli_or(&[1, 2, 3, 4, 6])) {
        for sh in cfg.shifts_or(&fe_shifts()) {
            for &s in &s_values {
                cases.push(Box::new(move || vec![check_functional_equation(s, t, &sh, tol)]));
            }
        }
    }
    cases
}

fn voronoi_cases(cfg: &SuiteConfig) -> Vec<Case<'static>> {
    let tol = cfg.tolerances.voronoi;
    let tol_perron = cfg.tolerances.perron;
    let opts = cfg.dual_options();
    let phi = cfg.phi.clone().unwrap_or_else(TestFunction::exponential);
    let perron_phis = match &cfg.phi {
        Some(p) => vec![p.clone()],
        None => vec![TestFunction::exponential(), TestFunction::power_exponential(1.0).expect("a = 1")],
    };
    let mut cases: Vec<Case> = Vec::new();
    for t in twists(&cfg.moduli_or(&[1, 2, 3, 4])) {
        for sh in cfg.shifts_or(&[voronoi_shifts()]) {
            let phi = phi.clone();
            cases.push(Box::new(move || vec![check_voronoi(t, &sh, &phi, &opts, tol)]));
            for p in perron_phis.clone() {
                cases.push(Box::new(move || vec![check_perron(t, &sh, &p, tol_perron)]));
            }
        }
    }
    cases
}

fn corollary_cases(cfg: &SuiteConfig) -> Vec<Case<'static>> {
    let tol = cfg.tolerances.corollary;
    let tol_eq = cfg.tolerances.even_tau3;
    let opts = cfg.dual_options();
    let phis = match &cfg.phi {
        Some(p) => vec![p.clone()],
        None => vec![TestFunction::exponential(), TestFunction::power_exponential(2.0).expect("a = 2")],
    };
    let mut cases: Vec<Case> = Vec::new();
    for phi in phis {
        let p = phi.clone();
        cases.push(Box::new(move || vec![check_corollary(&p, &opts, tol)]));
        // Specialisation: the alternating formula equals the general one at (1/2, 0).
        cases.push(Box::new(move || {
            let start = Instant::now();
            let result = AdditiveTwist::new(1, 2).and_then(|t| {
                let thm = voronoi_rhs(t, &ShiftTriple::zero(), &phi, &opts)?;
                Ok((corollary_rhs(&phi, &opts)?.total, thm.total))
            });
            vec![CheckReport::from_result("corollary_specialisation", result, tol, Metric::Relative)
                .param("phi", &phi)
                .timed(start.elapsed())]
        }));
    }
    for s in cfg.s_or(&[c(2.0, 0.0), c(3.0, 0.0)]) {
        cases.push(Box::new(move || {
            let r = check_even_tau3(s);
            vec![CheckReport { tolerance: tol_eq, status: status_for(&r, tol_eq), ..r }]
        }));
    }
    cases
}

/// `lhs` = value on the base contour, `rhs` = value on a perturbed one.
fn stability_reports<F>(check: &str, eval: F, base: ContourSpec, shifted_sigma: f64, tol: f64) -> Vec<CheckReport>
where
    F: Fn(&ContourSpec) -> Result<C64, Error>,
{
    let start = Instant::now();
    let reference = eval(&base);
    let mut variants = vec![("h/2", base.with_step(base.step / 2.0)), ("T+10", base.with_height(base.height + 10.0))];
    if shifted_sigma != base.sigma {
        variants.push(("sigma", base.with_sigma(shifted_sigma)));
    }
    variants
        .into_iter()
        .map(|(name, spec)| {
            let result = match &reference {
                Ok(r) => eval(&spec).map(|v| (*r, v)),
                Err(e) => Err(e.clone()),
            };
            CheckReport::from_result(check, result, tol, Metric::Relative)
                .param("variant", name)
                .param("sigma", base.sigma)
                .timed(start.elapsed())
        })
        .collect()
}

fn kernel_cases(cfg: &SuiteConfig) -> Vec<Case<'static>> {
    let tol = cfg.tolerances.kernels;
    let mut cases: Vec<Case> = Vec::new();
    // σ = 2 → 2.5 crosses no pole of φ̃(1−s) = Γ(3−s).
    let smooth = cfg.phi.clone().unwrap_or_else(|| TestFunction::power_exponential(2.0).expect("a = 2"));
    let sh = triple(c(0.1, 0.0), c(-0.1, 0.0), c(0.0, 0.0));
    let base = ContourSpec::on_line(2.0);
    for x in [1.0, 5.0] {
        for quarter in [-3i32, -1, 0, 1, 3] {
            let theta = std::f64::consts::FRAC_PI_2 * quarter as f64;
            let phi = smooth.clone();
            cases.push(Box::new(move || {
                let eval = |spec: &ContourSpec| {
                    let arg = PhasedModulus::new(x, theta)?;
                    Ok(f_kernel(&sh, arg, &phi, spec)?.value)
                };
                stability_reports("f_kernel_stability", eval, base, 2.5, tol)
                    .into_iter()
                    .map(|r| r.param("x", x).param("theta", format!("{quarter}pi/2")).param("phi", &phi))
                    .collect()
            }));
        }
    }
    for x in [0.5, 1.0, 5.0] {
        let phi = smooth.clone();
        cases.push(Box::new(move || {
            let eval = |spec: &ContourSpec| Ok(h_kernel(x, &phi, spec)?.value);
            stability_reports("h_kernel_stability", eval, base, 2.5, tol)
                .into_iter()
                .map(|r| r.param("x", x).param("phi", &phi))
                .collect()
        }));
    }
    // Refinement at the dual-sum abscissa for φ = e^{−t}, |x| = 5, θ = 3π/2.
    cases.push(Box::new(move || {
        let phi = TestFunction::exponential();
        let eval = |spec: &ContourSpec| {
            Ok(f_kernel(&sh, PhasedModulus::new(5.0, 1.5 * std::f64::consts::PI)?, &phi, spec)?.value)
        };
        let base = ContourSpec::on_line(phi.dual_sigma());
        stability_reports("f_kernel_stability", eval, base, base.sigma, tol)
            .into_iter()
            .map(|r| r.param("x", 5.0).param("theta", "3pi/2").param("phi", &phi))
            .collect()
    }));
    for x in [0.5, 1.0, 2.0, 5.0] {
        cases.push(Box::new(move || {
            let start = Instant::now();
            let phi = TestFunction::exponential();
            let result = PhasedModulus::real(x).and_then(|arg| {
                let q = f_kernel_mode(
                    &ShiftTriple::zero(),
                    arg,
                    &phi,
                    &ContourSpec::on_line(1.0),
                    KernelMode::SingleGamma,
                )?;
                Ok((q.value, c((-x).exp(), 0.0)))
            });
            vec![CheckReport::from_result("single_gamma_harness", result, tol, Metric::Relative)
                .param("x", x)
                .timed(start.elapsed())]
        }));
    }
    cases
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("everything".parse::<Suite>().is_err());
    }

    #[test]
    fn twist_grid() {
        let t = twists(&[1, 2, 5]);
        assert_eq!(t.iter().map(|t| t.to_string()).collect::<Vec<_>>(), ["1/1", "1/2", "1/5", "2/5", "3/5", "4/5"]);
    }

    #[test]
    fn aggregate_keeps_worst_and_counts() {
        let a = CheckReport::compare("x", c(1.0, 0.0), c(1.0, 0.0), 1e-3, Metric::Absolute);
        let b = CheckReport::compare("x", c(1.0, 0.0), c(1.1, 0.0), 1e-3, Metric::Absolute);
        let r = aggregate(vec![a, b]);
        assert_eq!(r.status, Status::Fail);
        assert_eq!(r.params["cases"], "2");
        assert_eq!(r.params["failures"], "1");
        assert!((r.abs_dev - 0.1).abs() < 1e-12);
    }

    #[test]
    fn small_suites_pass_and_are_sorted() {
        let cfg = SuiteConfig { moduli: Some(vec![2]), s_values: Some(vec![c(0.5, 0.0)]), ..Default::default() };
        let reports = run_suite(Suite::EstermannFe, &cfg);
        assert_eq!(reports.len(), 3);
        assert!(reports.iter().all(|r| r.passed() && r.suite == "estermann-fe"));
        let keys: Vec<String> = reports.iter().map(|r| r.key()).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn tolerance_override_applies() {
        let tolerances = Tolerances { hurwitz_fe: 1e-30, ..Default::default() };
        let cfg =
            SuiteConfig { moduli: Some(vec![5]), s_values: Some(vec![c(0.3, 2.0)]), tolerances, ..Default::default() };
        let reports = run_suite(Suite::HurwitzFe, &cfg);
        assert_eq!(reports.len(), 4);
        assert!(reports.iter().any(|r| r.status == Status::Fail));
    }
}
