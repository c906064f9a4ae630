//! Hurwitz, Riemann and Lerch zeta functions by Euler–Maclaurin summation.

use std::f64::consts::{PI, TAU};

use crate::arith::{AdditiveTwist, UnitRoots};
use crate::compensated::NeumaierSum;
use crate::report::{CheckReport, Metric};
use crate::special::factors::{chi_factor, gamma_factor};
use crate::{Error, Result, C64};

/// `B_{2k}/(2k)!` for `k = 1..=30`.
const BERNOULLI_SCALED: [f64; 30] = [
    8.333_333_333_333_333e-2,
    -1.388_888_888_888_889e-3,
    3.306_878_306_878_307e-5,
    -8.267_195_767_195_768e-7,
    2.087_675_698_786_81e-8,
    -5.284_190_138_687_493e-10,
    1.3382536530684679e-11,
    -3.3896802963225829e-13,
    8.586_062_056_277_845e-15,
    -2.174_868_698_558_062e-16,
    5.5090028283602295e-18,
    -1.3954464685812523e-19,
    3.534_707_039_629_467e-21,
    -8.953_517_427_037_547e-23,
    2.267_952_452_337_683e-24,
    -5.744_790_668_872_202e-26,
    1.455_172_475_614_865e-27,
    -3.6859949406653102e-29,
    9.336_734_257_095_045e-31,
    -2.365_022_415_700_63e-32,
    5.990_671_762_482_134e-34,
    -1.5174548844682903e-35,
    3.843_758_125_454_189e-37,
    -9.736353072646691e-39,
    2.466247044200681e-40,
    -6.247_076_741_820_743e-42,
    1.5824030244644914e-43,
    -4.008273685948936e-45,
    1.0153075855569556e-46,
    -2.5718041582418717e-48,
];

/// Euler–Maclaurin shift point `N`.
///
/// The correction terms shrink by roughly `(|s|+2k)²/(2πN)²` per step, so
/// `2πN ≈ |s| + 40` already gives ~e^{−40} with a few dozen terms. Keeping `N`
/// small matters at negative `Re s`, where the partial sum cancels heavily.
fn shift_point(s: C64) -> usize {
    10usize.max(((s.norm() + 40.0) / TAU).ceil() as usize)
}

/// `(e^z − 1)/z`, accurate near 0.
pub fn exprel(z: C64) -> C64 {
    if z.norm() < 0.1 {
        // Horner on Σ z^k/(k+1)!
        let mut acc = C64::new(1.0 / 17.0, 0.0);
        for k in (1..=15).rev() {
            acc = 1.0 + acc * z / (k as f64 + 1.0);
        }
        acc
    } else {
        (z.exp() - 1.0) / z
    }
}

/// Everything in the Euler–Maclaurin expansion of `ζ(s, a)` except the
/// polar term `x^{1−s}/(s−1)`; returns that remainder and `ln x`, `x = N + a`.
fn em_regular_part(s: C64, a: f64, n: usize) -> (C64, f64) {
    let mut acc = NeumaierSum::new();
    for j in 0..n {
        acc.add((-s * (j as f64 + a).ln()).exp());
    }
    let x = n as f64 + a;
    let lnx = x.ln();
    let x_s = (-s * lnx).exp();
    acc.add(0.5 * x_s);
    // T_k = B_{2k}/(2k)! · s(s+1)⋯(s+2k−2) · x^{−s−2k+1}
    let inv_x2 = 1.0 / (x * x);
    let mut rising = s;
    let mut power = x_s / x;
    let mut last = f64::INFINITY;
    for (k, &b) in BERNOULLI_SCALED.iter().enumerate() {
        let term = b * rising * power;
        // Asymptotic series: stop at convergence or at the smallest term.
        if term.norm() > last {
            break;
        }
        acc.add(term);
        last = term.norm();
        if last <= 1e-18 * acc.value().norm() {
            break;
        }
        let m = 2.0 * (k + 1) as f64;
        rising *= (s + m - 1.0) * (s + m);
        power *= inv_x2;
    }
    (acc.value(), lnx)
}

fn check_pole(s: C64, function: &'static str) -> Result<()> {
    if s == C64::new(1.0, 0.0) {
        Err(Error::Pole { function, at: s })
    } else {
        Ok(())
    }
}

/// The Hurwitz zeta function `ζ(s, a) = Σ_{n≥0} (n+a)^{−s}`, `a > 0`.
pub fn hurwitz_zeta(s: C64, a: f64) -> Result<C64> {
    if !(a > 0.0) {
        return Err(Error::InvalidArgument(format!("Hurwitz parameter a = {a} must be positive")));
    }
    check_pole(s, "hurwitz_zeta")?;
    let (regular, lnx) = em_regular_part(s, a, shift_point(s));
    Ok(regular + ((1.0 - s) * lnx).exp() / (s - 1.0))
}

/// `Σ_j w_j ζ(s, a_j)` with one shared Euler–Maclaurin cut.
///
/// When `Σ w_j = 0` the poles cancel; the polar terms are then combined as
/// `Σ w_j (x_j^{1−s} − 1)/(s − 1)`, which is analytic through `s = 1`.
pub fn hurwitz_combination(s: C64, terms: &[(f64, C64)]) -> Result<C64> {
    let total: C64 = terms.iter().map(|t| t.1).sum();
    let scale: f64 = terms.iter().map(|t| t.1.norm()).sum();
    let cancels = total.norm() <= 1e-12 * scale;
    if !cancels {
        check_pole(s, "hurwitz_combination")?;
    }
    let n = shift_point(s);
    let mut acc = NeumaierSum::new();
    for &(a, w) in terms {
        if !(a > 0.0) {
            return Err(Error::InvalidArgument(format!("Hurwitz parameter a = {a} must be positive")));
        }
        let (regular, lnx) = em_regular_part(s, a, n);
        let polar = if cancels {
            // (x^{1−s} − 1)/(s − 1) = −ln x · exprel(−(s−1) ln x)
            -lnx * exprel(-(s - 1.0) * lnx)
        } else {
            ((1.0 - s) * lnx).exp() / (s - 1.0)
        };
        acc.add(w * (regular + polar));
    }
    Ok(acc.value())
}

/// The Riemann zeta function. Left of `Re s = 0` the reflection
/// `ζ(s) = χ(s) ζ(1−s)` avoids the cancellation of the direct expansion.
pub fn riemann_zeta(s: C64) -> Result<C64> {
    check_pole(s, "riemann_zeta")?;
    if s.re < 0.0 {
        return Ok(chi_factor(1.0 - s)? * hurwitz_zeta(1.0 - s, 1.0)?);
    }
    hurwitz_zeta(s, 1.0)
}

/// `ζ(s, H, K) = Σ_{n ≡ H (mod K)} n^{−s} = K^{−s} ζ(s, H/K)` for `1 ≤ H ≤ K`.
pub fn hurwitz_zeta_arith(s: C64, h: u64, k: u64) -> Result<C64> {
    if k == 0 || h == 0 || h > k {
        return Err(Error::InvalidArgument(format!("need 1 ≤ H ≤ K, got H = {h}, K = {k}")));
    }
    Ok((-s * (k as f64).ln()).exp() * hurwitz_zeta(s, h as f64 / k as f64)?)
}

/// The Lerch zeta function `ζ(s, e(H/K)) = Σ_{n≥1} e(nH/K) n^{−s}`,
/// entire in `s` when `K > 1`.
pub fn lerch_zeta(s: C64, twist: AdditiveTwist) -> Result<C64> {
    let k = twist.k();
    if k == 1 {
        return riemann_zeta(s);
    }
    let roots = UnitRoots::new(k);
    let terms: Vec<(f64, C64)> = (1..=k).map(|a| (a as f64 / k as f64, roots.at(a * twist.h() % k))).collect();
    Ok((-s * (k as f64).ln()).exp() * hurwitz_combination(s, &terms)?)
}

/// `Σ_{n≥1} e(n·num/den) n^{−s}` for an arbitrary fraction (reduced first).
pub fn lerch_fraction(s: C64, num: i64, den: u64) -> Result<C64> {
    lerch_zeta(s, AdditiveTwist::from_fraction(num, den)?)
}

/// Right-hand side of the Hurwitz functional equation,
/// `K^{−s} 𝒢(s) (e^{πis/2} ζ(1−s, e(H/K)) − e^{−πis/2} ζ(1−s, e(−H/K)))`.
pub fn hurwitz_fe_rhs(s: C64, h: u64, k: u64) -> Result<C64> {
    let plus = AdditiveTwist::new(h as i64, k)?;
    let minus = AdditiveTwist::new(-(h as i64), k)?;
    let i = C64::i();
    let rot = (i * PI * s / 2.0).exp();
    let bracket = rot * lerch_zeta(1.0 - s, plus)? - lerch_zeta(1.0 - s, minus)? / rot;
    Ok((-s * (k as f64).ln()).exp() * gamma_factor(s)? * bracket)
}

pub fn check_hurwitz_fe(s: C64, h: u64, k: u64) -> CheckReport {
    let result = hurwitz_zeta_arith(s, h, k).and_then(|lhs| Ok((lhs, hurwitz_fe_rhs(s, h, k)?)));
    CheckReport::from_result("hurwitz_functional_equation", result, 1e-10, Metric::Relative)
        .param("s", s)
        .param("H", h)
        .param("K", k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm()
    }

    /// Dirichlet eta by averaged partial sums (Cohen–Villegas–Zagier),
    /// then ζ = η / (1 − 2^{1−s}).
    fn zeta_via_eta(s: C64) -> C64 {
        let n = 100usize;
        let d0 = (3.0 + 8f64.sqrt()).powi(n as i32);
        let d = (d0 + 1.0 / d0) / 2.0;
        let mut b = -1.0f64;
        let mut cc = -d;
        let mut sum = C64::default();
        for k in 0..n {
            cc = b - cc;
            sum += cc * (-s * ((k + 1) as f64).ln()).exp();
            b = b * 2.0 * ((k + n) as f64) * ((k as f64) - n as f64) / ((2 * k + 1) as f64 * (k + 1) as f64);
        }
        let eta = sum / d;
        eta / (1.0 - (c(2f64.ln(), 0.0) * (1.0 - s)).exp())
    }

    #[test]
    fn riemann_classical_values() {
        assert!(rel(riemann_zeta(c(2.0, 0.0)).unwrap(), c(PI * PI / 6.0, 0.0)) < 1e-14);
        assert!(rel(riemann_zeta(c(0.0, 0.0)).unwrap(), c(-0.5, 0.0)) < 1e-14);
        assert!(rel(riemann_zeta(c(-1.0, 0.0)).unwrap(), c(-1.0 / 12.0, 0.0)) < 1e-13);
        assert!(riemann_zeta(c(-2.0, 0.0)).unwrap().norm() < 1e-15);
        assert!(riemann_zeta(c(1.0, 0.0)).unwrap_err().is_pole());
    }

    #[test]
    fn riemann_against_eta_series() {
        for s in [c(0.5, 3.0), c(0.5, 14.0), c(3.0, -40.0), c(0.2, 60.0), c(-0.7, 2.0)] {
            let d = rel(riemann_zeta(s).unwrap(), zeta_via_eta(s));
            assert!(d < 1e-11, "s = {s}: {d:e}");
        }
        // Far left the eta series itself cancels; use 30-digit reference values instead.
        let reference = [
            (c(-2.5, 7.0), c(0.414_675_950_790_961_76, 1.468_063_145_973_323_8)),
            (c(-4.5, 1.0), c(-0.008_285_852_558_821_674, 0.004_583_838_453_069_02)),
        ];
        for (s, z) in reference {
            assert!(rel(riemann_zeta(s).unwrap(), z) < 1e-11, "s = {s}");
        }
        // The direct expansion just right of the switch agrees with the reflected one just left.
        let a = riemann_zeta(c(1e-12, 2.0)).unwrap();
        let b = riemann_zeta(c(-1e-12, 2.0)).unwrap();
        assert!(rel(a, b) < 1e-11);
    }

    #[test]
    fn hurwitz_arith_values() {
        let s = c(2.0, 0.0);
        assert!(rel(hurwitz_zeta_arith(s, 1, 1).unwrap(), riemann_zeta(s).unwrap()) < 1e-15);
        assert!(rel(hurwitz_zeta_arith(s, 1, 2).unwrap(), c(PI * PI / 8.0, 0.0)) < 1e-14);
        // Σ_{n≡2 (3)} n^{−2.5}: 10^6 terms plus an integral tail estimate.
        let mut direct = 0.0;
        let mut n = 2.0f64;
        while n < 1e6 {
            direct += n.powf(-2.5);
            n += 3.0;
        }
        // Tail ≈ (1/3)∫_{n}^{∞} x^{−2.5} dx with midpoint correction.
        direct += (n - 1.5).powf(-1.5) / (3.0 * 1.5);
        let v = hurwitz_zeta_arith(c(2.5, 0.0), 2, 3).unwrap();
        assert!((v.re - direct).abs() / direct < 1e-12 && v.im.abs() < 1e-15, "{v} vs {direct}");
    }

    #[test]
    fn hurwitz_decomposition() {
        for k in 1..=10u64 {
            for s in [c(2.0, 0.0), c(2.0, 7.5), c(-0.5, 0.0), c(-0.5, -12.0)] {
                let sum: C64 = (1..=k).map(|h| hurwitz_zeta_arith(s, h, k).unwrap()).sum();
                let z = riemann_zeta(s).unwrap();
                assert!(rel(sum, z) < 1e-11, "K = {k}, s = {s}");
            }
        }
    }

    #[test]
    fn lerch_values() {
        let s = c(0.7, 2.0);
        assert!(rel(lerch_zeta(s, AdditiveTwist::trivial()).unwrap(), riemann_zeta(s).unwrap()) < 1e-15);
        let half = AdditiveTwist::new(1, 2).unwrap();
        for s in [c(0.7, 2.0), c(-1.5, 0.0), c(3.0, -5.0)] {
            let expect = ((1.0 - s) * 2f64.ln()).exp() - 1.0;
            let expect = expect * riemann_zeta(s).unwrap();
            assert!(rel(lerch_zeta(s, half).unwrap(), expect) < 1e-11, "s = {s}");
        }
        // η(1) = ln 2, from the cancelled pole.
        let v = lerch_zeta(c(1.0, 0.0), half).unwrap();
        assert!((v - c(-(2f64.ln()), 0.0)).norm() < 1e-14, "{v}");
    }

    #[test]
    fn lerch_against_direct_twisted_sum() {
        // Σ e(n/3) n^{−1.2}, partial sums averaged over one period to damp the oscillating tail.
        let t = AdditiveTwist::new(1, 3).unwrap();
        let s = 1.2;
        let mut partial = C64::default();
        let n_max = 1_000_000u64;
        let mut tail_avg = C64::default();
        for n in 1..=n_max + 2 {
            partial += t.phase(n) * (n as f64).powf(-s);
            if n > n_max - 1 {
                tail_avg += partial;
            }
        }
        let direct = tail_avg / 3.0;
        let v = lerch_zeta(c(s, 0.0), t).unwrap();
        assert!((v - direct).norm() < 1e-7, "{v} vs {direct}");
    }

    #[test]
    fn lerch_has_no_pole_at_one() {
        let t = AdditiveTwist::new(2, 5).unwrap();
        let a = lerch_zeta(c(1.0 + 1e-3, 0.0), t).unwrap();
        let b = lerch_zeta(c(1.0 - 1e-3, 0.0), t).unwrap();
        let m = lerch_zeta(c(1.0, 0.0), t).unwrap();
        assert!((a - b).norm() < 1e-2);
        assert!(((a + b) / 2.0 - m).norm() < 1e-5);
    }

    #[test]
    fn exprel_matches_direct_form() {
        for z in [c(0.05, 0.02), c(-0.09, 0.0), c(0.0, 0.099)] {
            let direct = (z.exp() - 1.0) / z;
            assert!((exprel(z) - direct).norm() < 1e-14);
        }
        assert_eq!(exprel(C64::default()), c(1.0, 0.0));
    }

    #[test]
    fn hurwitz_functional_equation() {
        for (s, h, k) in [(c(-0.5, 0.0), 1, 2), (c(0.3, 2.0), 2, 5), (c(-1.5, 0.0), 1, 1), (c(2.5, 0.0), 3, 5)] {
            let r = check_hurwitz_fe(s, h, k);
            assert!(r.passed(), "{r:?}");
        }
        assert_eq!(check_hurwitz_fe(c(1.0, 0.0), 1, 3).status, crate::Status::Skipped);
    }
}
