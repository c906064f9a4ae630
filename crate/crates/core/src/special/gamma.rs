//! Complex Γ in logarithmic form.
//!
//! Lanczos approximation (g = 7, nine coefficients) on `Re z ≥ 1/2`, the
//! reflection formula elsewhere. Logarithms are only meaningful modulo 2πi;
//! callers exponentiate.

use std::f64::consts::PI;

use crate::{Error, Result, C64};

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const LN_PI: f64 = 1.144_729_885_849_400_2;

/// True if `z` is exactly a non-positive integer.
pub fn is_gamma_pole(z: C64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

fn ln_gamma_lanczos(z: C64) -> C64 {
    let z = z - 1.0;
    let mut x = C64::new(LANCZOS[0], 0.0);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + x.ln()
}

/// `ln Γ(z)` modulo 2πi.
pub fn ln_gamma(z: C64) -> Result<C64> {
    if is_gamma_pole(z) {
        return Err(Error::Pole { function: "gamma", at: z });
    }
    Ok(ln_gamma_unchecked(z))
}

/// `ln Γ(z)` without the pole check (returns a non-finite value on poles).
pub fn ln_gamma_unchecked(z: C64) -> C64 {
    if z.re >= 0.5 {
        ln_gamma_lanczos(z)
    } else {
        LN_PI - ln_sin_pi(z) - ln_gamma_lanczos(1.0 - z)
    }
}

pub fn gamma(z: C64) -> Result<C64> {
    ln_gamma(z).map(C64::exp)
}

/// `ln sin(πz)` modulo 2πi, without overflow for large `|Im z|`.
pub fn ln_sin_pi(z: C64) -> C64 {
    // Reduce to |Re r| ≤ 1/2 so sin(πr) keeps full relative accuracy near zeros.
    let n = z.re.round();
    let r = z - n;
    let sign_flip = (n as i64).rem_euclid(2) == 1;
    let base = if r.im.abs() < 5.0 {
        (r * PI).sin().ln()
    } else if r.im > 0.0 {
        // sin(πr) = (i/2) e^{−iπr} (1 − e^{2πir})
        let i = C64::i();
        C64::new(0.5f64.ln(), PI / 2.0) - i * PI * r + (1.0 - (2.0 * PI * i * r).exp()).ln()
    } else {
        ln_sin_pi(r.conj()).conj()
    };
    if sign_flip {
        base + C64::new(0.0, PI)
    } else {
        base
    }
}

/// `ln cos(πz/2)` modulo 2πi.
pub fn ln_cos_pi_half(z: C64) -> C64 {
    ln_sin_pi((z + 1.0) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const B2K: [f64; 10] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
        -3617.0 / 510.0,
        43867.0 / 798.0,
        -174611.0 / 330.0,
    ];

    /// Stirling series after upward recurrence to `Re w ≥ 30`.
    fn ln_gamma_stirling(z: C64) -> C64 {
        let mut w = z;
        let mut shift = C64::default();
        while w.re < 30.0 {
            shift += w.ln();
            w += 1.0;
        }
        let mut series = C64::default();
        let w2 = w * w;
        let mut wp = w;
        for (k, b) in B2K.iter().enumerate() {
            let k = (k + 1) as f64;
            series += b / (2.0 * k * (2.0 * k - 1.0) * wp);
            wp *= w2;
        }
        (w - 0.5) * w.ln() - w + LN_SQRT_2PI + series - shift
    }

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn classical_values() {
        assert!(rel(gamma(C64::new(1.0, 0.0)).unwrap(), C64::new(1.0, 0.0)) < 1e-14);
        assert!(rel(gamma(C64::new(0.5, 0.0)).unwrap(), C64::new(PI.sqrt(), 0.0)) < 1e-14);
        assert!(rel(gamma(C64::new(5.0, 0.0)).unwrap(), C64::new(24.0, 0.0)) < 1e-14);
        let gi = gamma(C64::i()).unwrap();
        let expect = PI / PI.sinh();
        assert!((gi.norm_sqr() - expect).abs() / expect < 1e-13);
        assert!(rel(gamma(C64::new(-0.5, 0.0)).unwrap(), C64::new(-2.0 * PI.sqrt(), 0.0)) < 1e-14);
    }

    #[test]
    fn poles_are_signalled() {
        for n in [0.0, -1.0, -7.0] {
            assert!(gamma(C64::new(n, 0.0)).unwrap_err().is_pole());
        }
        assert!(gamma(C64::new(-1.0, 1e-3)).is_ok());
    }

    #[test]
    fn matches_stirling_oracle_on_validated_box() {
        let mut worst: f64 = 0.0;
        for i in 0..=40 {
            for j in 0..=40 {
                let z = C64::new(0.5 + 9.5 * i as f64 / 40.0, -100.0 + 5.0 * j as f64);
                let d = (ln_gamma(z).unwrap() - ln_gamma_stirling(z)).exp() - 1.0;
                worst = worst.max(d.norm());
            }
        }
        assert!(worst < 1e-12, "worst relative error {worst:e}");
    }

    #[test]
    fn reflection_half_plane() {
        let mut worst: f64 = 0.0;
        for i in 0..=40 {
            for j in 0..=40 {
                let z = C64::new(-10.0 + 10.4 * i as f64 / 40.0 + 0.013, -100.0 + 5.0 * j as f64);
                // Γ(z)Γ(1−z) = π / sin(πz)
                let lhs = ln_gamma(z).unwrap() + ln_gamma(1.0 - z).unwrap();
                let rhs = LN_PI - ln_sin_pi(z);
                worst = worst.max(((lhs - rhs).exp() - 1.0).norm());
                let d = (ln_gamma(z).unwrap() - ln_gamma_stirling(z)).exp() - 1.0;
                worst = worst.max(d.norm());
            }
        }
        assert!(worst < 1e-12, "worst relative error {worst:e}");
    }

    #[test]
    fn recurrence_on_random_points() {
        // Deterministic pseudo-random sample of the validated box.
        let mut state = 0x2545_f491_4f6c_dd1du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let z = C64::new(-10.0 + 19.0 * next(), -100.0 + 200.0 * next());
            let lhs = ln_gamma(z + 1.0).unwrap();
            let rhs = ln_gamma(z).unwrap() + z.ln();
            assert!(((lhs - rhs).exp() - 1.0).norm() < 1e-12, "z = {z}");
        }
    }

    #[test]
    fn ln_sin_near_zeros_and_far_up() {
        let z = C64::new(-3.0 + 1e-9, 0.0);
        let delta = z.re + 3.0;
        let v = ln_sin_pi(z).exp();
        assert!((v.re + (PI * delta).sin()).abs() < 1e-14 * PI * delta && v.im.abs() < 1e-24, "{v}");
        let direct = (C64::new(0.3, 8.0) * PI).sin();
        let via = ln_sin_pi(C64::new(0.3, 8.0)).exp();
        assert!(rel(via, direct) < 1e-14);
        // π·400 > 709: a direct sin would overflow.
        let big = ln_sin_pi(C64::new(0.3, 400.0));
        assert!((big.re - (PI * 400.0 - 2f64.ln())).abs() < 1e-12);
    }
}
