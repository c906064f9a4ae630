//! Gamma-type factors of the functional equations.

use std::f64::consts::{LN_2, PI};

use crate::arith::ShiftTriple;
use crate::special::gamma::{is_gamma_pole, ln_cos_pi_half, ln_gamma_unchecked, ln_sin_pi};
use crate::{Error, Result, C64};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const LN_PI: f64 = 1.144_729_885_849_400_2;

/// `χ(1−s) = 2(2π)^{−s} cos(πs/2) Γ(s)`.
///
/// Left of `Re s = 1/2` this is evaluated as `π (2π)^{−s} / (sin(πs/2) Γ(1−s))`,
/// which is finite at the negative odd integers where `cos` cancels the poles
/// of Γ. The remaining poles `s = 0, −2, −4, …` are signalled.
pub fn chi_factor(s: C64) -> Result<C64> {
    let ln = if s.re >= 0.5 {
        LN_2 - s * LN_2PI + ln_cos_pi_half(s) + ln_gamma_unchecked(s)
    } else {
        if is_gamma_pole(s) && (s.re as i64) % 2 == 0 {
            return Err(Error::Pole { function: "chi", at: s });
        }
        LN_PI - s * LN_2PI - ln_sin_pi(s / 2.0) - ln_gamma_unchecked(1.0 - s)
    };
    Ok(ln.exp())
}

/// `𝒢(s) = −i (2π)^{s−1} Γ(1−s)`; poles at `s = 1, 2, 3, …`.
pub fn gamma_factor(s: C64) -> Result<C64> {
    if is_gamma_pole(1.0 - s) {
        return Err(Error::Pole { function: "gamma_factor", at: s });
    }
    Ok(-C64::i() * ((s - 1.0) * LN_2PI + ln_gamma_unchecked(1.0 - s)).exp())
}

/// `𝒢_{α,β,γ}(s) = 𝒢(s+α) 𝒢(s+β) 𝒢(s+γ)`.
pub fn gamma_factor_triple(s: C64, shifts: &ShiftTriple) -> Result<C64> {
    shifts.to_array().iter().map(|&a| gamma_factor(s + a)).product()
}

/// `Σ_ε ε₁ε₂ε₃ e^{(πi/2)(ε₁z₁ + ε₂z₂ + ε₃z₃)} = ∏ 2i sin(πz_j/2)`.
pub fn sign_sum_closed(z: [C64; 3]) -> C64 {
    z.iter().map(|&zj| 2.0 * C64::i() * (zj * PI / 2.0).sin()).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::Signs;
    use crate::special::gamma::gamma;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// `χ(s) = π^{s−1/2} Γ((1−s)/2) / Γ(s/2)`.
    fn chi_symmetric(s: C64) -> C64 {
        ((s - 0.5) * LN_PI).exp() * gamma((1.0 - s) / 2.0).unwrap() / gamma(s / 2.0).unwrap()
    }

    #[test]
    fn chi_at_two() {
        let v = chi_factor(c(2.0, 0.0)).unwrap();
        assert!((v - c(-1.0 / (2.0 * PI * PI), 0.0)).norm() < 1e-16);
    }

    #[test]
    fn chi_reflection_product() {
        // chi_factor(1−s) = χ(s), chi_factor(s) = χ(1−s).
        for i in 0..=10 {
            for j in -10..=10 {
                let s = c(0.05 + 0.09 * i as f64, 3.0 * j as f64);
                let prod = chi_factor(s).unwrap() * chi_factor(1.0 - s).unwrap();
                assert!((prod - 1.0).norm() < 1e-11, "s = {s}: {prod}");
            }
        }
        let t = 7.3;
        let prod = chi_factor(c(0.5, t)).unwrap() * chi_factor(c(0.5, -t)).unwrap();
        assert!((prod - 1.0).norm() < 1e-12);
    }

    #[test]
    fn chi_alternate_form() {
        for s in [c(0.7, 5.0), c(2.5, -1.0), c(-0.3, 12.0)] {
            // chi_factor(s) = χ(1−s)
            let a = chi_factor(s).unwrap();
            let b = chi_symmetric(1.0 - s);
            assert!((a - b).norm() / b.norm() < 1e-12, "s = {s}");
        }
    }

    #[test]
    fn chi_limits_and_poles() {
        // At s = −1: cos(πs/2)Γ(s) → −π/2, so χ(2) = 2(2π)·(−π/2) = −2π².
        let v = chi_factor(c(-1.0, 0.0)).unwrap();
        assert!((v - c(-2.0 * PI * PI, 0.0)).norm() < 1e-12, "{v}");
        assert!(chi_factor(c(0.0, 0.0)).unwrap_err().is_pole());
        assert!(chi_factor(c(-2.0, 0.0)).unwrap_err().is_pole());
    }

    #[test]
    fn gamma_factor_definition() {
        let s = c(0.3, 1.7);
        let direct = -C64::i() * ((s - 1.0) * LN_2PI).exp() * gamma(1.0 - s).unwrap();
        assert!((gamma_factor(s).unwrap() - direct).norm() < 1e-14 * direct.norm());
        assert!(gamma_factor(c(2.0, 0.0)).unwrap_err().is_pole());
    }

    #[test]
    fn sign_sum_matches_enumeration() {
        let z = [c(0.4, 1.0), c(0.2, -0.3), c(-0.1, 0.5)];
        let direct: C64 = Signs::all()
            .iter()
            .map(|e| {
                let arg: C64 = (0..3).map(|j| z[j] * e.0[j] as f64).sum();
                e.product() as f64 * (C64::i() * PI / 2.0 * arg).exp()
            })
            .sum();
        assert!((direct - sign_sum_closed(z)).norm() < 1e-13);
        // ζ(s)³ = χ(s)³ζ(1−s)³ route: 𝒢(s)³ · Σ_ε ... = χ(s)³ at zero shifts.
        let s = c(0.3, 2.0);
        let g3 = gamma_factor(s).unwrap().powi(3) * sign_sum_closed([s; 3]);
        let chi3 = chi_factor(1.0 - s).unwrap().powi(3);
        assert!((g3 - chi3).norm() < 1e-12 * chi3.norm(), "{g3} vs {chi3}");
    }
}
