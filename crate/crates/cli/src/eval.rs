//! Point evaluations behind `estermann eval`.

use estermann::arith::{divisor_tau, divisors, is_prime, kloosterman};
use estermann::estermann::{
    estermann_direct, estermann_hurwitz, functional_equation_rhs, g_global, g_global_prime, DIRECT_MIN_RE,
};
use estermann::voronoi::{f_kernel, h_kernel};
use estermann::{AdditiveTwist, ContourSpec, Error, PhasedModulus, ShiftTriple, TestFunction, C64};
use serde::Serialize;

/// One evaluated value with its error indicator.
#[derive(Debug, Clone, Serialize)]
pub struct Evaluation {
    pub target: String,
    pub value: C64,
    /// Absolute error indicator; `None` when no independent estimate exists.
    pub error_estimate: Option<f64>,
    /// How `error_estimate` was obtained.
    pub estimate_source: String,
}

impl Evaluation {
    fn new(target: &str, value: C64, error_estimate: Option<f64>, source: &str) -> Self {
        Self { target: target.into(), value, error_estimate, estimate_source: source.into() }
    }
}

pub fn tau(shifts: &ShiftTriple, n: u64) -> Result<Evaluation, Error> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let value = divisor_tau(&shifts.to_array(), n);
    // Exact divisor sum; the only error is rounding in the complex powers.
    let terms = divisors(n).len().pow(2) as f64;
    Ok(Evaluation::new("tau", value, Some(terms * f64::EPSILON * value.norm()), "rounding bound"))
}

pub fn kloosterman_sum(a: i64, b: i64, c: u64) -> Result<Evaluation, Error> {
    if c == 0 {
        return Err(Error::InvalidArgument("modulus c must be at least 1".into()));
    }
    let value = kloosterman(a, b, c);
    // The sum is real; its imaginary part is pure rounding.
    Ok(Evaluation::new("kloosterman", value, Some(value.im.abs()), "imaginary part of a real sum"))
}

pub fn estermann(s: C64, twist: AdditiveTwist, shifts: &ShiftTriple) -> Result<Evaluation, Error> {
    let value = estermann_hurwitz(s, twist, shifts)?;
    let (estimate, source) = if s.re >= DIRECT_MIN_RE {
        (estermann_direct(s, twist, shifts, 1e-12).map(|d| (d - value).norm()), "direct series")
    } else {
        (functional_equation_rhs(s, twist, shifts).map(|r| (r - value).norm()), "functional equation")
    };
    Ok(match estimate {
        Ok(e) => Evaluation::new("estermann", value, Some(e), source),
        Err(_) => Evaluation::new("estermann", value, None, "unavailable"),
    })
}

pub fn g_factor(s: C64, k: u64, shifts: &ShiftTriple) -> Result<Evaluation, Error> {
    if k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    let sh = shifts.to_array();
    let value = g_global(s, k, &sh)?;
    Ok(if is_prime(k) {
        let closed = g_global_prime(s, k, &sh);
        Evaluation::new("G", value, Some((closed - value).norm()), "prime closed form")
    } else {
        Evaluation::new("G", value, Some(1e-18 * value.norm()), "local series truncation")
    })
}

pub fn f_kernel_at(
    shifts: &ShiftTriple,
    x: f64,
    theta: f64,
    phi: &TestFunction,
    contour: &ContourSpec,
) -> Result<Evaluation, Error> {
    let q = f_kernel(shifts, PhasedModulus::new(x, theta)?, phi, contour)?;
    Ok(Evaluation::new("F-kernel", q.value, Some(q.error_estimate + q.tail_estimate), "quadrature step halving + tail"))
}

pub fn h_kernel_at(x: f64, phi: &TestFunction, contour: &ContourSpec) -> Result<Evaluation, Error> {
    let q = h_kernel(x, phi, contour)?;
    Ok(Evaluation::new("H-kernel", q.value, Some(q.error_estimate + q.tail_estimate), "quadrature step halving + tail"))
}
