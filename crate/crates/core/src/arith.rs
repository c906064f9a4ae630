//! Exact integer-arithmetic kernels.
//!
//! Everything here works on 63-bit integers. Products that could overflow
//! (for instance `H·L·M·N` in the triple exponential sum) are reduced modulo
//! the modulus after every multiplication. Roots of unity `e(j/K)` always come
//! from a [`UnitRoots`] table so that equal phases are bit-identical.

use std::f64::consts::TAU;

use crate::compensated;
use crate::report::{CheckReport, Metric};
use crate::{Error, Result, C64};

// ---------------------------------------------------------------------------
// gcd, modular arithmetic, primality
// ---------------------------------------------------------------------------

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// gcd of signed integers (always non-negative).
pub fn gcd_signed(a: i64, b: i64) -> u64 {
    gcd(a.unsigned_abs(), b.unsigned_abs())
}

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// `x mod k` in `0..k` for a signed `x`.
#[inline]
pub fn reduce(x: i64, k: u64) -> u64 {
    (x as i128).rem_euclid(k as i128) as u64
}

/// Deterministic Miller–Rabin for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        r += 1;
    }
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Pollard–Brent: returns a non-trivial factor of the odd composite `n`.
fn pollard_brent(n: u64) -> u64 {
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut g) = (2u64, 2u64, 1u64);
        let mut q = 1u64;
        let mut ys = y;
        let mut r = 1u64;
        const BATCH: u64 = 128;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..BATCH.min(r - k) {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = gcd(q, n);
                k += BATCH;
            }
            r *= 2;
        }
        if g == n {
            // Batch overshot; step one at a time from the saved point.
            loop {
                ys = f(ys);
                g = gcd(x.abs_diff(ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
        c += 1;
    }
}

// ---------------------------------------------------------------------------
// Factorization and multiplicative functions
// ---------------------------------------------------------------------------

/// Prime factorization `n = ∏ p^e` with strictly increasing primes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    n: u64,
    factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    /// Exponent of `p` in `n` (0 if `p` does not divide `n`).
    pub fn valuation(&self, p: u64) -> u32 {
        self.factors.iter().find(|&&(q, _)| q == p).map_or(0, |&(_, e)| e)
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    pub fn mobius(&self) -> i8 {
        if !self.is_squarefree() {
            0
        } else if self.factors.len().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    pub fn euler_phi(&self) -> u64 {
        self.factors.iter().map(|&(p, e)| (p - 1) * p.pow(e - 1)).product()
    }

    /// All positive divisors in increasing order.
    pub fn divisors(&self) -> Vec<u64> {
        let mut divs = vec![1u64];
        for &(p, e) in &self.factors {
            let len = divs.len();
            let mut pk = 1u64;
            for _ in 0..e {
                pk *= p;
                for i in 0..len {
                    divs.push(divs[i] * pk);
                }
            }
        }
        divs.sort_unstable();
        divs
    }
}

/// Factorizes `1 ≤ n < 2^63` by trial division up to a small bound, then
/// Miller–Rabin and Pollard–Brent on the cofactor.
pub fn factorize(n: u64) -> Factorization {
    assert!((1..1 << 63).contains(&n), "factorize: n = {n} out of range");
    let mut primes = Vec::new();
    let mut m = n;
    for p in [2u64, 3, 5] {
        while m.is_multiple_of(p) {
            primes.push(p);
            m /= p;
        }
    }
    // 6k ± 1 wheel
    let mut p = 7u64;
    let mut step = [4u64, 2, 4, 2, 4, 6, 2, 6].iter().cycle();
    while p <= 1000 && p * p <= m {
        while m.is_multiple_of(p) {
            primes.push(p);
            m /= p;
        }
        p += step.next().unwrap();
    }
    if m > 1 {
        let mut stack = vec![m];
        while let Some(x) = stack.pop() {
            if x == 1 {
                continue;
            }
            if is_prime(x) {
                primes.push(x);
                continue;
            }
            let d = pollard_brent(x);
            stack.push(d);
            stack.push(x / d);
        }
    }
    primes.sort_unstable();
    let mut factors: Vec<(u64, u32)> = Vec::new();
    for p in primes {
        match factors.last_mut() {
            Some((q, e)) if *q == p => *e += 1,
            _ => factors.push((p, 1)),
        }
    }
    Factorization { n, factors }
}

pub fn divisors(n: u64) -> Vec<u64> {
    factorize(n).divisors()
}

pub fn mobius(n: u64) -> i8 {
    factorize(n).mobius()
}

pub fn euler_phi(n: u64) -> u64 {
    factorize(n).euler_phi()
}

/// Inverse of `h` modulo `k`, returned in `1..=k`.
pub fn mod_inverse(h: i64, k: u64) -> Result<u64> {
    if k == 0 {
        return Err(Error::InvalidArgument("modulus must be positive".into()));
    }
    if gcd(reduce(h, k), k) != 1 {
        return Err(Error::NotCoprime { h, k });
    }
    if k == 1 {
        return Ok(1);
    }
    let (mut old_r, mut r) = (reduce(h, k) as i128, k as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    let inv = old_s.rem_euclid(k as i128) as u64;
    Ok(if inv == 0 { k } else { inv })
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// The additive character `n ↦ e(nH/K)` with `gcd(H, K) = 1`,
/// stored with the canonical representative `1 ≤ H ≤ K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AdditiveTwist {
    h: u64,
    k: u64,
}

impl AdditiveTwist {
    pub fn new(h: i64, k: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("twist modulus K must be positive".into()));
        }
        let r = reduce(h, k);
        if gcd(r, k) != 1 {
            return Err(Error::NotCoprime { h, k });
        }
        Ok(Self { h: if r == 0 { k } else { r }, k })
    }

    /// The twist `e(n·num/den)` written in lowest terms.
    pub fn from_fraction(num: i64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidArgument("denominator must be positive".into()));
        }
        let r = reduce(num, den);
        let g = gcd(r, den);
        Self::new((r / g) as i64, den / g)
    }

    pub fn trivial() -> Self {
        Self { h: 1, k: 1 }
    }

    pub fn h(&self) -> u64 {
        self.h
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn is_trivial(&self) -> bool {
        self.k == 1
    }

    /// `H̄` with `H·H̄ ≡ 1 (mod K)`, in `1..=K`.
    pub fn inverse(&self) -> u64 {
        mod_inverse(self.h as i64, self.k).expect("twist is coprime by construction")
    }

    /// `e(nH/K)`.
    pub fn phase(&self, n: u64) -> C64 {
        unit_root(mul_mod(n % self.k, self.h, self.k), self.k)
    }
}

impl std::fmt::Display for AdditiveTwist {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.h, self.k)
    }
}

/// Largest `|Re|` accepted for a shift at the API boundary.
pub const MAX_SHIFT_RE: f64 = 0.5;

/// The ordered shifts `(α, β, γ)` of `τ_{α,β,γ}` and `D_{α,β,γ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftTriple {
    alpha: C64,
    beta: C64,
    gamma: C64,
}

impl ShiftTriple {
    pub fn new(alpha: C64, beta: C64, gamma: C64) -> Result<Self> {
        for (name, z) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
            if !(z.re.abs() <= MAX_SHIFT_RE) || !z.im.is_finite() {
                return Err(Error::OutOfDomain(format!("shift {name} = {z} (|Re| must be ≤ 1/2)")));
            }
        }
        Ok(Self { alpha, beta, gamma })
    }

    pub fn real(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        Self::new(alpha.into(), beta.into(), gamma.into())
    }

    pub fn zero() -> Self {
        Self { alpha: C64::default(), beta: C64::default(), gamma: C64::default() }
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    pub fn beta(&self) -> C64 {
        self.beta
    }

    pub fn gamma(&self) -> C64 {
        self.gamma
    }

    pub fn to_array(&self) -> [C64; 3] {
        [self.alpha, self.beta, self.gamma]
    }

    pub fn sum(&self) -> C64 {
        self.alpha + self.beta + self.gamma
    }

    /// `(−α, −β, −γ)`.
    pub fn negated(&self) -> Self {
        Self { alpha: -self.alpha, beta: -self.beta, gamma: -self.gamma }
    }

    /// `(−β−γ, −α−γ, −α−β)`, the shift list of the `d/h` coefficient in the
    /// functional equation. May leave the `|Re| ≤ 1/2` box, so it is returned
    /// as a plain list.
    pub fn pair_sums(&self) -> [C64; 3] {
        [-self.beta - self.gamma, -self.alpha - self.gamma, -self.alpha - self.beta]
    }

    /// Smallest distance between two of the shifts.
    pub fn min_gap(&self) -> f64 {
        let [a, b, c] = self.to_array();
        (a - b).norm().min((a - c).norm()).min((b - c).norm())
    }

    pub fn max_re(&self) -> f64 {
        self.to_array().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_re(&self) -> f64 {
        self.to_array().iter().map(|z| z.re.abs()).fold(0.0, f64::max)
    }
}

impl std::fmt::Display for ShiftTriple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.alpha, self.beta, self.gamma)
    }
}

/// A sign pattern `(ε₁, ε₂, ε₃) ∈ {±1}³`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Signs(pub [i8; 3]);

impl Signs {
    /// The eight patterns, `(+,+,+)` first.
    pub fn all() -> [Signs; 8] {
        let mut out = [Signs([1, 1, 1]); 8];
        for (i, s) in out.iter_mut().enumerate() {
            for j in 0..3 {
                if i >> (2 - j) & 1 == 1 {
                    s.0[j] = -1;
                }
            }
        }
        out
    }

    pub fn product(&self) -> i64 {
        self.0.iter().map(|&e| e as i64).product()
    }

    pub fn sum(&self) -> i64 {
        self.0.iter().map(|&e| e as i64).sum()
    }

    /// `ε₁α + ε₂β + ε₃γ`.
    pub fn dot(&self, shifts: &ShiftTriple) -> C64 {
        shifts.to_array().iter().zip(self.0).map(|(z, e)| z * e as f64).sum()
    }
}

// ---------------------------------------------------------------------------
// Shifted divisor functions
// ---------------------------------------------------------------------------

/// `τ_A(p^j)` for `j = 0..=max_exp`, by dynamic programming over
/// compositions `j = j₁ + … + j_r` weighted by `∏ p^{−α_i j_i}`.
pub fn prime_power_taus(shifts: &[C64], p: u64, max_exp: usize) -> Vec<C64> {
    let mut seq = vec![C64::default(); max_exp + 1];
    seq[0] = C64::new(1.0, 0.0);
    let lnp = (p as f64).ln();
    for &a in shifts {
        let x = (-a * lnp).exp();
        let mut pw = vec![C64::new(1.0, 0.0); max_exp + 1];
        for i in 1..=max_exp {
            pw[i] = pw[i - 1] * x;
        }
        let old = seq.clone();
        for j in 0..=max_exp {
            seq[j] = (0..=j).map(|i| old[j - i] * pw[i]).sum();
        }
    }
    seq
}

/// `τ_A(n) = Σ_{n₁⋯n_r = n} ∏ n_i^{−α_i}` for an arbitrary shift list `A`.
pub fn divisor_tau(shifts: &[C64], n: u64) -> C64 {
    assert!(n >= 1, "divisor_tau: n must be positive");
    factorize(n).factors().iter().map(|&(p, e)| prime_power_taus(shifts, p, e as usize)[e as usize]).product::<C64>()
}

/// `τ_A(m)` for every `0 ≤ m ≤ n_max` (index 0 is unused and set to 0),
/// built multiplicatively over a smallest-prime-factor sieve.
pub fn tau_table(shifts: &[C64], n_max: usize) -> Vec<C64> {
    let mut spf = vec![0u32; n_max + 1];
    for i in 2..=n_max {
        if spf[i] == 0 {
            let mut j = i;
            while j <= n_max {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    let mut tau = vec![C64::default(); n_max + 1];
    if n_max >= 1 {
        tau[1] = C64::new(1.0, 0.0);
    }
    // Cache of prime-power values per prime, extended on demand.
    let mut cache: std::collections::HashMap<u32, Vec<C64>> = Default::default();
    for m in 2..=n_max {
        let p = spf[m];
        let mut q = m;
        let mut e = 0usize;
        while q % p as usize == 0 {
            q /= p as usize;
            e += 1;
        }
        let seq = cache.entry(p).or_insert_with(|| prime_power_taus(shifts, p as u64, 1));
        if seq.len() <= e {
            *seq = prime_power_taus(shifts, p as u64, e.max(2 * (seq.len() - 1)));
        }
        tau[m] = tau[q] * seq[e];
    }
    tau
}

/// Compares `τ_{−β,−γ}(rg)` with `Σ_{h | (r,g)} μ(h) h^{β+γ} τ_{−β,−γ}(r/h) τ_{−β,−γ}(g/h)`.
pub fn check_tau_multiplicativity(beta: C64, gamma: C64, r: u64, g: u64) -> CheckReport {
    let shifts = [-beta, -gamma];
    let lhs = divisor_tau(&shifts, r * g);
    let rhs = compensated::sum(factorize(gcd(r, g)).divisors().into_iter().filter_map(|h| {
        let mu = mobius(h);
        (mu != 0).then(|| {
            let hw = ((beta + gamma) * (h as f64).ln()).exp();
            hw * mu as f64 * divisor_tau(&shifts, r / h) * divisor_tau(&shifts, g / h)
        })
    }));
    CheckReport::compare("tau_multiplicativity", lhs, rhs, 1e-12 * lhs.norm().max(1.0), Metric::Absolute)
        .param("beta", beta)
        .param("gamma", gamma)
        .param("r", r)
        .param("g", g)
}

// ---------------------------------------------------------------------------
// Roots of unity, Ramanujan and Kloosterman sums
// ---------------------------------------------------------------------------

/// `e(j/k)` from the exact angle reduction `j mod k`.
pub fn unit_root(j: u64, k: u64) -> C64 {
    let j = j % k;
    // Reflect into the first half so e(j/k) and e((k−j)/k) are conjugates bit for bit.
    let (jj, conj) = if 2 * j > k { (k - j, true) } else { (j, false) };
    let (sin, cos) = (TAU * jj as f64 / k as f64).sin_cos();
    C64::new(cos, if conj { -sin } else { sin })
}

/// Table of `e(j/K)` for `0 ≤ j < K`.
#[derive(Debug, Clone)]
pub struct UnitRoots {
    k: u64,
    table: Vec<C64>,
}

impl UnitRoots {
    pub fn new(k: u64) -> Self {
        assert!(k >= 1, "UnitRoots: modulus must be positive");
        Self { k, table: (0..k).map(|j| unit_root(j, k)).collect() }
    }

    pub fn modulus(&self) -> u64 {
        self.k
    }

    /// `e(j/K)` for any integer `j`.
    #[inline]
    pub fn get(&self, j: i64) -> C64 {
        self.table[reduce(j, self.k) as usize]
    }

    #[inline]
    pub fn at(&self, j: u64) -> C64 {
        self.table[(j % self.k) as usize]
    }

    /// `Σ_j counts[j] e(j/K)`; exact integer counts keep the phase sum stable.
    pub fn weighted_sum(&self, counts: &[u64]) -> C64 {
        compensated::sum(counts.iter().zip(&self.table).map(|(&c, &z)| z * c as f64))
    }
}

/// `R_K(n) = Σ'_{a mod K} e(an/K)` by direct summation.
pub fn ramanujan_sum_direct(k: u64, n: i64) -> C64 {
    let roots = UnitRoots::new(k);
    let nr = reduce(n, k);
    compensated::sum((1..=k).filter(|&a| gcd(a, k) == 1).map(|a| roots.at(mul_mod(a, nr, k))))
}

/// Closed form `R_K(n) = μ(K/(n,K)) φ(K) / φ(K/(n,K))`.
pub fn ramanujan_sum(k: u64, n: i64) -> f64 {
    let g = gcd(reduce(n, k), k);
    let q = k / g;
    let mu = mobius(q) as f64;
    mu * euler_phi(k) as f64 / euler_phi(q) as f64
}

/// `S(a, b; c) = Σ'_{x mod c} e((ax + b x̄)/c)` using a precomputed root table.
pub fn kloosterman_with(roots: &UnitRoots, a: i64, b: i64) -> C64 {
    let c = roots.modulus();
    let (a, b) = (reduce(a, c), reduce(b, c));
    compensated::sum((1..=c).filter(|&x| gcd(x, c) == 1).map(|x| {
        let xinv = mod_inverse(x as i64, c).expect("coprime residue") % c;
        roots.at((mul_mod(a, x, c) + mul_mod(b, xinv, c)) % c)
    }))
}

/// The Kloosterman sum `S(a, b; c)`.
pub fn kloosterman(a: i64, b: i64, c: u64) -> C64 {
    kloosterman_with(&UnitRoots::new(c), a, b)
}

/// Kloosterman sums `S(a, b; c)` for all `b mod c` at a fixed `a`.
pub fn kloosterman_row(a: i64, c: u64) -> Vec<C64> {
    let roots = UnitRoots::new(c);
    (0..c).map(|b| kloosterman_with(&roots, a, b as i64)).collect()
}

/// Selberg's identity `S(a,b;q) = Σ_{g | (a,b,q)} g S(1, ab/g²; q/g)`,
/// both sides by direct summation.
pub fn check_selberg_identity(a: i64, b: i64, q: u64) -> CheckReport {
    let lhs = kloosterman(a, b, q);
    let g0 = gcd(gcd_signed(a, b), q);
    let divs = divisors(g0);
    let rhs = compensated::sum(divs.iter().map(|&g| {
        let qg = q / g;
        let ab = (a as i128) * (b as i128) / (g as i128 * g as i128);
        let arg = ab.rem_euclid(qg as i128) as i64;
        kloosterman(1, arg, qg) * g as f64
    }));
    let terms = q as f64 * (1 + divs.len()) as f64;
    CheckReport::compare("selberg_identity", lhs, rhs, 1e-8 * terms, Metric::Absolute)
        .param("a", a)
        .param("b", b)
        .param("q", q)
}

// ---------------------------------------------------------------------------
// Triple exponential sum
// ---------------------------------------------------------------------------

fn check_triple_args(h: i64, k: u64, l: i64, m: i64, n: i64) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("K must be positive".into()));
    }
    if l < 1 || m < 1 || n < 1 {
        return Err(Error::InvalidArgument(format!("l, m, n must be ≥ 1 (got {l}, {m}, {n})")));
    }
    mod_inverse(h, k).map(|_| ())
}

/// `Σ_{L,M,N=1}^{K} e((HLMN + ε₁lL + ε₂mM + ε₃nN)/K)` by the triple loop.
///
/// Phases are tallied as exact integer counts per residue before the single
/// weighted root-of-unity sum.
pub fn triple_exp_sum_direct(h: i64, k: u64, l: i64, m: i64, n: i64, eps: Signs) -> Result<C64> {
    check_triple_args(h, k, l, m, n)?;
    let [e1, e2, e3] = eps.0;
    let hr = reduce(h, k);
    let lr = reduce(l * e1 as i64, k);
    let mr = reduce(m * e2 as i64, k);
    let nr = reduce(n * e3 as i64, k);
    let mut counts = vec![0u64; k as usize];
    for big_l in 1..=k {
        let hl = mul_mod(hr, big_l, k);
        let ll = mul_mod(lr, big_l, k);
        for big_m in 1..=k {
            let hlm = mul_mod(hl, big_m, k);
            let base = (ll + mul_mod(mr, big_m, k)) % k;
            for big_n in 1..=k {
                let idx = (mul_mod(hlm, big_n, k) + base + mul_mod(nr, big_n, k)) % k;
                counts[idx as usize] += 1;
            }
        }
    }
    Ok(UnitRoots::new(k).weighted_sum(&counts))
}

/// Closed form `K Σ_{δ | (K,m,n)} δ S(l, −ε₁ε₂ε₃ H̄ (m/δ)(n/δ); K/δ)`.
pub fn triple_exp_sum_closed(h: i64, k: u64, l: i64, m: i64, n: i64, eps: Signs) -> Result<C64> {
    check_triple_args(h, k, l, m, n)?;
    let hbar = mod_inverse(h, k)?;
    let g = gcd(gcd(k, m as u64), n as u64);
    let total = compensated::sum(divisors(g).into_iter().map(|delta| {
        let kd = k / delta;
        let md = reduce(m / delta as i64, kd);
        let nd = reduce(n / delta as i64, kd);
        let arg = mul_mod(mul_mod(hbar % kd, md, kd), nd, kd) as i64;
        let b = -eps.product() * arg;
        kloosterman(l, b, kd) * delta as f64
    }));
    Ok(total * k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Brute-force τ over ordered triples abc = n.
    fn tau_brute(shifts: [C64; 3], n: u64) -> C64 {
        let mut acc = C64::default();
        for a in 1..=n {
            if !n.is_multiple_of(a) {
                continue;
            }
            for b in 1..=n / a {
                if !(n / a).is_multiple_of(b) {
                    continue;
                }
                let cc = n / a / b;
                let t = -shifts[0] * (a as f64).ln() - shifts[1] * (b as f64).ln() - shifts[2] * (cc as f64).ln();
                acc += t.exp();
            }
        }
        acc
    }

    #[test]
    fn factorize_small() {
        assert!(factorize(1).factors().is_empty());
        assert_eq!(factorize(12).factors(), &[(2, 2), (3, 1)]);
        assert_eq!(factorize(97).factors(), &[(97, 1)]);
    }

    #[test]
    fn factorize_large_by_remultiplication() {
        for n in [(1u64 << 40) + 1, 600_851_475_143, (1 << 61) - 1, 999_999_000_001 * 3, (1 << 62) + 15] {
            let f = factorize(n);
            let prod: u64 = f.factors().iter().map(|&(p, e)| p.pow(e)).product();
            assert_eq!(prod, n);
            assert!(f.primes().all(is_prime));
            assert!(f.factors().windows(2).all(|w| w[0].0 < w[1].0));
        }
        // Trial division oracle for 2^40 + 1.
        let n = (1u64 << 40) + 1;
        let mut m = n;
        let mut oracle = Vec::new();
        let mut p = 2;
        while p * p <= m {
            while m.is_multiple_of(p) {
                oracle.push(p);
                m /= p;
            }
            p += 1;
        }
        if m > 1 {
            oracle.push(m);
        }
        let ours: Vec<u64> =
            factorize(n).factors().iter().flat_map(|&(p, e)| std::iter::repeat_n(p, e as usize)).collect();
        assert_eq!(ours, oracle);
    }

    #[test]
    fn multiplicative_basics() {
        assert_eq!(mobius(1), 1);
        assert_eq!(mobius(6), 1);
        assert_eq!(mobius(4), 0);
        assert_eq!(mobius(30), -1);
        assert_eq!(euler_phi(1), 1);
        assert_eq!(euler_phi(12), 4);
        assert_eq!(divisors(12), vec![1, 2, 3, 4, 6, 12]);
    }

    #[test]
    fn modular_inverse() {
        assert_eq!(mod_inverse(3, 7).unwrap(), 5);
        assert_eq!(mod_inverse(-3, 7).unwrap(), 2);
        assert_eq!(mod_inverse(5, 1).unwrap(), 1);
        assert!(matches!(mod_inverse(4, 6), Err(Error::NotCoprime { .. })));
    }

    #[test]
    fn twist_canonical_form() {
        let t = AdditiveTwist::new(-1, 5).unwrap();
        assert_eq!((t.h(), t.k()), (4, 5));
        assert_eq!(AdditiveTwist::new(7, 1).unwrap(), AdditiveTwist::trivial());
        assert!(AdditiveTwist::new(2, 4).is_err());
        let r = AdditiveTwist::from_fraction(-6, 9).unwrap();
        assert_eq!((r.h(), r.k()), (1, 3));
        assert_eq!(AdditiveTwist::from_fraction(4, 2).unwrap(), AdditiveTwist::trivial());
        assert_eq!(AdditiveTwist::new(3, 7).unwrap().inverse(), 5);
    }

    #[test]
    fn shift_bounds_enforced() {
        assert!(ShiftTriple::real(0.5, -0.5, 0.0).is_ok());
        assert!(ShiftTriple::real(0.6, 0.0, 0.0).is_err());
        assert!(ShiftTriple::new(c(f64::NAN, 0.0), c(0.0, 0.0), c(0.0, 0.0)).is_err());
    }

    #[test]
    fn signs_enumeration() {
        let all = Signs::all();
        assert_eq!(all[0], Signs([1, 1, 1]));
        assert_eq!(all[7], Signs([-1, -1, -1]));
        let distinct: std::collections::HashSet<_> = all.iter().collect();
        assert_eq!(distinct.len(), 8);
    }

    #[test]
    fn tau_values() {
        let z = [C64::default(); 3];
        assert_eq!(divisor_tau(&z, 1), c(1.0, 0.0));
        assert!((divisor_tau(&z, 2) - 3.0).norm() < 1e-15);
        for j in 0..8u32 {
            let expect = ((j + 1) * (j + 2) / 2) as f64;
            assert!((divisor_tau(&z, 3u64.pow(j)) - expect).norm() < 1e-12);
        }
        assert!((divisor_tau(&z, 60) - tau_brute([C64::default(); 3], 60)).norm() < 1e-12);
        let s = [c(0.1, 0.2), c(-0.3, 0.0), c(0.0, -0.4)];
        let p = 7u64;
        let expect: C64 = s.iter().map(|a| (-a * (p as f64).ln()).exp()).sum();
        assert!((divisor_tau(&s, p) - expect).norm() < 1e-14);
        for n in [12u64, 60, 97, 360, 1024] {
            assert!((divisor_tau(&s, n) - tau_brute(s, n)).norm() < 1e-11 * tau_brute(s, n).norm().max(1.0));
        }
    }

    #[test]
    fn tau_table_matches_pointwise() {
        let s = [c(0.1, 0.0), c(-0.2, 0.3), c(0.05, -0.1)];
        let table = tau_table(&s, 2000);
        for n in 1..=2000u64 {
            let d = divisor_tau(&s, n);
            assert!((table[n as usize] - d).norm() <= 1e-12 * d.norm().max(1.0), "n = {n}");
        }
    }

    #[test]
    fn tau_symmetric_under_permutation() {
        let s = [c(0.1, 0.2), c(-0.3, 0.05), c(0.2, -0.4)];
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let base = tau_table(&s, 1000);
        for p in perms {
            let t = tau_table(&[s[p[0]], s[p[1]], s[p[2]]], 1000);
            for n in 1..=1000 {
                assert!((t[n] - base[n]).norm() < 1e-13 * base[n].norm().max(1.0));
            }
        }
    }

    #[test]
    fn tau_multiplicativity_relation() {
        let r = check_tau_multiplicativity(c(0.3, 0.1), c(-0.2, 0.0), 1, 30);
        assert!(r.passed());
        assert!(r.abs_dev < 1e-14);
        let r = check_tau_multiplicativity(C64::default(), C64::default(), 4, 6);
        assert!(r.passed() && r.abs_dev < 1e-12, "{r:?}");
        let r = check_tau_multiplicativity(c(0.1, 0.0), c(0.0, -0.2), 12, 18);
        assert!(r.passed() && r.abs_dev < 1e-12, "{r:?}");
    }

    #[test]
    fn ramanujan_sums() {
        assert_eq!(ramanujan_sum(1, 5), 1.0);
        assert_eq!(ramanujan_sum(2, 1), -1.0);
        assert!((ramanujan_sum_direct(2, 1) - c(-1.0, 0.0)).norm() < 1e-15);
        // R_6(4): (4,6) = 2, K/(n,K) = 3, μ(3)φ(6)/φ(3) = −1.
        assert_eq!(ramanujan_sum(6, 4), -1.0);
        assert!((ramanujan_sum_direct(6, 4) - c(-1.0, 0.0)).norm() < 1e-14);
        for k in 1..=60u64 {
            for n in 1..=60i64 {
                let d = ramanujan_sum_direct(k, n);
                assert!((d - ramanujan_sum(k, n)).norm() < 1e-10, "K={k} n={n}");
            }
        }
    }

    #[test]
    fn kloosterman_values() {
        for m in -5..=5 {
            assert!((kloosterman(1, m, 1) - 1.0).norm() < 1e-15);
            let expect = if m.rem_euclid(2) == 1 { 1.0 } else { -1.0 };
            assert!((kloosterman(1, m, 2) - expect).norm() < 1e-15, "m = {m}");
        }
        let expect = 2.0 + 2.0 * (0.8 * std::f64::consts::PI).cos();
        assert!((kloosterman(1, 1, 5) - expect).norm() < 1e-14);
        assert!((expect - 0.381_966).abs() < 1e-6);
    }

    #[test]
    fn kloosterman_symmetry_and_reality() {
        for q in 1..=30u64 {
            let roots = UnitRoots::new(q);
            let qi = q as i64;
            for a in -qi..=qi {
                for b in -qi..=qi {
                    let s = kloosterman_with(&roots, a, b);
                    assert!(s.im.abs() < 1e-12, "S({a},{b};{q}) = {s}");
                    assert!((s - kloosterman_with(&roots, b, a)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn selberg_examples() {
        let r = check_selberg_identity(1, 1, 1);
        assert!(r.passed() && (r.lhs - 1.0).norm() < 1e-15);
        let r = check_selberg_identity(2, 4, 8);
        assert!(r.abs_dev < 1e-9, "{r:?}");
        let r = check_selberg_identity(0, 0, 12);
        assert!(r.abs_dev < 1e-9, "{r:?}");
    }

    #[test]
    fn triple_sum_trivial_modulus() {
        for eps in Signs::all() {
            let d = triple_exp_sum_direct(1, 1, 3, 4, 5, eps).unwrap();
            let c = triple_exp_sum_closed(1, 1, 3, 4, 5, eps).unwrap();
            assert!((d - 1.0).norm() < 1e-15 && (c - 1.0).norm() < 1e-15);
        }
    }

    #[test]
    fn triple_sum_worked_example() {
        // (H,K,l,m,n) = (1,4,1,2,2) against a literal complex triple loop.
        let mut oracle = C64::default();
        for l in 1..=4 {
            for m in 1..=4 {
                for n in 1..=4 {
                    let phase = (l * m * n + l + 2 * m + 2 * n) as f64 / 4.0;
                    oracle += C64::from_polar(1.0, TAU * phase);
                }
            }
        }
        let d = triple_exp_sum_direct(1, 4, 1, 2, 2, Signs([1, 1, 1])).unwrap();
        let c = triple_exp_sum_closed(1, 4, 1, 2, 2, Signs([1, 1, 1])).unwrap();
        assert!((d - oracle).norm() < 1e-12);
        assert!((c - oracle).norm() < 1e-12);
    }

    #[test]
    fn triple_sum_rejects_non_coprime() {
        assert!(triple_exp_sum_direct(2, 4, 1, 1, 1, Signs([1, 1, 1])).is_err());
        assert!(triple_exp_sum_closed(2, 4, 1, 1, 1, Signs([1, 1, 1])).is_err());
    }

    #[test]
    fn triple_sum_small_sweep() {
        for k in 1..=6u64 {
            for h in 1..=k as i64 {
                if gcd(h as u64, k) != 1 {
                    continue;
                }
                for eps in Signs::all() {
                    for l in 1..=k as i64 {
                        for m in 1..=k as i64 {
                            for n in 1..=k as i64 {
                                let d = triple_exp_sum_direct(h, k, l, m, n, eps).unwrap();
                                let c = triple_exp_sum_closed(h, k, l, m, n, eps).unwrap();
                                assert!((d - c).norm() < 1e-8 * (k * k * k) as f64);
                            }
                        }
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn tau_multiplicative_on_coprime_pairs(
            m in 1u64..1_000_000, n in 1u64..1_000_000,
            a in -0.5f64..0.5, b in -0.5f64..0.5, ci in -1.0f64..1.0,
        ) {
            prop_assume!(gcd(m, n) == 1);
            let s = [c(a, 0.0), c(b, ci), c(0.0, -ci)];
            let lhs = divisor_tau(&s, m * n);
            let rhs = divisor_tau(&s, m) * divisor_tau(&s, n);
            prop_assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1e-300));
        }

        #[test]
        fn mod_inverse_is_inverse(h in -10_000i64..10_000, k in 1u64..10_000) {
            match mod_inverse(h, k) {
                Ok(inv) => {
                    prop_assert!((1..=k).contains(&inv));
                    prop_assert_eq!(mul_mod(reduce(h, k), inv, k), 1 % k);
                }
                Err(_) => prop_assert!(gcd(reduce(h, k), k) != 1),
            }
        }

        #[test]
        fn divisors_divide(n in 1u64..100_000) {
            let divs = divisors(n);
            prop_assert!(divs.iter().all(|d| n % d == 0));
            let brute = (1..=n).filter(|d| n % d == 0).count();
            prop_assert_eq!(divs.len(), brute);
        }
    }
}
