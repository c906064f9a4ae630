//! Compensated summation for complex sequences.
//!
//! All quadratures and long series in this crate reduce through
//! [`NeumaierSum`] in a fixed order, so results are reproducible bit for bit.

use crate::C64;

#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Neumaier (improved Kahan–Babuška) accumulator, applied componentwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    re: Neumaier,
    im: Neumaier,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: C64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> C64 {
        C64::new(self.re.value(), self.im.value())
    }
}

impl Extend<C64> for NeumaierSum {
    fn extend<I: IntoIterator<Item = C64>>(&mut self, iter: I) {
        for z in iter {
            self.add(z);
        }
    }
}

/// Compensated sum of a sequence, in iteration order.
pub fn sum<I: IntoIterator<Item = C64>>(iter: I) -> C64 {
    let mut acc = NeumaierSum::new();
    acc.extend(iter);
    acc.value()
}
