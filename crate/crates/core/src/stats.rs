//! Compensated streaming accumulators.

use std::ops::AddAssign;

/// Kahan–Babuška (Neumaier) compensated sum.
///
/// Merging two sums with [`NeumaierSum::merge`] keeps both compensation terms,
/// so per-session partials combine without losing the low-order bits.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub const fn new() -> Self {
        Self { sum: 0.0, comp: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl AddAssign<f64> for NeumaierSum {
    #[inline]
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}

/// Count, compensated first and second moments about a fixed shift.
///
/// Values are accumulated as `x - shift`; picking a shift near the data (any
/// sample value works) removes the cancellation in `E[x^2] - E[x]^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentAccumulator {
    shift: f64,
    n: u64,
    sum: NeumaierSum,
    sum_sq: NeumaierSum,
}

impl MomentAccumulator {
    pub fn new(shift: f64) -> Self {
        Self {
            shift,
            n: 0,
            sum: NeumaierSum::new(),
            sum_sq: NeumaierSum::new(),
        }
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        let d = x - self.shift;
        self.n += 1;
        self.sum.add(d);
        self.sum_sq.add(d * d);
    }

    /// Merges a partial accumulated with the same shift.
    pub fn merge(&mut self, other: &MomentAccumulator) {
        debug_assert_eq!(self.shift.to_bits(), other.shift.to_bits());
        self.n += other.n;
        self.sum.merge(&other.sum);
        self.sum_sq.merge(&other.sum_sq);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        self.shift + self.sum.value() / self.n as f64
    }

    /// Population variance (divides by `n`).
    pub fn variance(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        let n = self.n as f64;
        let m = self.sum.value() / n;
        (self.sum_sq.value() / n - m * m).max(0.0)
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn neumaier_recovers_small_terms() {
        let mut s = NeumaierSum::new();
        for x in [1e200, 0.1, 0.2, 0.3, -1e200] {
            s += x;
        }
        assert!((s.value() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn shifted_moments_survive_large_offset() {
        let mut acc = MomentAccumulator::new(1e9);
        for x in [1e9 + 1.0, 1e9 - 1.0, 1e9 + 1.0, 1e9 - 1.0] {
            acc.push(x);
        }
        assert_eq!(acc.mean(), 1e9);
        assert_eq!(acc.variance(), 1.0);
    }

    #[test]
    fn empty_accumulator_is_nan() {
        let acc = MomentAccumulator::new(0.0);
        assert!(acc.mean().is_nan());
        assert!(acc.variance().is_nan());
    }

    proptest! {
        #[test]
        fn merge_matches_single_stream(xs in prop::collection::vec(-1e3f64..1e3, 2..200),
                                       split in 0usize..200) {
            let split = split.min(xs.len());
            let mut whole = MomentAccumulator::new(xs[0]);
            xs.iter().for_each(|&x| whole.push(x));
            let mut a = MomentAccumulator::new(xs[0]);
            let mut b = MomentAccumulator::new(xs[0]);
            xs[..split].iter().for_each(|&x| a.push(x));
            xs[split..].iter().for_each(|&x| b.push(x));
            a.merge(&b);
            let scale = whole.variance().max(1e-12);
            prop_assert!((a.mean() - whole.mean()).abs() <= 1e-12 * whole.mean().abs().max(1.0));
            prop_assert!((a.variance() - whole.variance()).abs() <= 1e-10 * scale);
        }
    }
}
