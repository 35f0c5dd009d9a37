//! Compensated summation and log-domain accumulation.

/// Kahan-Babuska compensated accumulator. Reductions built on it are
/// order-independent to well below 1e-15 relative for the sums in this crate,
/// which is what makes thread-count-independent results practical.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
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

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Streaming log-sum-exp for positive-term series: feeds `log(term)` values,
/// returns `log(sum of terms)` without ever forming the terms themselves.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    scaled: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self { max: f64::NEG_INFINITY, scaled: 0.0 }
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, log_term: f64) {
        if log_term == f64::NEG_INFINITY {
            return;
        }
        if log_term <= self.max {
            self.scaled += (log_term - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - log_term).exp() + 1.0;
            self.max = log_term;
        }
    }

    /// `log(sum)`; negative infinity if nothing was pushed.
    #[inline]
    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }

    /// Current maximum pushed log term.
    #[inline]
    pub fn max_log_term(&self) -> f64 {
        self.max
    }
}

/// Log of `sum_{j=lo..=hi} exp(w(j))` for a unimodal exponent sequence `w`,
/// scanning outward from the peak and stopping once terms drop 46 nats below
/// it (< 1e-20 relative). Returns the log-sum and the largest index visited.
///
/// The peak is located by bisection on the first-difference sign change, so
/// the cost is `O(log(hi-lo) + width)` where the width is the number of terms
/// within 46 nats of the peak.
pub fn log_sum_unimodal(lo: usize, hi: usize, w: impl Fn(usize) -> f64) -> (f64, usize) {
    const DROP: f64 = 46.0;
    if lo > hi {
        return (f64::NEG_INFINITY, lo);
    }
    // bisect for the last index where w is still increasing
    let (mut a, mut b) = (lo, hi);
    while a < b {
        let m = a + (b - a) / 2;
        if w(m + 1) > w(m) {
            a = m + 1;
        } else {
            b = m;
        }
    }
    let peak = a;
    let w_peak = w(peak);
    let mut sum = 1.0;
    let mut comp = KahanSum::new();
    let mut max_idx = peak;
    let mut j = peak;
    while j > lo {
        j -= 1;
        let d = w(j) - w_peak;
        if d < -DROP {
            break;
        }
        comp.add(d.exp());
    }
    let mut j = peak;
    while j < hi {
        j += 1;
        let d = w(j) - w_peak;
        if d < -DROP {
            break;
        }
        comp.add(d.exp());
        max_idx = j;
    }
    sum += comp.value();
    (w_peak + sum.ln(), max_idx)
}

/// Double-double accumulator (error-free transformations via `mul_add`).
/// Used for Gram-matrix factorization inner products at larger polynomial
/// degrees where plain f64 accumulation loses too many digits.
#[derive(Debug, Clone, Copy, Default)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        (s, err)
    }

    #[inline]
    fn two_prod(a: f64, b: f64) -> (f64, f64) {
        let p = a * b;
        let err = a.mul_add(b, -p);
        (p, err)
    }

    /// Accumulate `a * b` exactly into the double-double sum.
    #[inline]
    pub fn add_prod(&mut self, a: f64, b: f64) {
        let (p, pe) = Self::two_prod(a, b);
        let (s, se) = Self::two_sum(self.hi, p);
        self.hi = s;
        self.lo += se + pe;
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let (s, se) = Self::two_sum(self.hi, x);
        self.hi = s;
        self.lo += se;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_small_terms() {
        let mut s = KahanSum::new();
        s.add(1.0);
        for _ in 0..1_000_000 {
            s.add(1e-16);
        }
        let exact = 1.0 + 1e-10;
        assert!((s.value() - exact).abs() < 1e-15);
    }

    #[test]
    fn log_sum_exp_matches_direct() {
        let logs = [-3.0, 0.5, 2.0, 1.0, -10.0];
        let mut acc = LogSumExp::new();
        for &l in &logs {
            acc.push(l);
        }
        let direct: f64 = logs.iter().map(|l| l.exp()).sum();
        assert!((acc.value() - direct.ln()).abs() < 1e-14);
    }

    #[test]
    fn log_sum_exp_huge_offsets() {
        let mut acc = LogSumExp::new();
        acc.push(1000.0);
        acc.push(1000.0 + std::f64::consts::LN_2);
        assert!((acc.value() - (1000.0 + 3f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn unimodal_sum_matches_full_scan() {
        // poisson-like exponents peaked at j = 40
        let w = |j: usize| {
            let j = j as f64;
            j * 40f64.ln() - crate::special::ln_gamma(j + 1.0)
        };
        let (ls, _) = log_sum_unimodal(0, 400, w);
        let mut full = LogSumExp::new();
        for j in 0..=400 {
            full.push(w(j));
        }
        assert!((ls - full.value()).abs() < 1e-13);
    }

    #[test]
    fn double_double_dot() {
        let mut dd = DoubleDouble::new();
        // sum of products that cancels to a tiny residue
        dd.add_prod(1e16, 1.0);
        dd.add_prod(-1e16, 1.0);
        dd.add_prod(3.0, 0.5);
        assert_eq!(dd.value(), 1.5);
    }
}
