//! Exact arithmetic on finite trigonometric series.
//!
//! Products use the product-to-sum identities, so multiplying two series of
//! degrees J and K yields the exact series of degree J+K. This keeps the
//! boundary primitive of the generating function spectrally exact for
//! trigonometric-polynomial forcing.

use std::f64::consts::TAU;

/// `mean + sum_k cos[k-1]·cos(2πkt) + sin[k-1]·sin(2πkt)`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct TrigSeries {
    pub mean: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl TrigSeries {
    pub fn new(mean: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        assert_eq!(cos.len(), sin.len());
        Self { mean, cos, sin }
    }

    pub fn zero(degree: usize) -> Self {
        Self {
            mean: 0.0,
            cos: vec![0.0; degree],
            sin: vec![0.0; degree],
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = self.mean;
        for k in 1..=self.cos.len() {
            let arg = TAU * k as f64 * t;
            acc += self.cos[k - 1] * arg.cos() + self.sin[k - 1] * arg.sin();
        }
        acc
    }

    /// Term-by-term derivative.
    pub fn derivative(&self) -> Self {
        let degree = self.cos.len();
        let mut out = Self::zero(degree);
        for k in 1..=degree {
            let omega = TAU * k as f64;
            out.cos[k - 1] = omega * self.sin[k - 1];
            out.sin[k - 1] = -omega * self.cos[k - 1];
        }
        out
    }

    /// Periodic primitive of the oscillatory part; the mean is dropped and
    /// must be reattached by the caller as a linear term.
    pub fn antiderivative_periodic(&self) -> Self {
        let degree = self.cos.len();
        let mut out = Self::zero(degree);
        for k in 1..=degree {
            let omega = TAU * k as f64;
            out.sin[k - 1] = self.cos[k - 1] / omega;
            out.cos[k - 1] = -self.sin[k - 1] / omega;
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            mean: self.mean * factor,
            cos: self.cos.iter().map(|c| c * factor).collect(),
            sin: self.sin.iter().map(|s| s * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let degree = self.cos.len().max(other.cos.len());
        let mut out = Self::zero(degree);
        out.mean = self.mean + other.mean;
        for (k, v) in self.cos.iter().enumerate() {
            out.cos[k] += v;
        }
        for (k, v) in self.sin.iter().enumerate() {
            out.sin[k] += v;
        }
        for (k, v) in other.cos.iter().enumerate() {
            out.cos[k] += v;
        }
        for (k, v) in other.sin.iter().enumerate() {
            out.sin[k] += v;
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let ja = self.cos.len();
        let kb = other.cos.len();
        let mut out = Self::zero(ja + kb);
        out.mean = self.mean * other.mean;
        for k in 1..=kb {
            out.cos[k - 1] += self.mean * other.cos[k - 1];
            out.sin[k - 1] += self.mean * other.sin[k - 1];
        }
        for j in 1..=ja {
            out.cos[j - 1] += other.mean * self.cos[j - 1];
            out.sin[j - 1] += other.mean * self.sin[j - 1];
            let (cj, sj) = (self.cos[j - 1], self.sin[j - 1]);
            for k in 1..=kb {
                let (ck, sk) = (other.cos[k - 1], other.sin[k - 1]);
                let sum = (j + k) as i64;
                let diff = j as i64 - k as i64;
                // cos·cos and sin·sin land on cosines of sum/difference
                out.add_cos(diff, 0.5 * cj * ck);
                out.add_cos(sum, 0.5 * cj * ck);
                out.add_cos(diff, 0.5 * sj * sk);
                out.add_cos(sum, -0.5 * sj * sk);
                // mixed terms land on sines
                out.add_sin(sum, 0.5 * sj * ck);
                out.add_sin(diff, 0.5 * sj * ck);
                out.add_sin(sum, 0.5 * cj * sk);
                out.add_sin(diff, -0.5 * cj * sk);
            }
        }
        out
    }

    fn add_cos(&mut self, k: i64, v: f64) {
        let k = k.unsigned_abs() as usize;
        if k == 0 {
            self.mean += v;
        } else {
            self.cos[k - 1] += v;
        }
    }

    fn add_sin(&mut self, k: i64, v: f64) {
        match k.cmp(&0) {
            std::cmp::Ordering::Equal => {}
            std::cmp::Ordering::Greater => self.sin[k as usize - 1] += v,
            std::cmp::Ordering::Less => self.sin[(-k) as usize - 1] -= v,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_pointwise(series: &TrigSeries, f: impl Fn(f64) -> f64, tol: f64) {
        for i in 0..257 {
            let t = i as f64 / 257.0;
            assert!(
                (series.eval(t) - f(t)).abs() < tol,
                "mismatch at t={t}: {} vs {}",
                series.eval(t),
                f(t)
            );
        }
    }

    #[test]
    fn product_matches_pointwise_evaluation() {
        let a = TrigSeries::new(0.3, vec![0.5, -0.2], vec![0.1, 0.7]);
        let b = TrigSeries::new(-1.1, vec![0.4], vec![-0.6]);
        let prod = a.mul(&b);
        assert_eq!(prod.cos.len(), 3);
        assert_pointwise(&prod, |t| a.eval(t) * b.eval(t), 1e-13);
    }

    #[test]
    fn square_of_single_harmonic() {
        // sin^2(2πt) = 1/2 - cos(4πt)/2
        let s = TrigSeries::new(0.0, vec![0.0], vec![1.0]);
        let sq = s.mul(&s);
        assert!((sq.mean - 0.5).abs() < 1e-15);
        assert!((sq.cos[1] + 0.5).abs() < 1e-15);
        assert!(sq.cos[0].abs() < 1e-15);
        assert!(sq.sin.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn antiderivative_inverts_derivative_on_oscillatory_part() {
        let a = TrigSeries::new(0.0, vec![0.2, 0.0, -0.4], vec![-0.9, 0.3, 0.0]);
        let back = a.derivative().antiderivative_periodic();
        assert_pointwise(&back, |t| a.eval(t), 1e-13);
    }
}
