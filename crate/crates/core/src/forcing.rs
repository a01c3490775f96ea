//! Racket height profile: a real-analytic 1-periodic trigonometric polynomial
//! with exact derivatives, sup-norms and divided differences.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::trig::TrigSeries;

/// Gap below which divided differences switch to the integral form
/// `∫₀¹ ḟ(t0 + s(t1-t0)) ds` to avoid catastrophic cancellation.
pub const DIVIDED_DIFF_GAP: f64 = 1e-5;

/// 8-point Gauss-Legendre rule on [0, 1].
const GL8: [(f64, f64); 8] = [
    (0.019855071751231884, 0.05061426814518813),
    (0.10166676129318664, 0.11119051722668724),
    (0.2372337950418355, 0.15685332293894364),
    (0.40828267875217505, 0.18134189168918099),
    (0.5917173212478249, 0.18134189168918099),
    (0.7627662049581645, 0.15685332293894364),
    (0.8983332387068134, 0.11119051722668724),
    (0.9801449282487681, 0.05061426814518813),
];

/// `f(t) = a_0 + Σ_{k=1..K} a_k cos(2πkt) + b_k sin(2πkt)`.
///
/// `cos` holds `[a_0, a_1, ..., a_K]`, `sin` holds `[b_1, ..., b_K]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcingProfile {
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl ForcingProfile {
    pub fn new(cos: Vec<f64>, sin: Vec<f64>) -> Self {
        Self { cos, sin }
    }

    /// The still racket.
    pub fn zero() -> Self {
        Self { cos: vec![], sin: vec![] }
    }

    /// Single cosine harmonic `a·cos(2πt)`, the workhorse test profile.
    pub fn cosine(amplitude: f64) -> Self {
        Self { cos: vec![0.0, amplitude], sin: vec![] }
    }

    /// Profile with every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            cos: self.cos.iter().map(|a| a * factor).collect(),
            sin: self.sin.iter().map(|b| b * factor).collect(),
        }
    }

    /// Number of harmonics K.
    pub fn degree(&self) -> usize {
        self.cos.len().saturating_sub(1).max(self.sin.len())
    }

    fn harmonic(&self, k: usize) -> (f64, f64) {
        let a = self.cos.get(k).copied().unwrap_or(0.0);
        let b = if k >= 1 { self.sin.get(k - 1).copied().unwrap_or(0.0) } else { 0.0 };
        (a, b)
    }

    /// Order-th derivative of f at t. Exact term-by-term differentiation;
    /// the argument is reduced mod 1 first so periodicity holds bit-exactly.
    pub fn eval(&self, t: f64, order: usize) -> f64 {
        let frac = t - t.floor();
        let mut acc = if order == 0 { self.harmonic(0).0 } else { 0.0 };
        for k in 1..=self.degree() {
            let (a, b) = self.harmonic(k);
            if a == 0.0 && b == 0.0 {
                continue;
            }
            let omega = TAU * k as f64;
            let arg = omega * frac;
            let (s, c) = arg.sin_cos();
            let scale = omega.powi(order as i32);
            // d/dt cycles the (cos, sin) pair with period 4
            acc += scale
                * match order % 4 {
                    0 => a * c + b * s,
                    1 => -a * s + b * c,
                    2 => -a * c - b * s,
                    _ => a * s - b * c,
                };
        }
        acc
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(t, 0)
    }

    pub fn velocity(&self, t: f64) -> f64 {
        self.eval(t, 1)
    }

    pub fn acceleration(&self, t: f64) -> f64 {
        self.eval(t, 2)
    }

    /// `max_{[0,1]} |f^(order)|` by dense sampling plus golden-section
    /// refinement around the sampled argmax.
    pub fn sup_norm(&self, order: usize) -> f64 {
        const SAMPLES: usize = 10_001;
        let mut best_x = 0.0;
        let mut best = 0.0f64;
        for i in 0..SAMPLES {
            let t = i as f64 / (SAMPLES - 1) as f64;
            let v = self.eval(t, order).abs();
            if v > best {
                best = v;
                best_x = t;
            }
        }
        let h = 1.0 / (SAMPLES - 1) as f64;
        let refined = self.golden_max(best_x - h, best_x + h, order);
        best.max(refined)
    }

    /// `Σ (2πk)^order (|a_k| + |b_k|)`, an upper bound for `sup_norm(order)`.
    pub fn coefficient_bound(&self, order: usize) -> f64 {
        let mut acc = if order == 0 { self.harmonic(0).0.abs() } else { 0.0 };
        for k in 1..=self.degree() {
            let (a, b) = self.harmonic(k);
            acc += (TAU * k as f64).powi(order as i32) * (a.abs() + b.abs());
        }
        acc
    }

    fn golden_max(&self, mut lo: f64, mut hi: f64, order: usize) -> f64 {
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let mut x1 = hi - INV_PHI * (hi - lo);
        let mut x2 = lo + INV_PHI * (hi - lo);
        let mut f1 = self.eval(x1, order).abs();
        let mut f2 = self.eval(x2, order).abs();
        for _ in 0..80 {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + INV_PHI * (hi - lo);
                f2 = self.eval(x2, order).abs();
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - INV_PHI * (hi - lo);
                f1 = self.eval(x1, order).abs();
            }
            if hi - lo < 1e-14 {
                break;
            }
        }
        f1.max(f2)
    }

    /// `f[t0, t1] = (f(t1) - f(t0)) / (t1 - t0)`, switching to quadrature of
    /// `∫₀¹ ḟ(t0 + s(t1-t0)) ds` below [`DIVIDED_DIFF_GAP`]; equals `ḟ(t0)`
    /// at coincident arguments.
    pub fn divided_difference(&self, t0: f64, t1: f64) -> f64 {
        let (t0, t1) = if t1 < t0 { (t1, t0) } else { (t0, t1) };
        let gap = t1 - t0;
        if gap >= DIVIDED_DIFF_GAP {
            (self.eval(t1, 0) - self.eval(t0, 0)) / gap
        } else {
            GL8.iter()
                .map(|&(node, weight)| weight * self.eval(t0 + node * gap, 1))
                .sum()
        }
    }

    /// Partial derivatives `(∂/∂t0, ∂/∂t1)` of the divided difference, with
    /// the same small-gap quadrature fallback (weights `1-s` and `s` on f̈).
    pub fn divided_difference_partials(&self, t0: f64, t1: f64) -> (f64, f64) {
        if t1 >= t0 + DIVIDED_DIFF_GAP || t0 >= t1 + DIVIDED_DIFF_GAP {
            let gap = t1 - t0;
            let dd = self.divided_difference(t0, t1);
            (
                (dd - self.eval(t0, 1)) / gap,
                (self.eval(t1, 1) - dd) / gap,
            )
        } else {
            let gap = t1 - t0;
            let mut d0 = 0.0;
            let mut d1 = 0.0;
            for &(node, weight) in &GL8 {
                let ddot = self.eval(t0 + node * gap, 2);
                d0 += weight * (1.0 - node) * ddot;
                d1 += weight * node * ddot;
            }
            (d0, d1)
        }
    }

    /// Coefficient view for exact series arithmetic.
    pub(crate) fn series(&self) -> TrigSeries {
        let degree = self.degree();
        let mut cos = vec![0.0; degree];
        let mut sin = vec![0.0; degree];
        for k in 1..=degree {
            let (a, b) = self.harmonic(k);
            cos[k - 1] = a;
            sin[k - 1] = b;
        }
        TrigSeries::new(self.harmonic(0).0, cos, sin)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_profile_evaluates_to_zero() {
        let f = ForcingProfile::zero();
        assert_eq!(f.eval(0.3, 0), 0.0);
        assert_eq!(f.sup_norm(1), 0.0);
    }

    #[test]
    fn single_harmonic_derivatives() {
        let f = ForcingProfile::cosine(0.01);
        assert!((f.eval(0.0, 1) - 0.0).abs() < 1e-15);
        assert!((f.eval(0.0, 2) + 0.01 * TAU * TAU).abs() < 1e-12);
        assert!((f.eval(0.0, 2) + 0.394_784_176_043_574).abs() < 1e-9);
    }

    #[test]
    fn sup_norm_single_harmonic() {
        let f = ForcingProfile::cosine(0.01);
        assert!((f.sup_norm(1) - 0.01 * TAU).abs() < 1e-12);
        assert!((f.sup_norm(0) - 0.01).abs() < 1e-14);
    }

    #[test]
    fn sup_norm_between_dense_sample_and_coefficient_bound() {
        let f = ForcingProfile::new(vec![0.0, 0.01], vec![0.0, 0.005]);
        // independent oracle: much denser sampling
        let mut sampled = 0.0f64;
        for i in 0..100_000 {
            sampled = sampled.max(f.eval(i as f64 / 1e5, 2).abs());
        }
        let norm = f.sup_norm(2);
        assert!(norm >= sampled - 1e-12, "{norm} < dense sample {sampled}");
        assert!(norm <= f.coefficient_bound(2) + 1e-12);
    }

    #[test]
    fn periodicity_all_orders() {
        let f = ForcingProfile::new(vec![0.2, 0.01, -0.003], vec![0.004, 0.0]);
        for order in 0..3 {
            for i in 0..64 {
                let t = i as f64 / 64.0;
                assert_eq!(f.eval(t, order), f.eval(t + 1.0, order));
            }
        }
    }

    #[test]
    fn divided_difference_basics() {
        let constant = ForcingProfile::new(vec![0.7], vec![]);
        assert_eq!(constant.divided_difference(0.1, 0.9), 0.0);

        let f = ForcingProfile::cosine(0.01);
        // (f(0.5) - f(0)) / 0.5 = (-0.01 - 0.01) / 0.5
        assert!((f.divided_difference(0.0, 0.5) + 0.04).abs() < 1e-15);
        // coincident arguments → ḟ(t0)
        assert!((f.divided_difference(0.3, 0.3) - f.eval(0.3, 1)).abs() < 1e-12);
    }

    #[test]
    fn divided_difference_symmetry_and_branch_continuity() {
        let f = ForcingProfile::new(vec![0.0, 0.01, 0.002], vec![0.007]);
        for (t0, t1) in [(0.1, 0.4), (0.25, 0.25 + 2e-5), (0.6, 0.6 + 0.9e-5)] {
            assert_eq!(f.divided_difference(t0, t1), f.divided_difference(t1, t0));
        }
        // both branch formulas agree at the switch gap itself
        let (t0, t1) = (0.2, 0.2 + DIVIDED_DIFF_GAP);
        let direct = (f.eval(t1, 0) - f.eval(t0, 0)) / DIVIDED_DIFF_GAP;
        let quadrature = f.divided_difference(t0, t1 - f64::EPSILON);
        assert!((direct - quadrature).abs() < 1e-12);
    }

    #[test]
    fn divided_difference_consistency_bound() {
        let f = ForcingProfile::new(vec![0.0, 0.01], vec![0.003]);
        let ddf_norm = f.sup_norm(2);
        for i in 1..=20 {
            let h = i as f64 / 20.0;
            for j in 0..10 {
                let t = j as f64 / 10.0;
                let err = (f.divided_difference(t, t + h) - f.eval(t, 1)).abs();
                assert!(err <= ddf_norm * h / 2.0 + 1e-12);
            }
        }
    }

    #[test]
    fn partials_match_finite_differences() {
        let f = ForcingProfile::new(vec![0.0, 0.01, -0.004], vec![0.006]);
        let step = 1e-6;
        for (t0, t1) in [(0.1, 0.8), (0.3, 0.3 + 0.5e-5), (0.0, 2.4)] {
            let (d0, d1) = f.divided_difference_partials(t0, t1);
            let fd0 =
                (f.divided_difference(t0 + step, t1) - f.divided_difference(t0 - step, t1)) / (2.0 * step);
            let fd1 =
                (f.divided_difference(t0, t1 + step) - f.divided_difference(t0, t1 - step)) / (2.0 * step);
            assert!((d0 - fd0).abs() < 1e-6, "d0 {d0} vs {fd0} at ({t0},{t1})");
            assert!((d1 - fd1).abs() < 1e-6, "d1 {d1} vs {fd1} at ({t0},{t1})");
        }
    }
}
