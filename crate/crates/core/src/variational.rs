//! Generating function of the time–energy map and the discrete action of
//! (p,q) configurations.
//!
//! The two-point function is `h(t0,t1) = -A(t0,t1) + G(t1) - G(t0)` where A
//! is the Lagrangian action of the free-fall arc between racket contacts and
//! `G' = ½ḟ² - g·f`. Its partials reproduce the map: `h_1 = -e`, `h_2 = ē`,
//! which [`GeneratingContext::consistency_residuals`] certifies numerically.
//! Periodic orbits are critical points of `W = Σ h(t_i, t_{i+1})`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forcing::ForcingProfile;
use crate::impact::{EnergyState, ImpactMap, MapParams};
use crate::trig::TrigSeries;

/// Fraction of `e_star` below which a segment's induced energy is treated as
/// outside the trusted domain.
pub const ADMISSIBLE_ENERGY_FRACTION: f64 = 0.1;

/// Everything one free-fall arc `(t0, t1)` determines.
#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    /// Flight time.
    pub duration: f64,
    /// Divided difference f[t0, t1].
    pub dd: f64,
    /// Outgoing inertial velocity at t0.
    pub w: f64,
    /// Outgoing relative velocity at t0 (must be positive).
    pub v0: f64,
    /// Outgoing relative velocity at t1 after the bounce (must be positive).
    pub v1: f64,
}

impl Segment {
    pub fn energy_out(&self) -> f64 {
        0.5 * self.v0 * self.v0
    }

    pub fn energy_in(&self) -> f64 {
        0.5 * self.v1 * self.v1
    }
}

/// Second partials of h on one segment.
#[derive(Debug, Clone, Copy)]
pub struct HessianEntries {
    pub h11: f64,
    pub h12: f64,
    pub h22: f64,
}

/// Cyclic configuration of q impact times with closure `t_q = t_0 + p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionConfiguration {
    pub times: Vec<f64>,
    pub p: u32,
    pub q: u32,
}

pub(crate) fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl ActionConfiguration {
    /// Multiple covers (gcd(p,q) > 1) are allowed here; orbit identity is
    /// where coprimality is enforced.
    pub fn new(times: Vec<f64>, p: u32, q: u32) -> Result<Self> {
        if q == 0 || p == 0 {
            return Err(Error::Config(format!("(p,q) = ({p},{q}) must be positive")));
        }
        if times.len() != q as usize {
            return Err(Error::Config(format!(
                "configuration needs {q} times, got {}",
                times.len()
            )));
        }
        Ok(Self { times, p, q })
    }

    /// Segment endpoints including the wrap `(t_{q-1}, t_0 + p)`.
    pub fn segment_pairs(&self) -> Vec<(f64, f64)> {
        let q = self.times.len();
        (0..q)
            .map(|i| {
                let t0 = self.times[i];
                let t1 = if i + 1 < q { self.times[i + 1] } else { self.times[0] + self.p as f64 };
                (t0, t1)
            })
            .collect()
    }
}

/// Generating function and boundary primitive for one map.
#[derive(Debug, Clone)]
pub struct GeneratingContext {
    map: ImpactMap,
    /// Mean of `½ḟ² - g·f` over one period.
    mean_m: f64,
    /// Periodic part of the boundary primitive.
    boundary_periodic: TrigSeries,
}

impl GeneratingContext {
    pub fn new(map: ImpactMap) -> Self {
        let profile = map.profile().series();
        let velocity = profile.derivative();
        // ½ḟ² - g·f by exact series arithmetic
        let rate = velocity
            .mul(&velocity)
            .scaled(0.5)
            .add(&profile.scaled(-map.params().g));
        let mean_m = rate.mean;
        let boundary_periodic = rate.antiderivative_periodic();
        Self { map, mean_m, boundary_periodic }
    }

    pub fn for_profile(profile: ForcingProfile, params: MapParams) -> Self {
        Self::new(ImpactMap::new(profile, params))
    }

    pub fn map(&self) -> &ImpactMap {
        &self.map
    }

    pub fn profile(&self) -> &ForcingProfile {
        self.map.profile()
    }

    pub fn params(&self) -> &MapParams {
        self.map.params()
    }

    pub fn mean_m(&self) -> f64 {
        self.mean_m
    }

    /// Boundary primitive `G(t) = m·t + periodic part`.
    pub fn boundary_primitive(&self, t: f64) -> f64 {
        self.mean_m * t + self.boundary_periodic.eval(t)
    }

    fn admissible_floor(&self) -> f64 {
        ADMISSIBLE_ENERGY_FRACTION * self.params().e_star
    }

    /// Resolve a time pair into a free-fall arc, rejecting pairs that do not
    /// describe a genuine bounce-to-bounce flight.
    pub fn segment(&self, t0: f64, t1: f64) -> Result<Segment> {
        let duration = t1 - t0;
        if !(duration > 0.0) {
            return Err(Error::InadmissibleSegment {
                t0,
                t1,
                reason: "non-positive flight time".into(),
            });
        }
        let g = self.params().g;
        let profile = self.profile();
        let dd = profile.divided_difference(t0, t1);
        let w = dd + 0.5 * g * duration;
        let v0 = w - profile.velocity(t0);
        let v1 = profile.velocity(t1) - w + g * duration;
        if v0 <= 0.0 || v1 <= 0.0 {
            return Err(Error::InadmissibleSegment {
                t0,
                t1,
                reason: format!("arc is not a genuine bounce (v0={v0}, v1={v1})"),
            });
        }
        let floor = self.admissible_floor();
        let seg = Segment { t0, t1, duration, dd, w, v0, v1 };
        if seg.energy_out() < floor || seg.energy_in() < floor {
            return Err(Error::InadmissibleSegment {
                t0,
                t1,
                reason: format!(
                    "induced energy below the admissible floor {floor} (e0={}, e1={})",
                    seg.energy_out(),
                    seg.energy_in()
                ),
            });
        }
        Ok(seg)
    }

    /// Lagrangian action of the free-fall arc from `(t0, f(t0))` to
    /// `(t1, f(t1))`.
    pub fn free_fall_action(&self, t0: f64, t1: f64) -> f64 {
        let g = self.params().g;
        let duration = t1 - t0;
        let delta_f = self.profile().value(t1) - self.profile().value(t0);
        delta_f * delta_f / (2.0 * duration)
            - 0.5 * g * delta_f * duration
            - g * g * duration.powi(3) / 24.0
            - g * self.profile().value(t0) * duration
    }

    pub fn h(&self, t0: f64, t1: f64) -> Result<f64> {
        self.segment(t0, t1)?;
        Ok(self.h_unchecked(t0, t1))
    }

    fn h_unchecked(&self, t0: f64, t1: f64) -> f64 {
        -self.free_fall_action(t0, t1) + self.boundary_primitive(t1)
            - self.boundary_primitive(t0)
    }

    /// `(h_1, h_2) = (-e0, ē)` in closed form.
    pub fn h_partials(&self, t0: f64, t1: f64) -> Result<(f64, f64)> {
        let seg = self.segment(t0, t1)?;
        Ok((-seg.energy_out(), seg.energy_in()))
    }

    /// Second partials; `h12 = -v0·v1/T < 0` is the twist in
    /// generating-function form.
    pub fn h_second_partials(&self, t0: f64, t1: f64) -> Result<HessianEntries> {
        let seg = self.segment(t0, t1)?;
        let g = self.params().g;
        let (dd_t0, dd_t1) = self.profile().divided_difference_partials(t0, t1);
        let h11 = -seg.v0 * (dd_t0 - 0.5 * g - self.profile().acceleration(t0));
        let h12 = -seg.v0 * seg.v1 / seg.duration;
        let h22 = seg.v1 * (self.profile().acceleration(t1) - dd_t1 + 0.5 * g);
        Ok(HessianEntries { h11, h12, h22 })
    }

    /// Certificate that h generates the map: steps `(t0, e0)` forward and
    /// returns `(|h_1 + e0|, |h_2 - e1|)`.
    pub fn consistency_residuals(&self, t0: f64, e0: f64) -> Result<(f64, f64)> {
        let next = self.map.step_energy(&EnergyState { t: t0, e: e0 })?;
        let (h1, h2) = self.h_partials(t0, next.t)?;
        Ok(((h1 + e0).abs(), (h2 - next.e).abs()))
    }

    /// Discrete action `W = Σ h(t_i, t_{i+1})`.
    pub fn action(&self, cfg: &ActionConfiguration) -> Result<f64> {
        let mut acc = 0.0;
        for (t0, t1) in cfg.segment_pairs() {
            acc += self.h(t0, t1)?;
        }
        Ok(acc)
    }

    /// `∂W/∂t_i = h_2(t_{i-1}, t_i) + h_1(t_i, t_{i+1})`.
    pub fn action_gradient(&self, cfg: &ActionConfiguration) -> Result<Vec<f64>> {
        let pairs = cfg.segment_pairs();
        let q = pairs.len();
        let mut grad = vec![0.0; q];
        for (i, &(t0, t1)) in pairs.iter().enumerate() {
            let (h1, h2) = self.h_partials(t0, t1)?;
            grad[i] += h1;
            grad[(i + 1) % q] += h2;
        }
        Ok(grad)
    }

    /// Cyclic tridiagonal Hessian of W (dense q×q; the wrap couples the first
    /// and last coordinates, and for q ≤ 2 entries accumulate).
    pub fn action_hessian(&self, cfg: &ActionConfiguration) -> Result<DMatrix<f64>> {
        let pairs = cfg.segment_pairs();
        let q = pairs.len();
        let mut hess = DMatrix::zeros(q, q);
        for (i, &(t0, t1)) in pairs.iter().enumerate() {
            let entries = self.h_second_partials(t0, t1)?;
            let j = (i + 1) % q;
            hess[(i, i)] += entries.h11;
            hess[(j, j)] += entries.h22;
            hess[(i, j)] += entries.h12;
            hess[(j, i)] += entries.h12;
        }
        Ok(hess)
    }

    /// Energies induced by a critical configuration: `e_i = -h_1(t_i, t_{i+1})`.
    pub fn configuration_energies(&self, cfg: &ActionConfiguration) -> Result<Vec<f64>> {
        cfg.segment_pairs()
            .into_iter()
            .map(|(t0, t1)| Ok(self.segment(t0, t1)?.energy_out()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn context(amplitude: f64) -> GeneratingContext {
        let profile = if amplitude == 0.0 {
            ForcingProfile::zero()
        } else {
            ForcingProfile::cosine(amplitude)
        };
        let params = MapParams::for_profile(&profile, 1.0).unwrap();
        GeneratingContext::for_profile(profile, params)
    }

    #[test]
    fn integrable_h_closed_form() {
        let ctx = context(0.0);
        // h(0,2) = g²T³/24 = 1/3
        assert!((ctx.h(0.0, 2.0).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        assert_eq!(ctx.h(0.0, 2.0).unwrap(), ctx.h(1.0, 3.0).unwrap());
        let (h1, h2) = ctx.h_partials(0.0, 2.0).unwrap();
        assert!((h1 + 0.5).abs() < 1e-14);
        assert!((h2 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn h_periodicity_under_unit_shift() {
        let ctx = context(0.01);
        for (t0, t1) in [(0.0, 2.0), (0.3, 2.2), (0.9, 4.6)] {
            let shift = (ctx.h(t0 + 1.0, t1 + 1.0).unwrap() - ctx.h(t0, t1).unwrap()).abs();
            assert!(shift < 1e-10, "shift defect {shift} at ({t0},{t1})");
        }
    }

    #[test]
    fn boundary_primitive_rate() {
        let ctx = context(0.01);
        let g = ctx.params().g;
        let step = 1e-6;
        for t in [0.0, 0.21, 0.64] {
            let numeric =
                (ctx.boundary_primitive(t + step) - ctx.boundary_primitive(t - step)) / (2.0 * step);
            let fdot = ctx.profile().velocity(t);
            let exact = 0.5 * fdot * fdot - g * ctx.profile().value(t);
            assert!((numeric - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn inadmissible_segments_are_rejected() {
        let ctx = context(0.01);
        assert!(matches!(
            ctx.h(0.5, 0.4),
            Err(Error::InadmissibleSegment { .. })
        ));
        // tiny arc: induced energy below the floor
        assert!(matches!(
            ctx.h(0.2, 0.21),
            Err(Error::InadmissibleSegment { .. })
        ));
    }

    #[test]
    fn generating_identity_certificate() {
        let ctx = context(0.01);
        // integrable sanity: ∂h/∂t0 = -g²T²/8 = -e0
        let still = context(0.0);
        let (r1, r2) = still.consistency_residuals(0.0, 0.5).unwrap();
        assert!(r1 < 1e-12 && r2 < 1e-12);
        for (t, e) in [(0.0, 0.5), (0.3, 1.0), (0.8, 2.5), (0.45, 0.9)] {
            let (r1, r2) = ctx.consistency_residuals(t, e).unwrap();
            assert!(r1 < 1e-8 && r2 < 1e-8, "residuals ({r1}, {r2}) at ({t},{e})");
        }
    }

    #[test]
    fn action_integrable_values() {
        let ctx = context(0.0);
        let w21 = ctx
            .action(&ActionConfiguration::new(vec![0.0], 2, 1).unwrap())
            .unwrap();
        assert!((w21 - 1.0 / 3.0).abs() < 1e-14);

        // (4,2) wraps two arcs; equispaced is optimal by convexity of T³
        let equispaced = ActionConfiguration::new(vec![0.0, 2.0], 4, 2).unwrap();
        let w42 = ctx.action(&equispaced).unwrap();
        assert!((w42 - 2.0 / 3.0).abs() < 1e-14);
        for skew in [0.2, 0.5, 0.9] {
            let cfg = ActionConfiguration::new(vec![0.0, 2.0 + skew], 4, 2).unwrap();
            assert!(ctx.action(&cfg).unwrap() > w42);
        }
    }

    #[test]
    fn action_shift_invariance() {
        let ctx = context(0.01);
        let cfg = ActionConfiguration::new(vec![0.1, 2.6], 5, 2).unwrap();
        let shifted = ActionConfiguration::new(vec![1.1, 3.6], 5, 2).unwrap();
        assert!((ctx.action(&cfg).unwrap() - ctx.action(&shifted).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let ctx = context(0.01);
        let cfg = ActionConfiguration::new(vec![0.05, 2.4], 5, 2).unwrap();
        let grad = ctx.action_gradient(&cfg).unwrap();
        let step = 1e-7;
        for i in 0..2 {
            let mut plus = cfg.clone();
            plus.times[i] += step;
            let mut minus = cfg.clone();
            minus.times[i] -= step;
            let fd = (ctx.action(&plus).unwrap() - ctx.action(&minus).unwrap()) / (2.0 * step);
            assert!((grad[i] - fd).abs() < 1e-6, "grad[{i}] {} vs {fd}", grad[i]);
        }
    }

    #[test]
    fn integrable_gradient_vanishes_everywhere() {
        let ctx = context(0.0);
        for t0 in [0.0, 0.17, 0.5, 0.93] {
            let cfg = ActionConfiguration::new(vec![t0], 2, 1).unwrap();
            let grad = ctx.action_gradient(&cfg).unwrap();
            assert!(grad[0].abs() < 1e-12);
        }
    }

    #[test]
    fn forced_gradient_has_isolated_zeros() {
        let ctx = context(0.01);
        // scan W'(t0) over a period; it changes sign exactly twice
        let n = 400;
        let mut crossings = 0;
        let value = |t0: f64| {
            let cfg = ActionConfiguration::new(vec![t0], 2, 1).unwrap();
            ctx.action_gradient(&cfg).unwrap()[0]
        };
        let mut prev = value(0.001);
        for i in 1..=n {
            let t0 = 0.001 + i as f64 / n as f64;
            let cur = value(t0);
            if prev.signum() != cur.signum() {
                crossings += 1;
            }
            prev = cur;
        }
        assert_eq!(crossings, 2);
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let ctx = context(0.01);
        let cfg = ActionConfiguration::new(vec![0.02, 1.7, 3.4], 5, 3).unwrap();
        let hess = ctx.action_hessian(&cfg).unwrap();
        let step = 1e-5;
        for i in 0..3 {
            for j in 0..3 {
                let mut pp = cfg.clone();
                pp.times[i] += step;
                pp.times[j] += step;
                let mut pm = cfg.clone();
                pm.times[i] += step;
                pm.times[j] -= step;
                let mut mp = cfg.clone();
                mp.times[i] -= step;
                mp.times[j] += step;
                let mut mm = cfg.clone();
                mm.times[i] -= step;
                mm.times[j] -= step;
                let fd = (ctx.action(&pp).unwrap() - ctx.action(&pm).unwrap()
                    - ctx.action(&mp).unwrap()
                    + ctx.action(&mm).unwrap())
                    / (4.0 * step * step);
                let rel = (hess[(i, j)] - fd).abs() / fd.abs().max(1.0);
                assert!(rel < 1e-4, "H[{i}{j}] = {} vs {fd}", hess[(i, j)]);
            }
        }
    }

    #[test]
    fn twist_sign_of_h12() {
        let ctx = context(0.01);
        for (t0, t1) in [(0.0, 2.0), (0.4, 2.3), (0.8, 3.9)] {
            assert!(ctx.h_second_partials(t0, t1).unwrap().h12 < 0.0);
        }
    }

    #[test]
    fn q_fold_action_generates_the_iterated_map() {
        let ctx = context(0.01);
        for q in 1..=3u32 {
            let (states, _) = ctx
                .map()
                .iterate(&EnergyState { t: 0.1, e: 2.0 }, q)
                .unwrap();
            let times: Vec<f64> = states.iter().map(|s| s.t).collect();
            // endpoint identities of the eliminated action
            let (h1, _) = ctx.h_partials(times[0], times[1]).unwrap();
            assert!((h1 + states[0].e).abs() < 1e-7);
            let (_, h2) = ctx
                .h_partials(times[q as usize - 1], times[q as usize])
                .unwrap();
            assert!((h2 - states[q as usize].e).abs() < 1e-7);
            // interior stationarity
            for i in 1..q as usize {
                let (_, h2) = ctx.h_partials(times[i - 1], times[i]).unwrap();
                let (h1, _) = ctx.h_partials(times[i], times[i + 1]).unwrap();
                assert!((h2 + h1).abs() < 1e-7);
            }
        }
    }
}
