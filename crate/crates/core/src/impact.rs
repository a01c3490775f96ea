//! The bouncing-ball impact maps.
//!
//! `step_velocity` is the map in moving-frame time–velocity coordinates,
//! `step_energy` its conjugate in time–energy coordinates via e = v²/2.
//! Both rest on the implicit next-impact equation
//! `f(t) + w(t̄-t) - (g/2)(t̄-t)² = f(t̄)` solved for the smallest `t̄ > t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forcing::ForcingProfile;

/// Exclusion offset honoring the strict inequality t̄ > t.
const ROOT_OFFSET: f64 = 1e-9;
/// Nodes of the forward bracketing scan.
const N_SCAN: usize = 4096;

/// Gravity and the thresholds of the guaranteed embedding domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapParams {
    pub g: f64,
    pub v_star: f64,
    pub e_star: f64,
}

impl MapParams {
    /// Default thresholds: `v* = 4‖ḟ‖ + 1`, any margin above the strict bound.
    pub fn for_profile(profile: &ForcingProfile, g: f64) -> Result<Self> {
        Self::with_v_star(profile, g, 4.0 * profile.sup_norm(1) + 1.0)
    }

    pub fn with_v_star(profile: &ForcingProfile, g: f64, v_star: f64) -> Result<Self> {
        if !(g > 0.0) {
            return Err(Error::Config(format!("g must be positive, got {g}")));
        }
        let floor = 4.0 * profile.sup_norm(1);
        if v_star <= floor {
            return Err(Error::Config(format!(
                "v_star must exceed 4·sup|ḟ| = {floor}, got {v_star}"
            )));
        }
        Ok(Self { g, v_star, e_star: 0.5 * v_star * v_star })
    }
}

/// Impact time and moving-frame post-impact velocity `v = w - ḟ(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityState {
    pub t: f64,
    pub v: f64,
}

/// Impact time and kinetic energy `e = v²/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyState {
    pub t: f64,
    pub e: f64,
}

/// Jacobian of the time–energy map at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianTE {
    pub dt_dt: f64,
    pub dt_de: f64,
    pub de_dt: f64,
    pub de_de: f64,
}

impl JacobianTE {
    pub fn identity() -> Self {
        Self { dt_dt: 1.0, dt_de: 0.0, de_dt: 0.0, de_de: 1.0 }
    }

    pub fn det(&self) -> f64 {
        self.dt_dt * self.de_de - self.dt_de * self.de_dt
    }

    pub fn trace(&self) -> f64 {
        self.dt_dt + self.de_de
    }

    /// Largest/smallest singular value ratio.
    pub fn cond(&self) -> f64 {
        let sq = self.dt_dt * self.dt_dt
            + self.dt_de * self.dt_de
            + self.de_dt * self.de_dt
            + self.de_de * self.de_de;
        let det = self.det().abs();
        let mid = 0.5 * sq;
        let disc = (mid * mid - det * det).max(0.0).sqrt();
        let smax2 = mid + disc;
        let smin2 = mid - disc;
        if smin2 <= 0.0 { f64::INFINITY } else { (smax2 / smin2).sqrt() }
    }
}

impl std::ops::Mul for JacobianTE {
    type Output = JacobianTE;

    fn mul(self, rhs: JacobianTE) -> JacobianTE {
        JacobianTE {
            dt_dt: self.dt_dt * rhs.dt_dt + self.dt_de * rhs.de_dt,
            dt_de: self.dt_dt * rhs.dt_de + self.dt_de * rhs.de_de,
            de_dt: self.de_dt * rhs.dt_dt + self.de_de * rhs.de_dt,
            de_de: self.de_dt * rhs.dt_de + self.de_de * rhs.de_de,
        }
    }
}

/// One recorded impact of a simulated bouncing motion.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BouncePoint {
    pub n: usize,
    pub t: f64,
    pub v: f64,
    pub e: f64,
    pub grazing: bool,
    /// Impact happened after the flight apex (ball was falling).
    pub falling: bool,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub points: Vec<BouncePoint>,
    /// Every genuine (non-grazing) impact happened while the ball was falling.
    pub all_impacts_falling: bool,
}

/// The maps for one forcing profile and parameter set. Immutable; all
/// operations are pure.
#[derive(Debug, Clone)]
pub struct ImpactMap {
    profile: ForcingProfile,
    params: MapParams,
    f_norm: f64,
    df_norm: f64,
    ddf_norm: f64,
}

impl ImpactMap {
    pub fn new(profile: ForcingProfile, params: MapParams) -> Self {
        let f_norm = profile.sup_norm(0);
        let df_norm = profile.sup_norm(1);
        let ddf_norm = profile.sup_norm(2);
        Self { profile, params, f_norm, df_norm, ddf_norm }
    }

    pub fn profile(&self) -> &ForcingProfile {
        &self.profile
    }

    pub fn params(&self) -> &MapParams {
        &self.params
    }

    pub fn df_norm(&self) -> f64 {
        self.df_norm
    }

    pub fn ddf_norm(&self) -> f64 {
        self.ddf_norm
    }

    /// Energy floor for q-fold iteration: `½(v* + 4q‖ḟ‖)²`.
    pub fn e_sharp(&self, q: u32) -> f64 {
        let v = self.params.v_star + 4.0 * q as f64 * self.df_norm;
        0.5 * v * v
    }

    /// Smallest `t̄ > t` solving the impact equation for inertial outgoing
    /// velocity `w`. Solved in flight time `T = t̄ - t` with the start time
    /// reduced mod 1, so the result commutes bit-exactly with the unit shift.
    pub fn next_impact_time(&self, t: f64, w: f64) -> Result<f64> {
        let racket_velocity = self.profile.velocity(t);
        if w <= racket_velocity {
            return Err(Error::GrazingImpact { t, w, racket_velocity });
        }
        let g = self.params.g;
        let base = t - t.floor();
        let f0 = self.profile.value(base);
        let residual = |flight: f64| {
            f0 + w * flight - 0.5 * g * flight * flight - self.profile.value(base + flight)
        };
        let slope = |flight: f64| w - g * flight - self.profile.velocity(base + flight);

        // a-priori flight bound: beyond it the parabola clears 2‖f‖ of drop
        let t_max = (w + (w * w + 8.0 * g * self.f_norm).sqrt()) / g;

        if self.ddf_norm < g {
            // The residual is strictly concave in flight time, so the unique
            // descending zero is the smallest root and Newton from the
            // integrable guess is trustworthy.
            if let Some(flight) = self.newton_root(&residual, &slope, 2.0 * w / g, t_max) {
                return Ok(t + flight);
            }
        }

        let flight = self.scan_root(&residual, &slope, t_max, t, w)?;
        Ok(t + flight)
    }

    fn newton_root(
        &self,
        residual: &impl Fn(f64) -> f64,
        slope: &impl Fn(f64) -> f64,
        guess: f64,
        t_max: f64,
    ) -> Option<f64> {
        let mut flight = guess.min(t_max);
        for _ in 0..64 {
            let r = residual(flight);
            let dr = slope(flight);
            if dr >= 0.0 {
                return None; // left of the apex; concavity argument is void
            }
            let step = r / dr;
            let next = flight - step;
            if !(next > 0.0 && next <= 1.5 * t_max) || !next.is_finite() {
                return None;
            }
            flight = next;
            if step.abs() <= 1e-15 * flight.max(1.0) {
                if slope(flight) < 0.0 && self.residual_ok(residual(flight), guess) {
                    return Some(flight);
                }
                return None;
            }
        }
        None
    }

    fn scan_root(
        &self,
        residual: &impl Fn(f64) -> f64,
        slope: &impl Fn(f64) -> f64,
        t_max: f64,
        t: f64,
        w: f64,
    ) -> Result<f64> {
        let mut lo = ROOT_OFFSET;
        let mut hi = None;
        if residual(lo) < 0.0 {
            // root crammed against t: near-grazing launch
            lo = 0.0;
            hi = Some(ROOT_OFFSET);
        } else {
            let h = (t_max - ROOT_OFFSET) / N_SCAN as f64;
            for k in 1..=N_SCAN {
                let x = ROOT_OFFSET + k as f64 * h;
                if residual(x) < 0.0 {
                    hi = Some(x);
                    break;
                }
                lo = x;
            }
        }
        let Some(mut hi) = hi else {
            return Err(Error::SolverFailure { t, w });
        };
        let mut rounds = 0;
        while hi - lo > 1e-14 * hi.max(1.0) && rounds < 200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break; // bracket reached float resolution
            }
            if residual(mid) < 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            rounds += 1;
        }
        // derivative polish inside the bracket
        let mut flight = 0.5 * (lo + hi);
        for _ in 0..4 {
            let dr = slope(flight);
            if dr == 0.0 {
                break;
            }
            let next = flight - residual(flight) / dr;
            if next < lo - 1e-13 || next > hi + 1e-13 {
                break;
            }
            flight = next;
        }
        if !self.residual_ok(residual(flight), w.max(1.0)) {
            return Err(Error::SolverFailure { t, w });
        }
        Ok(flight)
    }

    fn residual_ok(&self, r: f64, w: f64) -> bool {
        r.abs() < 1e-12 * (w * w / self.params.g).max(1.0)
    }

    /// One step of the time–velocity map.
    pub fn step_velocity(&self, s: &VelocityState) -> Result<VelocityState> {
        let fdot = self.profile.velocity(s.t);
        let t_next = self.next_impact_time(s.t, s.v + fdot)?;
        let dd = self.profile.divided_difference(s.t, t_next);
        let v_next = s.v - 2.0 * dd + self.profile.velocity(t_next) + fdot;
        Ok(VelocityState { t: t_next, v: v_next })
    }

    /// One step of the time–energy map, the conjugate of [`Self::step_velocity`]
    /// under `e = v²/2`.
    pub fn step_energy(&self, s: &EnergyState) -> Result<EnergyState> {
        let (state, _) = self.step_energy_signed(s)?;
        Ok(state)
    }

    /// Energy step that also reports the signed post-impact relative
    /// velocity, which the squared energy coordinate cannot recover.
    fn step_energy_signed(&self, s: &EnergyState) -> Result<(EnergyState, f64)> {
        if s.e <= 0.0 {
            let racket_velocity = self.profile.velocity(s.t);
            return Err(Error::GrazingImpact { t: s.t, w: racket_velocity, racket_velocity });
        }
        let next = self.step_velocity(&VelocityState { t: s.t, v: (2.0 * s.e).sqrt() })?;
        Ok((EnergyState { t: next.t, e: 0.5 * next.v * next.v }, next.v))
    }

    /// Exact Jacobian of [`Self::step_energy`] by implicit differentiation of
    /// the impact equation.
    pub fn jacobian_energy(&self, s: &EnergyState) -> Result<JacobianTE> {
        if s.e <= 0.0 {
            let racket_velocity = self.profile.velocity(s.t);
            return Err(Error::GrazingImpact { t: s.t, w: racket_velocity, racket_velocity });
        }
        let g = self.params.g;
        let c = 2.0 / g;
        let v = (2.0 * s.e).sqrt();
        let fdot0 = self.profile.velocity(s.t);
        let t1 = self.next_impact_time(s.t, v + fdot0)?;
        let (dd_t0, dd_t1) = self.profile.divided_difference_partials(s.t, t1);
        let denom = 1.0 + c * dd_t1;
        if denom.abs() < 1e-12 {
            return Err(Error::SingularImplicitSystem { t_next: t1 });
        }
        let fddot0 = self.profile.acceleration(s.t);
        let fddot1 = self.profile.acceleration(t1);
        let dt1_dt = (1.0 - c * (dd_t0 - fddot0)) / denom;
        let dt1_de = c / (v * denom);

        let dd = self.profile.divided_difference(s.t, t1);
        let v1 = v - 2.0 * dd + self.profile.velocity(t1) + fdot0;
        let dv1_dt = -2.0 * (dd_t0 + dd_t1 * dt1_dt) + fddot1 * dt1_dt + fddot0;
        let dv1_de = 1.0 / v - 2.0 * dd_t1 * dt1_de + fddot1 * dt1_de;
        Ok(JacobianTE {
            dt_dt: dt1_dt,
            dt_de: dt1_de,
            de_dt: v1 * dv1_dt,
            de_de: v1 * dv1_de,
        })
    }

    /// q-fold orbit segment with the chain-rule Jacobian product. States with
    /// non-positive relative velocity cannot be continued and abort with
    /// `DomainExit`.
    pub fn iterate(&self, s: &EnergyState, q: u32) -> Result<(Vec<EnergyState>, JacobianTE)> {
        let mut states = Vec::with_capacity(q as usize + 1);
        states.push(*s);
        let mut jac = JacobianTE::identity();
        let mut current = *s;
        for step in 1..=q {
            let local = self.jacobian_energy(&current).map_err(|err| match err {
                Error::GrazingImpact { .. } => Error::DomainExit {
                    step: step as usize,
                    v: (2.0 * current.e.max(0.0)).sqrt(),
                },
                other => other,
            })?;
            jac = local * jac;
            let (next, v_signed) = self.step_energy_signed(&current)?;
            if v_signed <= 0.0 && step < q {
                return Err(Error::DomainExit { step: step as usize, v: v_signed });
            }
            states.push(next);
            current = next;
        }
        Ok((states, jac))
    }

    /// Forward bouncing motion with the grazing rule `(t, w) -> (t, w)`
    /// applied (and flagged) whenever `w ≤ ḟ(t)`.
    pub fn simulate_bouncing(&self, s0: &VelocityState, n_steps: usize) -> Trajectory {
        let mut points = Vec::with_capacity(n_steps + 1);
        points.push(BouncePoint {
            n: 0,
            t: s0.t,
            v: s0.v,
            e: 0.5 * s0.v * s0.v,
            grazing: false,
            falling: true,
        });
        let mut all_falling = true;
        let mut state = *s0;
        for n in 1..=n_steps {
            if state.v <= 0.0 {
                // fixed rule: the state freezes
                points.push(BouncePoint {
                    n,
                    t: state.t,
                    v: state.v,
                    e: 0.5 * state.v * state.v,
                    grazing: true,
                    falling: false,
                });
                continue;
            }
            let w = state.v + self.profile.velocity(state.t);
            let next = self
                .step_velocity(&state)
                .expect("impact solver: a root is guaranteed below the flight bound");
            let falling = next.t - state.t > w / self.params.g;
            all_falling &= falling;
            points.push(BouncePoint {
                n,
                t: next.t,
                v: next.v,
                e: 0.5 * next.v * next.v,
                grazing: false,
                falling,
            });
            state = next;
        }
        Trajectory { points, all_impacts_falling: all_falling }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn still_map() -> ImpactMap {
        let profile = ForcingProfile::zero();
        let params = MapParams::for_profile(&profile, 1.0).unwrap();
        ImpactMap::new(profile, params)
    }

    fn cosine_map(amplitude: f64) -> ImpactMap {
        let profile = ForcingProfile::cosine(amplitude);
        let params = MapParams::for_profile(&profile, 1.0).unwrap();
        ImpactMap::new(profile, params)
    }

    /// Independent smallest-root oracle: dense scan plus plain bisection.
    fn oracle_next_impact(map: &ImpactMap, t: f64, w: f64) -> f64 {
        let g = map.params().g;
        let f = map.profile();
        let res = |tb: f64| f.value(t) + w * (tb - t) - 0.5 * g * (tb - t).powi(2) - f.value(tb);
        let t_hi = t + (w + (w * w + 8.0 * g * f.sup_norm(0)).sqrt()) / g;
        let n = 1_000_000;
        let mut lo = t + 1e-9;
        let mut hi = None;
        for k in 1..=n {
            let x = t + 1e-9 + k as f64 * (t_hi - t - 1e-9) / n as f64;
            if res(x) < 0.0 {
                hi = Some(x);
                break;
            }
            lo = x;
        }
        let mut hi = hi.expect("oracle found no sign change");
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if res(mid) < 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn integrable_flight_time() {
        let map = still_map();
        assert!((map.next_impact_time(0.0, 1.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_offset_cancels() {
        let profile = ForcingProfile::new(vec![0.37], vec![]);
        let params = MapParams::for_profile(&profile, 1.0).unwrap();
        let map = ImpactMap::new(profile, params);
        assert!((map.next_impact_time(0.3, 2.0).unwrap() - 4.3).abs() < 1e-12);
    }

    #[test]
    fn solver_matches_dense_scan_oracle() {
        let map = cosine_map(0.01);
        for (t, w) in [(0.0, 1.0), (0.3, 1.7), (0.6, 2.4), (0.99, 1.2)] {
            let fast = map.next_impact_time(t, w).unwrap();
            let slow = oracle_next_impact(&map, t, w);
            assert!((fast - slow).abs() < 1e-9, "({t},{w}): {fast} vs {slow}");
        }
        // steep forcing forces the bracketing path
        let steep = cosine_map(0.05);
        assert!(steep.ddf_norm() > steep.params().g);
        for (t, w) in [(0.1, 1.5), (0.7, 2.2)] {
            let fast = steep.next_impact_time(t, w).unwrap();
            let slow = oracle_next_impact(&steep, t, w);
            assert!((fast - slow).abs() < 1e-9, "({t},{w}): {fast} vs {slow}");
        }
    }

    #[test]
    fn residual_small_at_returned_root() {
        let map = cosine_map(0.01);
        let (t, w) = (0.2, 1.3);
        let t1 = map.next_impact_time(t, w).unwrap();
        let f = map.profile();
        let res = f.value(t) + w * (t1 - t) - 0.5 * (t1 - t).powi(2) - f.value(t1);
        assert!(res.abs() < 1e-12 * (w * w).max(1.0));
        assert!(t1 > t);
    }

    #[test]
    fn grazing_is_reported() {
        let map = cosine_map(0.01);
        // ḟ(0.75) = 0.01·2π > 0; launch slower than the racket
        let racket = map.profile().velocity(0.75);
        assert!(racket > 0.0);
        let err = map.next_impact_time(0.75, 0.5 * racket).unwrap_err();
        assert!(matches!(err, Error::GrazingImpact { .. }));
        let err = map.step_velocity(&VelocityState { t: 0.75, v: -0.1 }).unwrap_err();
        assert!(matches!(err, Error::GrazingImpact { .. }));
    }

    #[test]
    fn velocity_step_integrable() {
        let map = still_map();
        let next = map.step_velocity(&VelocityState { t: 0.0, v: 1.0 }).unwrap();
        assert!((next.t - 2.0).abs() < 1e-12);
        assert!((next.v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn velocity_drift_bound() {
        let map = cosine_map(0.01);
        let bound = 4.0 * map.df_norm();
        let mut s = VelocityState { t: 0.0, v: 1.0 };
        for _ in 0..50 {
            let next = map.step_velocity(&s).unwrap();
            assert!((next.v - s.v).abs() <= bound + 1e-14);
            s = next;
        }
    }

    #[test]
    fn energy_step_integrable() {
        let map = still_map();
        let next = map.step_energy(&EnergyState { t: 0.0, e: 0.5 }).unwrap();
        assert!((next.t - 2.0).abs() < 1e-12);
        assert!((next.e - 0.5).abs() < 1e-12);
        let next = map.step_energy(&EnergyState { t: 0.25, e: 2.0 }).unwrap();
        assert!((next.t - 4.25).abs() < 1e-12);
        assert!((next.e - 2.0).abs() < 1e-12);
    }

    #[test]
    fn energy_velocity_conjugacy() {
        let map = cosine_map(0.01);
        for (t, e) in [(0.0, 0.5), (0.3, 1.1), (0.77, 0.8)] {
            let via_energy = map.step_energy(&EnergyState { t, e }).unwrap();
            let v = (2.0 * e).sqrt();
            let via_velocity = map.step_velocity(&VelocityState { t, v }).unwrap();
            assert!((via_energy.t - via_velocity.t).abs() < 1e-10);
            assert!((via_energy.e - 0.5 * via_velocity.v.powi(2)).abs() < 1e-10);
        }
    }

    #[test]
    fn jacobian_integrable_closed_form() {
        let map = still_map();
        let jac = map.jacobian_energy(&EnergyState { t: 0.0, e: 0.5 }).unwrap();
        assert!((jac.dt_dt - 1.0).abs() < 1e-12);
        assert!((jac.dt_de - 2.0).abs() < 1e-12);
        assert!(jac.de_dt.abs() < 1e-12);
        assert!((jac.de_de - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let map = cosine_map(0.01);
        let s = EnergyState { t: 0.0, e: 0.5 };
        let jac = map.jacobian_energy(&s).unwrap();
        let ht = 1e-6;
        let he = 1e-6 * s.e.max(1.0);
        let pt = map.step_energy(&EnergyState { t: s.t + ht, ..s }).unwrap();
        let mt = map.step_energy(&EnergyState { t: s.t - ht, ..s }).unwrap();
        let pe = map.step_energy(&EnergyState { e: s.e + he, ..s }).unwrap();
        let me = map.step_energy(&EnergyState { e: s.e - he, ..s }).unwrap();
        let fd = [
            (pt.t - mt.t) / (2.0 * ht),
            (pe.t - me.t) / (2.0 * he),
            (pt.e - mt.e) / (2.0 * ht),
            (pe.e - me.e) / (2.0 * he),
        ];
        let an = [jac.dt_dt, jac.dt_de, jac.de_dt, jac.de_de];
        for (a, f) in an.iter().zip(fd.iter()) {
            assert!((a - f).abs() <= 1e-5 * f.abs().max(1.0), "{a} vs {f}");
        }
        assert!((jac.det() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn iterate_integrable() {
        let map = still_map();
        let (states, jac) = map.iterate(&EnergyState { t: 0.0, e: 0.5 }, 3).unwrap();
        let times: Vec<f64> = states.iter().map(|s| s.t).collect();
        for (got, want) in times.iter().zip([0.0, 2.0, 4.0, 6.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(states.iter().all(|s| (s.e - 0.5).abs() < 1e-12));
        assert!((jac.dt_de - 6.0).abs() < 1e-10); // 2q/(g√(2e)) = 6
        assert!((jac.det() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn iterate_drift_and_time_bounds() {
        let map = cosine_map(0.01);
        let df = map.df_norm();
        let g = map.params().g;
        let s0 = EnergyState { t: 0.0, e: 0.5 };
        let (states, _) = map.iterate(&s0, 5).unwrap();
        let v0 = (2.0 * s0.e).sqrt();
        for (n, s) in states.iter().enumerate() {
            let n_f = n as f64;
            assert!(((2.0 * s.e).sqrt() - v0).abs() <= 4.0 * n_f * df + 1e-12);
            assert!((s.t - s0.t - 2.0 / g * n_f * v0).abs() <= 4.0 * n_f * n_f * df / g + 1e-12);
        }
    }

    #[test]
    fn simulate_integrable_and_grazing() {
        let map = still_map();
        let traj = map.simulate_bouncing(&VelocityState { t: 0.0, v: 1.0 }, 4);
        let times: Vec<f64> = traj.points.iter().map(|p| p.t).collect();
        for (got, want) in times.iter().zip([0.0, 2.0, 4.0, 6.0, 8.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(traj.all_impacts_falling);

        let map = cosine_map(0.01);
        let traj = map.simulate_bouncing(&VelocityState { t: 0.1, v: -0.05 }, 3);
        assert!(traj.points[1..].iter().all(|p| p.grazing));
        assert!(traj.points.iter().all(|p| (p.t - 0.1).abs() < 1e-15));
    }

    #[test]
    fn first_impact_after_apex_for_fast_launch() {
        let map = cosine_map(0.01);
        let v0 = map.params().v_star + 0.5;
        let traj = map.simulate_bouncing(&VelocityState { t: 0.0, v: v0 }, 1);
        assert!(traj.points[1].t > v0 / map.params().g);
        assert!(traj.all_impacts_falling);
    }
}
