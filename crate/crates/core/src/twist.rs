//! Numerical certificates for the twist property of the iterated map:
//! `∂t_q/∂e = (2q/(g√(2e)))(1 + f̃_q)` with `|f̃_q| < 1/2` on a high-energy
//! strip, plus the a-priori drift/time/gap estimates along orbits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::impact::{EnergyState, ImpactMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DtqMethod {
    /// Product of the per-step implicit Jacobians.
    ChainRule,
    /// Induction in the inertial-velocity variable `y = √(2e) + ḟ(t)`,
    /// carrying `∂t_i/∂y` and `∂y_i/∂y` step by step.
    Recurrence,
    /// Central differences on the q-th iterate.
    FiniteDiff,
}

/// `∂t_q/∂e` at `(t, e)` by the requested method.
pub fn dtq_de(map: &ImpactMap, t: f64, e: f64, q: u32, method: DtqMethod) -> Result<f64> {
    match method {
        DtqMethod::ChainRule => {
            let (_, jac) = map.iterate(&EnergyState { t, e }, q)?;
            Ok(jac.dt_de)
        }
        DtqMethod::Recurrence => recurrence_dtq_dy(map, t, e, q).map(|dt_dy| {
            // ∂y/∂e at fixed t
            dt_dy / (2.0 * e).sqrt()
        }),
        DtqMethod::FiniteDiff => {
            let delta = 1e-6 * e.abs().max(1.0);
            let (plus, _) = map.iterate(&EnergyState { t, e: e + delta }, q)?;
            let (minus, _) = map.iterate(&EnergyState { t, e: e - delta }, q)?;
            Ok((plus[q as usize].t - minus[q as usize].t) / (2.0 * delta))
        }
    }
}

/// The induction of the twist lemma: differentiate
/// `t_i = t_{i-1} + (2/g) y_{i-1} - (2/g) f[t_{i-1}, t_i]` and
/// `y_i = y_{i-1} - 2 f[t_{i-1}, t_i] + 2 ḟ(t_i)` in the initial y.
fn recurrence_dtq_dy(map: &ImpactMap, t: f64, e: f64, q: u32) -> Result<f64> {
    let (states, _) = map.iterate(&EnergyState { t, e }, q)?;
    let g = map.params().g;
    let c = 2.0 / g;
    let profile = map.profile();
    let mut dt_dy = 0.0;
    let mut dy_dy = 1.0;
    for i in 1..=q as usize {
        let t_prev = states[i - 1].t;
        let t_cur = states[i].t;
        let (dd_prev, dd_cur) = profile.divided_difference_partials(t_prev, t_cur);
        let denom = 1.0 + c * dd_cur;
        if denom.abs() < 1e-12 {
            return Err(Error::SingularImplicitSystem { t_next: t_cur });
        }
        let dt_cur = (c * dy_dy + dt_dy * (1.0 - c * dd_prev)) / denom;
        dy_dy += 2.0
            * (profile.acceleration(t_cur) * dt_cur - dd_cur * dt_cur - dd_prev * dt_dy);
        dt_dy = dt_cur;
    }
    Ok(dt_dy)
}

/// `f̃_q` extracted from a `∂t_q/∂e` value.
pub fn f_tilde(g: f64, e: f64, q: u32, dtq: f64) -> f64 {
    g * (2.0 * e).sqrt() / (2.0 * q as f64) * dtq - 1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwistReport {
    pub q: u32,
    pub grid_n: usize,
    pub e_lo: f64,
    pub e_hi: f64,
    pub f_tilde_max: f64,
    pub bound_holds: bool,
    /// Least sampled energy level above which `|f̃_q| < 1/2` at every time
    /// node, if any.
    pub e_q_threshold: Option<f64>,
    /// Max pairwise relative discrepancy of the three derivative methods.
    pub method_agreement: f64,
    /// `(e level, max |f̃_q| over t)`, the margin trend in energy.
    pub margin_by_e: Vec<(f64, f64)>,
    /// Nodes where the orbit left the computable domain.
    pub failed_nodes: usize,
}

/// Evaluate `f̃_q` over a (t, e) grid (t uniform, e log-spaced) and check the
/// twist-lemma bound. Uncomputable nodes are counted and void the
/// certificate but do not error.
pub fn twist_certificate(
    map: &ImpactMap,
    q: u32,
    e_range: (f64, f64),
    grid_n: usize,
) -> TwistReport {
    let (e_lo, e_hi) = e_range;
    let g = map.params().g;
    let mut f_tilde_max = 0.0f64;
    let mut method_agreement = 0.0f64;
    let mut margin_by_e = Vec::with_capacity(grid_n);
    let mut failed_nodes = 0usize;
    let mut level_ok = vec![false; grid_n];

    for je in 0..grid_n {
        let frac = if grid_n == 1 { 0.0 } else { je as f64 / (grid_n - 1) as f64 };
        let e = e_lo * (e_hi / e_lo).powf(frac);
        let mut level_max = 0.0f64;
        let mut level_failed = false;
        for jt in 0..grid_n {
            let t = jt as f64 / grid_n as f64;
            let chain = dtq_de(map, t, e, q, DtqMethod::ChainRule);
            let recur = dtq_de(map, t, e, q, DtqMethod::Recurrence);
            let fdiff = dtq_de(map, t, e, q, DtqMethod::FiniteDiff);
            let (Ok(chain), Ok(recur), Ok(fdiff)) = (chain, recur, fdiff) else {
                failed_nodes += 1;
                level_failed = true;
                continue;
            };
            for (a, b) in [(chain, recur), (chain, fdiff), (recur, fdiff)] {
                let rel = (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
                method_agreement = method_agreement.max(rel);
            }
            let value = f_tilde(g, e, q, chain).abs();
            level_max = level_max.max(value);
            f_tilde_max = f_tilde_max.max(value);
        }
        margin_by_e.push((e, level_max));
        level_ok[je] = !level_failed && level_max < 0.5;
    }

    // least sampled level such that the bound holds from there upward
    let mut e_q_threshold = None;
    for (je, ok) in level_ok.iter().enumerate().rev() {
        if *ok {
            e_q_threshold = Some(margin_by_e[je].0);
        } else {
            break;
        }
    }

    TwistReport {
        q,
        grid_n,
        e_lo,
        e_hi,
        f_tilde_max,
        bound_holds: failed_nodes == 0 && f_tilde_max < 0.5,
        e_q_threshold,
        method_agreement,
        margin_by_e,
        failed_nodes,
    }
}

/// `(t, e, f̃_q)` samples over the certificate grid, for plotting exports.
/// Nodes that leave the computable domain are omitted.
pub fn f_tilde_grid(
    map: &ImpactMap,
    q: u32,
    e_range: (f64, f64),
    grid_n: usize,
) -> Vec<(f64, f64, f64)> {
    let (e_lo, e_hi) = e_range;
    let g = map.params().g;
    let mut rows = Vec::with_capacity(grid_n * grid_n);
    for je in 0..grid_n {
        let frac = if grid_n == 1 { 0.0 } else { je as f64 / (grid_n - 1) as f64 };
        let e = e_lo * (e_hi / e_lo).powf(frac);
        for jt in 0..grid_n {
            let t = jt as f64 / grid_n as f64;
            if let Ok(dtq) = dtq_de(map, t, e, q, DtqMethod::ChainRule) {
                rows.push((t, e, f_tilde(g, e, q, dtq)));
            }
        }
    }
    rows
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AprioriReport {
    pub n_max: usize,
    /// Min over n of `4n‖ḟ‖ - |√(2e_n) - √(2e_0)|`.
    pub drift_margin: f64,
    /// Min over n of `4n²‖ḟ‖/g - |t_n - t_0 - (2/g)n√(2e_0)|`.
    pub time_margin: f64,
    /// Min over n of `|t_n - t_{n-1}| - [(2/g)y_0 - (2/g)(4n+1)‖ḟ‖]`.
    pub gap_margin: f64,
    pub violations: usize,
}

/// Slack below which a margin counts as violated (the integrable case sits
/// exactly at equality).
const MARGIN_SLOP: f64 = 1e-9;

/// Verify the induction estimates along a computed orbit.
pub fn apriori_bounds_check(map: &ImpactMap, s0: &EnergyState, n_max: u32) -> Result<AprioriReport> {
    let (states, _) = map.iterate(s0, n_max)?;
    let g = map.params().g;
    let df = map.df_norm();
    let v0 = (2.0 * s0.e).sqrt();
    let y0 = v0 + map.profile().velocity(s0.t);

    let mut drift_margin = f64::INFINITY;
    let mut time_margin = f64::INFINITY;
    let mut gap_margin = f64::INFINITY;
    let mut violations = 0usize;
    for (n, state) in states.iter().enumerate().skip(1) {
        let n_f = n as f64;
        let drift = 4.0 * n_f * df - ((2.0 * state.e).sqrt() - v0).abs();
        let time = 4.0 * n_f * n_f * df / g - (state.t - s0.t - 2.0 / g * n_f * v0).abs();
        let gap = (state.t - states[n - 1].t).abs()
            - (2.0 / g * y0 - 2.0 / g * (4.0 * n_f + 1.0) * df);
        drift_margin = drift_margin.min(drift);
        time_margin = time_margin.min(time);
        gap_margin = gap_margin.min(gap);
        for margin in [drift, time, gap] {
            if margin < -MARGIN_SLOP {
                violations += 1;
            }
        }
    }
    Ok(AprioriReport { n_max: n_max as usize, drift_margin, time_margin, gap_margin, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forcing::ForcingProfile;
    use crate::impact::MapParams;

    fn map(amplitude: f64) -> ImpactMap {
        let profile = if amplitude == 0.0 {
            ForcingProfile::zero()
        } else {
            ForcingProfile::cosine(amplitude)
        };
        let params = MapParams::for_profile(&profile, 1.0).unwrap();
        ImpactMap::new(profile, params)
    }

    #[test]
    fn integrable_twist_derivative_is_exact() {
        let map = map(0.0);
        for method in [DtqMethod::ChainRule, DtqMethod::Recurrence, DtqMethod::FiniteDiff] {
            let value = dtq_de(&map, 0.3, 0.5, 2, method).unwrap();
            assert!((value - 4.0).abs() < 1e-6, "{method:?}: {value}");
        }
        // exact methods agree to much better than the finite-difference one
        let chain = dtq_de(&map, 0.3, 0.5, 2, DtqMethod::ChainRule).unwrap();
        let recur = dtq_de(&map, 0.3, 0.5, 2, DtqMethod::Recurrence).unwrap();
        assert!((chain - 4.0).abs() < 1e-12);
        assert!((recur - 4.0).abs() < 1e-12);
        assert!(f_tilde(1.0, 0.5, 2, chain).abs() < 1e-10);
    }

    #[test]
    fn methods_agree_for_forced_map() {
        let map = map(0.01);
        for q in 1..=3u32 {
            for (t, e) in [(0.0, 2.0), (0.3, 5.0), (0.8, 11.0)] {
                let chain = dtq_de(&map, t, e, q, DtqMethod::ChainRule).unwrap();
                let recur = dtq_de(&map, t, e, q, DtqMethod::Recurrence).unwrap();
                let fdiff = dtq_de(&map, t, e, q, DtqMethod::FiniteDiff).unwrap();
                assert!(
                    (chain - recur).abs() / chain.abs() < 1e-9,
                    "q={q} ({t},{e}): chain {chain} vs recurrence {recur}"
                );
                assert!(
                    (chain - fdiff).abs() / chain.abs() < 1e-5,
                    "q={q} ({t},{e}): chain {chain} vs fd {fdiff}"
                );
            }
        }
    }

    #[test]
    fn certificate_integrable() {
        let report = twist_certificate(&map(0.0), 3, (1.0, 10.0), 8);
        assert!(report.bound_holds);
        assert!(report.f_tilde_max < 1e-10);
        assert_eq!(report.failed_nodes, 0);
        assert_eq!(report.e_q_threshold, Some(1.0));
    }

    #[test]
    fn certificate_single_bounce_small_forcing() {
        let report = twist_certificate(&map(0.01), 1, (5.0, 50.0), 12);
        assert!(report.bound_holds, "max |f̃| = {}", report.f_tilde_max);
        assert!(report.method_agreement < 1e-5);
        // the q=1 correction decays like 1/y: margin improves with energy
        let first = report.margin_by_e.first().unwrap().1;
        let last = report.margin_by_e.last().unwrap().1;
        assert!(last < first);
    }

    #[test]
    fn certificate_fails_outside_smallness_hypothesis() {
        // at g = 1 the f̈-sensitivity of iterated impacts does not decay with
        // energy, and 4‖f̈‖/g ≈ 1.58 is far from small: the q = 2 bound fails
        let report = twist_certificate(&map(0.01), 2, (5.0, 50.0), 12);
        assert!(!report.bound_holds);
        assert!(report.f_tilde_max > 0.5);
        assert!(report.method_agreement < 1e-5);
    }

    #[test]
    fn certificate_holds_at_physical_gravity() {
        let profile = ForcingProfile::cosine(0.01);
        let params = MapParams::for_profile(&profile, 9.8).unwrap();
        let map = ImpactMap::new(profile, params);
        for q in 1..=3u32 {
            let report = twist_certificate(&map, q, (5.0, 50.0), 12);
            assert!(report.bound_holds, "q={q}: max |f̃| = {}", report.f_tilde_max);
        }
    }

    #[test]
    fn certificate_reports_failure_without_error() {
        // violent forcing: the bound is nowhere near holding
        let report = twist_certificate(&map(0.5), 3, (150.0, 250.0), 8);
        assert!(!report.bound_holds);
    }

    #[test]
    fn apriori_bounds_integrable_equality() {
        let report = apriori_bounds_check(&map(0.0), &EnergyState { t: 0.0, e: 0.5 }, 6).unwrap();
        assert_eq!(report.violations, 0);
        assert!(report.drift_margin.abs() < 1e-10);
        assert!(report.time_margin.abs() < 1e-10);
        assert!(report.gap_margin.abs() < 1e-10);
    }

    #[test]
    fn apriori_bounds_hold_with_slack_for_forced_maps() {
        let report =
            apriori_bounds_check(&map(0.01), &EnergyState { t: 0.0, e: 0.5 }, 10).unwrap();
        assert_eq!(report.violations, 0);
        assert!(report.drift_margin > 0.0);
        assert!(report.time_margin > 0.0);

        let report =
            apriori_bounds_check(&map(0.05), &EnergyState { t: 0.0, e: 2.0 }, 20).unwrap();
        assert_eq!(report.violations, 0);
    }
}
