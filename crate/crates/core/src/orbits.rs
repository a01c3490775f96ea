//! Search, deduplication and classification of (p,q)-periodic bouncing
//! motions: fixed points of `σ^{-p} ∘ Φ̃^q`, equivalently critical points of
//! the discrete action.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::impact::{EnergyState, JacobianTE};
use crate::variational::{gcd, ActionConfiguration, GeneratingContext};

/// Orbit-identity tolerance in (t mod 1, e) after Newton polish.
pub const DEDUP_TOL: f64 = 1e-8;
/// Residual target for polished fixed points.
const POLISH_TOL: f64 = 1e-12;
/// Residual every reported orbit must satisfy.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Newton matrix condition beyond which the degenerate branch is reported.
const COND_MAX: f64 = 1e12;
/// Half-width of the parabolic band around |trace| = 2.
pub const PARABOLIC_TOL: f64 = 1e-6;
/// Zero-mode threshold for Morse index counting.
const MORSE_ZERO_TOL: f64 = 1e-9;
/// Distinct fixed points required to consider the set a curve.
const N_CURVE: usize = 50;
/// Largest allowed gap in the t-projection of a curve candidate.
const FILL_GAP: f64 = 0.05;
/// Fresh samples for curve verification.
const CURVE_FRESH_SAMPLES: usize = 256;
/// Fixed-point residual allowed along the fitted curve.
const CURVE_RESIDUAL_TOL: f64 = 1e-8;
/// Nodes of the minimax string.
const STRING_NODES: usize = 33;

/// Coprime pair: q bounces while time advances by p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitKey {
    pub p: u32,
    pub q: u32,
}

impl OrbitKey {
    pub fn new(p: u32, q: u32) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::Config(format!("(p,q) = ({p},{q}) must be positive")));
        }
        if gcd(p, q) != 1 {
            return Err(Error::Config(format!("(p,q) = ({p},{q}) must be coprime")));
        }
        Ok(Self { p, q })
    }

    pub fn ratio(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    /// Energy of the integrable (p,q) resonance, `g²p²/(8q²)`.
    pub fn resonant_energy(&self, g: f64) -> f64 {
        let r = g * self.p as f64 / self.q as f64;
        r * r / 8.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Elliptic,
    Hyperbolic,
    Parabolic,
}

pub fn stability_from_trace(trace: f64) -> Stability {
    if (trace.abs() - 2.0).abs() <= PARABOLIC_TOL {
        Stability::Parabolic
    } else if trace.abs() < 2.0 {
        Stability::Elliptic
    } else {
        Stability::Hyperbolic
    }
}

/// A (p,q)-periodic bouncing motion with its variational and spectral data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub key: OrbitKey,
    /// Impact times in the lift, normalized so `times[0] ∈ [0,1)`.
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    pub action: f64,
    pub morse_index: usize,
    pub monodromy_trace: f64,
    /// Determinant of the monodromy; symplecticity keeps it at 1.
    pub monodromy_det: f64,
    pub stability: Stability,
    /// Residue `R = (2 - trace)/4`.
    pub residue: f64,
}

impl PeriodicOrbit {
    pub fn state(&self) -> EnergyState {
        EnergyState { t: self.times[0], e: self.energies[0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegeneracyKind {
    Finite,
    Degenerate,
}

/// Classification of the full (p,q)-fixed-point set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DegeneracyReport {
    pub kind: DegeneracyKind,
    /// Finite case: orbit equivalence classes. Degenerate case: one record
    /// per curve sample (not deduplicated modulo orbit equivalence).
    pub orbits: Vec<PeriodicOrbit>,
    /// Degenerate case: fixed-point samples (t mod 1, e) along the curve.
    pub curve_samples: Vec<(f64, f64)>,
    /// Degenerate case: trig-polynomial interpolant of e = γ(t).
    pub curve_coeffs: Option<CurveFit>,
    pub instability_witness: String,
    /// Finite set with at least one orbit but no non-elliptic member: the
    /// analytic instability theorem forbids this, so it flags a bug.
    pub theory_violation: bool,
}

/// Least-squares trigonometric fit `γ(t) = c0 + Σ ck cos(2πkt) + sk sin(2πkt)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveFit {
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl CurveFit {
    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = self.cos[0];
        for k in 1..self.cos.len() {
            let arg = std::f64::consts::TAU * k as f64 * t;
            acc += self.cos[k] * arg.cos();
            acc += self.sin[k - 1] * arg.sin();
        }
        acc
    }
}

/// Existence threshold: orbits with `p/q > α` are guaranteed by the theory.
pub fn existence_threshold(ctx: &GeneratingContext) -> f64 {
    let g = ctx.params().g;
    let df = ctx.map().df_norm();
    1.0 + 4.0 / g * df + 2.0 / g * (2.0 * ctx.params().e_star).sqrt()
}

/// Defect of the fixed-point equation, `Φ̃^q(x) - σ^p(x)`, with the orbit
/// segment and accumulated Jacobian.
pub fn fixed_point_defect(
    ctx: &GeneratingContext,
    key: OrbitKey,
    x: EnergyState,
) -> Result<(DVector<f64>, JacobianTE, Vec<EnergyState>)> {
    let (states, jac) = ctx.map().iterate(&x, key.q)?;
    let last = states[key.q as usize];
    let defect = DVector::from_vec(vec![last.t - x.t - key.p as f64, last.e - x.e]);
    Ok((defect, jac, states))
}

fn defect_norm(ctx: &GeneratingContext, key: OrbitKey, x: EnergyState) -> f64 {
    match fixed_point_defect(ctx, key, x) {
        Ok((d, _, _)) => d.amax(),
        Err(_) => f64::INFINITY,
    }
}

/// Damped Newton iteration for a fixed point of `σ^{-p} ∘ Φ̃^q`.
pub fn newton_orbit(
    ctx: &GeneratingContext,
    key: OrbitKey,
    seed: EnergyState,
) -> Result<PeriodicOrbit> {
    let x = newton_fixed_point(ctx, key, seed, true)?;
    build_orbit(ctx, key, x)
}

fn newton_fixed_point(
    ctx: &GeneratingContext,
    key: OrbitKey,
    seed: EnergyState,
    fail_on_singular: bool,
) -> Result<EnergyState> {
    let mut x = seed;
    let mut norm = defect_norm(ctx, key, x);
    if !norm.is_finite() {
        return Err(Error::NoConvergence(format!(
            "seed (t={}, e={}) is outside the iterable domain",
            seed.t, seed.e
        )));
    }
    for _ in 0..50 {
        if norm < POLISH_TOL {
            return Ok(x);
        }
        let (defect, jac, _) = fixed_point_defect(ctx, key, x)?;
        // DR = DΦ^q - I
        let dr = JacobianTE {
            dt_dt: jac.dt_dt - 1.0,
            dt_de: jac.dt_de,
            de_dt: jac.de_dt,
            de_de: jac.de_de - 1.0,
        };
        let cond = dr.cond();
        if fail_on_singular && cond > COND_MAX {
            return Err(Error::SingularJacobian { cond });
        }
        let det = dr.det();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::SingularJacobian { cond });
        }
        let dt = -(dr.de_de * defect[0] - dr.dt_de * defect[1]) / det;
        let de = -(-dr.de_dt * defect[0] + dr.dt_dt * defect[1]) / det;
        let mut lambda = 1.0;
        let mut advanced = false;
        for _ in 0..20 {
            let trial = EnergyState { t: x.t + lambda * dt, e: x.e + lambda * de };
            let trial_norm = defect_norm(ctx, key, trial);
            if trial_norm < norm {
                x = trial;
                norm = trial_norm;
                advanced = true;
                break;
            }
            lambda *= 0.5;
        }
        if !advanced {
            return Err(Error::NoConvergence(format!(
                "residual stagnated at {norm:.3e} near (t={}, e={})",
                x.t, x.e
            )));
        }
    }
    if norm < POLISH_TOL {
        Ok(x)
    } else {
        Err(Error::NoConvergence(format!("residual {norm:.3e} after 50 steps")))
    }
}

/// Assemble the full orbit record from one polished fixed point.
pub fn build_orbit(ctx: &GeneratingContext, key: OrbitKey, x: EnergyState) -> Result<PeriodicOrbit> {
    let (defect, monodromy, states) = fixed_point_defect(ctx, key, x)?;
    if defect.amax() > RESIDUAL_TOL {
        return Err(Error::NoConvergence(format!(
            "fixed-point residual {:.3e} above {RESIDUAL_TOL:.0e}",
            defect.amax()
        )));
    }
    let shift = states[0].t.floor();
    let times: Vec<f64> = states[..key.q as usize].iter().map(|s| s.t - shift).collect();
    let energies: Vec<f64> = states[..key.q as usize].iter().map(|s| s.e).collect();

    let cfg = ActionConfiguration::new(times.clone(), key.p, key.q)?;
    let action = ctx.action(&cfg)?;
    let hessian = ctx.action_hessian(&cfg)?;
    let morse_index = morse_index_of(&hessian);

    let trace = monodromy.trace();
    Ok(PeriodicOrbit {
        key,
        times,
        energies,
        action,
        morse_index,
        monodromy_trace: trace,
        stability: stability_from_trace(trace),
        residue: (2.0 - trace) / 4.0,
        monodromy_det: monodromy.det(),
    })
}

fn morse_index_of(hessian: &DMatrix<f64>) -> usize {
    hessian
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .filter(|ev| **ev < -MORSE_ZERO_TOL)
        .count()
}

fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Distance between orbits modulo the unit shift and cyclic relabeling.
pub fn orbit_distance(a: &PeriodicOrbit, b: &PeriodicOrbit) -> f64 {
    if a.key != b.key {
        return f64::INFINITY;
    }
    let q = a.times.len();
    let mut best = f64::INFINITY;
    for shift in 0..q {
        let mut worst = 0.0f64;
        for i in 0..q {
            let j = (i + shift) % q;
            let dt = circle_distance(a.times[i], b.times[j]);
            let de = (a.energies[i] - b.energies[j]).abs();
            worst = worst.max(dt.max(de));
        }
        best = best.min(worst);
    }
    best
}

fn dedup_orbits(orbits: Vec<PeriodicOrbit>) -> Vec<PeriodicOrbit> {
    let mut kept: Vec<PeriodicOrbit> = Vec::new();
    for orbit in orbits {
        if kept.iter().all(|o| orbit_distance(o, &orbit) > DEDUP_TOL) {
            kept.push(orbit);
        }
    }
    kept
}

/// Birkhoff minimizer: a local minimum of the action over configurations.
pub fn minimize_action(
    ctx: &GeneratingContext,
    key: OrbitKey,
    seed: &ActionConfiguration,
) -> Result<PeriodicOrbit> {
    let times = descend_action(ctx, seed, 1e-10)?;
    let cfg = ActionConfiguration::new(times.clone(), key.p, key.q)?;
    let hessian = ctx.action_hessian(&cfg)?;
    let min_eig = hessian
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min_eig < -MORSE_ZERO_TOL {
        return Err(Error::NoConvergence(format!(
            "descent stopped at a non-minimum (lowest Hessian eigenvalue {min_eig:.3e})"
        )));
    }
    orbit_from_configuration(ctx, key, &cfg)
}

/// Levenberg-damped Newton descent on W; returns times with `‖∇W‖∞ < tol`.
fn descend_action(
    ctx: &GeneratingContext,
    seed: &ActionConfiguration,
    tol: f64,
) -> Result<Vec<f64>> {
    let q = seed.times.len();
    let mut cfg = seed.clone();
    let mut value = ctx.action(&cfg)?;
    for _ in 0..400 {
        let grad = ctx.action_gradient(&cfg)?;
        let grad_norm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if grad_norm < tol {
            return Ok(cfg.times);
        }
        let hessian = ctx.action_hessian(&cfg)?;
        let g_vec = DVector::from_vec(grad.clone());
        let mut lambda = 0.0f64;
        let mut accepted = false;
        for _ in 0..60 {
            let mut damped = hessian.clone();
            for i in 0..q {
                damped[(i, i)] += lambda;
            }
            let step = damped.lu().solve(&g_vec.scale(-1.0));
            let candidate = match step {
                Some(step) if step.iter().all(|v| v.is_finite()) => {
                    let mut times = cfg.times.clone();
                    for i in 0..q {
                        times[i] += step[i];
                    }
                    ActionConfiguration::new(times, cfg.p, cfg.q)?
                }
                _ => {
                    lambda = (lambda * 10.0).max(1e-8);
                    continue;
                }
            };
            match (ctx.action(&candidate), ctx.action_gradient(&candidate)) {
                (Ok(cand_value), Ok(cand_grad)) => {
                    let cand_norm = cand_grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
                    // accept on action decrease or gradient contraction
                    if cand_value < value + 1e-15 * value.abs().max(1.0)
                        || cand_norm < 0.9 * grad_norm
                    {
                        cfg = candidate;
                        value = cand_value;
                        accepted = true;
                        break;
                    }
                    lambda = (lambda * 10.0).max(1e-8);
                }
                _ => {
                    lambda = (lambda * 10.0).max(1e-8);
                }
            }
        }
        if !accepted {
            return Err(Error::NoConvergence(format!(
                "action descent stagnated at ‖∇W‖ = {grad_norm:.3e}"
            )));
        }
    }
    Err(Error::NoConvergence("action descent exceeded 400 iterations".into()))
}

/// Newton iteration on `∇W = 0` (converges to saddles as well as minima).
fn newton_on_gradient(
    ctx: &GeneratingContext,
    cfg: &ActionConfiguration,
    tol: f64,
) -> Result<ActionConfiguration> {
    let q = cfg.times.len();
    let mut current = cfg.clone();
    let mut norm = f64::INFINITY;
    for _ in 0..60 {
        let grad = ctx.action_gradient(&current)?;
        norm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if norm < tol {
            return Ok(current);
        }
        let hessian = ctx.action_hessian(&current)?;
        let step = hessian
            .lu()
            .solve(&DVector::from_vec(grad).scale(-1.0))
            .ok_or_else(|| Error::SingularJacobian { cond: f64::INFINITY })?;
        let mut lambda = 1.0;
        let mut advanced = false;
        for _ in 0..20 {
            let mut times = current.times.clone();
            for i in 0..q {
                times[i] += lambda * step[i];
            }
            let trial = ActionConfiguration::new(times, current.p, current.q)?;
            if let Ok(trial_grad) = ctx.action_gradient(&trial) {
                let trial_norm = trial_grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
                if trial_norm < norm {
                    current = trial;
                    advanced = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !advanced {
            break;
        }
    }
    Err(Error::NoConvergence(format!("gradient Newton stalled at {norm:.3e}")))
}

fn orbit_from_configuration(
    ctx: &GeneratingContext,
    key: OrbitKey,
    cfg: &ActionConfiguration,
) -> Result<PeriodicOrbit> {
    let energies = ctx.configuration_energies(cfg)?;
    let x = EnergyState { t: cfg.times[0], e: energies[0] };
    // tighten through the fixed-point equation before assembling the record
    let polished = newton_fixed_point(ctx, key, x, false).unwrap_or(x);
    build_orbit(ctx, key, polished)
}

/// Mountain-pass orbit between two action minima, by a climbing-string
/// discretization followed by Newton polish of the highest node.
pub fn minimax_orbit(
    ctx: &GeneratingContext,
    key: OrbitKey,
    min1: &PeriodicOrbit,
    min2: &PeriodicOrbit,
) -> Result<PeriodicOrbit> {
    let q = key.q as usize;
    let a = DVector::from_vec(min1.times.clone());
    let b = DVector::from_vec(min2.times.clone());
    if (&b - &a).amax() < 1e-10 {
        return Err(Error::PathCollapse);
    }
    let w_ends = ctx
        .action(&ActionConfiguration::new(min1.times.clone(), key.p, key.q)?)?
        .max(ctx.action(&ActionConfiguration::new(min2.times.clone(), key.p, key.q)?)?);

    let mut nodes: Vec<DVector<f64>> = (0..STRING_NODES)
        .map(|j| {
            let s = j as f64 / (STRING_NODES - 1) as f64;
            &a + (&b - &a).scale(s)
        })
        .collect();

    let eval = |node: &DVector<f64>| -> Result<(f64, DVector<f64>)> {
        let cfg = ActionConfiguration::new(node.iter().cloned().collect(), key.p, key.q)?;
        Ok((
            ctx.action(&cfg)?,
            DVector::from_vec(ctx.action_gradient(&cfg)?),
        ))
    };

    let mut saddle_guess: Option<DVector<f64>> = None;
    for _ in 0..4000 {
        reparameterize(&mut nodes);
        let mut values = Vec::with_capacity(STRING_NODES);
        let mut grads = Vec::with_capacity(STRING_NODES);
        for node in &nodes {
            let (w, g) = eval(node)?;
            values.push(w);
            grads.push(g);
        }
        let max_idx = (1..STRING_NODES - 1)
            .max_by(|&i, &j| values[i].total_cmp(&values[j]))
            .unwrap();
        let grad_max = grads[max_idx].amax();
        if values[max_idx] <= w_ends + 1e-13 * w_ends.abs().max(1.0) && grad_max < 1e-9 {
            // no pass above the endpoints: degenerate level set
            return Err(Error::PathCollapse);
        }
        if grad_max < 1e-6 {
            saddle_guess = Some(nodes[max_idx].clone());
            break;
        }
        // step size from the local curvature scale
        let cfg = ActionConfiguration::new(nodes[max_idx].iter().cloned().collect(), key.p, key.q)?;
        let hess_norm = ctx.action_hessian(&cfg)?.amax().max(1e-3);
        let eta = 0.5 / hess_norm;
        for j in 1..STRING_NODES - 1 {
            let tangent = tangent_at(&nodes, j);
            let g = &grads[j];
            let along = tangent.dot(g);
            let step = if j == max_idx {
                // climbing image: reverse the component along the path
                (g - tangent.scale(2.0 * along)).scale(-eta)
            } else {
                (g - tangent.scale(along)).scale(-eta)
            };
            nodes[j] += step;
        }
    }
    let guess = saddle_guess.ok_or(Error::PathCollapse)?;
    let cfg = ActionConfiguration::new(guess.iter().cloned().collect(), key.p, key.q)?;
    let polished = newton_on_gradient(ctx, &cfg, 1e-11)?;
    let orbit = orbit_from_configuration(ctx, key, &polished)?;
    if orbit.morse_index == 0 {
        return Err(Error::NoConvergence(
            "string converged to a minimum, not a pass".into(),
        ));
    }
    if orbit.action <= min1.action.max(min2.action) {
        return Err(Error::PathCollapse);
    }
    debug_assert_eq!(orbit.times.len(), q);
    Ok(orbit)
}

fn tangent_at(nodes: &[DVector<f64>], j: usize) -> DVector<f64> {
    let diff = &nodes[j + 1] - &nodes[j - 1];
    let norm = diff.norm();
    if norm == 0.0 {
        DVector::zeros(nodes[j].len())
    } else {
        diff.scale(1.0 / norm)
    }
}

/// Redistribute interior nodes uniformly in arclength along the polyline.
fn reparameterize(nodes: &mut Vec<DVector<f64>>) {
    let n = nodes.len();
    let mut cumulative = vec![0.0; n];
    for i in 1..n {
        cumulative[i] = cumulative[i - 1] + (&nodes[i] - &nodes[i - 1]).norm();
    }
    let total = cumulative[n - 1];
    if total == 0.0 {
        return;
    }
    let old = nodes.clone();
    for (j, node) in nodes.iter_mut().enumerate().take(n - 1).skip(1) {
        let target = total * j as f64 / (n - 1) as f64;
        let seg = cumulative.partition_point(|c| *c < target).clamp(1, n - 1);
        let span = cumulative[seg] - cumulative[seg - 1];
        let frac = if span == 0.0 { 0.0 } else { (target - cumulative[seg - 1]) / span };
        *node = &old[seg - 1] + (&old[seg] - &old[seg - 1]).scale(frac);
    }
}

/// Rectangular sweep window in (t, e).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SweepGrid {
    pub n_t: usize,
    pub n_e: usize,
    pub e_lo: f64,
    pub e_hi: f64,
}

impl SweepGrid {
    /// Window bracketing the integrable resonance of `key`.
    pub fn bracketing(key: OrbitKey, g: f64, n: usize) -> Self {
        let e_res = key.resonant_energy(g);
        Self { n_t: n, n_e: n, e_lo: 0.55 * e_res, e_hi: 1.45 * e_res }
    }
}

/// Localize every fixed point of `σ^{-p} ∘ Φ̃^q` on the grid and classify the
/// set as finite or a degenerate invariant curve.
pub fn sweep_enumerate(
    ctx: &GeneratingContext,
    key: OrbitKey,
    grid: SweepGrid,
) -> Result<DegeneracyReport> {
    let q = key.q;
    let p_f = key.p as f64;
    let n_t = grid.n_t;
    let n_e = grid.n_e;
    let de = (grid.e_hi - grid.e_lo) / n_e as f64;

    // defect table; grazing/domain failures are masked out
    let mut table = vec![vec![None; n_e + 1]; n_t + 1];
    for (i, row) in table.iter_mut().enumerate() {
        let t = i as f64 / n_t as f64; // column n_t aliases t=1 via equivariance
        for (j, slot) in row.iter_mut().enumerate() {
            let e = grid.e_lo + j as f64 * de;
            if let Ok((states, _)) = ctx.map().iterate(&EnergyState { t, e }, q) {
                let last = states[q as usize];
                *slot = Some((last.t - t - p_f, last.e - e));
            }
        }
    }

    let mut points: Vec<EnergyState> = Vec::new();
    for i in 0..n_t {
        for j in 0..n_e {
            let corners = [
                table[i][j],
                table[i + 1][j],
                table[i][j + 1],
                table[i + 1][j + 1],
            ];
            if corners.iter().any(|c| c.is_none()) {
                continue;
            }
            let corners: Vec<(f64, f64)> = corners.iter().map(|c| c.unwrap()).collect();
            let r1_lo = corners.iter().any(|c| c.0 <= 0.0);
            let r1_hi = corners.iter().any(|c| c.0 >= 0.0);
            let r2_lo = corners.iter().any(|c| c.1 <= 0.0);
            let r2_hi = corners.iter().any(|c| c.1 >= 0.0);
            if !(r1_lo && r1_hi && r2_lo && r2_hi) {
                continue;
            }
            let center = EnergyState {
                t: (i as f64 + 0.5) / n_t as f64,
                e: grid.e_lo + (j as f64 + 0.5) * de,
            };
            if let Some(zero) = polish_candidate(ctx, key, center) {
                let t_mod = zero.t.rem_euclid(1.0);
                if zero.e < grid.e_lo + 0.5 * de || zero.e > grid.e_hi - 0.5 * de {
                    return Err(Error::GridTooCoarse(format!(
                        "fixed point at e={} sits at the window boundary [{}, {}]",
                        zero.e, grid.e_lo, grid.e_hi
                    )));
                }
                let candidate = EnergyState { t: t_mod, e: zero.e };
                let dup = points.iter().any(|pt| {
                    circle_distance(pt.t, candidate.t) < DEDUP_TOL
                        && (pt.e - candidate.e).abs() < DEDUP_TOL
                });
                if !dup {
                    points.push(candidate);
                }
            }
        }
    }

    points.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.e.total_cmp(&b.e)));

    if points.len() >= N_CURVE && t_projection_fills(&points) {
        return degenerate_report(ctx, key, points);
    }
    finite_report(ctx, key, points)
}

/// 2D Newton polish with a 1D fallback along the twist direction for the
/// degenerate (singular-Jacobian) branch.
fn polish_candidate(ctx: &GeneratingContext, key: OrbitKey, seed: EnergyState) -> Option<EnergyState> {
    match newton_fixed_point(ctx, key, seed, true) {
        Ok(x) => Some(x),
        Err(Error::SingularJacobian { .. }) | Err(Error::NoConvergence(_)) => {
            let x = twist_polish(ctx, key, seed)?;
            let (defect, _, _) = fixed_point_defect(ctx, key, x).ok()?;
            (defect.amax() < POLISH_TOL).then_some(x)
        }
        Err(_) => None,
    }
}

/// Solve the time defect alone in e (monotone by the twist condition) at
/// fixed t; a genuine fixed point then also zeroes the energy defect.
fn twist_polish(ctx: &GeneratingContext, key: OrbitKey, seed: EnergyState) -> Option<EnergyState> {
    let t = seed.t;
    let mut e = seed.e;
    for _ in 0..60 {
        let (defect, jac, _) = fixed_point_defect(ctx, key, EnergyState { t, e }).ok()?;
        if defect[0].abs() < 0.25 * POLISH_TOL {
            return Some(EnergyState { t, e });
        }
        if jac.dt_de <= 0.0 {
            return None;
        }
        e -= defect[0] / jac.dt_de;
        if e <= 0.0 {
            return None;
        }
    }
    None
}

fn t_projection_fills(points: &[EnergyState]) -> bool {
    if points.len() < 2 {
        return false;
    }
    let mut ts: Vec<f64> = points.iter().map(|pt| pt.t).collect();
    ts.sort_by(f64::total_cmp);
    let mut max_gap = 1.0 - ts[ts.len() - 1] + ts[0]; // wrap gap
    for w in ts.windows(2) {
        max_gap = max_gap.max(w[1] - w[0]);
    }
    max_gap < FILL_GAP
}

fn finite_report(
    ctx: &GeneratingContext,
    key: OrbitKey,
    points: Vec<EnergyState>,
) -> Result<DegeneracyReport> {
    let mut orbits = Vec::new();
    for pt in points {
        if let Ok(orbit) = build_orbit(ctx, key, pt) {
            orbits.push(orbit);
        }
    }
    let orbits = dedup_orbits(orbits);
    let witness = orbits.iter().find(|o| o.stability != Stability::Elliptic);
    let theory_violation = !orbits.is_empty() && witness.is_none();
    let instability_witness = match witness {
        Some(orbit) => format!(
            "orbit at t0={:.6}, e0={:.6} is {:?} (trace {:.6})",
            orbit.times[0], orbit.energies[0], orbit.stability, orbit.monodromy_trace
        ),
        None if orbits.is_empty() => "no fixed points in the window".into(),
        None => "THEORY VIOLATION: finite nonempty set with all orbits elliptic".into(),
    };
    Ok(DegeneracyReport {
        kind: DegeneracyKind::Finite,
        orbits,
        curve_samples: Vec::new(),
        curve_coeffs: None,
        instability_witness,
        theory_violation,
    })
}

fn degenerate_report(
    ctx: &GeneratingContext,
    key: OrbitKey,
    points: Vec<EnergyState>,
) -> Result<DegeneracyReport> {
    let fit = fit_curve(&points);
    // verify the fixed-point equation along the interpolant at fresh samples
    let mut worst = 0.0f64;
    for i in 0..CURVE_FRESH_SAMPLES {
        let t = (i as f64 + 0.37) / CURVE_FRESH_SAMPLES as f64;
        let e = fit.eval(t);
        let (defect, _, _) = fixed_point_defect(ctx, key, EnergyState { t, e })?;
        worst = worst.max(defect.amax());
    }
    if worst > CURVE_RESIDUAL_TOL {
        return Err(Error::GridTooCoarse(format!(
            "curve candidate fails the fixed-point equation at fresh samples (residual {worst:.3e})"
        )));
    }
    let mut orbits = Vec::new();
    for pt in &points {
        if let Ok(orbit) = build_orbit(ctx, key, *pt) {
            orbits.push(orbit);
        }
    }
    let all_unstable = orbits.iter().all(|o| o.stability != Stability::Elliptic);
    Ok(DegeneracyReport {
        kind: DegeneracyKind::Degenerate,
        curve_samples: points.iter().map(|pt| (pt.t, pt.e)).collect(),
        curve_coeffs: Some(fit),
        instability_witness: if all_unstable {
            "all sampled orbits are parabolic/unstable along the invariant curve".into()
        } else {
            "UNEXPECTED: elliptic sample on a degenerate curve".into()
        },
        theory_violation: !all_unstable,
        orbits,
    })
}

/// Least-squares trig fit of e over t mod 1. Degree grows with the sample
/// count but stays small; the degenerate curve is analytic and low-frequency.
fn fit_curve(points: &[EnergyState]) -> CurveFit {
    let degree = (points.len() / 8).clamp(1, 8);
    let cols = 1 + 2 * degree;
    let rows = points.len();
    let mut design = DMatrix::zeros(rows, cols);
    let mut rhs = DVector::zeros(rows);
    for (r, pt) in points.iter().enumerate() {
        design[(r, 0)] = 1.0;
        for k in 1..=degree {
            let arg = std::f64::consts::TAU * k as f64 * pt.t;
            design[(r, 2 * k - 1)] = arg.cos();
            design[(r, 2 * k)] = arg.sin();
        }
        rhs[r] = pt.e;
    }
    let solution = (design.transpose() * &design)
        .lu()
        .solve(&(design.transpose() * rhs))
        .expect("normal equations of the curve fit are nonsingular");
    let mut cos = vec![solution[0]];
    let mut sin = Vec::new();
    for k in 1..=degree {
        cos.push(solution[2 * k - 1]);
        sin.push(solution[2 * k]);
    }
    CurveFit { cos, sin }
}

/// Settings of the numerical Lyapunov probe.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub n_perturbations: usize,
    pub distance: f64,
    pub max_periods: usize,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { n_perturbations: 100, distance: 1e-6, max_periods: 10_000, seed: 0 }
    }
}

/// Evidence record of the perturbation probe (not a proof).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LyapunovProbe {
    pub max_deviation: f64,
    /// Least-squares growth rate of log-deviation per period over the
    /// exponential window, when one is observed.
    pub growth_rate: Option<f64>,
    pub periods_run: usize,
}

/// Trace-based class plus a forward perturbation probe around the orbit.
pub fn classify_stability(
    ctx: &GeneratingContext,
    orbit: &PeriodicOrbit,
    probe: &ProbeConfig,
) -> (Stability, LyapunovProbe) {
    let class = stability_from_trace(orbit.monodromy_trace);
    let mut rng = ChaCha8Rng::seed_from_u64(probe.seed);
    let reference = orbit.state();
    let p_f = orbit.key.p as f64;
    const ESCAPE: f64 = 0.1;

    let mut per_period_max: Vec<f64> = vec![0.0; probe.max_periods + 1];
    let mut global_max = 0.0f64;
    let mut periods_run = 0usize;
    for _ in 0..probe.n_perturbations {
        let angle = rng.gen::<f64>() * std::f64::consts::TAU;
        let mut state = EnergyState {
            t: reference.t + probe.distance * angle.cos(),
            e: reference.e + probe.distance * angle.sin(),
        };
        for period in 1..=probe.max_periods {
            let advanced = match ctx.map().iterate(&state, orbit.key.q) {
                Ok((states, _)) => states[orbit.key.q as usize],
                Err(_) => {
                    // left the computable domain: certainly not staying close
                    per_period_max[period] = per_period_max[period].max(ESCAPE);
                    global_max = global_max.max(ESCAPE);
                    periods_run = periods_run.max(period);
                    break;
                }
            };
            state = EnergyState { t: advanced.t - p_f, e: advanced.e };
            let deviation = (state.t - reference.t).hypot(state.e - reference.e);
            per_period_max[period] = per_period_max[period].max(deviation);
            global_max = global_max.max(deviation);
            periods_run = periods_run.max(period);
            if deviation > ESCAPE {
                break;
            }
        }
    }

    let growth_rate = estimate_growth_rate(&per_period_max, probe.distance);
    (
        class,
        LyapunovProbe { max_deviation: global_max, growth_rate, periods_run },
    )
}

/// Slope of ln(deviation) vs period between 10·distance and the escape cap.
fn estimate_growth_rate(per_period_max: &[f64], start_distance: f64) -> Option<f64> {
    let lower = 10.0 * start_distance;
    let upper = 1e-2;
    let window: Vec<(f64, f64)> = per_period_max
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, d)| **d > lower && **d < upper)
        .map(|(n, d)| (n as f64, d.ln()))
        .collect();
    if window.len() < 3 {
        return None;
    }
    let n = window.len() as f64;
    let sx: f64 = window.iter().map(|(x, _)| x).sum();
    let sy: f64 = window.iter().map(|(_, y)| y).sum();
    let sxx: f64 = window.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = window.iter().map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    (denom.abs() > 1e-12).then(|| (n * sxy - sx * sy) / denom)
}

/// Birkhoff ordering and gap-estimate report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BirkhoffReport {
    pub cyclically_ordered: bool,
    pub gap_estimate_ok: bool,
    pub min_gap: f64,
    pub required_gap: f64,
}

impl BirkhoffReport {
    pub fn pass(&self) -> bool {
        self.cyclically_ordered && self.gap_estimate_ok
    }
}

/// Check the rotation-like cyclic ordering of the impact times and the gap
/// estimate `t_{n+1} - t_n > p/q - 1`.
pub fn birkhoff_validate(orbit: &PeriodicOrbit) -> BirkhoffReport {
    let q = orbit.times.len();
    let p = orbit.key.p;
    let mut gaps = Vec::with_capacity(q);
    for i in 0..q {
        let next = if i + 1 < q { orbit.times[i + 1] } else { orbit.times[0] + p as f64 };
        gaps.push(next - orbit.times[i]);
    }
    let min_gap = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    let required_gap = orbit.key.ratio() - 1.0;

    // the fractional parts must be visited in the order of rotation by p/q:
    // successive ranks advance by p (mod q)
    let fracs: Vec<f64> = orbit.times.iter().map(|t| t.rem_euclid(1.0)).collect();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&i, &j| fracs[i].total_cmp(&fracs[j]));
    let mut rank = vec![0usize; q];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let mut ordered = gaps.iter().all(|g| *g > 0.0);
    if q > 1 {
        let step = (p as usize) % q;
        for i in 0..q {
            if (rank[(i + 1) % q] + q - rank[i]) % q != step {
                ordered = false;
            }
        }
    }

    BirkhoffReport {
        cyclically_ordered: ordered,
        gap_estimate_ok: gaps.iter().all(|g| *g > required_gap),
        min_gap,
        required_gap,
    }
}
