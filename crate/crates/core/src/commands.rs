//! The four experiment drivers behind the CLI: simulate, find-orbits,
//! twist-check and sweep. Each writes its report files into the output
//! directory and returns a human-readable summary. Identical config and seed
//! give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::impact::{ImpactMap, Trajectory, VelocityState};
use crate::orbits::{
    birkhoff_validate, classify_stability, existence_threshold, sweep_enumerate, BirkhoffReport,
    DegeneracyKind, DegeneracyReport, LyapunovProbe, OrbitKey, SweepGrid,
};
use crate::report::{to_json, Csv, CsvField};
use crate::twist::{f_tilde_grid, twist_certificate};
use crate::variational::GeneratingContext;

#[derive(Debug)]
pub struct CmdOutput {
    pub summary: String,
    pub theory_violation: bool,
}

/// Per-key output document of find-orbits. The degeneracy report fields stay
/// at the top level; pipeline metadata and probe evidence ride along.
#[derive(Debug, Serialize, Deserialize)]
pub struct FindOrbitsDocument {
    pub key: OrbitKey,
    pub alpha: f64,
    pub below_threshold_warning: bool,
    #[serde(flatten)]
    pub report: DegeneracyReport,
    /// Parallel to `orbits` in the finite case; empty for degenerate sets.
    pub probes: Vec<LyapunovProbe>,
    pub birkhoff: Vec<BirkhoffReport>,
}

pub fn trajectory_csv_velocity(trajectory: &Trajectory) -> String {
    let mut csv = Csv::new("n,t,v,e,grazing_flag");
    for point in &trajectory.points {
        csv.row(&[
            CsvField::Int(point.n as i64),
            CsvField::Float(point.t),
            CsvField::Float(point.v),
            CsvField::Float(point.e),
            CsvField::Int(point.grazing as i64),
        ]);
    }
    csv.finish()
}

pub fn trajectory_csv_energy(trajectory: &Trajectory) -> String {
    let mut csv = Csv::new("n,t,e");
    for point in &trajectory.points {
        csv.row(&[
            CsvField::Int(point.n as i64),
            CsvField::Float(point.t),
            CsvField::Float(point.e),
        ]);
    }
    csv.finish()
}

pub fn cmd_simulate(config: &RunConfig, out_dir: &Path) -> Result<CmdOutput> {
    if config.initial_conditions.is_empty() {
        return Err(Error::Config(
            "simulate needs at least one entry in `initial_conditions`".into(),
        ));
    }
    let params = config.map_params(&config.forcing)?;
    let map = ImpactMap::new(config.forcing.clone(), params);
    fs::create_dir_all(out_dir).map_err(io_error)?;

    let mut summary = String::new();
    for (i, &(t, v)) in config.initial_conditions.iter().enumerate() {
        let trajectory = map.simulate_bouncing(&VelocityState { t, v }, config.n_steps);
        let path = out_dir.join(format!("trajectory_{i}.csv"));
        fs::write(&path, trajectory_csv_velocity(&trajectory)).map_err(io_error)?;
        let grazing = trajectory.points.iter().filter(|p| p.grazing).count();
        let _ = writeln!(
            summary,
            "trajectory {i}: start (t={t}, v={v}), {} impacts, {grazing} grazing, all falling: {} -> {}",
            config.n_steps,
            trajectory.all_impacts_falling,
            path.display()
        );
    }
    Ok(CmdOutput { summary, theory_violation: false })
}

pub fn cmd_find_orbits(config: &RunConfig, out_dir: &Path) -> Result<CmdOutput> {
    if config.keys.is_empty() {
        return Err(Error::Config("find-orbits needs a non-empty `keys` list".into()));
    }
    let params = config.map_params(&config.forcing)?;
    let ctx = GeneratingContext::for_profile(config.forcing.clone(), params);
    fs::create_dir_all(out_dir).map_err(io_error)?;

    let alpha = existence_threshold(&ctx);
    let mut summary = String::new();
    let mut theory_violation = false;
    let _ = writeln!(summary, "existence threshold alpha = {alpha:.6}");
    for &(p, q) in &config.keys {
        let key = OrbitKey::new(p, q)?;
        let document = find_orbits_for_key(&ctx, key, config, alpha)?;
        theory_violation |= document.report.theory_violation;
        let path = out_dir.join(format!("orbits_p{p}_q{q}.json"));
        fs::write(&path, to_json(&document)?).map_err(io_error)?;
        summarize_key(&mut summary, &document, &path);
    }
    Ok(CmdOutput { summary, theory_violation })
}

fn find_orbits_for_key(
    ctx: &GeneratingContext,
    key: OrbitKey,
    config: &RunConfig,
    alpha: f64,
) -> Result<FindOrbitsDocument> {
    let grid = sweep_window(config, key);
    let report = sweep_enumerate(ctx, key, grid)?;
    let probes = if report.kind == DegeneracyKind::Finite {
        report
            .orbits
            .iter()
            .map(|orbit| classify_stability(ctx, orbit, &config.probe()).1)
            .collect()
    } else {
        Vec::new()
    };
    let birkhoff = report.orbits.iter().map(birkhoff_validate).collect();
    Ok(FindOrbitsDocument {
        key,
        alpha,
        below_threshold_warning: key.ratio() <= alpha,
        report,
        probes,
        birkhoff,
    })
}

fn sweep_window(config: &RunConfig, key: OrbitKey) -> SweepGrid {
    let e_res = key.resonant_energy(config.g);
    SweepGrid {
        n_t: config.sweep_grid_n,
        n_e: config.sweep_grid_n,
        e_lo: config.e_window.0 * e_res,
        e_hi: config.e_window.1 * e_res,
    }
}

fn summarize_key(summary: &mut String, document: &FindOrbitsDocument, path: &Path) {
    let key = document.key;
    let warn = if document.below_threshold_warning {
        " [warning: p/q <= alpha, existence not guaranteed]"
    } else {
        ""
    };
    match document.report.kind {
        DegeneracyKind::Degenerate => {
            let _ = writeln!(
                summary,
                "key ({},{}): DEGENERATE, {} curve samples{warn} -> {}",
                key.p,
                key.q,
                document.report.curve_samples.len(),
                path.display()
            );
        }
        DegeneracyKind::Finite => {
            let _ = writeln!(
                summary,
                "key ({},{}): FINITE, {} orbit class(es){warn} -> {}",
                key.p,
                key.q,
                document.report.orbits.len(),
                path.display()
            );
            for orbit in &document.report.orbits {
                let _ = writeln!(
                    summary,
                    "  t0={:.9} e0={:.9} action={:.9} trace={:.6} {:?} morse={}",
                    orbit.times[0],
                    orbit.energies[0],
                    orbit.action,
                    orbit.monodromy_trace,
                    orbit.stability,
                    orbit.morse_index
                );
            }
            if document.report.theory_violation {
                let _ = writeln!(summary, "  THEORY VIOLATION: {}", document.report.instability_witness);
            }
        }
    }
}

pub fn cmd_twist_check(config: &RunConfig, out_dir: &Path) -> Result<CmdOutput> {
    if config.twist_q.is_empty() {
        return Err(Error::Config("twist-check needs a non-empty `twist_q` list".into()));
    }
    let params = config.map_params(&config.forcing)?;
    let map = ImpactMap::new(config.forcing.clone(), params);
    fs::create_dir_all(out_dir).map_err(io_error)?;

    let mut summary = String::new();
    for &q in &config.twist_q {
        if q == 0 {
            return Err(Error::Config("field `twist_q` entries must be positive".into()));
        }
        let report = twist_certificate(&map, q, config.twist_e_range, config.twist_grid_n);
        let json_path = out_dir.join(format!("twist_q{q}.json"));
        fs::write(&json_path, to_json(&report)?).map_err(io_error)?;

        let mut csv = Csv::new("t,e,f_tilde");
        for (t, e, value) in f_tilde_grid(&map, q, config.twist_e_range, config.twist_grid_n) {
            csv.row(&[CsvField::Float(t), CsvField::Float(e), CsvField::Float(value)]);
        }
        let csv_path = out_dir.join(format!("twist_q{q}.csv"));
        fs::write(&csv_path, csv.finish()).map_err(io_error)?;

        let _ = writeln!(
            summary,
            "q={q}: max|f~|={:.6e} bound_holds={} agreement={:.3e} -> {}",
            report.f_tilde_max,
            report.bound_holds,
            report.method_agreement,
            json_path.display()
        );
    }
    Ok(CmdOutput { summary, theory_violation: false })
}

pub fn cmd_sweep(config: &RunConfig, out_dir: &Path) -> Result<CmdOutput> {
    if config.keys.is_empty() {
        return Err(Error::Config("sweep needs a non-empty `keys` list".into()));
    }
    if config.amplitudes.is_empty() {
        return Err(Error::Config("sweep needs a non-empty `amplitudes` list".into()));
    }
    fs::create_dir_all(out_dir).map_err(io_error)?;

    let mut csv = Csv::new("amplitude,p,q,kind,n_orbits,max_trace");
    let mut summary = String::new();
    let mut theory_violation = false;
    for &amplitude in &config.amplitudes {
        let profile = config.forcing.scaled(amplitude);
        let params = config.map_params(&profile)?;
        let ctx = GeneratingContext::for_profile(profile, params);
        for &(p, q) in &config.keys {
            let key = OrbitKey::new(p, q)?;
            let report = sweep_enumerate(&ctx, key, sweep_window(config, key))?;
            theory_violation |= report.theory_violation;
            let (kind, n_orbits) = match report.kind {
                DegeneracyKind::Degenerate => ("degenerate", report.curve_samples.len()),
                DegeneracyKind::Finite => ("finite", report.orbits.len()),
            };
            let max_trace = report
                .orbits
                .iter()
                .map(|o| o.monodromy_trace.abs())
                .fold(0.0f64, f64::max);
            csv.row(&[
                CsvField::Float(amplitude),
                CsvField::Int(p as i64),
                CsvField::Int(q as i64),
                CsvField::Text(kind.into()),
                CsvField::Int(n_orbits as i64),
                CsvField::Float(max_trace),
            ]);
            let _ = writeln!(summary, "amplitude {amplitude}: key ({p},{q}) {kind} with {n_orbits} orbit(s)");
        }
    }
    let path = out_dir.join("sweep_index.csv");
    fs::write(&path, csv.finish()).map_err(io_error)?;
    let _ = writeln!(summary, "index -> {}", path.display());
    Ok(CmdOutput { summary, theory_violation })
}

fn io_error(e: std::io::Error) -> Error {
    Error::Config(format!("io error: {e}"))
}
