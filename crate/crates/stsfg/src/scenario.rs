//! Scenario execution: turns a validated config into propagations,
//! optimizations, tomography matrices, or rotation sweeps, and writes
//! `report.json` plus plot-ready CSVs.
//!
//! `report.json` is byte-identical across reruns of the same config and
//! seed; wall-clock information lives in a separate `metadata.json` that is
//! deliberately excluded from the declared outputs.

use crate::config::{Kind, RotationCfg, Scenario, ScenarioConfig};
use crate::error::{Error, Result};
use crate::field::{write_spatial_csv, write_temporal_csv, Field};
use crate::metrics::{collected_flux, tomography_matrix, MeasurementContext};
use crate::modes::{HGSpec, ModeSpec, SpatialSpec, TemporalSpec};
use crate::propagation::{propagate, PropagationResult};
use crate::pumpopt::{random_walk_optimize, OptProblem, OptimizationResult};
use crate::real::Real;
use ndarray::Axis;
use num_complex::Complex;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};
use std::io::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub name: String,
    pub sha256: String,
}

/// The deterministic run record written as `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub kind: Kind,
    pub crate_version: &'static str,
    /// SHA-256 of the exact config text that produced this run.
    pub config_digest: String,
    pub seed: Option<u64>,
    pub strict: bool,
    pub results: serde_json::Value,
    /// Every data file of the run, with content digests.
    pub outputs: Vec<OutputFile>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

fn write_output(dir: &Path, name: &str, bytes: &[u8]) -> Result<OutputFile> {
    std::fs::write(dir.join(name), bytes)?;
    Ok(OutputFile {
        name: name.to_string(),
        sha256: sha256_hex(bytes),
    })
}

fn json_f64(v: f64) -> serde_json::Value {
    // NaN/inf are not representable in JSON; fail loudly instead of nulling.
    serde_json::Number::from_f64(v)
        .map(serde_json::Value::Number)
        .unwrap_or(serde_json::Value::String(format!("{v}")))
}

fn flux_csv<T: Real>(run: &PropagationResult<T>) -> Vec<u8> {
    let mut out = Vec::new();
    let _ = writeln!(out, "z,h,flux_s,flux_p,flux_f");
    let mut row = |r: &crate::propagation::StepRecord<T>| {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.z.as_f64(),
            r.h.as_f64(),
            r.flux_s.as_f64(),
            r.flux_p.as_f64(),
            r.flux_f.as_f64()
        );
    };
    row(&run.initial);
    for r in &run.steps {
        row(r);
    }
    out
}

/// Index of the time slice holding the most SF power.
fn temporal_peak_index<T: Real>(sf: &Field<T>) -> usize {
    let data = sf.as_full();
    let mut best = (0usize, T::neg_infinity());
    for (k, slice) in data.axis_iter(Axis(2)).enumerate() {
        let p: T = slice.iter().map(|c| c.norm_sqr()).fold(T::zero(), |a, b| a + b);
        if p > best.1 {
            best = (k, p);
        }
    }
    best.0
}

/// Transverse index holding the most time-integrated SF power.
fn spatial_peak_index<T: Real>(sf: &Field<T>) -> (usize, usize) {
    let data = sf.as_full();
    let g = sf.grid;
    let mut best = (0usize, 0usize, T::neg_infinity());
    for i in 0..g.nx {
        for j in 0..g.ny {
            let mut p = T::zero();
            for k in 0..g.nt {
                p = p + data[[i, j, k]].norm_sqr();
            }
            if p > best.2 {
                best = (i, j, p);
            }
        }
    }
    (best.0, best.1)
}

fn run_simulate(s: &Scenario, strict: bool, out_dir: &Path) -> Result<(serde_json::Value, Vec<OutputFile>)> {
    let ctx = MeasurementContext {
        grid: &s.grid,
        crystal: &s.crystal,
        solver: &s.solver,
        detection: &s.detection,
        pump_amplitude: s.pump_amplitude,
        strict,
    };
    let mut signal_set = vec![s.signals[0].1.field(&s.grid, strict)?];
    ctx.scale_signal_set(&mut signal_set)?;
    let signal = signal_set.pop().expect("one signal");
    let pump = ctx.scale_pump(s.pumps[0].1.field(&s.grid, strict)?)?;
    let run = propagate(&signal, &pump, &s.crystal, &s.solver)?;

    let mut outputs = Vec::new();
    outputs.push(write_output(out_dir, "flux_vs_z.csv", &flux_csv(&run))?);

    let kt = temporal_peak_index(&run.sf);
    let mut buf = Vec::new();
    write_spatial_csv(&mut buf, &s.grid, run.sf.as_full().index_axis(Axis(2), kt))?;
    outputs.push(write_output(out_dir, "sf_spatial_at_peak.csv", &buf)?);

    let (pi, pj) = spatial_peak_index(&run.sf);
    let mut buf = Vec::new();
    let temporal = run.sf.as_full();
    let profile = temporal.index_axis(Axis(0), pi);
    let profile = profile.index_axis(Axis(0), pj);
    write_temporal_csv(&mut buf, &s.grid, profile)?;
    outputs.push(write_output(out_dir, "sf_temporal_at_peak.csv", &buf)?);

    let last = run.steps.last().copied().unwrap_or(run.initial);
    let detected = collected_flux(&run.sf, &s.detection)?;
    let results = json!({
        "final_flux_signal": json_f64(last.flux_s),
        "final_flux_pump": json_f64(last.flux_p),
        "final_flux_sf": json_f64(last.flux_f),
        "collected_sf_flux": json_f64(detected),
        "conversion_fraction": json_f64(last.flux_f / (run.initial.flux_s + run.initial.flux_f)),
        "accepted_steps": run.accepted,
        "rejected_steps": run.rejected,
        "manley_rowe_drift": json_f64(run.manley_rowe_drift()),
        "energy_drift": json_f64(run.energy_drift(&s.crystal)),
        "temporal_peak_index": kt,
        "temporal_peak_t": json_f64(s.grid.t(kt)),
        "spatial_peak_xy": [json_f64(s.grid.x(pi)), json_f64(s.grid.y(pj))],
    });
    Ok((results, outputs))
}

fn run_optimize(s: &Scenario, strict: bool, out_dir: &Path) -> Result<(serde_json::Value, Vec<OutputFile>)> {
    let params = s
        .optimizer
        .ok_or_else(|| Error::Config("optimize scenario without optimizer params".into()))?;
    let basis = s
        .pump_basis
        .clone()
        .ok_or_else(|| Error::Config("optimize scenario without a pump basis".into()))?;
    let problem = OptProblem {
        target: s.target.expect("validated"),
        signals: s.signals.iter().map(|(_, m)| m.clone()).collect(),
        grid: s.grid,
        crystal: s.crystal,
        solver: s.solver,
        basis,
        detection: s.detection,
        pump_amplitude: s.pump_amplitude,
        strict,
    };
    let result = random_walk_optimize(&problem, &params, None)?;

    let mut outputs = Vec::new();
    let mut trace = Vec::new();
    let _ = writeln!(trace, "iteration,best_db");
    for (i, db) in result.trace.iter().enumerate() {
        let _ = writeln!(trace, "{i},{db}");
    }
    outputs.push(write_output(out_dir, "trace.csv", &trace)?);

    let results = optimize_results_json(&problem, &params.seed, &result);
    Ok((results, outputs))
}

fn optimize_results_json(
    problem: &OptProblem<f64>,
    seed: &u64,
    result: &OptimizationResult,
) -> serde_json::Value {
    let spatial_basis: Vec<_> = problem
        .basis
        .spatial
        .iter()
        .map(|s| json!({"l": s.l, "p": s.p, "w": json_f64(s.w)}))
        .collect();
    let temporal_basis: Vec<_> = problem
        .basis
        .temporal
        .iter()
        .map(|t| json!({"tau0": json_f64(t.tau0), "t0": json_f64(t.t0), "order": t.order}))
        .collect();
    json!({
        "seed": seed,
        "target": problem.target,
        "best_db": json_f64(result.best_db),
        "accepted_moves": result.accepted_moves,
        "iterations": result.trace.len(),
        "error": result.error,
        "spatial_basis": spatial_basis,
        "temporal_basis": temporal_basis,
        "best_coefficients": {
            "spatial": result.best.spatial,
            "temporal": result.best.temporal,
        },
        "report": serde_json::to_value(&result.report).expect("report serializes"),
    })
}

fn run_tomography(s: &Scenario, strict: bool, out_dir: &Path) -> Result<(serde_json::Value, Vec<OutputFile>)> {
    let ctx = MeasurementContext {
        grid: &s.grid,
        crystal: &s.crystal,
        solver: &s.solver,
        detection: &s.detection,
        pump_amplitude: s.pump_amplitude,
        strict,
    };
    let pumps: Vec<(String, Field<f64>)> = s
        .pumps
        .iter()
        .map(|(label, m)| Ok((label.clone(), m.field(&s.grid, strict)?)))
        .collect::<Result<_>>()?;
    let matrix = tomography_matrix(&ctx, &s.signals, &pumps)?;

    let mut outputs = Vec::new();
    let mut buf = Vec::new();
    matrix.write_csv(&mut buf, false)?;
    outputs.push(write_output(out_dir, "tomography.csv", &buf)?);
    let mut buf = Vec::new();
    matrix.write_csv(&mut buf, true)?;
    outputs.push(write_output(out_dir, "tomography_full.csv", &buf)?);

    let results = json!({
        "matrix": serde_json::to_value(&matrix).expect("matrix serializes"),
        "rows": matrix.row_labels.len(),
        "cols": matrix.col_labels.len(),
    });
    Ok((results, outputs))
}

/// One full rotation sweep: normalized SF counts over a square (θ_s, θ_p)
/// angle grid.
#[derive(Debug, Clone, Serialize)]
pub struct RotationSweep {
    pub thetas_deg: Vec<f64>,
    /// `flux[i][j]` is the count at θ_s = thetas[i], θ_p = thetas[j],
    /// normalized to the sweep maximum.
    pub flux: Vec<Vec<f64>>,
}

impl RotationSweep {
    /// Largest normalized count on the |θ_s − θ_p| = 90° lines (where the
    /// masks are orthogonal), in dB relative to the sweep maximum.
    pub fn orthogonal_leak_db(&self) -> Option<f64> {
        let mut worst: Option<f64> = None;
        for (i, &ts) in self.thetas_deg.iter().enumerate() {
            for (j, &tp) in self.thetas_deg.iter().enumerate() {
                if ((ts - tp).abs() - 90.0).abs() < 1e-9 {
                    let v = self.flux[i][j];
                    worst = Some(worst.map_or(v, |w: f64| w.max(v)));
                }
            }
        }
        worst.map(|w| 10.0 * w.max(1e-300).log10())
    }

    /// Smallest fringe visibility over the fixed-θ_p cuts.
    pub fn min_cut_visibility(&self) -> Result<f64> {
        let mut min = f64::INFINITY;
        for j in 0..self.thetas_deg.len() {
            let cut: Vec<(f64, f64)> = self
                .thetas_deg
                .iter()
                .enumerate()
                .map(|(i, &t)| (t, self.flux[i][j]))
                .collect();
            min = min.min(crate::metrics::visibility(&cut)?);
        }
        Ok(min)
    }

    /// Largest asymmetry |flux(i,j) − flux(j,i)| over the sweep.
    pub fn asymmetry(&self) -> f64 {
        let n = self.thetas_deg.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.flux[i][j] - self.flux[j][i]).abs());
            }
        }
        worst
    }
}

fn rotated_mode(cfg: &RotationCfg, waist: f64, theta: f64, t0: f64) -> Result<ModeSpec<f64>> {
    ModeSpec::new(
        vec![(
            Complex::new(1.0, 0.0),
            SpatialSpec::Hg(HGSpec {
                m: cfg.m,
                n: cfg.n,
                w: waist,
                theta,
            }),
        )],
        vec![(
            Complex::new(1.0, 0.0),
            TemporalSpec {
                tau0: cfg.tau0,
                t0,
                order: 0,
            },
        )],
    )
}

/// Propagate every (θ_s, θ_p) pair of rotated HG masks and normalize the
/// detected SF counts to the sweep maximum.
pub fn rotation_sweep(s: &Scenario, strict: bool) -> Result<RotationSweep> {
    let cfg = s
        .rotation
        .as_ref()
        .ok_or_else(|| Error::Config("rotate scenario without a rotation block".into()))?;
    let n = cfg.theta_count;
    let step = (cfg.theta_stop_deg - cfg.theta_start_deg) / (n as f64 - 1.0);
    let thetas_deg: Vec<f64> = (0..n).map(|k| cfg.theta_start_deg + step * k as f64).collect();

    let ctx = MeasurementContext {
        grid: &s.grid,
        crystal: &s.crystal,
        solver: &s.solver,
        detection: &s.detection,
        pump_amplitude: s.pump_amplitude,
        strict,
    };

    // Mode construction is cheap next to propagation, but fields are reused
    // across the grid: n signal fields and n pump fields for n² cells.
    let mut signals: Vec<Field<f64>> = thetas_deg
        .iter()
        .map(|&deg| {
            rotated_mode(cfg, cfg.signal_waist_m, deg.to_radians(), cfg.signal_t0)?
                .field(&s.grid, strict)
        })
        .collect::<Result<_>>()?;
    ctx.scale_signal_set(&mut signals)?;
    let pumps: Vec<Field<f64>> = thetas_deg
        .iter()
        .map(|&deg| {
            let f = rotated_mode(cfg, cfg.pump_waist_m, deg.to_radians(), cfg.pump_t0)?
                .field(&s.grid, strict)?;
            ctx.scale_pump(f)
        })
        .collect::<Result<_>>()?;

    let mut raw = vec![vec![0.0f64; n]; n];
    let mut max = 0.0f64;
    for (i, signal) in signals.iter().enumerate() {
        for (j, pump) in pumps.iter().enumerate() {
            let v = ctx.detected_counts(signal, pump).map_err(|e| Error::Cell {
                row: i,
                col: j,
                source: Box::new(e),
            })?;
            raw[i][j] = v;
            max = max.max(v);
        }
    }
    if !(max > 0.0) {
        return Err(Error::Degenerate("rotation sweep produced no SF flux".into()));
    }
    let flux = raw
        .into_iter()
        .map(|row| row.into_iter().map(|v| v / max).collect())
        .collect();
    Ok(RotationSweep { thetas_deg, flux })
}

fn run_rotate(s: &Scenario, strict: bool, out_dir: &Path) -> Result<(serde_json::Value, Vec<OutputFile>)> {
    let sweep = rotation_sweep(s, strict)?;

    let mut buf = Vec::new();
    let _ = writeln!(buf, "theta_s_deg,theta_p_deg,normalized_flux");
    for (i, &ts) in sweep.thetas_deg.iter().enumerate() {
        for (j, &tp) in sweep.thetas_deg.iter().enumerate() {
            let _ = writeln!(buf, "{ts},{tp},{}", sweep.flux[i][j]);
        }
    }
    let outputs = vec![write_output(out_dir, "rotation.csv", &buf)?];

    let results = json!({
        "theta_count": sweep.thetas_deg.len(),
        "orthogonal_leak_db": sweep.orthogonal_leak_db().map(json_f64),
        "min_cut_visibility": json_f64(sweep.min_cut_visibility()?),
        "max_asymmetry": json_f64(sweep.asymmetry()),
    });
    Ok((results, outputs))
}

/// Parse, validate, and execute a scenario config, writing `report.json`,
/// `metadata.json`, and the scenario CSVs into `out_dir`.
///
/// `expected_kind` enforces that the CLI subcommand matches the config;
/// `seed_override` replaces the config seed before validation.
pub fn run_scenario(
    config_path: &Path,
    out_dir: &Path,
    expected_kind: Option<Kind>,
    seed_override: Option<u64>,
    strict: bool,
) -> Result<Report> {
    let text = std::fs::read_to_string(config_path)?;
    let mut cfg = ScenarioConfig::from_toml(&text)?;
    if let Some(seed) = seed_override {
        cfg.seed = Some(seed);
    }
    if let Some(kind) = expected_kind {
        if cfg.kind != kind {
            return Err(Error::Validation(vec![format!(
                "config kind {:?} does not match the requested subcommand {:?}",
                cfg.kind, kind
            )]));
        }
    }
    let scenario = cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;

    // Digest the effective config (after the seed override) so reruns with
    // the same inputs are provably identical.
    let effective = toml::to_string(&cfg).map_err(|e| Error::Serialize(e.to_string()))?;
    let config_digest = sha256_hex(effective.as_bytes());

    let (results, outputs) = match scenario.kind {
        Kind::Simulate => run_simulate(&scenario, strict, out_dir)?,
        Kind::Optimize => run_optimize(&scenario, strict, out_dir)?,
        Kind::Tomography => run_tomography(&scenario, strict, out_dir)?,
        Kind::Rotate => run_rotate(&scenario, strict, out_dir)?,
    };

    let report = Report {
        kind: scenario.kind,
        crate_version: env!("CARGO_PKG_VERSION"),
        config_digest,
        seed: scenario.seed,
        strict,
        results,
        outputs,
    };
    let report_json =
        serde_json::to_vec_pretty(&report).map_err(|e| Error::Serialize(e.to_string()))?;
    std::fs::write(out_dir.join("report.json"), &report_json)?;

    // Wall-clock provenance lives here, never in report.json.
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let metadata = json!({
        "created_unix_seconds": now,
        "config_path": config_path.display().to_string(),
        "out_dir": out_dir.display().to_string(),
    });
    std::fs::write(
        out_dir.join("metadata.json"),
        serde_json::to_vec_pretty(&metadata).map_err(|e| Error::Serialize(e.to_string()))?,
    )?;
    Ok(report)
}

/// Parse and validate only; used by the `validate` subcommand.
pub fn validate_only(config_path: &Path) -> Result<Kind> {
    let cfg = ScenarioConfig::from_file(config_path)?;
    let s = cfg.validate()?;
    Ok(s.kind)
}

/// Path helper for callers that want the report back.
pub fn report_path(out_dir: &Path) -> PathBuf {
    out_dir.join("report.json")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn rotation_helpers() {
        // Synthetic Malus-law sweep over 0..180 in 10° steps.
        let thetas: Vec<f64> = (0..19).map(|k| 10.0 * k as f64).collect();
        let flux: Vec<Vec<f64>> = thetas
            .iter()
            .map(|ts| {
                thetas
                    .iter()
                    .map(|tp| (ts - tp).to_radians().cos().powi(2))
                    .collect()
            })
            .collect();
        let sweep = RotationSweep {
            thetas_deg: thetas,
            flux,
        };
        let leak = sweep.orthogonal_leak_db().unwrap();
        assert!(leak < -100.0, "leak {leak}");
        assert!(sweep.min_cut_visibility().unwrap() > 0.999_999);
        assert!(sweep.asymmetry() < 1e-12);
    }

    #[test]
    fn temporal_peak_found() {
        use crate::grid::make_grid;
        use ndarray::Array3;
        let g = make_grid(8, 8, 8, 1.0, 1.0, 1.0).unwrap();
        let mut data = Array3::<Complex<f64>>::zeros((8, 8, 8));
        data[[3, 4, 6]] = Complex::new(2.0, 0.0);
        data[[1, 1, 2]] = Complex::new(1.0, 0.0);
        let f = Field::from_full(g, data).unwrap();
        assert_eq!(temporal_peak_index(&f), 6);
        assert_eq!(spatial_peak_index(&f), (3, 4));
    }
}
