//! Scenario configuration: TOML schema, strict validation, and conversion
//! into the domain types. Unknown keys are hard errors, and validation
//! reports every failing field at once.

use crate::crystal::{CrystalParams, CrystalSpec};
use crate::error::{Error, Result};
use crate::grid::{make_grid, Grid3D};
use crate::metrics::Detection;
use crate::modes::{HGSpec, LGSpec, ModeSpec, SpatialSpec, TemporalSpec};
use crate::propagation::SolverParams;
use crate::pumpopt::{OptParams, PumpBasis};
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Simulate,
    Optimize,
    Tomography,
    Rotate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCfg {
    pub nx: usize,
    pub ny: usize,
    pub nt: usize,
    /// Window extents: meters, meters, seconds.
    pub lx: f64,
    pub ly: f64,
    pub lt: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalCfg {
    pub chi: f64,
    pub poling_period_m: f64,
    pub length_m: f64,
    pub signal_wavelength_m: f64,
    pub pump_wavelength_m: f64,
    pub n_signal: f64,
    pub n_pump: f64,
    /// When omitted, solved so the process is exactly phase matched.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sf: Option<f64>,
    pub group_index_signal: f64,
    pub group_index_pump: f64,
    pub group_index_sf: f64,
}

impl Default for CrystalCfg {
    fn default() -> Self {
        let s = CrystalSpec::default();
        Self {
            chi: s.chi,
            poling_period_m: s.poling_period_m,
            length_m: s.length_m,
            signal_wavelength_m: s.signal_wavelength_m,
            pump_wavelength_m: s.pump_wavelength_m,
            n_signal: s.n_signal,
            n_pump: s.n_pump,
            n_sf: s.n_sf,
            group_index_signal: s.group_index_signal,
            group_index_pump: s.group_index_pump,
            group_index_sf: s.group_index_sf,
        }
    }
}

impl CrystalCfg {
    fn to_spec(&self) -> CrystalSpec {
        CrystalSpec {
            chi: self.chi,
            poling_period_m: self.poling_period_m,
            length_m: self.length_m,
            signal_wavelength_m: self.signal_wavelength_m,
            pump_wavelength_m: self.pump_wavelength_m,
            n_signal: self.n_signal,
            n_pump: self.n_pump,
            n_sf: self.n_sf,
            group_index_signal: self.group_index_signal,
            group_index_pump: self.group_index_pump,
            group_index_sf: self.group_index_sf,
        }
    }
}

fn default_h0() -> f64 {
    5e-4
}
fn default_tol() -> f64 {
    1e-6
}
fn default_h_min() -> f64 {
    1e-6
}
fn default_h_max() -> f64 {
    2.5e-3
}
fn default_max_steps() -> usize {
    10_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverCfg {
    #[serde(default = "default_h0")]
    pub h0: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_h_min")]
    pub h_min: f64,
    #[serde(default = "default_h_max")]
    pub h_max: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

impl Default for SolverCfg {
    fn default() -> Self {
        Self {
            h0: default_h0(),
            tol: default_tol(),
            h_min: default_h_min(),
            h_max: default_h_max(),
            max_steps: default_max_steps(),
        }
    }
}

impl SolverCfg {
    fn to_params(&self) -> SolverParams<f64> {
        SolverParams {
            h0: self.h0,
            tol: self.tol,
            h_min: self.h_min,
            h_max: self.h_max,
            max_steps: self.max_steps,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionCfg {
    /// Waist of the fundamental collection mode; when omitted it is derived
    /// from the signal and pump waists (1/w² = 1/w_s² + 1/w_p²).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collection_waist_m: Option<f64>,
}

fn default_coeff_re() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialTermCfg {
    /// "lg" or "hg".
    pub basis: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    /// Waist, meters.
    pub w: f64,
    /// HG frame rotation, radians.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default = "default_coeff_re")]
    pub coeff_re: f64,
    #[serde(default)]
    pub coeff_im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemporalTermCfg {
    /// 1/e amplitude half-width, seconds.
    pub tau0: f64,
    /// Center delay, seconds.
    #[serde(default)]
    pub t0: f64,
    #[serde(default)]
    pub order: u32,
    #[serde(default = "default_coeff_re")]
    pub coeff_re: f64,
    #[serde(default)]
    pub coeff_im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeCfg {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub spatial: Vec<SpatialTermCfg>,
    pub temporal: Vec<TemporalTermCfg>,
}

fn default_iterations() -> usize {
    500
}
fn default_sigma() -> f64 {
    0.1
}
fn default_patience() -> usize {
    25
}
fn default_sigma_floor() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerCfg {
    /// Index of the signal mode to select.
    pub target: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_patience")]
    pub patience: usize,
    #[serde(default = "default_sigma_floor")]
    pub sigma_floor: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpBasisCfg {
    pub l_min: i32,
    pub l_max: i32,
    pub p_max: u32,
    pub waist_m: f64,
    /// Temporal basis elements the optimizer may weight.
    pub temporal: Vec<PumpTemporalCfg>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpTemporalCfg {
    pub tau0: f64,
    #[serde(default)]
    pub t0: f64,
    #[serde(default)]
    pub order: u32,
}

fn default_mask_m() -> u32 {
    1
}
fn default_theta_stop() -> f64 {
    180.0
}
fn default_theta_count() -> usize {
    19
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationCfg {
    /// Rotated HG mask indices shared by signal and pump.
    #[serde(default = "default_mask_m")]
    pub m: u32,
    #[serde(default)]
    pub n: u32,
    pub signal_waist_m: f64,
    pub pump_waist_m: f64,
    pub tau0: f64,
    #[serde(default)]
    pub signal_t0: f64,
    #[serde(default)]
    pub pump_t0: f64,
    #[serde(default)]
    pub theta_start_deg: f64,
    #[serde(default = "default_theta_stop")]
    pub theta_stop_deg: f64,
    #[serde(default = "default_theta_count")]
    pub theta_count: usize,
}

fn default_pump_amplitude() -> f64 {
    1.0
}

/// The on-disk scenario schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Peak pump amplitude in the arbitrary field units of `chi`.
    #[serde(default = "default_pump_amplitude")]
    pub pump_amplitude: f64,
    pub grid: GridCfg,
    pub crystal: CrystalCfg,
    #[serde(default)]
    pub solver: SolverCfg,
    #[serde(default)]
    pub detection: DetectionCfg,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub signal: Vec<ModeCfg>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pump: Vec<ModeCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump_basis: Option<PumpBasisCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<RotationCfg>,
}

/// Fully validated, domain-typed scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub kind: Kind,
    pub seed: Option<u64>,
    pub pump_amplitude: f64,
    pub grid: Grid3D<f64>,
    pub crystal: CrystalParams<f64>,
    pub solver: SolverParams<f64>,
    pub detection: Detection<f64>,
    pub signals: Vec<(String, ModeSpec<f64>)>,
    pub pumps: Vec<(String, ModeSpec<f64>)>,
    pub optimizer: Option<OptParams>,
    pub target: Option<usize>,
    pub pump_basis: Option<PumpBasis<f64>>,
    pub rotation: Option<RotationCfg>,
}

fn build_spatial_term(
    term: &SpatialTermCfg,
    at: &str,
    errors: &mut Vec<String>,
) -> Option<(Complex<f64>, SpatialSpec<f64>)> {
    let coeff = Complex::new(term.coeff_re, term.coeff_im);
    if !(term.w > 0.0) || !term.w.is_finite() {
        errors.push(format!("{at}: waist w must be positive, got {}", term.w));
        return None;
    }
    match term.basis.as_str() {
        "lg" => {
            for (k, set) in [("m", term.m.is_some()), ("n", term.n.is_some())] {
                if set {
                    errors.push(format!("{at}: field `{k}` is not valid for basis \"lg\""));
                }
            }
            if term.theta.is_some() {
                errors.push(format!("{at}: field `theta` is not valid for basis \"lg\""));
            }
            let (Some(l), Some(p)) = (term.l, term.p) else {
                errors.push(format!("{at}: basis \"lg\" requires fields `l` and `p`"));
                return None;
            };
            Some((coeff, SpatialSpec::Lg(LGSpec { l, p, w: term.w })))
        }
        "hg" => {
            for (k, set) in [("l", term.l.is_some()), ("p", term.p.is_some())] {
                if set {
                    errors.push(format!("{at}: field `{k}` is not valid for basis \"hg\""));
                }
            }
            let (Some(m), Some(n)) = (term.m, term.n) else {
                errors.push(format!("{at}: basis \"hg\" requires fields `m` and `n`"));
                return None;
            };
            Some((
                coeff,
                SpatialSpec::Hg(HGSpec {
                    m,
                    n,
                    w: term.w,
                    theta: term.theta.unwrap_or(0.0),
                }),
            ))
        }
        other => {
            errors.push(format!("{at}: unknown basis \"{other}\" (expected \"lg\" or \"hg\")"));
            None
        }
    }
}

fn build_mode(cfg: &ModeCfg, at: &str, errors: &mut Vec<String>) -> Option<ModeSpec<f64>> {
    let mut spatial = Vec::new();
    for (k, term) in cfg.spatial.iter().enumerate() {
        if let Some(t) = build_spatial_term(term, &format!("{at}.spatial[{k}]"), errors) {
            spatial.push(t);
        }
    }
    let mut temporal = Vec::new();
    for (k, term) in cfg.temporal.iter().enumerate() {
        if !(term.tau0 > 0.0) || !term.tau0.is_finite() {
            errors.push(format!(
                "{at}.temporal[{k}]: tau0 must be positive, got {}",
                term.tau0
            ));
            continue;
        }
        temporal.push((
            Complex::new(term.coeff_re, term.coeff_im),
            TemporalSpec {
                tau0: term.tau0,
                t0: term.t0,
                order: term.order,
            },
        ));
    }
    if cfg.spatial.is_empty() || cfg.temporal.is_empty() {
        errors.push(format!(
            "{at}: a mode needs at least one spatial and one temporal term"
        ));
        return None;
    }
    match ModeSpec::new(spatial, temporal) {
        Ok(m) => Some(m),
        Err(e) => {
            errors.push(format!("{at}: {e}"));
            None
        }
    }
}

fn first_waist(modes: &[ModeCfg]) -> Option<f64> {
    modes.first().and_then(|m| m.spatial.first()).map(|s| s.w)
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Validation(vec![format!("{e}")]))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    /// Validate every block and convert to domain types, collecting all
    /// failures.
    pub fn validate(&self) -> Result<Scenario> {
        let mut errors = Vec::new();

        let grid = make_grid(
            self.grid.nx,
            self.grid.ny,
            self.grid.nt,
            self.grid.lx,
            self.grid.ly,
            self.grid.lt,
        )
        .map_err(|e| errors.push(format!("grid: {e}")))
        .ok();
        let crystal = self
            .crystal
            .to_spec()
            .build::<f64>()
            .map_err(|e| errors.push(format!("crystal: {e}")))
            .ok();

        let solver = self.solver.to_params();
        if !(solver.tol > 0.0) {
            errors.push(format!("solver: tol must be positive, got {}", solver.tol));
        }
        if !(0.0 < solver.h_min && solver.h_min <= solver.h0 && solver.h0 <= solver.h_max) {
            errors.push(format!(
                "solver: need 0 < h_min <= h0 <= h_max, got h_min={}, h0={}, h_max={}",
                solver.h_min, solver.h0, solver.h_max
            ));
        }
        if solver.h_max > self.crystal.length_m {
            errors.push(format!(
                "solver: h_max={} exceeds crystal length {}",
                solver.h_max, self.crystal.length_m
            ));
        }
        if solver.max_steps == 0 {
            errors.push("solver: max_steps must be >= 1".into());
        }

        if !(self.pump_amplitude > 0.0) || !self.pump_amplitude.is_finite() {
            errors.push(format!(
                "pump_amplitude must be positive, got {}",
                self.pump_amplitude
            ));
        }

        let mut signals = Vec::new();
        for (k, cfg) in self.signal.iter().enumerate() {
            let label = cfg
                .label
                .clone()
                .unwrap_or_else(|| format!("signal_{k}"));
            if let Some(m) = build_mode(cfg, &format!("signal[{k}]"), &mut errors) {
                signals.push((label, m));
            }
        }
        let mut pumps = Vec::new();
        for (k, cfg) in self.pump.iter().enumerate() {
            let label = cfg.label.clone().unwrap_or_else(|| format!("pump_{k}"));
            if let Some(m) = build_mode(cfg, &format!("pump[{k}]"), &mut errors) {
                pumps.push((label, m));
            }
        }

        let pump_basis = match &self.pump_basis {
            Some(cfg) => {
                if cfg.temporal.is_empty() {
                    errors.push("pump_basis: temporal list must not be empty".into());
                    None
                } else {
                    let mut basis = PumpBasis::lg_grid(
                        cfg.l_min,
                        cfg.l_max,
                        cfg.p_max,
                        cfg.waist_m,
                        &[0],
                        cfg.temporal[0].tau0,
                        cfg.temporal[0].t0,
                    )
                    .map_err(|e| errors.push(format!("pump_basis: {e}")))
                    .ok();
                    if let Some(b) = basis.as_mut() {
                        b.temporal = cfg
                            .temporal
                            .iter()
                            .map(|t| TemporalSpec {
                                tau0: t.tau0,
                                t0: t.t0,
                                order: t.order,
                            })
                            .collect();
                        for (k, t) in cfg.temporal.iter().enumerate() {
                            if !(t.tau0 > 0.0) {
                                errors.push(format!(
                                    "pump_basis.temporal[{k}]: tau0 must be positive, got {}",
                                    t.tau0
                                ));
                            }
                        }
                    }
                    basis
                }
            }
            None => None,
        };

        let mut optimizer = None;
        let mut target = None;
        match self.kind {
            Kind::Simulate => {
                if self.signal.len() != 1 {
                    errors.push(format!(
                        "simulate needs exactly one [[signal]] block, got {}",
                        self.signal.len()
                    ));
                }
                if self.pump.len() != 1 {
                    errors.push(format!(
                        "simulate needs exactly one [[pump]] block, got {}",
                        self.pump.len()
                    ));
                }
            }
            Kind::Tomography => {
                if self.signal.is_empty() {
                    errors.push("tomography needs at least one [[signal]] block".into());
                }
                if self.pump.is_empty() {
                    errors.push("tomography needs at least one [[pump]] block".into());
                }
            }
            Kind::Optimize => {
                if self.signal.len() < 2 {
                    errors.push(format!(
                        "optimize needs at least two [[signal]] blocks, got {}",
                        self.signal.len()
                    ));
                }
                if self.pump_basis.is_none() {
                    errors.push("optimize needs a [pump_basis] block".into());
                }
                if self.seed.is_none() {
                    errors.push("optimize needs a top-level seed".into());
                }
                match &self.optimizer {
                    None => errors.push("optimize needs an [optimizer] block".into()),
                    Some(o) => {
                        if o.target >= self.signal.len() {
                            errors.push(format!(
                                "optimizer.target = {} out of range for {} signals",
                                o.target,
                                self.signal.len()
                            ));
                        }
                        if o.iterations == 0 {
                            errors.push("optimizer.iterations must be >= 1".into());
                        }
                        if !(o.sigma > 0.0) || !(o.sigma_floor > 0.0) {
                            errors.push(
                                "optimizer.sigma and optimizer.sigma_floor must be positive"
                                    .into(),
                            );
                        }
                        target = Some(o.target);
                        optimizer = Some(OptParams {
                            iterations: o.iterations,
                            sigma: o.sigma,
                            seed: self.seed.unwrap_or(0),
                            patience: o.patience,
                            sigma_floor: o.sigma_floor,
                        });
                    }
                }
            }
            Kind::Rotate => {
                if self.rotation.is_none() {
                    errors.push("rotate needs a [rotation] block".into());
                }
                if let Some(r) = &self.rotation {
                    for (name, v) in [
                        ("signal_waist_m", r.signal_waist_m),
                        ("pump_waist_m", r.pump_waist_m),
                        ("tau0", r.tau0),
                    ] {
                        if !(v > 0.0) || !v.is_finite() {
                            errors.push(format!(
                                "rotation.{name} must be positive, got {v}"
                            ));
                        }
                    }
                    if r.theta_count < 2 {
                        errors.push(format!(
                            "rotation.theta_count must be >= 2, got {}",
                            r.theta_count
                        ));
                    }
                    if !(r.theta_stop_deg > r.theta_start_deg) {
                        errors.push(format!(
                            "rotation: need theta_start_deg < theta_stop_deg, got {} and {}",
                            r.theta_start_deg, r.theta_stop_deg
                        ));
                    }
                }
            }
        }

        // Blocks that are meaningless for the chosen kind are rejected, not
        // ignored, to keep configs honest.
        if self.kind != Kind::Optimize {
            if self.optimizer.is_some() {
                errors.push("[optimizer] is only valid for kind = \"optimize\"".into());
            }
            if self.pump_basis.is_some() {
                errors.push("[pump_basis] is only valid for kind = \"optimize\"".into());
            }
        }
        if self.kind != Kind::Rotate && self.rotation.is_some() {
            errors.push("[rotation] is only valid for kind = \"rotate\"".into());
        }
        if self.kind == Kind::Rotate && (!self.signal.is_empty() || !self.pump.is_empty()) {
            errors.push("rotate builds its modes from [rotation]; remove [[signal]]/[[pump]]".into());
        }

        let detection = match self.detection.collection_waist_m {
            Some(w) => {
                if !(w > 0.0) || !w.is_finite() {
                    errors.push(format!(
                        "detection.collection_waist_m must be positive, got {w}"
                    ));
                }
                Detection { collection_waist: w }
            }
            None => {
                let ws = first_waist(&self.signal)
                    .or(self.rotation.as_ref().map(|r| r.signal_waist_m));
                let wp = first_waist(&self.pump)
                    .or(self.pump_basis.as_ref().map(|b| b.waist_m))
                    .or(self.rotation.as_ref().map(|r| r.pump_waist_m));
                match (ws, wp) {
                    (Some(ws), Some(wp)) if ws > 0.0 && wp > 0.0 => {
                        Detection::from_waists(ws, wp)
                    }
                    _ => {
                        errors.push(
                            "detection: cannot derive a collection waist; set detection.collection_waist_m".into(),
                        );
                        Detection { collection_waist: 1.0 }
                    }
                }
            }
        };

        if !errors.is_empty() {
            return Err(Error::Validation(errors));
        }
        Ok(Scenario {
            kind: self.kind,
            seed: self.seed,
            pump_amplitude: self.pump_amplitude,
            grid: grid.expect("checked"),
            crystal: crystal.expect("checked"),
            solver,
            detection,
            signals,
            pumps,
            optimizer,
            target,
            pump_basis,
            rotation: self.rotation.clone(),
        })
    }
}
