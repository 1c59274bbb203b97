//! Pump parameterization over an ordered LG × temporal basis and the seeded
//! random-walk optimizer that maximizes worst-pair selectivity of a target
//! signal mode.

use crate::crystal::CrystalParams;
use crate::error::{Error, Result};
use crate::field::{Carrier, Field};
use crate::grid::Grid3D;
use crate::metrics::{
    CountVector, Detection, MeasurementContext, SelectivityReport,
};
use crate::modes::{compose, lg_mode, superpose, temporal_mode, LGSpec, ModeSpec, TemporalSpec};
use crate::propagation::SolverParams;
use crate::real::Real;
use num_complex::Complex;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Ordered basis the pump coefficients refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct PumpBasis<T: Real> {
    pub spatial: Vec<LGSpec<T>>,
    pub temporal: Vec<TemporalSpec<T>>,
}

impl<T: Real> PumpBasis<T> {
    /// LG grid l ∈ [l_min, l_max], p ∈ [0, p_max] at a common waist, times a
    /// set of temporal Hermite-Gauss orders sharing (τ0, t0).
    pub fn lg_grid(
        l_min: i32,
        l_max: i32,
        p_max: u32,
        waist: T,
        orders: &[u32],
        tau0: T,
        t0: T,
    ) -> Result<Self> {
        if l_min > l_max {
            return Err(Error::Config(format!(
                "empty azimuthal range [{l_min}, {l_max}]"
            )));
        }
        if orders.is_empty() {
            return Err(Error::Config("empty temporal order list".into()));
        }
        let mut spatial = Vec::new();
        for p in 0..=p_max {
            for l in l_min..=l_max {
                spatial.push(LGSpec { l, p, w: waist });
            }
        }
        let temporal = orders
            .iter()
            .map(|&order| TemporalSpec { tau0, t0, order })
            .collect();
        Ok(Self { spatial, temporal })
    }

    pub fn len_spatial(&self) -> usize {
        self.spatial.len()
    }

    pub fn len_temporal(&self) -> usize {
        self.temporal.len()
    }
}

/// Complex coefficient vectors over a [`PumpBasis`]; each vector is kept at
/// unit L2 norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PumpCoefficients {
    pub spatial: Vec<(f64, f64)>,
    pub temporal: Vec<(f64, f64)>,
}

fn renorm(v: &mut [(f64, f64)]) -> Result<()> {
    let n: f64 = v.iter().map(|(re, im)| re * re + im * im).sum();
    if !(n > 0.0) {
        return Err(Error::Degenerate("zero coefficient vector".into()));
    }
    let inv = 1.0 / n.sqrt();
    for (re, im) in v.iter_mut() {
        *re *= inv;
        *im *= inv;
    }
    Ok(())
}

impl PumpCoefficients {
    pub fn new(mut spatial: Vec<(f64, f64)>, mut temporal: Vec<(f64, f64)>) -> Result<Self> {
        if spatial.is_empty() || temporal.is_empty() {
            return Err(Error::Config("empty pump coefficient vector".into()));
        }
        renorm(&mut spatial)?;
        renorm(&mut temporal)?;
        Ok(Self { spatial, temporal })
    }

    /// Equal weight on every basis element.
    pub fn uniform(basis_spatial: usize, basis_temporal: usize) -> Result<Self> {
        Self::new(
            vec![(1.0, 0.0); basis_spatial],
            vec![(1.0, 0.0); basis_temporal],
        )
    }

    /// All weight on one (spatial, temporal) pair.
    pub fn concentrated(
        basis_spatial: usize,
        basis_temporal: usize,
        s_idx: usize,
        t_idx: usize,
    ) -> Result<Self> {
        let mut spatial = vec![(0.0, 0.0); basis_spatial];
        let mut temporal = vec![(0.0, 0.0); basis_temporal];
        spatial[s_idx] = (1.0, 0.0);
        temporal[t_idx] = (1.0, 0.0);
        Self::new(spatial, temporal)
    }

    pub fn unit_norm(&self) -> bool {
        let n = |v: &[(f64, f64)]| -> f64 { v.iter().map(|(re, im)| re * re + im * im).sum() };
        (n(&self.spatial) - 1.0).abs() < 1e-9 && (n(&self.temporal) - 1.0).abs() < 1e-9
    }
}

/// Build the unit-normalized 3D pump field of a coefficient set.
pub fn build_pump<T: Real>(
    coeffs: &PumpCoefficients,
    basis: &PumpBasis<T>,
    grid: &Grid3D<T>,
    strict: bool,
) -> Result<Field<T>> {
    if coeffs.spatial.len() != basis.len_spatial()
        || coeffs.temporal.len() != basis.len_temporal()
    {
        return Err(Error::Config(format!(
            "coefficient lengths ({}, {}) do not match basis ({}, {})",
            coeffs.spatial.len(),
            coeffs.temporal.len(),
            basis.len_spatial(),
            basis.len_temporal()
        )));
    }
    let spatial_fields: Vec<Field<T>> = basis
        .spatial
        .iter()
        .map(|s| lg_mode(s, grid, strict))
        .collect::<Result<_>>()?;
    let spatial_terms: Vec<(Complex<T>, &Field<T>)> = coeffs
        .spatial
        .iter()
        .zip(spatial_fields.iter())
        .map(|(&(re, im), f)| (Complex::new(T::of(re), T::of(im)), f))
        .collect();
    let spatial = superpose(&spatial_terms)?;

    let temporal_fields: Vec<Field<T>> = basis
        .temporal
        .iter()
        .map(|s| temporal_mode(s, grid))
        .collect::<Result<_>>()?;
    let temporal_terms: Vec<(Complex<T>, &Field<T>)> = coeffs
        .temporal
        .iter()
        .zip(temporal_fields.iter())
        .map(|(&(re, im), f)| (Complex::new(T::of(re), T::of(im)), f))
        .collect();
    let temporal = superpose(&temporal_terms)?;

    compose(&spatial, &temporal).map(|f| f.with_carrier(Carrier::Pump))
}

/// A mode-selection problem: pick `target` among `signals`.
#[derive(Debug, Clone)]
pub struct OptProblem<T: Real> {
    pub target: usize,
    pub signals: Vec<ModeSpec<T>>,
    pub grid: Grid3D<T>,
    pub crystal: CrystalParams<T>,
    pub solver: SolverParams<T>,
    pub basis: PumpBasis<T>,
    pub detection: Detection<T>,
    /// Peak pump amplitude (arbitrary units; sqrt of the configured power).
    pub pump_amplitude: T,
    pub strict: bool,
}

impl<T: Real> OptProblem<T> {
    fn validate(&self) -> Result<()> {
        if self.signals.len() < 2 {
            return Err(Error::Config(
                "selection needs at least two signal modes".into(),
            ));
        }
        if self.target >= self.signals.len() {
            return Err(Error::Config(format!(
                "target index {} out of range for {} signals",
                self.target,
                self.signals.len()
            )));
        }
        for a in 0..self.signals.len() {
            for b in a + 1..self.signals.len() {
                if mode_specs_equal(&self.signals[a], &self.signals[b]) {
                    return Err(Error::Config(format!(
                        "signals {a} and {b} are identical"
                    )));
                }
            }
        }
        Ok(())
    }

    fn context(&self) -> MeasurementContext<'_, T> {
        MeasurementContext {
            grid: &self.grid,
            crystal: &self.crystal,
            solver: &self.solver,
            detection: &self.detection,
            pump_amplitude: self.pump_amplitude,
            strict: self.strict,
        }
    }

    /// Pre-build the signal fields once (scaled into the weak-probe regime);
    /// the optimizer reuses them on every evaluation.
    pub fn prepare(&self) -> Result<PreparedProblem<'_, T>> {
        self.validate()?;
        let mut signal_fields = self
            .signals
            .iter()
            .map(|s| s.field(&self.grid, self.strict))
            .collect::<Result<Vec<_>>>()?;
        self.context().scale_signal_set(&mut signal_fields)?;
        Ok(PreparedProblem {
            problem: self,
            signal_fields,
        })
    }
}

fn mode_specs_equal<T: Real>(a: &ModeSpec<T>, b: &ModeSpec<T>) -> bool {
    a.spatial_terms() == b.spatial_terms() && a.temporal_terms() == b.temporal_terms()
}

pub struct PreparedProblem<'a, T: Real> {
    pub problem: &'a OptProblem<T>,
    signal_fields: Vec<Field<T>>,
}

impl<T: Real> PreparedProblem<'_, T> {
    /// Objective: worst-pair selectivity of the target (dB), plus the full
    /// report.
    pub fn evaluate(&self, coeffs: &PumpCoefficients) -> Result<(f64, SelectivityReport)> {
        let p = self.problem;
        let ctx = p.context();
        let pump = ctx.scale_pump(build_pump(coeffs, &p.basis, &p.grid, p.strict)?)?;
        let mut counts = Vec::with_capacity(self.signal_fields.len());
        for (index, signal) in self.signal_fields.iter().enumerate() {
            let n = ctx
                .detected_counts(signal, &pump)
                .map_err(|e| Error::Signal {
                    index,
                    source: Box::new(e),
                })?;
            counts.push(n);
        }
        let counts = CountVector::new(counts)?;
        let report = SelectivityReport::from_counts(&counts, p.target)?;
        Ok((report.min_db, report))
    }
}

/// Random-walk loop hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptParams {
    pub iterations: usize,
    /// Gaussian perturbation scale per complex coefficient component.
    pub sigma: f64,
    /// RNG seed; there is deliberately no default.
    pub seed: u64,
    /// Non-improving iterations before σ halves.
    pub patience: usize,
    pub sigma_floor: f64,
}

impl OptParams {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            iterations: 500,
            sigma: 0.1,
            seed,
            patience: 25,
            sigma_floor: 1e-3,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be >= 1".into()));
        }
        if !(self.sigma > 0.0) || !(self.sigma_floor > 0.0) {
            return Err(Error::Config("sigma and sigma_floor must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best: PumpCoefficients,
    pub best_db: f64,
    /// Best-so-far objective after each iteration; length = iterations run.
    pub trace: Vec<f64>,
    pub accepted_moves: usize,
    pub report: SelectivityReport,
    /// Set if an objective evaluation failed mid-run and the walk aborted.
    pub error: Option<String>,
}

/// Greedy random walk over the pump coefficients: perturb everything with
/// Gaussian noise of scale σ, renormalize, keep the point iff the worst-pair
/// selectivity improves. σ halves after `patience` stagnant iterations,
/// never below the floor. Fully deterministic given the seed.
pub fn random_walk_optimize<T: Real>(
    problem: &OptProblem<T>,
    params: &OptParams,
    initial: Option<PumpCoefficients>,
) -> Result<OptimizationResult> {
    params.validate()?;
    let prepared = problem.prepare()?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(params.seed);
    let normal = Normal::new(0.0f64, 1.0).expect("unit normal");

    let mut best = match initial {
        Some(c) => {
            if c.spatial.len() != problem.basis.len_spatial()
                || c.temporal.len() != problem.basis.len_temporal()
            {
                return Err(Error::Config(
                    "initial coefficients do not match the pump basis".into(),
                ));
            }
            c
        }
        None => PumpCoefficients::uniform(
            problem.basis.len_spatial(),
            problem.basis.len_temporal(),
        )?,
    };
    let (mut best_db, mut best_report) = prepared.evaluate(&best)?;

    let mut sigma = params.sigma;
    let mut stagnant = 0usize;
    let mut accepted = 0usize;
    let mut trace = Vec::with_capacity(params.iterations);
    let mut error = None;

    for _ in 0..params.iterations {
        let mut candidate = best.clone();
        for (re, im) in candidate
            .spatial
            .iter_mut()
            .chain(candidate.temporal.iter_mut())
        {
            *re += sigma * normal.sample(&mut rng);
            *im += sigma * normal.sample(&mut rng);
        }
        let candidate = match PumpCoefficients::new(candidate.spatial, candidate.temporal) {
            Ok(c) => c,
            Err(_) => {
                // Renormalization can only fail on an exactly-zero draw;
                // count it as a stagnant iteration.
                trace.push(best_db);
                stagnant += 1;
                continue;
            }
        };
        debug_assert!(candidate.unit_norm());
        match prepared.evaluate(&candidate) {
            Ok((db, report)) => {
                if db > best_db {
                    best = candidate;
                    best_db = db;
                    best_report = report;
                    accepted += 1;
                    stagnant = 0;
                } else {
                    stagnant += 1;
                }
            }
            Err(e) => {
                error = Some(e.to_string());
                trace.push(best_db);
                break;
            }
        }
        trace.push(best_db);
        if stagnant >= params.patience {
            sigma = (sigma / 2.0).max(params.sigma_floor);
            stagnant = 0;
        }
    }

    Ok(OptimizationResult {
        best,
        best_db,
        trace,
        accepted_moves: accepted,
        report: best_report,
        error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crystal::CrystalSpec;
    use crate::grid::make_grid;
    use crate::modes::SpatialSpec;

    fn grid() -> Grid3D<f64> {
        make_grid(32, 32, 8, 600e-6, 600e-6, 4e-12).unwrap()
    }

    fn basis() -> PumpBasis<f64> {
        PumpBasis::lg_grid(-1, 1, 0, 42e-6, &[0], 0.3e-12, 0.0).unwrap()
    }

    fn lg_signal(l: i32) -> ModeSpec<f64> {
        ModeSpec::new(
            vec![(
                Complex::new(1.0, 0.0),
                SpatialSpec::Lg(LGSpec { l, p: 0, w: 45e-6 }),
            )],
            vec![(
                Complex::new(1.0, 0.0),
                TemporalSpec { tau0: 0.3e-12, t0: 0.0, order: 0 },
            )],
        )
        .unwrap()
    }

    fn problem(target: usize) -> OptProblem<f64> {
        OptProblem {
            target,
            signals: vec![lg_signal(1), lg_signal(-1)],
            grid: grid(),
            crystal: CrystalSpec::default().build().unwrap(),
            solver: SolverParams {
                tol: 1e-4,
                h0: 1e-3,
                ..Default::default()
            },
            basis: basis(),
            detection: Detection::from_waists(45e-6, 42e-6),
            pump_amplitude: 1.0,
            strict: false,
        }
    }

    #[test]
    fn single_element_pump_equals_compose() {
        let g = grid();
        let b = basis();
        let c = PumpCoefficients::concentrated(b.len_spatial(), b.len_temporal(), 0, 0).unwrap();
        let built = build_pump(&c, &b, &g, false).unwrap();
        let sp = lg_mode(&b.spatial[0], &g, false).unwrap();
        let t = temporal_mode(&b.temporal[0], &g).unwrap();
        let direct = compose(&sp, &t).unwrap();
        let tol = 1e-12 * direct.peak();
        for (a, d) in built.data().iter().zip(direct.data().iter()) {
            assert!((a - d).norm() < tol);
        }
    }

    #[test]
    fn global_phase_leaves_magnitude_unchanged() {
        let g = grid();
        let b = basis();
        let c = PumpCoefficients::uniform(b.len_spatial(), b.len_temporal()).unwrap();
        let phase = (0.4f64.cos(), 0.4f64.sin());
        let rotated = PumpCoefficients::new(
            c.spatial
                .iter()
                .map(|(re, im)| (re * phase.0 - im * phase.1, re * phase.1 + im * phase.0))
                .collect(),
            c.temporal.clone(),
        )
        .unwrap();
        let a = build_pump(&c, &b, &g, false).unwrap();
        let d = build_pump(&rotated, &b, &g, false).unwrap();
        let tol = 1e-12 * a.peak();
        for (x, y) in a.data().iter().zip(d.data().iter()) {
            assert!((x.norm() - y.norm()).abs() < tol);
        }
    }

    #[test]
    fn eighteen_mode_experiment_basis() {
        let b = PumpBasis::lg_grid(-5, 5, 1, 42e-6, &[0], 0.3e-12, 0.0).unwrap();
        assert_eq!(b.len_spatial(), 22);
        let g = make_grid(64, 64, 8, 1.4e-3, 1.4e-3, 4e-12).unwrap();
        let c = PumpCoefficients::uniform(b.len_spatial(), b.len_temporal()).unwrap();
        let pump = build_pump(&c, &b, &g, false).unwrap();
        assert!((pump.norm() - 1.0f64).abs() < 1e-12);
    }

    #[test]
    fn identical_signals_equal_counts() {
        // Two signals differing only by a global phase convert identically,
        // so every pairwise selectivity is 0 dB.
        let mut p = problem(0);
        p.signals = vec![lg_signal(1), lg_signal(-1)];
        let prepared = p.prepare().unwrap();
        // Symmetric pump (uniform over LG±1 and LG0) sees mirror-image
        // signals: counts match, objective 0 dB.
        let c = PumpCoefficients::uniform(3, 1).unwrap();
        let (db, report) = prepared.evaluate(&c).unwrap();
        assert!(db.abs() < 0.2, "objective {db}");
        assert_eq!(report.nbar.db.len(), 2);
    }

    #[test]
    fn degenerate_problems_rejected() {
        let mut p = problem(0);
        p.signals = vec![lg_signal(1)];
        assert!(p.prepare().is_err());
        let mut p = problem(5);
        p.target = 5;
        assert!(p.prepare().is_err());
        let mut p = problem(0);
        p.signals = vec![lg_signal(1), lg_signal(1)];
        assert!(p.prepare().is_err());
    }

    #[test]
    fn single_iteration_returns_initial_or_better() {
        let p = problem(0);
        let params = OptParams {
            iterations: 1,
            ..OptParams::with_seed(3)
        };
        let prepared = p.prepare().unwrap();
        let initial = PumpCoefficients::uniform(3, 1).unwrap();
        let (db0, _) = prepared.evaluate(&initial).unwrap();
        let r = random_walk_optimize(&p, &params, Some(initial)).unwrap();
        assert_eq!(r.trace.len(), 1);
        assert!(r.best_db >= db0);
    }

    #[test]
    fn seed_determinism() {
        let p = problem(0);
        let params = OptParams {
            iterations: 5,
            ..OptParams::with_seed(11)
        };
        let a = random_walk_optimize(&p, &params, None).unwrap();
        let b = random_walk_optimize(&p, &params, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn beats_brute_force_grid() {
        // Two-signal OAM problem over a two-element pump basis. A 21×21
        // brute-force grid over the second coefficient's re/im parts (first
        // held at 1) bounds what any point with both components active can
        // reach; the walk must match or beat its best point within 1 dB,
        // and the optimum concentrates weight on the conjugate of the
        // target's OAM.
        let mut p = problem(0);
        p.basis = PumpBasis::lg_grid(1, 1, 0, 42e-6, &[0], 0.3e-12, 0.0).unwrap();
        p.basis.spatial.push(LGSpec { l: -1, p: 0, w: 42e-6 });
        assert_eq!(p.basis.spatial.len(), 2);
        // The azimuthal selection rule does not depend on crystal length or
        // step accuracy, so a short crystal and coarse tolerance keep the
        // 441-point grid affordable.
        p.crystal = CrystalSpec {
            length_m: 2e-3,
            ..CrystalSpec::default()
        }
        .build()
        .unwrap();
        p.solver = SolverParams {
            tol: 1e-2,
            h0: 1e-3,
            h_max: 1e-3,
            ..Default::default()
        };
        let prepared = p.prepare().unwrap();

        let mut grid_best = f64::NEG_INFINITY;
        for ix in 0..21 {
            for iy in 0..21 {
                let x = -1.0 + 0.1 * ix as f64;
                let y = -1.0 + 0.1 * iy as f64;
                let c = PumpCoefficients::new(
                    vec![(1.0, 0.0), (x, y)],
                    vec![(1.0, 0.0)],
                )
                .unwrap();
                let (db, _) = prepared.evaluate(&c).unwrap();
                grid_best = grid_best.max(db);
            }
        }

        let params = OptParams {
            iterations: 80,
            ..OptParams::with_seed(2)
        };
        let r = random_walk_optimize(&p, &params, None).unwrap();
        assert!(
            r.best_db >= grid_best - 1.0,
            "optimizer {} dB vs grid best {} dB",
            r.best_db,
            grid_best
        );
        // Target is the LG l=+1 signal; the conjugate pump component is the
        // second basis element (l = -1).
        let w_plus = r.best.spatial[0].0.powi(2) + r.best.spatial[0].1.powi(2);
        let w_minus = r.best.spatial[1].0.powi(2) + r.best.spatial[1].1.powi(2);
        assert!(
            w_minus > 0.8 && w_minus > w_plus,
            "weights: +1 {w_plus}, -1 {w_minus}"
        );
    }

    #[test]
    fn running_best_monotone() {
        let p = problem(0);
        let params = OptParams {
            iterations: 12,
            ..OptParams::with_seed(5)
        };
        let r = random_walk_optimize(&p, &params, None).unwrap();
        for w in r.trace.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert!(r.best.unit_norm());
    }
}
