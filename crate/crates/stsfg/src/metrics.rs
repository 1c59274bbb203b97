//! Normalized SF photon numbers, selectivity, crosstalk (tomography)
//! matrices, visibility, and the collection-mode detection model.
//!
//! Detected counts are classical: the SF envelope is projected onto a
//! fundamental Gaussian collection mode (the single-mode-fiber equivalent)
//! slice by slice in time, and the projected power is integrated over the
//! time axis. Absolute scale always cancels in the normalization.

use crate::crystal::CrystalParams;
use crate::error::{Error, Result};
use crate::field::{Field, Rank};
use crate::grid::Grid3D;
use crate::modes::{lg_mode, LGSpec, ModeSpec};
use crate::propagation::{propagate, SolverParams};
use crate::real::Real;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

/// Floor used instead of -inf when serializing a zero count, dB.
pub const DB_FLOOR: f64 = -99.0;

/// Signals are weak probes: their common peak amplitude is pinned three
/// decades below the pump peak so that pump depletion and probe back-action
/// stay negligible at any grid resolution. Count ratios are invariant under
/// this choice because the SF output is linear in the signal there.
pub const SIGNAL_PROBE_RATIO: f64 = 1e-3;

/// Collection-side parameters of the detection model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection<T: Real> {
    /// Waist of the fundamental Gaussian collection mode, meters.
    pub collection_waist: T,
}

impl<T: Real> Detection<T> {
    /// Waist of the SF mode generated by two overlapping fundamental
    /// Gaussians: 1/w² = 1/w_s² + 1/w_p².
    pub fn from_waists(w_signal: T, w_pump: T) -> Self {
        let inv = T::one() / (w_signal * w_signal) + T::one() / (w_pump * w_pump);
        Self {
            collection_waist: T::one() / inv.sqrt(),
        }
    }
}

/// Flux of a 3D field captured by the fundamental collection mode.
pub fn collected_flux<T: Real>(sf: &Field<T>, detection: &Detection<T>) -> Result<T> {
    if sf.rank != Rank::SpatioTemporal3D {
        return Err(Error::Shape("collected_flux expects a 3D field".into()));
    }
    let grid = sf.grid;
    let mode = lg_mode(
        &LGSpec {
            l: 0,
            p: 0,
            w: detection.collection_waist,
        },
        &grid,
        false,
    )?;
    let g = mode.as_spatial();
    let data = sf.as_full();
    let area = grid.cell_area();
    let mut total = T::zero();
    for k in 0..grid.nt {
        let mut proj = Complex::new(T::zero(), T::zero());
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                proj = proj + g[[i, j]].conj() * data[[i, j, k]];
            }
        }
        let amp = proj.norm_sqr() * area * area;
        total = total + amp;
    }
    Ok(total * grid.dt)
}

/// Nonnegative SF fluxes, one per signal mode.
#[derive(Debug, Clone, PartialEq)]
pub struct CountVector<T: Real>(Vec<T>);

impl<T: Real> CountVector<T> {
    pub fn new(counts: Vec<T>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Degenerate("empty count vector".into()));
        }
        if counts.iter().any(|c| !(*c >= T::zero()) || !c.is_finite()) {
            return Err(Error::Degenerate(
                "counts must be finite and nonnegative".into(),
            ));
        }
        if counts.iter().all(|c| *c == T::zero()) {
            return Err(Error::Degenerate("all counts are zero".into()));
        }
        Ok(Self(counts))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }
}

/// Normalized counts in dB with zero-count flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NBar {
    pub db: Vec<f64>,
    /// True where the raw count was exactly zero and the dB value is the
    /// serialization floor rather than -inf.
    pub floored: Vec<bool>,
}

impl NBar {
    /// Sum of 10^(dB/10) over the entries, skipping floored ones (their
    /// true contribution is zero).
    pub fn row_sum(&self) -> f64 {
        self.db
            .iter()
            .zip(&self.floored)
            .filter(|(_, f)| !**f)
            .map(|(d, _)| 10f64.powf(d / 10.0))
            .sum()
    }
}

/// Normalized SF photon number: N̄_i = 10·log10(N_i / ΣN).
pub fn normalized_counts<T: Real>(counts: &CountVector<T>) -> NBar {
    let total: f64 = counts.0.iter().map(|c| c.as_f64()).sum();
    let mut db = Vec::with_capacity(counts.0.len());
    let mut floored = Vec::with_capacity(counts.0.len());
    for c in &counts.0 {
        let c = c.as_f64();
        if c == 0.0 {
            db.push(DB_FLOOR);
            floored.push(true);
        } else {
            db.push(10.0 * (c / total).log10());
            floored.push(false);
        }
    }
    NBar { db, floored }
}

/// Selectivity η = N̄_i − N̄_j, dB.
pub fn selectivity(nbar: &NBar, i: usize, j: usize) -> Result<f64> {
    let n = nbar.db.len();
    if i >= n || j >= n {
        return Err(Error::Degenerate(format!(
            "selectivity index out of range: ({i}, {j}) for {n} modes"
        )));
    }
    if i == j {
        return Err(Error::Degenerate(
            "selectivity of a mode against itself is trivially 0".into(),
        ));
    }
    Ok(nbar.db[i] - nbar.db[j])
}

/// Full per-run selectivity report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectivityReport {
    pub nbar: NBar,
    pub target: usize,
    /// η(target, j) for every j, with 0 at the target slot.
    pub pairwise_db: Vec<f64>,
    /// Worst-case selectivity: min over j != target of η(target, j).
    pub min_db: f64,
    pub seed: Option<u64>,
    pub config_digest: Option<String>,
}

impl SelectivityReport {
    pub fn from_counts<T: Real>(counts: &CountVector<T>, target: usize) -> Result<Self> {
        let nbar = normalized_counts(counts);
        if target >= nbar.db.len() {
            return Err(Error::Degenerate(format!(
                "target index {target} out of range for {} modes",
                nbar.db.len()
            )));
        }
        let mut pairwise = Vec::with_capacity(nbar.db.len());
        let mut min_db = f64::INFINITY;
        for j in 0..nbar.db.len() {
            if j == target {
                pairwise.push(0.0);
            } else {
                let eta = selectivity(&nbar, target, j)?;
                min_db = min_db.min(eta);
                pairwise.push(eta);
            }
        }
        Ok(Self {
            nbar,
            target,
            pairwise_db: pairwise,
            min_db,
            seed: None,
            config_digest: None,
        })
    }
}

/// Row-normalized crosstalk matrix: rows are pumps, columns are signals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyMatrix {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    /// One [`NBar`] per pump row.
    pub rows: Vec<NBar>,
}

impl TomographyMatrix {
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W, full_precision: bool) -> std::io::Result<()> {
        write!(out, "pump")?;
        for c in &self.col_labels {
            write!(out, ",{c}")?;
        }
        writeln!(out)?;
        for (label, row) in self.row_labels.iter().zip(&self.rows) {
            write!(out, "{label}")?;
            for v in &row.db {
                if full_precision {
                    write!(out, ",{v}")?;
                } else {
                    write!(out, ",{v:.2}")?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Everything needed to turn a (signal, pump) pair into detected counts.
pub struct MeasurementContext<'a, T: Real> {
    pub grid: &'a Grid3D<T>,
    pub crystal: &'a CrystalParams<T>,
    pub solver: &'a SolverParams<T>,
    pub detection: &'a Detection<T>,
    /// Peak amplitude applied to the unit-normalized pump field.
    pub pump_amplitude: T,
    pub strict: bool,
}

impl<T: Real> MeasurementContext<'_, T> {
    /// Scale a unit-normalized pump so its peak amplitude matches the
    /// configured drive level.
    pub fn scale_pump(&self, pump: Field<T>) -> Result<Field<T>> {
        let peak = pump.peak();
        if !(peak > T::zero()) {
            return Err(Error::Degenerate("pump field is identically zero".into()));
        }
        Ok(pump.scaled(Complex::new(self.pump_amplitude / peak, T::zero())))
    }

    /// Rescale a set of equal-flux (unit-norm) signal fields by one common
    /// factor so the strongest peak sits [`SIGNAL_PROBE_RATIO`] below the
    /// pump peak. The shared factor keeps the incident photon numbers equal
    /// across the set while holding the solver in the weak-probe regime.
    pub fn scale_signal_set(&self, fields: &mut [Field<T>]) -> Result<()> {
        let max_peak = fields
            .iter()
            .map(|f| f.peak())
            .fold(T::zero(), T::max);
        if !(max_peak > T::zero()) {
            return Err(Error::Degenerate("all signal fields are zero".into()));
        }
        let factor = Complex::new(
            self.pump_amplitude * T::of(SIGNAL_PROBE_RATIO) / max_peak,
            T::zero(),
        );
        for f in fields.iter_mut() {
            f.data_mut().mapv_inplace(|c| c * factor);
        }
        Ok(())
    }

    /// Propagate one signal under one (already scaled) pump and return the
    /// detected SF counts.
    pub fn detected_counts(&self, signal: &Field<T>, pump: &Field<T>) -> Result<T> {
        let run = propagate(signal, pump, self.crystal, self.solver)?;
        collected_flux(&run.sf, self.detection)
    }
}

/// Propagate every (pump row, signal column) pair and row-normalize.
pub fn tomography_matrix<T: Real>(
    ctx: &MeasurementContext<'_, T>,
    signals: &[(String, ModeSpec<T>)],
    pumps: &[(String, Field<T>)],
) -> Result<TomographyMatrix> {
    if signals.is_empty() || pumps.is_empty() {
        return Err(Error::Degenerate(
            "tomography needs at least one signal and one pump".into(),
        ));
    }
    let mut signal_fields: Vec<Field<T>> = signals
        .iter()
        .map(|(_, spec)| spec.field(ctx.grid, ctx.strict))
        .collect::<Result<_>>()?;
    ctx.scale_signal_set(&mut signal_fields)?;

    let mut rows = Vec::with_capacity(pumps.len());
    for (row, (_, pump)) in pumps.iter().enumerate() {
        let pump = ctx.scale_pump(pump.clone())?;
        let mut counts = Vec::with_capacity(signal_fields.len());
        for (col, signal) in signal_fields.iter().enumerate() {
            let n = ctx
                .detected_counts(signal, &pump)
                .map_err(|e| Error::Cell {
                    row,
                    col,
                    source: Box::new(e),
                })?;
            counts.push(n);
        }
        let counts = CountVector::new(counts).map_err(|e| Error::Cell {
            row,
            col: 0,
            source: Box::new(e),
        })?;
        rows.push(normalized_counts(&counts));
    }
    Ok(TomographyMatrix {
        row_labels: pumps.iter().map(|(l, _)| l.clone()).collect(),
        col_labels: signals.iter().map(|(l, _)| l.clone()).collect(),
        rows,
    })
}

/// Fringe visibility V = (C_max − C_min)/(C_max + C_min).
pub fn visibility<T: Real>(samples: &[(T, T)]) -> Result<T> {
    if samples.len() < 2 {
        return Err(Error::Degenerate(
            "visibility needs at least two samples".into(),
        ));
    }
    if samples.iter().any(|(_, c)| !(*c >= T::zero())) {
        return Err(Error::Degenerate("counts must be nonnegative".into()));
    }
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for (_, c) in samples {
        lo = lo.min(*c);
        hi = hi.max(*c);
    }
    if hi == T::zero() {
        return Err(Error::Degenerate("all counts are zero".into()));
    }
    Ok((hi - lo) / (hi + lo))
}

/// Optional Poisson sampling of classical fluxes, for realism studies.
/// Mean per mode = flux × incident photon number; off by default everywhere.
pub fn poisson_counts<T: Real>(fluxes: &[T], incident_photons: f64, seed: u64) -> Vec<u64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    fluxes
        .iter()
        .map(|f| {
            let mean = f.as_f64() * incident_photons;
            if mean <= 0.0 {
                return 0;
            }
            // Knuth sampling; means here are modest.
            let limit = (-mean).exp();
            let mut k = 0u64;
            let mut prod = 1.0f64;
            loop {
                prod *= rng.gen::<f64>();
                if prod <= limit {
                    return k;
                }
                k += 1;
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(v: &[f64]) -> CountVector<f64> {
        CountVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn uniform_counts() {
        let n = normalized_counts(&cv(&[1.0, 1.0, 1.0, 1.0]));
        for d in &n.db {
            assert!((d - 10.0 * (0.25f64).log10()).abs() < 1e-12);
            assert!((d + 6.0206).abs() < 1e-3);
        }
    }

    #[test]
    fn nine_to_one() {
        let n = normalized_counts(&cv(&[9.0, 1.0]));
        assert!((n.db[0] + 0.458).abs() < 1e-3);
        assert!((n.db[1] + 10.0).abs() < 1e-9);
        assert!((selectivity(&n, 0, 1).unwrap() - 9.542).abs() < 1e-3);
    }

    #[test]
    fn scale_invariance() {
        let a = normalized_counts(&cv(&[2.0, 3.0, 5.0]));
        let b = normalized_counts(&cv(&[14.0, 21.0, 35.0]));
        for (x, y) in a.db.iter().zip(b.db.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_count_floors() {
        let n = normalized_counts(&cv(&[1.0, 0.0]));
        assert_eq!(n.db[1], DB_FLOOR);
        assert!(n.floored[1]);
        assert!(!n.floored[0]);
        assert!((n.row_sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_zero_rejected() {
        assert!(CountVector::new(vec![0.0, 0.0]).is_err());
        assert!(CountVector::new(vec![-1.0, 2.0]).is_err());
    }

    #[test]
    fn selectivity_antisymmetric() {
        let n = normalized_counts(&cv(&[3.0, 7.0, 11.0]));
        let a = selectivity(&n, 0, 1).unwrap();
        let b = selectivity(&n, 1, 0).unwrap();
        assert!((a + b).abs() < 1e-12);
        assert!(selectivity(&n, 0, 0).is_err());
        assert!(selectivity(&n, 0, 9).is_err());
    }

    #[test]
    fn row_sum_identity() {
        let n = normalized_counts(&cv(&[0.3, 1.9, 4.2, 0.01]));
        assert!((n.row_sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn visibility_edge_cases() {
        let flat: Vec<(f64, f64)> = vec![(0.0, 5.0), (1.0, 5.0)];
        assert_eq!(visibility(&flat).unwrap(), 0.0);
        let extinct: Vec<(f64, f64)> = vec![(0.0, 0.0), (1.0, 3.0)];
        assert_eq!(visibility(&extinct).unwrap(), 1.0);
        let zeros: Vec<(f64, f64)> = vec![(0.0, 0.0), (1.0, 0.0)];
        assert!(visibility(&zeros).is_err());
    }

    #[test]
    fn malus_law_visibility() {
        let samples: Vec<(f64, f64)> = (0..=18)
            .map(|k| {
                let theta = (k as f64) * 10.0f64.to_radians();
                (theta, 117.0 * theta.cos().powi(2) + 1.0)
            })
            .collect();
        let v = visibility(&samples).unwrap();
        assert!((v - 117.0 / 119.0).abs() < 1e-12);
        assert!((v - 0.983).abs() < 5e-4);
    }

    #[test]
    fn single_entry_matrix_is_zero_db() {
        let n = normalized_counts(&cv(&[42.0]));
        assert_eq!(n.db[0], 0.0);
    }

    #[test]
    fn poisson_deterministic_and_mean_like() {
        let a = poisson_counts(&[0.5f64, 0.0], 100.0, 7);
        let b = poisson_counts(&[0.5f64, 0.0], 100.0, 7);
        assert_eq!(a, b);
        assert_eq!(a[1], 0);
        assert!(a[0] > 20 && a[0] < 90);
    }
}
