//! Randomized invariants that must hold across modules: transform unitarity,
//! CSV round trips, superposition linearity, and coefficient renormalization.

use ndarray::{ArrayD, IxDyn};
use num_complex::Complex;
use proptest::prelude::*;

use stsfg::fft::{transform, Direction};
use stsfg::field::{write_temporal_csv, Field, Rank};
use stsfg::grid::make_grid;
use stsfg::metrics::{normalized_counts, CountVector};
use stsfg::pumpopt::PumpCoefficients;

fn temporal_field(values: &[(f64, f64)]) -> Field<f64> {
    let nt = values.len();
    let grid = make_grid(8, 8, nt, 1e-4, 1e-4, 4e-12).unwrap();
    let data = ArrayD::from_shape_vec(
        IxDyn(&[nt]),
        values.iter().map(|&(re, im)| Complex::new(re, im)).collect(),
    )
    .unwrap();
    Field::new(grid, Rank::Temporal1D, data).unwrap()
}

proptest! {
    /// The spectral transforms preserve the L2 norm and invert exactly
    /// (to rounding) for arbitrary data, not just smooth modes.
    #[test]
    fn transform_is_unitary(values in prop::collection::vec((-1e3..1e3f64, -1e3..1e3f64), 512)) {
        prop_assume!(values.iter().any(|&(re, im)| re != 0.0 || im != 0.0));
        let grid = make_grid(8, 8, 8, 1e-4, 1e-4, 4e-12).unwrap();
        let data = ArrayD::from_shape_vec(
            IxDyn(&[8, 8, 8]),
            values.iter().map(|&(re, im)| Complex::new(re, im)).collect(),
        )
        .unwrap();
        let f = Field::new(grid, Rank::SpatioTemporal3D, data).unwrap();
        let fw = transform(&f, Direction::Forward).unwrap();
        prop_assert!((fw.norm() - f.norm()).abs() <= 1e-12 * f.norm());
        let back = transform(&fw, Direction::Inverse).unwrap();
        let peak = f.peak();
        for (a, b) in f.data().iter().zip(back.data().iter()) {
            prop_assert!((a - b).norm() <= 1e-12 * peak);
        }
    }

    /// The CSV serialization uses shortest-round-trip formatting, so parsing
    /// the text back reproduces the binary samples exactly.
    #[test]
    fn temporal_csv_round_trips(values in prop::collection::vec((-1e6..1e6f64, -1e6..1e6f64), 8)) {
        let f = temporal_field(&values);
        let mut buf = Vec::new();
        write_temporal_csv(&mut buf, &f.grid, f.data().view().into_dimensionality().unwrap())
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        prop_assert_eq!(lines.next(), Some("t,re,im"));
        for (k, line) in lines.enumerate() {
            let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            prop_assert_eq!(cols.len(), 3);
            prop_assert_eq!(cols[0], f.grid.t(k));
            prop_assert_eq!(cols[1], values[k].0);
            prop_assert_eq!(cols[2], values[k].1);
        }
    }

    /// Renormalized coefficient vectors always land on the unit sphere, and
    /// renormalizing twice is idempotent.
    #[test]
    fn renorm_is_a_projection(
        spatial in prop::collection::vec((-1e3..1e3f64, -1e3..1e3f64), 1..6),
        temporal in prop::collection::vec((-1e3..1e3f64, -1e3..1e3f64), 1..4),
    ) {
        let norm2 = |v: &[(f64, f64)]| v.iter().map(|(re, im)| re * re + im * im).sum::<f64>();
        prop_assume!(norm2(&spatial) > 1e-12 && norm2(&temporal) > 1e-12);
        let c = PumpCoefficients::new(spatial, temporal).unwrap();
        prop_assert!((norm2(&c.spatial) - 1.0).abs() < 1e-9);
        prop_assert!((norm2(&c.temporal) - 1.0).abs() < 1e-9);
        let again = PumpCoefficients::new(c.spatial.clone(), c.temporal.clone()).unwrap();
        for (a, b) in c.spatial.iter().zip(again.spatial.iter()) {
            prop_assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        }
    }

    /// Normalized counts are equivariant under permutations of the modes.
    #[test]
    fn normalized_counts_permutation_equivariant(
        counts in prop::collection::vec(1e-6..1e6f64, 2..8),
        rot in 0usize..8,
    ) {
        let n = counts.len();
        let rot = rot % n;
        let mut rotated = counts.clone();
        rotated.rotate_left(rot);
        let a = normalized_counts(&CountVector::new(counts).unwrap());
        let b = normalized_counts(&CountVector::new(rotated).unwrap());
        for i in 0..n {
            prop_assert!((a.db[(i + rot) % n] - b.db[i]).abs() < 1e-12);
        }
    }
}
