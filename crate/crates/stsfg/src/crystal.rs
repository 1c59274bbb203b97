//! Quasi-phase-matched χ² crystal parameters.

use crate::error::{Error, Result};
use crate::real::Real;

/// Speed of light in vacuum, m/s.
pub const C0: f64 = 299_792_458.0;

/// Constants of the three coupled envelope equations.
///
/// First-order quasi-phase matching is folded into a single effective
/// mismatch Δk = k_s + k_p - k_f - 2π/Λ and an effective χ; the µm-scale
/// poling itself is never resolved on the z grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrystalParams<T: Real> {
    /// Effective second-order nonlinear coupling. Field amplitudes are in
    /// arbitrary units, so χ is calibrated by regime (undepleted vs
    /// depleted), not by an absolute conversion efficiency.
    pub chi: T,
    /// Poling period Λ, meters.
    pub poling_period: T,
    /// Crystal length L, meters.
    pub length: T,
    pub n_s: T,
    pub n_p: T,
    pub n_f: T,
    /// Inverse group velocities, s/m.
    pub beta_s: T,
    pub beta_p: T,
    pub beta_f: T,
    /// Angular carrier frequencies, rad/s. ω_f = ω_s + ω_p by construction.
    pub omega_s: T,
    pub omega_p: T,
    pub omega_f: T,
}

/// Builder-style description in lab units.
#[derive(Debug, Clone, Copy)]
pub struct CrystalSpec {
    pub chi: f64,
    pub poling_period_m: f64,
    pub length_m: f64,
    pub signal_wavelength_m: f64,
    pub pump_wavelength_m: f64,
    pub n_signal: f64,
    pub n_pump: f64,
    /// SF-band refractive index; when `None` it is solved so that Δk = 0.
    pub n_sf: Option<f64>,
    pub group_index_signal: f64,
    pub group_index_pump: f64,
    pub group_index_sf: f64,
}

impl Default for CrystalSpec {
    /// MgO:PPLN-like defaults: 1558 nm signal, 1545 nm pump, Λ = 19.36 µm,
    /// L = 10 mm, with n_sf solved for perfect phase matching. The group
    /// indices are artifact choices giving a sub-picosecond walk-off over
    /// the crystal.
    fn default() -> Self {
        Self {
            chi: 1e-7,
            poling_period_m: 19.36e-6,
            length_m: 10e-3,
            signal_wavelength_m: 1558e-9,
            pump_wavelength_m: 1545e-9,
            n_signal: 2.14,
            n_pump: 2.14,
            n_sf: None,
            group_index_signal: 2.19,
            group_index_pump: 2.20,
            group_index_sf: 2.23,
        }
    }
}

impl CrystalSpec {
    pub fn build<T: Real>(&self) -> Result<CrystalParams<T>> {
        for (name, v) in [
            ("chi", self.chi),
            ("poling_period_m", self.poling_period_m),
            ("length_m", self.length_m),
            ("signal_wavelength_m", self.signal_wavelength_m),
            ("pump_wavelength_m", self.pump_wavelength_m),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("n_signal", self.n_signal),
            ("n_pump", self.n_pump),
            ("group_index_signal", self.group_index_signal),
            ("group_index_pump", self.group_index_pump),
            ("group_index_sf", self.group_index_sf),
        ] {
            if !(v >= 1.0) {
                return Err(Error::Config(format!("{name} must be >= 1, got {v}")));
            }
        }
        let two_pi = std::f64::consts::TAU;
        let omega_s = two_pi * C0 / self.signal_wavelength_m;
        let omega_p = two_pi * C0 / self.pump_wavelength_m;
        let omega_f = omega_s + omega_p;
        let k_s = self.n_signal * omega_s / C0;
        let k_p = self.n_pump * omega_p / C0;
        let grating = two_pi / self.poling_period_m;
        let n_f = match self.n_sf {
            Some(n) => {
                if n < 1.0 {
                    return Err(Error::Config(format!("n_sf must be >= 1, got {n}")));
                }
                n
            }
            // Solve k_f = k_s + k_p - 2π/Λ so the process is phase matched.
            None => (k_s + k_p - grating) * C0 / omega_f,
        };
        if n_f < 1.0 {
            return Err(Error::Config(format!(
                "phase-matched n_sf solves to {n_f}, below 1; check Λ and indices"
            )));
        }
        Ok(CrystalParams {
            chi: T::of(self.chi),
            poling_period: T::of(self.poling_period_m),
            length: T::of(self.length_m),
            n_s: T::of(self.n_signal),
            n_p: T::of(self.n_pump),
            n_f: T::of(n_f),
            beta_s: T::of(self.group_index_signal / C0),
            beta_p: T::of(self.group_index_pump / C0),
            beta_f: T::of(self.group_index_sf / C0),
            omega_s: T::of(omega_s),
            omega_p: T::of(omega_p),
            omega_f: T::of(omega_f),
        })
    }
}

impl<T: Real> CrystalParams<T> {
    pub fn k_s(&self) -> T {
        self.n_s * self.omega_s / T::of(C0)
    }

    pub fn k_p(&self) -> T {
        self.n_p * self.omega_p / T::of(C0)
    }

    pub fn k_f(&self) -> T {
        self.n_f * self.omega_f / T::of(C0)
    }

    /// Effective momentum mismatch including the first-order grating vector.
    pub fn delta_k(&self) -> T {
        self.k_s() + self.k_p() - self.k_f() - T::TAU() / self.poling_period
    }

    /// Nonlinear coupling rate γ_i = ω_i χ / (n_i c) of field `i`.
    pub fn gamma_s(&self) -> T {
        self.omega_s * self.chi / (self.n_s * T::of(C0))
    }

    pub fn gamma_p(&self) -> T {
        self.omega_p * self.chi / (self.n_p * T::of(C0))
    }

    pub fn gamma_f(&self) -> T {
        self.omega_f * self.chi / (self.n_f * T::of(C0))
    }

    /// Photon-flux weight n_i/ω_i: N_i = (n_i/ω_i)·‖Ψ_i‖² is the conserved
    /// Manley-Rowe flux of the coupled equations (relative units).
    pub fn flux_weight_s(&self) -> T {
        self.n_s / self.omega_s
    }

    pub fn flux_weight_p(&self) -> T {
        self.n_p / self.omega_p
    }

    pub fn flux_weight_f(&self) -> T {
        self.n_f / self.omega_f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_phase_matched() {
        let c: CrystalParams<f64> = CrystalSpec::default().build().unwrap();
        assert!(c.delta_k().abs() < 1e-6 * c.k_f());
        assert!((c.omega_f - (c.omega_s + c.omega_p)).abs() < 1.0);
    }

    #[test]
    fn explicit_n_sf_gives_mismatch() {
        let spec = CrystalSpec {
            n_sf: Some(2.2),
            ..CrystalSpec::default()
        };
        let c: CrystalParams<f64> = spec.build().unwrap();
        assert!(c.delta_k().abs() > 1.0);
    }

    #[test]
    fn rejects_bad_values() {
        let spec = CrystalSpec {
            length_m: 0.0,
            ..CrystalSpec::default()
        };
        assert!(spec.build::<f64>().is_err());
        let spec = CrystalSpec {
            n_signal: 0.5,
            ..CrystalSpec::default()
        };
        assert!(spec.build::<f64>().is_err());
    }
}
