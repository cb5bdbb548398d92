use crate::error::{Error, Result};
use crate::operators::SpaceDims;

/// Which operator the drive term couples to.
///
/// `Cavity` is the physical configuration: the laser drives the cavity mode
/// with amplitude sqrt(kappa)*J*(a + a†). `Qubit` is a validation-only mode
/// in which `drive_j` is reinterpreted as a direct Rabi rate Omega_direct in
/// GHz and the drive term becomes Omega_direct/2*(σ₊ + σ₋); it exists to
/// compare against the analytic Mollow spectrum of a bare two-level system
/// and is excluded from all reproduction runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriveTarget {
    Cavity,
    Qubit,
}

/// Physical parameters of the driven dot-cavity system.
///
/// Every rate and detuning is an ordinary frequency in GHz (the value of
/// X/2π); time is in ns. `drive_j` carries GHz^(1/2) units in cavity mode so
/// that sqrt(kappa)*J is a frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Cavity-laser detuning Δc = ωc - ωL.
    pub delta_c: f64,
    /// Dot-laser detuning Δx = ωx - ωL.
    pub delta_x: f64,
    /// Dot-cavity coupling strength.
    pub g: f64,
    /// Cavity energy decay rate.
    pub kappa: f64,
    /// Dot spontaneous emission rate.
    pub gamma: f64,
    /// Pure dephasing rate.
    pub gamma_d: f64,
    /// Phonon rate on the a†σ₋ channel (photon created, exciton destroyed).
    pub gamma_ph_ads: f64,
    /// Phonon rate on the aσ₊ channel (photon destroyed, exciton created).
    pub gamma_ph_asp: f64,
    /// Drive amplitude J (GHz^(1/2) in cavity mode; GHz in qubit mode).
    pub drive_j: f64,
    pub drive_target: DriveTarget,
    /// Fock truncation of the cavity mode.
    pub fock_dim: usize,
}

impl SystemParams {
    /// Nominal device parameters used throughout tests and presets, with the
    /// drive off and the laser on the dot resonance (Δx = 0).
    pub fn nominal() -> Self {
        SystemParams {
            delta_c: 42.0,
            delta_x: 0.0,
            g: 15.3,
            kappa: 36.0,
            gamma: 0.16,
            gamma_d: 1.0,
            gamma_ph_ads: 0.19,
            gamma_ph_asp: 0.28,
            drive_j: 0.0,
            drive_target: DriveTarget::Cavity,
            fock_dim: 10,
        }
    }

    /// Dot-cavity detuning Δcx = Δc - Δx.
    pub fn delta_cx(&self) -> f64 {
        self.delta_c - self.delta_x
    }

    pub fn dims(&self) -> Result<SpaceDims> {
        SpaceDims::new(self.fock_dim)
    }

    pub fn with_drive(&self, drive_j: f64) -> Self {
        SystemParams { drive_j, ..self.clone() }
    }

    pub fn with_fock_dim(&self, fock_dim: usize) -> Self {
        SystemParams { fock_dim, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.delta_c,
            self.delta_x,
            self.g,
            self.kappa,
            self.gamma,
            self.gamma_d,
            self.gamma_ph_ads,
            self.gamma_ph_asp,
            self.drive_j,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        let rates = [
            ("g", self.g),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("gamma_d", self.gamma_d),
            ("gamma_ph_ads", self.gamma_ph_ads),
            ("gamma_ph_asp", self.gamma_ph_asp),
            ("drive_j", self.drive_j),
        ];
        for (name, v) in rates {
            if v < 0.0 {
                return Err(Error::InvalidParams(format!("{name} = {v} must be >= 0")));
            }
        }
        if self.fock_dim < 2 {
            return Err(Error::InvalidParams(format!(
                "fock_dim = {} must be >= 2",
                self.fock_dim
            )));
        }
        Ok(())
    }
}

/// Vacuum Rabi splitting 2*sqrt(g² - (κ/4)²) of the strongly coupled
/// dot-cavity doublet, in GHz. Returns 0 in the overdamped regime g <= κ/4.
pub fn vacuum_rabi_splitting(g: f64, kappa: f64) -> f64 {
    let disc = g * g - (kappa / 4.0) * (kappa / 4.0);
    if disc > 0.0 {
        2.0 * disc.sqrt()
    } else {
        0.0
    }
}

/// Linear power-to-drive map J = sqrt(eta * power), for axis labeling only.
/// The conversion efficiency eta is not measured; sweeps are parameterized by
/// J directly and Rabi frequencies are read off the simulated spectra.
pub fn drive_from_power(power: f64, eta: f64) -> f64 {
    (eta * power).max(0.0).sqrt()
}
