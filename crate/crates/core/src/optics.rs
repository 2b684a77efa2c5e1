//! Planar gain slab mapped onto the barrier problem.
//!
//! Lengths are carried internally in nm: `L` is converted from μm, and gain
//! and attenuation coefficients from cm⁻¹ to nm⁻¹. The slab occupies
//! `-L/2 < z < L/2`, mapped to `x = z/L + 1/2`, and the pumped face is
//! `z = -L/2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::finder::{first_order_singularity, SingularityResult};
use crate::perturbation::QuadOptions;
use crate::potential::{pumping_profile, GainProfile, PotentialSpec, Pumping, RegularPotential};
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// cm⁻¹ to nm⁻¹.
pub const PER_CM_TO_PER_NM: f64 = 1e-7;
/// μm to nm.
pub const UM_TO_NM: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlabMedium {
    /// Refractive index of the undoped host.
    pub n0: f64,
    #[serde(rename = "L_um")]
    pub l_um: f64,
    pub lambda0_nm: f64,
    /// Damping `gamma / omega_0` of the two-level resonance.
    pub gamma_hat: f64,
    /// Attenuation coefficient, also the largest admissible `g0`.
    pub alpha_per_cm: f64,
    #[serde(default)]
    pub nu: f64,
    #[serde(default = "default_pumping")]
    pub pumping: Pumping,
}

fn default_pumping() -> Pumping {
    Pumping::Single
}

impl SlabMedium {
    /// The semiconductor sample used for the threshold table.
    pub fn reference() -> Self {
        Self {
            n0: 3.4,
            l_um: 300.0,
            lambda0_nm: 1500.0,
            gamma_hat: 0.02,
            alpha_per_cm: 200.0,
            nu: 0.0,
            pumping: Pumping::Single,
        }
    }

    pub fn with_pumping(self, pumping: Pumping, nu: f64) -> Self {
        Self { pumping, nu, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.n0 > 1.0 && self.n0.is_finite()) {
            return bad("n0 must exceed 1");
        }
        if !(self.l_um > 0.0 && self.lambda0_nm > 0.0 && self.alpha_per_cm > 0.0) {
            return bad("L_um, lambda0_nm and alpha_per_cm must be positive");
        }
        if !(self.gamma_hat > 0.0 && self.gamma_hat < 1.0) {
            return bad("gamma_hat must lie in (0, 1)");
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return bad("nu must be >= 0");
        }
        Ok(())
    }

    pub fn l_nm(&self) -> f64 {
        self.l_um * UM_TO_NM
    }

    pub fn alpha_per_nm(&self) -> f64 {
        self.alpha_per_cm * PER_CM_TO_PER_NM
    }

    /// Dimensionless wave number `2 pi L / lambda`.
    pub fn wave_number(&self, lambda_nm: f64) -> f64 {
        2.0 * PI * self.l_nm() / lambda_nm
    }

    /// Resonance factor `1 / (1 - w^2 - i gamma w)` with `w = lambda0 / lambda`.
    pub fn resonance(&self, lambda_nm: f64) -> Complex64 {
        let w = self.lambda0_nm / lambda_nm;
        1.0 / (1.0 - w * w - I * self.gamma_hat * w)
    }

    /// `lambda^2 - i gamma lambda0 lambda - lambda0^2`.
    fn resonance_denominator(&self, lambda_nm: f64) -> Complex64 {
        let (l, l0) = (lambda_nm, self.lambda0_nm);
        l * l - I * self.gamma_hat * l0 * l - l0 * l0
    }

    /// Perturbation strength multiplying the pumping profile.
    pub fn eps(&self) -> f64 {
        let base = self.l_nm().powi(2) * self.alpha_per_nm() * self.gamma_hat * self.n0 / self.lambda0_nm;
        match self.pumping {
            Pumping::Single => base * self.nu,
            Pumping::Double => base * self.nu * self.nu,
        }
    }
}

/// `n^2 = n0^2 - gamma n0 lambda0 g / (2 pi) * resonance` for a local gain `g`.
pub fn refractive_index_sq(medium: &SlabMedium, lambda_nm: f64, g_per_cm: f64) -> Complex64 {
    let g = g_per_cm * PER_CM_TO_PER_NM;
    medium.n0 * medium.n0
        - medium.gamma_hat * medium.n0 * medium.lambda0_nm * g * medium.resonance(lambda_nm) / (2.0 * PI)
}

/// Local gain coefficient at depth `z` (μm, measured from the slab center).
pub fn gain_profile_z(medium: &SlabMedium, g0_per_cm: f64, z_um: f64) -> Result<f64> {
    let half = 0.5 * medium.l_um;
    if z_um.is_nan() || z_um.abs() > half {
        return Err(Error::OutsideSlab { z_um, half_width_um: half });
    }
    let x = z_um / medium.l_um + 0.5;
    Ok(local_gain(medium, g0_per_cm, x))
}

/// Gain at reduced coordinate `x`: `g0 + (g0 + alpha) * strength * f(x)`.
fn local_gain(medium: &SlabMedium, g0_per_cm: f64, x: f64) -> f64 {
    let strength = match medium.pumping {
        Pumping::Single => medium.nu,
        Pumping::Double => medium.nu * medium.nu,
    };
    g0_per_cm + (g0_per_cm + medium.alpha_per_cm) * strength * pumping_profile(medium.pumping, medium.nu, x)
}

/// Everything the barrier engines need at one `(lambda, g0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionPoint {
    pub lambda_nm: f64,
    pub g0_per_cm: f64,
    pub omega_hat: f64,
    pub k: f64,
    /// Resonance factor.
    pub zeta: Complex64,
    /// Refractive root of the homogeneous background.
    pub fn0: Complex64,
    /// Constant barrier height.
    pub zeta1: Complex64,
    /// Perturbation strength per unit `eps`.
    pub zeta2: Complex64,
    pub eps: f64,
}

pub fn map_parameters(medium: &SlabMedium, lambda_nm: f64, g0_per_cm: f64) -> DispersionPoint {
    let g0 = g0_per_cm * PER_CM_TO_PER_NM;
    let alpha = medium.alpha_per_nm();
    let w = medium.lambda0_nm / lambda_nm;
    let zeta = medium.resonance(lambda_nm);
    let k = medium.wave_number(lambda_nm);
    let n_sq = refractive_index_sq(medium, lambda_nm, g0_per_cm);
    DispersionPoint {
        lambda_nm,
        g0_per_cm,
        omega_hat: w,
        k,
        zeta,
        fn0: n_sq.sqrt(),
        zeta1: k * k * (1.0 - n_sq),
        zeta2: 2.0 * PI * w * w * (g0 / alpha + 1.0) * zeta,
        eps: medium.eps(),
    }
}

/// `n(lambda, g0)` with `dn/dlambda` (per nm) and `dn/dg0` (per nm⁻¹ of gain).
pub fn fn_and_derivatives(medium: &SlabMedium, lambda_nm: f64, g0_per_cm: f64) -> Result<(Complex64, Complex64, Complex64)> {
    let n = refractive_index_sq(medium, lambda_nm, g0_per_cm).sqrt();
    if n.norm() < crate::perturbation::MIN_REFRACTIVE_ROOT {
        return Err(Error::RefractiveRootVanishes(n.norm()));
    }
    let g = g0_per_cm * PER_CM_TO_PER_NM;
    let (l, l0, gh, n0) = (lambda_nm, medium.lambda0_nm, medium.gamma_hat, medium.n0);
    let d = medium.resonance_denominator(l);
    let n10 = gh * n0 * l0 * l0 * l * (2.0 * l0 + I * gh * l) * g / (4.0 * PI * n * d * d);
    let n01 = -gh * n0 * l0 * l * l / (4.0 * PI * n * d);
    Ok((n, n10, n01))
}

/// The mapped potential `(2 pi L / lambda)^2 [1 - n^2(lambda, g(x))]` on `[0, 1]`,
/// built from the local gain and independent of the barrier split.
pub fn build_potential(medium: &SlabMedium, lambda_nm: f64, g0_per_cm: f64) -> PotentialSpec {
    let m = *medium;
    let k = m.wave_number(lambda_nm);
    PotentialSpec::Regular(RegularPotential::new(
        move |x| k * k * (1.0 - refractive_index_sq(&m, lambda_nm, local_gain(&m, g0_per_cm, x))),
        Vec::new(),
    ))
}

/// The pumping profile of the medium as a barrier perturbation shape.
pub fn gain_shape(medium: &SlabMedium) -> GainProfile {
    GainProfile::Pumped { pumping: medium.pumping, nu: medium.nu }
}

/// Threshold points for every `(mode, nu, pumping)` cell, ordered by mode,
/// then `nu`, then single before double pumping.
pub fn threshold_table(medium: &SlabMedium, modes: &[i64], nus: &[f64], opts: QuadOptions) -> Result<Vec<SingularityResult>> {
    let mut modes = modes.to_vec();
    modes.sort_unstable();
    let mut nus = nus.to_vec();
    nus.sort_by(f64::total_cmp);
    let cells: Vec<(i64, f64, Pumping)> = modes
        .iter()
        .flat_map(|&m| nus.iter().flat_map(move |&nu| Pumping::ALL.map(|p| (m, nu, p))))
        .collect();
    cells
        .par_iter()
        .map(|&(mode, nu, pumping)| {
            first_order_singularity(&medium.with_pumping(pumping, nu), mode, opts).map_err(|e| Error::Cell {
                mode,
                nu,
                pumping: pumping.to_string(),
                source: Box::new(e),
            })
        })
        .collect()
}
