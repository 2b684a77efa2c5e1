//! Transfer matrix from direct integration of `-psi'' + v psi = k^2 psi`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ode::{Dop853, Stats};
use crate::potential::{PotentialSpec, WaveNumber};
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Values at `x = 1` of the solutions with `phi1(0) = 1, phi1'(0) = -ik` and
/// `phi2(0) = 1, phi2'(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundamentalPair {
    pub phi1_at_1: Complex64,
    pub dphi1_at_1: Complex64,
    pub phi2_at_1: Complex64,
    pub dphi2_at_1: Complex64,
    pub k: WaveNumber,
}

impl FundamentalPair {
    /// `phi1 phi2' - phi2 phi1'` at `x = 1`; constant and equal to `ik`.
    pub fn wronskian(&self) -> Complex64 {
        self.phi1_at_1 * self.dphi2_at_1 - self.phi2_at_1 * self.dphi1_at_1
    }

    /// `|W - ik|` relative to the larger of `k` and the products that cancel
    /// in `W`; the latter dominate when the solutions grow inside the potential.
    pub fn wronskian_defect(&self) -> f64 {
        let k = self.k.value();
        let terms = (self.phi1_at_1 * self.dphi2_at_1).norm() + (self.phi2_at_1 * self.dphi1_at_1).norm();
        (self.wronskian() - I * k).norm() / terms.max(k)
    }
}

/// Jost functions `Gamma_{j,+-} = phi_j'(1) +- ik phi_j(1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JostQuad {
    pub gamma_1_plus: Complex64,
    pub gamma_1_minus: Complex64,
    pub gamma_2_plus: Complex64,
    pub gamma_2_minus: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m21: Complex64,
    pub m22: Complex64,
    pub k: WaveNumber,
}

impl TransferMatrix {
    pub fn identity(k: WaveNumber) -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self { m11: one, m12: zero, m21: zero, m22: one, k }
    }

    pub fn det(&self) -> Complex64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    /// `self * rhs`.
    pub fn mul(&self, rhs: &TransferMatrix) -> TransferMatrix {
        TransferMatrix {
            m11: self.m11 * rhs.m11 + self.m12 * rhs.m21,
            m12: self.m11 * rhs.m12 + self.m12 * rhs.m22,
            m21: self.m21 * rhs.m11 + self.m22 * rhs.m21,
            m22: self.m21 * rhs.m12 + self.m22 * rhs.m22,
            k: self.k,
        }
    }

    pub fn entries(&self) -> [Complex64; 4] {
        [self.m11, self.m12, self.m21, self.m22]
    }

    /// Largest entrywise distance.
    pub fn max_diff(&self, other: &TransferMatrix) -> f64 {
        self.entries().iter().zip(other.entries()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn max_norm(&self) -> f64 {
        self.entries().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Integrates the fundamental pair through a pointwise potential, restarting
/// at every break point so no step straddles a jump.
pub fn integrate_potential(
    v: impl Fn(f64) -> Complex64,
    breakpoints: &[f64],
    k: WaveNumber,
    tol: f64,
) -> Result<FundamentalPair> {
    let kv = k.value();
    let k2 = kv * kv;
    let mut cuts = vec![0.0];
    cuts.extend(breakpoints.iter().copied().filter(|&b| b > 0.0 && b < 1.0));
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut y = [one, -I * kv, one, zero];
    let solver = Dop853::new(tol);
    let mut stats = Stats::default();
    for w in cuts.windows(2) {
        // evaluate the potential strictly inside the segment at its ends
        let (a, b) = (w[0], w[1]);
        let inset = (1e-14 * (b - a)).max(4.0 * f64::EPSILON * b.abs()).min(0.25 * (b - a));
        y = solver.integrate(
            |x, y: &[Complex64; 4]| {
                let q = v(x.clamp(a + inset, b - inset)) - k2;
                [y[1], q * y[0], y[3], q * y[2]]
            },
            a,
            b,
            y,
            &mut stats,
        )?;
    }
    Ok(FundamentalPair { phi1_at_1: y[0], dphi1_at_1: y[1], phi2_at_1: y[2], dphi2_at_1: y[3], k })
}

/// Fundamental pair at `x = 1` for a regular potential.
pub fn integrate_fundamental(spec: &PotentialSpec, k: WaveNumber, tol: f64) -> Result<FundamentalPair> {
    if let PotentialSpec::DeltaArray(_) = spec {
        return Err(Error::DeltaNotPointwise);
    }
    let breaks = spec.breakpoints();
    integrate_potential(|x| spec.evaluate_regular(x).unwrap_or_default(), &breaks, k, tol)
}

pub fn jost_from_pair(pair: &FundamentalPair) -> JostQuad {
    let ik = I * pair.k.value();
    JostQuad {
        gamma_1_plus: pair.dphi1_at_1 + ik * pair.phi1_at_1,
        gamma_1_minus: pair.dphi1_at_1 - ik * pair.phi1_at_1,
        gamma_2_plus: pair.dphi2_at_1 + ik * pair.phi2_at_1,
        gamma_2_minus: pair.dphi2_at_1 - ik * pair.phi2_at_1,
    }
}

pub fn assemble_transfer_matrix(j: &JostQuad, k: WaveNumber) -> Result<TransferMatrix> {
    let kv = k.value();
    if kv == 0.0 {
        return Err(Error::ZeroWaveNumber(kv));
    }
    let pref = 1.0 / (2.0 * I * kv);
    let em = (-I * kv).exp();
    let ep = (I * kv).exp();
    Ok(TransferMatrix {
        m11: -pref * em * (j.gamma_1_plus - 2.0 * j.gamma_2_plus),
        m12: pref * em * j.gamma_1_plus,
        m21: pref * ep * (j.gamma_1_minus - 2.0 * j.gamma_2_minus),
        m22: -pref * ep * j.gamma_1_minus,
        k,
    })
}

/// `M22 = -e^{ik} Gamma_{1-} / 2ik` from a Jost function value.
pub fn m22_from_gamma(gamma_1_minus: Complex64, k: f64) -> Complex64 {
    -(I * k).exp() * gamma_1_minus / (2.0 * I * k)
}

pub fn transfer_matrix(spec: &PotentialSpec, k: WaveNumber, tol: f64) -> Result<TransferMatrix> {
    let pair = integrate_fundamental(spec, k, tol)?;
    assemble_transfer_matrix(&jost_from_pair(&pair), k)
}

pub fn m22(spec: &PotentialSpec, k: WaveNumber, tol: f64) -> Result<Complex64> {
    Ok(transfer_matrix(spec, k, tol)?.m22)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{Barrier, RegularPotential};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn wn(k: f64) -> WaveNumber {
        WaveNumber::new(k).unwrap()
    }

    #[test]
    fn free_solutions() {
        let pair = integrate_fundamental(&PotentialSpec::free(), wn(std::f64::consts::PI), 1e-12).unwrap();
        assert!((pair.phi1_at_1 + 1.0).norm() < 1e-11);
        assert!((pair.phi2_at_1 + 1.0).norm() < 1e-11);
        let pair = integrate_fundamental(&PotentialSpec::free(), wn(1.0), 1e-12).unwrap();
        assert!((pair.wronskian() - I).norm() < 1e-11);
    }

    #[test]
    fn free_jost_and_identity() {
        for &k in &[0.5, 3.0, 17.0] {
            let pair = integrate_fundamental(&PotentialSpec::free(), wn(k), 1e-12).unwrap();
            let j = jost_from_pair(&pair);
            let ik = I * k;
            assert!((j.gamma_1_minus + 2.0 * ik * (-ik).exp()).norm() < 1e-10 * k);
            assert!((j.gamma_2_plus - ik * ik.exp()).norm() < 1e-10 * k);
            assert!((j.gamma_2_minus + ik * (-ik).exp()).norm() < 1e-10 * k);
            let m = assemble_transfer_matrix(&j, wn(k)).unwrap();
            assert!(m.max_diff(&TransferMatrix::identity(wn(k))) < 1e-10);
        }
    }

    #[test]
    fn constant_barrier_phi1() {
        let z1 = c(30.0, -12.0);
        let k = 7.0;
        let pair = integrate_fundamental(&PotentialSpec::Barrier(Barrier::constant(z1)), wn(k), 1e-12).unwrap();
        let n = (1.0 - z1 / (k * k)).sqrt();
        let expected = (n * k).cos() - I / n * (n * k).sin();
        assert!((pair.phi1_at_1 - expected).norm() < 1e-10);
    }

    #[test]
    fn real_potential_conjugation() {
        let spec = PotentialSpec::Regular(RegularPotential::new(|x| c(5.0 * (3.0 * x).sin(), 0.0), vec![]));
        let m = transfer_matrix(&spec, wn(4.3), 1e-12).unwrap();
        assert!((m.m11 - m.m22.conj()).norm() < 1e-10);
        assert!((m.m12 - m.m21.conj()).norm() < 1e-10);
        assert!((m.det() - 1.0).norm() < 1e-10);
    }

    #[test]
    fn piecewise_potential_respects_breakpoints() {
        // a step: exact answer by composing two constant segments
        let spec = PotentialSpec::Regular(RegularPotential::new(
            |x| if x < 0.4 { c(20.0, 0.0) } else { c(-5.0, 3.0) },
            vec![0.4],
        ));
        let k = 6.0;
        let pair = integrate_fundamental(&spec, wn(k), 1e-12).unwrap();
        let prop = |q: Complex64, len: f64, y: [Complex64; 2]| {
            let s = (k * k - q).sqrt();
            [y[0] * (s * len).cos() + y[1] * (s * len).sin() / s, -y[0] * s * (s * len).sin() + y[1] * (s * len).cos()]
        };
        let y = prop(c(-5.0, 3.0), 0.6, prop(c(20.0, 0.0), 0.4, [c(1.0, 0.0), -I * k]));
        assert!((pair.phi1_at_1 - y[0]).norm() < 1e-11);
        assert!((pair.dphi1_at_1 - y[1]).norm() < 1e-10);
    }

    #[test]
    fn delta_is_rejected() {
        let spec = PotentialSpec::DeltaArray(
            crate::potential::DeltaArray::new(vec![0.5], vec![c(0.0, 1.0)]).unwrap(),
        );
        assert_eq!(integrate_fundamental(&spec, wn(1.0), 1e-12), Err(Error::DeltaNotPointwise));
    }
}
