//! Exact transfer matrix of a finite array of complex delta functions.
//!
//! Every entry is a finite sum over ordered chains `i_1 < ... < i_l` of the
//! centers. The sums are accumulated by dynamic programming over the last
//! index of the chain, so order `l` costs `O(n^2)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crate::perturbation::Solution;
use crate::potential::{DeltaArray, PotentialSpec, RegularPotential, WaveNumber};
use crate::transfer::{transfer_matrix, TransferMatrix};
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Sum over ordered chains of `prod z * prod [1 - exp(sign 2ik (a_{next} - a_prev))]`,
/// the first factor of each chain weighted by `lead(a_{i_1})`. Returns the
/// per-order totals for `l = 1..=n`.
fn chain_sums(spec: &DeltaArray, k: f64, sign: f64, lead: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
    let n = spec.len();
    let a = &spec.centers;
    let z = &spec.couplings;
    let bracket = |p: usize, i: usize| 1.0 - (I * (sign * 2.0 * k * (a[i] - a[p]))).exp();
    let mut ending: Vec<Complex64> = (0..n).map(|i| z[i] * lead(a[i])).collect();
    let mut totals = vec![ending.iter().sum()];
    for _ in 2..=n {
        let next: Vec<Complex64> =
            (0..n).map(|i| z[i] * (0..i).map(|p| ending[p] * bracket(p, i)).sum::<Complex64>()).collect();
        ending = next;
        totals.push(ending.iter().sum());
    }
    totals
}

fn series(totals: &[Complex64], step: Complex64) -> Complex64 {
    let mut pow = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for t in totals {
        pow /= step;
        acc += t * pow;
    }
    acc
}

/// Closed-form transfer matrix of the array.
pub fn closed_form_matrix(spec: &DeltaArray, k: WaveNumber) -> Result<TransferMatrix> {
    spec.validate()?;
    let kv = k.value();
    let one = |_: f64| Complex64::new(1.0, 0.0);
    let fwd = 2.0 * I * kv;
    Ok(TransferMatrix {
        m11: 1.0 + series(&chain_sums(spec, kv, -1.0, one), fwd),
        m12: series(&chain_sums(spec, kv, -1.0, |a| (-2.0 * I * kv * a).exp()), fwd),
        m21: series(&chain_sums(spec, kv, 1.0, |a| (2.0 * I * kv * a).exp()), -fwd),
        m22: 1.0 + series(&chain_sums(spec, kv, 1.0, one), -fwd),
        k,
    })
}

/// Transfer matrix of one delta `z delta(x - a)`.
pub fn single_delta_matrix(z: Complex64, a: f64, k: WaveNumber) -> TransferMatrix {
    let kv = k.value();
    let s = I * z / (2.0 * kv);
    TransferMatrix {
        m11: 1.0 - s,
        m12: -s * (-2.0 * I * kv * a).exp(),
        m21: s * (2.0 * I * kv * a).exp(),
        m22: 1.0 + s,
        k,
    }
}

/// Ordered product `M_n ... M_1` of single-delta matrices: an independent
/// route to [`closed_form_matrix`].
pub fn composition_oracle(spec: &DeltaArray, k: WaveNumber) -> Result<TransferMatrix> {
    spec.validate()?;
    Ok(spec
        .centers
        .iter()
        .zip(&spec.couplings)
        .fold(TransferMatrix::identity(k), |acc, (&a, &z)| single_delta_matrix(z, a, k).mul(&acc)))
}

/// Order-`ell` coefficients of `phi_j^(ell)(x) = sum_i Z_i sin[k(x - a_i)] theta(x - a_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZCoefficient {
    pub ell: usize,
    pub solution: Solution,
    pub values: Vec<Complex64>,
}

impl ZCoefficient {
    /// `phi_j^(ell)(x)` assembled from the coefficients.
    pub fn correction_at(&self, spec: &DeltaArray, k: f64, x: f64) -> Complex64 {
        spec.centers
            .iter()
            .zip(&self.values)
            .filter(|(&a, _)| x >= a)
            .map(|(&a, z)| z * (k * (x - a)).sin())
            .sum()
    }
}

pub fn z_coefficients(spec: &DeltaArray, k: WaveNumber, ell: usize, solution: Solution) -> ZCoefficient {
    let kv = k.value();
    let n = spec.len();
    let a = &spec.centers;
    let z = &spec.couplings;
    let mut values: Vec<Complex64> = (0..n).map(|i| z[i] * solution.free_value(kv, a[i]) / kv).collect();
    if ell == 0 || ell > n {
        values.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        return ZCoefficient { ell, solution, values };
    }
    for _ in 2..=ell {
        values = (0..n)
            .map(|i| z[i] / kv * (0..i).map(|p| values[p] * (kv * (a[i] - a[p])).sin()).sum::<Complex64>())
            .collect();
    }
    ZCoefficient { ell, solution, values }
}

/// Search mode for [`find_singularities_delta`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaStrategy {
    /// Real `k` where `|M22|` has a local minimum that polishes to a zero.
    ScanFixedCouplings,
    /// For each grid `k`, the value of coupling `index` that makes `M22(k) = 0`.
    SolveOneCoupling { index: usize },
}

/// A spectral singularity of a delta array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaRoot {
    pub k: f64,
    /// For [`DeltaStrategy::SolveOneCoupling`]: the coupling index and its solved value.
    pub coupling: Option<(usize, Complex64)>,
    pub m22_abs: f64,
}

/// Uniform grid of `points` wave numbers over `[k_min, k_max]`.
pub fn k_grid(k_min: f64, k_max: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points).map(|i| k_min + (k_max - k_min) * i as f64 / (points - 1) as f64).collect()
}

fn m22_at(spec: &DeltaArray, k: f64) -> Result<(Complex64, f64)> {
    let m = closed_form_matrix(spec, WaveNumber::new(k)?)?;
    Ok((m.m22, m.max_norm()))
}

/// Gauss-Newton on the complex `M22` over real `k`.
fn polish_k(spec: &DeltaArray, mut k: f64) -> Result<f64> {
    for _ in 0..60 {
        let h = 1e-6 * k.max(1.0);
        let (m, _) = m22_at(spec, k)?;
        let d = (m22_at(spec, k + h)?.0 - m22_at(spec, k - h)?.0) / (2.0 * h);
        let step = -(d.conj() * m).re / d.norm_sqr();
        if !step.is_finite() {
            break;
        }
        k += step;
        if step.abs() < 1e-15 * k.abs() {
            break;
        }
    }
    Ok(k)
}

pub fn find_singularities_delta(
    spec: &DeltaArray,
    k_min: f64,
    k_max: f64,
    points: usize,
    strategy: DeltaStrategy,
) -> Result<Vec<DeltaRoot>> {
    spec.validate()?;
    if !(k_min > 0.0 && k_max > k_min) {
        return Err(Error::InvalidParameter(format!("invalid k range [{k_min}, {k_max}]")));
    }
    let grid = k_grid(k_min, k_max, points);
    match strategy {
        DeltaStrategy::SolveOneCoupling { index } => {
            if index >= spec.len() {
                return Err(Error::InvalidParameter(format!("coupling index {index} out of range")));
            }
            let roots: Vec<DeltaRoot> = grid
                .par_iter()
                .map(|&k| {
                    // M22 is affine in each coupling: M22 = A + B z_index
                    let mut probe = spec.clone();
                    probe.couplings[index] = Complex64::new(0.0, 0.0);
                    let a = m22_at(&probe, k)?.0;
                    probe.couplings[index] = Complex64::new(1.0, 0.0);
                    let b = m22_at(&probe, k)?.0 - a;
                    if b.norm() == 0.0 {
                        return Ok(None);
                    }
                    let z = -a / b;
                    probe.couplings[index] = z;
                    let m22_abs = m22_at(&probe, k)?.0.norm();
                    Ok(Some(DeltaRoot { k, coupling: Some((index, z)), m22_abs }))
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .flatten()
                .collect();
            if roots.is_empty() {
                return Err(Error::NoRootInRange);
            }
            Ok(roots)
        }
        DeltaStrategy::ScanFixedCouplings => {
            let values: Vec<f64> =
                grid.par_iter().map(|&k| m22_at(spec, k).map(|m| m.0.norm())).collect::<Result<_>>()?;
            let mut roots: Vec<DeltaRoot> = Vec::new();
            for i in 0..values.len() {
                let left = if i == 0 { f64::INFINITY } else { values[i - 1] };
                let right = if i + 1 == values.len() { f64::INFINITY } else { values[i + 1] };
                if !(values[i] <= left && values[i] <= right) {
                    continue;
                }
                let k = polish_k(spec, grid[i])?;
                if !(k >= k_min && k <= k_max) {
                    continue;
                }
                let (m, norm) = m22_at(spec, k)?;
                if m.norm() < 1e-8 * norm.max(1.0) && !roots.iter().any(|r| (r.k - k).abs() < 1e-9 * k) {
                    roots.push(DeltaRoot { k, coupling: None, m22_abs: m.norm() });
                }
            }
            Ok(roots)
        }
    }
}

/// Rectangles of width `w` and height `z_i / w` centered on the deltas.
pub fn regularized_potential(spec: &DeltaArray, width: f64) -> PotentialSpec {
    let edges: Vec<(f64, f64)> = spec.centers.iter().map(|&a| (a - 0.5 * width, a + 0.5 * width)).collect();
    let breaks = edges.iter().flat_map(|&(lo, hi)| [lo, hi]).collect();
    let couplings = spec.couplings.clone();
    PotentialSpec::Regular(RegularPotential::new(
        move |x| {
            edges
                .iter()
                .zip(&couplings)
                .filter(|(&(lo, hi), _)| lo <= x && x < hi)
                .map(|(_, z)| z / width)
                .sum()
        },
        breaks,
    ))
}

/// ODE transfer matrix of the regularized array at widths `w, w/2, w/4`,
/// Richardson-extrapolated to `w -> 0` assuming an expansion in powers of `w`.
#[derive(Debug, Clone, Copy)]
pub struct RegularizedOracle {
    pub extrapolated: TransferMatrix,
    /// Raw matrices at `w, w/2, w/4`.
    pub raw: [TransferMatrix; 3],
    /// `log2` of the ratio of successive raw errors; close to 1 for first-order convergence.
    pub observed_order: f64,
}

pub fn regularized_oracle(spec: &DeltaArray, k: WaveNumber, width: f64, tol: f64) -> Result<RegularizedOracle> {
    spec.validate()?;
    let gap = spec
        .centers
        .windows(2)
        .map(|w| w[1] - w[0])
        .chain([spec.centers[0], 1.0 - spec.centers[spec.len() - 1]])
        .fold(f64::INFINITY, f64::min);
    if width >= gap {
        return Err(Error::InvalidParameter(format!("width {width} exceeds the smallest gap {gap}")));
    }
    let raw: Vec<TransferMatrix> = [width, width / 2.0, width / 4.0]
        .iter()
        .map(|&w| transfer_matrix(&regularized_potential(spec, w), k, tol))
        .collect::<Result<_>>()?;
    let comb = |f: &dyn Fn(&TransferMatrix) -> Complex64| {
        let (m0, m1, m2) = (f(&raw[0]), f(&raw[1]), f(&raw[2]));
        let r0 = 2.0 * m1 - m0;
        let r1 = 2.0 * m2 - m1;
        (4.0 * r1 - r0) / 3.0
    };
    let extrapolated = TransferMatrix {
        m11: comb(&|m| m.m11),
        m12: comb(&|m| m.m12),
        m21: comb(&|m| m.m21),
        m22: comb(&|m| m.m22),
        k,
    };
    let e0 = raw[0].max_diff(&extrapolated);
    let e1 = raw[1].max_diff(&extrapolated);
    Ok(RegularizedOracle { extrapolated, raw: [raw[0], raw[1], raw[2]], observed_order: (e0 / e1).log2() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn wn(k: f64) -> WaveNumber {
        WaveNumber::new(k).unwrap()
    }

    fn random_spec(rng: &mut ChaCha8Rng, n: usize) -> DeltaArray {
        let mut centers: Vec<f64> = (0..n).map(|_| rng.gen_range(0.02..0.98)).collect();
        centers.sort_by(f64::total_cmp);
        centers.dedup();
        let couplings = centers.iter().map(|_| c(rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0))).collect();
        DeltaArray::new(centers, couplings).unwrap()
    }

    #[test]
    fn single_delta_entries() {
        let (z, a, k) = (c(1.5, -0.7), 0.3, 2.2);
        let m = closed_form_matrix(&DeltaArray::new(vec![a], vec![z]).unwrap(), wn(k)).unwrap();
        assert!((m.m22 - (1.0 + I * z / (2.0 * k))).norm() < 1e-15);
        assert!((m.m12 + I * z * (-2.0 * I * k * a).exp() / (2.0 * k)).norm() < 1e-15);
        let root = closed_form_matrix(&DeltaArray::new(vec![0.3], vec![c(0.0, 10.0)]).unwrap(), wn(5.0)).unwrap();
        assert!(root.m22.norm() < 1e-15);
    }

    #[test]
    fn double_delta_m22() {
        let (z1, z2, a1, a2, k) = (c(1.0, 2.0), c(-0.5, 0.3), 0.2, 0.7, 3.1);
        let m = closed_form_matrix(&DeltaArray::new(vec![a1, a2], vec![z1, z2]).unwrap(), wn(k)).unwrap();
        let expected = 1.0 + I * (z1 + z2) / (2.0 * k)
            - z1 * z2 * (1.0 - (2.0 * I * k * (a2 - a1)).exp()) / (4.0 * k * k);
        assert!((m.m22 - expected).norm() < 1e-14);
    }

    #[test]
    fn oracle_and_unimodularity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.gen_range(1..=6);
            let spec = random_spec(&mut rng, n);
            let k = wn(rng.gen_range(1.0..30.0));
            let closed = closed_form_matrix(&spec, k).unwrap();
            let comp = composition_oracle(&spec, k).unwrap();
            let scale = closed.max_norm().max(1.0);
            assert!(closed.max_diff(&comp) < 1e-12 * scale, "{}", closed.max_diff(&comp));
            assert!((closed.det() - 1.0).norm() < 1e-12 * scale * scale);
        }
    }

    #[test]
    fn locally_periodic_arrays() {
        for n in [2usize, 3] {
            let centers = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
            let spec = DeltaArray::new(centers, vec![c(2.0, -1.0); n]).unwrap();
            let k = wn(4.7);
            let d = closed_form_matrix(&spec, k).unwrap().max_diff(&composition_oracle(&spec, k).unwrap());
            assert!(d < 1e-13);
        }
    }

    #[test]
    fn zero_couplings_give_identity() {
        let spec = DeltaArray::new(vec![0.2, 0.5, 0.9], vec![c(0.0, 0.0); 3]).unwrap();
        let m = composition_oracle(&spec, wn(3.0)).unwrap();
        assert_eq!(m.max_diff(&TransferMatrix::identity(wn(3.0))), 0.0);
    }

    #[test]
    fn z_coefficient_examples() {
        let spec = DeltaArray::new(vec![0.25, 0.6], vec![c(1.0, 1.0), c(2.0, -3.0)]).unwrap();
        let k = 3.3;
        let z1 = z_coefficients(&spec, wn(k), 1, Solution::First);
        for i in 0..2 {
            let expected = spec.couplings[i] * (-I * k * spec.centers[i]).exp() / k;
            assert!((z1.values[i] - expected).norm() < 1e-15);
        }
        let beyond = z_coefficients(&spec, wn(k), 3, Solution::Second);
        assert!(beyond.values.iter().all(|v| v.norm() == 0.0));
        let single = DeltaArray::new(vec![0.4], vec![c(0.5, 0.0)]).unwrap();
        let z = z_coefficients(&single, wn(k), 1, Solution::Second);
        assert!((z.values[0] - 0.5 * (k * 0.4).cos() / k).norm() < 1e-15);
    }

    #[test]
    fn solve_one_coupling_single() {
        let spec = DeltaArray::new(vec![0.5], vec![c(1.0, 0.0)]).unwrap();
        let roots =
            find_singularities_delta(&spec, 5.0, 5.0 + 1e-9, 2, DeltaStrategy::SolveOneCoupling { index: 0 }).unwrap();
        let (_, z) = roots[0].coupling.unwrap();
        assert!((z - c(0.0, 10.0)).norm() < 1e-12);
    }

    #[test]
    fn real_coupling_has_no_singularity() {
        let spec = DeltaArray::new(vec![0.5], vec![c(3.0, 0.0)]).unwrap();
        let roots = find_singularities_delta(&spec, 0.5, 40.0, 400, DeltaStrategy::ScanFixedCouplings).unwrap();
        assert!(roots.is_empty());
    }

    #[test]
    fn scan_recovers_solved_coupling() {
        // symmetric pair: solve for the coupling at k = 6, then rescan
        let base = DeltaArray::new(vec![0.3, 0.7], vec![c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let mut probe = base.clone();
        probe.couplings = vec![c(0.0, 0.0), c(0.0, 0.0)];
        // equal couplings: M22 = 0 is quadratic in z; solve for z2 with z1 fixed
        probe.couplings[0] = c(1.0, -4.0);
        let solved =
            find_singularities_delta(&probe, 6.0, 6.0 + 1e-9, 2, DeltaStrategy::SolveOneCoupling { index: 1 }).unwrap();
        probe.couplings[1] = solved[0].coupling.unwrap().1;
        let found = find_singularities_delta(&probe, 5.0, 7.0, 201, DeltaStrategy::ScanFixedCouplings).unwrap();
        assert!(found.iter().any(|r| (r.k - 6.0).abs() < 1e-9), "{found:?}");
    }

    #[test]
    fn regularized_oracle_converges() {
        let spec = DeltaArray::new(vec![0.3, 0.65], vec![c(2.0, 1.0), c(-1.0, 3.0)]).unwrap();
        let k = wn(5.0);
        let oracle = regularized_oracle(&spec, k, 0.02, 1e-13).unwrap();
        let exact = closed_form_matrix(&spec, k).unwrap();
        assert!(oracle.extrapolated.max_diff(&exact) < 1e-6, "{}", oracle.extrapolated.max_diff(&exact));
        assert!((oracle.observed_order - 1.0).abs() < 0.2, "{}", oracle.observed_order);
    }
}
