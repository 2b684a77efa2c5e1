//! Green's-function perturbation series for `v = v0 + eps v1`.
//!
//! The Green's function of an exactly solvable background is separable,
//! `G(x, y) = (i/k) [phi1(x) phi2(y) - phi2(x) phi1(y)]`, so each order of
//! the nested integrals reduces to two running integrals:
//!
//! ```text
//! phi^(l)(x) = (i/k) [phi1(x) A(x) - phi2(x) B(x)],
//! A(x) = int_0^x phi2 v1 phi^(l-1),   B(x) = int_0^x phi1 v1 phi^(l-1).
//! ```
//!
//! Running integrals come from [`CompositeRule::cumulative`] for regular
//! perturbations and from ordered partial sums for point masses.
//!
//! The module also carries the constant-barrier specialization: the zeroth
//! order Jost function `F0`, the kernel `xi`, the nested integrals `F_l` and
//! the closed forms of `F_1` at a spectral singularity for the two pumping
//! profiles.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::potential::{DeltaArray, GainProfile, Pumping, WaveNumber};
use crate::quadrature::CompositeRule;
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Below this modulus the refractive root is treated as vanishing.
pub const MIN_REFRACTIVE_ROOT: f64 = 1e-10;

/// Ceiling on the spectral-singularity residual accepted by [`f100_closed`].
pub const SS_RESIDUAL_LIMIT: f64 = 1e-8;

/// Index of an unperturbed solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Solution {
    /// `phi1(0) = 1, phi1'(0) = -ik`.
    First,
    /// `phi2(0) = 1, phi2'(0) = 0`.
    Second,
}

impl Solution {
    /// Value of the free (`v0 = 0`) solution.
    pub fn free_value(self, k: f64, x: f64) -> Complex64 {
        match self {
            Solution::First => (-I * k * x).exp(),
            Solution::Second => Complex64::new((k * x).cos(), 0.0),
        }
    }
}

/// Sign in the Jost combination `phi' +- ik phi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

/// `sqrt(1 - z1/k^2)`, principal branch (`Re >= 0`, and `Im > 0` when `Re = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefractiveRoot(Complex64);

impl RefractiveRoot {
    pub fn new(z1: Complex64, k: WaveNumber) -> Result<Self> {
        let kv = k.value();
        Self::from_value((1.0 - z1 / (kv * kv)).sqrt())
    }

    pub fn from_value(mut n: Complex64) -> Result<Self> {
        if n.norm() < MIN_REFRACTIVE_ROOT || !n.norm().is_finite() {
            return Err(Error::RefractiveRootVanishes(n.norm()));
        }
        if n.re < 0.0 || (n.re == 0.0 && n.im < 0.0) {
            n = -n;
        }
        Ok(Self(n))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }
}

/// Exactly solvable background: free particle or constant barrier.
///
/// Both are represented through the refractive root `n` (`n = 1` for the free
/// case), with `phi1 = cos(nkx) - (i/n) sin(nkx)` and `phi2 = cos(nkx)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnperturbedBasis {
    pub k: f64,
    pub n: Complex64,
}

impl UnperturbedBasis {
    pub fn free(k: WaveNumber) -> Self {
        Self { k: k.value(), n: Complex64::new(1.0, 0.0) }
    }

    pub fn barrier(z1: Complex64, k: WaveNumber) -> Result<Self> {
        Ok(Self { k: k.value(), n: RefractiveRoot::new(z1, k)?.value() })
    }

    pub fn from_root(n: RefractiveRoot, k: WaveNumber) -> Self {
        Self { k: k.value(), n: n.value() }
    }

    fn phase(&self, x: f64) -> Complex64 {
        self.n * self.k * x
    }

    pub fn phi(&self, j: Solution, x: f64) -> Complex64 {
        let p = self.phase(x);
        match j {
            Solution::First => p.cos() - I / self.n * p.sin(),
            Solution::Second => p.cos(),
        }
    }

    pub fn dphi(&self, j: Solution, x: f64) -> Complex64 {
        let p = self.phase(x);
        let nk = self.n * self.k;
        match j {
            Solution::First => -nk * p.sin() - I * self.k * p.cos(),
            Solution::Second => -nk * p.sin(),
        }
    }

    pub fn green(&self, x: f64, y: f64) -> Complex64 {
        I / self.k
            * (self.phi(Solution::First, x) * self.phi(Solution::Second, y)
                - self.phi(Solution::Second, x) * self.phi(Solution::First, y))
    }

    /// `d/dx G(x, y)`.
    pub fn green_dx(&self, x: f64, y: f64) -> Complex64 {
        I / self.k
            * (self.dphi(Solution::First, x) * self.phi(Solution::Second, y)
                - self.dphi(Solution::Second, x) * self.phi(Solution::First, y))
    }

    /// `G'(1, y) +- ik G(1, y)`.
    pub fn boundary_kernel(&self, side: Side, y: f64) -> Complex64 {
        let s = side.sign() * I * self.k;
        let c1 = self.dphi(Solution::First, 1.0) + s * self.phi(Solution::First, 1.0);
        let c2 = self.dphi(Solution::Second, 1.0) + s * self.phi(Solution::Second, 1.0);
        I / self.k * (c1 * self.phi(Solution::Second, y) - c2 * self.phi(Solution::First, y))
    }

    /// Zeroth-order Jost function `phi_j'(1) +- ik phi_j(1)`.
    pub fn jost0(&self, j: Solution, side: Side) -> Complex64 {
        self.dphi(j, 1.0) + side.sign() * I * self.k * self.phi(j, 1.0)
    }

    /// Phase per unit length that quadrature panels must resolve.
    fn oscillation(&self) -> f64 {
        (self.n * self.k).norm()
    }
}

type ComplexFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// The perturbing potential `v1`: a regular function or a finite sum of point masses.
#[derive(Clone)]
pub enum Perturbation {
    Regular { f: ComplexFn, breakpoints: Vec<f64> },
    PointMasses { centers: Vec<f64>, weights: Vec<Complex64> },
}

impl fmt::Debug for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Perturbation::Regular { breakpoints, .. } => {
                f.debug_struct("Regular").field("breakpoints", breakpoints).finish_non_exhaustive()
            }
            Perturbation::PointMasses { centers, weights } => {
                f.debug_struct("PointMasses").field("centers", centers).field("weights", weights).finish()
            }
        }
    }
}

impl Perturbation {
    pub fn regular(f: impl Fn(f64) -> Complex64 + Send + Sync + 'static, breakpoints: Vec<f64>) -> Self {
        Perturbation::Regular { f: Arc::new(f), breakpoints }
    }

    pub fn from_profile(profile: &GainProfile) -> Self {
        let p = profile.clone();
        Perturbation::regular(move |x| p.eval(x), profile.breakpoints())
    }

    pub fn from_deltas(spec: &DeltaArray) -> Self {
        Perturbation::PointMasses { centers: spec.centers.clone(), weights: spec.couplings.clone() }
    }
}

/// Quadrature resolution: Gauss order per panel and a refinement factor on
/// the panel count (which otherwise follows the background oscillation).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadOptions {
    pub order: usize,
    pub refine: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { order: 16, refine: 1 }
    }
}

impl QuadOptions {
    pub fn doubled(self) -> Self {
        Self { refine: 2 * self.refine, ..self }
    }

    fn panels(self, oscillation: f64) -> usize {
        self.refine * (oscillation.ceil() as usize + 8)
    }
}

/// Discretized measure `v1(x) dx` on `[0, 1]`.
enum Measure {
    Rule { rule: CompositeRule, v1: Vec<Complex64> },
    Points { weights: Vec<Complex64> },
}

struct Grid {
    nodes: Vec<f64>,
    measure: Measure,
}

impl Grid {
    fn new(basis: &UnperturbedBasis, v1: &Perturbation, opts: QuadOptions) -> Self {
        match v1 {
            Perturbation::Regular { f, breakpoints } => {
                let rule = CompositeRule::new(breakpoints, opts.panels(basis.oscillation()), opts.order);
                let v1 = rule.nodes().iter().map(|&x| f(x)).collect();
                Grid { nodes: rule.nodes().to_vec(), measure: Measure::Rule { rule, v1 } }
            }
            Perturbation::PointMasses { centers, weights } => {
                Grid { nodes: centers.clone(), measure: Measure::Points { weights: weights.clone() } }
            }
        }
    }

    fn weighted(&self, g: &[Complex64]) -> Vec<Complex64> {
        let v1 = match &self.measure {
            Measure::Rule { v1, .. } => v1,
            Measure::Points { weights } => weights,
        };
        g.iter().zip(v1).map(|(a, b)| a * b).collect()
    }

    /// `int_0^{x_q} g v1` at every node.
    fn cumulative(&self, g: &[Complex64]) -> Vec<Complex64> {
        let h = self.weighted(g);
        match &self.measure {
            Measure::Rule { rule, .. } => rule.cumulative(&h),
            Measure::Points { .. } => h
                .iter()
                .scan(Complex64::new(0.0, 0.0), |acc, v| {
                    *acc += v;
                    Some(*acc)
                })
                .collect(),
        }
    }

    fn cumulative_to(&self, g: &[Complex64], x: f64) -> Complex64 {
        let h = self.weighted(g);
        match &self.measure {
            Measure::Rule { rule, .. } => rule.cumulative_to(&h, x),
            Measure::Points { .. } => self.nodes.iter().zip(&h).filter(|(&a, _)| a <= x).map(|(_, v)| v).sum(),
        }
    }

    fn total(&self, g: &[Complex64]) -> Complex64 {
        let h = self.weighted(g);
        match &self.measure {
            Measure::Rule { rule, .. } => rule.total(&h),
            Measure::Points { .. } => h.iter().sum(),
        }
    }
}

/// Node values of the iterates `phi_j^(0..=l_max)`.
pub struct SeriesIterates {
    basis: UnperturbedBasis,
    grid: Grid,
    phi1: Vec<Complex64>,
    phi2: Vec<Complex64>,
    levels: [Vec<Vec<Complex64>>; 2],
}

impl SeriesIterates {
    pub fn new(basis: UnperturbedBasis, v1: &Perturbation, l_max: usize, opts: QuadOptions) -> Self {
        let grid = Grid::new(&basis, v1, opts);
        let phi1: Vec<Complex64> = grid.nodes.iter().map(|&x| basis.phi(Solution::First, x)).collect();
        let phi2: Vec<Complex64> = grid.nodes.iter().map(|&x| basis.phi(Solution::Second, x)).collect();
        let mut levels = [vec![phi1.clone()], vec![phi2.clone()]];
        for lv in levels.iter_mut() {
            for _ in 1..l_max {
                let prev = lv.last().expect("level 0 present");
                let next = Self::step(&basis, &grid, &phi1, &phi2, prev);
                lv.push(next);
            }
        }
        Self { basis, grid, phi1, phi2, levels }
    }

    fn step(
        basis: &UnperturbedBasis,
        grid: &Grid,
        phi1: &[Complex64],
        phi2: &[Complex64],
        prev: &[Complex64],
    ) -> Vec<Complex64> {
        let a = grid.cumulative(&prod(phi2, prev));
        let b = grid.cumulative(&prod(phi1, prev));
        (0..prev.len()).map(|q| I / basis.k * (phi1[q] * a[q] - phi2[q] * b[q])).collect()
    }

    fn level(&self, j: Solution) -> &Vec<Vec<Complex64>> {
        match j {
            Solution::First => &self.levels[0],
            Solution::Second => &self.levels[1],
        }
    }

    /// Highest order available for [`Self::jost`].
    pub fn max_order(&self) -> usize {
        self.levels[0].len()
    }

    /// `phi_j^(ell)(x)`.
    pub fn phi(&self, j: Solution, ell: usize, x: f64) -> Complex64 {
        if ell == 0 {
            return self.basis.phi(j, x);
        }
        let prev = &self.level(j)[ell - 1];
        let a = self.grid.cumulative_to(&prod(&self.phi2, prev), x);
        let b = self.grid.cumulative_to(&prod(&self.phi1, prev), x);
        I / self.basis.k * (self.basis.phi(Solution::First, x) * a - self.basis.phi(Solution::Second, x) * b)
    }

    /// `d/dx phi_j^(ell)(x)`; the derivative of the running integrals drops
    /// out because `G(x, x) = 0`.
    pub fn dphi(&self, j: Solution, ell: usize, x: f64) -> Complex64 {
        if ell == 0 {
            return self.basis.dphi(j, x);
        }
        let prev = &self.level(j)[ell - 1];
        let a = self.grid.cumulative_to(&prod(&self.phi2, prev), x);
        let b = self.grid.cumulative_to(&prod(&self.phi1, prev), x);
        I / self.basis.k * (self.basis.dphi(Solution::First, x) * a - self.basis.dphi(Solution::Second, x) * b)
    }

    /// `Gamma_{j,side}^(ell)`, for `ell <= max_order()`.
    pub fn jost(&self, j: Solution, side: Side, ell: usize) -> Complex64 {
        if ell == 0 {
            return self.basis.jost0(j, side);
        }
        let kernel: Vec<Complex64> = self.grid.nodes.iter().map(|&y| self.basis.boundary_kernel(side, y)).collect();
        self.grid.total(&prod(&kernel, &self.level(j)[ell - 1]))
    }
}

fn prod(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// `phi_j^(ell)(x)` for `ell >= 1`.
pub fn phi_correction(basis: &UnperturbedBasis, v1: &Perturbation, ell: usize, j: Solution, x: f64) -> Complex64 {
    SeriesIterates::new(*basis, v1, ell, QuadOptions::default()).phi(j, ell, x)
}

/// `Gamma_{j,side}^(ell)`.
pub fn jost_correction(basis: &UnperturbedBasis, v1: &Perturbation, ell: usize, j: Solution, side: Side) -> Complex64 {
    SeriesIterates::new(*basis, v1, ell.max(1), QuadOptions::default()).jost(j, side, ell)
}

/// Coefficients `Gamma_{1-}^(l)`, `l = 0..=l_max`, of the expansion in a series variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JostSeries {
    pub coefficients: Vec<Complex64>,
}

impl JostSeries {
    pub fn new(basis: &UnperturbedBasis, v1: &Perturbation, l_max: usize, opts: QuadOptions) -> Self {
        let it = SeriesIterates::new(*basis, v1, l_max.max(1), opts);
        Self { coefficients: (0..=l_max).map(|l| it.jost(Solution::First, Side::Minus, l)).collect() }
    }

    /// `sum_{l <= order} c_l t^l`.
    pub fn partial_sum(&self, t: Complex64, order: usize) -> Complex64 {
        self.coefficients.iter().take(order + 1).rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * t + c)
    }
}

/// `F0 = Gamma_{1-}^(0) = -(k/n) [(n^2 + 1) sin(nk) + 2in cos(nk)]` for the constant barrier.
pub fn barrier_f0(n: RefractiveRoot, k: f64) -> Complex64 {
    let n = n.value();
    let p = n * k;
    -(k / n) * ((n * n + 1.0) * p.sin() + 2.0 * I * n * p.cos())
}

/// Factored form `-ik (n+1)^2 e^{ink} / (2n) [e^{-2ink} - ((n-1)/(n+1))^2]`.
pub fn barrier_f0_factored(n: RefractiveRoot, k: f64) -> Complex64 {
    let n = n.value();
    -I * k * (n + 1.0).powi(2) * (I * n * k).exp() / (2.0 * n) * ss_residual(RefractiveRoot(n), k)
}

/// `e^{-2ink} - ((n-1)/(n+1))^2`; vanishes at a spectral singularity of the barrier.
pub fn ss_residual(n: RefractiveRoot, k: f64) -> Complex64 {
    let n = n.value();
    let q = (n - 1.0) / (n + 1.0);
    (-2.0 * I * n * k).exp() - q * q
}

/// `xi(x) = phi1(x) phi1(1 - x)` of the barrier background.
pub fn barrier_xi(n: RefractiveRoot, k: f64, x: f64) -> Complex64 {
    let b = UnperturbedBasis { k, n: n.value() };
    b.phi(Solution::First, x) * b.phi(Solution::First, 1.0 - x)
}

/// Parity `s = e^{-ink}/q = +-1` of a barrier singularity, `q = (n-1)/(n+1)`.
/// It is `(-1)^m` for mode number `m`.
pub fn singularity_parity(n: RefractiveRoot, k: f64) -> f64 {
    let n = n.value();
    let q = (n - 1.0) / (n + 1.0);
    if ((-I * n * k).exp() / q).re >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// `xi` simplified with the spectral-singularity condition:
/// `(1 - 1/n^2) [s + cos(2nk(x - 1/2))] / 2` with the parity `s`, i.e. a
/// `cos^2` profile for even modes and `-sin^2` for odd ones.
pub fn barrier_xi_at_ss(n: RefractiveRoot, k: f64, x: f64) -> Complex64 {
    let s = singularity_parity(n, k);
    let n = n.value();
    0.5 * (1.0 - 1.0 / (n * n)) * (s + (2.0 * n * k * (x - 0.5)).cos())
}

/// `F_l`: coefficient of `(z2 eps)^l` in `Gamma_{1-}` for `v = z1 + z2 eps f`,
/// by direct nested quadrature with the sine kernel `sin[nk(x - y)]/(nk)`.
pub fn barrier_f_ell(n: RefractiveRoot, k: f64, profile: &GainProfile, ell: usize, opts: QuadOptions) -> Complex64 {
    let nv = n.value();
    let a = nv * k;
    if ell == 0 {
        return barrier_f0(n, k);
    }
    let b = UnperturbedBasis { k, n: nv };
    let rule = CompositeRule::new(&profile.breakpoints(), opts.panels(a.norm()), opts.order);
    let xs = rule.nodes();
    let f: Vec<Complex64> = xs.iter().map(|&x| profile.eval(x)).collect();
    let sin: Vec<Complex64> = xs.iter().map(|&x| (a * x).sin()).collect();
    let cos: Vec<Complex64> = xs.iter().map(|&x| (a * x).cos()).collect();
    let mut u: Vec<Complex64> = xs.iter().zip(&f).map(|(&x, fx)| b.phi(Solution::First, x) * fx).collect();
    for _ in 1..ell {
        let cs = rule.cumulative(&prod(&cos, &u));
        let sn = rule.cumulative(&prod(&sin, &u));
        u = (0..xs.len()).map(|q| f[q] * (sin[q] * cs[q] - cos[q] * sn[q]) / a).collect();
    }
    rule.integrate_nodes(|q| b.phi(Solution::First, 1.0 - xs[q]) * u[q])
}

/// `F_1` at a spectral singularity `(n0, k0)` in closed form.
///
/// Single pumping, `f = (e^{-nu x} - 1)/nu`, `a = n0 k0`:
/// `F = (1 - 1/n^2)/(2 nu) [s ((1 - e^{-nu})/nu - 1) + I_c - sin(a)/a]`,
/// `I_c = int_0^1 e^{-nu x} cos(2ax - a) dx`.
///
/// Double pumping, `f = (cosh[nu(x - 1/2)] - C)/(nu^2 C)`, `C = cosh(nu/2)`:
/// `F = (1 - 1/n^2)/(2C) [s (2 sinh(nu/2)/nu - C)/nu^2 + (2a S cos(a) - C sin(a))/(a(nu^2 + 4a^2))]`
/// with `S = sinh(nu/2)/nu`. Here `s` is the [`singularity_parity`].
pub fn f100_closed(n0: RefractiveRoot, k0: f64, nu: f64, pumping: Pumping) -> Result<Complex64> {
    let residual = ss_residual(n0, k0).norm();
    if residual > SS_RESIDUAL_LIMIT {
        return Err(Error::NotAtSingularity { residual });
    }
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::InvalidParameter(format!("closed form needs nu > 0, got {nu}")));
    }
    let s = singularity_parity(n0, k0);
    let n = n0.value();
    let a = n * k0;
    let pre = 1.0 - 1.0 / (n * n);
    let sinc = a.sin() / a;
    Ok(match pumping {
        Pumping::Single => {
            let first = if nu < 1e-4 {
                -nu / 2.0 + nu * nu / 6.0 - nu.powi(3) / 24.0
            } else {
                -(-nu).exp_m1() / nu - 1.0
            };
            let ea = (I * a).exp();
            let decay = (-nu).exp();
            let ic = 0.5
                * ((ea * decay - 1.0 / ea) / (2.0 * I * a - nu) + (decay / ea - ea) / (-2.0 * I * a - nu));
            pre / (2.0 * nu) * (s * first + ic - sinc)
        }
        Pumping::Double => {
            let t = 0.5 * nu;
            let c = t.cosh();
            // (sinh t / t - cosh t) / nu^2 = -sum_{m>=1} 2m t^{2m} / ((2m+1)! nu^2)
            let first = if t < 0.5 {
                let mut term = 1.0;
                let mut sum = 0.0;
                for m in 1..12 {
                    let mf = m as f64;
                    term *= t * t / ((2.0 * mf) * (2.0 * mf + 1.0));
                    sum -= 2.0 * mf * term;
                }
                sum / (nu * nu)
            } else {
                (t.sinh() / t - c) / (nu * nu)
            };
            let sh = if t < 1e-8 { 0.5 } else { t.sinh() / nu };
            let second = (2.0 * a * sh * a.cos() - c * a.sin()) / (a * (nu * nu + 4.0 * a * a));
            pre / (2.0 * c) * (s * first + second)
        }
    })
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

    #[test]
    fn free_basis() {
        let b = UnperturbedBasis::free(wn(std::f64::consts::PI));
        assert_eq!(b.green(0.3, 0.3).norm(), 0.0);
        assert!((b.green_dx(0.3, 0.3) - 1.0).norm() < 1e-15);
        assert!(b.green(1.0, 0.0).norm() < 1e-15);
        let b = UnperturbedBasis::free(wn(2.5));
        for &(x, y) in &[(0.7, 0.2), (0.1, 0.9)] {
            assert!((b.green(x, y) - (2.5 * (x - y)).sin() / 2.5).norm() < 1e-15);
            assert!((b.green_dx(x, y) - (2.5 * (x - y)).cos()).norm() < 1e-15);
            assert!((b.phi(Solution::First, x) - (-I * 2.5 * x).exp()).norm() < 1e-15);
        }
    }

    #[test]
    fn barrier_basis_identities() {
        let k = wn(6.0);
        assert_eq!(UnperturbedBasis::barrier(c(0.0, 0.0), k).unwrap(), UnperturbedBasis::free(k));
        assert!(matches!(UnperturbedBasis::barrier(c(36.0, 0.0), k), Err(Error::RefractiveRootVanishes(_))));
        let b = UnperturbedBasis::barrier(c(-20.0, 7.0), k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x: f64 = rng.gen();
            let y: f64 = rng.gen::<f64>() * x;
            let lhs = b.green_dx(x, y) - I * 6.0 * b.green(x, y);
            assert!((lhs - b.phi(Solution::First, x - y)).norm() < 1e-13);
            let direct = (b.n * 6.0 * (x - y)).sin() / (b.n * 6.0);
            assert!((b.green(x, y) - direct).norm() < 1e-14);
        }
    }

    #[test]
    fn refractive_root_branch() {
        let n = RefractiveRoot::from_value(c(-2.0, 1.0)).unwrap().value();
        assert_eq!(n, c(2.0, -1.0));
        let n = RefractiveRoot::new(c(5.0, 0.0), wn(1.0)).unwrap().value();
        assert!(n.re == 0.0 && n.im > 0.0);
    }

    #[test]
    fn f0_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = RefractiveRoot::from_value(c(rng.gen_range(0.2..4.0), rng.gen_range(-0.5..0.5))).unwrap();
            let k = rng.gen_range(0.5..20.0);
            let a = barrier_f0(n, k);
            let b = barrier_f0_factored(n, k);
            assert!((a - b).norm() < 1e-13 * a.norm().max(k), "{a} {b}");
        }
        let one = RefractiveRoot::from_value(c(1.0, 0.0)).unwrap();
        assert!((barrier_f0(one, 3.0) + 2.0 * I * 3.0 * (-3.0 * I).exp()).norm() < 1e-14);
    }

    #[test]
    fn first_order_matches_delta_coefficient() {
        let spec = DeltaArray::new(vec![0.35], vec![c(1.2, -0.4)]).unwrap();
        let k = wn(4.0);
        let basis = UnperturbedBasis::free(k);
        let v1 = Perturbation::from_deltas(&spec);
        let z = crate::delta::z_coefficients(&spec, k, 1, Solution::First);
        for &x in &[0.2, 0.5, 0.9] {
            let got = phi_correction(&basis, &v1, 1, Solution::First, x);
            assert!((got - z.correction_at(&spec, 4.0, x)).norm() < 1e-14);
        }
    }

    #[test]
    fn corrections_vanish_at_origin() {
        let basis = UnperturbedBasis::barrier(c(3.0, -2.0), wn(5.0)).unwrap();
        let v1 = Perturbation::regular(|x| c(x.cos(), x), vec![]);
        let it = SeriesIterates::new(basis, &v1, 3, QuadOptions::default());
        for ell in 1..=3 {
            for j in [Solution::First, Solution::Second] {
                assert!(it.phi(j, ell, 0.0).norm() < 1e-12);
                assert!(it.dphi(j, ell, 0.0).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn first_order_regular_matches_direct_quadrature() {
        // phi^(1)(x) = int_0^x G(x,y) v1(y) phi(y) dy, checked with a plain rule on [0, x]
        let basis = UnperturbedBasis::barrier(c(-8.0, 1.0), wn(3.0)).unwrap();
        let v = |y: f64| c(1.0 + y * y, -0.5 * y);
        let v1 = Perturbation::regular(v, vec![]);
        let x = 0.73;
        let direct = CompositeRule::on_interval(0.0, x, &[], 8, 16)
            .integrate(|y| basis.green(x, y) * v(y) * basis.phi(Solution::Second, y));
        let got = phi_correction(&basis, &v1, 1, Solution::Second, x);
        assert!((got - direct).norm() < 1e-14, "{got} {direct}");
    }

    #[test]
    fn f_ell_routes_agree() {
        let n = RefractiveRoot::from_value(c(2.1, -0.05)).unwrap();
        let k = 9.0;
        let basis = UnperturbedBasis::from_root(n, wn(k));
        let profile = GainProfile::single(0.4);
        let v1 = Perturbation::from_profile(&profile);
        let it = SeriesIterates::new(basis, &v1, 3, QuadOptions::default());
        for ell in 1..=3 {
            let direct = barrier_f_ell(n, k, &profile, ell, QuadOptions::default());
            let generic = it.jost(Solution::First, Side::Minus, ell);
            assert!((direct - generic).norm() < 1e-12 * direct.norm().max(1e-3), "{ell}: {direct} {generic}");
        }
        let f1 = barrier_f_ell(n, k, &profile, 1, QuadOptions::default());
        let xi = CompositeRule::new(&[], 16, 16).integrate(|x| barrier_xi(n, k, x) * profile.eval(x));
        assert!((f1 - xi).norm() < 1e-14);
    }

    #[test]
    fn series_partial_sum_matches_horner() {
        let s = JostSeries { coefficients: vec![c(1.0, 0.0), c(2.0, 1.0), c(0.0, -1.0)] };
        let t = c(0.1, 0.2);
        let direct = s.coefficients[0] + s.coefficients[1] * t + s.coefficients[2] * t * t;
        assert!((s.partial_sum(t, 2) - direct).norm() < 1e-15);
        assert_eq!(s.partial_sum(t, 0), c(1.0, 0.0));
    }

    /// Barrier singularity of mode `m` at wave number `k`: fixed point of
    /// `nk = i Log q + pi m`.
    fn barrier_root(k: f64, m: i64, seed: Complex64) -> RefractiveRoot {
        let mut n = seed;
        for _ in 0..200 {
            let q = (n - 1.0) / (n + 1.0);
            n = (I * q.ln() + std::f64::consts::PI * m as f64) / k;
        }
        RefractiveRoot::from_value(n).unwrap()
    }

    #[test]
    fn closed_forms_at_both_parities() {
        for m in [40, 41] {
            let k = 37.0;
            let n = barrier_root(k, m, c(3.4, 0.0));
            assert!(ss_residual(n, k).norm() < 1e-13);
            assert_eq!(singularity_parity(n, k), if m % 2 == 0 { 1.0 } else { -1.0 });
            for x in [0.0, 0.2, 0.5, 0.77] {
                assert!((barrier_xi_at_ss(n, k, x) - barrier_xi(n, k, x)).norm() < 1e-12);
            }
            for (pumping, nu) in [(Pumping::Single, 0.3), (Pumping::Double, 0.3), (Pumping::Single, 2.0), (Pumping::Double, 1e-3)] {
                let closed = f100_closed(n, k, nu, pumping).unwrap();
                let quad = barrier_f_ell(n, k, &GainProfile::Pumped { pumping, nu }, 1, QuadOptions::default());
                assert!((closed - quad).norm() < 1e-12 * quad.norm(), "m = {m} {pumping} {nu}: {closed} {quad}");
            }
        }
    }

    #[test]
    fn f100_requires_singularity() {
        let n = RefractiveRoot::from_value(c(3.4, -0.01)).unwrap();
        assert!(matches!(f100_closed(n, 100.0, 0.1, Pumping::Single), Err(Error::NotAtSingularity { .. })));
    }
}
