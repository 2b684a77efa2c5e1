//! Threshold-lasing points of the pumped slab.
//!
//! The homogeneous slab is solved exactly from the barrier condition
//! `e^{-2ink} = ((n-1)/(n+1))^2`. Inhomogeneous pumping is handled to first
//! order through the Taylor coefficients of the Jost function, and a
//! Newton iteration on the directly integrated Jost function serves as the
//! reference.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::optics::{build_potential, gain_shape, fn_and_derivatives, map_parameters, SlabMedium, PER_CM_TO_PER_NM};
use crate::perturbation::{barrier_f0, barrier_f_ell, f100_closed, ss_residual, QuadOptions, RefractiveRoot};
use crate::potential::{GainProfile, Pumping, WaveNumber};
use crate::transfer::{assemble_transfer_matrix, integrate_fundamental, jost_from_pair};
use crate::{Error, Result, DEFAULT_TOL};

const I: Complex64 = Complex64::new(0.0, 1.0);
const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Convergence threshold on `|e^{-2ink} - q^2|`.
pub const SS_TOL: f64 = 1e-12;
/// Relative convergence threshold of the direct Newton iteration.
pub const FULL_NUMERIC_TOL: f64 = 1e-11;
const MAX_NEWTON: usize = 60;
/// Largest relative residual accepted when the direct iteration stagnates.
const STAGNATION_LIMIT: f64 = 1e-8;
const SEED_SCAN_POINTS: usize = 401;

/// Homogeneous-slab singularity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnperturbedRoot {
    pub mode_m: i64,
    pub lambda_nm: f64,
    pub g_per_cm: f64,
    pub fn0: Complex64,
    pub k0: f64,
    pub ss_residual: f64,
    pub iterations: usize,
}

impl UnperturbedRoot {
    pub fn refractive_root(&self) -> Result<RefractiveRoot> {
        RefractiveRoot::from_value(self.fn0)
    }
}

/// `R = -2ink - 2 Log q + 2 pi i m` and its partials in `lambda` (nm) and `g` (cm⁻¹).
fn log_residual(medium: &SlabMedium, mode: i64, lambda: f64, g: f64) -> Result<[Complex64; 3]> {
    let (n, n_l, n_g) = fn_and_derivatives(medium, lambda, g)?;
    let n_g = n_g * PER_CM_TO_PER_NM;
    let k = medium.wave_number(lambda);
    let q = (n - 1.0) / (n + 1.0);
    let r = -2.0 * I * n * k - 2.0 * q.ln() + TWO_PI * I * mode as f64;
    let dlogq = 2.0 / (n * n - 1.0);
    let d_lambda = -2.0 * I * (n_l * k - n * k / lambda) - 2.0 * dlogq * n_l;
    let d_g = -2.0 * I * n_g * k - 2.0 * dlogq * n_g;
    Ok([r, d_lambda, d_g])
}

fn barrier_residual(medium: &SlabMedium, lambda: f64, g: f64) -> Result<f64> {
    let n = RefractiveRoot::from_value(map_parameters(medium, lambda, g).fn0)?;
    Ok(ss_residual(n, medium.wave_number(lambda)).norm())
}

/// Solves `[re a, re b; im a, im b] (dx, dy) = -(re r, im r)`.
fn real_newton_step(r: Complex64, a: Complex64, b: Complex64) -> Result<(f64, f64)> {
    let det = a.re * b.im - b.re * a.im;
    if det == 0.0 || !det.is_finite() || det.abs() < 1e-300 {
        return Err(Error::JacobianSingular);
    }
    Ok(((-r.re * b.im + b.re * r.im) / det, (-a.re * r.im + a.im * r.re) / det))
}

/// Seed for mode `m`: `lambda = 2 n0 L / m`, `g` minimizing the modulus
/// mismatch `|Re R|` over `[0, alpha]`.
pub fn seed(medium: &SlabMedium, mode: i64) -> (f64, f64) {
    let lambda = 2.0 * medium.n0 * medium.l_nm() / mode as f64;
    let alpha = medium.alpha_per_cm;
    let best = (0..SEED_SCAN_POINTS)
        .map(|i| alpha * i as f64 / (SEED_SCAN_POINTS - 1) as f64)
        .filter_map(|g| log_residual(medium, mode, lambda, g).ok().map(|r| (g, r[0].re.abs())))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map_or(0.5 * alpha, |(g, _)| g);
    (lambda, best)
}

/// Solves the homogeneous condition for mode `m` by Newton on the
/// logarithmic form, with `g` scaled by `alpha`.
pub fn solve_unperturbed(medium: &SlabMedium, mode: i64, start: Option<(f64, f64)>) -> Result<UnperturbedRoot> {
    medium.validate()?;
    let (mut lambda, mut g) = start.unwrap_or_else(|| seed(medium, mode));
    let alpha = medium.alpha_per_cm;
    let mut r = log_residual(medium, mode, lambda, g)?;
    for it in 0..MAX_NEWTON {
        let ss = barrier_residual(medium, lambda, g)?;
        let (dl, ds) = real_newton_step(r[0], r[1], r[2] * alpha)?;
        let small_step = dl.abs() <= 4.0 * f64::EPSILON * lambda && ds.abs() <= 4.0 * f64::EPSILON;
        if ss < SS_TOL && (small_step || r[0].norm() < 1e-14) {
            return finish(medium, mode, lambda, g, it);
        }
        // damped update
        let mut t = 1.0;
        loop {
            let (l_new, g_new) = (lambda + t * dl, g + t * ds * alpha);
            if l_new > 0.0 {
                if let Ok(r_new) = log_residual(medium, mode, l_new, g_new) {
                    if r_new[0].norm() < r[0].norm() || t < 1e-3 {
                        lambda = l_new;
                        g = g_new;
                        r = r_new;
                        break;
                    }
                }
            }
            t *= 0.5;
            if t < 1e-6 {
                return Err(Error::NoConvergence { what: "unperturbed root".into(), iterations: it, residual: ss });
            }
        }
        if small_step {
            // stagnated at rounding level
            let ss = barrier_residual(medium, lambda, g)?;
            if ss < SS_TOL {
                return finish(medium, mode, lambda, g, it + 1);
            }
            return Err(Error::NoConvergence { what: "unperturbed root".into(), iterations: it + 1, residual: ss });
        }
    }
    Err(Error::NoConvergence {
        what: "unperturbed root".into(),
        iterations: MAX_NEWTON,
        residual: barrier_residual(medium, lambda, g)?,
    })
}

fn finish(medium: &SlabMedium, mode: i64, lambda: f64, g: f64, iterations: usize) -> Result<UnperturbedRoot> {
    let p = map_parameters(medium, lambda, g);
    let n = RefractiveRoot::from_value(p.fn0)?;
    Ok(UnperturbedRoot {
        mode_m: mode,
        lambda_nm: lambda,
        g_per_cm: g,
        fn0: n.value(),
        k0: p.k,
        ss_residual: ss_residual(n, p.k).norm(),
        iterations,
    })
}

/// `round(2 Re(n) L / lambda)` with the refractive root of the unpumped host.
pub fn mode_number(lambda_nm: f64, medium: &SlabMedium) -> i64 {
    let n = map_parameters(medium, lambda_nm, 0.0).fn0;
    (2.0 * n.re * medium.l_nm() / lambda_nm).round() as i64
}

/// Taylor coefficients `F_{l p q} = (1/p! q!) d^p_n d^q_k F_l` at `(n0, k0)`,
/// where `F_l` is the coefficient of `(z2 eps)^l` in the Jost function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorData {
    pub f000: Complex64,
    pub f010: Complex64,
    pub f001: Complex64,
    pub f100: Complex64,
    /// Absent when only first-order data was requested.
    pub second: Option<SecondOrderTaylor>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderTaylor {
    pub f020: Complex64,
    pub f011: Complex64,
    pub f002: Complex64,
    pub f110: Complex64,
    pub f101: Complex64,
    pub f200: Complex64,
}

/// Richardson-extrapolated central first difference.
fn d1(f: &impl Fn(f64) -> Complex64, h: f64) -> Complex64 {
    let c = |h: f64| (f(h) - f(-h)) / (2.0 * h);
    (4.0 * c(0.5 * h) - c(h)) / 3.0
}

/// Richardson-extrapolated central second difference.
fn d2(f: &impl Fn(f64) -> Complex64, h: f64) -> Complex64 {
    let f0 = f(0.0);
    let c = |h: f64| (f(h) - 2.0 * f0 + f(-h)) / (h * h);
    (4.0 * c(0.5 * h) - c(h)) / 3.0
}

/// Mixed second difference `d^2 f / dx dy`.
fn d11(f: &impl Fn(f64, f64) -> Complex64, hx: f64, hy: f64) -> Complex64 {
    let c = |hx: f64, hy: f64| (f(hx, hy) - f(hx, -hy) - f(-hx, hy) + f(-hx, -hy)) / (4.0 * hx * hy);
    (4.0 * c(0.5 * hx, 0.5 * hy) - c(hx, hy)) / 3.0
}

/// Closed-form `F_010 = (z1 + 2ik)/n` and `F_001 = z1/k` at a singularity.
pub fn first_derivatives_at_root(n0: RefractiveRoot, k0: f64) -> (Complex64, Complex64) {
    let n = n0.value();
    let z1 = k0 * k0 * (1.0 - n * n);
    ((z1 + 2.0 * I * k0) / n, z1 / k0)
}

/// Taylor data through second order at a homogeneous singularity.
pub fn taylor_data(n0: RefractiveRoot, k0: f64, profile: &GainProfile, opts: QuadOptions) -> Result<TaylorData> {
    let mut td = first_order_taylor(n0, k0, profile, opts)?;
    let n = n0.value();
    let root = |dn: f64| RefractiveRoot::from_value(n + dn).expect("nonzero near the root");
    let f0 = |dn: f64, dk: f64| barrier_f0(root(dn), k0 + dk);
    let f1 = |dn: f64, dk: f64| barrier_f_ell(root(dn), k0 + dk, profile, 1, opts);
    let hn = 1e-3 / k0;
    let hk = 1e-3 / n.norm();
    td.second = Some(SecondOrderTaylor {
        f020: 0.5 * d2(&|h| f0(h, 0.0), hn),
        f011: d11(&f0, hn, hk),
        f002: 0.5 * d2(&|h| f0(0.0, h), hk),
        f110: d1(&|h| f1(h, 0.0), hn),
        f101: d1(&|h| f1(0.0, h), hk),
        f200: barrier_f_ell(n0, k0, profile, 2, opts),
    });
    Ok(td)
}

/// The coefficients needed at first order: `F_000`, `F_010`, `F_001`, `F_100`.
pub fn first_order_taylor(n0: RefractiveRoot, k0: f64, profile: &GainProfile, opts: QuadOptions) -> Result<TaylorData> {
    let residual = ss_residual(n0, k0).norm();
    if residual > crate::perturbation::SS_RESIDUAL_LIMIT {
        return Err(Error::NotAtSingularity { residual });
    }
    let (f010, f001) = first_derivatives_at_root(n0, k0);
    let f100 = match profile {
        GainProfile::Pumped { pumping, nu } if *nu > 0.0 => f100_closed(n0, k0, *nu, *pumping)?,
        _ => barrier_f_ell(n0, k0, profile, 1, opts),
    };
    Ok(TaylorData { f000: barrier_f0(n0, k0), f010, f001, f100, second: None })
}

/// Complex linear equation `X lambda1 + Y g1 + rhs = 0` for real shifts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionCoefficients {
    pub x: Complex64,
    pub y: Complex64,
    /// `F_100 z2`.
    pub rhs: Complex64,
    /// Wavelength shift per unit `eps` (nm).
    pub lambda1: f64,
    /// Gain shift per unit `eps` (cm⁻¹).
    pub g1: f64,
    /// `|X lambda1 + Y g1 + rhs| / |rhs|` with `g1` in nm⁻¹.
    pub backsub_residual: f64,
}

pub fn first_order_correction(td: &TaylorData, medium: &SlabMedium, root: &UnperturbedRoot) -> Result<CorrectionCoefficients> {
    let (lambda, g) = (root.lambda_nm, root.g_per_cm);
    let (_, n_l, n_g) = fn_and_derivatives(medium, lambda, g)?;
    let p = map_parameters(medium, lambda, g);
    let dk_dlambda = -TWO_PI * medium.l_nm() / (lambda * lambda);
    let x = n_l * td.f010 + dk_dlambda * td.f001;
    let y = n_g * td.f010;
    let rhs = td.f100 * p.zeta2;
    let det = (x * y.conj()).im;
    if det.abs() < 1e-18 * x.norm() * y.norm() {
        return Err(Error::DegenerateXY);
    }
    let lambda1 = -(rhs * y.conj()).im / det;
    let g1_nm = (rhs * x.conj()).im / det;
    let backsub_residual = if rhs.norm() > 0.0 { (x * lambda1 + y * g1_nm + rhs).norm() / rhs.norm() } else { 0.0 };
    Ok(CorrectionCoefficients { x, y, rhs, lambda1, g1: g1_nm / PER_CM_TO_PER_NM, backsub_residual })
}

/// Refractive-root corrections `(n1, n2)` at fixed `k`, for a perturbation
/// `z2 eps f`; `n2` is zero when `order == 1` and needs second-order data otherwise.
pub fn generic_corrections(td: &TaylorData, z2: Complex64, order: u8) -> Result<(Complex64, Complex64)> {
    if td.f010.norm() == 0.0 {
        return Err(Error::DegenerateF010);
    }
    let n1 = -td.f100 * z2 / td.f010;
    let n2 = match (order, td.second) {
        (1, _) => Complex64::new(0.0, 0.0),
        (2, Some(s)) => -(s.f020 * n1 * n1 + s.f110 * n1 * z2 + s.f200 * z2 * z2) / td.f010,
        (2, None) => return Err(Error::InvalidParameter("second-order Taylor data not computed".into())),
        _ => return Err(Error::InvalidParameter(format!("correction order {order} not in {{1, 2}}"))),
    };
    Ok((n1, n2))
}

/// How a reported singularity was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    Unperturbed,
    FirstOrder,
    /// Newton on the integrated Jost function of the full potential.
    FullNumeric,
}

impl Order {
    pub fn as_str(self) -> &'static str {
        match self {
            Order::Unperturbed => "0",
            Order::FirstOrder => "1",
            Order::FullNumeric => "full",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularityResult {
    pub mode_m: i64,
    pub pumping: Pumping,
    pub nu: f64,
    pub lambda0_nm: f64,
    pub g0_per_cm: f64,
    pub lambda_star_nm: f64,
    pub g_star_per_cm: f64,
    pub eps: f64,
    pub order: Order,
    /// `|Gamma_{1-}|` of the full potential at the reported point.
    pub residual: f64,
    /// `|M22| = |Gamma_{1-}| / 2k`.
    pub m22_abs: f64,
    pub det_defect: f64,
    pub wronskian_defect: f64,
    pub backsub_residual: f64,
    pub fn0: Complex64,
    pub k0: f64,
}

/// Jost function of the full mapped potential, with structural diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectJost {
    pub gamma_1_minus: Complex64,
    pub k: f64,
    pub det_defect: f64,
    pub wronskian_defect: f64,
    /// Natural magnitude of the Jost function terms.
    pub scale: f64,
}

pub fn direct_jost(medium: &SlabMedium, lambda_nm: f64, g0_per_cm: f64, tol: f64) -> Result<DirectJost> {
    let k = medium.wave_number(lambda_nm);
    let wk = WaveNumber::new(k)?;
    let pair = integrate_fundamental(&build_potential(medium, lambda_nm, g0_per_cm), wk, tol)?;
    let jost = jost_from_pair(&pair);
    let m = assemble_transfer_matrix(&jost, wk)?;
    let n = map_parameters(medium, lambda_nm, g0_per_cm).fn0.norm();
    Ok(DirectJost {
        gamma_1_minus: jost.gamma_1_minus,
        k,
        det_defect: (m.det() - 1.0).norm(),
        wronskian_defect: pair.wronskian_defect(),
        scale: k * (n * n + 1.0) / n,
    })
}

fn assemble(
    medium: &SlabMedium,
    root: &UnperturbedRoot,
    lambda: f64,
    g: f64,
    order: Order,
    backsub_residual: f64,
    tol: f64,
) -> Result<SingularityResult> {
    let j = direct_jost(medium, lambda, g, tol)?;
    Ok(SingularityResult {
        mode_m: root.mode_m,
        pumping: medium.pumping,
        nu: medium.nu,
        lambda0_nm: root.lambda_nm,
        g0_per_cm: root.g_per_cm,
        lambda_star_nm: lambda,
        g_star_per_cm: g,
        eps: medium.eps(),
        order,
        residual: j.gamma_1_minus.norm(),
        m22_abs: j.gamma_1_minus.norm() / (2.0 * j.k),
        det_defect: j.det_defect,
        wronskian_defect: j.wronskian_defect,
        backsub_residual,
        fn0: root.fn0,
        k0: root.k0,
    })
}

/// Homogeneous root plus first-order shift for the medium's pumping and `nu`.
pub fn first_order_singularity(medium: &SlabMedium, mode: i64, opts: QuadOptions) -> Result<SingularityResult> {
    let root = solve_unperturbed(medium, mode, None)?;
    let eps = medium.eps();
    if eps == 0.0 {
        return assemble(medium, &root, root.lambda_nm, root.g_per_cm, Order::Unperturbed, 0.0, DEFAULT_TOL);
    }
    let td = first_order_taylor(root.refractive_root()?, root.k0, &gain_shape(medium), opts)?;
    let c = first_order_correction(&td, medium, &root)?;
    assemble(
        medium,
        &root,
        root.lambda_nm + c.lambda1 * eps,
        root.g_per_cm + c.g1 * eps,
        Order::FirstOrder,
        c.backsub_residual,
        DEFAULT_TOL,
    )
}

/// Newton over `(lambda, g0)` on the integrated Jost function of the full
/// potential, with central-difference Jacobian.
pub fn full_numeric_singularity(medium: &SlabMedium, mode: i64, seed: (f64, f64), tol: f64) -> Result<SingularityResult> {
    medium.validate()?;
    let alpha = medium.alpha_per_cm;
    let (mut lambda, mut g) = seed;
    let eval = |l: f64, g: f64| direct_jost(medium, l, g, tol);
    let mut j = eval(lambda, g)?;
    let mut best = j.gamma_1_minus.norm();
    let mut iterations = 0;
    loop {
        if j.gamma_1_minus.norm() < FULL_NUMERIC_TOL * j.scale {
            break;
        }
        if iterations == MAX_NEWTON {
            return Err(Error::NoConvergence {
                what: "full numeric singularity".into(),
                iterations,
                residual: j.gamma_1_minus.norm() / j.scale,
            });
        }
        iterations += 1;
        let hl = 1e-6 * lambda;
        let hs = 1e-6;
        let d_l = (eval(lambda + hl, g)?.gamma_1_minus - eval(lambda - hl, g)?.gamma_1_minus) / (2.0 * hl);
        let d_s = (eval(lambda, g + hs * alpha)?.gamma_1_minus - eval(lambda, g - hs * alpha)?.gamma_1_minus) / (2.0 * hs);
        let (dl, ds) = real_newton_step(j.gamma_1_minus, d_l, d_s)?;
        lambda += dl;
        g += ds * alpha;
        j = eval(lambda, g)?;
        let now = j.gamma_1_minus.norm();
        let tiny = dl.abs() < 1e-13 * lambda && ds.abs() < 1e-13;
        if tiny && now >= 0.5 * best {
            // stagnated at the integration noise floor
            if now > STAGNATION_LIMIT * j.scale {
                return Err(Error::NoConvergence {
                    what: "full numeric singularity".into(),
                    iterations,
                    residual: now / j.scale,
                });
            }
            break;
        }
        best = best.min(now);
    }
    let root = UnperturbedRoot {
        mode_m: mode,
        lambda_nm: lambda,
        g_per_cm: g,
        fn0: map_parameters(medium, lambda, g).fn0,
        k0: medium.wave_number(lambda),
        ss_residual: f64::NAN,
        iterations,
    };
    let mut r = assemble(medium, &root, lambda, g, Order::FullNumeric, 0.0, tol)?;
    let hom = solve_unperturbed(medium, mode, None)?;
    r.lambda0_nm = hom.lambda_nm;
    r.g0_per_cm = hom.g_per_cm;
    r.fn0 = hom.fn0;
    r.k0 = hom.k0;
    Ok(r)
}
