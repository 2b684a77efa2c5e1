//! Cross-engine property checks.
//!
//! Every check takes its threshold as an argument and returns a
//! [`CheckOutcome`] carrying the measured value, so the same code drives the
//! `verify` command and the acceptance suite.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::delta::{closed_form_matrix, composition_oracle, find_singularities_delta, regularized_oracle, DeltaStrategy};
use crate::finder::{first_order_singularity, full_numeric_singularity, solve_unperturbed, SingularityResult};
use crate::optics::{threshold_table, SlabMedium};
use crate::perturbation::{
    barrier_f0, barrier_f_ell, f100_closed, Perturbation, QuadOptions, RefractiveRoot, SeriesIterates, Side, Solution,
    UnperturbedBasis,
};
use crate::potential::{Barrier, DeltaArray, GainProfile, PotentialSpec, Pumping, WaveNumber};
use crate::transfer::{assemble_transfer_matrix, integrate_fundamental, jost_from_pair};
use crate::{Result, DEFAULT_TOL};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Modes of the reference threshold table.
pub const TABLE_MODES: [i64; 5] = [1358, 1359, 1360, 1361, 1362];
/// Decay constants of the reference threshold table.
pub const TABLE_NUS: [f64; 5] = [0.0, 0.1, 0.2, 0.3, 0.5];

/// Largest structural defects seen by the direct solver during a check.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub runs: usize,
    /// `|det M - 1| / max(1, max|M_ij|)^2`.
    pub det_defect: f64,
    /// Relative Wronskian defect, see [`crate::transfer::FundamentalPair::wronskian_defect`].
    pub wronskian_defect: f64,
    /// Relative back-substitution residual of the first-order equation.
    pub backsub: f64,
}

impl Diagnostics {
    pub fn merge(self, o: Diagnostics) -> Diagnostics {
        Diagnostics {
            runs: self.runs + o.runs,
            det_defect: self.det_defect.max(o.det_defect),
            wronskian_defect: self.wronskian_defect.max(o.wronskian_defect),
            backsub: self.backsub.max(o.backsub),
        }
    }

    fn run(det: f64, wronskian: f64) -> Self {
        Diagnostics { runs: 1, det_defect: det, wronskian_defect: wronskian, backsub: 0.0 }
    }

    pub fn from_results(results: &[SingularityResult]) -> Self {
        results.iter().fold(Diagnostics::default(), |d, r| {
            d.merge(Diagnostics {
                runs: 1,
                det_defect: r.det_defect,
                wronskian_defect: r.wronskian_defect,
                backsub: r.backsub_residual,
            })
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    /// `true` when `measured` must be at least `threshold` rather than below it.
    pub lower_bound: bool,
    pub passed: bool,
    pub detail: String,
    pub diagnostics: Diagnostics,
}

impl CheckOutcome {
    fn below(name: &str, measured: f64, threshold: f64, detail: String, diagnostics: Diagnostics) -> Self {
        Self {
            name: name.into(),
            measured,
            threshold,
            lower_bound: false,
            passed: measured < threshold,
            detail,
            diagnostics,
        }
    }

    fn at_least(name: &str, measured: f64, threshold: f64, detail: String, diagnostics: Diagnostics) -> Self {
        Self {
            name: name.into(),
            measured,
            threshold,
            lower_bound: true,
            passed: measured >= threshold,
            detail,
            diagnostics,
        }
    }

    fn failed(name: &str, threshold: f64, err: impl std::fmt::Display) -> Self {
        Self {
            name: name.into(),
            measured: f64::NAN,
            threshold,
            lower_bound: false,
            passed: false,
            detail: format!("error: {err}"),
            diagnostics: Diagnostics::default(),
        }
    }

    /// One table line: status, name, measured vs threshold, detail.
    pub fn line(&self) -> String {
        let op = if self.lower_bound { ">=" } else { "<" };
        format!(
            "{} {:<32} {:.3e} {op} {:.3e}  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.threshold,
            self.detail
        )
    }
}

fn finish(name: &str, threshold: f64, r: Result<CheckOutcome>) -> CheckOutcome {
    r.unwrap_or_else(|e| CheckOutcome::failed(name, threshold, e))
}

fn random_array(rng: &mut ChaCha8Rng, max_n: usize, max_coupling: f64) -> DeltaArray {
    loop {
        let n = rng.gen_range(1..=max_n);
        let mut centers: Vec<f64> = (0..n).map(|_| rng.gen_range(0.02..0.98)).collect();
        centers.sort_by(f64::total_cmp);
        if centers.windows(2).any(|w| w[1] - w[0] < 0.01) {
            continue;
        }
        let couplings = centers
            .iter()
            .map(|_| {
                let r = rng.gen_range(0.0..max_coupling);
                let t = rng.gen_range(0.0..std::f64::consts::TAU);
                Complex64::from_polar(r, t)
            })
            .collect();
        return DeltaArray::new(centers, couplings).expect("valid by construction");
    }
}

/// Closed-form delta-array matrices against sequential composition, relative
/// to `max(1, max|M_ij|)`.
pub fn delta_closed_vs_composition(samples: usize, seed: u64, tol: f64) -> CheckOutcome {
    const NAME: &str = "delta_closed_vs_composition";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<(DeltaArray, f64)> = (0..samples).map(|_| (random_array(&mut rng, 6, 20.0), rng.gen_range(1.0..30.0))).collect();
    finish(
        NAME,
        tol,
        (|| {
            let worst = cases
                .par_iter()
                .map(|(spec, k)| {
                    let k = WaveNumber::new(*k)?;
                    let closed = closed_form_matrix(spec, k)?;
                    let comp = composition_oracle(spec, k)?;
                    Ok(closed.max_diff(&comp) / closed.max_norm().max(1.0))
                })
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok(CheckOutcome::below(NAME, worst, tol, format!("{samples} random arrays"), Diagnostics::default()))
        })(),
    )
}

/// Closed forms against narrow rectangles integrated by the ODE solver and
/// extrapolated to zero width.
pub fn delta_closed_vs_regularized(samples: usize, seed: u64, tol: f64) -> CheckOutcome {
    const NAME: &str = "delta_closed_vs_regularized";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<(DeltaArray, f64)> = (0..samples).map(|_| (random_array(&mut rng, 6, 20.0), rng.gen_range(1.0..30.0))).collect();
    finish(
        NAME,
        tol,
        (|| {
            let rows = cases
                .par_iter()
                .map(|(spec, k)| {
                    let k = WaveNumber::new(*k)?;
                    let gap = spec
                        .centers
                        .windows(2)
                        .map(|w| w[1] - w[0])
                        .chain([spec.centers[0], 1.0 - spec.centers[spec.len() - 1]])
                        .fold(f64::INFINITY, f64::min);
                    let width = (0.5 * gap).min(2e-3);
                    let oracle = regularized_oracle(spec, k, width, 1e-13)?;
                    let closed = closed_form_matrix(spec, k)?;
                    let scale = closed.max_norm().max(1.0);
                    let diag = oracle.raw.iter().fold(Diagnostics::default(), |d, m| {
                        d.merge(Diagnostics::run((m.det() - 1.0).norm() / (m.max_norm().max(1.0).powi(2)), 0.0))
                    });
                    Ok((oracle.extrapolated.max_diff(&closed) / scale, diag))
                })
                .collect::<Result<Vec<_>>>()?;
            let worst = rows.iter().map(|r| r.0).fold(0.0, f64::max);
            let diag = rows.iter().fold(Diagnostics::default(), |d, r| d.merge(r.1));
            Ok(CheckOutcome::below(NAME, worst, tol, format!("{samples} random arrays, widths w, w/2, w/4"), diag))
        })(),
    )
}

/// For `n` deltas the perturbative Jost coefficients vanish beyond order `n`.
pub fn exactness_theorem(seed: u64, tol: f64) -> CheckOutcome {
    const NAME: &str = "series_truncation";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        for _ in 0..4 {
            let mut centers: Vec<f64> = (0..n).map(|i| (i as f64 + rng.gen_range(0.1..0.9)) / n as f64).collect();
            centers.sort_by(f64::total_cmp);
            let couplings = (0..n).map(|_| Complex64::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0))).collect();
            let spec = DeltaArray { centers, couplings };
            let k = WaveNumber::new(rng.gen_range(1.0..20.0)).expect("positive");
            let it = SeriesIterates::new(UnperturbedBasis::free(k), &Perturbation::from_deltas(&spec), n + 2, QuadOptions::default());
            let top = it.jost(Solution::First, Side::Minus, n).norm();
            for ell in n + 1..=n + 2 {
                worst = worst.max(it.jost(Solution::First, Side::Minus, ell).norm() / top);
            }
        }
    }
    CheckOutcome::below(NAME, worst, tol, "n = 1, 2, 3; orders n+1 and n+2".into(), Diagnostics::default())
}

/// Closed-form barrier Jost function against the ODE over a `(z1, k)` grid,
/// relative to `k (|n|^2 + 1) / |n|`.
pub fn barrier_f0_vs_ode(tol: f64) -> CheckOutcome {
    const NAME: &str = "barrier_f0_vs_ode";
    let ks = [1.0, 4.5, 12.0, 40.0];
    let heights = [
        Complex64::new(-50.0, 10.0),
        Complex64::new(30.0, -5.0),
        Complex64::new(0.0, 200.0),
        Complex64::new(-400.0, -3.0),
        Complex64::new(2.0, 0.5),
    ];
    let cases: Vec<(f64, Complex64)> = ks.iter().flat_map(|&k| heights.map(|z| (k, z))).collect();
    finish(
        NAME,
        tol,
        (|| {
            let rows = cases
                .par_iter()
                .map(|&(k, z1)| {
                    let wk = WaveNumber::new(k)?;
                    let pair = integrate_fundamental(&PotentialSpec::Barrier(Barrier::constant(z1)), wk, 1e-13)?;
                    let jost = jost_from_pair(&pair);
                    let m = assemble_transfer_matrix(&jost, wk)?;
                    let n = RefractiveRoot::new(z1, wk)?;
                    let scale = k * (n.value().norm_sqr() + 1.0) / n.value().norm() * (n.value().im * k).abs().exp();
                    let err = (barrier_f0(n, k) - jost.gamma_1_minus).norm() / scale;
                    let det = (m.det() - 1.0).norm() / m.max_norm().max(1.0).powi(2);
                    Ok((err, Diagnostics::run(det, pair.wronskian_defect())))
                })
                .collect::<Result<Vec<_>>>()?;
            let worst = rows.iter().map(|r| r.0).fold(0.0, f64::max);
            let diag = rows.iter().fold(Diagnostics::default(), |d, r| d.merge(r.1));
            Ok(CheckOutcome::below(NAME, worst, tol, format!("{} (z1, k) pairs", cases.len()), diag))
        })(),
    )
}

/// First-order coefficient in closed form against the single quadrature, at
/// every reference mode, both pumpings.
pub fn f100_closed_vs_quadrature(medium: &SlabMedium, nus: &[f64], tol: f64) -> CheckOutcome {
    const NAME: &str = "f100_closed_vs_quadrature";
    finish(
        NAME,
        tol,
        (|| {
            let mut worst: f64 = 0.0;
            for mode in TABLE_MODES {
                let root = solve_unperturbed(medium, mode, None)?;
                let n0 = root.refractive_root()?;
                for &nu in nus {
                    for pumping in Pumping::ALL {
                        let closed = f100_closed(n0, root.k0, nu, pumping)?;
                        let quad = barrier_f_ell(n0, root.k0, &GainProfile::Pumped { pumping, nu }, 1, QuadOptions::default());
                        worst = worst.max((closed - quad).norm() / closed.norm());
                    }
                }
            }
            Ok(CheckOutcome::below(NAME, worst, tol, format!("5 modes x nu {nus:?} x 2 pumpings"), Diagnostics::default()))
        })(),
    )
}

/// Second-order coefficient: sine-kernel recursion against the generic
/// Green's-function series on the barrier background.
pub fn second_order_routes(medium: &SlabMedium, tol: f64) -> CheckOutcome {
    const NAME: &str = "second_order_routes";
    finish(
        NAME,
        tol,
        (|| {
            let root = solve_unperturbed(medium, 1360, None)?;
            let n0 = root.refractive_root()?;
            let mut worst: f64 = 0.0;
            for profile in [GainProfile::single(0.3), GainProfile::double(0.3)] {
                let opts = QuadOptions::default();
                let direct = barrier_f_ell(n0, root.k0, &profile, 2, opts);
                let basis = UnperturbedBasis::from_root(n0, WaveNumber::new(root.k0)?);
                let it = SeriesIterates::new(basis, &Perturbation::from_profile(&profile), 2, opts);
                let generic = it.jost(Solution::First, Side::Minus, 2);
                worst = worst.max((direct - generic).norm() / direct.norm());
            }
            Ok(CheckOutcome::below(NAME, worst, tol, "mode 1360, nu = 0.3, both pumpings".into(), Diagnostics::default()))
        })(),
    )
}

/// First-order versus direct solutions at halving `nu`.
#[derive(Debug, Clone, Serialize)]
pub struct AccuracyRow {
    pub pumping: Pumping,
    pub nu: f64,
    pub first_order: SingularityResult,
    pub full: SingularityResult,
    pub g_gap: f64,
}

pub fn first_order_rows(medium: &SlabMedium, mode: i64, nus: &[f64], tol: f64) -> Result<Vec<AccuracyRow>> {
    let cells: Vec<(Pumping, f64)> = Pumping::ALL.iter().flat_map(|&p| nus.iter().map(move |&nu| (p, nu))).collect();
    cells
        .par_iter()
        .map(|&(pumping, nu)| {
            let m = medium.with_pumping(pumping, nu);
            let first = first_order_singularity(&m, mode, QuadOptions::default())?;
            let full = full_numeric_singularity(&m, mode, (first.lambda_star_nm, first.g_star_per_cm), tol)?;
            Ok(AccuracyRow { pumping, nu, first_order: first, full, g_gap: (first.g_star_per_cm - full.g_star_per_cm).abs() })
        })
        .collect()
}

/// The gap `|g(first order) - g(direct)|` must shrink by `min_ratio` per
/// halving of `nu`; `nus` is descending with ratio 2.
pub fn first_order_accuracy(medium: &SlabMedium, nus: &[f64], min_ratio: f64) -> CheckOutcome {
    const NAME: &str = "first_order_accuracy";
    finish(
        NAME,
        min_ratio,
        (|| {
            let rows = first_order_rows(medium, 1360, nus, DEFAULT_TOL)?;
            let mut worst = f64::INFINITY;
            let mut detail = Vec::new();
            for p in Pumping::ALL {
                let gaps: Vec<f64> = rows.iter().filter(|r| r.pumping == p).map(|r| r.g_gap).collect();
                let ratios: Vec<f64> = gaps.windows(2).map(|w| w[0] / w[1]).collect();
                worst = ratios.iter().copied().fold(worst, f64::min);
                detail.push(format!(
                    "{p}: gaps {} ratios {}",
                    gaps.iter().map(|g| format!("{g:.3e}")).collect::<Vec<_>>().join(" "),
                    ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join(" ")
                ));
            }
            let diag = rows.iter().fold(Diagnostics::default(), |d, r| {
                d.merge(Diagnostics::from_results(&[r.first_order, r.full]))
            });
            Ok(CheckOutcome::at_least(NAME, worst, min_ratio, detail.join("; "), diag))
        })(),
    )
}

/// Spectral singularities of one imaginary coupling `z = i beta` lie at `k = beta/2`.
pub fn single_delta_law(samples: usize, seed: u64, tol: f64) -> CheckOutcome {
    const NAME: &str = "single_delta_law";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<(f64, f64)> = (0..samples).map(|_| (rng.gen_range(0.5..60.0), rng.gen_range(0.05..0.95))).collect();
    finish(
        NAME,
        tol,
        (|| {
            let errs = cases
                .par_iter()
                .map(|&(beta, a)| {
                    let spec = DeltaArray::new(vec![a], vec![I * beta])?;
                    let target = 0.5 * beta;
                    let roots = find_singularities_delta(&spec, 0.7 * target, 1.3 * target, 301, DeltaStrategy::ScanFixedCouplings)?;
                    let err = match roots.as_slice() {
                        [r] => (r.k - target).abs(),
                        _ => f64::INFINITY,
                    };
                    Ok(err)
                })
                .collect::<Result<Vec<f64>>>()?;
            let worst = errs.into_iter().fold(0.0, f64::max);
            Ok(CheckOutcome::below(NAME, worst, tol, format!("{samples} couplings, exactly one root each"), Diagnostics::default()))
        })(),
    )
}

/// At `nu = 0` both pumpings give the unperturbed root exactly.
pub fn nu_zero_degeneracy(results: &[SingularityResult]) -> CheckOutcome {
    const NAME: &str = "nu_zero_degeneracy";
    let zero: Vec<&SingularityResult> = results.iter().filter(|r| r.nu == 0.0).collect();
    let mut worst: f64 = 0.0;
    for r in &zero {
        worst = worst.max((r.lambda_star_nm - r.lambda0_nm).abs()).max((r.g_star_per_cm - r.g0_per_cm).abs());
        for s in zero.iter().filter(|s| s.mode_m == r.mode_m) {
            worst = worst.max((r.lambda_star_nm - s.lambda_star_nm).abs()).max((r.g_star_per_cm - s.g_star_per_cm).abs());
        }
    }
    let passed = worst == 0.0 && !zero.is_empty();
    CheckOutcome {
        name: NAME.into(),
        measured: worst,
        threshold: 0.0,
        lower_bound: false,
        passed,
        detail: format!("{} cells at nu = 0, exact equality", zero.len()),
        diagnostics: Diagnostics::default(),
    }
}

/// Structural invariants collected from earlier runs.
pub fn structural_invariants(diag: Diagnostics, tol: f64, backsub_tol: f64) -> CheckOutcome {
    const NAME: &str = "structural_invariants";
    let measured = diag.det_defect.max(diag.wronskian_defect);
    let mut out = CheckOutcome::below(
        NAME,
        measured,
        tol,
        format!(
            "{} runs: det {:.1e}, wronskian {:.1e}, back-substitution {:.1e} (< {backsub_tol:.0e})",
            diag.runs, diag.det_defect, diag.wronskian_defect, diag.backsub
        ),
        diag,
    );
    out.passed &= diag.backsub < backsub_tol && diag.runs > 0;
    out
}

/// Options of [`run_all`].
#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    /// Skip the nested second-order quadrature.
    pub quick: bool,
    /// Replace every absolute tolerance.
    pub tolerance: Option<f64>,
}

/// The full property suite with default thresholds.
pub fn run_all(opts: VerifyOptions) -> Vec<CheckOutcome> {
    let t = |default: f64| opts.tolerance.unwrap_or(default);
    let medium = SlabMedium::reference();
    let mut out = vec![
        delta_closed_vs_composition(500, 1, t(1e-12)),
        delta_closed_vs_regularized(100, 2, t(1e-6)),
        exactness_theorem(3, t(1e-10)),
        single_delta_law(50, 4, t(1e-9)),
        barrier_f0_vs_ode(t(1e-10)),
        f100_closed_vs_quadrature(&medium, &[0.1, 0.3, 0.5], t(1e-10)),
    ];
    if !opts.quick {
        out.push(second_order_routes(&medium, t(1e-10)));
    }
    out.push(first_order_accuracy(&medium, &[0.2, 0.1, 0.05], 3.5));
    let table = threshold_table(&medium, &TABLE_MODES, &TABLE_NUS, QuadOptions::default());
    match table {
        Ok(rows) => {
            out.push(nu_zero_degeneracy(&rows));
            let diag = out.iter().fold(Diagnostics::from_results(&rows), |d, c| d.merge(c.diagnostics));
            out.push(structural_invariants(diag, t(1e-10), t(1e-12)));
        }
        Err(e) => out.push(CheckOutcome::failed("threshold_table", 0.0, e)),
    }
    out
}
