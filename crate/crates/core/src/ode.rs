//! Dormand-Prince 8(5,3) integrator for small complex first-order systems.
//!
//! Step control and the combined 5th/3rd order error estimate follow Hairer,
//! Nørsett and Wanner's DOP853.

use num_complex::Complex64;

use crate::{Error, Result};

const A: [[f64; 12]; 12] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.05260015195876773, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0197250569845379, 0.0591751709536137, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.02958758547680685, 0.0, 0.08876275643042054, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2413651341592667, 0.0, -0.8845494793282861, 0.924834003261792, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.037037037037037035, 0.0, 0.0, 0.17082860872947386, 0.12546768756682242, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.037109375, 0.0, 0.0, 0.17025221101954405, 0.06021653898045596, -0.017578125, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.03709200011850479, 0.0, 0.0, 0.17038392571223998, 0.10726203044637328, -0.015319437748624402, 0.008273789163814023, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.6241109587160757, 0.0, 0.0, -3.3608926294469414, -0.868219346841726, 27.59209969944671, 20.154067550477894, -43.48988418106996, 0.0, 0.0, 0.0, 0.0],
    [0.47766253643826434, 0.0, 0.0, -2.4881146199716677, -0.590290826836843, 21.230051448181193, 15.279233632882423, -33.28821096898486, -0.020331201708508627, 0.0, 0.0, 0.0],
    [-0.9371424300859873, 0.0, 0.0, 5.186372428844064, 1.0914373489967295, -8.149787010746927, -18.52006565999696, 22.739487099350505, 2.4936055526796523, -3.0467644718982196, 0.0, 0.0],
    [2.273310147516538, 0.0, 0.0, -10.53449546673725, -2.0008720582248625, -17.9589318631188, 27.94888452941996, -2.8589982771350235, -8.87285693353063, 12.360567175794303, 0.6433927460157636, 0.0],
];
const C: [f64; 12] = [0.0, 0.05260015195876773, 0.0789002279381516, 0.1183503419072274, 0.2816496580927726, 0.3333333333333333, 0.25, 0.3076923076923077, 0.6512820512820513, 0.6, 0.8571428571428571, 1.0];
const B: [f64; 12] = [0.054293734116568765, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003, -5.801203960010585, 0.3111643669578199, -0.1521609496625161, 0.20136540080403034, 0.04471061572777259];
const ER: [f64; 12] = [0.01312004499419488, 0.0, 0.0, 0.0, 0.0, -1.2251564463762044, -0.4957589496572502, 1.6643771824549864, -0.35032884874997366, 0.3341791187130175, 0.08192320648511571, -0.022355307863886294];
const BHH: [f64; 3] = [0.2440944881889764, 0.7338466882816118, 0.022058823529411766];

const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 1.0 / 6.0;
const FAC_MAX: f64 = 1.0 / 0.333;

/// Tolerances and limits for [`Dop853::integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Dop853 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

/// Work counters of one integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl Dop853 {
    pub fn new(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, max_steps: 2_000_000 }
    }

    /// Integrates `y' = f(x, y)` from `x0` to `x1` (`x1 > x0`).
    pub fn integrate<const N: usize>(
        &self,
        mut f: impl FnMut(f64, &[Complex64; N]) -> [Complex64; N],
        x0: f64,
        x1: f64,
        y0: [Complex64; N],
        stats: &mut Stats,
    ) -> Result<[Complex64; N]> {
        let span = x1 - x0;
        if span <= 0.0 {
            return Ok(y0);
        }
        let zero = [Complex64::new(0.0, 0.0); N];
        let mut k = [zero; 12];
        let mut x = x0;
        let mut y = y0;
        k[0] = f(x, &y);
        stats.evaluations += 1;
        let mut h = self.initial_step(&y, &k[0], span);
        let mut last_rejected = false;
        let mut steps = 0;
        while x < x1 {
            if steps >= self.max_steps {
                return Err(Error::StepSizeUnderflow { x });
            }
            steps += 1;
            if h < 1e-15 * span.max(x.abs()) {
                return Err(Error::StepSizeUnderflow { x });
            }
            let last = x + h >= x1;
            if last {
                h = x1 - x;
            }
            for s in 1..12 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        for i in 0..N {
                            ys[i] += kj[i] * (a * h);
                        }
                    }
                }
                k[s] = f(x + C[s] * h, &ys);
            }
            stats.evaluations += 11;
            let mut y_new = y;
            let mut err = 0.0;
            let mut err2 = 0.0;
            for i in 0..N {
                let mut incr = Complex64::new(0.0, 0.0);
                let mut e5 = Complex64::new(0.0, 0.0);
                for s in 0..12 {
                    incr += k[s][i] * B[s];
                    e5 += k[s][i] * ER[s];
                }
                y_new[i] = y[i] + incr * h;
                let sk = self.atol + self.rtol * y[i].norm().max(y_new[i].norm());
                let e3 = incr - k[0][i] * BHH[0] - k[8][i] * BHH[1] - k[11][i] * BHH[2];
                err += (e5.norm() / sk).powi(2);
                err2 += (e3.norm() / sk).powi(2);
            }
            let mut deno = err + 0.01 * err2;
            if deno <= 0.0 {
                deno = 1.0;
            }
            let err = h * err * (1.0 / (deno * N as f64)).sqrt();
            let fac11 = err.powf(0.125);
            let fac = (fac11 / SAFE).clamp(FAC_MIN, FAC_MAX);
            if err <= 1.0 {
                stats.accepted += 1;
                x = if last { x1 } else { x + h };
                y = y_new;
                k[0] = f(x, &y);
                stats.evaluations += 1;
                let mut h_new = h / fac;
                if last_rejected {
                    h_new = h_new.min(h);
                }
                last_rejected = false;
                h = h_new;
            } else {
                stats.rejected += 1;
                last_rejected = true;
                h /= FAC_MAX.min(fac11 / SAFE);
            }
        }
        Ok(y)
    }

    fn initial_step<const N: usize>(&self, y: &[Complex64; N], dy: &[Complex64; N], span: f64) -> f64 {
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..N {
            let sk = self.atol + self.rtol * y[i].norm();
            d0 += (y[i].norm() / sk).powi(2);
            d1 += (dy[i].norm() / sk).powi(2);
        }
        let h = if d0 <= 1e-10 || d1 <= 1e-10 { 1e-6 * span } else { 0.01 * (d0 / d1).sqrt() };
        h.min(span).max(1e-10 * span)
    }
}
