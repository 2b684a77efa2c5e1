//! Potential families on `[0, 1]`: delta arrays, perturbed constant barriers
//! and generic piecewise-continuous regular potentials.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::quadrature::CompositeRule;
use crate::{Error, Result};

/// Smallest admissible wave number.
pub const MIN_WAVE_NUMBER: f64 = 1e-6;

/// Below this decay constant the pumping profiles switch to their Taylor branch.
pub const SMALL_NU: f64 = 1e-4;

/// Dimensionless wave number `k` (lengths rescaled so the support is `[0, 1]`).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct WaveNumber(f64);

impl WaveNumber {
    pub fn new(k: f64) -> Result<Self> {
        if !k.is_finite() || k < MIN_WAVE_NUMBER {
            return Err(Error::ZeroWaveNumber(k));
        }
        Ok(Self(k))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `v(x) = sum_i z_i delta(x - a_i)` with `0 < a_1 < ... < a_n < 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaArray {
    pub centers: Vec<f64>,
    pub couplings: Vec<Complex64>,
}

impl DeltaArray {
    pub fn new(centers: Vec<f64>, couplings: Vec<Complex64>) -> Result<Self> {
        let spec = Self { centers, couplings };
        spec.validate()?;
        Ok(spec)
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.centers.len() != self.couplings.len() {
            return Err(Error::LengthMismatch {
                centers: self.centers.len(),
                couplings: self.couplings.len(),
            });
        }
        if self.centers.is_empty() {
            return Err(Error::EmptyArray);
        }
        for (index, &a) in self.centers.iter().enumerate() {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::CenterOutOfRange { index, value: a });
            }
            if index > 0 && a <= self.centers[index - 1] {
                return Err(Error::UnorderedCenters { index });
            }
        }
        for (index, z) in self.couplings.iter().enumerate() {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFiniteCoupling { index });
            }
        }
        Ok(())
    }
}

/// Direction from which the slab is pumped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pumping {
    Single,
    Double,
}

impl Pumping {
    pub const ALL: [Pumping; 2] = [Pumping::Single, Pumping::Double];

    pub fn as_str(self) -> &'static str {
        match self {
            Pumping::Single => "single",
            Pumping::Double => "double",
        }
    }
}

impl fmt::Display for Pumping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `(e^t - 1)/t`, finite at `t = 0`.
fn expm1_ratio(t: f64) -> f64 {
    if t.abs() < SMALL_NU {
        1.0 + t / 2.0 + t * t / 6.0 + t * t * t / 24.0
    } else {
        t.exp_m1() / t
    }
}

/// `sinh(t)/t`, finite at `t = 0`.
fn sinhc(t: f64) -> f64 {
    if t.abs() < SMALL_NU {
        1.0 + t * t / 6.0 + t.powi(4) / 120.0
    } else {
        t.sinh() / t
    }
}

/// Pumping profile `f(x)` of the perturbation for decay constant `nu`.
///
/// Single pumping: `(e^{-nu x} - 1)/nu`; double pumping:
/// `(cosh[nu(x - 1/2)] - cosh(nu/2)) / (nu^2 cosh(nu/2))`. Both are written in
/// cancellation-free product form, so the `nu -> 0` limits `-x` and
/// `(x^2 - x)/2` come out of the small-argument series.
pub fn pumping_profile(pumping: Pumping, nu: f64, x: f64) -> f64 {
    match pumping {
        Pumping::Single => -x * expm1_ratio(-nu * x),
        Pumping::Double => {
            // cosh(a) - cosh(b) = 2 sinh((a+b)/2) sinh((a-b)/2)
            let a = 0.5 * nu * x;
            let b = 0.5 * nu * (x - 1.0);
            0.5 * x * (x - 1.0) * sinhc(a) * sinhc(b) / (0.5 * nu).cosh()
        }
    }
}

/// Smoothness class of a user-supplied profile; decides how quadrature is split.
#[derive(Debug, Clone, PartialEq)]
pub enum Smoothness {
    /// Entire or analytic on `[0, 1]`.
    Analytic,
    /// Analytic between the listed interior break points.
    PiecewiseAnalytic(Vec<f64>),
}

type ComplexFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// A user-supplied profile `f: [0,1] -> C`.
#[derive(Clone)]
pub struct CustomProfile {
    f: ComplexFn,
    pub smoothness: Smoothness,
}

impl CustomProfile {
    pub fn new(f: impl Fn(f64) -> Complex64 + Send + Sync + 'static, smoothness: Smoothness) -> Self {
        Self { f: Arc::new(f), smoothness }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        (self.f)(x)
    }
}

impl fmt::Debug for CustomProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomProfile").field("smoothness", &self.smoothness).finish_non_exhaustive()
    }
}

/// The shape `f(x)` multiplying the perturbation strength.
#[derive(Debug, Clone)]
pub enum GainProfile {
    Pumped { pumping: Pumping, nu: f64 },
    Custom(CustomProfile),
}

impl GainProfile {
    pub fn single(nu: f64) -> Self {
        GainProfile::Pumped { pumping: Pumping::Single, nu }
    }

    pub fn double(nu: f64) -> Self {
        GainProfile::Pumped { pumping: Pumping::Double, nu }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        match self {
            GainProfile::Pumped { pumping, nu } => pumping_profile(*pumping, *nu, x).into(),
            GainProfile::Custom(c) => c.eval(x),
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            GainProfile::Custom(CustomProfile { smoothness: Smoothness::PiecewiseAnalytic(b), .. }) => b.clone(),
            _ => Vec::new(),
        }
    }

    /// `int_0^1 |f(x)| dx`.
    pub fn l1_norm(&self) -> f64 {
        let rule = CompositeRule::new(&self.breakpoints(), 32, 16);
        rule.integrate_real(|x| self.eval(x).norm())
    }
}

/// `v(x) = z1 + eps * z2 * f(x)` on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Barrier {
    pub z1: Complex64,
    pub z2: Complex64,
    pub eps: f64,
    pub profile: GainProfile,
}

impl Barrier {
    pub fn constant(z1: Complex64) -> Self {
        Self { z1, z2: Complex64::new(0.0, 0.0), eps: 0.0, profile: GainProfile::single(0.0) }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        if self.eps == 0.0 {
            self.z1
        } else {
            self.z1 + self.z2 * self.eps * self.profile.eval(x)
        }
    }
}

/// Generic piecewise-continuous potential given pointwise.
#[derive(Clone)]
pub struct RegularPotential {
    f: ComplexFn,
    /// Interior points of discontinuity, ascending.
    pub breakpoints: Vec<f64>,
}

impl RegularPotential {
    pub fn new(f: impl Fn(f64) -> Complex64 + Send + Sync + 'static, breakpoints: Vec<f64>) -> Self {
        Self { f: Arc::new(f), breakpoints }
    }

    /// Piecewise-linear interpolation of samples on a uniform grid over `[0, 1]`.
    pub fn sampled(values: Vec<Complex64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidParameter("a sampled potential needs at least two samples".into()));
        }
        let n = values.len() - 1;
        let breakpoints = (1..n).map(|i| i as f64 / n as f64).collect();
        let values = Arc::new(values);
        Ok(Self::new(
            move |x| {
                let t = x.clamp(0.0, 1.0) * n as f64;
                let i = (t.floor() as usize).min(n - 1);
                let s = t - i as f64;
                values[i] * (1.0 - s) + values[i + 1] * s
            },
            breakpoints,
        ))
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        (self.f)(x)
    }
}

impl fmt::Debug for RegularPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RegularPotential").field("breakpoints", &self.breakpoints).finish_non_exhaustive()
    }
}

/// A potential supported on `[0, 1]`.
#[derive(Debug, Clone)]
pub enum PotentialSpec {
    DeltaArray(DeltaArray),
    Barrier(Barrier),
    Regular(RegularPotential),
}

impl PotentialSpec {
    pub fn free() -> Self {
        PotentialSpec::Regular(RegularPotential::new(|_| Complex64::new(0.0, 0.0), Vec::new()))
    }

    /// `v(x) = v0(x) + eps v1(x)` for the regular variants.
    pub fn evaluate_regular(&self, x: f64) -> Result<Complex64> {
        match self {
            PotentialSpec::DeltaArray(_) => Err(Error::DeltaNotPointwise),
            PotentialSpec::Barrier(b) => Ok(b.eval(x)),
            PotentialSpec::Regular(r) => Ok(r.eval(x)),
        }
    }

    /// Interior discontinuities the integrator must not step across.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            PotentialSpec::DeltaArray(d) => d.centers.clone(),
            PotentialSpec::Barrier(b) => b.profile.breakpoints(),
            PotentialSpec::Regular(r) => r.breakpoints.clone(),
        }
    }

    /// Checks the structural invariants. Returns non-fatal warnings on success.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        match self {
            PotentialSpec::DeltaArray(d) => d.validate()?,
            PotentialSpec::Barrier(b) => {
                if !(b.eps.is_finite() && b.z1.norm().is_finite() && b.z2.norm().is_finite()) {
                    return Err(Error::InvalidParameter("barrier parameters must be finite".into()));
                }
                match &b.profile {
                    GainProfile::Pumped { nu, .. } => {
                        if !(nu.is_finite() && *nu >= 0.0) {
                            return Err(Error::InvalidParameter(format!("decay constant nu = {nu} must be >= 0")));
                        }
                    }
                    GainProfile::Custom(_) => {
                        let norm = b.profile.l1_norm();
                        if !norm.is_finite() {
                            return Err(Error::NonIntegrableProfile(format!("int |f| = {norm}")));
                        }
                        if norm > 1.0 {
                            warnings.push(format!("custom profile has int_0^1 |f| = {norm:.6} > 1"));
                        }
                    }
                }
            }
            PotentialSpec::Regular(r) => {
                if r.breakpoints.windows(2).any(|w| w[1] <= w[0])
                    || r.breakpoints.iter().any(|&b| !(b > 0.0 && b < 1.0))
                {
                    return Err(Error::InvalidParameter(
                        "break points must be strictly increasing inside (0, 1)".into(),
                    ));
                }
            }
        }
        Ok(warnings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_barrier_value() {
        let spec = PotentialSpec::Barrier(Barrier::constant(c(1.0, 0.5)));
        assert_eq!(spec.evaluate_regular(0.5).unwrap(), c(1.0, 0.5));
    }

    #[test]
    fn free_potential_is_zero() {
        for x in [0.0, 0.3, 1.0] {
            assert_eq!(PotentialSpec::free().evaluate_regular(x).unwrap(), c(0.0, 0.0));
        }
    }

    #[test]
    fn single_pumped_barrier_vanishes_at_origin() {
        let spec = PotentialSpec::Barrier(Barrier {
            z1: c(0.0, 0.0),
            z2: c(1.0, 0.0),
            eps: 1.0,
            profile: GainProfile::single(0.2),
        });
        assert_eq!(spec.evaluate_regular(0.0).unwrap().norm(), 0.0);
    }

    #[test]
    fn delta_has_no_pointwise_value() {
        let spec = PotentialSpec::DeltaArray(DeltaArray::new(vec![0.5], vec![c(0.0, 10.0)]).unwrap());
        assert_eq!(spec.evaluate_regular(0.5), Err(Error::DeltaNotPointwise));
    }

    #[test]
    fn profile_limits() {
        assert!((pumping_profile(Pumping::Single, 1e-12, 1.0) + 1.0).abs() < 1e-12);
        assert_eq!(pumping_profile(Pumping::Single, 0.7, 0.0), 0.0);
        let expected = (1.0 - 0.25f64.cosh()) / (0.25 * 0.25f64.cosh());
        assert!((pumping_profile(Pumping::Double, 0.5, 0.5) - expected).abs() < 1e-15);
        assert_eq!(pumping_profile(Pumping::Double, 0.0, 0.5), -0.125);
    }

    #[test]
    fn profile_matches_direct_formula_away_from_zero() {
        for &nu in &[0.05, 0.3, 2.0] {
            for i in 0..=10 {
                let x = i as f64 / 10.0;
                let single = ((-nu * x).exp() - 1.0) / nu;
                let double = ((nu * (x - 0.5)).cosh() - (nu / 2.0).cosh()) / (nu * nu * (nu / 2.0).cosh());
                assert!((pumping_profile(Pumping::Single, nu, x) - single).abs() < 1e-14);
                assert!((pumping_profile(Pumping::Double, nu, x) - double).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn profile_continuous_at_zero_nu() {
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            let s = pumping_profile(Pumping::Single, 1e-6, x) - (-x);
            let d = pumping_profile(Pumping::Double, 1e-6, x) - 0.5 * (x * x - x);
            assert!(s.abs() < 1e-6 && d.abs() < 1e-10, "x = {x}: {s} {d}");
            // the series branch itself agrees with the limit to 1e-10 at nu = 1e-10
            assert!((pumping_profile(Pumping::Single, 1e-10, x) + x).abs() < 1e-10);
            assert!((pumping_profile(Pumping::Double, 1e-10, x) - 0.5 * (x * x - x)).abs() < 1e-10);
        }
    }

    #[test]
    fn series_branch_joins_direct_formula() {
        for i in 0..=10 {
            let x = i as f64 / 10.0;
            let below = pumping_profile(Pumping::Single, SMALL_NU * (1.0 - 1e-9), x);
            let above = pumping_profile(Pumping::Single, SMALL_NU * (1.0 + 1e-9), x);
            assert!((below - above).abs() < 1e-12);
            let below = pumping_profile(Pumping::Double, SMALL_NU * (1.0 - 1e-9), x);
            let above = pumping_profile(Pumping::Double, SMALL_NU * (1.0 + 1e-9), x);
            assert!((below - above).abs() < 1e-12);
            let nu = 1e-6;
            let direct = ((-nu * x).exp() - 1.0) / nu;
            assert!((pumping_profile(Pumping::Single, nu, x) - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn validation_errors() {
        let bad = DeltaArray { centers: vec![0.3, 0.2], couplings: vec![c(1.0, 0.0); 2] };
        assert_eq!(bad.validate(), Err(Error::UnorderedCenters { index: 1 }));
        let ok = DeltaArray { centers: vec![0.5], couplings: vec![c(0.0, 10.0)] };
        assert_eq!(ok.validate(), Ok(()));
        let edge = DeltaArray { centers: vec![0.0], couplings: vec![c(1.0, 0.0)] };
        assert_eq!(edge.validate(), Err(Error::CenterOutOfRange { index: 0, value: 0.0 }));
        let empty = DeltaArray { centers: vec![], couplings: vec![] };
        assert_eq!(empty.validate(), Err(Error::EmptyArray));
    }

    #[test]
    fn custom_profile_norm_warning() {
        let big = Barrier {
            z1: c(1.0, 0.0),
            z2: c(1.0, 0.0),
            eps: 0.1,
            profile: GainProfile::Custom(CustomProfile::new(|_| c(3.0, 0.0), Smoothness::Analytic)),
        };
        let warnings = PotentialSpec::Barrier(big).validate().unwrap();
        assert_eq!(warnings.len(), 1);
        let singular = Barrier {
            z1: c(1.0, 0.0),
            z2: c(1.0, 0.0),
            eps: 0.1,
            profile: GainProfile::Custom(CustomProfile::new(|x| c(1.0 / x, 0.0), Smoothness::Analytic)),
        };
        // the Gauss nodes never touch x = 0, so 1/x integrates to something finite but large;
        // an explicit NaN is rejected.
        assert!(PotentialSpec::Barrier(singular).validate().is_ok());
        let nan = Barrier {
            z1: c(1.0, 0.0),
            z2: c(1.0, 0.0),
            eps: 0.1,
            profile: GainProfile::Custom(CustomProfile::new(|_| c(f64::NAN, 0.0), Smoothness::Analytic)),
        };
        assert!(matches!(PotentialSpec::Barrier(nan).validate(), Err(Error::NonIntegrableProfile(_))));
    }

    #[test]
    fn sampled_interpolates() {
        let r = RegularPotential::sampled(vec![c(0.0, 0.0), c(2.0, 2.0), c(4.0, 0.0)]).unwrap();
        assert_eq!(r.eval(0.25), c(1.0, 1.0));
        assert_eq!(r.eval(1.0), c(4.0, 0.0));
        assert_eq!(r.breakpoints, vec![0.5]);
    }

    proptest! {
        #[test]
        fn profiles_are_nonpositive(nu in 1e-8f64..5.0, x in 0.0f64..=1.0) {
            prop_assert!(pumping_profile(Pumping::Single, nu, x) <= 0.0);
            prop_assert!(pumping_profile(Pumping::Double, nu, x) <= 0.0);
        }

        #[test]
        fn validate_accepts_exactly_ordered_interior_centers(
            raw in proptest::collection::vec(-0.2f64..1.2, 0..6)
        ) {
            let n = raw.len();
            let spec = DeltaArray { centers: raw.clone(), couplings: vec![Complex64::new(1.0, -1.0); n] };
            let expected = n > 0
                && raw.iter().all(|&a| a > 0.0 && a < 1.0)
                && raw.windows(2).all(|w| w[1] > w[0]);
            prop_assert_eq!(spec.validate().is_ok(), expected);
        }
    }
}
