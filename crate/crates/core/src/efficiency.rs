//! Asymptotic relative efficiencies of the score tests against Wilks' test
//! under elliptical local alternatives, the Hodges–Lehmann type lower bound
//! for Wilcoxon scores, and local power under noncentral chi-square limits.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::quadrature::integrate_unit;
use crate::scores::{ScoreFunction, ScoreKind};
use crate::special::{chi2_cdf, chi2_quantile_upper, chi2_sf, f_inverse, ln_gamma};

/// Arguments at or below this use the power series; above it the series
/// loses too many digits to cancellation.
const SERIES_LIMIT: f64 = 8.0;
const BESSEL_TOL: f64 = 1e-15;
const MOMENT_TOL: f64 = 1e-10;

/// Bessel function of the first kind `J_a(x)` for `a ∈ [0, 10]`,
/// `x ∈ (0, 60]`.
pub fn bessel_j(a: f64, x: f64) -> Result<f64> {
    if !(0.0..=10.0).contains(&a) {
        return Err(Error::Domain(format!(
            "Bessel order must be in [0, 10], got {a}"
        )));
    }
    if !(x > 0.0 && x <= 60.0) {
        return Err(Error::Domain(format!(
            "Bessel argument must be in (0, 60], got {x}"
        )));
    }
    bessel_unchecked(a, x)
}

/// `d/dx J_a(x) = (a/x) J_a(x) − J_{a+1}(x)`, same domain as [`bessel_j`].
pub fn bessel_j_derivative(a: f64, x: f64) -> Result<f64> {
    let j = bessel_j(a, x)?;
    Ok(a / x * j - bessel_unchecked(a + 1.0, x)?)
}

fn bessel_unchecked(a: f64, x: f64) -> Result<f64> {
    if x <= SERIES_LIMIT {
        Ok(bessel_series(a, x))
    } else {
        bessel_integral(a, x)
    }
}

fn bessel_series(a: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = half * half;
    let mut term = (a * half.ln() - ln_gamma(a + 1.0)).exp();
    let mut sum = CompensatedSum::default();
    sum.add(term);
    let mut m = 0.0;
    loop {
        m += 1.0;
        term *= -q / (m * (m + a));
        sum.add(term);
        if m > half && term.abs() <= 1e-17 * sum.value().abs() {
            break;
        }
        if term == 0.0 {
            break;
        }
    }
    sum.value()
}

/// Schläfli's integral
/// `J_a(x) = (1/π)∫₀^π cos(aθ − x sin θ) dθ − (sin aπ/π)∫₀^∞ e^{−x sinh t − at} dt`.
fn bessel_integral(a: f64, x: f64) -> Result<f64> {
    let oscillating = integrate_unit(|u, _| (a * PI * u - x * (PI * u).sin()).cos(), BESSEL_TOL)?;
    let s = (a * PI).sin();
    if s.abs() < 1e-15 {
        return Ok(oscillating);
    }
    // t = u/v maps (0, 1) onto (0, ∞)
    let decaying = integrate_unit(
        |u, v| {
            let t = u / v;
            (-x * t.sinh() - a * t).exp() / (v * v)
        },
        BESSEL_TOL,
    )?;
    Ok(oscillating - s / PI * decaying)
}

/// Order of the Bessel function in the definition of `c_d`.
fn c_order(d: usize) -> f64 {
    (2.0 * d as f64 - 1.0).sqrt() / 2.0
}

/// `g′(x)/√x` for `g(x) = √x J_a(x)`: `((a + ½)/x) J_a(x) − J_{a+1}(x)`.
fn c_derivative(a: f64, x: f64) -> Result<f64> {
    Ok((a + 0.5) / x * bessel_unchecked(a, x)? - bessel_unchecked(a + 1.0, x)?)
}

/// First positive stationary point of `√x J_a(x)` with `a = √(2d − 1)/2`.
pub fn c_d(d: usize) -> Result<f64> {
    if !(1..=50).contains(&d) {
        return Err(Error::Domain(format!("c_d needs 1 <= d <= 50, got {d}")));
    }
    let a = c_order(d);
    let step = 0.05;
    let mut lo = step;
    let mut h_lo = c_derivative(a, lo)?;
    loop {
        let hi = lo + step;
        if hi > 30.0 {
            return Err(Error::Convergence(format!(
                "no sign change of the derivative bracketed for d = {d}"
            )));
        }
        let h_hi = c_derivative(a, hi)?;
        if h_lo > 0.0 && h_hi <= 0.0 {
            return bisect(|x| c_derivative(a, x), lo, hi);
        }
        lo = hi;
        h_lo = h_hi;
    }
}

/// Root of a function positive at `lo` and non-positive at `hi`.
fn bisect<F: Fn(f64) -> Result<f64>>(f: F, mut lo: f64, mut hi: f64) -> Result<f64> {
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Lower bound on the efficiency of Wilcoxon scores relative to Wilks' test
/// over elliptical radial densities.
pub fn omega(d1: usize, d2: usize) -> Result<f64> {
    // one factor per block, so the product is exactly symmetric
    let factor = |d: usize| -> Result<f64> {
        let c2 = c_d(d)?.powi(2);
        Ok((2.0 * c2 + d as f64 - 1.0).powi(2) / (d as f64 * c2))
    };
    Ok(9.0 / 1024.0 * (factor(d1)? * factor(d2)?))
}

/// Law of the standardised radius `‖Σ^{−1/2}X‖`, with `Σ` the covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum RadialFamily {
    Gaussian,
    /// Multivariate Student t with `nu > 2` degrees of freedom.
    T {
        nu: f64,
    },
}

impl RadialFamily {
    fn validate(&self) -> Result<()> {
        match *self {
            RadialFamily::Gaussian => Ok(()),
            RadialFamily::T { nu } if nu > 2.0 && nu.is_finite() => Ok(()),
            RadialFamily::T { nu } => Err(Error::Domain(format!(
                "t radial family needs nu > 2 for a finite covariance, got {nu}"
            ))),
        }
    }

    /// Radius quantile at `u`, with `v = 1 − u` given for tail accuracy.
    pub fn quantile(&self, u: f64, v: f64, d: usize) -> Result<f64> {
        let df = d as f64;
        match *self {
            RadialFamily::Gaussian => Ok(chi2_quantile_upper(v, df)?.sqrt()),
            RadialFamily::T { nu } => {
                let f = f_inverse(u, v, df, nu)?;
                Ok((df * f * (nu - 2.0) / nu).sqrt())
            }
        }
    }

    /// `ρ(r) = −φ′(r)/φ(r)` for the radial density `φ` of the standardised law.
    pub fn rho(&self, r: f64, d: usize) -> f64 {
        match *self {
            RadialFamily::Gaussian => r,
            RadialFamily::T { nu } => (nu + d as f64) * r / (nu - 2.0 + r * r),
        }
    }
}

impl fmt::Display for RadialFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialFamily::Gaussian => f.write_str("gaussian"),
            RadialFamily::T { nu } => write!(f, "t{nu}"),
        }
    }
}

impl std::str::FromStr for RadialFamily {
    type Err = Error;

    /// `gaussian`, or `t<nu>` such as `t3` or `t5.5`.
    fn from_str(s: &str) -> Result<Self> {
        let family = if s == "gaussian" {
            RadialFamily::Gaussian
        } else if let Some(nu) = s.strip_prefix('t') {
            let nu = nu
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad degrees of freedom in '{s}'")))?;
            RadialFamily::T { nu }
        } else {
            return Err(Error::Parse(format!("unknown radial family '{s}'")));
        };
        family.validate()?;
        Ok(family)
    }
}

/// `(C, D) = (E[J(U) ρ(F*⁻¹(U))], E[J(U) F*⁻¹(U)])` for `U` uniform.
pub fn cross_moments(score: ScoreFunction, family: RadialFamily) -> Result<(f64, f64)> {
    family.validate()?;
    let d = score.dim;
    let quantile = |u: f64, v: f64| family.quantile(u, v, d).unwrap_or(f64::NAN);
    let c = integrate_unit(
        |u, v| score.eval_tail(u, v) * family.rho(quantile(u, v), d),
        MOMENT_TOL,
    )?;
    let dm = integrate_unit(|u, v| score.eval_tail(u, v) * quantile(u, v), MOMENT_TOL)?;
    Ok((c, dm))
}

/// Elliptical local alternatives: covariances `Σ_k`, mixing matrices
/// `M1` (`d1 × d2`) and `M2` (`d2 × d1`), radial families per block.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticalModel {
    pub family1: RadialFamily,
    pub family2: RadialFamily,
    pub sigma1: DMatrix<f64>,
    pub sigma2: DMatrix<f64>,
    pub m1: DMatrix<f64>,
    pub m2: DMatrix<f64>,
}

impl EllipticalModel {
    /// Identity covariances, `M1 = I`, `M2 = I′` (rectangular when `d1 ≠ d2`).
    pub fn identity(d1: usize, d2: usize, family1: RadialFamily, family2: RadialFamily) -> Self {
        Self {
            family1,
            family2,
            sigma1: DMatrix::identity(d1, d1),
            sigma2: DMatrix::identity(d2, d2),
            m1: DMatrix::identity(d1, d2),
            m2: DMatrix::identity(d2, d1),
        }
    }

    pub fn d1(&self) -> usize {
        self.sigma1.nrows()
    }

    pub fn d2(&self) -> usize {
        self.sigma2.nrows()
    }

    fn validate(&self) -> Result<()> {
        let (d1, d2) = (self.d1(), self.d2());
        let shape = |m: &DMatrix<f64>, r: usize, c: usize, what: &str| -> Result<()> {
            if m.nrows() != r || m.ncols() != c {
                return Err(Error::Domain(format!(
                    "{what} must be {r}x{c}, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            Ok(())
        };
        if d1 == 0 || d2 == 0 {
            return Err(Error::Domain("dimensions must be at least 1".into()));
        }
        shape(&self.sigma1, d1, d1, "Sigma1")?;
        shape(&self.sigma2, d2, d2, "Sigma2")?;
        shape(&self.m1, d1, d2, "M1")?;
        shape(&self.m2, d2, d1, "M2")?;
        self.family1.validate()?;
        self.family2.validate()
    }

    /// `(A, B) = (Σ1^{1/2} M2′ Σ2^{−1/2}, Σ1^{−1/2} M1 Σ2^{1/2})`.
    fn shift_terms(&self) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        self.validate()?;
        let (s1, s1_inv) = sqrt_pair(&self.sigma1, "Sigma1")?;
        let (s2, s2_inv) = sqrt_pair(&self.sigma2, "Sigma2")?;
        let a = &s1 * self.m2.transpose() * &s2_inv;
        let b = &s1_inv * &self.m1 * &s2;
        Ok((a, b))
    }
}

/// Symmetric square root and its inverse of a positive definite matrix.
fn sqrt_pair(m: &DMatrix<f64>, what: &str) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let scale = m.amax();
    if m.iter().any(|x| !x.is_finite()) || scale == 0.0 {
        return Err(Error::Domain(format!("{what} must be finite and nonzero")));
    }
    if (m - m.transpose()).amax() > 1e-10 * scale {
        return Err(Error::Domain(format!("{what} is not symmetric")));
    }
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.max();
    if eig.eigenvalues.iter().any(|&l| l <= 1e-12 * max) {
        return Err(Error::Singular(format!("{what} is not positive definite")));
    }
    let root = eig.eigenvalues.map(f64::sqrt);
    let q = &eig.eigenvectors;
    let sqrt = q * DMatrix::from_diagonal(&root) * q.transpose();
    let inv = q * DMatrix::from_diagonal(&root.map(|r| 1.0 / r)) * q.transpose();
    Ok((sqrt, inv))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub score1: ScoreKind,
    pub score2: ScoreKind,
    pub family1: RadialFamily,
    pub family2: RadialFamily,
    pub d1: usize,
    pub d2: usize,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "D1")]
    pub dm1: f64,
    #[serde(rename = "D2")]
    pub dm2: f64,
    pub are: f64,
}

/// Pitman efficiency of the score test with scores `(score1, score2)`
/// relative to Wilks' test: the ratio of their noncentrality parameters.
pub fn are_elliptical(
    score1: ScoreKind,
    score2: ScoreKind,
    model: &EllipticalModel,
) -> Result<EfficiencyReport> {
    let (a, b) = model.shift_terms()?;
    let (d1, d2) = (model.d1(), model.d2());
    let j1 = ScoreFunction::new(score1, d1)?;
    let j2 = ScoreFunction::new(score2, d2)?;
    let (c1, dm1) = cross_moments(j1, model.family1)?;
    let (c2, dm2) = cross_moments(j2, model.family2)?;
    let num = (&a * (dm1 * c2) + &b * (dm2 * c1)).norm_squared();
    let wilks = (&a + &b).norm_squared();
    if wilks == 0.0 {
        return Err(Error::Domain(
            "the alternative has zero Wilks noncentrality".into(),
        ));
    }
    let are = num / ((d1 * d2) as f64 * j1.sigma2() * j2.sigma2() * wilks);
    Ok(EfficiencyReport {
        score1,
        score2,
        family1: model.family1,
        family2: model.family2,
        d1,
        d2,
        c1,
        c2,
        dm1,
        dm2,
        are,
    })
}

/// Noncentrality of Wilks' test along `δ = τ/√n`:
/// `τ² ‖Σ1^{1/2} M2′ Σ2^{−1/2} + Σ1^{−1/2} M1 Σ2^{1/2}‖²_F`.
pub fn wilks_noncentrality(tau: f64, model: &EllipticalModel) -> Result<f64> {
    let (a, b) = model.shift_terms()?;
    Ok(tau * tau * (a + b).norm_squared())
}

/// `P(χ²_df(ncp) ≤ x)` as a Poisson mixture of central chi-square laws.
pub fn noncentral_chi2_cdf(x: f64, df: f64, ncp: f64) -> Result<f64> {
    noncentral_mixture(x, df, ncp, chi2_cdf)
}

/// `P(χ²_df(ncp) > x)`, computed directly from the upper tails.
pub fn noncentral_chi2_sf(x: f64, df: f64, ncp: f64) -> Result<f64> {
    noncentral_mixture(x, df, ncp, chi2_sf)
}

fn noncentral_mixture<F>(x: f64, df: f64, ncp: f64, tail: F) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    if !(ncp >= 0.0 && ncp.is_finite()) {
        return Err(Error::Domain(format!(
            "noncentrality must be >= 0, got {ncp}"
        )));
    }
    if ncp == 0.0 {
        return tail(x, df);
    }
    let lambda = 0.5 * ncp;
    let weight = |j: f64| (-lambda + j * lambda.ln() - ln_gamma(j + 1.0)).exp();
    let mode = lambda.floor();
    let mut sum = CompensatedSum::default();
    // Poisson weights fall off geometrically on either side of the mode, so
    // stopping once a weight is below 1e-17 leaves a tail mass of that order.
    let mut j = mode;
    loop {
        let w = weight(j);
        sum.add(w * tail(x, df + 2.0 * j)?);
        if w < 1e-17 {
            break;
        }
        j += 1.0;
    }
    let mut j = mode - 1.0;
    while j >= 0.0 {
        let w = weight(j);
        sum.add(w * tail(x, df + 2.0 * j)?);
        if w < 1e-17 {
            break;
        }
        j -= 1.0;
    }
    Ok(sum.value().clamp(0.0, 1.0))
}

/// Limiting power of a level-`alpha` chi-square test with `df` degrees of
/// freedom under noncentrality `ncp`.
pub fn local_power(df: f64, ncp: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    if ncp == 0.0 {
        return Ok(alpha);
    }
    let crit = chi2_quantile_upper(alpha, df)?;
    Ok(noncentral_chi2_sf(crit, df, ncp)?.max(alpha))
}

/// Local power as a function of the noncentrality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub df: f64,
    pub alpha: f64,
    pub ncp: Vec<f64>,
    pub power: Vec<f64>,
}

impl PowerCurve {
    pub fn new(df: f64, alpha: f64, ncp: &[f64]) -> Result<Self> {
        let power = ncp
            .iter()
            .map(|&c| local_power(df, c, alpha))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            df,
            alpha,
            ncp: ncp.to_vec(),
            power,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn half_order(x: f64) -> f64 {
        (2.0 / (PI * x)).sqrt() * x.sin()
    }

    fn three_halves(x: f64) -> f64 {
        (2.0 / (PI * x)).sqrt() * (x.sin() / x - x.cos())
    }

    #[test]
    fn bessel_half_orders() {
        for &x in &[0.5, 1.0, 2.0, 7.9, 8.1, 15.0, 33.3, 60.0] {
            assert!(
                (bessel_j(0.5, x).unwrap() - half_order(x)).abs() < 1e-12,
                "x={x}"
            );
            assert!(
                (bessel_j(1.5, x).unwrap() - three_halves(x)).abs() < 1e-12,
                "x={x}"
            );
        }
    }

    #[test]
    fn bessel_reference_values() {
        // J0(10), J1(10), J0(50) and the first zero of J0
        assert!((bessel_j(0.0, 10.0).unwrap() + 0.245_935_764_451_348_3).abs() < 1e-13);
        assert!((bessel_j(1.0, 10.0).unwrap() - 0.043_472_746_168_861_44).abs() < 1e-13);
        assert!((bessel_j(0.0, 50.0).unwrap() - 0.055_812_327_669_251_82).abs() < 1e-13);
        assert!(bessel_j(0.0, 2.404_825_557_695_773).unwrap().abs() < 1e-14);
        assert!((bessel_j(0.0, 1e-8).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bessel_branches_meet() {
        for &a in &[0.0, 0.3, 1.0, 2.5, 4.97, 10.0] {
            let s = bessel_series(a, SERIES_LIMIT);
            let i = bessel_integral(a, SERIES_LIMIT).unwrap();
            assert!((s - i).abs() < 1e-13, "a={a}: {s} vs {i}");
        }
    }

    #[test]
    fn bessel_domain() {
        assert!(bessel_j(-0.1, 1.0).is_err());
        assert!(bessel_j(10.5, 1.0).is_err());
        assert!(bessel_j(1.0, 0.0).is_err());
        assert!(bessel_j(1.0, 60.1).is_err());
    }

    #[test]
    fn first_maximum_of_j1() {
        let x = 1.841_183_781_3;
        assert!(bessel_j_derivative(1.0, x).unwrap().abs() < 1e-10);
        assert!(bessel_j_derivative(1.0, x - 1e-3).unwrap() > 0.0);
        assert!(bessel_j_derivative(1.0, x + 1e-3).unwrap() < 0.0);
    }

    #[test]
    fn c_d_values() {
        assert!((c_d(1).unwrap() - PI / 2.0).abs() < 1e-10);
        let mut last = 0.0;
        for d in 1..=10 {
            let c = c_d(d).unwrap();
            assert!(c > last, "d={d}");
            last = c;
            let a = c_order(d);
            assert!(c_derivative(a, c).unwrap().abs() < 1e-9);
            assert!(c_derivative(a, c - 1e-6).unwrap() > 0.0);
            assert!(c_derivative(a, c + 1e-6).unwrap() < 0.0);
        }
        assert!(c_d(50).is_ok());
        assert!(c_d(0).is_err() && c_d(51).is_err());
    }

    #[test]
    fn omega_bounds() {
        let o11 = omega(1, 1).unwrap();
        assert!((o11 - 9.0 * PI.powi(4) / 1024.0).abs() < 1e-10);
        let mut min7 = f64::INFINITY;
        for d1 in 1..=10 {
            for d2 in 1..=10 {
                let o = omega(d1, d2).unwrap();
                assert_eq!(o, omega(d2, d1).unwrap());
                assert!((9.0 / 16.0..1.0).contains(&o));
                if d1 <= 7 && d2 <= 7 {
                    min7 = min7.min(o);
                }
            }
        }
        assert!(min7 >= 0.77, "{min7}");
    }

    fn identity(d: usize, family: RadialFamily) -> EllipticalModel {
        EllipticalModel::identity(d, d, family, family)
    }

    #[test]
    fn gaussian_moments_equal_dimension() {
        for d in 1..=4 {
            let (c, dm) =
                cross_moments(ScoreFunction::van_der_waerden(d), RadialFamily::Gaussian).unwrap();
            assert!((c - d as f64).abs() < 1e-8 && (dm - d as f64).abs() < 1e-8);
        }
        let (c, dm) = cross_moments(ScoreFunction::wilcoxon(1), RadialFamily::Gaussian).unwrap();
        assert!((c - 1.0 / PI.sqrt()).abs() < 1e-9);
        assert!((dm - 1.0 / PI.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn wilcoxon_gaussian_univariate() {
        let r = are_elliptical(
            ScoreKind::Wilcoxon,
            ScoreKind::Wilcoxon,
            &identity(1, RadialFamily::Gaussian),
        )
        .unwrap();
        assert!((r.are - 9.0 / (PI * PI)).abs() < 1e-4, "{}", r.are);
    }

    #[test]
    fn wilcoxon_above_omega() {
        for d1 in 1..=3 {
            for d2 in 1..=3 {
                let m = EllipticalModel::identity(
                    d1,
                    d2,
                    RadialFamily::Gaussian,
                    RadialFamily::Gaussian,
                );
                let r = are_elliptical(ScoreKind::Wilcoxon, ScoreKind::Wilcoxon, &m).unwrap();
                assert!(r.are >= omega(d1, d2).unwrap(), "{d1}x{d2}: {}", r.are);
                assert!(r.are < 1.0);
            }
        }
    }

    #[test]
    fn van_der_waerden_chernoff_savage() {
        for &nu in &[3.0, 5.0, 10.0] {
            for d in 1..=3 {
                let r = are_elliptical(
                    ScoreKind::VanDerWaerden,
                    ScoreKind::VanDerWaerden,
                    &identity(d, RadialFamily::T { nu }),
                )
                .unwrap();
                assert!(r.are >= 1.0 - 1e-8, "nu={nu} d={d}: {}", r.are);
            }
        }
    }

    fn random_spd(d: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        &a * a.transpose() + DMatrix::identity(d, d) * 0.5
    }

    #[test]
    fn gaussian_van_der_waerden_is_efficient_for_general_shapes() {
        let mut rng = stream(11, 0);
        for k in 0..10 {
            let (d1, d2) = (1 + k % 3, 1 + (k / 3) % 3);
            let sigma1 = random_spd(d1, &mut rng);
            let sigma2 = random_spd(d2, &mut rng);
            let m1 = DMatrix::from_fn(d1, d2, |_, _| rng.sample::<f64, _>(StandardNormal));
            // Σ1 M2′ = M1 Σ2
            let m2 = (sigma1.clone().try_inverse().unwrap() * &m1 * &sigma2).transpose();
            let model = EllipticalModel {
                family1: RadialFamily::Gaussian,
                family2: RadialFamily::Gaussian,
                sigma1,
                sigma2,
                m1,
                m2,
            };
            let r =
                are_elliptical(ScoreKind::VanDerWaerden, ScoreKind::VanDerWaerden, &model).unwrap();
            assert!((r.are - 1.0).abs() < 1e-6, "{k}: {}", r.are);
        }
    }

    #[test]
    fn scale_invariance() {
        let mut rng = stream(12, 0);
        let sigma1 = random_spd(2, &mut rng);
        let sigma2 = random_spd(3, &mut rng);
        let m1 = DMatrix::from_fn(2, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let m2 = DMatrix::from_fn(3, 2, |_, _| rng.sample::<f64, _>(StandardNormal));
        let model = EllipticalModel {
            family1: RadialFamily::T { nu: 5.0 },
            family2: RadialFamily::Gaussian,
            sigma1,
            sigma2,
            m1,
            m2,
        };
        let base = are_elliptical(ScoreKind::Wilcoxon, ScoreKind::VanDerWaerden, &model).unwrap();
        let mut scaled = model.clone();
        scaled.sigma1 *= 7.5;
        scaled.sigma2 *= 7.5;
        let r = are_elliptical(ScoreKind::Wilcoxon, ScoreKind::VanDerWaerden, &scaled).unwrap();
        assert!((r.are - base.are).abs() < 1e-8 * base.are);
    }

    #[test]
    fn model_validation() {
        let mut m = identity(2, RadialFamily::Gaussian);
        m.sigma1[(0, 0)] = -1.0;
        assert!(are_elliptical(ScoreKind::Sign, ScoreKind::Sign, &m).is_err());
        let mut m = identity(2, RadialFamily::Gaussian);
        m.m1 = DMatrix::identity(3, 2);
        assert!(wilks_noncentrality(1.0, &m).is_err());
        assert!(cross_moments(ScoreFunction::sign(2), RadialFamily::T { nu: 2.0 }).is_err());
        assert_eq!(
            "t3".parse::<RadialFamily>().unwrap(),
            RadialFamily::T { nu: 3.0 }
        );
        assert!("t1".parse::<RadialFamily>().is_err());
        assert!("cauchy".parse::<RadialFamily>().is_err());
    }

    #[test]
    fn wilks_noncentrality_identity_case() {
        let mut rng = stream(13, 0);
        let mm = DMatrix::from_fn(3, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let model = EllipticalModel {
            m1: mm.clone(),
            m2: mm.transpose(),
            ..identity(3, RadialFamily::Gaussian)
        };
        let ncp = wilks_noncentrality(0.8, &model).unwrap();
        assert!((ncp - 4.0 * 0.64 * mm.norm_squared()).abs() < 1e-12 * ncp);
    }

    #[test]
    fn noncentral_chi2_basics() {
        for &x in &[0.5, 3.0, 9.0] {
            assert_eq!(
                noncentral_chi2_cdf(x, 4.0, 0.0).unwrap(),
                chi2_cdf(x, 4.0).unwrap()
            );
            let c = noncentral_chi2_cdf(x, 3.0, 7.5).unwrap();
            let s = noncentral_chi2_sf(x, 3.0, 7.5).unwrap();
            assert!((c + s - 1.0).abs() < 1e-13);
        }
        assert!((noncentral_chi2_cdf(500.0, 4.0, 20.0).unwrap() - 1.0).abs() < 1e-10);
        assert!(noncentral_chi2_cdf(1.0, 2.0, 600.0).unwrap() < 1e-10);
        assert!(noncentral_chi2_cdf(1.0, 2.0, -1.0).is_err());
    }

    #[test]
    fn noncentral_chi2_monte_carlo() {
        // χ²₄(5) as ‖Z + μ‖² with ‖μ‖² = 5
        let mu = (5.0f64 / 4.0).sqrt();
        let draws = 2_000_000;
        let mut rng = stream(14, 0);
        let mut hits = 0usize;
        for _ in 0..draws {
            let s: f64 = (0..4)
                .map(|_| (rng.sample::<f64, _>(StandardNormal) + mu).powi(2))
                .sum();
            if s <= 9.4877 {
                hits += 1;
            }
        }
        let p = noncentral_chi2_cdf(9.4877, 4.0, 5.0).unwrap();
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        let mc = hits as f64 / draws as f64;
        assert!((mc - p).abs() < 4.0 * se, "{mc} vs {p}");
    }

    #[test]
    fn power_behaviour() {
        assert_eq!(local_power(4.0, 0.0, 0.05).unwrap(), 0.05);
        let curve = PowerCurve::new(4.0, 0.05, &[0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0]).unwrap();
        for w in curve.power.windows(2) {
            assert!(w[1] > w[0]);
        }
        assert!(*curve.power.last().unwrap() > 0.99);
        assert!(local_power(4.0, 1.0, 1.0).is_err());
    }
}
