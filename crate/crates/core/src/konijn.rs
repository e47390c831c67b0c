//! Generalised Konijn alternatives.
//!
//! Two independent blocks `X*₁`, `X*₂` are mixed linearly,
//! `X₁ = (1 − δ) X*₁ + δ M₁ X*₂` and `X₂ = δ M₂ X*₁ + (1 − δ) X*₂`, so that
//! `δ = 0` gives independence and `δ = τ/√n` a local alternative.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::points::Points;
use crate::rng;

/// Law of one block before mixing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Marginal {
    /// `N(0, I_d)`.
    Gaussian,
    /// Spherical multivariate t: `Z / sqrt(χ²_ν/ν)` with one `χ²` per row.
    EllipticalT { nu: f64 },
    /// Independent univariate `t_ν` coordinates.
    IndependentT { nu: f64 },
    /// Independent `χ²₁` coordinates.
    Chi2One,
}

impl Marginal {
    /// Draws `n` i.i.d. rows in dimension `d`.
    pub fn sample<R: Rng + ?Sized>(&self, d: usize, n: usize, rng: &mut R) -> Result<Points> {
        if n == 0 || d == 0 {
            return Err(Error::Domain(format!(
                "cannot sample {n} rows in dimension {d}"
            )));
        }
        let mut out = Points::zeros(n, d);
        match *self {
            Marginal::Gaussian => {
                for x in out.as_mut_slice() {
                    *x = rng.sample(StandardNormal);
                }
            }
            Marginal::EllipticalT { nu } => {
                let chi = chi_squared(nu)?;
                for i in 0..n {
                    let row = out.row_mut(i);
                    for x in row.iter_mut() {
                        *x = rng.sample(StandardNormal);
                    }
                    let scale = (chi.sample(rng) / nu).sqrt();
                    for x in row.iter_mut() {
                        *x /= scale;
                    }
                }
            }
            Marginal::IndependentT { nu } => {
                let chi = chi_squared(nu)?;
                for x in out.as_mut_slice() {
                    let z: f64 = rng.sample(StandardNormal);
                    *x = z / (chi.sample(rng) / nu).sqrt();
                }
            }
            Marginal::Chi2One => {
                for x in out.as_mut_slice() {
                    let z: f64 = rng.sample(StandardNormal);
                    *x = z * z;
                }
            }
        }
        Ok(out)
    }
}

fn chi_squared(nu: f64) -> Result<ChiSquared<f64>> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::Domain(format!(
            "degrees of freedom must be positive, got {nu}"
        )));
    }
    ChiSquared::new(nu).map_err(|e| Error::Domain(e.to_string()))
}

/// The four marginal settings of the simulation study; both blocks share
/// the same law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Case {
    /// standard Gaussian
    A,
    /// spherical t₃
    B,
    /// independent t₃ coordinates
    C,
    /// independent χ²₁ coordinates
    D,
}

impl Case {
    pub const ALL: [Case; 4] = [Case::A, Case::B, Case::C, Case::D];

    pub fn marginal(&self) -> Marginal {
        match self {
            Case::A => Marginal::Gaussian,
            Case::B => Marginal::EllipticalT { nu: 3.0 },
            Case::C => Marginal::IndependentT { nu: 3.0 },
            Case::D => Marginal::Chi2One,
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::A => "a",
            Case::B => "b",
            Case::C => "c",
            Case::D => "d",
        })
    }
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" | "gaussian" => Ok(Case::A),
            "b" | "elliptical-t" | "elliptical_t" => Ok(Case::B),
            "c" | "independent-t" | "independent_t" => Ok(Case::C),
            "d" | "chi2" => Ok(Case::D),
            other => Err(Error::Parse(format!("unknown case '{other}'"))),
        }
    }
}

/// `δ = τ / √n`.
pub fn local_delta(tau: f64, n: usize) -> f64 {
    tau / (n as f64).sqrt()
}

/// A member of a generalised Konijn family.
#[derive(Debug, Clone, PartialEq)]
pub struct KonijnConfig {
    pub d1: usize,
    pub d2: usize,
    pub marginal1: Marginal,
    pub marginal2: Marginal,
    /// `d1 × d2`, row-major.
    pub m1: Vec<f64>,
    /// `d2 × d1`, row-major.
    pub m2: Vec<f64>,
    pub delta: f64,
}

/// Row-major `rows × cols` matrix with ones on the diagonal.
pub fn identity(rows: usize, cols: usize) -> Vec<f64> {
    let mut m = vec![0.0; rows * cols];
    for i in 0..rows.min(cols) {
        m[i * cols + i] = 1.0;
    }
    m
}

impl KonijnConfig {
    /// The simulation-study setting: `d1 = d2 = d`, `M₁ = M₂′ = I`.
    pub fn case(case: Case, d: usize, delta: f64) -> Self {
        Self {
            d1: d,
            d2: d,
            marginal1: case.marginal(),
            marginal2: case.marginal(),
            m1: identity(d, d),
            m2: identity(d, d),
            delta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d1 == 0 || self.d2 == 0 {
            return Err(Error::Domain("block dimensions must be positive".into()));
        }
        if self.m1.len() != self.d1 * self.d2 {
            return Err(Error::SizeMismatch {
                expected: self.d1 * self.d2,
                found: self.m1.len(),
            });
        }
        if self.m2.len() != self.d1 * self.d2 {
            return Err(Error::SizeMismatch {
                expected: self.d1 * self.d2,
                found: self.m2.len(),
            });
        }
        if !self.delta.is_finite() || self.m1.iter().chain(&self.m2).any(|x| !x.is_finite()) {
            return Err(Error::Domain("mixing parameters must be finite".into()));
        }
        if self.delta != 0.0 && self.m1.iter().chain(&self.m2).all(|&x| x == 0.0) {
            return Err(Error::Domain(
                "M1 and M2 are both zero, so delta has no effect".into(),
            ));
        }
        Ok(())
    }

    /// Applies the mixing matrix to the rows of `x_star = (X*₁, X*₂)`.
    pub fn mix(&self, x_star: &Points) -> Result<Points> {
        self.validate()?;
        let (d1, d2) = (self.d1, self.d2);
        if x_star.dim() != d1 + d2 {
            return Err(Error::DimensionMismatch {
                expected: d1 + d2,
                found: x_star.dim(),
            });
        }
        let delta = self.delta;
        let keep = 1.0 - delta;
        Ok(x_star.map_rows(d1 + d2, |row, out| {
            let (a, b) = row.split_at(d1);
            for j in 0..d1 {
                let m: f64 = (0..d2).map(|l| self.m1[j * d2 + l] * b[l]).sum();
                out[j] = keep * a[j] + delta * m;
            }
            for l in 0..d2 {
                let m: f64 = (0..d1).map(|j| self.m2[l * d1 + j] * a[j]).sum();
                out[d1 + l] = delta * m + keep * b[l];
            }
        }))
    }

    /// Replicate `index` of a sample of size `n`: `X*₁` is drawn first, then
    /// `X*₂`, from stream `index` of `seed`.
    pub fn generate_replicate(&self, n: usize, seed: u64, index: u64) -> Result<(Points, Points)> {
        self.validate()?;
        let mut r = rng::stream(seed, index);
        let a = self.marginal1.sample(self.d1, n, &mut r)?;
        let b = self.marginal2.sample(self.d2, n, &mut r)?;
        let mixed = self.mix(&a.hstack(&b)?)?;
        Ok((
            mixed.columns(0, self.d1)?,
            mixed.columns(self.d1, self.d1 + self.d2)?,
        ))
    }

    /// A sample of size `n`; the same as replicate 0.
    pub fn generate(&self, n: usize, seed: u64) -> Result<(Points, Points)> {
        self.generate_replicate(n, seed, 0)
    }
}
