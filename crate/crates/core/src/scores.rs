//! Score functions weighting center-outward ranks.
//!
//! A score function `J` maps a rescaled rank in `[0, 1)` to a weight. The
//! three supported families are the constant (sign) score, the identity
//! (Wilcoxon/Spearman) score and the van der Waerden score
//! `J(u) = sqrt(F⁻¹_{χ²_d}(u))`, each with `σ² = ∫₀¹ J(u)² du` in closed form.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::numeric::CompensatedSum;
use crate::points::Points;
use crate::special::{chi2_quantile, chi2_quantile_upper};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    Sign,
    Wilcoxon,
    VanDerWaerden,
}

/// Which `σ²` scales a score statistic.
///
/// `Population` is `∫₀¹ J(u)² du`. `Grid` is the mean of `J(r)²` over the
/// radii of the grid actually used, i.e. the exact second moment of the
/// score vectors; it tends to the population value as the grid is refined,
/// but for unbounded scores it is noticeably smaller at moderate `n` (about
/// 0.92 of `d` for van der Waerden scores with 18 rings), and using it keeps
/// the null mean of the statistic at `d1 d2 n/(n − 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    Grid,
    Population,
}

/// A score function together with the dimension it is used in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScoreFunction {
    pub kind: ScoreKind,
    /// Dimension of the block; only the van der Waerden score depends on it.
    pub dim: usize,
}

impl ScoreFunction {
    pub fn new(kind: ScoreKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("score dimension must be at least 1".into()));
        }
        Ok(Self { kind, dim })
    }

    pub fn sign(dim: usize) -> Self {
        Self {
            kind: ScoreKind::Sign,
            dim: dim.max(1),
        }
    }

    pub fn wilcoxon(dim: usize) -> Self {
        Self {
            kind: ScoreKind::Wilcoxon,
            dim: dim.max(1),
        }
    }

    pub fn van_der_waerden(dim: usize) -> Self {
        Self {
            kind: ScoreKind::VanDerWaerden,
            dim: dim.max(1),
        }
    }

    /// `J(u)` for `0 ≤ u < 1`.
    pub fn eval(&self, u: f64) -> f64 {
        match self.kind {
            ScoreKind::Sign => 1.0,
            ScoreKind::Wilcoxon => u,
            ScoreKind::VanDerWaerden => chi2_quantile(u, self.dim as f64)
                .map(f64::sqrt)
                .unwrap_or(f64::NAN),
        }
    }

    /// `J(u)` given both `u` and `v = 1 − u`; accurate as `v → 0`.
    pub fn eval_tail(&self, u: f64, v: f64) -> f64 {
        match self.kind {
            ScoreKind::VanDerWaerden if v < 0.5 => chi2_quantile_upper(v, self.dim as f64)
                .map(f64::sqrt)
                .unwrap_or(f64::NAN),
            _ => self.eval(u),
        }
    }

    /// `σ² = ∫₀¹ J(u)² du`.
    pub fn sigma2(&self) -> f64 {
        match self.kind {
            ScoreKind::Sign => 1.0,
            ScoreKind::Wilcoxon => 1.0 / 3.0,
            ScoreKind::VanDerWaerden => self.dim as f64,
        }
    }

    /// Mean of `J(r)²` over the given radii.
    pub fn grid_sigma2(&self, radii: &[f64]) -> f64 {
        let s: CompensatedSum = radii.iter().map(|&r| self.eval(r).powi(2)).collect();
        s.value() / radii.len() as f64
    }

    /// `σ²` under the chosen normalisation; `radii` are the grid radii (in
    /// any order) and are ignored for `Population`.
    pub fn sigma2_with(&self, norm: Normalization, radii: &[f64]) -> f64 {
        match (norm, self.kind) {
            (Normalization::Population, _) | (_, ScoreKind::Sign) => self.sigma2(),
            (Normalization::Grid, _) => self.grid_sigma2(radii),
        }
    }

    /// Row `j` is `J(‖g_j‖) g_j / ‖g_j‖` for grid point `g_j`; the score
    /// vector carried by any observation transported to `g_j`.
    pub fn grid_scores(&self, grid: &Grid) -> Points {
        let mut out = grid.directions.clone();
        for (j, &r) in grid.radii.iter().enumerate() {
            let w = self.eval(r);
            for x in out.row_mut(j) {
                *x *= w;
            }
        }
        out
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::Grid => "grid",
            Normalization::Population => "population",
        })
    }
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(Normalization::Grid),
            "population" => Ok(Normalization::Population),
            other => Err(Error::Parse(format!("unknown normalization '{other}'"))),
        }
    }
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreKind::Sign => "sign",
            ScoreKind::Wilcoxon => "wilcoxon",
            ScoreKind::VanDerWaerden => "vdw",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::quadrature::integrate_unit;
    use crate::special::normal_quantile;

    #[test]
    fn closed_form_values() {
        assert_eq!(ScoreFunction::sign(3).eval(0.7), 1.0);
        assert_eq!(ScoreFunction::wilcoxon(3).eval(0.7), 0.7);
        let v = ScoreFunction::van_der_waerden(2).eval(0.5);
        assert!((v - 1.177_410_022_6).abs() < 1e-10);
        assert!((v - (2.0 * std::f64::consts::LN_2).sqrt()).abs() < 1e-14);
        assert_eq!(ScoreFunction::van_der_waerden(4).eval(0.0), 0.0);
        assert!(ScoreFunction::new(ScoreKind::Sign, 0).is_err());
    }

    #[test]
    fn sigma2_matches_quadrature() {
        let mut scores = vec![ScoreFunction::sign(1), ScoreFunction::wilcoxon(1)];
        scores.extend((1..=10).map(ScoreFunction::van_der_waerden));
        for s in scores {
            let q = integrate_unit(|u, v| s.eval_tail(u, v).powi(2), 1e-10).unwrap();
            assert!((q - s.sigma2()).abs() < 1e-8, "{s:?}: {q}");
        }
    }

    #[test]
    fn vdw_one_is_absolute_normal_score() {
        let s = ScoreFunction::van_der_waerden(1);
        for k in 1..100 {
            let u = k as f64 / 100.0;
            let z = normal_quantile(0.5 + 0.5 * u).unwrap();
            assert!((s.eval(u) - z.abs()).abs() < 1e-9, "u={u}");
        }
    }

    #[test]
    fn tail_evaluation_agrees() {
        let s = ScoreFunction::van_der_waerden(3);
        for &u in &[0.1, 0.6, 0.9, 0.999] {
            assert!((s.eval(u) - s.eval_tail(u, 1.0 - u)).abs() < 1e-9);
        }
        assert!(s.eval_tail(1.0, 1e-40).is_finite());
    }

    #[test]
    fn grid_sigma2_converges_to_population() {
        let radii =
            |nr: usize| -> Vec<f64> { (1..=nr).map(|r| r as f64 / (nr + 1) as f64).collect() };
        let s = ScoreFunction::wilcoxon(2);
        // (1/nR) Σ (r/(nR+1))² = (2nR + 1)/(6(nR + 1))
        assert!((s.grid_sigma2(&radii(18)) - 37.0 / 114.0).abs() < 1e-15);
        let v = ScoreFunction::van_der_waerden(2);
        let mut last = 0.0;
        for nr in [10, 100, 1000, 10000] {
            let g = v.grid_sigma2(&radii(nr));
            assert!(g > last && g < 2.0);
            last = g;
        }
        assert!((last - 2.0).abs() < 2e-3);
        assert_eq!(
            ScoreFunction::sign(3).sigma2_with(Normalization::Grid, &radii(5)),
            1.0
        );
        assert_eq!(v.sigma2_with(Normalization::Population, &radii(5)), 2.0);
    }

    #[test]
    fn grid_scores_scale_directions() {
        let spec = GridSpec::factorize(41).unwrap();
        let g = Grid::build(spec, 2, 3).unwrap();
        let s = ScoreFunction::wilcoxon(2);
        let gs = s.grid_scores(&g);
        for j in 0..g.len() {
            for k in 0..2 {
                assert!((gs.row(j)[k] - g.points.row(j)[k]).abs() < 1e-15);
            }
        }
        let gs = ScoreFunction::sign(2).grid_scores(&g);
        assert_eq!(gs, g.directions);
    }
}
