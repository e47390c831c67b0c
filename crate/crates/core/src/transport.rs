//! Empirical center-outward distribution function.
//!
//! The sample is paired with the grid by the assignment minimising the total
//! squared Euclidean distance; the image of each observation gives its
//! center-outward rank (the image's norm) and sign (the image's direction).

use std::io::Write;

use crate::assignment::{solve_assignment, Assignment, CostMatrix};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::points::Points;

/// Squared distances `‖sample_i − grid_j‖²`.
pub fn cost_matrix(sample: &Points, grid: &Grid) -> Result<CostMatrix> {
    if sample.len() != grid.len() {
        return Err(Error::SizeMismatch {
            expected: grid.len(),
            found: sample.len(),
        });
    }
    if sample.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            found: sample.dim(),
        });
    }
    let n = sample.len();
    let mut data = Vec::with_capacity(n * n);
    for z in sample.rows() {
        for g in grid.points.rows() {
            data.push(z.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).sum());
        }
    }
    CostMatrix::new(n, data)
}

/// Center-outward ranks and signs of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RanksSigns {
    /// `F(Z_i)`, a grid point.
    pub images: Points,
    /// `‖F(Z_i)‖`.
    pub rescaled_ranks: Vec<f64>,
    /// `(n_radii + 1) ‖F(Z_i)‖`; `1/2` for tie-break points.
    pub ranks: Vec<f64>,
    /// `F(Z_i) / ‖F(Z_i)‖`.
    pub signs: Points,
    /// Grid index of each image.
    pub grid_index: Vec<usize>,
    pub total_cost: f64,
}

impl RanksSigns {
    pub fn len(&self) -> usize {
        self.rescaled_ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rescaled_ranks.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.signs.dim()
    }

    /// Ranks and signs for a given pairing of observations with grid points.
    pub fn from_pairing(grid: &Grid, grid_index: Vec<usize>, total_cost: f64) -> Self {
        let d = grid.dim();
        let scale = (grid.spec.n_radii + 1) as f64;
        let mut images = Points::zeros(grid_index.len(), d);
        let mut signs = Points::zeros(grid_index.len(), d);
        let mut rescaled_ranks = Vec::with_capacity(grid_index.len());
        for (i, &j) in grid_index.iter().enumerate() {
            images.row_mut(i).copy_from_slice(grid.points.row(j));
            signs.row_mut(i).copy_from_slice(grid.directions.row(j));
            rescaled_ranks.push(grid.radii[j]);
        }
        let ranks = rescaled_ranks.iter().map(|r| r * scale).collect();
        RanksSigns {
            images,
            rescaled_ranks,
            ranks,
            signs,
            grid_index,
            total_cost,
        }
    }

    /// One line per observation: `index,rank,rescaled_rank,sign_1,...,sign_d`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = (1..=self.dim()).map(|k| format!("sign_{k}")).collect();
        writeln!(out, "index,rank,rescaled_rank,{}", header.join(","))?;
        for i in 0..self.len() {
            let signs: Vec<String> = self
                .signs
                .row(i)
                .iter()
                .map(|s| format!("{s:.16e}"))
                .collect();
            writeln!(
                out,
                "{i},{:.16e},{:.16e},{}",
                self.ranks[i],
                self.rescaled_ranks[i],
                signs.join(",")
            )?;
        }
        Ok(())
    }
}

/// Optimal assignment of the sample to the grid.
pub fn assign(sample: &Points, grid: &Grid) -> Result<Assignment> {
    solve_assignment(&cost_matrix(sample, grid)?)
}

/// Empirical center-outward ranks and signs of `sample` with respect to `grid`.
pub fn center_outward(sample: &Points, grid: &Grid) -> Result<RanksSigns> {
    if let Some(pos) = sample.first_non_finite() {
        return Err(Error::NonFinite(pos));
    }
    if sample.len() == grid.len() && sample.dim() == grid.dim() {
        if let Some((first, second)) = sample.find_duplicate() {
            return Err(Error::DuplicatePoint { first, second });
        }
    }
    let a = assign(sample, grid)?;
    Ok(RanksSigns::from_pairing(grid, a.perm, a.total_cost))
}
