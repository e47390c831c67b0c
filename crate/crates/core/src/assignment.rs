//! Dense linear assignment by shortest augmenting paths (Jonker–Volgenant).
//!
//! The solver runs the three classical phases: column reduction, two rounds
//! of augmenting row reduction, then a Dijkstra-type shortest augmenting path
//! for every row still unassigned. Worst case `O(n³)`; every loop scans
//! indices in increasing order, so the result is a deterministic function of
//! the cost matrix.

use crate::error::{Error, Result};

/// Square cost matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::SizeMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::SizeMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(n, data)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Cost of pairing row `i` with column `perm[i]` for every `i`.
    pub fn cost_of(&self, perm: &[usize]) -> f64 {
        perm.iter().enumerate().map(|(i, &j)| self.get(i, j)).sum()
    }
}

/// Optimal pairing of rows (sample points) with columns (grid points).
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `perm[i]` is the column assigned to row `i`.
    pub perm: Vec<usize>,
    pub total_cost: f64,
}

const NONE: usize = usize::MAX;

/// Minimum-cost perfect matching of a square matrix of finite costs.
pub fn solve_assignment(costs: &CostMatrix) -> Result<Assignment> {
    if let Some(pos) = costs.data.iter().position(|c| !c.is_finite()) {
        return Err(Error::NonFinite(pos));
    }
    let n = costs.n;
    if n == 0 {
        return Ok(Assignment {
            perm: Vec::new(),
            total_cost: 0.0,
        });
    }
    let mut solver = Solver::new(costs);
    solver.column_reduction();
    let mut free = solver.reduction_transfer();
    for _ in 0..2 {
        free = solver.augmenting_row_reduction(free);
    }
    for row in free {
        solver.augment(row);
    }
    let perm = solver.row_sol;
    debug_assert!(perm.iter().all(|&j| j < n));
    let total_cost = costs.cost_of(&perm);
    Ok(Assignment { perm, total_cost })
}

struct Solver<'a> {
    c: &'a CostMatrix,
    n: usize,
    /// column duals
    v: Vec<f64>,
    row_sol: Vec<usize>,
    col_sol: Vec<usize>,
    /// number of columns whose minimum fell in each row
    matches: Vec<u32>,
    // scratch for the shortest path phase
    dist: Vec<f64>,
    pred: Vec<usize>,
    cols: Vec<usize>,
}

// Index loops mirror the textbook algorithm, and `augment` moves the scan
// boundary `up` while iterating over columns past it, as the algorithm requires.
#[allow(clippy::needless_range_loop, clippy::mut_range_bound)]
impl<'a> Solver<'a> {
    fn new(c: &'a CostMatrix) -> Self {
        let n = c.n;
        Self {
            c,
            n,
            v: vec![0.0; n],
            row_sol: vec![NONE; n],
            col_sol: vec![NONE; n],
            matches: Vec::new(),
            dist: vec![0.0; n],
            pred: vec![0; n],
            cols: vec![0; n],
        }
    }

    fn column_reduction(&mut self) {
        let mut matches = vec![0u32; self.n];
        for j in (0..self.n).rev() {
            let mut min = self.c.get(0, j);
            let mut imin = 0;
            for i in 1..self.n {
                let h = self.c.get(i, j);
                if h < min {
                    min = h;
                    imin = i;
                }
            }
            self.v[j] = min;
            matches[imin] += 1;
            if matches[imin] == 1 {
                self.row_sol[imin] = j;
                self.col_sol[j] = imin;
            } else if self.v[j] < self.v[self.row_sol[imin]] {
                let j1 = self.row_sol[imin];
                self.row_sol[imin] = j;
                self.col_sol[j] = imin;
                self.col_sol[j1] = NONE;
            } else {
                self.col_sol[j] = NONE;
            }
        }
        self.matches = matches;
    }

    fn reduction_transfer(&mut self) -> Vec<usize> {
        let mut free = Vec::new();
        for i in 0..self.n {
            match self.matches[i] {
                0 => free.push(i),
                1 => {
                    let j1 = self.row_sol[i];
                    let row = self.c.row(i);
                    let mut min = f64::INFINITY;
                    for j in 0..self.n {
                        if j != j1 {
                            min = min.min(row[j] - self.v[j]);
                        }
                    }
                    if min.is_finite() {
                        self.v[j1] -= min;
                    }
                }
                _ => {}
            }
        }
        free
    }

    /// One sweep of augmenting row reduction; returns the rows left free.
    fn augmenting_row_reduction(&mut self, free: Vec<usize>) -> Vec<usize> {
        let mut queue = free;
        let mut still_free = Vec::new();
        let mut k = 0;
        // Point clouds against a ring grid make many rows compete for the
        // outer ring, and unbounded reduction then cycles through tiny dual
        // decrements. Rows left over go to the augmenting phase.
        let mut budget = self.n;
        while k < queue.len() {
            let i = queue[k];
            k += 1;
            if budget == 0 {
                still_free.push(i);
                continue;
            }
            budget -= 1;
            let row = self.c.row(i);
            let mut umin = row[0] - self.v[0];
            let mut j1 = 0;
            let mut usubmin = f64::INFINITY;
            let mut j2 = NONE;
            for j in 1..self.n {
                let h = row[j] - self.v[j];
                if h < usubmin {
                    if h >= umin {
                        usubmin = h;
                        j2 = j;
                    } else {
                        usubmin = umin;
                        umin = h;
                        j2 = j1;
                        j1 = j;
                    }
                }
            }
            let mut i0 = self.col_sol[j1];
            let strictly = umin < usubmin;
            if strictly {
                self.v[j1] -= usubmin - umin;
            } else if i0 != NONE && j2 != NONE {
                j1 = j2;
                i0 = self.col_sol[j2];
            }
            self.row_sol[i] = j1;
            self.col_sol[j1] = i;
            if i0 != NONE {
                self.row_sol[i0] = NONE;
                if strictly {
                    // retry the displaced row immediately
                    k -= 1;
                    queue[k] = i0;
                } else {
                    still_free.push(i0);
                }
            }
        }
        still_free
    }

    /// Shortest augmenting path from the free row `start`.
    fn augment(&mut self, start: usize) {
        let n = self.n;
        let row = self.c.row(start);
        for j in 0..n {
            self.dist[j] = row[j] - self.v[j];
            self.pred[j] = start;
            self.cols[j] = j;
        }
        // cols[..low] finished, cols[low..up] at the current minimum, cols[up..] untouched
        let mut low = 0;
        let mut up = 0;
        let mut last = 0;
        let mut min = 0.0;
        let end = 'search: loop {
            if up == low {
                last = low;
                min = self.dist[self.cols[up]];
                up += 1;
                for k in up..n {
                    let j = self.cols[k];
                    let h = self.dist[j];
                    if h <= min {
                        if h < min {
                            up = low;
                            min = h;
                        }
                        self.cols[k] = self.cols[up];
                        self.cols[up] = j;
                        up += 1;
                    }
                }
                for k in low..up {
                    let j = self.cols[k];
                    if self.col_sol[j] == NONE {
                        break 'search j;
                    }
                }
            }
            let j1 = self.cols[low];
            low += 1;
            let i = self.col_sol[j1];
            let row = self.c.row(i);
            let h = row[j1] - self.v[j1] - min;
            let mut k = up;
            while k < n {
                let j = self.cols[k];
                let v2 = row[j] - self.v[j] - h;
                if v2 < self.dist[j] {
                    self.pred[j] = i;
                    if v2 == min {
                        if self.col_sol[j] == NONE {
                            break 'search j;
                        }
                        self.cols[k] = self.cols[up];
                        self.cols[up] = j;
                        up += 1;
                    }
                    self.dist[j] = v2;
                }
                k += 1;
            }
        };
        // columns finalised before the last minimum level get their duals raised
        for k in 0..last {
            let j = self.cols[k];
            self.v[j] += self.dist[j] - min;
        }
        let mut j = end;
        loop {
            let i = self.pred[j];
            self.col_sol[j] = i;
            let next = self.row_sol[i];
            self.row_sol[i] = j;
            if i == start {
                break;
            }
            j = next;
        }
    }
}
