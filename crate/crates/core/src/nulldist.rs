//! Distribution-free null laws of the rank statistics.
//!
//! Under independence the pairing between the two blocks' grid points is a
//! uniform random permutation, so the null law of every rank statistic can be
//! simulated (or, for tiny `n`, enumerated) from the grids alone.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::points::Points;
use crate::rng;
use crate::scores::Normalization;
use crate::stats::{cross_moment, kendall_moment, CrossCov, CrossCovKind, TestKind};

/// Smallest number of Monte Carlo pairings accepted.
pub const MIN_REPLICATES: usize = 100;
/// Largest `n` for which all `n!` pairings are enumerated.
pub const MAX_EXHAUSTIVE: usize = 8;

/// Per-grid quantities a statistic needs, computed once.
#[derive(Debug, Clone)]
pub struct NullSetup {
    kind: TestKind,
    table1: Points,
    table2: Points,
    cross_kind: CrossCovKind,
}

impl NullSetup {
    pub fn new(kind: TestKind, grid1: &Grid, grid2: &Grid, norm: Normalization) -> Result<Self> {
        if grid1.len() != grid2.len() {
            return Err(Error::SizeMismatch {
                expected: grid1.len(),
                found: grid2.len(),
            });
        }
        match kind {
            TestKind::Wilks => Err(Error::Domain(
                "wilks is not distribution free; no pairing null exists".into(),
            )),
            TestKind::Kendall => Ok(Self {
                kind,
                table1: grid1.points.clone(),
                table2: grid2.points.clone(),
                cross_kind: CrossCovKind::Kendall,
            }),
            _ => {
                let j1 = kind.score(grid1.dim()).expect("score test");
                let j2 = kind.score(grid2.dim()).expect("score test");
                Ok(Self {
                    kind,
                    table1: j1.grid_scores(grid1),
                    table2: j2.grid_scores(grid2),
                    cross_kind: CrossCovKind::Score {
                        sigma2_1: j1.sigma2_with(norm, &grid1.radii),
                        sigma2_2: j2.sigma2_with(norm, &grid2.radii),
                    },
                })
            }
        }
    }

    pub fn n(&self) -> usize {
        self.table1.len()
    }

    /// Statistic when observation `i` sits at grid point `p1[i]` of the first
    /// grid and `p2[i]` of the second.
    pub fn statistic(&self, p1: &[usize], p2: &[usize]) -> f64 {
        let w = match self.kind {
            TestKind::Kendall => kendall_moment(&self.table1, &self.table2, p1, p2),
            _ => cross_moment(&self.table1, &self.table2, p1, p2),
        };
        CrossCov {
            kind: self.cross_kind,
            d1: self.table1.dim(),
            d2: self.table2.dim(),
            w,
        }
        .statistic(self.n())
    }
}

/// Sorted null values of one statistic for one pair of grids.
#[derive(Debug, Clone, PartialEq)]
pub struct NullTable {
    pub kind: TestKind,
    pub n: usize,
    pub d1: usize,
    pub d2: usize,
    pub normalization: Normalization,
    /// Seed the grids were built from, when known; part of the cache key.
    pub grid_seed: Option<u64>,
    /// Master seed of the pairings; unused when exhaustive.
    pub seed: u64,
    /// Whether `values` enumerates all `n!` pairings.
    pub exhaustive: bool,
    pub values: Vec<f64>,
}

/// Monte Carlo null table from `b` uniform pairings. Replicate `k` draws its
/// permutation from stream `k` of `seed`, so the table does not depend on
/// how replicates are scheduled.
pub fn simulate_null(
    kind: TestKind,
    grid1: &Grid,
    grid2: &Grid,
    norm: Normalization,
    b: usize,
    seed: u64,
) -> Result<NullTable> {
    if b < MIN_REPLICATES {
        return Err(Error::Domain(format!(
            "at least {MIN_REPLICATES} pairings required, got {b}"
        )));
    }
    let setup = NullSetup::new(kind, grid1, grid2, norm)?;
    let n = setup.n();
    let identity: Vec<usize> = (0..n).collect();
    let mut values = rng::map_indices(b, |k| {
        let mut r = rng::stream(seed, k as u64);
        let perm = rng::permutation(n, &mut r);
        setup.statistic(&identity, &perm)
    });
    values.sort_by(f64::total_cmp);
    Ok(NullTable {
        kind,
        n,
        d1: grid1.dim(),
        d2: grid2.dim(),
        normalization: norm,
        grid_seed: None,
        seed,
        exhaustive: false,
        values,
    })
}

/// Null table over all `n!` pairings, `n ≤ 8`.
pub fn exhaustive_null(
    kind: TestKind,
    grid1: &Grid,
    grid2: &Grid,
    norm: Normalization,
) -> Result<NullTable> {
    let setup = NullSetup::new(kind, grid1, grid2, norm)?;
    let n = setup.n();
    if n > MAX_EXHAUSTIVE {
        return Err(Error::Domain(format!(
            "exhaustive enumeration is limited to n <= {MAX_EXHAUSTIVE}, got {n}"
        )));
    }
    let identity: Vec<usize> = (0..n).collect();
    let mut values = Vec::new();
    for_each_permutation(n, |perm| values.push(setup.statistic(&identity, perm)));
    values.sort_by(f64::total_cmp);
    Ok(NullTable {
        kind,
        n,
        d1: grid1.dim(),
        d2: grid2.dim(),
        normalization: norm,
        grid_seed: None,
        seed: 0,
        exhaustive: true,
        values,
    })
}

/// Visits every permutation of `0..n` once (Heap's algorithm).
pub fn for_each_permutation<F: FnMut(&[usize])>(n: usize, mut f: F) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut stack = vec![0usize; n];
    f(&perm);
    let mut i = 0;
    while i < n {
        if stack[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(stack[i], i);
            }
            f(&perm);
            stack[i] += 1;
            i = 0;
        } else {
            stack[i] = 0;
            i += 1;
        }
    }
}

/// Relative slack when counting null values at least as large as the
/// observed one, so that rounding differences between equal statistics do
/// not decide ties.
const TIE_TOLERANCE: f64 = 1e-10;

impl NullTable {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of table values `≥ observed` (up to rounding).
    pub fn count_at_least(&self, observed: f64) -> usize {
        let cut = observed - TIE_TOLERANCE * observed.abs().max(1.0);
        self.values.len() - self.values.partition_point(|&v| v < cut)
    }

    /// `(1 + #{v ≥ observed}) / (B + 1)`.
    pub fn exact_pvalue(&self, observed: f64) -> f64 {
        (1 + self.count_at_least(observed)) as f64 / (self.len() + 1) as f64
    }

    /// P-value of `observed`: the exact tail fraction `#{v ≥ observed}/n!`
    /// for exhaustive tables, the Monte Carlo value otherwise.
    pub fn pvalue(&self, observed: f64) -> f64 {
        if self.exhaustive {
            self.count_at_least(observed) as f64 / self.len() as f64
        } else {
            self.exact_pvalue(observed)
        }
    }

    /// Smallest table value `v` with empirical CDF `F(v) ≥ p`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::Domain("empty null table".into()));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("quantile level {p} outside [0, 1]")));
        }
        let b = self.len();
        let k = ((p * b as f64).ceil() as usize).clamp(1, b);
        Ok(self.values[k - 1])
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// File name under which the table is cached.
    pub fn cache_name(&self) -> String {
        cache_name(
            self.kind,
            self.n,
            self.d1,
            self.d2,
            self.normalization,
            self.grid_seed,
            if self.exhaustive {
                None
            } else {
                Some((self.len(), self.seed))
            },
        )
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "kind,n,d1,d2,normalization,grid_seed,b,seed,exhaustive"
        )?;
        let grid_seed = self.grid_seed.map(|s| s.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            self.kind,
            self.n,
            self.d1,
            self.d2,
            self.normalization,
            grid_seed,
            self.len(),
            self.seed,
            self.exhaustive
        )?;
        writeln!(out, "value")?;
        for v in &self.values {
            // shortest representation that round-trips
            writeln!(out, "{v:e}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let mut next = |what: &str| -> Result<String> {
            lines
                .next()
                .transpose()?
                .ok_or_else(|| Error::Parse(format!("null table: missing {what}")))
        };
        let header = next("header")?;
        if header.trim() != "kind,n,d1,d2,normalization,grid_seed,b,seed,exhaustive" {
            return Err(Error::Parse(format!("null table: bad header '{header}'")));
        }
        let meta = next("metadata")?;
        let f: Vec<&str> = meta.trim().split(',').collect();
        if f.len() != 9 {
            return Err(Error::Parse(format!("null table: bad metadata '{meta}'")));
        }
        let int = |s: &str| -> Result<u64> {
            s.parse()
                .map_err(|_| Error::Parse(format!("null table: bad integer '{s}'")))
        };
        let kind: TestKind = f[0].parse()?;
        let normalization: Normalization = f[4].parse()?;
        let grid_seed = if f[5].is_empty() {
            None
        } else {
            Some(int(f[5])?)
        };
        let b = int(f[6])? as usize;
        let exhaustive = match f[8] {
            "true" => true,
            "false" => false,
            other => return Err(Error::Parse(format!("null table: bad flag '{other}'"))),
        };
        if next("value header")?.trim() != "value" {
            return Err(Error::Parse("null table: missing value column".into()));
        }
        let mut values = Vec::with_capacity(b);
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            values.push(
                line.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("null table: bad value '{line}'")))?,
            );
        }
        if values.len() != b {
            return Err(Error::Parse(format!(
                "null table: expected {b} values, found {}",
                values.len()
            )));
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Parse("null table: values not sorted".into()));
        }
        Ok(Self {
            kind,
            n: int(f[1])? as usize,
            d1: int(f[2])? as usize,
            d2: int(f[3])? as usize,
            normalization,
            grid_seed,
            seed: int(f[7])?,
            exhaustive,
            values,
        })
    }
}

/// Cache file name for the given parameters; `mc` is `(B, seed)` for Monte
/// Carlo tables and `None` for exhaustive ones.
pub fn cache_name(
    kind: TestKind,
    n: usize,
    d1: usize,
    d2: usize,
    norm: Normalization,
    grid_seed: Option<u64>,
    mc: Option<(usize, u64)>,
) -> String {
    let g = grid_seed.map(|s| format!("_g{s}")).unwrap_or_default();
    let base = format!("null_{kind}_{norm}_n{n}_d{d1}x{d2}{g}");
    match mc {
        Some((b, seed)) => format!("{base}_b{b}_s{seed}.csv"),
        None => format!("{base}_exact.csv"),
    }
}

/// Outcome of a cache lookup.
#[derive(Debug, Clone)]
pub struct Cached {
    pub table: NullTable,
    pub path: PathBuf,
    /// `true` when the table was read from disk rather than computed.
    pub hit: bool,
}

/// Loads the table from `dir` if present, otherwise computes it with `make`
/// and stores it. The grid seed is recorded in the stored table.
pub fn load_or_compute<F>(dir: &Path, name: &str, grid_seed: Option<u64>, make: F) -> Result<Cached>
where
    F: FnOnce() -> Result<NullTable>,
{
    let path = dir.join(name);
    if path.exists() {
        let table = NullTable::read_csv(BufReader::new(fs::File::open(&path)?))?;
        return Ok(Cached {
            table,
            path,
            hit: true,
        });
    }
    let mut table = make()?;
    table.grid_seed = grid_seed;
    fs::create_dir_all(dir)?;
    // write then rename so an interrupted run never leaves a partial table
    let tmp = dir.join(format!("{name}.tmp"));
    {
        let mut f = std::io::BufWriter::new(fs::File::create(&tmp)?);
        table.write_csv(&mut f)?;
        f.flush()?;
    }
    fs::rename(&tmp, &path)?;
    Ok(Cached {
        table,
        path,
        hit: false,
    })
}
