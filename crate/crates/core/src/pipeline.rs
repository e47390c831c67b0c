//! End-to-end runs: tests on a data set, and rejection frequencies over
//! simulated Konijn samples.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::konijn::{local_delta, Case, KonijnConfig};
use crate::nulldist::{
    cache_name, exhaustive_null, load_or_compute, simulate_null, NullTable, MAX_EXHAUSTIVE,
    MIN_REPLICATES,
};
use crate::points::Points;
use crate::rng;
use crate::scores::Normalization;
use crate::stats::{w_for, wilks_statistic, Method, TestKind, TestResult};
use crate::transport::center_outward;

/// Smallest sample size accepted by the pipeline.
pub const MIN_N: usize = 4;

/// Grids for both blocks at one sample size, built from one grid seed.
#[derive(Debug, Clone)]
pub struct TestSetup {
    pub grid1: Grid,
    pub grid2: Grid,
    pub grid_seed: u64,
    pub normalization: Normalization,
}

impl TestSetup {
    pub fn new(
        n: usize,
        d1: usize,
        d2: usize,
        grid_seed: u64,
        normalization: Normalization,
    ) -> Result<Self> {
        if n < MIN_N {
            return Err(Error::SampleTooSmall { n, min: MIN_N });
        }
        Ok(Self {
            grid1: Grid::for_sample(n, d1, grid_seed)?,
            grid2: Grid::for_sample(n, d2, grid_seed)?,
            grid_seed,
            normalization,
        })
    }

    pub fn n(&self) -> usize {
        self.grid1.len()
    }

    pub fn d1(&self) -> usize {
        self.grid1.dim()
    }

    pub fn d2(&self) -> usize {
        self.grid2.dim()
    }

    fn check(&self, x1: &Points, x2: &Points) -> Result<()> {
        for (x, d) in [(x1, self.d1()), (x2, self.d2())] {
            if x.len() != self.n() {
                return Err(Error::SizeMismatch {
                    expected: self.n(),
                    found: x.len(),
                });
            }
            if x.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: x.dim(),
                });
            }
        }
        Ok(())
    }

    /// Statistics of the requested tests, in the order given. The optimal
    /// assignments are only computed when a rank test is requested.
    pub fn statistics(&self, x1: &Points, x2: &Points, tests: &[TestKind]) -> Result<Vec<f64>> {
        self.check(x1, x2)?;
        let ranks = if tests.iter().any(TestKind::is_rank_based) {
            Some((
                center_outward(x1, &self.grid1)?,
                center_outward(x2, &self.grid2)?,
            ))
        } else {
            None
        };
        tests
            .iter()
            .map(|&kind| match (&ranks, kind) {
                (_, TestKind::Wilks) => wilks_statistic(x1, x2),
                (Some((rs1, rs2)), _) => {
                    Ok(w_for(kind, rs1, rs2, self.normalization)?.statistic(self.n()))
                }
                (None, _) => unreachable!("ranks are computed whenever a rank test is present"),
            })
            .collect()
    }

    /// Null table of a rank test for these grids.
    pub fn null_table(
        &self,
        kind: TestKind,
        method: Method,
        cache: Option<&Path>,
    ) -> Result<NullTable> {
        let (n, d1, d2, norm) = (self.n(), self.d1(), self.d2(), self.normalization);
        let (mc, make): (_, Box<dyn FnOnce() -> Result<NullTable>>) = match method {
            Method::Permutation { b, seed } => (
                Some((b, seed)),
                Box::new(move || simulate_null(kind, &self.grid1, &self.grid2, norm, b, seed)),
            ),
            Method::Exact => (
                None,
                Box::new(move || exhaustive_null(kind, &self.grid1, &self.grid2, norm)),
            ),
            Method::Asymptotic => {
                return Err(Error::Domain("asymptotic tests use no null table".into()))
            }
        };
        match cache {
            Some(dir) => {
                let name = cache_name(kind, n, d1, d2, norm, Some(self.grid_seed), mc);
                Ok(load_or_compute(dir, &name, Some(self.grid_seed), make)?.table)
            }
            None => {
                let mut table = make()?;
                table.grid_seed = Some(self.grid_seed);
                Ok(table)
            }
        }
    }
}

fn check_method(method: Method, n: usize) -> Result<()> {
    match method {
        Method::Permutation { b, .. } if b < MIN_REPLICATES => Err(Error::Domain(format!(
            "permutation p-values need B >= {MIN_REPLICATES}, got {b}"
        ))),
        Method::Exact if n > MAX_EXHAUSTIVE => Err(Error::Domain(format!(
            "exact p-values are limited to n <= {MAX_EXHAUSTIVE}, got {n}"
        ))),
        _ => Ok(()),
    }
}

/// Runs the requested tests on one data set. Rank tests take their
/// p-values from `method`; Wilks' test is not distribution free and always
/// reports its asymptotic p-value.
pub fn run_tests(
    x1: &Points,
    x2: &Points,
    tests: &[TestKind],
    setup: &TestSetup,
    method: Method,
    cache: Option<&Path>,
) -> Result<Vec<TestResult>> {
    check_method(method, setup.n())?;
    let stats = setup.statistics(x1, x2, tests)?;
    let df = setup.d1() * setup.d2();
    tests
        .iter()
        .zip(stats)
        .map(|(&kind, t)| {
            if kind == TestKind::Wilks || method == Method::Asymptotic {
                return TestResult::asymptotic(kind, t, df);
            }
            let table = setup.null_table(kind, method, cache)?;
            Ok(TestResult {
                name: kind.name().to_string(),
                statistic: t,
                df,
                pvalue: table.pvalue(t),
                method,
            })
        })
        .collect()
}

/// Settings of a rejection-frequency study over Konijn alternatives with
/// `δ = τ/√n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerConfig {
    pub case: Case,
    pub d: usize,
    pub n: usize,
    pub taus: Vec<f64>,
    pub reps: usize,
    pub alpha: f64,
    pub tests: Vec<TestKind>,
    pub grid_seed: u64,
    pub data_seed: u64,
    pub method: Method,
    pub normalization: Normalization,
}

impl PowerConfig {
    /// Asymptotic tests at level 0.05 with grid normalisation.
    pub fn new(case: Case, d: usize, n: usize, taus: Vec<f64>, reps: usize) -> Self {
        Self {
            case,
            d,
            n,
            taus,
            reps,
            alpha: 0.05,
            tests: TestKind::ALL.to_vec(),
            grid_seed: 0,
            data_seed: 1,
            method: Method::Asymptotic,
            normalization: Normalization::Grid,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain(format!(
                "alpha must be in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.reps == 0 || self.taus.is_empty() || self.tests.is_empty() {
            return Err(Error::Domain(
                "replications, taus and tests must be non-empty".into(),
            ));
        }
        if self.taus.iter().any(|t| !t.is_finite()) {
            return Err(Error::Domain("taus must be finite".into()));
        }
        check_method(self.method, self.n)
    }
}

/// Rejection counts, one row per test and one column per `τ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerTable {
    pub tests: Vec<TestKind>,
    pub taus: Vec<f64>,
    pub reps: usize,
    pub rejections: Vec<Vec<usize>>,
}

impl PowerTable {
    pub fn frequency(&self, test: usize, tau: usize) -> f64 {
        self.rejections[test][tau] as f64 / self.reps as f64
    }

    /// Frequency for a test by kind and `τ` by position.
    pub fn get(&self, kind: TestKind, tau: usize) -> Option<f64> {
        let i = self.tests.iter().position(|&k| k == kind)?;
        Some(self.frequency(i, tau))
    }

    /// `test,tau=…,…` header, then one row of frequencies per test.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("test");
        for t in &self.taus {
            out.push_str(&format!(",tau={t}"));
        }
        out.push('\n');
        for (i, kind) in self.tests.iter().enumerate() {
            out.push_str(kind.name());
            for j in 0..self.taus.len() {
                out.push_str(&format!(",{:.3}", self.frequency(i, j)));
            }
            out.push('\n');
        }
        out
    }
}

/// Simulates `reps` samples per `τ` and counts rejections at level `alpha`.
///
/// Replicate `r` uses stream `r` of the data seed for every `τ`, so the
/// columns share their underlying independent draws. Results do not depend
/// on the number of threads.
pub fn power_study(cfg: &PowerConfig, cache: Option<&Path>) -> Result<PowerTable> {
    cfg.validate()?;
    let setup = TestSetup::new(cfg.n, cfg.d, cfg.d, cfg.grid_seed, cfg.normalization)?;
    let df = cfg.d * cfg.d;
    // critical values for the rank tests when they come from null tables
    let tables = cfg
        .tests
        .iter()
        .map(|&kind| match cfg.method {
            Method::Asymptotic => Ok(None),
            _ if kind == TestKind::Wilks => Ok(None),
            method => setup.null_table(kind, method, cache).map(Some),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rejections = vec![vec![0usize; cfg.taus.len()]; cfg.tests.len()];
    for (j, &tau) in cfg.taus.iter().enumerate() {
        let model = KonijnConfig::case(cfg.case, cfg.d, local_delta(tau, cfg.n));
        let outcomes = rng::map_indices(cfg.reps, |r| -> Result<Vec<bool>> {
            let (x1, x2) = model.generate_replicate(cfg.n, cfg.data_seed, r as u64)?;
            let stats = setup.statistics(&x1, &x2, &cfg.tests)?;
            stats
                .iter()
                .zip(&tables)
                .map(|(&t, table)| {
                    let p = match table {
                        Some(table) => table.pvalue(t),
                        None => crate::stats::p_value_asymptotic(t, df)?,
                    };
                    Ok(p <= cfg.alpha)
                })
                .collect()
        });
        for outcome in outcomes {
            for (i, reject) in outcome?.into_iter().enumerate() {
                rejections[i][j] += reject as usize;
            }
        }
    }
    Ok(PowerTable {
        tests: cfg.tests.clone(),
        taus: cfg.taus.clone(),
        reps: cfg.reps,
        rejections,
    })
}
