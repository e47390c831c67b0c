//! Rank-based cross-covariance matrices, their test statistics, and the
//! Gaussian likelihood-ratio (Wilks) benchmark.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
pub use crate::numeric::CompensatedSum;
use crate::points::Points;
use crate::scores::{Normalization, ScoreFunction};
use crate::special::chi2_sf;
use crate::transport::RanksSigns;

/// The five independence tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Sign,
    Spearman,
    Kendall,
    Vdw,
    Wilks,
}

impl TestKind {
    pub const ALL: [TestKind; 5] = [
        TestKind::Sign,
        TestKind::Spearman,
        TestKind::Kendall,
        TestKind::Vdw,
        TestKind::Wilks,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TestKind::Sign => "sign",
            TestKind::Spearman => "spearman",
            TestKind::Kendall => "kendall",
            TestKind::Vdw => "vdw",
            TestKind::Wilks => "wilks",
        }
    }

    /// Whether the test is built on center-outward ranks and signs.
    pub fn is_rank_based(&self) -> bool {
        !matches!(self, TestKind::Wilks)
    }

    /// Score function of a score-type test in dimension `d`; `None` for
    /// Kendall and Wilks.
    pub fn score(&self, d: usize) -> Option<ScoreFunction> {
        match self {
            TestKind::Sign => Some(ScoreFunction::sign(d)),
            TestKind::Spearman => Some(ScoreFunction::wilcoxon(d)),
            TestKind::Vdw => Some(ScoreFunction::van_der_waerden(d)),
            TestKind::Kendall | TestKind::Wilks => None,
        }
    }

    /// Parses a comma-separated list such as `sign,vdw,wilks`.
    pub fn parse_list(s: &str) -> Result<Vec<TestKind>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let kind: TestKind = part.parse()?;
            if !out.contains(&kind) {
                out.push(kind);
            }
        }
        if out.is_empty() {
            return Err(Error::Parse("empty test list".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sign" | "quadrant" => Ok(TestKind::Sign),
            "spearman" | "wilcoxon" => Ok(TestKind::Spearman),
            "kendall" => Ok(TestKind::Kendall),
            "vdw" | "van_der_waerden" => Ok(TestKind::Vdw),
            "wilks" => Ok(TestKind::Wilks),
            other => Err(Error::Parse(format!("unknown test '{other}'"))),
        }
    }
}

/// Which normalisation turns `‖W‖²` into a test statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CrossCovKind {
    /// `W_J` for score functions with the given `σ²` values.
    Score {
        sigma2_1: f64,
        sigma2_2: f64,
    },
    Kendall,
}

/// A `d1 × d2` cross-covariance matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCov {
    pub kind: CrossCovKind,
    pub d1: usize,
    pub d2: usize,
    pub w: Vec<f64>,
}

impl CrossCov {
    pub fn get(&self, j: usize, l: usize) -> f64 {
        self.w[j * self.d2 + l]
    }

    pub fn frobenius2(&self) -> f64 {
        self.w
            .iter()
            .map(|x| x * x)
            .collect::<CompensatedSum>()
            .value()
    }

    /// Scaled squared Frobenius norm; asymptotically `χ²_{d1 d2}` under
    /// independence.
    pub fn statistic(&self, n: usize) -> f64 {
        let n = n as f64;
        let scale = match self.kind {
            CrossCovKind::Score { sigma2_1, sigma2_2 } => {
                n * (self.d1 * self.d2) as f64 / (sigma2_1 * sigma2_2)
            }
            CrossCovKind::Kendall => 9.0 * n / 4.0,
        };
        scale * self.frobenius2()
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::SizeMismatch {
            expected: a,
            found: b,
        });
    }
    Ok(())
}

/// `(1/n) Σ_i a_{p1(i)} b_{p2(i)}′` where `p1`, `p2` index the rows of the
/// score tables `a`, `b`.
pub fn cross_moment(a: &Points, b: &Points, p1: &[usize], p2: &[usize]) -> Vec<f64> {
    let (d1, d2) = (a.dim(), b.dim());
    let mut acc = vec![CompensatedSum::default(); d1 * d2];
    for (&i1, &i2) in p1.iter().zip(p2) {
        let (x, y) = (a.row(i1), b.row(i2));
        for j in 0..d1 {
            for l in 0..d2 {
                acc[j * d2 + l].add(x[j] * y[l]);
            }
        }
    }
    let n = p1.len() as f64;
    acc.iter().map(|s| s.value() / n).collect()
}

/// Pairwise sign agreement of image differences; `a`, `b` hold the images
/// and `p1`, `p2` select which row each observation maps to.
pub fn kendall_moment(a: &Points, b: &Points, p1: &[usize], p2: &[usize]) -> Vec<f64> {
    let (d1, d2) = (a.dim(), b.dim());
    let n = p1.len();
    let mut counts = vec![0i64; d1 * d2];
    let mut s1 = vec![0i64; d1];
    let mut s2 = vec![0i64; d2];
    for i in 0..n {
        let (xi, yi) = (a.row(p1[i]), b.row(p2[i]));
        for k in i + 1..n {
            let (xk, yk) = (a.row(p1[k]), b.row(p2[k]));
            for j in 0..d1 {
                s1[j] = sign(xi[j] - xk[j]);
            }
            for l in 0..d2 {
                s2[l] = sign(yi[l] - yk[l]);
            }
            for j in 0..d1 {
                if s1[j] != 0 {
                    for l in 0..d2 {
                        counts[j * d2 + l] += s1[j] * s2[l];
                    }
                }
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    counts.iter().map(|&c| c as f64 / pairs).collect()
}

fn sign(x: f64) -> i64 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// `W_J = (1/n) Σ_i J1(R̃_1i) J2(R̃_2i) S_1i S_2i′`, carrying the `σ²`
/// values chosen by `norm`.
pub fn w_score(
    rs1: &RanksSigns,
    rs2: &RanksSigns,
    j1: &ScoreFunction,
    j2: &ScoreFunction,
    norm: Normalization,
) -> Result<CrossCov> {
    check_lengths(rs1.len(), rs2.len())?;
    if rs1.is_empty() {
        return Err(Error::SampleTooSmall { n: 0, min: 1 });
    }
    let weights = |rs: &RanksSigns, j: &ScoreFunction| {
        let mut out = rs.signs.clone();
        for (i, &u) in rs.rescaled_ranks.iter().enumerate() {
            let w = j.eval(u);
            for x in out.row_mut(i) {
                *x *= w;
            }
        }
        out
    };
    let (a, b) = (weights(rs1, j1), weights(rs2, j2));
    let idx: Vec<usize> = (0..rs1.len()).collect();
    // ranks are a bijection onto the grid, so the observed rescaled ranks
    // are exactly the grid radii
    Ok(CrossCov {
        kind: CrossCovKind::Score {
            sigma2_1: j1.sigma2_with(norm, &rs1.rescaled_ranks),
            sigma2_2: j2.sigma2_with(norm, &rs2.rescaled_ranks),
        },
        d1: rs1.dim(),
        d2: rs2.dim(),
        w: cross_moment(&a, &b, &idx, &idx),
    })
}

/// Kendall-type matrix of averaged signs of image-difference products.
pub fn w_kendall(rs1: &RanksSigns, rs2: &RanksSigns) -> Result<CrossCov> {
    check_lengths(rs1.len(), rs2.len())?;
    if rs1.len() < 2 {
        return Err(Error::SampleTooSmall {
            n: rs1.len(),
            min: 2,
        });
    }
    let idx: Vec<usize> = (0..rs1.len()).collect();
    Ok(CrossCov {
        kind: CrossCovKind::Kendall,
        d1: rs1.dim(),
        d2: rs2.dim(),
        w: kendall_moment(&rs1.images, &rs2.images, &idx, &idx),
    })
}

/// Cross-covariance matrix of a rank-based test.
pub fn w_for(
    kind: TestKind,
    rs1: &RanksSigns,
    rs2: &RanksSigns,
    norm: Normalization,
) -> Result<CrossCov> {
    match kind {
        TestKind::Kendall => w_kendall(rs1, rs2),
        TestKind::Wilks => Err(Error::Domain("wilks is not rank based".into())),
        _ => {
            let j1 = kind.score(rs1.dim()).expect("score test");
            let j2 = kind.score(rs2.dim()).expect("score test");
            w_score(rs1, rs2, &j1, &j2, norm)
        }
    }
}

/// `1 − F_{χ²_df}(statistic)`.
pub fn p_value_asymptotic(statistic: f64, df: usize) -> Result<f64> {
    chi2_sf(statistic.max(0.0), df as f64)
}

/// How a p-value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Asymptotic,
    Permutation { b: usize, seed: u64 },
    Exact,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Asymptotic => f.write_str("asymptotic"),
            Method::Permutation { b, seed } => write!(f, "permutation(B={b},seed={seed})"),
            Method::Exact => f.write_str("exact"),
        }
    }
}

impl Serialize for Method {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Rounds to 15 significant digits for reporting.
pub fn round_significant(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.14e}").parse().unwrap_or(x)
}

fn serialize_rounded<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round_significant(*x))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub name: String,
    #[serde(serialize_with = "serialize_rounded")]
    pub statistic: f64,
    pub df: usize,
    #[serde(serialize_with = "serialize_rounded")]
    pub pvalue: f64,
    pub method: Method,
}

impl TestResult {
    pub fn asymptotic(kind: TestKind, statistic: f64, df: usize) -> Result<Self> {
        Ok(Self {
            name: kind.name().to_string(),
            statistic,
            df,
            pvalue: p_value_asymptotic(statistic, df)?,
            method: Method::Asymptotic,
        })
    }
}

/// Sample covariance with `1/(n−1)` normalisation.
fn covariance(data: &DMatrix<f64>) -> DMatrix<f64> {
    let n = data.nrows();
    let mean = data.row_mean();
    let mut centered = data.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    (centered.transpose() * &centered) / (n as f64 - 1.0)
}

fn log_det_spd(m: &DMatrix<f64>, what: &str) -> Result<f64> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular(format!("{what} covariance is not positive definite")))?;
    let l = chol.l();
    // exact collinearity survives rounding as a tiny pivot rather than a failure
    let scale = m.diagonal().max();
    if (0..l.nrows()).any(|i| l[(i, i)] * l[(i, i)] <= 1e-12 * scale) {
        return Err(Error::Singular(format!("{what} covariance is degenerate")));
    }
    let logdet: f64 = (0..l.nrows()).map(|i| 2.0 * l[(i, i)].ln()).sum();
    if logdet.is_finite() {
        Ok(logdet)
    } else {
        Err(Error::Singular(format!("{what} covariance is degenerate")))
    }
}

/// Wilks' statistic `n log(det S1 det S2 / det S)`.
pub fn wilks_statistic(x1: &Points, x2: &Points) -> Result<f64> {
    check_lengths(x1.len(), x2.len())?;
    let (n, d1, d2) = (x1.len(), x1.dim(), x2.dim());
    if n <= d1 + d2 {
        return Err(Error::SampleTooSmall {
            n,
            min: d1 + d2 + 1,
        });
    }
    let joint = DMatrix::from_fn(n, d1 + d2, |i, k| {
        if k < d1 {
            x1.row(i)[k]
        } else {
            x2.row(i)[k - d1]
        }
    });
    let s = covariance(&joint);
    let s1 = s.view((0, 0), (d1, d1)).into_owned();
    let s2 = s.view((d1, d1), (d2, d2)).into_owned();
    let ld1 = log_det_spd(&s1, "first block")?;
    let ld2 = log_det_spd(&s2, "second block")?;
    let ld = log_det_spd(&s, "joint")?;
    Ok((n as f64 * (ld1 + ld2 - ld)).max(0.0))
}

/// Wilks' test with its asymptotic `χ²_{d1 d2}` p-value.
pub fn wilks(x1: &Points, x2: &Points) -> Result<TestResult> {
    let t = wilks_statistic(x1, x2)?;
    TestResult::asymptotic(TestKind::Wilks, t, x1.dim() * x2.dim())
}
