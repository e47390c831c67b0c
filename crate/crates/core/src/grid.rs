//! Discretisation of the spherical uniform distribution on the unit ball.
//!
//! A grid of `n = n_radii * n_directions + n_ties` points is the product of
//! `n_radii` equispaced radii `r / (n_radii + 1)` and a regular array of
//! `n_directions` unit vectors, plus `n_ties` points at radius
//! `1 / (2 (n_radii + 1))` standing in for the copies of the origin.

use std::io::{BufRead, Write};

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::points::Points;
use crate::rng;

const SPHERE_PURPOSE: u64 = 0x5350_4845_5245;
const TIE_PURPOSE: u64 = 0x5449_4542_524B;

/// Factorisation `n = n_radii * n_directions + n_ties`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridSpec {
    pub n: usize,
    pub n_radii: usize,
    pub n_directions: usize,
    pub n_ties: usize,
}

impl GridSpec {
    /// Among all `(n_radii, n_directions)` with an even number of directions
    /// and `0 <= n_ties < min(n_radii, n_directions)`, picks the one with the
    /// fewest ties, then the most balanced, then `n_directions >= n_radii`.
    pub fn factorize(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::SampleTooSmall { n, min: 4 });
        }
        let mut best: Option<(usize, usize, bool, GridSpec)> = None;
        for n_radii in 1..=n / 2 {
            let mut n_directions = 2;
            while n_radii * n_directions <= n {
                let n_ties = n - n_radii * n_directions;
                if n_ties < n_radii.min(n_directions) {
                    let key = (
                        n_ties,
                        n_radii.abs_diff(n_directions),
                        n_directions < n_radii,
                    );
                    let better = match &best {
                        None => true,
                        Some((t, b, p, _)) => key < (*t, *b, *p),
                    };
                    if better {
                        best = Some((
                            key.0,
                            key.1,
                            key.2,
                            GridSpec {
                                n,
                                n_radii,
                                n_directions,
                                n_ties,
                            },
                        ));
                    }
                }
                n_directions += 2;
            }
        }
        best.map(|b| b.3)
            .ok_or_else(|| Error::Domain(format!("no admissible factorisation of {n}")))
    }

    /// As [`factorize`](Self::factorize), except that `d = 1` forces two
    /// directions (the 0-sphere is `{-1, +1}`).
    pub fn for_dim(n: usize, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        if d > 1 {
            return Self::factorize(n);
        }
        if n < 4 {
            return Err(Error::SampleTooSmall { n, min: 4 });
        }
        Ok(GridSpec {
            n,
            n_radii: n / 2,
            n_directions: 2,
            n_ties: n % 2,
        })
    }

    fn validate(&self) -> Result<()> {
        let ok = self.n_directions >= 2
            && self.n_directions.is_multiple_of(2)
            && self.n_radii >= 1
            && self.n_radii * self.n_directions + self.n_ties == self.n
            && self.n_ties < self.n_radii.min(self.n_directions);
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid grid spec {self:?}")))
        }
    }

    /// Radius of the `r`-th ring, `r = 1..=n_radii`.
    pub fn ring_radius(&self, r: usize) -> f64 {
        r as f64 / (self.n_radii + 1) as f64
    }

    pub fn tie_radius(&self) -> f64 {
        1.0 / (2 * (self.n_radii + 1)) as f64
    }
}

/// Unit vectors on the sphere `S_{d-1}`, antipodally paired: direction
/// `k + n/2` is the exact negation of direction `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereArray {
    pub directions: Points,
}

impl SphereArray {
    pub fn dim(&self) -> usize {
        self.directions.dim()
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

/// Regular array of `count` directions in dimension `d`.
///
/// `d = 1` gives `{+1, -1}`; `d = 2` gives equispaced angles starting at 0;
/// `d >= 3` spreads `count / 2` seeded directions by projective repulsion and
/// appends their antipodes.
pub fn sphere_array(d: usize, count: usize, seed: u64) -> Result<SphereArray> {
    if d == 0 {
        return Err(Error::InvalidSphere("dimension must be positive".into()));
    }
    if count < 2 || !count.is_multiple_of(2) {
        return Err(Error::InvalidSphere(format!(
            "direction count must be even and at least 2, got {count}"
        )));
    }
    if d == 1 && count != 2 {
        return Err(Error::InvalidSphere(format!(
            "the 0-sphere has two points, requested {count}"
        )));
    }
    let half = count / 2;
    let mut first = match d {
        1 => vec![1.0],
        2 => (0..half)
            .flat_map(|k| {
                let (s, c) = turn_sin_cos(k, count);
                [c, s]
            })
            .collect(),
        _ => repelled_directions(d, half, seed),
    };
    let negated: Vec<f64> = first.iter().map(|x| -x).collect();
    first.extend(negated);
    Ok(SphereArray {
        directions: Points::new(d, first)?,
    })
}

/// `(sin, cos)` of the angle `2π k / count`, exact at multiples of a quarter turn.
fn turn_sin_cos(k: usize, count: usize) -> (f64, f64) {
    // reduce to the first quadrant so that quarter turns produce exact 0 and 1
    let k = k % count;
    let quadrant = (4 * k) / count;
    let rem = 4 * k - quadrant * count; // in [0, count)
    let theta = std::f64::consts::FRAC_PI_2 * rem as f64 / count as f64;
    let (s, c) = if rem == 0 {
        (0.0, 1.0)
    } else {
        theta.sin_cos()
    };
    match quadrant {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}

const REPULSION_STEPS: usize = 200;

fn repelled_directions(d: usize, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng::stream(rng::derive_seed(seed, SPHERE_PURPOSE), d as u64);
    let mut dirs: Vec<f64> = (0..count * d)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    dirs.chunks_exact_mut(d).for_each(normalize);
    if count < 2 {
        return dirs;
    }
    // typical spacing of 2*count points on S_{d-1}
    let spacing = (2.0 * count as f64).powf(-1.0 / (d as f64 - 1.0));
    let mut force = vec![0.0; count * d];
    for step in 0..REPULSION_STEPS {
        force.iter_mut().for_each(|f| *f = 0.0);
        for i in 0..count {
            for j in 0..count {
                if i == j {
                    continue;
                }
                for sign in [1.0, -1.0] {
                    // repel x_i from x_j and from -x_j
                    let mut dist2 = 0.0;
                    for c in 0..d {
                        let diff = dirs[i * d + c] - sign * dirs[j * d + c];
                        dist2 += diff * diff;
                    }
                    let w = 1.0 / (dist2 * dist2.sqrt()).max(1e-300);
                    for c in 0..d {
                        force[i * d + c] += w * (dirs[i * d + c] - sign * dirs[j * d + c]);
                    }
                }
            }
        }
        let mut max_tangent = 0.0f64;
        for i in 0..count {
            let x = &dirs[i * d..(i + 1) * d];
            let f = &mut force[i * d..(i + 1) * d];
            let radial: f64 = x.iter().zip(f.iter()).map(|(a, b)| a * b).sum();
            for c in 0..d {
                f[c] -= radial * x[c];
            }
            max_tangent = max_tangent.max(f.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
        if max_tangent == 0.0 {
            break;
        }
        let frac = 1.0 - step as f64 / REPULSION_STEPS as f64;
        let scale = 0.1 * spacing * (0.05 + 0.95 * frac) / max_tangent;
        for i in 0..count {
            for c in 0..d {
                dirs[i * d + c] += scale * force[i * d + c];
            }
            normalize(&mut dirs[i * d..(i + 1) * d]);
        }
    }
    dirs
}

/// The grid `𝔊_n` together with the radius and direction of every point.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub spec: GridSpec,
    /// Ordered grid points; regular points ring by ring, then tie-break points.
    pub points: Points,
    /// `‖points[i]‖`, exactly one of the admissible radii.
    pub radii: Vec<f64>,
    /// `points[i] / ‖points[i]‖`, taken verbatim from the sphere array.
    pub directions: Points,
    /// Seed of the tie-break draw; `None` when there are no ties.
    pub seed: Option<u64>,
}

impl Grid {
    /// Builds the grid for `spec` in dimension `d`.
    pub fn build(spec: GridSpec, d: usize, seed: u64) -> Result<Self> {
        spec.validate()?;
        let sphere = sphere_array(d, spec.n_directions, seed)?;
        Self::from_sphere(spec, &sphere, seed)
    }

    /// Grid for sample size `n` in dimension `d` with the default factorisation.
    pub fn for_sample(n: usize, d: usize, seed: u64) -> Result<Self> {
        Self::build(GridSpec::for_dim(n, d)?, d, seed)
    }

    pub fn from_sphere(spec: GridSpec, sphere: &SphereArray, seed: u64) -> Result<Self> {
        spec.validate()?;
        if sphere.len() != spec.n_directions {
            return Err(Error::SizeMismatch {
                expected: spec.n_directions,
                found: sphere.len(),
            });
        }
        let d = sphere.dim();
        let mut points = Points::zeros(spec.n, d);
        let mut directions = Points::zeros(spec.n, d);
        let mut radii = Vec::with_capacity(spec.n);
        let mut idx = 0;
        let mut push = |radius: f64, dir: &[f64], radii: &mut Vec<f64>| {
            for (p, s) in points.row_mut(idx).iter_mut().zip(dir) {
                *p = radius * s;
            }
            directions.row_mut(idx).copy_from_slice(dir);
            radii.push(radius);
            idx += 1;
        };
        for r in 1..=spec.n_radii {
            let radius = spec.ring_radius(r);
            for s in sphere.directions.rows() {
                push(radius, s, &mut radii);
            }
        }
        let tie_seed = if spec.n_ties > 0 {
            let mut rng = rng::stream(rng::derive_seed(seed, TIE_PURPOSE), 0);
            let mut picks: Vec<usize> = (0..spec.n_directions).collect();
            // partial Fisher–Yates: the first n_ties entries are a draw without replacement
            for i in 0..spec.n_ties {
                let j = rand::Rng::random_range(&mut rng, i..picks.len());
                picks.swap(i, j);
            }
            for &k in &picks[..spec.n_ties] {
                push(spec.tie_radius(), sphere.directions.row(k), &mut radii);
            }
            Some(seed)
        } else {
            None
        };
        Ok(Grid {
            spec,
            points,
            radii,
            directions,
            seed: tie_seed,
        })
    }

    /// Reconstructs a grid from bare points (e.g. read back from CSV).
    pub fn from_points(spec: GridSpec, points: Points) -> Result<Self> {
        spec.validate()?;
        if points.len() != spec.n {
            return Err(Error::SizeMismatch {
                expected: spec.n,
                found: points.len(),
            });
        }
        let mut radii = Vec::with_capacity(spec.n);
        let directions = points.map_rows(points.dim(), |p, s| {
            let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            radii.push(norm);
            for (si, pi) in s.iter_mut().zip(p) {
                *si = pi / norm;
            }
        });
        if let Some(i) = radii.iter().position(|&r| !(r > 0.0 && r < 1.0)) {
            return Err(Error::Domain(format!(
                "grid point {i} has norm {} outside (0, 1)",
                radii[i]
            )));
        }
        Ok(Grid {
            spec,
            points,
            radii,
            directions,
            seed: None,
        })
    }

    pub fn len(&self) -> usize {
        self.spec.n
    }

    pub fn is_empty(&self) -> bool {
        self.spec.n == 0
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.points.write_csv(out)
    }

    pub fn read_csv<R: BufRead>(spec: GridSpec, input: R) -> Result<Self> {
        Self::from_points(spec, Points::read_csv(input)?)
    }
}
