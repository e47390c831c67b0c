//! Tanh-sinh quadrature on the open unit interval.
//!
//! Nodes cluster doubly exponentially at both ends, which handles the
//! integrable endpoint singularities of score functions (the van der Waerden
//! score grows like `sqrt(-ln(1 - u))`). The integrand receives both `u` and
//! `1 - u`, each computed without cancellation, so it can evaluate tail
//! quantities from the small side.

use crate::error::{Error, Result};

/// Nodes closer than this to either end are dropped.
const EDGE: f64 = 1e-30;
const MAX_LEVEL: usize = 12;
/// Half-width of the abscissa range in `t`; beyond it every node is within
/// `EDGE` of an end.
const T_MAX: f64 = 4.2;

/// `∫₀¹ f(u, 1 − u) du`, refined by halving the step until two successive
/// levels agree to `tol` (relative to `max(1, |I|)`).
pub fn integrate_unit<F>(f: F, tol: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    let pi = std::f64::consts::PI;
    // contribution of the node at t, zero if it falls off the edge
    let node = |t: f64| -> f64 {
        let s = pi * t.sinh();
        let u = 1.0 / (1.0 + (-s).exp());
        let v = 1.0 / (1.0 + s.exp());
        if u < EDGE || v < EDGE {
            return 0.0;
        }
        let w = pi * t.cosh() * u * v;
        f(u, v) * w
    };
    let mut h = 0.5;
    let mut sum = node(0.0);
    let mut k = 1;
    while k as f64 * h <= T_MAX {
        let t = k as f64 * h;
        sum += node(t) + node(-t);
        k += 1;
    }
    let mut estimate = h * sum;
    for _ in 1..MAX_LEVEL {
        h *= 0.5;
        // new nodes are the odd multiples of the halved step
        let mut k = 1;
        while k as f64 * h <= T_MAX {
            let t = k as f64 * h;
            sum += node(t) + node(-t);
            k += 2;
        }
        let next = h * sum;
        if !next.is_finite() {
            return Err(Error::Convergence(
                "quadrature produced a non-finite value".into(),
            ));
        }
        let converged = (next - estimate).abs() <= tol * next.abs().max(1.0);
        estimate = next;
        if converged && h <= 1.0 / 16.0 {
            return Ok(estimate);
        }
    }
    Err(Error::Convergence(format!(
        "quadrature did not reach tolerance {tol} after {MAX_LEVEL} levels"
    )))
}
