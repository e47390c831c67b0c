//! Browser bindings: grid construction, the empirical center-outward map of
//! a planar sample, and the independence tests on simulated data.
//!
//! Results cross the boundary as JSON strings so the page needs no extra
//! glue beyond `JSON.parse`.

use corank::efficiency;
use corank::konijn::{local_delta, Case, KonijnConfig};
use corank::pipeline::{run_tests, TestSetup};
use corank::scores::Normalization;
use corank::stats::{Method, TestKind};
use corank::transport::center_outward;
use corank::{Grid, Points};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn js_error(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn parse_case(case: &str) -> Result<Case, JsValue> {
    case.parse::<Case>().map_err(js_error)
}

fn rows(p: &Points) -> Vec<&[f64]> {
    p.rows().collect()
}

/// Grid points for `n` observations in the plane, as `[[x, y], ...]`.
#[wasm_bindgen]
pub fn grid_points(n: usize, seed: u64) -> Result<String, JsValue> {
    let grid = Grid::for_sample(n, 2, seed).map_err(js_error)?;
    Ok(json!({
        "n_radii": grid.spec.n_radii,
        "n_directions": grid.spec.n_directions,
        "n_ties": grid.spec.n_ties,
        "points": rows(&grid.points),
    })
    .to_string())
}

/// Draws a planar sample from the first block of `case` and pairs it with
/// the grid by optimal transport.
#[wasm_bindgen]
pub fn transport_demo(n: usize, case: &str, seed: u64) -> Result<String, JsValue> {
    let model = KonijnConfig::case(parse_case(case)?, 2, 0.0);
    let (sample, _) = model.generate(n, seed).map_err(js_error)?;
    let grid = Grid::for_sample(n, 2, seed).map_err(js_error)?;
    let rs = center_outward(&sample, &grid).map_err(js_error)?;
    Ok(json!({
        "sample": rows(&sample),
        "grid": rows(&grid.points),
        "images": rows(&rs.images),
        "ranks": rs.ranks,
        "total_cost": rs.total_cost,
    })
    .to_string())
}

/// Simulates a Konijn sample with `δ = τ/√n` in dimension 2 + 2 and runs
/// all five tests; the rank tests use `b` Monte Carlo pairings when `b > 0`
/// and asymptotic p-values otherwise.
#[wasm_bindgen]
pub fn run_demo_tests(
    n: usize,
    case: &str,
    tau: f64,
    seed: u64,
    b: usize,
) -> Result<String, JsValue> {
    let model = KonijnConfig::case(parse_case(case)?, 2, local_delta(tau, n));
    let (x1, x2) = model.generate(n, seed).map_err(js_error)?;
    let setup = TestSetup::new(n, 2, 2, seed, Normalization::Grid).map_err(js_error)?;
    let method = if b > 0 {
        Method::Permutation { b, seed }
    } else {
        Method::Asymptotic
    };
    let results = run_tests(&x1, &x2, &TestKind::ALL, &setup, method, None).map_err(js_error)?;
    Ok(json!({
        "x1": rows(&x1),
        "x2": rows(&x2),
        "results": results,
    })
    .to_string())
}

/// Hodges–Lehmann type lower bound on the Spearman efficiency.
#[wasm_bindgen]
pub fn omega(d1: usize, d2: usize) -> Result<f64, JsValue> {
    efficiency::omega(d1, d2).map_err(js_error)
}
