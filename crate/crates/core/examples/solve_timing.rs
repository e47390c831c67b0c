use corank::{rng, transport, Grid, Points};
use rand_distr::{Distribution, StandardNormal};
use std::time::Instant;

fn main() {
    for &(n, d) in &[(432usize, 2usize), (864, 2), (432, 7), (1728, 2)] {
        let g = Grid::for_sample(n, d, 0).unwrap();
        let mut r = rng::stream(1, 0);
        let reps = 10;
        let t = Instant::now();
        for _ in 0..reps {
            let z = Points::new(
                d,
                (0..n * d).map(|_| StandardNormal.sample(&mut r)).collect(),
            )
            .unwrap();
            transport::center_outward(&z, &g).unwrap();
        }
        println!(
            "n={n} d={d}: {:.2} ms/solve",
            t.elapsed().as_secs_f64() * 1000.0 / reps as f64
        );
    }
}
