//! Calibrates the car controller gains committed in configs/car.toml.
//!
//! Sweeps (k1, k2) over a grid, keeps pairs whose nominal run (every
//! sensor reading at 5.0) stops short of the obstacle with a margin in
//! (0, 0.1], and estimates how much of the sensor box violates the spec
//! under uniform sampling. Near-critical margins with a violation rate
//! of a few percent make a usable falsification benchmark: random
//! search rarely stumbles on a counterexample, a guided search can
//! still reach one.
//!
//! Run with: cargo run --example calibrate_car_gains

use atest_core::domain::Domain;
use atest_core::envs::{simulate_car, CarParams, CAR_DIM};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SAMPLES: usize = 2000;

fn worst_margin(w: &[f64], params: &CarParams) -> f64 {
    let trajectory = simulate_car(w, params).expect("in-range input");
    trajectory
        .channel("x")
        .expect("x channel")
        .iter()
        .fold(f64::INFINITY, |m, &x| m.min(5.0 - x))
}

fn main() {
    let domain = Domain::from_intervals(&[(4.5, 5.5); CAR_DIM]).expect("valid box");
    println!("{:>7} {:>7} {:>9} {:>10}", "k1", "k2", "nominal", "violating");
    for k2_step in 0..7 {
        let k2 = -1.5 - 0.25 * k2_step as f64;
        for k1_step in 0..56 {
            let k1 = -0.4 - 0.02 * k1_step as f64;
            let params = CarParams { k1, k2 };
            let nominal = worst_margin(&vec![5.0; CAR_DIM], &params);
            if !(nominal > 0.0 && nominal <= 0.1) {
                continue;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let violating = domain
                .sample_uniform_n(&mut rng, SAMPLES)
                .iter()
                .filter(|w| worst_margin(w, &params) <= 0.0)
                .count();
            println!(
                "{:>7.2} {:>7.2} {:>9.4} {:>9.2}%",
                k1,
                k2,
                nominal,
                100.0 * violating as f64 / SAMPLES as f64
            );
        }
    }
    println!();
    println!(
        "committed: k1 = -0.64, k2 = -2.00 (nominal {:.4})",
        worst_margin(&vec![5.0; CAR_DIM], &CarParams { k1: -0.64, k2: -2.0 })
    );
}
