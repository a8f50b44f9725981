// Fairness-direction probe: weak-miner relative reward across intervals.

use powsim::experiments::{fairness, FairnessConfig};
use std::time::Instant;

fn main() {
    let t = Instant::now();
    let cfg = FairnessConfig {
        protocol: "bitcoin".into(),
        grid: vec![(600.0, 1), (300.0, 1), (150.0, 1), (75.0, 1)],
        delay: 6.0,
        observations: 600,
        seed: 41,
    };
    let out = fairness(&cfg).unwrap();
    for ((interval, k), mean, se, n) in out.means() {
        println!("bitcoin T={interval} k={k}: weak {mean:.2}% +- {se:.2} ({n} obs)");
    }
    println!("bitcoin fairness took {:?}", t.elapsed());

    let t = Instant::now();
    let cfg = FairnessConfig {
        protocol: "tailstorm".into(),
        grid: vec![(600.0, 40), (150.0, 10)],
        delay: 6.0,
        observations: 220,
        seed: 41,
    };
    let out = fairness(&cfg).unwrap();
    for ((interval, k), mean, se, n) in out.means() {
        println!("tailstorm T={interval} k={k}: weak {mean:.2}% +- {se:.2} ({n} obs)");
    }
    println!("tailstorm fairness took {:?}", t.elapsed());

    // zero-delay control: weak miner earns its fair share
    let cfg = FairnessConfig {
        protocol: "bitcoin".into(),
        grid: vec![(600.0, 1)],
        delay: 0.0,
        observations: 300,
        seed: 41,
    };
    let out = fairness(&cfg).unwrap();
    for ((interval, k), mean, se, n) in out.means() {
        println!("zero-delay bitcoin T={interval} k={k}: weak {mean:.2}% +- {se:.2} ({n} obs)");
    }
}
