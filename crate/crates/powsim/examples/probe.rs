// Scratch probe for calibrating experiment defaults. Not part of the
// test suite.

use powsim::experiments::{attack_eval, AttackEvalConfig};
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let cfg = AttackEvalConfig {
        protocols: vec!["bitcoin".into(), "bk".into(), "tailstorm".into(), "tsconst".into()],
        policies: vec!["honest".into()],
        alphas: vec![0.25, 0.40],
        gammas: vec![0.5],
        runs: 10,
        stop_blocks: 2048,
        seed: 42,
        ..Default::default()
    };
    let out = attack_eval(&cfg).unwrap();
    for agg in out.aggregates(1, true) {
        println!(
            "{:10} {:9} a={:.2} g={:.2} mean={:.4} se={:.4} runs={}",
            agg.protocol, agg.policy, agg.alpha, agg.gamma, agg.mean, agg.stderr, agg.runs
        );
    }
    println!("honest probe took {:?}", t0.elapsed());

    let t1 = Instant::now();
    let cfg = AttackEvalConfig {
        protocols: vec!["bitcoin".into()],
        policies: vec!["sm1".into()],
        alphas: vec![0.45],
        gammas: vec![0.95],
        runs: 10,
        stop_blocks: 2048,
        seed: 42,
        ..Default::default()
    };
    let out = attack_eval(&cfg).unwrap();
    for agg in out.aggregates(1, true) {
        println!(
            "{:10} {:9} a={:.2} g={:.2} mean={:.4} se={:.4}",
            agg.protocol, agg.policy, agg.alpha, agg.gamma, agg.mean, agg.stderr
        );
    }
    println!("sm1 probe took {:?}", t1.elapsed());

    let t2 = Instant::now();
    let cfg = AttackEvalConfig {
        protocols: vec!["bitcoin".into()],
        policies: vec!["sm1".into()],
        alphas: vec![0.25, 0.30, 0.33, 0.36, 0.40],
        gammas: vec![0.05],
        runs: 10,
        stop_blocks: 2048,
        seed: 42,
        ..Default::default()
    };
    let out = attack_eval(&cfg).unwrap();
    for agg in out.aggregates(1, true) {
        println!(
            "{:10} {:9} a={:.2} g={:.2} mean={:.4} se={:.4} (diff {:+.4})",
            agg.protocol, agg.policy, agg.alpha, agg.gamma, agg.mean, agg.stderr,
            agg.mean - agg.alpha
        );
    }
    println!("sm1 sweep took {:?}", t2.elapsed());
}
