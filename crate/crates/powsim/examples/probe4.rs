// MinorDelay sweeps for the discounting-effect and break-even criteria.

use powsim::experiments::{attack_eval, AttackEvalConfig};

fn main() {
    let cfg = AttackEvalConfig {
        protocols: vec!["tailstorm".into(), "tsconst".into(), "bk".into()],
        policies: vec!["minordelay".into()],
        alphas: vec![0.25, 0.30, 0.35, 0.40, 0.45],
        gammas: vec![0.05],
        runs: 30,
        stop_blocks: 2048,
        seed: 11,
        ..Default::default()
    };
    let out = attack_eval(&cfg).unwrap();
    for agg in out.aggregates(1, true) {
        println!(
            "{:10} {:10} a={:.2} g={:.2} mean={:.4} se={:.4} (diff {:+.4})",
            agg.protocol, agg.policy, agg.alpha, agg.gamma, agg.mean, agg.stderr,
            agg.mean - agg.alpha
        );
    }
    // discounting effect at gamma grid
    let cfg = AttackEvalConfig {
        protocols: vec!["tailstorm".into(), "tsconst".into()],
        policies: vec!["minordelay".into()],
        alphas: vec![0.30, 0.45],
        gammas: vec![0.5, 0.95],
        runs: 30,
        stop_blocks: 2048,
        seed: 12,
        ..Default::default()
    };
    let out = attack_eval(&cfg).unwrap();
    for agg in out.aggregates(1, true) {
        println!(
            "{:10} {:10} a={:.2} g={:.2} mean={:.4} se={:.4}",
            agg.protocol, agg.policy, agg.alpha, agg.gamma, agg.mean, agg.stderr
        );
    }
}
