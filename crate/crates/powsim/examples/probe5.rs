// Horizon sensitivity of MinorDelay profitability.

use powsim::experiments::{attack_eval, AttackEvalConfig};

fn main() {
    for blocks in [2048u64, 8192] {
        let cfg = AttackEvalConfig {
            protocols: vec!["tsconst".into(), "bk".into()],
            policies: vec!["minordelay".into()],
            alphas: vec![0.30],
            gammas: vec![0.05],
            runs: 30,
            stop_blocks: blocks,
            seed: 21,
            ..Default::default()
        };
        let out = attack_eval(&cfg).unwrap();
        for agg in out.aggregates(1, true) {
            println!(
                "blocks={:5} {:8} mean={:.4} se={:.4} (diff {:+.4})",
                blocks, agg.protocol, agg.mean, agg.stderr, agg.mean - agg.alpha
            );
        }
    }
}
