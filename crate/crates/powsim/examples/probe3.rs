// SM1 high-gamma calibration.

use powsim::experiments::{attack_eval, AttackEvalConfig};

fn main() {
    for seed in [1u64, 2, 3] {
        let cfg = AttackEvalConfig {
            protocols: vec!["bitcoin".into()],
            policies: vec!["sm1".into()],
            alphas: vec![0.45],
            gammas: vec![0.95],
            runs: 100,
            stop_blocks: 2048,
            seed,
            ..Default::default()
        };
        let out = attack_eval(&cfg).unwrap();
        let (mean, se, n) = out.group_stats("bitcoin", "sm1", 0.45, 0.95);
        println!("seed {seed}: mean={mean:.4} se={se:.4} runs={n}");
    }
    // low-alpha high-gamma: criterion 3 second half uses (0.05, 0.25)
    let cfg = AttackEvalConfig {
        protocols: vec!["bitcoin".into()],
        policies: vec!["sm1".into()],
        alphas: vec![0.25],
        gammas: vec![0.05, 0.95],
        runs: 50,
        stop_blocks: 2048,
        seed: 5,
        ..Default::default()
    };
    let out = attack_eval(&cfg).unwrap();
    for g in [0.05, 0.95] {
        let (mean, se, n) = out.group_stats("bitcoin", "sm1", 0.25, g);
        println!("alpha 0.25 gamma {g}: mean={mean:.4} se={se:.4} runs={n}");
    }
}
