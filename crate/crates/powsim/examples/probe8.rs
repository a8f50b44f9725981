// Acceptance-style break-even bisections.

use powsim::experiments::{break_even, BreakEvenConfig};
use std::time::Instant;

fn main() {
    for (protocol, policy, gamma) in [
        ("bitcoin", "sm1", 0.05),
        ("tailstorm", "minordelay", 0.05),
        ("bk", "minordelay", 0.05),
        ("bitcoin", "sm1", 0.95),
    ] {
        let t = Instant::now();
        let cfg = BreakEvenConfig {
            protocol: protocol.into(),
            policy: policy.into(),
            gamma,
            seed: 31,
            ..Default::default()
        };
        let res = break_even(&cfg).unwrap();
        println!(
            "{protocol}/{policy} gamma={gamma}: {} ({} probes, {:?})",
            res.outcome_label(),
            res.probes.len(),
            t.elapsed()
        );
        for p in &res.probes {
            println!(
                "   probe alpha={:.4} mean={:.4} se={:.4} runs={}",
                p.alpha, p.mean, p.stderr, p.runs
            );
        }
    }
}
