// Deep-dive on one tailstorm honest-policy run.

use powsim::attacks::policy::policy_by_name;
use powsim::experiments::attack_sim_config;
use powsim::metrics::{accumulate_rewards, orphan_stats, winning_chain};
use powsim::sim::run_with_policy;

fn main() {
    let cfg = attack_sim_config("tailstorm", 8, 1.0, 32, 1.0, 0.25, 0.5, 2048, 99);
    let policy = policy_by_name("honest").unwrap();
    let res = run_with_policy(&cfg, policy.as_ref()).unwrap();
    let proto = cfg.protocol_instance().unwrap();
    let tip = winning_chain(proto.as_ref(), &res.store);
    let ledger = accumulate_rewards(proto.as_ref(), &res.store, tip);
    let stats = orphan_stats(&res.store, tip);

    let total_blocks = res.store.block_count();
    let mut attacker_pow = 0u64;
    let mut defender_pow = 0u64;
    let mut summaries = 0u64;
    for i in 0..total_blocks as u32 {
        let b = res.store.block(powsim::BlockId(i));
        if b.pow {
            if b.miner == 0 {
                attacker_pow += 1;
            } else {
                defender_pow += 1;
            }
        } else {
            summaries += 1;
        }
    }
    // attacker pow blocks in winning ancestry
    let view = res.store.global();
    let mut anc = view.ancestors(tip).unwrap();
    anc.insert(tip);
    let atk_included = anc
        .iter()
        .filter(|&&b| res.store.block(b).pow && res.store.block(b).miner == 0)
        .count();
    let def_included = anc
        .iter()
        .filter(|&&b| res.store.block(b).pow && res.store.block(b).miner != 0)
        .count();

    let tip_blk = res.store.block(tip);
    println!("blocks={total_blocks} pows={} summaries={summaries}", res.pows);
    println!("attacker mined {attacker_pow} ({:.3} of pow), defenders {defender_pow}",
        attacker_pow as f64 / (attacker_pow + defender_pow) as f64);
    println!("winning tip height={} progress={}", tip_blk.fields.height, ledger.progress);
    println!("included: attacker {atk_included} defenders {def_included}");
    println!("included rate: attacker {:.3} defenders {:.3}",
        atk_included as f64 / attacker_pow as f64,
        def_included as f64 / defender_pow as f64);
    println!("orphans: {:?} rate={:.4}", stats, stats.rate().unwrap());
    println!("rewards: attacker {:.3} total {:.3}", ledger.per_miner[0], ledger.total());
    println!("normalized: attacker {:.4} total {:.4}",
        ledger.per_miner[0] / ledger.progress as f64,
        ledger.total() / ledger.progress as f64);
    println!("withheld at end: {}", res.withheld_final);
    println!("elapsed {:.1}s", res.elapsed);
}
