// Anatomy of one bk MinorDelay run.

use powsim::attacks::policy::policy_by_name;
use powsim::experiments::attack_sim_config;
use powsim::metrics::{accumulate_rewards, winning_chain};
use powsim::sim::run_with_policy;

fn main() {
    let cfg = attack_sim_config("bk", 8, 1.0, 32, 1.0, 0.30, 0.05, 8192, 2101);
    let policy = policy_by_name("minordelay").unwrap();
    let res = run_with_policy(&cfg, policy.as_ref()).unwrap();
    let proto = cfg.protocol_instance().unwrap();
    let tip = winning_chain(proto.as_ref(), &res.store);
    let ledger = accumulate_rewards(proto.as_ref(), &res.store, tip);
    let view = res.store.global();

    let mut pow_total = 0u64;
    let mut pow_attacker = 0u64;
    for i in 0..res.store.block_count() as u32 {
        let b = res.store.block(powsim::BlockId(i));
        if b.pow {
            pow_total += 1;
            if b.miner == 0 {
                pow_attacker += 1;
            }
        }
    }
    println!(
        "blocks={} pows={} (attacker {:.3}) height={} elapsed={:.0}",
        res.store.block_count(),
        pow_total,
        pow_attacker as f64 / pow_total as f64,
        res.store.block(tip).fields.height,
        res.elapsed,
    );
    println!(
        "normalized attacker={:.4} total={:.4} withheld_final={}",
        ledger.per_miner[0] / ledger.progress as f64,
        ledger.total() / ledger.progress as f64,
        res.withheld_final
    );
    // per-height attacker share along the winning chain
    let mut cur = tip;
    let mut heights = vec![];
    loop {
        let prev = match view.last_summary_before(cur) {
            Ok(p) => p,
            Err(_) => break,
        };
        let votes = view.subblocks_between(cur, prev).unwrap();
        let own = votes.iter().filter(|&&x| res.store.block(x).miner == 0).count();
        let summary_miner = res.store.block(cur).miner;
        heights.push((own, votes.len(), summary_miner));
        cur = prev;
    }
    heights.reverse();
    let n = heights.len();
    for (lo, hi) in [(0, n / 3), (n / 3, 2 * n / 3), (2 * n / 3, n)] {
        let own: usize = heights[lo..hi].iter().map(|h| h.0).sum();
        let tot: usize = heights[lo..hi].iter().map(|h| h.1).sum();
        let atk_summaries = heights[lo..hi].iter().filter(|h| h.2 == 0).count();
        println!(
            "heights {lo}..{hi}: attacker votes {own}/{tot} = {:.3}, attacker summaries {}/{}",
            own as f64 / tot as f64,
            atk_summaries,
            hi - lo
        );
    }
    // how much simulated time per height tercile? use reified_at of summaries
    println!("tip reified at {:.0}", res.store.block(tip).reified_at);
}
