// Tailstorm honest-policy bias hunt at alpha = 0.40.

use powsim::attacks::policy::policy_by_name;
use powsim::experiments::attack_sim_config;
use powsim::metrics::{accumulate_rewards, winning_chain};
use powsim::sim::run_with_policy;

fn main() {
    let mut tot_att_inc = 0u64;
    let mut tot_att_pow = 0u64;
    let mut tot_def_inc = 0u64;
    let mut tot_def_pow = 0u64;
    let mut tot_reward = 0.0;
    let mut tot_progress = 0u64;
    let mut tot_att_reward = 0.0;
    for seed in 0..20u64 {
        let cfg = attack_sim_config("tailstorm", 8, 1.0, 32, 1.0, 0.40, 0.5, 2048, 7000 + seed);
        let policy = policy_by_name("honest").unwrap();
        let res = run_with_policy(&cfg, policy.as_ref()).unwrap();
        let proto = cfg.protocol_instance().unwrap();
        let tip = winning_chain(proto.as_ref(), &res.store);
        let ledger = accumulate_rewards(proto.as_ref(), &res.store, tip);
        let view = res.store.global();
        let mut anc = view.ancestors(tip).unwrap();
        anc.insert(tip);
        for i in 0..res.store.block_count() as u32 {
            let b = res.store.block(powsim::BlockId(i));
            if !b.pow {
                continue;
            }
            let included = anc.contains(&powsim::BlockId(i));
            if b.miner == 0 {
                tot_att_pow += 1;
                tot_att_inc += included as u64;
            } else {
                tot_def_pow += 1;
                tot_def_inc += included as u64;
            }
        }
        tot_reward += ledger.total();
        tot_att_reward += ledger.per_miner[0];
        tot_progress += ledger.progress;
    }
    println!(
        "attacker inclusion {:.4} ({} of {})",
        tot_att_inc as f64 / tot_att_pow as f64,
        tot_att_inc,
        tot_att_pow
    );
    println!(
        "defender inclusion {:.4} ({} of {})",
        tot_def_inc as f64 / tot_def_pow as f64,
        tot_def_inc,
        tot_def_pow
    );
    println!("attacker pow share {:.4}", tot_att_pow as f64 / (tot_att_pow + tot_def_pow) as f64);
    println!("total normalized {:.4}", tot_reward / tot_progress as f64);
    println!("attacker normalized {:.4}", tot_att_reward / tot_progress as f64);
    println!(
        "attacker reward per included {:.4}, defenders {:.4}",
        tot_att_reward / tot_att_inc as f64,
        (tot_reward - tot_att_reward) / tot_def_inc as f64
    );
}
