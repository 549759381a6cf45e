//! Small ensemble per class, compared on one pooled scale with bootstrap
//! medians of coverage, mean pairwise distance and entropy.
//!
//! cargo run --release --example diversity_bootstrap -- [runs] [steps]

use swarm_chemistry::analytics::{compare_groups, run_ensemble, BootstrapConfig, EnsembleSpec};
use swarm_chemistry::SwarmClass;

fn main() {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let runs = args.first().copied().unwrap_or(60);
    let steps = args.get(1).copied().unwrap_or(1000) as u64;
    let spec = EnsembleSpec { runs, steps, ..Default::default() };
    let groups: Vec<_> = SwarmClass::ALL
        .iter()
        .map(|&c| {
            eprintln!("{} runs of {}", runs, c.name());
            (c.name(), run_ensemble(&spec, c, 1).unwrap())
        })
        .collect();
    let cfg = BootstrapConfig { replicates: 20, subsample: runs / 2, ..Default::default() };
    println!("{:<14} {:>10} {:>14} {:>10}", "class", "coverage", "mean_pairwise", "entropy");
    for (label, dist) in compare_groups(&groups, &cfg, 5).unwrap() {
        let [c, m, e] = dist.medians();
        println!("{label:<14} {c:>10.1} {m:>14.4} {e:>10.3}");
    }
}
