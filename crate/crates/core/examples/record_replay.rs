//! Record a run in both log modes and verify each by replay.
//!
//! cargo run --release --example record_replay

use swarm_chemistry::io::{read_log, record_run, RecordMode, RunConfig};
use swarm_chemistry::{parse_recipe, CompetitionRule, MutationConfig, WorldConfig};

fn main() {
    let world = WorldConfig {
        seed: 5,
        competition: Some(CompetitionRule::Faster),
        mutation: MutationConfig::with_rate(0.05),
        ..Default::default()
    };
    let mut config = RunConfig::single(world, parse_recipe("200 * (60, 4, 8, 0.4, 0.6, 12, 0.1, 0.7)").unwrap());
    config.n_steps = 500;
    config.observers.hash_interval = 50;
    for mode in [RecordMode::Full, RecordMode::Header] {
        let (_, log) = record_run(&config, mode, Vec::new()).unwrap();
        let outcome = read_log(log.as_slice()).unwrap().replay().unwrap();
        println!(
            "{mode:?}: {} bytes, {} hashes verified, final step {}",
            log.len(),
            outcome.hashes.len(),
            outcome.world.step_count()
        );
    }
}
