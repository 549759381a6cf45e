//! Collision-driven recipe transmission under each competition rule, with
//! and without mutation. Prints the distinct-recipe census.
//!
//! cargo run --release --example evolve_majority

use swarm_chemistry::{parse_recipe, CompetitionRule, MutationConfig, World, WorldConfig};

fn census(rule: CompetitionRule, mutation: MutationConfig, steps: u64) -> Vec<usize> {
    let config = WorldConfig {
        seed: 12,
        extent: vec![300.0, 300.0],
        competition: Some(rule),
        mutation,
        ..Default::default()
    };
    let mut world = World::new(config).unwrap();
    world.spawn(&parse_recipe("50 * (60, 4, 8, 0.4, 0.6, 12, 0.1, 0.7)").unwrap(), [150.0, 150.0, 0.0], 100.0).unwrap();
    world.spawn(&parse_recipe("50 * (80, 3, 6, 0.3, 0.5, 20, 0.05, 0.5)").unwrap(), [150.0, 150.0, 0.0], 100.0).unwrap();
    let mut out = vec![world.distinct_recipes().len()];
    for _ in 0..steps / 250 {
        for _ in 0..250 {
            world.step();
        }
        out.push(world.distinct_recipes().len());
    }
    out
}

fn main() {
    for rule in CompetitionRule::ALL {
        println!("{:<12} no mutation  {:?}", rule.name(), census(rule, MutationConfig::none(), 2000));
        println!("{:<12} mutation 0.1 {:?}", rule.name(), census(rule, MutationConfig::with_rate(0.1), 2000));
    }
}
