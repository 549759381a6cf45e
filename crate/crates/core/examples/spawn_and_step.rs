//! Spawn a two-type recipe, step it, and print a few summary numbers.
//!
//! cargo run --release --example spawn_and_step

use swarm_chemistry::engine::state_hash;
use swarm_chemistry::geometry;
use swarm_chemistry::{parse_recipe, World, WorldConfig};

const RECIPE: &str = "
# fast loose swarm around a slow dense core
120 * (60, 4, 8, 0.4, 0.6, 12, 0.1, 0.7)
60 * (40, 2, 4, 0.9, 0.2, 30, 0.02, 0.5)
";

fn main() {
    let mut world = World::new(WorldConfig { seed: 7, ..Default::default() }).unwrap();
    let center = world.space().center();
    world.spawn(&parse_recipe(RECIPE).unwrap(), center, 150.0).unwrap();

    for _ in 0..5 {
        for _ in 0..200 {
            world.step();
        }
        let ps = world.particles();
        let speed = ps.iter().map(|p| geometry::norm(p.velocity)).sum::<f64>() / ps.len() as f64;
        println!(
            "step {:5}  mean speed {speed:6.3}  types {:?}  hash {:016x}",
            world.step_count(),
            world.type_histogram(),
            state_hash(&world)
        );
    }
}
