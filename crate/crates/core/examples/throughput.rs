//! Steps per second at 10,000 particles, grid index against brute force.
//!
//! cargo run --release --example throughput -- [particles] [steps]

use std::time::Instant;

use swarm_chemistry::engine::NeighborSearch;
use swarm_chemistry::{parse_recipe, World, WorldConfig};

const RECIPE: &str = "
2500 * (40, 4, 8, 0.3, 0.5, 15, 0.05, 0.6)
2500 * (30, 6, 10, 0.6, 0.2, 25, 0.1, 0.4)
2500 * (60, 3, 6, 0.2, 0.8, 10, 0.02, 0.8)
2500 * (20, 8, 12, 0.8, 0.1, 40, 0.2, 0.3)
";

fn steps_per_second(search: NeighborSearch, n: u64, steps: u32) -> f64 {
    let config = WorldConfig { seed: 1, extent: vec![4000.0, 4000.0], neighbor_search: search, ..Default::default() };
    let mut world = World::new(config).unwrap();
    let recipe = parse_recipe(RECIPE).unwrap().capped(n);
    world.spawn(&recipe, [2000.0, 2000.0, 0.0], 2000.0).unwrap();
    world.step();
    let t = Instant::now();
    for _ in 0..steps {
        world.step();
    }
    steps as f64 / t.elapsed().as_secs_f64()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(10_000);
    let steps: u32 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(50);
    let grid = steps_per_second(NeighborSearch::Grid, n, steps);
    println!("grid:        {grid:8.1} steps/s");
    let brute = steps_per_second(NeighborSearch::BruteForce, n, (steps / 10).max(2));
    println!("brute force: {brute:8.1} steps/s ({:.1}x slower)", grid / brute);
}
