//! One random recipe under each of the four system classes, measured with
//! the default feature registry.
//!
//! cargo run --release --example four_classes -- [steps]

use swarm_chemistry::analytics::{ensemble_recipe, run_and_measure, FeatureRegistry, WindowConfig};
use swarm_chemistry::{SwarmClass, World, WorldConfig};

fn main() {
    let steps: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let registry = FeatureRegistry::default();
    let shown = ["cluster_count", "largest_cluster_fraction", "distinct_types", "polarization", "redifferentiation_rate"];
    println!("{:<18}{}", "class", shown.map(|s| format!("{s:>26}")).join(""));
    for class in SwarmClass::ALL {
        let config = WorldConfig { seed: 3, class, ..Default::default() };
        let mut world = World::new(config.clone()).unwrap();
        let recipe = ensemble_recipe(3, 0, 300, &config.ranges, class);
        let center = world.space().center();
        world.spawn(&recipe, center, 150.0).unwrap();
        let v = run_and_measure(&mut world, steps, &WindowConfig::default(), &registry).unwrap();
        let row: String = shown.iter().map(|n| format!("{:>26.4}", v.get(n).unwrap())).collect();
        println!("{:<18}{row}", class.name());
    }
}
