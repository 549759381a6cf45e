//! Track clusters through a run and print the harvested objects as recipes.
//!
//! cargo run --release --example harvest_objects

use swarm_chemistry::analytics::{harvest_to_text, HarvestConfig, HarvestTracker};
use swarm_chemistry::engine::run;
use swarm_chemistry::{parse_recipe, SwarmClass, World, WorldConfig};

const RECIPE: &str = "
90 * (55, 5, 9, 0.6, 0.4, 18, 0.05, 0.6)
60 * (35, 3, 7, 0.9, 0.1, 40, 0.1, 0.4)
";

fn main() {
    let config = WorldConfig { seed: 21, class: SwarmClass::Redifferentiable, p_differentiate: 0.002, ..Default::default() };
    let mut world = World::new(config).unwrap();
    let center = world.space().center();
    world.spawn(&parse_recipe(RECIPE).unwrap(), center, 250.0).unwrap();
    let mut tracker = HarvestTracker::new(HarvestConfig { min_object_size: 8, min_lifetime: 200, ..Default::default() });
    run(&mut world, 1500, &mut [&mut tracker]).unwrap();
    let objects = tracker.harvested();
    let splits = tracker.history().iter().filter(|o| o.parent.is_some()).count();
    println!("# {} objects harvested, {} identities born from splits", objects.len(), splits);
    print!("{}", harvest_to_text("example", &objects));
}
