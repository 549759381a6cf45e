//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! cargo test --release --test acceptance

mod common;

use std::time::Instant;

use common::*;
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;
use swarm_chemistry::analytics::diversity::occupied_cells;
use swarm_chemistry::analytics::*;
use swarm_chemistry::engine::{run, save_snapshot, FnObserver, NeighborIndex, NeighborSearch};
use swarm_chemistry::evolution::{compete, compete_rng, CollisionEvent};
use swarm_chemistry::geometry::{Boundary, Space};
use swarm_chemistry::recipe::{RecipeError, RecipeSampler};
use swarm_chemistry::{
    parse_recipe, serialize_recipe, CompetitionRule, MutationConfig, Recipe, SwarmClass, World, WorldConfig,
};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_world(seed: u64, class: SwarmClass, rule: Option<CompetitionRule>, particles: u32, dim: usize) -> World {
    let cfg = WorldConfig {
        seed,
        class,
        dimensionality: dim,
        extent: vec![800.0; dim],
        competition: rule,
        mutation: MutationConfig::with_rate(0.1),
        ..Default::default()
    };
    let mut w = World::new(cfg).unwrap();
    let mut rng = Pcg64Mcg::seed_from_u64(seed);
    let mut recipe = RecipeSampler::default().recipe(particles, &mut rng);
    if class == SwarmClass::Homogeneous {
        recipe = Recipe::single(particles, recipe.entries()[0].params);
    }
    let c = w.space().center();
    w.spawn(&recipe, c, 300.0).unwrap();
    w
}

fn determinism() -> Outcome {
    let mut slowest: f64 = 0.0;
    let mut combos = 0;
    for (k, class) in SwarmClass::ALL.into_iter().enumerate() {
        for (j, rule) in CompetitionRule::ALL.into_iter().enumerate() {
            let seed = 100 + (k * 4 + j) as u64;
            let dim = if (k + j) % 2 == 0 { 2 } else { 3 };
            let t = Instant::now();
            let snaps: Vec<Vec<u8>> = (0..2)
                .map(|_| {
                    let mut w = random_world(seed, class, Some(rule), 1000, dim);
                    run(&mut w, 1000, &mut []).unwrap();
                    save_snapshot(&w)
                })
                .collect();
            slowest = slowest.max(t.elapsed().as_secs_f64());
            if snaps[0] != snaps[1] {
                return Err(format!("{class:?}/{rule:?} snapshots differ"));
            }
            combos += 1;
        }
    }
    check(slowest < 60.0, format!("{combos} class/rule pairs byte-identical, slowest pair {slowest:.1}s"))
}

fn conservation() -> Outcome {
    let mut w = random_world(7, SwarmClass::Heterogeneous, Some(CompetitionRule::Majority), 300, 2);
    let n = w.len();
    let mut bad = None;
    let mut mutated = 0;
    let mut obs = FnObserver(|w: &World, r: &swarm_chemistry::StepReport| {
        if w.len() != n && bad.is_none() {
            bad = Some(w.step_count());
        }
        mutated += r.transmissions.iter().filter(|t| t.mutated).count();
        Ok(())
    });
    run(&mut w, 10_000, &mut [&mut obs]).unwrap();
    let transmissions = w.counters().transmissions;
    match bad {
        Some(step) => Err(format!("count changed at step {step}")),
        None => check(
            transmissions > 0 && mutated > 0,
            format!("{n} particles at every step, {transmissions} transmissions, {mutated} mutated"),
        ),
    }
}

fn index_oracle() -> Outcome {
    let mut rng = Pcg64Mcg::seed_from_u64(2024);
    let mut queries = 0;
    for case in 0..200 {
        let dim = 2 + case % 2;
        let boundary = if case / 2 % 2 == 0 { Boundary::Toroidal } else { Boundary::Open };
        let extent = [rng.random_range(20.0..600.0), rng.random_range(20.0..600.0), rng.random_range(20.0..600.0)];
        let space = Space::new(dim, extent, boundary);
        let n = rng.random_range(1..400);
        let positions: Vec<_> = (0..n).map(|_| space.random_position(&mut rng)).collect();
        let max_r = rng.random_range(0.5..150.0);
        let index = NeighborIndex::build(&positions, &space, max_r);
        for i in 0..n {
            let r = max_r * rng.random::<f64>();
            if index.neighbors_of(i, r) != brute_neighbors(&positions, &space, i, r) {
                return Err(format!("instance {case} particle {i} r {r}"));
            }
            queries += 1;
        }
    }
    Ok(format!("200 instances, {queries} queries, exact set equality"))
}

fn compete_oracle_suite() -> Outcome {
    let mut checked = 0;
    for config in 0..100u64 {
        let w = random_compete_world(5000 + config);
        let mut rng = Pcg64Mcg::seed_from_u64(config);
        let a = rng.random_range(0..w.len() - 1);
        let b = rng.random_range(a + 1..w.len());
        let event = CollisionEvent { a, b, step: w.step_count() };
        for rule in CompetitionRule::ALL {
            let mut crng = compete_rng(w.config().seed, w.step_count(), a, b);
            if compete(&event, rule, &w, &mut crng) != compete_oracle(&w, a, b, rule) {
                return Err(format!("config {config} rule {rule:?}"));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} winners equal"))
}

fn estimator_oracle() -> Outcome {
    let mut rng = Pcg64Mcg::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let n = 5 + case;
        let d = 1 + case % 3;
        let vs = random_vectors(&mut rng, n, d);
        let norm = naive_normalize(&vs);
        for res in [2, 4, 10] {
            if occupied_cells(&norm, res) != naive_coverage(&norm, res) {
                return Err(format!("coverage n={n} d={d} res={res}"));
            }
        }
        worst = worst.max((diversity_mean_pairwise(&vs).unwrap() - naive_mean_pairwise(&norm)).abs());
        worst = worst.max((diversity_entropy(&vs).unwrap() - naive_entropy(&norm, 1e-6)).abs());
    }
    check(worst <= 1e-9, format!("100 sets, coverage exact, max deviation {worst:.1e}"))
}

fn four_class_ordering() -> Outcome {
    let spec = EnsembleSpec { runs: 200, particles: 300, steps: 2000, ..Default::default() };
    let t = Instant::now();
    let groups: Vec<(SwarmClass, Vec<BehaviorVector>)> =
        SwarmClass::ALL.iter().map(|&c| (c, run_ensemble(&spec, c, 2026).unwrap())).collect();
    let cfg = BootstrapConfig { replicates: 20, subsample: 100, resolution: 4 };
    let dists = compare_groups(&groups, &cfg, 11).unwrap();
    let medians: Vec<[f64; 3]> = dists.iter().map(|(_, d)| d.medians()).collect();
    let [homog, het, rediff, info] = [medians[0], medians[1], medians[2], medians[3]];
    let names = ["coverage", "mean_pairwise", "entropy"];
    let mut ordered = Vec::new();
    let mut detail = String::new();
    for m in 0..3 {
        let ok = rediff[m] > het[m] && info[m] > het[m] && homog[m] < het[m];
        if ok {
            ordered.push(names[m]);
        }
        detail.push_str(&format!(
            "{}: homog {:.4} het {:.4} rediff {:.4} info {:.4}; ",
            names[m], homog[m], het[m], rediff[m], info[m]
        ));
    }
    detail.push_str(&format!("ordered on {:?} in {:.0}s", ordered, t.elapsed().as_secs_f64()));
    check(ordered.len() >= 2, detail)
}

fn homogenization() -> Outcome {
    let a = parse_recipe("50 * (60, 4, 8, 0.4, 0.6, 12, 0.1, 0.7)").unwrap();
    let b = parse_recipe("50 * (80, 3, 6, 0.3, 0.5, 20, 0.05, 0.5)").unwrap();
    let mut fixed = 0;
    let mut latest = 0;
    for seed in 0..50 {
        let cfg = WorldConfig {
            seed,
            extent: vec![300.0, 300.0],
            competition: Some(CompetitionRule::Majority),
            mutation: MutationConfig::none(),
            ..Default::default()
        };
        let mut w = World::new(cfg).unwrap();
        w.spawn(&a, [150.0, 150.0, 0.0], 100.0).unwrap();
        w.spawn(&b, [150.0, 150.0, 0.0], 100.0).unwrap();
        let mut last = w.distinct_recipes().len();
        for _ in 0..20_000 {
            w.step();
            let now = w.distinct_recipes().len();
            if now > last {
                return Err(format!("seed {seed}: distinct recipes rose to {now} at step {}", w.step_count()));
            }
            last = now;
            if now == 1 {
                fixed += 1;
                latest = latest.max(w.step_count());
                break;
            }
        }
    }
    check(fixed >= 45, format!("{fixed}/50 runs reached one recipe, slowest at step {latest}"))
}

fn fission() -> Outcome {
    let types = one_type_registry();
    let mut tracker = HarvestTracker::new(HarvestConfig::default());
    let mut split_at = None;
    for f in fission_trajectory(50) {
        let objs = tracker.observe_frame(&f, &types);
        if objs.len() == 2 && split_at.is_none() {
            split_at = Some(f.step);
        }
    }
    let history = tracker.history();
    let roots: Vec<_> = history.iter().filter(|o| o.parent.is_none()).collect();
    let children: Vec<_> = history.iter().filter(|o| roots.len() == 1 && o.parent == Some(roots[0].id)).collect();
    check(
        history.len() == 3 && roots.len() == 1 && children.len() == 2 && children[0].id != children[1].id,
        format!(
            "{} identities, {} parent, {} children, split observed at step {:?}",
            history.len(),
            roots.len(),
            children.len(),
            split_at
        ),
    )
}

fn steps_per_second(search: NeighborSearch, steps: u32) -> f64 {
    let recipe = parse_recipe(
        "2500 * (40, 4, 8, 0.3, 0.5, 15, 0.05, 0.6)\n2500 * (30, 6, 10, 0.6, 0.2, 25, 0.1, 0.4)\n2500 * (60, 3, 6, 0.2, 0.8, 10, 0.02, 0.8)\n2500 * (20, 8, 12, 0.8, 0.1, 40, 0.2, 0.3)",
    )
    .unwrap();
    let cfg = WorldConfig { seed: 1, extent: vec![4000.0, 4000.0], neighbor_search: search, ..Default::default() };
    let mut w = World::new(cfg).unwrap();
    w.spawn(&recipe, [2000.0, 2000.0, 0.0], 2000.0).unwrap();
    w.step();
    let t = Instant::now();
    for _ in 0..steps {
        w.step();
    }
    steps as f64 / t.elapsed().as_secs_f64()
}

fn throughput() -> Outcome {
    let grid = steps_per_second(NeighborSearch::Grid, 100);
    let brute = steps_per_second(NeighborSearch::BruteForce, 3);
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    check(
        grid >= 20.0 && grid / brute >= 10.0,
        format!("10000 particles: grid {grid:.1} steps/s, brute force {brute:.2} steps/s ({:.0}x), {cores} core(s)", grid / brute),
    )
}

fn grammar() -> Outcome {
    let mut rng = Pcg64Mcg::seed_from_u64(31);
    let sampler = RecipeSampler { max_types: 12, ..Default::default() };
    for k in 0..1000 {
        let n = rng.random_range(1..5000);
        let r = sampler.recipe(n, &mut rng);
        let text = serialize_recipe(&r);
        match parse_recipe(&text) {
            Ok(back) if back == r && serialize_recipe(&back) == text => {}
            other => return Err(format!("recipe {k} did not round-trip: {other:?}")),
        }
    }
    let mut kinds = std::collections::BTreeSet::new();
    for (text, want) in MALFORMED {
        let got = match parse_recipe(text) {
            Ok(_) => return Err(format!("{text:?} parsed")),
            Err(RecipeError::Empty) => "empty".to_string(),
            Err(RecipeError::Syntax { line, column, .. }) => format!("syntax {line}:{column}"),
            Err(RecipeError::Range { violations, .. }) => format!("range {}", violations[0].field),
        };
        if got != *want {
            return Err(format!("{text:?}: expected {want}, got {got}"));
        }
        kinds.insert(got.split(' ').next().unwrap().to_string());
    }
    check(kinds.len() == 3, format!("1000 round-trips, {} malformed inputs, {} error kinds", MALFORMED.len(), kinds.len()))
}

fn main() {
    let criteria: &[(&str, fn() -> Outcome)] = &[
        ("determinism", determinism),
        ("conservation", conservation),
        ("oracle: neighbor index", index_oracle),
        ("oracle: compete", compete_oracle_suite),
        ("oracle: diversity estimators", estimator_oracle),
        ("four-class diversity ordering", four_class_ordering),
        ("evolutionary homogenization", homogenization),
        ("fission detection", fission),
        ("throughput", throughput),
        ("recipe grammar", grammar),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|x| name.contains(x.as_str())) {
            continue;
        }
        let t = Instant::now();
        let outcome = f();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS  {name}: {d} [{secs:.1}s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL  {name}: {d} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
