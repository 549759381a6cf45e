mod common;

use std::collections::HashSet;

use common::{compete_oracle, random_compete_world};
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;
use swarm_chemistry::engine::{run, save_snapshot};
use swarm_chemistry::evolution::{
    compete, compete_rng, detect_collisions, EnvironmentSchedule, Perturbation,
};
use swarm_chemistry::geometry::Boundary;
use swarm_chemistry::{parse_recipe, serialize_recipe, CompetitionRule, MutationConfig, SwarmClass, World, WorldConfig};

#[test]
fn compete_matches_definitions() {
    let mut pairs = 0;
    for seed in 0..60 {
        let w = random_compete_world(seed);
        let mut rng = Pcg64Mcg::seed_from_u64(seed + 1000);
        for _ in 0..5 {
            let a = rng.random_range(0..w.len() - 1);
            let b = rng.random_range(a + 1..w.len());
            let event = swarm_chemistry::evolution::CollisionEvent { a, b, step: w.step_count() };
            for rule in CompetitionRule::ALL {
                let mut crng = compete_rng(w.config().seed, w.step_count(), a, b);
                assert_eq!(compete(&event, rule, &w, &mut crng), compete_oracle(&w, a, b, rule), "{rule:?} {seed}");
                pairs += 1;
            }
        }
    }
    assert_eq!(pairs, 1200);
}

fn evolving(seed: u64, rule: CompetitionRule, mutation: MutationConfig) -> World {
    let cfg = WorldConfig {
        seed,
        extent: vec![300.0, 300.0],
        competition: Some(rule),
        mutation,
        ..Default::default()
    };
    let mut w = World::new(cfg).unwrap();
    w.spawn(&parse_recipe("60 * (40, 3, 6, 0.5, 0.5, 10, 0.1, 0.5)").unwrap(), [100.0, 150.0, 0.0], 60.0).unwrap();
    w.spawn(&parse_recipe("60 * (60, 5, 8, 0.3, 0.6, 20, 0.05, 0.7)").unwrap(), [200.0, 150.0, 0.0], 60.0).unwrap();
    w
}

#[test]
fn transmissions_are_exclusive_and_consistent() {
    for rule in CompetitionRule::ALL {
        let mut w = evolving(3, rule, MutationConfig::none());
        let mut total = 0;
        for _ in 0..300 {
            let before: Vec<_> = w.particles().iter().map(|p| p.recipe.clone()).collect();
            let report = w.step();
            let mut seen = HashSet::new();
            for t in &report.transmissions {
                assert!(seen.insert(t.pair.0) && seen.insert(t.pair.1), "particle in two transmissions");
                assert!(t.winner == t.pair.0 || t.winner == t.pair.1);
                assert!(!t.mutated);
                let loser = if t.winner == t.pair.0 { t.pair.1 } else { t.pair.0 };
                assert_eq!(*w.particles()[loser].recipe, *before[t.winner]);
                let lp = &w.particles()[loser];
                assert!(lp.recipe.entries().iter().any(|e| e.params == lp.active));
            }
            total += report.transmissions.len();
            assert_eq!(w.len(), 120);
        }
        assert!(total > 0, "{rule:?} never transmitted");
    }
}

#[test]
fn no_mutation_never_adds_recipes() {
    let mut w = evolving(5, CompetitionRule::Majority, MutationConfig::none());
    let mut last = w.distinct_recipes().len();
    assert_eq!(last, 2);
    for _ in 0..2000 {
        w.step();
        let now = w.distinct_recipes().len();
        assert!(now <= last);
        last = now;
    }
}

#[test]
fn mutation_creates_variants() {
    let mut w = evolving(5, CompetitionRule::Faster, MutationConfig::with_rate(0.5));
    run(&mut w, 300, &mut []).unwrap();
    assert!(w.distinct_recipes().len() > 2);
    assert_eq!(w.len(), 120);
}

#[test]
fn collisions_respect_radius() {
    let w = evolving(1, CompetitionRule::Majority, MutationConfig::none());
    let r2 = w.config().collision_radius.powi(2);
    let events = detect_collisions(&w);
    let ps = w.particles();
    let expected: usize = (0..ps.len())
        .map(|i| (i + 1..ps.len()).filter(|&j| w.space().distance_sq(ps[i].position, ps[j].position) < r2).count())
        .sum();
    assert_eq!(events.len(), expected);
    assert!(events.iter().all(|e| e.a < e.b));
}

#[test]
fn scheduled_perturbations() {
    let schedule = EnvironmentSchedule::parse(
        "[[perturbation]]\nkind = \"scatter\"\nperiod = 10\nfraction = 0.5\n\n[[perturbation]]\nkind = \"rescale_extent\"\nperiod = 25\nfactor = 2.0\n\n[[perturbation]]\nkind = \"swap_boundary\"\nperiod = 40\n",
    )
    .unwrap();
    let cfg = WorldConfig { seed: 2, extent: vec![200.0, 200.0], environment: schedule.perturbation, ..Default::default() };
    let mut w = World::new(cfg).unwrap();
    w.spawn(&parse_recipe("40 * (30, 2, 4, 0.5, 0.5, 10, 0.1, 0.5)").unwrap(), [100.0, 100.0, 0.0], 5.0).unwrap();
    let mut kinds = Vec::new();
    for _ in 0..50 {
        let r = w.step();
        for e in &r.environment {
            kinds.push((e.step, e.kind.clone(), e.moved));
        }
        assert_eq!(w.len(), 40);
        assert!(w.particles().iter().all(|p| w.space().contains(p.position)));
    }
    let steps: Vec<u64> = kinds.iter().map(|k| k.0).collect();
    assert_eq!(steps, vec![10, 20, 25, 30, 40, 40, 50, 50]);
    assert!(kinds.iter().filter(|k| k.1 == "scatter").all(|k| k.2 == 20));
    assert_eq!(w.space().extent[0], 800.0);
    assert_eq!(w.space().boundary, Boundary::Open);
    assert!(EnvironmentSchedule::parse("[[perturbation]]\nkind = \"scatter\"\nperiod = 0\nfraction = 2\n").is_err());
    let _ = Perturbation::SwapBoundary { period: 1 };
}

#[test]
fn classes_add_capabilities() {
    let recipe = parse_recipe("50 * (50, 4, 8, 0.4, 0.6, 12, 0.1, 0.7)\n50 * (50, 6, 9, 0.2, 0.3, 30, 0.05, 0.4)").unwrap();
    let other = parse_recipe("100 * (70, 2, 4, 0.9, 0.1, 5, 0.1, 0.9)").unwrap();
    let setup = |class| {
        let cfg = WorldConfig { seed: 4, class, extent: vec![300.0, 300.0], p_differentiate: 0.05, ..Default::default() };
        let mut w = World::new(cfg).unwrap();
        w.spawn(&recipe, [120.0, 150.0, 0.0], 50.0).unwrap();
        if class != SwarmClass::Homogeneous {
            w.spawn(&other, [180.0, 150.0, 0.0], 50.0).unwrap();
        }
        w
    };
    let homog = {
        let cfg = WorldConfig { seed: 4, class: SwarmClass::Homogeneous, ..Default::default() };
        let mut w = World::new(cfg).unwrap();
        assert!(w.spawn(&recipe, [0.0; 3], 1.0).is_err());
        w.spawn(&other, [200.0, 200.0, 0.0], 50.0).unwrap();
        run(&mut w, 100, &mut []).unwrap();
        w
    };
    assert_eq!(homog.type_histogram().iter().filter(|&&n| n > 0).count(), 1);

    let mut het = setup(SwarmClass::Heterogeneous);
    let h0 = het.type_histogram();
    run(&mut het, 200, &mut []).unwrap();
    assert_eq!(het.type_histogram(), h0);
    assert_eq!(het.counters().differentiations, 0);

    let mut rediff = setup(SwarmClass::Redifferentiable);
    run(&mut rediff, 200, &mut []).unwrap();
    assert!(rediff.counters().differentiations > 0);
    assert_eq!(rediff.distinct_recipes().len(), 2);

    let mut info = setup(SwarmClass::InfoSharing);
    let mut adopted = 0;
    for _ in 0..200 {
        adopted += info.step().adoptions;
    }
    assert!(info.counters().differentiations > 0);
    assert!(adopted > 0);
}

#[test]
fn sharing_disabled_equals_redifferentiation() {
    let recipe = parse_recipe("80 * (50, 4, 8, 0.4, 0.6, 12, 0.1, 0.7)\n40 * (60, 6, 9, 0.2, 0.3, 30, 0.05, 0.4)").unwrap();
    let go = |class, share| {
        let cfg = WorldConfig {
            seed: 10,
            class,
            info_share_radius: share,
            p_differentiate: 0.05,
            ..Default::default()
        };
        let mut w = World::new(cfg).unwrap();
        w.spawn(&recipe, [400.0, 400.0, 0.0], 100.0).unwrap();
        run(&mut w, 200, &mut []).unwrap();
        w.particles().iter().map(|p| (p.position, p.velocity, p.type_id)).collect::<Vec<_>>()
    };
    let a = go(SwarmClass::Redifferentiable, 50.0);
    let b = go(SwarmClass::InfoSharing, 0.0);
    assert!(a.iter().zip(&b).all(|(x, y)| x.0 == y.0 && x.1 == y.1 && x.2 == y.2));
}

#[test]
fn lineage_traces_to_initial_recipes() {
    let mut w = World::new(WorldConfig {
        seed: 8,
        extent: vec![300.0, 300.0],
        competition: Some(CompetitionRule::Majority),
        mutation: MutationConfig::with_rate(0.3),
        ..Default::default()
    })
    .unwrap();
    let a = parse_recipe("60 * (40, 3, 6, 0.5, 0.5, 10, 0.1, 0.5)").unwrap();
    let b = parse_recipe("60 * (60, 5, 8, 0.3, 0.6, 20, 0.05, 0.7)").unwrap();
    w.spawn(&a, [80.0, 150.0, 0.0], 50.0).unwrap();
    w.spawn(&b, [220.0, 150.0, 0.0], 50.0).unwrap();
    let key = |r: &swarm_chemistry::Recipe| serialize_recipe(r);
    let mut root = std::collections::HashMap::new();
    root.insert(key(&a), 0);
    root.insert(key(&b), 1);
    let mut mutated = 0;
    for _ in 0..2000 {
        let report = w.step();
        for t in &report.transmissions {
            let loser = if t.winner == t.pair.0 { t.pair.1 } else { t.pair.0 };
            let origin = root[&key(&w.particles()[t.winner].recipe)];
            root.entry(key(&w.particles()[loser].recipe)).or_insert(origin);
            mutated += t.mutated as usize;
        }
        for p in w.particles() {
            assert!(root.contains_key(&key(&p.recipe)), "step {}: recipe without ancestry", w.step_count());
        }
    }
    assert!(mutated > 0);
}

#[test]
fn majority_counts_own_neighborhood_only() {
    let ta = "1 * (50, 2, 4, 0.5, 0.5, 10, 0.1, 0.5)";
    let tb = "1 * (40, 2, 4, 0.5, 0.5, 10, 0.1, 0.5)";
    let mut w = World::new(WorldConfig { seed: 1, extent: vec![1000.0, 1000.0], ..Default::default() }).unwrap();
    let mut place = |recipe: &str, at: [f64; 3]| {
        let r = w.spawn(&parse_recipe(recipe).unwrap(), at, 0.0).unwrap();
        r.start
    };
    let a = place(ta, [500.0, 500.0, 0.0]);
    let b = place(tb, [505.0, 500.0, 0.0]);
    for k in 0..5 {
        place(ta, [480.0, 480.0 + 8.0 * k as f64, 0.0]);
    }
    for k in 0..2 {
        place(tb, [530.0, 500.0 + 8.0 * k as f64, 0.0]);
    }
    let far = place(tb, [100.0, 100.0, 0.0]);
    let event = swarm_chemistry::evolution::CollisionEvent { a, b, step: 0 };
    let decide = |w: &World| compete(&event, CompetitionRule::Majority, w, &mut compete_rng(1, 0, a, b));
    assert_eq!(decide(&w), a);
    for i in far..w.len() {
        w.particles_mut()[i].position = [900.0, 900.0, 0.0];
    }
    assert_eq!(decide(&w), a);
    assert_eq!(decide(&w), compete_oracle(&w, a, b, CompetitionRule::Majority));
}

#[test]
fn scatter_bookkeeping_and_divergence() {
    let schedule = EnvironmentSchedule::parse("[[perturbation]]\nkind = \"scatter\"\nperiod = 100\nfraction = 0.1\n").unwrap();
    let recipe = parse_recipe("73 * (40, 3, 6, 0.5, 0.5, 10, 0.1, 0.5)").unwrap();
    let build = |env: Vec<Perturbation>| {
        let mut w = World::new(WorldConfig { seed: 6, environment: env, ..Default::default() }).unwrap();
        w.spawn(&recipe, [400.0, 400.0, 0.0], 80.0).unwrap();
        w
    };
    let mut plain = build(Vec::new());
    let mut none = build(EnvironmentSchedule::parse("").unwrap().perturbation);
    let mut perturbed = build(schedule.perturbation);
    for _ in 0..99 {
        plain.step();
        none.step();
        assert!(perturbed.step().environment.is_empty());
    }
    assert_eq!(plain.particles(), perturbed.particles());
    for s in 100..=300u64 {
        plain.step();
        none.step();
        let r = perturbed.step();
        if s % 100 == 0 {
            assert_eq!(r.environment.len(), 1);
            assert_eq!(r.environment[0].moved, 7);
        } else {
            assert!(r.environment.is_empty());
        }
        if s == 100 {
            assert_ne!(plain.particles(), perturbed.particles());
        }
    }
    assert_eq!(save_snapshot(&plain), save_snapshot(&none));
}

fn particle_states(w: &World) -> Vec<([f64; 3], [f64; 3], u32)> {
    w.particles().iter().map(|p| (p.position, p.velocity, p.type_id)).collect()
}

#[test]
fn disabled_hooks_reproduce_lower_class() {
    let one = parse_recipe("80 * (50, 4, 8, 0.4, 0.6, 12, 0.1, 0.7)").unwrap();
    let two = parse_recipe("50 * (50, 4, 8, 0.4, 0.6, 12, 0.1, 0.7)\n30 * (60, 6, 9, 0.2, 0.3, 30, 0.05, 0.4)").unwrap();
    let go = |class, p_differentiate, recipe: &swarm_chemistry::Recipe| {
        let mut w = World::new(WorldConfig { seed: 13, class, p_differentiate, ..Default::default() }).unwrap();
        w.spawn(recipe, [400.0, 400.0, 0.0], 100.0).unwrap();
        run(&mut w, 300, &mut []).unwrap();
        particle_states(&w)
    };
    assert_eq!(go(SwarmClass::Homogeneous, 0.05, &one), go(SwarmClass::Heterogeneous, 0.05, &one));
    assert_eq!(go(SwarmClass::Heterogeneous, 0.05, &two), go(SwarmClass::Redifferentiable, 0.0, &two));
}

#[test]
fn redifferentiation_samples_count_weights() {
    let recipe = parse_recipe("50 * (50, 4, 8, 0.4, 0.6, 12, 0.1, 0.7)\n50 * (60, 6, 9, 0.2, 0.3, 30, 0.05, 0.4)").unwrap();
    let mut w = World::new(WorldConfig { seed: 2, class: SwarmClass::Redifferentiable, p_differentiate: 0.2, ..Default::default() }).unwrap();
    w.spawn(&recipe, [400.0, 400.0, 0.0], 200.0).unwrap();
    let first = w.particles()[0].type_id;
    let (mut hits, mut total) = (0usize, 0usize);
    for s in 0..3000 {
        w.step();
        if s >= 100 && s % 10 == 0 {
            hits += w.particles().iter().filter(|p| p.type_id == first).count();
            total += w.len();
        }
    }
    let f = hits as f64 / total as f64;
    assert!((f - 0.5).abs() <= 0.03, "{f}");
}

#[test]
fn sharing_keeps_initial_recipes_and_coheres() {
    let recipes = [
        parse_recipe("40 * (60, 4, 8, 0.6, 0.4, 12, 0.05, 0.7)\n40 * (50, 5, 9, 0.3, 0.6, 25, 0.1, 0.4)").unwrap(),
        parse_recipe("30 * (70, 3, 6, 0.8, 0.2, 15, 0.05, 0.6)\n50 * (40, 6, 10, 0.2, 0.3, 35, 0.1, 0.5)").unwrap(),
    ];
    let mut diff = 0.0;
    for seed in 0..6 {
        let mut largest = [0.0; 2];
        for (k, class) in [SwarmClass::Redifferentiable, SwarmClass::InfoSharing].into_iter().enumerate() {
            let mut w = World::new(WorldConfig { seed, class, ..Default::default() }).unwrap();
            w.spawn(&recipes[0], [300.0, 400.0, 0.0], 120.0).unwrap();
            w.spawn(&recipes[1], [500.0, 400.0, 0.0], 120.0).unwrap();
            let mut rec = swarm_chemistry::analytics::FrameRecorder::new(10, 0);
            run(&mut w, 500, &mut [&mut rec]).unwrap();
            for r in w.distinct_recipes() {
                assert!(recipes.contains(&r));
            }
            let mut sum = 0.0;
            for f in &rec.frames {
                let comps = swarm_chemistry::analytics::connected_components(&f.positions, &f.space, 30.0);
                sum += comps.iter().map(|c| c.len()).max().unwrap() as f64 / f.len() as f64;
            }
            largest[k] = sum / rec.frames.len() as f64;
        }
        diff += largest[1] - largest[0];
    }
    assert!(diff > 0.0, "mean largest-cluster fraction gain {:.4}", diff / 6.0);
}
