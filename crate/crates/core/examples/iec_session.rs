//! Drive an interactive-evolution session through the service API:
//! propose, select, mix, mutate, inject, then stream a few frames.
//!
//! cargo run --release --example iec_session

use swarm_chemistry::io::RunConfig;
use swarm_chemistry::service::{decode_frame, Command, IecConfig, Response, SessionRegistry, SessionSpec};
use swarm_chemistry::{parse_recipe, WorldConfig};

fn main() {
    let registry = SessionRegistry::new();
    let world = WorldConfig { seed: 8, ..Default::default() };
    let config = RunConfig::single(world, parse_recipe("100 * (50, 4, 8, 0.4, 0.6, 12, 0.1, 0.7)").unwrap());
    let session = registry
        .create(SessionSpec { config, iec: Some(IecConfig::default()), start_running: false })
        .unwrap();

    let Response::Candidates { candidates, .. } = session.request(Command::IecPropose { thumbnails: true }).unwrap()
    else {
        unreachable!()
    };
    for c in &candidates {
        println!("candidate {} ({} thumbnail frames)\n{}", c.id, c.thumbnail.len(), c.recipe.trim_end());
    }
    let picked = vec![candidates[0].id, candidates[4].id];
    session.request(Command::IecSelect { ids: picked }).unwrap();
    let Response::Candidate { candidate } = session.request(Command::IecMix { a: candidates[0].id, b: candidates[4].id }).unwrap()
    else {
        unreachable!()
    };
    session.request(Command::IecMutate { id: candidate.id }).unwrap();
    session.request(Command::IecInject { id: candidate.id, center: vec![400.0, 400.0], radius: 80.0 }).unwrap();

    let frames = session.stream_frames(10, 16).unwrap();
    session.request(Command::Step { n: 50 }).unwrap();
    for e in session.events().unwrap() {
        println!("event {} at step {}: {}", e.seq, e.step, e.op);
    }
    registry.destroy(session.id).unwrap();
    for f in frames.iter() {
        let d = decode_frame(&f, 2, [800.0, 800.0, 0.0]).unwrap();
        println!("frame step {} with {} particles ({} bytes)", d.step, d.positions.len(), f.len());
    }
}
