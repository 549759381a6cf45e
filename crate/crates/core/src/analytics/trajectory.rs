//! Recorded frames of a run.

use crate::engine::{Counters, Observer, StepReport, World};
use crate::engine::ObserverFailure;
use crate::geometry::{Space, Vector};

/// Particle state after one step, plus the running event counters.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub step: u64,
    pub space: Space,
    pub positions: Vec<Vector>,
    pub velocities: Vec<Vector>,
    pub type_ids: Vec<u32>,
    pub counters: Counters,
}

impl Frame {
    pub fn capture(world: &World) -> Self {
        let ps = world.particles();
        Frame {
            step: world.step_count(),
            space: *world.space(),
            positions: ps.iter().map(|p| p.position).collect(),
            velocities: ps.iter().map(|p| p.velocity).collect(),
            type_ids: ps.iter().map(|p| p.type_id).collect(),
            counters: world.counters(),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Keeps frames whose step is a multiple of `interval` and at least `from_step`.
#[derive(Debug, Clone)]
pub struct FrameRecorder {
    pub interval: u64,
    pub from_step: u64,
    pub frames: Vec<Frame>,
}

impl FrameRecorder {
    pub fn new(interval: u64, from_step: u64) -> Self {
        FrameRecorder { interval: interval.max(1), from_step, frames: Vec::new() }
    }

    /// Recorder for the analysis window: the last `window` steps of an
    /// `n_steps` run, sampled every `interval` steps.
    pub fn window(n_steps: u64, window: u64, interval: u64) -> Self {
        FrameRecorder::new(interval, n_steps.saturating_sub(window))
    }
}

impl Observer for FrameRecorder {
    fn observe(&mut self, world: &World, _report: &StepReport) -> Result<(), ObserverFailure> {
        let s = world.step_count();
        if s >= self.from_step && s % self.interval == 0 {
            self.frames.push(Frame::capture(world));
        }
        Ok(())
    }
}
