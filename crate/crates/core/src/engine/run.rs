//! Multi-step driver with observers.

use thiserror::Error;

use super::{StepReport, World};

pub type ObserverFailure = Box<dyn std::error::Error + Send + Sync>;

/// Receives the world after every step.
pub trait Observer {
    fn observe(&mut self, world: &World, report: &StepReport) -> Result<(), ObserverFailure>;
}

/// Observer built from a closure.
pub struct FnObserver<F>(pub F);

impl<F> Observer for FnObserver<F>
where
    F: FnMut(&World, &StepReport) -> Result<(), ObserverFailure>,
{
    fn observe(&mut self, world: &World, report: &StepReport) -> Result<(), ObserverFailure> {
        (self.0)(world, report)
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("observer failed after step {step}: {source}")]
    Observer {
        step: u64,
        #[source]
        source: ObserverFailure,
    },
}

/// Step `n_steps` times, handing each step to every observer.
///
/// An observer failure stops the run; the world stays at the last completed step.
pub fn run(world: &mut World, n_steps: u64, observers: &mut [&mut dyn Observer]) -> Result<(), RunError> {
    for _ in 0..n_steps {
        let report = world.step();
        for obs in observers.iter_mut() {
            obs.observe(world, &report)
                .map_err(|source| RunError::Observer { step: report.step, source })?;
        }
    }
    Ok(())
}
