//! Contract shared by every IK solver: iteration budget, convergence trace
//! and result packaging.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{JointVector, KinematicModel, Position3};

/// Iteration and accuracy budget for one solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub max_iterations: usize,
    /// A solve is converged once its fitness drops below this (mm).
    pub tolerance: f64,
    /// Optional wall-clock cap in seconds.
    #[serde(default)]
    pub wall_clock_limit: Option<f64>,
}

impl Budget {
    pub fn new(max_iterations: usize, tolerance: f64) -> Result<Self> {
        let budget = Budget {
            max_iterations,
            tolerance,
            wall_clock_limit: None,
        };
        budget.validate()?;
        Ok(budget)
    }

    /// Only the tolerance binds; per-solver caps decide the iteration count.
    pub fn with_tolerance(tolerance: f64) -> Result<Self> {
        Self::new(usize::MAX, tolerance)
    }

    pub fn with_wall_clock(mut self, seconds: f64) -> Self {
        self.wall_clock_limit = Some(seconds);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::config("budget max_iterations must be at least 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::config("budget tolerance must be positive"));
        }
        if let Some(limit) = self.wall_clock_limit {
            if !(limit > 0.0) {
                return Err(Error::config("wall-clock limit must be positive"));
            }
        }
        Ok(())
    }

    /// The tighter of this budget's cap and a solver's own cap.
    pub fn cap(&self, solver_cap: usize) -> usize {
        self.max_iterations.min(solver_cap)
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_iterations: usize::MAX,
            tolerance: 1e-6,
            wall_clock_limit: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub iteration: usize,
    pub best_fitness: f64,
    pub elapsed: f64,
}

/// Running-minimum fitness history of a solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConvergenceTrace {
    samples: Vec<TraceSample>,
}

impl ConvergenceTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn samples(&self) -> &[TraceSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&TraceSample> {
        self.samples.last()
    }

    pub fn best(&self) -> Option<f64> {
        self.last().map(|s| s.best_fitness)
    }

    /// Appends `(iteration, min(candidate, best so far), elapsed)`.
    pub fn record(&mut self, iteration: usize, candidate_fitness: f64, elapsed: f64) -> Result<()> {
        let best = match self.samples.last() {
            Some(last) if iteration <= last.iteration => {
                return Err(Error::NonMonotonicTrace {
                    last: last.iteration,
                    next: iteration,
                })
            }
            Some(last) => candidate_fitness.min(last.best_fitness),
            None => candidate_fitness,
        };
        self.samples.push(TraceSample {
            iteration,
            best_fitness: best,
            elapsed,
        });
        Ok(())
    }

    /// Step-function value at `iteration`: the last sample at or before it,
    /// or the first sample when `iteration` precedes the trace.
    fn value_at(&self, iteration: usize) -> &TraceSample {
        let idx = self.samples.partition_point(|s| s.iteration <= iteration);
        &self.samples[idx.saturating_sub(1)]
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["iteration", "fitness_mm", "elapsed_s"])?;
        for s in &self.samples {
            w.write_record([
                s.iteration.to_string(),
                s.best_fitness.to_string(),
                s.elapsed.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<trace csv>", e))?;
        Ok(())
    }
}

/// Pointwise mean of several traces over the union of their iteration
/// indices; each trace holds its last value past its end.
pub fn average_traces(traces: &[ConvergenceTrace]) -> Result<ConvergenceTrace> {
    let traces: Vec<&ConvergenceTrace> = traces.iter().filter(|t| !t.is_empty()).collect();
    if traces.is_empty() {
        return Err(Error::Empty("trace list"));
    }
    let mut iterations: Vec<usize> = traces
        .iter()
        .flat_map(|t| t.samples.iter().map(|s| s.iteration))
        .collect();
    iterations.sort_unstable();
    iterations.dedup();

    let n = traces.len() as f64;
    let samples = iterations
        .into_iter()
        .map(|iteration| {
            let (fit, time) = traces.iter().fold((0.0, 0.0), |(f, t), trace| {
                let s = trace.value_at(iteration);
                (f + s.best_fitness, t + s.elapsed)
            });
            TraceSample {
                iteration,
                best_fitness: fit / n,
                elapsed: time / n,
            }
        })
        .collect();
    Ok(ConvergenceTrace { samples })
}

/// Outcome of one solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub joints: JointVector,
    pub final_fitness: f64,
    pub iterations_used: usize,
    pub elapsed: f64,
    pub converged: bool,
    pub trace: ConvergenceTrace,
    /// Trace iteration at which a multi-stage solver switched stages.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage_boundary: Option<usize>,
}

impl SolveResult {
    /// Equality ignoring wall-clock fields.
    pub fn same_outcome(&self, other: &SolveResult) -> bool {
        self.joints == other.joints
            && self.final_fitness.to_bits() == other.final_fitness.to_bits()
            && self.iterations_used == other.iterations_used
            && self.converged == other.converged
            && self.stage_boundary == other.stage_boundary
            && self.trace.len() == other.trace.len()
            && self
                .trace
                .samples()
                .iter()
                .zip(other.trace.samples())
                .all(|(a, b)| {
                    a.iteration == b.iteration && a.best_fitness.to_bits() == b.best_fitness.to_bits()
                })
    }
}

/// The ten benchmarked algorithms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SolverId {
    #[serde(rename = "DTNR")]
    Dtnr,
    #[serde(rename = "NR")]
    Nr,
    #[serde(rename = "NM")]
    Nm,
    #[serde(rename = "SA")]
    Sa,
    #[serde(rename = "PSO")]
    Pso,
    #[serde(rename = "QPSO")]
    Qpso,
    #[serde(rename = "CCD")]
    Ccd,
    #[serde(rename = "AFSA")]
    Afsa,
    #[serde(rename = "GA")]
    Ga,
    #[serde(rename = "DE")]
    De,
}

impl SolverId {
    /// Report row order.
    pub const ALL: [SolverId; 10] = [
        SolverId::Dtnr,
        SolverId::Nr,
        SolverId::Nm,
        SolverId::Sa,
        SolverId::Pso,
        SolverId::Qpso,
        SolverId::Ccd,
        SolverId::Afsa,
        SolverId::Ga,
        SolverId::De,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverId::Dtnr => "DTNR",
            SolverId::Nr => "NR",
            SolverId::Nm => "NM",
            SolverId::Sa => "SA",
            SolverId::Pso => "PSO",
            SolverId::Qpso => "QPSO",
            SolverId::Ccd => "CCD",
            SolverId::Afsa => "AFSA",
            SolverId::Ga => "GA",
            SolverId::De => "DE",
        }
    }
}

impl fmt::Display for SolverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SolverId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config(format!("unknown algorithm `{s}`")))
    }
}

/// Best-so-far bookkeeping shared by the solver loops.
pub(crate) struct Progress<'a> {
    model: &'a KinematicModel,
    target: Position3,
    budget: Budget,
    cap: usize,
    start: Instant,
    trace: ConvergenceTrace,
    best: JointVector,
    best_fitness: f64,
}

impl<'a> Progress<'a> {
    /// Starts the clock and records iteration 0 for `initial`.
    pub fn new(
        model: &'a KinematicModel,
        target: Position3,
        budget: &Budget,
        solver_cap: usize,
        initial: JointVector,
        initial_fitness: f64,
    ) -> Self {
        Self::started_at(
            Instant::now(),
            model,
            target,
            budget,
            solver_cap,
            initial,
            initial_fitness,
        )
    }

    pub fn started_at(
        start: Instant,
        model: &'a KinematicModel,
        target: Position3,
        budget: &Budget,
        solver_cap: usize,
        initial: JointVector,
        initial_fitness: f64,
    ) -> Self {
        let mut progress = Progress {
            model,
            target,
            budget: *budget,
            cap: budget.cap(solver_cap),
            start,
            trace: ConvergenceTrace::new(),
            best: initial,
            best_fitness: initial_fitness,
        };
        progress.checkpoint(0);
        progress
    }

    pub fn model(&self) -> &'a KinematicModel {
        self.model
    }

    pub fn target(&self) -> Position3 {
        self.target
    }

    pub fn fitness(&self, q: &JointVector) -> f64 {
        self.model.fitness(q, &self.target)
    }

    pub fn best(&self) -> &JointVector {
        &self.best
    }

    pub fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    /// Offers a candidate; returns true if it became the best.
    pub fn offer(&mut self, q: &JointVector, fitness: f64) -> bool {
        if fitness < self.best_fitness {
            self.best = *q;
            self.best_fitness = fitness;
            true
        } else {
            false
        }
    }

    pub fn checkpoint(&mut self, iteration: usize) {
        let elapsed = self.elapsed();
        // iterations come from the solver loops and always increase
        let _ = self.trace.record(iteration, self.best_fitness, elapsed);
    }

    pub fn converged(&self) -> bool {
        self.best_fitness < self.budget.tolerance
    }

    /// True once converged, out of iterations or out of time.
    pub fn done(&self, iterations_completed: usize) -> bool {
        self.converged()
            || iterations_completed >= self.cap
            || self
                .budget
                .wall_clock_limit
                .is_some_and(|limit| self.elapsed() >= limit)
    }

    pub fn finish(self, iterations_used: usize) -> SolveResult {
        let final_fitness = self.model.fitness(&self.best, &self.target);
        SolveResult {
            joints: self.best,
            final_fitness,
            iterations_used,
            elapsed: self.elapsed(),
            converged: final_fitness < self.budget.tolerance,
            trace: self.trace,
            stage_boundary: None,
        }
    }
}
