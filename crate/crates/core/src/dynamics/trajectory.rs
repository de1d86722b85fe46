use serde::Serialize;

use crate::model::SimplexPoint;

/// Marks the sample at which a shock was applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventMarker {
    pub time: f64,
    /// Index of the first post-shock sample. The pre-shock sample sits at
    /// `index - 1` with the same timestamp.
    pub index: usize,
    /// 1-based shock number.
    pub shock: usize,
}

/// A maximal inter-event interval with a single parameter set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment<P> {
    pub t_start: f64,
    pub t_end: f64,
    /// Sample index range, end exclusive.
    pub start: usize,
    pub end: usize,
    pub params: P,
}

/// Step statistics accumulated over one or more integrations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    /// Accepted steps whose state had to be clamped back onto the simplex.
    pub clamped: usize,
}

impl IntegratorStats {
    pub fn merge(&mut self, other: &IntegratorStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.rhs_evals += other.rhs_evals;
        self.clamped += other.clamped;
    }
}

/// Sampled solution. Times are non-decreasing; a timestamp repeats only at a
/// shock, where both the pre- and post-jump states are kept.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory<S, P> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub events: Vec<EventMarker>,
    pub segments: Vec<Segment<P>>,
    pub stats: IntegratorStats,
}

impl<S: SimplexPoint, P> Trajectory<S, P> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &S {
        self.states.last().expect("trajectory has at least one sample")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one sample")
    }

    /// `(time, state)` pairs.
    pub fn samples(&self) -> impl Iterator<Item = (f64, &S)> + '_ {
        self.times.iter().copied().zip(self.states.iter())
    }

    /// Samples of a single segment.
    pub fn segment_samples(&self, k: usize) -> (&[f64], &[S]) {
        let seg = &self.segments[k];
        (&self.times[seg.start..seg.end], &self.states[seg.start..seg.end])
    }

    /// Index of the last sample with `time <= t`, if any.
    pub fn index_at_or_before(&self, t: f64) -> Option<usize> {
        let n = self.times.partition_point(|&x| x <= t);
        n.checked_sub(1)
    }
}

/// First time a trajectory enters an `eps` ball and stays there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Convergence {
    At(f64),
    NotConverged,
}

impl Convergence {
    pub fn time(&self) -> Option<f64> {
        match self {
            Convergence::At(t) => Some(*t),
            Convergence::NotConverged => None,
        }
    }
}

/// Earliest sample time from which every remaining sample lies within `eps`
/// of `target` in the max norm.
pub fn detect_convergence<S: SimplexPoint, P>(traj: &Trajectory<S, P>, target: &S, eps: f64) -> Convergence {
    let outside = traj.states.iter().rposition(|s| s.distance_inf(target) > eps);
    match outside {
        None if traj.is_empty() => Convergence::NotConverged,
        None => Convergence::At(traj.times[0]),
        Some(i) if i + 1 < traj.len() => Convergence::At(traj.times[i + 1]),
        Some(_) => Convergence::NotConverged,
    }
}
