//! Rule-based server policies, simulated against the replay semantics of
//! [`crate::model`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{
    distance, replay_schedule, Action, CostReport, IllegalSchedule, Instance, Schedule, Site,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PolicyId {
    /// Sits at site `j` of the current phase during its `j`-th step and
    /// advances one site per step.
    BasicTrajectory,
    /// Fills the buffer, then serves the nearest buffered site.
    GreedyNearest,
}

impl PolicyId {
    pub const ALL: [PolicyId; 2] = [PolicyId::BasicTrajectory, PolicyId::GreedyNearest];

    pub fn name(&self) -> &'static str {
        match self {
            PolicyId::BasicTrajectory => "basic-trajectory",
            PolicyId::GreedyNearest => "greedy-nearest",
        }
    }
}

impl fmt::Display for PolicyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("unknown policy {0:?}")]
pub struct UnknownPolicy(pub String);

impl FromStr for PolicyId {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolicyId::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| UnknownPolicy(s.to_string()))
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum PolicyError {
    /// The policy would have to buffer more than the capacity allows.
    #[error("capacity violation at step {step}: {pending} requests would be buffered")]
    CapacityViolation { step: u64, pending: usize },
    #[error("the basic trajectory needs an instance with construction metadata (ell)")]
    MissingConstruction,
    #[error("policy emitted an illegal schedule: {0}")]
    Replay(#[from] IllegalSchedule),
}

/// Bookkeeping shared by the policies: emits actions and tracks buffered
/// requests per site.
struct Recorder<'a> {
    instance: &'a Instance,
    capacity: usize,
    actions: Vec<Action>,
    buffered: BTreeMap<Site, Vec<usize>>,
    buffered_count: usize,
    server: Site,
    next: usize,
}

impl<'a> Recorder<'a> {
    fn new(instance: &'a Instance, capacity: usize) -> Self {
        Self {
            instance,
            capacity,
            actions: Vec::new(),
            buffered: BTreeMap::new(),
            buffered_count: 0,
            server: instance.meta.start_site,
            next: 0,
        }
    }

    fn next_site(&self) -> Option<Site> {
        self.instance.arrivals.get(self.next).map(|r| r.site)
    }

    /// Admits the next arrival and serves it at once.
    fn serve_on_arrival(&mut self) {
        let request = &self.instance.arrivals[self.next];
        self.actions.push(Action::Admit);
        self.actions.push(Action::Serve(request.id));
        self.server = request.site;
        self.next += 1;
    }

    fn try_buffer(&mut self) -> Result<(), PolicyError> {
        let request = &self.instance.arrivals[self.next];
        if self.buffered_count >= self.capacity {
            return Err(PolicyError::CapacityViolation {
                step: request.step,
                pending: self.buffered_count + 1,
            });
        }
        self.actions.push(Action::Admit);
        self.buffered
            .entry(request.site)
            .or_default()
            .push(request.id);
        self.buffered_count += 1;
        self.next += 1;
        Ok(())
    }

    /// Serves every buffered request at `site`; a no-op when there is none.
    fn serve_site(&mut self, site: Site) {
        if let Some(ids) = self.buffered.remove(&site) {
            self.buffered_count -= ids.len();
            self.actions.extend(ids.into_iter().map(Action::Serve));
            self.server = site;
        }
    }

    fn nearest_buffered(&self) -> Option<Site> {
        // ties go to the lower site
        self.buffered
            .keys()
            .copied()
            .min_by_key(|&site| (distance(site, self.server), site))
    }

    fn flush(&mut self) {
        while let Some(site) = self.nearest_buffered() {
            self.serve_site(site);
        }
    }

    fn finish(self) -> Result<(Schedule, CostReport), PolicyError> {
        let schedule = Schedule {
            actions: self.actions,
            buffer_capacity: self.capacity,
        };
        let report = replay_schedule(self.instance, &schedule)?;
        Ok((schedule, report))
    }
}

/// Runs `policy` on `instance` with the given buffer capacity. The returned
/// schedule replays legally to the returned report.
pub fn simulate(
    policy: PolicyId,
    instance: &Instance,
    buffer_capacity: usize,
) -> Result<(Schedule, CostReport), PolicyError> {
    match policy {
        PolicyId::BasicTrajectory => basic_trajectory(instance, buffer_capacity),
        PolicyId::GreedyNearest => greedy_nearest(instance, buffer_capacity),
    }
}

/// Position of the basic trajectory during a global step.
pub fn basic_position(ell: u32, step: u64) -> Site {
    let len = 1u64 << ell;
    let (phase, local) = (step / len, step % len);
    if phase.is_multiple_of(2) {
        local as Site
    } else {
        (len - local) as Site
    }
}

fn phase_end(ell: u32, phase: u64) -> Site {
    if phase.is_multiple_of(2) {
        1 << ell
    } else {
        0
    }
}

fn basic_trajectory(
    instance: &Instance,
    capacity: usize,
) -> Result<(Schedule, CostReport), PolicyError> {
    let ell = instance.meta.ell.ok_or(PolicyError::MissingConstruction)?;
    let len = 1u64 << ell;
    let last_step = instance.arrivals.last().map_or(0, |r| r.step);
    let phases = instance
        .meta
        .phases
        .map_or(last_step / len + 1, |p| p as u64);

    let mut rec = Recorder::new(instance, capacity);
    for step in 0..phases * len {
        let here = basic_position(ell, step);
        rec.serve_site(here);
        while let Some(request) = instance.arrivals.get(rec.next) {
            if request.step != step {
                break;
            }
            if request.site == here {
                rec.serve_on_arrival();
            } else {
                rec.try_buffer()?;
            }
        }
        let target = if (step + 1) % len == 0 {
            phase_end(ell, step / len)
        } else {
            basic_position(ell, step + 1)
        };
        rec.serve_site(target);
    }
    // arrivals past the last phase, if any, fall back to buffering
    while rec.next < instance.arrivals.len() {
        if rec.next_site() == Some(rec.server) {
            rec.serve_on_arrival();
        } else {
            rec.try_buffer()?;
        }
    }
    rec.flush();
    rec.finish()
}

fn greedy_nearest(
    instance: &Instance,
    capacity: usize,
) -> Result<(Schedule, CostReport), PolicyError> {
    let mut rec = Recorder::new(instance, capacity);
    while let Some(site) = rec.next_site() {
        if site == rec.server {
            rec.serve_on_arrival();
        } else if rec.buffered_count < capacity {
            rec.try_buffer()?;
        } else if let Some(nearest) = rec.nearest_buffered() {
            rec.serve_site(nearest);
        } else {
            // zero capacity: meet the request where it arrives
            rec.serve_on_arrival();
        }
    }
    rec.flush();
    rec.finish()
}
