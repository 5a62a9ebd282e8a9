//! Instances, schedules and the operational semantics of a single server with
//! a bounded reordering buffer on a line of equidistant sites.
//!
//! A schedule is a sequence of [`Action`]s. `Admit` takes the next request of
//! the input into the buffer; `Serve(id)` moves the server to the request's
//! site and removes it. The server only ever moves to serve something, so the
//! cost of a schedule is the length of the path through the served sites.
//!
//! An `Admit` that is immediately followed by `Serve` of the same request is a
//! *serve on arrival*: the server meets the request at its site as it arrives
//! and the request never occupies a buffer slot. Every other admitted request
//! is buffered, and the number of buffered requests may never exceed the
//! buffer capacity.

use std::fmt;

use num_rational::BigRational;
use thiserror::Error;

/// Index of a site on the line. Sites are unit-spaced.
pub type Site = usize;

/// Distance between two sites of the line.
#[inline]
pub fn distance(a: Site, b: Site) -> u64 {
    a.abs_diff(b) as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RequestKind {
    /// A request of the recursive block construction.
    Regular {
        rank: u32,
    },
    /// One of the co-sited requests of an anchor.
    AnchorMember {
        anchor_id: u64,
        member: u32,
    },
    Generic,
}

impl RequestKind {
    pub fn is_anchor(&self) -> bool {
        matches!(self, RequestKind::AnchorMember { .. })
    }

    pub fn rank(&self) -> Option<u32> {
        match self {
            RequestKind::Regular { rank } => Some(*rank),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Request {
    /// Position in the arrival order.
    pub id: usize,
    pub site: Site,
    /// The step during which the request arrives.
    pub step: u64,
    pub kind: RequestKind,
    pub packet_id: Option<usize>,
}

/// Parameters recorded when an instance was derived from `(k, n, delta)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeparationHeader {
    pub k: u64,
    pub n: u64,
    pub delta: BigRational,
    pub epsilon: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceMeta {
    pub ell: Option<u32>,
    pub phases: Option<u32>,
    pub beta: u32,
    pub start_site: Site,
    pub separation: Option<SeparationHeader>,
}

impl Default for InstanceMeta {
    fn default() -> Self {
        Self {
            ell: None,
            phases: None,
            beta: 1,
            start_site: 0,
            separation: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub n_sites: usize,
    pub arrivals: Vec<Request>,
    pub meta: InstanceMeta,
}

impl Instance {
    /// Builds a generic instance from a list of sites, one request per site,
    /// all arriving in step 0.
    pub fn from_sites(n_sites: usize, sites: &[Site]) -> Self {
        let arrivals = sites
            .iter()
            .enumerate()
            .map(|(id, &site)| Request {
                id,
                site,
                step: 0,
                kind: RequestKind::Generic,
                packet_id: None,
            })
            .collect();
        Instance {
            n_sites,
            arrivals,
            meta: InstanceMeta::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.arrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrivals.is_empty()
    }

    /// Number of steps in one phase, when the instance carries a construction
    /// depth.
    pub fn phase_len(&self) -> Option<u64> {
        self.meta.ell.map(|ell| 1u64 << ell)
    }

    /// Phase that owns the given step, if phase metadata is present.
    pub fn phase_of_step(&self, step: u64) -> Option<usize> {
        let len = self.phase_len()?;
        let phases = self.meta.phases? as usize;
        Some(((step / len) as usize).min(phases.saturating_sub(1)))
    }

    /// The first `len` arrivals as a stand-alone instance.
    pub fn prefix(&self, len: usize) -> Instance {
        Instance {
            n_sites: self.n_sites,
            arrivals: self.arrivals[..len.min(self.arrivals.len())].to_vec(),
            meta: self.meta.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    SiteOutOfRange { site: Site, n_sites: usize },
    NonMonotoneStep { previous: u64, step: u64 },
    IdMismatch { expected: usize, found: usize },
    PacketSplit { packet_id: usize },
    PacketSiteMismatch { packet_id: usize },
    AnchorMemberOutOfRange { member: u32, anchor_size: u32 },
    StartSiteOutOfRange { start_site: Site },
    TooFewSites { n_sites: usize },
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::SiteOutOfRange { site, n_sites } => {
                write!(f, "site out of range ({site} >= {n_sites})")
            }
            ViolationKind::NonMonotoneStep { previous, step } => {
                write!(f, "non-monotone steps ({step} after {previous})")
            }
            ViolationKind::IdMismatch { expected, found } => {
                write!(f, "id {found} does not match arrival position {expected}")
            }
            ViolationKind::PacketSplit { packet_id } => {
                write!(f, "packet {packet_id} is not contiguous")
            }
            ViolationKind::PacketSiteMismatch { packet_id } => {
                write!(f, "packet {packet_id} spans several sites")
            }
            ViolationKind::AnchorMemberOutOfRange {
                member,
                anchor_size,
            } => write!(
                f,
                "anchor member {member} out of range (size {anchor_size})"
            ),
            ViolationKind::StartSiteOutOfRange { start_site } => {
                write!(f, "start site {start_site} out of range")
            }
            ViolationKind::TooFewSites { n_sites } => {
                write!(f, "line needs at least 2 sites, got {n_sites}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub request_id: Option<usize>,
    pub kind: ViolationKind,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            match v.request_id {
                Some(id) => write!(f, "request {id}: {}", v.kind)?,
                None => write!(f, "instance: {}", v.kind)?,
            }
        }
        Ok(())
    }
}

/// Checks the structural invariants of an instance. Every violation is
/// reported; the check itself never fails.
pub fn validate_instance(instance: &Instance) -> ValidationReport {
    let mut violations = Vec::new();
    let mut push = |request_id, kind| violations.push(Violation { request_id, kind });

    if instance.n_sites < 2 {
        push(
            None,
            ViolationKind::TooFewSites {
                n_sites: instance.n_sites,
            },
        );
    }
    if instance.meta.start_site >= instance.n_sites {
        push(
            None,
            ViolationKind::StartSiteOutOfRange {
                start_site: instance.meta.start_site,
            },
        );
    }

    let anchor_size = instance.meta.ell.map(|ell| ell + 1);
    // packet id -> (site, index of its last member)
    let mut packets: std::collections::HashMap<usize, (Site, usize)> =
        std::collections::HashMap::new();
    let mut previous_step = None;

    for (position, request) in instance.arrivals.iter().enumerate() {
        let id = Some(request.id);
        if request.id != position {
            push(
                id,
                ViolationKind::IdMismatch {
                    expected: position,
                    found: request.id,
                },
            );
        }
        if request.site >= instance.n_sites {
            push(
                id,
                ViolationKind::SiteOutOfRange {
                    site: request.site,
                    n_sites: instance.n_sites,
                },
            );
        }
        if let Some(previous) = previous_step {
            if request.step < previous {
                push(
                    id,
                    ViolationKind::NonMonotoneStep {
                        previous,
                        step: request.step,
                    },
                );
            }
        }
        previous_step = Some(request.step);

        if let (RequestKind::AnchorMember { member, .. }, Some(anchor_size)) =
            (request.kind, anchor_size)
        {
            if member >= anchor_size {
                push(
                    id,
                    ViolationKind::AnchorMemberOutOfRange {
                        member,
                        anchor_size,
                    },
                );
            }
        }

        if let Some(packet_id) = request.packet_id {
            match packets.get_mut(&packet_id) {
                Some((site, last)) => {
                    if *last + 1 != position {
                        push(id, ViolationKind::PacketSplit { packet_id });
                    }
                    if *site != request.site {
                        push(id, ViolationKind::PacketSiteMismatch { packet_id });
                    }
                    *last = position;
                }
                None => {
                    packets.insert(packet_id, (request.site, position));
                }
            }
        }
    }

    ValidationReport { violations }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Admit,
    Serve(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub actions: Vec<Action>,
    pub buffer_capacity: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostReport {
    pub total_cost: u64,
    /// Cost attributed to each phase, present when the instance carries
    /// phase metadata. A move is charged to the phase of the most recently
    /// admitted request.
    pub per_phase_cost: Option<Vec<u64>>,
    /// Largest number of buffered requests at any point.
    pub max_pending: usize,
    /// `start_site` followed by the site of every serve, in order.
    pub trajectory: Vec<Site>,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum IllegalSchedule {
    #[error("capacity exceeded at action {action}: {pending} buffered, capacity {capacity}")]
    CapacityExceeded {
        action: usize,
        pending: usize,
        capacity: usize,
    },
    #[error("action {action} admits past the end of the input")]
    AdmitPastEnd { action: usize },
    #[error("action {action} serves unknown request {request_id}")]
    UnknownRequest { action: usize, request_id: usize },
    #[error("action {action} serves request {request_id} before it is admitted")]
    ServeBeforeAdmit { action: usize, request_id: usize },
    #[error("action {action} serves request {request_id} twice")]
    AlreadyServed { action: usize, request_id: usize },
    #[error("{remaining} requests left unserved")]
    Unserved { remaining: usize },
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Waiting,
    Buffered,
    InFlight,
    Served,
}

/// Replays a schedule against an instance, returning its cost if it is legal.
pub fn replay_schedule(
    instance: &Instance,
    schedule: &Schedule,
) -> Result<CostReport, IllegalSchedule> {
    let n = instance.arrivals.len();
    let capacity = schedule.buffer_capacity;
    let mut status = vec![Status::Waiting; n];
    let mut next = 0usize;
    let mut buffered = 0usize;
    let mut max_pending = 0usize;
    let mut server = instance.meta.start_site;
    let mut total_cost = 0u64;
    let mut trajectory = vec![server];
    let mut per_phase = instance
        .meta
        .phases
        .filter(|_| instance.meta.ell.is_some())
        .map(|p| vec![0u64; p.max(1) as usize]);

    for (index, action) in schedule.actions.iter().enumerate() {
        match *action {
            Action::Admit => {
                if next >= n {
                    return Err(IllegalSchedule::AdmitPastEnd { action: index });
                }
                let id = instance.arrivals[next].id;
                next += 1;
                if schedule.actions.get(index + 1) == Some(&Action::Serve(id)) {
                    status[id] = Status::InFlight;
                } else {
                    if buffered == capacity {
                        return Err(IllegalSchedule::CapacityExceeded {
                            action: index,
                            pending: buffered + 1,
                            capacity,
                        });
                    }
                    status[id] = Status::Buffered;
                    buffered += 1;
                    max_pending = max_pending.max(buffered);
                }
            }
            Action::Serve(request_id) => {
                let Some(request) = instance.arrivals.get(request_id) else {
                    return Err(IllegalSchedule::UnknownRequest {
                        action: index,
                        request_id,
                    });
                };
                match status[request_id] {
                    Status::Waiting => {
                        return Err(IllegalSchedule::ServeBeforeAdmit {
                            action: index,
                            request_id,
                        })
                    }
                    Status::Served => {
                        return Err(IllegalSchedule::AlreadyServed {
                            action: index,
                            request_id,
                        })
                    }
                    Status::Buffered => buffered -= 1,
                    Status::InFlight => {}
                }
                status[request_id] = Status::Served;
                let step_cost = distance(server, request.site);
                total_cost += step_cost;
                if let Some(costs) = per_phase.as_mut() {
                    let owner = next
                        .checked_sub(1)
                        .and_then(|last| instance.phase_of_step(instance.arrivals[last].step))
                        .unwrap_or(0);
                    costs[owner] += step_cost;
                }
                server = request.site;
                trajectory.push(server);
            }
        }
    }

    let remaining = status.iter().filter(|s| **s != Status::Served).count();
    if remaining > 0 {
        return Err(IllegalSchedule::Unserved { remaining });
    }

    Ok(CostReport {
        total_cost,
        per_phase_cost: per_phase,
        max_pending,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn admit_serve_all(instance: &Instance) -> Vec<Action> {
        instance
            .arrivals
            .iter()
            .flat_map(|r| [Action::Admit, Action::Serve(r.id)])
            .collect()
    }

    #[test]
    fn empty_instance_costs_nothing() {
        let instance = Instance::from_sites(5, &[]);
        let schedule = Schedule {
            actions: vec![],
            buffer_capacity: 1,
        };
        let report = replay_schedule(&instance, &schedule).unwrap();
        assert_eq!(report.total_cost, 0);
        assert_eq!(report.trajectory, vec![0]);
    }

    #[test]
    fn site_out_of_range_is_reported() {
        let instance = Instance::from_sites(5, &[1, 7]);
        let report = validate_instance(&instance);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].request_id, Some(1));
        assert!(report.to_string().contains("site out of range"));
    }

    #[test]
    fn non_monotone_steps_are_reported() {
        let mut instance = Instance::from_sites(5, &[1, 2, 3]);
        for (r, step) in instance.arrivals.iter_mut().zip([0, 2, 1]) {
            r.step = step;
        }
        let report = validate_instance(&instance);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].request_id, Some(2));
        assert!(report.to_string().contains("non-monotone steps"));
    }

    #[test]
    fn split_packets_are_reported() {
        let mut instance = Instance::from_sites(5, &[1, 2, 1]);
        instance.arrivals[0].packet_id = Some(0);
        instance.arrivals[2].packet_id = Some(0);
        let report = validate_instance(&instance);
        assert!(matches!(
            report.violations[0].kind,
            ViolationKind::PacketSplit { packet_id: 0 }
        ));
    }

    #[test]
    fn serving_in_arrival_order_needs_no_buffer() {
        let instance = Instance::from_sites(6, &[3, 1, 5]);
        let schedule = Schedule {
            actions: admit_serve_all(&instance),
            buffer_capacity: 0,
        };
        let report = replay_schedule(&instance, &schedule).unwrap();
        assert_eq!(report.total_cost, 3 + 2 + 4);
        assert_eq!(report.max_pending, 0);
        assert_eq!(report.trajectory, vec![0, 3, 1, 5]);
    }

    #[test]
    fn buffering_beyond_capacity_is_rejected() {
        let instance = Instance::from_sites(6, &[3, 1]);
        let schedule = Schedule {
            actions: vec![
                Action::Admit,
                Action::Admit,
                Action::Serve(0),
                Action::Serve(1),
            ],
            buffer_capacity: 1,
        };
        assert_eq!(
            replay_schedule(&instance, &schedule),
            Err(IllegalSchedule::CapacityExceeded {
                action: 1,
                pending: 2,
                capacity: 1
            })
        );
        let roomy = Schedule {
            buffer_capacity: 2,
            ..schedule
        };
        let report = replay_schedule(&instance, &roomy).unwrap();
        assert_eq!(report.total_cost, 5);
        assert_eq!(report.max_pending, 2);
    }

    #[test]
    fn serve_on_arrival_bypasses_a_full_buffer() {
        // request 1 is met at its site as it arrives, request 0 waits
        let instance = Instance::from_sites(6, &[3, 1]);
        let schedule = Schedule {
            actions: vec![
                Action::Admit,
                Action::Admit,
                Action::Serve(1),
                Action::Serve(0),
            ],
            buffer_capacity: 1,
        };
        let report = replay_schedule(&instance, &schedule).unwrap();
        assert_eq!(report.total_cost, 1 + 2);
        assert_eq!(report.max_pending, 1);
        assert_eq!(report.trajectory, vec![0, 1, 3]);
    }

    #[test]
    fn illegal_schedules_are_classified() {
        let instance = Instance::from_sites(4, &[2, 3]);
        let cases = [
            (vec![Action::Serve(0)], "before"),
            (vec![Action::Admit, Action::Serve(9)], "unknown"),
            (
                vec![Action::Admit, Action::Serve(0), Action::Serve(0)],
                "twice",
            ),
            (vec![Action::Admit, Action::Serve(0)], "unserved"),
            (
                vec![
                    Action::Admit,
                    Action::Serve(0),
                    Action::Admit,
                    Action::Serve(1),
                    Action::Admit,
                ],
                "past the end",
            ),
        ];
        for (actions, needle) in cases {
            let err = replay_schedule(
                &instance,
                &Schedule {
                    actions,
                    buffer_capacity: 2,
                },
            )
            .unwrap_err();
            assert!(err.to_string().contains(needle), "{err} / {needle}");
        }
    }
}
