//! Exact offline optimum by uniform-cost search over canonical buffer states.
//!
//! A search state is `(next arrival, server site, buffered count per site)`.
//! Three reductions keep the state space small, each one checked against
//! [`exhaustive_oracle`], which applies none of them:
//!
//! * arrivals are admitted eagerly while the buffer has room;
//! * an arrival at the server's site is served for free on arrival;
//! * visiting a site serves every buffered request there.
//!
//! From a normalized state the only choices are to serve a buffered site or,
//! when the buffer is full, to meet the next arrival at its site.
//!
//! Among schedules of equal cost the solver returns the lexicographically
//! smallest action sequence (`Admit` before `Serve`, serves by request id)
//! within the canonical schedules it generates.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::model::{distance, replay_schedule, Action, CostReport, Instance, Schedule, Site};
use crate::policies::{simulate, PolicyId};

/// Largest instance accepted by [`exhaustive_oracle`].
pub const ORACLE_MAX_REQUESTS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveLimits {
    /// Closed states before the search gives up.
    pub max_states: usize,
    pub max_seconds: f64,
}

impl Default for SolveLimits {
    fn default() -> Self {
        Self {
            max_states: 20_000_000,
            max_seconds: 120.0,
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SolveError {
    /// The search hit a limit. `lower_bound` is the smallest open cost,
    /// `upper_bound` the cost of a greedy schedule when one exists.
    #[error(
        "search limit reached after {states} states (optimum in [{lower_bound}, {}])",
        upper_bound.map_or("?".to_string(), |u| u.to_string())
    )]
    ResourceExceeded {
        states: usize,
        lower_bound: u64,
        upper_bound: Option<u64>,
    },
    #[error("instance has {requests} requests, the oracle accepts at most {limit}")]
    TooLarge { requests: usize, limit: usize },
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub report: CostReport,
    pub schedule: Schedule,
    /// States closed by the search.
    pub states: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct State {
    next: u32,
    server: u32,
    /// `(site, count)`, sorted by site, counts non-zero.
    pending: Box<[(u32, u32)]>,
}

impl State {
    fn is_goal(&self, n: usize) -> bool {
        self.next as usize == n && self.pending.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Move {
    /// Meet the next arrival at its site.
    Meet,
    ServeSite(Site),
}

/// Concrete walk through the canonical schedule space. Keeps request ids so
/// that the chosen path can be written out as actions.
#[derive(Clone)]
struct Walker<'a> {
    instance: &'a Instance,
    capacity: usize,
    next: usize,
    server: Site,
    buffered: BTreeMap<Site, Vec<usize>>,
    buffered_count: usize,
    actions: Vec<Action>,
    record: bool,
}

impl<'a> Walker<'a> {
    fn new(instance: &'a Instance, capacity: usize, record: bool) -> Self {
        let mut walker = Walker {
            instance,
            capacity,
            next: 0,
            server: instance.meta.start_site,
            buffered: BTreeMap::new(),
            buffered_count: 0,
            actions: Vec::new(),
            record,
        };
        walker.normalize();
        walker
    }

    fn normalize(&mut self) {
        while let Some(request) = self.instance.arrivals.get(self.next) {
            if request.site == self.server {
                if self.record {
                    self.actions.push(Action::Admit);
                    self.actions.push(Action::Serve(request.id));
                }
            } else if self.buffered_count < self.capacity {
                if self.record {
                    self.actions.push(Action::Admit);
                }
                self.buffered
                    .entry(request.site)
                    .or_default()
                    .push(request.id);
                self.buffered_count += 1;
            } else {
                break;
            }
            self.next += 1;
        }
    }

    fn moves(&self) -> Vec<Move> {
        let mut moves: Vec<Move> = self.buffered.keys().map(|&s| Move::ServeSite(s)).collect();
        if let Some(request) = self.instance.arrivals.get(self.next) {
            if !self.buffered.contains_key(&request.site) {
                moves.push(Move::Meet);
            }
        }
        moves
    }

    /// First action the move emits; decides ties between optimal moves.
    fn first_action(&self, mv: Move) -> Action {
        match mv {
            Move::Meet => Action::Admit,
            Move::ServeSite(site) => Action::Serve(self.buffered[&site][0]),
        }
    }

    fn apply(&mut self, mv: Move) -> u64 {
        let target = match mv {
            Move::Meet => self.instance.arrivals[self.next].site,
            Move::ServeSite(site) => site,
        };
        let cost = distance(self.server, target);
        self.server = target;
        if let Some(ids) = self.buffered.remove(&target) {
            self.buffered_count -= ids.len();
            if self.record {
                self.actions.extend(ids.into_iter().map(Action::Serve));
            }
        }
        self.normalize();
        cost
    }

    fn state(&self) -> State {
        State {
            next: self.next as u32,
            server: self.server as u32,
            pending: self
                .buffered
                .iter()
                .map(|(&site, ids)| (site as u32, ids.len() as u32))
                .collect(),
        }
    }
}

struct Node {
    state: State,
    g: u64,
    closed: bool,
}

/// Admissible, consistent estimate: the farthest buffered site must still be
/// visited.
fn farthest_pending(state: &State) -> u64 {
    state
        .pending
        .iter()
        .map(|&(site, _)| distance(site as Site, state.server as Site))
        .max()
        .unwrap_or(0)
}

/// Exact optimum search. The heuristic is off by default.
#[derive(Clone, Debug, Default)]
pub struct Solver {
    pub limits: SolveLimits,
    pub use_heuristic: bool,
}

impl Solver {
    pub fn new(limits: SolveLimits) -> Self {
        Self {
            limits,
            use_heuristic: false,
        }
    }

    pub fn with_heuristic(mut self, on: bool) -> Self {
        self.use_heuristic = on;
        self
    }

    fn estimate(&self, state: &State) -> u64 {
        if self.use_heuristic {
            farthest_pending(state)
        } else {
            0
        }
    }

    pub fn solve(
        &self,
        instance: &Instance,
        buffer_capacity: usize,
    ) -> Result<Solution, SolveError> {
        let n = instance.arrivals.len();
        let started = Instant::now();
        let budget = Duration::from_secs_f64(self.limits.max_seconds.max(0.0));

        let start = Walker::new(instance, buffer_capacity, false);
        let mut index: HashMap<State, usize> = HashMap::new();
        let mut nodes: Vec<Node> = Vec::new();
        let mut heap = BinaryHeap::new();

        let start_state = start.state();
        let h0 = self.estimate(&start_state);
        index.insert(start_state.clone(), 0);
        nodes.push(Node {
            state: start_state,
            g: 0,
            closed: false,
        });
        heap.push(Reverse((h0, 0u64, 0usize)));

        let mut optimum: Option<u64> = None;
        let mut closed = 0usize;
        // stateless replays of each popped node, keyed by node index
        let mut walkers: HashMap<usize, Walker> = HashMap::new();
        walkers.insert(0, start);

        while let Some(Reverse((f, g, id))) = heap.pop() {
            if let Some(best) = optimum {
                if f > best {
                    break;
                }
            }
            if nodes[id].closed || g > nodes[id].g {
                continue;
            }
            nodes[id].closed = true;
            closed += 1;
            if closed > self.limits.max_states
                || (closed.is_multiple_of(1024) && started.elapsed() > budget)
            {
                return Err(self.exceeded(instance, buffer_capacity, closed, f));
            }

            if nodes[id].state.is_goal(n) {
                optimum.get_or_insert(g);
                continue;
            }

            let walker = walkers.remove(&id).expect("open node has a walker");
            for mv in walker.moves() {
                let mut child = walker.clone();
                let step = child.apply(mv);
                let child_g = g + step;
                let child_state = child.state();
                let child_id = match index.get(&child_state) {
                    Some(&cid) => {
                        if nodes[cid].closed || child_g >= nodes[cid].g {
                            continue;
                        }
                        nodes[cid].g = child_g;
                        cid
                    }
                    None => {
                        let cid = nodes.len();
                        index.insert(child_state.clone(), cid);
                        nodes.push(Node {
                            state: child_state,
                            g: child_g,
                            closed: false,
                        });
                        cid
                    }
                };
                let h = self.estimate(&nodes[child_id].state);
                walkers.insert(child_id, child);
                heap.push(Reverse((child_g + h, child_g, child_id)));
            }
        }

        let optimum = optimum.expect("the search space always contains a goal");
        let schedule = extract_schedule(instance, buffer_capacity, &index, &nodes, optimum);
        let report = replay_schedule(instance, &schedule).expect("solver schedule replays");
        debug_assert_eq!(report.total_cost, optimum);
        Ok(Solution {
            report,
            schedule,
            states: closed,
        })
    }

    fn exceeded(
        &self,
        instance: &Instance,
        capacity: usize,
        states: usize,
        lower: u64,
    ) -> SolveError {
        let upper_bound = simulate(PolicyId::GreedyNearest, instance, capacity)
            .ok()
            .map(|(_, report)| report.total_cost);
        SolveError::ResourceExceeded {
            states,
            lower_bound: lower,
            upper_bound,
        }
    }
}

/// Walks forward from the start, always taking the smallest first action
/// among moves that stay on some optimal path.
fn extract_schedule(
    instance: &Instance,
    capacity: usize,
    index: &HashMap<State, usize>,
    nodes: &[Node],
    optimum: u64,
) -> Schedule {
    let n = instance.arrivals.len();
    let mut on_path: HashMap<usize, bool> = HashMap::new();

    // a closed node lies on an optimal path iff a tight edge leads from it to
    // a node that does
    fn reaches_goal(
        id: usize,
        walker: &Walker,
        index: &HashMap<State, usize>,
        nodes: &[Node],
        optimum: u64,
        n: usize,
        memo: &mut HashMap<usize, bool>,
    ) -> bool {
        if let Some(&known) = memo.get(&id) {
            return known;
        }
        let node = &nodes[id];
        let result = if node.state.is_goal(n) {
            node.g == optimum
        } else {
            walker.moves().into_iter().any(|mv| {
                let mut child = walker.clone();
                let step = child.apply(mv);
                match index.get(&child.state()) {
                    Some(&cid) if nodes[cid].closed && nodes[cid].g == node.g + step => {
                        reaches_goal(cid, &child, index, nodes, optimum, n, memo)
                    }
                    _ => false,
                }
            })
        };
        memo.insert(id, result);
        result
    }

    let mut walker = Walker::new(instance, capacity, true);
    let mut id = index[&walker.state()];
    while !nodes[id].state.is_goal(n) {
        let mut moves = walker.moves();
        moves.sort_by_key(|&mv| walker.first_action(mv));
        let mut advanced = false;
        for mv in moves {
            let mut child = walker.clone();
            let step = child.apply(mv);
            if let Some(&cid) = index.get(&child.state()) {
                if nodes[cid].closed
                    && nodes[cid].g == nodes[id].g + step
                    && reaches_goal(cid, &child, index, nodes, optimum, n, &mut on_path)
                {
                    walker = child;
                    id = cid;
                    advanced = true;
                    break;
                }
            }
        }
        assert!(advanced, "optimal path must continue");
    }

    Schedule {
        actions: walker.actions,
        buffer_capacity: capacity,
    }
}

/// Exact optimum with the default solver.
pub fn optimal_cost(
    instance: &Instance,
    buffer_capacity: usize,
    limits: SolveLimits,
) -> Result<Solution, SolveError> {
    Solver::new(limits).solve(instance, buffer_capacity)
}

/// Minimum cost over every legal admit/serve interleaving, by plain
/// depth-first enumeration. Requests are served one at a time; the only
/// pruning skips a buffered request whose site an earlier buffered request
/// shares, since both choices lead to the same subtree.
pub fn exhaustive_oracle(instance: &Instance, buffer_capacity: usize) -> Result<u64, SolveError> {
    let n = instance.arrivals.len();
    if n > ORACLE_MAX_REQUESTS {
        return Err(SolveError::TooLarge {
            requests: n,
            limit: ORACLE_MAX_REQUESTS,
        });
    }
    let sites: Vec<Site> = instance.arrivals.iter().map(|r| r.site).collect();

    fn explore(
        sites: &[Site],
        capacity: usize,
        next: usize,
        server: Site,
        buffer: &mut Vec<Site>,
        cost: u64,
        best: &mut u64,
    ) {
        if next == sites.len() && buffer.is_empty() {
            *best = (*best).min(cost);
            return;
        }
        if next < sites.len() {
            let site = sites[next];
            // served on arrival
            explore(
                sites,
                capacity,
                next + 1,
                site,
                buffer,
                cost + distance(server, site),
                best,
            );
            if buffer.len() < capacity {
                buffer.push(site);
                explore(sites, capacity, next + 1, server, buffer, cost, best);
                buffer.pop();
            }
        }
        for i in 0..buffer.len() {
            if buffer[..i].contains(&buffer[i]) {
                continue;
            }
            let site = buffer.swap_remove(i);
            explore(
                sites,
                capacity,
                next,
                site,
                buffer,
                cost + distance(server, site),
                best,
            );
            buffer.push(site);
            let last = buffer.len() - 1;
            buffer.swap(i, last);
        }
    }

    let mut best = u64::MAX;
    explore(
        &sites,
        buffer_capacity,
        0,
        instance.meta.start_site,
        &mut Vec::with_capacity(buffer_capacity),
        0,
        &mut best,
    );
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genesis::build_instance;

    fn solve(instance: &Instance, capacity: usize) -> u64 {
        optimal_cost(instance, capacity, SolveLimits::default())
            .unwrap()
            .report
            .total_cost
    }

    #[test]
    fn single_forced_request() {
        let instance = Instance::from_sites(6, &[5]);
        for capacity in 0..4 {
            assert_eq!(solve(&instance, capacity), 5);
            assert_eq!(exhaustive_oracle(&instance, capacity).unwrap(), 5);
        }
    }

    #[test]
    fn two_requests_reordered_only_with_room() {
        let instance = Instance::from_sites(4, &[3, 1]);
        assert_eq!(solve(&instance, 0), 5);
        assert_eq!(exhaustive_oracle(&instance, 0).unwrap(), 5);
        for capacity in 1..3 {
            assert_eq!(solve(&instance, capacity), 3);
            assert_eq!(exhaustive_oracle(&instance, capacity).unwrap(), 3);
        }
    }

    #[test]
    fn co_sited_requests_share_one_visit() {
        let instance = Instance::from_sites(3, &[1, 1, 1]);
        assert_eq!(exhaustive_oracle(&instance, 3).unwrap(), 1);
        assert_eq!(solve(&instance, 3), 1);
    }

    #[test]
    fn empty_instance() {
        let instance = Instance::from_sites(3, &[]);
        assert_eq!(exhaustive_oracle(&instance, 1).unwrap(), 0);
        assert_eq!(solve(&instance, 1), 0);
    }

    #[test]
    fn oracle_guard() {
        let instance = Instance::from_sites(3, &[1; 13]);
        assert_eq!(
            exhaustive_oracle(&instance, 1),
            Err(SolveError::TooLarge {
                requests: 13,
                limit: ORACLE_MAX_REQUESTS
            })
        );
    }

    #[test]
    fn generated_phases() {
        let one = build_instance(2, 1, 1, 5).unwrap();
        assert_eq!(solve(&one, 2), 4);
        let two = build_instance(2, 2, 1, 5).unwrap();
        assert_eq!(solve(&two, 2), 8);
    }

    #[test]
    fn ties_prefer_meeting_arrivals_then_older_requests() {
        // from 2, sites 1 and 3 are equally far: serve request 0 first
        let mut instance = Instance::from_sites(5, &[1, 3]);
        instance.meta.start_site = 2;
        let solution = optimal_cost(&instance, 2, SolveLimits::default()).unwrap();
        assert_eq!(solution.report.total_cost, 3);
        assert_eq!(
            solution.schedule.actions,
            vec![
                Action::Admit,
                Action::Admit,
                Action::Serve(0),
                Action::Serve(1)
            ]
        );
    }

    #[test]
    fn heuristic_agrees() {
        let instance = build_instance(2, 2, 1, 5).unwrap();
        for capacity in 1..=2 {
            let plain = Solver::default().solve(&instance, capacity).unwrap();
            let guided = Solver::default()
                .with_heuristic(true)
                .solve(&instance, capacity)
                .unwrap();
            assert_eq!(plain.report.total_cost, guided.report.total_cost);
            assert_eq!(plain.schedule, guided.schedule);
        }
    }

    #[test]
    fn limits_report_bounds() {
        let instance = build_instance(2, 2, 1, 5).unwrap();
        let err = optimal_cost(
            &instance,
            1,
            SolveLimits {
                max_states: 3,
                max_seconds: 10.0,
            },
        )
        .unwrap_err();
        match err {
            SolveError::ResourceExceeded {
                lower_bound,
                upper_bound,
                ..
            } => {
                assert!(upper_bound.unwrap() >= lower_bound);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
