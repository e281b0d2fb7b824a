//! Event-log analytics: throughput, completion times, workload inequality and
//! the structure of the collaboration network.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::agents::Specialty;
use crate::events::{EventKind, EventLog};
use crate::tasks::MealKind;
use crate::{AgentId, MealId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("undefined metric: {0}")]
    Undefined(&'static str),
}

/// Meals served at or before tick `t`.
pub fn throughput_at(log: &EventLog, t: u64) -> usize {
    log.of_kind(EventKind::MealServed)
        .filter(|e| e.tick <= t)
        .count()
}

/// Mean serve tick over served meals of `kind`.
pub fn mean_completion_time(log: &EventLog, kind: MealKind) -> Result<f64, MetricError> {
    let ticks: Vec<u64> = log
        .of_kind(EventKind::MealServed)
        .filter(|e| e.extra().and_then(|x| x.meal_kind) == Some(kind))
        .map(|e| e.tick)
        .collect();
    if ticks.is_empty() {
        return Err(MetricError::Undefined("no meals of this kind were served"));
    }
    Ok(ticks.iter().sum::<u64>() as f64 / ticks.len() as f64)
}

/// Gini coefficient of non-negative values; 0 when they sum to 0.
pub fn gini(values: &[f64]) -> f64 {
    let n = values.len();
    let total: f64 = values.iter().sum();
    if n == 0 || total <= 0.0 {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let weighted: f64 = v
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * (i as f64 + 1.0) - n as f64 - 1.0) * x)
        .sum();
    weighted / (n as f64 * total)
}

/// Ticks each agent spent holding an assignment, up to `horizon`.
///
/// A holding interval opens when an agent takes a step (a `CLAIM` that names
/// a step, `ACCEPT` or `JOIN`) and closes at its `STEP_DONE` or `RELEASE`.
pub fn workload_ticks(log: &EventLog, n_agents: usize, horizon: u64) -> Vec<u64> {
    let mut open: Vec<Option<u64>> = vec![None; n_agents];
    let mut total = vec![0u64; n_agents];
    for e in log.iter() {
        let Some(a) = e.actor.filter(|&a| a < n_agents) else {
            continue;
        };
        match e.kind {
            EventKind::Claim if e.step.is_some() => open[a] = Some(e.tick),
            EventKind::Accept | EventKind::Join => open[a] = Some(e.tick),
            EventKind::StepDone | EventKind::Release => {
                if let Some(start) = open[a].take() {
                    total[a] += e.tick - start;
                }
            }
            _ => {}
        }
    }
    for (a, start) in open.into_iter().enumerate() {
        if let Some(s) = start {
            total[a] += horizon.saturating_sub(s);
        }
    }
    total
}

fn horizon(log: &EventLog) -> u64 {
    log.events.last().map_or(0, |e| e.tick + 1)
}

/// Gini of per-agent workload ticks, zero-workload agents included.
pub fn workload_gini(log: &EventLog, n_agents: usize) -> f64 {
    let w: Vec<f64> = workload_ticks(log, n_agents, horizon(log))
        .into_iter()
        .map(|x| x as f64)
        .collect();
    gini(&w)
}

/// Mean number of distinct agents that worked on or led each claimed meal.
pub fn mean_team_size(log: &EventLog) -> Result<f64, MetricError> {
    let mut teams: BTreeMap<MealId, BTreeSet<AgentId>> = BTreeMap::new();
    for e in log.iter() {
        if !matches!(e.kind, EventKind::Claim | EventKind::Join | EventKind::Accept) {
            continue;
        }
        if let (Some(m), Some(a)) = (e.meal, e.actor) {
            teams.entry(m).or_default().insert(a);
        }
    }
    if teams.is_empty() {
        return Err(MetricError::Undefined("no meal was claimed"));
    }
    Ok(teams.values().map(|t| t.len()).sum::<usize>() as f64 / teams.len() as f64)
}

/// Weighted, specialty-attributed agent graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CollaborationNetwork {
    pub specialty: Vec<Specialty>,
    /// Undirected edges keyed `(low, high)`.
    pub weights: BTreeMap<(AgentId, AgentId), u64>,
}

impl CollaborationNetwork {
    pub fn new(specialty: Vec<Specialty>) -> Self {
        Self {
            specialty,
            weights: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.specialty.len()
    }

    pub fn add_edge(&mut self, a: AgentId, b: AgentId, w: u64) {
        if a == b || w == 0 {
            return;
        }
        *self.weights.entry((a.min(b), a.max(b))).or_insert(0) += w;
    }

    pub fn edge_count(&self) -> usize {
        self.weights.len()
    }

    pub fn adjacency(&self) -> Vec<Vec<AgentId>> {
        let mut adj = vec![Vec::new(); self.n()];
        for &(a, b) in self.weights.keys() {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }
}

/// Nodes are the roster; an edge gains one unit per `ACCEPT` between two
/// agents and one per meal both completed a step of.
pub fn build_network(log: &EventLog) -> CollaborationNetwork {
    let roster = log.roster();
    let mut net = CollaborationNetwork::new(roster.iter().map(|r| r.specialty).collect());
    let n = net.n();
    let mut workers: BTreeMap<MealId, BTreeSet<AgentId>> = BTreeMap::new();
    for e in log.iter() {
        match e.kind {
            EventKind::Accept => {
                let to = e.extra().and_then(|x| x.to);
                if let (Some(a), Some(b)) = (e.actor, to) {
                    if a < n && b < n {
                        net.add_edge(a, b, 1);
                    }
                }
            }
            EventKind::StepDone => {
                if let (Some(a), Some(m)) = (e.actor, e.meal) {
                    if a < n {
                        workers.entry(m).or_default().insert(a);
                    }
                }
            }
            _ => {}
        }
    }
    for team in workers.values() {
        let members: Vec<AgentId> = team.iter().copied().collect();
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                net.add_edge(a, b, 1);
            }
        }
    }
    net
}

/// Newman's categorical assortativity by specialty over the unweighted edge
/// set.
pub fn assortativity(net: &CollaborationNetwork) -> Result<f64, MetricError> {
    if net.weights.is_empty() {
        return Err(MetricError::Undefined("network has no edges"));
    }
    let k = Specialty::ALL.len();
    let mut e = vec![vec![0.0f64; k]; k];
    let total = 2.0 * net.weights.len() as f64;
    for &(a, b) in net.weights.keys() {
        let (ca, cb) = (net.specialty[a].index(), net.specialty[b].index());
        e[ca][cb] += 1.0 / total;
        e[cb][ca] += 1.0 / total;
    }
    let trace: f64 = (0..k).map(|i| e[i][i]).sum();
    let ab: f64 = (0..k)
        .map(|i| {
            let a: f64 = e[i].iter().sum();
            let b: f64 = (0..k).map(|j| e[j][i]).sum();
            a * b
        })
        .sum();
    if (1.0 - ab).abs() < 1e-15 {
        return Err(MetricError::Undefined("all edge endpoints share one specialty"));
    }
    Ok((trace - ab) / (1.0 - ab))
}

/// Weighted modularity of `partition` (each node in exactly one community).
pub fn modularity(net: &CollaborationNetwork, partition: &[Vec<AgentId>]) -> f64 {
    let m: u64 = net.weights.values().sum();
    if m == 0 {
        return 0.0;
    }
    let mut community = vec![usize::MAX; net.n()];
    for (c, members) in partition.iter().enumerate() {
        for &v in members {
            community[v] = c;
        }
    }
    let mut internal = vec![0u64; partition.len()];
    let mut degree = vec![0u64; partition.len()];
    for (&(a, b), &w) in &net.weights {
        degree[community[a]] += w;
        degree[community[b]] += w;
        if community[a] == community[b] {
            internal[community[a]] += w;
        }
    }
    let m = m as f64;
    internal
        .iter()
        .zip(&degree)
        .map(|(&i, &d)| i as f64 / m - (d as f64 / (2.0 * m)).powi(2))
        .sum()
}

/// Agglomerative greedy modularity maximisation on edge weights.
///
/// Starting from singletons, repeatedly merges the pair of communities with
/// the largest modularity gain, ties by the smallest index pair, until no
/// merge has positive gain. Communities are indexed by their lowest node.
pub fn greedy_modularity(
    net: &CollaborationNetwork,
) -> Result<(Vec<Vec<AgentId>>, f64), MetricError> {
    if net.weights.is_empty() {
        return Err(MetricError::Undefined("network has no edges"));
    }
    let n = net.n();
    let m: i128 = net.weights.values().map(|&w| w as i128).sum();
    let mut members: Vec<Vec<AgentId>> = (0..n).map(|v| vec![v]).collect();
    let mut degree: Vec<i128> = vec![0; n];
    let mut between: BTreeMap<(usize, usize), i128> = BTreeMap::new();
    for (&(a, b), &w) in &net.weights {
        degree[a] += w as i128;
        degree[b] += w as i128;
        *between.entry((a, b)).or_insert(0) += w as i128;
    }
    loop {
        // gain scaled by 2m^2 keeps the comparison exact
        let best = between
            .iter()
            .map(|(&(i, j), &w)| (2 * m * w - degree[i] * degree[j], i, j))
            .filter(|&(g, _, _)| g > 0)
            .min_by(|x, y| y.0.cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let Some((_, i, j)) = best else { break };
        let moved = std::mem::take(&mut members[j]);
        members[i].extend(moved);
        degree[i] += degree[j];
        degree[j] = 0;
        let old: Vec<((usize, usize), i128)> = between
            .iter()
            .filter(|(&(a, b), _)| a == j || b == j)
            .map(|(&k, &w)| (k, w))
            .collect();
        for (k, w) in old {
            between.remove(&k);
            let other = if k.0 == j { k.1 } else { k.0 };
            if other == i {
                continue;
            }
            *between.entry((i.min(other), i.max(other))).or_insert(0) += w;
        }
    }
    let mut partition: Vec<Vec<AgentId>> = members.into_iter().filter(|c| !c.is_empty()).collect();
    for c in partition.iter_mut() {
        c.sort_unstable();
    }
    partition.sort();
    let q = modularity(net, &partition);
    Ok((partition, q))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentStats {
    pub n_components: usize,
    pub largest_fraction: f64,
    /// Mean shortest-path length over connected pairs; 0 with no such pair.
    pub aspl: f64,
}

fn bfs(adj: &[Vec<AgentId>], src: AgentId) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    dist[src] = Some(0);
    let mut queue = VecDeque::from([src]);
    while let Some(v) = queue.pop_front() {
        let d = dist[v].expect("queued nodes have a distance");
        for &u in &adj[v] {
            if dist[u].is_none() {
                dist[u] = Some(d + 1);
                queue.push_back(u);
            }
        }
    }
    dist
}

pub fn component_stats(net: &CollaborationNetwork) -> ComponentStats {
    let n = net.n();
    let adj = net.adjacency();
    let mut seen = vec![false; n];
    let mut sizes = Vec::new();
    let (mut pairs, mut length) = (0usize, 0usize);
    for v in 0..n {
        let dist = bfs(&adj, v);
        for (u, d) in dist.iter().enumerate() {
            if let Some(d) = d {
                if u > v {
                    pairs += 1;
                    length += d;
                }
            }
        }
        if !seen[v] {
            let comp: Vec<usize> = (0..n).filter(|&u| dist[u].is_some()).collect();
            for &u in &comp {
                seen[u] = true;
            }
            sizes.push(comp.len());
        }
    }
    ComponentStats {
        n_components: sizes.len(),
        largest_fraction: if n == 0 {
            0.0
        } else {
            *sizes.iter().max().unwrap_or(&0) as f64 / n as f64
        },
        aspl: if pairs == 0 {
            0.0
        } else {
            length as f64 / pairs as f64
        },
    }
}

/// Per-run result quantities. `None` marks an undefined metric.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    pub meals_served: usize,
    pub final_tick: u64,
    pub mean_completion_steak: Option<f64>,
    pub mean_completion_soup: Option<f64>,
    pub workload_gini: f64,
    pub assortativity: Option<f64>,
    pub modularity: Option<f64>,
    pub n_communities: Option<usize>,
    pub n_components: usize,
    pub largest_component_fraction: f64,
    pub aspl: f64,
    pub mean_team_size: Option<f64>,
    pub help_requests: usize,
}

impl SummaryStats {
    pub const FIELDS: [&'static str; 13] = [
        "meals_served",
        "final_tick",
        "mean_completion_steak",
        "mean_completion_soup",
        "workload_gini",
        "assortativity",
        "modularity",
        "n_communities",
        "n_components",
        "largest_component_fraction",
        "aspl",
        "mean_team_size",
        "help_requests",
    ];

    /// Values in [`Self::FIELDS`] order; undefined metrics are empty.
    pub fn cells(&self) -> Vec<String> {
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        vec![
            self.meals_served.to_string(),
            self.final_tick.to_string(),
            opt(self.mean_completion_steak),
            opt(self.mean_completion_soup),
            self.workload_gini.to_string(),
            opt(self.assortativity),
            opt(self.modularity),
            opt(self.n_communities),
            self.n_components.to_string(),
            self.largest_component_fraction.to_string(),
            self.aspl.to_string(),
            opt(self.mean_team_size),
            self.help_requests.to_string(),
        ]
    }

    /// Numeric value of a field by name, `None` when undefined or unknown.
    pub fn get(&self, field: &str) -> Option<f64> {
        let i = Self::FIELDS.iter().position(|&f| f == field)?;
        self.cells()[i].parse().ok()
    }
}

/// Computes every summary quantity from a finished run's log.
pub fn summarize(log: &EventLog, n_agents: usize, final_tick: u64) -> SummaryStats {
    let net = build_network(log);
    let comps = component_stats(&net);
    let greedy = greedy_modularity(&net).ok();
    let workload: Vec<f64> = workload_ticks(log, n_agents, final_tick)
        .into_iter()
        .map(|x| x as f64)
        .collect();
    SummaryStats {
        meals_served: log.of_kind(EventKind::MealServed).count(),
        final_tick,
        mean_completion_steak: mean_completion_time(log, MealKind::Steak).ok(),
        mean_completion_soup: mean_completion_time(log, MealKind::OnionSoup).ok(),
        workload_gini: gini(&workload),
        assortativity: assortativity(&net).ok(),
        modularity: greedy.as_ref().map(|g| g.1),
        n_communities: greedy.as_ref().map(|g| g.0.len()),
        n_components: comps.n_components,
        largest_component_fraction: comps.largest_fraction,
        aspl: comps.aspl,
        mean_team_size: mean_team_size(log).ok(),
        help_requests: log
            .of_kind(EventKind::MsgSent)
            .filter(|e| {
                e.extra().and_then(|x| x.msg) == Some(crate::events::MessageKind::HelpRequest)
            })
            .count(),
    }
}
