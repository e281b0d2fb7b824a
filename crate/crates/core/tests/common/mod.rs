//! Brute-force reference implementations shared by the metric tests.
#![allow(dead_code)]

use adhoc_kitchen::agents::Specialty;
use adhoc_kitchen::metrics::CollaborationNetwork;
use rand::Rng;

/// Random weighted graph on up to 8 nodes over `classes` specialties.
pub fn random_network(rng: &mut impl Rng) -> CollaborationNetwork {
    let n = rng.random_range(1..=8);
    let classes = rng.random_range(2..=4);
    let specialty = (0..n).map(|_| Specialty::ALL[rng.random_range(0..classes)]).collect();
    let mut net = CollaborationNetwork::new(specialty);
    let density: f64 = rng.random_range(0.1..0.7);
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(density) {
                net.add_edge(a, b, rng.random_range(1..=3));
            }
        }
    }
    net
}

/// Newman's r from the symmetric class mixing matrix of unweighted edges.
pub fn mixing_assortativity(net: &CollaborationNetwork) -> Option<f64> {
    let mut e = [[0.0f64; 4]; 4];
    for &(a, b) in net.weights.keys() {
        let (i, j) = (net.specialty[a].index(), net.specialty[b].index());
        e[i][j] += 1.0;
        e[j][i] += 1.0;
    }
    let total: f64 = e.iter().flatten().sum();
    if total == 0.0 {
        return None;
    }
    let trace: f64 = (0..4).map(|i| e[i][i]).sum::<f64>() / total;
    let ab: f64 = (0..4)
        .map(|i| {
            let a: f64 = e[i].iter().sum::<f64>() / total;
            let b: f64 = (0..4).map(|r| e[r][i]).sum::<f64>() / total;
            a * b
        })
        .sum();
    if (1.0 - ab).abs() < 1e-15 {
        return None;
    }
    Some((trace - ab) / (1.0 - ab))
}

/// Q of a labelling, straight from the pairwise definition.
pub fn modularity_of_labels(net: &CollaborationNetwork, label: &[usize]) -> f64 {
    let n = net.n();
    let mut a = vec![vec![0.0f64; n]; n];
    for (&(x, y), &w) in &net.weights {
        a[x][y] = w as f64;
        a[y][x] = w as f64;
    }
    let k: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if label[i] == label[j] {
                q += a[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Best Q over every set partition (restricted growth strings).
pub fn exhaustive_max_modularity(net: &CollaborationNetwork) -> f64 {
    fn rec(net: &CollaborationNetwork, label: &mut Vec<usize>, next: usize, best: &mut f64) {
        if label.len() == net.n() {
            *best = best.max(modularity_of_labels(net, label));
            return;
        }
        for c in 0..=next {
            label.push(c);
            rec(net, label, next.max(c + 1), best);
            label.pop();
        }
    }
    let mut best = f64::NEG_INFINITY;
    rec(net, &mut Vec::new(), 0, &mut best);
    best
}

/// Component count, largest fraction and intra-component mean distance via
/// Floyd-Warshall.
pub fn floyd_components(net: &CollaborationNetwork) -> (usize, f64, f64) {
    let n = net.n();
    const INF: usize = usize::MAX / 4;
    let mut d = vec![vec![INF; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for &(a, b) in net.weights.keys() {
        d[a][b] = 1;
        d[b][a] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    for i in 0..n {
        if label[i] == usize::MAX {
            for j in 0..n {
                if d[i][j] < INF {
                    label[j] = sizes.len();
                }
            }
            sizes.push(label.iter().filter(|&&l| l == sizes.len()).count());
        }
    }
    let (mut pairs, mut total) = (0usize, 0usize);
    for (i, row) in d.iter().enumerate() {
        for &dij in &row[i + 1..] {
            if dij < INF {
                pairs += 1;
                total += dij;
            }
        }
    }
    let largest = sizes.iter().copied().max().unwrap_or(0) as f64 / n as f64;
    let aspl = if pairs == 0 { 0.0 } else { total as f64 / pairs as f64 };
    (sizes.len(), largest, aspl)
}

/// Gini as mean absolute difference over twice the mean.
pub fn gini_md(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return 0.0;
    }
    let md: f64 = xs.iter().flat_map(|a| xs.iter().map(move |b| (a - b).abs())).sum::<f64>() / (n * n);
    md / (2.0 * mean)
}

pub fn barbell() -> CollaborationNetwork {
    let mut net = CollaborationNetwork::new(vec![Specialty::Fetch; 6]);
    for (a, b) in [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)] {
        net.add_edge(a, b, 1);
    }
    net
}

use std::collections::BTreeMap;

use adhoc_kitchen::events::{EventKind, EventLog};

/// Checks the coordination invariants over a full log and returns every
/// violation found:
/// skill-asserting agents only hold steps of their specialty, each meal is
/// claimed at most once, a step has at most one holder at a time, and a
/// sender of a help request does nothing for the `cost` ticks that follow.
pub fn protocol_violations(log: &EventLog, cost: u64) -> Vec<String> {
    let roster = log.roster();
    let mut out = Vec::new();
    let mut leaders: BTreeMap<usize, usize> = BTreeMap::new();
    let mut holder: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut quiet_until: BTreeMap<usize, (u64, u64)> = BTreeMap::new();
    for e in log.iter() {
        let (Some(actor), t) = (e.actor, e.tick) else { continue };
        let passive = matches!(e.kind, EventKind::MsgDelivered | EventKind::Release | EventKind::Agent);
        if let Some(&(sent, until)) = quiet_until.get(&actor) {
            if !passive && t > sent && t < until {
                out.push(format!("agent {actor} acted ({:?}) at {t} while sending since {sent}", e.kind));
            }
        }
        let takes = match e.kind {
            EventKind::Claim => {
                let m = e.meal.expect("claim names a meal");
                if let Some(prev) = leaders.insert(m, actor) {
                    out.push(format!("meal {m} claimed by {prev} and {actor}"));
                }
                e.step.is_some()
            }
            EventKind::Join | EventKind::Accept => true,
            EventKind::StepDone | EventKind::Release => {
                if let (Some(m), Some(s)) = (e.meal, e.step) {
                    holder.remove(&(m, s));
                }
                false
            }
            EventKind::MsgSent => {
                let deliver = e.extra().and_then(|x| x.deliver_tick).unwrap_or(t);
                if deliver != t + cost {
                    out.push(format!("message at {t} delivered at {deliver} with cost {cost}"));
                }
                quiet_until.insert(actor, (t, t + cost));
                false
            }
            _ => false,
        };
        if takes {
            let (m, s) = (e.meal.unwrap(), e.step.unwrap());
            if let Some(prev) = holder.insert((m, s), actor) {
                out.push(format!("step {m}/{s} held by {prev} and {actor} at {t}"));
            }
            let who = roster.iter().find(|r| r.id == actor).expect("actor in roster");
            let cat = e.step_kind().expect("assignment names a step kind").specialty();
            if who.skill_assertion && cat != who.specialty {
                out.push(format!("asserting {:?} agent {actor} took {cat:?} step at {t}", who.specialty));
            }
        }
    }
    out
}
