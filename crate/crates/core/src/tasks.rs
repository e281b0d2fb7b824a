//! Recipe task graphs, meal instances and the order book.
//!
//! Steak is a strict chain. Onion soup runs three independent onion chains
//! that all feed the pot before cooking, plating and serving.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::Specialty;
use crate::events::{Event, EventKind};
use crate::world::StationKind;
use crate::{AgentId, MealId, StepId};

/// Onions per pot load.
pub const ONIONS_PER_SOUP: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StepKind {
    GetMeat,
    GrillMeat,
    PlateSteak,
    ServeSteak,
    GetOnion,
    ChopOnion,
    PotOnion,
    CookSoup,
    PlateSoup,
    ServeSoup,
}

impl StepKind {
    pub fn station(self) -> StationKind {
        match self {
            StepKind::GetMeat => StationKind::MeatBin,
            StepKind::GrillMeat => StationKind::Grill,
            StepKind::PlateSteak | StepKind::PlateSoup => StationKind::PlateStack,
            StepKind::ServeSteak | StepKind::ServeSoup => StationKind::ServeWindow,
            StepKind::GetOnion => StationKind::OnionBin,
            StepKind::ChopOnion => StationKind::ChopBoard,
            StepKind::PotOnion | StepKind::CookSoup => StationKind::Pot,
        }
    }

    pub fn specialty(self) -> Specialty {
        match self {
            StepKind::GetMeat | StepKind::GetOnion => Specialty::Fetch,
            StepKind::ChopOnion => Specialty::Chop,
            StepKind::GrillMeat | StepKind::PotOnion | StepKind::CookSoup => Specialty::Cook,
            StepKind::PlateSteak
            | StepKind::PlateSoup
            | StepKind::ServeSteak
            | StepKind::ServeSoup => Specialty::Serve,
        }
    }

    /// Hands-on ticks the executing agent is occupied at the station.
    pub fn duration(self) -> u32 {
        match self {
            StepKind::ChopOnion => 10,
            StepKind::PlateSteak | StepKind::PlateSoup => 5,
            StepKind::ServeSteak | StepKind::ServeSoup => 5,
            _ => 0,
        }
    }

    /// Completed by a station timer rather than by an agent.
    pub fn is_autonomous(self) -> bool {
        self == StepKind::CookSoup
    }

    pub fn is_serve(self) -> bool {
        matches!(self, StepKind::ServeSteak | StepKind::ServeSoup)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepSpec {
    pub id: StepId,
    pub kind: StepKind,
    pub station: StationKind,
    pub duration: u32,
    pub specialty: Specialty,
}

impl StepSpec {
    fn new(id: StepId, kind: StepKind) -> Self {
        Self {
            id,
            kind,
            station: kind.station(),
            duration: kind.duration(),
            specialty: kind.specialty(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("task graph has a cycle")]
    Cycle,
    #[error("edge references unknown step {0}")]
    UnknownStep(StepId),
}

/// Precedence DAG over recipe steps. Step ids equal their index in `steps`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskGraph {
    pub steps: Vec<StepSpec>,
    pub edges: Vec<(StepId, StepId)>,
    preds: Vec<Vec<StepId>>,
    succs: Vec<Vec<StepId>>,
}

impl TaskGraph {
    pub fn new(kinds: &[StepKind], edges: Vec<(StepId, StepId)>) -> Result<Self, GraphError> {
        let n = kinds.len();
        let steps = kinds
            .iter()
            .enumerate()
            .map(|(i, &k)| StepSpec::new(i, k))
            .collect();
        let mut preds = vec![Vec::new(); n];
        let mut succs = vec![Vec::new(); n];
        for &(a, b) in &edges {
            for s in [a, b] {
                if s >= n {
                    return Err(GraphError::UnknownStep(s));
                }
            }
            succs[a].push(b);
            preds[b].push(a);
        }
        let g = Self {
            steps,
            edges,
            preds,
            succs,
        };
        g.topological_order()?;
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn predecessors(&self, s: StepId) -> &[StepId] {
        &self.preds[s]
    }

    pub fn successors(&self, s: StepId) -> &[StepId] {
        &self.succs[s]
    }

    pub fn roots(&self) -> Vec<StepId> {
        (0..self.len()).filter(|&s| self.preds[s].is_empty()).collect()
    }

    /// Kahn's algorithm, smallest ready id first.
    pub fn topological_order(&self) -> Result<Vec<StepId>, GraphError> {
        let mut indeg: Vec<usize> = self.preds.iter().map(Vec::len).collect();
        let mut ready: std::collections::BTreeSet<StepId> =
            (0..self.len()).filter(|&s| indeg[s] == 0).collect();
        let mut order = Vec::with_capacity(self.len());
        while let Some(s) = ready.pop_first() {
            order.push(s);
            for &t in &self.succs[s] {
                indeg[t] -= 1;
                if indeg[t] == 0 {
                    ready.insert(t);
                }
            }
        }
        if order.len() == self.len() {
            Ok(order)
        } else {
            Err(GraphError::Cycle)
        }
    }

    pub fn step_of_kind(&self, kind: StepKind) -> Option<StepId> {
        self.steps.iter().find(|s| s.kind == kind).map(|s| s.id)
    }

    /// The unique predecessor whose output item is carried into `s`, if any.
    pub fn carried_input(&self, s: StepId) -> Option<StepId> {
        match self.steps[s].kind {
            StepKind::GrillMeat
            | StepKind::ChopOnion
            | StepKind::PotOnion
            | StepKind::ServeSteak
            | StepKind::ServeSoup => self.preds[s].first().copied(),
            _ => None,
        }
    }
}

/// GET_MEAT -> GRILL_MEAT -> PLATE_STEAK -> SERVE_STEAK.
pub fn steak_graph() -> TaskGraph {
    TaskGraph::new(
        &[
            StepKind::GetMeat,
            StepKind::GrillMeat,
            StepKind::PlateSteak,
            StepKind::ServeSteak,
        ],
        vec![(0, 1), (1, 2), (2, 3)],
    )
    .expect("steak graph is a chain")
}

/// Three GET_ONION -> CHOP_ONION -> POT_ONION chains (ids 3c, 3c+1, 3c+2)
/// feeding COOK_SOUP (9) -> PLATE_SOUP (10) -> SERVE_SOUP (11).
pub fn soup_graph() -> TaskGraph {
    let mut kinds = Vec::with_capacity(3 * ONIONS_PER_SOUP + 3);
    let mut edges = Vec::new();
    for c in 0..ONIONS_PER_SOUP {
        let base = 3 * c;
        kinds.extend([StepKind::GetOnion, StepKind::ChopOnion, StepKind::PotOnion]);
        edges.push((base, base + 1));
        edges.push((base + 1, base + 2));
    }
    let cook = kinds.len();
    kinds.extend([StepKind::CookSoup, StepKind::PlateSoup, StepKind::ServeSoup]);
    for c in 0..ONIONS_PER_SOUP {
        edges.push((3 * c + 2, cook));
    }
    edges.push((cook, cook + 1));
    edges.push((cook + 1, cook + 2));
    TaskGraph::new(&kinds, edges).expect("soup graph is acyclic")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MealKind {
    Steak,
    OnionSoup,
}

impl MealKind {
    pub fn graph(self) -> TaskGraph {
        match self {
            MealKind::Steak => steak_graph(),
            MealKind::OnionSoup => soup_graph(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MealKind::Steak => "STEAK",
            MealKind::OnionSoup => "ONION_SOUP",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepStatus {
    Unclaimed,
    Assigned(AgentId),
    Done,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("meal {meal} step {step} is already done")]
    AlreadyDone { meal: MealId, step: StepId },
    #[error("meal {meal} step {step} is not assigned")]
    NotAssigned { meal: MealId, step: StepId },
    #[error("meal {meal} step {step} is assigned to agent {owner}, not {agent}")]
    WrongAssignee {
        meal: MealId,
        step: StepId,
        owner: AgentId,
        agent: AgentId,
    },
    #[error("meal {meal} step {step} is not ready")]
    NotReady { meal: MealId, step: StepId },
    #[error("meal {meal} step {step} needs an agent")]
    NotAutonomous { meal: MealId, step: StepId },
    #[error("meal {0} is already claimed")]
    AlreadyClaimed(MealId),
    #[error("meal {0} is not claimed")]
    Unclaimed(MealId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MealInstance {
    pub meal_id: MealId,
    pub order_id: usize,
    pub kind: MealKind,
    pub graph: TaskGraph,
    pub step_status: Vec<StepStatus>,
    pub leader: Option<AgentId>,
    pub served_tick: Option<u64>,
    /// Grill or pot reserved for this meal while it is in flight.
    pub station: Option<usize>,
}

impl MealInstance {
    pub fn new(meal_id: MealId, order_id: usize, kind: MealKind) -> Self {
        let graph = kind.graph();
        let n = graph.len();
        Self {
            meal_id,
            order_id,
            kind,
            graph,
            step_status: vec![StepStatus::Unclaimed; n],
            leader: None,
            served_tick: None,
            station: None,
        }
    }

    pub fn is_served(&self) -> bool {
        self.served_tick.is_some()
    }

    pub fn step_kind(&self, s: StepId) -> StepKind {
        self.graph.steps[s].kind
    }

    pub fn is_done(&self, s: StepId) -> bool {
        self.step_status[s] == StepStatus::Done
    }

    pub fn assignee(&self, s: StepId) -> Option<AgentId> {
        match self.step_status[s] {
            StepStatus::Assigned(a) => Some(a),
            _ => None,
        }
    }

    fn preds_done(&self, s: StepId) -> bool {
        self.graph.predecessors(s).iter().all(|&p| self.is_done(p))
    }

    /// True if every predecessor is done and the step itself is unclaimed.
    pub fn is_ready(&self, s: StepId) -> bool {
        self.step_status[s] == StepStatus::Unclaimed && self.preds_done(s)
    }

    /// Unclaimed steps whose predecessors are all done, ascending id.
    pub fn ready_steps(&self) -> Vec<StepId> {
        if self.is_served() {
            return Vec::new();
        }
        (0..self.graph.len()).filter(|&s| self.is_ready(s)).collect()
    }

    /// Ready steps an agent can take (the pot's cook step is excluded).
    pub fn ready_agent_steps(&self) -> impl Iterator<Item = StepId> + '_ {
        self.ready_steps()
            .into_iter()
            .filter(|&s| !self.step_kind(s).is_autonomous())
    }

    pub fn assign(&mut self, s: StepId, agent: AgentId) -> Result<(), ProtocolError> {
        if !self.is_ready(s) {
            return Err(ProtocolError::NotReady {
                meal: self.meal_id,
                step: s,
            });
        }
        self.step_status[s] = StepStatus::Assigned(agent);
        Ok(())
    }

    /// Returns an assigned step to the unclaimed pool.
    pub fn unassign(&mut self, s: StepId) {
        if matches!(self.step_status[s], StepStatus::Assigned(_)) {
            self.step_status[s] = StepStatus::Unclaimed;
        }
    }

    /// Completes an assigned step. Completing the serve step marks the meal
    /// served and adds a `MEAL_SERVED` event after the `STEP_DONE`.
    pub fn mark_done(
        &mut self,
        s: StepId,
        agent: AgentId,
        tick: u64,
    ) -> Result<Vec<Event>, ProtocolError> {
        let (meal, step) = (self.meal_id, s);
        match self.step_status[s] {
            StepStatus::Done => return Err(ProtocolError::AlreadyDone { meal, step }),
            StepStatus::Unclaimed => return Err(ProtocolError::NotAssigned { meal, step }),
            StepStatus::Assigned(owner) if owner != agent => {
                return Err(ProtocolError::WrongAssignee {
                    meal,
                    step,
                    owner,
                    agent,
                })
            }
            StepStatus::Assigned(_) => {}
        }
        debug_assert!(self.preds_done(s), "progress soundness");
        self.step_status[s] = StepStatus::Done;
        let kind = self.step_kind(s);
        let mut events = vec![Event::new(tick, EventKind::StepDone)
            .actor(agent)
            .subject(meal, step)
            .with(|x| x.step_kind = Some(kind))];
        if kind.is_serve() {
            self.served_tick = Some(tick);
            let mk = self.kind;
            events.push(
                Event::new(tick, EventKind::MealServed)
                    .actor(agent)
                    .meal(meal)
                    .with(|x| x.meal_kind = Some(mk)),
            );
        }
        Ok(events)
    }

    /// Completes a station-driven step (the soup's cook step) with no assignee.
    pub fn complete_autonomous(&mut self, s: StepId, tick: u64) -> Result<Event, ProtocolError> {
        let (meal, step) = (self.meal_id, s);
        if !self.step_kind(s).is_autonomous() {
            return Err(ProtocolError::NotAutonomous { meal, step });
        }
        if self.is_done(s) {
            return Err(ProtocolError::AlreadyDone { meal, step });
        }
        if !self.preds_done(s) {
            return Err(ProtocolError::NotReady { meal, step });
        }
        self.step_status[s] = StepStatus::Done;
        let kind = self.step_kind(s);
        Ok(Event::new(tick, EventKind::StepDone)
            .subject(meal, step)
            .with(|x| x.step_kind = Some(kind)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Order {
    pub order_id: usize,
    pub meals: Vec<MealInstance>,
}

/// Soups per order: `soup_ratio * meals_per_order` rounded half-up.
pub fn soups_per_order(soup_ratio: f64, meals_per_order: usize) -> usize {
    // the epsilon keeps exact halves such as 0.35 * 10 from rounding down
    let n = (soup_ratio * meals_per_order as f64 + 0.5 + 1e-9).floor() as usize;
    n.min(meals_per_order)
}

/// Builds `n_orders` orders; each lists its soups first, then steaks. Meal
/// ids run consecutively across the whole book.
pub fn build_order_book(soup_ratio: f64, n_orders: usize, meals_per_order: usize) -> Vec<Order> {
    assert!(
        (0.0..=1.0).contains(&soup_ratio),
        "soup_ratio must lie in [0, 1]"
    );
    let soups = soups_per_order(soup_ratio, meals_per_order);
    let mut next_id = 0;
    (0..n_orders)
        .map(|order_id| {
            let meals = (0..meals_per_order)
                .map(|i| {
                    let kind = if i < soups {
                        MealKind::OnionSoup
                    } else {
                        MealKind::Steak
                    };
                    next_id += 1;
                    MealInstance::new(next_id - 1, order_id, kind)
                })
                .collect();
            Order { order_id, meals }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steak_is_a_four_step_chain() {
        let g = steak_graph();
        let kinds: Vec<_> = g
            .topological_order()
            .unwrap()
            .into_iter()
            .map(|s| g.steps[s].kind)
            .collect();
        assert_eq!(
            kinds,
            [
                StepKind::GetMeat,
                StepKind::GrillMeat,
                StepKind::PlateSteak,
                StepKind::ServeSteak
            ]
        );
        assert_eq!(g.edges.len(), 3);
    }

    #[test]
    fn soup_structure() {
        let g = soup_graph();
        assert_eq!(g.len(), 12);
        let cook = g.step_of_kind(StepKind::CookSoup).unwrap();
        assert_eq!(g.predecessors(cook).len(), 3);
        for c in 0..3 {
            let chain: Vec<_> = (0..3).map(|i| g.steps[3 * c + i].kind).collect();
            assert_eq!(
                chain,
                [StepKind::GetOnion, StepKind::ChopOnion, StepKind::PotOnion]
            );
        }
        assert_eq!(g.roots(), vec![0, 3, 6]);
    }

    #[test]
    fn cycles_are_rejected() {
        assert_eq!(
            TaskGraph::new(&[StepKind::GetMeat, StepKind::GrillMeat], vec![(0, 1), (1, 0)]),
            Err(GraphError::Cycle)
        );
    }

    #[test]
    fn order_book_composition() {
        let book = build_order_book(0.5, 10, 10);
        let meals: Vec<_> = book.iter().flat_map(|o| &o.meals).collect();
        assert_eq!(meals.len(), 100);
        assert_eq!(meals.iter().filter(|m| m.kind == MealKind::OnionSoup).count(), 50);
        assert_eq!(book[0].meals[0].kind, MealKind::OnionSoup);
        assert_eq!(book[0].meals[9].kind, MealKind::Steak);
        assert!(meals.iter().enumerate().all(|(i, m)| m.meal_id == i));

        let steaks = build_order_book(0.0, 2, 4);
        assert!(steaks.iter().flat_map(|o| &o.meals).all(|m| m.kind == MealKind::Steak));
        assert_eq!(steaks.iter().map(|o| o.meals.len()).sum::<usize>(), 8);

        let soups = build_order_book(1.0, 1, 3);
        assert!(soups[0].meals.iter().all(|m| m.kind == MealKind::OnionSoup));
    }

    #[test]
    fn ratio_rounds_half_up() {
        assert_eq!(soups_per_order(0.25, 10), 3);
        assert_eq!(soups_per_order(0.35, 10), 4);
        assert_eq!(soups_per_order(0.5, 3), 2);
        assert_eq!(soups_per_order(0.49, 1), 0);
        assert_eq!(soups_per_order(1.0, 7), 7);
    }

    #[test]
    fn fresh_frontiers() {
        assert_eq!(MealInstance::new(0, 0, MealKind::Steak).ready_steps(), vec![0]);
        assert_eq!(
            MealInstance::new(0, 0, MealKind::OnionSoup).ready_steps(),
            vec![0, 3, 6]
        );
    }

    #[test]
    fn mark_done_protocol() {
        let mut m = MealInstance::new(5, 0, MealKind::Steak);
        for s in 0..4 {
            m.assign(s, 1).unwrap();
            let ev = m.mark_done(s, 1, 400 + s as u64 * 4).unwrap();
            assert_eq!(ev[0].kind, EventKind::StepDone);
        }
        assert_eq!(m.served_tick, Some(412));
        assert_eq!(
            m.mark_done(3, 1, 413),
            Err(ProtocolError::AlreadyDone { meal: 5, step: 3 })
        );

        let mut m = MealInstance::new(6, 0, MealKind::Steak);
        m.assign(0, 2).unwrap();
        assert!(matches!(
            m.mark_done(0, 3, 1),
            Err(ProtocolError::WrongAssignee { .. })
        ));
        assert!(matches!(m.mark_done(1, 2, 1), Err(ProtocolError::NotAssigned { .. })));
        assert!(matches!(m.assign(1, 2), Err(ProtocolError::NotReady { .. })));
    }

    #[test]
    fn serve_emits_meal_served() {
        let mut m = MealInstance::new(0, 0, MealKind::Steak);
        for s in 0..3 {
            m.assign(s, 0).unwrap();
            m.mark_done(s, 0, 1).unwrap();
        }
        m.assign(3, 0).unwrap();
        let ev = m.mark_done(3, 0, 412).unwrap();
        assert_eq!(ev.len(), 2);
        assert_eq!(ev[1].kind, EventKind::MealServed);
        assert!(m.ready_steps().is_empty());
    }

    #[test]
    fn cook_step_completes_without_assignee() {
        let mut m = MealInstance::new(0, 0, MealKind::OnionSoup);
        assert!(matches!(
            m.complete_autonomous(9, 0),
            Err(ProtocolError::NotReady { .. })
        ));
        for s in 0..9 {
            m.assign(s, 0).unwrap();
            m.mark_done(s, 0, 0).unwrap();
        }
        assert!(m.ready_agent_steps().next().is_none());
        m.complete_autonomous(9, 50).unwrap();
        assert_eq!(m.ready_steps(), vec![10]);
        assert!(matches!(
            m.complete_autonomous(10, 0),
            Err(ProtocolError::NotAutonomous { .. })
        ));
    }
}
