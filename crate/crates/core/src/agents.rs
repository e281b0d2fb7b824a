//! Agent personas and the Affordance-Context-Action decision loop.
//!
//! Each idle agent enumerates what the kitchen currently lets it do
//! ([`perceive_affordances`]), filters and ranks those options through its
//! traits ([`contextual_filter`]) and commits to the top one
//! ([`choose_action`]). Incoming help requests are answered first by
//! [`process_inbox`].

use std::collections::VecDeque;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coordination::{start_assignment, ClaimRegistry, Message};
use crate::events::{Event, EventKind, MessageKind};
use crate::tasks::{MealInstance, StepKind};
use crate::world::{Item, Position, StationKind, World, UNREACHABLE};
use crate::{AgentId, MealId, StepId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Specialty {
    Fetch,
    Chop,
    Cook,
    Serve,
}

impl Specialty {
    pub const ALL: [Specialty; 4] = [
        Specialty::Fetch,
        Specialty::Chop,
        Specialty::Cook,
        Specialty::Serve,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Specialty::Fetch => "FETCH",
            Specialty::Chop => "CHOP",
            Specialty::Cook => "COOK",
            Specialty::Serve => "SERVE",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Specialty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DistributionPref {
    StartNew,
    JoinExisting,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraitVector {
    /// Probability of accepting a help request.
    pub agreeableness: f64,
    /// Whether the agent recruits helpers for meals it leads.
    pub initiative: bool,
    pub distribution_pref: DistributionPref,
    /// Whether the agent refuses steps outside its specialty.
    pub skill_assertion: bool,
}

impl Default for TraitVector {
    fn default() -> Self {
        Self {
            agreeableness: 0.8,
            initiative: false,
            distribution_pref: DistributionPref::StartNew,
            skill_assertion: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AgreeablenessSpec {
    Fixed(f64),
    /// Drawn per agent from `[lo, hi)`.
    Uniform(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecialtyAssignment {
    RoundRobin,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersonaMix {
    pub frac_initiative: f64,
    pub frac_skill_assertion: f64,
    pub frac_join_existing: f64,
    pub agreeableness: AgreeablenessSpec,
    pub specialties: SpecialtyAssignment,
}

impl Default for PersonaMix {
    fn default() -> Self {
        Self {
            frac_initiative: 0.5,
            frac_skill_assertion: 0.5,
            frac_join_existing: 0.5,
            agreeableness: AgreeablenessSpec::Fixed(0.8),
            specialties: SpecialtyAssignment::RoundRobin,
        }
    }
}

/// An item in an agent's hands, tagged with the meal it belongs to.
///
/// `from_step` names the completed step that produced the item; the item is
/// then the input of that step's successor. Plates picked up as part of a
/// plating step carry `None`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Carried {
    pub item: Item,
    pub meal: Option<MealId>,
    pub from_step: Option<StepId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment {
    pub meal: MealId,
    pub step: StepId,
    pub since: u64,
    pub last_progress: u64,
}

/// Hands-on work started by `USE_STATION` or `SERVE`, finished when the
/// agent's busy period ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandsOn {
    Chop { board: usize },
    Plate { station: usize },
    Serve { window: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: AgentId,
    pub pos: Position,
    pub carried: Option<Carried>,
    pub busy_until: u64,
    pub traits: TraitVector,
    pub specialty: Specialty,
    pub inbox: VecDeque<Message>,
    pub assignment: Option<Assignment>,
    pub pending: Option<HandsOn>,
    /// Pending movement cells toward the current target.
    pub path: Vec<Position>,
}

impl AgentState {
    pub fn new(id: AgentId, specialty: Specialty, traits: TraitVector) -> Self {
        Self {
            id,
            pos: Position::new(0, 0),
            carried: None,
            busy_until: 0,
            traits,
            specialty,
            inbox: VecDeque::new(),
            assignment: None,
            pending: None,
            path: Vec::new(),
        }
    }

    pub fn is_busy(&self, tick: u64) -> bool {
        self.busy_until > tick
    }

    /// Free to be recruited: not busy, no assignment, empty hands.
    pub fn is_idle(&self, tick: u64) -> bool {
        !self.is_busy(tick)
            && self.assignment.is_none()
            && self.carried.is_none()
            && self.pending.is_none()
    }

    pub fn accepts_category(&self, s: Specialty) -> bool {
        !self.traits.skill_assertion || s == self.specialty
    }
}

fn pick_exact(n: usize, frac: f64, rng: &mut impl Rng) -> Vec<bool> {
    let k = ((frac * n as f64) + 0.5).floor() as usize;
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(rng);
    let mut flags = vec![false; n];
    for &i in ids.iter().take(k.min(n)) {
        flags[i] = true;
    }
    flags
}

/// Creates `n` agents with exactly `round(frac * n)` holders of each boolean
/// trait. Draw order: initiative, skill assertion, join preference, then
/// specialties (random mode only), then per-agent agreeableness.
pub fn assign_personas(n: usize, mix: &PersonaMix, rng: &mut impl Rng) -> Vec<AgentState> {
    assert!(n >= 1, "team needs at least one agent");
    let initiative = pick_exact(n, mix.frac_initiative, rng);
    let assertive = pick_exact(n, mix.frac_skill_assertion, rng);
    let joiners = pick_exact(n, mix.frac_join_existing, rng);
    let specialties: Vec<Specialty> = match mix.specialties {
        SpecialtyAssignment::RoundRobin => (0..n).map(|i| Specialty::ALL[i % 4]).collect(),
        SpecialtyAssignment::Random => (0..n)
            .map(|_| Specialty::ALL[rng.random_range(0..4)])
            .collect(),
    };
    (0..n)
        .map(|i| {
            let agreeableness = match mix.agreeableness {
                AgreeablenessSpec::Fixed(v) => v,
                AgreeablenessSpec::Uniform(lo, hi) if hi > lo => rng.random_range(lo..hi),
                AgreeablenessSpec::Uniform(lo, _) => lo,
            };
            let traits = TraitVector {
                agreeableness,
                initiative: initiative[i],
                distribution_pref: if joiners[i] {
                    DistributionPref::JoinExisting
                } else {
                    DistributionPref::StartNew
                },
                skill_assertion: assertive[i],
            };
            AgentState::new(i, specialties[i], traits)
        })
        .collect()
}

/// Read-only snapshot handed to the decision functions.
#[derive(Clone, Copy)]
pub struct SimView<'a> {
    pub world: &'a World,
    pub agents: &'a [AgentState],
    pub meals: &'a [MealInstance],
    pub registry: &'a ClaimRegistry,
    pub tick: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActionClass {
    Continue,
    Respond,
    TakeStep,
    ClaimMeal,
    Wait,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub class: ActionClass,
    pub meal: Option<MealId>,
    pub step: Option<StepId>,
    pub distance: u32,
    /// Category of the step a `TakeStep`/`Respond` candidate refers to.
    pub category: Option<Specialty>,
    /// Inbox position for `Respond` candidates.
    pub request: Option<usize>,
}

impl Candidate {
    pub fn wait() -> Self {
        Self {
            class: ActionClass::Wait,
            meal: None,
            step: None,
            distance: 0,
            category: None,
            request: None,
        }
    }

    pub fn new(class: ActionClass, meal: MealId, step: Option<StepId>, distance: u32) -> Self {
        Self {
            class,
            meal: Some(meal),
            step,
            distance,
            category: None,
            request: None,
        }
    }

    pub fn category(mut self, c: Specialty) -> Self {
        self.category = Some(c);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AffordanceSet {
    pub candidates: Vec<Candidate>,
}

/// Whether `agent` could start step `s` of `meal` right now: the step is
/// ready, needs an agent, the agent's hands hold nothing or exactly the
/// step's input, and any grill or pot the step needs is available.
pub fn can_take(world: &World, meal: &MealInstance, s: StepId, agent: &AgentState) -> bool {
    if meal.is_served() || meal.leader.is_none() || !meal.is_ready(s) {
        return false;
    }
    let kind = meal.step_kind(s);
    if kind.is_autonomous() || agent.assignment.is_some() || agent.pending.is_some() {
        return false;
    }
    match agent.carried {
        None => {}
        Some(c) => {
            let input = meal.graph.carried_input(s);
            if c.meal != Some(meal.meal_id) || input.is_none() || c.from_step != input {
                return false;
            }
        }
    }
    match kind {
        StepKind::GetMeat => {
            meal.station.is_some() || free_station(world, StationKind::Grill).is_some()
        }
        StepKind::GetOnion => {
            meal.station.is_some() || free_station(world, StationKind::Pot).is_some()
        }
        _ => true,
    }
}

/// Lowest-index grill or pot not reserved by any meal.
pub fn free_station(world: &World, kind: StationKind) -> Option<usize> {
    world
        .stations_of(kind)
        .find(|&i| world.stations[i].reserved_for.is_none())
}

/// Agent currently carrying the input item of step `s` of `meal`.
pub fn input_holder(agents: &[AgentState], meal: &MealInstance, s: StepId) -> Option<AgentId> {
    let input = meal.graph.carried_input(s)?;
    agents
        .iter()
        .find(|a| {
            a.carried
                .is_some_and(|c| c.meal == Some(meal.meal_id) && c.from_step == Some(input))
        })
        .map(|a| a.id)
}

fn nearest_of_kind(world: &World, kind: StationKind, from: Position) -> u32 {
    world
        .stations_of(kind)
        .map(|i| world.station_distance(i, from))
        .min()
        .unwrap_or(UNREACHABLE)
}

/// Travel distance from `agent` to the first place step `s` needs it.
pub fn step_distance(view: &SimView, agent: &AgentState, meal: &MealInstance, s: StepId) -> u32 {
    let kind = meal.step_kind(s);
    if let Some(h) = input_holder(view.agents, meal, s) {
        if h != agent.id {
            let d = view.world.floor_distance(agent.pos, view.agents[h].pos);
            return d.saturating_sub(1);
        }
    }
    let world = view.world;
    match kind {
        StepKind::GrillMeat | StepKind::PotOnion => match meal.station {
            Some(st) => world.station_distance(st, agent.pos),
            None => nearest_of_kind(world, kind.station(), agent.pos),
        },
        _ => nearest_of_kind(world, kind.station(), agent.pos),
    }
}

/// Enumerates everything the kitchen lets `agent` do this tick. Every
/// candidate is individually executable; `WAIT` is always present.
pub fn perceive_affordances(view: &SimView, agent_id: AgentId) -> AffordanceSet {
    let agent = &view.agents[agent_id];
    let mut candidates = Vec::new();
    if let Some(a) = agent.assignment {
        candidates.push(Candidate::new(ActionClass::Continue, a.meal, Some(a.step), 0));
    }
    for (i, msg) in agent.inbox.iter().enumerate() {
        if msg.kind != MessageKind::HelpRequest {
            continue;
        }
        let meal = &view.meals[msg.meal];
        if can_take(view.world, meal, msg.step, agent) {
            let mut c = Candidate::new(
                ActionClass::Respond,
                msg.meal,
                Some(msg.step),
                step_distance(view, agent, meal, msg.step),
            )
            .category(meal.step_kind(msg.step).specialty());
            c.request = Some(i);
            candidates.push(c);
        }
    }
    let may_claim = agent.assignment.is_none()
        && agent.carried.is_none()
        && agent.pending.is_none()
        && view.registry.leading(agent_id).is_none();
    // starters only join other teams once there is nothing left to start
    let starting_open = agent.traits.distribution_pref == DistributionPref::StartNew
        && view.meals.iter().any(|m| m.leader.is_none());
    for meal in view.meals {
        if meal.is_served() {
            continue;
        }
        let joinable = !starting_open || view.registry.team_of[meal.meal_id].contains(&agent_id);
        if meal.leader.is_some() && joinable {
            // a leader leaves the step it asked help with to the helper
            let delegated = view.registry.outstanding[agent_id]
                .filter(|o| o.meal == meal.meal_id)
                .map(|o| o.step);
            for s in meal.ready_agent_steps() {
                if Some(s) != delegated && can_take(view.world, meal, s, agent) {
                    candidates.push(
                        Candidate::new(
                            ActionClass::TakeStep,
                            meal.meal_id,
                            Some(s),
                            step_distance(view, agent, meal, s),
                        )
                        .category(meal.step_kind(s).specialty()),
                    );
                }
            }
        } else if meal.leader.is_none() && may_claim {
            let root = meal.graph.roots()[0];
            let d = nearest_of_kind(view.world, meal.step_kind(root).station(), agent.pos);
            candidates.push(Candidate::new(ActionClass::ClaimMeal, meal.meal_id, None, d));
        }
    }
    candidates.push(Candidate::wait());
    AffordanceSet { candidates }
}

fn class_rank(class: ActionClass, pref: DistributionPref) -> u8 {
    match (class, pref) {
        (ActionClass::Continue, _) => 0,
        (ActionClass::Respond, _) => 1,
        (ActionClass::TakeStep, DistributionPref::JoinExisting) => 2,
        (ActionClass::ClaimMeal, DistributionPref::JoinExisting) => 3,
        (ActionClass::ClaimMeal, DistributionPref::StartNew) => 2,
        (ActionClass::TakeStep, DistributionPref::StartNew) => 3,
        (ActionClass::Wait, _) => 4,
    }
}

/// Drops out-of-specialty steps for skill-asserting agents, then ranks by
/// class (per distribution preference), distance, meal id and step id.
pub fn contextual_filter(affs: AffordanceSet, agent: &AgentState) -> Vec<Candidate> {
    let mut ranked: Vec<Candidate> = affs
        .candidates
        .into_iter()
        .filter(|c| match c.class {
            ActionClass::TakeStep | ActionClass::Respond => {
                c.category.is_none_or(|cat| agent.accepts_category(cat))
            }
            _ => true,
        })
        .collect();
    let pref = agent.traits.distribution_pref;
    ranked.sort_by_key(|c| {
        (
            class_rank(c.class, pref),
            c.distance,
            c.meal.unwrap_or(usize::MAX),
            c.step.unwrap_or(usize::MAX),
        )
    });
    ranked
}

pub fn choose_action(ranked: &[Candidate]) -> Candidate {
    ranked.first().copied().unwrap_or_else(Candidate::wait)
}

/// Why a help request was turned down.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeclineReason {
    Stale,
    Busy,
    Specialty,
    Unwilling,
    AlreadyAccepted,
}

impl DeclineReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DeclineReason::Stale => "stale",
            DeclineReason::Busy => "busy",
            DeclineReason::Specialty => "specialty",
            DeclineReason::Unwilling => "unwilling",
            DeclineReason::AlreadyAccepted => "already_accepted",
        }
    }
}

/// Outcome of answering one help request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reply {
    Accept,
    Decline(DeclineReason),
}

/// Decides a single request. Only the willingness check consumes a random
/// draw; every other outcome is deterministic.
pub fn decide_request(
    world: &World,
    meal: &MealInstance,
    msg: &Message,
    agent: &AgentState,
    accepted_already: bool,
    rng: &mut impl Rng,
) -> Reply {
    if meal.is_served() || !meal.is_ready(msg.step) {
        return Reply::Decline(DeclineReason::Stale);
    }
    if accepted_already {
        return Reply::Decline(DeclineReason::AlreadyAccepted);
    }
    if !can_take(world, meal, msg.step, agent) {
        return Reply::Decline(DeclineReason::Busy);
    }
    if !agent.accepts_category(meal.step_kind(msg.step).specialty()) {
        return Reply::Decline(DeclineReason::Specialty);
    }
    let u: f64 = rng.random();
    if u < agent.traits.agreeableness {
        Reply::Accept
    } else {
        Reply::Decline(DeclineReason::Unwilling)
    }
}

/// Answers every queued help request in FIFO order. At most one request is
/// accepted; the acceptor takes the step and joins the meal's team. Replies
/// are returned as messages due for immediate delivery (responses are free).
pub fn process_inbox(
    agent: &mut AgentState,
    world: &mut World,
    meals: &mut [MealInstance],
    registry: &mut ClaimRegistry,
    rng: &mut impl Rng,
    tick: u64,
) -> (Vec<Message>, Vec<Event>) {
    let mut replies = Vec::new();
    let mut events = Vec::new();
    let mut accepted = false;
    let mut keep = VecDeque::new();
    while let Some(msg) = agent.inbox.pop_front() {
        if msg.kind != MessageKind::HelpRequest {
            keep.push_back(msg);
            continue;
        }
        let meal = &mut meals[msg.meal];
        let reply = decide_request(world, meal, &msg, agent, accepted, rng);
        let kind = meal.step_kind(msg.step);
        let ev = match reply {
            Reply::Accept => {
                accepted = true;
                start_assignment(agent, world, meal, msg.step, tick)
                    .expect("accepted step was ready");
                registry.join(msg.meal, agent.id);
                Event::new(tick, EventKind::Accept)
                    .actor(agent.id)
                    .subject(msg.meal, msg.step)
                    .with(|x| {
                        x.to = Some(msg.sender);
                        x.step_kind = Some(kind);
                    })
            }
            Reply::Decline(r) => Event::new(tick, EventKind::Decline)
                .actor(agent.id)
                .subject(msg.meal, msg.step)
                .with(|x| {
                    x.to = Some(msg.sender);
                    x.step_kind = Some(kind);
                    x.reason = Some(r.as_str().to_string());
                }),
        };
        events.push(ev);
        replies.push(Message {
            kind: if reply == Reply::Accept {
                MessageKind::Accept
            } else {
                MessageKind::Decline
            },
            sender: agent.id,
            recipient: msg.sender,
            meal: msg.meal,
            step: msg.step,
            issued_tick: tick,
            deliver_tick: tick,
        });
    }
    agent.inbox = keep;
    (replies, events)
}
