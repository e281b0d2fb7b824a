//! Meal leadership, help-request messaging and the communication-cost model.
//!
//! Sending a help request occupies the sender for `C` ticks and the request
//! lands when that time is up. Replies travel free of charge. A leader keeps
//! at most one request in flight.

use std::collections::BTreeSet;

use crate::agents::{
    can_take, contextual_filter, free_station, ActionClass, AffordanceSet, AgentState, Assignment,
    Candidate, SimView,
};
use crate::events::{Event, EventKind, MessageKind};
use crate::tasks::{MealInstance, ProtocolError, StepKind};
use crate::world::{StationKind, World, UNREACHABLE};
use crate::{AgentId, MealId, StepId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Message {
    pub kind: MessageKind,
    pub sender: AgentId,
    pub recipient: AgentId,
    pub meal: MealId,
    pub step: StepId,
    pub issued_tick: u64,
    pub deliver_tick: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CommConfig {
    /// Ticks a sender is occupied per help request.
    pub cost: u64,
}

/// Leadership and team bookkeeping for every meal in the book.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClaimRegistry {
    pub leader_of: Vec<Option<AgentId>>,
    pub team_of: Vec<BTreeSet<AgentId>>,
    /// The help request each agent currently has in flight.
    pub outstanding: Vec<Option<Message>>,
    /// `(meal, step, agent)` triples that already declined a request.
    pub declined: BTreeSet<(MealId, StepId, AgentId)>,
    /// Unserved meal each agent leads, if any.
    leading: Vec<Option<MealId>>,
}

impl ClaimRegistry {
    pub fn new(n_meals: usize, n_agents: usize) -> Self {
        Self {
            leader_of: vec![None; n_meals],
            team_of: vec![BTreeSet::new(); n_meals],
            outstanding: vec![None; n_agents],
            declined: BTreeSet::new(),
            leading: vec![None; n_agents],
        }
    }

    pub fn leading(&self, agent: AgentId) -> Option<MealId> {
        self.leading[agent]
    }

    /// Adds `agent` to the meal's team; returns true if it was new.
    pub fn join(&mut self, meal: MealId, agent: AgentId) -> bool {
        self.team_of[meal].insert(agent)
    }

    pub fn meal_served(&mut self, meal: MealId) {
        if let Some(l) = self.leader_of[meal] {
            if self.leading[l] == Some(meal) {
                self.leading[l] = None;
            }
        }
    }
}

fn assignment_event(kind: EventKind, tick: u64, agent: AgentId, meal: &MealInstance, s: StepId) -> Event {
    let sk = meal.step_kind(s);
    Event::new(tick, kind)
        .actor(agent)
        .subject(meal.meal_id, s)
        .with(|x| x.step_kind = Some(sk))
}

/// Reserves a grill or pot for a meal about to fetch its first ingredient.
pub fn reserve_station(world: &mut World, meal: &mut MealInstance, s: StepId) {
    let kind = match meal.step_kind(s) {
        StepKind::GetMeat => StationKind::Grill,
        StepKind::GetOnion => StationKind::Pot,
        _ => return,
    };
    if meal.station.is_none() {
        let st = free_station(world, kind).expect("takeable fetch step has a free station");
        world.stations[st].reserved_for = Some(meal.meal_id);
        meal.station = Some(st);
    }
}

/// Assigns step `s` to `agent`, reserving a grill or pot for fetch steps.
pub fn start_assignment(
    agent: &mut AgentState,
    world: &mut World,
    meal: &mut MealInstance,
    s: StepId,
    tick: u64,
) -> Result<(), ProtocolError> {
    meal.assign(s, agent.id)?;
    reserve_station(world, meal, s);
    agent.assignment = Some(Assignment {
        meal: meal.meal_id,
        step: s,
        since: tick,
        last_progress: tick,
    });
    Ok(())
}

/// Makes `agent` the leader and sole member of `meal`'s team. The leader
/// self-assigns the lowest ready step that passes its own trait filter.
/// Emits `CLAIM`, carrying the self-assigned step when there is one.
pub fn claim_meal(
    agent: &mut AgentState,
    meal: &mut MealInstance,
    registry: &mut ClaimRegistry,
    world: &mut World,
    tick: u64,
) -> Result<Event, ProtocolError> {
    let m = meal.meal_id;
    if meal.leader.is_some() || registry.leader_of[m].is_some() {
        return Err(ProtocolError::AlreadyClaimed(m));
    }
    meal.leader = Some(agent.id);
    registry.leader_of[m] = Some(agent.id);
    registry.team_of[m].insert(agent.id);
    registry.leading[agent.id] = Some(m);

    let mut own = None;
    if agent.assignment.is_none() {
        let cands = meal
            .ready_agent_steps()
            .filter(|&s| can_take(world, meal, s, agent))
            .map(|s| {
                Candidate::new(ActionClass::TakeStep, m, Some(s), 0)
                    .category(meal.step_kind(s).specialty())
            })
            .collect();
        own = contextual_filter(AffordanceSet { candidates: cands }, agent)
            .first()
            .and_then(|c| c.step);
    }
    if let Some(s) = own {
        start_assignment(agent, world, meal, s, tick)?;
        Ok(assignment_event(EventKind::Claim, tick, agent.id, meal, s))
    } else {
        Ok(Event::new(tick, EventKind::Claim).actor(agent.id).meal(m))
    }
}

/// Free, message-less joining: `agent` takes a ready step of a claimed meal.
pub fn volunteer_take_step(
    agent: &mut AgentState,
    meal: &mut MealInstance,
    s: StepId,
    registry: &mut ClaimRegistry,
    world: &mut World,
    tick: u64,
) -> Result<Event, ProtocolError> {
    if meal.leader.is_none() {
        return Err(ProtocolError::Unclaimed(meal.meal_id));
    }
    if !can_take(world, meal, s, agent) {
        return Err(ProtocolError::NotReady {
            meal: meal.meal_id,
            step: s,
        });
    }
    start_assignment(agent, world, meal, s, tick)?;
    registry.join(meal.meal_id, agent.id);
    Ok(assignment_event(EventKind::Join, tick, agent.id, meal, s))
}

/// Decides whether `leader` sends a help request this tick.
///
/// A leader with initiative and no request in flight asks for help with the
/// lowest ready step of its meal other than its own assignment. The request
/// goes to the nearest idle agent outside the team that has not already
/// declined that step (ties by lower id).
pub fn maybe_recruit(view: &SimView, leader: AgentId, comm: CommConfig, tick: u64) -> Option<Message> {
    let me = &view.agents[leader];
    if !me.traits.initiative || me.is_busy(tick) || view.registry.outstanding[leader].is_some() {
        return None;
    }
    let m = view.registry.leading(leader)?;
    let meal = &view.meals[m];
    let team = &view.registry.team_of[m];
    // fetch steps can only start while a grill or pot is available
    let mut steps = meal.ready_agent_steps().filter(|&s| match meal.step_kind(s) {
        StepKind::GetMeat => meal.station.is_some() || free_station(view.world, StationKind::Grill).is_some(),
        StepKind::GetOnion => meal.station.is_some() || free_station(view.world, StationKind::Pot).is_some(),
        _ => true,
    });
    let s = steps.next()?;
    let recipient = view
        .agents
        .iter()
        .filter(|a| {
            a.id != leader
                && a.is_idle(tick)
                && !team.contains(&a.id)
                && !view.registry.declined.contains(&(m, s, a.id))
        })
        .map(|a| (view.world.floor_distance(me.pos, a.pos), a.id))
        .filter(|&(d, _)| d != UNREACHABLE)
        .min()?
        .1;
    Some(Message {
        kind: MessageKind::HelpRequest,
        sender: leader,
        recipient,
        meal: m,
        step: s,
        issued_tick: tick,
        deliver_tick: tick + comm.cost,
    })
}

/// Records a sent request: the sender is busy until delivery.
pub fn send_request(
    sender: &mut AgentState,
    registry: &mut ClaimRegistry,
    meal: &MealInstance,
    msg: Message,
) -> Event {
    debug_assert_eq!(msg.kind, MessageKind::HelpRequest);
    sender.busy_until = sender.busy_until.max(msg.deliver_tick);
    registry.outstanding[sender.id] = Some(msg);
    let sk = meal.step_kind(msg.step);
    Event::new(msg.issued_tick, EventKind::MsgSent)
        .actor(sender.id)
        .subject(msg.meal, msg.step)
        .with(|x| {
            x.msg = Some(MessageKind::HelpRequest);
            x.to = Some(msg.recipient);
            x.deliver_tick = Some(msg.deliver_tick);
            x.step_kind = Some(sk);
        })
}

/// Outcome of a reply reaching the leader.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseOutcome {
    Joined,
    Declined,
    Stale,
}

/// Applies an ACCEPT or DECLINE at the leader. Either way the leader's
/// request is cleared. An ACCEPT only counts if the responder really holds
/// the step. A DECLINE is remembered and the step is not offered to that
/// agent again.
pub fn handle_response(registry: &mut ClaimRegistry, meals: &[MealInstance], msg: &Message) -> ResponseOutcome {
    let leader = msg.recipient;
    if registry.outstanding[leader].is_some_and(|o| o.meal == msg.meal && o.step == msg.step) {
        registry.outstanding[leader] = None;
    }
    match msg.kind {
        MessageKind::Accept => {
            if meals[msg.meal].assignee(msg.step) == Some(msg.sender) {
                registry.join(msg.meal, msg.sender);
                ResponseOutcome::Joined
            } else {
                ResponseOutcome::Stale
            }
        }
        MessageKind::Decline => {
            registry.declined.insert((msg.meal, msg.step, msg.sender));
            ResponseOutcome::Declined
        }
        MessageKind::HelpRequest => ResponseOutcome::Stale,
    }
}

/// Returns stalled assignments to the pool. An assignee stalls when it has
/// made no progress for `stall_timeout` ticks. Agents with an item in hand or
/// hands-on work under way keep their step.
pub fn release_stale(
    agents: &mut [AgentState],
    meals: &mut [MealInstance],
    stall_timeout: u64,
    tick: u64,
) -> Vec<Event> {
    let mut out = Vec::new();
    for agent in agents.iter_mut() {
        let Some(a) = agent.assignment else { continue };
        if agent.carried.is_some() || agent.pending.is_some() {
            continue;
        }
        if tick.saturating_sub(a.last_progress) >= stall_timeout {
            meals[a.meal].unassign(a.step);
            agent.assignment = None;
            agent.path.clear();
            out.push(assignment_event(EventKind::Release, tick, agent.id, &meals[a.meal], a.step));
        }
    }
    out
}
