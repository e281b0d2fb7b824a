//! The tick scheduler and the primitive actions agents perform.
//!
//! Each tick runs a fixed pipeline: deliver due messages, advance station
//! timers, recycle stalled assignments, then let every agent act once in
//! ascending id order.

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::agents::{
    choose_action, contextual_filter, input_holder, perceive_affordances, process_inbox,
    ActionClass, AgentState, Assignment, Carried, HandsOn, SimView,
};
use crate::coordination::{
    claim_meal, handle_response, maybe_recruit, release_stale, send_request, volunteer_take_step,
    ClaimRegistry, CommConfig, Message,
};
use crate::events::{Event, EventKind, EventLog, MessageKind};
use crate::tasks::{MealInstance, MealKind, StepKind};
use crate::world::{Item, Position, StationKind, World, UNREACHABLE};
use crate::{AgentId, MealId, StepId};

/// Ticks a grill or pot needs once loaded.
pub const COOK_TICKS: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Station(usize),
    Agent(AgentId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    MoveStep(Position),
    PickUp(Source),
    Place(usize),
    UseStation(usize),
    Serve(usize),
    Wait,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActionError {
    #[error("agent is busy until tick {0}")]
    Busy(u64),
    #[error("{0} is not a floor cell next to the agent")]
    BadMove(Position),
    #[error("station {0} is out of reach")]
    StationOutOfReach(usize),
    #[error("agent {0} is out of reach")]
    AgentOutOfReach(AgentId),
    #[error("hands are full")]
    HandsFull,
    #[error("hands are empty")]
    HandsEmpty,
    #[error("station {0} dispenses nothing")]
    NotADispenser(usize),
    #[error("{item:?} does not go into station {station}")]
    WrongItem { item: Item, station: usize },
    #[error("station {0} is full")]
    StationFull(usize),
    #[error("station {0} has nothing ready")]
    NotReady(usize),
    #[error("station {0} is held by another meal")]
    Reserved(usize),
}

/// The next primitive of an assignment and what executing it means.
#[derive(Debug, Clone, Copy)]
struct Plan {
    action: Action,
    /// Executing the action finishes the step.
    completes: bool,
    /// Executing the action counts as progress for stall detection.
    progress: bool,
}

impl Plan {
    fn go(action: Action) -> Self {
        Self {
            action,
            completes: false,
            progress: true,
        }
    }

    fn stuck() -> Self {
        Self {
            action: Action::Wait,
            completes: false,
            progress: false,
        }
    }
}

/// Running totals used to audit item conservation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ItemLedger {
    /// Items handed out by bins and the plate stack.
    pub dispensed: u64,
    /// Plated meals removed at the serve window.
    pub served: u64,
    /// Station contents absorbed into a dish when a grill or pot is plated;
    /// the plate itself becomes the dish.
    pub merged: u64,
}

pub struct Simulation {
    pub world: World,
    pub agents: Vec<AgentState>,
    pub meals: Vec<MealInstance>,
    pub registry: ClaimRegistry,
    pub comm: CommConfig,
    pub stall_timeout: u64,
    pub log: EventLog,
    pub items: ItemLedger,
    in_flight: Vec<Message>,
    rng: ChaCha8Rng,
}

impl Simulation {
    /// Places agents on spawn cells (cycling when there are more agents than
    /// spawns) and writes the roster to the log.
    pub fn new(
        world: World,
        mut agents: Vec<AgentState>,
        meals: Vec<MealInstance>,
        comm: CommConfig,
        stall_timeout: u64,
        rng: ChaCha8Rng,
    ) -> Self {
        let mut log = EventLog::new();
        for (i, a) in agents.iter_mut().enumerate() {
            debug_assert_eq!(a.id, i);
            a.pos = world.spawns[i % world.spawns.len()];
            log.push(Event::new(world.tick, EventKind::Agent).actor(a.id).with(|x| {
                x.specialty = Some(a.specialty);
                x.skill_assertion = Some(a.traits.skill_assertion);
                x.initiative = Some(a.traits.initiative);
                x.join_existing = Some(
                    a.traits.distribution_pref == crate::agents::DistributionPref::JoinExisting,
                );
                x.agreeableness = Some(a.traits.agreeableness);
            }));
        }
        for (i, m) in meals.iter().enumerate() {
            debug_assert_eq!(m.meal_id, i);
        }
        let registry = ClaimRegistry::new(meals.len(), agents.len());
        Self {
            world,
            agents,
            meals,
            registry,
            comm,
            stall_timeout,
            log,
            items: ItemLedger::default(),
            in_flight: Vec::new(),
            rng,
        }
    }

    pub fn tick(&self) -> u64 {
        self.world.tick
    }

    pub fn meals_served(&self) -> usize {
        self.meals.iter().filter(|m| m.is_served()).count()
    }

    pub fn all_served(&self) -> bool {
        self.meals.iter().all(|m| m.is_served())
    }

    pub fn view(&self) -> SimView<'_> {
        SimView {
            world: &self.world,
            agents: &self.agents,
            meals: &self.meals,
            registry: &self.registry,
            tick: self.world.tick,
        }
    }

    /// Messages sent but not yet delivered.
    pub fn in_flight(&self) -> &[Message] {
        &self.in_flight
    }

    /// Items currently in hands or in station contents.
    pub fn live_items(&self) -> usize {
        self.agents.iter().filter(|a| a.carried.is_some()).count()
            + self.world.stations.iter().map(|s| s.contents.len()).sum::<usize>()
    }

    /// Advances until every meal is served or the clock reaches `max_ticks`.
    pub fn run(&mut self, max_ticks: u64) {
        while self.world.tick < max_ticks && !self.all_served() {
            self.advance_tick();
        }
    }

    pub fn advance_tick(&mut self) {
        self.deliver_messages();
        self.run_timers();
        let t = self.world.tick;
        for e in release_stale(&mut self.agents, &mut self.meals, self.stall_timeout, t) {
            self.log.push(e);
        }
        for id in 0..self.agents.len() {
            self.agent_turn(id);
        }
        self.world.tick += 1;
    }

    fn deliver_messages(&mut self) {
        let t = self.world.tick;
        let (due, rest): (Vec<Message>, Vec<Message>) =
            self.in_flight.drain(..).partition(|m| m.deliver_tick <= t);
        self.in_flight = rest;
        for msg in due {
            self.log.push(
                Event::new(t, EventKind::MsgDelivered)
                    .actor(msg.recipient)
                    .subject(msg.meal, msg.step)
                    .with(|x| {
                        x.msg = Some(msg.kind);
                        x.from = Some(msg.sender);
                    }),
            );
            match msg.kind {
                MessageKind::HelpRequest => self.agents[msg.recipient].inbox.push_back(msg),
                MessageKind::Accept | MessageKind::Decline => {
                    handle_response(&mut self.registry, &self.meals, &msg);
                }
            }
        }
    }

    fn run_timers(&mut self) {
        let t = self.world.tick;
        for i in 0..self.world.stations.len() {
            let st = &mut self.world.stations[i];
            if st.timer_remaining == 0 {
                continue;
            }
            st.timer_remaining -= 1;
            if st.timer_remaining > 0 {
                continue;
            }
            st.ready = true;
            match st.kind {
                StationKind::Grill => {
                    for item in st.contents.iter_mut() {
                        if *item == Item::MeatRaw {
                            *item = Item::MeatCooked;
                        }
                    }
                }
                StationKind::Pot => {
                    let m = st.reserved_for.expect("a cooking pot belongs to a meal");
                    let meal = &mut self.meals[m];
                    let s = meal
                        .graph
                        .step_of_kind(StepKind::CookSoup)
                        .expect("soup has a cook step");
                    let e = meal
                        .complete_autonomous(s, t)
                        .expect("pot finishes only after three onions");
                    self.log.push(e);
                }
                _ => {}
            }
        }
    }

    fn agent_turn(&mut self, id: AgentId) {
        let t = self.world.tick;
        if self.agents[id].is_busy(t) {
            return;
        }
        if let Some(h) = self.agents[id].pending.take() {
            self.finish_hands_on(id, h);
        }
        if !self.agents[id].inbox.is_empty() {
            let (replies, events) = process_inbox(
                &mut self.agents[id],
                &mut self.world,
                &mut self.meals,
                &mut self.registry,
                &mut self.rng,
                t,
            );
            for e in events {
                self.log.push(e);
            }
            self.in_flight.extend(replies);
        }

        if self.agents[id].assignment.is_none() {
            let choice = {
                let view = self.view();
                let ranked = contextual_filter(perceive_affordances(&view, id), &self.agents[id]);
                choose_action(&ranked)
            };
            let result = match (choice.class, choice.meal, choice.step) {
                (ActionClass::TakeStep, Some(m), Some(s)) => Some(volunteer_take_step(
                    &mut self.agents[id],
                    &mut self.meals[m],
                    s,
                    &mut self.registry,
                    &mut self.world,
                    t,
                )),
                (ActionClass::ClaimMeal, Some(m), _) => Some(claim_meal(
                    &mut self.agents[id],
                    &mut self.meals[m],
                    &mut self.registry,
                    &mut self.world,
                    t,
                )),
                _ => None,
            };
            if let Some(r) = result {
                let e = r.expect("affordances are executable");
                self.log.push(e);
            }
        }

        if let Some(asg) = self.agents[id].assignment {
            self.continue_assignment(id, asg);
        }

        if !self.agents[id].is_busy(t) {
            if let Some(msg) = maybe_recruit(&self.view(), id, self.comm, t) {
                let e = send_request(
                    &mut self.agents[id],
                    &mut self.registry,
                    &self.meals[msg.meal],
                    msg,
                );
                self.log.push(e);
                self.in_flight.push(msg);
            }
        }
    }

    fn continue_assignment(&mut self, id: AgentId, asg: Assignment) {
        let t = self.world.tick;
        let plan = self.plan(id, asg);
        match self.apply_action(id, plan.action) {
            Ok(()) => {
                if plan.progress {
                    let until = t.max(self.agents[id].busy_until);
                    if let Some(a) = self.agents[id].assignment.as_mut() {
                        a.last_progress = until;
                    }
                }
                if plan.completes {
                    self.complete_step(id, asg.meal, asg.step);
                }
            }
            Err(err) => {
                self.log.push(
                    Event::new(t, EventKind::ActionRejected)
                        .actor(id)
                        .subject(asg.meal, asg.step)
                        .with(|x| x.reason = Some(err.to_string())),
                );
            }
        }
    }

    fn complete_step(&mut self, id: AgentId, m: MealId, s: StepId) {
        let t = self.world.tick;
        if let Some(c) = self.agents[id].carried.as_mut() {
            c.meal = Some(m);
            c.from_step = Some(s);
        }
        self.agents[id].assignment = None;
        self.agents[id].path.clear();
        let events = self.meals[m]
            .mark_done(s, id, t)
            .expect("assignee completes its own ready step");
        let served = self.meals[m].is_served();
        for e in events {
            self.log.push(e);
        }
        if served {
            self.registry.meal_served(m);
        }
    }

    fn finish_hands_on(&mut self, id: AgentId, h: HandsOn) {
        let asg = self.agents[id]
            .assignment
            .expect("hands-on work belongs to an assignment");
        let meal_kind = self.meals[asg.meal].kind;
        match h {
            HandsOn::Chop { board } => {
                let st = &mut self.world.stations[board];
                let pos = st.contents.iter().position(|&i| i == Item::OnionWhole);
                st.contents.remove(pos.expect("board holds the onion being chopped"));
                self.agents[id].carried = Some(Carried {
                    item: Item::OnionChopped,
                    meal: Some(asg.meal),
                    from_step: None,
                });
            }
            HandsOn::Plate { station } => {
                let st = &mut self.world.stations[station];
                self.items.merged += st.contents.len() as u64;
                st.clear();
                self.meals[asg.meal].station = None;
                self.agents[id].carried = Some(Carried {
                    item: match meal_kind {
                        MealKind::Steak => Item::PlatedSteak,
                        MealKind::OnionSoup => Item::PlatedSoup,
                    },
                    meal: Some(asg.meal),
                    from_step: None,
                });
            }
            HandsOn::Serve { window } => {
                let dish = match meal_kind {
                    MealKind::Steak => Item::PlatedSteak,
                    MealKind::OnionSoup => Item::PlatedSoup,
                };
                let st = &mut self.world.stations[window];
                let pos = st.contents.iter().position(|&i| i == dish);
                st.contents.remove(pos.expect("window holds the dish being served"));
                self.items.served += 1;
            }
        }
        self.complete_step(id, asg.meal, asg.step);
    }

    /// Nearest station of `kind` to `from`, ties by lower index.
    fn nearest(&self, kind: StationKind, from: Position) -> Option<usize> {
        self.world
            .stations_of(kind)
            .map(|i| (self.world.station_distance(i, from), i))
            .filter(|&(d, _)| d != UNREACHABLE)
            .min()
            .map(|(_, i)| i)
    }

    fn approach(&self, from: Position, station: usize, at: Action, completes: bool) -> Plan {
        match self.world.station_distance(station, from) {
            0 => Plan {
                action: at,
                completes,
                progress: true,
            },
            UNREACHABLE => Plan::stuck(),
            _ => match self.world.step_toward_station(station, from) {
                Some(next) => Plan::go(Action::MoveStep(next)),
                None => Plan::stuck(),
            },
        }
    }

    /// Chooses the next primitive for the agent's current step.
    fn plan(&self, id: AgentId, asg: Assignment) -> Plan {
        let agent = &self.agents[id];
        let meal = &self.meals[asg.meal];
        let kind = meal.step_kind(asg.step);
        let pos = agent.pos;

        if let Some(input) = meal.graph.carried_input(asg.step) {
            let have = agent
                .carried
                .is_some_and(|c| c.meal == Some(asg.meal) && c.from_step == Some(input));
            if !have {
                let Some(h) = input_holder(&self.agents, meal, asg.step) else {
                    return Plan::stuck();
                };
                let hp = self.agents[h].pos;
                if hp == pos || hp.is_adjacent(pos) {
                    return Plan::go(Action::PickUp(Source::Agent(h)));
                }
                return match self.world.step_toward_cell(pos, hp) {
                    Some(next) => Plan::go(Action::MoveStep(next)),
                    None => Plan::stuck(),
                };
            }
        }

        match kind {
            StepKind::GetMeat | StepKind::GetOnion => match self.nearest(kind.station(), pos) {
                Some(bin) => self.approach(pos, bin, Action::PickUp(Source::Station(bin)), true),
                None => Plan::stuck(),
            },
            StepKind::GrillMeat | StepKind::PotOnion => match meal.station {
                Some(st) => self.approach(pos, st, Action::Place(st), true),
                None => Plan::stuck(),
            },
            StepKind::ChopOnion => {
                let free = self
                    .world
                    .stations_of(StationKind::ChopBoard)
                    .filter(|&b| self.world.stations[b].contents.is_empty())
                    .map(|b| (self.world.station_distance(b, pos), b))
                    .filter(|&(d, _)| d != UNREACHABLE)
                    .min()
                    .map(|(_, b)| b);
                match free {
                    Some(b) => self.approach(pos, b, Action::UseStation(b), false),
                    None => match self.nearest(StationKind::ChopBoard, pos) {
                        Some(b) if self.world.station_distance(b, pos) == 0 => Plan {
                            action: Action::Wait,
                            completes: false,
                            progress: true,
                        },
                        Some(b) => self.approach(pos, b, Action::Wait, false),
                        None => Plan::stuck(),
                    },
                }
            }
            StepKind::PlateSteak | StepKind::PlateSoup => {
                let holding_plate = agent.carried.is_some_and(|c| c.item == Item::PlateEmpty);
                if !holding_plate {
                    return match self.nearest(StationKind::PlateStack, pos) {
                        Some(d) => self.approach(pos, d, Action::PickUp(Source::Station(d)), false),
                        None => Plan::stuck(),
                    };
                }
                let Some(st) = meal.station else {
                    return Plan::stuck();
                };
                let action = if self.world.stations[st].ready {
                    Action::UseStation(st)
                } else {
                    Action::Wait
                };
                self.approach(pos, st, action, false)
            }
            StepKind::ServeSteak | StepKind::ServeSoup => {
                match self.nearest(StationKind::ServeWindow, pos) {
                    Some(w) => self.approach(pos, w, Action::Serve(w), false),
                    None => Plan::stuck(),
                }
            }
            StepKind::CookSoup => Plan::stuck(),
        }
    }

    fn reach(&self, id: AgentId, station: usize) -> Result<(), ActionError> {
        if self.world.station_distance(station, self.agents[id].pos) == 0 {
            Ok(())
        } else {
            Err(ActionError::StationOutOfReach(station))
        }
    }

    /// Executes one primitive for agent `id`. Illegal actions change nothing.
    pub fn apply_action(&mut self, id: AgentId, action: Action) -> Result<(), ActionError> {
        let t = self.world.tick;
        if self.agents[id].is_busy(t) {
            return Err(ActionError::Busy(self.agents[id].busy_until));
        }
        match action {
            Action::Wait => Ok(()),
            Action::MoveStep(to) => {
                let from = self.agents[id].pos;
                if !from.is_adjacent(to) || !self.world.in_bounds(to) || !self.world.is_floor(to) {
                    return Err(ActionError::BadMove(to));
                }
                self.agents[id].pos = to;
                Ok(())
            }
            Action::PickUp(Source::Station(i)) => {
                self.reach(id, i)?;
                if self.agents[id].carried.is_some() {
                    return Err(ActionError::HandsFull);
                }
                let item = self.world.stations[i]
                    .kind
                    .dispenses()
                    .ok_or(ActionError::NotADispenser(i))?;
                self.agents[id].carried = Some(Carried {
                    item,
                    meal: self.agents[id].assignment.map(|a| a.meal),
                    from_step: None,
                });
                self.items.dispensed += 1;
                Ok(())
            }
            Action::PickUp(Source::Agent(h)) => {
                let (me, other) = (self.agents[id].pos, self.agents[h].pos);
                if h == id || !(me == other || me.is_adjacent(other)) {
                    return Err(ActionError::AgentOutOfReach(h));
                }
                if self.agents[id].carried.is_some() {
                    return Err(ActionError::HandsFull);
                }
                let item = self.agents[h].carried.take().ok_or(ActionError::HandsEmpty)?;
                self.agents[id].carried = Some(item);
                Ok(())
            }
            Action::Place(i) => {
                self.reach(id, i)?;
                let c = self.agents[id].carried.ok_or(ActionError::HandsEmpty)?;
                let st = &mut self.world.stations[i];
                if st.reserved_for.is_some() && st.reserved_for != c.meal {
                    return Err(ActionError::Reserved(i));
                }
                let fits = match st.kind {
                    StationKind::Grill => c.item == Item::MeatRaw && !st.ready,
                    StationKind::Pot => c.item == Item::OnionChopped && !st.ready,
                    StationKind::Counter => true,
                    _ => false,
                };
                if !fits {
                    return Err(ActionError::WrongItem { item: c.item, station: i });
                }
                if st.is_full() || st.timer_remaining > 0 {
                    return Err(ActionError::StationFull(i));
                }
                st.contents.push(c.item);
                if st.kind == StationKind::Grill || (st.kind == StationKind::Pot && st.is_full()) {
                    st.timer_remaining = COOK_TICKS;
                }
                self.agents[id].carried = None;
                Ok(())
            }
            Action::UseStation(i) => {
                self.reach(id, i)?;
                let c = self.agents[id].carried.ok_or(ActionError::HandsEmpty)?;
                let st = &mut self.world.stations[i];
                let (hands_on, duration) = match st.kind {
                    StationKind::ChopBoard => {
                        if c.item != Item::OnionWhole {
                            return Err(ActionError::WrongItem { item: c.item, station: i });
                        }
                        if st.is_full() {
                            return Err(ActionError::StationFull(i));
                        }
                        st.contents.push(Item::OnionWhole);
                        self.agents[id].carried = None;
                        (HandsOn::Chop { board: i }, StepKind::ChopOnion.duration())
                    }
                    StationKind::Grill | StationKind::Pot => {
                        if c.item != Item::PlateEmpty {
                            return Err(ActionError::WrongItem { item: c.item, station: i });
                        }
                        if !st.ready {
                            return Err(ActionError::NotReady(i));
                        }
                        if st.reserved_for.is_some() && st.reserved_for != c.meal {
                            return Err(ActionError::Reserved(i));
                        }
                        (HandsOn::Plate { station: i }, StepKind::PlateSteak.duration())
                    }
                    _ => return Err(ActionError::WrongItem { item: c.item, station: i }),
                };
                self.agents[id].pending = Some(hands_on);
                self.agents[id].busy_until = t + u64::from(duration);
                Ok(())
            }
            Action::Serve(i) => {
                self.reach(id, i)?;
                let c = self.agents[id].carried.ok_or(ActionError::HandsEmpty)?;
                let st = &mut self.world.stations[i];
                if st.kind != StationKind::ServeWindow || !c.item.is_plated() {
                    return Err(ActionError::WrongItem { item: c.item, station: i });
                }
                if st.is_full() {
                    return Err(ActionError::StationFull(i));
                }
                st.contents.push(c.item);
                self.agents[id].carried = None;
                self.agents[id].pending = Some(HandsOn::Serve { window: i });
                self.agents[id].busy_until = t + u64::from(StepKind::ServeSteak.duration());
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{Specialty, TraitVector};
    use crate::tasks::MealKind;
    use crate::world::{parse_layout, DEFAULT_LAYOUT};
    use rand::SeedableRng;

    fn sim(n_agents: usize, meals: Vec<MealInstance>) -> Simulation {
        let agents = (0..n_agents)
            .map(|i| AgentState::new(i, Specialty::ALL[i % 4], TraitVector::default()))
            .collect();
        Simulation::new(
            parse_layout(DEFAULT_LAYOUT).unwrap(),
            agents,
            meals,
            CommConfig::default(),
            200,
            ChaCha8Rng::seed_from_u64(0),
        )
    }

    #[test]
    fn grill_timer_counts_down_once_per_tick() {
        let mut s = sim(1, Vec::new());
        let g = s.world.stations_of(StationKind::Grill).next().unwrap();
        s.world.stations[g].contents.push(Item::MeatRaw);
        s.world.stations[g].timer_remaining = 3;
        s.advance_tick();
        assert_eq!(s.world.stations[g].timer_remaining, 2);
        s.advance_tick();
        s.advance_tick();
        assert!(s.world.stations[g].ready);
        assert_eq!(s.world.stations[g].contents, [Item::MeatCooked]);
    }

    #[test]
    fn actions_check_reach_and_hands() {
        let mut s = sim(2, Vec::new());
        let p = s.agents[0].pos;
        let far = Position::new(p.x + 3, p.y);
        assert_eq!(s.apply_action(0, Action::MoveStep(far)), Err(ActionError::BadMove(far)));
        let bin = s.world.stations_of(StationKind::MeatBin).next().unwrap();
        assert_eq!(
            s.apply_action(0, Action::PickUp(Source::Station(bin))),
            Err(ActionError::StationOutOfReach(bin))
        );
        assert_eq!(s.apply_action(0, Action::PickUp(Source::Agent(1))), Err(ActionError::HandsEmpty));
        s.agents[1].carried = Some(Carried {
            item: Item::OnionWhole,
            meal: None,
            from_step: None,
        });
        s.apply_action(0, Action::PickUp(Source::Agent(1))).unwrap();
        assert_eq!(s.agents[0].carried.map(|c| c.item), Some(Item::OnionWhole));
        assert!(s.agents[1].carried.is_none());
        s.agents[0].busy_until = 10;
        assert_eq!(s.apply_action(0, Action::Wait), Err(ActionError::Busy(10)));
    }

    #[test]
    fn lone_cook_serves_a_steak() {
        let mut s = sim(1, vec![MealInstance::new(0, 0, MealKind::Steak)]);
        s.run(5000);
        assert!(s.all_served());
        assert_eq!(s.items.dispensed, 2);
        assert_eq!(s.items.served, 1);
        assert_eq!(s.live_items(), 0);
        let done: Vec<StepKind> = s
            .log
            .of_kind(EventKind::StepDone)
            .filter_map(|e| e.step_kind())
            .collect();
        assert_eq!(
            done,
            [StepKind::GetMeat, StepKind::GrillMeat, StepKind::PlateSteak, StepKind::ServeSteak]
        );
    }
}
