//! Tick-stamped event records and their JSONL encoding.

use serde::{Deserialize, Serialize};

use crate::agents::Specialty;
use crate::tasks::{MealKind, StepKind};
use crate::{AgentId, MealId, StepId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    /// Roster entry written once per agent before the first tick.
    Agent,
    Claim,
    MsgSent,
    MsgDelivered,
    Accept,
    Decline,
    Join,
    Release,
    StepDone,
    MealServed,
    ActionRejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MessageKind {
    HelpRequest,
    Accept,
    Decline,
}

/// Kind-specific payload. Absent fields are omitted from the encoding.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Extra {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub specialty: Option<Specialty>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skill_assertion: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initiative: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub join_existing: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agreeableness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meal_kind: Option<MealKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_kind: Option<StepKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub msg: Option<MessageKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<AgentId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<AgentId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deliver_tick: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub tick: u64,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actor: Option<AgentId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meal: Option<MealId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<StepId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra: Option<Extra>,
}

impl Event {
    pub fn new(tick: u64, kind: EventKind) -> Self {
        Self {
            tick,
            kind,
            actor: None,
            meal: None,
            step: None,
            extra: None,
        }
    }

    pub fn actor(mut self, a: AgentId) -> Self {
        self.actor = Some(a);
        self
    }

    pub fn meal(mut self, m: MealId) -> Self {
        self.meal = Some(m);
        self
    }

    pub fn step(mut self, s: StepId) -> Self {
        self.step = Some(s);
        self
    }

    pub fn subject(self, m: MealId, s: StepId) -> Self {
        self.meal(m).step(s)
    }

    pub fn with(mut self, f: impl FnOnce(&mut Extra)) -> Self {
        let mut extra = self.extra.take().unwrap_or_default();
        f(&mut extra);
        self.extra = Some(extra);
        self
    }

    pub fn extra(&self) -> Option<&Extra> {
        self.extra.as_ref()
    }

    pub fn step_kind(&self) -> Option<StepKind> {
        self.extra.as_ref().and_then(|e| e.step_kind)
    }
}

/// Ordered event stream of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub events: Vec<Event>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, e: Event) {
        debug_assert!(
            self.events.last().is_none_or(|l| l.tick <= e.tick),
            "event ticks must be non-decreasing"
        );
        self.events.push(e);
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Event> {
        self.events.iter()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    /// Agent roster recovered from the `AGENT` entries, indexed by id.
    pub fn roster(&self) -> Vec<RosterEntry> {
        let mut out: Vec<RosterEntry> = self
            .of_kind(EventKind::Agent)
            .filter_map(|e| {
                let x = e.extra.as_ref()?;
                Some(RosterEntry {
                    id: e.actor?,
                    specialty: x.specialty?,
                    skill_assertion: x.skill_assertion.unwrap_or(false),
                    initiative: x.initiative.unwrap_or(false),
                })
            })
            .collect();
        out.sort_by_key(|r| r.id);
        out
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let events = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<Vec<Event>, _>>()?;
        Ok(Self { events })
    }
}

impl FromIterator<Event> for EventLog {
    fn from_iter<I: IntoIterator<Item = Event>>(iter: I) -> Self {
        Self {
            events: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RosterEntry {
    pub id: AgentId,
    pub specialty: Specialty,
    pub skill_assertion: bool,
    pub initiative: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_order_is_fixed_and_absent_fields_are_omitted() {
        let e = Event::new(7, EventKind::MsgSent)
            .actor(2)
            .subject(3, 1)
            .with(|x| {
                x.to = Some(5);
                x.msg = Some(MessageKind::HelpRequest);
            });
        assert_eq!(
            serde_json::to_string(&e).unwrap(),
            r#"{"tick":7,"kind":"MSG_SENT","actor":2,"meal":3,"step":1,"extra":{"msg":"HELP_REQUEST","to":5}}"#
        );
        let bare = Event::new(0, EventKind::StepDone).meal(1);
        assert_eq!(
            serde_json::to_string(&bare).unwrap(),
            r#"{"tick":0,"kind":"STEP_DONE","meal":1}"#
        );
    }

    #[test]
    fn jsonl_roundtrip() {
        let log: EventLog = [
            Event::new(0, EventKind::Claim).actor(0).meal(4),
            Event::new(3, EventKind::MealServed).actor(1).meal(4).with(|x| {
                x.meal_kind = Some(MealKind::Steak);
            }),
        ]
        .into_iter()
        .collect();
        let text = log.to_jsonl();
        assert_eq!(EventLog::from_jsonl(&text).unwrap(), log);
    }
}
