use serde::{Deserialize, Serialize};

use crate::canonical::{self, CanonicalError, Value};
use crate::Tick;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub tick: Tick,
    pub actor: String,
    pub kind: String,
    pub payload: Value,
}

impl Event {
    pub fn canonical_bytes(&self) -> Vec<u8> {
        canonical::canonical_serialize(self).expect("event is canonical")
    }

    /// Decode the payload into a typed record.
    pub fn payload_as<T: serde::de::DeserializeOwned>(&self) -> Result<T, CanonicalError> {
        canonical::from_value(self.payload.clone())
    }
}

#[derive(Serialize)]
struct Sent<'a, M: Serialize> {
    id: u64,
    from: &'a str,
    to: &'a str,
    message: &'a M,
}

/// Payload of a `deliver` event; the body is only logged on `send`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delivered {
    pub id: u64,
    pub from: String,
    pub to: String,
    pub kind: String,
}

/// Totally ordered record of everything that happened in a run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    events: Vec<Event>,
    next_message: u64,
}

impl EventLog {
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn last(&self) -> Option<&Event> {
        self.events.last()
    }

    pub fn of_kind<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn record<T: Serialize + ?Sized>(&mut self, tick: Tick, actor: &str, kind: &str, payload: &T) {
        let payload = canonical::to_value(payload).expect("payload is canonical");
        self.events.push(Event {
            seq: self.events.len() as u64,
            tick,
            actor: actor.to_owned(),
            kind: kind.to_owned(),
            payload,
        });
    }

    pub(crate) fn send<M: Serialize>(&mut self, tick: Tick, from: &str, to: &str, message: &M) -> u64 {
        let id = self.next_message;
        self.next_message += 1;
        self.record(tick, from, "send", &Sent { id, from, to, message });
        id
    }

    pub(crate) fn deliver(&mut self, tick: Tick, id: u64, from: &str, to: &str, kind: &str) {
        let d = Delivered {
            id,
            from: from.to_owned(),
            to: to.to_owned(),
            kind: kind.to_owned(),
        };
        self.record(tick, to, "deliver", &d);
    }

    /// A synchronous hop: sent and delivered back to back.
    pub(crate) fn hop<M: Serialize>(&mut self, tick: Tick, from: &str, to: &str, kind: &str, message: &M) {
        let id = self.send(tick, from, to, message);
        self.deliver(tick, id, from, to, kind);
    }

    /// One canonical event per line.
    pub fn to_bytes(&self) -> Vec<u8> {
        canonical::to_lines(&self.events).expect("events are canonical")
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CanonicalError> {
        let events: Vec<Event> = canonical::from_lines(bytes)?;
        let next_message = events.iter().filter(|e| e.kind == "send").count() as u64;
        Ok(EventLog { events, next_message })
    }
}
