//! Object-centric event logs: in-memory model, JSON ingestion and validation.
//!
//! The array order of events realizes the log's total order. Timestamps and
//! object attributes are carried along for round-tripping but never consulted.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};
use thiserror::Error;

/// Activity label shared between log events and net transitions.
pub type Activity = Arc<str>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectType(Arc<str>);

impl ObjectType {
    pub fn new(name: &str) -> Self {
        ObjectType(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ObjectType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A typed object. Ordering and equality consider the id first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectId {
    id: Arc<str>,
    otype: ObjectType,
}

impl ObjectId {
    pub fn new(id: &str, otype: ObjectType) -> Self {
        ObjectId {
            id: Arc::from(id),
            otype,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn otype(&self) -> &ObjectType {
        &self.otype
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub id: String,
    pub activity: Activity,
    /// Sorted, duplicate-free.
    pub omap: Vec<ObjectId>,
    pub index: usize,
    pub timestamp: Option<String>,
    /// Unrecognized event fields, preserved verbatim.
    pub extra: Map<String, Value>,
}

impl Event {
    /// Objects of `otype` involved in this event.
    pub fn objects_of<'a>(&'a self, otype: &'a ObjectType) -> impl Iterator<Item = &'a ObjectId> + 'a {
        self.omap.iter().filter(move |o| o.otype() == otype)
    }

    pub fn object_types(&self) -> BTreeSet<ObjectType> {
        self.omap.iter().map(|o| o.otype().clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectRecord {
    pub object: ObjectId,
    /// Attributes from the OCEL standard; opaque to the engine.
    pub attributes: Option<Map<String, Value>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation(pub String);

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("malformed log JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown object {object} in event {event}")]
    UnknownObject { event: String, object: String },
    #[error("invalid log: {}", join(.0))]
    Invalid(Vec<Violation>),
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.0.as_str())
        .collect::<Vec<_>>()
        .join("; ")
}

/// An object-centric event log. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    object_types: Vec<ObjectType>,
    objects: Vec<ObjectRecord>,
    events: Vec<Event>,
    event_index: HashMap<String, usize>,
}

impl EventLog {
    /// Builds a log and validates it.
    pub fn from_parts(
        object_types: Vec<ObjectType>,
        objects: Vec<ObjectRecord>,
        events: Vec<Event>,
    ) -> Result<Self, LogError> {
        let log = Self::from_parts_unchecked(object_types, objects, events);
        let violations = validate_log(&log);
        if violations.is_empty() {
            Ok(log)
        } else {
            Err(LogError::Invalid(violations))
        }
    }

    /// Builds a log without checking invariants; pair with [`validate_log`].
    pub fn from_parts_unchecked(
        object_types: Vec<ObjectType>,
        objects: Vec<ObjectRecord>,
        mut events: Vec<Event>,
    ) -> Self {
        let mut event_index = HashMap::with_capacity(events.len());
        for (i, e) in events.iter_mut().enumerate() {
            e.omap.sort();
            e.omap.dedup();
            event_index.entry(e.id.clone()).or_insert(i);
        }
        EventLog {
            object_types,
            objects,
            events,
            event_index,
        }
    }

    pub fn object_types(&self) -> &[ObjectType] {
        &self.object_types
    }

    pub fn objects(&self) -> &[ObjectRecord] {
        &self.objects
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn event(&self, idx: usize) -> &Event {
        &self.events[idx]
    }

    pub fn event_position(&self, id: &str) -> Option<usize> {
        self.event_index.get(id).copied()
    }

    /// Distinct activity labels, sorted.
    pub fn activities(&self) -> BTreeSet<Activity> {
        self.events.iter().map(|e| e.activity.clone()).collect()
    }
}

/// Checks every structural invariant of the log and names each offender.
pub fn validate_log(log: &EventLog) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut types = BTreeSet::new();
    for t in &log.object_types {
        if t.as_str().is_empty() {
            out.push(Violation("empty object type name".into()));
        }
        if !types.insert(t) {
            out.push(Violation(format!("duplicate object type {t}")));
        }
    }

    let mut known: HashMap<&str, &ObjectType> = HashMap::new();
    for rec in &log.objects {
        let o = &rec.object;
        if o.id().is_empty() {
            out.push(Violation("empty object id".into()));
        }
        if known.insert(o.id(), o.otype()).is_some() {
            out.push(Violation(format!("duplicate object id {o}")));
        }
        if !types.contains(o.otype()) {
            out.push(Violation(format!(
                "object {o} has undeclared type {}",
                o.otype()
            )));
        }
    }

    let mut seen = BTreeSet::new();
    for (i, e) in log.events.iter().enumerate() {
        if e.id.is_empty() {
            out.push(Violation(format!("event at position {i} has an empty id")));
        }
        if !seen.insert(e.id.as_str()) {
            out.push(Violation(format!("duplicate event id {}", e.id)));
        }
        if e.index != i {
            out.push(Violation(format!(
                "event {} has index {} but sits at position {i}",
                e.id, e.index
            )));
        }
        if e.omap.is_empty() {
            out.push(Violation(format!("event {} has an empty omap", e.id)));
        }
        for o in &e.omap {
            match known.get(o.id()) {
                None => out.push(Violation(format!(
                    "unknown object {o} in event {}",
                    e.id
                ))),
                Some(t) if *t != o.otype() => out.push(Violation(format!(
                    "object {o} used as {} in event {} but declared as {t}",
                    o.otype(),
                    e.id
                ))),
                Some(_) => {}
            }
        }
    }
    out
}

// ---- JSON wire format ----

/// Object map value: either a bare type name or `{"type": ..., <attributes>}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum ObjectEntry {
    Type(String),
    Detailed {
        #[serde(rename = "type")]
        otype: String,
        #[serde(flatten)]
        attributes: Map<String, Value>,
    },
}

/// JSON object whose duplicate keys are kept rather than collapsed.
#[derive(Debug, Default)]
struct ObjectEntries(Vec<(String, ObjectEntry)>);

impl<'de> Deserialize<'de> for ObjectEntries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct EntriesVisitor;
        impl<'de> Visitor<'de> for EntriesVisitor {
            type Value = ObjectEntries;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from object id to object type")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut entries = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, ObjectEntry>()? {
                    entries.push((k, v));
                }
                Ok(ObjectEntries(entries))
            }
        }
        d.deserialize_map(EntriesVisitor)
    }
}

impl Serialize for ObjectEntries {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct EventDoc {
    id: String,
    activity: String,
    omap: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    timestamp: Option<String>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LogDoc {
    object_types: Vec<String>,
    objects: ObjectEntries,
    events: Vec<EventDoc>,
}

/// Parses a log from its JSON document and validates it.
pub fn parse_log(input: &[u8]) -> Result<EventLog, LogError> {
    let doc: LogDoc = serde_json::from_slice(input)?;
    let object_types: Vec<ObjectType> = doc.object_types.iter().map(|t| ObjectType::new(t)).collect();

    let mut objects = Vec::with_capacity(doc.objects.0.len());
    let mut lookup: HashMap<String, ObjectId> = HashMap::new();
    for (id, entry) in doc.objects.0 {
        let (otype, attributes) = match entry {
            ObjectEntry::Type(t) => (t, None),
            ObjectEntry::Detailed { otype, attributes } => (otype, Some(attributes)),
        };
        let object = ObjectId::new(&id, ObjectType::new(&otype));
        lookup.entry(id).or_insert_with(|| object.clone());
        objects.push(ObjectRecord { object, attributes });
    }

    let mut events = Vec::with_capacity(doc.events.len());
    for (index, e) in doc.events.into_iter().enumerate() {
        let mut omap = Vec::with_capacity(e.omap.len());
        for oid in &e.omap {
            match lookup.get(oid) {
                Some(o) => omap.push(o.clone()),
                None => {
                    return Err(LogError::UnknownObject {
                        event: e.id,
                        object: oid.clone(),
                    })
                }
            }
        }
        events.push(Event {
            id: e.id,
            activity: Arc::from(e.activity.as_str()),
            omap,
            index,
            timestamp: e.timestamp,
            extra: e.extra,
        });
    }

    EventLog::from_parts(object_types, objects, events)
}

/// Serializes a log to its canonical JSON document (objects sorted by id,
/// omaps sorted, pretty-printed).
pub fn serialize_log(log: &EventLog) -> String {
    let mut objects: Vec<(String, ObjectEntry)> = log
        .objects
        .iter()
        .map(|r| {
            let otype = r.object.otype().as_str().to_string();
            let entry = match &r.attributes {
                None => ObjectEntry::Type(otype),
                Some(a) => ObjectEntry::Detailed {
                    otype,
                    attributes: a.clone(),
                },
            };
            (r.object.id().to_string(), entry)
        })
        .collect();
    objects.sort_by(|a, b| a.0.cmp(&b.0));
    let doc = LogDoc {
        object_types: log.object_types.iter().map(|t| t.as_str().to_string()).collect(),
        objects: ObjectEntries(objects),
        events: log
            .events
            .iter()
            .map(|e| EventDoc {
                id: e.id.clone(),
                activity: e.activity.to_string(),
                omap: e.omap.iter().map(|o| o.id().to_string()).collect(),
                timestamp: e.timestamp.clone(),
                extra: e.extra.clone(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("log document serializes")
}

/// Convenience constructor used by generators and tests: events are given as
/// `(id, activity, object ids)` and objects as `(id, type)`.
pub fn build_log(
    object_types: &[&str],
    objects: &[(&str, &str)],
    events: &[(&str, &str, &[&str])],
) -> Result<EventLog, LogError> {
    let types: Vec<ObjectType> = object_types.iter().map(|t| ObjectType::new(t)).collect();
    let mut lookup = BTreeMap::new();
    let records: Vec<ObjectRecord> = objects
        .iter()
        .map(|(id, t)| {
            let o = ObjectId::new(id, ObjectType::new(t));
            lookup.insert(id.to_string(), o.clone());
            ObjectRecord {
                object: o,
                attributes: None,
            }
        })
        .collect();
    let mut evs = Vec::with_capacity(events.len());
    for (index, (id, act, omap)) in events.iter().enumerate() {
        let mut objs = Vec::with_capacity(omap.len());
        for oid in omap.iter() {
            let o = lookup.get(*oid).ok_or_else(|| LogError::UnknownObject {
                event: id.to_string(),
                object: oid.to_string(),
            })?;
            objs.push(o.clone());
        }
        evs.push(Event {
            id: id.to_string(),
            activity: Arc::from(*act),
            omap: objs,
            index,
            timestamp: None,
            extra: Map::new(),
        });
    }
    EventLog::from_parts(types, records, evs)
}
