//! Event-object graph, event presets and event contexts.
//!
//! Two events are connected when the earlier one shares an object with the
//! later one. The preset of an event is the set of its ancestors in that
//! graph; its context collects, per object type, the multiset of activity
//! prefixes (restricted to the preset) of every object touched by the preset
//! or the event itself.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ocel::{Activity, EventLog, ObjectId, ObjectType};

#[derive(Debug, Error)]
pub enum ContextError {
    #[error("unknown event {0}")]
    UnknownEvent(String),
}

/// Event-object graph of a log together with the memoized presets.
#[derive(Debug, Clone)]
pub struct EventObjectGraph {
    /// For each event, the immediately previous occurrence of each of its
    /// objects. Their transitive closure equals the full edge relation's.
    direct: Vec<Vec<usize>>,
    presets: Vec<FixedBitSet>,
    occurrences: BTreeMap<ObjectId, Vec<usize>>,
}

pub fn build_graph(log: &EventLog) -> EventObjectGraph {
    let n = log.len();
    let mut last: HashMap<&ObjectId, usize> = HashMap::new();
    let mut occurrences: BTreeMap<ObjectId, Vec<usize>> = BTreeMap::new();
    let mut direct = Vec::with_capacity(n);
    for (i, e) in log.events().iter().enumerate() {
        let mut preds: Vec<usize> = e.omap.iter().filter_map(|o| last.insert(o, i)).collect();
        preds.sort_unstable();
        preds.dedup();
        direct.push(preds);
        for o in &e.omap {
            occurrences.entry(o.clone()).or_default().push(i);
        }
    }

    // Log order is a topological order, so every predecessor's preset is
    // final by the time it is merged.
    let mut presets: Vec<FixedBitSet> = Vec::with_capacity(n);
    for preds in &direct {
        let mut set = FixedBitSet::with_capacity(n);
        for &p in preds {
            set.insert(p);
            set.union_with(&presets[p]);
        }
        presets.push(set);
    }

    EventObjectGraph {
        direct,
        presets,
        occurrences,
    }
}

impl EventObjectGraph {
    pub fn len(&self) -> usize {
        self.direct.len()
    }

    pub fn is_empty(&self) -> bool {
        self.direct.is_empty()
    }

    /// Immediate predecessors along each shared object.
    pub fn direct_predecessors(&self, e: usize) -> &[usize] {
        &self.direct[e]
    }

    /// Ancestors of `e` as a bit set over event positions.
    pub fn preset(&self, e: usize) -> &FixedBitSet {
        &self.presets[e]
    }

    /// Ancestors of `e` in log order.
    pub fn preset_positions(&self, e: usize) -> Vec<usize> {
        self.presets[e].ones().collect()
    }

    /// True iff `a` precedes `b` and they share an object.
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a < b
            && self
                .occurrences
                .values()
                .any(|occ| occ.binary_search(&a).is_ok() && occ.binary_search(&b).is_ok())
    }

    /// The full edge relation, materialized on demand.
    pub fn edges(&self) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        for occ in self.occurrences.values() {
            for (i, &a) in occ.iter().enumerate() {
                for &b in &occ[i + 1..] {
                    out.insert((a, b));
                }
            }
        }
        out
    }
}

/// Preset of the event with id `id`, as event positions in log order.
pub fn event_preset(log: &EventLog, graph: &EventObjectGraph, id: &str) -> Result<Vec<usize>, ContextError> {
    let e = log
        .event_position(id)
        .ok_or_else(|| ContextError::UnknownEvent(id.to_string()))?;
    Ok(graph.preset_positions(e))
}

/// Activities of the preset's events involving `object`, in log order.
pub fn object_prefix(log: &EventLog, preset: &FixedBitSet, object: &ObjectId) -> Vec<Activity> {
    preset
        .ones()
        .map(|i| log.event(i))
        .filter(|e| e.omap.binary_search(object).is_ok())
        .map(|e| e.activity.clone())
        .collect()
}

/// Per object type, a multiset of activity sequences. Types without any
/// sequence are absent, which makes the derived equality canonical.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Context {
    per_type: BTreeMap<ObjectType, BTreeMap<Vec<Activity>, usize>>,
}

impl Context {
    pub fn from_prefixes<I>(prefixes: I) -> Self
    where
        I: IntoIterator<Item = (ObjectType, Vec<Activity>)>,
    {
        let mut per_type: BTreeMap<ObjectType, BTreeMap<Vec<Activity>, usize>> = BTreeMap::new();
        for (t, seq) in prefixes {
            *per_type.entry(t).or_default().entry(seq).or_default() += 1;
        }
        Context { per_type }
    }

    /// Sequences and multiplicities for `otype`, sorted.
    pub fn sequences(&self, otype: &ObjectType) -> Option<&BTreeMap<Vec<Activity>, usize>> {
        self.per_type.get(otype)
    }

    pub fn object_types(&self) -> impl Iterator<Item = &ObjectType> {
        self.per_type.keys()
    }

    /// UTF-8 JSON with sorted type names and, per type, sequences in
    /// lexicographic order each paired with its multiplicity.
    pub fn canonical(&self) -> String {
        #[derive(Serialize)]
        struct Entry<'a>(Vec<&'a str>, usize);
        let doc: BTreeMap<&str, Vec<Entry<'_>>> = self
            .per_type
            .iter()
            .map(|(t, seqs)| {
                (
                    t.as_str(),
                    seqs.iter()
                        .map(|(s, &n)| Entry(s.iter().map(|a| &**a).collect(), n))
                        .collect(),
                )
            })
            .collect();
        serde_json::to_string(&doc).expect("context serializes")
    }

    /// First 16 hex digits of the SHA-256 of [`Context::canonical`].
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonical().as_bytes());
        hex::encode(&hash[..8])
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (t, seqs)) in self.per_type.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}: [")?;
            for (j, (seq, &n)) in seqs.iter().enumerate() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                let names: Vec<&str> = seq.iter().map(|a| &**a).collect();
                write!(f, "<{}>", names.join(", "))?;
                if n > 1 {
                    write!(f, "^{n}")?;
                }
            }
            f.write_str("]")?;
        }
        Ok(())
    }
}

pub fn context_of_event(log: &EventLog, graph: &EventObjectGraph, e: usize) -> Context {
    let mut prefixes: BTreeMap<&ObjectId, Vec<Activity>> = BTreeMap::new();
    for i in graph.preset(e).ones() {
        let ev = log.event(i);
        for o in &ev.omap {
            prefixes.entry(o).or_default().push(ev.activity.clone());
        }
    }
    for o in &log.event(e).omap {
        prefixes.entry(o).or_default();
    }
    Context::from_prefixes(prefixes.into_iter().map(|(o, seq)| (o.otype().clone(), seq)))
}

/// Contexts of every event and the partition of events by context.
#[derive(Debug, Clone)]
pub struct ContextIndex {
    contexts: Vec<Context>,
    groups: BTreeMap<Context, Vec<usize>>,
    group_of: Vec<usize>,
}

impl ContextIndex {
    pub fn new(log: &EventLog, graph: &EventObjectGraph) -> Self {
        let contexts: Vec<Context> = (0..log.len())
            .into_par_iter()
            .map(|e| context_of_event(log, graph, e))
            .collect();
        let mut groups: BTreeMap<Context, Vec<usize>> = BTreeMap::new();
        for (e, c) in contexts.iter().enumerate() {
            groups.entry(c.clone()).or_default().push(e);
        }
        let rank: HashMap<&Context, usize> = groups.keys().enumerate().map(|(i, c)| (c, i)).collect();
        let group_of = contexts.iter().map(|c| rank[c]).collect();
        ContextIndex {
            contexts,
            groups,
            group_of,
        }
    }

    pub fn context(&self, e: usize) -> &Context {
        &self.contexts[e]
    }

    pub fn groups(&self) -> &BTreeMap<Context, Vec<usize>> {
        &self.groups
    }

    /// Rank of the event's group in the canonical order of `groups()`.
    pub fn group_of(&self, e: usize) -> usize {
        self.group_of[e]
    }

    /// Events sharing the context of `e`, in log order.
    pub fn group_members(&self, e: usize) -> &[usize] {
        &self.groups[&self.contexts[e]]
    }

    pub fn enabled_log_activities(&self, log: &EventLog, e: usize) -> BTreeSet<Activity> {
        self.group_members(e)
            .iter()
            .map(|&i| log.event(i).activity.clone())
            .collect()
    }
}

pub fn group_by_context(log: &EventLog, graph: &EventObjectGraph) -> BTreeMap<Context, Vec<usize>> {
    ContextIndex::new(log, graph).groups
}

pub fn enabled_log_activities(log: &EventLog, graph: &EventObjectGraph, e: usize) -> BTreeSet<Activity> {
    let target = context_of_event(log, graph, e);
    (0..log.len())
        .filter(|&i| context_of_event(log, graph, i) == target)
        .map(|i| log.event(i).activity.clone())
        .collect()
}
