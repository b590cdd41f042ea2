//! Enabled model activities of a context, by replaying the visible binding
//! sequences recorded in the log and searching breadth-first through silent
//! transitions.
//!
//! Each replay state is a marking plus a cursor into the binding sequence.
//! From a state, the next recorded binding is fired when enabled; otherwise
//! (and always once the sequence is exhausted) every enabled silent binding
//! is explored. Labels enabled in any fully replayed state form the result.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::{ContextIndex, EventObjectGraph};
use crate::ocel::{Activity, Event, EventLog, ObjectId, ObjectType};
use crate::ocpn::{
    binding_enabled, bindings_of, enabled_visible_labels, execute_binding, initial_marking_for, is_final,
    AcceptingOcpn, Binding, Marking, VariableEnumeration,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SilentVariableMode {
    Singleton,
    Subsets,
}

impl fmt::Display for SilentVariableMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SilentVariableMode::Singleton => "singleton",
            SilentVariableMode::Subsets => "subsets",
        })
    }
}

impl FromStr for SilentVariableMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "singleton" => Ok(SilentVariableMode::Singleton),
            "subsets" => Ok(SilentVariableMode::Subsets),
            other => Err(format!("unknown silent variable mode {other}")),
        }
    }
}

#[derive(Debug, Error)]
#[error("invalid replay configuration: {0}")]
pub struct ConfigError(String);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayConfig {
    /// Distinct replay states explored per binding sequence.
    pub max_states: usize,
    pub silent_variable_mode: SilentVariableMode,
    /// Candidates considered per variable type in `subsets` mode.
    pub subset_cap: usize,
    /// Also explore silent moves when the next recorded binding is enabled.
    #[serde(default)]
    pub strict_silent: bool,
    /// Enqueue successors in reverse order. Results must not change.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reverse_successors: bool,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        ReplayConfig {
            max_states: 100_000,
            silent_variable_mode: SilentVariableMode::Singleton,
            subset_cap: 8,
            strict_silent: false,
            reverse_successors: false,
        }
    }
}

impl ReplayConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_states == 0 {
            return Err(ConfigError("max_states must be positive".into()));
        }
        if self.subset_cap == 0 {
            return Err(ConfigError("subset_cap must be positive".into()));
        }
        Ok(())
    }

    fn enumeration(&self) -> VariableEnumeration {
        match self.silent_variable_mode {
            SilentVariableMode::Singleton => VariableEnumeration::Singleton,
            SilentVariableMode::Subsets => VariableEnumeration::Subsets { cap: self.subset_cap },
        }
    }
}

/// A visible binding recorded by one event: its activity and objects by type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VisibleBindingStep {
    pub activity: Activity,
    pub objects: BTreeMap<ObjectType, BTreeSet<ObjectId>>,
}

impl VisibleBindingStep {
    pub fn of_event(event: &Event) -> Self {
        let mut objects: BTreeMap<ObjectType, BTreeSet<ObjectId>> = BTreeMap::new();
        for o in &event.omap {
            objects.entry(o.otype().clone()).or_default().insert(o.clone());
        }
        VisibleBindingStep {
            activity: event.activity.clone(),
            objects,
        }
    }

    /// The binding this step denotes in `net`, if its activity resolves to a
    /// transition. The binding may still be ill-formed (and thus never enabled).
    pub fn to_binding(&self, net: &AcceptingOcpn) -> Option<Binding> {
        let types: BTreeSet<ObjectType> = self.objects.keys().cloned().collect();
        let t = net.resolve(&self.activity, &types)?;
        let mut b = Binding::new(t);
        for otype in net.tpl(t) {
            if let Some(objs) = self.objects.get(&otype) {
                b.objects.insert(otype, objs.clone());
            }
        }
        Some(b)
    }
}

/// Bindings of the preset's events in log order.
pub fn binding_sequence_of_preset(log: &EventLog, graph: &EventObjectGraph, e: usize) -> Vec<VisibleBindingStep> {
    graph
        .preset(e)
        .ones()
        .map(|i| VisibleBindingStep::of_event(log.event(i)))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplayOutcome {
    pub enabled: BTreeSet<Activity>,
    /// Some state consumed the whole binding sequence.
    pub replayed: bool,
    /// Some fully replayed state, after firing the event's own binding and
    /// silent moves, reaches a final marking.
    pub reached_final: bool,
    pub truncated: bool,
    /// Markings of fully replayed states, closed under silent moves.
    pub states: BTreeSet<Marking>,
}

impl ReplayOutcome {
    fn merge(&mut self, other: &ReplayOutcome) {
        self.enabled.extend(other.enabled.iter().cloned());
        self.replayed |= other.replayed;
        self.reached_final |= other.reached_final;
        self.truncated |= other.truncated;
        self.states.extend(other.states.iter().cloned());
    }
}

type Universe = BTreeMap<ObjectType, Vec<ObjectId>>;

/// Bounded breadth-first frontier with deduplication.
struct Frontier<K> {
    seen: HashSet<K>,
    queue: VecDeque<K>,
    cap: usize,
    truncated: bool,
}

impl<K: std::hash::Hash + Eq + Clone> Frontier<K> {
    fn new(cap: usize) -> Self {
        Frontier {
            seen: HashSet::new(),
            queue: VecDeque::new(),
            cap,
            truncated: false,
        }
    }

    fn push(&mut self, key: K) {
        if self.seen.contains(&key) {
            return;
        }
        if self.seen.len() >= self.cap {
            self.truncated = true;
            return;
        }
        self.seen.insert(key.clone());
        self.queue.push_back(key);
    }

    fn pop(&mut self) -> Option<K> {
        self.queue.pop_front()
    }
}

fn silent_successors(net: &AcceptingOcpn, m: &Marking, universe: &Universe, cfg: &ReplayConfig) -> Vec<Marking> {
    let mut out: Vec<Marking> = net
        .silent_transitions()
        .flat_map(|t| bindings_of(net, m, t, universe, cfg.enumeration()))
        .map(|b| execute_binding(net, m, &b).expect("enumerated bindings are enabled"))
        .collect();
    if cfg.reverse_successors {
        out.reverse();
    }
    out
}

/// Replays one binding sequence from `initial`.
///
/// `steps[i] == None` marks a step whose activity has no transition; replay
/// cannot pass it. `own` is the event's own binding, used only for the
/// `reached_final` diagnostic.
pub fn replay_sequence(
    net: &AcceptingOcpn,
    initial: Marking,
    steps: &[Option<Binding>],
    own: Option<&Binding>,
    universe: &Universe,
    cfg: &ReplayConfig,
) -> ReplayOutcome {
    let mut out = ReplayOutcome::default();
    let mut frontier: Frontier<(Marking, usize)> = Frontier::new(cfg.max_states);
    frontier.push((initial, 0));

    while let Some((m, cursor)) = frontier.pop() {
        let mut successors = Vec::new();
        let next = steps
            .get(cursor)
            .and_then(Option::as_ref)
            .filter(|b| binding_enabled(net, &m, b));
        if cursor == steps.len() {
            out.enabled.extend(enabled_visible_labels(net, &m));
            out.states.insert(m.clone());
        }
        if let Some(b) = next {
            successors.push((execute_binding(net, &m, b).expect("checked enabled"), cursor + 1));
        }
        if next.is_none() || cfg.strict_silent {
            successors.extend(silent_successors(net, &m, universe, cfg).into_iter().map(|s| (s, cursor)));
        }
        if cfg.reverse_successors {
            successors.reverse();
        }
        for s in successors {
            frontier.push(s);
        }
    }
    out.replayed = !out.states.is_empty();
    out.truncated = frontier.truncated;

    if let Some(own) = own {
        let mut closure: Frontier<Marking> = Frontier::new(cfg.max_states);
        for m in &out.states {
            if binding_enabled(net, m, own) {
                closure.push(execute_binding(net, m, own).expect("checked enabled"));
            }
        }
        while let Some(m) = closure.pop() {
            if is_final(net, &m) {
                out.reached_final = true;
                break;
            }
            for s in silent_successors(net, &m, universe, cfg) {
                closure.push(s);
            }
        }
        out.truncated |= closure.truncated;
    }
    out
}

/// A binding sequence with objects renamed by order of first appearance.
type RenamedSequence = Vec<(Activity, Vec<(ObjectType, Vec<usize>)>)>;

/// Replay data prepared for one event: its preset's bindings, its own
/// binding, and the initial marking over every object it depends on.
struct PreparedEvent {
    initial: Marking,
    steps: Vec<Option<Binding>>,
    own: Option<Binding>,
    universe: Universe,
    key: RenamedSequence,
}

fn prepare(net: &AcceptingOcpn, log: &EventLog, graph: &EventObjectGraph, e: usize) -> PreparedEvent {
    let mut sequence = binding_sequence_of_preset(log, graph, e);
    sequence.push(VisibleBindingStep::of_event(log.event(e)));

    // Objects renamed by first appearance: sequences equal up to renaming
    // replay identically.
    let mut names: HashMap<&ObjectId, usize> = HashMap::new();
    let mut order: Vec<&ObjectId> = Vec::new();
    let key = sequence
        .iter()
        .map(|step| {
            let objs = step
                .objects
                .iter()
                .map(|(t, set)| {
                    let renamed = set
                        .iter()
                        .map(|o| {
                            *names.entry(o).or_insert_with(|| {
                                order.push(o);
                                order.len() - 1
                            })
                        })
                        .collect();
                    (t.clone(), renamed)
                })
                .collect();
            (step.activity.clone(), objs)
        })
        .collect();

    let objects: Vec<&ObjectId> = order
        .into_iter()
        .filter(|o| net.initial_place(o.otype()).is_some())
        .collect();
    let initial = initial_marking_for(net, objects.iter().copied()).expect("objects filtered by initial place");
    let mut universe: Universe = BTreeMap::new();
    for o in &objects {
        universe.entry(o.otype().clone()).or_default().push((*o).clone());
    }
    for v in universe.values_mut() {
        v.sort();
    }

    let own_step = sequence.pop().expect("own step pushed above");
    let steps = sequence.iter().map(|s| s.to_binding(net)).collect();
    PreparedEvent {
        initial,
        steps,
        own: own_step.to_binding(net),
        universe,
        key,
    }
}

/// Replay result for a group of events sharing a context.
#[derive(Debug, Clone, Default)]
pub struct GroupReplay {
    /// Union over the group's events.
    pub outcome: ReplayOutcome,
    /// Per member event, the outcome of its own binding sequence.
    pub per_event: Vec<(usize, ReplayOutcome)>,
}

/// Enabled model activities for the events in `members` (one context group).
/// Sequences equal up to object renaming are replayed once; `states` only
/// holds markings of the first event of each such class.
pub fn replay_group(
    net: &AcceptingOcpn,
    log: &EventLog,
    graph: &EventObjectGraph,
    members: &[usize],
    cfg: &ReplayConfig,
) -> GroupReplay {
    let mut memo: HashMap<RenamedSequence, ReplayOutcome> = HashMap::new();
    let mut result = GroupReplay::default();
    for &e in members {
        let prepared = prepare(net, log, graph, e);
        let outcome = match memo.get(&prepared.key) {
            Some(o) => {
                let mut o = o.clone();
                o.states.clear();
                o
            }
            None => {
                let o = replay_sequence(
                    net,
                    prepared.initial,
                    &prepared.steps,
                    prepared.own.as_ref(),
                    &prepared.universe,
                    cfg,
                );
                memo.insert(prepared.key, o.clone());
                o
            }
        };
        result.outcome.merge(&outcome);
        result.per_event.push((e, outcome));
    }
    result
}

pub fn enabled_model_activities(
    net: &AcceptingOcpn,
    log: &EventLog,
    graph: &EventObjectGraph,
    members: &[usize],
    cfg: &ReplayConfig,
) -> ReplayOutcome {
    replay_group(net, log, graph, members, cfg).outcome
}

/// Context-reachable markings as approximated by replaying the group's own
/// binding sequences.
pub fn states_for_context(
    net: &AcceptingOcpn,
    log: &EventLog,
    graph: &EventObjectGraph,
    members: &[usize],
    cfg: &ReplayConfig,
) -> BTreeSet<Marking> {
    replay_group(net, log, graph, members, cfg).outcome.states
}

/// Replays every context group, in the canonical group order.
pub fn replay_all(
    net: &AcceptingOcpn,
    log: &EventLog,
    graph: &EventObjectGraph,
    index: &ContextIndex,
    cfg: &ReplayConfig,
) -> Vec<GroupReplay> {
    let groups: Vec<&Vec<usize>> = index.groups().values().collect();
    groups
        .par_iter()
        .map(|members| replay_group(net, log, graph, members, cfg))
        .collect()
}
