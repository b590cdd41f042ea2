//! Fixtures, generators and brute-force oracles shared by the integration
//! tests. The oracles work on plain strings and JSON values so that they do
//! not reuse any of the crate's graph, context or replay code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Value};

use ocpm_conformance::ocel::{build_log, parse_log, EventLog};
use ocpm_conformance::ocpn::{parse_model, AcceptingOcpn};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture_bytes(name: &str) -> Vec<u8> {
    std::fs::read(fixture_path(name)).unwrap()
}

pub fn fixture_json(name: &str) -> Value {
    serde_json::from_slice(&fixture_bytes(name)).unwrap()
}

pub fn l1() -> EventLog {
    parse_log(&fixture_bytes("l1.json")).unwrap()
}

pub fn ocpn1() -> AcceptingOcpn {
    parse_model(&fixture_bytes("ocpn1.json")).unwrap()
}

pub fn restricted() -> AcceptingOcpn {
    parse_model(&fixture_bytes("restricted.json")).unwrap()
}

pub fn flower_l1() -> AcceptingOcpn {
    parse_model(&fixture_bytes("flower_l1.json")).unwrap()
}

pub fn ratio(n: usize, d: usize) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// A log reduced to what the oracles need.
#[derive(Debug, Clone)]
pub struct PlainLog {
    pub object_types: BTreeMap<String, String>,
    /// `(id, activity, objects)` in log order.
    pub events: Vec<(String, String, Vec<String>)>,
}

impl PlainLog {
    pub fn from_json(doc: &Value) -> Self {
        let object_types = doc["objects"]
            .as_object()
            .unwrap()
            .iter()
            .map(|(id, v)| {
                let t = v.as_str().map(str::to_string).unwrap_or_else(|| v["type"].as_str().unwrap().to_string());
                (id.clone(), t)
            })
            .collect();
        let events = doc["events"]
            .as_array()
            .unwrap()
            .iter()
            .map(|e| {
                (
                    e["id"].as_str().unwrap().to_string(),
                    e["activity"].as_str().unwrap().to_string(),
                    e["omap"].as_array().unwrap().iter().map(|o| o.as_str().unwrap().to_string()).collect(),
                )
            })
            .collect();
        PlainLog { object_types, events }
    }

    /// Positions of all events from which `e` is reachable over shared objects.
    pub fn preset(&self, e: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![e];
        while let Some(x) = stack.pop() {
            for y in 0..x {
                let shares = self.events[y].2.iter().any(|o| self.events[x].2.contains(o));
                if shares && seen.insert(y) {
                    stack.push(y);
                }
            }
        }
        seen
    }

    /// Per type, the sorted list of activity prefixes of the relevant objects.
    pub fn context(&self, e: usize) -> BTreeMap<String, Vec<Vec<String>>> {
        let preset = self.preset(e);
        let mut objects: BTreeSet<&String> = self.events[e].2.iter().collect();
        for &p in &preset {
            objects.extend(self.events[p].2.iter());
        }
        let mut ctx: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
        for o in objects {
            let prefix = preset
                .iter()
                .filter(|&&p| self.events[p].2.contains(o))
                .map(|&p| self.events[p].1.clone())
                .collect();
            ctx.entry(self.object_types[o].clone()).or_default().push(prefix);
        }
        for v in ctx.values_mut() {
            v.sort();
        }
        ctx
    }

    /// Enabled log activities: activities of all events with an equal context.
    pub fn enabled_log(&self) -> Vec<BTreeSet<String>> {
        let contexts: Vec<_> = (0..self.events.len()).map(|e| self.context(e)).collect();
        contexts
            .iter()
            .map(|c| {
                contexts
                    .iter()
                    .zip(&self.events)
                    .filter(|(d, _)| *d == c)
                    .map(|(_, ev)| ev.1.clone())
                    .collect()
            })
            .collect()
    }
}

/// Fitness and precision from per-event enabled sets; replayable means the
/// model set is non-empty.
pub fn metrics_from_sets(en_l: &[BTreeSet<String>], en_m: &[BTreeSet<String>]) -> (BigRational, Option<BigRational>) {
    let n = en_l.len();
    let mut fit = BigRational::zero();
    let mut prec = BigRational::zero();
    let mut replayable = 0;
    for (l, m) in en_l.iter().zip(en_m) {
        let common = l.intersection(m).count();
        fit += ratio(common, l.len());
        if !m.is_empty() {
            replayable += 1;
            prec += ratio(common, m.len());
        }
    }
    let precision = (replayable > 0).then(|| prec / ratio(replayable, 1));
    (fit / ratio(n, 1), precision)
}

/// Flower oracle: every object of the context sits in its type's single
/// place, so a visible transition is enabled iff each of its input place
/// types is present in the context.
pub fn flower_oracle(log: &PlainLog, flower: &Value) -> (Vec<BTreeSet<String>>, Vec<BTreeSet<String>>) {
    let place_type: BTreeMap<&str, &str> = flower["places"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| (p["id"].as_str().unwrap(), p["object_type"].as_str().unwrap()))
        .collect();
    let mut transitions: Vec<(String, BTreeSet<&str>)> = Vec::new();
    for t in flower["transitions"].as_array().unwrap() {
        let Some(label) = t["label"].as_str() else { continue };
        let id = t["id"].as_str().unwrap();
        let types = flower["arcs"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|a| a["target"].as_str() == Some(id))
            .map(|a| place_type[a["source"].as_str().unwrap()])
            .collect();
        transitions.push((label.to_string(), types));
    }
    let en_l = log.enabled_log();
    let en_m = (0..log.events.len())
        .map(|e| {
            let ctx = log.context(e);
            transitions
                .iter()
                .filter(|(_, types)| types.iter().all(|t| ctx.contains_key(*t)))
                .map(|(l, _)| l.clone())
                .collect()
        })
        .collect();
    (en_l, en_m)
}

/// Replay oracle for nets without silent transitions and without variable
/// arcs: every event fires its unique transition with exactly one object per
/// type, so the state after a preset is unique.
pub fn deterministic_oracle(log: &PlainLog, net: &Value) -> (Vec<BTreeSet<String>>, Vec<BTreeSet<String>>) {
    let places: BTreeMap<&str, (&str, bool)> = net["places"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| {
            (
                p["id"].as_str().unwrap(),
                (p["object_type"].as_str().unwrap(), p["initial"].as_bool().unwrap()),
            )
        })
        .collect();
    let arcs: Vec<(&str, &str)> = net["arcs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| {
            assert!(!a["variable"].as_bool().unwrap(), "oracle handles non-variable arcs only");
            (a["source"].as_str().unwrap(), a["target"].as_str().unwrap())
        })
        .collect();
    let mut by_label: BTreeMap<String, (Vec<&str>, Vec<&str>)> = BTreeMap::new();
    for t in net["transitions"].as_array().unwrap() {
        let label = t["label"].as_str().expect("oracle handles visible transitions only");
        let id = t["id"].as_str().unwrap();
        let ins = arcs.iter().filter(|a| a.1 == id).map(|a| a.0).collect();
        let outs = arcs.iter().filter(|a| a.0 == id).map(|a| a.1).collect();
        by_label.insert(label.to_string(), (ins, outs));
    }
    let initial: BTreeMap<&str, &str> = places.iter().filter(|(_, v)| v.1).map(|(p, v)| (v.0, *p)).collect();

    let en_l = log.enabled_log();
    let en_m = (0..log.events.len())
        .map(|e| {
            let preset = log.preset(e);
            let mut objects: BTreeSet<&String> = log.events[e].2.iter().collect();
            for &p in &preset {
                objects.extend(log.events[p].2.iter());
            }
            let mut tokens: Vec<(&str, String)> = objects
                .iter()
                .filter_map(|o| initial.get(log.object_types[*o].as_str()).map(|p| (*p, (*o).clone())))
                .collect();
            for &p in &preset {
                let (_, activity, objs) = &log.events[p];
                let Some((ins, outs)) = by_label.get(activity) else { return BTreeSet::new() };
                let pick = |place: &str| -> Option<String> {
                    let t = places[place].0;
                    let mut of_type = objs.iter().filter(|o| log.object_types[*o] == t);
                    let o = of_type.next()?;
                    of_type.next().is_none().then(|| o.clone())
                };
                for &i in ins {
                    let Some(o) = pick(i) else { return BTreeSet::new() };
                    let Some(k) = tokens.iter().position(|(q, x)| *q == i && *x == o) else {
                        return BTreeSet::new();
                    };
                    tokens.remove(k);
                }
                for &out in outs {
                    let Some(o) = pick(out) else { return BTreeSet::new() };
                    tokens.push((out, o));
                }
            }
            by_label
                .iter()
                .filter(|(_, (ins, _))| {
                    let types: BTreeSet<&str> = ins.iter().map(|p| places[p].0).collect();
                    types.iter().all(|t| {
                        tokens.iter().any(|(_, o)| {
                            log.object_types[o] == *t
                                && ins.iter().filter(|p| places[**p].0 == *t).all(|p| tokens.iter().any(|(q, x)| q == p && x == o))
                        })
                    })
                })
                .map(|(l, _)| l.clone())
                .collect()
        })
        .collect();
    (en_l, en_m)
}

/// A state machine over one object type: places `s0..`, `s0` initial,
/// transitions with one input and one output place. `None` labels are silent.
#[derive(Debug, Clone)]
pub struct StateMachine {
    pub places: usize,
    pub finals: BTreeSet<usize>,
    pub transitions: Vec<(Option<String>, usize, usize)>,
}

impl StateMachine {
    pub fn random<R: Rng>(rng: &mut R, alphabet: &[&str]) -> Self {
        let places = rng.gen_range(1..=4);
        let mut finals: BTreeSet<usize> = (0..places).filter(|_| rng.gen_bool(0.4)).collect();
        if finals.is_empty() {
            finals.insert(places - 1);
        }
        let mut transitions = Vec::new();
        for a in alphabet {
            if rng.gen_bool(0.8) {
                transitions.push((Some(a.to_string()), rng.gen_range(0..places), rng.gen_range(0..places)));
            }
        }
        for _ in 0..rng.gen_range(0..=2) {
            transitions.push((None, rng.gen_range(0..places), rng.gen_range(0..places)));
        }
        StateMachine { places, finals, transitions }
    }

    pub fn to_json(&self) -> Value {
        let places: Vec<Value> = (0..self.places)
            .map(|p| json!({"id": format!("s{p}"), "object_type": "case", "initial": p == 0, "final": self.finals.contains(&p)}))
            .collect();
        let transitions: Vec<Value> = self
            .transitions
            .iter()
            .enumerate()
            .map(|(i, (l, _, _))| json!({"id": format!("t{i}"), "label": l}))
            .collect();
        let mut arcs = Vec::new();
        for (i, (_, from, to)) in self.transitions.iter().enumerate() {
            arcs.push(json!({"source": format!("s{from}"), "target": format!("t{i}"), "variable": false}));
            arcs.push(json!({"source": format!("t{i}"), "target": format!("s{to}"), "variable": false}));
        }
        json!({"object_types": ["case"], "places": places, "transitions": transitions, "arcs": arcs})
    }

    fn closure(&self, states: BTreeSet<usize>) -> BTreeSet<usize> {
        let mut out = states;
        loop {
            let next: BTreeSet<usize> = self
                .transitions
                .iter()
                .filter(|(l, from, _)| l.is_none() && out.contains(from))
                .map(|(_, _, to)| *to)
                .collect();
            let before = out.len();
            out.extend(next);
            if out.len() == before {
                return out;
            }
        }
    }

    /// Visible labels available after reading `prefix`, by NFA simulation.
    pub fn enabled_after(&self, prefix: &[String]) -> BTreeSet<String> {
        let mut states = self.closure(BTreeSet::from([0]));
        for a in prefix {
            let next = self
                .transitions
                .iter()
                .filter(|(l, from, _)| l.as_deref() == Some(a.as_str()) && states.contains(from))
                .map(|(_, _, to)| *to)
                .collect();
            states = self.closure(next);
        }
        self.transitions
            .iter()
            .filter(|(_, from, _)| states.contains(from))
            .filter_map(|(l, _, _)| l.clone())
            .collect()
    }

    /// A trace from a random walk, preferring stops in final places.
    pub fn random_trace<R: Rng>(&self, rng: &mut R, max_len: usize) -> Vec<String> {
        let mut at = 0;
        let mut trace = Vec::new();
        for _ in 0..4 * max_len {
            if trace.len() >= max_len || (self.finals.contains(&at) && rng.gen_bool(0.3)) {
                break;
            }
            let out: Vec<_> = self.transitions.iter().filter(|(_, from, _)| *from == at).collect();
            let Some((l, _, to)) = out.choose(rng) else { break };
            if let Some(l) = l {
                trace.push(l.clone());
            }
            at = *to;
        }
        trace
    }
}

/// Traces of single-object cases interleaved into one log with at most
/// `max_events` events.
pub fn random_case_log<R: Rng>(rng: &mut R, net: &StateMachine, alphabet: &[&str], max_events: usize) -> PlainLog {
    let cases = rng.gen_range(1..=3);
    let mut traces: Vec<Vec<String>> = (0..cases)
        .map(|_| {
            if rng.gen_bool(0.5) {
                net.random_trace(rng, 4)
            } else {
                let len = rng.gen_range(1..=4);
                (0..len).map(|_| alphabet.choose(rng).unwrap().to_string()).collect()
            }
        })
        .collect();
    traces.retain(|t| !t.is_empty());
    if traces.is_empty() {
        traces.push(vec![alphabet[0].to_string()]);
    }
    let mut cursors = vec![0usize; traces.len()];
    let mut events = Vec::new();
    while events.len() < max_events {
        let open: Vec<usize> = (0..traces.len()).filter(|&c| cursors[c] < traces[c].len()).collect();
        let Some(&c) = open.choose(rng) else { break };
        events.push((format!("e{}", events.len() + 1), traces[c][cursors[c]].clone(), vec![format!("o{c}")]));
        cursors[c] += 1;
    }
    let object_types = (0..traces.len()).map(|c| (format!("o{c}"), "case".to_string())).collect();
    PlainLog { object_types, events }
}

pub fn to_event_log(log: &PlainLog) -> EventLog {
    let types: BTreeSet<&str> = log.object_types.values().map(String::as_str).collect();
    let types: Vec<&str> = types.into_iter().collect();
    let objects: Vec<(&str, &str)> = log.object_types.iter().map(|(o, t)| (o.as_str(), t.as_str())).collect();
    let omaps: Vec<Vec<&str>> = log.events.iter().map(|e| e.2.iter().map(String::as_str).collect()).collect();
    let events: Vec<(&str, &str, &[&str])> = log
        .events
        .iter()
        .zip(&omaps)
        .map(|(e, o)| (e.0.as_str(), e.1.as_str(), o.as_slice()))
        .collect();
    build_log(&types, &objects, &events).unwrap()
}

/// Escaping-edges style oracle on the prefix automaton of single-object cases.
pub fn escaping_edges(log: &PlainLog, net: &StateMachine) -> (BigRational, Option<BigRational>) {
    let prefixes: Vec<Vec<String>> = (0..log.events.len())
        .map(|e| {
            let o = &log.events[e].2[0];
            log.events[..e].iter().filter(|x| &x.2[0] == o).map(|x| x.1.clone()).collect()
        })
        .collect();
    let mut automaton: BTreeMap<&Vec<String>, BTreeSet<String>> = BTreeMap::new();
    for (p, e) in prefixes.iter().zip(&log.events) {
        automaton.entry(p).or_default().insert(e.1.clone());
    }
    let en_l: Vec<BTreeSet<String>> = prefixes.iter().map(|p| automaton[p].clone()).collect();
    let en_m: Vec<BTreeSet<String>> = prefixes.iter().map(|p| net.enabled_after(p)).collect();
    metrics_from_sets(&en_l, &en_m)
}
