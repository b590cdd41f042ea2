//! Random walks over an accepting net, emitting logs of accepted behavior.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Map;
use thiserror::Error;

use crate::ocel::{Event, EventLog, LogError, ObjectId, ObjectRecord, ObjectType};
use crate::ocpn::{bindings_of, execute_binding, initial_marking_for, is_final, AcceptingOcpn, Binding, Marking, VariableEnumeration};

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("object type {0} has no final place")]
    NoFinalPlace(String),
    #[error("dead model: nothing is enabled in the initial marking")]
    DeadModel,
    #[error("invalid simulation settings: {0}")]
    Settings(&'static str),
    #[error("gave up after {attempts} attempts with {accepted} accepted instances")]
    Exhausted { attempts: usize, accepted: usize },
    #[error(transparent)]
    Log(#[from] LogError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulationConfig {
    pub instances: usize,
    pub seed: u64,
    /// Upper bound for objects per variable type and instance.
    pub max_objects: usize,
    /// Bindings per instance; defaults to ten times the number of transitions.
    pub step_cap: Option<usize>,
    /// Attempts per requested instance before giving up.
    pub attempts_per_instance: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            instances: 50,
            seed: 1,
            max_objects: 3,
            step_cap: None,
            attempts_per_instance: 1000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub log: EventLog,
    /// Walks that deadlocked or hit the step cap outside a final marking.
    pub discarded: usize,
}

enum Walk {
    Accepted(Vec<(Arc<str>, Vec<ObjectId>)>),
    Discarded,
}

/// Generates `instances` process instances with fresh objects each. A walk
/// picks uniformly among the enabled bindings (silent ones included) and, in
/// a final marking, the option to stop. Only visible bindings become events.
pub fn simulate(net: &AcceptingOcpn, cfg: &SimulationConfig) -> Result<Simulation, SimulateError> {
    if cfg.instances == 0 {
        return Err(SimulateError::Settings("instances must be positive"));
    }
    if cfg.max_objects == 0 {
        return Err(SimulateError::Settings("max_objects must be positive"));
    }
    let types: Vec<ObjectType> = net
        .object_types()
        .iter()
        .filter(|t| net.initial_place(t).is_some())
        .cloned()
        .collect();
    for t in &types {
        if !net.places().iter().any(|p| &p.otype == t && p.is_final) {
            return Err(SimulateError::NoFinalPlace(t.to_string()));
        }
    }
    let variable: Vec<bool> = types
        .iter()
        .map(|t| (0..net.transitions().len()).any(|i| net.is_variable(i, t) == Some(true)))
        .collect();
    let step_cap = cfg.step_cap.unwrap_or(10 * net.transitions().len()).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut objects: Vec<ObjectRecord> = Vec::new();
    let mut events: Vec<Event> = Vec::new();
    let mut discarded = 0;
    let mut attempts = 0;
    let max_attempts = cfg.instances.saturating_mul(cfg.attempts_per_instance);
    let mut accepted = 0;

    while accepted < cfg.instances {
        if attempts >= max_attempts {
            return Err(SimulateError::Exhausted { attempts, accepted });
        }
        attempts += 1;
        let mut universe: BTreeMap<ObjectType, Vec<ObjectId>> = BTreeMap::new();
        for (t, &var) in types.iter().zip(&variable) {
            let count = if var { rng.gen_range(1..=cfg.max_objects) } else { 1 };
            let objs = (1..=count)
                .map(|j| ObjectId::new(&format!("{t}{}_{j}", accepted + 1), t.clone()))
                .collect();
            universe.insert(t.clone(), objs);
        }
        let initial = initial_marking_for(net, universe.values().flatten())
            .expect("every simulated type has an initial place");
        if attempts == 1 && enabled_bindings(net, &initial, &universe, cfg.max_objects).is_empty() {
            return Err(SimulateError::DeadModel);
        }

        match walk(net, initial, &universe, step_cap, cfg.max_objects, &mut rng) {
            Walk::Discarded => discarded += 1,
            Walk::Accepted(steps) => {
                accepted += 1;
                objects.extend(universe.into_values().flatten().map(|o| ObjectRecord {
                    object: o,
                    attributes: None,
                }));
                for (activity, omap) in steps {
                    let index = events.len();
                    events.push(Event {
                        id: format!("e{}", index + 1),
                        activity,
                        omap,
                        index,
                        timestamp: None,
                        extra: Map::new(),
                    });
                }
            }
        }
    }

    let log = EventLog::from_parts(types, objects, events)?;
    Ok(Simulation { log, discarded })
}

fn enabled_bindings(
    net: &AcceptingOcpn,
    m: &Marking,
    universe: &BTreeMap<ObjectType, Vec<ObjectId>>,
    max_objects: usize,
) -> Vec<Binding> {
    (0..net.transitions().len())
        .flat_map(|t| bindings_of(net, m, t, universe, VariableEnumeration::Subsets { cap: max_objects }))
        .collect()
}

fn walk(
    net: &AcceptingOcpn,
    mut m: Marking,
    universe: &BTreeMap<ObjectType, Vec<ObjectId>>,
    step_cap: usize,
    max_objects: usize,
    rng: &mut ChaCha8Rng,
) -> Walk {
    let mut steps = Vec::new();
    for _ in 0..=step_cap {
        let at_final = is_final(net, &m);
        if steps.len() == step_cap {
            // cap reached: keep the walk only if it may legitimately stop here
            return if at_final { Walk::Accepted(steps) } else { Walk::Discarded };
        }
        let options = enabled_bindings(net, &m, universe, max_objects);
        let choices = options.len() + usize::from(at_final);
        if choices == 0 {
            return Walk::Discarded;
        }
        let pick = rng.gen_range(0..choices);
        if pick == options.len() {
            return Walk::Accepted(steps);
        }
        let b = &options[pick];
        m = execute_binding(net, &m, b).expect("enumerated bindings are enabled");
        if let Some(label) = &net.transition(b.transition).label {
            steps.push((label.clone(), b.all_objects().cloned().collect()));
        }
    }
    unreachable!("loop returns once the step cap is reached")
}
