//! Object-centric Petri nets with typed places, variable arcs and
//! initial/final place designations.

mod flower;
mod marking;

pub use flower::flower_model;
pub use marking::{
    binding_enabled, bindings_of, enabled_visible_labels, execute_binding, initial_marking_for,
    is_final, Binding, Marking, Token, VariableEnumeration,
};

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ocel::{Activity, ObjectType};

#[derive(Debug, Error)]
pub enum NetError {
    #[error("malformed model JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("duplicate place id {0}")]
    DuplicatePlace(String),
    #[error("duplicate transition id {0}")]
    DuplicateTransition(String),
    #[error("place {place} has unknown object type {otype}")]
    UnknownPlaceType { place: String, otype: String },
    #[error("dangling arc endpoint {0}")]
    DanglingArc(String),
    #[error("arc {from}->{to} must connect a place and a transition")]
    ArcDirection { from: String, to: String },
    #[error("duplicate arc {from}->{to}")]
    DuplicateArc { from: String, to: String },
    #[error("duplicate visible label {0}")]
    DuplicateLabel(String),
    #[error("mixed variable status for transition {transition} and object type {otype}")]
    MixedVariable { transition: String, otype: String },
    #[error("object type {otype} has {count} initial places, expected exactly one")]
    InitialPlaces { otype: String, count: usize },
    #[error("object {object} has type {otype} without an initial place")]
    NoInitialPlace { object: String, otype: String },
    #[error("binding of transition {0} is not enabled")]
    NotEnabled(String),
    #[error("cannot build a model from an empty log")]
    EmptyLog,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Place {
    pub id: String,
    pub otype: ObjectType,
    pub is_initial: bool,
    pub is_final: bool,
}

/// A transition; `label == None` marks a silent transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub id: String,
    pub label: Option<Activity>,
}

impl Transition {
    pub fn is_silent(&self) -> bool {
        self.label.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arc {
    pub source: String,
    pub target: String,
    pub variable: bool,
}

/// Per-transition data derived from the flow relation.
#[derive(Debug, Clone, Default)]
struct TransitionShape {
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    /// tpl(t), each type flagged variable or not.
    types: BTreeMap<ObjectType, bool>,
}

/// A validated accepting object-centric Petri net. Immutable.
#[derive(Debug, Clone)]
pub struct AcceptingOcpn {
    object_types: Vec<ObjectType>,
    places: Vec<Place>,
    transitions: Vec<Transition>,
    arcs: Vec<Arc>,
    shapes: Vec<TransitionShape>,
    place_index: HashMap<String, usize>,
    transition_index: HashMap<String, usize>,
    initial_places: BTreeMap<ObjectType, usize>,
    by_label: HashMap<Activity, Vec<usize>>,
}

impl AcceptingOcpn {
    pub fn new(
        object_types: Vec<ObjectType>,
        places: Vec<Place>,
        transitions: Vec<Transition>,
        arcs: Vec<Arc>,
    ) -> Result<Self, NetError> {
        let known_types: BTreeSet<&ObjectType> = object_types.iter().collect();

        let mut place_index = HashMap::new();
        for (i, p) in places.iter().enumerate() {
            if place_index.insert(p.id.clone(), i).is_some() {
                return Err(NetError::DuplicatePlace(p.id.clone()));
            }
            if !known_types.contains(&p.otype) {
                return Err(NetError::UnknownPlaceType {
                    place: p.id.clone(),
                    otype: p.otype.to_string(),
                });
            }
        }
        let mut transition_index = HashMap::new();
        for (i, t) in transitions.iter().enumerate() {
            if place_index.contains_key(&t.id) || transition_index.insert(t.id.clone(), i).is_some() {
                return Err(NetError::DuplicateTransition(t.id.clone()));
            }
        }

        let mut shapes = vec![TransitionShape::default(); transitions.len()];
        let mut seen_arcs = BTreeSet::new();
        for a in &arcs {
            if !seen_arcs.insert((a.source.as_str(), a.target.as_str())) {
                return Err(NetError::DuplicateArc {
                    from: a.source.clone(),
                    to: a.target.clone(),
                });
            }
            let endpoint = |id: &str| -> Result<(Option<usize>, Option<usize>), NetError> {
                match (place_index.get(id), transition_index.get(id)) {
                    (None, None) => Err(NetError::DanglingArc(id.to_string())),
                    (p, t) => Ok((p.copied(), t.copied())),
                }
            };
            let (p, t, incoming) = match (endpoint(&a.source)?, endpoint(&a.target)?) {
                ((Some(p), None), (None, Some(t))) => (p, t, true),
                ((None, Some(t)), (Some(p), None)) => (p, t, false),
                _ => {
                    return Err(NetError::ArcDirection {
                        from: a.source.clone(),
                        to: a.target.clone(),
                    })
                }
            };
            let shape = &mut shapes[t];
            if incoming {
                shape.inputs.push(p);
            } else {
                shape.outputs.push(p);
            }
            let otype = places[p].otype.clone();
            match shape.types.get(&otype) {
                Some(&v) if v != a.variable => {
                    return Err(NetError::MixedVariable {
                        transition: transitions[t].id.clone(),
                        otype: otype.to_string(),
                    })
                }
                _ => {
                    shape.types.insert(otype, a.variable);
                }
            }
        }
        for s in &mut shapes {
            s.inputs.sort_unstable();
            s.outputs.sort_unstable();
        }

        // Visible labels must identify a transition; two transitions may share
        // a label only if they bind different sets of object types.
        let mut by_label: HashMap<Activity, Vec<usize>> = HashMap::new();
        for (i, t) in transitions.iter().enumerate() {
            if let Some(label) = &t.label {
                let same = by_label.entry(label.clone()).or_default();
                if same.iter().any(|&j| shapes[j].types.keys().eq(shapes[i].types.keys())) {
                    return Err(NetError::DuplicateLabel(label.to_string()));
                }
                same.push(i);
            }
        }

        let mut initial_places = BTreeMap::new();
        let used: BTreeSet<&ObjectType> = places.iter().map(|p| &p.otype).collect();
        for otype in used {
            let initial: Vec<usize> = places
                .iter()
                .enumerate()
                .filter(|(_, p)| &p.otype == otype && p.is_initial)
                .map(|(i, _)| i)
                .collect();
            if initial.len() != 1 {
                return Err(NetError::InitialPlaces {
                    otype: otype.to_string(),
                    count: initial.len(),
                });
            }
            initial_places.insert(otype.clone(), initial[0]);
        }

        Ok(AcceptingOcpn {
            object_types,
            places,
            transitions,
            arcs,
            shapes,
            place_index,
            transition_index,
            initial_places,
            by_label,
        })
    }

    pub fn object_types(&self) -> &[ObjectType] {
        &self.object_types
    }

    pub fn places(&self) -> &[Place] {
        &self.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn place(&self, idx: usize) -> &Place {
        &self.places[idx]
    }

    pub fn transition(&self, idx: usize) -> &Transition {
        &self.transitions[idx]
    }

    pub fn place_position(&self, id: &str) -> Option<usize> {
        self.place_index.get(id).copied()
    }

    pub fn transition_position(&self, id: &str) -> Option<usize> {
        self.transition_index.get(id).copied()
    }

    /// Input places of `t` (●t), sorted by index.
    pub fn preset(&self, t: usize) -> &[usize] {
        &self.shapes[t].inputs
    }

    /// Output places of `t` (t●), sorted by index.
    pub fn postset(&self, t: usize) -> &[usize] {
        &self.shapes[t].outputs
    }

    /// Object types associated with `t`.
    pub fn tpl(&self, t: usize) -> BTreeSet<ObjectType> {
        self.shapes[t].types.keys().cloned().collect()
    }

    /// Non-variable object types associated with `t`.
    pub fn tpl_nv(&self, t: usize) -> BTreeSet<ObjectType> {
        self.shapes[t]
            .types
            .iter()
            .filter(|(_, &v)| !v)
            .map(|(k, _)| k.clone())
            .collect()
    }

    /// `Some(true)` if `otype` binds through variable arcs of `t`, `None` if
    /// `otype` is not associated with `t`.
    pub fn is_variable(&self, t: usize, otype: &ObjectType) -> Option<bool> {
        self.shapes[t].types.get(otype).copied()
    }

    pub(crate) fn type_flags(&self, t: usize) -> &BTreeMap<ObjectType, bool> {
        &self.shapes[t].types
    }

    pub fn initial_place(&self, otype: &ObjectType) -> Option<usize> {
        self.initial_places.get(otype).copied()
    }

    /// Visible transitions carrying `label`.
    pub fn transitions_labeled(&self, label: &str) -> &[usize] {
        self.by_label.get(label).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn silent_transitions(&self) -> impl Iterator<Item = usize> + '_ {
        self.transitions
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_silent())
            .map(|(i, _)| i)
    }

    /// Resolves an activity observed with the given object types to a
    /// transition: the labeled transition whose tpl equals the observed types
    /// (restricted to the net's types), or the only transition with that label.
    pub fn resolve(&self, label: &str, observed: &BTreeSet<ObjectType>) -> Option<usize> {
        let candidates = self.transitions_labeled(label);
        let known: BTreeSet<&ObjectType> = self.object_types.iter().collect();
        let observed: BTreeSet<&ObjectType> = observed.iter().filter(|t| known.contains(t)).collect();
        candidates
            .iter()
            .copied()
            .find(|&t| self.shapes[t].types.keys().eq(observed.iter().copied()))
            .or(match candidates {
                [only] => Some(*only),
                _ => None,
            })
    }
}

// ---- JSON wire format ----

#[derive(Debug, Serialize, Deserialize)]
struct PlaceDoc {
    id: String,
    object_type: String,
    initial: bool,
    #[serde(rename = "final")]
    is_final: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct TransitionDoc {
    id: String,
    label: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ArcDoc {
    source: String,
    target: String,
    variable: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelDoc {
    object_types: Vec<String>,
    places: Vec<PlaceDoc>,
    transitions: Vec<TransitionDoc>,
    arcs: Vec<ArcDoc>,
}

pub fn parse_model(input: &[u8]) -> Result<AcceptingOcpn, NetError> {
    let doc: ModelDoc = serde_json::from_slice(input)?;
    AcceptingOcpn::new(
        doc.object_types.iter().map(|t| ObjectType::new(t)).collect(),
        doc.places
            .into_iter()
            .map(|p| Place {
                otype: ObjectType::new(&p.object_type),
                id: p.id,
                is_initial: p.initial,
                is_final: p.is_final,
            })
            .collect(),
        doc.transitions
            .into_iter()
            .map(|t| Transition {
                id: t.id,
                label: t.label.map(|l| Activity::from(l.as_str())),
            })
            .collect(),
        doc.arcs
            .into_iter()
            .map(|a| Arc {
                source: a.source,
                target: a.target,
                variable: a.variable,
            })
            .collect(),
    )
}

/// Serializes a net in declaration order, pretty-printed.
pub fn serialize_model(net: &AcceptingOcpn) -> String {
    let doc = ModelDoc {
        object_types: net.object_types.iter().map(|t| t.as_str().to_string()).collect(),
        places: net
            .places
            .iter()
            .map(|p| PlaceDoc {
                id: p.id.clone(),
                object_type: p.otype.as_str().to_string(),
                initial: p.is_initial,
                is_final: p.is_final,
            })
            .collect(),
        transitions: net
            .transitions
            .iter()
            .map(|t| TransitionDoc {
                id: t.id.clone(),
                label: t.label.as_ref().map(|l| l.to_string()),
            })
            .collect(),
        arcs: net
            .arcs
            .iter()
            .map(|a| ArcDoc {
                source: a.source.clone(),
                target: a.target.clone(),
                variable: a.variable,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("model document serializes")
}
