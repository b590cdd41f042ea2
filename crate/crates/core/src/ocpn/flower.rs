use std::collections::{BTreeMap, BTreeSet};

use super::{AcceptingOcpn, Arc, NetError, Place, Transition};
use crate::ocel::{Activity, EventLog, ObjectType};

/// Builds the object-centric flower model of a log: one place per object type
/// (initial and final at once) and, per activity and observed combination of
/// object types, a transition looping on the places of those types.
///
/// An activity's arcs of type `ot` are variable iff some event of that
/// activity carries two or more objects of `ot`.
pub fn flower_model(log: &EventLog) -> Result<AcceptingOcpn, NetError> {
    if log.is_empty() {
        return Err(NetError::EmptyLog);
    }

    let mut combos: BTreeMap<Activity, BTreeSet<BTreeSet<ObjectType>>> = BTreeMap::new();
    let mut variable: BTreeSet<(Activity, ObjectType)> = BTreeSet::new();
    for e in log.events() {
        let mut counts: BTreeMap<&ObjectType, usize> = BTreeMap::new();
        for o in &e.omap {
            *counts.entry(o.otype()).or_default() += 1;
        }
        for (t, n) in &counts {
            if *n >= 2 {
                variable.insert((e.activity.clone(), (*t).clone()));
            }
        }
        combos
            .entry(e.activity.clone())
            .or_default()
            .insert(counts.keys().map(|t| (*t).clone()).collect());
    }

    let object_types = log.object_types().to_vec();
    let place_id = |t: &ObjectType| format!("p_{t}");
    let places = object_types
        .iter()
        .map(|t| Place {
            id: place_id(t),
            otype: t.clone(),
            is_initial: true,
            is_final: true,
        })
        .collect();

    let mut transitions = Vec::new();
    let mut arcs = Vec::new();
    for (activity, type_sets) in &combos {
        for types in type_sets {
            let id = format!("t{}", transitions.len() + 1);
            for t in types {
                let var = variable.contains(&(activity.clone(), t.clone()));
                arcs.push(Arc {
                    source: place_id(t),
                    target: id.clone(),
                    variable: var,
                });
                arcs.push(Arc {
                    source: id.clone(),
                    target: place_id(t),
                    variable: var,
                });
            }
            transitions.push(Transition {
                id,
                label: Some(activity.clone()),
            });
        }
    }

    AcceptingOcpn::new(object_types, places, transitions, arcs)
}
