//! Markings, bindings and the firing rule.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::{AcceptingOcpn, NetError};
use crate::ocel::{Activity, ObjectId, ObjectType};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Token {
    pub place: usize,
    pub object: ObjectId,
}

/// Multiset of tokens. Stored per place so equality, ordering and hashing
/// are canonical: no empty inner maps and every count is at least one.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Marking {
    places: BTreeMap<usize, BTreeMap<ObjectId, u32>>,
}

impl Marking {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_tokens<I: IntoIterator<Item = (usize, ObjectId)>>(tokens: I) -> Self {
        let mut m = Marking::new();
        for (p, o) in tokens {
            m.add(p, o, 1);
        }
        m
    }

    pub fn add(&mut self, place: usize, object: ObjectId, n: u32) {
        if n > 0 {
            *self.places.entry(place).or_default().entry(object).or_insert(0) += n;
        }
    }

    /// Removes `n` copies; returns false (leaving the marking untouched) if
    /// fewer are present.
    pub fn remove(&mut self, place: usize, object: &ObjectId, n: u32) -> bool {
        let Some(inner) = self.places.get_mut(&place) else {
            return n == 0;
        };
        match inner.get_mut(object) {
            Some(c) if *c > n => *c -= n,
            Some(c) if *c == n => {
                inner.remove(object);
                if inner.is_empty() {
                    self.places.remove(&place);
                }
            }
            _ => return n == 0,
        }
        true
    }

    pub fn count(&self, place: usize, object: &ObjectId) -> u32 {
        self.places
            .get(&place)
            .and_then(|inner| inner.get(object))
            .copied()
            .unwrap_or(0)
    }

    /// Objects with at least one token in `place`, sorted.
    pub fn objects_in(&self, place: usize) -> impl Iterator<Item = &ObjectId> {
        self.places.get(&place).into_iter().flat_map(|inner| inner.keys())
    }

    /// Total number of tokens, counting multiplicity.
    pub fn size(&self) -> u64 {
        self.places
            .values()
            .flat_map(|inner| inner.values())
            .map(|&c| c as u64)
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.places.is_empty()
    }

    /// `(place, object, count)` triples in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &ObjectId, u32)> {
        self.places
            .iter()
            .flat_map(|(&p, inner)| inner.iter().map(move |(o, &c)| (p, o, c)))
    }

    /// Multiset inclusion: every token of `self` occurs in `other` at least as often.
    pub fn le(&self, other: &Marking) -> bool {
        self.iter().all(|(p, o, c)| other.count(p, o) >= c)
    }

    pub fn sum(&self, other: &Marking) -> Marking {
        let mut m = self.clone();
        for (p, o, c) in other.iter() {
            m.add(p, o.clone(), c);
        }
        m
    }

    /// Renders as `[(pl5,p1),(pl6,b1)]`, sorted by place id then object id
    /// and repeating tokens by multiplicity.
    pub fn display(&self, net: &AcceptingOcpn) -> String {
        let mut tokens: Vec<(&str, &ObjectId, u32)> = self.iter().map(|(p, o, c)| (net.place(p).id.as_str(), o, c)).collect();
        tokens.sort();
        let mut s = String::from("[");
        let mut first = true;
        for (p, o, c) in tokens {
            for _ in 0..c {
                if !first {
                    s.push(',');
                }
                first = false;
                let _ = write!(s, "({p},{o})");
            }
        }
        s.push(']');
        s
    }
}

/// A transition together with the objects it binds per object type.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Binding {
    pub transition: usize,
    pub objects: BTreeMap<ObjectType, BTreeSet<ObjectId>>,
}

impl Binding {
    pub fn new(transition: usize) -> Self {
        Binding {
            transition,
            objects: BTreeMap::new(),
        }
    }

    pub fn with(mut self, otype: &ObjectType, objects: &[ObjectId]) -> Self {
        self.objects
            .entry(otype.clone())
            .or_default()
            .extend(objects.iter().cloned());
        self
    }

    /// Checks dom(b) = tpl(t), non-empty sets, singleton non-variable types
    /// and object types matching their key.
    pub fn is_well_formed(&self, net: &AcceptingOcpn) -> bool {
        let flags = net.type_flags(self.transition);
        flags.len() == self.objects.len()
            && flags.iter().zip(&self.objects).all(|((ft, &variable), (bt, objs))| {
                ft == bt
                    && !objs.is_empty()
                    && (variable || objs.len() == 1)
                    && objs.iter().all(|o| o.otype() == bt)
            })
    }

    fn tokens<'a>(&'a self, net: &'a AcceptingOcpn, places: &'a [usize]) -> impl Iterator<Item = (usize, &'a ObjectId)> + 'a {
        places.iter().flat_map(move |&p| {
            self.objects
                .get(&net.place(p).otype)
                .into_iter()
                .flatten()
                .map(move |o| (p, o))
        })
    }

    /// Tokens consumed when firing.
    pub fn consumed(&self, net: &AcceptingOcpn) -> Marking {
        Marking::from_tokens(self.tokens(net, net.preset(self.transition)).map(|(p, o)| (p, o.clone())))
    }

    /// Tokens produced when firing.
    pub fn produced(&self, net: &AcceptingOcpn) -> Marking {
        Marking::from_tokens(self.tokens(net, net.postset(self.transition)).map(|(p, o)| (p, o.clone())))
    }

    /// All objects bound, across types.
    pub fn all_objects(&self) -> impl Iterator<Item = &ObjectId> {
        self.objects.values().flatten()
    }
}

/// True iff the binding is well formed and its consumed tokens are present.
pub fn binding_enabled(net: &AcceptingOcpn, marking: &Marking, binding: &Binding) -> bool {
    binding.is_well_formed(net)
        && binding
            .tokens(net, net.preset(binding.transition))
            .all(|(p, o)| marking.count(p, o) >= 1)
}

/// Fires an enabled binding, returning `M - cons + prod`.
pub fn execute_binding(net: &AcceptingOcpn, marking: &Marking, binding: &Binding) -> Result<Marking, NetError> {
    if !binding_enabled(net, marking, binding) {
        return Err(NetError::NotEnabled(net.transition(binding.transition).id.clone()));
    }
    let mut next = marking.clone();
    for (p, o) in binding.tokens(net, net.preset(binding.transition)) {
        let removed = next.remove(p, o, 1);
        debug_assert!(removed);
    }
    for (p, o) in binding.tokens(net, net.postset(binding.transition)) {
        next.add(p, o.clone(), 1);
    }
    Ok(next)
}

/// Objects of `otype` present in every input place of `t` of that type, or
/// `None` when `t` has no input place of that type.
fn co_located(net: &AcceptingOcpn, marking: &Marking, t: usize, otype: &ObjectType) -> Option<Vec<ObjectId>> {
    let mut inputs = net.preset(t).iter().filter(|&&p| &net.place(p).otype == otype);
    let first = *inputs.next()?;
    let rest: Vec<usize> = inputs.copied().collect();
    Some(
        marking
            .objects_in(first)
            .filter(|o| rest.iter().all(|&p| marking.count(p, o) >= 1))
            .cloned()
            .collect(),
    )
}

/// True iff some binding of `t` is enabled in `marking`.
pub fn transition_enabled(net: &AcceptingOcpn, marking: &Marking, t: usize) -> bool {
    net.type_flags(t)
        .keys()
        .all(|otype| co_located(net, marking, t, otype).is_none_or(|c| !c.is_empty()))
}

/// Labels of visible transitions with at least one enabled binding.
pub fn enabled_visible_labels(net: &AcceptingOcpn, marking: &Marking) -> BTreeSet<Activity> {
    net.transitions()
        .iter()
        .enumerate()
        .filter_map(|(i, t)| t.label.as_ref().map(|l| (i, l)))
        .filter(|&(i, _)| transition_enabled(net, marking, i))
        .map(|(_, l)| l.clone())
        .collect()
}

/// One token per object in its type's initial place.
pub fn initial_marking_for<'a, I>(net: &AcceptingOcpn, objects: I) -> Result<Marking, NetError>
where
    I: IntoIterator<Item = &'a ObjectId>,
{
    let mut m = Marking::new();
    for o in objects {
        let p = net.initial_place(o.otype()).ok_or_else(|| NetError::NoInitialPlace {
            object: o.id().to_string(),
            otype: o.otype().to_string(),
        })?;
        m.add(p, o.clone(), 1);
    }
    Ok(m)
}

/// True iff every token lies in a final place (vacuously true when empty).
pub fn is_final(net: &AcceptingOcpn, marking: &Marking) -> bool {
    marking.iter().all(|(p, _, _)| net.place(p).is_final)
}

/// How sets of objects are chosen for variable object types.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariableEnumeration {
    /// One object at a time.
    Singleton,
    /// Every non-empty subset of the first `cap` candidates.
    Subsets { cap: usize },
}

/// Enumerates the enabled bindings of `t` in `marking`, in a deterministic
/// order. Types without input places draw from `universe`.
pub fn bindings_of(
    net: &AcceptingOcpn,
    marking: &Marking,
    t: usize,
    universe: &BTreeMap<ObjectType, Vec<ObjectId>>,
    variable_mode: VariableEnumeration,
) -> Vec<Binding> {
    let mut per_type: Vec<(ObjectType, Vec<BTreeSet<ObjectId>>)> = Vec::new();
    for (otype, &variable) in net.type_flags(t) {
        let candidates = co_located(net, marking, t, otype)
            .unwrap_or_else(|| universe.get(otype).cloned().unwrap_or_default());
        let options: Vec<BTreeSet<ObjectId>> = match (variable, variable_mode) {
            (true, VariableEnumeration::Subsets { cap }) => {
                let pool = &candidates[..candidates.len().min(cap).min(63)];
                (1u64..(1u64 << pool.len()))
                    .map(|mask| {
                        pool.iter()
                            .enumerate()
                            .filter(|(i, _)| mask & (1 << i) != 0)
                            .map(|(_, o)| o.clone())
                            .collect()
                    })
                    .collect()
            }
            _ => candidates.into_iter().map(|o| BTreeSet::from([o])).collect(),
        };
        if options.is_empty() {
            return Vec::new();
        }
        per_type.push((otype.clone(), options));
    }

    let mut out = vec![Binding::new(t)];
    for (otype, options) in per_type {
        out = out
            .into_iter()
            .flat_map(|b| {
                let otype = &otype;
                options.iter().map(move |set| {
                    let mut b = b.clone();
                    b.objects.insert(otype.clone(), set.clone());
                    b
                })
            })
            .collect();
    }
    out
}
