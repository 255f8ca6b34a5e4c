//! The two-component store: locations to data, continuations to suspended
//! frame stacks.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::nominal::{Name, NameSet, Nominal, Permutation};
use crate::syntax::{DisplayFrames, FrameStack, Value};

/// Contents of a location: an integer, a pointer, or a function pointer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StoreValue {
    Int(i64),
    Name(Name),
}

impl StoreValue {
    /// Converts a runtime value; tuples, unit and continuation names are not
    /// storable.
    pub fn from_value(v: &Value) -> Option<StoreValue> {
        match v {
            Value::Int(n) => Some(StoreValue::Int(*n)),
            Value::Name(a) if !a.is_cont() => Some(StoreValue::Name(*a)),
            _ => None,
        }
    }

    pub fn to_value(self) -> Value {
        match self {
            StoreValue::Int(n) => Value::Int(n),
            StoreValue::Name(a) => Value::Name(a),
        }
    }
}

impl fmt::Display for StoreValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StoreValue::Int(n) => write!(f, "{n}"),
            StoreValue::Name(a) => write!(f, "{a}"),
        }
    }
}

impl Nominal for StoreValue {
    fn permute(&self, pi: &Permutation) -> Self {
        match self {
            StoreValue::Int(n) => StoreValue::Int(*n),
            StoreValue::Name(a) => StoreValue::Name(pi.apply(*a)),
        }
    }
    fn visit_names(&self, f: &mut dyn FnMut(Name)) {
        if let StoreValue::Name(a) = self {
            f(*a)
        }
    }
}

/// A suspended computation: the frames to resume and the continuation they
/// return to.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Suspended {
    pub frames: FrameStack,
    pub ret: Name,
}

impl Nominal for Suspended {
    fn permute(&self, pi: &Permutation) -> Self {
        Suspended { frames: self.frames.permute(pi), ret: pi.apply(self.ret) }
    }
    fn visit_names(&self, f: &mut dyn FnMut(Name)) {
        self.frames.visit_names(f);
        f(self.ret);
    }
}

/// Result of looking a name up in the store.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lookup<'a> {
    Data(StoreValue),
    Cont(&'a Suspended),
    Absent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Restrict {
    Keep,
    Drop,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Store {
    locs: BTreeMap<Name, StoreValue>,
    conts: BTreeMap<Name, Suspended>,
}

impl Store {
    pub fn new() -> Self {
        Store::default()
    }

    /// Builds a location-only store. Panics on non-location keys.
    pub fn from_locs<I: IntoIterator<Item = (Name, StoreValue)>>(it: I) -> Self {
        let mut s = Store::new();
        for (a, v) in it {
            s.set_loc(a, v);
        }
        s
    }

    pub fn set_loc(&mut self, a: Name, v: StoreValue) {
        assert!(a.is_loc(), "location store keyed by non-location {a}");
        self.locs.insert(a, v);
    }

    pub fn set_cont(&mut self, k: Name, s: Suspended) {
        assert!(k.is_cont(), "continuation store keyed by non-continuation {k}");
        self.conts.insert(k, s);
    }

    pub fn get(&self, a: Name) -> Lookup<'_> {
        if a.is_cont() {
            self.conts.get(&a).map_or(Lookup::Absent, Lookup::Cont)
        } else {
            self.locs.get(&a).map_or(Lookup::Absent, |v| Lookup::Data(*v))
        }
    }

    pub fn loc(&self, a: Name) -> Option<StoreValue> {
        self.locs.get(&a).copied()
    }

    pub fn cont(&self, k: Name) -> Option<&Suspended> {
        self.conts.get(&k)
    }

    pub fn locs(&self) -> &BTreeMap<Name, StoreValue> {
        &self.locs
    }

    pub fn conts(&self) -> &BTreeMap<Name, Suspended> {
        &self.conts
    }

    pub fn is_empty(&self) -> bool {
        self.locs.is_empty() && self.conts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.locs.len() + self.conts.len()
    }

    pub fn contains(&self, a: Name) -> bool {
        self.locs.contains_key(&a) || self.conts.contains_key(&a)
    }

    pub fn domain(&self) -> NameSet {
        self.locs.keys().chain(self.conts.keys()).copied().collect()
    }

    /// The location projection.
    pub fn loc_part(&self) -> Store {
        Store { locs: self.locs.clone(), conts: BTreeMap::new() }
    }

    /// The continuation projection.
    pub fn cont_part(&self) -> Store {
        Store { locs: BTreeMap::new(), conts: self.conts.clone() }
    }

    /// `s ↾ X` (keep) or `s \ X` (drop).
    pub fn restrict(&self, names: &NameSet, mode: Restrict) -> Store {
        let keep = |a: &Name| names.contains(a) == (mode == Restrict::Keep);
        Store {
            locs: self.locs.iter().filter(|(a, _)| keep(a)).map(|(a, v)| (*a, *v)).collect(),
            conts: self.conts.iter().filter(|(a, _)| keep(a)).map(|(a, v)| (*a, v.clone())).collect(),
        }
    }

    pub fn keep(&self, names: &NameSet) -> Store {
        self.restrict(names, Restrict::Keep)
    }

    pub fn drop_names(&self, names: &NameSet) -> Store {
        self.restrict(names, Restrict::Drop)
    }

    /// `s[patch]`: the patch wins on overlapping keys.
    pub fn update(&self, patch: &Store) -> Store {
        let mut out = self.clone();
        out.locs.extend(patch.locs.iter().map(|(a, v)| (*a, *v)));
        out.conts.extend(patch.conts.iter().map(|(a, v)| (*a, v.clone())));
        out
    }

    /// `s ⊑ other`: domain inclusion; values may differ.
    pub fn extends(&self, other: &Store) -> bool {
        self.locs.keys().all(|a| other.locs.contains_key(a)) && self.conts.keys().all(|k| other.conts.contains_key(k))
    }

    /// Set inclusion of bindings: every pair of `self` is a pair of `other`.
    pub fn is_substore_of(&self, other: &Store) -> bool {
        self.locs.iter().all(|(a, v)| other.locs.get(a) == Some(v))
            && self.conts.iter().all(|(k, v)| other.conts.get(k) == Some(v))
    }

    /// Names of the bound value (for continuation bindings, the frames and
    /// the return continuation).
    fn visit_binding(&self, a: Name, f: &mut dyn FnMut(Name)) {
        match self.get(a) {
            Lookup::Data(v) => v.visit_names(f),
            Lookup::Cont(s) => s.visit_names(f),
            Lookup::Absent => {}
        }
    }

    /// `Cl(s, X)`: the least superset of `X` closed under reachability
    /// through both store components.
    pub fn closure(&self, seed: &NameSet) -> NameSet {
        self.closure_impl(seed, true)
    }

    /// Reachability through the location component only. This is what
    /// disclosure uses: revealing a continuation name does not reveal the
    /// names inside its suspended frames.
    pub fn closure_locs(&self, seed: &NameSet) -> NameSet {
        self.closure_impl(seed, false)
    }

    fn closure_impl(&self, seed: &NameSet, through_conts: bool) -> NameSet {
        let mut out = seed.clone();
        let mut work: Vec<Name> = seed.iter().copied().collect();
        while let Some(a) = work.pop() {
            if a.is_cont() && !through_conts {
                continue;
            }
            self.visit_binding(a, &mut |b| {
                if out.insert(b) {
                    work.push(b);
                }
            });
        }
        out
    }

    pub fn union_disjoint(&self, other: &Store) -> Store {
        self.update(other)
    }
}

impl Nominal for Store {
    fn permute(&self, pi: &Permutation) -> Self {
        Store {
            locs: self.locs.iter().map(|(a, v)| (pi.apply(*a), v.permute(pi))).collect(),
            conts: self.conts.iter().map(|(k, s)| (pi.apply(*k), s.permute(pi))).collect(),
        }
    }

    fn visit_names(&self, f: &mut dyn FnMut(Name)) {
        for (a, v) in &self.locs {
            f(*a);
            v.visit_names(f);
        }
        for (k, s) in &self.conts {
            f(*k);
            s.visit_names(f);
        }
    }
}

/// Canonical text: `name=value` pairs sorted by name, continuation bindings
/// as `k1=(<frames>,k0)`.
impl fmt::Display for Store {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut sep = |f: &mut fmt::Formatter<'_>| {
            let r = if first { Ok(()) } else { write!(f, ", ") };
            first = false;
            r
        };
        for (a, v) in &self.locs {
            sep(f)?;
            write!(f, "{a}={v}")?;
        }
        for (k, s) in &self.conts {
            sep(f)?;
            write!(f, "{k}=({},{})", DisplayFrames(&s.frames), s.ret)?;
        }
        Ok(())
    }
}
