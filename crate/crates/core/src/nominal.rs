//! Sorted atoms, finite sort-preserving permutations and support.
//!
//! Every structure that can mention a name implements [`Nominal`], which
//! gives the permutation action and the support (the set of names occurring
//! in the structure). Freshness is deterministic: [`fresh`] always returns
//! the least unused index of the requested sort.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// The three disjoint sorts of names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Location,
    Function,
    Continuation,
}

impl Sort {
    pub const ALL: [Sort; 3] = [Sort::Location, Sort::Function, Sort::Continuation];

    pub fn prefix(self) -> char {
        match self {
            Sort::Location => 'l',
            Sort::Function => 'f',
            Sort::Continuation => 'k',
        }
    }
}

/// A sorted atom. Rendered as `l3`, `f0`, `k7`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name {
    pub sort: Sort,
    pub index: u32,
}

impl Name {
    pub const fn new(sort: Sort, index: u32) -> Self {
        Name { sort, index }
    }
    pub const fn loc(index: u32) -> Self {
        Name::new(Sort::Location, index)
    }
    pub const fn func(index: u32) -> Self {
        Name::new(Sort::Function, index)
    }
    pub const fn cont(index: u32) -> Self {
        Name::new(Sort::Continuation, index)
    }
    pub fn is_loc(self) -> bool {
        self.sort == Sort::Location
    }
    pub fn is_func(self) -> bool {
        self.sort == Sort::Function
    }
    pub fn is_cont(self) -> bool {
        self.sort == Sort::Continuation
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.sort.prefix(), self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed name `{0}`: expected l<i>, f<i> or k<i>")]
pub struct ParseNameError(pub String);

impl FromStr for Name {
    type Err = ParseNameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseNameError(s.to_string());
        let mut chars = s.chars();
        let sort = match chars.next() {
            Some('l') => Sort::Location,
            Some('f') => Sort::Function,
            Some('k') => Sort::Continuation,
            _ => return Err(err()),
        };
        let digits = chars.as_str();
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        // reject leading zeros so rendering stays injective
        if digits.len() > 1 && digits.starts_with('0') {
            return Err(err());
        }
        let index = digits.parse().map_err(|_| err())?;
        Ok(Name { sort, index })
    }
}

impl Serialize for Name {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Name {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A finite set of names.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NameSet(BTreeSet<Name>);

impl NameSet {
    pub fn new() -> Self {
        NameSet(BTreeSet::new())
    }
    pub fn insert(&mut self, n: Name) -> bool {
        self.0.insert(n)
    }
    pub fn remove(&mut self, n: &Name) -> bool {
        self.0.remove(n)
    }
    pub fn contains(&self, n: &Name) -> bool {
        self.0.contains(n)
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &Name> + '_ {
        self.0.iter()
    }
    pub fn extend<I: IntoIterator<Item = Name>>(&mut self, it: I) {
        self.0.extend(it)
    }
    pub fn union(&self, other: &NameSet) -> NameSet {
        NameSet(self.0.union(&other.0).copied().collect())
    }
    pub fn intersection(&self, other: &NameSet) -> NameSet {
        NameSet(self.0.intersection(&other.0).copied().collect())
    }
    pub fn difference(&self, other: &NameSet) -> NameSet {
        NameSet(self.0.difference(&other.0).copied().collect())
    }
    pub fn is_subset(&self, other: &NameSet) -> bool {
        self.0.is_subset(&other.0)
    }
    pub fn is_disjoint(&self, other: &NameSet) -> bool {
        self.0.is_disjoint(&other.0)
    }
    /// The restriction of the set to one sort.
    pub fn of_sort(&self, sort: Sort) -> NameSet {
        NameSet(self.0.iter().filter(|n| n.sort == sort).copied().collect())
    }
    pub fn locations(&self) -> NameSet {
        self.of_sort(Sort::Location)
    }
    pub fn functions(&self) -> NameSet {
        self.of_sort(Sort::Function)
    }
    pub fn continuations(&self) -> NameSet {
        self.of_sort(Sort::Continuation)
    }
    pub fn as_set(&self) -> &BTreeSet<Name> {
        &self.0
    }
}

impl FromIterator<Name> for NameSet {
    fn from_iter<I: IntoIterator<Item = Name>>(iter: I) -> Self {
        NameSet(iter.into_iter().collect())
    }
}

impl IntoIterator for NameSet {
    type Item = Name;
    type IntoIter = std::collections::btree_set::IntoIter<Name>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a> IntoIterator for &'a NameSet {
    type Item = &'a Name;
    type IntoIter = std::collections::btree_set::Iter<'a, Name>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl<const N: usize> From<[Name; N]> for NameSet {
    fn from(names: [Name; N]) -> Self {
        names.into_iter().collect()
    }
}

impl fmt::Display for NameSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for NameSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.0.iter())
    }
}

impl<'de> Deserialize<'de> for NameSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(NameSet(BTreeSet::deserialize(deserializer)?))
    }
}

/// The least-index name of `sort` not in `used`.
pub fn fresh(sort: Sort, used: &NameSet) -> Name {
    let mut index = 0;
    // names of one sort are contiguous in the ordering, so one pass suffices
    for n in used.as_set().range(Name::new(sort, 0)..=Name::new(sort, u32::MAX)) {
        if n.index == index {
            index += 1;
        } else if n.index > index {
            break;
        }
    }
    Name::new(sort, index)
}

/// `fresh` avoiding the union of two sets without materialising it.
pub fn fresh_avoiding(sort: Sort, used: &NameSet, also: &NameSet) -> Name {
    let mut index = 0;
    loop {
        let n = Name::new(sort, index);
        if !used.contains(&n) && !also.contains(&n) {
            return n;
        }
        index += 1;
    }
}

/// The first `count` names of `sort` outside `used`, in increasing order.
pub fn fresh_many(sort: Sort, used: &NameSet, count: usize) -> Vec<Name> {
    let mut out = Vec::with_capacity(count);
    let mut index = 0;
    while out.len() < count {
        let n = Name::new(sort, index);
        if !used.contains(&n) {
            out.push(n);
        }
        index += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PermutationError {
    #[error("mapping {0} -> {1} does not preserve sorts")]
    SortMismatch(Name, Name),
    #[error("mapping is not injective at {0}")]
    NotInjective(Name),
}

/// A finite, sort-preserving bijection on names, stored as its non-identity
/// part.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Permutation {
    map: BTreeMap<Name, Name>,
}

impl Permutation {
    pub fn identity() -> Self {
        Permutation::default()
    }

    /// The transposition `(a b)`.
    pub fn swap(a: Name, b: Name) -> Result<Self, PermutationError> {
        if a.sort != b.sort {
            return Err(PermutationError::SortMismatch(a, b));
        }
        let mut map = BTreeMap::new();
        if a != b {
            map.insert(a, b);
            map.insert(b, a);
        }
        Ok(Permutation { map })
    }

    /// Extends a finite sort-preserving injection to a permutation. Names in
    /// the range but not the domain are sent back onto the domain names
    /// missing from the range, pairing both in increasing order.
    pub fn from_injection<I>(pairs: I) -> Result<Self, PermutationError>
    where
        I: IntoIterator<Item = (Name, Name)>,
    {
        let mut map = BTreeMap::new();
        let mut range = BTreeSet::new();
        for (a, b) in pairs {
            if a.sort != b.sort {
                return Err(PermutationError::SortMismatch(a, b));
            }
            if let Some(prev) = map.insert(a, b) {
                if prev != b {
                    return Err(PermutationError::NotInjective(a));
                }
                continue;
            }
            if !range.insert(b) {
                return Err(PermutationError::NotInjective(b));
            }
        }
        let dom: BTreeSet<Name> = map.keys().copied().collect();
        let dangling: Vec<Name> = range.difference(&dom).copied().collect();
        let holes: Vec<Name> = dom.difference(&range).copied().collect();
        for sort in Sort::ALL {
            let from = dangling.iter().filter(|n| n.sort == sort);
            let to = holes.iter().filter(|n| n.sort == sort);
            for (a, b) in from.zip(to) {
                map.insert(*a, *b);
            }
        }
        map.retain(|a, b| a != b);
        Ok(Permutation { map })
    }

    pub fn apply(&self, n: Name) -> Name {
        self.map.get(&n).copied().unwrap_or(n)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        let mut map = BTreeMap::new();
        for (&a, &b) in &other.map {
            map.insert(a, self.apply(b));
        }
        for (&a, &b) in &self.map {
            map.entry(a).or_insert(b);
        }
        map.retain(|a, b| a != b);
        Permutation { map }
    }

    pub fn inverse(&self) -> Permutation {
        Permutation {
            map: self.map.iter().map(|(&a, &b)| (b, a)).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.map.is_empty()
    }

    /// The finite set of names moved by the permutation.
    pub fn carrier(&self) -> NameSet {
        self.map.keys().copied().collect()
    }

    pub fn fixes_all(&self, names: &NameSet) -> bool {
        names.iter().all(|n| self.apply(*n) == *n)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (Name, Name)> + '_ {
        self.map.iter().map(|(&a, &b)| (a, b))
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.map.is_empty() {
            return write!(f, "id");
        }
        let parts: Vec<String> = self.map.iter().map(|(a, b)| format!("{a}->{b}")).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Structures carrying names: the permutation action and name traversal.
///
/// `visit_names` must visit every occurrence in a deterministic structural
/// order; canonicalization relies on that order.
pub trait Nominal: Sized {
    fn permute(&self, pi: &Permutation) -> Self;

    fn visit_names(&self, f: &mut dyn FnMut(Name));

    fn support(&self) -> NameSet {
        let mut out = NameSet::new();
        self.visit_names(&mut |n| {
            out.insert(n);
        });
        out
    }
}

impl Nominal for Name {
    fn permute(&self, pi: &Permutation) -> Self {
        pi.apply(*self)
    }
    fn visit_names(&self, f: &mut dyn FnMut(Name)) {
        f(*self)
    }
}

impl Nominal for NameSet {
    fn permute(&self, pi: &Permutation) -> Self {
        self.iter().map(|n| pi.apply(*n)).collect()
    }
    fn visit_names(&self, f: &mut dyn FnMut(Name)) {
        for n in self.iter() {
            f(*n)
        }
    }
}

impl<T: Nominal> Nominal for Vec<T> {
    fn permute(&self, pi: &Permutation) -> Self {
        self.iter().map(|x| x.permute(pi)).collect()
    }
    fn visit_names(&self, f: &mut dyn FnMut(Name)) {
        for x in self {
            x.visit_names(f)
        }
    }
}

impl<T: Nominal> Nominal for Option<T> {
    fn permute(&self, pi: &Permutation) -> Self {
        self.as_ref().map(|x| x.permute(pi))
    }
    fn visit_names(&self, f: &mut dyn FnMut(Name)) {
        if let Some(x) = self {
            x.visit_names(f)
        }
    }
}

impl<A: Nominal, B: Nominal> Nominal for (A, B) {
    fn permute(&self, pi: &Permutation) -> Self {
        (self.0.permute(pi), self.1.permute(pi))
    }
    fn visit_names(&self, f: &mut dyn FnMut(Name)) {
        self.0.visit_names(f);
        self.1.visit_names(f);
    }
}

impl Nominal for i64 {
    fn permute(&self, _pi: &Permutation) -> Self {
        *self
    }
    fn visit_names(&self, _f: &mut dyn FnMut(Name)) {}
}
