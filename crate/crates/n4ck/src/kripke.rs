//! Finite Kripke structures: preorders, valuations, relation tables, frame
//! condition checks and the model constructions (trivial model, rooted join,
//! Nelsonian/intuitionistic conversions).
//!
//! Conditional relation tables are stratified. An entry `(s, K, R)` answers
//! every query key `Q` with `Q ∩ S_s = K`, and a lookup returns the union of
//! the answers over all strata. A table with a single stratum equal to the
//! whole carrier behaves as an exact-key map with empty default.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::syntax::Atom;

pub type WorldId = usize;

/// A finite set of worlds as a growable bitset. Trailing zero words are
/// trimmed so that equality and hashing are structural.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WorldSet(SmallVec<[u64; 2]>);

impl WorldSet {
    pub fn new() -> Self {
        WorldSet(SmallVec::new())
    }

    pub fn full(n: usize) -> Self {
        let mut s = WorldSet::new();
        for w in 0..n {
            s.insert(w);
        }
        s
    }

    pub fn singleton(w: WorldId) -> Self {
        let mut s = WorldSet::new();
        s.insert(w);
        s
    }

    fn trim(&mut self) {
        while self.0.last() == Some(&0) {
            self.0.pop();
        }
    }

    pub fn insert(&mut self, w: WorldId) {
        let (i, b) = (w / 64, w % 64);
        if self.0.len() <= i {
            self.0.resize(i + 1, 0);
        }
        self.0[i] |= 1 << b;
    }

    pub fn remove(&mut self, w: WorldId) {
        let (i, b) = (w / 64, w % 64);
        if i < self.0.len() {
            self.0[i] &= !(1 << b);
            self.trim();
        }
    }

    pub fn contains(&self, w: WorldId) -> bool {
        let (i, b) = (w / 64, w % 64);
        i < self.0.len() && self.0[i] & (1 << b) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|x| x.count_ones() as usize).sum()
    }

    pub fn union(&self, o: &Self) -> Self {
        let (long, short) = if self.0.len() >= o.0.len() { (self, o) } else { (o, self) };
        let mut r = long.clone();
        for (i, x) in short.0.iter().enumerate() {
            r.0[i] |= x;
        }
        r
    }

    pub fn union_with(&mut self, o: &Self) {
        if self.0.len() < o.0.len() {
            self.0.resize(o.0.len(), 0);
        }
        for (i, x) in o.0.iter().enumerate() {
            self.0[i] |= x;
        }
    }

    pub fn intersect(&self, o: &Self) -> Self {
        let mut r = WorldSet(self.0.iter().zip(o.0.iter()).map(|(a, b)| a & b).collect());
        r.trim();
        r
    }

    pub fn minus(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (i, x) in o.0.iter().enumerate() {
            if i < r.0.len() {
                r.0[i] &= !x;
            }
        }
        r.trim();
        r
    }

    pub fn intersects(&self, o: &Self) -> bool {
        self.0.iter().zip(o.0.iter()).any(|(a, b)| a & b != 0)
    }

    pub fn is_subset(&self, o: &Self) -> bool {
        self.0
            .iter()
            .enumerate()
            .all(|(i, a)| a & !o.0.get(i).copied().unwrap_or(0) == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = WorldId> + '_ {
        self.0.iter().enumerate().flat_map(|(i, &word)| {
            (0..64).filter(move |b| word & (1u64 << b) != 0).map(move |b| i * 64 + b)
        })
    }

    pub fn to_vec(&self) -> Vec<WorldId> {
        self.iter().collect()
    }

    /// Renames every member through `f`.
    pub fn map(&self, f: impl Fn(WorldId) -> WorldId) -> Self {
        self.iter().map(f).collect()
    }
}

impl FromIterator<WorldId> for WorldSet {
    fn from_iter<I: IntoIterator<Item = WorldId>>(it: I) -> Self {
        let mut s = WorldSet::new();
        for w in it {
            s.insert(w);
        }
        s
    }
}

impl fmt::Debug for WorldSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for WorldSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|w| w.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Positive and negative extension.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct BiSet {
    pub plus: WorldSet,
    pub minus: WorldSet,
}

impl BiSet {
    pub fn new(plus: WorldSet, minus: WorldSet) -> Self {
        BiSet { plus, minus }
    }

    pub fn is_subset(&self, o: &BiSet) -> bool {
        self.plus.is_subset(&o.plus) && self.minus.is_subset(&o.minus)
    }

    pub fn swap(&self) -> BiSet {
        BiSet { plus: self.minus.clone(), minus: self.plus.clone() }
    }
}

impl fmt::Display for BiSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.plus, self.minus)
    }
}

// ---------------------------------------------------------------- preorders

/// `up[w]` holds every `v` with `w ≤ v`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Preorder {
    up: Vec<WorldSet>,
}

impl Preorder {
    pub fn discrete(n: usize) -> Self {
        Preorder { up: (0..n).map(WorldSet::singleton).collect() }
    }

    /// Built from explicit pairs, without closing them.
    pub fn from_pairs(n: usize, pairs: &[(WorldId, WorldId)]) -> Self {
        let mut up = vec![WorldSet::new(); n];
        for &(a, b) in pairs {
            up[a].insert(b);
        }
        Preorder { up }
    }

    /// Reflexive-transitive closure of the given pairs.
    pub fn closure_of(n: usize, pairs: &[(WorldId, WorldId)]) -> Self {
        let mut up: Vec<WorldSet> = (0..n).map(WorldSet::singleton).collect();
        for &(a, b) in pairs {
            up[a].insert(b);
        }
        loop {
            let mut changed = false;
            for w in 0..n {
                let mut acc = up[w].clone();
                for v in up[w].iter() {
                    acc.union_with(&up[v]);
                }
                if acc != up[w] {
                    up[w] = acc;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        Preorder { up }
    }

    pub fn from_up_sets(up: Vec<WorldSet>) -> Self {
        Preorder { up }
    }

    pub fn len(&self) -> usize {
        self.up.len()
    }

    pub fn is_empty(&self) -> bool {
        self.up.is_empty()
    }

    pub fn leq(&self, a: WorldId, b: WorldId) -> bool {
        self.up[a].contains(b)
    }

    pub fn up(&self, w: WorldId) -> &WorldSet {
        &self.up[w]
    }

    pub fn pairs(&self) -> Vec<(WorldId, WorldId)> {
        (0..self.len())
            .flat_map(|a| self.up[a].iter().map(move |b| (a, b)))
            .collect()
    }

    pub fn upward_closure(&self, s: &WorldSet) -> WorldSet {
        let mut r = WorldSet::new();
        for w in s.iter() {
            r.union_with(&self.up[w]);
        }
        r
    }

    pub fn is_up_set(&self, s: &WorldSet) -> bool {
        s.iter().all(|w| self.up[w].is_subset(s))
    }

    /// Worlds all of whose successors lie in `s`.
    pub fn box_of(&self, s: &WorldSet) -> WorldSet {
        (0..self.len()).filter(|&w| self.up[w].is_subset(s)).collect()
    }

    /// All up-sets, in increasing order of their bit pattern.
    pub fn up_sets(&self) -> Vec<WorldSet> {
        let n = self.len();
        assert!(n <= 20, "up-set enumeration is exponential");
        (0u64..(1 << n))
            .map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect::<WorldSet>())
            .filter(|s| self.is_up_set(s))
            .collect()
    }

    pub fn violations(&self) -> Vec<Violation> {
        let n = self.len();
        let mut out = Vec::new();
        for w in 0..n {
            if let Some(v) = self.up[w].iter().find(|&v| v >= n) {
                out.push(Violation::WorldOutOfRange { world: v });
            }
            if !self.up[w].contains(w) {
                out.push(Violation::NotReflexive { world: w });
            }
        }
        for a in 0..n {
            for b in self.up[a].iter().filter(|&b| b < n) {
                for c in self.up[b].iter() {
                    if !self.up[a].contains(c) {
                        out.push(Violation::NotTransitive { a, b, c });
                    }
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------- relations

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Relation {
    succ: Vec<WorldSet>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameCondition {
    C1,
    C2,
}

impl Relation {
    pub fn empty(n: usize) -> Self {
        Relation { succ: vec![WorldSet::new(); n] }
    }

    pub fn from_pairs(n: usize, pairs: &[(WorldId, WorldId)]) -> Self {
        let mut r = Relation::empty(n);
        for &(a, b) in pairs {
            r.add(a, b);
        }
        r
    }

    pub fn from_succ(succ: Vec<WorldSet>) -> Self {
        Relation { succ }
    }

    pub fn carrier(&self) -> usize {
        self.succ.len()
    }

    pub fn add(&mut self, a: WorldId, b: WorldId) {
        if a >= self.succ.len() {
            self.succ.resize(a + 1, WorldSet::new());
        }
        self.succ[a].insert(b);
    }

    pub fn remove(&mut self, a: WorldId, b: WorldId) {
        if a < self.succ.len() {
            self.succ[a].remove(b);
        }
    }

    pub fn contains(&self, a: WorldId, b: WorldId) -> bool {
        self.succ.get(a).is_some_and(|s| s.contains(b))
    }

    pub fn succ(&self, a: WorldId) -> &WorldSet {
        &self.succ[a]
    }

    pub fn is_empty(&self) -> bool {
        self.succ.iter().all(|s| s.is_empty())
    }

    pub fn pairs(&self) -> Vec<(WorldId, WorldId)> {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(a, s)| s.iter().map(move |b| (a, b)))
            .collect()
    }

    pub fn union_with(&mut self, o: &Relation) {
        if self.succ.len() < o.succ.len() {
            self.succ.resize(o.succ.len(), WorldSet::new());
        }
        for (a, s) in o.succ.iter().enumerate() {
            self.succ[a].union_with(s);
        }
    }

    /// First this, then `o`.
    pub fn then(&self, o: &Relation) -> Relation {
        let succ = self
            .succ
            .iter()
            .map(|s| {
                let mut acc = WorldSet::new();
                for u in s.iter() {
                    if let Some(t) = o.succ.get(u) {
                        acc.union_with(t);
                    }
                }
                acc
            })
            .collect();
        Relation { succ }
    }

    /// Worlds with some successor in `s`.
    pub fn exists_in(&self, s: &WorldSet) -> WorldSet {
        (0..self.succ.len()).filter(|&w| self.succ[w].intersects(s)).collect()
    }

    /// Worlds all of whose successors are in `s` (worlds beyond the carrier
    /// of the relation are vacuously included up to `n`).
    pub fn all_in(&self, s: &WorldSet, n: usize) -> WorldSet {
        (0..n)
            .filter(|&w| self.succ.get(w).is_none_or(|t| t.is_subset(s)))
            .collect()
    }

    pub fn rename(&self, n: usize, f: impl Fn(WorldId) -> WorldId) -> Relation {
        let mut r = Relation::empty(n);
        for (a, b) in self.pairs() {
            r.add(f(a), f(b));
        }
        r
    }

    /// First violated condition: (c1) `w ≤ w'`, `R(w,v)` with no `v' ≥ v`,
    /// `R(w',v')`, witness `(w, w', v)`; (c2) `R(w,v)`, `v ≤ v'` with no
    /// `w' ≥ w`, `R(w',v')`, witness `(w, v, v')`.
    pub fn frame_violations(&self, leq: &Preorder) -> Vec<(FrameCondition, [WorldId; 3])> {
        let n = leq.len();
        let mut out = Vec::new();
        for w in 0..self.succ.len().min(n) {
            for v in self.succ[w].iter() {
                for w2 in leq.up(w).iter() {
                    if !leq.up(v).intersects(self.succ_or_empty(w2)) {
                        out.push((FrameCondition::C1, [w, w2, v]));
                    }
                }
                if v >= n {
                    continue;
                }
                for v2 in leq.up(v).iter() {
                    if !leq.up(w).iter().any(|w2| self.contains(w2, v2)) {
                        out.push((FrameCondition::C2, [w, v, v2]));
                    }
                }
            }
        }
        out
    }

    fn succ_or_empty(&self, w: WorldId) -> &WorldSet {
        static EMPTY: WorldSet = WorldSet(SmallVec::new_const());
        self.succ.get(w).unwrap_or(&EMPTY)
    }

    pub fn satisfies_frame_conditions(&self, leq: &Preorder) -> bool {
        let n = leq.len();
        for w in 0..self.succ.len().min(n) {
            for v in self.succ[w].iter() {
                if v >= n {
                    return false;
                }
                for w2 in leq.up(w).iter() {
                    if !leq.up(v).intersects(self.succ_or_empty(w2)) {
                        return false;
                    }
                }
                for v2 in leq.up(v).iter() {
                    if !leq.up(w).iter().any(|w2| self.contains(w2, v2)) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

// ---------------------------------------------------------------- valuations

pub type Valuation = BTreeMap<Atom, WorldSet>;

pub fn val_get<'a>(v: &'a Valuation, a: &Atom) -> &'a WorldSet {
    static EMPTY: WorldSet = WorldSet(SmallVec::new_const());
    v.get(a).unwrap_or(&EMPTY)
}

fn valuation_violations(leq: &Preorder, v: &Valuation, sign: char, out: &mut Vec<Violation>) {
    for (atom, set) in v {
        for w in set.iter() {
            if w >= leq.len() {
                out.push(Violation::WorldOutOfRange { world: w });
                continue;
            }
            if let Some(to) = leq.up(w).iter().find(|&u| !set.contains(u)) {
                out.push(Violation::NotMonotone { atom: *atom, sign, from: w, to });
            }
        }
    }
}

// ---------------------------------------------------------------- violations

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    WorldOutOfRange { world: WorldId },
    NotReflexive { world: WorldId },
    NotTransitive { a: WorldId, b: WorldId, c: WorldId },
    NotMonotone { atom: Atom, sign: char, from: WorldId, to: WorldId },
    Frame { condition: FrameCondition, key: String, witness: [WorldId; 3] },
    KeyOutsideStratum { key: String },
    DuplicateKey { key: String },
    BadStratum { index: usize },
    WrongFlavor(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::WorldOutOfRange { world } => write!(f, "world {world} out of range"),
            Violation::NotReflexive { world } => write!(f, "leq not reflexive at {world}"),
            Violation::NotTransitive { a, b, c } => {
                write!(f, "leq not transitive: {a} <= {b} <= {c}")
            }
            Violation::NotMonotone { atom, sign, from, to } => {
                write!(f, "(mon) fails for {atom}{sign}: holds at {from}, not at {to} >= {from}")
            }
            Violation::Frame { condition, key, witness } => {
                let name = match condition {
                    FrameCondition::C1 => "c1",
                    FrameCondition::C2 => "c2",
                };
                write!(f, "({name}) violated at key {key} with witness {witness:?}")
            }
            Violation::KeyOutsideStratum { key } => write!(f, "key {key} exceeds its stratum"),
            Violation::DuplicateKey { key } => write!(f, "duplicate key {key}"),
            Violation::BadStratum { index } => write!(f, "unknown stratum {index}"),
            Violation::WrongFlavor(s) => write!(f, "wrong model flavor: {s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid input model: {0}")]
    InvalidInput(String),
    #[error("model file: {0}")]
    Format(String),
}

fn invalid(vs: &[Violation]) -> ModelError {
    ModelError::InvalidInput(vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))
}

// ---------------------------------------------------------------- Nelsonian models

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct NelModel {
    pub leq: Preorder,
    pub vplus: Valuation,
    pub vminus: Valuation,
}

impl NelModel {
    pub fn len(&self) -> usize {
        self.leq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leq.is_empty()
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = self.leq.violations();
        valuation_violations(&self.leq, &self.vplus, '+', &mut out);
        valuation_violations(&self.leq, &self.vminus, '-', &mut out);
        out
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct BiStratum {
    pub plus: WorldSet,
    pub minus: WorldSet,
}

/// Relation table indexed by bi-sets.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct BiTable {
    strata: Vec<BiStratum>,
    entries: BTreeMap<(usize, BiSet), Relation>,
    duplicates: Vec<String>,
}

impl BiTable {
    /// Exact-key table over a carrier of `n` worlds.
    pub fn exact(n: usize) -> Self {
        BiTable {
            strata: vec![BiStratum { plus: WorldSet::full(n), minus: WorldSet::full(n) }],
            ..Default::default()
        }
    }

    pub fn with_strata(strata: Vec<BiStratum>) -> Self {
        BiTable { strata, ..Default::default() }
    }

    pub fn strata(&self) -> &[BiStratum] {
        &self.strata
    }

    pub fn is_exact(&self, n: usize) -> bool {
        self.strata.len() == 1
            && self.strata[0].plus == WorldSet::full(n)
            && self.strata[0].minus == WorldSet::full(n)
    }

    /// Stores `rel` under `key` in stratum `s`; a second insert of the same
    /// key is remembered as a duplicate and reported by validation.
    pub fn insert(&mut self, s: usize, key: BiSet, rel: Relation) {
        if self.entries.contains_key(&(s, key.clone())) {
            self.duplicates.push(format!("{key}"));
        }
        self.entries.insert((s, key), rel);
    }

    /// Adds pairs to the entry at `(s, key)`, creating it if needed.
    pub fn merge(&mut self, s: usize, key: BiSet, rel: &Relation) {
        self.entries
            .entry((s, key))
            .or_insert_with(|| Relation::empty(rel.carrier()))
            .union_with(rel);
    }

    pub fn get(&self, s: usize, key: &BiSet) -> Option<&Relation> {
        self.entries.get(&(s, key.clone()))
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, &BiSet, &Relation)> {
        self.entries.iter().map(|((s, k), r)| (*s, k, r))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The same table with the two components of every stratum and key
    /// exchanged.
    pub fn swapped(&self) -> BiTable {
        BiTable {
            strata: self.strata.iter().map(|st| BiStratum { plus: st.minus.clone(), minus: st.plus.clone() }).collect(),
            entries: self.entries.iter().map(|((s, k), r)| ((*s, k.swap()), r.clone())).collect(),
            duplicates: self.duplicates.clone(),
        }
    }

    pub fn lookup(&self, key: &BiSet, n: usize) -> Relation {
        let mut out = Relation::empty(n);
        for (s, st) in self.strata.iter().enumerate() {
            let k = BiSet::new(key.plus.intersect(&st.plus), key.minus.intersect(&st.minus));
            if let Some(r) = self.entries.get(&(s, k)) {
                out.union_with(r);
            }
        }
        out
    }

    fn violations(&self, leq: &Preorder, out: &mut Vec<Violation>) {
        for d in &self.duplicates {
            out.push(Violation::DuplicateKey { key: d.clone() });
        }
        for ((s, key), rel) in &self.entries {
            let Some(st) = self.strata.get(*s) else {
                out.push(Violation::BadStratum { index: *s });
                continue;
            };
            if !key.plus.is_subset(&st.plus) || !key.minus.is_subset(&st.minus) {
                out.push(Violation::KeyOutsideStratum { key: key.to_string() });
            }
            for (condition, witness) in rel.frame_violations(leq) {
                out.push(Violation::Frame { condition, key: key.to_string(), witness });
            }
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CondNelModel {
    pub base: NelModel,
    pub table: BiTable,
}

impl CondNelModel {
    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn from_nel(base: NelModel) -> Self {
        let n = base.len();
        CondNelModel { base, table: BiTable::exact(n) }
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = self.base.violations();
        self.table.violations(&self.base.leq, &mut out);
        out
    }

    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    pub fn lookup(&self, key: &BiSet) -> Relation {
        self.table.lookup(key, self.len())
    }
}

// ---------------------------------------------------------------- intuitionistic models

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct SetTable {
    strata: Vec<WorldSet>,
    entries: BTreeMap<(usize, WorldSet), Relation>,
    duplicates: Vec<String>,
}

impl SetTable {
    pub fn exact(n: usize) -> Self {
        SetTable { strata: vec![WorldSet::full(n)], ..Default::default() }
    }

    pub fn with_strata(strata: Vec<WorldSet>) -> Self {
        SetTable { strata, ..Default::default() }
    }

    pub fn strata(&self) -> &[WorldSet] {
        &self.strata
    }

    pub fn is_exact(&self, n: usize) -> bool {
        self.strata.len() == 1 && self.strata[0] == WorldSet::full(n)
    }

    pub fn insert(&mut self, s: usize, key: WorldSet, rel: Relation) {
        if self.entries.contains_key(&(s, key.clone())) {
            self.duplicates.push(format!("{key}"));
        }
        self.entries.insert((s, key), rel);
    }

    pub fn merge(&mut self, s: usize, key: WorldSet, rel: &Relation) {
        self.entries
            .entry((s, key))
            .or_insert_with(|| Relation::empty(rel.carrier()))
            .union_with(rel);
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, &WorldSet, &Relation)> {
        self.entries.iter().map(|((s, k), r)| (*s, k, r))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, key: &WorldSet, n: usize) -> Relation {
        let mut out = Relation::empty(n);
        for (s, st) in self.strata.iter().enumerate() {
            if let Some(r) = self.entries.get(&(s, key.intersect(st))) {
                out.union_with(r);
            }
        }
        out
    }

    fn violations(&self, leq: &Preorder, out: &mut Vec<Violation>) {
        for d in &self.duplicates {
            out.push(Violation::DuplicateKey { key: d.clone() });
        }
        for ((s, key), rel) in &self.entries {
            let Some(st) = self.strata.get(*s) else {
                out.push(Violation::BadStratum { index: *s });
                continue;
            };
            if !key.is_subset(st) {
                out.push(Violation::KeyOutsideStratum { key: key.to_string() });
            }
            for (condition, witness) in rel.frame_violations(leq) {
                out.push(Violation::Frame { condition, key: key.to_string(), witness });
            }
        }
    }
}

/// Extended conditional intuitionistic model; with an empty table it is a
/// plain intuitionistic Kripke model.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CondIntModel {
    pub leq: Preorder,
    pub val: Valuation,
    pub table: SetTable,
}

impl CondIntModel {
    pub fn len(&self) -> usize {
        self.leq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leq.is_empty()
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = self.leq.violations();
        valuation_violations(&self.leq, &self.val, ' ', &mut out);
        self.table.violations(&self.leq, &mut out);
        out
    }

    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    pub fn lookup(&self, key: &WorldSet) -> Relation {
        self.table.lookup(key, self.len())
    }
}

// ---------------------------------------------------------------- modal models

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ModalVal {
    Nelson { vplus: Valuation, vminus: Valuation },
    Int { val: Valuation },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ModalModel {
    pub leq: Preorder,
    pub val: ModalVal,
    pub r: Relation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelabelDirection {
    NelsonToInt,
    IntToNelson,
}

impl ModalModel {
    pub fn len(&self) -> usize {
        self.leq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leq.is_empty()
    }

    pub fn is_nelson(&self) -> bool {
        matches!(self.val, ModalVal::Nelson { .. })
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = self.leq.violations();
        match &self.val {
            ModalVal::Nelson { vplus, vminus } => {
                valuation_violations(&self.leq, vplus, '+', &mut out);
                valuation_violations(&self.leq, vminus, '-', &mut out);
            }
            ModalVal::Int { val } => valuation_violations(&self.leq, val, ' ', &mut out),
        }
        for (condition, witness) in self.r.frame_violations(&self.leq) {
            out.push(Violation::Frame { condition, key: "R".into(), witness });
        }
        out
    }

    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }
}

// ---------------------------------------------------------------- constructions

/// One world, every given atom verified and falsified there, and the single
/// key `({w},{w})` related to `(w,w)`.
pub fn single_world_total(atoms: &[Atom]) -> CondNelModel {
    let w = WorldSet::singleton(0);
    let val: Valuation = atoms.iter().map(|a| (*a, w.clone())).collect();
    let mut table = BiTable::exact(1);
    table.insert(0, BiSet::new(w.clone(), w), Relation::from_pairs(1, &[(0, 0)]));
    CondNelModel {
        base: NelModel { leq: Preorder::discrete(1), vplus: val.clone(), vminus: val },
        table,
    }
}

fn rename_val(v: &Valuation, f: impl Fn(WorldId) -> WorldId) -> Valuation {
    v.iter().map(|(a, s)| (*a, s.map(&f))).collect()
}

fn union_val(a: &Valuation, b: &Valuation) -> Valuation {
    let mut out = a.clone();
    for (atom, s) in b {
        out.entry(*atom).or_default().union_with(s);
    }
    out
}

/// Disjoint union of two models under a fresh root. Worlds of `m1` keep their
/// numbers, worlds of `m2` follow, the root is last. Each side's strata carry
/// over, so every side keeps answering exactly its own keys.
pub fn join_with_root(m1: &CondNelModel, m2: &CondNelModel) -> (CondNelModel, WorldId) {
    let (n1, n2) = (m1.len(), m2.len());
    let n = n1 + n2 + 1;
    let root = n1 + n2;
    let f1 = |w: WorldId| w;
    let f2 = |w: WorldId| w + n1;
    let mut up = Vec::with_capacity(n);
    for w in 0..n1 {
        up.push(m1.base.leq.up(w).map(f1));
    }
    for w in 0..n2 {
        up.push(m2.base.leq.up(w).map(f2));
    }
    up.push(WorldSet::full(n));
    let leq = Preorder::from_up_sets(up);
    let vplus = union_val(&rename_val(&m1.base.vplus, f1), &rename_val(&m2.base.vplus, f2));
    let vminus = union_val(&rename_val(&m1.base.vminus, f1), &rename_val(&m2.base.vminus, f2));

    let mut strata = Vec::new();
    let mut table_entries = Vec::new();
    for (m, f) in [(m1, &f1 as &dyn Fn(WorldId) -> WorldId), (m2, &f2)] {
        let offset = strata.len();
        for st in m.table.strata() {
            strata.push(BiStratum { plus: st.plus.map(f), minus: st.minus.map(f) });
        }
        for (s, key, rel) in m.table.entries() {
            let k = BiSet::new(key.plus.map(f), key.minus.map(f));
            table_entries.push((offset + s, k, rel.rename(n, f)));
        }
    }
    let mut table = BiTable::with_strata(strata);
    for (s, k, r) in table_entries {
        table.insert(s, k, r);
    }
    (CondNelModel { base: NelModel { leq, vplus, vminus }, table }, root)
}

fn relabel_to_int(vplus: &Valuation, vminus: &Valuation) -> Valuation {
    let mut val: Valuation = vplus.iter().map(|(a, s)| (Atom::p(a.index), s.clone())).collect();
    for (a, s) in vminus {
        val.insert(Atom::q(a.index), s.clone());
    }
    val
}

fn relabel_to_nelson(val: &Valuation) -> (Valuation, Valuation) {
    let mut vplus = Valuation::new();
    let mut vminus = Valuation::new();
    for (a, s) in val {
        match a.kind {
            crate::syntax::AtomKind::Plain => vplus.insert(*a, s.clone()),
            crate::syntax::AtomKind::Primed => vminus.insert(Atom::p(a.index), s.clone()),
        };
    }
    (vplus, vminus)
}

/// Conditional intuitionistic model whose worlds are the original worlds
/// followed by one world per stored accessibility pair. A pair `(w,v)` under
/// key `(X,Y)` becomes `w →X t →Y v`.
pub fn to_cond_int(m: &CondNelModel) -> Result<CondIntModel, ModelError> {
    m.validate().map_err(|v| invalid(&v))?;
    let n0 = m.len();
    let mut triples: Vec<(usize, WorldId, WorldId)> = Vec::new();
    let entries: Vec<(usize, &BiSet, &Relation)> = m.table.entries().collect();
    for (e, (_, _, rel)) in entries.iter().enumerate() {
        for (w, v) in rel.pairs() {
            triples.push((e, w, v));
        }
    }
    let n = n0 + triples.len();
    let mut up: Vec<WorldSet> = (0..n0).map(|w| m.base.leq.up(w).clone()).collect();
    for (i, &(e, w, v)) in triples.iter().enumerate() {
        let mut s = WorldSet::new();
        for (j, &(e2, w2, v2)) in triples.iter().enumerate() {
            if e2 == e && m.base.leq.leq(w, w2) && m.base.leq.leq(v, v2) {
                s.insert(n0 + j);
            }
        }
        debug_assert!(s.contains(n0 + i));
        up.push(s);
    }
    let leq = Preorder::from_up_sets(up);

    let mut strata: Vec<WorldSet> = Vec::new();
    let mut stratum_of = |s: &WorldSet| match strata.iter().position(|x| x == s) {
        Some(i) => i,
        None => {
            strata.push(s.clone());
            strata.len() - 1
        }
    };
    let mut table_parts = Vec::new();
    for (i, &(e, w, v)) in triples.iter().enumerate() {
        let (s, key, _) = entries[e];
        let st = &m.table.strata()[s];
        let t = n0 + i;
        let sp = stratum_of(&st.plus);
        let sm = stratum_of(&st.minus);
        table_parts.push((sp, key.plus.clone(), Relation::from_pairs(n, &[(w, t)])));
        table_parts.push((sm, key.minus.clone(), Relation::from_pairs(n, &[(t, v)])));
    }
    let mut table = SetTable::with_strata(strata);
    for (s, k, r) in table_parts {
        table.merge(s, k, &r);
    }
    Ok(CondIntModel { leq, val: relabel_to_int(&m.base.vplus, &m.base.vminus), table })
}

/// How a Nelsonian key `(X,Y)` is read off an intuitionistic table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyReading {
    /// `R_X` followed by `R_Y`.
    Composed,
    /// `R_X` alone.
    PlusOnly,
    /// `R_Y` alone.
    MinusOnly,
}

/// Conditional Nelsonian model on the same frame; `p_i` is verified where
/// `p_i` holds and falsified where `q_i` holds.
pub fn to_cond_nelson(m: &CondIntModel) -> Result<CondNelModel, ModelError> {
    to_cond_nelson_with(m, KeyReading::Composed)
}

pub fn to_cond_nelson_with(m: &CondIntModel, reading: KeyReading) -> Result<CondNelModel, ModelError> {
    m.validate().map_err(|v| invalid(&v))?;
    let n = m.len();
    let (vplus, vminus) = relabel_to_nelson(&m.val);
    let base = NelModel { leq: m.leq.clone(), vplus, vminus };
    let sets = m.table.strata();
    let entries: Vec<(usize, &WorldSet, &Relation)> = m.table.entries().collect();
    let table = match reading {
        KeyReading::Composed => {
            let mut strata = Vec::new();
            for a in sets {
                for b in sets {
                    strata.push(BiStratum { plus: a.clone(), minus: b.clone() });
                }
            }
            let mut t = BiTable::with_strata(strata);
            for &(s1, k1, r1) in &entries {
                for &(s2, k2, r2) in &entries {
                    t.insert(s1 * sets.len() + s2, BiSet::new(k1.clone(), k2.clone()), r1.then(r2));
                }
            }
            t
        }
        KeyReading::PlusOnly | KeyReading::MinusOnly => {
            let plus = reading == KeyReading::PlusOnly;
            let strata = sets
                .iter()
                .map(|s| {
                    if plus {
                        BiStratum { plus: s.clone(), minus: WorldSet::new() }
                    } else {
                        BiStratum { plus: WorldSet::new(), minus: s.clone() }
                    }
                })
                .collect();
            let mut t = BiTable::with_strata(strata);
            for &(s, k, r) in &entries {
                let key = if plus {
                    BiSet::new(k.clone(), WorldSet::new())
                } else {
                    BiSet::new(WorldSet::new(), k.clone())
                };
                t.insert(s, key, r.clone());
            }
            t
        }
    };
    let _ = n;
    Ok(CondNelModel { base, table })
}

/// Swaps between a two-valuation modal model and its one-valuation copy over
/// `p_i`/`q_i`; the frame is untouched.
pub fn relabel_modal(m: &ModalModel, dir: RelabelDirection) -> Result<ModalModel, ModelError> {
    m.validate().map_err(|v| invalid(&v))?;
    let val = match (&m.val, dir) {
        (ModalVal::Nelson { vplus, vminus }, RelabelDirection::NelsonToInt) => {
            ModalVal::Int { val: relabel_to_int(vplus, vminus) }
        }
        (ModalVal::Int { val }, RelabelDirection::IntToNelson) => {
            let (vplus, vminus) = relabel_to_nelson(val);
            ModalVal::Nelson { vplus, vminus }
        }
        _ => {
            return Err(ModelError::InvalidInput(format!(
                "cannot relabel {} model in direction {dir:?}",
                if m.is_nelson() { "Nelsonian" } else { "intuitionistic" }
            )))
        }
    };
    Ok(ModalModel { leq: m.leq.clone(), val, r: m.r.clone() })
}

// ---------------------------------------------------------------- model files

/// Any model kind, as read from or written to a model file.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum AnyModel {
    Nel(NelModel),
    CNel(CondNelModel),
    CInt(CondIntModel),
    Modal(ModalModel),
}

impl AnyModel {
    pub fn len(&self) -> usize {
        match self {
            AnyModel::Nel(m) => m.len(),
            AnyModel::CNel(m) => m.len(),
            AnyModel::CInt(m) => m.len(),
            AnyModel::Modal(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn violations(&self) -> Vec<Violation> {
        match self {
            AnyModel::Nel(m) => m.violations(),
            AnyModel::CNel(m) => m.violations(),
            AnyModel::CInt(m) => m.violations(),
            AnyModel::Modal(m) => m.violations(),
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    #[serde(rename = "type")]
    kind: String,
    worlds: usize,
    leq: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    vplus: BTreeMap<String, Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vminus: Option<BTreeMap<String, Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    strata: Option<Vec<StratumFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    relations: Option<Vec<RelationFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r: Option<Vec<(usize, usize)>>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct StratumFile {
    plus: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    minus: Option<Vec<usize>>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
struct RelationFile {
    #[serde(default, skip_serializing_if = "is_zero")]
    stratum: usize,
    plus_key: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    minus_key: Option<Vec<usize>>,
    pairs: Vec<(usize, usize)>,
}

fn is_zero(x: &usize) -> bool {
    *x == 0
}

fn val_to_file(v: &Valuation) -> BTreeMap<String, Vec<usize>> {
    v.iter().filter(|(_, s)| !s.is_empty()).map(|(a, s)| (a.to_string(), s.to_vec())).collect()
}

fn val_from_file(v: &BTreeMap<String, Vec<usize>>) -> Result<Valuation, ModelError> {
    v.iter()
        .map(|(name, ws)| {
            let f = crate::syntax::parse_any(name)
                .map_err(|e| ModelError::Format(format!("bad atom `{name}`: {e}")))?;
            match f {
                crate::syntax::Tree::Leaf(a) => Ok((a, ws.iter().copied().collect())),
                _ => Err(ModelError::Format(format!("bad atom `{name}`"))),
            }
        })
        .collect()
}

fn set_vec(s: &WorldSet) -> Vec<usize> {
    s.to_vec()
}

impl AnyModel {
    pub fn to_json(&self) -> String {
        let mut f = ModelFile { worlds: self.len(), ..Default::default() };
        match self {
            AnyModel::Nel(m) => {
                f.kind = "nel".into();
                f.leq = m.leq.pairs();
                f.vplus = val_to_file(&m.vplus);
                f.vminus = Some(val_to_file(&m.vminus));
            }
            AnyModel::CNel(m) => {
                f.kind = "cnel".into();
                f.leq = m.base.leq.pairs();
                f.vplus = val_to_file(&m.base.vplus);
                f.vminus = Some(val_to_file(&m.base.vminus));
                if !m.table.is_exact(m.len()) {
                    f.strata = Some(
                        m.table
                            .strata()
                            .iter()
                            .map(|s| StratumFile { plus: set_vec(&s.plus), minus: Some(set_vec(&s.minus)) })
                            .collect(),
                    );
                }
                f.relations = Some(
                    m.table
                        .entries()
                        .map(|(s, k, r)| RelationFile {
                            stratum: s,
                            plus_key: set_vec(&k.plus),
                            minus_key: Some(set_vec(&k.minus)),
                            pairs: r.pairs(),
                        })
                        .collect(),
                );
            }
            AnyModel::CInt(m) => {
                f.kind = "cint".into();
                f.leq = m.leq.pairs();
                f.vplus = val_to_file(&m.val);
                if !m.table.is_exact(m.len()) {
                    f.strata = Some(
                        m.table
                            .strata()
                            .iter()
                            .map(|s| StratumFile { plus: set_vec(s), minus: None })
                            .collect(),
                    );
                }
                f.relations = Some(
                    m.table
                        .entries()
                        .map(|(s, k, r)| RelationFile {
                            stratum: s,
                            plus_key: set_vec(k),
                            minus_key: None,
                            pairs: r.pairs(),
                        })
                        .collect(),
                );
            }
            AnyModel::Modal(m) => {
                f.leq = m.leq.pairs();
                match &m.val {
                    ModalVal::Nelson { vplus, vminus } => {
                        f.kind = "mnel".into();
                        f.vplus = val_to_file(vplus);
                        f.vminus = Some(val_to_file(vminus));
                    }
                    ModalVal::Int { val } => {
                        f.kind = "mint".into();
                        f.vplus = val_to_file(val);
                    }
                }
                f.r = Some(m.r.pairs());
            }
        }
        serde_json::to_string_pretty(&f).expect("model serialization")
    }

    /// Reads a model file. Structural problems are errors; semantic ones
    /// (frame conditions, monotonicity) are left to validation.
    pub fn from_json(text: &str) -> Result<AnyModel, ModelError> {
        let f: ModelFile = serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
        let n = f.worlds;
        if n == 0 {
            return Err(ModelError::Format("a model needs at least one world".into()));
        }
        let check = |pairs: &[(usize, usize)]| -> Result<(), ModelError> {
            match pairs.iter().find(|(a, b)| *a >= n || *b >= n) {
                Some(p) => Err(ModelError::Format(format!("pair {p:?} outside {n} worlds"))),
                None => Ok(()),
            }
        };
        check(&f.leq)?;
        let leq = Preorder::from_pairs(n, &f.leq);
        let vplus = val_from_file(&f.vplus)?;
        let vminus = f.vminus.as_ref().map(val_from_file).transpose()?;
        let need_none = |what: &str, present: bool| {
            if present {
                Err(ModelError::Format(format!("field `{what}` not allowed for type {}", f.kind)))
            } else {
                Ok(())
            }
        };
        match f.kind.as_str() {
            "nel" => {
                need_none("relations", f.relations.is_some())?;
                need_none("r", f.r.is_some())?;
                Ok(AnyModel::Nel(NelModel { leq, vplus, vminus: vminus.unwrap_or_default() }))
            }
            "cnel" => {
                need_none("r", f.r.is_some())?;
                let mut table = match &f.strata {
                    None => BiTable::exact(n),
                    Some(ss) => BiTable::with_strata(
                        ss.iter()
                            .map(|s| BiStratum {
                                plus: s.plus.iter().copied().collect(),
                                minus: s.minus.clone().unwrap_or_default().into_iter().collect(),
                            })
                            .collect(),
                    ),
                };
                for r in f.relations.iter().flatten() {
                    check(&r.pairs)?;
                    let key = BiSet::new(
                        r.plus_key.iter().copied().collect(),
                        r.minus_key.clone().unwrap_or_default().into_iter().collect(),
                    );
                    table.insert(r.stratum, key, Relation::from_pairs(n, &r.pairs));
                }
                Ok(AnyModel::CNel(CondNelModel {
                    base: NelModel { leq, vplus, vminus: vminus.unwrap_or_default() },
                    table,
                }))
            }
            "cint" => {
                need_none("vminus", vminus.is_some())?;
                need_none("r", f.r.is_some())?;
                let mut table = match &f.strata {
                    None => SetTable::exact(n),
                    Some(ss) => SetTable::with_strata(
                        ss.iter().map(|s| s.plus.iter().copied().collect()).collect(),
                    ),
                };
                for r in f.relations.iter().flatten() {
                    check(&r.pairs)?;
                    if r.minus_key.is_some() {
                        return Err(ModelError::Format("cint relations take no minusKey".into()));
                    }
                    table.insert(r.stratum, r.plus_key.iter().copied().collect(), Relation::from_pairs(n, &r.pairs));
                }
                Ok(AnyModel::CInt(CondIntModel { leq, val: vplus, table }))
            }
            "mnel" | "mint" => {
                need_none("relations", f.relations.is_some())?;
                let pairs = f.r.clone().unwrap_or_default();
                check(&pairs)?;
                let val = if f.kind == "mnel" {
                    ModalVal::Nelson { vplus, vminus: vminus.unwrap_or_default() }
                } else {
                    need_none("vminus", vminus.is_some())?;
                    ModalVal::Int { val: vplus }
                };
                Ok(AnyModel::Modal(ModalModel { leq, val, r: Relation::from_pairs(n, &pairs) }))
            }
            other => Err(ModelError::Format(format!("unknown model type `{other}`"))),
        }
    }
}

/// Sorted, deduplicated atoms of a valuation pair.
pub fn valuation_atoms(vs: &[&Valuation]) -> Vec<Atom> {
    let set: BTreeSet<Atom> = vs.iter().flat_map(|v| v.keys().copied()).collect();
    set.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ws(xs: &[usize]) -> WorldSet {
        xs.iter().copied().collect()
    }

    #[test]
    fn world_set_basics() {
        let mut a = ws(&[0, 3, 70]);
        assert!(a.contains(70) && !a.contains(1));
        assert_eq!(a.len(), 3);
        a.remove(70);
        assert_eq!(a, ws(&[0, 3]));
        assert_eq!(ws(&[1, 2]).union(&ws(&[2, 5])), ws(&[1, 2, 5]));
        assert_eq!(ws(&[1, 2]).intersect(&ws(&[2, 5])), ws(&[2]));
        assert_eq!(ws(&[1, 100]).minus(&ws(&[100])), ws(&[1]));
        assert!(ws(&[1]).is_subset(&ws(&[1, 2])));
        assert!(!ws(&[100]).is_subset(&ws(&[1])));
        assert_eq!(WorldSet::full(3).to_vec(), vec![0, 1, 2]);
    }

    #[test]
    fn preorder_closure_and_checks() {
        let p = Preorder::closure_of(3, &[(0, 1), (1, 2)]);
        assert!(p.leq(0, 2));
        assert!(p.violations().is_empty());
        let bad = Preorder::from_pairs(3, &[(0, 0), (1, 1), (2, 2), (0, 1), (1, 2)]);
        assert_eq!(bad.violations(), vec![Violation::NotTransitive { a: 0, b: 1, c: 2 }]);
        let bad = Preorder::from_pairs(2, &[(0, 0)]);
        assert_eq!(bad.violations(), vec![Violation::NotReflexive { world: 1 }]);
        assert_eq!(p.up_sets().len(), 4);
    }

    #[test]
    fn single_reflexive_world_with_empty_table_is_valid() {
        let m = CondNelModel::from_nel(NelModel {
            leq: Preorder::discrete(1),
            vplus: Valuation::new(),
            vminus: Valuation::new(),
        });
        assert!(m.validate().is_ok());
    }

    #[test]
    fn c2_violation_has_witness() {
        // w = 0 <= v = 1, key ({w},{}), pair (v,w): nothing >= v reaches v.
        let leq = Preorder::closure_of(2, &[(0, 1)]);
        let mut table = BiTable::exact(2);
        table.insert(0, BiSet::new(ws(&[0]), ws(&[])), Relation::from_pairs(2, &[(1, 0)]));
        let m = CondNelModel {
            base: NelModel { leq, vplus: Valuation::new(), vminus: Valuation::new() },
            table,
        };
        let v = m.violations();
        assert_eq!(
            v,
            vec![Violation::Frame {
                condition: FrameCondition::C2,
                key: "({0}, {})".into(),
                witness: [1, 0, 1]
            }]
        );
    }

    #[test]
    fn c1_violation_has_witness() {
        let leq = Preorder::closure_of(2, &[(0, 1)]);
        let r = Relation::from_pairs(2, &[(0, 0)]);
        assert_eq!(
            r.frame_violations(&leq),
            vec![(FrameCondition::C1, [0, 1, 0]), (FrameCondition::C2, [0, 0, 1])]
        );
        assert!(!r.satisfies_frame_conditions(&leq));
        let r = Relation::from_pairs(2, &[(0, 0), (1, 1), (0, 1)]);
        assert!(r.frame_violations(&leq).is_empty());
        assert!(r.satisfies_frame_conditions(&leq));
    }

    #[test]
    fn empty_relation_always_satisfies_frame_conditions() {
        for pairs in [vec![], vec![(0, 1)], vec![(0, 1), (1, 2)], vec![(2, 0), (1, 0)]] {
            let leq = Preorder::closure_of(3, &pairs);
            assert!(Relation::empty(3).frame_violations(&leq).is_empty());
        }
    }

    #[test]
    fn monotonicity_violation() {
        let leq = Preorder::closure_of(2, &[(0, 1)]);
        let vplus: Valuation = [(Atom::p(0), ws(&[0]))].into();
        let m = NelModel { leq, vplus, vminus: Valuation::new() };
        assert_eq!(
            m.violations(),
            vec![Violation::NotMonotone { atom: Atom::p(0), sign: '+', from: 0, to: 1 }]
        );
    }

    #[test]
    fn trivial_model() {
        let m = single_world_total(&[Atom::p(0)]);
        assert!(m.validate().is_ok());
        assert_eq!(m.table.len(), 1);
        assert!(single_world_total(&[]).validate().is_ok());
    }

    #[test]
    fn join_of_trivial_models() {
        let a = single_world_total(&[Atom::p(0)]);
        let b = single_world_total(&[Atom::p(1)]);
        let (j, root) = join_with_root(&a, &b);
        assert_eq!(root, 2);
        assert_eq!(j.len(), 3);
        assert!(j.validate().is_ok(), "{:?}", j.violations());
        assert!(j.base.leq.leq(root, 0) && j.base.leq.leq(root, 1) && !j.base.leq.leq(0, 1));
        assert!(!val_get(&j.base.vplus, &Atom::p(0)).contains(root));
        // key ({0,2},{0}) intersected with the first side is ({0},{0})
        let r = j.lookup(&BiSet::new(ws(&[0, 2]), ws(&[0])));
        assert_eq!(r.pairs(), vec![(0, 0)]);
        assert!(j.lookup(&BiSet::new(ws(&[2]), ws(&[0]))).is_empty());
    }

    #[test]
    fn to_cond_int_single_triple() {
        let m = single_world_total(&[Atom::p(0)]);
        let i = to_cond_int(&m).unwrap();
        assert_eq!(i.len(), 2);
        assert!(i.validate().is_ok(), "{:?}", i.violations());
        // both halves of the key ({0},{0}) land on the same entry
        assert_eq!(i.lookup(&ws(&[0])).pairs(), vec![(0, 1), (1, 0)]);
        assert_eq!(i.lookup(&ws(&[0, 1])).pairs(), vec![(0, 1), (1, 0)]);
        assert!(i.lookup(&ws(&[1])).is_empty());
    }

    #[test]
    fn to_cond_int_empty_table() {
        let base = NelModel { leq: Preorder::discrete(2), vplus: Valuation::new(), vminus: Valuation::new() };
        let i = to_cond_int(&CondNelModel::from_nel(base)).unwrap();
        assert_eq!(i.len(), 2);
        assert!(i.table.is_empty());
    }

    #[test]
    fn to_cond_nelson_composes() {
        let mut table = SetTable::exact(3);
        let (x, y) = (ws(&[0]), ws(&[1]));
        table.insert(0, x.clone(), Relation::from_pairs(3, &[(0, 1)]));
        table.insert(0, y.clone(), Relation::from_pairs(3, &[(1, 2)]));
        let m = CondIntModel { leq: Preorder::discrete(3), val: Valuation::new(), table };
        let n = to_cond_nelson(&m).unwrap();
        assert!(n.validate().is_ok());
        assert_eq!(n.lookup(&BiSet::new(x.clone(), y.clone())).pairs(), vec![(0, 2)]);
        assert!(n.lookup(&BiSet::new(y, x)).is_empty());
        let empty = CondIntModel { leq: Preorder::discrete(1), val: Valuation::new(), table: SetTable::exact(1) };
        assert!(to_cond_nelson(&empty).unwrap().table.is_empty());
    }

    #[test]
    fn relabel_is_an_involution() {
        let leq = Preorder::closure_of(2, &[(0, 1)]);
        let m = ModalModel {
            leq,
            val: ModalVal::Nelson {
                vplus: [(Atom::p(0), ws(&[1]))].into(),
                vminus: [(Atom::p(0), ws(&[0, 1]))].into(),
            },
            r: Relation::from_pairs(2, &[(0, 1), (1, 1)]),
        };
        let i = relabel_modal(&m, RelabelDirection::NelsonToInt).unwrap();
        assert_eq!(i.leq, m.leq);
        assert_eq!(i.r, m.r);
        let back = relabel_modal(&i, RelabelDirection::IntToNelson).unwrap();
        assert_eq!(back, m);
        assert!(relabel_modal(&m, RelabelDirection::IntToNelson).is_err());
    }

    #[test]
    fn duplicate_keys_rejected() {
        let mut t = BiTable::exact(1);
        t.insert(0, BiSet::default(), Relation::empty(1));
        t.insert(0, BiSet::default(), Relation::empty(1));
        let m = CondNelModel {
            base: NelModel { leq: Preorder::discrete(1), vplus: Valuation::new(), vminus: Valuation::new() },
            table: t,
        };
        assert!(matches!(m.violations()[0], Violation::DuplicateKey { .. }));
    }

    #[test]
    fn model_file_round_trip() {
        let m = AnyModel::CNel(single_world_total(&[Atom::p(0)]));
        let text = m.to_json();
        assert_eq!(AnyModel::from_json(&text).unwrap(), m);
        let (j, _) = join_with_root(&single_world_total(&[Atom::p(0)]), &single_world_total(&[]));
        let m = AnyModel::CNel(j);
        let text = m.to_json();
        let back = AnyModel::from_json(&text).unwrap();
        assert_eq!(back.to_json(), text);
        assert!(AnyModel::from_json(r#"{"type":"nel","worlds":1,"leq":[[0,3]]}"#).is_err());
        assert!(AnyModel::from_json(r#"{"type":"zzz","worlds":1,"leq":[]}"#).is_err());
    }
}
