//! Bounded countermodel search and random model sampling over small finite
//! frames.
//!
//! The search works on word-sized bitmasks (at most 64 worlds) and only hands
//! its result to the general model types at the end, where the certificate is
//! re-checked by the evaluators in `semantics`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::kripke::{
    single_world_total, AnyModel, BiSet, BiTable, CondIntModel, CondNelModel, ModalModel, ModalVal, NelModel,
    Preorder, Relation, SetTable, Valuation, WorldId, WorldSet,
};
use crate::par;
use crate::semantics::{holds_pair, Node, Program};
use crate::syntax::{antecedents_all, Atom, AtomKind, Formula, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Logic {
    N4CK,
    N4,
    FSKd,
    IntCK,
    IK,
}

impl std::str::FromStr for Logic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "n4ck" => Ok(Logic::N4CK),
            "n4" => Ok(Logic::N4),
            "fskd" => Ok(Logic::FSKd),
            "intck" => Ok(Logic::IntCK),
            "ik" => Ok(Logic::IK),
            _ => Err(format!("unknown logic `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    Exhaustive,
    Random(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    pub max_worlds: usize,
    pub max_formula_atoms: usize,
    pub relation_candidate_cap: usize,
    pub seed: u64,
    pub mode: SearchMode,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_worlds: 3,
            max_formula_atoms: 6,
            relation_candidate_cap: usize::MAX,
            seed: 0,
            mode: SearchMode::Exhaustive,
        }
    }
}

impl SearchBudget {
    pub fn exhaustive(max_worlds: usize) -> Self {
        SearchBudget { max_worlds, ..Default::default() }
    }

    pub fn random(max_worlds: usize, trials: u64, seed: u64) -> Self {
        SearchBudget { max_worlds, seed, mode: SearchMode::Random(trials), ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub model: AnyModel,
    pub world: WorldId,
    pub gamma: Vec<Formula>,
    pub delta: Vec<Formula>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(Certificate),
    /// Nothing found within the budget; not a validity claim.
    Exhausted(SearchBudget),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("ill-formed: {0}")]
    IllFormed(String),
    #[error("budget: {0}")]
    Budget(String),
}

// ---------------------------------------------------------------- masks

type Mask = u64;

/// A preorder as up-set masks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MaskOrder {
    pub up: Vec<Mask>,
}

impl MaskOrder {
    fn n(&self) -> usize {
        self.up.len()
    }

    fn full(&self) -> Mask {
        if self.n() == 64 {
            !0
        } else {
            (1 << self.n()) - 1
        }
    }

    fn box_of(&self, s: Mask) -> Mask {
        let mut r = 0;
        for (w, &u) in self.up.iter().enumerate() {
            if u & !s == 0 {
                r |= 1 << w;
            }
        }
        r
    }

    fn is_up(&self, s: Mask) -> bool {
        (0..self.n()).all(|w| s & (1 << w) == 0 || self.up[w] & !s == 0)
    }

    pub fn up_sets(&self) -> Vec<Mask> {
        (0..=self.full()).filter(|&s| self.is_up(s)).collect()
    }

    fn closure(&self, s: Mask) -> Mask {
        let mut r = 0;
        for w in 0..self.n() {
            if s & (1 << w) != 0 {
                r |= self.up[w];
            }
        }
        r
    }

    pub fn to_preorder(&self) -> Preorder {
        Preorder::from_up_sets(self.up.iter().map(|&m| mask_set(m)).collect())
    }
}

fn mask_set(m: Mask) -> WorldSet {
    (0..64).filter(|i| m & (1 << i) != 0).collect()
}

fn exists_in(r: &[Mask], s: Mask) -> Mask {
    let mut out = 0;
    for (w, &succ) in r.iter().enumerate() {
        if succ & s != 0 {
            out |= 1 << w;
        }
    }
    out
}

fn all_in(r: &[Mask], s: Mask) -> Mask {
    let mut out = 0;
    for (w, &succ) in r.iter().enumerate() {
        if succ & !s == 0 {
            out |= 1 << w;
        }
    }
    out
}

/// All preorders on `n` labelled worlds, in increasing order of the bitmask
/// over off-diagonal pairs.
pub fn preorders(n: usize) -> Vec<MaskOrder> {
    assert!((1..=5).contains(&n), "preorder enumeration supports 1..=5 worlds");
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b))).collect();
    let mut out = Vec::new();
    for bits in 0u64..(1 << pairs.len()) {
        let mut up: Vec<Mask> = (0..n).map(|w| 1 << w).collect();
        for (i, &(a, b)) in pairs.iter().enumerate() {
            if bits & (1 << i) != 0 {
                up[a] |= 1 << b;
            }
        }
        let transitive = (0..n).all(|a| {
            (0..n).all(|b| up[a] & (1 << b) == 0 || up[b] & !up[a] == 0)
        });
        if transitive {
            out.push(MaskOrder { up });
        }
    }
    out
}

fn frame_ok(o: &MaskOrder, r: &[Mask]) -> bool {
    let n = o.n();
    for w in 0..n {
        for v in 0..n {
            if r[w] & (1 << v) == 0 {
                continue;
            }
            for w2 in 0..n {
                if o.up[w] & (1 << w2) != 0 && o.up[v] & r[w2] == 0 {
                    return false;
                }
            }
            for v2 in 0..n {
                if o.up[v] & (1 << v2) != 0 && exists_in(r, 1 << v2) & o.up[w] == 0 {
                    return false;
                }
            }
        }
    }
    true
}

type Candidates = Arc<Vec<Vec<Mask>>>;

/// Every relation satisfying (c1)/(c2) on the frame, the empty one first,
/// then in increasing order of the adjacency bitmask. Cached per frame.
pub fn candidate_relations(o: &MaskOrder) -> Candidates {
    static CACHE: OnceLock<Mutex<HashMap<MaskOrder, Candidates>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(c) = cache.lock().unwrap().get(o) {
        return c.clone();
    }
    let n = o.n();
    assert!(n <= 4, "relation enumeration supports at most 4 worlds");
    let mut out = Vec::new();
    for bits in 0u64..(1 << (n * n)) {
        let r: Vec<Mask> = (0..n).map(|w| (bits >> (w * n)) & ((1 << n) - 1)).collect();
        if frame_ok(o, &r) {
            out.push(r);
        }
    }
    let c = Arc::new(out);
    cache.lock().unwrap().insert(o.clone(), c.clone());
    c
}

fn relation_of(r: &[Mask]) -> Relation {
    Relation::from_succ(r.iter().map(|&m| mask_set(m)).collect())
}

// ---------------------------------------------------------------- fast evaluation

/// A compiled pair `(Γ, Δ)` over the atoms it mentions.
struct Compiled {
    prog: Program,
    gamma: Vec<usize>,
    delta: Vec<usize>,
    atom_slot: Vec<Option<usize>>,
    antecedents: Vec<usize>,
}

impl Compiled {
    fn new(gamma: &[Formula], delta: &[Formula], atoms: &[Atom]) -> Self {
        let mut prog = Program::new();
        let g = gamma.iter().map(|f| prog.add(f)).collect();
        let d = delta.iter().map(|f| prog.add(f)).collect();
        let all: Vec<Formula> = gamma.iter().chain(delta).cloned().collect();
        let antecedents = antecedents_all(&all).iter().map(|a| prog.add(a)).collect();
        let atom_slot = prog
            .nodes()
            .iter()
            .map(|n| match n {
                Node::Atom(a) => atoms.iter().position(|b| b == a),
                _ => None,
            })
            .collect();
        Compiled { prog, gamma: g, delta: d, atom_slot, antecedents }
    }
}

/// Mask model: `plus[i]`/`minus[i]` for the i-th atom, a conditional table
/// keyed by bi-masks and one modal relation.
#[derive(Clone)]
struct FastModel<'a> {
    order: &'a MaskOrder,
    plus: Vec<Mask>,
    minus: Vec<Mask>,
    table: Vec<((Mask, Mask), Vec<Mask>)>,
    modal: Vec<Mask>,
}

impl FastModel<'_> {
    fn lookup(&self, k: (Mask, Mask)) -> Option<&[Mask]> {
        self.table.iter().find(|(key, _)| *key == k).map(|(_, r)| r.as_slice())
    }

    fn eval(&self, c: &Compiled, upto: Option<usize>) -> Vec<(Mask, Mask)> {
        let o = self.order;
        let full = o.full();
        let empty = vec![0; o.n()];
        let nodes = c.prog.nodes();
        let end = upto.map_or(nodes.len(), |u| u + 1);
        let mut out: Vec<(Mask, Mask)> = Vec::with_capacity(end);
        for (i, node) in nodes[..end].iter().enumerate() {
            let v = match *node {
                Node::Atom(_) => match c.atom_slot[i] {
                    Some(s) => (self.plus[s], self.minus[s]),
                    None => (0, 0),
                },
                Node::Neg(a) => (out[a].1, out[a].0),
                Node::And(a, b) => (out[a].0 & out[b].0, out[a].1 | out[b].1),
                Node::Or(a, b) => (out[a].0 | out[b].0, out[a].1 & out[b].1),
                Node::Imp(a, b) => (o.box_of((full & !out[a].0) | out[b].0), out[a].0 & out[b].1),
                Node::BoxTo(a, b) => {
                    let r = self.lookup(out[a]).unwrap_or(&empty);
                    (o.box_of(all_in(r, out[b].0)), exists_in(r, out[b].1))
                }
                Node::DiamTo(a, b) => {
                    let r = self.lookup(out[a]).unwrap_or(&empty);
                    (exists_in(r, out[b].0), o.box_of(all_in(r, out[b].1)))
                }
                Node::Box(a) => (o.box_of(all_in(&self.modal, out[a].0)), exists_in(&self.modal, out[a].1)),
                Node::Diamond(a) => (exists_in(&self.modal, out[a].0), o.box_of(all_in(&self.modal, out[a].1))),
            };
            out.push(v);
        }
        out
    }

    fn pair_worlds(&self, c: &Compiled) -> Mask {
        let v = self.eval(c, None);
        let mut acc = self.order.full();
        for &g in &c.gamma {
            acc &= v[g].0;
        }
        for &d in &c.delta {
            acc &= !v[d].0;
        }
        acc
    }

    fn to_valuations(&self, atoms: &[Atom]) -> (Valuation, Valuation) {
        let vp = atoms.iter().zip(&self.plus).filter(|(_, &m)| m != 0).map(|(a, &m)| (*a, mask_set(m))).collect();
        let vm = atoms.iter().zip(&self.minus).filter(|(_, &m)| m != 0).map(|(a, &m)| (*a, mask_set(m))).collect();
        (vp, vm)
    }

    fn to_model(&self, logic: Logic, atoms: &[Atom]) -> AnyModel {
        let n = self.order.n();
        let leq = self.order.to_preorder();
        let (vplus, vminus) = self.to_valuations(atoms);
        match logic {
            Logic::N4 => AnyModel::Nel(NelModel { leq, vplus, vminus }),
            Logic::N4CK => {
                let mut table = BiTable::exact(n);
                for ((p, m), r) in &self.table {
                    table.insert(0, BiSet::new(mask_set(*p), mask_set(*m)), relation_of(r));
                }
                AnyModel::CNel(CondNelModel { base: NelModel { leq, vplus, vminus }, table })
            }
            Logic::FSKd => AnyModel::Modal(ModalModel {
                leq,
                val: ModalVal::Nelson { vplus, vminus },
                r: relation_of(&self.modal),
            }),
            Logic::IntCK | Logic::IK => unreachable!("search runs over Nelsonian logics only"),
        }
    }
}

fn check_input(logic: Logic, fs: &[Formula]) -> Result<(), SearchError> {
    for f in fs {
        if f.atoms().iter().any(|a| a.kind == AtomKind::Primed) {
            return Err(SearchError::IllFormed(format!("primed atom in {f}")));
        }
        let bad = f.subformulas().into_iter().find(|g| match logic {
            Logic::N4 => g.is_conditional_root(),
            Logic::N4CK => matches!(g, Tree::Box(_) | Tree::Diamond(_)),
            Logic::FSKd => matches!(g, Tree::BoxTo(..) | Tree::DiamTo(..)),
            _ => true,
        });
        if let Some(g) = bad {
            return Err(SearchError::IllFormed(format!("{g} is outside the language of {logic:?}")));
        }
    }
    Ok(())
}

fn pair_atoms(gamma: &[Formula], delta: &[Formula]) -> Vec<Atom> {
    let mut atoms: Vec<Atom> = gamma.iter().chain(delta).flat_map(|f| f.atoms()).collect();
    atoms.sort();
    atoms.dedup();
    atoms
}

/// Exhaustive search on one frame: valuations in odometer order, then the
/// relation assignment for antecedents (N4CK) or the modal relation (FSKd).
fn search_frame(
    logic: Logic,
    order: &MaskOrder,
    c: &Compiled,
    k: usize,
    cap: usize,
) -> Option<(Vec<Mask>, Vec<Mask>, Vec<((Mask, Mask), Vec<Mask>)>, Vec<Mask>, WorldId)> {
    let ups = order.up_sets();
    let cands = match logic {
        Logic::N4 => Arc::new(Vec::new()),
        _ => candidate_relations(order),
    };
    let cands: &[Vec<Mask>] = &cands[..cands.len().min(cap)];
    let mut digits = vec![0usize; 2 * k];
    let n = order.n();
    loop {
        let plus: Vec<Mask> = digits[..k].iter().map(|&d| ups[d]).collect();
        let minus: Vec<Mask> = digits[k..].iter().map(|&d| ups[d]).collect();
        let mut m = FastModel { order, plus, minus, table: Vec::new(), modal: vec![0; n] };
        let found = match logic {
            Logic::N4 => {
                let w = m.pair_worlds(c);
                (w != 0).then_some(w)
            }
            Logic::N4CK => assign(&mut m, c, 0, cands),
            Logic::FSKd => cands.iter().find_map(|r| {
                m.modal = r.clone();
                let w = m.pair_worlds(c);
                (w != 0).then_some(w)
            }),
            _ => unreachable!(),
        };
        if let Some(w) = found {
            return Some((m.plus, m.minus, m.table, m.modal, w.trailing_zeros() as WorldId));
        }
        // odometer
        let mut i = 0;
        loop {
            if i == digits.len() {
                return None;
            }
            digits[i] += 1;
            if digits[i] < ups.len() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// Assigns relations to antecedent keys from the `i`-th antecedent on,
/// reusing a relation whenever its key already has one. On success the
/// model keeps the assignment.
fn assign(m: &mut FastModel, c: &Compiled, i: usize, cands: &[Vec<Mask>]) -> Option<Mask> {
    if i == c.antecedents.len() {
        let w = m.pair_worlds(c);
        return (w != 0).then_some(w);
    }
    let node = c.antecedents[i];
    let key = m.eval(c, Some(node))[node];
    if m.lookup(key).is_some() {
        return assign(m, c, i + 1, cands);
    }
    for r in cands {
        m.table.push((key, r.clone()));
        if let Some(w) = assign(m, c, i + 1, cands) {
            return Some(w);
        }
        m.table.pop();
    }
    None
}

fn random_order(rng: &mut impl Rng, n: usize) -> MaskOrder {
    let mut pairs = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && rng.gen_bool(0.3) {
                pairs.push((a, b));
            }
        }
    }
    let p = Preorder::closure_of(n, &pairs);
    MaskOrder { up: (0..n).map(|w| p.up(w).iter().fold(0, |m, v| m | 1 << v)).collect() }
}

fn random_up_set(rng: &mut impl Rng, o: &MaskOrder) -> Mask {
    let seeds: Mask = (0..o.n()).filter(|_| rng.gen_bool(0.3)).fold(0, |m, w| m | 1 << w);
    o.closure(seeds)
}

fn random_trial(logic: Logic, c: &Compiled, k: usize, budget: &SearchBudget, trial: u64) -> Option<(MaskOrder, FastModel<'static>, WorldId)> {
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let n = rng.gen_range(1..=budget.max_worlds.min(4));
    let order: &'static MaskOrder = Box::leak(Box::new(random_order(&mut rng, n)));
    let plus = (0..k).map(|_| random_up_set(&mut rng, order)).collect();
    let minus = (0..k).map(|_| random_up_set(&mut rng, order)).collect();
    let mut m = FastModel { order, plus, minus, table: Vec::new(), modal: vec![0; n] };
    let cands = if logic == Logic::N4 { Arc::new(Vec::new()) } else { candidate_relations(order) };
    let cap = cands.len().min(budget.relation_candidate_cap).max(1);
    match logic {
        Logic::N4CK => {
            for &node in &c.antecedents {
                let key = m.eval(c, Some(node))[node];
                if m.lookup(key).is_none() {
                    let r = cands[rng.gen_range(0..cap)].clone();
                    m.table.push((key, r));
                }
            }
        }
        Logic::FSKd => m.modal = cands[rng.gen_range(0..cap)].clone(),
        _ => {}
    }
    let w = m.pair_worlds(c);
    (w != 0).then(|| (order.clone(), m, w.trailing_zeros() as WorldId))
}

/// Looks for a pointed model satisfying every member of `gamma` and refuting
/// every member of `delta`. Exhaustive mode walks frames of 1, 2, …
/// `max_worlds` worlds in a fixed order and returns the first hit.
pub fn find_countermodel(
    logic: Logic,
    gamma: &[Formula],
    delta: &[Formula],
    budget: &SearchBudget,
) -> Result<SearchOutcome, SearchError> {
    if !matches!(logic, Logic::N4 | Logic::N4CK | Logic::FSKd) {
        return Err(SearchError::IllFormed(format!("search does not cover {logic:?}")));
    }
    if budget.max_worlds == 0 {
        return Err(SearchError::Budget("max_worlds must be at least 1".into()));
    }
    let all: Vec<Formula> = gamma.iter().chain(delta).cloned().collect();
    check_input(logic, &all)?;
    let atoms = pair_atoms(gamma, delta);
    if atoms.len() > budget.max_formula_atoms {
        return Err(SearchError::Budget(format!(
            "{} atoms exceed the budget of {}",
            atoms.len(),
            budget.max_formula_atoms
        )));
    }
    let k = atoms.len();
    let c = Compiled::new(gamma, delta, &atoms);
    let cert = |model: AnyModel, world: WorldId| Certificate {
        model,
        world,
        gamma: gamma.to_vec(),
        delta: delta.to_vec(),
    };
    match budget.mode {
        SearchMode::Exhaustive => {
            if budget.max_worlds > 4 || (budget.max_worlds > 3 && logic != Logic::N4) {
                return Err(SearchError::Budget("exhaustive search supports up to 3 worlds (4 for N4)".into()));
            }
            for n in 1..=budget.max_worlds {
                let frames = preorders(n);
                let hit = par::find_map_first(&frames, |o| {
                    search_frame(logic, o, &c, k, budget.relation_candidate_cap)
                        .map(|(plus, minus, table, modal, w)| {
                            let m = FastModel { order: o, plus, minus, table, modal };
                            (m.to_model(logic, &atoms), w)
                        })
                });
                if let Some((model, w)) = hit {
                    return Ok(SearchOutcome::Found(cert(model, w)));
                }
            }
            Ok(SearchOutcome::Exhausted(*budget))
        }
        SearchMode::Random(trials) => {
            let idx: Vec<u64> = (0..trials).collect();
            let hit = par::find_map_first(&idx, |&t| {
                random_trial(logic, &c, k, budget, t).map(|(_, m, w)| (m.to_model(logic, &atoms), w))
            });
            Ok(match hit {
                Some((model, w)) => SearchOutcome::Found(cert(model, w)),
                None => SearchOutcome::Exhausted(*budget),
            })
        }
    }
}

/// Re-validates the model and re-evaluates the pair at the stated world.
pub fn verify_certificate(c: &Certificate) -> bool {
    c.model.violations().is_empty()
        && c.world < c.model.len()
        && holds_pair(&c.model, c.world, &c.gamma, &c.delta).unwrap_or(false)
}

// ---------------------------------------------------------------- sampling

fn random_valuation(rng: &mut impl Rng, o: &MaskOrder, atoms: &[Atom]) -> Valuation {
    atoms
        .iter()
        .map(|a| (*a, mask_set(random_up_set(rng, o))))
        .filter(|(_, s)| !s.is_empty())
        .collect()
}

/// A random validated model for `logic` over `atoms` with at most
/// `max_worlds` (≤ 4) worlds. Deterministic in `seed`.
///
/// Conditional tables get a random subset of the pairs of up-sets as keys,
/// so that truth sets of antecedents are hit with fair probability.
pub fn sample_model(logic: Logic, atoms: &[Atom], max_worlds: usize, seed: u64) -> AnyModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max = max_worlds.clamp(1, 4);
    let plain: Vec<Atom> = atoms.iter().map(|a| Atom::p(a.index)).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    if max == 1 && logic == Logic::N4CK && rng.gen_ratio(1, 16) {
        return AnyModel::CNel(single_world_total(&plain));
    }
    let n = rng.gen_range(1..=max);
    let o = random_order(&mut rng, n);
    let leq = o.to_preorder();
    let cands = candidate_relations(&o);
    let ups = o.up_sets();
    let key_prob = (24.0 / (ups.len() * ups.len()) as f64).min(0.6);
    let pick_rel = |rng: &mut ChaCha8Rng| relation_of(&cands[rng.gen_range(0..cands.len())]);
    let model = match logic {
        Logic::N4 => AnyModel::Nel(NelModel {
            leq,
            vplus: random_valuation(&mut rng, &o, &plain),
            vminus: random_valuation(&mut rng, &o, &plain),
        }),
        Logic::N4CK => {
            let vplus = random_valuation(&mut rng, &o, &plain);
            let vminus = random_valuation(&mut rng, &o, &plain);
            let mut table = BiTable::exact(n);
            for &a in &ups {
                for &b in &ups {
                    if rng.gen_bool(key_prob) {
                        let r = pick_rel(&mut rng);
                        table.insert(0, BiSet::new(mask_set(a), mask_set(b)), r);
                    }
                }
            }
            AnyModel::CNel(CondNelModel { base: NelModel { leq, vplus, vminus }, table })
        }
        Logic::IntCK => {
            let val = random_valuation(&mut rng, &o, &int_atoms(atoms));
            let mut table = SetTable::exact(n);
            let p = (8.0 / ups.len() as f64).min(0.7);
            for &a in &ups {
                if rng.gen_bool(p) {
                    let r = pick_rel(&mut rng);
                    table.insert(0, mask_set(a), r);
                }
            }
            AnyModel::CInt(CondIntModel { leq, val, table })
        }
        Logic::FSKd => {
            let vplus = random_valuation(&mut rng, &o, &plain);
            let vminus = random_valuation(&mut rng, &o, &plain);
            let r = pick_rel(&mut rng);
            AnyModel::Modal(ModalModel { leq, val: ModalVal::Nelson { vplus, vminus }, r })
        }
        Logic::IK => {
            let val = random_valuation(&mut rng, &o, &int_atoms(atoms));
            let r = pick_rel(&mut rng);
            AnyModel::Modal(ModalModel { leq, val: ModalVal::Int { val }, r })
        }
    };
    debug_assert!(model.violations().is_empty());
    model
}

/// Atoms as given, plus the primed twin of every plain atom.
fn int_atoms(atoms: &[Atom]) -> Vec<Atom> {
    let mut out: Vec<Atom> = atoms.iter().flat_map(|a| [Atom::p(a.index), Atom::q(a.index)]).collect();
    out.sort();
    out.dedup();
    out
}

/// Random formula over `p0..p{atoms-1}` of depth at most `depth`, built from
/// the connectives allowed in `lang`. Deterministic in the generator state.
pub fn random_formula(rng: &mut impl Rng, atoms: u32, depth: usize, conns: &[crate::syntax::Conn]) -> Formula {
    use crate::syntax::Conn;
    if depth == 0 || rng.gen_ratio(1, 4) {
        let i = rng.gen_range(0..atoms.max(1));
        return Tree::Leaf(Atom::p(i));
    }
    let c = conns[rng.gen_range(0..conns.len())];
    let mut sub = || random_formula(rng, atoms, depth - 1, conns);
    match c {
        Conn::Neg => Tree::neg(sub()),
        Conn::And => Tree::and(sub(), sub()),
        Conn::Or => Tree::or(sub(), sub()),
        Conn::Imp => Tree::imp(sub(), sub()),
        Conn::BoxTo => Tree::boxto(sub(), sub()),
        Conn::DiamTo => Tree::diamto(sub(), sub()),
        Conn::Box => Tree::boxed(sub()),
        Conn::Diamond => Tree::diamond(sub()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_any;

    fn pf(s: &str) -> Formula {
        parse_any(s).unwrap()
    }

    #[test]
    fn preorder_counts() {
        assert_eq!(preorders(1).len(), 1);
        assert_eq!(preorders(2).len(), 4);
        assert_eq!(preorders(3).len(), 29);
        assert_eq!(preorders(4).len(), 355);
    }

    #[test]
    fn candidates_include_empty_and_satisfy_conditions() {
        for o in preorders(3) {
            let c = candidate_relations(&o);
            assert_eq!(c[0], vec![0, 0, 0]);
            let leq = o.to_preorder();
            for r in c.iter() {
                assert!(relation_of(r).frame_violations(&leq).is_empty());
            }
        }
    }

    #[test]
    fn contraposition_refuted_at_one_world() {
        let out = find_countermodel(Logic::N4, &[], &[pf("(p0 -> p1) -> (~p1 -> ~p0)")], &SearchBudget::exhaustive(1)).unwrap();
        match out {
            SearchOutcome::Found(c) => assert!(verify_certificate(&c)),
            SearchOutcome::Exhausted(_) => panic!("expected a countermodel"),
        }
    }

    #[test]
    fn axiom_a4_is_not_refuted() {
        let out = find_countermodel(Logic::N4CK, &[], &[pf("p0 []-> (p1 -> p1)")], &SearchBudget::exhaustive(2)).unwrap();
        assert!(matches!(out, SearchOutcome::Exhausted(_)));
    }

    #[test]
    fn sampling_is_deterministic_and_valid() {
        let atoms = [Atom::p(0), Atom::p(1)];
        for logic in [Logic::N4, Logic::N4CK, Logic::IntCK, Logic::FSKd, Logic::IK] {
            for seed in 0..40 {
                let m = sample_model(logic, &atoms, 4, seed);
                assert!(m.violations().is_empty(), "{logic:?} {seed}: {:?}", m.violations());
                assert_eq!(m, sample_model(logic, &atoms, 4, seed));
            }
        }
    }

    #[test]
    fn random_mode_finds_easy_countermodels() {
        let out = find_countermodel(Logic::N4, &[], &[pf("p0 \\/ ~p0")], &SearchBudget::random(2, 200, 7)).unwrap();
        assert!(matches!(out, SearchOutcome::Found(ref c) if verify_certificate(c)));
    }
}
