//! Decision procedures for the propositional bases: N4 (through the
//! strong-negation eliminating translation into positive intuitionistic
//! logic over `p_i`/`q_i`), intuitionistic logic with `~` as intuitionistic
//! negation, and classical truth tables. Intuitionistic refutations come
//! with finite Kripke countermodels.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use thiserror::Error;

use crate::kripke::{CondIntModel, NelModel, Preorder, SetTable, Valuation, WorldId, WorldSet};
use crate::semantics::{eval_n4, Sign};
use crate::syntax::{Atom, AtomKind, Formula, Tree};
use crate::translate;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecideError {
    #[error("ill-formed: {0}")]
    IllFormed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Refuted { model: NelModel, world: WorldId },
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntVerdict {
    Valid,
    Refuted { model: CondIntModel, world: WorldId },
}

impl IntVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, IntVerdict::Valid)
    }
}

/// Replaces every maximal subformula rooted in `[]->`, `<>->`, `[]` or `<>`
/// by a fresh plain atom. Equal subformulas share an atom across the whole
/// list. Fresh indices start above every index in use and are handed out in
/// order of first occurrence.
pub fn abstract_conditionals(fs: &[Formula]) -> (Vec<Formula>, Vec<(Formula, Atom)>) {
    let next = fs
        .iter()
        .flat_map(|f| f.atoms())
        .map(|a| a.index + 1)
        .max()
        .unwrap_or(0);
    let mut table: Vec<(Formula, Atom)> = Vec::new();
    fn go(f: &Formula, next: u32, table: &mut Vec<(Formula, Atom)>) -> Formula {
        if f.is_conditional_root() {
            if let Some((_, a)) = table.iter().find(|(g, _)| g == f) {
                return Tree::Leaf(*a);
            }
            let a = Atom::p(next + table.len() as u32);
            table.push((f.clone(), a));
            return Tree::Leaf(a);
        }
        match f {
            Tree::Leaf(_) => f.clone(),
            _ => {
                let kids = f.children().into_iter().map(|c| go(c, next, table)).collect();
                Tree::rebuild(f.conn().unwrap(), kids)
            }
        }
    }
    let out = fs.iter().map(|f| go(f, next, &mut table)).collect();
    (out, table)
}

fn check_n4_input(f: &Formula) -> Result<(), DecideError> {
    if f.subformulas().iter().any(|g| g.is_conditional_root()) {
        return Err(DecideError::IllFormed(format!("conditional or modal operator in {f}")));
    }
    if f.atoms().iter().any(|a| a.kind == AtomKind::Primed) {
        return Err(DecideError::IllFormed(format!("primed atom in {f}")));
    }
    Ok(())
}

/// Decides `gamma ⊨ phi` in N4. Refutations are re-checked against the
/// two-signed semantics before being returned.
pub fn decide_n4(gamma: &[Formula], phi: &Formula) -> Result<Verdict, DecideError> {
    for f in gamma.iter().chain(std::iter::once(phi)) {
        check_n4_input(f)?;
    }
    if let Some(v) = one_world_refutation(gamma, phi) {
        return Ok(v);
    }
    let tr = |f: &Formula| translate::e(f).map_err(|e| DecideError::IllFormed(e.to_string()));
    let eg: Vec<Formula> = gamma.iter().map(tr).collect::<Result<_, _>>()?;
    let ephi = tr(phi)?;
    match decide_int(&eg, &ephi) {
        IntVerdict::Valid => Ok(Verdict::Valid),
        IntVerdict::Refuted { model, world } => {
            let mut vplus = Valuation::new();
            let mut vminus = Valuation::new();
            for (a, s) in model.val {
                match a.kind {
                    AtomKind::Plain => vplus.insert(a, s),
                    AtomKind::Primed => vminus.insert(Atom::p(a.index), s),
                };
            }
            let m = NelModel { leq: model.leq, vplus, vminus };
            debug_assert!(m.violations().is_empty());
            debug_assert!(gamma.iter().all(|g| eval_n4(&m, world, g, Sign::Plus) == Ok(true)));
            debug_assert!(eval_n4(&m, world, phi, Sign::Plus) == Ok(false));
            Ok(Verdict::Refuted { model: m, world })
        }
    }
}

/// Looks for a one-world countermodel first, so small certificates stay
/// small; skipped when there are too many atoms to enumerate cheaply.
fn one_world_refutation(gamma: &[Formula], phi: &Formula) -> Option<Verdict> {
    let mut atoms: Vec<Atom> = gamma.iter().chain(std::iter::once(phi)).flat_map(|f| f.atoms()).collect();
    atoms.sort();
    atoms.dedup();
    if atoms.len() > 5 {
        return None;
    }
    let one = WorldSet::singleton(0);
    let k = atoms.len();
    for bits in 0u32..(1 << (2 * k)) {
        let pick = |off: usize| -> Valuation {
            (0..k).filter(|i| bits & (1 << (i + off)) != 0).map(|i| (atoms[i], one.clone())).collect()
        };
        let m = NelModel { leq: Preorder::discrete(1), vplus: pick(0), vminus: pick(k) };
        if gamma.iter().all(|g| eval_n4(&m, 0, g, Sign::Plus) == Ok(true))
            && eval_n4(&m, 0, phi, Sign::Plus) == Ok(false)
        {
            return Some(Verdict::Refuted { model: m, world: 0 });
        }
    }
    None
}

#[derive(Debug, Clone, Copy)]
enum INode {
    Atom(Atom),
    Neg(usize),
    And(usize, usize),
    Or(usize, usize),
    Imp(usize, usize),
}

struct PNode {
    t: WorldSet,
    kids: Vec<Rc<PNode>>,
}

/// Signed tableau for intuitionistic propositional logic. A node is a pair
/// (formulas true here, formulas false here); true formulas are inherited by
/// every successor, so each world-creating step strictly grows the true set.
struct Prover {
    nodes: Vec<INode>,
    ids: HashMap<Formula, usize>,
    memo: HashMap<(WorldSet, WorldSet), Option<Rc<PNode>>>,
}

impl Prover {
    fn new() -> Self {
        Prover { nodes: Vec::new(), ids: HashMap::new(), memo: HashMap::new() }
    }

    fn intern(&mut self, f: &Formula) -> usize {
        if let Some(&i) = self.ids.get(f) {
            return i;
        }
        let n = match f {
            Tree::Leaf(a) => INode::Atom(*a),
            Tree::Neg(a) => INode::Neg(self.intern(a)),
            Tree::And(a, b) => INode::And(self.intern(a), self.intern(b)),
            Tree::Or(a, b) => INode::Or(self.intern(a), self.intern(b)),
            Tree::Imp(a, b) => INode::Imp(self.intern(a), self.intern(b)),
            _ => panic!("modal or conditional formula reached the propositional prover"),
        };
        self.nodes.push(n);
        let i = self.nodes.len() - 1;
        self.ids.insert(f.clone(), i);
        i
    }

    fn with(s: &WorldSet, i: usize) -> WorldSet {
        let mut s = s.clone();
        s.insert(i);
        s
    }

    fn sat(&mut self, t: WorldSet, f: WorldSet) -> Option<Rc<PNode>> {
        let key = (t, f);
        if let Some(r) = self.memo.get(&key) {
            return r.clone();
        }
        let r = self.local(key.0.clone(), key.1.clone());
        self.memo.insert(key, r.clone());
        r
    }

    fn local(&mut self, mut t: WorldSet, mut f: WorldSet) -> Option<Rc<PNode>> {
        loop {
            if t.intersects(&f) {
                return None;
            }
            let mut grew = false;
            for i in t.to_vec() {
                match self.nodes[i] {
                    INode::And(a, b) if !t.contains(a) || !t.contains(b) => {
                        t.insert(a);
                        t.insert(b);
                        grew = true;
                    }
                    INode::Neg(a) if !f.contains(a) => {
                        f.insert(a);
                        grew = true;
                    }
                    _ => {}
                }
            }
            for i in f.to_vec() {
                match self.nodes[i] {
                    INode::Or(a, b) if !f.contains(a) || !f.contains(b) => {
                        f.insert(a);
                        f.insert(b);
                        grew = true;
                    }
                    INode::Imp(a, b) if t.contains(a) && !f.contains(b) => {
                        f.insert(b);
                        grew = true;
                    }
                    _ => {}
                }
            }
            if grew {
                continue;
            }
            let mut branch: Option<[(bool, usize); 2]> = None;
            for i in t.iter() {
                match self.nodes[i] {
                    INode::Or(a, b) if !t.contains(a) && !t.contains(b) => {
                        branch = Some([(true, a), (true, b)]);
                    }
                    INode::Imp(a, b) if !f.contains(a) && !t.contains(b) => {
                        branch = Some([(false, a), (true, b)]);
                    }
                    _ => continue,
                }
                break;
            }
            if branch.is_none() {
                for i in f.iter() {
                    if let INode::And(a, b) = self.nodes[i] {
                        if !f.contains(a) && !f.contains(b) {
                            branch = Some([(false, a), (false, b)]);
                            break;
                        }
                    }
                }
            }
            if let Some(opts) = branch {
                for (side, i) in opts {
                    let (t2, f2) = if side { (Self::with(&t, i), f.clone()) } else { (t.clone(), Self::with(&f, i)) };
                    if let Some(r) = self.local(t2, f2) {
                        return Some(r);
                    }
                }
                return None;
            }
            break;
        }
        let mut kids = Vec::new();
        for i in f.to_vec() {
            let demand = match self.nodes[i] {
                INode::Imp(a, b) if !t.contains(a) => Some((a, Some(b))),
                INode::Neg(a) if !t.contains(a) => Some((a, None)),
                _ => None,
            };
            if let Some((a, b)) = demand {
                let f2 = b.map(WorldSet::singleton).unwrap_or_default();
                kids.push(self.sat(Self::with(&t, a), f2)?);
            }
        }
        Some(Rc::new(PNode { t, kids }))
    }

    fn extract(&self, root: &Rc<PNode>) -> CondIntModel {
        let mut order: Vec<Rc<PNode>> = Vec::new();
        let mut index: HashMap<*const PNode, usize> = HashMap::new();
        fn visit(n: &Rc<PNode>, order: &mut Vec<Rc<PNode>>, index: &mut HashMap<*const PNode, usize>) {
            if index.contains_key(&Rc::as_ptr(n)) {
                return;
            }
            index.insert(Rc::as_ptr(n), order.len());
            order.push(n.clone());
            for k in &n.kids {
                visit(k, order, index);
            }
        }
        visit(root, &mut order, &mut index);
        let pairs: Vec<(usize, usize)> = order
            .iter()
            .enumerate()
            .flat_map(|(i, n)| n.kids.iter().map(|k| (i, index[&Rc::as_ptr(k)])).collect::<Vec<_>>())
            .collect();
        let leq = Preorder::closure_of(order.len(), &pairs);
        let mut val = Valuation::new();
        for (w, n) in order.iter().enumerate() {
            for i in n.t.iter() {
                if let INode::Atom(a) = self.nodes[i] {
                    val.entry(a).or_default().insert(w);
                }
            }
        }
        let n = order.len();
        CondIntModel { leq, val, table: SetTable::exact(n) }
    }
}

/// Decides `gamma ⊨ phi` in intuitionistic logic over any atoms, reading `~`
/// as intuitionistic negation. Countermodels are refuted at world 0.
pub fn decide_int(gamma: &[Formula], phi: &Formula) -> IntVerdict {
    let mut p = Prover::new();
    let t: WorldSet = gamma.iter().map(|g| p.intern(g)).collect();
    let f = WorldSet::singleton(p.intern(phi));
    match p.sat(t, f) {
        None => IntVerdict::Valid,
        Some(root) => IntVerdict::Refuted { model: p.extract(&root), world: 0 },
    }
}

fn classical(f: &Formula, v: &BTreeMap<Atom, bool>) -> bool {
    match f {
        Tree::Leaf(a) => v[a],
        Tree::Neg(a) => !classical(a, v),
        Tree::And(a, b) => classical(a, v) && classical(b, v),
        Tree::Or(a, b) => classical(a, v) || classical(b, v),
        Tree::Imp(a, b) => !classical(a, v) || classical(b, v),
        _ => panic!("modal or conditional formula reached the truth-table check"),
    }
}

/// Classical consequence by truth tables; returns a falsifying assignment.
pub fn decide_classical(gamma: &[Formula], phi: &Formula) -> Option<BTreeMap<Atom, bool>> {
    let mut atoms: Vec<Atom> = gamma.iter().chain(std::iter::once(phi)).flat_map(|f| f.atoms()).collect();
    atoms.sort();
    atoms.dedup();
    assert!(atoms.len() <= 24, "truth table too large");
    for m in 0u64..(1 << atoms.len()) {
        let v: BTreeMap<Atom, bool> = atoms.iter().enumerate().map(|(i, a)| (*a, m & (1 << i) != 0)).collect();
        if gamma.iter().all(|g| classical(g, &v)) && !classical(phi, &v) {
            return Some(v);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::eval_intck;
    use crate::syntax::parse_any;

    fn pf(s: &str) -> Formula {
        parse_any(s).unwrap()
    }

    fn valid(s: &str) -> bool {
        decide_n4(&[], &pf(s)).unwrap().is_valid()
    }

    #[test]
    fn n4_examples() {
        assert!(valid("~~p0 <-> p0"));
        assert!(valid("~(p0 /\\ p1) <-> (~p0 \\/ ~p1)"));
        assert!(valid("~(p0 -> p1) <-> (p0 /\\ ~p1)"));
        assert!(valid("p0 -> (p1 -> p0)"));
        assert!(!valid("(p0 -> p1) -> (~p1 -> ~p0)"));
        assert!(!valid("~~(p0 -> p1) <-> ~(p0 /\\ ~p1)"));
        assert!(!valid("p0 \\/ ~p0"));
        assert!(!valid("p0 -> (~p0 -> p1)"));
        assert!(!valid("((p0 -> p1) -> p0) -> p0"));
    }

    #[test]
    fn contraposition_certificate_has_one_world() {
        match decide_n4(&[], &pf("(p0 -> p1) -> (~p1 -> ~p0)")).unwrap() {
            Verdict::Refuted { model, world } => {
                assert_eq!(model.len(), 1);
                assert!(!eval_n4(&model, world, &pf("(p0 -> p1) -> (~p1 -> ~p0)"), Sign::Plus).unwrap());
            }
            Verdict::Valid => panic!("contraposition is not valid"),
        }
    }

    #[test]
    fn premises() {
        assert!(decide_n4(&[pf("p0"), pf("p0 -> p1")], &pf("p1")).unwrap().is_valid());
        assert!(!decide_n4(&[pf("p1")], &pf("p0")).unwrap().is_valid());
        assert!(decide_n4(&[pf("p0 /\\ ~p0")], &pf("p0")).unwrap().is_valid());
        assert!(!decide_n4(&[pf("p0 /\\ ~p0")], &pf("p1")).unwrap().is_valid());
        assert!(decide_n4(&[], &pf("p0 []-> p1")).is_err());
    }

    #[test]
    fn intuitionistic() {
        assert!(decide_int(&[], &pf("p0 -> (~p0 -> p1)")).is_valid());
        assert!(decide_int(&[], &pf("~~(p0 \\/ ~p0)")).is_valid());
        assert!(!decide_int(&[], &pf("p0 \\/ ~p0")).is_valid());
        match decide_int(&[], &pf("~~p0 -> p0")) {
            IntVerdict::Refuted { model, world } => {
                assert!(model.validate().is_ok());
                assert!(!eval_intck(&model, world, &pf("~~p0 -> p0")).unwrap());
            }
            IntVerdict::Valid => panic!(),
        }
    }

    #[test]
    fn classical_tables() {
        assert!(decide_classical(&[], &pf("p0 \\/ ~p0")).is_none());
        assert!(decide_classical(&[], &pf("((p0 -> p1) -> p0) -> p0")).is_none());
        assert!(decide_classical(&[], &pf("p0 -> p1")).is_some());
    }

    #[test]
    fn abstraction() {
        let (fs, map) = abstract_conditionals(&[pf("(p0 []-> p1) -> (p0 []-> p1)")]);
        assert_eq!(fs[0], pf("p2 -> p2"));
        assert_eq!(map, vec![(pf("p0 []-> p1"), Atom::p(2))]);
        let (fs, map) = abstract_conditionals(&[pf("~(p0 []-> p1)"), pf("p0 []-> p1"), pf("[](p0 []-> p3)")]);
        assert_eq!(fs, vec![pf("~p4"), pf("p4"), pf("p5")]);
        assert_eq!(map.len(), 2);
    }
}
