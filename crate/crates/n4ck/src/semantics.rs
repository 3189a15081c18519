//! Satisfaction: two-signed Nelsonian conditional models, intuitionistic
//! conditional models and the two flavours of modal models.
//!
//! Every evaluator works bottom-up over a shared DAG of the input formulas,
//! so a conditional's antecedent is always evaluated before the lookup that
//! needs its truth set.

use std::collections::HashMap;

use thiserror::Error;

use crate::kripke::{
    val_get, AnyModel, BiSet, CondIntModel, CondNelModel, ModalModel, ModalVal, NelModel, Preorder,
    Relation, WorldId, WorldSet,
};
use crate::syntax::{Atom, AtomKind, Formula, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

/// Sign for modal evaluation: two-valued for Nelsonian models, `Int` for
/// intuitionistic ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModalSign {
    Plus,
    Minus,
    Int,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("ill-formed: {0}")]
    IllFormed(String),
    #[error("flavor mismatch: {0}")]
    FlavorMismatch(String),
    #[error("world {0} not in the model")]
    NoSuchWorld(WorldId),
}

/// One DAG node; children are indices of earlier nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Atom(Atom),
    Neg(usize),
    And(usize, usize),
    Or(usize, usize),
    Imp(usize, usize),
    BoxTo(usize, usize),
    DiamTo(usize, usize),
    Box(usize),
    Diamond(usize),
}

/// Formulas compiled into a DAG with shared subterms, children first.
#[derive(Debug, Default)]
pub struct Program {
    nodes: Vec<Node>,
    ids: HashMap<Formula, usize>,
}

impl Program {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn compile(fs: &[Formula]) -> (Self, Vec<usize>) {
        let mut p = Program::new();
        let roots = fs.iter().map(|f| p.add(f)).collect();
        (p, roots)
    }

    pub fn add(&mut self, f: &Formula) -> usize {
        if let Some(&i) = self.ids.get(f) {
            return i;
        }
        let node = match f {
            Tree::Leaf(a) => Node::Atom(*a),
            Tree::Neg(a) => Node::Neg(self.add(a)),
            Tree::And(a, b) => Node::And(self.add(a), self.add(b)),
            Tree::Or(a, b) => Node::Or(self.add(a), self.add(b)),
            Tree::Imp(a, b) => Node::Imp(self.add(a), self.add(b)),
            Tree::BoxTo(a, b) => Node::BoxTo(self.add(a), self.add(b)),
            Tree::DiamTo(a, b) => Node::DiamTo(self.add(a), self.add(b)),
            Tree::Box(a) => Node::Box(self.add(a)),
            Tree::Diamond(a) => Node::Diamond(self.add(a)),
        };
        self.nodes.push(node);
        let i = self.nodes.len() - 1;
        self.ids.insert(f.clone(), i);
        i
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn ill(msg: &str, f: &Formula) -> EvalError {
    EvalError::IllFormed(format!("{msg} in {f}"))
}

fn check_atoms(f: &Formula, primed_ok: bool) -> Result<(), EvalError> {
    if !primed_ok && f.atoms().iter().any(|a| a.kind == AtomKind::Primed) {
        return Err(ill("primed atom", f));
    }
    Ok(())
}

fn has_modal(f: &Formula) -> bool {
    matches!(f, Tree::Box(_) | Tree::Diamond(_)) || f.children().into_iter().any(has_modal)
}

fn has_conditional(f: &Formula) -> bool {
    matches!(f, Tree::BoxTo(..) | Tree::DiamTo(..)) || f.children().into_iter().any(has_conditional)
}

fn complement(s: &WorldSet, n: usize) -> WorldSet {
    WorldSet::full(n).minus(s)
}

/// `{w | up(w) ⊆ ¬a ∪ b}`
fn int_imp(leq: &Preorder, a: &WorldSet, b: &WorldSet) -> WorldSet {
    leq.box_of(&complement(a, leq.len()).union(b))
}

/// `{w | ∀v ≥ w ∀u, R(v,u) ⇒ u ∈ s}`
fn box_all(leq: &Preorder, r: &Relation, s: &WorldSet) -> WorldSet {
    leq.box_of(&r.all_in(s, leq.len()))
}

/// Truth sets for two-valuation models. `lookup` yields the relation for a
/// conditional antecedent's bi-set; modal nodes use `modal_r`.
fn bi_sets(
    prog: &Program,
    leq: &Preorder,
    vplus: &crate::kripke::Valuation,
    vminus: &crate::kripke::Valuation,
    lookup: &dyn Fn(&BiSet) -> Relation,
    modal_r: Option<&Relation>,
) -> Vec<BiSet> {
    let mut out: Vec<BiSet> = Vec::with_capacity(prog.nodes.len());
    for node in &prog.nodes {
        let s = match *node {
            Node::Atom(a) => BiSet::new(val_get(vplus, &a).clone(), val_get(vminus, &a).clone()),
            Node::Neg(a) => out[a].swap(),
            Node::And(a, b) => BiSet::new(
                out[a].plus.intersect(&out[b].plus),
                out[a].minus.union(&out[b].minus),
            ),
            Node::Or(a, b) => BiSet::new(
                out[a].plus.union(&out[b].plus),
                out[a].minus.intersect(&out[b].minus),
            ),
            Node::Imp(a, b) => BiSet::new(
                int_imp(leq, &out[a].plus, &out[b].plus),
                out[a].plus.intersect(&out[b].minus),
            ),
            Node::BoxTo(a, b) => {
                let r = lookup(&out[a]);
                BiSet::new(box_all(leq, &r, &out[b].plus), r.exists_in(&out[b].minus))
            }
            Node::DiamTo(a, b) => {
                let r = lookup(&out[a]);
                BiSet::new(r.exists_in(&out[b].plus), box_all(leq, &r, &out[b].minus))
            }
            Node::Box(a) => {
                let r = modal_r.expect("modal node without modal relation");
                BiSet::new(box_all(leq, r, &out[a].plus), r.exists_in(&out[a].minus))
            }
            Node::Diamond(a) => {
                let r = modal_r.expect("modal node without modal relation");
                BiSet::new(r.exists_in(&out[a].plus), box_all(leq, r, &out[a].minus))
            }
        };
        out.push(s);
    }
    out
}

fn int_sets(
    prog: &Program,
    leq: &Preorder,
    val: &crate::kripke::Valuation,
    lookup: &dyn Fn(&WorldSet) -> Relation,
    modal_r: Option<&Relation>,
) -> Vec<WorldSet> {
    let n = leq.len();
    let mut out: Vec<WorldSet> = Vec::with_capacity(prog.nodes.len());
    for node in &prog.nodes {
        let s = match *node {
            Node::Atom(a) => val_get(val, &a).clone(),
            Node::Neg(a) => leq.box_of(&complement(&out[a], n)),
            Node::And(a, b) => out[a].intersect(&out[b]),
            Node::Or(a, b) => out[a].union(&out[b]),
            Node::Imp(a, b) => int_imp(leq, &out[a], &out[b]),
            Node::BoxTo(a, b) => box_all(leq, &lookup(&out[a]), &out[b]),
            Node::DiamTo(a, b) => lookup(&out[a]).exists_in(&out[b]),
            Node::Box(a) => box_all(leq, modal_r.expect("modal relation"), &out[a]),
            Node::Diamond(a) => modal_r.expect("modal relation").exists_in(&out[a]),
        };
        out.push(s);
    }
    out
}

/// Bi-truth-sets in a conditional Nelsonian model. `<>->` is evaluated by
/// its derived clauses, which coincide with those of `~(a []-> ~b)`.
pub fn truth_sets_n4ck(m: &CondNelModel, fs: &[Formula]) -> Result<Vec<BiSet>, EvalError> {
    for f in fs {
        check_atoms(f, false)?;
        if has_modal(f) {
            return Err(ill("modal operator", f));
        }
    }
    let (prog, roots) = Program::compile(fs);
    let n = m.len();
    let lookup = |k: &BiSet| m.table.lookup(k, n);
    let all = bi_sets(&prog, &m.base.leq, &m.base.vplus, &m.base.vminus, &lookup, None);
    Ok(roots.into_iter().map(|i| all[i].clone()).collect())
}

pub fn truth_set(m: &CondNelModel, f: &Formula) -> Result<BiSet, EvalError> {
    Ok(truth_sets_n4ck(m, std::slice::from_ref(f))?.remove(0))
}

/// Bi-truth-sets in a plain Nelsonian model (conditional-free formulas).
pub fn truth_sets_n4(m: &NelModel, fs: &[Formula]) -> Result<Vec<BiSet>, EvalError> {
    for f in fs {
        check_atoms(f, false)?;
        if has_modal(f) || has_conditional(f) {
            return Err(ill("conditional or modal operator", f));
        }
    }
    let (prog, roots) = Program::compile(fs);
    let n = m.len();
    let lookup = |_: &BiSet| Relation::empty(n);
    let all = bi_sets(&prog, &m.leq, &m.vplus, &m.vminus, &lookup, None);
    Ok(roots.into_iter().map(|i| all[i].clone()).collect())
}

fn world_ok(n: usize, w: WorldId) -> Result<(), EvalError> {
    if w < n {
        Ok(())
    } else {
        Err(EvalError::NoSuchWorld(w))
    }
}

pub fn eval_n4ck(m: &CondNelModel, w: WorldId, f: &Formula, s: Sign) -> Result<bool, EvalError> {
    world_ok(m.len(), w)?;
    let t = truth_set(m, f)?;
    Ok(match s {
        Sign::Plus => t.plus.contains(w),
        Sign::Minus => t.minus.contains(w),
    })
}

pub fn eval_n4(m: &NelModel, w: WorldId, f: &Formula, s: Sign) -> Result<bool, EvalError> {
    world_ok(m.len(), w)?;
    let t = truth_sets_n4(m, std::slice::from_ref(f))?.remove(0);
    Ok(match s {
        Sign::Plus => t.plus.contains(w),
        Sign::Minus => t.minus.contains(w),
    })
}

/// Truth sets in a conditional intuitionistic model over the extended
/// language; `~` is intuitionistic negation here.
pub fn truth_sets_intck(m: &CondIntModel, fs: &[Formula]) -> Result<Vec<WorldSet>, EvalError> {
    if let Some(f) = fs.iter().find(|f| has_modal(f)) {
        return Err(ill("modal operator", f));
    }
    let (prog, roots) = Program::compile(fs);
    let n = m.len();
    let lookup = |k: &WorldSet| m.table.lookup(k, n);
    let all = int_sets(&prog, &m.leq, &m.val, &lookup, None);
    Ok(roots.into_iter().map(|i| all[i].clone()).collect())
}

pub fn eval_intck(m: &CondIntModel, w: WorldId, f: &Formula) -> Result<bool, EvalError> {
    world_ok(m.len(), w)?;
    Ok(truth_sets_intck(m, std::slice::from_ref(f))?[0].contains(w))
}

/// Bi-truth-sets in a Nelsonian modal model.
pub fn truth_sets_fskd(m: &ModalModel, fs: &[Formula]) -> Result<Vec<BiSet>, EvalError> {
    let ModalVal::Nelson { vplus, vminus } = &m.val else {
        return Err(EvalError::FlavorMismatch("two-signed evaluation on an intuitionistic modal model".into()));
    };
    for f in fs {
        check_atoms(f, false)?;
        if has_conditional(f) {
            return Err(ill("conditional operator", f));
        }
    }
    let (prog, roots) = Program::compile(fs);
    let n = m.len();
    let lookup = |_: &BiSet| Relation::empty(n);
    let all = bi_sets(&prog, &m.leq, vplus, vminus, &lookup, Some(&m.r));
    Ok(roots.into_iter().map(|i| all[i].clone()).collect())
}

/// Truth sets in an intuitionistic modal model.
pub fn truth_sets_ik(m: &ModalModel, fs: &[Formula]) -> Result<Vec<WorldSet>, EvalError> {
    let ModalVal::Int { val } = &m.val else {
        return Err(EvalError::FlavorMismatch("intuitionistic evaluation on a Nelsonian modal model".into()));
    };
    if let Some(f) = fs.iter().find(|f| has_conditional(f)) {
        return Err(ill("conditional operator", f));
    }
    let (prog, roots) = Program::compile(fs);
    let n = m.len();
    let lookup = |_: &WorldSet| Relation::empty(n);
    let all = int_sets(&prog, &m.leq, val, &lookup, Some(&m.r));
    Ok(roots.into_iter().map(|i| all[i].clone()).collect())
}

pub fn eval_modal(m: &ModalModel, w: WorldId, f: &Formula, s: ModalSign) -> Result<bool, EvalError> {
    world_ok(m.len(), w)?;
    let fs = std::slice::from_ref(f);
    match s {
        ModalSign::Plus => Ok(truth_sets_fskd(m, fs)?[0].plus.contains(w)),
        ModalSign::Minus => Ok(truth_sets_fskd(m, fs)?[0].minus.contains(w)),
        ModalSign::Int => Ok(truth_sets_ik(m, fs)?[0].contains(w)),
    }
}

/// Worlds where each formula holds under the model's positive satisfaction.
pub fn positive_sets(m: &AnyModel, fs: &[Formula]) -> Result<Vec<WorldSet>, EvalError> {
    Ok(match m {
        AnyModel::Nel(m) => truth_sets_n4(m, fs)?.into_iter().map(|b| b.plus).collect(),
        AnyModel::CNel(m) => truth_sets_n4ck(m, fs)?.into_iter().map(|b| b.plus).collect(),
        AnyModel::CInt(m) => truth_sets_intck(m, fs)?,
        AnyModel::Modal(mm) if mm.is_nelson() => {
            truth_sets_fskd(mm, fs)?.into_iter().map(|b| b.plus).collect()
        }
        AnyModel::Modal(mm) => truth_sets_ik(mm, fs)?,
    })
}

/// Every member of `gamma` holds and every member of `delta` fails at `w`.
pub fn holds_pair(m: &AnyModel, w: WorldId, gamma: &[Formula], delta: &[Formula]) -> Result<bool, EvalError> {
    world_ok(m.len(), w)?;
    let all: Vec<Formula> = gamma.iter().chain(delta).cloned().collect();
    let sets = positive_sets(m, &all)?;
    let (g, d) = sets.split_at(gamma.len());
    Ok(g.iter().all(|s| s.contains(w)) && d.iter().all(|s| !s.contains(w)))
}

/// Worlds at which the pair is satisfied.
pub fn pair_worlds(m: &AnyModel, gamma: &[Formula], delta: &[Formula]) -> Result<WorldSet, EvalError> {
    let all: Vec<Formula> = gamma.iter().chain(delta).cloned().collect();
    let sets = positive_sets(m, &all)?;
    let (g, d) = sets.split_at(gamma.len());
    let mut acc = WorldSet::full(m.len());
    for s in g {
        acc = acc.intersect(s);
    }
    for s in d {
        acc = acc.minus(s);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kripke::{single_world_total, BiTable, Preorder, SetTable, Valuation};
    use crate::syntax::{parse_any, Atom};

    fn pf(s: &str) -> Formula {
        parse_any(s).unwrap()
    }

    fn ws(xs: &[usize]) -> WorldSet {
        xs.iter().copied().collect()
    }

    fn empty_cnel(n: usize) -> CondNelModel {
        CondNelModel::from_nel(NelModel {
            leq: Preorder::discrete(n),
            vplus: Valuation::new(),
            vminus: Valuation::new(),
        })
    }

    #[test]
    fn total_model_verifies_everything() {
        let m = single_world_total(&[Atom::p(0)]);
        for s in ["p0", "~p0", "p0 /\\ ~p0", "p0 []-> ~p0", "~(p0 []-> p0)", "p0 <>-> p0", "~(p0 -> p0)"] {
            assert!(eval_n4ck(&m, 0, &pf(s), Sign::Plus).unwrap(), "{s}");
        }
    }

    #[test]
    fn empty_table_makes_boxto_vacuous() {
        let m = empty_cnel(1);
        assert!(eval_n4ck(&m, 0, &pf("p0 []-> p1"), Sign::Plus).unwrap());
        assert!(!eval_n4ck(&m, 0, &pf("p0 <>-> p1"), Sign::Plus).unwrap());
    }

    #[test]
    fn contraposition_fails_at_one_world() {
        let vplus: Valuation = [(Atom::p(0), ws(&[0])), (Atom::p(1), ws(&[0]))].into();
        let vminus: Valuation = [(Atom::p(1), ws(&[0]))].into();
        let m = CondNelModel::from_nel(NelModel { leq: Preorder::discrete(1), vplus, vminus });
        assert!(!eval_n4ck(&m, 0, &pf("(p0 -> p1) -> (~p1 -> ~p0)"), Sign::Plus).unwrap());
    }

    #[test]
    fn negation_swaps() {
        let vplus: Valuation = [(Atom::p(0), ws(&[0]))].into();
        let vminus: Valuation = [(Atom::p(0), ws(&[0, 1]))].into();
        let m = CondNelModel::from_nel(NelModel { leq: Preorder::closure_of(2, &[(0, 1)]), vplus, vminus });
        let t = truth_set(&m, &pf("p0")).unwrap();
        assert_eq!(t, BiSet::new(ws(&[0]), ws(&[0, 1])));
        assert_eq!(truth_set(&m, &pf("~p0")).unwrap(), t.swap());
    }

    #[test]
    fn diamto_is_existential_image() {
        let leq = Preorder::discrete(2);
        let vplus: Valuation = [(Atom::p(1), ws(&[1]))].into();
        let mut table = BiTable::exact(2);
        table.insert(0, BiSet::default(), Relation::from_pairs(2, &[(0, 1)]));
        let m = CondNelModel { base: NelModel { leq, vplus, vminus: Valuation::new() }, table };
        let t = truth_set(&m, &pf("p0 <>-> p1")).unwrap();
        assert_eq!(t.plus, ws(&[0]));
        assert_eq!(t, truth_set(&m, &pf("~(p0 []-> ~p1)")).unwrap());
    }

    #[test]
    fn intuitionistic_negation() {
        let m = CondIntModel {
            leq: Preorder::closure_of(2, &[(0, 1)]),
            val: [(Atom::p(0), ws(&[1]))].into(),
            table: SetTable::exact(2),
        };
        assert!(!eval_intck(&m, 0, &pf("~p0")).unwrap());
        assert!(!eval_intck(&m, 0, &pf("p0")).unwrap());
        assert!(eval_intck(&m, 0, &pf("~~p0")).unwrap());
        assert!(eval_intck(&m, 0, &pf("p0 []-> q0")).unwrap());
    }

    #[test]
    fn modal_clauses() {
        let m = ModalModel {
            leq: Preorder::discrete(2),
            val: ModalVal::Nelson { vplus: Valuation::new(), vminus: [(Atom::p(0), ws(&[1]))].into() },
            r: Relation::from_pairs(2, &[(0, 1)]),
        };
        assert!(eval_modal(&m, 0, &pf("~[]p0"), ModalSign::Plus).unwrap());
        assert!(eval_modal(&m, 1, &pf("[]p0"), ModalSign::Plus).unwrap());
        assert!(eval_modal(&m, 0, &pf("<>~p0"), ModalSign::Plus).unwrap());
        assert!(matches!(
            eval_modal(&m, 0, &pf("[]p0"), ModalSign::Int),
            Err(EvalError::FlavorMismatch(_))
        ));
    }

    #[test]
    fn ill_formed_inputs() {
        let m = empty_cnel(1);
        assert!(matches!(eval_n4ck(&m, 0, &pf("[]p0"), Sign::Plus), Err(EvalError::IllFormed(_))));
        assert!(matches!(eval_n4ck(&m, 0, &pf("q0"), Sign::Plus), Err(EvalError::IllFormed(_))));
        assert!(matches!(eval_n4ck(&m, 3, &pf("p0"), Sign::Plus), Err(EvalError::NoSuchWorld(3))));
    }

    #[test]
    fn pairs() {
        let m = AnyModel::CNel(empty_cnel(1));
        assert!(holds_pair(&m, 0, &[], &[]).unwrap());
        let t = AnyModel::CNel(single_world_total(&[Atom::p(0)]));
        assert!(!holds_pair(&t, 0, &[pf("p0")], &[pf("p0")]).unwrap());
        assert!(!holds_pair(&m, 0, &[pf("p0")], &[pf("p0")]).unwrap());
    }
}
