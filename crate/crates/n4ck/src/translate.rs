//! Translations between the languages: the strong-negation eliminating
//! family (`E` and its conditional and modal extensions), the modal to
//! conditional translations `Tr_φ`/`Tr^i_φ`, and the conditional to modal
//! collapse `TrBar`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::kripke::{
    relabel_modal, to_cond_int, to_cond_nelson, to_cond_nelson_with, AnyModel, BiSet, CondNelModel, KeyReading,
    RelabelDirection, WorldId,
};
use crate::par;
use crate::search::{find_countermodel, random_formula, sample_model, verify_certificate, Certificate, Logic, SearchBudget, SearchOutcome};
use crate::semantics::{positive_sets, truth_sets_fskd, truth_sets_n4, truth_sets_n4ck, EvalError};
use crate::proofs::{
    check_in, AtomSubst, CheckError, Corpus, Derivation, Goal, Justification, RuleId, SchemaId, Step, StepError, SystemId,
};
use crate::syntax::{apply_subst, expand_abbrev, match_into, parse_any, Atom, AtomKind, Conn, Formula, Substitution, Tree};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mapping {
    E,
    Epm,
    Emp,
    Eplus,
    Eminus,
    Em,
    TrI(Formula),
    Tr(Formula),
    TrBar,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("ill-formed input: {0}")]
    IllFormed(String),
    #[error("mapping needs an anchor formula")]
    AnchorMissing,
}

impl fmt::Display for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mapping::E => write!(f, "e"),
            Mapping::Epm => write!(f, "epm"),
            Mapping::Emp => write!(f, "emp"),
            Mapping::Eplus => write!(f, "eplus"),
            Mapping::Eminus => write!(f, "eminus"),
            Mapping::Em => write!(f, "em"),
            Mapping::TrI(a) => write!(f, "tri:{a}"),
            Mapping::Tr(a) => write!(f, "tr:{a}"),
            Mapping::TrBar => write!(f, "trbar"),
        }
    }
}

impl FromStr for Mapping {
    type Err = TranslateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let anchor = |rest: &str| -> Result<Formula, TranslateError> {
            if rest.trim().is_empty() {
                return Err(TranslateError::AnchorMissing);
            }
            parse_any(rest).map_err(|e| TranslateError::IllFormed(format!("anchor: {e}")))
        };
        Ok(match s {
            "e" => Mapping::E,
            "epm" => Mapping::Epm,
            "emp" => Mapping::Emp,
            "eplus" => Mapping::Eplus,
            "eminus" => Mapping::Eminus,
            "em" => Mapping::Em,
            "trbar" => Mapping::TrBar,
            "tri" | "tr" => return Err(TranslateError::AnchorMissing),
            _ => {
                if let Some(rest) = s.strip_prefix("tri:") {
                    Mapping::TrI(anchor(rest)?)
                } else if let Some(rest) = s.strip_prefix("tr:") {
                    Mapping::Tr(anchor(rest)?)
                } else {
                    return Err(TranslateError::IllFormed(format!("unknown mapping `{s}`")));
                }
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EKind {
    Plain,
    Pm,
    Mp,
    Plus,
    Minus,
    Modal,
}

fn has_primed(f: &Formula) -> bool {
    f.atoms().iter().any(|a| a.kind == AtomKind::Primed)
}

fn has_cond(f: &Formula) -> bool {
    matches!(f, Tree::BoxTo(..) | Tree::DiamTo(..)) || f.children().into_iter().any(has_cond)
}

fn has_modal(f: &Formula) -> bool {
    matches!(f, Tree::Box(_) | Tree::Diamond(_)) || f.children().into_iter().any(has_modal)
}

fn neg(f: &Formula) -> Formula {
    Tree::neg(f.clone())
}

fn e_rec(k: EKind, f: &Formula) -> Formula {
    use Tree::*;
    let ill = || unreachable!("input checked before translation");
    match f {
        Leaf(_) => f.clone(),
        And(a, b) => Tree::and(e_rec(k, a), e_rec(k, b)),
        Or(a, b) => Tree::or(e_rec(k, a), e_rec(k, b)),
        Imp(a, b) => Tree::imp(e_rec(k, a), e_rec(k, b)),
        BoxTo(a, b) => {
            let (ea, ena, eb) = (|| e_rec(k, a), || e_rec(k, &neg(a)), || e_rec(k, b));
            match k {
                EKind::Pm => Tree::boxto(ea(), Tree::boxto(ena(), eb())),
                EKind::Mp => Tree::boxto(ena(), Tree::boxto(ea(), eb())),
                EKind::Plus => Tree::boxto(ea(), eb()),
                EKind::Minus => Tree::boxto(ena(), eb()),
                _ => ill(),
            }
        }
        Box(a) if k == EKind::Modal => Tree::boxed(e_rec(k, a)),
        Neg(g) => match &**g {
            Leaf(a) => Leaf(crate::syntax::Atom::q(a.index)),
            Neg(h) => e_rec(k, h),
            And(a, b) => Tree::or(e_rec(k, &neg(a)), e_rec(k, &neg(b))),
            Or(a, b) => Tree::and(e_rec(k, &neg(a)), e_rec(k, &neg(b))),
            Imp(a, b) => Tree::and(e_rec(k, a), e_rec(k, &neg(b))),
            BoxTo(a, b) => {
                let (ea, ena, enb) = (|| e_rec(k, a), || e_rec(k, &neg(a)), || e_rec(k, &neg(b)));
                match k {
                    EKind::Pm => Tree::diamto(ea(), Tree::diamto(ena(), enb())),
                    EKind::Mp => Tree::diamto(ena(), Tree::diamto(ea(), enb())),
                    EKind::Plus => Tree::diamto(ea(), enb()),
                    EKind::Minus => Tree::diamto(ena(), enb()),
                    _ => ill(),
                }
            }
            Box(a) if k == EKind::Modal => Tree::diamond(e_rec(k, &neg(a))),
            _ => ill(),
        },
        _ => ill(),
    }
}

fn tr_rec(anchor: &Formula, f: &Formula) -> Formula {
    match f {
        Tree::Leaf(_) => f.clone(),
        Tree::Box(a) => Tree::boxto(anchor.clone(), tr_rec(anchor, a)),
        Tree::Diamond(a) => Tree::diamto(anchor.clone(), tr_rec(anchor, a)),
        _ => {
            let kids = f.children().into_iter().map(|c| tr_rec(anchor, c)).collect();
            Tree::rebuild(f.conn().unwrap(), kids)
        }
    }
}

fn trbar_rec(f: &Formula) -> Formula {
    match f {
        Tree::Leaf(_) => f.clone(),
        Tree::BoxTo(_, b) => Tree::boxed(trbar_rec(b)),
        Tree::DiamTo(_, b) => Tree::diamond(trbar_rec(b)),
        _ => {
            let kids = f.children().into_iter().map(trbar_rec).collect();
            Tree::rebuild(f.conn().unwrap(), kids)
        }
    }
}

fn reject(cond: bool, what: &str, f: &Formula) -> Result<(), TranslateError> {
    if cond {
        Err(TranslateError::IllFormed(format!("{what} in {f}")))
    } else {
        Ok(())
    }
}

/// Applies a mapping to one formula. The `E` family expands `<>->` and `<>`
/// first; `Tr` and `TrBar` map them to each other directly.
pub fn apply(m: &Mapping, f: &Formula) -> Result<Formula, TranslateError> {
    let e_kind = match m {
        Mapping::E => Some(EKind::Plain),
        Mapping::Epm => Some(EKind::Pm),
        Mapping::Emp => Some(EKind::Mp),
        Mapping::Eplus => Some(EKind::Plus),
        Mapping::Eminus => Some(EKind::Minus),
        Mapping::Em => Some(EKind::Modal),
        _ => None,
    };
    if let Some(k) = e_kind {
        reject(has_primed(f), "primed atom", f)?;
        match k {
            EKind::Plain => reject(has_cond(f) || has_modal(f), "conditional or modal operator", f)?,
            EKind::Modal => reject(has_cond(f), "conditional operator", f)?,
            _ => reject(has_modal(f), "modal operator", f)?,
        }
        return Ok(e_rec(k, &expand_abbrev(f)));
    }
    match m {
        Mapping::TrI(anchor) => {
            reject(has_cond(f), "conditional operator", f)?;
            reject(has_modal(anchor), "modal operator in anchor", anchor)?;
            Ok(tr_rec(anchor, f))
        }
        Mapping::Tr(anchor) => {
            reject(has_cond(f), "conditional operator", f)?;
            reject(has_primed(f), "primed atom", f)?;
            reject(has_modal(anchor) || has_primed(anchor), "anchor outside the conditional language", anchor)?;
            Ok(tr_rec(anchor, f))
        }
        Mapping::TrBar => {
            reject(has_modal(f), "modal operator", f)?;
            Ok(trbar_rec(f))
        }
        _ => unreachable!(),
    }
}

/// `E` on a conditional-free formula.
pub fn e(f: &Formula) -> Result<Formula, TranslateError> {
    apply(&Mapping::E, f)
}

// ---------------------------------------------------------------- proofs

/// Direction of a proof translation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Direction {
    /// `Tr_φ` from FSK^d into N4CK, with anchor `φ`.
    FskdToN4ck(Formula),
    /// `TrBar` from N4CK into FSK^d.
    N4ckToFskd,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::FskdToN4ck(a) => write!(f, "fskd-to-n4ck:{a}"),
            Direction::N4ckToFskd => write!(f, "n4ck-to-fskd"),
        }
    }
}

impl FromStr for Direction {
    type Err = TranslateError;
    fn from_str(s: &str) -> Result<Self, TranslateError> {
        let s = s.trim();
        if s == "n4ck-to-fskd" {
            return Ok(Direction::N4ckToFskd);
        }
        match s.strip_prefix("fskd-to-n4ck") {
            Some(rest) => {
                let a = rest.strip_prefix(':').map(str::trim).filter(|a| !a.is_empty()).ok_or(TranslateError::AnchorMissing)?;
                Ok(Direction::FskdToN4ck(parse_any(a).map_err(|e| TranslateError::IllFormed(e.to_string()))?))
            }
            None => Err(TranslateError::IllFormed(format!("unknown direction `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProofTranslateError {
    #[error("source derivation does not check: {0}")]
    SourceUnchecked(StepError),
    #[error("step {step}: {msg}")]
    UnmappableStep { step: usize, msg: String },
    #[error("{0}")]
    Anchor(TranslateError),
}

/// A translated derivation together with the translated versions of every
/// script it cites, transitively.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslatedProof {
    pub main: Derivation,
    pub aux: Vec<(String, Derivation)>,
}

impl TranslatedProof {
    /// Checks `main` against `corpus` extended with the auxiliary scripts.
    pub fn check(&self, corpus: &Corpus) -> Result<(), StepError> {
        let extended = corpus
            .with_extra(self.aux.clone())
            .map_err(|e| StepError { step: None, kind: CheckError::UnknownScript(e.to_string()) })?;
        for (id, d) in &self.aux {
            check_in(&extended, d).map_err(|e| StepError {
                step: e.step,
                kind: CheckError::UnknownScript(format!("{id}: {}", e.kind)),
            })?;
        }
        check_in(&extended, &self.main)
    }
}

struct ProofCtx<'a> {
    corpus: &'a Corpus,
    dir: Direction,
    rename_base: u32,
    aux: Vec<(String, Derivation)>,
    done: HashSet<String>,
}

fn derivation_atoms(d: &Derivation) -> BTreeSet<Atom> {
    let mut fs: Vec<&Formula> = d.premises.iter().collect();
    let goal = d.conclusion();
    fs.extend(goal.iter());
    if let Goal::DeltaDisjunction(ds) = &d.goal {
        fs.extend(ds.iter());
    }
    for s in &d.steps {
        fs.push(&s.formula);
        match &s.just {
            Justification::Axiom(_, b) => fs.extend(b.values()),
            Justification::Cite(_, sub, _) => fs.extend(sub.values()),
            _ => {}
        }
    }
    fs.into_iter().flat_map(|f| f.atoms()).collect()
}

fn map_derivation_formulas(d: &Derivation, f: &dyn Fn(&Formula) -> Formula) -> Derivation {
    let goal = match &d.goal {
        Goal::Single(g) => Goal::Single(f(g)),
        Goal::DeltaDisjunction(ds) => Goal::DeltaDisjunction(ds.iter().map(f).collect()),
        Goal::Absurdity => Goal::Absurdity,
    };
    let steps = d
        .steps
        .iter()
        .map(|s| {
            let just = match &s.just {
                Justification::Axiom(id, b) => Justification::Axiom(*id, b.iter().map(|(k, v)| (k.clone(), f(v))).collect()),
                Justification::Cite(id, sub, refs) => {
                    Justification::Cite(id.clone(), sub.iter().map(|(k, v)| (*k, f(v))).collect(), refs.clone())
                }
                other => other.clone(),
            };
            Step { formula: f(&s.formula), just }
        })
        .collect();
    Derivation { system: d.system, mode: d.mode, premises: d.premises.iter().map(f).collect(), goal, steps }
}

/// Makes every citation substitution explicit on all atoms of the cited
/// script, so that renaming the citing script cannot change what is meant.
fn total_cites(corpus: &Corpus, d: &Derivation) -> Derivation {
    let mut out = d.clone();
    for s in &mut out.steps {
        if let Justification::Cite(id, sub, _) = &mut s.just {
            if let Some(cited) = corpus.get(id) {
                for a in derivation_atoms(cited) {
                    sub.entry(a).or_insert(Tree::Leaf(a));
                }
            }
        }
    }
    out
}

fn atom_subst(pairs: &[(u32, &Formula)]) -> AtomSubst {
    pairs.iter().map(|(i, f)| (Atom::p(*i), (*f).clone())).collect()
}

fn binds(pairs: &[(&str, &Formula)]) -> Substitution {
    pairs.iter().map(|(k, f)| (k.to_string(), (*f).clone())).collect()
}

impl ProofCtx<'_> {
    fn map(&self, f: &Formula) -> Formula {
        match &self.dir {
            Direction::FskdToN4ck(a) => tr_rec(a, f),
            Direction::N4ckToFskd => trbar_rec(f),
        }
    }

    fn source(&self) -> SystemId {
        match self.dir {
            Direction::FskdToN4ck(_) => SystemId::FSKd,
            Direction::N4ckToFskd => SystemId::N4CK,
        }
    }

    fn target(&self) -> SystemId {
        match self.dir {
            Direction::FskdToN4ck(_) => SystemId::N4CK,
            Direction::N4ckToFskd => SystemId::FSKd,
        }
    }

    /// Ensures the translation of the cited script `id` is among the
    /// auxiliary scripts and returns its id and, in the anchored direction,
    /// the renaming applied to its atoms first.
    fn aux_script(&mut self, id: &str, step: usize) -> Result<(String, Option<HashMap<Atom, Formula>>), ProofTranslateError> {
        let d = self.corpus.get(id).ok_or_else(|| ProofTranslateError::UnmappableStep { step, msg: format!("unknown script `{id}`") })?;
        let (new_id, renaming, source) = match self.dir {
            Direction::FskdToN4ck(_) => {
                let ren: HashMap<Atom, Formula> = derivation_atoms(d)
                    .into_iter()
                    .map(|a| (a, Tree::Leaf(Atom::p(self.rename_base + a.index))))
                    .collect();
                let renamed = map_derivation_formulas(&total_cites(self.corpus, d), &|f| f.subst_atoms(&ren));
                (format!("tr_{id}"), Some(ren), renamed)
            }
            Direction::N4ckToFskd => (format!("trbar_{id}"), None, d.clone()),
        };
        if self.done.insert(new_id.clone()) {
            let translated = self.derivation(&source)?;
            self.aux.push((new_id.clone(), translated));
        }
        Ok((new_id, renaming))
    }

    fn derivation(&mut self, d: &Derivation) -> Result<Derivation, ProofTranslateError> {
        if d.system != self.source() {
            return Err(ProofTranslateError::UnmappableStep {
                step: 0,
                msg: format!("expected a {} derivation, got {}", self.source(), d.system),
            });
        }
        let mut steps: Vec<Step> = Vec::new();
        let mut index: Vec<usize> = Vec::new();
        for (i, step) in d.steps.iter().enumerate() {
            let n = i + 1;
            let unmappable = |msg: String| ProofTranslateError::UnmappableStep { step: n, msg };
            let remap = |refs: &[usize]| refs.iter().map(|&r| index[r]).collect::<Vec<_>>();
            let formula = self.map(&step.formula);
            let expanded = expand_abbrev(&step.formula);
            let push = |steps: &mut Vec<Step>, formula: Formula, just: Justification| {
                steps.push(Step { formula, just });
                steps.len() - 1
            };
            let last = match &step.just {
                Justification::Premise(k) => push(&mut steps, formula, Justification::Premise(*k)),
                Justification::N4Step(refs) => push(&mut steps, formula, Justification::N4Step(remap(refs))),
                Justification::Rule(RuleId::MP, refs) => push(&mut steps, formula, Justification::Rule(RuleId::MP, remap(refs))),
                Justification::Axiom(id, given) => {
                    let mut sub: Substitution = given.iter().map(|(k, v)| (k.clone(), expand_abbrev(v))).collect();
                    if !match_into(id.expanded(), &expanded, &mut sub) {
                        return Err(unmappable(format!("{} is not an instance of {id}", step.formula)));
                    }
                    let b: Substitution = sub.iter().map(|(k, v)| (k.clone(), self.map(v))).collect();
                    let (phi, psi, chi) = (b.get("phi"), b.get("psi"), b.get("chi"));
                    match (&self.dir, id) {
                        (_, SchemaId::Alpha(_) | SchemaId::An(_)) => push(&mut steps, formula, Justification::Axiom(*id, b)),
                        (Direction::FskdToN4ck(a), SchemaId::Ma(k)) => {
                            let (phi, psi) = (phi.unwrap(), psi);
                            match k {
                                1 => {
                                    let sb = binds(&[("phi", a), ("psi", phi), ("chi", psi.unwrap())]);
                                    let inst = apply_subst(&SchemaId::A(1).schema(), &sb).unwrap();
                                    let j = push(&mut steps, inst, Justification::Axiom(SchemaId::A(1), sb));
                                    push(&mut steps, formula, Justification::N4Step(vec![j]))
                                }
                                2 => push(&mut steps, formula, Justification::Axiom(SchemaId::A(4), binds(&[("phi", a), ("psi", phi)]))),
                                3 | 4 => {
                                    let id = if *k == 3 { "T4" } else { "T5" };
                                    let s = atom_subst(&[(1, a), (2, phi), (3, psi.unwrap())]);
                                    push(&mut steps, formula, Justification::Cite(id.into(), s, vec![]))
                                }
                                5 => {
                                    let sb = binds(&[("phi", a), ("psi", phi), ("chi", psi.unwrap())]);
                                    push(&mut steps, formula, Justification::Axiom(SchemaId::A(3), sb))
                                }
                                6 => push(&mut steps, formula, Justification::Cite("T6".into(), atom_subst(&[(1, a), (2, phi)]), vec![])),
                                _ => return Err(unmappable(format!("no image for {id}"))),
                            }
                        }
                        (Direction::N4ckToFskd, SchemaId::A(k)) => {
                            let psi = psi.unwrap();
                            match k {
                                1 => {
                                    let chi = chi.unwrap();
                                    let s = atom_subst(&[(1, psi), (2, chi)]);
                                    let goal = self.corpus.get("fsk_t2").and_then(|t| t.conclusion()).ok_or_else(|| unmappable("fsk_t2 missing".into()))?;
                                    let inst = goal.subst_atoms(&s.clone().into_iter().collect());
                                    let j = push(&mut steps, inst, Justification::Cite("fsk_t2".into(), s, vec![]));
                                    push(&mut steps, formula, Justification::N4Step(vec![j]))
                                }
                                2 => push(&mut steps, formula, Justification::Cite("fsk_t3".into(), atom_subst(&[(1, psi), (2, chi.unwrap())]), vec![])),
                                3 => push(&mut steps, formula, Justification::Axiom(SchemaId::Ma(5), binds(&[("phi", psi), ("psi", chi.unwrap())]))),
                                4 => push(&mut steps, formula, Justification::Axiom(SchemaId::Ma(2), binds(&[("phi", psi)]))),
                                _ => return Err(unmappable(format!("no image for {id}"))),
                            }
                        }
                        _ => return Err(unmappable(format!("{id} is not an axiom of {}", self.source()))),
                    }
                }
                Justification::Rule(rule, refs) => {
                    let (prem, concl) = rule.shape();
                    let mut sub = Substitution::new();
                    let ok = refs.len() == prem.len()
                        && refs.iter().zip(prem).all(|(&r, p)| match_into(p, &expand_abbrev(&d.steps[r].formula), &mut sub))
                        && match_into(concl, &expanded, &mut sub);
                    if !ok {
                        return Err(unmappable(format!("{} does not follow by {rule}", step.formula)));
                    }
                    let (phi, psi) = (self.map(&sub["phi"]), self.map(&sub["psi"]));
                    let cite = |id: &str, s: AtomSubst| Justification::Cite(id.into(), s, remap(refs));
                    let just = match (&self.dir, rule) {
                        (Direction::FskdToN4ck(a), RuleId::RmBox) => cite("RMbox", atom_subst(&[(1, &phi), (2, &psi), (3, a)])),
                        (Direction::FskdToN4ck(a), RuleId::RmDiam) => cite("RMdiam", atom_subst(&[(1, &phi), (2, &psi), (3, a)])),
                        (Direction::N4ckToFskd, RuleId::RCbox1) => cite("fsk_rbox", atom_subst(&[(1, &phi), (2, &psi)])),
                        (Direction::N4ckToFskd, RuleId::RCbox2) => cite("fsk_rnbox", atom_subst(&[(1, &phi), (2, &psi)])),
                        (Direction::N4ckToFskd, RuleId::RAbox | RuleId::RAprimeBox) => Justification::N4Step(vec![]),
                        _ => return Err(unmappable(format!("no image for rule {rule}"))),
                    };
                    push(&mut steps, formula, just)
                }
                Justification::Cite(id, s, refs) => {
                    let cited = self.corpus.get(id).ok_or_else(|| unmappable(format!("unknown script `{id}`")))?;
                    let mapped: AtomSubst = s.iter().map(|(k, v)| (*k, self.map(v))).collect();
                    let just = if cited.system.included_in(SystemId::N4) {
                        Justification::Cite(id.clone(), mapped, remap(refs))
                    } else if cited.system == self.source() {
                        let (new_id, renaming) = self.aux_script(id, n)?;
                        let sub = match renaming {
                            Some(ren) => ren
                                .iter()
                                .map(|(a, fresh)| {
                                    let Tree::Leaf(b) = fresh else { unreachable!() };
                                    (*b, mapped.get(a).cloned().unwrap_or(Tree::Leaf(*a)))
                                })
                                .collect(),
                            None => mapped,
                        };
                        Justification::Cite(new_id, sub, remap(refs))
                    } else {
                        return Err(unmappable(format!("{id} is a {} script", cited.system)));
                    };
                    push(&mut steps, formula, just)
                }
            };
            index.push(last);
        }
        let f = |x: &Formula| self.map(x);
        let goal = match &d.goal {
            Goal::Single(g) => Goal::Single(f(g)),
            Goal::DeltaDisjunction(ds) => Goal::DeltaDisjunction(ds.iter().map(f).collect()),
            Goal::Absurdity => Goal::Absurdity,
        };
        Ok(Derivation { system: self.target(), mode: d.mode, premises: d.premises.iter().map(f).collect(), goal, steps })
    }
}

/// Translates a checking derivation step by step. Axioms and rules without
/// a direct counterpart become citations of corpus scripts; cited scripts
/// of the source system are translated too and returned as `aux`.
pub fn translate_proof(corpus: &Corpus, dir: &Direction, d: &Derivation) -> Result<TranslatedProof, ProofTranslateError> {
    let mut base = 0;
    if let Direction::FskdToN4ck(a) = dir {
        reject(has_modal(a) || has_primed(a), "anchor outside the conditional language", a).map_err(ProofTranslateError::Anchor)?;
        base = a.atoms().iter().map(|x| x.index + 1).max().unwrap_or(0);
    }
    check_in(corpus, d).map_err(ProofTranslateError::SourceUnchecked)?;
    let mut cx = ProofCtx { corpus, dir: dir.clone(), rename_base: base, aux: Vec::new(), done: HashSet::new() };
    let main = cx.derivation(d)?;
    Ok(TranslatedProof { main, aux: cx.aux })
}

// ---------------------------------------------------------------- faithfulness harness

#[derive(Debug, Clone)]
pub struct HarnessConfig {
    /// Sampled models per direction.
    pub trials: usize,
    pub formulas_per_model: usize,
    pub max_worlds: usize,
    pub depth: usize,
    pub seed: u64,
}

impl HarnessConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        HarnessConfig { trials, formulas_per_model: 4, max_worlds: 3, depth: 3, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarnessViolation {
    pub claim: &'static str,
    pub formula: Formula,
    pub model: AnyModel,
    pub world: WorldId,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HarnessReport {
    /// (model, world, formula) triples compared.
    pub triples: usize,
    pub violations: Vec<HarnessViolation>,
    /// Only the direction from intuitionistic to Nelsonian models was checked.
    pub preservation_only: bool,
}

/// A consequence that fails in N4CK although the translated pair coincides
/// syntactically, so it holds in the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonFaithfulness {
    pub gamma: Formula,
    pub delta: Formula,
    pub translated: Formula,
    pub certificate: Certificate,
}

const SAMPLE_ATOMS: [u32; 3] = [0, 1, 2];

/// One side of a paired check: where each formula is verified and falsified
/// in the Nelsonian model, against where the translations of `φ` and `∼φ`
/// hold in the intuitionistic one, on the first `worlds` worlds.
struct Side<'a> {
    claim: &'static str,
    nelson: &'a AnyModel,
    int: &'a AnyModel,
    worlds: usize,
    witness: &'a AnyModel,
}

fn bisets(m: &AnyModel, fs: &[Formula]) -> Result<Vec<BiSet>, EvalError> {
    match m {
        AnyModel::Nel(m) => truth_sets_n4(m, fs),
        AnyModel::CNel(m) => truth_sets_n4ck(m, fs),
        AnyModel::Modal(m) => truth_sets_fskd(m, fs),
        AnyModel::CInt(_) => Err(EvalError::FlavorMismatch("intuitionistic model on the Nelsonian side".into())),
    }
}

fn compare(mapping: &Mapping, side: &Side<'_>, fs: &[Formula], out: &mut HarnessReport) {
    let nel = bisets(side.nelson, fs).expect("sampled formula evaluates");
    let mut translated = Vec::with_capacity(2 * fs.len());
    for f in fs {
        translated.push(apply(mapping, f).expect("sampled formula is in the source language"));
        translated.push(apply(mapping, &Tree::neg(f.clone())).expect("sampled formula is in the source language"));
    }
    let int = positive_sets(side.int, &translated).expect("translated formula evaluates");
    for (i, f) in fs.iter().enumerate() {
        out.triples += side.worlds;
        let bad = (0..side.worlds).find(|&w| {
            nel[i].plus.contains(w) != int[2 * i].contains(w) || nel[i].minus.contains(w) != int[2 * i + 1].contains(w)
        });
        if let Some(w) = bad {
            out.violations.push(HarnessViolation { claim: side.claim, formula: f.clone(), model: side.witness.clone(), world: w });
        }
    }
}

fn swapped(m: &CondNelModel) -> CondNelModel {
    CondNelModel { base: m.base.clone(), table: m.table.swapped() }
}

fn one_trial(mapping: &Mapping, cfg: &HarnessConfig, i: usize) -> HarnessReport {
    use Conn::*;
    let atoms: Vec<Atom> = SAMPLE_ATOMS.iter().map(|&i| Atom::p(i)).collect();
    let seed = cfg.seed.wrapping_add(i as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xFA17);
    let conns: &[Conn] = match mapping {
        Mapping::E => &[Neg, And, Or, Imp],
        Mapping::Em => &[Neg, And, Or, Imp, Box, Diamond],
        _ => &[Neg, And, Or, Imp, BoxTo, DiamTo],
    };
    let fs: Vec<Formula> = (0..cfg.formulas_per_model).map(|_| random_formula(&mut rng, 3, cfg.depth, conns)).collect();
    let mut out = HarnessReport::default();
    let nelson_logic = match mapping {
        Mapping::E => Logic::N4,
        Mapping::Em => Logic::FSKd,
        _ => Logic::N4CK,
    };
    let int_logic = if *mapping == Mapping::Em { Logic::IK } else { Logic::IntCK };

    // Nelsonian model to intuitionistic model
    if !matches!(mapping, Mapping::Eplus | Mapping::Eminus) {
        let src = sample_model(nelson_logic, &atoms, cfg.max_worlds, seed);
        let image = match (&src, mapping) {
            (AnyModel::Nel(m), _) => to_cond_int(&CondNelModel::from_nel(m.clone())).map(AnyModel::CInt),
            (AnyModel::CNel(m), Mapping::Emp) => to_cond_int(&swapped(m)).map(AnyModel::CInt),
            (AnyModel::CNel(m), _) => to_cond_int(m).map(AnyModel::CInt),
            (AnyModel::Modal(m), _) => relabel_modal(m, RelabelDirection::NelsonToInt).map(AnyModel::Modal),
            _ => unreachable!("sampler returns the requested kind"),
        }
        .expect("sampled model is valid");
        let side = Side { claim: "nelson-to-int", nelson: &src, int: &image, worlds: src.len(), witness: &src };
        compare(mapping, &side, &fs, &mut out);
    }

    // intuitionistic model to Nelsonian model
    let src = sample_model(int_logic, &atoms, cfg.max_worlds, seed ^ 0x1A7);
    let image = match (&src, mapping) {
        (AnyModel::CInt(m), Mapping::Epm | Mapping::E) => to_cond_nelson(m).map(AnyModel::CNel),
        (AnyModel::CInt(m), Mapping::Emp) => to_cond_nelson(m).map(|n| AnyModel::CNel(swapped(&n))),
        (AnyModel::CInt(m), Mapping::Eplus) => to_cond_nelson_with(m, KeyReading::PlusOnly).map(AnyModel::CNel),
        (AnyModel::CInt(m), Mapping::Eminus) => to_cond_nelson_with(m, KeyReading::MinusOnly).map(AnyModel::CNel),
        (AnyModel::Modal(m), _) => relabel_modal(m, RelabelDirection::IntToNelson).map(AnyModel::Modal),
        _ => unreachable!("sampler returns the requested kind"),
    }
    .expect("sampled model is valid");
    let side = Side { claim: "int-to-nelson", nelson: &image, int: &src, worlds: src.len(), witness: &src };
    compare(mapping, &side, &fs, &mut out);
    out
}

/// Samples models and formulas and checks the per-world equivalences that
/// make `mapping` an embedding: a model of one kind is transformed into one
/// of the other and `φ` (verified/falsified) is compared with the mapping
/// of `φ` and `∼φ`. For `Eplus`/`Eminus` only the transformation from
/// intuitionistic models is checked.
pub fn faithfulness_harness(mapping: &Mapping, cfg: &HarnessConfig) -> Result<HarnessReport, TranslateError> {
    if matches!(mapping, Mapping::Tr(_) | Mapping::TrI(_) | Mapping::TrBar) {
        return Err(TranslateError::IllFormed(format!("no paired model transformation for {mapping}")));
    }
    let parts = par::map_range(cfg.trials, |i| one_trial(mapping, cfg, i));
    let mut report = HarnessReport {
        preservation_only: matches!(mapping, Mapping::Eplus | Mapping::Eminus),
        ..Default::default()
    };
    for p in parts {
        report.triples += p.triples;
        report.violations.extend(p.violations);
    }
    Ok(report)
}

/// For `Eplus` and `Eminus`: the pair of conditionals with identical images
/// that N4CK separates, with a verified countermodel.
pub fn non_faithfulness_witness(mapping: &Mapping, max_worlds: usize) -> Option<NonFaithfulness> {
    let (g, d) = match mapping {
        Mapping::Eplus => ("(p1 /\\ ~p2) []-> p3", "~(p1 -> p2) []-> p3"),
        Mapping::Eminus => ("~(p1 /\\ ~p2) []-> p3", "(p1 -> p2) []-> p3"),
        _ => return None,
    };
    let (gamma, delta) = (parse_any(g).ok()?, parse_any(d).ok()?);
    let translated = apply(mapping, &gamma).ok()?;
    if translated != apply(mapping, &delta).ok()? {
        return None;
    }
    let budget = SearchBudget::exhaustive(max_worlds);
    match find_countermodel(Logic::N4CK, &[gamma.clone()], &[delta.clone()], &budget).ok()? {
        SearchOutcome::Found(certificate) if verify_certificate(&certificate) => {
            Some(NonFaithfulness { gamma, delta, translated, certificate })
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_any;

    fn pf(s: &str) -> Formula {
        parse_any(s).unwrap()
    }

    fn ap(m: &str, f: &str) -> String {
        apply(&m.parse().unwrap(), &pf(f)).unwrap().to_string()
    }

    #[test]
    fn e_clauses() {
        assert_eq!(ap("e", "~~p0"), "p0");
        assert_eq!(ap("e", "~p0"), "q0");
        assert_eq!(ap("e", "~(p0 /\\ p1)"), "q0 \\/ q1");
        assert_eq!(ap("e", "~(p0 \\/ ~p1)"), "q0 /\\ p1");
        assert_eq!(ap("e", "~(p0 -> p1)"), "p0 /\\ q1");
        assert!(apply(&Mapping::E, &pf("p0 []-> p1")).is_err());
        assert!(apply(&Mapping::E, &pf("q0")).is_err());
    }

    #[test]
    fn conditional_clauses() {
        assert_eq!(ap("epm", "p1 []-> p1"), "p1 []-> q1 []-> p1");
        assert_eq!(ap("emp", "p1 []-> p1"), "q1 []-> p1 []-> p1");
        assert_eq!(ap("eplus", "(p1 /\\ ~p2) []-> p3"), "(p1 /\\ q2) []-> p3");
        assert_eq!(ap("eplus", "~(p1 -> p2) []-> p3"), "(p1 /\\ q2) []-> p3");
        assert_eq!(ap("eminus", "~(p1 /\\ ~p2) []-> p3"), "(p1 /\\ q2) []-> p3");
        assert_eq!(ap("eminus", "(p1 -> p2) []-> p3"), "(p1 /\\ q2) []-> p3");
        assert_eq!(ap("epm", "~(p0 []-> p1)"), "p0 <>-> q0 <>-> q1");
        // <>-> is expanded before translating
        assert_eq!(ap("eplus", "p0 <>-> p1"), "p0 <>-> p1");
        assert_eq!(ap("e", "~~p0 /\\ p0"), "p0 /\\ p0");
    }

    #[test]
    fn modal_clauses() {
        assert_eq!(ap("em", "[]p1"), "[]p1");
        assert_eq!(ap("em", "~[]p1"), "<>q1");
        assert_eq!(ap("em", "<>p1"), "<>p1");
        assert_eq!(ap("tri:p1", "[]p1"), "p1 []-> p1");
        assert_eq!(ap("tri:p1", "~<>q1"), "~(p1 <>-> q1)");
        assert_eq!(ap("tr:p0 []-> p1", "[]p2"), "(p0 []-> p1) []-> p2");
        assert_eq!(ap("trbar", "(p0 []-> p1) []-> ~(p3 <>-> p2)"), "[]~<>p2");
    }

    #[test]
    fn mapping_names() {
        assert_eq!("tr".parse::<Mapping>(), Err(TranslateError::AnchorMissing));
        assert_eq!("tri:".parse::<Mapping>(), Err(TranslateError::AnchorMissing));
        assert!("zz".parse::<Mapping>().is_err());
        for m in ["e", "epm", "emp", "eplus", "eminus", "em", "trbar", "tr:p1", "tri:p0 []-> p1"] {
            assert_eq!(m.parse::<Mapping>().unwrap().to_string(), m);
        }
    }

    #[test]
    fn corpus_translates_both_ways() {
        let c = crate::proofs::corpus();
        let fwd = Direction::FskdToN4ck(pf("p0"));
        for (id, d) in c.iter() {
            let dir = match d.system {
                SystemId::FSKd => &fwd,
                SystemId::N4CK => &Direction::N4ckToFskd,
                _ => continue,
            };
            let t = translate_proof(c, dir, d).unwrap_or_else(|e| panic!("{id}: {e}"));
            assert_eq!(t.check(c), Ok(()), "{id}");
        }
    }

    #[test]
    fn anchor_sharing_atoms_with_citations() {
        let c = crate::proofs::corpus();
        let d = c.get("fsk_t2").unwrap();
        let t = translate_proof(c, &Direction::FskdToN4ck(pf("p1 []-> ~p2")), d).unwrap();
        assert_eq!(t.check(c), Ok(()));
        assert!(translate_proof(c, &Direction::FskdToN4ck(pf("[]p1")), d).is_err());
    }

    #[test]
    fn untranslatable_sources() {
        let c = crate::proofs::corpus();
        let t6 = c.get("T6").unwrap();
        let fwd = Direction::FskdToN4ck(pf("p0"));
        assert!(matches!(translate_proof(c, &fwd, t6), Err(ProofTranslateError::UnmappableStep { .. })));
        let mut broken = t6.clone();
        broken.steps.pop();
        assert!(matches!(
            translate_proof(c, &Direction::N4ckToFskd, &broken),
            Err(ProofTranslateError::SourceUnchecked(_))
        ));
    }

    #[test]
    fn direction_names() {
        assert_eq!("n4ck-to-fskd".parse::<Direction>(), Ok(Direction::N4ckToFskd));
        assert_eq!("fskd-to-n4ck:p0".parse::<Direction>(), Ok(Direction::FskdToN4ck(pf("p0"))));
        assert_eq!("fskd-to-n4ck".parse::<Direction>(), Err(TranslateError::AnchorMissing));
    }

    #[test]
    fn harness_small() {
        let cfg = HarnessConfig::new(40, 11);
        for m in [Mapping::E, Mapping::Epm, Mapping::Emp, Mapping::Em, Mapping::Eplus, Mapping::Eminus] {
            let r = faithfulness_harness(&m, &cfg).unwrap();
            assert!(r.triples > 0);
            assert!(r.violations.is_empty(), "{m}: {:?}", r.violations.first());
        }
        assert!(faithfulness_harness(&Mapping::TrBar, &cfg).is_err());
    }

    #[test]
    fn eplus_and_eminus_are_not_faithful() {
        for m in [Mapping::Eplus, Mapping::Eminus] {
            let w = non_faithfulness_witness(&m, 3).expect("witness");
            assert_eq!(w.translated.to_string(), "(p1 /\\ q2) []-> p3");
        }
        assert!(non_faithfulness_witness(&Mapping::Epm, 3).is_none());
    }
}
