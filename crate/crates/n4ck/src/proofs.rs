//! Hilbert systems, a derivation checker for theoremhood, consequence and
//! derived rules, the bundled proof-script corpus and sampled soundness
//! checks.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::decide::{abstract_conditionals, decide_classical, decide_int, decide_n4, IntVerdict, Verdict};
use crate::kripke::{AnyModel, CondIntModel, NelModel, WorldId};
use crate::par;
use crate::search::{random_formula, sample_model, Logic};
use crate::semantics::positive_sets;
use crate::syntax::{
    apply_subst, disjunction, expand_abbrev, language_violation, match_into, metavariables, parse_any, parse_schema,
    Atom, Conn, Formula, LanguageId, Schema, Substitution, Tree,
};

// ---------------------------------------------------------------- registry

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SystemId {
    ILplus,
    N4,
    IL,
    CL,
    N4CK,
    N4CKprime,
    CK,
    FSKd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemaId {
    Alpha(u8),
    An(u8),
    A(u8),
    Ma(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleId {
    MP,
    RAbox,
    RCbox1,
    RCbox2,
    RAprimeBox,
    RmBox,
    RmDiam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Oracle {
    IntPlus,
    N4,
    Int,
    Classical,
}

impl Oracle {
    fn within(self, other: Oracle) -> bool {
        self == other || self == Oracle::IntPlus || other == Oracle::Classical
    }
}

pub const ALL_SYSTEMS: [SystemId; 8] = [
    SystemId::ILplus,
    SystemId::N4,
    SystemId::IL,
    SystemId::CL,
    SystemId::N4CK,
    SystemId::N4CKprime,
    SystemId::CK,
    SystemId::FSKd,
];

impl SystemId {
    pub fn schemas(self) -> Vec<SchemaId> {
        let alpha = (1..=8).map(SchemaId::Alpha);
        let an = |r: std::ops::RangeInclusive<u8>| r.map(SchemaId::An);
        match self {
            SystemId::ILplus => alpha.collect(),
            SystemId::N4 => alpha.chain(an(1..=4)).collect(),
            SystemId::IL => alpha.chain(an(5..=6)).collect(),
            SystemId::CL => alpha.chain(an(5..=7)).collect(),
            SystemId::N4CK | SystemId::N4CKprime => alpha.chain(an(1..=4)).chain((1..=4).map(SchemaId::A)).collect(),
            SystemId::CK => alpha.chain(an(5..=7)).chain([SchemaId::A(1), SchemaId::A(4)]).collect(),
            SystemId::FSKd => alpha.chain(an(1..=4)).chain((1..=6).map(SchemaId::Ma)).collect(),
        }
    }

    pub fn rules(self) -> Vec<RuleId> {
        use RuleId::*;
        match self {
            SystemId::ILplus | SystemId::N4 | SystemId::IL | SystemId::CL => vec![MP],
            SystemId::N4CK => vec![MP, RAbox, RCbox1, RCbox2],
            SystemId::N4CKprime => vec![MP, RAbox, RCbox1, RCbox2, RAprimeBox],
            SystemId::CK => vec![MP, RAbox, RCbox1],
            SystemId::FSKd => vec![MP, RmBox, RmDiam],
        }
    }

    pub fn language(self) -> LanguageId {
        match self {
            SystemId::ILplus => LanguageId::LePlus,
            SystemId::N4 | SystemId::IL | SystemId::CL => LanguageId::L,
            SystemId::N4CK | SystemId::N4CKprime | SystemId::CK => LanguageId::LBoxto,
            SystemId::FSKd => LanguageId::LBox,
        }
    }

    /// Whether `(Γ, ∅)` pairs are obtained through derivability of `p1 /\ ~p1`.
    pub fn iota_closed(self) -> bool {
        matches!(self, SystemId::IL | SystemId::CL | SystemId::CK)
    }

    fn oracle(self) -> Oracle {
        match self {
            SystemId::ILplus => Oracle::IntPlus,
            SystemId::N4 | SystemId::N4CK | SystemId::N4CKprime | SystemId::FSKd => Oracle::N4,
            SystemId::IL => Oracle::Int,
            SystemId::CL | SystemId::CK => Oracle::Classical,
        }
    }

    /// Every axiom and rule of `self` is available in `other`, and the
    /// propositional steps of `self` are accepted by `other`.
    pub fn included_in(self, other: SystemId) -> bool {
        let s = other.schemas();
        let r = other.rules();
        self.schemas().iter().all(|x| s.contains(x))
            && self.rules().iter().all(|x| r.contains(x))
            && self.oracle().within(other.oracle())
    }

    pub fn name(self) -> &'static str {
        match self {
            SystemId::ILplus => "ILplus",
            SystemId::N4 => "N4",
            SystemId::IL => "IL",
            SystemId::CL => "CL",
            SystemId::N4CK => "N4CK",
            SystemId::N4CKprime => "N4CKprime",
            SystemId::CK => "CK",
            SystemId::FSKd => "FSKd",
        }
    }
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        ALL_SYSTEMS
            .iter()
            .copied()
            .find(|x| x.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown system `{s}`"))
    }
}

const SCHEMA_TEXT: &[(SchemaId, &str)] = &[
    (SchemaId::Alpha(1), "phi -> (psi -> phi)"),
    (SchemaId::Alpha(2), "(phi -> (psi -> chi)) -> ((phi -> psi) -> (phi -> chi))"),
    (SchemaId::Alpha(3), "(phi /\\ psi) -> phi"),
    (SchemaId::Alpha(4), "(phi /\\ psi) -> psi"),
    (SchemaId::Alpha(5), "phi -> (psi -> (phi /\\ psi))"),
    (SchemaId::Alpha(6), "phi -> (phi \\/ psi)"),
    (SchemaId::Alpha(7), "psi -> (phi \\/ psi)"),
    (SchemaId::Alpha(8), "(phi -> chi) -> ((psi -> chi) -> ((phi \\/ psi) -> chi))"),
    (SchemaId::An(1), "~~phi <-> phi"),
    (SchemaId::An(2), "~(phi /\\ psi) <-> (~phi \\/ ~psi)"),
    (SchemaId::An(3), "~(phi \\/ psi) <-> (~phi /\\ ~psi)"),
    (SchemaId::An(4), "~(phi -> psi) <-> (phi /\\ ~psi)"),
    (SchemaId::An(5), "(phi -> psi) -> ((phi -> ~psi) -> ~phi)"),
    (SchemaId::An(6), "phi -> (~phi -> psi)"),
    (SchemaId::An(7), "phi \\/ ~phi"),
    (SchemaId::A(1), "((phi []-> psi) /\\ (phi []-> chi)) <=> (phi []-> (psi /\\ chi))"),
    (SchemaId::A(2), "(~(phi []-> psi) /\\ (phi []-> chi)) -> ~(phi []-> (psi \\/ ~chi))"),
    (SchemaId::A(3), "((phi <>-> psi) -> (phi []-> chi)) -> (phi []-> (psi -> chi))"),
    (SchemaId::A(4), "phi []-> (psi -> psi)"),
    (SchemaId::Ma(1), "([]phi /\\ []psi) -> [](phi /\\ psi)"),
    (SchemaId::Ma(2), "[](phi -> phi)"),
    (SchemaId::Ma(3), "<>(phi \\/ psi) -> (<>phi \\/ <>psi)"),
    (SchemaId::Ma(4), "<>(phi -> psi) -> ([]phi -> <>psi)"),
    (SchemaId::Ma(5), "(<>phi -> []psi) -> [](phi -> psi)"),
    (SchemaId::Ma(6), "~[]phi <-> <>~phi"),
];

impl SchemaId {
    pub fn all() -> Vec<SchemaId> {
        SCHEMA_TEXT.iter().map(|(id, _)| *id).collect()
    }

    /// The schema as displayed, with `<>->`/`<>` kept.
    pub fn schema(self) -> Schema {
        let text = SCHEMA_TEXT.iter().find(|(id, _)| *id == self).expect("every id has a text").1;
        parse_schema(text).expect("built-in schema parses")
    }

    /// The schema with abbreviations unfolded, as used for matching.
    pub fn expanded(self) -> &'static Schema {
        static CACHE: OnceLock<HashMap<SchemaId, Schema>> = OnceLock::new();
        &CACHE.get_or_init(|| SchemaId::all().into_iter().map(|id| (id, expand_abbrev(&id.schema()))).collect())[&self]
    }
}

impl fmt::Display for SchemaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemaId::Alpha(i) => write!(f, "alpha{i}"),
            SchemaId::An(i) => write!(f, "An{i}"),
            SchemaId::A(i) => write!(f, "A{i}"),
            SchemaId::Ma(i) => write!(f, "a{i}"),
        }
    }
}

impl FromStr for SchemaId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        SchemaId::all()
            .into_iter()
            .find(|id| id.to_string() == s)
            .ok_or_else(|| format!("unknown axiom schema `{s}`"))
    }
}

const RULE_TEXT: &[(RuleId, &str, &[&str], &str)] = &[
    (RuleId::MP, "MP", &["phi", "phi -> psi"], "psi"),
    (RuleId::RAbox, "RAbox", &["phi <=> psi"], "(phi []-> chi) <=> (psi []-> chi)"),
    (RuleId::RCbox1, "RCbox1", &["phi <-> psi"], "(chi []-> phi) <-> (chi []-> psi)"),
    (RuleId::RCbox2, "RCbox2", &["~phi <-> ~psi"], "~(chi []-> phi) <-> ~(chi []-> psi)"),
    (RuleId::RAprimeBox, "RAprimeBox", &["phi <-> psi"], "(phi []-> chi) <=> (psi []-> chi)"),
    (RuleId::RmBox, "rmBox", &["phi -> psi"], "[]phi -> []psi"),
    (RuleId::RmDiam, "rmDiam", &["phi -> psi"], "<>phi -> <>psi"),
];

impl RuleId {
    pub fn all() -> Vec<RuleId> {
        RULE_TEXT.iter().map(|r| r.0).collect()
    }

    fn row(self) -> &'static (RuleId, &'static str, &'static [&'static str], &'static str) {
        RULE_TEXT.iter().find(|r| r.0 == self).expect("every rule has a row")
    }

    pub fn arity(self) -> usize {
        self.row().2.len()
    }

    /// Premise schemas and conclusion schema, abbreviations unfolded.
    pub fn shape(self) -> &'static (Vec<Schema>, Schema) {
        static CACHE: OnceLock<HashMap<RuleId, (Vec<Schema>, Schema)>> = OnceLock::new();
        &CACHE.get_or_init(|| {
            RULE_TEXT
                .iter()
                .map(|(id, _, prem, concl)| {
                    let p = prem.iter().map(|t| expand_abbrev(&parse_schema(t).unwrap())).collect();
                    (*id, (p, expand_abbrev(&parse_schema(concl).unwrap())))
                })
                .collect()
        })[&self]
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.row().1)
    }
}

impl FromStr for RuleId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        RULE_TEXT.iter().find(|r| r.1 == s).map(|r| r.0).ok_or_else(|| format!("unknown rule `{s}`"))
    }
}

// ---------------------------------------------------------------- derivations

pub type AtomSubst = BTreeMap<Atom, Formula>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Theorem,
    Consequence,
    DerivedRule,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Theorem => "theorem",
            Mode::Consequence => "consequence",
            Mode::DerivedRule => "derived-rule",
        })
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "theorem" => Ok(Mode::Theorem),
            "consequence" => Ok(Mode::Consequence),
            "derived-rule" => Ok(Mode::DerivedRule),
            _ => Err(format!("unknown mode `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Goal {
    Single(Formula),
    /// Compared against the right-nested disjunction of the list.
    DeltaDisjunction(Vec<Formula>),
    Absurdity,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Justification {
    Axiom(SchemaId, Substitution),
    /// 0-based index into the premises.
    Premise(usize),
    /// 0-based step references.
    Rule(RuleId, Vec<usize>),
    N4Step(Vec<usize>),
    Cite(String, AtomSubst, Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub formula: Formula,
    pub just: Justification,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub system: SystemId,
    pub mode: Mode,
    pub premises: Vec<Formula>,
    pub goal: Goal,
    pub steps: Vec<Step>,
}

impl Derivation {
    /// The formula the derivation establishes.
    pub fn conclusion(&self) -> Option<Formula> {
        match &self.goal {
            Goal::Single(f) => Some(f.clone()),
            Goal::DeltaDisjunction(ds) => disjunction(ds),
            Goal::Absurdity => Some(absurdity()),
        }
    }
}

fn absurdity() -> Formula {
    Tree::and(Tree::Leaf(Atom::p(1)), Tree::neg(Tree::Leaf(Atom::p(1))))
}

/// A propositional countermodel produced by the step oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleWitness {
    N4 { model: NelModel, world: WorldId },
    Int { model: CondIntModel, world: WorldId },
    Classical(BTreeMap<Atom, bool>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("bad reference: {0}")]
    BadRef(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("rule shape error: {0}")]
    RuleShapeError(String),
    #[error("mode violation: {0}")]
    ModeViolation(String),
    #[error("propositional step refuted: {formula}")]
    N4StepRefuted { formula: String, witness: Box<OracleWitness> },
    #[error("goal mismatch: {0}")]
    GoalMismatch(String),
    #[error("premise mismatch: {0}")]
    PremiseMismatch(String),
    #[error("ill-formed: {0}")]
    IllFormed(String),
    #[error("unknown script `{0}`")]
    UnknownScript(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}: {kind}", match .step { Some(s) => format!("step {s}"), None => "goal".to_string() })]
pub struct StepError {
    /// 1-based step number; `None` for goal and header errors.
    pub step: Option<usize>,
    pub kind: CheckError,
}

// ---------------------------------------------------------------- checking

fn subst_atoms(f: &Formula, s: &AtomSubst) -> Formula {
    let m: HashMap<Atom, Formula> = s.iter().map(|(a, f)| (*a, f.clone())).collect();
    f.subst_atoms(&m)
}

/// Runs the propositional oracle of `system` on `premises ⊨ goal` after
/// abstracting conditional and modal subformulas.
pub fn oracle_entails(system: SystemId, premises: &[Formula], goal: &Formula) -> Result<(), CheckError> {
    let mut all: Vec<Formula> = premises.iter().map(expand_abbrev).collect();
    all.push(expand_abbrev(goal));
    let (abs, _) = abstract_conditionals(&all);
    let (g, a) = abs.split_last().unwrap();
    let refuted = |witness| CheckError::N4StepRefuted { formula: goal.to_string(), witness: Box::new(witness) };
    match system.oracle() {
        Oracle::N4 => match decide_n4(a, g).map_err(|e| CheckError::IllFormed(e.to_string()))? {
            Verdict::Valid => Ok(()),
            Verdict::Refuted { model, world } => Err(refuted(OracleWitness::N4 { model, world })),
        },
        Oracle::Int | Oracle::IntPlus => match decide_int(a, g) {
            IntVerdict::Valid => Ok(()),
            IntVerdict::Refuted { model, world } => Err(refuted(OracleWitness::Int { model, world })),
        },
        Oracle::Classical => match decide_classical(a, g) {
            None => Ok(()),
            Some(v) => Err(refuted(OracleWitness::Classical(v))),
        },
    }
}

fn match_rule(rule: RuleId, inputs: &[&Formula], concl: &Formula) -> bool {
    let (prem, c) = rule.shape();
    let try_order = |order: &[usize]| {
        let mut sub = Substitution::new();
        order.iter().zip(prem).all(|(&i, s)| match_into(s, inputs[i], &mut sub)) && match_into(c, concl, &mut sub)
    };
    if rule == RuleId::MP {
        try_order(&[0, 1]) || try_order(&[1, 0])
    } else {
        try_order(&(0..inputs.len()).collect::<Vec<_>>())
    }
}

/// Instantiates the premises and conclusion of a cited script.
fn cite_instance(d: &Derivation, s: &AtomSubst) -> (Vec<Formula>, Option<Formula>) {
    (d.premises.iter().map(|p| subst_atoms(p, s)).collect(), d.conclusion().map(|c| subst_atoms(&c, s)))
}

fn check_step(corpus: &Corpus, d: &Derivation, i: usize, expanded: &[Formula]) -> Result<(), CheckError> {
    let step = &d.steps[i];
    let f = &expanded[i];
    if let Some(v) = language_violation(f, d.system.language()) {
        return Err(CheckError::IllFormed(v));
    }
    let refs_ok = |refs: &[usize]| -> Result<Vec<&Formula>, CheckError> {
        refs.iter()
            .map(|&r| {
                if r < i {
                    Ok(&expanded[r])
                } else {
                    Err(CheckError::BadRef(format!("step {} is not before step {}", r + 1, i + 1)))
                }
            })
            .collect()
    };
    match &step.just {
        Justification::Axiom(id, binds) => {
            if !d.system.schemas().contains(id) {
                return Err(CheckError::SchemaMismatch(format!("{id} is not an axiom of {}", d.system)));
            }
            let schema = id.expanded();
            let metas = metavariables(schema);
            let mut sub = Substitution::new();
            for (k, v) in binds {
                if !metas.contains(k) {
                    return Err(CheckError::SchemaMismatch(format!("{id} has no metavariable `{k}`")));
                }
                sub.insert(k.clone(), expand_abbrev(v));
            }
            if !match_into(schema, f, &mut sub) {
                return Err(CheckError::SchemaMismatch(format!("{f} is not an instance of {id} under the bindings")));
            }
            Ok(())
        }
        Justification::Premise(k) => {
            if d.mode == Mode::Theorem {
                return Err(CheckError::ModeViolation("premise in theorem mode".into()));
            }
            let p = d.premises.get(*k).ok_or_else(|| CheckError::BadRef(format!("no premise {}", k + 1)))?;
            if &expand_abbrev(p) != f {
                return Err(CheckError::PremiseMismatch(format!("premise {} is {p}", k + 1)));
            }
            Ok(())
        }
        Justification::Rule(rule, refs) => {
            if !d.system.rules().contains(rule) {
                return Err(CheckError::RuleShapeError(format!("{rule} is not a rule of {}", d.system)));
            }
            if d.mode == Mode::Consequence && *rule != RuleId::MP {
                return Err(CheckError::ModeViolation(format!("{rule} in consequence mode")));
            }
            let inputs = refs_ok(refs)?;
            if inputs.len() != rule.arity() {
                return Err(CheckError::RuleShapeError(format!("{rule} takes {} premises", rule.arity())));
            }
            if !match_rule(*rule, &inputs, f) {
                return Err(CheckError::RuleShapeError(format!("{f} does not follow by {rule}")));
            }
            Ok(())
        }
        Justification::N4Step(refs) => {
            let inputs: Vec<Formula> = refs_ok(refs)?.into_iter().cloned().collect();
            oracle_entails(d.system, &inputs, f)
        }
        Justification::Cite(id, s, refs) => {
            let cited = corpus.get(id).ok_or_else(|| CheckError::UnknownScript(id.clone()))?;
            if !cited.system.included_in(d.system) {
                return Err(CheckError::ModeViolation(format!("{id} lives in {}, not available in {}", cited.system, d.system)));
            }
            if cited.mode == Mode::Consequence && !matches!(cited.goal, Goal::Single(_)) {
                return Err(CheckError::ModeViolation(format!("{id} does not conclude a single formula")));
            }
            if d.mode == Mode::Consequence && cited.mode == Mode::DerivedRule && !cited.premises.is_empty() {
                return Err(CheckError::ModeViolation(format!("derived rule {id} in consequence mode")));
            }
            let inputs = refs_ok(refs)?;
            let (prem, concl) = cite_instance(cited, s);
            if inputs.len() != prem.len() {
                return Err(CheckError::RuleShapeError(format!("{id} takes {} premises", prem.len())));
            }
            for (k, (have, want)) in inputs.iter().zip(&prem).enumerate() {
                if **have != expand_abbrev(want) {
                    return Err(CheckError::RuleShapeError(format!("premise {} of {id} should be {want}", k + 1)));
                }
            }
            match concl {
                Some(c) if expand_abbrev(&c) == *f => Ok(()),
                Some(c) => Err(CheckError::SchemaMismatch(format!("{id} under the bindings gives {c}"))),
                None => Err(CheckError::SchemaMismatch(format!("{id} has no conclusion"))),
            }
        }
    }
}

/// Checks `d`, resolving citations in `corpus`. Cited scripts are assumed
/// to have been checked on their own.
pub fn check_in(corpus: &Corpus, d: &Derivation) -> Result<(), StepError> {
    let goal_err = |kind| StepError { step: None, kind };
    if d.mode == Mode::Theorem && !d.premises.is_empty() {
        return Err(goal_err(CheckError::ModeViolation("theorem mode with premises".into())));
    }
    if d.mode != Mode::Consequence && !matches!(d.goal, Goal::Single(_)) {
        return Err(goal_err(CheckError::ModeViolation(format!("{} mode needs a single goal", d.mode))));
    }
    match &d.goal {
        Goal::DeltaDisjunction(ds) if ds.is_empty() => {
            return Err(goal_err(CheckError::GoalMismatch("empty disjunction".into())))
        }
        Goal::Absurdity if !d.system.iota_closed() => {
            return Err(goal_err(CheckError::ModeViolation(format!("{} has no absurdity goals", d.system))))
        }
        _ => {}
    }
    for p in &d.premises {
        if let Some(v) = language_violation(&expand_abbrev(p), d.system.language()) {
            return Err(goal_err(CheckError::IllFormed(format!("premise {p}: {v}"))));
        }
    }
    let expanded: Vec<Formula> = d.steps.iter().map(|s| expand_abbrev(&s.formula)).collect();
    for i in 0..d.steps.len() {
        check_step(corpus, d, i, &expanded).map_err(|kind| StepError { step: Some(i + 1), kind })?;
    }
    let last = expanded.last().ok_or_else(|| goal_err(CheckError::GoalMismatch("no steps".into())))?;
    let want = expand_abbrev(&d.conclusion().unwrap());
    if *last != want {
        return Err(goal_err(CheckError::GoalMismatch(format!("last step is {}, goal is {}", d.steps.last().unwrap().formula, want))));
    }
    Ok(())
}

/// Checks `d` against the bundled corpus.
pub fn check_derivation(d: &Derivation) -> Result<(), StepError> {
    check_in(corpus(), d)
}

// ---------------------------------------------------------------- script format

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {msg}")]
pub struct ScriptError {
    pub line: usize,
    pub msg: String,
}

fn parse_bindings(text: &str) -> Result<Vec<(String, Formula)>, String> {
    let inner = text.trim();
    let inner = inner
        .strip_prefix('{')
        .and_then(|t| t.strip_suffix('}'))
        .ok_or_else(|| format!("bindings must be in braces: `{text}`"))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|b| {
            let (k, v) = b.split_once(":=").ok_or_else(|| format!("binding without `:=`: `{b}`"))?;
            let f = parse_any(v.trim()).map_err(|e| format!("binding `{}`: {e}", k.trim()))?;
            Ok((k.trim().to_string(), f))
        })
        .collect()
}

fn parse_refs(words: &[&str]) -> Result<Vec<usize>, String> {
    words
        .iter()
        .map(|w| match w.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n - 1),
            _ => Err(format!("bad step reference `{w}`")),
        })
        .collect()
}

fn parse_atom(s: &str) -> Result<Atom, String> {
    match parse_any(s) {
        Ok(Tree::Leaf(a)) => Ok(a),
        _ => Err(format!("`{s}` is not an atom")),
    }
}

fn parse_justification(text: &str) -> Result<Justification, String> {
    let text = text.trim();
    let (head, rest) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
    let rest = rest.trim();
    // bindings, then refs
    let split_binds = |rest: &str| -> Result<(Vec<(String, Formula)>, Vec<usize>), String> {
        if rest.starts_with('{') {
            let close = rest.find('}').ok_or("unclosed bindings")?;
            let b = parse_bindings(&rest[..=close])?;
            let refs: Vec<&str> = rest[close + 1..].split_whitespace().collect();
            Ok((b, parse_refs(&refs)?))
        } else {
            Ok((Vec::new(), parse_refs(&rest.split_whitespace().collect::<Vec<_>>())?))
        }
    };
    match head {
        "ax" => {
            let (id, rest) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
            let id: SchemaId = id.parse()?;
            let (b, refs) = split_binds(rest.trim())?;
            if !refs.is_empty() {
                return Err("axioms take no step references".into());
            }
            Ok(Justification::Axiom(id, b.into_iter().collect()))
        }
        "prem" => match rest.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Justification::Premise(n - 1)),
            _ => Err(format!("bad premise index `{rest}`")),
        },
        "rule" => {
            let words: Vec<&str> = rest.split_whitespace().collect();
            let (id, refs) = words.split_first().ok_or("rule name missing")?;
            Ok(Justification::Rule(id.parse()?, parse_refs(refs)?))
        }
        "n4" => Ok(Justification::N4Step(parse_refs(&rest.split_whitespace().collect::<Vec<_>>())?)),
        "cite" => {
            let (id, rest) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
            if id.is_empty() {
                return Err("script name missing".into());
            }
            let (b, refs) = split_binds(rest.trim())?;
            let s = b.into_iter().map(|(k, v)| Ok((parse_atom(&k)?, v))).collect::<Result<_, String>>()?;
            Ok(Justification::Cite(id.to_string(), s, refs))
        }
        _ => Err(format!("unknown justification `{head}`")),
    }
}

/// Parses the structured-text proof format.
pub fn parse_script(text: &str) -> Result<Derivation, ScriptError> {
    let mut system = None;
    let mut mode = None;
    let mut premises = Vec::new();
    let mut goal = None;
    let mut steps = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let err = |msg: String| ScriptError { line: line_no, msg };
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if let Some((key, val)) = line.split_once(':').filter(|(k, _)| k.chars().all(|c| c.is_ascii_alphabetic())) {
            let val = val.trim();
            match key {
                "system" => system = Some(val.parse::<SystemId>().map_err(err)?),
                "mode" => mode = Some(val.parse::<Mode>().map_err(err)?),
                "premise" => premises.push(parse_any(val).map_err(|e| err(e.to_string()))?),
                "goal" => {
                    goal = Some(if val == "absurdity" {
                        Goal::Absurdity
                    } else if let Some(list) = val.strip_prefix("disjunction") {
                        let ds = list
                            .split(';')
                            .map(|t| parse_any(t.trim()))
                            .collect::<Result<Vec<_>, _>>()
                            .map_err(|e| err(e.to_string()))?;
                        Goal::DeltaDisjunction(ds)
                    } else {
                        Goal::Single(parse_any(val).map_err(|e| err(e.to_string()))?)
                    })
                }
                _ => return Err(err(format!("unknown header `{key}`"))),
            }
            continue;
        }
        let (num, rest) = line.split_once('.').ok_or_else(|| err("expected `<n>. <formula> ; <justification>`".into()))?;
        let n: usize = num.trim().parse().map_err(|_| err(format!("bad step number `{num}`")))?;
        if n != steps.len() + 1 {
            return Err(err(format!("step {n} out of sequence")));
        }
        let (ftext, jtext) = rest.split_once(';').ok_or_else(|| err("missing `;` before the justification".into()))?;
        let formula = parse_any(ftext.trim()).map_err(|e| err(e.to_string()))?;
        let just = parse_justification(jtext).map_err(err)?;
        steps.push(Step { formula, just });
    }
    let end = text.lines().count();
    let missing = |what: &str| ScriptError { line: end, msg: format!("missing `{what}:` header") };
    Ok(Derivation {
        system: system.ok_or_else(|| missing("system"))?,
        mode: mode.ok_or_else(|| missing("mode"))?,
        premises,
        goal: goal.ok_or_else(|| missing("goal"))?,
        steps,
    })
}

fn fmt_refs(refs: &[usize]) -> String {
    refs.iter().map(|r| format!(" {}", r + 1)).collect()
}

impl fmt::Display for Justification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Justification::Axiom(id, b) => {
                let binds: Vec<String> = b.iter().map(|(k, v)| format!("{k} := {v}")).collect();
                write!(f, "ax {id} {{{}}}", binds.join(", "))
            }
            Justification::Premise(i) => write!(f, "prem {}", i + 1),
            Justification::Rule(r, refs) => write!(f, "rule {r}{}", fmt_refs(refs)),
            Justification::N4Step(refs) => write!(f, "n4{}", fmt_refs(refs)),
            Justification::Cite(id, s, refs) => {
                let binds: Vec<String> = s.iter().map(|(k, v)| format!("{k} := {v}")).collect();
                write!(f, "cite {id} {{{}}}{}", binds.join(", "), fmt_refs(refs))
            }
        }
    }
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "system: {}", self.system)?;
        writeln!(f, "mode: {}", self.mode)?;
        for p in &self.premises {
            writeln!(f, "premise: {p}")?;
        }
        match &self.goal {
            Goal::Single(g) => writeln!(f, "goal: {g}")?,
            Goal::DeltaDisjunction(ds) => {
                let parts: Vec<String> = ds.iter().map(|d| d.to_string()).collect();
                writeln!(f, "goal: disjunction {}", parts.join(" ; "))?
            }
            Goal::Absurdity => writeln!(f, "goal: absurdity")?,
        }
        for (i, s) in self.steps.iter().enumerate() {
            writeln!(f, "{}. {} ; {}", i + 1, s.formula, s.just)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------- corpus

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("script {id}: {err}")]
    Parse { id: String, err: ScriptError },
    #[error("duplicate script id `{0}`")]
    Duplicate(String),
    #[error("script {0} cites unknown script `{1}`")]
    Unknown(String, String),
    #[error("citation cycle through `{0}`")]
    Cycle(String),
}

/// A set of named derivations whose citations form a DAG.
#[derive(Debug, Clone)]
pub struct Corpus {
    scripts: Vec<(String, Derivation)>,
    index: HashMap<String, usize>,
}

fn cited_ids(d: &Derivation) -> Vec<&str> {
    d.steps
        .iter()
        .filter_map(|s| match &s.just {
            Justification::Cite(id, _, _) => Some(id.as_str()),
            _ => None,
        })
        .collect()
}

impl Corpus {
    pub fn empty() -> Self {
        Corpus { scripts: Vec::new(), index: HashMap::new() }
    }

    /// Builds a corpus, ordering scripts so that each comes after everything
    /// it cites. Citations may also point into `base`.
    pub fn new(scripts: Vec<(String, Derivation)>, base: Option<&Corpus>) -> Result<Corpus, CorpusError> {
        let mut all: Vec<(String, Derivation)> = base.map(|b| b.scripts.clone()).unwrap_or_default();
        let known: HashSet<String> = all.iter().map(|(id, _)| id.clone()).collect();
        let local: HashMap<String, usize> = scripts.iter().enumerate().map(|(i, (id, _))| (id.clone(), i)).collect();
        if local.len() != scripts.len() {
            let mut seen = HashSet::new();
            let dup = scripts.iter().find(|(id, _)| !seen.insert(id.clone())).unwrap();
            return Err(CorpusError::Duplicate(dup.0.clone()));
        }
        if let Some(id) = scripts.iter().map(|(id, _)| id).find(|id| known.contains(*id)) {
            return Err(CorpusError::Duplicate(id.clone()));
        }
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; scripts.len()];
        let mut order = Vec::new();
        fn visit(
            i: usize,
            scripts: &[(String, Derivation)],
            local: &HashMap<String, usize>,
            known: &HashSet<String>,
            state: &mut [u8],
            order: &mut Vec<usize>,
        ) -> Result<(), CorpusError> {
            match state[i] {
                2 => return Ok(()),
                1 => return Err(CorpusError::Cycle(scripts[i].0.clone())),
                _ => {}
            }
            state[i] = 1;
            for c in cited_ids(&scripts[i].1) {
                if let Some(&j) = local.get(c) {
                    visit(j, scripts, local, known, state, order)?;
                } else if !known.contains(c) {
                    return Err(CorpusError::Unknown(scripts[i].0.clone(), c.to_string()));
                }
            }
            state[i] = 2;
            order.push(i);
            Ok(())
        }
        for i in 0..scripts.len() {
            visit(i, &scripts, &local, &known, &mut state, &mut order)?;
        }
        let mut slots: Vec<Option<(String, Derivation)>> = scripts.into_iter().map(Some).collect();
        all.extend(order.into_iter().map(|i| slots[i].take().unwrap()));
        let index = all.iter().enumerate().map(|(i, (id, _))| (id.clone(), i)).collect();
        Ok(Corpus { scripts: all, index })
    }

    /// This corpus extended with `extra`, which may cite anything here.
    pub fn with_extra(&self, extra: Vec<(String, Derivation)>) -> Result<Corpus, CorpusError> {
        Corpus::new(extra, Some(self))
    }

    pub fn get(&self, id: &str) -> Option<&Derivation> {
        self.index.get(id).map(|&i| &self.scripts[i].1)
    }

    pub fn ids(&self) -> Vec<&str> {
        self.scripts.iter().map(|(id, _)| id.as_str()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Derivation)> {
        self.scripts.iter().map(|(id, d)| (id.as_str(), d))
    }

    pub fn len(&self) -> usize {
        self.scripts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scripts.is_empty()
    }

    /// Checks every script, in parallel when enabled; results in corpus order.
    pub fn check_all(&self) -> Vec<(String, Result<(), StepError>)> {
        par::map(&self.scripts, |(id, d)| (id.clone(), check_in(self, d)))
    }
}

/// Source text of the bundled scripts, by id.
pub const SCRIPT_SOURCES: &[(&str, &str)] = &[
    ("RCbox", include_str!("../scripts/RCbox.prf")),
    ("Nec", include_str!("../scripts/Nec.prf")),
    ("RMbox", include_str!("../scripts/RMbox.prf")),
    ("RMnbox", include_str!("../scripts/RMnbox.prf")),
    ("RMdiam", include_str!("../scripts/RMdiam.prf")),
    ("T1", include_str!("../scripts/T1.prf")),
    ("T2", include_str!("../scripts/T2.prf")),
    ("T3", include_str!("../scripts/T3.prf")),
    ("T4", include_str!("../scripts/T4.prf")),
    ("T5", include_str!("../scripts/T5.prf")),
    ("T6", include_str!("../scripts/T6.prf")),
    ("ck_A2", include_str!("../scripts/ck_A2.prf")),
    ("ck_A3", include_str!("../scripts/ck_A3.prf")),
    ("ck_RCbox2", include_str!("../scripts/ck_RCbox2.prf")),
    ("fsk_rmnbox", include_str!("../scripts/fsk_rmnbox.prf")),
    ("fsk_rbox", include_str!("../scripts/fsk_rbox.prf")),
    ("fsk_rnbox", include_str!("../scripts/fsk_rnbox.prf")),
    ("fsk_t2", include_str!("../scripts/fsk_t2.prf")),
    ("fsk_t3", include_str!("../scripts/fsk_t3.prf")),
];

/// Re-justifies an N4CK derivation in CK: `An` axioms become classical
/// steps, (A2), (A3) and (RCbox2) become citations of the CK scripts, and
/// citations point at the `ck_` versions.
pub fn to_ck(d: &Derivation) -> Result<Derivation, String> {
    if d.system != SystemId::N4CK {
        return Err(format!("expected an N4CK derivation, got {}", d.system));
    }
    let atom_binds = |b: &Substitution| -> AtomSubst {
        [("phi", 1), ("psi", 2), ("chi", 3)]
            .iter()
            .filter_map(|(k, i)| b.get(*k).map(|v| (Atom::p(*i), v.clone())))
            .collect()
    };
    let mut steps = Vec::new();
    for s in &d.steps {
        let just = match &s.just {
            Justification::Axiom(SchemaId::An(_), _) => Justification::N4Step(Vec::new()),
            Justification::Axiom(SchemaId::A(k @ (2 | 3)), b) => {
                let mut sub = b.clone();
                if !match_into(SchemaId::A(*k).expanded(), &expand_abbrev(&s.formula), &mut sub) {
                    return Err(format!("{} is not an instance of A{k}", s.formula));
                }
                Justification::Cite(format!("ck_A{k}"), atom_binds(&sub), Vec::new())
            }
            Justification::Rule(RuleId::RCbox2, refs) => {
                let (prem, concl) = RuleId::RCbox2.shape();
                let mut sub = Substitution::new();
                let premise = refs.first().and_then(|&r| d.steps.get(r)).ok_or("RCbox2 without premise")?;
                if !(match_into(&prem[0], &expand_abbrev(&premise.formula), &mut sub)
                    && match_into(concl, &expand_abbrev(&s.formula), &mut sub))
                {
                    return Err(format!("{} does not follow by RCbox2", s.formula));
                }
                Justification::Cite("ck_RCbox2".into(), atom_binds(&sub), refs.clone())
            }
            Justification::Cite(id, sub, refs) => Justification::Cite(format!("ck_{id}"), sub.clone(), refs.clone()),
            other => other.clone(),
        };
        steps.push(Step { formula: s.formula.clone(), just });
    }
    Ok(Derivation { system: SystemId::CK, steps, ..d.clone() })
}

fn build_corpus() -> Result<Corpus, CorpusError> {
    let mut scripts = Vec::new();
    for (id, src) in SCRIPT_SOURCES {
        let d = parse_script(src).map_err(|err| CorpusError::Parse { id: id.to_string(), err })?;
        scripts.push((id.to_string(), d));
    }
    let n4ck: Vec<(String, Derivation)> =
        scripts.iter().filter(|(_, d)| d.system == SystemId::N4CK).cloned().collect();
    for (id, d) in n4ck {
        let ck = to_ck(&d).map_err(|msg| CorpusError::Parse { id: id.clone(), err: ScriptError { line: 0, msg } })?;
        scripts.push((format!("ck_{id}"), ck));
    }
    Corpus::new(scripts, None)
}

/// The bundled corpus: transcribed N4CK, CK and FSKd scripts plus the
/// CK re-justifications of every N4CK script.
pub fn corpus() -> &'static Corpus {
    static CORPUS: OnceLock<Corpus> = OnceLock::new();
    CORPUS.get_or_init(|| build_corpus().expect("bundled corpus is well-formed"))
}

// ---------------------------------------------------------------- soundness sampling

#[derive(Debug, Clone)]
pub struct SoundnessConfig {
    /// Random instances per schema.
    pub trials: usize,
    /// Number of sampled models.
    pub models: usize,
    pub max_worlds: usize,
    pub depth: usize,
    pub seed: u64,
    /// Extra schemas checked alongside (or instead of) the system's own.
    pub extra: Vec<(String, Schema)>,
    pub include_system: bool,
}

impl SoundnessConfig {
    pub fn new(trials: usize, models: usize, seed: u64) -> Self {
        SoundnessConfig { trials, models, max_worlds: 4, depth: 3, seed, extra: Vec::new(), include_system: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SoundnessFailure {
    pub schema: String,
    pub instance: Formula,
    /// 0-based index of the first instance that failed, in generation order.
    pub trial: usize,
    pub model: AnyModel,
    pub world: WorldId,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SoundnessReport {
    pub instances: usize,
    pub models: usize,
    pub failures: Vec<SoundnessFailure>,
    /// Rule applications whose premises held on every sampled model.
    pub rule_checks: usize,
    pub rule_failures: Vec<SoundnessFailure>,
}

fn semantic_logic(system: SystemId) -> Option<(Logic, Vec<Conn>)> {
    use Conn::*;
    match system {
        SystemId::N4 => Some((Logic::N4, vec![Neg, And, Or, Imp])),
        SystemId::N4CK => Some((Logic::N4CK, vec![Neg, And, Or, Imp, BoxTo, DiamTo])),
        SystemId::FSKd => Some((Logic::FSKd, vec![Neg, And, Or, Imp, Box, Diamond])),
        _ => None,
    }
}

fn first_failure(models: &[AnyModel], f: &Formula) -> Option<(usize, WorldId)> {
    models.iter().enumerate().find_map(|(i, m)| {
        let s = &positive_sets(m, std::slice::from_ref(f)).ok()?[0];
        (0..m.len()).find(|w| !s.contains(*w)).map(|w| (i, w))
    })
}

fn random_binding(rng: &mut ChaCha8Rng, metas: &[String], depth: usize, conns: &[Conn]) -> Substitution {
    metas.iter().map(|m| (m.clone(), random_formula(rng, 3, depth, conns))).collect()
}

/// Random schema instances evaluated on random validated models; any world
/// where an instance is not verified is reported. Rules are checked for
/// preservation of validity over the sampled model set. `None` for systems
/// without an implemented semantics.
pub fn soundness_sample(system: SystemId, cfg: &SoundnessConfig) -> Option<SoundnessReport> {
    let (logic, conns) = semantic_logic(system)?;
    let atoms = [Atom::p(0), Atom::p(1), Atom::p(2)];
    let models: Vec<AnyModel> =
        (0..cfg.models as u64).map(|i| sample_model(logic, &atoms, cfg.max_worlds, cfg.seed.wrapping_add(i))).collect();
    let mut schemas: Vec<(String, Schema)> = Vec::new();
    if cfg.include_system {
        schemas.extend(system.schemas().into_iter().map(|id| (id.to_string(), id.schema())));
    }
    schemas.extend(cfg.extra.iter().cloned());
    let per_schema = par::map(&schemas, |(name, schema)| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ hash_name(name));
        let metas = metavariables(schema);
        for t in 0..cfg.trials {
            let sub = random_binding(&mut rng, &metas, cfg.depth, &conns);
            let inst = apply_subst(schema, &sub).expect("all metavariables bound");
            if let Some((i, w)) = first_failure(&models, &inst) {
                return Some(SoundnessFailure { schema: name.clone(), instance: inst, trial: t, model: models[i].clone(), world: w });
            }
        }
        None
    });
    let mut report = SoundnessReport {
        instances: schemas.len() * cfg.trials,
        models: models.len(),
        failures: per_schema.into_iter().flatten().collect(),
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5EED);
    for rule in system.rules().into_iter().filter(|r| *r != RuleId::MP) {
        let (prem, concl) = rule.shape();
        let metas = metavariables(concl);
        for _ in 0..cfg.trials / 5 {
            let mut sub = random_binding(&mut rng, &metas, cfg.depth.min(2), &conns);
            // bias towards valid premises: make psi a variant of phi
            if let Some(phi) = sub.get("phi").cloned() {
                let variant = match rng.gen_range(0..4) {
                    0 => phi.clone(),
                    1 => Tree::neg(Tree::neg(phi.clone())),
                    2 => Tree::and(phi.clone(), phi.clone()),
                    _ => sub["psi"].clone(),
                };
                sub.insert("psi".into(), variant);
            }
            let inputs: Vec<Formula> = prem.iter().map(|p| apply_subst(p, &sub).unwrap()).collect();
            if inputs.iter().any(|f| first_failure(&models, f).is_some()) {
                continue;
            }
            report.rule_checks += 1;
            let out = apply_subst(concl, &sub).unwrap();
            if let Some((i, w)) = first_failure(&models, &out) {
                report.rule_failures.push(SoundnessFailure {
                    schema: rule.to_string(),
                    instance: out,
                    trial: report.rule_checks - 1,
                    model: models[i].clone(),
                    world: w,
                });
            }
        }
    }
    Some(report)
}

fn hash_name(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pf(s: &str) -> Formula {
        parse_any(s).unwrap()
    }

    #[test]
    fn schema_and_rule_names_round_trip() {
        for id in SchemaId::all() {
            assert_eq!(id.to_string().parse::<SchemaId>(), Ok(id));
            let _ = id.expanded();
        }
        for r in RuleId::all() {
            assert_eq!(r.to_string().parse::<RuleId>(), Ok(r));
        }
        for s in ALL_SYSTEMS {
            assert_eq!(s.name().parse::<SystemId>(), Ok(s));
        }
    }

    #[test]
    fn system_inclusions() {
        assert!(SystemId::N4.included_in(SystemId::N4CK));
        assert!(SystemId::N4CK.included_in(SystemId::N4CKprime));
        assert!(!SystemId::N4CK.included_in(SystemId::CK));
        assert!(SystemId::ILplus.included_in(SystemId::CK));
        assert!(SystemId::IL.included_in(SystemId::CL));
        assert!(!SystemId::N4.included_in(SystemId::IL));
    }

    #[test]
    fn single_axiom_step() {
        let d = Derivation {
            system: SystemId::N4CK,
            mode: Mode::Theorem,
            premises: vec![],
            goal: Goal::Single(pf("p0 -> (p1 -> p0)")),
            steps: vec![Step {
                formula: pf("p0 -> (p1 -> p0)"),
                just: Justification::Axiom(
                    SchemaId::Alpha(1),
                    [("phi".to_string(), pf("p0")), ("psi".to_string(), pf("p1"))].into_iter().collect(),
                ),
            }],
        };
        assert_eq!(check_derivation(&d), Ok(()));
    }

    #[test]
    fn consequence_mode_forbids_other_rules() {
        let text = "system: N4CK\nmode: consequence\npremise: p1 <=> p2\ngoal: (p1 []-> p3) <=> (p2 []-> p3)\n\
                    1. p1 <=> p2 ; prem 1\n2. (p1 []-> p3) <=> (p2 []-> p3) ; rule RAbox 1\n";
        let d = parse_script(text).unwrap();
        let e = check_derivation(&d).unwrap_err();
        assert_eq!(e.step, Some(2));
        assert!(matches!(e.kind, CheckError::ModeViolation(_)));
        let derived = Derivation { mode: Mode::DerivedRule, ..d };
        assert_eq!(check_derivation(&derived), Ok(()));
    }

    #[test]
    fn disjunction_and_absurdity_goals() {
        let text = "system: N4\nmode: consequence\npremise: p0\ngoal: disjunction p1 ; p0 ; p2\n\
                    1. p0 ; prem 1\n2. p1 \\/ (p0 \\/ p2) ; n4 1\n";
        assert_eq!(check_derivation(&parse_script(text).unwrap()), Ok(()));
        let left = text.replace("p1 \\/ (p0 \\/ p2)", "(p1 \\/ p0) \\/ p2");
        let e = check_derivation(&parse_script(&left).unwrap()).unwrap_err();
        assert!(matches!(e.kind, CheckError::GoalMismatch(_)));

        let absurd = "system: CL\nmode: consequence\npremise: p0\npremise: ~p0\ngoal: absurdity\n\
                      1. p0 ; prem 1\n2. ~p0 ; prem 2\n3. p1 /\\ ~p1 ; n4 1 2\n";
        assert_eq!(check_derivation(&parse_script(absurd).unwrap()), Ok(()));
        let n4 = absurd.replace("system: CL", "system: N4");
        let e = check_derivation(&parse_script(&n4).unwrap()).unwrap_err();
        assert!(matches!(e.kind, CheckError::ModeViolation(_)));
    }

    #[test]
    fn oracle_depends_on_system() {
        let lem = "system: N4\nmode: theorem\ngoal: p0 \\/ ~p0\n1. p0 \\/ ~p0 ; n4\n";
        let e = check_derivation(&parse_script(lem).unwrap()).unwrap_err();
        assert!(matches!(e.kind, CheckError::N4StepRefuted { .. }));
        let cl = lem.replace("N4", "CL");
        assert_eq!(check_derivation(&parse_script(&cl).unwrap()), Ok(()));
        let il = lem.replace("N4", "IL");
        assert!(check_derivation(&parse_script(&il).unwrap()).is_err());
    }

    #[test]
    fn bad_references_and_mismatches() {
        let base = "system: N4CK\nmode: theorem\ngoal: p2 []-> (p1 -> p1)\n";
        let fwd = format!("{base}1. p2 []-> (p1 -> p1) ; n4 1\n");
        assert!(matches!(check_derivation(&parse_script(&fwd).unwrap()).unwrap_err().kind, CheckError::BadRef(_)));
        let wrong = format!("{base}1. p2 []-> (p1 -> p1) ; ax A4 {{phi := p1}}\n");
        assert!(matches!(check_derivation(&parse_script(&wrong).unwrap()).unwrap_err().kind, CheckError::SchemaMismatch(_)));
        let ok = format!("{base}1. p2 []-> (p1 -> p1) ; ax A4 {{}}\n");
        assert_eq!(check_derivation(&parse_script(&ok).unwrap()), Ok(()));
        let fsk = format!("{base}1. p2 []-> (p1 -> p1) ; ax a2 {{}}\n");
        assert!(check_derivation(&parse_script(&fsk).unwrap()).is_err());
    }

    #[test]
    fn corpus_builds_and_checks() {
        let c = corpus();
        assert!(c.len() >= 17);
        for (id, r) in c.check_all() {
            assert_eq!(r, Ok(()), "{id}");
        }
    }

    #[test]
    fn scripts_round_trip_through_text() {
        for (id, d) in corpus().iter() {
            assert_eq!(&parse_script(&d.to_string()).unwrap(), d, "{id}");
        }
    }

    #[test]
    fn cycles_are_rejected() {
        let a = parse_script("system: N4\nmode: theorem\ngoal: p0 -> p0\n1. p0 -> p0 ; cite b {}\n").unwrap();
        let b = parse_script("system: N4\nmode: theorem\ngoal: p0 -> p0\n1. p0 -> p0 ; cite a {}\n").unwrap();
        let r = Corpus::new(vec![("a".into(), a.clone()), ("b".into(), b)], None);
        assert!(matches!(r, Err(CorpusError::Cycle(_))));
        let r = Corpus::new(vec![("a".into(), a)], None);
        assert!(matches!(r, Err(CorpusError::Unknown(_, _))));
    }

    #[test]
    fn soundness_small_sample() {
        let r = soundness_sample(SystemId::N4CK, &SoundnessConfig::new(20, 20, 3)).unwrap();
        assert!(r.failures.is_empty(), "{:?}", r.failures.first());
        assert!(r.rule_failures.is_empty());
        assert!(soundness_sample(SystemId::CK, &SoundnessConfig::new(1, 1, 0)).is_none());
    }
}
