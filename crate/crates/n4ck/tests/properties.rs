use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use n4ck::decide::{abstract_conditionals, decide_n4};
use n4ck::proofs::{check_in, corpus, parse_script, to_ck, Justification, SystemId};
use n4ck::search::{find_countermodel, random_formula, Logic, SearchBudget, SearchOutcome};
use n4ck::syntax::{p, parse_any, Conn, Formula, Tree};
use n4ck::translate::{apply, Mapping};

const ALL: &[Conn] = &[Conn::Neg, Conn::And, Conn::Or, Conn::Imp, Conn::BoxTo, Conn::DiamTo, Conn::Box, Conn::Diamond];
const PROP: &[Conn] = &[Conn::Neg, Conn::And, Conn::Or, Conn::Imp];
const COND: &[Conn] = &[Conn::Neg, Conn::And, Conn::Or, Conn::Imp, Conn::BoxTo, Conn::DiamTo];
const MODAL: &[Conn] = &[Conn::Neg, Conn::And, Conn::Or, Conn::Imp, Conn::Box, Conn::Diamond];

fn formula(seed: u64, atoms: u32, depth: usize, conns: &[Conn]) -> Formula {
    random_formula(&mut ChaCha8Rng::seed_from_u64(seed), atoms, depth, conns)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn printer_parser_round_trip(seed in any::<u64>(), depth in 0usize..6) {
        let f = formula(seed, 4, depth, ALL);
        prop_assert_eq!(parse_any(&f.to_string()).unwrap(), f.clone());
        let u = f.to_unicode();
        prop_assert!(u == f.to_string() || parse_any(&u).is_err());
    }

    #[test]
    fn deduction_theorem(a in any::<u64>(), b in any::<u64>()) {
        let phi = formula(a, 3, 2, PROP);
        let psi = formula(b, 3, 3, PROP);
        let with_premise = decide_n4(&[phi.clone()], &psi).unwrap().is_valid();
        let as_implication = decide_n4(&[], &Tree::imp(phi, psi)).unwrap().is_valid();
        prop_assert_eq!(with_premise, as_implication);
    }

    #[test]
    fn trbar_inverts_tr(seed in any::<u64>(), anchor_seed in any::<u64>()) {
        let f = formula(seed, 3, 4, MODAL);
        let anchor = formula(anchor_seed, 3, 2, COND);
        let there = apply(&Mapping::Tr(anchor), &f).unwrap();
        prop_assert_eq!(apply(&Mapping::TrBar, &there).unwrap(), f);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// N4 tautologies over conditional subformulas have no small N4CK countermodel.
    #[test]
    fn abstracted_theorems_hold_in_conditional_models(seed in any::<u64>()) {
        let f = formula(seed, 2, 3, COND);
        let (abs, _) = abstract_conditionals(std::slice::from_ref(&f));
        if decide_n4(&[], &abs[0]).unwrap().is_valid() {
            let out = find_countermodel(Logic::N4CK, &[], &[f.clone()], &SearchBudget::random(3, 200, seed)).unwrap();
            prop_assert!(matches!(out, SearchOutcome::Exhausted(_)), "{} refuted", f);
        }
    }
}

#[test]
fn scripts_survive_text_round_trip() {
    for (id, d) in corpus().iter() {
        let again = parse_script(&d.to_string()).unwrap_or_else(|e| panic!("{id}: {e:?}"));
        assert_eq!(&again, d, "{id}");
    }
}

#[test]
fn mutated_scripts_are_rejected() {
    let c = corpus();
    let fresh = p(9);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (id, d) in c.iter() {
        for k in 0..20 {
            let mut m = d.clone();
            let i = rng.gen_range(0..m.steps.len());
            let step = &mut m.steps[i];
            match (&mut step.just, k % 2) {
                (Justification::Rule(_, refs) | Justification::N4Step(refs) | Justification::Cite(_, _, refs), 1)
                    if !refs.is_empty() =>
                {
                    refs[0] = i;
                }
                _ => step.formula = Tree::and(step.formula.clone(), fresh.clone()),
            }
            assert!(check_in(c, &m).is_err(), "{id}: mutation {k} at step {} accepted", i + 1);
        }
    }
}

#[test]
fn ck_versions_share_conclusions() {
    let c = corpus();
    for (id, d) in c.iter().filter(|(_, d)| d.system == SystemId::N4CK) {
        let ck = to_ck(d).unwrap();
        assert_eq!(ck.system, SystemId::CK);
        assert_eq!(ck.conclusion(), d.conclusion(), "{id}");
        check_in(c, &ck).unwrap_or_else(|e| panic!("{id}: {e}"));
    }
}

#[test]
fn ck_proves_classical_reductions() {
    let c = corpus();
    for id in ["ck_A2", "ck_A3", "ck_RCbox2"] {
        let d = c.get(id).unwrap();
        assert_eq!(d.system, SystemId::CK);
        check_in(c, d).unwrap();
    }
    let mut bad = c.get("ck_A2").unwrap().clone();
    bad.system = SystemId::N4CK;
    assert!(check_in(c, &bad).is_err());
}
