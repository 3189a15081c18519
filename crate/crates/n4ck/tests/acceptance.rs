//! Acceptance suite: one pass/fail line per criterion, non-zero exit if any
//! criterion fails.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use n4ck::decide::{decide_n4, Verdict};
use n4ck::kripke::{join_with_root, single_world_total, AnyModel, CondNelModel};
use n4ck::par;
use n4ck::proofs::{corpus, soundness_sample, SoundnessConfig, SystemId};
use n4ck::search::{find_countermodel, random_formula, sample_model, verify_certificate, Certificate, Logic, SearchBudget, SearchOutcome};
use n4ck::semantics::{eval_n4, eval_n4ck, truth_sets_n4ck, Sign};
use n4ck::syntax::{parse_any, parse_schema, Atom, Conn, Formula, Tree};
use n4ck::translate::{
    apply, faithfulness_harness, non_faithfulness_witness, translate_proof, Direction, HarnessConfig, Mapping,
};

type Verdict_ = Result<String, String>;

fn pf(s: &str) -> Formula {
    parse_any(s).unwrap()
}

fn atoms3() -> Vec<Atom> {
    (0..3).map(Atom::p).collect()
}

const PROP: &[Conn] = &[Conn::Neg, Conn::And, Conn::Or, Conn::Imp];
const COND: &[Conn] = &[Conn::Neg, Conn::And, Conn::Or, Conn::Imp, Conn::BoxTo, Conn::DiamTo];
const MODAL: &[Conn] = &[Conn::Neg, Conn::And, Conn::Or, Conn::Imp, Conn::Box, Conn::Diamond];

fn cnel(m: AnyModel) -> CondNelModel {
    match m {
        AnyModel::CNel(m) => m,
        other => panic!("expected a conditional Nelsonian model, got {} worlds of another kind", other.len()),
    }
}

fn criterion_1() -> Verdict_ {
    let start = Instant::now();
    let c = corpus();
    let results = c.check_all();
    let elapsed = start.elapsed();
    let failed: Vec<String> = results.iter().filter(|(_, r)| r.is_err()).map(|(id, r)| format!("{id}: {:?}", r)).collect();
    if !failed.is_empty() {
        return Err(failed.join("; "));
    }
    let required = [
        "RCbox", "Nec", "RMbox", "RMnbox", "RMdiam", "T1", "T2", "T3", "T4", "T5", "T6", "ck_A2", "ck_A3", "ck_RCbox2",
        "fsk_rmnbox", "fsk_t2", "fsk_t3",
    ];
    if let Some(missing) = required.iter().find(|id| c.get(id).is_none()) {
        return Err(format!("missing script {missing}"));
    }
    let count = |s: SystemId| c.iter().filter(|(_, d)| d.system == s).count();
    let (n, k, f) = (count(SystemId::N4CK), count(SystemId::CK), count(SystemId::FSKd));
    if n < 11 || k < 3 || f < 3 {
        return Err(format!("corpus too small: {n} N4CK, {k} CK, {f} FSKd"));
    }
    if elapsed > Duration::from_secs(5) {
        return Err(format!("corpus check took {elapsed:?}"));
    }
    Ok(format!("{} scripts ({n} N4CK, {k} CK, {f} FSKd) in {elapsed:.2?}", results.len()))
}

fn criterion_2() -> Verdict_ {
    let cfg = SoundnessConfig::new(500, 200, 2024);
    let mut lines = Vec::new();
    for sys in [SystemId::N4CK, SystemId::FSKd] {
        let r = soundness_sample(sys, &cfg).ok_or("no semantics")?;
        if let Some(f) = r.failures.first().or(r.rule_failures.first()) {
            return Err(format!("{sys}: {} fails: {} at world {}", f.schema, f.instance, f.world));
        }
        lines.push(format!("{sys}: {} instances x {} models, {} rule checks", r.instances, r.models, r.rule_checks));
    }
    let fake = SoundnessConfig {
        extra: vec![("fake".into(), parse_schema("(p -> q) -> (~q -> ~p)").unwrap())],
        include_system: false,
        ..SoundnessConfig::new(50, 200, 2024)
    };
    let r = soundness_sample(SystemId::N4CK, &fake).unwrap();
    match r.failures.first() {
        Some(f) if f.trial < 50 => lines.push(format!("fake axiom refuted at sample {}", f.trial + 1)),
        _ => return Err("fake axiom survived 50 samples".into()),
    }
    Ok(lines.join("; "))
}

fn criterion_3() -> Verdict_ {
    let trials = 10_000;
    let bad = par::map_range(trials, |i| {
        let m = cnel(sample_model(Logic::N4CK, &atoms3(), 4, 30_000 + i as u64));
        let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
        let f = random_formula(&mut rng, 3, 4, COND);
        let b = truth_sets_n4ck(&m, std::slice::from_ref(&f)).unwrap().remove(0);
        let leq = &m.base.leq;
        (!leq.is_up_set(&b.plus) || !leq.is_up_set(&b.minus)).then(|| f.to_string())
    });
    match bad.into_iter().flatten().next() {
        Some(f) => Err(format!("truth set of {f} not upward closed")),
        None => Ok(format!("{trials} (model, formula) trials, both signs")),
    }
}

fn criterion_4() -> Verdict_ {
    let n = 10_000;
    let outcomes = par::map_range(n, |i| -> Result<bool, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(40_000 + i as u64);
        let f = random_formula(&mut rng, 3, 4, PROP);
        let verdict = decide_n4(&[], &f).map_err(|e| e.to_string())?;
        let brute = find_countermodel(Logic::N4, &[], &[f.clone()], &SearchBudget::exhaustive(3)).map_err(|e| e.to_string())?;
        match (verdict, brute) {
            (Verdict::Valid, SearchOutcome::Exhausted(_)) => Ok(true),
            (Verdict::Valid, SearchOutcome::Found(_)) => Err(format!("{f}: decided valid, brute force refutes")),
            (Verdict::Refuted { model, world }, b) => {
                if eval_n4(&model, world, &f, Sign::Plus).unwrap_or(true) || !model.violations().is_empty() {
                    return Err(format!("{f}: certificate does not verify"));
                }
                if let SearchOutcome::Found(c) = b {
                    if !verify_certificate(&c) {
                        return Err(format!("{f}: search certificate does not verify"));
                    }
                }
                Ok(false)
            }
        }
    });
    let mut valid = 0;
    for o in outcomes {
        valid += o? as usize;
    }
    Ok(format!("{n} formulas, {valid} valid, {} refuted with verified certificates", n - valid))
}

fn expect_countermodel(logic: Logic, gamma: &[&str], delta: &[&str], max: usize, limit: Duration) -> Result<Certificate, String> {
    let g: Vec<Formula> = gamma.iter().map(|s| pf(s)).collect();
    let d: Vec<Formula> = delta.iter().map(|s| pf(s)).collect();
    let start = Instant::now();
    let out = find_countermodel(logic, &g, &d, &SearchBudget::exhaustive(max)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    match out {
        SearchOutcome::Found(c) if verify_certificate(&c) && c.model.len() <= max && elapsed <= limit => Ok(c),
        SearchOutcome::Found(_) => Err(format!("{gamma:?} / {delta:?}: certificate rejected or too slow ({elapsed:?})")),
        SearchOutcome::Exhausted(_) => Err(format!("{gamma:?} / {delta:?}: no countermodel up to {max} worlds")),
    }
}

fn criterion_5() -> Verdict_ {
    let limit = Duration::from_secs(60);
    let mut sizes = Vec::new();
    let cases: [(Logic, &[&str], &[&str], usize); 5] = [
        (Logic::N4, &[], &["(p0 -> p1) -> (~p1 -> ~p0)"], 1),
        (Logic::N4, &[], &["~~(p0 -> p1) <-> ~(p0 /\\ ~p1)"], 2),
        (Logic::N4, &[], &["p0 \\/ ~p0"], 1),
        (Logic::N4CK, &["(p1 /\\ ~p2) []-> p3"], &["~(p1 -> p2) []-> p3"], 3),
        (Logic::N4CK, &["~(p1 /\\ ~p2) []-> p3"], &["(p1 -> p2) []-> p3"], 3),
    ];
    for (logic, g, d, max) in cases {
        sizes.push(expect_countermodel(logic, g, d, max, limit)?.model.len());
    }
    Ok(format!("5 countermodels verified, sizes {sizes:?}"))
}

fn criterion_6() -> Verdict_ {
    let cfg = HarnessConfig::new(300, 6060);
    let mut parts = Vec::new();
    for m in [Mapping::E, Mapping::Epm, Mapping::Emp, Mapping::Em, Mapping::Eplus, Mapping::Eminus] {
        let r = faithfulness_harness(&m, &cfg).map_err(|e| e.to_string())?;
        if let Some(v) = r.violations.first() {
            return Err(format!("{m}: {} violated by {} at world {}", v.claim, v.formula, v.world));
        }
        if r.triples < 1000 {
            return Err(format!("{m}: only {} triples", r.triples));
        }
        parts.push(format!("{m} {}", r.triples));
    }
    for m in [Mapping::Eplus, Mapping::Eminus] {
        let w = non_faithfulness_witness(&m, 3).ok_or(format!("{m}: no non-faithfulness witness"))?;
        parts.push(format!("{m} witness {} worlds", w.certificate.model.len()));
    }
    Ok(parts.join(", "))
}

/// Every modal formula over `p0` of depth at most `d`.
fn all_modal(d: usize) -> Vec<Formula> {
    let mut levels: Vec<Vec<Formula>> = vec![vec![Tree::Leaf(Atom::p(0))]];
    for k in 1..=d {
        let below: Vec<Formula> = levels.iter().flatten().cloned().collect();
        let top = &levels[k - 1];
        let mut new = Vec::new();
        for a in top {
            new.push(Tree::neg(a.clone()));
            new.push(Tree::boxed(a.clone()));
            new.push(Tree::diamond(a.clone()));
        }
        for a in &below {
            for b in &below {
                if top.contains(a) || top.contains(b) {
                    new.push(Tree::and(a.clone(), b.clone()));
                    new.push(Tree::or(a.clone(), b.clone()));
                    new.push(Tree::imp(a.clone(), b.clone()));
                }
            }
        }
        levels.push(new);
    }
    levels.into_iter().flatten().collect()
}

/// Modal formulas over `p0`, `p1` of depth at most `d` whose binary nodes
/// have a leaf child.
fn linear_modal(d: usize) -> Vec<Formula> {
    let leaves = [Tree::Leaf(Atom::p(0)), Tree::Leaf(Atom::p(1))];
    let mut level: Vec<Formula> = leaves.to_vec();
    let mut all = level.clone();
    for _ in 0..d {
        let mut next = Vec::new();
        for a in &level {
            next.push(Tree::neg(a.clone()));
            next.push(Tree::boxed(a.clone()));
            next.push(Tree::diamond(a.clone()));
            for l in &leaves {
                next.push(Tree::and(a.clone(), l.clone()));
                next.push(Tree::or(l.clone(), a.clone()));
                next.push(Tree::imp(a.clone(), l.clone()));
                next.push(Tree::imp(l.clone(), a.clone()));
            }
        }
        all.extend(next.iter().cloned());
        level = next;
    }
    all
}

fn criterion_7() -> Verdict_ {
    let mut pool = all_modal(2);
    pool.extend(linear_modal(5));
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    pool.extend((0..2000).map(|_| random_formula(&mut rng, 3, 5, MODAL)));
    for anchor in ["p1", "p0 []-> p1"] {
        let tr = Mapping::Tr(pf(anchor));
        for f in &pool {
            let back = apply(&Mapping::TrBar, &apply(&tr, f).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            if &back != f {
                return Err(format!("TrBar(Tr_{anchor}({f})) = {back}"));
            }
        }
    }
    let box_p1 = pf("[]p1");
    let tr = apply(&Mapping::Tr(pf("p1")), &box_p1).unwrap();
    let checks = [
        (apply(&Mapping::Epm, &tr).unwrap(), "p1 []-> q1 []-> p1"),
        (apply(&Mapping::Emp, &tr).unwrap(), "q1 []-> p1 []-> p1"),
        (apply(&Mapping::TrI(pf("p1")), &apply(&Mapping::Em, &box_p1).unwrap()).unwrap(), "p1 []-> p1"),
    ];
    for (got, want) in &checks {
        if got != &pf(want) {
            return Err(format!("diagram value {got}, expected {want}"));
        }
    }
    if checks[0].0 == checks[2].0 || checks[1].0 == checks[2].0 {
        return Err("diagram commutes".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let anchor = pf("p1");
    for _ in 0..1000 {
        let f = random_formula(&mut rng, 3, 4, MODAL);
        let lhs = apply(&Mapping::Eplus, &apply(&Mapping::Tr(anchor.clone()), &f).unwrap()).unwrap();
        let rhs = apply(&Mapping::TrI(anchor.clone()), &apply(&Mapping::Em, &f).unwrap()).unwrap();
        if lhs != rhs {
            return Err(format!("Eplus/Tr identity fails on {f}: {lhs} vs {rhs}"));
        }
        let lhs = apply(&Mapping::Eminus, &apply(&Mapping::Tr(anchor.clone()), &f).unwrap()).unwrap();
        let neg_anchor = apply(&Mapping::E, &Tree::neg(anchor.clone())).unwrap();
        let rhs = apply(&Mapping::TrI(neg_anchor), &apply(&Mapping::Em, &f).unwrap()).unwrap();
        if lhs != rhs {
            return Err(format!("Eminus/Tr identity fails on {f}: {lhs} vs {rhs}"));
        }
    }
    Ok(format!("TrBar.Tr = id on {} formulas x 2 anchors; diagram values; 1000 Eplus/Eminus identities", pool.len()))
}

fn criterion_8() -> Verdict_ {
    let c = corpus();
    let fwd = Direction::FskdToN4ck(pf("p0"));
    let (mut f, mut b) = (0, 0);
    for (id, d) in c.iter() {
        let dir = match d.system {
            SystemId::FSKd => {
                f += 1;
                &fwd
            }
            SystemId::N4CK => {
                b += 1;
                &Direction::N4ckToFskd
            }
            _ => continue,
        };
        let t = translate_proof(c, dir, d).map_err(|e| format!("{id}: {e}"))?;
        t.check(c).map_err(|e| format!("{id} translated: {e}"))?;
    }
    Ok(format!("{f} FSKd scripts to N4CK, {b} N4CK scripts to FSKd"))
}

fn criterion_9() -> Verdict_ {
    let m = single_world_total(&atoms3());
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..1000 {
        let f = random_formula(&mut rng, 3, 5, COND);
        if !eval_n4ck(&m, 0, &f, Sign::Plus).map_err(|e| e.to_string())? {
            return Err(format!("{f} fails in the one-world total model"));
        }
    }
    Ok("1000 formulas verified".into())
}

fn criterion_10() -> Verdict_ {
    let bad = par::map_range(100, |i| -> Option<String> {
        let m1 = cnel(sample_model(Logic::N4CK, &atoms3(), 3, 100_000 + 2 * i as u64));
        let m2 = cnel(sample_model(Logic::N4CK, &atoms3(), 3, 100_001 + 2 * i as u64));
        let (j, root) = join_with_root(&m1, &m2);
        if j.validate().is_err() || root != m1.len() + m2.len() {
            return Some(format!("pair {i}: joined model invalid"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
        let fs: Vec<Formula> = (0..20).map(|_| random_formula(&mut rng, 3, 4, COND)).collect();
        let tj = truth_sets_n4ck(&j, &fs).unwrap();
        for (m, off) in [(&m1, 0), (&m2, m1.len())] {
            let tm = truth_sets_n4ck(m, &fs).unwrap();
            for (k, f) in fs.iter().enumerate() {
                for w in 0..m.len() {
                    if tm[k].plus.contains(w) != tj[k].plus.contains(w + off)
                        || tm[k].minus.contains(w) != tj[k].minus.contains(w + off)
                    {
                        return Some(format!("pair {i}: {f} differs at world {w}"));
                    }
                }
            }
        }
        None
    });
    match bad.into_iter().flatten().next() {
        Some(e) => Err(e),
        None => Ok("100 joins, 20 formulas each".into()),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Verdict_); 10] = [
        ("proof corpus", criterion_1),
        ("soundness sampling", criterion_2),
        ("hereditariness", criterion_3),
        ("decision vs brute force", criterion_4),
        ("non-theorems", criterion_5),
        ("embedding equivalences", criterion_6),
        ("translation identities", criterion_7),
        ("proof translation", criterion_8),
        ("trivial-model totality", criterion_9),
        ("join construction", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let r = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let t = start.elapsed();
        match r {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg} [{t:.1?}]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg} [{t:.1?}]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
