//! Command-line front end.
//!
//! Exit codes: 0 for success, valid or checked; 1 for refuted, countermodel
//! found or check failed; 2 for usage and I/O errors.

use std::fs;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use n4ck::decide::{decide_n4, Verdict};
use n4ck::kripke::{
    relabel_modal, to_cond_int, to_cond_nelson_with, AnyModel, CondNelModel, KeyReading, RelabelDirection,
};
use n4ck::proofs::{check_derivation, corpus, parse_script};
use n4ck::search::{find_countermodel, verify_certificate, Logic, SearchBudget, SearchOutcome};
use n4ck::semantics::{eval_modal, eval_n4, eval_n4ck, eval_intck, positive_sets, truth_sets_fskd, truth_sets_n4, truth_sets_n4ck, ModalSign, Sign};
use n4ck::syntax::{language_violation, parse_any, Formula, LanguageId};
use n4ck::translate::{apply, translate_proof, Direction, Mapping};

#[derive(Parser)]
#[command(name = "n4ck", version, about = "Workbench for the Nelsonian conditional logic N4CK")]
struct Cli {
    /// Seed for every sampling step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignArg {
    Plus,
    Minus,
    Int,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReadingArg {
    Composed,
    Plus,
    Minus,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a formula and print it back.
    Parse {
        #[arg(long)]
        formula: String,
        /// Language the formula must belong to.
        #[arg(long)]
        lang: Option<String>,
        #[arg(long)]
        unicode: bool,
    },
    /// Evaluate a formula at one world of a model.
    Eval {
        #[arg(long)]
        model: String,
        #[arg(long)]
        world: usize,
        #[arg(long)]
        formula: String,
        #[arg(long, value_enum, default_value_t = SignArg::Plus)]
        sign: SignArg,
    },
    /// Print the truth set of a formula.
    Truthset {
        #[arg(long)]
        model: String,
        #[arg(long)]
        formula: String,
    },
    /// Validate a model file.
    CheckModel {
        #[arg(long)]
        model: String,
    },
    /// Check a proof script; citations resolve to the bundled corpus.
    CheckProof { file: String },
    /// Decide N4 validity of a conditional-free consequence.
    DecideN4 {
        #[arg(long)]
        formula: String,
        #[arg(long)]
        premise: Vec<String>,
    },
    /// Search for a model separating Γ from Δ.
    Countermodel {
        #[arg(long, default_value = "n4ck")]
        logic: String,
        /// Formulas separated by `;`.
        #[arg(long, default_value = "")]
        gamma: String,
        #[arg(long, default_value = "")]
        delta: String,
        #[arg(long, default_value_t = 3)]
        max_worlds: usize,
        #[arg(long, conflicts_with = "trials")]
        exhaustive: bool,
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Apply a translation to a formula.
    Translate {
        #[arg(long)]
        map: String,
        #[arg(long)]
        formula: String,
    },
    /// Translate a proof script between FSKd and N4CK.
    TranslateProof {
        file: String,
        /// `fskd-to-n4ck:<anchor>` or `n4ck-to-fskd`.
        #[arg(long)]
        direction: String,
    },
    /// Transform a model between the Nelsonian and intuitionistic kinds.
    TransformModel {
        #[arg(long)]
        model: String,
        #[arg(long, conflicts_with = "to_n4")]
        to_int: bool,
        #[arg(long)]
        to_n4: bool,
        #[arg(long, value_enum, default_value_t = ReadingArg::Composed)]
        reading: ReadingArg,
    },
    /// Check every bundled proof script.
    ScriptsRunAll,
}

struct Failure {
    code: u8,
    msg: String,
}

fn usage(msg: impl ToString) -> Failure {
    Failure { code: 2, msg: msg.to_string() }
}

type Outcome = Result<(bool, Value, String), Failure>;

fn formula(text: &str) -> Result<Formula, Failure> {
    parse_any(text).map_err(|e| usage(format!("formula `{text}`: {e}")))
}

fn formula_list(text: &str) -> Result<Vec<Formula>, Failure> {
    text.split(';').map(str::trim).filter(|t| !t.is_empty()).map(formula).collect()
}

fn load_model(path: &str) -> Result<AnyModel, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{path}: {e}")))?;
    AnyModel::from_json(&text).map_err(|e| usage(format!("{path}: {e}")))
}

fn model_value(m: &AnyModel) -> Value {
    serde_json::from_str(&m.to_json()).expect("model files are JSON")
}

fn certificate(m: &AnyModel, world: usize) -> (Value, String) {
    (json!({ "model": model_value(m), "world": world }), format!("world: {world}\n{}", m.to_json()))
}

fn run(cli: &Cli) -> Outcome {
    match &cli.cmd {
        Cmd::Parse { formula: text, lang, unicode } => {
            let f = match parse_any(text) {
                Ok(f) => f,
                Err(e) => return Ok((false, json!({ "error": e.to_string() }), e.to_string())),
            };
            if let Some(l) = lang {
                let l: LanguageId = l.parse().map_err(usage)?;
                if let Some(v) = language_violation(&f, l) {
                    return Ok((false, json!({ "error": v }), v));
                }
            }
            let shown = if *unicode { f.to_unicode() } else { f.to_string() };
            Ok((true, json!({ "formula": shown }), shown))
        }
        Cmd::Eval { model, world, formula: text, sign } => {
            let m = load_model(model)?;
            let f = formula(text)?;
            let r = match (&m, sign) {
                (AnyModel::Nel(m), SignArg::Plus) => eval_n4(m, *world, &f, Sign::Plus),
                (AnyModel::Nel(m), SignArg::Minus) => eval_n4(m, *world, &f, Sign::Minus),
                (AnyModel::CNel(m), SignArg::Plus) => eval_n4ck(m, *world, &f, Sign::Plus),
                (AnyModel::CNel(m), SignArg::Minus) => eval_n4ck(m, *world, &f, Sign::Minus),
                (AnyModel::CInt(m), SignArg::Int) => eval_intck(m, *world, &f),
                (AnyModel::Modal(m), s) => eval_modal(
                    m,
                    *world,
                    &f,
                    match s {
                        SignArg::Plus => ModalSign::Plus,
                        SignArg::Minus => ModalSign::Minus,
                        SignArg::Int => ModalSign::Int,
                    },
                ),
                _ => return Err(usage("sign does not fit the model kind (use plus|minus for Nelsonian, int for intuitionistic)")),
            }
            .map_err(usage)?;
            Ok((true, json!({ "value": r }), r.to_string()))
        }
        Cmd::Truthset { model, formula: text } => {
            let m = load_model(model)?;
            let f = formula(text)?;
            let fs = [f];
            let bi = match &m {
                AnyModel::Nel(x) => Some(truth_sets_n4(x, &fs)),
                AnyModel::CNel(x) => Some(truth_sets_n4ck(x, &fs)),
                AnyModel::Modal(x) if x.is_nelson() => Some(truth_sets_fskd(x, &fs)),
                _ => None,
            };
            match bi {
                Some(r) => {
                    let b = r.map_err(usage)?.remove(0);
                    let (p, n) = (b.plus.to_vec(), b.minus.to_vec());
                    Ok((true, json!({ "plus": p, "minus": n }), format!("plus: {p:?}\nminus: {n:?}")))
                }
                None => {
                    let s = positive_sets(&m, &fs).map_err(usage)?.remove(0).to_vec();
                    Ok((true, json!({ "int": s }), format!("{s:?}")))
                }
            }
        }
        Cmd::CheckModel { model } => {
            let m = load_model(model)?;
            let v: Vec<String> = m.violations().iter().map(|v| v.to_string()).collect();
            let text = if v.is_empty() { "valid".to_string() } else { v.join("\n") };
            Ok((v.is_empty(), json!({ "valid": v.is_empty(), "violations": v }), text))
        }
        Cmd::CheckProof { file } => {
            let text = fs::read_to_string(file).map_err(|e| usage(format!("{file}: {e}")))?;
            let d = match parse_script(&text) {
                Ok(d) => d,
                Err(e) => return Ok((false, json!({ "ok": false, "error": e.to_string() }), e.to_string())),
            };
            match check_derivation(&d) {
                Ok(()) => Ok((true, json!({ "ok": true, "steps": d.steps.len() }), format!("OK ({} steps)", d.steps.len()))),
                Err(e) => Ok((false, json!({ "ok": false, "step": e.step, "error": e.kind.to_string() }), e.to_string())),
            }
        }
        Cmd::DecideN4 { formula: text, premise } => {
            let f = formula(text)?;
            let gamma = premise.iter().map(|p| formula(p)).collect::<Result<Vec<_>, _>>()?;
            match decide_n4(&gamma, &f).map_err(usage)? {
                Verdict::Valid => Ok((true, json!({ "verdict": "valid" }), "valid".into())),
                Verdict::Refuted { model, world } => {
                    let (v, t) = certificate(&AnyModel::Nel(model), world);
                    Ok((false, json!({ "verdict": "refuted", "certificate": v }), format!("refuted\n{t}")))
                }
            }
        }
        Cmd::Countermodel { logic, gamma, delta, max_worlds, exhaustive, trials } => {
            let logic: Logic = logic.parse().map_err(usage)?;
            let (g, d) = (formula_list(gamma)?, formula_list(delta)?);
            let budget = match (trials, exhaustive) {
                (Some(t), false) => SearchBudget::random(*max_worlds, *t, cli.seed),
                _ => SearchBudget::exhaustive(*max_worlds),
            };
            match find_countermodel(logic, &g, &d, &budget).map_err(usage)? {
                SearchOutcome::Found(c) => {
                    let ok = verify_certificate(&c);
                    let (v, t) = certificate(&c.model, c.world);
                    Ok((false, json!({ "found": true, "verified": ok, "certificate": v }), format!("found\n{t}")))
                }
                SearchOutcome::Exhausted(_) => {
                    Ok((true, json!({ "found": false }), format!("exhausted (no model up to {max_worlds} worlds)")))
                }
            }
        }
        Cmd::Translate { map, formula: text } => {
            let m: Mapping = map.parse().map_err(usage)?;
            let out = apply(&m, &formula(text)?).map_err(usage)?;
            Ok((true, json!({ "formula": out.to_string() }), out.to_string()))
        }
        Cmd::TranslateProof { file, direction } => {
            let text = fs::read_to_string(file).map_err(|e| usage(format!("{file}: {e}")))?;
            let d = parse_script(&text).map_err(usage)?;
            let dir: Direction = direction.parse().map_err(usage)?;
            let t = match translate_proof(corpus(), &dir, &d) {
                Ok(t) => t,
                Err(e) => return Ok((false, json!({ "ok": false, "error": e.to_string() }), e.to_string())),
            };
            let checked = t.check(corpus());
            let mut out = String::new();
            for (id, a) in &t.aux {
                out.push_str(&format!("# aux {id}\n{a}\n"));
            }
            out.push_str(&t.main.to_string());
            if let Err(e) = &checked {
                out.push_str(&format!("# translated derivation does not check: {e}\n"));
            }
            let aux: Vec<Value> = t.aux.iter().map(|(id, a)| json!({ "id": id, "script": a.to_string() })).collect();
            let v = json!({ "ok": checked.is_ok(), "script": t.main.to_string(), "aux": aux });
            Ok((checked.is_ok(), v, out.trim_end().to_string()))
        }
        Cmd::TransformModel { model, to_int, to_n4, reading } => {
            let m = load_model(model)?;
            let out = match (&m, to_int, to_n4) {
                (AnyModel::Nel(x), true, _) => to_cond_int(&CondNelModel::from_nel(x.clone())).map(AnyModel::CInt),
                (AnyModel::CNel(x), true, _) => to_cond_int(x).map(AnyModel::CInt),
                (AnyModel::CInt(x), _, true) => {
                    let r = match reading {
                        ReadingArg::Composed => KeyReading::Composed,
                        ReadingArg::Plus => KeyReading::PlusOnly,
                        ReadingArg::Minus => KeyReading::MinusOnly,
                    };
                    to_cond_nelson_with(x, r).map(AnyModel::CNel)
                }
                (AnyModel::Modal(x), true, _) => relabel_modal(x, RelabelDirection::NelsonToInt).map(AnyModel::Modal),
                (AnyModel::Modal(x), _, true) => relabel_modal(x, RelabelDirection::IntToNelson).map(AnyModel::Modal),
                _ => return Err(usage("give --to-int for a Nelsonian model or --to-n4 for an intuitionistic one")),
            };
            match out {
                Ok(o) => Ok((true, model_value(&o), o.to_json())),
                Err(e) => Ok((false, json!({ "error": e.to_string() }), e.to_string())),
            }
        }
        Cmd::ScriptsRunAll => {
            let results = corpus().check_all();
            let ok = results.iter().all(|(_, r)| r.is_ok());
            let lines: Vec<String> = results
                .iter()
                .map(|(id, r)| match r {
                    Ok(()) => format!("ok    {id}"),
                    Err(e) => format!("FAIL  {id}: {e}"),
                })
                .collect();
            let v: Vec<Value> = results
                .iter()
                .map(|(id, r)| json!({ "id": id, "ok": r.is_ok(), "error": r.as_ref().err().map(|e| e.to_string()) }))
                .collect();
            Ok((ok, json!({ "ok": ok, "scripts": v }), lines.join("\n")))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((ok, v, text)) => {
            match cli.format {
                Format::Json => println!("{v}"),
                Format::Text => println!("{text}"),
            }
            ExitCode::from(if ok { 0 } else { 1 })
        }
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
