//! Formulas, schemas, parsing and printing.
//!
//! Grammar (loosest first):
//!
//! ```text
//! iff   := imp [ ("<->" | "<=>") imp ]
//! imp   := or  [ ("->" | "=>" | "[]->" | "<>->") imp ]
//! or    := and { "\/" and }
//! and   := pre { "/\" pre }
//! pre   := ("~" | "[]" | "<>") pre | atom | "(" iff ")"
//! ```
//!
//! `<->`, `=>` and `<=>` are sugar and are expanded while parsing. `<>->` and
//! `<>` are kept as constructors; [`expand_abbrev`] rewrites them into the
//! `~`-based forms when a language treats them as abbreviations.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomKind {
    Plain,
    Primed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub kind: AtomKind,
    pub index: u32,
}

impl Atom {
    pub fn p(index: u32) -> Self {
        Atom { kind: AtomKind::Plain, index }
    }

    pub fn q(index: u32) -> Self {
        Atom { kind: AtomKind::Primed, index }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            AtomKind::Plain => write!(f, "p{}", self.index),
            AtomKind::Primed => write!(f, "q{}", self.index),
        }
    }
}

/// Generic syntax tree. `Formula` has atoms at the leaves, `Schema` may also
/// carry metavariables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tree<L> {
    Leaf(L),
    Neg(Box<Tree<L>>),
    And(Box<Tree<L>>, Box<Tree<L>>),
    Or(Box<Tree<L>>, Box<Tree<L>>),
    Imp(Box<Tree<L>>, Box<Tree<L>>),
    BoxTo(Box<Tree<L>>, Box<Tree<L>>),
    DiamTo(Box<Tree<L>>, Box<Tree<L>>),
    Box(Box<Tree<L>>),
    Diamond(Box<Tree<L>>),
}

pub type Formula = Tree<Atom>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemaLeaf {
    Atom(Atom),
    Meta(String),
}

pub type Schema = Tree<SchemaLeaf>;

pub type Substitution = BTreeMap<String, Formula>;

/// Connective tags, used for language checks and printing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Conn {
    Neg,
    And,
    Or,
    Imp,
    BoxTo,
    DiamTo,
    Box,
    Diamond,
}

impl Conn {
    fn ascii(self) -> &'static str {
        match self {
            Conn::Neg => "~",
            Conn::And => "/\\",
            Conn::Or => "\\/",
            Conn::Imp => "->",
            Conn::BoxTo => "[]->",
            Conn::DiamTo => "<>->",
            Conn::Box => "[]",
            Conn::Diamond => "<>",
        }
    }

    fn unicode(self) -> &'static str {
        match self {
            Conn::Neg => "∼",
            Conn::And => "∧",
            Conn::Or => "∨",
            Conn::Imp => "→",
            Conn::BoxTo => "⊡",
            Conn::DiamTo => "◇→",
            Conn::Box => "□",
            Conn::Diamond => "◇",
        }
    }

    fn level(self) -> u8 {
        match self {
            Conn::Imp | Conn::BoxTo | Conn::DiamTo => 1,
            Conn::Or => 2,
            Conn::And => 3,
            Conn::Neg | Conn::Box | Conn::Diamond => 4,
        }
    }
}

impl<L> Tree<L> {
    pub fn neg(a: Self) -> Self {
        Tree::Neg(Box::new(a))
    }
    pub fn and(a: Self, b: Self) -> Self {
        Tree::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Self, b: Self) -> Self {
        Tree::Or(Box::new(a), Box::new(b))
    }
    pub fn imp(a: Self, b: Self) -> Self {
        Tree::Imp(Box::new(a), Box::new(b))
    }
    pub fn boxto(a: Self, b: Self) -> Self {
        Tree::BoxTo(Box::new(a), Box::new(b))
    }
    pub fn diamto(a: Self, b: Self) -> Self {
        Tree::DiamTo(Box::new(a), Box::new(b))
    }
    pub fn boxed(a: Self) -> Self {
        Tree::Box(Box::new(a))
    }
    pub fn diamond(a: Self) -> Self {
        Tree::Diamond(Box::new(a))
    }

    pub fn conn(&self) -> Option<Conn> {
        Some(match self {
            Tree::Leaf(_) => return None,
            Tree::Neg(_) => Conn::Neg,
            Tree::And(..) => Conn::And,
            Tree::Or(..) => Conn::Or,
            Tree::Imp(..) => Conn::Imp,
            Tree::BoxTo(..) => Conn::BoxTo,
            Tree::DiamTo(..) => Conn::DiamTo,
            Tree::Box(_) => Conn::Box,
            Tree::Diamond(_) => Conn::Diamond,
        })
    }

    pub fn children(&self) -> Vec<&Tree<L>> {
        match self {
            Tree::Leaf(_) => vec![],
            Tree::Neg(a) | Tree::Box(a) | Tree::Diamond(a) => vec![a],
            Tree::And(a, b)
            | Tree::Or(a, b)
            | Tree::Imp(a, b)
            | Tree::BoxTo(a, b)
            | Tree::DiamTo(a, b) => vec![a, b],
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Rebuilds the node with the given connective and children.
    pub fn rebuild(conn: Conn, mut kids: Vec<Tree<L>>) -> Self {
        let b = kids.pop();
        match conn {
            Conn::Neg => Tree::neg(b.unwrap()),
            Conn::Box => Tree::boxed(b.unwrap()),
            Conn::Diamond => Tree::diamond(b.unwrap()),
            _ => {
                let a = kids.pop().unwrap();
                let b = b.unwrap();
                match conn {
                    Conn::And => Tree::and(a, b),
                    Conn::Or => Tree::or(a, b),
                    Conn::Imp => Tree::imp(a, b),
                    Conn::BoxTo => Tree::boxto(a, b),
                    Conn::DiamTo => Tree::diamto(a, b),
                    _ => unreachable!(),
                }
            }
        }
    }

    /// Replaces leaves through `f`, keeping the shape.
    pub fn map_leaves<M>(&self, f: &mut impl FnMut(&L) -> Tree<M>) -> Tree<M> {
        match self {
            Tree::Leaf(l) => f(l),
            _ => {
                let kids = self.children().into_iter().map(|c| c.map_leaves(f)).collect();
                Tree::rebuild(self.conn().unwrap(), kids)
            }
        }
    }
}

pub fn atom(a: Atom) -> Formula {
    Tree::Leaf(a)
}

pub fn p(i: u32) -> Formula {
    Tree::Leaf(Atom::p(i))
}

pub fn q(i: u32) -> Formula {
    Tree::Leaf(Atom::q(i))
}

pub fn meta(name: &str) -> Schema {
    Tree::Leaf(SchemaLeaf::Meta(name.to_string()))
}

pub fn iff<L: Clone>(a: Tree<L>, b: Tree<L>) -> Tree<L> {
    Tree::and(Tree::imp(a.clone(), b.clone()), Tree::imp(b, a))
}

pub fn strong_imp<L: Clone>(a: Tree<L>, b: Tree<L>) -> Tree<L> {
    Tree::and(
        Tree::imp(a.clone(), b.clone()),
        Tree::imp(Tree::neg(b), Tree::neg(a)),
    )
}

pub fn strong_iff<L: Clone>(a: Tree<L>, b: Tree<L>) -> Tree<L> {
    Tree::and(strong_imp(a.clone(), b.clone()), strong_imp(b, a))
}

/// Abbreviations accepted by [`sugar`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sugar {
    Iff,
    StrongImp,
    StrongIff,
    DiamTo,
    Diamond,
}

/// Unfolds one abbreviation. `DiamTo` and `Diamond` give the `~`-based forms.
pub fn sugar(name: Sugar, args: &[Formula]) -> Formula {
    match (name, args) {
        (Sugar::Iff, [a, b]) => iff(a.clone(), b.clone()),
        (Sugar::StrongImp, [a, b]) => strong_imp(a.clone(), b.clone()),
        (Sugar::StrongIff, [a, b]) => strong_iff(a.clone(), b.clone()),
        (Sugar::DiamTo, [a, b]) => Tree::neg(Tree::boxto(a.clone(), Tree::neg(b.clone()))),
        (Sugar::Diamond, [a]) => Tree::neg(Tree::boxed(Tree::neg(a.clone()))),
        _ => panic!("sugar {name:?}: wrong number of arguments ({})", args.len()),
    }
}

/// Rewrites every `<>->` and `<>` into `~(a []-> ~b)` and `~[]~a`.
pub fn expand_abbrev<L: Clone>(f: &Tree<L>) -> Tree<L> {
    match f {
        Tree::Leaf(_) => f.clone(),
        Tree::DiamTo(a, b) => Tree::neg(Tree::boxto(expand_abbrev(a), Tree::neg(expand_abbrev(b)))),
        Tree::Diamond(a) => Tree::neg(Tree::boxed(Tree::neg(expand_abbrev(a)))),
        _ => {
            let kids = f.children().into_iter().map(expand_abbrev).collect();
            Tree::rebuild(f.conn().unwrap(), kids)
        }
    }
}

impl Formula {
    pub fn atoms(&self) -> Vec<Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_atoms(&self, out: &mut Vec<Atom>) {
        match self {
            Tree::Leaf(a) => out.push(*a),
            _ => self.children().into_iter().for_each(|c| c.collect_atoms(out)),
        }
    }

    pub fn is_conditional_root(&self) -> bool {
        matches!(
            self,
            Tree::BoxTo(..) | Tree::DiamTo(..) | Tree::Box(_) | Tree::Diamond(_)
        )
    }

    /// Every subformula, children before parents, duplicates kept.
    pub fn subformulas(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        fn go<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
            for c in f.children() {
                go(c, out);
            }
            out.push(f);
        }
        go(self, &mut out);
        out
    }

    /// Uniform substitution of formulas for atoms.
    pub fn subst_atoms(&self, map: &HashMap<Atom, Formula>) -> Formula {
        self.map_leaves(&mut |a| map.get(a).cloned().unwrap_or(Tree::Leaf(*a)))
    }

    pub fn to_unicode(&self) -> String {
        let mut s = String::new();
        render(self, &mut s, true);
        s
    }

    pub fn to_schema(&self) -> Schema {
        self.map_leaves(&mut |a| Tree::Leaf(SchemaLeaf::Atom(*a)))
    }
}

/// Distinct antecedents of `[]->` and `<>->`, by increasing size. Ties go to
/// the antecedent whose hosting conditional comes first in post-order, so
/// nested conditionals list their inner antecedent first.
pub fn antecedents(f: &Formula) -> Vec<Formula> {
    let mut found: Vec<(usize, usize, Formula)> = Vec::new();
    fn go(f: &Formula, pos: &mut usize, found: &mut Vec<(usize, usize, Formula)>) {
        for c in f.children() {
            go(c, pos, found);
        }
        if let Tree::BoxTo(a, _) | Tree::DiamTo(a, _) = f {
            if !found.iter().any(|(_, _, g)| g == &**a) {
                found.push((a.size(), *pos, (**a).clone()));
            }
        }
        *pos += 1;
    }
    go(f, &mut 0, &mut found);
    found.sort_by_key(|e| (e.0, e.1));
    found.into_iter().map(|e| e.2).collect()
}

/// Antecedents of a list of formulas, merged with the same ordering.
pub fn antecedents_all(fs: &[Formula]) -> Vec<Formula> {
    let mut all: Vec<Formula> = Vec::new();
    for f in fs {
        for a in antecedents(f) {
            if !all.contains(&a) {
                all.push(a);
            }
        }
    }
    all.sort_by_key(|a| a.size());
    all
}

// ---------------------------------------------------------------- languages

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LanguageId {
    L,
    LBoxto,
    /// Conditional language with `<>->` primitive and `~` kept.
    LBoxtoDiamto,
    LeBoxtoDiamto,
    LBox,
    LBoxDiamond,
    LeBoxDiamond,
    LePlus,
}

impl LanguageId {
    pub fn allows_primed(self) -> bool {
        matches!(
            self,
            LanguageId::LeBoxtoDiamto | LanguageId::LeBoxDiamond | LanguageId::LePlus
        )
    }

    pub fn allows(self, c: Conn) -> bool {
        use LanguageId::*;
        match c {
            Conn::Neg => !self.allows_primed(),
            Conn::And | Conn::Or | Conn::Imp => true,
            Conn::BoxTo | Conn::DiamTo => matches!(self, LBoxto | LBoxtoDiamto | LeBoxtoDiamto),
            Conn::Box | Conn::Diamond => matches!(self, LBox | LBoxDiamond | LeBoxDiamond),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LanguageId::L => "L",
            LanguageId::LBoxto => "L[]->",
            LanguageId::LBoxtoDiamto => "L([]->,<>->)",
            LanguageId::LeBoxtoDiamto => "Le+([]->,<>->)",
            LanguageId::LBox => "L[]",
            LanguageId::LBoxDiamond => "L([],<>)",
            LanguageId::LeBoxDiamond => "Le+([],<>)",
            LanguageId::LePlus => "Le+",
        }
    }
}

impl std::str::FromStr for LanguageId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "l" => LanguageId::L,
            "lboxto" => LanguageId::LBoxto,
            "lboxtodiamto" => LanguageId::LBoxtoDiamto,
            "leboxtodiamto" => LanguageId::LeBoxtoDiamto,
            "lbox" => LanguageId::LBox,
            "lboxdiamond" => LanguageId::LBoxDiamond,
            "leboxdiamond" => LanguageId::LeBoxDiamond,
            "leplus" => LanguageId::LePlus,
            _ => return Err(format!("unknown language `{s}`")),
        })
    }
}

/// First offending atom or connective, if any.
pub fn language_violation<L>(f: &Tree<L>, lang: LanguageId) -> Option<String>
where
    L: LeafInfo,
{
    match f {
        Tree::Leaf(l) => {
            if l.primed() && !lang.allows_primed() {
                Some(format!("atom {} not in {}", l.describe(), lang.name()))
            } else {
                None
            }
        }
        _ => {
            let c = f.conn().unwrap();
            if !lang.allows(c) {
                return Some(format!("connective {} not in {}", c.ascii(), lang.name()));
            }
            f.children().into_iter().find_map(|k| language_violation(k, lang))
        }
    }
}

pub fn well_formed_in<L: LeafInfo>(f: &Tree<L>, lang: LanguageId) -> bool {
    language_violation(f, lang).is_none()
}

pub trait LeafInfo {
    fn primed(&self) -> bool;
    fn describe(&self) -> String;
}

impl LeafInfo for Atom {
    fn primed(&self) -> bool {
        self.kind == AtomKind::Primed
    }
    fn describe(&self) -> String {
        self.to_string()
    }
}

impl LeafInfo for SchemaLeaf {
    fn primed(&self) -> bool {
        matches!(self, SchemaLeaf::Atom(a) if a.kind == AtomKind::Primed)
    }
    fn describe(&self) -> String {
        match self {
            SchemaLeaf::Atom(a) => a.to_string(),
            SchemaLeaf::Meta(m) => m.clone(),
        }
    }
}

// ---------------------------------------------------------------- printing

trait LeafRender {
    fn render(&self, out: &mut String, unicode: bool);
}

impl LeafRender for Atom {
    fn render(&self, out: &mut String, _unicode: bool) {
        out.push_str(&self.to_string());
    }
}

impl LeafRender for SchemaLeaf {
    fn render(&self, out: &mut String, unicode: bool) {
        match self {
            SchemaLeaf::Atom(a) => a.render(out, unicode),
            SchemaLeaf::Meta(m) => {
                if unicode {
                    out.push_str(match m.as_str() {
                        "phi" => "φ",
                        "psi" => "ψ",
                        "chi" => "χ",
                        "theta" => "θ",
                        other => other,
                    })
                } else {
                    out.push_str(m)
                }
            }
        }
    }
}

/// A binary child is bracketed unless it continues a chain of the same
/// connective on the associative side.
fn render<L: LeafRender>(f: &Tree<L>, out: &mut String, unicode: bool) {
    let sym = |c: Conn| if unicode { c.unicode() } else { c.ascii() };
    match f {
        Tree::Leaf(l) => l.render(out, unicode),
        Tree::Neg(a) | Tree::Box(a) | Tree::Diamond(a) => {
            out.push_str(sym(f.conn().unwrap()));
            render_child(a, out, unicode, a.conn().is_some_and(|c| c.level() < 4));
        }
        _ => {
            let c = f.conn().unwrap();
            let kids = f.children();
            let (a, b) = (kids[0], kids[1]);
            let left_assoc = matches!(c, Conn::And | Conn::Or);
            let bracket = |k: &Tree<L>, assoc_side: bool| match k.conn() {
                None => false,
                Some(kc) if kc.level() == 4 => false,
                Some(kc) => !(kc == c && assoc_side),
            };
            render_child(a, out, unicode, bracket(a, left_assoc));
            out.push(' ');
            out.push_str(sym(c));
            out.push(' ');
            render_child(b, out, unicode, bracket(b, !left_assoc));
        }
    }
}

fn render_child<L: LeafRender>(f: &Tree<L>, out: &mut String, unicode: bool, paren: bool) {
    if paren {
        out.push('(');
    }
    render(f, out, unicode);
    if paren {
        out.push(')');
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        render(self, &mut s, false);
        f.write_str(&s)
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        render(self, &mut s, false);
        f.write_str(&s)
    }
}

pub fn print(f: &Formula) -> String {
    f.to_string()
}

pub fn schema_unicode(s: &Schema) -> String {
    let mut out = String::new();
    render(s, &mut out, true);
    out
}

// ---------------------------------------------------------------- parsing

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("language error: {0}")]
    Language(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Atom(Atom),
    Meta(String),
    Neg,
    BoxOp,
    DiamOp,
    And,
    Or,
    Imp,
    StrongImp,
    BoxTo,
    DiamTo,
    Iff,
    StrongIff,
    LParen,
    RParen,
}

fn lex(text: &str, allow_meta: bool) -> Result<Vec<(usize, Tok)>, ParseError> {
    const OPS: [(&str, Tok); 13] = [
        ("[]->", Tok::BoxTo),
        ("<>->", Tok::DiamTo),
        ("<->", Tok::Iff),
        ("<=>", Tok::StrongIff),
        ("/\\", Tok::And),
        ("\\/", Tok::Or),
        ("->", Tok::Imp),
        ("=>", Tok::StrongImp),
        ("[]", Tok::BoxOp),
        ("<>", Tok::DiamOp),
        ("~", Tok::Neg),
        ("(", Tok::LParen),
        (")", Tok::RParen),
    ];
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    'outer: while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        for (s, t) in OPS.iter() {
            if text[i..].starts_with(s) {
                out.push((i, t.clone()));
                i += s.len();
                continue 'outer;
            }
        }
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &text[start..i];
            let (head, digits) = word.split_at(1);
            if (head == "p" || head == "q")
                && !digits.is_empty()
                && digits.bytes().all(|b| b.is_ascii_digit())
            {
                let index: u32 = digits.parse().map_err(|_| ParseError::Syntax {
                    pos: start,
                    msg: "atom index too large".into(),
                })?;
                let a = if head == "p" { Atom::p(index) } else { Atom::q(index) };
                out.push((start, Tok::Atom(a)));
            } else if allow_meta {
                out.push((start, Tok::Meta(word.to_string())));
            } else {
                return Err(ParseError::Syntax {
                    pos: start,
                    msg: format!("unexpected identifier `{word}`"),
                });
            }
            continue;
        }
        return Err(ParseError::Syntax {
            pos: i,
            msg: format!("unexpected character `{}`", text[i..].chars().next().unwrap()),
        });
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.1)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|t| t.0).unwrap_or(self.end)
    }

    fn err<T>(&self, msg: &str) -> Result<T, ParseError> {
        Err(ParseError::Syntax { pos: self.pos(), msg: msg.to_string() })
    }

    fn iff(&mut self) -> Result<Schema, ParseError> {
        let a = self.imp()?;
        match self.peek() {
            Some(Tok::Iff) => {
                self.at += 1;
                let b = self.imp()?;
                self.no_chain()?;
                Ok(iff(a, b))
            }
            Some(Tok::StrongIff) => {
                self.at += 1;
                let b = self.imp()?;
                self.no_chain()?;
                Ok(strong_iff(a, b))
            }
            _ => Ok(a),
        }
    }

    fn no_chain(&self) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Iff) | Some(Tok::StrongIff) => {
                self.err("`<->`/`<=>` are non-associative; add parentheses")
            }
            _ => Ok(()),
        }
    }

    fn imp(&mut self) -> Result<Schema, ParseError> {
        let a = self.or()?;
        let op = match self.peek() {
            Some(t @ (Tok::Imp | Tok::StrongImp | Tok::BoxTo | Tok::DiamTo)) => t.clone(),
            _ => return Ok(a),
        };
        self.at += 1;
        let b = self.imp()?;
        Ok(match op {
            Tok::Imp => Tree::imp(a, b),
            Tok::StrongImp => strong_imp(a, b),
            Tok::BoxTo => Tree::boxto(a, b),
            Tok::DiamTo => Tree::diamto(a, b),
            _ => unreachable!(),
        })
    }

    fn or(&mut self) -> Result<Schema, ParseError> {
        let mut a = self.and()?;
        while self.peek() == Some(&Tok::Or) {
            self.at += 1;
            let b = self.and()?;
            a = Tree::or(a, b);
        }
        Ok(a)
    }

    fn and(&mut self) -> Result<Schema, ParseError> {
        let mut a = self.prefix()?;
        while self.peek() == Some(&Tok::And) {
            self.at += 1;
            let b = self.prefix()?;
            a = Tree::and(a, b);
        }
        Ok(a)
    }

    fn prefix(&mut self) -> Result<Schema, ParseError> {
        let t = match self.peek() {
            Some(t) => t.clone(),
            None => return self.err("unexpected end of input"),
        };
        self.at += 1;
        match t {
            Tok::Neg => Ok(Tree::neg(self.prefix()?)),
            Tok::BoxOp => Ok(Tree::boxed(self.prefix()?)),
            Tok::DiamOp => Ok(Tree::diamond(self.prefix()?)),
            Tok::Atom(a) => Ok(Tree::Leaf(SchemaLeaf::Atom(a))),
            Tok::Meta(m) => Ok(Tree::Leaf(SchemaLeaf::Meta(m))),
            Tok::LParen => {
                let inner = self.iff()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.err("expected `)`");
                }
                self.at += 1;
                Ok(inner)
            }
            _ => {
                self.at -= 1;
                self.err("expected a formula")
            }
        }
    }
}

fn parse_tree(text: &str, allow_meta: bool) -> Result<Schema, ParseError> {
    let toks = lex(text, allow_meta)?;
    let mut p = Parser { toks, at: 0, end: text.len() };
    let s = p.iff()?;
    if p.at != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(s)
}

/// Parses a formula and checks that it belongs to `lang`.
pub fn parse(text: &str, lang: LanguageId) -> Result<Formula, ParseError> {
    let f = parse_any(text)?;
    if let Some(msg) = language_violation(&f, lang) {
        return Err(ParseError::Language(msg));
    }
    Ok(f)
}

/// Parses a formula without any language restriction.
pub fn parse_any(text: &str) -> Result<Formula, ParseError> {
    let s = parse_tree(text, false)?;
    Ok(schema_to_formula(&s).expect("no metavariables without meta lexing"))
}

/// Parses a schema; identifiers other than `p<n>`/`q<n>` are metavariables.
pub fn parse_schema(text: &str) -> Result<Schema, ParseError> {
    parse_tree(text, true)
}

pub fn schema_to_formula(s: &Schema) -> Option<Formula> {
    let mut ok = true;
    let f = s.map_leaves(&mut |l| match l {
        SchemaLeaf::Atom(a) => Tree::Leaf(*a),
        SchemaLeaf::Meta(_) => {
            ok = false;
            Tree::Leaf(Atom::p(0))
        }
    });
    ok.then_some(f)
}

// ---------------------------------------------------------------- schemas

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("missing binding for metavariable `{0}`")]
pub struct MissingBinding(pub String);

/// Most general substitution making `s` equal to `f`, if any.
pub fn match_schema(s: &Schema, f: &Formula) -> Option<Substitution> {
    let mut sub = Substitution::new();
    match_into(s, f, &mut sub).then_some(sub)
}

/// Extends `sub` so that `s` matches `f`; on failure `sub` may be partly
/// extended.
pub fn match_into(s: &Schema, f: &Formula, sub: &mut Substitution) -> bool {
    match (s, f) {
        (Tree::Leaf(SchemaLeaf::Meta(m)), _) => match sub.get(m) {
            Some(bound) => bound == f,
            None => {
                sub.insert(m.clone(), f.clone());
                true
            }
        },
        (Tree::Leaf(SchemaLeaf::Atom(a)), Tree::Leaf(b)) => a == b,
        (Tree::Leaf(_), _) => false,
        _ => {
            if s.conn() != f.conn() {
                return false;
            }
            s.children()
                .into_iter()
                .zip(f.children())
                .all(|(x, y)| match_into(x, y, sub))
        }
    }
}

pub fn apply_subst(s: &Schema, sub: &Substitution) -> Result<Formula, MissingBinding> {
    let mut missing = None;
    let f = s.map_leaves(&mut |l| match l {
        SchemaLeaf::Atom(a) => Tree::Leaf(*a),
        SchemaLeaf::Meta(m) => match sub.get(m) {
            Some(v) => v.clone(),
            None => {
                missing.get_or_insert_with(|| m.clone());
                Tree::Leaf(Atom::p(0))
            }
        },
    });
    match missing {
        Some(m) => Err(MissingBinding(m)),
        None => Ok(f),
    }
}

pub fn metavariables(s: &Schema) -> Vec<String> {
    let mut out = Vec::new();
    fn go(s: &Schema, out: &mut Vec<String>) {
        match s {
            Tree::Leaf(SchemaLeaf::Meta(m)) => {
                if !out.contains(m) {
                    out.push(m.clone())
                }
            }
            _ => s.children().into_iter().for_each(|c| go(c, out)),
        }
    }
    go(s, &mut out);
    out
}

/// Right-nested disjunction `d1 \/ (d2 \/ (...))`.
pub fn disjunction(ds: &[Formula]) -> Option<Formula> {
    let (last, init) = ds.split_last()?;
    Some(
        init.iter()
            .rev()
            .fold(last.clone(), |acc, d| Tree::or(d.clone(), acc)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pf(s: &str) -> Formula {
        parse_any(s).unwrap()
    }

    #[test]
    fn parses_atoms_and_negated_conditionals() {
        assert_eq!(parse("p0", LanguageId::L).unwrap(), p(0));
        assert_eq!(
            parse("~(p1 []-> ~p2)", LanguageId::LBoxto).unwrap(),
            Tree::neg(Tree::boxto(p(1), Tree::neg(p(2))))
        );
    }

    #[test]
    fn primed_atoms_rejected_in_base_language() {
        assert!(matches!(parse("q0 /\\ p0", LanguageId::L), Err(ParseError::Language(_))));
        assert!(parse("q0 /\\ p0", LanguageId::LePlus).is_ok());
        assert!(matches!(parse("~p0", LanguageId::LePlus), Err(ParseError::Language(_))));
    }

    #[test]
    fn printing() {
        assert_eq!(print(&Tree::neg(p(0))), "~p0");
        assert_eq!(print(&Tree::boxto(p(0), Tree::and(p(1), p(2)))), "p0 []-> (p1 /\\ p2)");
        assert_eq!(print(&Tree::imp(p(0), Tree::imp(p(1), p(2)))), "p0 -> p1 -> p2");
        assert_eq!(print(&Tree::imp(Tree::imp(p(0), p(1)), p(2))), "(p0 -> p1) -> p2");
        assert_eq!(print(&Tree::and(Tree::and(p(0), p(1)), p(2))), "p0 /\\ p1 /\\ p2");
        assert_eq!(print(&Tree::and(p(0), Tree::and(p(1), p(2)))), "p0 /\\ (p1 /\\ p2)");
        assert_eq!(print(&Tree::neg(Tree::boxed(Tree::neg(p(0))))), "~[]~p0");
    }

    #[test]
    fn precedence() {
        assert_eq!(pf("p0 /\\ p1 \\/ p2"), Tree::or(Tree::and(p(0), p(1)), p(2)));
        assert_eq!(pf("p0 -> p1 []-> p2"), Tree::imp(p(0), Tree::boxto(p(1), p(2))));
        assert_eq!(pf("~p0 /\\ []p1"), Tree::and(Tree::neg(p(0)), Tree::boxed(p(1))));
        assert_eq!(pf("p0 <-> p1"), iff(p(0), p(1)));
        assert!(parse_any("p0 <-> p1 <-> p2").is_err());
        assert_eq!(pf("p0 <>-> ~p1").to_string(), "p0 <>-> ~p1");
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_any("p0 /\\ ") {
            Err(ParseError::Syntax { pos, .. }) => assert_eq!(pos, 6),
            other => panic!("{other:?}"),
        }
        assert!(parse_any("(p0").is_err());
        assert!(parse_any("p0 p1").is_err());
        assert!(parse_any("x").is_err());
    }

    #[test]
    fn sugar_unfolds() {
        assert_eq!(sugar(Sugar::DiamTo, &[p(0), p(1)]), Tree::neg(Tree::boxto(p(0), Tree::neg(p(1)))));
        assert_eq!(sugar(Sugar::Diamond, &[p(0)]), Tree::neg(Tree::boxed(Tree::neg(p(0)))));
        let half = Tree::and(Tree::imp(p(0), p(0)), Tree::imp(Tree::neg(p(0)), Tree::neg(p(0))));
        assert_eq!(sugar(Sugar::StrongIff, &[p(0), p(0)]), Tree::and(half.clone(), half));
    }

    #[test]
    fn expansion_is_idempotent_and_removes_might() {
        let f = pf("<>(p0 <>-> p1) /\\ (p2 <>-> <>p3)");
        let e = expand_abbrev(&f);
        assert!(!e.to_string().contains("<>"));
        assert_eq!(expand_abbrev(&e), e);
    }

    #[test]
    fn schema_matching() {
        let a1 = parse_schema("phi -> psi -> phi").unwrap();
        let sub = match_schema(&a1, &pf("p0 -> p1 -> p0")).unwrap();
        assert_eq!(sub["phi"], p(0));
        assert_eq!(sub["psi"], p(1));
        assert!(match_schema(&a1, &pf("p0 -> p1 -> p2")).is_none());
        let lhs = parse_schema("(phi []-> psi) /\\ (phi []-> chi)").unwrap();
        let sub = match_schema(&lhs, &pf("(p0 []-> p1) /\\ (p0 []-> p2)")).unwrap();
        assert_eq!(sub.len(), 3);
        assert_eq!(sub["chi"], p(2));
    }

    #[test]
    fn substitution() {
        let s = parse_schema("phi \\/ ~phi").unwrap();
        let sub: Substitution = [("phi".to_string(), p(3))].into();
        assert_eq!(apply_subst(&s, &sub).unwrap(), pf("p3 \\/ ~p3"));
        let closed = parse_schema("p1 -> p2").unwrap();
        assert_eq!(apply_subst(&closed, &sub).unwrap(), pf("p1 -> p2"));
        let s = parse_schema("phi -> phi").unwrap();
        let sub: Substitution = [("phi".to_string(), pf("p0 []-> p1"))].into();
        assert_eq!(apply_subst(&s, &sub).unwrap(), pf("(p0 []-> p1) -> (p0 []-> p1)"));
        assert_eq!(
            apply_subst(&parse_schema("psi").unwrap(), &Substitution::new()),
            Err(MissingBinding("psi".into()))
        );
    }

    #[test]
    fn antecedent_order() {
        assert_eq!(antecedents(&pf("p0 []-> p1")), vec![p(0)]);
        assert_eq!(antecedents(&pf("p0 []-> (p1 []-> p2)")), vec![p(1), p(0)]);
        assert_eq!(antecedents(&pf("(p1 /\\ p2) []-> (p1 []-> p2)")), vec![p(1), pf("p1 /\\ p2")]);
        assert_eq!(antecedents(&pf("~(p0 []-> ~p1) /\\ (p0 []-> p2)")), vec![p(0)]);
    }

    #[test]
    fn right_nested_disjunction() {
        assert_eq!(disjunction(&[p(0), p(1), p(2)]).unwrap(), pf("p0 \\/ (p1 \\/ p2)"));
        assert_eq!(disjunction(&[p(0)]).unwrap(), p(0));
        assert!(disjunction(&[]).is_none());
    }
}
