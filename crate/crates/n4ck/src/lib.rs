//! Workbench for the paraconsistent constructive conditional logic N4CK and
//! its neighbours: syntax, Kripke models, satisfaction, Hilbert-style proof
//! checking, decision procedures, countermodel search and the translations
//! between the logics.

pub mod decide;
pub mod kripke;
pub mod par;
pub mod proofs;
pub mod search;
pub mod semantics;
pub mod syntax;
pub mod translate;
