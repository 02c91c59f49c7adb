//! Symbolic solver and controller synthesizer for safety games over AIGER
//! circuits.
//!
//! The pipeline: parse an ASCII AIGER file ([`aiger`]), encode it as a
//! two-player safety game over BDDs ([`game`]), solve it either by concrete
//! fixpoint iteration ([`game`]) or by abstraction refinement over predicate
//! sets ([`absgame`], [`cegar`]), then extract, determinize and splice a
//! winning controller back into the circuit ([`strategy`]). The [`oracle`]
//! module holds an explicit-state reference solver used to cross-check the
//! symbolic path on small instances, and [`cli`] implements the command-line
//! front end.

pub mod aiger;
pub mod bdd;
pub mod cegar;
pub mod cli;
pub mod game;
pub mod absgame;
pub mod oracle;
pub mod strategy;

pub use bdd::{BddError, BddManager, BddRef, Var, VarBlock};
