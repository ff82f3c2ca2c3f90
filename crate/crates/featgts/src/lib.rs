//! Feature-oriented graph transformation systems.
//!
//! Agent-based models are represented as typed attributed graphs rewritten by
//! rules. A family of model variants is organised by a feature diagram over a
//! single over-complete model (the 150% model); concrete variants are derived
//! by filtering, composed by merging extensions over a shared base, checked
//! for conservativity, and compared by stochastic simulation.
//!
//! Module map:
//!
//! - [`graph`] — type graphs, instance graphs, morphisms, restriction,
//!   isomorphism.
//! - [`rewrite`] — transformation rules, match finding with attribute
//!   variables, rule application, rule effects, projection onto base types.
//! - [`feature`] — feature diagrams, configuration validity, feature models,
//!   variant derivation.
//! - [`compose`] — extension witnesses between systems, merging orthogonal
//!   extensions, conservativity checking.
//! - [`sim`] — continuous-time stochastic simulation, trajectory projection,
//!   observables, variant comparison.
//! - [`dsl`] — the textual model format (parser and printer).
//! - [`init`] — initial-state generators.
//! - [`cli`] — the command-line workflow and CSV export.
//! - [`models`] — the bundled epidemic model family used throughout the
//!   test-suite and as a starter model.

pub mod cli;
pub mod compose;
pub mod dsl;
pub mod feature;
pub mod graph;
pub mod init;
mod matching;
pub mod models;
pub mod rewrite;
pub mod rng;
pub mod sim;
