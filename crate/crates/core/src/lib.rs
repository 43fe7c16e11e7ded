//! Predicate-level classification of semantic-graph annotated dialogue.
//!
//! Utterances arrive as PENMAN graphs ([`amr`]), are reduced to boolean
//! `(key, value)` predicates ([`store`]), filtered ([`pruning`]) and fed to a
//! layer of weighted AND gates, one per class ([`lnn`]). [`eval`] scores the
//! result, [`insights`] reports the heaviest predicates and [`synth`]
//! generates labeled corpora with known planted signal.

pub mod amr;
pub mod eval;
pub mod exec;
pub mod insights;
pub mod lnn;
pub mod pruning;
pub mod store;
pub mod synth;
pub mod textio;
