//! Tsetlin Machine engine.
//!
//! Clauses are teams of two-action Tsetlin Automata stored as bit planes, so
//! that evaluation and feedback run word-parallel over 64 automata at a time.
//! A scalar reference implementation consumes exactly the same random
//! streams and serves as the oracle for the packed engine.

pub mod analysis;
pub mod automaton;
pub mod clause;
pub mod datasets;
pub mod error;
pub mod experiments;
pub mod feedback;
pub mod machine;
pub mod multiclass;
pub mod rng;

pub use automaton::{Action, Event, TaState};
pub use clause::{ClauseTeam, EvalMode, LiteralVector, PlaneBlock, Polarity};
pub use datasets::{BinaryDataset, NoisyXor, Quantizer, RealTable};
pub use error::{Error, Result};
pub use feedback::{FeedbackKind, FeedbackParams, FeedbackTriple};
pub use machine::{ClauseExpression, MachineConfig, ScalarMachine, TrainReport, TsetlinMachine};
pub use multiclass::MultiClassMachine;
