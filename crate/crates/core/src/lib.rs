//! Multiset variables ordered by lex-induced total orders.

pub mod analysis;
pub mod domain;
pub mod enumerate;
pub mod envelope;
mod error;
pub mod models;
pub mod multiset;
pub mod order;
pub mod propagate;
pub mod rank;
pub mod search;

pub use analysis::{all_values, closure_experiment, proposition_report, ClauseResult, ClosureConfig, ClosureExperiment, ClosureRow, Mode, OrderingSummary, Population, PropositionReport};
pub use domain::{
    closure, interval_from_sb, interval_size, is_exact, sb_from_interval, AlphaInterval, Domain, Failed,
    Outcome, SubsetBoundsCV,
};
pub use enumerate::{enumerate, predecessor, seek_greatest_leq, seek_least_geq, successor, Seeker};
pub use envelope::{Envelope, FeasibilityPredicate, Span};
pub use error::{Error, Result};
pub use multiset::{parse_elements, Multiset, Universe};
pub use order::{alpha_cmp, colex_cmp, lex_cmp, OrderingId};
pub use rank::{count_between, count_leq, rank, unrank, CountBox};
pub use propagate::{fixpoint, fixpoint_trailed, meeting_cost, Propagator, Store, Var};
pub use search::{
    branch, run_many, search, solve, solve_all, Control, Limits, Model, Objective, Representation, SearchStats,
    Status, VarDecl,
};
pub use models::{build_golfer, build_steiner, Family, GolferParams, Instance, SteinerParams};
