//! Per-rule parameter search and genetic weighting of rule signals.

mod genetic;
mod grid;

pub use genetic::{
    fitness_mr, fitness_mssr, ga_evolve, ga_step, positions_from_weights, raw_positions,
    Chromosome, FitnessContext, FitnessKind, FitnessTrace, GaConfig, GenerationRecord,
    MutationSchedule, Normalizer,
};
pub use grid::{grid_search_rule, optimize_catalog, write_grid_results_csv, GridResult};
