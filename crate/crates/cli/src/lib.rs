//! Library surface of the scenario runner, exposed so regression suites can
//! drive the same code paths as the binary.

mod commands;
mod config;

pub use commands::{
    build_gravity_scenario, build_initial_state, build_operator, run_command, Command,
};
pub use config::{
    parse_config, resolved_text, BcKind, CaseKind, CellMapConfig, CellModeKind,
    CoefficientConfig, CoefficientKind, Config, ConventionKind, CouplingKind, FamilyKind,
    ForcingKind, InitialKind, MeshConfig, ProfileConfig, VariantKind,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("invariant violated: {0}")]
    InvariantViolated(String),

    #[error(transparent)]
    Core(#[from] twoscale::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
