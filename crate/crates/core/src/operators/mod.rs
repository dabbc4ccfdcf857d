//! Discrete operators: macro Laplacian, per-cell Laplace–Beltrami
//! operators, and the coupled two-scale block operator.

mod cell_op;
mod coupled;
mod macro_op;

pub use cell_op::{assemble_cell, exchange_flux, lift_boundary, CellOperator};
pub use coupled::{
    assemble_coupled, dot_reduced, weighted_inner, CoupledOperator, CouplingMode, ReducedVec,
    SourcePair, TwoScaleState,
};
pub use macro_op::{assemble_macro, MacroBcKind, MacroOperator};
