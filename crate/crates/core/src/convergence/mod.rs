//! Convergence measurements: the random matrix oracle for resolvent
//! convergence and Galerkin sweeps over the PDE catalog.

mod oracle;
mod sweep;
mod table;

pub use oracle::{derive_seed, oracle_resolvent_convergence, random_datum, OracleInstance, OracleReport};
pub use sweep::{
    convergence_sweep, manufactured_forcing, manufactured_solution, strong_convergence_defect, Excitation,
    SchemeSymbol, SweepOptions, TimeProfile,
};
pub use table::{Check, ConvergenceRow, ConvergenceTable, Defect, TableKind, CSV_HEADER};
