//! Boundary measurements, linearization recovery and energy bookkeeping.

pub mod energy;
pub mod lambda;
pub mod trace;

pub use energy::{
    calibrate_gronwall, energy_ledger, estimate_a_tilde, gronwall_check, DataNorms, EnergyLedger,
    GronwallReport,
};
pub use lambda::{
    lambda_lin_map, lambda_map, recover_linear_map, recover_linear_map_with_coupling,
    RecoveryEntry, RecoveryReport,
};
pub use trace::{boundary_nodes, trace, trace_ratio, BoundaryTrace};
