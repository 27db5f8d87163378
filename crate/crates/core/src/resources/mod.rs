//! Gate-level circuits for the thermal-shadow pipeline and their costs.

pub mod count;
pub mod ir;
pub mod lower;
pub mod qsp;
pub mod study;

pub use count::{count, depth, layers, success_probability, GateCounts, ResourceReport, TagReport};
pub use ir::{CircuitIR, Gate, GateKind, Tag};
pub use lower::{is_native, lower, lower_with, LoweringOptions, Target};
pub use qsp::{build_qsp_circuit, build_tpq_circuit, phase_count, QspLayout};
pub use study::{random_unitary_stats, scaling_study, write_scaling_csv, RandomUnitaryStats, ScalingRow};
