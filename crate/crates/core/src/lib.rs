//! Zero-forcing scheduling for linear interference networks with random
//! block erasures and two-transmitter cooperation.
//!
//! - [`network`]: realizations, erasure sampling, cluster partition.
//! - [`assignment`]: transmit sets and the parameterized assignment family.
//! - [`scheduler`]: the optimal decision pass, beamforming weights and their
//!   numeric verification.
//! - [`oracle`]: brute-force optimum and exact expectation by enumeration.
//! - [`montecarlo`]: per-user DoF estimation and parameter sweeps.
//! - [`report`]: CSV and table output.
//!
//! ```
//! use linzf_core::{build_assignment, schedule_network, NetworkRealization};
//!
//! let r: NetworkRealization = "5;11111;1111".parse().unwrap();
//! let a = build_assignment(5, "3/5".parse().unwrap()).unwrap();
//! let s = schedule_network(&r, &a).unwrap();
//! assert_eq!(s.delivered().collect::<Vec<_>>(), vec![0, 1, 3, 4]);
//! ```

pub mod assignment;
pub mod error;
pub mod montecarlo;
pub mod network;
pub mod oracle;
pub mod report;
pub mod scheduler;
pub mod verify;

pub use assignment::{build_assignment, random_assignment, Fraction, MessageAssignment, TransmitSet};
pub use error::{Error, Result};
pub use montecarlo::{
    best_assignment_table, estimate_pudof, sweep, AssignmentSpec, Estimate, PGrid, SweepConfig, SweepRow, TableRow,
};
pub use network::{derive_seed, Cluster, NetworkRealization};
pub use oracle::{
    exact_expected_dof, feasible, optimal_single_delivery_dof, optimal_zero_forcing_dof, CarrierConfig, Engine,
};
pub use scheduler::{
    build_transmit_signals, schedule_cluster, schedule_network, verify_receivers, verify_zero_forcing, BeamformingPlan,
    Schedule, ZeroForcingReport,
};
