//! The certification pipeline for a cover against a lifted partition: slice
//! measures on a base-angle grid, the pigeonhole index function, a
//! grid/bisection search over `(m, θ₀)`, and a certificate re-derived by
//! direct surface sampling.

mod search;
mod slices;

pub use search::{
    rotation_search, AuditRow, NotCertifiedReason, Objective, Provenance, ReducedEstimate, SearchConfig, Status,
    VerificationReport, OBJECTIVE_CSV_HEADER,
};
pub use slices::{build_slice_table, index_function, IndexFunction, SliceTable, SLICES_CSV_HEADER};
