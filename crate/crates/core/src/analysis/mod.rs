pub mod errors;
pub mod mc;
pub mod slope;

pub use errors::{
    assemble_report, bound_report, column_norms_sq, estimate_m_big_m, nn_error, nn_error_from_coeffs, pod_error,
    projection_integral, relative_error, sampling_error, sampling_error_from_parts, ErrorReport, ReportInputs,
};
pub use mc::{inverse_square_norms, mc_integral, weighted_norm};
pub use slope::{fit_loglog_slope, SlopeFit};
