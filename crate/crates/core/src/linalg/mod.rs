mod matrix;
pub mod pod;
pub mod svd;

pub use matrix::{axpy, dot, norm_sq, DenseMatrix};
pub use pod::{
    column_norms, correlation_eigs, lift, project, projection_residual_sq, random_orthonormal,
    select_pod_dim, tail_energy, total_projection_residual, PodBasis, PodDimChoice, SvdMethod,
};
pub use svd::{randomized_svd, thin_svd, thin_svd_full, Svd};
