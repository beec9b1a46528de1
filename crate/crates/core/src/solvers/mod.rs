pub mod benchmark;
pub mod dataset;
pub mod heat1d;
pub mod sampling;

pub use benchmark::eval_benchmark;
pub use dataset::{build_dataset, build_dataset_from_params, ParamPoint, ProblemKind, ProblemSpec, SnapshotSet};
pub use heat1d::{solve_heat_1d, uniform_grid, CrankNicolson, HeatData, Manufactured, ParametricHeat};
pub use sampling::{box_volume, sample_parameters, time_grid};
