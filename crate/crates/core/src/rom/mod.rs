pub mod fit;
pub mod model;
pub mod scaler;

pub use fit::{
    init_dl_rom, init_lin_resnet, train_lin_resnet, train_pod_dl_rom, train_pod_dnn, DlRomLoss, DlRomNets,
    RegressionLoss, TrainingData,
};
pub use model::{
    latent_dim_rule, ArchConfig, Family, InputDomain, LinResNetModel, PodDlRomModel, PodDnnModel, RomHead, RomModel,
};
pub use scaler::MinMaxScaler;

use crate::error::Result;
use crate::linalg::PodBasis;
use crate::neural::{TrainConfig, TrainLog};
use crate::solvers::SnapshotSet;

/// Trains the requested family.
pub fn train_model(
    family: Family,
    data: &SnapshotSet,
    basis: &PodBasis,
    arch: &ArchConfig,
    cfg: &TrainConfig,
) -> Result<(RomModel, TrainLog)> {
    Ok(match family {
        Family::PodDlRom => {
            let (m, log) = train_pod_dl_rom(data, basis, arch, cfg)?;
            (RomModel::PodDlRom(m), log)
        }
        Family::PodDnn => {
            let (m, log) = train_pod_dnn(data, basis, arch, cfg)?;
            (RomModel::PodDnn(m), log)
        }
        Family::LinResnet => {
            let (m, log) = train_lin_resnet(data, basis, arch.res_k, arch.res_depth, cfg)?;
            (RomModel::LinResNet(m), log)
        }
    })
}
