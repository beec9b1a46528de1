use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{
    latent_dim_rule, ArchConfig, InputDomain, LinResNetModel, PodDlRomModel, PodDnnModel, RomHead,
};
use super::scaler::MinMaxScaler;
use crate::error::{dim_err, Error, Result};
use crate::linalg::{DenseMatrix, PodBasis};
use crate::neural::{
    train, DenseLayer, Layer, Network, Objective, ParamSet, ResidualLayer, TrainConfig, TrainLog,
    DEFAULT_ALPHA,
};
use crate::solvers::SnapshotSet;

/// Normalized inputs and POD coefficients of a training set, one sample per row.
pub struct TrainingData {
    pub head: RomHead,
    pub x: DenseMatrix,
    pub q: DenseMatrix,
}

impl TrainingData {
    pub fn prepare(data: &SnapshotSet, basis: &PodBasis) -> Result<Self> {
        if data.n_data() == 0 {
            return Err(Error::InvalidArgument("training set has no snapshots".into()));
        }
        if basis.n_h() != data.n_h() {
            return dim_err(format!("basis has {} rows, snapshots {}", basis.n_h(), data.n_h()));
        }
        if basis.n == 0 {
            return Err(Error::InvalidArgument("POD basis has no modes".into()));
        }
        let domain = InputDomain::from_data(data);
        let raw_x = domain.inputs(&data.points)?;
        let raw_q = data.u.t_matmul(&basis.v)?;
        let input_scaler = MinMaxScaler::fit(&raw_x)?;
        let coeff_scaler = MinMaxScaler::fit(&raw_q)?;
        Ok(Self {
            x: input_scaler.transform(&raw_x)?,
            q: coeff_scaler.transform(&raw_q)?,
            head: RomHead {
                basis: basis.clone(),
                input_scaler,
                coeff_scaler,
                domain,
            },
        })
    }

    fn n_samples(&self) -> usize {
        self.x.rows()
    }
}

fn gather(m: &DenseMatrix, idx: &[usize]) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(idx.len(), m.cols());
    for (r, &i) in idx.iter().enumerate() {
        out.row_mut(r).copy_from_slice(m.row(i));
    }
    out
}

/// Trainable triple of the POD-DL-ROM.
#[derive(Clone, Debug)]
pub struct DlRomNets {
    pub phi: Network,
    pub psi: Network,
    pub encoder: Network,
}

impl ParamSet for DlRomNets {
    fn param_blocks(&self) -> Vec<&[f64]> {
        let mut v = self.phi.param_blocks();
        v.extend(self.psi.param_blocks());
        v.extend(self.encoder.param_blocks());
        v
    }

    fn param_blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.phi.param_blocks_mut();
        v.extend(self.psi.param_blocks_mut());
        v.extend(self.encoder.param_blocks_mut());
        v
    }
}

/// `ω_N ‖ψ(φ(x)) − q‖² + ω_n ‖Ψ'(q) − φ(x)‖²`, averaged over the batch.
pub struct DlRomLoss<'a> {
    pub data: &'a TrainingData,
    pub omega_big: f64,
    pub omega_small: f64,
}

impl Objective for DlRomLoss<'_> {
    type Params = DlRomNets;

    fn n_samples(&self) -> usize {
        self.data.n_samples()
    }

    fn loss(&self, nets: &DlRomNets, idx: &[usize], grad: Option<&mut [f64]>) -> Result<f64> {
        let x = gather(&self.data.x, idx);
        let q = gather(&self.data.q, idx);
        let b = idx.len() as f64;
        let (z_dyn, c_phi) = nets.phi.forward(&x)?;
        let (q_hat, c_psi) = nets.psi.forward(&z_dyn)?;
        let (z_enc, c_enc) = nets.encoder.forward(&q)?;
        let rec: f64 = q_hat.data().iter().zip(q.data()).map(|(a, c)| (a - c) * (a - c)).sum();
        let lat: f64 = z_enc.data().iter().zip(z_dyn.data()).map(|(a, c)| (a - c) * (a - c)).sum();
        let loss = (self.omega_big * rec + self.omega_small * lat) / b;
        if let Some(grad) = grad {
            let (g_phi, rest) = grad.split_at_mut(nets.phi.n_params());
            let (g_psi, g_enc) = rest.split_at_mut(nets.psi.n_params());
            let mut dq = q_hat.clone();
            for (d, c) in dq.data_mut().iter_mut().zip(q.data()) {
                *d = 2.0 * self.omega_big * (*d - c) / b;
            }
            let mut dz_dyn = nets.psi.backward(&c_psi, &dq, g_psi)?;
            let mut dz_enc = z_enc.clone();
            for ((dd, de), (&zd, &ze)) in dz_dyn
                .data_mut()
                .iter_mut()
                .zip(dz_enc.data_mut())
                .zip(z_dyn.data().iter().zip(z_enc.data()))
            {
                let diff = 2.0 * self.omega_small * (ze - zd) / b;
                *dd -= diff;
                *de = diff;
            }
            nets.phi.backward(&c_phi, &dz_dyn, g_phi)?;
            nets.encoder.backward(&c_enc, &dz_enc, g_enc)?;
        }
        Ok(loss)
    }
}

/// Plain coefficient regression `‖net(x) − q‖²`, averaged over the batch.
pub struct RegressionLoss<'a> {
    pub data: &'a TrainingData,
}

impl Objective for RegressionLoss<'_> {
    type Params = Network;

    fn n_samples(&self) -> usize {
        self.data.n_samples()
    }

    fn loss(&self, net: &Network, idx: &[usize], grad: Option<&mut [f64]>) -> Result<f64> {
        let x = gather(&self.data.x, idx);
        let q = gather(&self.data.q, idx);
        let b = idx.len() as f64;
        let (q_hat, cache) = net.forward(&x)?;
        let mut dq = q_hat;
        let mut loss = 0.0;
        for (d, c) in dq.data_mut().iter_mut().zip(q.data()) {
            let r = *d - c;
            loss += r * r;
            *d = 2.0 * r / b;
        }
        if let Some(grad) = grad {
            net.backward(&cache, &dq, grad)?;
        }
        Ok(loss / b)
    }
}

/// Builds the POD-DL-ROM networks for the given input count and POD dimension.
pub fn init_dl_rom(n_inputs: usize, n_pod: usize, p: usize, arch: &ArchConfig, seed: u64) -> Result<DlRomNets> {
    let n = arch.latent_dim;
    if n == 0 {
        return Err(Error::Config("latent dimension must be at least 1".into()));
    }
    if n > latent_dim_rule(p) {
        return Err(Error::Config(format!(
            "latent dimension {n} exceeds 2p+3 = {} for p = {p}",
            latent_dim_rule(p)
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(DlRomNets {
        phi: Network::with_hidden(n_inputs, arch.phi_width, arch.phi_depth, n, &mut rng)?,
        psi: Network::with_hidden(n, arch.ae_width, arch.ae_depth, n_pod, &mut rng)?,
        encoder: Network::with_hidden(n_pod, arch.ae_width, arch.ae_depth, n, &mut rng)?,
    })
}

/// Input dense layer (activated) followed by `depth` residual layers of width `n_pod`.
pub fn init_lin_resnet(n_inputs: usize, n_pod: usize, k: usize, depth: usize, seed: u64) -> Result<Network> {
    if depth == 0 {
        return Err(Error::Config("lin+ResNet needs at least one residual layer".into()));
    }
    if k == 0 {
        return Err(Error::Config("residual latent width must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = vec![Layer::Dense(DenseLayer::init(n_inputs, n_pod, true, &mut rng))];
    for _ in 0..depth {
        layers.push(Layer::Residual(ResidualLayer::init(n_pod, k, &mut rng)));
    }
    Network::new(layers, DEFAULT_ALPHA)
}

pub fn train_pod_dl_rom(
    data: &SnapshotSet,
    basis: &PodBasis,
    arch: &ArchConfig,
    cfg: &TrainConfig,
) -> Result<(PodDlRomModel, TrainLog)> {
    if !(cfg.omega_small > 0.0) {
        return Err(Error::Config(
            "POD-DL-ROM needs omega_n > 0; with omega_n = 0 the encoder is unused, train the pod-dnn family instead"
                .into(),
        ));
    }
    cfg.validate()?;
    let td = TrainingData::prepare(data, basis)?;
    let nets = init_dl_rom(td.x.cols(), basis.n, data.p(), arch, cfg.seed)?;
    let objective = DlRomLoss {
        data: &td,
        omega_big: cfg.omega_big,
        omega_small: cfg.omega_small,
    };
    let (nets, log) = train(nets, &objective, cfg)?;
    Ok((
        PodDlRomModel {
            head: td.head,
            phi: nets.phi,
            psi: nets.psi,
            encoder: nets.encoder,
        },
        log,
    ))
}

pub fn train_pod_dnn(
    data: &SnapshotSet,
    basis: &PodBasis,
    arch: &ArchConfig,
    cfg: &TrainConfig,
) -> Result<(PodDnnModel, TrainLog)> {
    cfg.validate()?;
    let td = TrainingData::prepare(data, basis)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let net = Network::with_hidden(td.x.cols(), arch.dnn_width, arch.dnn_depth, basis.n, &mut rng)?;
    let (net, log) = train(net, &RegressionLoss { data: &td }, cfg)?;
    Ok((PodDnnModel { head: td.head, net }, log))
}

pub fn train_lin_resnet(
    data: &SnapshotSet,
    basis: &PodBasis,
    k: usize,
    depth: usize,
    cfg: &TrainConfig,
) -> Result<(LinResNetModel, TrainLog)> {
    cfg.validate()?;
    let td = TrainingData::prepare(data, basis)?;
    let net = init_lin_resnet(td.x.cols(), basis.n, k, depth, cfg.seed)?;
    let (net, log) = train(net, &RegressionLoss { data: &td }, cfg)?;
    Ok((LinResNetModel { head: td.head, net }, log))
}
