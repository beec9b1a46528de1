use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::scaler::MinMaxScaler;
use crate::error::{dim_err, Error, Result};
use crate::linalg::{DenseMatrix, PodBasis};
use crate::neural::Network;
use crate::solvers::{ParamPoint, SnapshotSet};

/// Latent dimension guaranteed sufficient for `p` parameters.
pub fn latent_dim_rule(p: usize) -> usize {
    2 * p + 3
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    PodDlRom,
    PodDnn,
    LinResnet,
}

impl Family {
    pub fn tag(self) -> &'static str {
        match self {
            Family::PodDlRom => "pod-dl-rom",
            Family::PodDnn => "pod-dnn",
            Family::LinResnet => "lin-resnet",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pod-dl-rom" => Ok(Family::PodDlRom),
            "pod-dnn" => Ok(Family::PodDnn),
            "lin-resnet" => Ok(Family::LinResnet),
            other => Err(Error::Config(format!(
                "unknown model family '{other}' (expected pod-dl-rom, pod-dnn or lin-resnet)"
            ))),
        }
    }
}

/// Widths and depths of all three families; each family reads its own fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchConfig {
    pub latent_dim: usize,
    pub phi_width: usize,
    pub phi_depth: usize,
    pub ae_width: usize,
    pub ae_depth: usize,
    pub dnn_width: usize,
    pub dnn_depth: usize,
    pub res_k: usize,
    pub res_depth: usize,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            latent_dim: 5,
            phi_width: 10,
            phi_depth: 3,
            ae_width: 25,
            ae_depth: 5,
            dnn_width: 25,
            dnn_depth: 3,
            res_k: 5,
            res_depth: 2,
        }
    }
}

/// Declared input box of a model; `final_time` is `None` for stationary problems.
#[derive(Clone, Debug, PartialEq)]
pub struct InputDomain {
    pub bounds: Vec<(f64, f64)>,
    pub final_time: Option<f64>,
}

impl InputDomain {
    /// Hull of the training inputs.
    pub fn from_data(data: &SnapshotSet) -> Self {
        let p = data.p();
        let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); p];
        for pt in &data.points {
            for (b, &m) in bounds.iter_mut().zip(&pt.mu) {
                b.0 = b.0.min(m);
                b.1 = b.1.max(m);
            }
        }
        let final_time = data
            .is_time_dependent()
            .then(|| data.points.iter().map(|pt| pt.t).fold(0.0, f64::max));
        Self { bounds, final_time }
    }

    pub fn n_inputs(&self) -> usize {
        self.bounds.len() + usize::from(self.final_time.is_some())
    }

    pub fn contains(&self, pt: &ParamPoint) -> bool {
        let slack = 1e-12;
        let mu_ok = pt.mu.len() == self.bounds.len()
            && pt
                .mu
                .iter()
                .zip(&self.bounds)
                .all(|(&m, &(lo, hi))| m >= lo - slack && m <= hi + slack);
        let t_ok = match self.final_time {
            Some(t_end) => pt.t >= -slack && pt.t <= t_end + slack,
            None => true,
        };
        mu_ok && t_ok
    }

    /// Raw network inputs, one row per point: `mu` followed by `t` when time-dependent.
    pub fn inputs(&self, points: &[ParamPoint]) -> Result<DenseMatrix> {
        let d = self.n_inputs();
        let mut data = Vec::with_capacity(points.len() * d);
        for pt in points {
            if pt.mu.len() != self.bounds.len() {
                return dim_err(format!("model takes {} parameters, got {}", self.bounds.len(), pt.mu.len()));
            }
            data.extend_from_slice(&pt.mu);
            if self.final_time.is_some() {
                data.push(pt.t);
            }
        }
        DenseMatrix::from_row_major(points.len(), d, data)
    }
}

/// Everything a model needs around its networks: basis, scalers and input domain.
#[derive(Clone, Debug, PartialEq)]
pub struct RomHead {
    pub basis: PodBasis,
    pub input_scaler: MinMaxScaler,
    pub coeff_scaler: MinMaxScaler,
    pub domain: InputDomain,
}

impl RomHead {
    pub fn n(&self) -> usize {
        self.basis.n
    }

    fn normalized_inputs(&self, points: &[ParamPoint]) -> Result<DenseMatrix> {
        let outside = points.iter().filter(|p| !self.domain.contains(p)).count();
        if outside > 0 {
            log::warn!("{outside} of {} prediction inputs lie outside the model's input domain", points.len());
        }
        self.input_scaler.transform(&self.domain.inputs(points)?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PodDlRomModel {
    pub head: RomHead,
    /// Reduced map, inputs to latent.
    pub phi: Network,
    /// Decoder, latent to POD coefficients.
    pub psi: Network,
    /// Encoder, POD coefficients to latent; used only while training.
    pub encoder: Network,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PodDnnModel {
    pub head: RomHead,
    pub net: Network,
}

/// Dense input layer followed by residual layers of width N.
#[derive(Clone, Debug, PartialEq)]
pub struct LinResNetModel {
    pub head: RomHead,
    pub net: Network,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RomModel {
    PodDlRom(PodDlRomModel),
    PodDnn(PodDnnModel),
    LinResNet(LinResNetModel),
}

impl RomModel {
    pub fn family(&self) -> Family {
        match self {
            RomModel::PodDlRom(_) => Family::PodDlRom,
            RomModel::PodDnn(_) => Family::PodDnn,
            RomModel::LinResNet(_) => Family::LinResnet,
        }
    }

    pub fn head(&self) -> &RomHead {
        match self {
            RomModel::PodDlRom(m) => &m.head,
            RomModel::PodDnn(m) => &m.head,
            RomModel::LinResNet(m) => &m.head,
        }
    }

    pub fn head_mut(&mut self) -> &mut RomHead {
        match self {
            RomModel::PodDlRom(m) => &mut m.head,
            RomModel::PodDnn(m) => &mut m.head,
            RomModel::LinResNet(m) => &mut m.head,
        }
    }

    pub fn basis(&self) -> &PodBasis {
        &self.head().basis
    }

    /// Latent width for POD-DL-ROM, `None` otherwise.
    pub fn latent_dim(&self) -> Option<usize> {
        match self {
            RomModel::PodDlRom(m) => Some(m.phi.output_dim()),
            _ => None,
        }
    }

    /// Parameters used at inference; the encoder is not counted.
    pub fn active_weights(&self) -> usize {
        match self {
            RomModel::PodDlRom(m) => m.phi.count_active_weights() + m.psi.count_active_weights(),
            RomModel::PodDnn(m) => m.net.count_active_weights(),
            RomModel::LinResNet(m) => m.net.count_active_weights(),
        }
    }

    fn normalized_coeffs(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            RomModel::PodDlRom(m) => m.psi.predict(&m.phi.predict(x)?),
            RomModel::PodDnn(m) => m.net.predict(x),
            RomModel::LinResNet(m) => m.net.predict(x),
        }
    }

    /// Predicted POD coefficients, one row per point.
    pub fn predict_coeffs(&self, points: &[ParamPoint]) -> Result<DenseMatrix> {
        let head = self.head();
        let x = head.normalized_inputs(points)?;
        head.coeff_scaler.inverse(&self.normalized_coeffs(&x)?)
    }

    /// `V q̂` for each point, as columns of an `N_h x points` matrix.
    pub fn predict_batch(&self, points: &[ParamPoint]) -> Result<DenseMatrix> {
        let q = self.predict_coeffs(points)?;
        self.basis().v.matmul(&q.transpose())
    }

    pub fn predict(&self, mu: &[f64], t: f64) -> Result<Vec<f64>> {
        let pt = ParamPoint { mu: mu.to_vec(), t };
        Ok(self.predict_batch(std::slice::from_ref(&pt))?.into_data())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latent_rule() {
        assert_eq!(latent_dim_rule(1), 5);
        assert_eq!(latent_dim_rule(2), 7);
        assert_eq!(latent_dim_rule(3), 9);
    }

    #[test]
    fn family_tags_round_trip() {
        for f in [Family::PodDlRom, Family::PodDnn, Family::LinResnet] {
            assert_eq!(f.tag().parse::<Family>().unwrap(), f);
        }
        assert!(matches!("cnn".parse::<Family>(), Err(Error::Config(_))));
    }

    #[test]
    fn domain_inputs_include_time_only_when_needed() {
        let stationary = InputDomain {
            bounds: vec![(0.0, 1.0); 2],
            final_time: None,
        };
        let pt = ParamPoint { mu: vec![0.5, 0.5], t: 0.0 };
        assert_eq!(stationary.inputs(std::slice::from_ref(&pt)).unwrap().cols(), 2);
        let dynamic = InputDomain {
            bounds: vec![(0.0, 1.0); 2],
            final_time: Some(1.0),
        };
        assert_eq!(dynamic.inputs(std::slice::from_ref(&pt)).unwrap().cols(), 3);
        assert!(!dynamic.contains(&ParamPoint { mu: vec![0.5, 1.5], t: 0.5 }));
        assert!(!dynamic.contains(&ParamPoint { mu: vec![0.5, 0.5], t: 1.5 }));
    }
}
