//! Binary containers for POD bases (`PODBAS01`) and trained models (`PODMDL01`).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::codec::{expect_magic, Decoder, Encoder};
use crate::error::{Error, Result};
use crate::linalg::PodBasis;
use crate::neural::{DenseLayer, Layer, Network, ResidualLayer, TrainConfig};
use crate::rom::{
    ArchConfig, Family, InputDomain, LinResNetModel, MinMaxScaler, PodDlRomModel, PodDnnModel, RomHead, RomModel,
};

pub const BASIS_MAGIC: &[u8; 8] = b"PODBAS01";
pub const MODEL_MAGIC: &[u8; 8] = b"PODMDL01";
pub const MODEL_VERSION: u32 = 1;

fn put_basis<W: Write>(enc: &mut Encoder<W>, b: &PodBasis) -> Result<()> {
    enc.usize(b.n)?;
    enc.f64(b.domain_volume)?;
    enc.vec(&b.sigma2)?;
    enc.matrix(&b.v)
}

fn get_basis<R: Read>(dec: &mut Decoder<R>) -> Result<PodBasis> {
    let n = dec.usize()?;
    let domain_volume = dec.f64()?;
    let sigma2 = dec.vec()?;
    let v = dec.matrix()?;
    if v.cols() != n {
        return Err(Error::Format(format!("basis declares N = {n} but stores {} columns", v.cols())));
    }
    Ok(PodBasis {
        v,
        sigma2,
        n,
        domain_volume,
    })
}

pub fn write_basis(path: &Path, b: &PodBasis) -> Result<()> {
    let mut enc = Encoder::new(BufWriter::new(File::create(path)?));
    enc.bytes(BASIS_MAGIC)?;
    put_basis(&mut enc, b)?;
    enc.into_inner().flush()?;
    Ok(())
}

pub fn read_basis(path: &Path) -> Result<PodBasis> {
    let mut dec = Decoder::new(BufReader::new(File::open(path)?));
    expect_magic(&mut dec, BASIS_MAGIC, "basis")?;
    let b = get_basis(&mut dec)?;
    dec.finish()?;
    Ok(b)
}

fn put_scaler<W: Write>(enc: &mut Encoder<W>, s: &MinMaxScaler) -> Result<()> {
    enc.vec(&s.min)?;
    enc.vec(&s.scale)
}

fn get_scaler<R: Read>(dec: &mut Decoder<R>) -> Result<MinMaxScaler> {
    let min = dec.vec()?;
    let scale = dec.vec()?;
    if min.len() != scale.len() {
        return Err(Error::Format("scaler vectors differ in length".into()));
    }
    Ok(MinMaxScaler { min, scale })
}

fn put_network<W: Write>(enc: &mut Encoder<W>, net: &Network) -> Result<()> {
    enc.f64(net.alpha)?;
    enc.usize(net.layers.len())?;
    for layer in &net.layers {
        match layer {
            Layer::Dense(d) => {
                enc.bytes(&[0])?;
                enc.usize(d.n_in)?;
                enc.usize(d.n_out)?;
                enc.bool(d.activated)?;
                enc.f64s(&d.w)?;
                enc.f64s(&d.b)?;
            }
            Layer::Residual(r) => {
                enc.bytes(&[1])?;
                enc.usize(r.n)?;
                enc.usize(r.k)?;
                enc.f64s(&r.w0)?;
                enc.f64s(&r.w1)?;
                enc.f64s(&r.b)?;
            }
        }
    }
    Ok(())
}

fn get_network<R: Read>(dec: &mut Decoder<R>) -> Result<Network> {
    let alpha = dec.f64()?;
    let count = dec.len(1 << 16)?;
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let tag = dec.bytes(1)?[0];
        let layer = match tag {
            0 => {
                let n_in = dec.len(1 << 24)?;
                let n_out = dec.len(1 << 24)?;
                let activated = dec.bool()?;
                let w = dec.f64s(n_in * n_out)?;
                let b = dec.f64s(n_out)?;
                Layer::Dense(DenseLayer::new(w, b, n_in, n_out, activated)?)
            }
            1 => {
                let n = dec.len(1 << 24)?;
                let k = dec.len(1 << 24)?;
                let w0 = dec.f64s(k * n)?;
                let w1 = dec.f64s(n * k)?;
                let b = dec.f64s(k)?;
                Layer::Residual(ResidualLayer::new(w0, w1, b, n, k)?)
            }
            t => return Err(Error::Format(format!("unknown layer tag {t}"))),
        };
        layers.push(layer);
    }
    Network::new(layers, alpha)
}

fn put_head<W: Write>(enc: &mut Encoder<W>, h: &RomHead) -> Result<()> {
    put_basis(enc, &h.basis)?;
    put_scaler(enc, &h.input_scaler)?;
    put_scaler(enc, &h.coeff_scaler)?;
    enc.usize(h.domain.bounds.len())?;
    for &(lo, hi) in &h.domain.bounds {
        enc.f64(lo)?;
        enc.f64(hi)?;
    }
    enc.bool(h.domain.final_time.is_some())?;
    enc.f64(h.domain.final_time.unwrap_or(0.0))
}

fn get_head<R: Read>(dec: &mut Decoder<R>) -> Result<RomHead> {
    let basis = get_basis(dec)?;
    let input_scaler = get_scaler(dec)?;
    let coeff_scaler = get_scaler(dec)?;
    let p = dec.len(1 << 16)?;
    let bounds = (0..p).map(|_| Ok((dec.f64()?, dec.f64()?))).collect::<Result<Vec<_>>>()?;
    let has_time = dec.bool()?;
    let t = dec.f64()?;
    Ok(RomHead {
        basis,
        input_scaler,
        coeff_scaler,
        domain: InputDomain {
            bounds,
            final_time: has_time.then_some(t),
        },
    })
}

/// A trained model with the configuration that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub model: RomModel,
    pub train: TrainConfig,
    pub arch: ArchConfig,
}

pub fn encode_model<W: Write>(mf: &ModelFile, out: W) -> Result<W> {
    let mut enc = Encoder::new(out);
    enc.bytes(MODEL_MAGIC)?;
    enc.u32(MODEL_VERSION)?;
    enc.string(mf.model.family().tag())?;
    put_head(&mut enc, mf.model.head())?;
    match &mf.model {
        RomModel::PodDlRom(m) => {
            put_network(&mut enc, &m.phi)?;
            put_network(&mut enc, &m.psi)?;
            put_network(&mut enc, &m.encoder)?;
        }
        RomModel::PodDnn(m) => put_network(&mut enc, &m.net)?,
        RomModel::LinResNet(m) => put_network(&mut enc, &m.net)?,
    }
    let cfg = toml::to_string(&mf.train).map_err(|e| Error::Format(e.to_string()))?;
    enc.string(&cfg)?;
    let arch = toml::to_string(&mf.arch).map_err(|e| Error::Format(e.to_string()))?;
    enc.string(&arch)?;
    Ok(enc.into_inner())
}

pub fn decode_model<R: Read>(input: R) -> Result<ModelFile> {
    let mut dec = Decoder::new(input);
    expect_magic(&mut dec, MODEL_MAGIC, "model")?;
    let version = dec.u32()?;
    if version != MODEL_VERSION {
        return Err(Error::Format(format!("unsupported model file version {version}")));
    }
    let family: Family = dec.string()?.parse()?;
    let head = get_head(&mut dec)?;
    let model = match family {
        Family::PodDlRom => RomModel::PodDlRom(PodDlRomModel {
            head,
            phi: get_network(&mut dec)?,
            psi: get_network(&mut dec)?,
            encoder: get_network(&mut dec)?,
        }),
        Family::PodDnn => RomModel::PodDnn(PodDnnModel {
            head,
            net: get_network(&mut dec)?,
        }),
        Family::LinResnet => RomModel::LinResNet(LinResNetModel {
            head,
            net: get_network(&mut dec)?,
        }),
    };
    let train = toml::from_str(&dec.string()?).map_err(|e| Error::Format(e.to_string()))?;
    let arch = toml::from_str(&dec.string()?).map_err(|e| Error::Format(e.to_string()))?;
    dec.finish()?;
    Ok(ModelFile { model, train, arch })
}

pub fn write_model(path: &Path, mf: &ModelFile) -> Result<()> {
    let w = encode_model(mf, BufWriter::new(File::create(path)?))?;
    w.into_inner().map_err(|e| Error::Io(e.into_error()))?.sync_all()?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    decode_model(BufReader::new(File::open(path)?))
}
