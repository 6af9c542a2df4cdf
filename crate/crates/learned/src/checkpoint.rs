//! Binary checkpoint container.
//!
//! Layout (little-endian): magic `LISG`, `u32` format version, taxonomy name,
//! `u32` class count, `u32` static class count, `u32` generator width, `u32`
//! discriminator width, `u64` completed steps, `u64` update counters of the
//! two optimizers, `u32` tensor count, then every tensor as name, `u32` rank,
//! `u32` dims and `f32` values. Strings are a `u32` byte length plus UTF-8.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use seminpaint_core::ClassTaxonomy;

use crate::error::{io, Error, Result};
use crate::net::{DiscriminatorParams, GeneratorParams};
use crate::train::Trainer;

pub const MAGIC: &[u8; 4] = b"LISG";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub taxonomy: String,
    pub trainer: Trainer<f32>,
}

struct Tensor {
    name: String,
    dims: Vec<usize>,
    data: Vec<f32>,
}

fn layer_tensors(prefix: &str, specs: &[crate::conv::ConvSpec], params: &[f32], out: &mut Vec<Tensor>) -> usize {
    let mut off = 0;
    for (i, s) in specs.iter().enumerate() {
        let wl = s.weight_len();
        out.push(Tensor {
            name: format!("{prefix}.conv{i}.weight"),
            dims: vec![s.out_channels, s.in_channels, s.kernel, s.kernel],
            data: params[off..off + wl].to_vec(),
        });
        out.push(Tensor {
            name: format!("{prefix}.conv{i}.bias"),
            dims: vec![s.out_channels],
            data: params[off + wl..off + s.param_len()].to_vec(),
        });
        off += s.param_len();
    }
    off
}

impl Checkpoint {
    pub fn new(tax: &ClassTaxonomy, trainer: Trainer<f32>) -> Self {
        Self {
            taxonomy: tax.name().to_string(),
            trainer,
        }
    }

    pub fn generator(&self) -> &GeneratorParams<f32> {
        &self.trainer.generator
    }

    /// Errors unless the checkpoint was trained for `tax`.
    pub fn ensure_taxonomy(&self, tax: &ClassTaxonomy) -> Result<()> {
        let g = self.generator();
        if self.taxonomy != tax.name() || g.num_classes != tax.num_classes() || g.num_static != tax.num_static() {
            return Err(Error::TaxonomyMismatch {
                expected: tax.name().to_string(),
                expected_classes: tax.num_classes(),
                found: self.taxonomy.clone(),
                found_classes: g.num_classes,
            });
        }
        Ok(())
    }

    fn tensors(&self) -> Vec<Tensor> {
        let t = &self.trainer;
        let mut out = Vec::new();
        layer_tensors("generator", &t.generator.specs(), &t.generator.params, &mut out);
        let d = &t.discriminator;
        let off = layer_tensors("discriminator", &d.specs(), &d.params, &mut out);
        let feat = 4 * d.width;
        out.push(Tensor {
            name: "discriminator.head.weight".into(),
            dims: vec![1, feat],
            data: d.params[off..off + feat].to_vec(),
        });
        out.push(Tensor {
            name: "discriminator.head.bias".into(),
            dims: vec![1],
            data: d.params[off + feat..].to_vec(),
        });
        for (name, v) in [
            ("adam.generator.m", &t.gen_opt.m),
            ("adam.generator.v", &t.gen_opt.v),
            ("adam.discriminator.m", &t.disc_opt.m),
            ("adam.discriminator.v", &t.disc_opt.v),
        ] {
            out.push(Tensor {
                name: name.into(),
                dims: vec![v.len()],
                data: v.clone(),
            });
        }
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let t = &self.trainer;
        let mut b = Vec::new();
        let u32le = |b: &mut Vec<u8>, v: usize| b.extend_from_slice(&(v as u32).to_le_bytes());
        let string = |b: &mut Vec<u8>, s: &str| {
            b.extend_from_slice(&(s.len() as u32).to_le_bytes());
            b.extend_from_slice(s.as_bytes());
        };
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        string(&mut b, &self.taxonomy);
        u32le(&mut b, t.generator.num_classes);
        u32le(&mut b, t.generator.num_static);
        u32le(&mut b, t.generator.width);
        u32le(&mut b, t.discriminator.width);
        b.extend_from_slice(&(t.step as u64).to_le_bytes());
        b.extend_from_slice(&t.gen_opt.t.to_le_bytes());
        b.extend_from_slice(&t.disc_opt.t.to_le_bytes());
        let tensors = self.tensors();
        u32le(&mut b, tensors.len());
        for tensor in &tensors {
            string(&mut b, &tensor.name);
            u32le(&mut b, tensor.dims.len());
            for &d in &tensor.dims {
                u32le(&mut b, d);
            }
            for v in &tensor.data {
                b.extend_from_slice(&v.to_le_bytes());
            }
        }
        b
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| io(path, e))?;
        Self::from_bytes(&bytes).map_err(|reason| Error::BadCheckpoint {
            path: path.to_path_buf(),
            reason,
        })
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err("bad magic".into());
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(format!("unsupported format version {version}"));
        }
        let taxonomy = r.string()?;
        let num_classes = r.u32()? as usize;
        let num_static = r.u32()? as usize;
        let gen_width = r.u32()? as usize;
        let disc_width = r.u32()? as usize;
        let step = r.u64()? as usize;
        let gen_t = r.u64()?;
        let disc_t = r.u64()?;
        let count = r.u32()? as usize;
        let mut tensors = BTreeMap::new();
        for _ in 0..count {
            let name = r.string()?;
            let rank = r.u32()? as usize;
            let dims = (0..rank)
                .map(|_| r.u32().map(|d| d as usize))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let len: usize = dims.iter().product();
            let raw = r.take(len.checked_mul(4).ok_or("tensor too large")?)?;
            let data = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            tensors.insert(name, (dims, data));
        }
        if r.pos != bytes.len() {
            return Err("trailing bytes".into());
        }

        if num_classes < 2 || num_static == 0 || num_static >= num_classes || gen_width == 0 || disc_width == 0 {
            return Err("inconsistent network dimensions".into());
        }
        if gen_width > 4096 || disc_width > 4096 || num_classes > 256 {
            return Err("network dimensions out of range".into());
        }
        let mut generator = GeneratorParams::<f32>::zeros(num_classes, num_static, gen_width);
        let mut discriminator = DiscriminatorParams::<f32>::zeros(num_static, disc_width);
        let reference = Checkpoint {
            taxonomy: taxonomy.clone(),
            trainer: Trainer::from_networks(generator.clone(), discriminator.clone()),
        };
        let mut values = Vec::new();
        for expected in reference.tensors() {
            let (dims, data) = tensors
                .remove(&expected.name)
                .ok_or_else(|| format!("missing tensor {}", expected.name))?;
            if dims != expected.dims {
                return Err(format!(
                    "tensor {} has shape {:?}, expected {:?}",
                    expected.name, dims, expected.dims
                ));
            }
            values.push(data);
        }
        if let Some(extra) = tensors.keys().next() {
            return Err(format!("unexpected tensor {extra}"));
        }
        // tensor order: generator layers, discriminator layers and head, optimizer moments
        let gen_tensors = 2 * generator.specs().len();
        let disc_tensors = 2 * discriminator.specs().len() + 2;
        let mut values = values.into_iter();
        generator.params = values.by_ref().take(gen_tensors).flatten().collect();
        discriminator.params = values.by_ref().take(disc_tensors).flatten().collect();
        let mut trainer = Trainer::from_networks(generator, discriminator);
        trainer.gen_opt.m = values.next().expect("tensor order");
        trainer.gen_opt.v = values.next().expect("tensor order");
        trainer.disc_opt.m = values.next().expect("tensor order");
        trainer.disc_opt.v = values.next().expect("tensor order");
        trainer.gen_opt.t = gen_t;
        trainer.disc_opt.t = disc_t;
        trainer.step = step;
        Ok(Self { taxonomy, trainer })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or("truncated")?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        let b = self.take(8)?;
        let mut a = [0u8; 8];
        a.copy_from_slice(b);
        Ok(u64::from_le_bytes(a))
    }

    fn string(&mut self) -> std::result::Result<String, String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| "invalid UTF-8".to_string())
    }
}

/// Path of the JSON sidecar holding the training configuration.
pub fn sidecar_path(checkpoint: &Path) -> PathBuf {
    let mut s = checkpoint.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Path of the per-step loss CSV.
pub fn loss_csv_path(checkpoint: &Path) -> PathBuf {
    let mut s = checkpoint.as_os_str().to_owned();
    s.push(".loss.csv");
    PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::TrainConfig;

    fn sample() -> Checkpoint {
        let tax = ClassTaxonomy::builtin("carla9").unwrap();
        let cfg = TrainConfig {
            generator_width: 4,
            discriminator_width: 2,
            ..TrainConfig::default()
        };
        let mut trainer = Trainer::<f32>::new(&tax, &cfg).unwrap();
        trainer.step = 17;
        trainer.gen_opt.t = 17;
        trainer
            .gen_opt
            .m
            .iter_mut()
            .enumerate()
            .for_each(|(i, v)| *v = i as f32 * 0.5);
        trainer.disc_opt.v[3] = 2.5;
        Checkpoint::new(&tax, trainer)
    }

    #[test]
    fn round_trip() {
        let ck = sample();
        let bytes = ck.to_bytes();
        assert_eq!(&bytes[..4], MAGIC);
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let bytes = sample().to_bytes();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(Checkpoint::from_bytes(&bad).unwrap_err(), "bad magic");
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(Checkpoint::from_bytes(&bad).unwrap_err().contains("version"));
        let mut long = bytes;
        long.push(0);
        assert!(Checkpoint::from_bytes(&long).is_err());
    }

    #[test]
    fn taxonomy_check() {
        let ck = sample();
        assert!(ck.ensure_taxonomy(&ClassTaxonomy::builtin("carla9").unwrap()).is_ok());
        assert!(matches!(
            ck.ensure_taxonomy(&ClassTaxonomy::builtin("cityscapes12").unwrap()),
            Err(Error::TaxonomyMismatch { .. })
        ));
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.lisg");
        let ck = sample();
        ck.save(&path).unwrap();
        assert_eq!(Checkpoint::load(&path).unwrap(), ck);
        assert_eq!(sidecar_path(&path), dir.path().join("m.lisg.json"));
    }
}
