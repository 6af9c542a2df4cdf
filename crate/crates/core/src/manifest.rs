//! JSONL dataset manifests: one record per paired sample, paths relative to
//! the manifest's directory.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_label_png, read_mask_png};
use crate::labelmap::PairedSample;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    pub dynamic_png: String,
    pub static_png: String,
    pub mask_png: String,
    pub dyn_pixels: u64,
    pub seed: u64,
}

/// A parsed manifest together with the directory its paths are relative to.
#[derive(Clone, Debug)]
pub struct Manifest {
    pub base_dir: PathBuf,
    pub records: Vec<ManifestRecord>,
}

impl Manifest {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut records = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(&line)?);
        }
        let base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Self { base_dir, records })
    }

    pub fn resolve(&self, relative: &str) -> PathBuf {
        self.base_dir.join(relative)
    }

    pub fn load_sample(&self, record: &ManifestRecord) -> Result<PairedSample> {
        let dynamic_frame = read_label_png(self.resolve(&record.dynamic_png))?;
        let static_frame = read_label_png(self.resolve(&record.static_png))?;
        let mask = read_mask_png(self.resolve(&record.mask_png))?;
        PairedSample::new(record.id.clone(), dynamic_frame, static_frame, mask)
    }
}

/// Writes records in the given order, one JSON object per line.
pub fn write_manifest(path: impl AsRef<Path>, records: &[ManifestRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let records = vec![ManifestRecord {
            id: "000001".into(),
            dynamic_png: "dynamic/000001.png".into(),
            static_png: "static/000001.png".into(),
            mask_png: "mask/000001.png".into(),
            dyn_pixels: 5012,
            seed: 99,
        }];
        let p = dir.path().join("manifest.jsonl");
        write_manifest(&p, &records).unwrap();
        let m = Manifest::read(&p).unwrap();
        assert_eq!(m.records, records);
        assert_eq!(m.resolve("mask/x.png"), dir.path().join("mask/x.png"));
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with(r#"{"id":"000001","dynamic_png":"#));
    }
}
