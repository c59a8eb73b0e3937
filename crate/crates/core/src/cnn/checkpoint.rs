use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::Model;
use super::spec::ArchitectureSpec;
use crate::error::{Error, Result};

const FORMAT: &str = "coreset-cnn-checkpoint";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Checkpoint {
    format: String,
    version: u32,
    spec: ArchitectureSpec,
    seed: u64,
    params: Vec<f64>,
}

/// Writes a JSON checkpoint. Floats use shortest round-trip formatting, so
/// loading reproduces every parameter bit-for-bit.
pub fn save_checkpoint(model: &Model, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let ck = Checkpoint {
        format: FORMAT.into(),
        version: VERSION,
        spec: model.spec().clone(),
        seed: model.seed(),
        params: model.params().to_vec(),
    };
    serde_json::to_writer(&mut out, &ck)?;
    writeln!(out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Model> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let ck: Checkpoint = serde_json::from_reader(BufReader::new(file))?;
    if ck.format != FORMAT {
        return Err(Error::Config(format!("{}: not a model checkpoint", path.display())));
    }
    if ck.version != VERSION {
        return Err(Error::Config(format!(
            "{}: unsupported checkpoint version {}",
            path.display(),
            ck.version
        )));
    }
    Model::from_parts(ck.spec, ck.seed, ck.params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::{build_model, ArchitectureConfig};

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let spec = ArchitectureConfig::a()
            .with_widths(&[3, 3, 4, 4, 5, 5, 6, 6, 7, 7])
            .build(80, 4)
            .unwrap();
        let model = build_model(&spec, 11).unwrap();
        save_checkpoint(&model, &path).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back, model);
        let input: Vec<f64> = (0..80).map(|i| (i as f64 * 0.37).cos()).collect();
        let a = model.forward(&input).unwrap();
        let b = back.forward(&input).unwrap();
        for (x, y) in a.probabilities.iter().zip(&b.probabilities) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn rejects_foreign_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        std::fs::write(&path, r#"{"hello": 1}"#).unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}
