//! Checkpoint files.
//!
//! Layout: the 6-byte magic `PFCNN1`, a little-endian `u64` header length,
//! the header as compact JSON, then every parameter tensor in declaration
//! order as little-endian `f32`. When optimizer state is saved, all first
//! moments follow, then all second moments, in the same order.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::config::CnnConfig;
use super::model::{param_lens, CnnParams, PARAM_NAMES};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 6] = b"PFCNN1";
const FORMAT: u32 = 1;
const MAX_HEADER: u64 = 1 << 20;

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    len: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: u32,
    config: CnnConfig,
    tensors: Vec<TensorEntry>,
    /// Adam step counter when moments are stored.
    adam_step: Option<u64>,
}

pub struct Checkpoint {
    pub config: CnnConfig,
    pub params: CnnParams<f32>,
    pub adam: Option<AdamState<f32>>,
}

fn write_tensors<W: Write>(w: &mut W, params: &CnnParams<f32>) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(1 << 16);
    for tensor in params.tensors() {
        for chunk in tensor.chunks(1 << 14) {
            buf.clear();
            for v in chunk {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
    }
    Ok(())
}

pub fn save_checkpoint(
    path: &Path,
    params: &CnnParams<f32>,
    config: &CnnConfig,
    adam: Option<&AdamState<f32>>,
) -> Result<()> {
    if !params.matches(config) {
        return Err(Error::ShapeMismatch(
            "parameters do not match the configuration".into(),
        ));
    }
    let header = Header {
        format: FORMAT,
        config: config.clone(),
        tensors: PARAM_NAMES
            .iter()
            .zip(params.tensors())
            .map(|(name, t)| TensorEntry {
                name: (*name).to_owned(),
                len: t.len(),
            })
            .collect(),
        adam_step: adam.map(|a| a.t),
    };
    let header = serde_json::to_vec(&header)?;
    let io = |e| Error::io(path, e);
    let file = std::fs::File::create(path).map_err(io)?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC).map_err(io)?;
    w.write_all(&(header.len() as u64).to_le_bytes())
        .map_err(io)?;
    w.write_all(&header).map_err(io)?;
    write_tensors(&mut w, params).map_err(io)?;
    if let Some(state) = adam {
        write_tensors(&mut w, &state.m).map_err(io)?;
        write_tensors(&mut w, &state.v).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn read_tensors<R: Read>(r: &mut R, cfg: &CnnConfig) -> Result<CnnParams<f32>> {
    let mut params = CnnParams::zeros(cfg);
    let mut buf = vec![0u8; 4 << 14];
    for tensor in params.tensors_mut() {
        for chunk in tensor.chunks_mut(1 << 14) {
            let bytes = &mut buf[..chunk.len() * 4];
            r.read_exact(bytes)
                .map_err(|_| Error::FormatVersionMismatch("truncated tensor data".into()))?;
            for (v, b) in chunk.iter_mut().zip(bytes.chunks_exact(4)) {
                *v = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
            }
        }
    }
    Ok(params)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mismatch = |m: &str| Error::FormatVersionMismatch(m.to_owned());

    let mut magic = [0u8; 6];
    r.read_exact(&mut magic)
        .map_err(|_| mismatch("file too short"))?;
    if &magic != MAGIC {
        return Err(mismatch("bad magic"));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)
        .map_err(|_| mismatch("missing header length"))?;
    let len = u64::from_le_bytes(len);
    if len > MAX_HEADER {
        return Err(mismatch("header length out of range"));
    }
    let mut header = vec![0u8; len as usize];
    r.read_exact(&mut header)
        .map_err(|_| mismatch("truncated header"))?;
    let header: Header = serde_json::from_slice(&header)
        .map_err(|e| Error::FormatVersionMismatch(format!("unreadable header: {e}")))?;
    if header.format != FORMAT {
        return Err(Error::FormatVersionMismatch(format!(
            "format {} (expected {FORMAT})",
            header.format
        )));
    }
    let cfg = header.config;
    cfg.validate()
        .map_err(|e| Error::FormatVersionMismatch(e.to_string()))?;
    let expected: Vec<(&str, usize)> = PARAM_NAMES.iter().copied().zip(param_lens(&cfg)).collect();
    let found: Vec<(&str, usize)> = header
        .tensors
        .iter()
        .map(|t| (t.name.as_str(), t.len))
        .collect();
    if expected != found {
        return Err(mismatch("tensor table does not match the configuration"));
    }

    let params = read_tensors(&mut r, &cfg)?;
    let adam = match header.adam_step {
        Some(t) => {
            let m = read_tensors(&mut r, &cfg)?;
            let v = read_tensors(&mut r, &cfg)?;
            Some(AdamState { m, v, t })
        }
        None => None,
    };
    let mut probe = [0u8; 1];
    if r.read(&mut probe).map_err(|e| Error::io(path, e))? != 0 {
        return Err(mismatch("trailing bytes after tensor data"));
    }
    Ok(Checkpoint {
        config: cfg,
        params,
        adam,
    })
}

/// Loads a checkpoint and requires its architecture to match `expected`.
pub fn load_checkpoint_for(path: &Path, expected: &CnnConfig) -> Result<Checkpoint> {
    let ck = load_checkpoint(path)?;
    if !ck.config.same_architecture(expected) {
        return Err(Error::FormatVersionMismatch(format!(
            "checkpoint architecture differs (fc1_units {} vs {})",
            ck.config.fc1_units, expected.fc1_units
        )));
    }
    Ok(ck)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> CnnConfig {
        CnnConfig {
            input_height: 8,
            input_width: 8,
            conv1_filters: 2,
            conv2_filters: 3,
            fc1_units: 5,
            ..CnnConfig::default()
        }
    }

    fn bits(p: &CnnParams<f32>) -> Vec<u32> {
        p.tensors()
            .iter()
            .flat_map(|t| t.iter().map(|v| v.to_bits()))
            .collect()
    }

    #[test]
    fn round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = CnnParams::<f32>::init(&cfg, &mut rng);
        let mut adam = AdamState::new(&cfg);
        adam.t = 3;
        adam.m.fc1_w[0] = f32::MIN_POSITIVE;
        adam.v.conv1_b[1] = -0.0;

        let path = dir.path().join("a.ckpt");
        save_checkpoint(&path, &params, &cfg, None).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(bits(&back.params), bits(&params));
        assert_eq!(back.config, cfg);
        assert!(back.adam.is_none());

        let path = dir.path().join("b.ckpt");
        save_checkpoint(&path, &params, &cfg, Some(&adam)).unwrap();
        let back = load_checkpoint(&path).unwrap();
        let state = back.adam.unwrap();
        assert_eq!(state.t, 3);
        assert_eq!(bits(&state.m), bits(&adam.m));
        assert_eq!(bits(&state.v), bits(&adam.v));
    }

    #[test]
    fn truncated_and_foreign_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small();
        let params = CnnParams::<f32>::zeros(&cfg);
        let path = dir.path().join("c.ckpt");
        save_checkpoint(&path, &params, &cfg, None).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        for cut in [0, 3, 10, 40, bytes.len() - 1] {
            let p = dir.path().join(format!("cut{cut}"));
            std::fs::write(&p, &bytes[..cut]).unwrap();
            assert!(
                matches!(load_checkpoint(&p), Err(Error::FormatVersionMismatch(_))),
                "cut {cut}"
            );
        }
        let mut extra = bytes.clone();
        extra.push(0);
        let p = dir.path().join("extra");
        std::fs::write(&p, &extra).unwrap();
        assert!(load_checkpoint(&p).is_err());
        let missing = dir.path().join("missing");
        assert!(matches!(load_checkpoint(&missing), Err(Error::Io { .. })));
    }

    #[test]
    fn architecture_guard() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small();
        let path = dir.path().join("d.ckpt");
        save_checkpoint(&path, &CnnParams::zeros(&cfg), &cfg, None).unwrap();
        let other = CnnConfig {
            fc1_units: 6,
            ..small()
        };
        assert!(matches!(
            load_checkpoint_for(&path, &other),
            Err(Error::FormatVersionMismatch(_))
        ));
        let same = CnnConfig {
            epochs: 99,
            ..small()
        };
        assert!(load_checkpoint_for(&path, &same).is_ok());
    }
}
