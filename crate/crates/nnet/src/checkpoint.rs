//! Versioned binary checkpoint: magic, schema version, JSON-encoded
//! config, then the named tensors with shapes and little-endian f64 data.

use crate::model::Tensor;
use crate::{ModelParams, NetConfig, NnetError};
use std::io::{Read, Write};
use std::path::Path;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"RDNT";

pub fn save_params(params: &ModelParams, path: &Path) -> Result<(), NnetError> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&params.version.to_le_bytes());
    let config =
        serde_json::to_vec(&params.config).map_err(|e| NnetError::BadCheckpoint(e.to_string()))?;
    buf.extend_from_slice(&(config.len() as u32).to_le_bytes());
    buf.extend_from_slice(&config);
    buf.extend_from_slice(&(params.tensors.len() as u32).to_le_bytes());
    for t in &params.tensors {
        buf.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
        buf.extend_from_slice(t.name.as_bytes());
        buf.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
        for &d in &t.shape {
            buf.extend_from_slice(&(d as u64).to_le_bytes());
        }
        buf.extend_from_slice(&(t.data.len() as u64).to_le_bytes());
        for &v in &t.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    // Atomic publish: write beside the target, then rename.
    let tmp = path.with_extension("tmp");
    let mut file = std::fs::File::create(&tmp)?;
    file.write_all(&buf)?;
    file.sync_all()?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NnetError> {
        if self.pos + n > self.buf.len() {
            return Err(NnetError::BadCheckpoint("truncated file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, NnetError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, NnetError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn load_params(path: &Path) -> Result<ModelParams, NnetError> {
    let mut raw = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut raw)?;
    let mut r = Reader { buf: &raw, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(NnetError::BadCheckpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(NnetError::VersionMismatch {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let params_version = r.u64()?;
    let config_len = r.u32()? as usize;
    let config: NetConfig = serde_json::from_slice(r.take(config_len)?)
        .map_err(|e| NnetError::BadCheckpoint(e.to_string()))?;
    let n_tensors = r.u32()? as usize;
    let mut tensors = Vec::with_capacity(n_tensors);
    for _ in 0..n_tensors {
        let name_len = r.u32()? as usize;
        let name = String::from_utf8(r.take(name_len)?.to_vec())
            .map_err(|e| NnetError::BadCheckpoint(e.to_string()))?;
        let ndim = r.u32()? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.u64()? as usize);
        }
        let len = r.u64()? as usize;
        if shape.iter().product::<usize>() != len {
            return Err(NnetError::BadCheckpoint(format!(
                "tensor {name}: shape does not match data length"
            )));
        }
        let bytes = r.take(len * 8)?;
        let data: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(NnetError::BadCheckpoint(format!(
                "tensor {name}: non-finite values"
            )));
        }
        tensors.push(Tensor { name, shape, data });
    }
    Ok(ModelParams {
        config,
        version: params_version,
        tensors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_forward() {
        let config = NetConfig {
            input_planes: 3,
            height: 4,
            width: 4,
            conv_layers: 2,
            channels: 4,
            action_space: 8,
        };
        let params = ModelParams::init(config, 31);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        save_params(&params, &path).unwrap();
        let loaded = load_params(&path).unwrap();
        assert_eq!(loaded, params);

        let input: Vec<f64> = (0..config.input_len()).map(|i| (i % 2) as f64).collect();
        let mask = vec![true; 8];
        assert_eq!(
            params.forward(&input, &mask).unwrap(),
            loaded.forward(&input, &mask).unwrap()
        );
    }

    #[test]
    fn version_mismatch_detected() {
        let config = NetConfig {
            input_planes: 1,
            height: 2,
            width: 2,
            conv_layers: 1,
            channels: 1,
            action_space: 2,
        };
        let params = ModelParams::init(config, 0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        save_params(&params, &path).unwrap();
        let mut raw = std::fs::read(&path).unwrap();
        raw[4] = 99;
        std::fs::write(&path, raw).unwrap();
        assert!(matches!(
            load_params(&path),
            Err(NnetError::VersionMismatch { .. })
        ));
    }
}
