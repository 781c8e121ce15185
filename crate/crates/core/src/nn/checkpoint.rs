//! Binary checkpoint format for parameter sets.
//!
//! Layout: magic `GZSL`, format version (u32 LE), then for each parameter:
//! name length (u32 LE), name bytes (UTF-8), dtype tag (u8, 0 = f32),
//! rank (u8), dims (u32 LE each), payload (f32 LE). Parameters are read
//! until end of file. Round trips are bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::model::ParamSet;
use super::tensor::Tensor;
use super::NnError;

pub const MAGIC: &[u8; 4] = b"GZSL";
pub const VERSION: u32 = 1;
const DTYPE_F32: u8 = 0;

pub fn save_checkpoint(path: &Path, params: &ParamSet) -> Result<(), NnError> {
    let file = File::create(path).map_err(|e| NnError::Checkpoint(format!("create {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    let mut out = || -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        for (name, t) in params.iter() {
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            w.write_all(&[DTYPE_F32])?;
            w.write_all(&[t.shape.len() as u8])?;
            for d in &t.shape {
                w.write_all(&(*d as u32).to_le_bytes())?;
            }
            for v in &t.data {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()
    };
    out().map_err(|e| NnError::Checkpoint(format!("write {}: {e}", path.display())))
}

pub fn load_checkpoint(path: &Path) -> Result<ParamSet, NnError> {
    let file = File::open(path).map_err(|e| NnError::Checkpoint(format!("open {}: {e}", path.display())))?;
    let mut r = BufReader::new(file);
    let bad = |msg: &str| NnError::Checkpoint(format!("{}: {msg}", path.display()));

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| bad("truncated magic"))?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let mut ver = [0u8; 4];
    r.read_exact(&mut ver).map_err(|_| bad("truncated version"))?;
    if u32::from_le_bytes(ver) != VERSION {
        return Err(bad(&format!("unsupported version {}", u32::from_le_bytes(ver))));
    }

    let mut params = ParamSet::new();
    loop {
        let mut len4 = [0u8; 4];
        match r.read_exact(&mut len4) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(bad(&format!("name length: {e}"))),
        }
        let name_len = u32::from_le_bytes(len4) as usize;
        let mut name_buf = vec![0u8; name_len];
        r.read_exact(&mut name_buf).map_err(|_| bad("truncated name"))?;
        let name = String::from_utf8(name_buf).map_err(|_| bad("non-utf8 name"))?;
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag).map_err(|_| bad("truncated dtype"))?;
        if tag[0] != DTYPE_F32 {
            return Err(bad(&format!("unsupported dtype tag {}", tag[0])));
        }
        let mut rank = [0u8; 1];
        r.read_exact(&mut rank).map_err(|_| bad("truncated rank"))?;
        let mut shape = Vec::with_capacity(rank[0] as usize);
        for _ in 0..rank[0] {
            let mut d = [0u8; 4];
            r.read_exact(&mut d).map_err(|_| bad("truncated dims"))?;
            shape.push(u32::from_le_bytes(d) as usize);
        }
        let n: usize = shape.iter().product();
        let mut payload = vec![0u8; n * 4];
        r.read_exact(&mut payload).map_err(|_| bad("truncated payload"))?;
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect::<Vec<_>>();
        params.insert(name, Tensor::new(shape, data).map_err(|e| bad(&e.to_string()))?);
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::model::{init_encoder, EncoderConfig};

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let params = init_encoder(&EncoderConfig::default(), 42);
        let path = dir.path().join("enc.ckpt");
        save_checkpoint(&path, &params).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(params.content_hash(), back.content_hash());
        assert_eq!(params, back);
    }

    #[test]
    fn rejects_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.ckpt");
        std::fs::write(&path, b"NOPE0000").unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}
