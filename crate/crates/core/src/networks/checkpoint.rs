//! `PNET` checkpoints: magic `PNET`, little-endian `u32` version (1),
//! `u32` entry count, then per entry a `u32` name length, the UTF-8 name,
//! a `u32` rank and that many `u32` extents; after the manifest, every
//! entry's values as little-endian `f32` in manifest order.

use std::io::{Read, Write};
use std::path::Path;

use crate::diffcore::NdArray;
use crate::error::{Error, Result};

use super::{Architecture, Networks, Param, ParamStore};

pub const MAGIC: &[u8; 4] = b"PNET";
pub const VERSION: u32 = 1;

const MAX_ENTRIES: u32 = 4096;
const MAX_NAME: u32 = 256;
const MAX_RANK: u32 = 8;

pub fn write<W: Write>(mut w: W, nets: &Networks<f32>) -> std::io::Result<()> {
    let params = nets.params();
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for p in params.iter() {
        buf.extend_from_slice(&(p.name.len() as u32).to_le_bytes());
        buf.extend_from_slice(p.name.as_bytes());
        buf.extend_from_slice(&(p.value.dims().len() as u32).to_le_bytes());
        for &d in p.value.dims() {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
    }
    for p in params.iter() {
        for v in p.value.as_slice() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf)
}

fn read_u32<R: Read>(r: &mut R, path: &Path) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|e| Error::io(path, e))?;
    Ok(u32::from_le_bytes(b))
}

pub fn read<R: Read>(mut r: R, path: &Path) -> Result<Networks<f32>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
    if &magic != MAGIC {
        return Err(Error::format(path, format!("bad magic {magic:?}")));
    }
    let version = read_u32(&mut r, path)?;
    if version != VERSION {
        return Err(Error::format(path, format!("unsupported version {version}")));
    }
    let count = read_u32(&mut r, path)?;
    if count > MAX_ENTRIES {
        return Err(Error::format(path, format!("{count} entries")));
    }
    let mut manifest = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let len = read_u32(&mut r, path)?;
        if len == 0 || len > MAX_NAME {
            return Err(Error::format(path, "bad entry name length"));
        }
        let mut name = vec![0u8; len as usize];
        r.read_exact(&mut name).map_err(|e| Error::io(path, e))?;
        let name = String::from_utf8(name).map_err(|_| Error::format(path, "entry name is not UTF-8"))?;
        let rank = read_u32(&mut r, path)?;
        if rank == 0 || rank > MAX_RANK {
            return Err(Error::format(path, format!("entry {name} has rank {rank}")));
        }
        let dims = (0..rank)
            .map(|_| read_u32(&mut r, path).map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        manifest.push((name, dims));
    }
    let arch = Architecture::infer(&manifest).map_err(|e| Error::format(path, e.to_string()))?;
    let mut params = Vec::with_capacity(manifest.len());
    for (name, dims) in manifest {
        let n: usize = dims.iter().product();
        let mut raw = vec![0u8; n * 4];
        r.read_exact(&mut raw).map_err(|e| Error::io(path, e))?;
        let values: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        params.push(Param {
            name,
            value: std::sync::Arc::new(NdArray::new(dims, values)?),
        });
    }
    Networks::from_params(arch, ParamStore::from_params(params))
}

pub fn save(path: &Path, nets: &Networks<f32>) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write(std::io::BufWriter::new(f), nets).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<Networks<f32>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read(std::io::BufReader::new(f), path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::ImageFormation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> Networks<f32> {
        let arch = Architecture::desk(ImageFormation::EA_COMPOSITE, 32);
        Networks::init(arch, &mut ChaCha8Rng::seed_from_u64(3)).unwrap()
    }

    #[test]
    fn round_trip_is_bitwise() {
        let nets = sample();
        let mut buf = Vec::new();
        write(&mut buf, &nets).unwrap();
        let back = read(&buf[..], Path::new("mem")).unwrap();
        assert_eq!(back.architecture(), nets.architecture());
        for (a, b) in nets.params().iter().zip(back.params().iter()) {
            assert_eq!(a.name, b.name);
            let bits = |p: &Param<f32>| p.value.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(a), bits(b));
        }
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let mut buf = Vec::new();
        write(&mut buf, &sample()).unwrap();
        let p = Path::new("mem");
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read(&bad[..], p), Err(Error::Format { .. })));
        let mut bad = buf.clone();
        bad[4] = 2;
        assert!(matches!(read(&bad[..], p), Err(Error::Format { .. })));
        assert!(matches!(read(&buf[..buf.len() - 1], p), Err(Error::Io { .. })));
    }

    #[test]
    fn save_and_load_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pnet");
        let nets = sample();
        save(&path, &nets).unwrap();
        assert_eq!(load(&path).unwrap(), nets);
        assert!(matches!(load(&dir.path().join("missing")), Err(Error::Io { .. })));
    }
}
