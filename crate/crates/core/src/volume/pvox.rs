//! `PVOX` binary voxel format: magic `PVOX`, little-endian `u32` version
//! (1), `u32` channel count, `u32` resolution, then `n_c * n_p^3`
//! little-endian `f32` values in channel-major z, y, x order.

use std::io::{Read, Write};

use crate::error::{Error, Result};

use super::VoxelGrid;

pub const MAGIC: &[u8; 4] = b"PVOX";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;

/// Largest accepted resolution; guards allocations against hostile headers.
const MAX_RESOLUTION: u32 = 1024;
const MAX_CHANNELS: u32 = 64;

pub fn write<W: Write>(mut w: W, grid: &VoxelGrid<f32>) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(HEADER_LEN + grid.values().len() * 4);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(grid.channels() as u32).to_le_bytes());
    buf.extend_from_slice(&(grid.resolution() as u32).to_le_bytes());
    for v in grid.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

/// Header fields after validation: `(channels, resolution)`.
pub fn read_header(header: &[u8; HEADER_LEN]) -> std::result::Result<(usize, usize), String> {
    if &header[..4] != MAGIC {
        return Err(format!("bad magic {:?}", &header[..4]));
    }
    let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
    let version = word(4);
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let (channels, res) = (word(8), word(12));
    if channels == 0 || channels > MAX_CHANNELS || res == 0 || res > MAX_RESOLUTION {
        return Err(format!("implausible dims n_c={channels} n_p={res}"));
    }
    Ok((channels as usize, res as usize))
}

/// Reads one grid; `path` only labels errors.
pub fn read<R: Read>(mut r: R, path: &std::path::Path) -> Result<VoxelGrid<f32>> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header).map_err(|e| Error::io(path, e))?;
    let (channels, res) = read_header(&header).map_err(|m| Error::format(path, m))?;
    let count = channels * res * res * res;
    let mut payload = vec![0u8; count * 4];
    r.read_exact(&mut payload).map_err(|e| Error::io(path, e))?;
    let values: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::format(path, "voxel values outside [0, 1]"));
    }
    VoxelGrid::new(channels, res, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    #[test]
    fn payload_length_matches_header() {
        let g = VoxelGrid::<f32>::zeros(1, 4);
        let mut buf = Vec::new();
        write(&mut buf, &g).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + 256);
    }

    #[test]
    fn bad_magic_rejected_before_payload() {
        let mut bytes = b"PVOY".to_vec();
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&4u32.to_le_bytes());
        // no payload at all: a format error proves the header was checked first
        let err = read(&bytes[..], Path::new("x.pvox")).unwrap_err();
        assert!(matches!(err, Error::Format { .. }), "{err}");
    }

    #[test]
    fn truncated_payload_is_io_error() {
        let g = VoxelGrid::<f32>::zeros(1, 4);
        let mut buf = Vec::new();
        write(&mut buf, &g).unwrap();
        buf.truncate(buf.len() - 3);
        let err = read(&buf[..], Path::new("x.pvox")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }), "{err}");
    }

    #[test]
    fn wrong_version_rejected() {
        let g = VoxelGrid::<f32>::zeros(1, 2);
        let mut buf = Vec::new();
        write(&mut buf, &g).unwrap();
        buf[4] = 2;
        assert!(matches!(
            read(&buf[..], Path::new("v.pvox")),
            Err(Error::Format { .. })
        ));
    }
}
