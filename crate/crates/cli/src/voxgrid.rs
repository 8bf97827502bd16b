//! Binary occupancy grid files.
//!
//! Layout, little-endian: magic `VOXG`, `u32` version, `u32` dims\[3\],
//! `f32` voxel size, `f32` origin\[3\], then one bit per cell with x varying
//! fastest, least significant bit first.

use std::io::{Read, Write};

use qgnbv_core::scene::OccupancyGrid;
use qgnbv_core::Vec3;

use crate::FormatError;

pub const MAGIC: [u8; 4] = *b"VOXG";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 36;

pub fn write_voxgrid<W: Write>(mut w: W, grid: &OccupancyGrid) -> Result<(), FormatError> {
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(&MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    for d in grid.dims() {
        header.extend_from_slice(&(d as u32).to_le_bytes());
    }
    header.extend_from_slice(&(grid.voxel_size() as f32).to_le_bytes());
    let o = grid.origin();
    for i in 0..3 {
        header.extend_from_slice(&(o[i] as f32).to_le_bytes());
    }
    w.write_all(&header)?;

    let mut bytes = vec![0u8; grid.len().div_ceil(8)];
    for i in 0..grid.len() {
        if grid.get(grid.key_at(i)) {
            bytes[i / 8] |= 1 << (i % 8);
        }
    }
    w.write_all(&bytes)?;
    Ok(())
}

fn u32_at(b: &[u8], off: usize) -> u32 {
    u32::from_le_bytes([b[off], b[off + 1], b[off + 2], b[off + 3]])
}

fn f32_at(b: &[u8], off: usize) -> f32 {
    f32::from_le_bytes([b[off], b[off + 1], b[off + 2], b[off + 3]])
}

pub fn read_voxgrid<R: Read>(mut r: R) -> Result<OccupancyGrid, FormatError> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => FormatError::Truncated("voxgrid header"),
        _ => FormatError::Io(e),
    })?;
    if header[0..4] != MAGIC {
        return Err(FormatError::Magic {
            expected: "VOXG",
        });
    }
    let version = u32_at(&header, 4);
    if version != VERSION {
        return Err(FormatError::Version(version));
    }
    let dims = [
        u32_at(&header, 8) as usize,
        u32_at(&header, 12) as usize,
        u32_at(&header, 16) as usize,
    ];
    let voxel_size = f32_at(&header, 20) as f64;
    let origin = Vec3::new(
        f32_at(&header, 24) as f64,
        f32_at(&header, 28) as f64,
        f32_at(&header, 32) as f64,
    );
    let n = dims[0]
        .checked_mul(dims[1])
        .and_then(|v| v.checked_mul(dims[2]))
        .ok_or(FormatError::Header("dimension product overflows"))?;
    let mut grid = OccupancyGrid::new(dims, voxel_size, origin)?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != n.div_ceil(8) {
        return Err(FormatError::Payload {
            expected: n.div_ceil(8),
            found: bytes.len(),
        });
    }
    for i in 0..n {
        if bytes[i / 8] & (1 << (i % 8)) != 0 {
            grid.set(grid.key_at(i), true);
        }
    }
    Ok(grid)
}
