//! Flat binary dump of observed TSDF voxels.
//!
//! Header (16 bytes, little-endian): magic `TSDF`, `u32` version, `f32` voxel
//! size, `u32` record count. Each record is `i32` x, y, z, `f32` distance,
//! `f32` weight, in key order.

use std::io::{Read, Write};

use qgnbv_core::{TsdfVoxel, VoxelKey, VoxelMap};

use crate::FormatError;

pub const MAGIC: [u8; 4] = *b"TSDF";
pub const VERSION: u32 = 1;
pub const RECORD_LEN: usize = 20;

pub fn write_tsdf<W: Write>(mut w: W, map: &VoxelMap) -> Result<(), FormatError> {
    let records: Vec<(VoxelKey, TsdfVoxel)> = map.observed().collect();
    let mut buf = Vec::with_capacity(16 + records.len() * RECORD_LEN);
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(map.config().voxel_size as f32).to_le_bytes());
    buf.extend_from_slice(&(records.len() as u32).to_le_bytes());
    for (k, v) in &records {
        buf.extend_from_slice(&k.x.to_le_bytes());
        buf.extend_from_slice(&k.y.to_le_bytes());
        buf.extend_from_slice(&k.z.to_le_bytes());
        buf.extend_from_slice(&(v.distance as f32).to_le_bytes());
        buf.extend_from_slice(&(v.weight as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TsdfDump {
    pub voxel_size: f32,
    pub records: Vec<(VoxelKey, f32, f32)>,
}

pub fn read_tsdf<R: Read>(mut r: R) -> Result<TsdfDump, FormatError> {
    let mut b = Vec::new();
    r.read_to_end(&mut b)?;
    if b.len() < 16 {
        return Err(FormatError::Truncated("tsdf header"));
    }
    if b[0..4] != MAGIC {
        return Err(FormatError::Magic { expected: "TSDF" });
    }
    let word = |o: usize| [b[o], b[o + 1], b[o + 2], b[o + 3]];
    let version = u32::from_le_bytes(word(4));
    if version != VERSION {
        return Err(FormatError::Version(version));
    }
    let voxel_size = f32::from_le_bytes(word(8));
    let count = u32::from_le_bytes(word(12)) as usize;
    if b.len() != 16 + count * RECORD_LEN {
        return Err(FormatError::Payload {
            expected: count * RECORD_LEN,
            found: b.len() - 16,
        });
    }
    let records = (0..count)
        .map(|i| {
            let o = 16 + i * RECORD_LEN;
            (
                VoxelKey::new(
                    i32::from_le_bytes(word(o)),
                    i32::from_le_bytes(word(o + 4)),
                    i32::from_le_bytes(word(o + 8)),
                ),
                f32::from_le_bytes(word(o + 12)),
                f32::from_le_bytes(word(o + 16)),
            )
        })
        .collect();
    Ok(TsdfDump { voxel_size, records })
}
