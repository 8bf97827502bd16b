//! File formats, scene loading, mission runners and reports for the `qgnbv`
//! command line tool.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use qgnbv_core::scene::{generate_scene, SceneError, SceneKind};
use qgnbv_core::voxelize::voxelize;
use qgnbv_core::GroundTruthScene;
use thiserror::Error;

pub mod mesh;
pub mod output;
pub mod runner;
pub mod spec;
pub mod tsdf_dump;
pub mod voxgrid;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad magic, expected {expected}")]
    Magic { expected: &'static str },
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error("malformed header: {0}")]
    Header(&'static str),
    #[error("truncated {0}")]
    Truncated(&'static str),
    #[error("payload is {found} bytes, expected {expected}")]
    Payload { expected: usize, found: usize },
    #[error("mesh line {line}: {msg}")]
    Mesh { line: usize, msg: &'static str },
    #[error("unrecognized scene file extension: {0}")]
    Extension(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

/// Where a scene comes from: a procedural generator or a file.
#[derive(Clone, Debug, PartialEq)]
pub enum SceneSource {
    Builtin(SceneKind),
    File(PathBuf),
}

impl SceneSource {
    pub fn parse(s: &str) -> Self {
        match s {
            "room" => SceneSource::Builtin(SceneKind::room()),
            "corridor-t" => SceneSource::Builtin(SceneKind::corridor_t()),
            "scattered-objects" => SceneSource::Builtin(SceneKind::scattered_objects()),
            _ => SceneSource::File(PathBuf::from(s)),
        }
    }

    /// Short label used in output directory names.
    pub fn label(&self) -> String {
        match self {
            SceneSource::Builtin(k) => k.name().to_string(),
            SceneSource::File(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scene".to_string()),
        }
    }

    /// `voxel_size` applies to generated and mesh scenes; voxel grid files
    /// carry their own.
    pub fn load(&self, voxel_size: f64) -> Result<GroundTruthScene, FormatError> {
        match self {
            SceneSource::Builtin(kind) => Ok(generate_scene(kind, voxel_size)?),
            SceneSource::File(path) => load_scene_file(path, voxel_size),
        }
    }
}

pub fn load_scene_file(path: &Path, voxel_size: f64) -> Result<GroundTruthScene, FormatError> {
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "voxg" | "voxgrid" => {
            let grid = voxgrid::read_voxgrid(BufReader::new(File::open(path)?))?;
            Ok(GroundTruthScene::new(grid))
        }
        "obj" | "stl" => {
            let text = std::fs::read_to_string(path)?;
            let tris = if ext == "obj" {
                mesh::parse_obj(&text)?
            } else {
                mesh::parse_stl(&text)?
            };
            if tris.is_empty() {
                log::warn!("{}: mesh has no triangles", path.display());
            }
            Ok(GroundTruthScene::new(voxelize(&tris, voxel_size)?))
        }
        _ => Err(FormatError::Extension(path.display().to_string())),
    }
}
