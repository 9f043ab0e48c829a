//! Run-directory layout, snapshot series and the manifest.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use axilab_core::io::{self, Snapshot};
use axilab_core::{ScalarField, Trajectory, VectorFieldCyl};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;

pub const CONFIG_FILE: &str = "config.toml";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";
pub const DIAGNOSTICS_CSV: &str = "diagnostics.csv";
pub const VERIFIER_FILE: &str = "verifier.json";
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub artifact_version: String,
    /// Seconds since the Unix epoch; zero in reproducible mode.
    pub created: u64,
    pub updated: u64,
    /// Paths relative to the run directory, sorted.
    pub files: Vec<String>,
}

pub fn timestamp(reproducible: bool) -> u64 {
    if reproducible {
        return 0;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Tracks the files a command emits below one run directory.
pub struct RunDir {
    root: PathBuf,
    emitted: BTreeSet<String>,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            emitted: BTreeSet::new(),
        })
    }

    /// Opens an existing run directory; a missing directory or config is a missing artifact.
    pub fn open(root: &Path) -> Result<(Self, RunConfig), CliError> {
        let cfg_path = root.join(CONFIG_FILE);
        if !cfg_path.is_file() {
            return Err(CliError::MissingArtifact(format!("{} not found", cfg_path.display())));
        }
        let cfg = RunConfig::load(&cfg_path)?;
        Ok((
            Self {
                root: root.to_path_buf(),
                emitted: BTreeSet::new(),
            },
            cfg,
        ))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn note(&mut self, rel: &str) {
        self.emitted.insert(rel.to_string());
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let p = self.path(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut f = fs::File::create(&p)?;
        f.write_all(bytes)?;
        self.note(rel);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Solver(e.to_string()))?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    pub fn save_snapshot(&mut self, rel: &str, snap: &Snapshot) -> Result<(), CliError> {
        let p = self.path(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        io::save(&p, snap).map_err(CliError::solver)?;
        self.note(rel);
        Ok(())
    }

    /// Writes every snapshot as `<dir>/snap_NNNNN.axns`.
    pub fn save_series<T>(
        &mut self,
        dir: &str,
        traj: &Trajectory<T>,
        to_snap: impl Fn(f64, &T) -> Snapshot,
    ) -> Result<(), CliError> {
        for (k, (t, f)) in traj.times().iter().zip(traj.snapshots()).enumerate() {
            self.save_snapshot(&format!("{dir}/snap_{k:05}.axns"), &to_snap(*t, f))?;
        }
        Ok(())
    }

    /// Takes over the files recorded by another handle on the same root.
    pub fn absorb(&mut self, other: RunDir) {
        debug_assert_eq!(self.root, other.root);
        self.emitted.extend(other.emitted);
    }

    /// Merges the emitted files into the manifest and rewrites it.
    pub fn finish(mut self, cfg: &RunConfig, reproducible: bool) -> Result<RunManifest, CliError> {
        let now = timestamp(reproducible);
        let previous: Option<RunManifest> = fs::read_to_string(self.path(MANIFEST_FILE))
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok());
        self.note(MANIFEST_FILE);
        let mut files: BTreeSet<String> = previous.as_ref().map(|m| m.files.iter().cloned().collect()).unwrap_or_default();
        files.extend(self.emitted.iter().cloned());
        let manifest = RunManifest {
            config_hash: cfg.hash()?,
            artifact_version: ARTIFACT_VERSION.to_string(),
            created: previous.as_ref().map_or(now, |m| m.created),
            updated: now,
            files: files.into_iter().collect(),
        };
        self.write_json(MANIFEST_FILE, &manifest)?;
        Ok(manifest)
    }
}

fn series_paths(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    if !dir.is_dir() {
        return Err(CliError::MissingArtifact(format!("{} not found", dir.display())));
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "axns"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::MissingArtifact(format!("no snapshots in {}", dir.display())));
    }
    Ok(paths)
}

fn load_series<T>(dir: &Path, conv: impl Fn(Snapshot) -> axilab_core::Result<T>) -> Result<Trajectory<T>, CliError> {
    let mut times = Vec::new();
    let mut snaps = Vec::new();
    for p in series_paths(dir)? {
        let s = io::load(&p).map_err(|e| CliError::MissingArtifact(format!("{}: {e}", p.display())))?;
        times.push(s.time);
        snaps.push(conv(s).map_err(|e| CliError::MissingArtifact(format!("{}: {e}", p.display())))?);
    }
    Trajectory::new(times, snaps).map_err(|e| CliError::MissingArtifact(format!("{}: {e}", dir.display())))
}

pub fn load_scalar_series(dir: &Path) -> Result<Trajectory<ScalarField>, CliError> {
    load_series(dir, Snapshot::into_scalar)
}

pub fn load_vector_series(dir: &Path) -> Result<Trajectory<VectorFieldCyl>, CliError> {
    load_series(dir, Snapshot::into_vector)
}
