use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::ExperimentConfig;
use crate::nn::write_atomic;

/// Flags shared by every command.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Overrides the config's `out_dir`.
    pub out: Option<PathBuf>,
    /// Replace artifacts left by an earlier run of the same command.
    pub force: bool,
    pub seed_offset: u64,
}

/// Written last, once every artifact of a command is in place.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub experiment: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    /// Paths relative to the command directory.
    pub artifacts: Vec<String>,
    pub wall_clock_secs: f64,
    pub library_version: String,
}

/// Output directory of one command: `<out>/<command>/`.
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    dir: PathBuf,
    command: String,
    artifacts: Vec<String>,
    started: Instant,
}

impl RunDir {
    /// Claims `<out>/<command>`. An existing nonempty directory is an error
    /// unless `force` is set, in which case it is cleared.
    pub fn create(cfg: &ExperimentConfig, command: &str, opts: &RunOptions) -> Result<Self> {
        let root = opts.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
        let dir = root.join(command);
        if dir.exists() && std::fs::read_dir(&dir)?.next().is_some() {
            if !opts.force {
                return Err(Error::ArtifactsExist(dir));
            }
            std::fs::remove_dir_all(&dir)?;
        }
        std::fs::create_dir_all(&dir)?;
        Ok(Self {
            root,
            dir,
            command: command.into(),
            artifacts: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Path for a new artifact, recorded in the manifest.
    pub fn artifact(&mut self, rel: impl AsRef<Path>) -> Result<PathBuf> {
        let rel = rel.as_ref();
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let name = rel.to_string_lossy().into_owned();
        if !self.artifacts.contains(&name) {
            self.artifacts.push(name);
        }
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, rel: impl AsRef<Path>, value: &T) -> Result<PathBuf> {
        let path = self.artifact(rel)?;
        write_atomic(&path, serde_json::to_string_pretty(value)?.as_bytes())?;
        Ok(path)
    }

    pub fn write_text(&mut self, rel: impl AsRef<Path>, text: &str) -> Result<PathBuf> {
        let path = self.artifact(rel)?;
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }

    pub fn finish(self, cfg: &ExperimentConfig, seeds: &[u64]) -> Result<RunManifest> {
        let manifest = RunManifest {
            command: self.command.clone(),
            experiment: cfg.name.clone(),
            config_hash: cfg.hash(),
            seeds: seeds.to_vec(),
            artifacts: self.artifacts.clone(),
            wall_clock_secs: self.started.elapsed().as_secs_f64(),
            library_version: env!("CARGO_PKG_VERSION").into(),
        };
        write_atomic(&self.dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
        Ok(manifest)
    }
}

/// Writes `rows` as a headered CSV.
pub fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(out: &Path) -> ExperimentConfig {
        let mut c = ExperimentConfig::from_json(r#"{"name": "t", "dataset": {"kind": "toy"}, "seeds": [0]}"#).unwrap();
        c.out_dir = out.to_path_buf();
        c
    }

    #[test]
    fn existing_artifacts_need_force() {
        let tmp = tempfile::tempdir().unwrap();
        let c = cfg(tmp.path());
        let opts = RunOptions::default();
        let mut run = RunDir::create(&c, "eval", &opts).unwrap();
        run.write_text("a.txt", "x").unwrap();
        let m = run.finish(&c, &[0]).unwrap();
        assert_eq!(m.artifacts, vec!["a.txt".to_string()]);
        assert_eq!(m.config_hash, c.hash());
        assert!(matches!(RunDir::create(&c, "eval", &opts), Err(Error::ArtifactsExist(_))));
        let forced = RunOptions { force: true, ..opts };
        let run = RunDir::create(&c, "eval", &forced).unwrap();
        assert!(!run.dir().join("a.txt").exists());
    }
}
