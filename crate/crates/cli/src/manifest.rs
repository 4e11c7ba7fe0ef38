//! The record every command writes into its output directory before
//! producing anything else.

use std::path::{Path, PathBuf};

use smolpipe_core::kv::KvMap;

use crate::error::Result;

pub const FILE_NAME: &str = "run-manifest.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub out_dir: PathBuf,
    /// `git describe` of the build.
    pub build: String,
    /// Full argument list, for replaying the run.
    pub args: Vec<String>,
}

fn join(paths: &[PathBuf]) -> String {
    paths
        .iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

impl RunManifest {
    pub fn new(command: &str, out_dir: &Path) -> Self {
        Self {
            command: command.to_string(),
            config: None,
            seed: None,
            inputs: Vec::new(),
            out_dir: out_dir.to_path_buf(),
            build: env!("SMOLPIPE_BUILD").to_string(),
            args: std::env::args().collect(),
        }
    }

    pub fn config(mut self, path: Option<&Path>) -> Self {
        self.config = path.map(Path::to_path_buf);
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn inputs<'a>(mut self, paths: impl IntoIterator<Item = &'a Path>) -> Self {
        self.inputs.extend(paths.into_iter().map(Path::to_path_buf));
        self
    }

    pub fn to_kv(&self) -> KvMap {
        let mut kv = KvMap::new();
        kv.insert("command", &self.command);
        kv.insert(
            "config",
            self.config
                .as_ref()
                .map_or("-".to_string(), |p| p.display().to_string()),
        );
        kv.insert("seed", self.seed.map_or("-".to_string(), |s| s.to_string()));
        kv.insert("inputs", join(&self.inputs));
        kv.insert("out", self.out_dir.display());
        kv.insert("build", &self.build);
        kv.insert("args", self.args.join(" "));
        kv
    }

    /// Creates the output directory and writes the manifest into it.
    pub fn write(&self) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join(FILE_NAME);
        std::fs::write(&path, self.to_kv().to_string())?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn written_before_anything_else() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run");
        let m = RunManifest::new("budget", &out)
            .config(Some(Path::new("a.txt")))
            .seed(7)
            .inputs([Path::new("x.ppm"), Path::new("y.ppm")]);
        let path = m.write().unwrap();
        let kv = KvMap::load(&path).unwrap();
        assert_eq!(kv.get_str("command"), Some("budget"));
        assert_eq!(kv.get_str("seed"), Some("7"));
        assert_eq!(kv.get_str("inputs"), Some("x.ppm y.ppm"));
        assert_eq!(kv.get_str("config"), Some("a.txt"));
        assert!(!kv.get_str("build").unwrap().is_empty());
    }
}
