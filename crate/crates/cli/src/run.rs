//! Run directories: resolved config first, outputs next, manifest last.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use srf_core::metrics::config_hash;
use srf_core::write_atomic;

pub const OUT_DIR_ENV: &str = "SRF_OUT_DIR";
pub const THREADS_ENV: &str = "SRF_THREADS";

pub fn threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub struct RunDir {
    dir: PathBuf,
    command: String,
    config: Value,
    outputs: Vec<String>,
    started: Instant,
}

impl RunDir {
    /// `explicit`, else `$SRF_OUT_DIR/<command>-<hash>`, else `runs/<command>-<hash>`.
    pub fn create(explicit: Option<&Path>, command: &str, config: &Value) -> Result<Self> {
        let hash = config_hash(config);
        let dir = match explicit {
            Some(d) => d.to_path_buf(),
            None => {
                let base = std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
                base.join(format!("{}-{}", command.replace(' ', "-"), &hash[..8]))
            }
        };
        std::fs::create_dir_all(&dir).with_context(|| format!("creating run directory {}", dir.display()))?;
        let mut run = Self {
            dir,
            command: command.to_string(),
            config: config.clone(),
            outputs: Vec::new(),
            started: Instant::now(),
        };
        run.write_json("config.json", config)?;
        Ok(run)
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let bytes = csv_bytes(rows)?;
        self.write_bytes(name, &bytes)
    }

    /// Seeds are collected from every `seed`/`seeds` key in the config.
    pub fn finish(mut self, passed: bool) -> Result<PathBuf> {
        let mut seeds = Vec::new();
        collect_seeds(&self.config, &mut seeds);
        seeds.sort_unstable();
        seeds.dedup();
        let manifest = json!({
            "tool": "srf",
            "version": srf_core::VERSION,
            "command": self.command,
            "config": "config.json",
            "config_hash": config_hash(&self.config),
            "seeds": seeds,
            "outputs": self.outputs.clone(),
            "passed": passed,
            "elapsed_seconds": self.started.elapsed().as_secs_f64(),
            "rerun": format!("srf {} --config {}", self.command, self.dir.join("config.json").display()),
        });
        self.write_json("manifest.json", &manifest)?;
        Ok(self.dir)
    }
}

pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

fn collect_seeds(v: &Value, out: &mut Vec<u64>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                match (k.as_str(), x) {
                    ("seed", Value::Number(n)) => out.extend(n.as_u64()),
                    ("seeds", Value::Array(xs)) => out.extend(xs.iter().filter_map(Value::as_u64)),
                    _ => collect_seeds(x, out),
                }
            }
        }
        Value::Array(xs) => xs.iter().for_each(|x| collect_seeds(x, out)),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_outputs_and_seeds() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = json!({"seed": 3, "bench": {"seeds": [1, 3]}, "gnn": {"seed": 0}});
        let mut run = RunDir::create(Some(&dir.path().join("r")), "bench x", &cfg).unwrap();
        run.write_csv("a.csv", &[(1, "x")]).unwrap();
        let path = run.finish(true).unwrap();
        let m: Value = serde_json::from_str(&std::fs::read_to_string(path.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m["seeds"], json!([0, 1, 3]));
        assert_eq!(m["outputs"], json!(["config.json", "a.csv"]));
        assert_eq!(std::fs::read_to_string(path.join("a.csv")).unwrap(), "1,x\n");
    }
}
