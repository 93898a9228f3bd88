//! Sketched random features for graph neural networks.
//!
//! Random kernel feature maps are mixed across nodes by an additive Gaussian
//! sketch, `Z = (I + G/√N)·φ(X)`, and the rows of `Z` are concatenated to the
//! node state at every layer of a small GIN-style network.

pub mod error;
pub mod gnn;
pub mod graph;
pub mod kernels;
pub mod matrix;
pub mod metrics;
pub mod rng;
pub mod sketch;
pub mod srm;

pub use error::{Result, SrfError};
pub use matrix::Matrix;
pub use rng::RngState;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Writes `bytes` to a temp file next to `path`, then renames it over `path`.
pub fn write_atomic(path: &std::path::Path, bytes: &[u8]) -> Result<()> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => std::path::Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| error::SrfError::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })?;
    Ok(())
}
