//! Command-line front end for skinbath: scenario configs, figure presets,
//! parameter sweeps and CSV/JSON output.

// Comparisons such as `!(x > 0.0)` are written so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod run;
pub mod sweep;

pub use config::{Format, ScenarioConfig};
pub use error::CliError;
pub use presets::{preset, Preset, PresetRun, PRESET_IDS};
pub use run::{execute, Command, RunReport};
pub use sweep::{apply_override, load_overrides, reproduce, sweep, IndexEntry, Override};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "SKINBATH_OUT";

/// Output directory: explicit flag, then `SKINBATH_OUT`, then the config's
/// `outputs.directory`, then `skinbath-out`.
pub fn resolve_out_dir(flag: Option<&std::path::Path>, cfg: Option<&ScenarioConfig>) -> std::path::PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        return p.into();
    }
    cfg.and_then(|c| c.outputs.directory.clone()).unwrap_or_else(|| "skinbath-out".into()).into()
}
