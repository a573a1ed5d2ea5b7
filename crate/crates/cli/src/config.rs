//! Experiment configuration: one JSON document drives a run; no environment
//! variables. Every field that shapes the numerics lives here so a config
//! plus a seed reproduces a run bit for bit.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fluxtrack::grid::{SpaceGrid, TimeGrid};
use fluxtrack::target::Target;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridsConfig {
    pub length: f64,
    pub t_end: f64,
    pub n_cells: usize,
    pub n_steps: usize,
}

impl Default for GridsConfig {
    fn default() -> Self {
        Self { length: 1.0, t_end: 1.0, n_cells: 100, n_steps: 1000 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TargetConfig {
    Zero,
    Ramp { slope: f64 },
    Sine { amplitude: f64, frequency: f64 },
    BumpIntegral { scale: f64, onset: f64, width: f64, gevrey_order: f64 },
    Samples { path: PathBuf },
}

impl Default for TargetConfig {
    fn default() -> Self {
        TargetConfig::Ramp { slope: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodConfig {
    pub s: f64,
    pub eps: Option<f64>,
    pub eps_list: Vec<f64>,
    pub tol_series: f64,
    pub n_max: usize,
    /// gs command: evaluation grid
    pub s_list: Vec<f64>,
    pub x_max: f64,
    pub n_x: usize,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self {
            s: 0.5,
            eps: None,
            eps_list: Vec::new(),
            tol_series: 1e-12,
            n_max: 64,
            s_list: vec![0.3, 0.5, 0.8],
            x_max: 30.0,
            n_x: 300,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct HumConfig {
    pub eps: f64,
    pub smoothing_sigma: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
}

impl Default for HumConfig {
    fn default() -> Self {
        Self { eps: 0.05, smoothing_sigma: 1e-9, max_iters: 500, grad_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TransmuteConfig {
    /// Wave-side control samples: `t,value` CSV with t standing for the
    /// pseudo-time s over a symmetric range [-S, S].
    pub wave_csv: Option<PathBuf>,
    pub tol_kernel: f64,
    pub nodes_per_panel: usize,
    pub panels_per_scale: usize,
}

impl Default for TransmuteConfig {
    fn default() -> Self {
        Self { wave_csv: None, tol_kernel: 1e-14, nodes_per_panel: 12, panels_per_scale: 4 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Optional; when present must agree with the invoked subcommand.
    pub command: Option<String>,
    pub grids: GridsConfig,
    pub target: TargetConfig,
    pub method: MethodConfig,
    pub hum: HumConfig,
    pub transmute: TransmuteConfig,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: None,
            grids: GridsConfig::default(),
            target: TargetConfig::default(),
            method: MethodConfig::default(),
            hum: HumConfig::default(),
            transmute: TransmuteConfig::default(),
            out_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub sha256: String,
    pub dir: PathBuf,
}

pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
    let raw = fs::read(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    let config: ExperimentConfig = serde_json::from_slice(&raw)
        .map_err(|e| CliError::config(format!("invalid config {}: {e}", path.display())))?;
    let sha256 = {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(&raw);
        let out = h.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect::<String>()
    };
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig { config, sha256, dir })
}

impl ExperimentConfig {
    pub fn time_grid(&self) -> Result<TimeGrid<f64>, CliError> {
        TimeGrid::new(self.grids.t_end, self.grids.n_steps)
            .map_err(|e| CliError::config(format!("grids: {e}")))
    }

    pub fn space_grid(&self) -> Result<SpaceGrid<f64>, CliError> {
        SpaceGrid::new(self.grids.length, self.grids.n_cells)
            .map_err(|e| CliError::config(format!("grids: {e}")))
    }

    /// Builds the target, resolving sample paths relative to `base_dir`.
    pub fn build_target(&self, base_dir: &Path) -> Result<Target<f64>, CliError> {
        match &self.target {
            TargetConfig::Zero => Ok(Target::Zero),
            TargetConfig::Ramp { slope } => Ok(Target::Ramp { slope: *slope }),
            TargetConfig::Sine { amplitude, frequency } => {
                Ok(Target::Sine { amplitude: *amplitude, frequency: *frequency })
            }
            TargetConfig::BumpIntegral { scale, onset, width, gevrey_order } => {
                Target::bump_integral(*scale, *onset, *width, *gevrey_order)
                    .map_err(|e| CliError::config(format!("target: {e}")))
            }
            TargetConfig::Samples { path } => {
                let resolved = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
                let file = fs::File::open(&resolved).map_err(|e| {
                    CliError::config(format!("target samples {}: {e}", resolved.display()))
                })?;
                let signal = fluxtrack::csvio::read_signal::<f64, _>(BufReader::new(file))
                    .map_err(|e| CliError::config(format!("target samples {}: {e}", resolved.display())))?;
                Ok(Target::Samples(signal))
            }
        }
    }
}
