//! Run configuration: TOML file merged with command-line flags, resolved to
//! concrete values per case and task.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use wallsens::baselines::fast::DEFAULT_HARMONICS;
use wallsens::baselines::DesignKind;
use wallsens::cases::{CaseName, VALIDATION_LOADS_HORIZON};
use wallsens::envelope::GlassSpec;
use wallsens::fd::FdKind;
use wallsens::metrics::{EtaReading, DEFAULT_THRESHOLD};
use wallsens::wall::{References, WallSpec};
use wallsens::weather::{month_intervals_hours, SyntheticWeather};
use wallsens::ParamId;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Simulate,
    Sens,
    FdSens,
    Taylor,
    Metrics,
    Src,
    Sobol,
    RbdFast,
    Validate,
    Envelope,
}

impl Task {
    pub fn stochastic(self) -> bool {
        matches!(
            self,
            Task::Src | Task::Sobol | Task::RbdFast | Task::Validate
        )
    }

    /// Tasks whose default output is the loads over a short horizon.
    fn scalar(self) -> bool {
        matches!(
            self,
            Task::Metrics | Task::Src | Task::Sobol | Task::RbdFast
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputName {
    Temperature,
    Flux,
    Loads,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridFile {
    pub dx: Option<f64>,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputFile {
    pub kind: Option<OutputName>,
    pub stride: Option<usize>,
    pub intervals: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FdFile {
    pub scheme: Option<FdKind>,
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaylorFile {
    pub order: Option<u8>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingFile {
    pub design: Option<DesignKind>,
    pub harmonics: Option<usize>,
    pub replicates: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsFile {
    pub reading: Option<EtaReading>,
    pub threshold: Option<f64>,
    pub crossed: Option<bool>,
}

/// Weather from a `t,q_sw,T_out,T_in` file, or generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatherConfig {
    pub path: Option<PathBuf>,
    pub synthetic: Option<SyntheticWeather>,
}

/// Constant air temperatures (K) and shortwave flux (W/m²) for a custom
/// wall without a weather file. The initial profile is the straight line
/// between the two air temperatures unless `initial` (K) is given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub t_out: f64,
    pub t_in: f64,
    #[serde(default)]
    pub q_sw: f64,
    pub initial: Option<f64>,
}

/// Everything a config file may hold; absent keys fall back to flags and
/// then to per-case defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    /// Recorded by resolved configs; must match the task when present.
    pub task: Option<Task>,
    pub case: Option<CaseName>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub params: Option<Vec<String>>,
    pub domain_pct: Option<f64>,
    pub lattice_n: Option<usize>,
    pub n_samples: Option<usize>,
    pub grid: GridFile,
    pub output: OutputFile,
    pub fd: FdFile,
    pub taylor: TaylorFile,
    pub sampling: SamplingFile,
    pub metrics: MetricsFile,
    pub weather: Option<WeatherConfig>,
    pub wall: Option<WallSpec>,
    pub boundary: Option<BoundaryConfig>,
    pub references: Option<References>,
    pub glass: Option<GlassSpec>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: FileConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        // relative weather paths are taken from the config's directory
        if let Some(WeatherConfig { path: Some(p), .. }) = cfg.weather.as_mut() {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }
}

/// Flag values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub case: Option<CaseName>,
    pub grid_dx: Option<f64>,
    pub grid_dt: Option<f64>,
    pub params: Option<String>,
    pub domain_pct: Option<f64>,
    pub lattice_n: Option<usize>,
    pub n_samples: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub dx: f64,
    pub dt: f64,
    /// Dimensionless horizon; hours for the weather-driven cases.
    pub t_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub kind: OutputName,
    pub stride: usize,
    pub intervals: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdConfig {
    pub scheme: FdKind,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorConfig {
    pub order: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub design: DesignKind,
    pub harmonics: usize,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig {
    pub reading: EtaReading,
    pub threshold: f64,
    pub crossed: bool,
}

/// Fully resolved run. Serialized as TOML it is itself a valid config file
/// that reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub task: Task,
    pub case: Option<CaseName>,
    pub seed: Option<u64>,
    /// Kept out of the record so identical runs in different places match.
    #[serde(skip)]
    pub out: PathBuf,
    pub params: Vec<String>,
    pub domain_pct: f64,
    pub lattice_n: Option<usize>,
    pub n_samples: Option<usize>,
    pub grid: GridConfig,
    pub output: OutputConfig,
    pub fd: FdConfig,
    pub taylor: TaylorConfig,
    pub sampling: SamplingConfig,
    pub metrics: MetricsConfig,
    pub weather: Option<WeatherConfig>,
    pub wall: Option<WallSpec>,
    pub boundary: Option<BoundaryConfig>,
    pub references: Option<References>,
    pub glass: Option<GlassSpec>,
}

fn config_err<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Config(msg.into()))
}

impl RunConfig {
    /// Merges flags over the file and fills per-case defaults. `weather_hours`
    /// is the dimensionless horizon of the weather in use, when there is one.
    pub fn resolve(
        task: Task,
        file: FileConfig,
        flags: Overrides,
        weather_hours: Option<f64>,
    ) -> Result<Self, CliError> {
        if file.task.is_some_and(|t| t != task) {
            return config_err(format!(
                "config was written for task {:?}",
                file.task.unwrap()
            ));
        }
        let custom = file.wall.is_some();
        let case = match (flags.case.or(file.case), custom) {
            (Some(_), true) => {
                return config_err("give either a built-in case or a [wall] section, not both")
            }
            (None, true) => None,
            (c, false) => Some(c.unwrap_or(if task == Task::Envelope {
                CaseName::Envelope
            } else {
                CaseName::Validation
            })),
        };
        if custom && file.boundary.is_none() && file.weather.is_none() {
            return config_err("a custom wall needs a [boundary] section or a [weather] source");
        }
        match (task, case) {
            (Task::Envelope, Some(CaseName::Envelope)) => {}
            (Task::Envelope, _) => {
                return config_err("the envelope task runs on the envelope case only")
            }
            (_, Some(CaseName::Envelope)) => {
                return config_err("the envelope case is only available to the envelope task")
            }
            (Task::Validate, Some(CaseName::Validation)) => {}
            (Task::Validate, _) => return config_err("validate runs on the validation case only"),
            _ => {}
        }
        let weather_case = matches!(case, Some(CaseName::BayonneSynthetic | CaseName::Envelope));

        let (dx0, dt0) = if weather_case {
            (1e-2, 1e-2)
        } else {
            (1e-2, 1e-3)
        };
        let dx = flags.grid_dx.or(file.grid.dx).unwrap_or(dx0);
        let dt = flags.grid_dt.or(file.grid.dt).unwrap_or(dt0);
        let t_max = match file.grid.t_max {
            Some(t) => t,
            None if case == Some(CaseName::Validation)
                && (task.scalar() || task == Task::Validate) =>
            {
                VALIDATION_LOADS_HORIZON
            }
            None if case == Some(CaseName::Validation) => 30.0,
            None => match weather_hours {
                Some(h) => h,
                None => {
                    return config_err(
                        "grid.t_max is required for a custom wall with constant boundaries",
                    )
                }
            },
        };
        if let Some(h) = weather_hours {
            if t_max > h + 1e-9 {
                return config_err(format!(
                    "horizon {t_max} exceeds the weather, which ends at {h}"
                ));
            }
        }
        let nt = (t_max / dt).round().max(1.0) as usize;

        let seed = flags.seed.or(file.seed);
        if task.stochastic() && seed.is_none() {
            return config_err(format!("task {task:?} needs --seed"));
        }

        let params: Vec<String> = match (flags.params, file.params) {
            (Some(list), _) => list
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect(),
            (None, Some(v)) => v,
            (None, None) => match case {
                Some(CaseName::Validation) | None => vec!["k2".into(), "c2".into()],
                Some(CaseName::BayonneSynthetic) => ["k1", "c1", "k2", "c2", "k3", "c3"]
                    .map(String::from)
                    .to_vec(),
                Some(CaseName::Envelope) => ["k1", "k2", "tau", "rho"].map(String::from).to_vec(),
            },
        };
        for p in &params {
            p.parse::<ParamId>()
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        if params.is_empty() {
            return config_err("no parameters selected");
        }

        let domain_pct = flags
            .domain_pct
            .or(file.domain_pct)
            .unwrap_or(if weather_case { 50.0 } else { 90.0 });
        if !(domain_pct > 0.0 && domain_pct < 100.0) {
            return config_err(format!("domain_pct {domain_pct} must lie in (0, 100)"));
        }
        let lattice_n = flags.lattice_n.or(file.lattice_n).or(match case {
            Some(CaseName::Validation) => Some(20),
            Some(CaseName::Envelope) => Some(5),
            _ => None,
        });
        let n_samples = flags.n_samples.or(file.n_samples).or(match task {
            Task::Src => Some(150),
            Task::Sobol => Some(1024),
            Task::RbdFast => Some(500),
            _ => None,
        });

        let kind = file.output.kind.unwrap_or(if task.scalar() {
            OutputName::Loads
        } else {
            OutputName::Temperature
        });
        let intervals = match file.output.intervals {
            Some(v) => v,
            None if weather_case && kind == OutputName::Loads || task == Task::Envelope => {
                month_intervals_hours()
                    .into_iter()
                    .filter(|&(a, _)| a < t_max)
                    .map(|(a, b)| (a, b.min(t_max)))
                    .collect()
            }
            None => vec![(0.0, t_max)],
        };
        if intervals
            .iter()
            .any(|&(a, b)| !(a >= 0.0 && a < b && b <= t_max + 1e-9))
        {
            return config_err(format!("loads intervals must lie inside [0, {t_max}]"));
        }
        let stride = file.output.stride.unwrap_or(nt.div_ceil(1000).max(1));

        let out = flags
            .out
            .or(file.out)
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok(RunConfig {
            task,
            case,
            seed,
            out,
            params,
            domain_pct,
            lattice_n,
            n_samples,
            grid: GridConfig { dx, dt, t_max },
            output: OutputConfig {
                kind,
                stride,
                intervals,
            },
            fd: FdConfig {
                scheme: file.fd.scheme.unwrap_or(FdKind::Central),
                step: file.fd.step.unwrap_or(1e-3),
            },
            taylor: TaylorConfig {
                order: file.taylor.order.unwrap_or(2),
            },
            sampling: SamplingConfig {
                design: file.sampling.design.unwrap_or(DesignKind::LatinHypercube),
                harmonics: file.sampling.harmonics.unwrap_or(DEFAULT_HARMONICS),
                replicates: file.sampling.replicates.unwrap_or(5),
            },
            metrics: MetricsConfig {
                reading: file.metrics.reading.unwrap_or_default(),
                threshold: file.metrics.threshold.unwrap_or(DEFAULT_THRESHOLD),
                crossed: file.metrics.crossed.unwrap_or(false),
            },
            weather: file.weather,
            wall: file.wall,
            boundary: file.boundary,
            references: file.references,
            glass: file.glass,
        })
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        self.params
            .iter()
            .map(|p| p.parse().expect("checked at resolve"))
            .collect()
    }

    pub fn n_samples(&self) -> Result<usize, CliError> {
        self.n_samples
            .ok_or_else(|| CliError::Config("--n-samples is required".into()))
    }

    /// Domain fraction on each side of the anchor.
    pub fn domain_frac(&self) -> f64 {
        self.domain_pct / 100.0
    }
}
