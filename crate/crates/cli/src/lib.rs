//! Scenario files, the batch runner behind the `rimcomp` binary, and report
//! writers.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use rimcomp::expr::Expr;
use rimcomp::kernels::ComparisonParams;
use rimcomp::manifolds::{
    assume_bounds, build_chart_surface, build_warped_tube, certify_bounds, CertifiedManifold, Fiber, FiberKind,
    Manifold, Topology,
};
use rimcomp::tube_geometry::{GeometrySettings, TubeGeometry};
use rimcomp::verifiers::{run_suite, RigidityVerdict, SuiteConfig, SuiteReport};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT_ERROR: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}:{column}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        msg: String,
    },

    #[error("field `{field}`: {source}")]
    Field {
        field: String,
        #[source]
        source: rimcomp::Error,
    },

    #[error(transparent)]
    Core(#[from] rimcomp::Error),

    #[error("report serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        EXIT_INPUT_ERROR
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// A number, or a constant expression such as `"2*pi"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Real {
    Number(f64),
    Expr(String),
}

impl Real {
    pub fn value(&self, field: &str) -> Result<f64> {
        match self {
            Real::Number(v) => Ok(*v),
            Real::Expr(s) => Expr::constant(s).map_err(|source| CliError::Field {
                field: field.into(),
                source,
            }),
        }
    }
}

fn two_pi() -> Real {
    Real::Expr("2*pi".into())
}

fn one() -> Real {
    Real::Number(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FiberSpec {
    Circle {
        #[serde(default = "two_pi")]
        length: Real,
    },
    RoundSphere {
        dim: usize,
        #[serde(default = "one")]
        radius: Real,
    },
    FlatTorus {
        side_lengths: Vec<Real>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySpec {
    Cylinder { length: Real },
    Cap { length: Real },
    HalfInfinite { t_max: Real },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case", deny_unknown_fields)]
pub enum ManifoldSpec {
    /// `[0, L] ×_w F` with `g = dt² + w(t)² h_F`.
    Warped {
        warp: String,
        fiber: FiberSpec,
        topology: TopologySpec,
    },
    /// `{lower(x) < t < upper(x)}` with `g = dt² + G(t,x) dx²`, periodic in `x`.
    Chart {
        metric: String,
        lower: String,
        upper: String,
        #[serde(default = "two_pi")]
        period: Real,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub n: usize,
    pub kappa: Real,
    pub lambda: Real,
    /// Inscribed radius used by the constant-based bounds.
    #[serde(default)]
    pub depth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertificationSpec {
    pub tolerance: f64,
    /// Skip certification and take the declared bounds as given.
    pub assume: bool,
}

impl Default for CertificationSpec {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            assume: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub format: Format,
    pub dump_distance_field: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    pub manifold: ManifoldSpec,
    pub params: ParamsSpec,
    #[serde(default)]
    pub certification: CertificationSpec,
    #[serde(default)]
    pub grid: GeometrySettings,
    #[serde(default)]
    pub suite: SuiteConfig,
    #[serde(default)]
    pub output: OutputSpec,
    /// Seed for the random trial functions.
    #[serde(default)]
    pub seed: u64,
    /// Extra trial functions `sin(aρ)` with random `a` per run.
    #[serde(default)]
    pub random_trials: usize,
}

/// Reads and validates a scenario file; every expression must parse.
pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut scenario = parse_scenario_str(&text).map_err(|e| match e {
        CliError::Parse { line, column, msg, .. } => CliError::Parse {
            path: path.to_path_buf(),
            line,
            column,
            msg,
        },
        other => other,
    })?;
    if scenario.name.is_none() {
        scenario.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    }
    Ok(scenario)
}

pub fn parse_scenario_str(text: &str) -> Result<Scenario> {
    let scenario: Scenario = serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: PathBuf::from("<scenario>"),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    scenario.validate()?;
    Ok(scenario)
}

fn expr(field: &str, source: &str) -> Result<Expr> {
    Expr::parse(source).map_err(|source| CliError::Field {
        field: field.into(),
        source,
    })
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.build_manifold()?;
        self.params()?;
        for (i, f) in self.suite.f_specs.iter().enumerate() {
            expr(&format!("suite.f_specs[{i}]"), f)?;
        }
        for (i, f) in self.suite.psi_specs.iter().enumerate() {
            expr(&format!("suite.psi_specs[{i}]"), f)?;
        }
        Ok(())
    }

    pub fn params(&self) -> Result<ComparisonParams> {
        let p = &self.params;
        Ok(ComparisonParams::new(p.n, p.kappa.value("params.kappa")?, p.lambda.value("params.lambda")?)?)
    }

    pub fn build_manifold(&self) -> Result<Manifold> {
        Ok(match &self.manifold {
            ManifoldSpec::Warped { warp, fiber, topology } => {
                let kind = match fiber {
                    FiberSpec::Circle { length } => FiberKind::Circle {
                        length: length.value("manifold.fiber.length")?,
                    },
                    FiberSpec::RoundSphere { dim, radius } => FiberKind::RoundSphere {
                        dim: *dim,
                        radius: radius.value("manifold.fiber.radius")?,
                    },
                    FiberSpec::FlatTorus { side_lengths } => FiberKind::FlatTorus {
                        side_lengths: side_lengths
                            .iter()
                            .enumerate()
                            .map(|(i, v)| v.value(&format!("manifold.fiber.side_lengths[{i}]")))
                            .collect::<Result<_>>()?,
                    },
                };
                let topology = match topology {
                    TopologySpec::Cylinder { length } => Topology::Cylinder {
                        length: length.value("manifold.topology.length")?,
                    },
                    TopologySpec::Cap { length } => Topology::Cap {
                        length: length.value("manifold.topology.length")?,
                    },
                    TopologySpec::HalfInfinite { t_max } => Topology::HalfInfinite {
                        t_max: t_max.value("manifold.topology.t_max")?,
                    },
                };
                Manifold::Warped(build_warped_tube(Fiber::new(kind)?, expr("manifold.warp", warp)?, topology)?)
            }
            ManifoldSpec::Chart {
                metric,
                lower,
                upper,
                period,
            } => Manifold::Chart(build_chart_surface(
                expr("manifold.metric", metric)?,
                expr("manifold.lower", lower)?,
                expr("manifold.upper", upper)?,
                period.value("manifold.period")?,
            )?),
        })
    }

    /// Suite settings with the grid section, depth override and seeded trial
    /// functions folded in.
    pub fn suite_config(&self) -> SuiteConfig {
        let mut config = self.suite.clone();
        config.geometry = self.grid;
        if self.params.depth.is_some() {
            config.depth = self.params.depth;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for _ in 0..self.random_trials {
            let a: f64 = rng.gen_range(0.5..2.0);
            config.psi_specs.push(format!("sin({a:.6}*rho)"));
        }
        config
    }
}

/// Options that override the scenario.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub format: Option<Format>,
    pub tol_scale: Option<f64>,
    pub seed: Option<u64>,
    pub dump_distance_field: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificationSummary {
    pub certified: bool,
    pub assumed: bool,
    pub ric_inf: f64,
    pub h_inf: f64,
    pub ric_margin: f64,
    pub h_margin: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub params: ComparisonParams,
    pub certification: CertificationSummary,
    pub all_passed: bool,
    pub exit_code: i32,
    #[serde(flatten)]
    pub suite: SuiteReport,
}

impl RunReport {
    pub fn verdict(&self) -> &RigidityVerdict {
        &self.suite.verdict
    }
}

/// Outcome of a run: the exit code, the files written and the report (absent
/// when the input was rejected).
#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub report: Option<RunReport>,
    pub files: Vec<PathBuf>,
    pub error: Option<CliError>,
}

fn certify(scenario: &Scenario) -> Result<CertifiedManifold> {
    let manifold = scenario.build_manifold()?;
    let params = scenario.params()?;
    let tol = scenario.certification.tolerance;
    if scenario.certification.assume {
        log::warn!("certification bypassed; declared bounds taken as given");
        Ok(assume_bounds(manifold, params, tol)?)
    } else {
        Ok(certify_bounds(manifold, params, tol)?)
    }
}

fn write(path: PathBuf, contents: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, contents).map_err(|source| CliError::Io { path: path.clone(), source })?;
    files.push(path);
    Ok(())
}

/// Runs one scenario: certification, the battery, then report files.
pub fn run(scenario: &Scenario, options: &RunOptions) -> RunOutcome {
    match run_inner(scenario, options) {
        Ok((report, files)) => RunOutcome {
            exit_code: report.exit_code,
            report: Some(report),
            files,
            error: None,
        },
        Err(e) => RunOutcome {
            exit_code: e.exit_code(),
            report: None,
            files: Vec::new(),
            error: Some(e),
        },
    }
}

fn run_inner(scenario: &Scenario, options: &RunOptions) -> Result<(RunReport, Vec<PathBuf>)> {
    let mut scenario = scenario.clone();
    if let Some(seed) = options.seed {
        scenario.seed = seed;
    }
    if let Some(scale) = options.tol_scale {
        scenario.suite.tol_scale = scale;
    }
    let name = scenario.name.clone().unwrap_or_else(|| "scenario".into());
    let cm = certify(&scenario)?;
    log::info!(
        "{name}: Ric >= {:.6e}, H >= {:.6e} (margins {:.3e}, {:.3e})",
        cm.ric_inf,
        cm.h_inf,
        cm.ric_margin,
        cm.h_margin
    );
    let config = scenario.suite_config();
    let suite = run_suite(&cm, &config)?;
    let all_passed = suite.all_passed();
    let exit_code = if !all_passed {
        EXIT_CHECK_FAILED
    } else if !cm.certified {
        EXIT_INPUT_ERROR
    } else {
        EXIT_PASS
    };
    let report = RunReport {
        scenario: name.clone(),
        params: cm.params,
        certification: CertificationSummary {
            certified: cm.certified,
            assumed: scenario.certification.assume,
            ric_inf: cm.ric_inf,
            h_inf: cm.h_inf,
            ric_margin: cm.ric_margin,
            h_margin: cm.h_margin,
            tolerance: cm.tolerance,
        },
        all_passed,
        exit_code,
        suite,
    };

    let mut files = Vec::new();
    fs::create_dir_all(&options.out_dir).map_err(|source| CliError::Io {
        path: options.out_dir.clone(),
        source,
    })?;
    let format = options.format.unwrap_or(scenario.output.format);
    if matches!(format, Format::Csv | Format::Both) {
        write(options.out_dir.join(format!("{name}.csv")), &report.suite.to_csv(), &mut files)?;
    }
    if matches!(format, Format::Json | Format::Both) {
        let json = serde_json::to_string_pretty(&report)? + "\n";
        write(options.out_dir.join(format!("{name}.json")), &json, &mut files)?;
    }
    if options.dump_distance_field || scenario.output.dump_distance_field {
        let geo = TubeGeometry::new(&cm, config.geometry)?;
        match &geo.field {
            Some(field) => write(
                options.out_dir.join(format!("{name}_distance_field.txt")),
                &field.dump_text(),
                &mut files,
            )?,
            None => log::warn!("{name}: warped tubes have no distance grid to dump"),
        }
    }
    Ok((report, files))
}

/// Scenario with a full default suite for the given manifold and bounds.
pub fn minimal_scenario(manifold: ManifoldSpec, n: usize, kappa: f64, lambda: f64) -> Scenario {
    Scenario {
        name: None,
        manifold,
        params: ParamsSpec {
            n,
            kappa: Real::Number(kappa),
            lambda: Real::Number(lambda),
            depth: None,
        },
        certification: CertificationSpec::default(),
        grid: GeometrySettings::default(),
        suite: SuiteConfig::default(),
        output: OutputSpec::default(),
        seed: 0,
        random_trials: 0,
    }
}

/// Circle fiber of length `2π`.
pub fn unit_circle() -> FiberSpec {
    FiberSpec::Circle {
        length: Real::Number(2.0 * PI),
    }
}
