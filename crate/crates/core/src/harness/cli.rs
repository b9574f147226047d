use super::{alpha_sweep_experiment, AlphaSweepConfig};
use crate::error::{Error, Result};
use crate::groupproj::{
    build_projection_program, conjugacy_class_program, direct_projection, projection_success_probability,
    rotational_invariance_experiment, subspace_weights, symmetric_group, FiniteGroupData, ProjectionWeights,
    RepMap, RotationConfig,
};
use crate::lcu::run_lcu;
use crate::pooling::{load_mnist_dir, mnist_probability_sweep, verify_pooling, BoundaryMode, ImageGrid, PoolingSpec, SweepConfig};
use crate::qsim::{haar_unitary_with, Statevector, C64};
use crate::resnet::{plateau_experiment, AttemptsConfig, EnsembleConfig, PlateauConfig};
use crate::rng::{derive_seed, seeded};
use clap::{Args, Parser, Subcommand};
use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Tolerance for the verification subcommands.
const VERIFY_TOL: f64 = 1e-10;

#[derive(Parser, Debug)]
#[command(name = "lcuqml", version, about = "Experiments for LCU-based non-unitary QML layers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV; run metadata is written next to it with a .json extension.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gradient variance and non-unitary term vs qubit count, with and without the residual layer.
    ResnetVariance {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        sublayers_w1: Option<usize>,
        #[arg(long)]
        sublayers_w2: Option<usize>,
        #[arg(long)]
        observable: Option<String>,
        /// Run only the residual (true) or plain (false) model.
        #[arg(long)]
        residual: Option<bool>,
    },
    /// Expands uniform residual ensembles and checks them against the forward pass.
    ResnetEnsemble {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        l_list: Option<Vec<usize>>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Expected repetitions until success vs residual strength.
    ResnetAttempts {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        l_list: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        betas: Option<Vec<f64>>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Pools random images by LCU simulation and compares with the classical oracle.
    PoolVerify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        images: Option<usize>,
        /// periodic or zero_padded
        #[arg(long)]
        mode: Option<String>,
    },
    /// Mean pooling success probability over MNIST images vs window or resolution.
    PoolSweep {
        #[command(flatten)]
        common: Common,
        /// d (window sweep) or n (resolution sweep)
        #[arg(long)]
        axis: Option<String>,
        #[arg(long, value_delimiter = ',')]
        d_values: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        n_values: Option<Vec<usize>>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        images: Option<usize>,
        #[arg(long)]
        mode: Option<String>,
        /// Directory with IDX image files; defaults to $MNIST_DIR.
        #[arg(long)]
        mnist_dir: Option<PathBuf>,
    },
    /// Compares LCU projection programs with direct projector sums.
    ProjectVerify {
        #[command(flatten)]
        common: Common,
        /// S2, S3 or S4
        #[arg(long)]
        group: Option<String>,
        /// JSON group description (needs permutations for the qubit representation).
        #[arg(long)]
        group_file: Option<PathBuf>,
        #[arg(long)]
        cases: Option<usize>,
    },
    /// Overlap of projected point-cloud states under rotation.
    RotinvOverlap {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        clouds: Option<usize>,
        #[arg(long)]
        angles: Option<usize>,
    },
    /// Classification accuracy and effective dimension vs symmetric amplification.
    AlphaSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        #[arg(long)]
        repetitions: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
    },
}

type Overrides = Vec<(&'static str, Option<Value>)>;

fn opt<T: Serialize>(v: &Option<T>) -> Option<Value> {
    v.as_ref().map(|x| serde_json::to_value(x).expect("flag values serialize"))
}

/// Reads the config file (or `{}`) and overlays every flag that was given.
fn merged_config(common: &Common, overrides: Overrides) -> Result<Map<String, Value>> {
    let mut map = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(m)) => m,
                Ok(_) => return Err(Error::Config(format!("{} is not a JSON object", path.display()))),
                Err(e) => return Err(Error::Config(format!("{}: {e}", path.display()))),
            }
        }
        None => Map::new(),
    };
    for (key, value) in overrides.into_iter().chain([("seed", opt(&common.seed))]) {
        if let Some(v) = value {
            map.insert(key.to_string(), v);
        }
    }
    Ok(map)
}

fn typed<T: DeserializeOwned>(experiment: &str, map: &Map<String, Value>) -> Result<T> {
    serde_json::from_value(Value::Object(map.clone())).map_err(|e| Error::Config(format!("{experiment}: {e}")))
}

fn write_outputs<T: Serialize>(
    experiment: &str,
    common: &Common,
    parameters: &Value,
    rows: &[T],
    started: Instant,
) -> Result<PathBuf> {
    let csv_path = common.out.clone().unwrap_or_else(|| PathBuf::from(format!("{experiment}.csv")));
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(&csv_path).map_err(csv_error)?;
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    let meta = json!({
        "experiment": experiment,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": parameters.get("seed"),
        "parameters": parameters,
        "rows": rows.len(),
        "csv": csv_path.file_name().map(|f| f.to_string_lossy().into_owned()),
        "elapsed_seconds": started.elapsed().as_secs_f64(),
    });
    std::fs::write(csv_path.with_extension("json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(csv_path)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("csv: {other:?}")),
    }
}

fn parse_mode(s: &str) -> Result<BoundaryMode> {
    serde_json::from_value(Value::String(s.to_string()))
        .map_err(|_| Error::Config(format!("mode must be periodic or zero_padded, got {s}")))
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct PoolVerifyConfig {
    size: usize,
    d: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_verify_images")]
    images: usize,
    #[serde(default = "default_periodic")]
    mode: BoundaryMode,
}

fn default_verify_images() -> usize {
    10
}
fn default_periodic() -> BoundaryMode {
    BoundaryMode::Periodic
}

#[derive(Debug, Serialize)]
struct PoolVerifyRow {
    image: usize,
    size: usize,
    d: usize,
    mode: BoundaryMode,
    max_amplitude_error: f64,
    pi_simulated: f64,
    pi_formula: f64,
}

#[derive(Debug, Deserialize, Serialize)]
struct PoolSweepConfig {
    #[serde(flatten)]
    sweep: SweepConfig,
    mnist_dir: Option<PathBuf>,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ProjectVerifyConfig {
    #[serde(default = "default_group")]
    group: String,
    #[serde(default)]
    group_file: Option<PathBuf>,
    #[serde(default = "default_cases")]
    cases: usize,
    #[serde(default)]
    seed: u64,
}

fn default_group() -> String {
    "S3".into()
}
fn default_cases() -> usize {
    50
}

#[derive(Debug, Serialize)]
struct ProjectVerifyRow {
    case: usize,
    group: String,
    max_error_lcu: f64,
    max_error_class: f64,
    pi_lcu: f64,
    pi_formula: f64,
}

fn run_pool_verify(map: &Map<String, Value>) -> Result<(Value, Vec<PoolVerifyRow>, f64)> {
    let cfg: PoolVerifyConfig = typed("pool-verify", map)?;
    let spec = PoolingSpec { d: cfg.d, mode: cfg.mode };
    spec.validate(cfg.size).map_err(|e| Error::Config(e.to_string()))?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for image in 0..cfg.images {
        let mut rng = seeded(derive_seed(cfg.seed, image as u64));
        let img = ImageGrid::new(cfg.size, (0..cfg.size * cfg.size).map(|_| rng.gen::<f64>()).collect())?;
        let check = verify_pooling(&img, &spec)?;
        worst = worst.max(check.max_amplitude_error).max((check.pi_simulated - check.pi_formula).abs());
        rows.push(PoolVerifyRow {
            image,
            size: cfg.size,
            d: cfg.d,
            mode: cfg.mode,
            max_amplitude_error: check.max_amplitude_error,
            pi_simulated: check.pi_simulated,
            pi_formula: check.pi_formula,
        });
    }
    Ok((serde_json::to_value(&cfg)?, rows, worst))
}

fn load_group(cfg: &ProjectVerifyConfig) -> Result<FiniteGroupData> {
    match &cfg.group_file {
        Some(path) => FiniteGroupData::from_json_file(path)
            .map_err(|e| Error::Config(format!("group file {}: {e}", path.display()))),
        None => match cfg.group.to_ascii_uppercase().as_str() {
            "S2" => symmetric_group(2),
            "S3" => symmetric_group(3),
            "S4" => symmetric_group(4),
            other => Err(Error::Config(format!("group must be S2, S3 or S4, got {other}"))),
        },
    }
}

fn run_project_verify(map: &Map<String, Value>) -> Result<(Value, Vec<ProjectVerifyRow>, f64)> {
    let cfg: ProjectVerifyConfig = typed("project-verify", map)?;
    let group = load_group(&cfg)?;
    let rep = RepMap::qubit_permutation(&group).map_err(|e| Error::Config(e.to_string()))?;
    let n = rep.num_qubits();
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for case in 0..cfg.cases {
        let mut rng = seeded(derive_seed(cfg.seed, case as u64));
        let a: Vec<C64> = (0..group.num_irreps()).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let weights = ProjectionWeights::new(a)?;
        let psi = Statevector::from_amplitudes(haar_unitary_with(&mut rng, 1 << n).column(0).iter().copied().collect())?;
        let direct = direct_projection(&group, &rep, &weights, &psi)?.0.normalized()?;
        let lcu = run_lcu(&build_projection_program(&group, &rep, &weights)?, &psi)?;
        let class = run_lcu(&conjugacy_class_program(&group, &rep, &weights)?, &psi)?;
        let formula =
            projection_success_probability(&weights, &subspace_weights(&group, &rep, &psi)?, &group.degrees())?.simulated;
        let e_lcu = lcu.post_state.max_abs_diff(&direct)?;
        let e_class = class.post_state.max_abs_diff(&direct)?;
        worst = worst.max(e_lcu).max(e_class).max((lcu.pi_success - formula).abs());
        rows.push(ProjectVerifyRow {
            case,
            group: group.name().to_string(),
            max_error_lcu: e_lcu,
            max_error_class: e_class,
            pi_lcu: lcu.pi_success,
            pi_formula: formula,
        });
    }
    Ok((serde_json::to_value(&cfg)?, rows, worst))
}

fn verified(experiment: &str, worst: f64) -> Result<()> {
    if worst > VERIFY_TOL {
        return Err(Error::Numerical(format!("{experiment}: max error {worst:e} exceeds {VERIFY_TOL:e}")));
    }
    Ok(())
}

fn execute(command: Command) -> Result<PathBuf> {
    let started = Instant::now();
    match command {
        Command::ResnetVariance { common, n_list, samples, sublayers_w1, sublayers_w2, observable, residual } => {
            let map = merged_config(
                &common,
                vec![
                    ("n_list", opt(&n_list)),
                    ("samples", opt(&samples)),
                    ("sublayers_w1", opt(&sublayers_w1)),
                    ("sublayers_w2", opt(&sublayers_w2)),
                    ("observable", opt(&observable)),
                    ("residual", opt(&residual)),
                ],
            )?;
            let models: Vec<bool> = if map.contains_key("residual") {
                vec![typed::<PlateauConfig>("resnet-variance", &map)?.residual]
            } else {
                vec![false, true]
            };
            let mut rows = Vec::new();
            let mut cfg: PlateauConfig = typed("resnet-variance", &map)?;
            cfg.validate()?;
            for residual in models {
                cfg.residual = residual;
                rows.extend(plateau_experiment(&cfg)?);
            }
            write_outputs("resnet-variance", &common, &Value::Object(map), &rows, started)
        }
        Command::ResnetEnsemble { common, l_list, beta, n } => {
            let map = merged_config(&common, vec![("l_list", opt(&l_list)), ("beta", opt(&beta)), ("n", opt(&n))])?;
            let cfg: EnsembleConfig = typed("resnet-ensemble", &map)?;
            let rows = cfg.run()?;
            let path = write_outputs("resnet-ensemble", &common, &serde_json::to_value(&cfg)?, &rows, started)?;
            let worst = rows.iter().map(|r| r.max_error).fold(0.0, f64::max);
            if worst > 1e-9 || rows.iter().any(|r| !r.depths_complete) {
                return Err(Error::Numerical(format!("ensemble expansion mismatch (max error {worst:e})")));
            }
            Ok(path)
        }
        Command::ResnetAttempts { common, l_list, betas, n } => {
            let map = merged_config(&common, vec![("l_list", opt(&l_list)), ("betas", opt(&betas)), ("n", opt(&n))])?;
            let cfg: AttemptsConfig = typed("resnet-attempts", &map)?;
            let rows = cfg.run()?;
            write_outputs("resnet-attempts", &common, &serde_json::to_value(&cfg)?, &rows, started)
        }
        Command::PoolVerify { common, size, d, images, mode } => {
            if let Some(m) = &mode {
                parse_mode(m)?;
            }
            let map = merged_config(
                &common,
                vec![("size", opt(&size)), ("d", opt(&d)), ("images", opt(&images)), ("mode", opt(&mode))],
            )?;
            let (params, rows, worst) = run_pool_verify(&map)?;
            let path = write_outputs("pool-verify", &common, &params, &rows, started)?;
            verified("pool-verify", worst)?;
            Ok(path)
        }
        Command::PoolSweep { common, axis, d_values, n_values, d, images, mode, mnist_dir } => {
            if let Some(m) = &mode {
                parse_mode(m)?;
            }
            let map = merged_config(
                &common,
                vec![
                    ("axis", opt(&axis)),
                    ("d_values", opt(&d_values)),
                    ("n_values", opt(&n_values)),
                    ("d", opt(&d)),
                    ("images", opt(&images)),
                    ("mode", opt(&mode)),
                    ("mnist_dir", opt(&mnist_dir)),
                ],
            )?;
            let mut cfg: PoolSweepConfig = typed("pool-sweep", &map)?;
            if cfg.mnist_dir.is_none() {
                cfg.mnist_dir = std::env::var_os("MNIST_DIR").map(PathBuf::from);
            }
            let dir = cfg
                .mnist_dir
                .clone()
                .ok_or_else(|| Error::Config("pool-sweep: missing field `mnist_dir` (flag --mnist-dir or MNIST_DIR)".into()))?;
            let images = load_mnist_dir(&dir, cfg.sweep.images)?;
            let rows = mnist_probability_sweep(&images, &cfg.sweep.axis, cfg.sweep.mode)?;
            write_outputs("pool-sweep", &common, &serde_json::to_value(&cfg)?, &rows, started)
        }
        Command::ProjectVerify { common, group, group_file, cases } => {
            let map = merged_config(
                &common,
                vec![("group", opt(&group)), ("group_file", opt(&group_file)), ("cases", opt(&cases))],
            )?;
            let (params, rows, worst) = run_project_verify(&map)?;
            let path = write_outputs("project-verify", &common, &params, &rows, started)?;
            verified("project-verify", worst)?;
            Ok(path)
        }
        Command::RotinvOverlap { common, clouds, angles } => {
            let map = merged_config(&common, vec![("clouds", opt(&clouds)), ("angles", opt(&angles))])?;
            let cfg: RotationConfig = typed("rotinv-overlap", &map)?;
            let rows = rotational_invariance_experiment(&cfg)?;
            write_outputs("rotinv-overlap", &common, &serde_json::to_value(&cfg)?, &rows, started)
        }
        Command::AlphaSweep { common, alphas, repetitions, samples } => {
            let map = merged_config(
                &common,
                vec![("alphas", opt(&alphas)), ("repetitions", opt(&repetitions)), ("samples", opt(&samples))],
            )?;
            let cfg: AlphaSweepConfig = typed("alpha-sweep", &map)?;
            cfg.validate()?;
            let rows = alpha_sweep_experiment(&cfg)?;
            write_outputs("alpha-sweep", &common, &serde_json::to_value(&cfg)?, &rows, started)
        }
    }
}

/// Exit status for an error: 3 for numerical failures, 2 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) | Error::PostSelectionImpossible { .. } | Error::Validation(_) => 3,
        _ => 2,
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(path) => {
            println!("wrote {}", display(&path));
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
