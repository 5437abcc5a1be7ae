//! Command-line front end: network generation, scenario sampling,
//! training-set pre-solving, predictor training, single solves, the
//! grid oracle, and the cold/warm benchmark.

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use gasflow::ann::TrainConfig;
use gasflow::ccp::{cold_start, run_ccp, warm_start_from_pressures, CcpConfig};
use gasflow::model::{build_quasi_dynamic, build_steady_state, ProblemInstance};
use gasflow::network::{
    load_network, read_scenarios_csv, sample_scenarios, serialize_network, write_scenarios_csv,
    GasNetwork, Scenario,
};
use gasflow::pipeline::netgen::{network_t1, network_t2, seven_node_like, twenty_node_like};
use gasflow::pipeline::training::{read_dataset_csv, write_dataset_csv};
use gasflow::pipeline::{
    brute_force_oracle, build_training_set, default_initial_linepack, run_benchmark,
    train_artifact, BenchConfig, Method, ModelArtifact, PresolveConfig,
};
use gasflow::{Error, Result};

#[derive(Parser)]
#[command(name = "gasflow", about = "Optimal gas flow via penalty CCP with learned warm starts")]
struct Cli {
    /// JSON file with optional `ccp` and `train` sections overriding the
    /// built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum NetKind {
    T1,
    T2,
    Seven,
    Twenty,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Cold,
    Warm,
    Oracle,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Cold => Method::ColdCcp,
            MethodArg::Warm => Method::WarmCcp,
            MethodArg::Oracle => Method::Oracle,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a built-in or synthetic network as JSON.
    GenNet {
        #[arg(long, value_enum)]
        kind: NetKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample demand-fluctuation scenarios into a CSV file.
    Sample {
        #[arg(long)]
        network: PathBuf,
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Relative demand fluctuation half-width, e.g. 0.1 for +-10%.
        #[arg(long, default_value_t = 0.1)]
        fluctuation: f64,
        #[arg(long, default_value_t = 1)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pre-solve scenarios with multi-start cold CCP into a dataset CSV.
    Presolve {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long, default_value_t = 3)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train per-slot pressure predictors on a pre-solved dataset.
    Train {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 1)]
        horizon: usize,
        /// Hidden layer widths, comma separated; empty means twice the
        /// node count.
        #[arg(long, value_delimiter = ',')]
        hidden: Vec<usize>,
        #[arg(long, default_value_t = 0.2)]
        test_fraction: f64,
        #[arg(long, default_value_t = 0)]
        split_seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one scenario, cold or warm, and print the result as JSON.
    Solve {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long, default_value_t = 0)]
        scenario_id: usize,
        /// Trained model for the warm start; omitted means cold start.
        #[arg(long)]
        warm: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Brute-force grid oracle for one steady-state scenario.
    Oracle {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long, default_value_t = 0)]
        scenario_id: usize,
        #[arg(long, default_value_t = 1e-3)]
        resolution: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Benchmark the requested methods over a scenario file.
    Bench {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [MethodArg::Cold, MethodArg::Warm])]
        methods: Vec<MethodArg>,
        /// Trained model, required when `warm` is among the methods.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-3)]
        oracle_resolution: f64,
        /// JSON report destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optional per-run CSV next to the JSON report.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

/// Optional override file; absent sections keep their defaults.
#[derive(Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AppConfig {
    ccp: CcpConfig,
    train: TrainConfig,
}

impl AppConfig {
    fn load(path: Option<&Path>) -> Result<AppConfig> {
        match path {
            None => Ok(AppConfig::default()),
            Some(p) => {
                let text = fs::read_to_string(p)?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::Parse(format!("{}: {e}", p.display())))
            }
        }
    }
}

fn read_network(path: &Path) -> Result<GasNetwork> {
    let text = fs::read_to_string(path)?;
    load_network(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn read_scenarios(path: &Path) -> Result<Vec<Scenario>> {
    let text = fs::read_to_string(path)?;
    read_scenarios_csv(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn pick_scenario(scenarios: Vec<Scenario>, id: usize) -> Result<Scenario> {
    scenarios
        .into_iter()
        .find(|s| s.id == id)
        .ok_or_else(|| Error::Missing(format!("scenario id {id} not in file")))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            fs::write(p, text)?;
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn build_instance(network: &GasNetwork, scenario: &Scenario) -> Result<ProblemInstance> {
    if scenario.horizon == 1 {
        build_steady_state(network, scenario)
    } else {
        build_quasi_dynamic(network, scenario)
    }
}

fn run(cli: Cli) -> Result<()> {
    let app = AppConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::GenNet { kind, seed, out } => {
            let net = match kind {
                NetKind::T1 => network_t1(),
                NetKind::T2 => network_t2(),
                NetKind::Seven => seven_node_like(seed),
                NetKind::Twenty => twenty_node_like(seed),
            };
            emit(Some(&out), &serialize_network(&net))
        }
        Command::Sample {
            network,
            count,
            fluctuation,
            horizon,
            seed,
            out,
        } => {
            let net = read_network(&network)?;
            let scenarios = sample_scenarios(&net, count, fluctuation, horizon, seed)?;
            emit(Some(&out), &write_scenarios_csv(&scenarios))
        }
        Command::Presolve {
            network,
            scenarios,
            restarts,
            seed,
            out,
        } => {
            let net = read_network(&network)?;
            let scs = read_scenarios(&scenarios)?;
            let cfg = PresolveConfig {
                restarts,
                ccp: app.ccp.clone(),
                seed,
            };
            let (data, dropped) = build_training_set(&net, &scs, &cfg)?;
            eprintln!(
                "pre-solved {} scenarios, dropped {dropped}",
                data.inputs.len()
            );
            emit(Some(&out), &write_dataset_csv(&data))
        }
        Command::Train {
            network,
            dataset,
            horizon,
            hidden,
            test_fraction,
            split_seed,
            out,
        } => {
            let net = read_network(&network)?;
            let mut data = read_dataset_csv(&fs::read_to_string(&dataset)?)?;
            data.split(test_fraction, split_seed)?;
            let (artifact, histories) =
                train_artifact(&net, &data, horizon, &hidden, &app.train)?;
            for (t, h) in histories.iter().enumerate() {
                eprintln!(
                    "slot {t}: loss {:.6} -> {:.6} over {} epochs",
                    h.first().unwrap_or(&f64::NAN),
                    h.last().unwrap_or(&f64::NAN),
                    h.len()
                );
            }
            artifact.save(&out)
        }
        Command::Solve {
            network,
            scenarios,
            scenario_id,
            warm,
            seed,
            out,
        } => {
            let net = read_network(&network)?;
            let mut sc = pick_scenario(read_scenarios(&scenarios)?, scenario_id)?;
            if sc.horizon > 1 && sc.initial_linepack.len() < net.pipelines.len() {
                let presolve = PresolveConfig {
                    ccp: app.ccp.clone(),
                    seed,
                    ..PresolveConfig::default()
                };
                sc.initial_linepack = default_initial_linepack(&net, &presolve)?;
            }
            let instance = build_instance(&net, &sc)?;
            let start = match warm {
                Some(model_path) => {
                    let artifact = ModelArtifact::load(&model_path)?;
                    let predicted = artifact.predict_pressures(&sc.feature_vector(&net))?;
                    warm_start_from_pressures(&instance, &predicted)?
                }
                None => cold_start(&instance, seed),
            };
            let result = run_ccp(&instance, &start, &app.ccp)?;
            let mut text = serde_json::to_string_pretty(&result)
                .map_err(|e| Error::Parse(e.to_string()))?;
            text.push('\n');
            emit(out.as_deref(), &text)
        }
        Command::Oracle {
            network,
            scenarios,
            scenario_id,
            resolution,
            out,
        } => {
            let net = read_network(&network)?;
            let sc = pick_scenario(read_scenarios(&scenarios)?, scenario_id)?;
            let result = brute_force_oracle(&net, &sc, resolution)?;
            let mut text = serde_json::to_string_pretty(&result)
                .map_err(|e| Error::Parse(e.to_string()))?;
            text.push('\n');
            emit(out.as_deref(), &text)
        }
        Command::Bench {
            network,
            scenarios,
            methods,
            model,
            threads,
            seed,
            oracle_resolution,
            out,
            csv,
        } => {
            let net = read_network(&network)?;
            let scs = read_scenarios(&scenarios)?;
            let methods: Vec<Method> = methods.into_iter().map(Method::from).collect();
            let artifact = match model {
                Some(p) => Some(ModelArtifact::load(&p)?),
                None => None,
            };
            let cfg = BenchConfig {
                ccp: app.ccp.clone(),
                seed,
                oracle_resolution,
                threads,
            };
            let report = run_benchmark(&net, &scs, &methods, &cfg, artifact.as_ref())?;
            if let Some(csv_path) = csv {
                fs::write(&csv_path, report.rows_csv())?;
            }
            emit(out.as_deref(), &report.to_json())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
