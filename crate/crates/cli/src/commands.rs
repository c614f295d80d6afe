use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde_json::Value;
use urnsim_core::exact::{enumerate, enumerate_paths};
use urnsim_core::montecarlo::{read_samples_csv, run_sweep, run_sweep_with_threads, write_samples_csv};
use urnsim_core::ode::{default_step_size, integrate_strided, predicted_consensus};
use urnsim_core::stats::{conjecture_report, goodness_of_fit};
use urnsim_core::urn::write_trajectory;
use urnsim_core::{Color, Graph, GraphSpec, SweepConfig, UrnRng, UrnState};

use crate::{Command, GraphArg};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] urnsim_core::Error),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_input_error() => 2,
            _ => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate { graph, alpha, init, steps, seed, stride, out } => {
            let g = load_graph(&graph)?;
            let mut rng = UrnRng::seed_from_u64(seed);
            let mut state = match (alpha, init) {
                (Some(alpha), None) => UrnState::init_signals(&g, alpha, &mut rng)?,
                (None, Some(init)) => UrnState::init_fixed(&g, &Color::parse_list(&init)?)?,
                _ => return Err(CliError::Usage("give exactly one of --alpha or --init".into())),
            };
            let dest = out_name(out.as_deref());
            let mut w = writer(out.as_deref())?;
            write_trajectory(&mut w, &g, &mut state, steps, stride, &mut rng).map_err(|e| match e {
                urnsim_core::Error::Io(source) => CliError::Write { path: dest.clone(), source },
                e => e.into(),
            })?;
            finish(w, &dest)
        }
        Command::Sweep { config, out_dir, threads } => sweep(&config, &out_dir, threads),
        Command::Enumerate { graph, init, depth, paths, out } => {
            let g = load_graph(&graph)?;
            let state = UrnState::init_fixed(&g, &Color::parse_list(&init)?)?;
            let json = if paths {
                Value::Array(enumerate_paths(&g, &state, depth)?.iter().map(|p| p.to_json()).collect())
            } else {
                enumerate(&g, &state, depth)?.to_json()
            };
            emit(out.as_deref(), &pretty(&json))
        }
        Command::Ode { graph, z0, horizon, step_size, stride, out } => {
            let g = load_graph(&graph)?;
            let h = step_size.unwrap_or_else(|| default_step_size(&g));
            let traj = integrate_strided(&g, &z0, h, horizon, stride)?;
            eprintln!(
                "terminal time {}; predicted consensus {:.9}",
                traj.terminal_time(),
                predicted_consensus(&g, &z0)?
            );
            emit(out.as_deref(), &traj.to_csv())
        }
        Command::Fit { input, out } => {
            let rows = read_samples_csv(&read_input(&input)?)?;
            let samples: Vec<f64> = rows.iter().map(|r| r.limit_estimate).collect();
            let report = goodness_of_fit(&samples)?;
            emit(out.as_deref(), &pretty(&report.to_json()))
        }
        Command::Report { inputs, out } => {
            let mut levels: Vec<(f64, Vec<f64>)> = Vec::new();
            for path in &inputs {
                for row in read_samples_csv(&read_input(path)?)? {
                    let alpha = row.alpha.ok_or_else(|| {
                        CliError::Usage(format!("{}: no `alpha` column", path.display()))
                    })?;
                    match levels.iter_mut().find(|(a, _)| *a == alpha) {
                        Some((_, v)) => v.push(row.limit_estimate),
                        None => levels.push((alpha, vec![row.limit_estimate])),
                    }
                }
            }
            let report = conjecture_report(&levels)?;
            eprintln!(
                "a+b relative spread {:.4}; max |mean - alpha| {:.4}",
                report.max_relative_deviation_sum, report.max_mean_deviation
            );
            emit(out.as_deref(), &report.to_csv())
        }
    }
}

fn sweep(config: &Path, out_dir: &Path, threads: Option<usize>) -> Result<()> {
    let cfg = SweepConfig::from_json(&read_input(config)?)?;
    let g = build_graph(&cfg.graph)?;
    cfg.validate(&g)?;
    if threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    fs::create_dir_all(out_dir).map_err(|source| CliError::Write {
        path: out_dir.display().to_string(),
        source,
    })?;
    println!("alpha,replicas,mean_limit,sd_limit,mean_spread_T,file");
    for level in 0..cfg.alphas.len() {
        let run = cfg.level(level)?;
        let results = match threads {
            Some(t) => run_sweep_with_threads(&run, &g, t)?,
            None => run_sweep(&run, &g)?,
        };
        let path = out_dir.join(format!("samples_alpha_{}.csv", run.alpha));
        let dest = path.display().to_string();
        let mut w = writer(Some(&path))?;
        write_samples_csv(&mut w, run.alpha, &results)
            .map_err(|source| CliError::Write { path: dest.clone(), source })?;
        finish(w, &dest)?;

        let n = results.len() as f64;
        let mean = results.iter().map(|r| r.limit_estimate).sum::<f64>() / n;
        let var = results.iter().map(|r| (r.limit_estimate - mean).powi(2)).sum::<f64>() / n;
        let spread = results.iter().map(|r| r.spread).sum::<f64>() / n;
        println!("{},{},{:.6},{:.6},{:.6},{}", run.alpha, results.len(), mean, var.sqrt(), spread, dest);
    }
    Ok(())
}

fn load_graph(arg: &GraphArg) -> Result<Graph> {
    match (&arg.graph, &arg.graph_file) {
        (Some(spec), None) => build_graph(&spec.parse()?),
        (None, Some(path)) => Ok(Graph::parse_edge_list(&read_input(path)?)?),
        _ => Err(CliError::Usage("give exactly one of --graph or --graph-file".into())),
    }
}

// Edge-list files are read here so that a missing file counts as bad input.
fn build_graph(spec: &GraphSpec) -> Result<Graph> {
    match spec {
        GraphSpec::File(path) => Ok(Graph::parse_edge_list(&read_input(path)?)?),
        other => Ok(other.build()?),
    }
}

fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

// Arrays print one compact element per line; anything else prints compact.
fn pretty(v: &Value) -> String {
    match v {
        Value::Array(items) if !items.is_empty() => {
            let lines: Vec<String> = items.iter().map(|x| format!("  {x}")).collect();
            format!("[\n{}\n]\n", lines.join(",\n"))
        }
        other => format!("{other}\n"),
    }
}

fn out_name(out: Option<&Path>) -> String {
    out.map_or_else(|| "<stdout>".to_string(), |p| p.display().to_string())
}

fn writer(out: Option<&Path>) -> Result<BufWriter<Box<dyn Write>>> {
    let inner: Box<dyn Write> = match out {
        Some(p) => Box::new(File::create(p).map_err(|source| CliError::Write {
            path: p.display().to_string(),
            source,
        })?),
        None => Box::new(io::stdout().lock()),
    };
    Ok(BufWriter::new(inner))
}

fn finish(mut w: BufWriter<Box<dyn Write>>, dest: &str) -> Result<()> {
    w.flush().map_err(|source| CliError::Write { path: dest.to_string(), source })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    let dest = out_name(out);
    let mut w = writer(out)?;
    w.write_all(text.as_bytes())
        .map_err(|source| CliError::Write { path: dest.clone(), source })?;
    finish(w, &dest)
}
