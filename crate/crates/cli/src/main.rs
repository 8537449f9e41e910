use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ehalloc::config::{RunConfigFile, RunSpec};
use ehalloc::figures::{figure_data, FigureData, FigureOptions, FIGURE_IDS};
use ehalloc::lyapunov::{compute_c, compute_v_max, prepare, validate_wr_feasibility};
use ehalloc::sim::{run_with, sweep, AxisValue, SweepAxis};
use ehalloc::trace::{write_json, TraceWriter};
use ehalloc::{Error, Scheme};
use serde_json::json;

#[derive(Parser)]
#[command(name = "ehalloc", version, about = "Energy-harvesting NOMA/OMA power allocation simulator")]
struct Cli {
    /// Directory for outputs whose path is not given explicitly.
    #[arg(long, global = true, env = "EHALLOC_OUT_DIR")]
    out_dir: Option<PathBuf>,

    /// Worker threads for sweeps and figures (default: all cores).
    #[arg(long, global = true, env = "EHALLOC_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a run file and print the derived constants as JSON.
    Validate { config: PathBuf },

    /// Simulate one run and write its trace CSV and summary JSON.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        run_id: Option<u64>,
        #[arg(long)]
        slots: Option<u64>,
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[arg(long)]
        summary_out: Option<PathBuf>,
        /// Skip the trace and write only the summary.
        #[arg(long)]
        no_trace: bool,
    },

    /// Run a one-dimensional parameter sweep and print a CSV table.
    Sweep {
        /// Run file used as the template; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated values: numbers, or scheme names for `scheme`.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long)]
        runs: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        slots: Option<u64>,
        /// Also write the table to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Reproduce one of the throughput figures as CSV and SVG.
    Fig {
        /// Figure number, 3 to 8.
        id: u8,
        /// Run file supplying slots, runs, seed and arrival rate.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for `fig<ID>.csv` and `fig<ID>.svg`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        slots: Option<u64>,
        #[arg(long)]
        runs: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Slots between points of the running-average curves.
        #[arg(long)]
        stride: Option<u64>,
        /// Re-render the SVG from an existing figure CSV instead of simulating.
        #[arg(long)]
        from_csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Lambda,
    V,
    Scheme,
}

/// Exit statuses: 0 success, 1 validation failure, 2 runtime failure, 3 I/O.
fn status(e: &Error) -> u8 {
    if e.is_io() {
        3
    } else if e.is_validation() {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let out_dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let result = match cli.command {
        Command::Validate { config } => validate(&config),
        Command::Run {
            config,
            seed,
            run_id,
            slots,
            trace_out,
            summary_out,
            no_trace,
        } => run(&config, &out_dir, seed, run_id.unwrap_or(0), slots, trace_out, summary_out, no_trace),
        Command::Sweep {
            config,
            axis,
            values,
            runs,
            seed,
            slots,
            out,
        } => sweep_cmd(config.as_deref(), axis, &values, runs, seed, slots, out.as_deref()),
        Command::Fig {
            id,
            config,
            out,
            slots,
            runs,
            seed,
            stride,
            from_csv,
        } => fig(id, config.as_deref(), out.unwrap_or(out_dir), slots, runs, seed, stride, from_csv.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(status(&e))
        }
    }
}

fn load(path: Option<&Path>) -> Result<RunSpec, Error> {
    match path {
        Some(p) => RunConfigFile::load(p)?.resolve(),
        None => RunConfigFile::default().resolve(),
    }
}

fn validate(path: &Path) -> Result<(), Error> {
    let spec = load(Some(path))?;
    let cfg = &spec.system;
    let mut errors: Vec<Error> = Vec::new();
    if let Err(e) = cfg.validate() {
        errors.push(e);
    }
    let v_max = compute_v_max(cfg).map_err(|e| errors.push(e)).ok();
    let v = cfg.v_param.or(v_max);
    let report = validate_wr_feasibility(cfg);
    if errors.is_empty() {
        if let Err(e) = prepare(cfg) {
            errors.push(e);
        }
    }
    let failures: Vec<String> = errors.iter().map(|e| e.to_string()).collect();
    let diagnostics = json!({
        "ok": failures.is_empty(),
        "scheme": cfg.scheme,
        "users": cfg.users,
        "v_max": v_max,
        "v": v,
        "c": v.map(|v| compute_c(cfg, v)),
        "p_th_best": report.p_th_best,
        "p_th_worst": report.p_th_worst,
        "e_th_worst": report.e_th_worst,
        "rate_floor_checks": cfg.scheme.has_rate_floors().then_some(&report),
        "failures": failures,
    });
    println!("{}", serde_json::to_string_pretty(&diagnostics).expect("json"));
    match errors.into_iter().next() {
        None => Ok(()),
        Some(e) => Err(e),
    }
}

fn under(dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        dir.join(p)
    }
}

#[allow(clippy::too_many_arguments)]
fn run(
    path: &Path,
    out_dir: &Path,
    seed: Option<u64>,
    run_id: u64,
    slots: Option<u64>,
    trace_out: Option<PathBuf>,
    summary_out: Option<PathBuf>,
    no_trace: bool,
) -> Result<(), Error> {
    let spec = load(Some(path))?;
    let dir = spec.output.dir.as_deref().map_or_else(|| out_dir.to_path_buf(), |d| under(out_dir, d));
    let trace_path = trace_out.unwrap_or_else(|| under(&dir, spec.output.trace.as_deref().unwrap_or(Path::new("trace.csv"))));
    let summary_path =
        summary_out.unwrap_or_else(|| under(&dir, spec.output.summary.as_deref().unwrap_or(Path::new("summary.json"))));
    for p in [&trace_path, &summary_path] {
        if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| Error::Io {
                path: parent.to_path_buf(),
                source: e,
            })?;
        }
    }
    let seed = seed.unwrap_or(spec.seed);
    let slots = slots.unwrap_or(spec.slots);
    let summary = if no_trace {
        run_with(&spec.system, seed, run_id, slots, |_| Ok(()))?
    } else {
        let mut writer = TraceWriter::create(&trace_path, spec.system.users)?;
        let summary = run_with(&spec.system, seed, run_id, slots, |r| writer.write(r))?;
        writer.finish()?;
        summary
    };
    write_json(&summary_path, &summary)?;
    eprintln!(
        "{} slots of {}: throughput {:.4} bits/s/Hz",
        summary.slots, summary.scheme, summary.final_throughput
    );
    Ok(())
}

fn parse_values(axis: Axis, raw: &[String]) -> Result<Vec<AxisValue>, Error> {
    raw.iter()
        .map(|s| {
            let s = s.trim();
            match axis {
                Axis::Scheme => s.parse::<Scheme>().map(AxisValue::Scheme),
                Axis::Lambda | Axis::V => s
                    .parse::<f64>()
                    .map(AxisValue::Number)
                    .map_err(|e| Error::InvalidArgument(format!("sweep value {s:?}: {e}"))),
            }
        })
        .collect()
}

fn sweep_cmd(
    config: Option<&Path>,
    axis: Axis,
    raw: &[String],
    runs: Option<u64>,
    seed: Option<u64>,
    slots: Option<u64>,
    out: Option<&Path>,
) -> Result<(), Error> {
    let spec = load(config)?;
    let values = parse_values(axis, raw)?;
    let axis = match axis {
        Axis::Lambda => SweepAxis::Lambda,
        Axis::V => SweepAxis::V,
        Axis::Scheme => SweepAxis::Scheme,
    };
    let run_ids: Vec<u64> = (0..runs.unwrap_or(spec.runs)).collect();
    let cells = sweep(
        &spec.system,
        axis,
        &values,
        seed.unwrap_or(spec.seed),
        &run_ids,
        slots.unwrap_or(spec.slots),
    );
    let mut table = String::from("value,runs,mean,std_err,failures\n");
    let mut failed = 0;
    for c in &cells {
        table.push_str(&format!("{},{},{},{},{}\n", c.value, c.runs, c.mean, c.std_err, c.failures.len()));
        for f in &c.failures {
            eprintln!("{}: {f}", c.value);
            failed += 1;
        }
    }
    print!("{table}");
    if let Some(p) = out {
        std::fs::write(p, &table).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        })?;
    }
    if failed > 0 {
        return Err(Error::RunsFailed {
            failed,
            total: cells.len() * run_ids.len(),
        });
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn fig(
    id: u8,
    config: Option<&Path>,
    out: PathBuf,
    slots: Option<u64>,
    runs: Option<u64>,
    seed: Option<u64>,
    stride: Option<u64>,
    from_csv: Option<&Path>,
) -> Result<(), Error> {
    if !FIGURE_IDS.contains(&id) {
        return Err(Error::InvalidArgument(format!("unknown figure {id}; expected one of {FIGURE_IDS:?}")));
    }
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |e| Error::Io { path, source: e }
    };
    std::fs::create_dir_all(&out).map_err(io(&out))?;
    let csv_path = out.join(format!("fig{id}.csv"));
    let svg_path = out.join(format!("fig{id}.svg"));
    let data = if let Some(src) = from_csv {
        let text = std::fs::read_to_string(src).map_err(io(src))?;
        FigureData::from_csv(id, &text)?
    } else {
        let mut opts = FigureOptions::default();
        if let Some(p) = config {
            let file = RunConfigFile::load(p)?;
            let spec = file.resolve()?;
            opts.slots = spec.slots;
            opts.runs = spec.runs;
            opts.seed = spec.seed;
            if file.arrival.lambda.is_some() {
                opts.lambda = spec.system.arrival.lambda;
            }
        }
        opts.slots = slots.unwrap_or(opts.slots);
        opts.runs = runs.unwrap_or(opts.runs);
        opts.seed = seed.unwrap_or(opts.seed);
        opts.stride = stride.unwrap_or(opts.stride);
        let data = figure_data(id, &opts)?;
        std::fs::write(&csv_path, data.to_csv()).map_err(io(&csv_path))?;
        data
    };
    std::fs::write(&svg_path, ehalloc::svg::render(&data)).map_err(io(&svg_path))?;
    if from_csv.is_none() {
        eprintln!("wrote {}", csv_path.display());
    }
    eprintln!("wrote {}", svg_path.display());
    Ok(())
}
