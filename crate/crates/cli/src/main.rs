use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use workcell_core::analysis::{
    crossover, effective_takt, project_shift, replay_compare, shift_takt, write_series_csv, Strategy, TimingModel,
    EFFECTIVE_TAKT_S,
};
use workcell_core::safety::{
    kinetic_report, read_motion_log, read_scan_log, write_decision_log, write_jsonl, EnergyLimitTable, MonitorConfig,
};
use workcell_core::scheduler::{run_shift, write_cycle_csv, write_event_csv};
use workcell_core::world::{Scenario, World, WorldSafety};

#[derive(Parser)]
#[command(name = "workcell", version, about = "Deterministic collaborative workcell simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write event, decision and cycle logs.
    Simulate {
        scenario: PathBuf,
        /// Override the scenario duration, s.
        #[arg(long)]
        duration: Option<f64>,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write scans.jsonl and motion.jsonl for offline replay.
        #[arg(long)]
        record_scans: bool,
    },
    /// Replay recorded scans under several safety strategies.
    Replay {
        #[arg(long)]
        scans: PathBuf,
        #[arg(long)]
        motion: PathBuf,
        /// Scenario whose monitor settings to use; defaults otherwise.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Comma-separated: none, fixed_margin[=m], fixed_zones, dynamic_spheres.
        #[arg(long, value_delimiter = ',', default_value = "none,fixed_margin,fixed_zones,dynamic_spheres")]
        strategies: Vec<String>,
        /// Report CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cumulative output over a shift as a (time_s, count) CSV.
    Project {
        #[arg(long, value_enum)]
        model: ModelArg,
        /// e.g. 8h, 90m, 3600s or plain seconds.
        #[arg(long, default_value = "8h")]
        horizon: String,
        /// Takt for the effective model, s.
        #[arg(long)]
        takt: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Kinetic-energy safety ratios per body region.
    Energy {
        /// JSON object mapping arm name to kinetic energy in J.
        arms: PathBuf,
    },
    /// Parse and validate a scenario without running it.
    Validate { scenario: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Human,
    Robot,
    Effective,
}

/// Errors split by exit code: bad input (2) or a failed run (1).
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<workcell_core::Error> for Failure {
    fn from(e: workcell_core::Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn runtime(context: &str) -> impl FnOnce(io::Error) -> Failure + '_ {
    move |e| Failure::Runtime(format!("{context}: {e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            scenario,
            duration,
            seed,
            out,
            record_scans,
        } => simulate(&scenario, duration, seed, &out, record_scans),
        Command::Replay {
            scans,
            motion,
            scenario,
            strategies,
            out,
        } => replay(&scans, &motion, scenario.as_deref(), &strategies, out.as_deref()),
        Command::Project {
            model,
            horizon,
            takt,
            out,
        } => project(model, &horizon, takt, out.as_deref()),
        Command::Energy { arms } => energy(&arms),
        Command::Validate { scenario } => load_scenario(&scenario).map(|s| {
            println!("{}: ok ({})", scenario.display(), s.name);
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    let text = read_input(path)?;
    let s = Scenario::from_json(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    s.validate()?;
    Ok(s)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Runtime(format!("creating {}: {e}", path.display())))
}

fn simulate(
    path: &Path,
    duration: Option<f64>,
    seed: Option<u64>,
    out: &Path,
    record_scans: bool,
) -> Result<(), Failure> {
    let mut scenario = load_scenario(path)?;
    if let Some(d) = duration {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Failure::Config(format!("--duration: must be > 0, got {d}")));
        }
        scenario.duration_s = d;
    }
    if let Some(s) = seed {
        scenario.seed = s;
    }
    fs::create_dir_all(out).map_err(runtime("creating output directory"))?;
    let duration_s = scenario.duration_s;
    let seed = scenario.seed;
    let task = scenario.task.clone();
    let mut source = WorldSafety::new(World::new(scenario)?, record_scans)?;
    let shift = run_shift(&task, &mut source, duration_s, seed)?;
    let rec = source.into_recording();

    write_event_csv(create(&out.join("events.csv"))?, &shift.events)?;
    write_decision_log(create(&out.join("decisions.csv"))?, &rec.decisions)?;
    write_cycle_csv(create(&out.join("cycles.csv"))?, &shift.cycles)?;
    if record_scans {
        write_jsonl(create(&out.join("scans.jsonl"))?, &rec.scans)?;
        write_jsonl(create(&out.join("motion.jsonl"))?, &rec.motion)?;
    }

    let n = shift.cycles.len();
    let pass = shift
        .pass_rate()
        .map_or("n/a".to_string(), |p| format!("{:.1}% ({}/{})", p * 100.0, shift.operations() - shift.defects(), shift.operations()));
    let takt = match (effective_takt(&shift.cycles), shift_takt(duration_s, n)) {
        (Ok(c), Ok(s)) => format!("{s:.1} s (per cycle {c:.1} s)"),
        _ => "n/a".to_string(),
    };
    println!("cycles completed {n}, pass rate {pass}, effective takt {takt}");
    Ok(())
}

fn replay(
    scans: &Path,
    motion: &Path,
    scenario: Option<&Path>,
    strategies: &[String],
    out: Option<&Path>,
) -> Result<(), Failure> {
    let config = match scenario {
        Some(p) => load_scenario(p)?.monitor,
        None => MonitorConfig::default(),
    };
    let strategies = strategies
        .iter()
        .map(|s| s.parse::<Strategy>())
        .collect::<Result<Vec<_>, _>>()?;
    let missing = |p: &Path| Failure::Config(format!("{}: no such file", p.display()));
    if !scans.is_file() {
        return Err(missing(scans));
    }
    if !motion.is_file() {
        return Err(missing(motion));
    }
    let s = read_scan_log(scans)?;
    let m = read_motion_log(motion)?;
    let report = replay_compare(&s, &m, &config, &strategies)?;
    match out {
        Some(p) => {
            report.write_csv(create(p)?)?;
            print!("{}", report.summary());
        }
        None => report.write_csv(io::stdout().lock())?,
    }
    Ok(())
}

/// `8h`, `90m`, `3600s` or plain seconds.
fn parse_horizon(s: &str) -> Option<u32> {
    let s = s.trim();
    let (num, scale) = if let Some(n) = s.strip_suffix('h') {
        (n, 3600.0)
    } else if let Some(n) = s.strip_suffix('m') {
        (n, 60.0)
    } else if let Some(n) = s.strip_suffix('s') {
        (n, 1.0)
    } else {
        (s, 1.0)
    };
    let v: f64 = num.trim().parse().ok()?;
    let secs = (v * scale).round();
    (secs > 0.0 && secs <= u32::MAX as f64).then_some(secs as u32)
}

fn project(model: ModelArg, horizon: &str, takt: Option<f64>, out: Option<&Path>) -> Result<(), Failure> {
    let horizon_s =
        parse_horizon(horizon).ok_or_else(|| Failure::Config(format!("--horizon: cannot parse '{horizon}'")))?;
    let mut m = match model {
        ModelArg::Human => TimingModel::human(),
        ModelArg::Robot => TimingModel::robot_alone(),
        ModelArg::Effective => TimingModel::robot_between_humans(EFFECTIVE_TAKT_S),
    };
    if let Some(t) = takt {
        m.takt_s = t;
    }
    let series = project_shift(&m, horizon_s)?;
    match out {
        Some(p) => write_series_csv(create(p)?, &series)?,
        None => write_series_csv(io::stdout().lock(), &series)?,
    }
    let human = project_shift(&TimingModel::human(), horizon_s)?;
    let mut err = io::stderr().lock();
    let _ = write!(err, "{} units after {} s", series.last().copied().unwrap_or(0), horizon_s);
    if !matches!(model, ModelArg::Human) {
        match crossover(&series, &human) {
            Some(t) => {
                let _ = write!(err, "; overtakes the human series at {t} s");
            }
            None => {
                let _ = write!(err, "; never overtakes the human series");
            }
        }
    }
    let _ = writeln!(err);
    Ok(())
}

fn energy(path: &Path) -> Result<(), Failure> {
    let text = read_input(path)?;
    let map: serde_json::Map<String, serde_json::Value> =
        serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let arms = map
        .into_iter()
        .map(|(k, v)| match v.as_f64() {
            Some(t) => Ok((k, t)),
            None => Err(Failure::Config(format!("{}: arm '{k}' is not a number", path.display()))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let limits = EnergyLimitTable::default();
    let report = kinetic_report(&arms, &limits)?;
    print!("{}", report.to_table(&limits));
    Ok(())
}
