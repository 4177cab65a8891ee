mod config;
mod error;
mod output;
mod units;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime};

use clap::{Args, Parser, Subcommand};
use rydpol::basis::{R1, R2};
use rydpol::dressed::{dress_rydberg_pair, transition_strength_table};
use rydpol::spectra::{sweep_spectrogram, Doppler, SolverKind};
use rydpol::verify::run_verify;
use rydpol::{enumerate_basis, Preset};

use config::{Format, Scenario, ScenarioFile};
use error::CliError;
use output::{write_file, RunInfo};
use units::{parse_frequency, AngleGrid, DetuningGrid, Freq};

#[derive(Parser)]
#[command(
    name = "rydpol",
    version,
    about = "Polarization spectra of RF-dressed Rydberg EIT ladders"
)]
struct Cli {
    /// Worker threads for sweeps; 0 uses one per processing unit.
    #[arg(long, global = true, env = "RYDPOL_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep RF angle and coupling detuning and write a spectrogram.
    Run(RunArgs),
    /// Write dressed-level and transition-strength tables.
    Dressed(ScenarioArgs),
    /// Run the cross-check suite and print a JSON report.
    Verify(VerifyArgs),
    /// List the built-in ladders.
    Presets,
    /// Print an annotated scenario file with every default.
    Schema,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file (TOML), or a manifest whose config echo is re-run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// e.g. 10MHz, 2π×10MHz, 6.28e7rad/s
    #[arg(long, value_parser = parse_frequency, allow_hyphen_values = true)]
    rf_rabi: Option<f64>,
    #[arg(long, value_parser = parse_frequency, allow_hyphen_values = true)]
    rf_detuning: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated: tsv, json.
    #[arg(long, value_delimiter = ',', value_parser = parse_format)]
    format: Option<Vec<Format>>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, value_parser = parse_frequency, allow_hyphen_values = true)]
    probe_rabi: Option<f64>,
    #[arg(long, value_parser = parse_frequency, allow_hyphen_values = true)]
    probe_detuning: Option<f64>,
    #[arg(long, value_parser = parse_frequency, allow_hyphen_values = true)]
    coupling_rabi: Option<f64>,
    /// Degrees: start:stop:step or a comma-separated list.
    #[arg(long, value_parser = AngleGrid::parse, allow_hyphen_values = true)]
    theta: Option<AngleGrid>,
    /// start:stop:count with unit tags, or a comma-separated list.
    #[arg(long, value_parser = DetuningGrid::parse, allow_hyphen_values = true)]
    detuning: Option<DetuningGrid>,
    /// off, exact, quadrature or quadrature:N_POINTS:CUTOFF_SIGMAS.
    #[arg(long, value_parser = parse_doppler)]
    doppler: Option<Doppler>,
    /// weak_probe or full.
    #[arg(long, value_parser = parse_solver)]
    solver: Option<SolverKind>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Also write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Offsets every 6j symbol; for checking that the suite notices.
    #[arg(long, hide = true, default_value_t = 0.0)]
    perturb_6j: f64,
}

fn parse_format(s: &str) -> Result<Format, String> {
    match s.trim() {
        "tsv" => Ok(Format::Tsv),
        "json" => Ok(Format::Json),
        other => Err(format!("unknown format `{other}` (valid: tsv, json)")),
    }
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    match s {
        "weak_probe" | "weak" => Ok(SolverKind::WeakProbe),
        "full" => Ok(SolverKind::Full),
        other => Err(format!("unknown solver `{other}` (valid: weak_probe, full)")),
    }
}

fn parse_doppler(s: &str) -> Result<Doppler, String> {
    match s {
        "off" => Ok(Doppler::Off),
        "exact" => Ok(Doppler::Exact),
        "quadrature" => Ok(Doppler::COARSE),
        _ => {
            let bad = || format!("`{s}` is not off, exact, quadrature or quadrature:N_POINTS:CUTOFF_SIGMAS");
            let rest = s.strip_prefix("quadrature:").ok_or_else(bad)?;
            let (n, sigmas) = rest.split_once(':').ok_or_else(bad)?;
            Ok(Doppler::Quadrature {
                n_points: n.parse().map_err(|_| bad())?,
                cutoff_sigmas: sigmas.parse().map_err(|_| bad())?,
            })
        }
    }
}

impl ScenarioArgs {
    fn file(&self) -> Result<ScenarioFile, CliError> {
        let mut file = match &self.config {
            Some(path) => config::load(path)?,
            None => ScenarioFile::default(),
        };
        if let Some(p) = &self.preset {
            file.preset = Some(p.clone());
        }
        set(&mut file.fields.rf_rabi, self.rf_rabi);
        set(&mut file.fields.rf_detuning, self.rf_detuning);
        if let Some(dir) = &self.out {
            file.output.dir = Some(dir.clone());
        }
        if let Some(f) = &self.format {
            file.output.formats = Some(f.clone());
        }
        Ok(file)
    }
}

fn set(slot: &mut Option<Freq>, value: Option<f64>) {
    if let Some(v) = value {
        *slot = Some(Freq(v));
    }
}

impl RunArgs {
    fn scenario(&self) -> Result<Scenario, CliError> {
        let mut file = self.scenario.file()?;
        set(&mut file.fields.probe_rabi, self.probe_rabi);
        set(&mut file.fields.probe_detuning, self.probe_detuning);
        set(&mut file.fields.coupling_rabi, self.coupling_rabi);
        if let Some(t) = &self.theta {
            file.grid.theta = Some(t.to_spec());
        }
        if let Some(d) = &self.detuning {
            file.grid.detuning = Some(d.to_spec());
        }
        if let Some(d) = self.doppler {
            file.doppler = Some(d);
        }
        if let Some(s) = self.solver {
            file.solver = Some(s);
        }
        file.resolve()
    }
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))
}

fn finish(command: &str, scenario: &Scenario, files: Vec<(String, String)>, info: RunInfo) -> Result<(), CliError> {
    let dir = &scenario.output_dir;
    let mut names = Vec::new();
    for (name, contents) in &files {
        let path = write_file(dir, name, contents)?;
        eprintln!("wrote {}", path.display());
        names.push(name.clone());
    }
    let manifest = output::manifest_json(command, &info, &names, &scenario.echo_toml());
    let path = write_file(dir, &format!("{command}.manifest.json"), &manifest)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn run_sweep(args: &RunArgs, workers: Option<usize>) -> Result<(), CliError> {
    let scenario = args.scenario()?;
    let pool = pool(workers)?;
    let started = SystemTime::now();
    let clock = Instant::now();
    let s = pool.install(|| sweep_spectrogram(&scenario.sweep))?;
    let info = RunInfo {
        started,
        wall_time: clock.elapsed(),
        workers: pool.current_num_threads(),
    };
    let mut files = Vec::new();
    if scenario.formats.contains(&Format::Tsv) {
        files.push(("spectrogram.tsv".into(), output::spectrogram_tsv(&s)));
    }
    if scenario.formats.contains(&Format::Json) {
        files.push(("spectrogram.json".into(), output::spectrogram_json(&s)));
    }
    finish("spectrogram", &scenario, files, info)
}

fn run_dressed(args: &ScenarioArgs) -> Result<(), CliError> {
    let scenario = args.file()?.resolve()?;
    let started = SystemTime::now();
    let clock = Instant::now();
    let ladder = &scenario.sweep.ladder;
    let manifold = dress_rydberg_pair(
        &ladder.levels[R1],
        &ladder.levels[R2],
        ladder.nuclear_spin,
        scenario.sweep.rf_rabi,
        scenario.sweep.rf_detuning,
    )?;
    let rows = transition_strength_table(ladder, &manifold)?;
    let info = RunInfo {
        started,
        wall_time: clock.elapsed(),
        workers: 1,
    };
    let name = scenario.preset.name();
    let mut files = Vec::new();
    if scenario.formats.contains(&Format::Tsv) {
        files.push(("dressed_levels.tsv".into(), output::dressed_levels_tsv(name, &manifold)));
        files.push((
            "transition_strengths.tsv".into(),
            output::strengths_tsv(name, &manifold, &rows),
        ));
    }
    if scenario.formats.contains(&Format::Json) {
        files.push(("dressed.json".into(), output::dressed_json(name, &manifold, &rows)));
    }
    finish("dressed", &scenario, files, info)
}

fn run_verify_command(args: &VerifyArgs, workers: Option<usize>) -> Result<(), CliError> {
    let report = pool(workers)?.install(|| {
        // the hook is per thread, so it is set where the checks run
        rydpol::angular::set_6j_perturbation(args.perturb_6j);
        let report = run_verify();
        rydpol::angular::set_6j_perturbation(0.0);
        report
    });
    for c in &report.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        eprintln!(
            "{verdict} {:<44} {:.3e} (tolerance {:.1e}) {}",
            c.name, c.value, c.tolerance, c.detail
        );
    }
    let json = output::verify_json(serde_json::json!({
        "engine_version": rydpol::VERSION,
        "passed": report.passed(),
        "checks": report.checks,
    }));
    print!("{json}");
    if let Some(path) = &args.out {
        std::fs::write(path, &json).map_err(|e| CliError::io(path, e))?;
    }
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::VerifyFailed)
    }
}

fn list_presets() -> Result<(), CliError> {
    println!("name\tlevels\tbasis_size\tdescription");
    for p in Preset::ALL {
        let ladder = p.ladder();
        let size = enumerate_basis(&ladder)?.len();
        println!("{}\t{}\t{size}\t{}", p.name(), ladder.levels.len(), p.description());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run_sweep(args, cli.workers),
        Command::Dressed(args) => run_dressed(args),
        Command::Verify(args) => run_verify_command(args, cli.workers),
        Command::Presets => list_presets(),
        Command::Schema => {
            print!("{}", config::SCHEMA);
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rydpol: {e}");
            e.exit_code()
        }
    }
}
