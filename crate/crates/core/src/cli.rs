//! Command-line front end.
//!
//! Every file written with `--out` gets a `<file>.manifest.json` next to it
//! (or `manifest.json` inside the output directory for `report`) recording
//! the subcommand, the full flag set, the seed, the tool version and SHA-256
//! digests of the input files.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::integrator::{self, detect_asymptotics, hopf_sweep, simulate, Asymptotics, MIN_SAMPLES};
use crate::model::{Params, State};
use crate::pipeline::{self, load_trends_csv, CsvLayout, FitConfig};
use crate::stability::{hopf_alpha, stability_map};
use crate::svg;
use crate::timeseries::decompose;

const EXIT_CODES: &str =
    "Exit codes: 0 success, 2 usage or invalid flags, 3 numerical failure, 4 I/O error.";

#[derive(Debug, Parser)]
#[command(name = "ideawaves", version, about = "Feedback-SIRS idea-popularity cycles", after_help = EXIT_CODES)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Integrate the model and write the trajectory as CSV (t,s,i,r,gamma).
    Simulate(SimulateArgs),
    /// Classify an (alpha, delta) grid into stability regions (CSV alpha,delta,label).
    #[command(
        after_help = "Points on the boundary delta = alpha^2 xi / ((alpha - beta)(alpha - beta - xi)) are labelled unstable."
    )]
    StabilityMap(StabilityMapArgs),
    /// Simulate the restricted model (alpha = delta) for several alphas and classify each run.
    HopfScan(HopfScanArgs),
    /// Additive trend/seasonal/residual decomposition of one word's weekly series.
    Decompose(DecomposeArgs),
    /// Best-fit model and random-walk baseline for one word.
    Compare(CompareArgs),
    /// Full comparison over a corpus: report.json, scatter.csv and manifest.json.
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct RateArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub xi: f64,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub delta: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct InitialArgs {
    #[arg(long, default_value_t = 0.9)]
    pub s0: f64,
    #[arg(long, default_value_t = 0.1)]
    pub i0: f64,
    #[arg(long, default_value_t = 0.1)]
    pub gamma0: f64,
}

impl InitialArgs {
    fn state(&self) -> Result<State> {
        State::new(self.s0, self.i0, self.gamma0)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub rates: RateArgs,
    #[command(flatten)]
    pub initial: InitialArgs,
    #[arg(long, default_value_t = integrator::DEFAULT_T_END)]
    pub t_end: f64,
    #[arg(long, default_value_t = integrator::DEFAULT_DT)]
    pub dt: f64,
    /// Keep every n-th integration step.
    #[arg(long, default_value_t = 10)]
    pub stride: usize,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct StabilityMapArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub xi: f64,
    #[arg(long, default_value_t = 0.0)]
    pub alpha_min: f64,
    #[arg(long, default_value_t = 3.0)]
    pub alpha_max: f64,
    #[arg(long, default_value_t = 0.0)]
    pub delta_min: f64,
    #[arg(long, default_value_t = 3.0)]
    pub delta_max: f64,
    /// Grid points per axis; the axes sample (min, max].
    #[arg(long, default_value_t = 200)]
    pub resolution: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct HopfScanArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub xi: f64,
    /// Comma-separated alpha (= delta) values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub alphas: Vec<f64>,
    #[command(flatten)]
    pub initial: InitialArgs,
    #[arg(long, default_value_t = 10_000.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = integrator::DEFAULT_DT)]
    pub dt: f64,
    #[arg(long, default_value_t = 10)]
    pub stride: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct InputArgs {
    /// Search-volume CSV (`date,word,value`, or `date,<word>,...` with --wide).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub wide: bool,
}

impl InputArgs {
    fn layout(&self) -> CsvLayout {
        if self.wide {
            CsvLayout::Wide
        } else {
            CsvLayout::Long
        }
    }

    fn load(&self) -> Result<pipeline::Corpus> {
        load_trends_csv(&self.input, self.layout())
    }
}

#[derive(Debug, Args, Serialize)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Word to decompose; may be omitted when the file holds a single word.
    #[arg(long)]
    pub word: Option<String>,
    #[arg(long, default_value_t = crate::timeseries::DEFAULT_PERIOD)]
    pub period: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[arg(long, env = "IDEAWAVES_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.01)]
    pub beta_min: f64,
    #[arg(long, default_value_t = 0.3)]
    pub beta_max: f64,
    #[arg(long, default_value_t = 30)]
    pub beta_steps: usize,
    #[arg(long, default_value_t = 500)]
    pub walks: usize,
    #[arg(long, default_value_t = crate::timeseries::DEFAULT_PERIOD)]
    pub period: usize,
}

impl FitArgs {
    fn config(&self) -> Result<FitConfig> {
        let cfg = FitConfig {
            beta_min: self.beta_min,
            beta_max: self.beta_max,
            beta_steps: self.beta_steps,
            n_random_walks: self.walks,
            period: self.period,
            ..FitConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub word: Option<String>,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write scatter.svg.
    #[arg(long)]
    pub svg: bool,
}

/// Provenance written beside every output.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'a Command,
    pub seed: Option<u64>,
    pub input_digests: BTreeMap<String, String>,
    pub notes: Vec<String>,
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

struct Output<'a> {
    command: &'a Command,
    seed: Option<u64>,
    inputs: Vec<&'a Path>,
    notes: Vec<String>,
}

impl Output<'_> {
    fn manifest_json(&self) -> Result<String> {
        let mut input_digests = BTreeMap::new();
        for p in &self.inputs {
            input_digests.insert(p.display().to_string(), sha256_file(p)?);
        }
        let manifest = RunManifest {
            tool: "ideawaves",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: self.command,
            seed: self.seed,
            input_digests,
            notes: self.notes.clone(),
        };
        Ok(serde_json::to_string_pretty(&manifest)? + "\n")
    }

    /// Write to `out` with a manifest beside it, or to stdout.
    fn emit(&self, out: Option<&Path>, bytes: &[u8]) -> Result<()> {
        match out {
            Some(path) => {
                write_file(path, bytes)?;
                write_file(&manifest_path(path), self.manifest_json()?.as_bytes())
            }
            None => std::io::stdout()
                .write_all(bytes)
                .map_err(|e| Error::io("<stdout>", e)),
        }
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn pick_word<'a>(
    corpus: &'a pipeline::Corpus,
    word: Option<&str>,
) -> Result<(usize, &'a (String, crate::timeseries::WeeklySeries))> {
    match word {
        Some(w) => corpus
            .iter()
            .enumerate()
            .find(|(_, (name, _))| name == w)
            .ok_or_else(|| Error::Config(format!("word `{w}` not in input"))),
        None if corpus.len() == 1 => Ok((0, &corpus[0])),
        None => Err(Error::Config(format!(
            "input holds {} words; choose one with --word",
            corpus.len()
        ))),
    }
}

fn cmd_simulate(command: &Command, args: &SimulateArgs) -> Result<()> {
    let r = &args.rates;
    let params = Params::new(r.beta, r.xi, r.alpha, r.delta)?;
    let initial = args.initial.state()?;
    let traj = simulate(&params, &initial, args.t_end, args.dt, args.stride)?;
    let mut notes = Vec::new();
    if traj.len() >= MIN_SAMPLES {
        let verdict = detect_asymptotics(&traj, &params)?;
        let note = match verdict {
            Asymptotics::Converged { distance } => format!("converged (distance {distance:e})"),
            Asymptotics::Cycle(c) => format!(
                "limit cycle: period {:.4}, amplitude of I {:.4}",
                c.period, c.amplitude_i
            ),
            Asymptotics::Undecided => "undecided".to_string(),
        };
        eprintln!("{note}");
        notes.push(note);
    }
    let out = Output {
        command,
        seed: None,
        inputs: vec![],
        notes,
    };
    out.emit(args.out.as_deref(), &csv_bytes(|b| traj.write_csv(b))?)?;
    if let Some(path) = &args.svg {
        let doc = svg::line_plot(
            "S, I, Gamma",
            &traj.times,
            &[
                ("S", traj.states.iter().map(|s| s.s).collect()),
                ("I", traj.states.iter().map(|s| s.i).collect()),
                ("Gamma", traj.states.iter().map(|s| s.gamma_var).collect()),
            ],
        );
        write_file(path, doc.as_bytes())?;
    }
    Ok(())
}

fn cmd_stability_map(command: &Command, args: &StabilityMapArgs) -> Result<()> {
    let grid = stability_map(
        args.beta,
        args.xi,
        (args.alpha_min, args.alpha_max),
        (args.delta_min, args.delta_max),
        args.resolution,
    )?;
    let hopf = hopf_alpha(args.beta, args.xi);
    let mut notes =
        vec!["boundary ties (delta equal to the bound) are labelled unstable".to_string()];
    let star = hopf.condition_holds.then_some(hopf.alpha);
    if let Some(a) = star {
        let note = format!("Hopf point of the restricted model: alpha = delta = {a}");
        eprintln!("{note}");
        notes.push(note);
    }
    let out = Output {
        command,
        seed: None,
        inputs: vec![],
        notes,
    };
    out.emit(args.out.as_deref(), &csv_bytes(|b| grid.write_csv(b))?)?;
    if let Some(path) = &args.svg {
        write_file(path, svg::region_map(&grid, star).as_bytes())?;
    }
    Ok(())
}

fn cmd_hopf_scan(command: &Command, args: &HopfScanArgs) -> Result<()> {
    let initial = args.initial.state()?;
    let entries = hopf_sweep(
        args.beta,
        args.xi,
        &args.alphas,
        &initial,
        args.t_end,
        args.dt,
        args.stride,
    )?;
    let bytes = csv_bytes(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["alpha", "class", "period", "amplitude_i", "period_spread"])?;
        for e in &entries {
            let c = e.asymptotics.cycle();
            let opt = |f: fn(&integrator::CycleInfo) -> f64| {
                c.map(|c| f(c).to_string()).unwrap_or_default()
            };
            w.write_record([
                e.alpha.to_string(),
                e.asymptotics.label().to_string(),
                opt(|c| c.period),
                opt(|c| c.amplitude_i),
                opt(|c| c.period_spread),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    })?;
    let hopf = hopf_alpha(args.beta, args.xi);
    let out = Output {
        command,
        seed: None,
        inputs: vec![],
        notes: vec![format!(
            "analytic Hopf point alpha = {} (sufficient condition beta > 11 xi / 25: {})",
            hopf.alpha, hopf.condition_holds
        )],
    };
    out.emit(args.out.as_deref(), &bytes)
}

fn cmd_decompose(command: &Command, args: &DecomposeArgs) -> Result<()> {
    let corpus = args.input.load()?;
    let (_, (word, series)) = pick_word(&corpus, args.word.as_deref())?;
    let d = decompose(&series.values, args.period)?;
    let out = Output {
        command,
        seed: None,
        inputs: vec![&args.input.input],
        notes: vec![format!("word: {word}")],
    };
    out.emit(
        args.out.as_deref(),
        &csv_bytes(|b| d.write_csv(&series.dates, b))?,
    )?;
    if let Some(path) = &args.svg {
        let x: Vec<f64> = (0..d.observed.len()).map(|k| k as f64).collect();
        let nan = |v: &Option<f64>| v.unwrap_or(f64::NAN);
        let doc = svg::line_plot(
            word,
            &x,
            &[
                ("observed", d.observed.clone()),
                ("trend", d.trend.iter().map(nan).collect()),
                ("seasonal", d.seasonal.clone()),
                ("residual", d.residual.iter().map(nan).collect()),
            ],
        );
        write_file(path, doc.as_bytes())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CompareOutput<'a> {
    record: &'a pipeline::ComparisonRecord,
    seed: u64,
    config: &'a FitConfig,
}

fn cmd_compare(command: &Command, args: &CompareArgs) -> Result<()> {
    let corpus = args.input.load()?;
    let config = args.fit.config()?;
    let (index, (word, series)) = pick_word(&corpus, args.word.as_deref())?;
    let d = decompose(&series.values, config.period)?;
    let record = pipeline::compare_residual(word, &d.residuals(), &config, args.fit.seed, index)?;
    let json = serde_json::to_string_pretty(&CompareOutput {
        record: &record,
        seed: args.fit.seed,
        config: &config,
    })? + "\n";
    let out = Output {
        command,
        seed: Some(args.fit.seed),
        inputs: vec![&args.input.input],
        notes: vec![],
    };
    out.emit(args.out.as_deref(), json.as_bytes())
}

fn cmd_report(command: &Command, args: &ReportArgs) -> Result<()> {
    let corpus = args.input.load()?;
    let config = args.fit.config()?;
    let report = pipeline::run_report(&corpus, &config, args.fit.seed)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    write_file(&args.out.join("report.json"), report.to_json()?.as_bytes())?;
    write_file(
        &args.out.join("scatter.csv"),
        &csv_bytes(|b| report.write_scatter_csv(b))?,
    )?;
    let out = Output {
        command,
        seed: Some(args.fit.seed),
        inputs: vec![&args.input.input],
        notes: vec![],
    };
    write_file(
        &args.out.join("manifest.json"),
        out.manifest_json()?.as_bytes(),
    )?;
    if args.svg {
        let points: Vec<_> = report
            .records
            .iter()
            .map(|r| (r.dtw_rw_mean, r.dtw_model, r.significant))
            .collect();
        write_file(
            &args.out.join("scatter.svg"),
            svg::scatter("DTW: random walk mean (x) vs model (y)", &points).as_bytes(),
        )?;
    }
    eprintln!(
        "{} words compared, {} skipped, fraction significant {:.4}",
        report.records.len(),
        report.skipped.len(),
        report.fraction_significant
    );
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    let command = &cli.command;
    match command {
        Command::Simulate(a) => cmd_simulate(command, a),
        Command::StabilityMap(a) => cmd_stability_map(command, a),
        Command::HopfScan(a) => cmd_hopf_scan(command, a),
        Command::Decompose(a) => cmd_decompose(command, a),
        Command::Compare(a) => cmd_compare(command, a),
        Command::Report(a) => cmd_report(command, a),
    }
}

/// Parse the process arguments, run, and return the exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
