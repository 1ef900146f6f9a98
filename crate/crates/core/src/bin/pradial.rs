use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pradial::distcore::{GammaSampler, PGauss, PParam, RandomStream};
use pradial::harness::{self, ConfigBuilder, ExperimentOutcome};
use pradial::metrics::{lp_distance, w1, DiscreteMeasure};
use pradial::pball::{sample_pradial, scale_sample, WSpec};
use pradial::ratefn::{sample_limit, sigma_sq, LimitSpec, RateMatrix, Regime};
use pradial::stiefel::{project, sample_stiefel};
use pradial::{Error, Result};

#[derive(Parser)]
#[command(name = "pradial", version, about = "p-radial laws on l_p balls, their random projections and limit measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump draws of a distribution, one per line.
    Sample(SampleArgs),
    /// Dump draws of V X for one Haar frame V (sample, rescale, project).
    Project(ProjectArgs),
    /// LP and W1 distances between two sample files.
    Distance(DistanceArgs),
    /// Rate and noise level for a matrix file.
    Rate(RateArgs),
    /// Draw from a limit measure.
    LimitSample(LimitArgs),
    /// Run an experiment config.
    Experiment(ExperimentArgs),
    /// Moment audit.
    Audit(AuditArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    Pgauss,
    Gamma,
    Cone,
    Uniform,
    Pradial,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, value_enum)]
    dist: Dist,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Dimension of ball samples.
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long)]
    count: usize,
    #[arg(long)]
    seed: u64,
    /// Mixing law as inline TOML, e.g. '{kind = "exponential"}'.
    #[arg(long)]
    wspec: Option<String>,
    #[arg(long)]
    shape: Option<f64>,
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ProjectArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    wspec: Option<String>,
    /// Inline TOML, e.g. '{kind = "beta", beta = 1.0, kappa = 2.0}'.
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    count: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Lp,
    W1,
    All,
}

#[derive(Args)]
struct DistanceArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, value_enum, default_value_t = Metric::All)]
    metric: Metric,
}

#[derive(Args)]
struct RateArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    regime: Option<String>,
}

#[derive(Args)]
struct LimitArgs {
    /// Matrix file; without it A = 0 of size k.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    count: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Every config field can be overridden by a flag of the same name; nested
/// values are inline TOML.
#[derive(Args)]
struct Overrides {
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    wspec: Option<String>,
    #[arg(long = "n_grid")]
    n_grid: Option<String>,
    #[arg(long = "samples_per_measure")]
    samples_per_measure: Option<String>,
    #[arg(long = "frame_replicates")]
    frame_replicates: Option<String>,
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long = "rate_matrix")]
    rate_matrix: Option<String>,
}

impl Overrides {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        [
            ("experiment", &self.experiment),
            ("p", &self.p),
            ("k", &self.k),
            ("regime", &self.regime),
            ("wspec", &self.wspec),
            ("n_grid", &self.n_grid),
            ("samples_per_measure", &self.samples_per_measure),
            ("frame_replicates", &self.frame_replicates),
            ("output", &self.output),
            ("format", &self.format),
            ("rate_matrix", &self.rate_matrix),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    p: String,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    wspec: Option<String>,
    #[arg(long = "n_grid")]
    n_grid: Option<String>,
    #[arg(long = "samples_per_measure")]
    samples_per_measure: Option<String>,
    #[arg(long = "frame_replicates")]
    frame_replicates: Option<String>,
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    format: Option<String>,
}

enum Status {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> Result<Status> {
    match cmd {
        Command::Sample(a) => cmd_sample(a),
        Command::Project(a) => cmd_project(a),
        Command::Distance(a) => cmd_distance(a),
        Command::Rate(a) => cmd_rate(a),
        Command::LimitSample(a) => cmd_limit(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Audit(a) => cmd_audit(a),
    }
    .map(|()| Status::Pass)
    .or_else(|e| match e {
        Failed => Ok(Status::Fail),
        Other(e) => Err(e),
    })
}

enum CmdError {
    Failed,
    Other(Error),
}
use CmdError::{Failed, Other};

impl From<Error> for CmdError {
    fn from(e: Error) -> Self {
        Other(e)
    }
}

type CmdResult = std::result::Result<(), CmdError>;

fn wspec_or_default(s: Option<&str>) -> Result<WSpec> {
    s.map_or(Ok(WSpec::Exponential), harness::parse_inline)
}

fn regime_or_default(s: Option<&str>) -> Result<Regime> {
    s.map_or(Ok(Regime::Alpha { alpha: 0.0 }), harness::parse_inline)
}

fn write_points(path: Option<&Path>, dim: usize, data: &[f64]) -> Result<()> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(std::fs::File::create(p).map_err(|e| Error::Io {
            path: p.to_owned(),
            source: e,
        })?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = BufWriter::new(sink);
    let io_err = |e| Error::Io {
        path: path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_owned),
        source: e,
    };
    for row in data.chunks_exact(dim) {
        let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        writeln!(w, "{}", line.join(" ")).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

fn read_points(path: &Path) -> Result<DiscreteMeasure> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })?;
    let parse_err = |message: String| Error::Parse {
        path: path.to_owned(),
        message,
    };
    let mut dim = None;
    let mut data = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(format!("line {}: {e}", i + 1)))?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(parse_err(format!("line {} has {} coordinates, expected {d}", i + 1, row.len())))
            }
            _ => {}
        }
        data.extend(row);
    }
    let dim = dim.ok_or_else(|| parse_err("no points".into()))?;
    DiscreteMeasure::uniform(dim, data)
}

fn cmd_sample(a: SampleArgs) -> CmdResult {
    let p = PParam::new(a.p)?;
    let mut rng = RandomStream::new(a.seed, 0);
    let out = a.output.as_deref();
    match a.dist {
        Dist::Pgauss => {
            let g = PGauss::new(p);
            let xs: Vec<f64> = (0..a.count).map(|_| g.sample(&mut rng)).collect();
            write_points(out, 1, &xs)?;
        }
        Dist::Gamma => {
            let shape = a.shape.ok_or_else(|| Error::Parameter("gamma needs --shape".into()))?;
            let g = GammaSampler::new(shape, a.rate.unwrap_or(1.0))?;
            let xs: Vec<f64> = (0..a.count).map(|_| g.sample(&mut rng)).collect();
            write_points(out, 1, &xs)?;
        }
        Dist::Cone | Dist::Uniform | Dist::Pradial => {
            let w = match a.dist {
                Dist::Cone => WSpec::DiracZero,
                Dist::Uniform => WSpec::Exponential,
                _ => wspec_or_default(a.wspec.as_deref())?,
            };
            let mut xs = Vec::with_capacity(a.count * a.n);
            for _ in 0..a.count {
                xs.extend(sample_pradial(a.n, p, &w, &mut rng)?.into_coords());
            }
            write_points(out, a.n, &xs)?;
        }
    }
    Ok(())
}

fn cmd_project(a: ProjectArgs) -> CmdResult {
    let p = PParam::new(a.p)?;
    let w = wspec_or_default(a.wspec.as_deref())?;
    let regime = regime_or_default(a.regime.as_deref())?;
    regime.validate()?;
    let frame = sample_stiefel(a.n, a.k, &mut RandomStream::new(a.seed, 0))?;
    let mut rng = RandomStream::new(a.seed, 1);
    let mut xs = Vec::with_capacity(a.count * a.k);
    for _ in 0..a.count {
        let y = scale_sample(sample_pradial(a.n, p, &w, &mut rng)?, regime.scaling())?;
        xs.extend(project(&frame, &y)?);
    }
    write_points(a.output.as_deref(), a.k, &xs)?;
    Ok(())
}

fn cmd_distance(a: DistanceArgs) -> CmdResult {
    let mu = read_points(&a.a)?;
    let nu = read_points(&a.b)?;
    if matches!(a.metric, Metric::Lp | Metric::All) {
        println!("lp {}", lp_distance(&mu, &nu)?);
    }
    if matches!(a.metric, Metric::W1 | Metric::All) {
        println!("w1 {}", w1(&mu, &nu)?);
    }
    Ok(())
}

fn load_matrix(path: &Path) -> Result<RateMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })?;
    RateMatrix::parse(&text)
}

fn cmd_rate(a: RateArgs) -> CmdResult {
    let p = PParam::new(a.p)?;
    let regime = regime_or_default(a.regime.as_deref())?;
    let m = load_matrix(&a.matrix)?;
    println!("rate {}", pradial::ratefn::rate(&m));
    println!("sigma_sq {}", sigma_sq(p, regime)?);
    println!("op_norm {}", m.op_norm());
    Ok(())
}

fn cmd_limit(a: LimitArgs) -> CmdResult {
    let p = PParam::new(a.p)?;
    let regime = regime_or_default(a.regime.as_deref())?;
    let m = match &a.matrix {
        Some(path) => load_matrix(path)?,
        None => RateMatrix::zero(a.k)?,
    };
    let spec = LimitSpec::new(p, regime, m)?;
    let mut rng = RandomStream::new(a.seed, 0);
    let mut xs = Vec::with_capacity(a.count * spec.k());
    for _ in 0..a.count {
        xs.extend(sample_limit(&spec, &mut rng));
    }
    write_points(a.output.as_deref(), spec.k(), &xs)?;
    Ok(())
}

fn report(outcome: &ExperimentOutcome, cfg: &harness::ExperimentConfig) -> CmdResult {
    let format = cfg.output_format();
    match &cfg.output {
        Some(path) => harness::emit_results(&outcome.rows, format, path)?,
        None => {
            let bytes = harness::render(&outcome.rows, format)?;
            std::io::stdout().write_all(&bytes).map_err(|e| Error::Io {
                path: "<stdout>".into(),
                source: e,
            })?;
        }
    }
    for c in &outcome.checks {
        eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if outcome.passed() {
        Ok(())
    } else {
        Err(Failed)
    }
}

fn cmd_experiment(a: ExperimentArgs) -> CmdResult {
    let mut b = match &a.config {
        Some(path) => ConfigBuilder::load(path)?,
        None => ConfigBuilder::new(),
    };
    for (k, v) in a.overrides.pairs() {
        b.set(k, v)?;
    }
    b.set("seed", &a.seed.to_string())?;
    let cfg = b.build()?;
    let outcome = harness::run_experiment(&cfg)?;
    report(&outcome, &cfg)
}

fn cmd_audit(a: AuditArgs) -> CmdResult {
    let mut b = ConfigBuilder::new();
    b.set("experiment", "moment-audit")?;
    b.set("p", &a.p)?;
    b.set("seed", &a.seed.to_string())?;
    let opts = [
        ("k", &a.k),
        ("regime", &a.regime),
        ("wspec", &a.wspec),
        ("n_grid", &a.n_grid),
        ("samples_per_measure", &a.samples_per_measure),
        ("frame_replicates", &a.frame_replicates),
        ("output", &a.output),
        ("format", &a.format),
    ];
    for (k, v) in opts {
        if let Some(v) = v {
            b.set(k, v)?;
        }
    }
    let cfg = b.build()?;
    let outcome = harness::run_moment_audit(&cfg)?;
    report(&outcome, &cfg)
}
