//! Argument parsing and the subcommands.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use biarch_core::data_gen::{planted_block_matrix, simulate_block_gaussian, toy_matrix};
use biarch_core::selection::DEFAULT_ELBOW_THRESHOLD;
use biarch_core::solvers::{fit_double_kmeans, reconstruct};
use biarch_core::{DataMatrix, FitConfig, Matrix};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::IoError;
use crate::io::{numbered, read_csv, write_matrix_file, CsvData, HeaderMode};
use crate::model_doc::{write_model, FitMode, ModelDocument, Standardization};
use crate::parallel::{fit_aa_par, fit_biaa_par, pool, rss_surface_par};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "biarch", version, about = "Biarchetype analysis of numeric CSV matrices")]
struct Cli {
    /// Worker threads (default: BIARCH_THREADS, else one per core). Results
    /// do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a biarchetype model.
    Fit(FitArgs),
    /// Fit plain archetype analysis (row archetypes only).
    Aa(AaArgs),
    /// Fit every (k, c) in a grid and suggest the elbow.
    Surface(SurfaceArgs),
    /// Hard double k-means biclustering.
    Baseline(BaselineArgs),
    /// Write a synthetic data set.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Input CSV: one observation per line, one feature per field.
    input: PathBuf,

    #[arg(long, default_value_t = ',')]
    delimiter: char,

    /// Treat the first line as column names (default: only if it is not
    /// numeric).
    #[arg(long, conflicts_with = "no_header")]
    header: bool,

    /// Treat the first line as data.
    #[arg(long)]
    no_header: bool,

    /// Z-score every column (population std) before fitting; advisable when
    /// features are on different scales.
    #[arg(long)]
    standardize: bool,
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value_t = FitConfig::DEFAULT_RESTARTS)]
    restarts: usize,

    /// Penalty weight enforcing the sum-to-one constraints.
    #[arg(long, default_value_t = FitConfig::DEFAULT_PENALTY)]
    penalty: f64,

    /// Relative RSS improvement below which a run counts as stalled.
    #[arg(long, default_value_t = FitConfig::DEFAULT_REL_TOL)]
    tol: f64,

    #[arg(long, default_value_t = FitConfig::DEFAULT_MAX_ITER)]
    max_iter: usize,
}

impl SolverArgs {
    fn config(&self, k: usize, c: usize) -> FitConfig {
        FitConfig::new(k, c)
            .with_seed(self.seed)
            .with_restarts(self.restarts)
            .with_penalty(self.penalty)
            .with_rel_tol(self.tol)
            .with_max_iter(self.max_iter)
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Number of row archetypes.
    #[arg(long)]
    k: usize,

    /// Number of column archetypes.
    #[arg(long)]
    c: usize,

    #[command(flatten)]
    solver: SolverArgs,

    /// Model document (JSON).
    #[arg(long)]
    out: PathBuf,

    /// Row memberships, n x k.
    #[arg(long)]
    emit_alpha: Option<PathBuf>,

    /// Column memberships, c x m.
    #[arg(long)]
    emit_gamma: Option<PathBuf>,

    /// Biarchetypes, k x c.
    #[arg(long)]
    emit_z: Option<PathBuf>,

    /// Reconstruction in the units of the input, n x m.
    #[arg(long)]
    emit_recon: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AaArgs {
    #[command(flatten)]
    input: InputArgs,

    #[arg(long)]
    k: usize,

    #[command(flatten)]
    solver: SolverArgs,

    #[arg(long)]
    out: PathBuf,

    #[arg(long)]
    emit_alpha: Option<PathBuf>,

    /// Archetypes, k x m.
    #[arg(long)]
    emit_z: Option<PathBuf>,

    #[arg(long)]
    emit_recon: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SurfaceArgs {
    #[command(flatten)]
    input: InputArgs,

    #[arg(long, default_value_t = 1)]
    k_min: usize,

    #[arg(long)]
    k_max: usize,

    #[arg(long, default_value_t = 1)]
    c_min: usize,

    #[arg(long)]
    c_max: usize,

    /// Largest relative drop to a neighbor that still counts as flat.
    #[arg(long, default_value_t = DEFAULT_ELBOW_THRESHOLD)]
    threshold: f64,

    #[command(flatten)]
    solver: SolverArgs,

    /// Surface CSV with columns k, c, rss; failed cells are left out.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[command(flatten)]
    input: InputArgs,

    #[arg(long)]
    k: usize,

    #[arg(long)]
    c: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value_t = 100)]
    max_iter: usize,

    /// Assignments CSV with columns axis (0 rows, 1 columns), index, label,
    /// all 1-based.
    #[arg(long)]
    out: PathBuf,

    /// Block means, k x c.
    #[arg(long)]
    emit_centroids: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    /// The 5 x 5 matrix 1..25.
    Toy,
    /// Two-block matrix-normal data.
    BlockGaussian,
    /// Block-constant values plus Gaussian noise.
    Planted,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    preset: Preset,

    /// Rows (default 50 for block-gaussian, 30 for planted).
    #[arg(long)]
    n: Option<usize>,

    /// Columns (default 50 for block-gaussian, 20 for planted).
    #[arg(long)]
    m: Option<usize>,

    /// Within-block correlation (block-gaussian).
    #[arg(long, default_value_t = 0.8)]
    rho: f64,

    /// Row groups (planted).
    #[arg(long, default_value_t = 2)]
    k: usize,

    /// Column groups (planted).
    #[arg(long, default_value_t = 2)]
    c: usize,

    /// Noise standard deviation (planted).
    #[arg(long, default_value_t = 0.05)]
    noise: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long)]
    out: PathBuf,

    /// Planted labels in the baseline assignments format.
    #[arg(long)]
    labels_out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Solver(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Data(_) => EXIT_DATA,
            Failure::Solver(_) => EXIT_SOLVER,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Solver(m) => m,
        }
    }
}

impl From<biarch_core::Error> for Failure {
    fn from(e: biarch_core::Error) -> Self {
        use biarch_core::Error as E;
        match e {
            E::InvalidConfig(_) | E::InvalidRho { .. } => Failure::Usage(e.to_string()),
            E::MaxIterationsExceeded { .. } | E::NoElbow => Failure::Solver(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Core(inner) => inner.into(),
            other => Failure::Data(other.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

/// Runs the command line `args` (program name first) and returns the exit
/// code. Errors are reported as one line on `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return EXIT_OK;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let _ = writeln!(err, "biarch: {}", first.trim_start_matches("error: "));
            return EXIT_USAGE;
        }
    };
    let mut buf: Vec<u8> = Vec::new();
    let outcome = pool(cli.threads)
        .map_err(Failure::Usage)
        .and_then(|p| p.install(|| dispatch(cli.command, &mut buf)));
    let _ = out.write_all(&buf);
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "biarch: {}", f.message().replace('\n', " "));
            f.code()
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Outcome {
    match command {
        Command::Fit(a) => fit(a, out),
        Command::Aa(a) => aa(a, out),
        Command::Surface(a) => surface(a, out),
        Command::Baseline(a) => baseline(a, out),
        Command::Simulate(a) => simulate(a),
    }
}

struct Loaded {
    csv: CsvData,
    /// The matrix handed to the solver.
    fitted: DataMatrix,
    standardization: Option<Standardization>,
}

fn load(args: &InputArgs) -> Result<Loaded, Failure> {
    if !args.delimiter.is_ascii() {
        return Err(Failure::Usage(format!(
            "delimiter {:?} is not a single ASCII character",
            args.delimiter
        )));
    }
    let mode = if args.header {
        HeaderMode::Present
    } else if args.no_header {
        HeaderMode::Absent
    } else {
        HeaderMode::Detect
    };
    let csv = read_csv(&args.input, mode, args.delimiter as u8)?;
    let (fitted, standardization) = if args.standardize {
        let s = csv.data.standardize()?;
        let st = Standardization {
            means: s.column_means().unwrap_or_default().to_vec(),
            stds: s.column_stds().unwrap_or_default().to_vec(),
        };
        (s, Some(st))
    } else {
        (csv.data.clone(), None)
    };
    Ok(Loaded {
        csv,
        fitted,
        standardization,
    })
}

fn write_csv(path: &Path, header: &[String], m: &Matrix) -> Outcome {
    write_matrix_file(path, header, m).map_err(Failure::from)
}

/// Reconstruction mapped back to the units of the input.
fn recon_in_input_units(loaded: &Loaded, recon: Matrix) -> Matrix {
    match &loaded.standardization {
        None => recon,
        Some(st) => Matrix::from_fn(recon.rows(), recon.cols(), |i, j| {
            recon[(i, j)] * st.stds[j] + st.means[j]
        }),
    }
}

fn fit(a: FitArgs, out: &mut dyn Write) -> Outcome {
    let loaded = load(&a.input)?;
    let config = a.solver.config(a.k, a.c);
    let model = fit_biaa_par(&loaded.fitted, &config)?;
    let names = loaded.csv.column_names();
    if let Some(p) = &a.emit_alpha {
        write_csv(p, &numbered("k", model.k()), model.alpha.values())?;
    }
    if let Some(p) = &a.emit_gamma {
        write_csv(p, &names, model.gamma.values())?;
    }
    if let Some(p) = &a.emit_z {
        write_csv(p, &numbered("c", model.c()), &model.z)?;
    }
    if let Some(p) = &a.emit_recon {
        write_csv(p, &names, &recon_in_input_units(&loaded, reconstruct(&model)))?;
    }
    report(out, &model);
    let doc = ModelDocument {
        mode: FitMode::Biaa,
        config,
        standardization: loaded.standardization,
        model,
    };
    write_model(&doc, &a.out)?;
    Ok(())
}

fn aa(a: AaArgs, out: &mut dyn Write) -> Outcome {
    let loaded = load(&a.input)?;
    let config = a.solver.config(a.k, loaded.fitted.m());
    let model = fit_aa_par(&loaded.fitted, a.k, &config)?;
    let names = loaded.csv.column_names();
    if let Some(p) = &a.emit_alpha {
        write_csv(p, &numbered("k", model.k()), model.alpha.values())?;
    }
    if let Some(p) = &a.emit_z {
        write_csv(p, &names, &model.z)?;
    }
    if let Some(p) = &a.emit_recon {
        write_csv(p, &names, &recon_in_input_units(&loaded, reconstruct(&model)))?;
    }
    report(out, &model);
    let doc = ModelDocument {
        mode: FitMode::Aa,
        config,
        standardization: loaded.standardization,
        model,
    };
    write_model(&doc, &a.out)?;
    Ok(())
}

fn report(out: &mut dyn Write, model: &biarch_core::BiaaModel) {
    let _ = writeln!(
        out,
        "rss={:?} iterations={} converged={} restart={}",
        model.rss, model.iterations, model.converged, model.restart
    );
}

fn surface(a: SurfaceArgs, out: &mut dyn Write) -> Outcome {
    let loaded = load(&a.input)?;
    if a.threshold.is_nan() || a.threshold <= 0.0 {
        return Err(Failure::Usage(format!("threshold {} must be positive", a.threshold)));
    }
    let template = a.solver.config(1, 1);
    let s = rss_surface_par(
        &loaded.fitted,
        (a.k_min, a.k_max),
        (a.c_min, a.c_max),
        &template,
        a.threshold,
    )?;
    let rows: Vec<[f64; 3]> = s.cells().map(|(k, c, r)| [k as f64, c as f64, r]).collect();
    let header = ["k".to_owned(), "c".to_owned(), "rss".to_owned()];
    let m = if rows.is_empty() {
        Matrix::zeros(0, 3)
    } else {
        Matrix::from_rows(&rows).map_err(Failure::from)?
    };
    write_csv(&a.out, &header, &m)?;
    let _ = match s.suggested {
        Some((k, c)) => writeln!(out, "elbow k={k} c={c}"),
        None => writeln!(out, "elbow none"),
    };
    Ok(())
}

fn assignments(rows: &[usize], cols: &[usize]) -> Matrix {
    let entries: Vec<[f64; 3]> = rows
        .iter()
        .enumerate()
        .map(|(i, &l)| [0.0, (i + 1) as f64, (l + 1) as f64])
        .chain(
            cols.iter()
                .enumerate()
                .map(|(j, &l)| [1.0, (j + 1) as f64, (l + 1) as f64]),
        )
        .collect();
    Matrix::from_rows(&entries).expect("assignment rows have three fields")
}

fn assignment_header() -> [String; 3] {
    ["axis".to_owned(), "index".to_owned(), "label".to_owned()]
}

fn write_assignments(path: &Path, rows: &[usize], cols: &[usize]) -> Outcome {
    let m = assignments(rows, cols);
    write_csv(path, &assignment_header(), &m)
}

fn baseline(a: BaselineArgs, out: &mut dyn Write) -> Outcome {
    let loaded = load(&a.input)?;
    let (n, m) = (loaded.fitted.n(), loaded.fitted.m());
    if a.k == 0 || a.k > n || a.c == 0 || a.c > m {
        return Err(Failure::Usage(format!(
            "k = {} and c = {} must lie in 1..={n} and 1..={m}",
            a.k, a.c
        )));
    }
    let model = fit_double_kmeans(&loaded.fitted, a.k, a.c, a.seed, a.max_iter)?;
    write_assignments(&a.out, &model.row_assign, &model.col_assign)?;
    if let Some(p) = &a.emit_centroids {
        write_csv(p, &numbered("c", a.c), &model.centroids)?;
    }
    let _ = writeln!(
        out,
        "rss={:?} iterations={} converged={}",
        model.rss, model.iterations, model.converged
    );
    Ok(())
}

fn simulate(a: SimulateArgs) -> Outcome {
    let (data, labels) = match a.preset {
        Preset::Toy => (toy_matrix(), None),
        Preset::BlockGaussian => {
            let p = simulate_block_gaussian(a.n.unwrap_or(50), a.m.unwrap_or(50), a.rho, a.seed)?;
            (p.data, Some((p.row_labels, p.col_labels)))
        }
        Preset::Planted => {
            let (n, m) = (a.n.unwrap_or(30), a.m.unwrap_or(20));
            let c = a.c;
            let values = Matrix::from_fn(a.k, c, |g, h| (g * c + h) as f64);
            let (x, r, cl) = planted_block_matrix(n, m, &values, a.noise, a.seed)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            (x, Some((r, cl)))
        }
    };
    write_csv(&a.out, &numbered("x", data.m()), data.values())?;
    if let Some(p) = &a.labels_out {
        match &labels {
            Some((r, c)) => write_assignments(p, r, c)?,
            None => return Err(Failure::Usage("the toy preset has no labels".into())),
        }
    }
    Ok(())
}
