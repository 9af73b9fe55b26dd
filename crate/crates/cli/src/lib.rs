//! Command-line front end for `qosc`.
//!
//! Every subcommand resolves a [`RunConfig`] (defaults, then an optional
//! config file, then flags), validates it, and only then computes. Output
//! goes to stdout or is written atomically to `--out`.
//!
//! Exit codes: 0 success, 1 validation error, 2 verification failure,
//! 3 IO error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use qosc::export::{self, Format};
use qosc::qhermite::{hermite_eval_all, mode_polys, Kind, ModeTable};
use serde::Serialize;
use thiserror::Error;

pub mod config;
pub mod verify;

pub use config::{ConfigPatch, RunConfig};
pub use verify::{cmd_verify, VerifyOptions, VerifyReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Library(#[from] qosc::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Verification(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> CliError {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Library(_) => 1,
            CliError::Verification(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qosc", version, about = "Discrete q-oscillator tables, spectra, kernels and checks")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Config file with `key = value` lines or a JSON object.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub q: Option<f64>,
    #[arg(long, global = true)]
    pub fock_dim: Option<usize>,
    #[arg(long, global = true)]
    pub lattice_depth: Option<usize>,
    /// Tail tolerance of infinite products.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub match_tol: Option<f64>,
    #[arg(long, global = true, value_parser = parse_format)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub seed: Option<i64>,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: qosc::Error| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mode polynomial table on the lattice or on a grid of x.
    Hermite {
        /// Highest degree.
        #[arg(long)]
        n_max: usize,
        /// Continuous grid `start:stop:step` instead of the lattice.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        #[arg(long, value_enum, default_value = "position")]
        kind: KindArg,
    },
    /// Eigenvalues of the truncated Q (or P) matched against ±qˢ.
    Spectrum {
        #[arg(long, value_enum, default_value = "q")]
        operator: OperatorArg,
        /// Fail unless levels 0..=s are all matched.
        #[arg(long)]
        require_depth: Option<usize>,
    },
    /// Evolution kernel over the lattice window.
    Kernel {
        #[arg(long, allow_negative_numbers = true)]
        tau: f64,
        /// Raw summation kernel instead of the rescaled transform.
        #[arg(long)]
        raw: bool,
    },
    /// Evolve a rescaled position function read from a file.
    Evolve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        tau: f64,
        /// Input encoding; inferred from the extension when absent.
        #[arg(long, value_parser = parse_format)]
        input_format: Option<Format>,
    },
    /// Run the verification suite.
    Verify {
        /// Perturb the coupling a_k of Q and P (negative control).
        #[arg(long, hide = true)]
        inject_fault: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Position,
    Momentum,
}

impl From<KindArg> for Kind {
    fn from(k: KindArg) -> Kind {
        match k {
            KindArg::Position => Kind::Position,
            KindArg::Momentum => Kind::Momentum,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OperatorArg {
    Q,
    P,
}

impl GlobalArgs {
    fn patch(&self) -> ConfigPatch {
        ConfigPatch {
            q: self.q,
            fock_dim: self.fock_dim,
            lattice_depth: self.lattice_depth,
            tail_tol: self.tol,
            match_tol: self.match_tol,
            output_format: self.format,
            output_path: self.out.clone(),
            seed: self.seed,
        }
    }

    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg = cfg.apply(ConfigPatch::from_file(path)?)?;
        }
        let cfg = cfg.apply(self.patch())?;
        cfg.context()?;
        Ok(cfg)
    }
}

/// Size the rayon pool from `QOSC_THREADS`, if set.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("QOSC_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("QOSC_THREADS must be a positive integer, got `{raw}`")))?;
    // a pool that already exists keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Write to `path` through a temporary file in the same directory, or to
/// stdout when no path is given.
pub fn emit(bytes: &[u8], path: Option<&Path>) -> Result<(), CliError> {
    let Some(path) = path else {
        let mut out = std::io::stdout().lock();
        out.write_all(bytes).map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
        return out.flush().map_err(|e| CliError::io(Path::new("<stdout>"), e));
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Points of a continuous grid `start:stop:step`, endpoints included.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Config(format!("grid must be start:stop:step with step > 0, got `{spec}`"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 10_000_000 {
        return Err(CliError::Config(format!("grid has {count} points")));
    }
    Ok((0..count).map(|k| start + k as f64 * step).collect())
}

#[derive(Serialize)]
struct GridRow {
    x: f64,
    n: usize,
    mode: f64,
    hermite: f64,
}

#[derive(Serialize)]
struct GridDoc<'a> {
    schema_version: u32,
    q: f64,
    n_max: usize,
    rows: &'a [GridRow],
}

pub(crate) fn encode<T: Serialize>(doc: &T) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(doc).expect("plain data serializes");
    out.push(b'\n');
    Ok(out)
}

/// Mode polynomial values for degrees `0..=n_max`, on the lattice window
/// or on a continuous grid (where `hₙ` is emitted alongside `pₙ`).
pub fn cmd_hermite(n_max: usize, grid: Option<&[f64]>, kind: Kind, cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    let ctx = cfg.context()?;
    let mut out = Vec::new();
    let Some(xs) = grid else {
        let table = ModeTable::with_degrees(kind, &ctx, n_max + 1);
        export::write_mode_table(&table, ctx.q(), cfg.output_format, &mut out)?;
        return Ok(out);
    };
    let q = ctx.q();
    let mut rows = Vec::with_capacity(xs.len() * (n_max + 1));
    for &x in xs {
        let p = mode_polys(n_max + 1, x, q);
        let h = hermite_eval_all(n_max + 1, x, q);
        for n in 0..=n_max {
            rows.push(GridRow {
                x,
                n,
                mode: p[n],
                hermite: h[n],
            });
        }
    }
    match cfg.output_format {
        Format::Csv => {
            writeln!(out, "x,n,mode,hermite").expect("in-memory write");
            for r in &rows {
                writeln!(out, "{},{},{},{}", r.x, r.n, r.mode, r.hermite).expect("in-memory write");
            }
            Ok(out)
        }
        Format::Json => encode(&GridDoc {
            schema_version: export::SCHEMA_VERSION,
            q,
            n_max,
            rows: &rows,
        }),
    }
}

/// Spectrum report of `Q` or `P` and its serialized form.
pub fn cmd_spectrum(operator: OperatorArg, cfg: &RunConfig) -> Result<(qosc::fock::SpectrumReport, Vec<u8>), CliError> {
    let ctx = cfg.context()?;
    let t = match operator {
        OperatorArg::Q => qosc::fock::build_Q(&ctx),
        OperatorArg::P => qosc::fock::build_P(&ctx),
    };
    let report = qosc::fock::spectrum_report(&t, &ctx)?;
    let mut out = Vec::new();
    export::write_spectrum(&report, cfg.output_format, &mut out)?;
    Ok((report, out))
}

/// Serialized kernel over the configured window.
pub fn cmd_kernel(tau: f64, raw: bool, cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    let ctx = cfg.context()?;
    let k = if raw {
        qosc::evolution::kernel_K(tau, &ctx)?
    } else {
        qosc::evolution::fractional_ft(tau, &ctx)?
    };
    let mut out = Vec::new();
    export::write_kernel(&k, cfg.output_format, &mut out)?;
    Ok(out)
}

fn infer_format(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
        _ => Format::Csv,
    }
}

/// `Φ(τ) F` for a rescaled position function stored in `input`. Points
/// outside the kernel's trusted depth at `match_tol` are flagged.
pub fn cmd_evolve(input: &Path, input_format: Option<Format>, tau: f64, cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    let ctx = cfg.context()?;
    let file = std::fs::File::open(input).map_err(|e| CliError::io(input, e))?;
    let format = input_format.unwrap_or_else(|| infer_format(input));
    let f = export::read_lattice_function(std::io::BufReader::new(file), Kind::Position, ctx.q(), format)?;
    if !f.rescaled {
        return Err(qosc::Error::NotRescaled.into());
    }
    let kernel = qosc::evolution::fractional_ft_on(f.points.clone(), tau, &ctx)?;
    let g = kernel.apply(&f)?;
    let depth = kernel.trusted_depth(ctx.match_tol());
    let flags: Vec<bool> = g.points.iter().map(|p| p.level() >= depth).collect();
    let mut out = Vec::new();
    export::write_lattice_function(&g, ctx.q(), Some(&flags), cfg.output_format, &mut out)?;
    Ok(out)
}

/// Parse, run and report; returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<u8, CliError> {
    let cfg = cli.global.resolve()?;
    init_threads()?;
    let out = cfg.output_path.as_deref();
    match &cli.command {
        Command::Hermite { n_max, grid, kind } => {
            let xs = grid.as_deref().map(parse_grid).transpose()?;
            emit(&cmd_hermite(*n_max, xs.as_deref(), (*kind).into(), &cfg)?, out)?;
        }
        Command::Spectrum {
            operator,
            require_depth,
        } => {
            let (report, bytes) = cmd_spectrum(*operator, &cfg)?;
            emit(&bytes, out)?;
            if let Some(s) = require_depth {
                if report.s_match < Some(*s) {
                    return Err(CliError::Verification(format!(
                        "levels matched within {:e}: {}, required 0..={s}",
                        cfg.match_tol, report.matched_levels
                    )));
                }
            }
        }
        Command::Kernel { tau, raw } => emit(&cmd_kernel(*tau, *raw, &cfg)?, out)?,
        Command::Evolve {
            input,
            tau,
            input_format,
        } => emit(&cmd_evolve(input, *input_format, *tau, &cfg)?, out)?,
        Command::Verify { inject_fault } => {
            let report = cmd_verify(
                &cfg,
                VerifyOptions {
                    corrupt_coupling: *inject_fault,
                },
            );
            eprint!("{}", report.summary());
            emit(&report.encode(cfg.output_format)?, out)?;
            if !report.passed() {
                return Ok(2);
            }
        }
    }
    Ok(0)
}
