//! The `race` command-line tool.
//!
//! Exit codes: 0 on success, 1 on usage errors (bad flags, invalid
//! parameters), 2 on data or format errors (unreadable files, malformed
//! input, corrupt sketches, unmergeable sketches).

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::eval::{run_eval, EvalPlan, Method};
use crate::io::{read_dense, read_dense_with_dim, read_sparse, write_eval_csv, EvalRecord};
use crate::lsh::{LshConfig, LshKind};
use crate::sketch::{RaceSketch, Storage, DEFAULT_GROUPS, VERSION};
use crate::vectors::DataVector;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "race", version, about = "Streaming kernel density sketches")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a sketch from a dataset in one pass.
    Sketch(SketchArgs),
    /// Estimate the density of each query vector.
    Query(QueryArgs),
    /// Merge sketches built with identical parameters.
    Merge(MergeArgs),
    /// Print a sketch's header and occupancy.
    Info(InfoArgs),
    /// Compare RACE and random sampling across byte budgets.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Format {
    Dense,
    Sparse,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum KindArg {
    Srp,
    L2,
    L1,
}

impl From<KindArg> for LshKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Srp => LshKind::Srp,
            KindArg::L2 => LshKind::L2,
            KindArg::L1 => LshKind::L1,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
pub enum StorageArg {
    Dense,
    Sparse,
    #[default]
    Auto,
}

impl StorageArg {
    fn resolve(self) -> Option<Storage> {
        match self {
            StorageArg::Dense => Some(Storage::Dense),
            StorageArg::Sparse => Some(Storage::Sparse),
            StorageArg::Auto => None,
        }
    }
}

#[derive(Debug, Args)]
pub struct InputFormat {
    #[arg(long, value_enum, default_value = "dense")]
    pub format: Format,
    /// Vector dimension; required for sparse input, inferred for dense.
    #[arg(long)]
    pub dim: Option<usize>,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1)]
    pub power: u32,
    /// Rehash range R (L2/L1). SRP always uses 2^power.
    #[arg(long)]
    pub range: Option<u64>,
}

impl KernelArgs {
    fn config(&self, dim: usize, rows: usize, seed: u64) -> Result<LshConfig, Error> {
        match self.kind.into() {
            LshKind::Srp => {
                let cfg = LshConfig::srp(dim, self.power, rows, seed)?;
                if let Some(r) = self.range.filter(|r| *r != cfg.range) {
                    return Err(Error::InvalidConfig(format!(
                        "SRP range must be 2^power = {}, got {r}",
                        cfg.range
                    )));
                }
                Ok(cfg)
            }
            kind => {
                let range = self
                    .range
                    .ok_or_else(|| Error::InvalidConfig("--range is required for l2/l1".into()))?;
                LshConfig::pstable(kind, dim, self.sigma, self.power, rows, range, seed)
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct SketchArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub format: InputFormat,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, default_value_t = 1000)]
    pub rows: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "auto")]
    pub storage: StorageArg,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    /// Sketch file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, value_enum, default_value = "dense")]
    pub format: Format,
    #[arg(long, default_value_t = DEFAULT_GROUPS)]
    pub groups: usize,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MergeArgs {
    /// Sketch files to merge (repeat the flag or list several).
    #[arg(long, num_args = 1.., required = true)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Dataset file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    #[command(flatten)]
    pub format: InputFormat,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, value_delimiter = ',', default_value = "race,rs")]
    pub methods: Vec<String>,
    /// Byte budgets, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<u64>,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_GROUPS)]
    pub groups: usize,
    #[arg(long, value_enum, default_value = "auto")]
    pub storage: StorageArg,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::InvalidGroups { .. } | Error::OutOfRange(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Data(other.to_string()),
        }
    }
}

fn data_err(path: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| Failure::Data(format!("{}: {e}", path.display()))
}

type CmdResult = Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Sketch(a) => cmd_sketch(&a, out),
        Command::Query(a) => cmd_query(&a, out),
        Command::Merge(a) => cmd_merge(&a, out),
        Command::Info(a) => cmd_info(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Data(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_DATA
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

/// Iterates vectors of `path`; `dim` is mandatory for sparse input.
fn read_vectors(
    path: &Path,
    format: Format,
    dim: Option<usize>,
) -> Result<Box<dyn Iterator<Item = crate::Result<DataVector>>>, Failure> {
    let src = open(path)?;
    Ok(match (format, dim) {
        (Format::Dense, None) => Box::new(read_dense(src)),
        (Format::Dense, Some(d)) => Box::new(read_dense_with_dim(src, d)),
        (Format::Sparse, Some(d)) => Box::new(read_sparse(src, d)),
        (Format::Sparse, None) => {
            return Err(Failure::Usage("--dim is required for sparse input".into()))
        }
    })
}

fn load_vectors(
    path: &Path,
    format: Format,
    dim: Option<usize>,
) -> Result<Vec<DataVector>, Failure> {
    read_vectors(path, format, dim)?
        .collect::<crate::Result<Vec<_>>>()
        .map_err(data_err(path))
}

fn load_sketch(path: &Path) -> Result<RaceSketch, Failure> {
    RaceSketch::deserialize(open(path)?).map_err(data_err(path))
}

fn write_file(path: &Path, bytes: &[u8]) -> CmdResult {
    std::fs::write(path, bytes).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn write_csv(records: &[EvalRecord], output: Option<&Path>, out: &mut dyn Write) -> CmdResult {
    match output {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
            write_eval_csv(records, BufWriter::new(file))?;
        }
        None => write_eval_csv(records, out)?,
    }
    Ok(())
}

fn cmd_sketch(a: &SketchArgs, out: &mut dyn Write) -> CmdResult {
    let start = Instant::now();
    if matches!(a.format.format, Format::Sparse) && a.format.dim.is_none() {
        return Err(Failure::Usage("--dim is required for sparse input".into()));
    }
    // Validate the parameters before touching the data.
    let probe = a.kernel.config(a.format.dim.unwrap_or(1), a.rows, a.seed)?;
    if let Some(s) = a.storage.resolve() {
        RaceSketch::with_storage(probe.with_rows(1), s)?;
    }

    let mut vectors = read_vectors(&a.input, a.format.format, a.format.dim)?.peekable();
    let dim = match (a.format.dim, vectors.peek()) {
        (Some(d), _) => d,
        (None, Some(Ok(v))) => v.dim(),
        (None, Some(Err(_))) => {
            let e = vectors.next().unwrap().unwrap_err();
            return Err(data_err(&a.input)(e));
        }
        (None, None) => return Err(Failure::Data(format!("{}: no vectors", a.input.display()))),
    };
    let cfg = a.kernel.config(dim, a.rows, a.seed)?;
    let mut sketch = match a.storage.resolve() {
        Some(s) => RaceSketch::with_storage(cfg, s)?,
        None => RaceSketch::new(cfg)?,
    };
    let hasher = crate::eval::hasher_for(&cfg)?;
    for v in vectors {
        let v = v.map_err(data_err(&a.input))?;
        sketch.add_with(&hasher, &v).map_err(data_err(&a.input))?;
    }
    write_file(&a.output, &sketch.to_bytes())?;
    writeln!(
        out,
        "items={} bytes={} wall_time_ms={}",
        sketch.items(),
        sketch.memory_bytes(),
        start.elapsed().as_millis()
    )
    .map_err(Error::from)?;
    Ok(())
}

fn cmd_query(a: &QueryArgs, out: &mut dyn Write) -> CmdResult {
    if a.groups == 0 || a.groups.is_multiple_of(2) {
        return Err(Failure::Usage(format!(
            "--groups must be odd, got {}",
            a.groups
        )));
    }
    let sketch = load_sketch(&a.input)?;
    let cfg = *sketch.config();
    if a.groups > cfg.rows {
        return Err(Failure::Usage(format!(
            "--groups {} exceeds the sketch's {} rows",
            a.groups, cfg.rows
        )));
    }
    let hasher = crate::eval::hasher_for(&cfg)?;
    let queries = load_vectors(&a.queries, a.format, Some(cfg.dim))?;
    let params = format!("groups={}", a.groups);
    let bytes = sketch.memory_bytes();
    let records = queries
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let est = sketch.estimate_with(&hasher, q, a.groups)?;
            Ok(EvalRecord::new(
                i as u64,
                "race",
                params.clone(),
                bytes,
                None,
                est.value,
            ))
        })
        .collect::<crate::Result<Vec<_>>>()
        .map_err(data_err(&a.input))?;
    write_csv(&records, a.output.as_deref(), out)
}

fn cmd_merge(a: &MergeArgs, out: &mut dyn Write) -> CmdResult {
    let mut merged = load_sketch(&a.input[0])?;
    for path in &a.input[1..] {
        let next = load_sketch(path)?;
        merged.merge_from(&next).map_err(data_err(path))?;
    }
    write_file(&a.output, &merged.to_bytes())?;
    writeln!(
        out,
        "items={} bytes={}",
        merged.items(),
        merged.memory_bytes()
    )
    .map_err(Error::from)?;
    Ok(())
}

fn cmd_info(a: &InfoArgs, out: &mut dyn Write) -> CmdResult {
    let bytes = std::fs::read(&a.input)
        .map_err(|e| Failure::Data(format!("{}: {e}", a.input.display())))?;
    let s = RaceSketch::from_bytes(&bytes).map_err(data_err(&a.input))?;
    let c = s.config();
    let storage = match s.storage() {
        Storage::Dense => "dense",
        Storage::Sparse => "sparse",
    };
    let text = format!(
        "version: {VERSION}\nkind: {}\ndim: {}\nsigma: {}\npower: {}\nrows: {}\nrange: {}\nseed: {}\n\
         rehash_family_id: {}\nstorage: {storage}\ncounter_width_bytes: {}\nitems: {}\n\
         nonzero_fraction: {}\nbytes: {}\n",
        c.kind,
        c.dim,
        c.sigma,
        c.power,
        c.rows,
        c.range,
        c.seed,
        s.rehash_family_id(),
        1u32 << bytes[11],
        s.items(),
        s.nonzero_fraction(),
        s.memory_bytes(),
    );
    out.write_all(text.as_bytes()).map_err(Error::from)?;
    Ok(())
}

fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> CmdResult {
    let methods = a
        .methods
        .iter()
        .map(|m| m.parse::<Method>())
        .collect::<crate::Result<Vec<_>>>()?;
    let plan = EvalPlan {
        kind: a.kernel.kind.into(),
        sigma: a.kernel.sigma,
        power: a.kernel.power,
        range: match a.kernel.kind {
            KindArg::Srp => 2,
            _ => a
                .kernel
                .range
                .ok_or_else(|| Failure::Usage("--range is required for l2/l1".into()))?,
        },
        methods,
        sizes: a.sizes.clone(),
        repeats: a.repeats,
        seed: a.seed,
        groups: a.groups,
        storage: a.storage.resolve(),
    };
    a.kernel.config(1, 1, 0)?;
    plan.validate()?;
    if matches!(a.format.format, Format::Sparse) && a.format.dim.is_none() {
        return Err(Failure::Usage("--dim is required for sparse input".into()));
    }

    let dataset = load_vectors(&a.input, a.format.format, a.format.dim)?;
    let dim = dataset
        .first()
        .map(|v| v.dim())
        .ok_or_else(|| Failure::Data(format!("{}: no vectors", a.input.display())))?;
    let queries = load_vectors(&a.queries, a.format.format, Some(dim))?;
    let records = run_eval(&plan, &dataset, &queries)?;
    write_csv(&records, a.output.as_deref(), out)
}
