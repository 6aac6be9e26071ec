use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use eie_core::bench::{self, compare_runs, SweepAxis};
use eie_core::container::EiecContainer;
use eie_core::csc::{encode_blocked, padding_stats_blocked, validate_blocked};
use eie_core::energy::{estimate_energy, EnergyTable};
use eie_core::io;
use eie_core::{
    build_codebook, decode_blocked, prune_magnitude, quantize, simulate_blocked, spmv_blocked,
    ActivationVector, BlockedCsc, Error as CoreError, FixedPointFormat, QuantizedSparseMatrix,
    SimConfig,
};

const EXIT_USAGE: u8 = 1;
const EXIT_FORMAT: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(
    name = "eie",
    version,
    about = "Compress, run and simulate sparse fully-connected layers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prune, weight-share and encode a Matrix Market matrix into an EIEC file
    Compress(CompressArgs),
    /// Evaluate a layer with the functional engine
    Run(RunArgs),
    /// Evaluate a layer on the cycle-level model and report statistics
    Simulate(SimulateArgs),
    /// Write a synthetic benchmark layer and input vector
    Bench(BenchArgs),
    /// Sweep one hardware parameter over a benchmark
    Sweep(SweepArgs),
    /// Check an EIEC file: CRC, encoding invariants and decode/encode round trip
    Verify(VerifyArgs),
}

#[derive(Args)]
struct CompressArgs {
    /// Matrix Market input
    #[arg(long, short)]
    input: PathBuf,
    /// Fraction of weights kept
    #[arg(long)]
    density: f64,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long = "pes", default_value_t = 64)]
    n_pe: usize,
    #[arg(long, default_value_t = 8)]
    fraction_bits: u8,
    /// Columns per pointer block; 0 stores the whole matrix as one block
    /// [default: PEs x 64]
    #[arg(long)]
    block_cols: Option<usize>,
}

#[derive(Args)]
struct LayerInput {
    /// EIEC model
    #[arg(long, short)]
    model: PathBuf,
    /// Activation file (text or raw)
    #[arg(long, short)]
    activations: PathBuf,
    /// Apply ReLU before write-back
    #[arg(long)]
    relu: bool,
    /// Output activation file [default: stdout]
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Write the output in raw binary form instead of text
    #[arg(long)]
    raw: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    layer: LayerInput,
}

#[derive(Args)]
struct HardwareArgs {
    /// PEs [default: the model's]
    #[arg(long = "pes")]
    n_pe: Option<usize>,
    #[arg(long, default_value_t = 8)]
    fifo_depth: usize,
    /// Sparse-matrix SRAM width in bits
    #[arg(long, default_value_t = 64)]
    sram_width: usize,
    #[arg(long, default_value_t = 2)]
    broadcast_latency: u64,
    #[arg(long, default_value_t = 800.0)]
    clock_mhz: f64,
    /// Destination register entries per PE
    #[arg(long, default_value_t = 64)]
    reg_file_entries: usize,
}

impl HardwareArgs {
    fn config(&self, default_pes: usize) -> SimConfig {
        SimConfig {
            n_pe: self.n_pe.unwrap_or(default_pes),
            fifo_depth: self.fifo_depth,
            sram_width_bits: self.sram_width,
            broadcast_latency: self.broadcast_latency,
            clock_mhz: self.clock_mhz,
            reg_file_entries: self.reg_file_entries,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    layer: LayerInput,
    #[command(flatten)]
    hw: HardwareArgs,
    /// Statistics CSV
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Statistics JSON summary
    #[arg(long)]
    json: Option<PathBuf>,
    /// Energy table overrides (JSON object of event name to pJ)
    #[arg(long)]
    energy_table: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Preset name
    #[arg(long, short, required_unless_present = "list")]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, short, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long = "pes", default_value_t = 64)]
    n_pe: usize,
    /// Override the layer shape as IN,OUT keeping the preset densities
    #[arg(long, value_parser = parse_shape)]
    shape: Option<(usize, usize)>,
    /// List presets and exit
    #[arg(long)]
    list: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, short)]
    preset: String,
    #[arg(long)]
    seed: Option<u64>,
    /// fifo, pe or sram
    #[arg(long)]
    axis: String,
    /// Comma-separated axis values
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<usize>,
    #[arg(long, value_parser = parse_shape)]
    shape: Option<(usize, usize)>,
    #[command(flatten)]
    hw: HardwareArgs,
    /// Sweep CSV [default: stdout]
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Also write the speedup table here
    #[arg(long)]
    compare: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    model: PathBuf,
}

fn parse_shape(s: &str) -> std::result::Result<(usize, usize), String> {
    let (i, o) = s.split_once(',').ok_or("expected IN,OUT")?;
    let i = i
        .trim()
        .parse()
        .map_err(|_| format!("bad input size {i:?}"))?;
    let o = o
        .trim()
        .parse()
        .map_err(|_| format!("bad output size {o:?}"))?;
    Ok((i, o))
}

/// Marks a failed integrity check.
#[derive(Debug)]
struct VerifyFailed(String);

impl std::fmt::Display for VerifyFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for VerifyFailed {}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn read_model(path: &Path) -> Result<EiecContainer> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    EiecContainer::from_bytes(&bytes).with_context(|| format!("loading {}", path.display()))
}

fn read_input(path: &Path, format: FixedPointFormat) -> Result<ActivationVector> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let (a, saturated) = io::read_activations(&bytes, format)
        .with_context(|| format!("loading {}", path.display()))?;
    if a.format() != format {
        bail!(
            "activations are Q.{} but the model is Q.{}",
            a.format().fraction_bits(),
            format.fraction_bits()
        );
    }
    if saturated > 0 {
        eprintln!("warning: {saturated} activations saturated");
    }
    Ok(a)
}

fn emit_output(layer: &LayerInput, out: &ActivationVector) -> Result<()> {
    let bytes = if layer.raw {
        io::write_raw_activations(out)
    } else {
        io::write_text_activations(out).into_bytes()
    };
    match &layer.out {
        Some(p) => write_atomic(p, &bytes),
        None => {
            std::io::stdout().write_all(&bytes)?;
            Ok(())
        }
    }
}

fn cmd_compress(args: &CompressArgs) -> Result<()> {
    let format = FixedPointFormat::new(args.fraction_bits)?;
    let text = fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let w = io::read_matrix_market(&text)?;
    let mask = prune_magnitude(&w, args.density)?;
    let codebook = build_codebook(&w, &mask, format)?;
    let q = quantize(&w, &mask, &codebook)?;
    let block_cols = match args.block_cols {
        Some(0) => q.cols(),
        Some(b) => b,
        None => args.n_pe.max(1) * SimConfig::default().reg_file_entries,
    };
    let e = encode_blocked(&q, args.n_pe, block_cols)?;
    write_atomic(
        &args.out,
        &EiecContainer::new(e.clone(), codebook).to_bytes(),
    )?;

    println!("shape {}x{}", q.rows(), q.cols());
    println!(
        "density {:.6} ({} of {} kept)",
        q.density(),
        q.nnz(),
        q.rows() * q.cols()
    );
    println!("padding {}", padding_stats_blocked(&e).total);
    let values: Vec<String> = (0..16u8).map(|k| codebook.real(k).to_string()).collect();
    println!("codebook {}", values.join(" "));
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let model = read_model(&args.layer.model)?;
    let a = read_input(&args.layer.activations, model.codebook.format())?;
    let out = spmv_blocked(&model.layer, &model.codebook, &a, args.layer.relu)?;
    emit_output(&args.layer, &out)
}

/// Re-encodes a layer for a different PE count.
fn reencode(model: &EiecContainer, cfg: &SimConfig) -> Result<BlockedCsc> {
    if model.layer.n_pe() == cfg.n_pe {
        return Ok(model.layer.clone());
    }
    let q: QuantizedSparseMatrix = decode_blocked(&model.layer, &model.codebook)?;
    Ok(bench::encode_for(&q, cfg)?)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let model = read_model(&args.layer.model)?;
    let a = read_input(&args.layer.activations, model.codebook.format())?;
    let cfg = args.hw.config(model.layer.n_pe());
    cfg.validate()?;
    let layer = reencode(&model, &cfg)?;
    let (out, stats) = simulate_blocked(&layer, &model.codebook, &a, &cfg, args.layer.relu)?;

    let mut table = EnergyTable::default();
    if let Some(p) = &args.energy_table {
        let json = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        table = table.with_overrides(&json)?;
    }
    let energy = estimate_energy(&stats, &cfg, &table)?;
    if let Some(p) = &args.stats {
        write_atomic(p, io::stats_csv(&stats).as_bytes())?;
    }
    if let Some(p) = &args.json {
        let mut v: serde_json::Value = serde_json::from_str(&io::stats_json(&stats))?;
        v["energy"] = serde_json::to_value(&energy)?;
        write_atomic(p, serde_json::to_string_pretty(&v)?.as_bytes())?;
    }
    let eff = eie_core::load_efficiency(&stats);
    eprintln!(
        "cycles {} ({:.3} us), efficiency {:.4}, macs {}, energy {:.3e} J",
        stats.total_cycles,
        stats.seconds() * 1e6,
        eff.aggregate,
        stats.mac_count,
        energy.total
    );
    emit_output(&args.layer, &out)
}

fn bench_spec(
    preset: &str,
    seed: Option<u64>,
    shape: Option<(usize, usize)>,
) -> Result<bench::BenchmarkSpec> {
    let mut spec = bench::preset(preset)?;
    if let Some(s) = seed {
        spec = spec.with_seed(s);
    }
    if let Some((i, o)) = shape {
        spec = spec.scaled(i, o);
        spec.validate()?;
    }
    Ok(spec)
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    if args.list {
        for spec in bench::all_presets() {
            println!(
                "{:8} in {:6} out {:6} weight {:5.1}% act {:5.1}%",
                spec.name,
                spec.in_dim,
                spec.out_dim,
                spec.weight_density * 100.0,
                spec.activation_density * 100.0
            );
        }
        return Ok(());
    }
    let name = args
        .preset
        .as_deref()
        .ok_or_else(|| anyhow!("--preset is required"))?;
    let spec = bench_spec(name, args.seed, args.shape)?;
    let (q, a) = bench::generate_synthetic(&spec)?;
    let cfg = SimConfig::with_pes(args.n_pe);
    let e = bench::encode_for(&q, &cfg)?;
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let model = args.out_dir.join(format!("{}.eiec", spec.name));
    let input = args.out_dir.join(format!("{}.act", spec.name));
    write_atomic(&model, &EiecContainer::new(e, *q.codebook()).to_bytes())?;
    write_atomic(&input, &io::write_raw_activations(&a))?;
    println!("{}", model.display());
    println!("{}", input.display());
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let axis = SweepAxis::parse(&args.axis)?;
    let spec = bench_spec(&args.preset, args.seed, args.shape)?;
    let base = args.hw.config(64);
    let result = bench::sweep(&spec, &base, axis, &args.values)?;
    for (v, p) in args.values.iter().zip(&result.points) {
        if let Err(e) = p {
            eprintln!("warning: {}={v} failed: {e}", axis.name());
        }
    }
    let csv = result.to_csv();
    match &args.out {
        Some(p) => write_atomic(p, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    if let Some(p) = &args.compare {
        write_atomic(p, compare_runs(&[result])?.to_csv().as_bytes())?;
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<()> {
    let bytes =
        fs::read(&args.model).with_context(|| format!("reading {}", args.model.display()))?;
    let model = EiecContainer::from_bytes(&bytes).map_err(|e| VerifyFailed(e.to_string()))?;
    if let Some(v) = validate_blocked(&model.layer).into_iter().next() {
        return Err(VerifyFailed(v).into());
    }
    let q =
        decode_blocked(&model.layer, &model.codebook).map_err(|e| VerifyFailed(e.to_string()))?;
    let again = encode_blocked(&q, model.layer.n_pe(), model.layer.block_cols())
        .map_err(|e| VerifyFailed(format!("re-encoding failed: {e}")))?;
    if again != model.layer {
        return Err(VerifyFailed("decode/encode round trip changed the layer".into()).into());
    }
    if EiecContainer::new(again, model.codebook).to_bytes() != bytes {
        return Err(VerifyFailed("re-serialized container differs from the file".into()).into());
    }
    println!(
        "ok: {}x{} over {} PEs, {} stored entries, {} padding",
        model.layer.rows(),
        model.layer.cols(),
        model.layer.n_pe(),
        model.layer.stored_entries(),
        padding_stats_blocked(&model.layer).total
    );
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<VerifyFailed>() {
            return EXIT_VERIFY;
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return match e {
                CoreError::Format(_) | CoreError::Capacity { .. } | CoreError::Overflow { .. } => {
                    EXIT_FORMAT
                }
                _ => EXIT_USAGE,
            };
        }
    }
    EXIT_USAGE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Compress(a) => cmd_compress(a),
        Command::Run(a) => cmd_run(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
