use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rcldpc::channel::{random_bits, stream_rng, Modulation, SnrConvention};
use rcldpc::code::Code;
use rcldpc::harness::{
    complexity_report, emit_csv, emit_svg, fer_sweep, fer_vs_iteration, parse_snr_grid, with_workers, workers_from_env,
    DecoderDescriptor, ExperimentSpec, FerRecord, Scoring,
};
use rcldpc::neural::{read_model, tie_parameters_pb, write_model, NeuralDecoder, Tying};
use rcldpc::train::{evaluate_loss, greedy_train, write_optimizer_state, DatasetSpec, TrainConfig};
use rcldpc::Scalar;

/// Rate-compatible LDPC codes with classic and neural message-passing decoders.
#[derive(Parser, Debug)]
#[command(name = "rcldpc", version)]
struct Cli {
    /// Worker threads (capped by the RCLDPC_THREADS environment variable).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a base-graph file and print code statistics.
    Construct(CodeArgs),
    /// Encode information bits into a codeword at one rate.
    Encode(EncodeArgs),
    /// Monte-Carlo FER sweep, or FER per iteration with --per-iteration.
    Simulate(SimulateArgs),
    /// Greedy layer-wise training of a neural decoder.
    Train(TrainArgs),
    /// Score a trained model: held-out loss and FER per rate and SNR.
    Eval(EvalArgs),
    /// Per-iteration operation counts and parameter storage.
    Report(ReportArgs),
    /// Re-export a model, optionally changing its tying or format.
    Convert(ConvertArgs),
}

#[derive(Args, Debug)]
struct CodeArgs {
    /// Base-graph file.
    #[arg(long)]
    code: PathBuf,
    /// Lifting factor Z.
    #[arg(long, default_value_t = 4)]
    z: usize,
}

#[derive(Args, Debug)]
struct EncodeArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Ladder index of the rate (0 is the highest rate).
    #[arg(long, default_value_t = 0)]
    rate: usize,
    /// Information bits as a 0/1 string; random bits when omitted.
    #[arg(long)]
    info: Option<String>,
    /// Number of random codewords to print when --info is omitted.
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Seed for random information bits.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Precision {
    F32,
    F64,
}

#[derive(Args, Debug)]
struct ChannelArgs {
    /// Modulation: bpsk or qpsk.
    #[arg(long, default_value = "bpsk")]
    modulation: Modulation,
    /// SNR convention of the grid: ebn0 or esn0.
    #[arg(long, default_value = "ebn0")]
    snr_convention: SnrConvention,
}

#[derive(Args, Debug)]
struct DecoderArgs {
    /// Classic decoder: bp, ms, nms (alpha 0.8), cnms or nms:<alpha>.
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    decoder: Option<String>,
    /// Trained model file (neural decoder).
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    decoder: DecoderArgs,
    #[command(flatten)]
    channel: ChannelArgs,
    /// SNR grid in dB: lo:step:hi or a comma list.
    #[arg(long)]
    snr: String,
    /// Rates: "all", ladder indices (0,2) or rate values (0.5,0.25).
    #[arg(long, default_value = "all")]
    rates: String,
    /// Frame budget per point.
    #[arg(long, default_value_t = 100_000)]
    frames: usize,
    /// Frame errors after which a point may stop (see --min-frames).
    #[arg(long, default_value_t = 100)]
    min_errors: usize,
    /// Frames a point runs before the error target can stop it.
    #[arg(long, default_value_t = 10_000)]
    min_frames: usize,
    /// Run the full frame budget at every point.
    #[arg(long)]
    exhaustive: bool,
    /// Decoding iterations (defaults to the model depth, or 20).
    #[arg(long)]
    max_iter: Option<usize>,
    /// Stop decoding a frame once its syndrome is satisfied.
    #[arg(long)]
    early_exit: bool,
    /// Score frame errors on all active bits instead of information bits.
    #[arg(long)]
    all_bits: bool,
    /// Record FER after every iteration (one rate, one SNR).
    #[arg(long)]
    per_iteration: bool,
    /// Master seed of the channel noise and information bits.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Arithmetic precision of the decoder.
    #[arg(long, value_enum, default_value_t = Precision::F64)]
    precision: Precision,
    /// CSV output path; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional SVG plot of FER against SNR.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Training config file with key = value lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base-graph file (overrides the config).
    #[arg(long)]
    code: Option<PathBuf>,
    /// Lifting factor (overrides the config).
    #[arg(long)]
    z: Option<usize>,
    /// Extra key=value overrides, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Where to write the trained model.
    #[arg(long)]
    out: PathBuf,
    /// Optional path for the optimizer state.
    #[arg(long)]
    optimizer_out: Option<PathBuf>,
    /// Log the loss every this many batches (0 disables).
    #[arg(long, default_value_t = 100)]
    log_every: usize,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Trained model file.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    channel: ChannelArgs,
    /// SNR grid in dB: lo:step:hi or a comma list.
    #[arg(long)]
    snr: String,
    /// Rates: "all", ladder indices or rate values.
    #[arg(long, default_value = "all")]
    rates: String,
    /// Frames per point.
    #[arg(long, default_value_t = 10_000)]
    frames: usize,
    /// Held-out frames for the loss.
    #[arg(long, default_value_t = 2000)]
    loss_frames: usize,
    /// Master seed of the evaluation frames.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Unrolled layers used for total parameter counts.
    #[arg(long, default_value_t = 20)]
    layers: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModelFormat {
    /// The native model text format.
    Rcnn,
    /// One CSV row per parameter row: layer, kind, values.
    Csv,
}

#[derive(Args, Debug)]
struct ConvertArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Input model file.
    #[arg(long)]
    model: PathBuf,
    /// Output path.
    #[arg(long)]
    out: PathBuf,
    /// Tie parameters per base-graph entry.
    #[arg(long, conflicts_with = "untie")]
    tie: bool,
    /// Expand tied parameters to one per edge.
    #[arg(long)]
    untie: bool,
    #[arg(long, value_enum, default_value_t = ModelFormat::Rcnn)]
    format: ModelFormat,
}

fn load_code(path: &Path, z: usize) -> Result<Code> {
    if !path.is_file() {
        bail!("code file not found: {}", path.display());
    }
    Code::from_file(path, z).with_context(|| format!("invalid code file {}", path.display()))
}

fn load_model<T: Scalar>(path: &Path, code: &Code) -> Result<NeuralDecoder<T>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read model {}", path.display()))?;
    read_model(&text, code).with_context(|| format!("model {} does not fit the code", path.display()))
}

fn parse_rates(code: &Code, s: &str) -> Result<Vec<usize>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok((0..code.rate_count()).collect());
    }
    s.split(',')
        .map(|tok| {
            let tok = tok.trim();
            if tok.contains('.') {
                let target: f64 = tok.parse().with_context(|| format!("bad rate {tok:?}"))?;
                code.ladder
                    .rates
                    .iter()
                    .position(|r| (r.rate_value - target).abs() <= 0.01)
                    .ok_or_else(|| anyhow!("no ladder rate within 0.01 of {target}"))
            } else {
                let i: usize = tok.parse().with_context(|| format!("bad rate index {tok:?}"))?;
                code.ladder.get(i)?;
                Ok(i)
            }
        })
        .collect()
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn bits_string(bits: &[u8]) -> String {
    bits.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
}

fn construct(args: &CodeArgs) -> Result<()> {
    let code = load_code(&args.code, args.z)?;
    let bg = &code.base;
    println!("base graph: {} x {} ({} information columns, {} precode rows, {} punctured)", bg.rows, bg.cols, bg.info_cols, bg.precode_rows, bg.punctured_cols);
    println!("base entries: {}", bg.entries.len());
    println!("lifting Z: {}", code.z());
    println!("N = {}, M = {}, E = {}, K = {}", code.n(), code.h.m, code.tanner.edge_count(), code.ladder.info_bits);
    println!("fingerprint: {}", code.fingerprint());
    println!("{:>5} {:>8} {:>6} {:>6} {:>6} {:>8}", "index", "rate", "VNs", "CNs", "edges", "sent");
    for (i, r) in code.ladder.rates.iter().enumerate() {
        println!(
            "{:>5} {:>8.4} {:>6} {:>6} {:>6} {:>8}",
            i,
            r.rate_value,
            r.active_vn_count,
            r.active_cn_count,
            r.active_edges.count(),
            r.transmitted_positions.len()
        );
    }
    Ok(())
}

fn encode(args: &EncodeArgs) -> Result<()> {
    let code = load_code(&args.code.code, args.code.z)?;
    let k = code.encoder.info_len();
    let words: Vec<Vec<u8>> = match &args.info {
        Some(s) => {
            let bits: Vec<u8> = s
                .trim()
                .chars()
                .map(|c| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    _ => Err(anyhow!("information bits must be 0 or 1, found {c:?}")),
                })
                .collect::<Result<_>>()?;
            vec![bits]
        }
        None => {
            let mut rng = stream_rng(args.seed, 0);
            (0..args.count).map(|_| random_bits(&mut rng, k)).collect()
        }
    };
    for info in words {
        let cw = code.encode(&info, args.rate)?;
        let active = code.ladder.rates[args.rate].active_vn_count;
        println!("{}", bits_string(&cw.bits[..active]));
    }
    Ok(())
}

fn run_sweep<T: Scalar>(code: &Code, args: &SimulateArgs) -> Result<(String, Vec<FerRecord>)> {
    let decoder: DecoderDescriptor<T> = match (&args.decoder.decoder, &args.decoder.model) {
        (Some(name), _) => DecoderDescriptor::Classic(name.parse().with_context(|| format!("unknown decoder {name:?}"))?),
        (None, Some(path)) => DecoderDescriptor::Neural(load_model(path, code)?),
        (None, None) => bail!("either --decoder or --model is required"),
    };
    let max_iter = match (&decoder, args.max_iter) {
        (_, Some(l)) => l,
        (DecoderDescriptor::Neural(n), None) => n.config.l_max,
        (DecoderDescriptor::Classic(_), None) => 20,
    };
    let mut spec = ExperimentSpec::new(parse_rates(code, &args.rates)?, parse_snr_grid(&args.snr)?, args.frames, max_iter, args.seed);
    spec.modulation = args.channel.modulation;
    spec.snr_convention = args.channel.snr_convention;
    spec.early_exit = args.early_exit;
    spec.scoring = if args.all_bits { Scoring::AllBits } else { Scoring::InfoBits };
    if !args.exhaustive {
        spec.min_errors = Some(args.min_errors);
        spec.min_frames = args.min_frames;
    }
    let label = decoder.label();
    let records = if args.per_iteration {
        fer_vs_iteration(code, &decoder, &spec)?
    } else {
        fer_sweep(code, &decoder, &spec)?
    };
    Ok((label, records))
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let code = load_code(&args.code.code, args.code.z)?;
    let (label, records) = match args.precision {
        Precision::F64 => run_sweep::<f64>(&code, args)?,
        Precision::F32 => run_sweep::<f32>(&code, args)?,
    };
    write_or_print(args.out.as_deref(), &emit_csv(&records))?;
    if let Some(svg) = &args.svg {
        let mut series: Vec<(String, Vec<FerRecord>)> = Vec::new();
        for r in &records {
            let name = format!("{label} R={:.4}", r.rate);
            match series.iter_mut().find(|(n, _)| *n == name) {
                Some((_, v)) => v.push(r.clone()),
                None => series.push((name, vec![r.clone()])),
            }
        }
        fs::write(svg, emit_svg(&series)).with_context(|| format!("cannot write {}", svg.display()))?;
    }
    Ok(())
}

fn train(args: &TrainArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read config {}", p.display()))?;
            TrainConfig::parse(&text).with_context(|| format!("invalid config {}", p.display()))?
        }
        None => TrainConfig::default(),
    };
    for kv in &args.overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {kv:?}"))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(c) = &args.code {
        cfg.code = Some(c.clone());
    }
    if let Some(z) = args.z {
        cfg.z = z;
    }
    let path = cfg.code.clone().ok_or_else(|| anyhow!("no code file: pass --code or set code = ... in the config"))?;
    let code = load_code(&path, cfg.z)?;
    let every = args.log_every;
    let progress = move |stage: usize, batch: usize, loss: f64| {
        if every > 0 && batch.is_multiple_of(every) {
            log::info!("stage {stage} batch {batch}: loss {loss:.5}");
        }
    };
    let outcome = greedy_train::<f64>(&code, &cfg, Some(&progress))?;
    fs::write(&args.out, write_model(&outcome.decoder)).with_context(|| format!("cannot write {}", args.out.display()))?;
    if let Some(p) = &args.optimizer_out {
        fs::write(p, write_optimizer_state(&outcome.optimizer)).with_context(|| format!("cannot write {}", p.display()))?;
    }
    for (i, v) in outcome.stage_validation.iter().enumerate() {
        println!("stage {}: validation loss {v:.6}", i + 1);
    }
    Ok(())
}

fn eval(args: &EvalArgs) -> Result<()> {
    let code = load_code(&args.code.code, args.code.z)?;
    let dec: NeuralDecoder<f64> = load_model(&args.model, &code)?;
    let rates = parse_rates(&code, &args.rates)?;
    let snrs = parse_snr_grid(&args.snr)?;
    let mut spec = ExperimentSpec::new(rates.clone(), snrs.clone(), args.frames, dec.config.l_max, args.seed);
    spec.modulation = args.channel.modulation;
    spec.snr_convention = args.channel.snr_convention;
    let records = fer_sweep(&code, &DecoderDescriptor::Neural(dec.clone()), &spec)?;
    println!("{:>8} {:>8} {:>10} {:>12} {:>12}", "rate", "snr_db", "loss", "fer", "ber");
    for r in &records {
        let idx = code.ladder.rates.iter().position(|e| e.rate_value == r.rate).unwrap_or(0);
        let data = DatasetSpec {
            rates: vec![idx],
            snr_lo: r.snr_db,
            snr_hi: r.snr_db,
            modulation: spec.modulation,
            snr_convention: spec.snr_convention,
            all_zero: false,
            seed: args.seed,
        };
        let batch = data.batch::<f64>(&code, 2, 0, args.loss_frames)?;
        let loss = evaluate_loss(&dec, &code, &batch, dec.config.l_max)?;
        println!("{:>8.4} {:>8} {:>10.5} {:>12.4e} {:>12.4e}", r.rate, r.snr_db, loss, r.fer, r.ber);
    }
    Ok(())
}

fn report(args: &ReportArgs) -> Result<()> {
    let code = load_code(&args.code.code, args.code.z)?;
    print!("{}", complexity_report(&code, args.layers));
    Ok(())
}

fn convert(args: &ConvertArgs) -> Result<()> {
    let code = load_code(&args.code.code, args.code.z)?;
    let mut dec: NeuralDecoder<f64> = load_model(&args.model, &code)?;
    if args.untie && dec.params.tying == Tying::PerBaseEdge {
        dec.params = dec.params.expand();
        dec.config.tying = Tying::PerEdge;
    }
    if args.tie && dec.params.tying == Tying::PerEdge {
        dec.params = tie_parameters_pb(&dec.params, &code.base_edge_map())?;
        dec.config.tying = Tying::PerBaseEdge;
    }
    let text = match args.format {
        ModelFormat::Rcnn => write_model(&dec),
        ModelFormat::Csv => {
            let p = &dec.params;
            let mut s = String::from("layer,kind,values\n");
            for r in 0..p.rows() {
                let vals: Vec<String> = p.row(r).iter().map(|v| format!("{v:.16e}")).collect();
                s.push_str(&format!("{},{},{}\n", r / 2 + 1, if r % 2 == 0 { "weight" } else { "bias" }, vals.join(" ")));
            }
            s
        }
    };
    fs::write(&args.out, text).with_context(|| format!("cannot write {}", args.out.display()))
}

fn run(cli: Cli) -> Result<()> {
    let workers = match (cli.threads, workers_from_env()?) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    with_workers(workers, move || match &cli.command {
        Command::Construct(a) => construct(a),
        Command::Encode(a) => encode(a),
        Command::Simulate(a) => simulate(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Report(a) => report(a),
        Command::Convert(a) => convert(a),
    })?
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
