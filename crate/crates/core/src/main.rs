use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cscode::bits::{format_bits, parse_bits};
use cscode::codec_fl::{fl_encode, lut_decode};
use cscode::codec_vl::{vl_decode_bitwise, vl_decode_resync, vl_encode, VlCodebook};
use cscode::config::{resolve_fl_codebook, resolve_vl_codebook, KeyValues};
use cscode::constraint::{build_fsm, fl_rate_table, Constraint};
use cscode::sim::{load_csv, render_svg, run_sweep, Curve, SweepConfig};
use cscode::training::{nve_from_runs, run_train_fl, run_train_vl, RunSummary};
use cscode::{Error, Result};

const SNR_HELP: &str = "SNR values are Eb/N0 in dB by default: sigma^2 = Es / (2 R 10^(snr/10)) \
with Es the mean symbol energy and R the code rate. Set `convention=esn0` in a config file to \
drop the rate factor. Exit codes: 0 success, 2 configuration or input error, 3 numeric or \
training failure.";

#[derive(Parser)]
#[command(name = "cscode", version, about = "Constrained sequence codes with neural decoders", after_help = SNR_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Capacity of a constraint: `dcfree:<N>`, `rll:<d>,<k>` or `rll:<d>,inf`.
    Capacity { constraint: String },
    /// Shortest fixed-length code for each source length up to `kmax`.
    RateTable {
        #[arg(long)]
        capacity: f64,
        #[arg(long)]
        kmax: usize,
    },
    /// Encode a bit string.
    Encode {
        #[command(flatten)]
        code: CodeArgs,
        bits: String,
    },
    /// Decode a hard-decision bit string.
    Decode {
        #[command(flatten)]
        code: CodeArgs,
        /// Variable-length decoding rule.
        #[arg(long, value_enum, default_value_t = VlMethod::Bitwise)]
        method: VlMethod,
        /// Window bound for resynchronising decoding; defaults to the
        /// longest codeword.
        #[arg(long)]
        l_max: Option<usize>,
        bits: String,
    },
    /// Train a fixed-length decoder network.
    TrainFl(TrainArgs),
    /// Train a variable-length segmentation network.
    TrainVl(TrainArgs),
    /// Monte-Carlo error-rate sweep. Writes sweep.csv, sweep.txt, sweep.svg
    /// and, for variable-length codes, raw.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Select among training runs by normalized validation error.
    Nve {
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
    },
    /// Overlay sweep CSV files in one plot.
    Plot {
        #[arg(long)]
        out: PathBuf,
        /// Plot block error rate instead of bit error rate.
        #[arg(long)]
        bler: bool,
        #[arg(required = true)]
        csv: Vec<PathBuf>,
    },
}

#[derive(clap::Args)]
struct CodeArgs {
    /// `builtin:4b6b`, `builtin:rll13`, `builtin:dcfree-vl` or a codebook file.
    #[arg(long)]
    codebook: String,
    /// Codebook family; inferred for the built-in names.
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    /// Frames for fixed-length codes.
    #[arg(long, default_value_t = 1)]
    frames: usize,
    /// Shuffle each frame's mapping with this seed.
    #[arg(long)]
    shuffle_seed: Option<u64>,
    /// Initial encoder state for variable-length codes.
    #[arg(long, default_value_t = 0)]
    state: usize,
}

#[derive(clap::Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    /// Run directory; overrides the `out` key.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Fl,
    Vl,
}

#[derive(Clone, Copy, ValueEnum)]
enum VlMethod {
    Bitwise,
    Resync,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Capacity { constraint } => {
            let c: Constraint = constraint.parse().map_err(input)?;
            let fsm = build_fsm(c).map_err(input)?;
            println!("{c}\tstates={}\tcapacity={:.6}", fsm.num_states(), fsm.capacity()?);
        }
        Command::RateTable { capacity, kmax } => {
            println!("k\tn\trate\tefficiency%");
            for r in fl_rate_table(capacity, kmax).map_err(input)? {
                println!("{}\t{}\t{:.4}\t{:.2}", r.k, r.n, r.rate, r.efficiency_percent());
            }
        }
        Command::Encode { code, bits } => {
            let bits = parse_bits(&bits).map_err(input)?;
            let out = match load_code(&code)? {
                Code::Fl(cb) => fl_encode(&cb, &bits).map_err(input)?,
                Code::Vl(cb) => vl_encode(&cb, &bits, code.state).map_err(input)?.0,
            };
            println!("{}", format_bits(&out));
        }
        Command::Decode {
            code,
            method,
            l_max,
            bits,
        } => {
            let bits = parse_bits(&bits).map_err(input)?;
            let out = match (load_code(&code)?, method) {
                (Code::Fl(cb), _) => lut_decode(&cb, &bits).map_err(input)?,
                (Code::Vl(cb), VlMethod::Bitwise) => vl_decode_bitwise(&cb, &bits, code.state).map_err(input)?,
                (Code::Vl(cb), VlMethod::Resync) => {
                    let window = l_max.unwrap_or(cb.l_max());
                    vl_decode_resync(&cb, &bits, window, code.state).map_err(input)?
                }
            };
            println!("{}", format_bits(&out));
        }
        Command::TrainFl(args) => train(&args, |kv, out, p| run_train_fl(kv, out, p))?,
        Command::TrainVl(args) => train(&args, |kv, out, p| run_train_vl(kv, out, p))?,
        Command::Sweep { config, out } => sweep(&config, &out)?,
        Command::Nve { runs } => {
            let report = nve_from_runs(&runs)?;
            println!("train_snr_db\tnve");
            for (i, (snr, v)) in report.candidates.iter().zip(&report.values).enumerate() {
                let mark = if i == report.selected { "\t*" } else { "" };
                println!("{snr}\t{v:.6}{mark}");
            }
            println!("selected {}", runs[report.selected].display());
        }
        Command::Plot { out, bler, csv } => {
            let mut curves = Vec::new();
            for path in &csv {
                let points = load_csv(path)?;
                curves.push(Curve {
                    label: path.file_stem().unwrap_or_default().to_string_lossy().into_owned(),
                    points: points.iter().map(|p| (p.snr_db, if bler { p.bler } else { p.ber })).collect(),
                });
            }
            write(&out, &render_svg(&curves, if bler { "BLER" } else { "BER" }))?;
        }
    }
    Ok(())
}

enum Code {
    Fl(cscode::codec_fl::ConcatCodebook),
    Vl(VlCodebook),
}

fn load_code(args: &CodeArgs) -> Result<Code> {
    let kind = args.kind.unwrap_or(match args.codebook.as_str() {
        "builtin:rll13" | "builtin:dcfree-vl" => Kind::Vl,
        _ => Kind::Fl,
    });
    match kind {
        Kind::Fl => resolve_fl_codebook(&args.codebook, args.frames, args.shuffle_seed).map(Code::Fl),
        Kind::Vl => resolve_vl_codebook(&args.codebook).map(Code::Vl),
    }
}

// bad user input belongs with configuration errors, not numeric failures
fn input(e: Error) -> Error {
    match e {
        Error::Numeric(_) | Error::Training { .. } => Error::Config(e.to_string()),
        other => other,
    }
}

fn train<F>(args: &TrainArgs, f: F) -> Result<()>
where
    F: Fn(&KeyValues, Option<&Path>, &mut dyn FnMut(usize, f64)) -> Result<RunSummary>,
{
    let kv = KeyValues::load(&args.config)?;
    let quiet = args.quiet;
    let mut progress = |epoch: usize, loss: f64| {
        if !quiet && epoch % 1000 == 0 {
            eprintln!("epoch {epoch}\tloss {loss:.6}");
        }
    };
    let s = f(&kv, args.out.as_deref(), &mut progress)?;
    println!("{}\tparams={}\tfinal_loss={:.6}", s.dir.display(), s.params, s.final_loss);
    Ok(())
}

fn sweep(config: &Path, out: &Path) -> Result<()> {
    let kv = KeyValues::load(config)?;
    let cfg = SweepConfig::from_kv(&kv)?;
    fs::create_dir_all(out).map_err(|e| io(out, e))?;
    let result = run_sweep(&cfg)?;
    result.write_csv(&out.join("sweep.csv"))?;
    let mut meta = cfg.to_kv();
    meta.set("config_hash", format!("{:016x}", result.config_hash));
    write(&out.join("sweep.txt"), &meta.to_text())?;
    let pick = |p: &cscode::sim::SweepPoint| if cfg.decoder.is_variable_length() { p.bler } else { p.ber };
    let mut curves = vec![Curve {
        label: result.label.clone(),
        points: result.points.iter().map(|p| (p.snr_db, pick(p))).collect(),
    }];
    if let Some(raw) = &result.raw {
        write(&out.join("raw.csv"), &result.raw_csv().unwrap())?;
        curves.push(Curve {
            label: "raw".into(),
            points: raw.iter().map(|p| (p.snr_db, p.bler)).collect(),
        });
    }
    let y = if cfg.decoder.is_variable_length() { "BLER" } else { "BER" };
    write(&out.join("sweep.svg"), &render_svg(&curves, y))?;
    for p in &result.points {
        println!("{}\tber={:.3e}\tbler={:.3e}\ttrials={}", p.snr_db, p.ber, p.bler, p.trials);
    }
    Ok(())
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io(path, e))
}

fn io(path: &Path, e: std::io::Error) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}
