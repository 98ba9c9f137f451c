use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use holocomp::container::overhead_bytes;
use holocomp::evaluation::psnr;
use holocomp::{
    encode_image, evaluate, load_packet_set, psnr_order_curves, read_pgm, reconstruct, save_packet_set, write_pgm,
    Codec, CodecParams, EncodeConfig, Error, Image, Method, Overrides, PacketSet,
};

/// Holographic image compression: store one image as K shifted packets.
#[derive(Parser)]
#[command(name = "holo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Duplicate,
    Baseline,
    Opt2,
    Optk,
}

impl From<Mode> for Method {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Duplicate => Method::Duplicate,
            Mode::Baseline => Method::Baseline,
            Mode::Opt2 => Method::Opt2,
            Mode::Optk => Method::OptK,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OptMode {
    Opt2,
    Optk,
}

#[derive(Clone, Copy, ValueEnum)]
enum CodecChoice {
    /// Built-in 8x8 block DCT codec.
    Internal,
    /// Tool configured through HOLO_EXT_ENCODE / HOLO_EXT_DECODE.
    External,
}

#[derive(clap::Args)]
struct EncodeArgs {
    /// Source image (PGM, 8-bit).
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short = 'K', long = "packets", default_value_t = 4)]
    k: usize,
    /// Target compression ratio per packet, e.g. 50 for 1:50.
    #[arg(long, default_value_t = 50.0)]
    ratio: f64,
    #[arg(long, value_enum, default_value = "internal")]
    codec: CodecChoice,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
}

impl EncodeArgs {
    fn run(&self, method: Method) -> anyhow::Result<(Image, holocomp::EncodeOutput)> {
        let x = load_image(&self.input)?;
        let codec = match self.codec {
            CodecChoice::Internal => Codec::from_params(&CodecParams::internal(1.0))?,
            CodecChoice::External => Codec::from_params(&CodecParams::external(self.ratio))?,
        };
        let mut cfg = EncodeConfig::new(method, self.k, self.ratio);
        cfg.overrides = Overrides { mu: self.mu, lambda: self.lambda, beta: self.beta, iterations: self.iterations };
        let out = encode_image(&x, &cfg, &codec)?;
        Ok((x, out))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Encode an image into a .holo packet container.
    Encode {
        #[command(flatten)]
        args: EncodeArgs,
        #[arg(long, value_enum, default_value = "baseline")]
        mode: Mode,
        /// Container to write.
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the optimizer cost trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Reconstruct an image from a subset of packets.
    Decode {
        #[arg(short, long)]
        input: PathBuf,
        /// 1-based packet indices, e.g. 1,3. Defaults to all packets.
        #[arg(long = "use", value_delimiter = ',')]
        subset: Vec<usize>,
        #[arg(short, long)]
        output: PathBuf,
        /// Reference image; prints the reconstruction PSNR.
        #[arg(long)]
        original: Option<PathBuf>,
    },
    /// Quality statistics over every packet subset.
    Eval {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long)]
        original: PathBuf,
        /// Tolerance for the subset-similarity check (MSE standard deviation).
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        /// JSON report path; printed to stdout when omitted.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Per-subset CSV path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// PSNR after each appended packet, for every packet order.
    Curves {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long)]
        original: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run the optimizer and write its per-iteration cost trace.
    Trace {
        #[command(flatten)]
        args: EncodeArgs,
        #[arg(long, value_enum, default_value = "optk")]
        mode: OptMode,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn load_image(path: &Path) -> anyhow::Result<Image> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    read_pgm(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn load_set(path: &Path) -> anyhow::Result<PacketSet> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(load_packet_set(&bytes)?)
}

fn write(path: &Path, data: impl AsRef<[u8]>) -> anyhow::Result<()> {
    fs::write(path, data).with_context(|| format!("writing {}", path.display()))
}

fn print_rates(ps: &PacketSet) {
    let n = ps.pixel_count() as f64;
    for (i, p) in ps.packets.iter().enumerate() {
        println!("packet {}: {} bits, {:.4} bpp", i + 1, p.bit_cost(), p.bit_cost() as f64 / n);
    }
    println!("container header: {} bytes", overhead_bytes(ps.k()));
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Encode { args, mode, output, trace } => {
            let (_, out) = args.run(mode.into())?;
            if trace.is_some() && out.trace.is_none() {
                bail!("--trace needs an optimized mode (opt2 or optk)");
            }
            write(&output, save_packet_set(&out.packets)?)?;
            if let (Some(path), Some(t)) = (trace, &out.trace) {
                write(&path, t.to_csv())?;
            }
            println!("theta: {}", out.theta);
            print_rates(&out.packets);
        }
        Command::Decode { input, subset, output, original } => {
            let ps = load_set(&input)?;
            let subset = if subset.is_empty() { (1..=ps.k()).collect() } else { subset };
            let rec = reconstruct(&ps, &subset)?;
            write(&output, write_pgm(&rec))?;
            if let Some(orig) = original {
                let x = load_image(&orig)?;
                if x.dims() != rec.dims() {
                    bail!("reference is {:?} but the reconstruction is {:?}", x.dims(), rec.dims());
                }
                println!("psnr: {:.4} dB", psnr(x.mse(&rec)));
            }
        }
        Command::Eval { input, original, sigma, json, csv } => {
            let report = evaluate(&load_image(&original)?, &load_set(&input)?, sigma)?;
            match json {
                Some(path) => write(&path, report.to_json())?,
                None => println!("{}", report.to_json()),
            }
            if let Some(path) = csv {
                write(&path, report.to_csv())?;
            }
        }
        Command::Curves { input, original, output } => {
            let curves = psnr_order_curves(&load_image(&original)?, &load_set(&input)?)?;
            write(&output, curves.to_csv())?;
        }
        Command::Trace { args, mode, output } => {
            let method = match mode {
                OptMode::Opt2 => Method::Opt2,
                OptMode::Optk => Method::OptK,
            };
            let (_, out) = args.run(method)?;
            let trace = out.trace.expect("optimized modes produce a trace");
            write(&output, trace.to_csv())?;
            if let (Some(a), Some(b)) = (trace.first(), trace.last()) {
                println!("lagrangian: {:.1} -> {:.1}", a.lagrangian, b.lagrangian);
            }
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::InvalidSubset(_)) => 2,
        Some(Error::Container(_)) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
