use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use noiselet_spc::experiment::{self, ExperimentSpec, ImageSource, Sampling};
use noiselet_spc::noiselet::Geometry;
use noiselet_spc::recon::ReconConfig;
use noiselet_spc::spc::{self, MeasurementMode, DEFAULT_NOISE_SIGMA};
use noiselet_spc::{Error, Image, Result};

#[derive(Parser)]
#[command(name = "spc", version, about = "Noiselet single-pixel camera simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Plain,
    Differential,
}

impl From<Mode> for MeasurementMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Plain => MeasurementMode::Plain,
            Mode::Differential => MeasurementMode::Differential,
        }
    }
}

#[derive(Args)]
struct GeometryArgs {
    /// Image side for a square image (power of two).
    #[arg(long, conflicts_with_all = ["rows", "q"])]
    size: Option<usize>,
    /// log2 of the pixel count; the image is 2^ceil(q/2) x 2^floor(q/2).
    #[arg(short, long)]
    q: Option<u32>,
    #[arg(long, requires = "cols")]
    rows: Option<usize>,
    #[arg(long, requires = "rows")]
    cols: Option<usize>,
}

impl GeometryArgs {
    fn resolve(&self) -> Result<Option<Geometry>> {
        match (self.size, self.q, self.rows, self.cols) {
            (Some(s), _, _, _) => Ok(Some(Geometry::square(s)?)),
            (_, Some(q), _, _) => Ok(Some(Geometry::new(1 << q.div_ceil(2), 1 << (q / 2))?)),
            (_, _, Some(r), Some(c)) => Ok(Some(Geometry::new(r, c)?)),
            _ => Ok(None),
        }
    }
}

#[derive(Args)]
struct SamplingArgs {
    /// Number of noiselet rows (even).
    #[arg(short, long, conflicts_with = "ratio")]
    m: Option<usize>,
    /// Sampling ratio m/n in (0, 1]; m is rounded to an even count.
    #[arg(long)]
    ratio: Option<f64>,
}

impl SamplingArgs {
    fn resolve(&self) -> Result<Sampling> {
        match (self.m, self.ratio) {
            (Some(m), _) => Ok(Sampling::Count(m)),
            (_, Some(r)) => Ok(Sampling::Ratio(r)),
            _ => Err(Error::InvalidArgument("give -m or --ratio".into())),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the packed pattern stream of a random plan.
    Patterns {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Simulate the detector on an image and write the measurement record.
    Sample {
        /// PGM path, `objects`, or `sparse:<fraction>[:<seed>]`.
        #[arg(short, long)]
        image: String,
        #[command(flatten)]
        geometry: GeometryArgs,
        /// Crop a PGM to its largest centred power-of-two region.
        #[arg(long)]
        center_crop: bool,
        /// Use this plan (JSON) instead of drawing one.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Noise standard deviation relative to the mean reading.
        #[arg(long, default_value_t = DEFAULT_NOISE_SIGMA)]
        sigma: f64,
        #[arg(long, value_enum, default_value = "plain")]
        mode: Mode,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Recover an image from a measurement record.
    Recover {
        #[arg(short, long)]
        record: PathBuf,
        /// Reference image for PSNR (same sources as `sample`).
        #[arg(long)]
        reference: Option<String>,
        #[arg(long)]
        center_crop: bool,
        /// Residual bound; defaults to the record's expected noise norm.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = ReconConfig::default().max_iters)]
        iters: usize,
        #[arg(short, long)]
        out: PathBuf,
        /// Metrics table path; defaults to `<out>.tsv`.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// PSNR against sampling ratio over seeded repetitions.
    Sweep {
        #[arg(short, long)]
        image: String,
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long)]
        center_crop: bool,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.5,0.7,1.0")]
        ratios: Vec<f64>,
        /// Explicit seeds; overrides --repetitions.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Number of random plans per ratio (seeds 0..repetitions).
        #[arg(long, default_value_t = 5)]
        repetitions: u64,
        #[arg(long, default_value_t = DEFAULT_NOISE_SIGMA)]
        sigma: f64,
        #[arg(long, value_enum, default_value = "plain")]
        mode: Mode,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = ReconConfig::default().max_iters)]
        iters: usize,
        /// Fit gain and offset to the reference before scoring PSNR.
        #[arg(long)]
        register: bool,
        /// Recover ratio 1 with BPDN instead of the direct inverse.
        #[arg(long)]
        bpdn_at_full: bool,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run internal consistency checks.
    Selftest,
}

fn load_reference(source: &str, geometry: Option<Geometry>, center_crop: bool) -> Result<Image> {
    let source: ImageSource = source.parse()?;
    experiment::load_image(&source, geometry.map(|g| g.rows()), center_crop)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Patterns { geometry, sampling, seed, out } => {
            let g = geometry
                .resolve()?
                .ok_or_else(|| Error::InvalidArgument("give --size, -q or --rows/--cols".into()))?;
            let m = sampling.resolve()?.m(g.n())?;
            let report = experiment::cmd_patterns(g, m, seed, &out)?;
            println!("frames: {}, patterns: {}", report.frames, report.patterns);
            println!("{}", report.throughput_line());
        }
        Command::Sample { image, geometry, center_crop, plan, sampling, seed, sigma, mode, out } => {
            let img = load_reference(&image, geometry.resolve()?, center_crop)?;
            let sampling = if plan.is_some() { Sampling::Count(0) } else { sampling.resolve()? };
            let record =
                experiment::cmd_sample(&img, plan.as_deref(), sampling, seed, sigma, mode.into(), &out)?;
            println!(
                "m: {}, n: {}, measurements: {}",
                record.plan.m(),
                record.plan.n(),
                spc::measurement_count(&record)
            );
        }
        Command::Recover { record, reference, center_crop, epsilon, iters, out, metrics } => {
            let reference = match reference {
                Some(r) => {
                    let geometry = experiment::read_record(&record)?.plan.geometry();
                    Some(load_reference(&r, Some(geometry), center_crop)?)
                }
                None => None,
            };
            let metrics = metrics.unwrap_or_else(|| {
                let mut p = out.clone().into_os_string();
                p.push(".tsv");
                p.into()
            });
            let (_, m) = experiment::cmd_recover(&record, reference.as_ref(), epsilon, iters, &out, &metrics)?;
            print!("{}", m.to_tsv());
        }
        Command::Sweep {
            image,
            geometry,
            center_crop,
            ratios,
            seeds,
            repetitions,
            sigma,
            mode,
            epsilon,
            iters,
            register,
            bpdn_at_full,
            out,
        } => {
            let spec = ExperimentSpec {
                image: image.parse()?,
                geometry: geometry.resolve()?,
                center_crop,
                ratios,
                seeds: seeds.unwrap_or_else(|| (0..repetitions).collect()),
                noise_sigma: sigma,
                mode: mode.into(),
                recon: ReconConfig { max_iters: iters, ..ReconConfig::default() },
                epsilon_override: epsilon,
                register,
                bpdn_at_full,
                output_dir: out,
            };
            let report = experiment::cmd_sweep(&spec)?;
            print!("{}", experiment::sweep_table(&report.rows));
        }
        Command::Selftest => {
            let mut failed = 0;
            for (name, ok) in experiment::selftest()? {
                println!("{} {name}", if ok { "PASS" } else { "FAIL" });
                failed += usize::from(!ok);
            }
            if failed > 0 {
                return Err(Error::InvalidArgument(format!("{failed} self-test check(s) failed")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spc: {e}");
            ExitCode::FAILURE
        }
    }
}
