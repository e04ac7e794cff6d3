//! Command layer behind the `spc` binary: pattern streams, sampling,
//! recovery and sampling-ratio sweeps, with file I/O.
//!
//! Plans and measurement records are JSON; images are binary PGM; metrics
//! and sweep tables are tab-separated with a one-line header.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::haar;
use crate::image::Image;
use crate::noiselet::{self, ComplexField, Direction, Geometry, NoiseletOrder};
use crate::patterns::stream::{BundleWriter, MAX_FRAME_PLANES};
use crate::patterns::{self, make_plan, BundledPatterns, SamplingPlan};
use crate::recon::{self, ReconConfig};
use crate::scene;
use crate::spc::{self, MeasurementMode, MeasurementRecord, SceneImage};

/// Environment variable holding the sweep worker count (unset or 0: one
/// worker per core).
pub const WORKERS_ENV: &str = "SPC_WORKERS";

/// Integer width whose bundles fill a 24-bit stream frame (23 payload planes
/// plus the sync plane).
pub const STREAM_WIDTH: u32 = MAX_FRAME_PLANES as u32 + noiselet::GUARD_BITS;

/// XORed into a seed to derive the noise stream from the plan seed.
const NOISE_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

/// Reads a JSON measurement record.
pub fn read_record(path: &Path) -> Result<MeasurementRecord> {
    MeasurementRecord::from_json(&read_text(path)?)
}

/// Where a scene comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum ImageSource {
    Pgm(PathBuf),
    /// [`scene::object_scene`].
    Objects,
    /// [`scene::sparse_haar_image`].
    SparseHaar { fraction: f64, seed: u64 },
}

impl FromStr for ImageSource {
    type Err = Error;

    /// `objects`, `sparse:<fraction>[:<seed>]`, or a PGM path.
    fn from_str(s: &str) -> Result<Self> {
        if s == "objects" {
            return Ok(Self::Objects);
        }
        if let Some(rest) = s.strip_prefix("sparse:") {
            let mut parts = rest.split(':');
            let bad = || Error::InvalidArgument(format!("bad sparse source {s:?}, expected sparse:<fraction>[:<seed>]"));
            let fraction = parts.next().and_then(|f| f.parse().ok()).ok_or_else(bad)?;
            let seed = match parts.next() {
                Some(t) => t.parse().map_err(|_| bad())?,
                None => 0,
            };
            if parts.next().is_some() {
                return Err(bad());
            }
            return Ok(Self::SparseHaar { fraction, seed });
        }
        Ok(Self::Pgm(PathBuf::from(s)))
    }
}

/// Loads a scene. Built-in sources need `side`; a PGM whose sides are not
/// powers of two is an error unless `center_crop` is set.
pub fn load_image(source: &ImageSource, side: Option<usize>, center_crop: bool) -> Result<Image> {
    let need_side = || {
        side.ok_or_else(|| Error::InvalidArgument("built-in scenes need a size".into()))
    };
    match source {
        ImageSource::Pgm(path) => {
            let img = Image::read_pgm(path)?;
            if img.geometry().is_ok() {
                return Ok(img);
            }
            if center_crop {
                Ok(img.center_crop_pow2())
            } else {
                Err(Error::Image(format!(
                    "{} is {}x{}, sides must be powers of two (use center crop)",
                    path.display(),
                    img.rows(),
                    img.cols()
                )))
            }
        }
        ImageSource::Objects => scene::object_scene(need_side()?),
        ImageSource::SparseHaar { fraction, seed } => {
            Ok(scene::sparse_haar_image(Geometry::square(need_side()?)?, *fraction, *seed)?.0)
        }
    }
}

/// `m` for a sampling ratio: the even integer nearest `ratio · n`, at least
/// 2 and at most `n`.
pub fn m_from_ratio(ratio: f64, n: usize) -> Result<usize> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidArgument(format!("ratio {ratio} not in (0, 1]")));
    }
    let m = 2 * (ratio * n as f64 / 2.0).round() as usize;
    Ok(m.clamp(2, n))
}

/// Outcome of [`cmd_patterns`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PatternsReport {
    pub frames: usize,
    pub patterns: usize,
    /// Wall time spent generating bundles (excluding file I/O).
    pub seconds: f64,
}

impl PatternsReport {
    pub fn bundles_per_sec(&self) -> f64 {
        self.frames as f64 / self.seconds.max(1e-12)
    }

    pub fn patterns_per_sec(&self) -> f64 {
        self.patterns as f64 / self.seconds.max(1e-12)
    }

    pub fn throughput_line(&self) -> String {
        format!("bundles/s: {:.3}, patterns/s: {:.3}", self.bundles_per_sec(), self.patterns_per_sec())
    }
}

/// Writes the bundle stream of `plan` to `out`, one 24-bit frame per 23
/// patterns.
pub fn write_patterns(plan: &SamplingPlan, out: impl Write) -> Result<PatternsReport> {
    let source = BundledPatterns::with_width(plan.clone(), STREAM_WIDTH)?;
    let mut writer = BundleWriter::new(out, plan.geometry());
    let mut seconds = 0.0;
    let mut bundles = source.bundles();
    loop {
        let start = Instant::now();
        let Some(bundle) = bundles.next() else { break };
        let bundle = bundle?;
        seconds += start.elapsed().as_secs_f64();
        writer.write(&bundle)?;
    }
    let frames = writer.frames_written();
    writer.into_inner().flush()?;
    Ok(PatternsReport { frames, patterns: plan.m(), seconds })
}

/// Pattern stream for a fresh plan `(geometry, m, seed)` written to `out`.
pub fn cmd_patterns(geometry: Geometry, m: usize, seed: u64, out: &Path) -> Result<PatternsReport> {
    let plan = make_plan(geometry, m, seed)?;
    let file = BufWriter::new(fs::File::create(out)?);
    write_patterns(&plan, file)
}

/// Measures `image` with the plan `(m, seed)`; noise uses a stream derived
/// from the same seed.
pub fn sample(
    image: &Image,
    m: usize,
    seed: u64,
    noise_sigma: f64,
    mode: MeasurementMode,
) -> Result<MeasurementRecord> {
    let plan = make_plan(image.geometry()?, m, seed)?;
    sample_with_plan(image, plan, noise_sigma, mode, seed ^ NOISE_SALT)
}

pub fn sample_with_plan(
    image: &Image,
    plan: SamplingPlan,
    noise_sigma: f64,
    mode: MeasurementMode,
    noise_seed: u64,
) -> Result<MeasurementRecord> {
    let scene = SceneImage::new(image.clone())?;
    spc::measure(&BundledPatterns::new(plan), &scene, noise_sigma, mode, noise_seed)
}

/// How many patterns to use.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sampling {
    Count(usize),
    Ratio(f64),
}

impl Sampling {
    pub fn m(self, n: usize) -> Result<usize> {
        match self {
            Self::Count(m) => Ok(m),
            Self::Ratio(r) => m_from_ratio(r, n),
        }
    }
}

/// Loads an image, measures it and writes the record as JSON. A plan file,
/// when given, overrides `sampling` and `seed` for the plan.
#[allow(clippy::too_many_arguments)]
pub fn cmd_sample(
    image: &Image,
    plan_file: Option<&Path>,
    sampling: Sampling,
    seed: u64,
    noise_sigma: f64,
    mode: MeasurementMode,
    out: &Path,
) -> Result<MeasurementRecord> {
    let record = match plan_file {
        Some(p) => {
            let plan = SamplingPlan::from_json(&read_text(p)?)?;
            if plan.geometry() != image.geometry()? {
                return Err(Error::InvalidPlan(format!(
                    "plan is {}x{}, image is {}x{}",
                    plan.geometry().rows(),
                    plan.geometry().cols(),
                    image.rows(),
                    image.cols()
                )));
            }
            sample_with_plan(image, plan, noise_sigma, mode, seed ^ NOISE_SALT)?
        }
        None => sample(image, sampling.m(image.geometry()?.n())?, seed, noise_sigma, mode)?,
    };
    fs::write(out, record.to_json()?)?;
    Ok(record)
}

/// Which solver produced an estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    DirectInverse,
    Bpdn,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::DirectInverse => "direct",
            Self::Bpdn => "bpdn",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Recovery {
    pub image: Image,
    pub method: Method,
    pub epsilon: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Restores `Y` and recovers the image: the direct inverse at full
/// sampling, BPDN otherwise. `epsilon` defaults to
/// [`spc::noise_epsilon`] of the record.
pub fn recover(record: &MeasurementRecord, epsilon: Option<f64>, max_iters: usize) -> Result<Recovery> {
    recover_with(record, epsilon, max_iters, false)
}

/// [`recover`], optionally running BPDN at full sampling as well.
pub fn recover_with(
    record: &MeasurementRecord,
    epsilon: Option<f64>,
    max_iters: usize,
    bpdn_at_full: bool,
) -> Result<Recovery> {
    let y = spc::restore_complex(record)?;
    let plan = &record.plan;
    let epsilon = epsilon.unwrap_or_else(|| spc::noise_epsilon(record));
    if plan.is_full() && !bpdn_at_full {
        let image = recon::solve_full(&y, plan)?;
        let residual_norm = residual(&image, &y, plan)?;
        return Ok(Recovery { image, method: Method::DirectInverse, epsilon, residual_norm, iterations: 0, converged: true });
    }
    let config = ReconConfig { epsilon, max_iters, ..ReconConfig::default() };
    let r = recon::solve_bpdn(&y, plan, &config)?;
    Ok(Recovery {
        image: r.image,
        method: Method::Bpdn,
        epsilon,
        residual_norm: r.residual_norm,
        iterations: r.iterations,
        converged: r.converged,
    })
}

fn residual(image: &Image, y: &ComplexField, plan: &SamplingPlan) -> Result<f64> {
    let g = plan.geometry();
    let mut re = image.pixels().to_vec();
    let mut im = vec![0.0; re.len()];
    noiselet::fnt_in_place(&mut re, &mut im, Direction::Forward)?;
    let mut sq = 0.0;
    for (pos, k) in plan.rows().into_iter().enumerate() {
        let (dr, di) = (re[k - 1] - y.re()[pos], im[k - 1] - y.im()[pos]);
        sq += dr * dr + di * di;
    }
    debug_assert_eq!(re.len(), g.n());
    Ok(sq.sqrt())
}

/// Metrics of one recovery.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoverMetrics {
    pub method: &'static str,
    pub m: usize,
    pub n: usize,
    pub epsilon: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub psnr: Option<f64>,
}

impl RecoverMetrics {
    /// Header line and one data line, tab-separated. `psnr` is omitted
    /// without a reference.
    pub fn to_tsv(&self) -> String {
        let mut head = vec!["method", "m", "n", "epsilon", "residual_norm", "iterations", "converged"];
        let mut row = vec![
            self.method.to_string(),
            self.m.to_string(),
            self.n.to_string(),
            format!("{:e}", self.epsilon),
            format!("{:e}", self.residual_norm),
            self.iterations.to_string(),
            self.converged.to_string(),
        ];
        if let Some(p) = self.psnr {
            head.push("psnr_db");
            row.push(format!("{p:.4}"));
        }
        format!("{}\n{}\n", head.join("\t"), row.join("\t"))
    }
}

/// Reads a record, recovers, writes the image (16-bit PGM) and a metrics
/// table. PSNR is computed only when a reference image is given.
pub fn cmd_recover(
    record_path: &Path,
    reference: Option<&Image>,
    epsilon: Option<f64>,
    max_iters: usize,
    out_image: &Path,
    out_metrics: &Path,
) -> Result<(Image, RecoverMetrics)> {
    let record = read_record(record_path)?;
    let r = recover(&record, epsilon, max_iters)?;
    let psnr = match reference {
        Some(x) => Some(recon::psnr(&r.image, x, false)?),
        None => None,
    };
    let metrics = RecoverMetrics {
        method: r.method.name(),
        m: record.plan.m(),
        n: record.plan.n(),
        epsilon: r.epsilon,
        residual_norm: r.residual_norm,
        iterations: r.iterations,
        converged: r.converged,
        psnr,
    };
    r.image.write_pgm(out_image, u16::MAX)?;
    fs::write(out_metrics, metrics.to_tsv())?;
    Ok((r.image, metrics))
}

/// One sampling-ratio sweep.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub image: ImageSource,
    /// Required for built-in scenes; a PGM must match it when given.
    pub geometry: Option<Geometry>,
    pub center_crop: bool,
    pub ratios: Vec<f64>,
    pub seeds: Vec<u64>,
    pub noise_sigma: f64,
    pub mode: MeasurementMode,
    /// `epsilon` is taken from each record unless `epsilon_override` is set.
    pub recon: ReconConfig,
    pub epsilon_override: Option<f64>,
    /// Score PSNR after a least-squares gain/offset fit to the reference.
    pub register: bool,
    /// Use BPDN at ratio 1 too, so every ratio goes through one estimator.
    pub bpdn_at_full: bool,
    pub output_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.ratios.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidArgument("sweep needs at least one ratio and one seed".into()));
        }
        for &r in &self.ratios {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::InvalidArgument(format!("ratio {r} not in (0, 1]")));
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise sigma {} must be >= 0", self.noise_sigma)));
        }
        Ok(())
    }

    /// Loads the reference scene, checking it against `geometry`.
    pub fn load_reference(&self) -> Result<Image> {
        let side = self.geometry.map(|g| g.rows());
        if let Some(g) = self.geometry {
            if g.rows() != g.cols() && !matches!(self.image, ImageSource::Pgm(_)) {
                return Err(Error::InvalidArgument("built-in scenes are square".into()));
            }
        }
        let img = load_image(&self.image, side, self.center_crop)?;
        if let Some(g) = self.geometry {
            if img.geometry()? != g {
                return Err(Error::Image(format!(
                    "image is {}x{}, expected {}x{}",
                    img.rows(),
                    img.cols(),
                    g.rows(),
                    g.cols()
                )));
            }
        }
        Ok(img)
    }
}

/// One `(ratio, seed)` cell of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub ratio: f64,
    pub m: usize,
    pub seed: u64,
    pub psnr: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub seconds: f64,
}

/// Aggregate over seeds for one ratio. `std_psnr` is the sample standard
/// deviation (0 for a single seed).
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub ratio: f64,
    pub m: usize,
    pub mean_psnr: f64,
    pub std_psnr: f64,
    pub cells: usize,
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub cells: Vec<SweepCell>,
}

/// Runs sample then recover for one cell.
pub fn run_cell(reference: &Image, spec: &ExperimentSpec, ratio: f64, seed: u64) -> Result<SweepCell> {
    let start = Instant::now();
    let n = reference.geometry()?.n();
    let m = m_from_ratio(ratio, n)?;
    let record = sample(reference, m, seed, spec.noise_sigma, spec.mode)?;
    let r = recover_with(&record, spec.epsilon_override, spec.recon.max_iters, spec.bpdn_at_full)?;
    Ok(SweepCell {
        ratio,
        m,
        seed,
        psnr: recon::psnr(&r.image, reference, spec.register)?,
        residual_norm: r.residual_norm,
        iterations: r.iterations,
        converged: r.converged,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn aggregate(ratios: &[f64], cells: &[SweepCell]) -> Vec<SweepRow> {
    ratios
        .iter()
        .map(|&ratio| {
            let these: Vec<&SweepCell> = cells.iter().filter(|c| c.ratio == ratio).collect();
            let k = these.len() as f64;
            let mean = these.iter().map(|c| c.psnr).sum::<f64>() / k;
            let std = if these.len() > 1 {
                (these.iter().map(|c| (c.psnr - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
            } else {
                0.0
            };
            SweepRow { ratio, m: these[0].m, mean_psnr: mean, std_psnr: std, cells: these.len() }
        })
        .collect()
}

/// Worker count from [`WORKERS_ENV`], if set to a positive integer.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) => Ok(None),
            Ok(k) => Ok(Some(k)),
            Err(_) => Err(Error::InvalidArgument(format!("{WORKERS_ENV}={v:?} is not a worker count"))),
        },
    }
}

/// Runs every `(ratio, seed)` cell in parallel without writing files.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepReport> {
    spec.validate()?;
    let reference = spec.load_reference()?;
    let jobs: Vec<(f64, u64)> =
        spec.ratios.iter().flat_map(|&r| spec.seeds.iter().map(move |&s| (r, s))).collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = workers_from_env()? {
        builder = builder.num_threads(k);
    }
    let pool = builder.build().map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    let cells: Vec<SweepCell> = pool.install(|| {
        jobs.par_iter().map(|&(r, s)| run_cell(&reference, spec, r, s)).collect::<Result<_>>()
    })?;
    Ok(SweepReport { rows: aggregate(&spec.ratios, &cells), cells })
}

/// Table of `(ratio, m, mean PSNR, std PSNR)`, tab-separated.
pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut s = String::from("ratio\tm\tmean_psnr_db\tstd_psnr_db\tcells\n");
    for r in rows {
        let _ = writeln!(s, "{:.6}\t{}\t{:.4}\t{:.4}\t{}", r.ratio, r.m, r.mean_psnr, r.std_psnr, r.cells);
    }
    s
}

/// Per-cell plot data, tab-separated.
pub fn sweep_cells_table(cells: &[SweepCell]) -> String {
    let mut s = String::from("ratio\tm\tseed\tpsnr_db\tresidual_norm\titerations\tconverged\tseconds\n");
    for c in cells {
        let _ = writeln!(
            s,
            "{:.6}\t{}\t{}\t{:.4}\t{:e}\t{}\t{}\t{:.3}",
            c.ratio, c.m, c.seed, c.psnr, c.residual_norm, c.iterations, c.converged, c.seconds
        );
    }
    s
}

/// Runs the sweep and writes `sweep.tsv` (aggregates) and `sweep_cells.tsv`
/// (plot data) into the output directory.
pub fn cmd_sweep(spec: &ExperimentSpec) -> Result<SweepReport> {
    let report = run_sweep(spec)?;
    fs::create_dir_all(&spec.output_dir)?;
    fs::write(spec.output_dir.join("sweep.tsv"), sweep_table(&report.rows))?;
    fs::write(spec.output_dir.join("sweep_cells.tsv"), sweep_cells_table(&report.cells))?;
    Ok(report)
}

/// Quick internal consistency checks; returns `(name, passed)` pairs.
pub fn selftest() -> Result<Vec<(String, bool)>> {
    let mut out = Vec::new();

    let mut worst: f64 = 0.0;
    for q in 1..=6 {
        let order = NoiseletOrder::new(q)?;
        let dense = noiselet::dense_noiselet(order)?;
        for k in 1..=order.n() {
            let e = ComplexField::unit(k, order.n())?;
            let fast = noiselet::fnt(&e, order, Direction::Forward)?;
            worst = worst.max(fast.max_abs_diff(&dense.row(k - 1)));
        }
    }
    out.push(("fast transform matches dense matrix".into(), worst < 1e-10));

    let mut equal = true;
    for q in 2..=6 {
        let g = Geometry::new(1 << (q / 2), 1 << (q - q / 2))?;
        let plan = make_plan(g, g.n(), 0)?;
        let fast = BundledPatterns::new(plan.clone()).to_pattern_set()?;
        equal &= fast == patterns::build_patterns(&plan)?;
    }
    out.push(("packed patterns match reference patterns".into(), equal));

    let g = Geometry::square(16)?;
    let img = scene::object_scene(16)?;
    let record = sample(&img, g.n() / 2, 1, 0.0, MeasurementMode::Plain)?;
    let y = spc::restore_complex(&record)?;
    let mut re = img.pixels().to_vec();
    let mut im = vec![0.0; re.len()];
    noiselet::fnt_in_place(&mut re, &mut im, Direction::Forward)?;
    let worst = record
        .plan
        .rows()
        .into_iter()
        .enumerate()
        .map(|(p, k)| (y.re()[p] - re[k - 1]).abs().max((y.im()[p] - im[k - 1]).abs()))
        .fold(0.0, f64::max);
    out.push(("m + 1 readings restore the coefficients".into(), worst < 1e-9));

    let record = sample(&img, g.n(), 1, 0.0, MeasurementMode::Differential)?;
    let back = recover(&record, None, 1)?.image;
    let worst = back.pixels().iter().zip(img.pixels()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    out.push(("full sampling round trip".into(), worst < 1e-9));

    let basis = haar::haar_matrix_1d(64)?;
    let mu = haar::coherence(&noiselet::dense_noiselet(NoiseletOrder::new(6)?)?, &basis)?;
    out.push(("noiselet/Haar coherence is 1".into(), (mu - 1.0).abs() < 1e-9));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_to_even_m() {
        assert_eq!(m_from_ratio(0.3, 4096).unwrap(), 1228);
        assert_eq!(m_from_ratio(1.0, 64).unwrap(), 64);
        assert_eq!(m_from_ratio(0.001, 64).unwrap(), 2);
        assert_eq!(m_from_ratio(0.5, 2).unwrap(), 2);
        assert!(m_from_ratio(0.0, 64).is_err());
        assert!(m_from_ratio(1.5, 64).is_err());
    }

    #[test]
    fn image_source_parsing() {
        assert_eq!("objects".parse::<ImageSource>().unwrap(), ImageSource::Objects);
        assert_eq!(
            "sparse:0.05:9".parse::<ImageSource>().unwrap(),
            ImageSource::SparseHaar { fraction: 0.05, seed: 9 }
        );
        assert_eq!("sparse:0.1".parse::<ImageSource>().unwrap(), ImageSource::SparseHaar { fraction: 0.1, seed: 0 });
        assert!("sparse:x".parse::<ImageSource>().is_err());
        assert_eq!("a.pgm".parse::<ImageSource>().unwrap(), ImageSource::Pgm("a.pgm".into()));
    }

    #[test]
    fn metrics_omit_psnr_without_reference() {
        let m = RecoverMetrics {
            method: "bpdn",
            m: 2,
            n: 4,
            epsilon: 0.0,
            residual_norm: 0.0,
            iterations: 3,
            converged: true,
            psnr: None,
        };
        let tsv = m.to_tsv();
        assert!(!tsv.contains("psnr"));
        assert_eq!(tsv.lines().count(), 2);
        let with = RecoverMetrics { psnr: Some(40.0), ..m }.to_tsv();
        assert!(with.lines().next().unwrap().ends_with("psnr_db"));
    }

    #[test]
    fn stream_frames_follow_plane_limit() {
        let g = Geometry::square(16).unwrap();
        let plan = make_plan(g, 100, 4).unwrap();
        let report = write_patterns(&plan, Vec::new()).unwrap();
        assert_eq!(report.frames, 100usize.div_ceil(23));
        let line = report.throughput_line();
        assert!(line.starts_with("bundles/s: ") && line.contains(", patterns/s: "));
    }

    #[test]
    fn selftest_passes() {
        for (name, ok) in selftest().unwrap() {
            assert!(ok, "{name}");
        }
    }

    #[test]
    fn aggregate_uses_sample_std() {
        let cell = |psnr| SweepCell {
            ratio: 0.5,
            m: 8,
            seed: 0,
            psnr,
            residual_norm: 0.0,
            iterations: 0,
            converged: true,
            seconds: 0.0,
        };
        let rows = aggregate(&[0.5], &[cell(10.0), cell(14.0)]);
        assert_eq!(rows[0].mean_psnr, 12.0);
        assert!((rows[0].std_psnr - 8f64.sqrt()).abs() < 1e-12);
    }
}
