//! PSNR against sampling ratio on the object scene. Pass an output
//! directory and optionally a side length (default 128).

use std::path::PathBuf;

use noiselet_spc::experiment::{self, ExperimentSpec, ImageSource};
use noiselet_spc::noiselet::Geometry;
use noiselet_spc::recon::ReconConfig;
use noiselet_spc::spc::{MeasurementMode, DEFAULT_NOISE_SIGMA};

fn main() -> noiselet_spc::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "sweep-out".into()));
    let side: usize = args.next().map(|s| s.parse().expect("side")).unwrap_or(128);
    let spec = ExperimentSpec {
        image: ImageSource::Objects,
        geometry: Some(Geometry::square(side)?),
        center_crop: false,
        ratios: vec![0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0],
        seeds: vec![0, 1, 2],
        noise_sigma: DEFAULT_NOISE_SIGMA,
        mode: MeasurementMode::Plain,
        recon: ReconConfig::default(),
        epsilon_override: None,
        register: true,
        bpdn_at_full: true,
        output_dir: out.clone(),
    };
    let report = experiment::cmd_sweep(&spec)?;
    print!("{}", experiment::sweep_table(&report.rows));
    println!("tables written to {}", out.display());
    Ok(())
}
