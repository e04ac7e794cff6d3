//! BPDN recovery of an image that is exactly sparse in the Haar basis, and
//! of a natural-looking scene with noise.

use noiselet_spc::experiment;
use noiselet_spc::noiselet::Geometry;
use noiselet_spc::recon::{self, ReconConfig};
use noiselet_spc::scene;
use noiselet_spc::spc::{self, MeasurementMode};

fn main() -> noiselet_spc::Result<()> {
    let g = Geometry::square(64)?;
    let (img, coeffs) = scene::sparse_haar_image(g, 0.05, 3)?;
    let s = coeffs.values.iter().filter(|v| **v != 0.0).count();
    let m = experiment::m_from_ratio(0.4, g.n())?;
    let rec = experiment::sample(&img, m, 3, 0.0, MeasurementMode::Plain)?;
    let y = spc::restore_complex(&rec)?;
    let r = recon::solve_bpdn(&y, &rec.plan, &ReconConfig::default())?;
    println!(
        "S = {s}, m = {m}: PSNR {:.1} dB after {} iterations, residual {:.2e}",
        recon::psnr(&r.image, &img, false)?,
        r.iterations,
        r.residual_norm
    );

    let img = scene::object_scene(64)?;
    for ratio in [0.2, 0.5, 1.0] {
        let m = experiment::m_from_ratio(ratio, g.n())?;
        let rec = experiment::sample(&img, m, 1, spc::DEFAULT_NOISE_SIGMA, MeasurementMode::Plain)?;
        let out = experiment::recover(&rec, None, 3000)?;
        println!(
            "scene, ratio {ratio}: {} PSNR {:.2} dB",
            out.method.name(),
            recon::psnr(&out.image, &img, false)?
        );
    }
    Ok(())
}
