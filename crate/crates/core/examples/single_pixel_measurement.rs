//! Simulated detector readings and restoration of the complex noiselet
//! coefficients from m + 1 binary measurements.

use noiselet_spc::noiselet::{self, Direction};
use noiselet_spc::patterns::{make_plan, BundledPatterns};
use noiselet_spc::scene;
use noiselet_spc::spc::{self, MeasurementMode, SceneImage};

fn main() -> noiselet_spc::Result<()> {
    let image = scene::object_scene(32)?;
    let g = image.geometry()?;
    let plan = make_plan(g, 256, 1)?;
    let x = SceneImage::new(image.clone())?;

    let (mut re, mut im) = (image.pixels().to_vec(), vec![0.0; g.n()]);
    noiselet::fnt_in_place(&mut re, &mut im, Direction::Forward)?;

    for mode in [MeasurementMode::Plain, MeasurementMode::Differential] {
        for sigma in [0.0, spc::DEFAULT_NOISE_SIGMA] {
            let rec = spc::measure(&BundledPatterns::new(plan.clone()), &x, sigma, mode, 7)?;
            let y = spc::restore_complex(&rec)?;
            let err: f64 = plan
                .rows()
                .into_iter()
                .enumerate()
                .map(|(p, k)| (y.re()[p] - re[k - 1]).powi(2) + (y.im()[p] - im[k - 1]).powi(2))
                .sum::<f64>()
                .sqrt();
            println!(
                "{mode:?} sigma {sigma:e}: {} exposures, |Y - Phi X| = {err:.3e}, expected {:.3e}",
                spc::measurement_count(&rec),
                spc::noise_epsilon(&rec)
            );
        }
    }
    println!(
        "measurements for S = 200, n = {}: {}",
        g.n(),
        spc::required_measurements(200, g.n(), 1.0, 4.0)?
    );
    Ok(())
}
