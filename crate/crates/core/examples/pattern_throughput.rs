//! Bundle generation rate at 256x256 for several integer widths.

use std::time::Instant;

use noiselet_spc::experiment;
use noiselet_spc::noiselet::Geometry;
use noiselet_spc::patterns::{make_plan, max_planes, BundledPatterns};

fn main() -> noiselet_spc::Result<()> {
    let g = Geometry::square(256)?;
    let plan = make_plan(g, 2048, 0)?;
    for width in [8, 16, 25, 32, 64] {
        let source = BundledPatterns::with_width(plan.clone(), width)?;
        let start = Instant::now();
        let mut bundles = 0;
        for b in source.bundles() {
            b?;
            bundles += 1;
        }
        let secs = start.elapsed().as_secs_f64();
        println!(
            "width {width:2} ({:2} planes): {:8.1} bundles/s, {:9.1} patterns/s",
            max_planes(width),
            bundles as f64 / secs,
            plan.m() as f64 / secs
        );
    }
    let report = experiment::write_patterns(&plan, std::io::sink())?;
    println!("stream (24-bit frames): {}", report.throughput_line());
    Ok(())
}
