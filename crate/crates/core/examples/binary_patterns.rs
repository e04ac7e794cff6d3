//! Binary 0/1 patterns for a sampling plan: reference construction, fast
//! sign-resolved generation, bit-plane bundles, and the stream format.

use noiselet_spc::noiselet::Geometry;
use noiselet_spc::patterns::stream::{read_bundle_stream, write_bundle_stream};
use noiselet_spc::patterns::{build_patterns, invert_patterns, make_plan, resolve_sign_map, BundledPatterns};
use noiselet_spc::noiselet;

fn show(p: &[u8], cols: usize) {
    for row in p.chunks(cols) {
        println!("  {}", row.iter().map(|&v| if v == 1 { '#' } else { '.' }).collect::<String>());
    }
}

fn main() -> noiselet_spc::Result<()> {
    let g = Geometry::square(8)?;
    let plan = make_plan(g, 8, 42)?;
    println!("plan rows (mirror paired): {:?}", plan.rows());

    let reference = build_patterns(&plan)?;
    println!("first pattern pair, row {}:", plan.row_at(1));
    show(&reference.patterns[0], 8);
    println!();
    show(&reference.patterns[1], 8);

    let phi = invert_patterns(&reference.patterns[0], &reference.patterns[1], plan.order())?;
    let row = noiselet::noiselet_row(plan.row_at(1), plan.order())?;
    println!("noiselet row recovered from the pair: error {:.1e}", phi.max_abs_diff(&row));

    for d in resolve_sign_map(&plan).iter().take(4) {
        println!("plane: {:?} of row {}, complement {}", d.kind, d.row, d.complement);
    }

    let fast = BundledPatterns::with_width(plan.clone(), 8)?;
    println!("bundled generation matches reference: {}", fast.to_pattern_set()? == reference);

    let bundles: Vec<_> = fast.bundles().collect::<noiselet_spc::Result<_>>()?;
    let bytes = write_bundle_stream(Vec::new(), g, &bundles)?;
    let (_, back) = read_bundle_stream(&bytes[..])?;
    println!("{} frames, {} bytes, round trip ok: {}", bundles.len(), bytes.len(), back == bundles);
    Ok(())
}
