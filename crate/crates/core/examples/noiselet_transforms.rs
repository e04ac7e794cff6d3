//! Fast noiselet transform against the dense matrix, the 2D transform, and
//! the integer-only modified transform.

use noiselet_spc::noiselet::{
    self, dense_noiselet, fnt, fnt2d, ComplexField, Direction, IntComplexField, NoiseletOrder,
};

fn main() -> noiselet_spc::Result<()> {
    let order = NoiseletOrder::new(3)?;
    let dense = dense_noiselet(order)?;
    println!("N_8, row 2: {:?}", dense.row(1).to_complex());

    let v = ComplexField::vector((0..8).map(f64::from).collect(), vec![0.0; 8])?;
    let fast = fnt(&v, order, Direction::Forward)?;
    println!("|fnt(v) - N v| = {:.1e}", fast.max_abs_diff(&dense.matvec(&v)?));
    let back = fnt(&fast, order, Direction::Inverse)?;
    println!("round trip error = {:.1e}", back.max_abs_diff(&v));

    // A 4x8 image: the 2D transform equals the 1D one on the flattened image.
    let img = ComplexField::from_real(&(0..32).map(|i| f64::from(i % 5)).collect::<Vec<_>>(), 4, 8)?;
    let two_d = fnt2d(&img, Direction::Forward)?;
    let flat = fnt(&ComplexField::vector(img.re().to_vec(), img.im().to_vec())?, NoiseletOrder::new(5)?, Direction::Forward)?;
    let two_d = ComplexField::vector(two_d.re().to_vec(), two_d.im().to_vec())?;
    println!("|fnt2d - fnt(flat)| = {:.1e}", two_d.max_abs_diff(&flat));

    println!("row 3 of N_8 mirrors row {}", noiselet::mirror_row(3, order)?);

    let e = IntComplexField::unit(3, 8, 16)?;
    let modified = noiselet::modified_fnt(&e, order)?;
    println!("modified transform of e_3: re {:?} im {:?}", modified.re(), modified.im());
    println!("relation error for q = 0..=8:");
    for q in 0..=8 {
        println!("  q = {q}: {:.1e}", noiselet::verify_modified_relation(NoiseletOrder::new(q)?)?);
    }
    Ok(())
}
