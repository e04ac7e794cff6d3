//! Mutual coherence of noiselets with the Haar basis, next to
//! Walsh-Hadamard for contrast.

use noiselet_spc::haar::{coherence, haar_basis, haar_matrix_1d, max_levels};
use noiselet_spc::noiselet::{dense_noiselet, ComplexField, Geometry, NoiseletOrder};

fn main() -> noiselet_spc::Result<()> {
    for q in 1..=8 {
        let order = NoiseletOrder::new(q)?;
        let mu = coherence(&dense_noiselet(order)?, &haar_matrix_1d(order.n())?)?;
        println!("n = {:3}: mu(noiselet, Haar) = {mu:.12}", order.n());
    }

    let g = Geometry::square(16)?;
    let mu = coherence(&dense_noiselet(g.order())?, &haar_basis(g, max_levels(g))?)?;
    println!("16x16 image, 2D Haar: mu = {mu:.12}");

    let n: usize = 16;
    let h: Vec<f64> = (0..n * n)
        .map(|i| if ((i / n) & (i % n)).count_ones().is_multiple_of(2) { 0.25 } else { -0.25 })
        .collect();
    let mu = coherence(&ComplexField::from_real(&h, n, n)?, &haar_matrix_1d(n)?)?;
    println!("n = 16: mu(Walsh-Hadamard, Haar) = {mu}");
    Ok(())
}
