//! Locate eigenvalues through the Birman–Schwinger operator and certify its
//! invertibility away from the support of the potential.

use pvlab::birman_schwinger::{
    assemble_bs, bs_scan, bs_top_crossing, grow_neumann_certificate, off_diag_tail_norm,
};
use pvlab::kernel::WalkKernel;
use pvlab::lattice::Point;
use pvlab::potential::GeometricSparse;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k = WalkKernel::simple1d();
    let spec = GeometricSparse::new(1, 1.0, 3)
        .anchor(Point::new(&[0]), 2.0)
        .box_radius(120)
        .build()?;
    let bx = spec.working_box();

    let top = bs_top_crossing(&k, &spec, &bx)?;
    println!("largest eigenvalue from the crossing: {top:.12}");

    let lambdas: Vec<f64> = (0..12).map(|i| 1.1 + 0.1 * i as f64).collect();
    for (lambda, test) in bs_scan(&k, &spec, &bx, &lambdas)? {
        println!("lambda {lambda:.2}: distance of spectrum to 1 = {:.3e}", test.distance);
    }

    let asm = assemble_bs(&k, &spec, 2.0, &bx)?;
    for n in [4.0, 16.0, 64.0] {
        println!("off-diagonal tail beyond {n}: {:.3e}", off_diag_tail_norm(&asm, n));
    }

    let cert = grow_neumann_certificate(&k, &spec, 2.0, 0.5, &bx, 8)?;
    println!(
        "Neumann certificate at lambda = 2: {} excluded sites, contraction {:.4}, valid {}",
        cert.excluded.len(),
        cert.contraction,
        cert.valid
    );
    Ok(())
}
