//! Spectral data of truncations on growing boxes.

use pvlab::kernel::WalkKernel;
use pvlab::lattice::Point;
use pvlab::potential::GeometricSparse;
use pvlab::spectral::spectral_report;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = GeometricSparse::new(1, 1.0, 3)
        .anchor(Point::new(&[0]), 2.0)
        .box_radius(240)
        .build()?;
    for (name, k) in [("simple", WalkKernel::simple1d()), ("lazy 0.3", WalkKernel::lazy1d(0.3)?)] {
        let study = spectral_report(&k, &spec, &[60, 120, 240])?;
        println!("{name} walk");
        for rep in &study.reports {
            println!(
                "  L = {:>3}: r = {:.12} gap = {:.6} abs gap = {:.6} bipartite {}",
                rep.radius, rep.r, rep.gap, rep.abs_gap, rep.bipartite
            );
        }
        println!("  discrete eigenvalues above the essential part: {:?}", study.discrete_candidates);
    }
    Ok(())
}
