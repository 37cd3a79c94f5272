//! Exponential decay of discrete eigenfunctions and the certificate that
//! bounds it.

use pvlab::birman_schwinger::neumann_invertibility;
use pvlab::kernel::WalkKernel;
use pvlab::potential::GeometricSparse;
use pvlab::spectral::spectral_report;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k = WalkKernel::simple1d();
    let spec = GeometricSparse::new(1, 1.0, 3).box_radius(200).build()?;
    let cert = neumann_invertibility(&k, &spec, &[], 2.0, 0.5, &spec.working_box())?;
    println!(
        "certificate at lambda = 2, alpha = 0.5: eps0 {:.4}, contraction {:.4}, valid {}",
        cert.epsilon0, cert.contraction, cert.valid
    );
    let study = spectral_report(&k, &spec, &[100, 150, 200])?;
    for d in &study.discrete_decay {
        if let Some(fit) = d.decay {
            println!(
                "eigenvalue {:.10}: far-field rate {:.6}, fit residual {:.1e}",
                d.value, fit.rate, fit.residual
            );
        }
    }
    Ok(())
}
