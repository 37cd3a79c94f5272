//! Three independent evaluations of the scaled Green function of lazy walks
//! on ℤ, plus its decay in the distance.

use pvlab::kernel::WalkKernel;
use pvlab::lattice::Point;
use pvlab::resolvent::{
    closed_1d_decay_base, decay_rate_estimate, g_lambda_closed_1d, g_lambda_quadrature,
    g_lambda_series, green_kernel, DEFAULT_QUAD_POINTS,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>5} {:>7} {:>20} {:>20} {:>20}", "q", "lambda", "closed", "quadrature", "series");
    for q in [0.0, 0.25, 0.5] {
        let k = WalkKernel::lazy1d(q)?;
        for lambda in [-3.0, -1.5, 1.25, 2.0, 5.0] {
            let closed = g_lambda_closed_1d(q, lambda, 0)?.value;
            let quad = g_lambda_quadrature(&k, lambda, DEFAULT_QUAD_POINTS)?.value;
            let series = g_lambda_series(&k, lambda, 1e-14)?.value;
            println!("{q:>5} {lambda:>7} {closed:>20.15} {quad:>20.15} {series:>20.15}");
        }
    }

    let k = WalkKernel::simple1d();
    println!("\nG_2(0, x) for the simple walk");
    let mut profile = Vec::new();
    for x in 0..20 {
        let g = green_kernel(&k, 2.0, &Point::new(&[x]), DEFAULT_QUAD_POINTS)?;
        if x < 6 {
            println!("  x = {x}: {:.6e}", g.value);
        }
        profile.push((x as f64, g.value.abs()));
    }
    let fit = decay_rate_estimate(&profile)?;
    println!(
        "fitted decay rate {:.8}, closed form {:.8}",
        fit.rate,
        -closed_1d_decay_base(0.0, 2.0).ln()
    );
    Ok(())
}
