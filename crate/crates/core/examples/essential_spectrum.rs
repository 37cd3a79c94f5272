//! Sparse potentials create essential spectrum outside [-1, 1]; truncated
//! spectra accumulate at the predicted points.

use pvlab::kernel::WalkKernel;
use pvlab::potential::GeometricSparse;
use pvlab::spectral::eigen::BandedSym;
use pvlab::spectral::{essential_spectrum_predictor, TruncatedOperator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k = WalkKernel::simple1d();
    let spec = GeometricSparse::new(1, 1.0, 16).box_radius(1024).build()?;
    let prediction = essential_spectrum_predictor(&k, &spec)?;
    println!("predicted accumulation points: {:?}", prediction.lambda_set);
    for l in [64, 256, 1024] {
        let op = TruncatedOperator::new(&k, &spec, l)?;
        let banded = BandedSym::new(op.sym());
        let d: Vec<String> = prediction
            .lambda_set
            .iter()
            .map(|&t| format!("{:.3e}", banded.distance_to_spectrum(t)))
            .collect();
        println!("L = {l:>4}: distances {}", d.join(", "));
    }
    Ok(())
}
