//! Sparseness diagnostics of potentials: the local mass profile and the
//! cubes where a single large value dominates.

use pvlab::potential::{GeometricSparse, PotentialSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sparse = GeometricSparse::new(1, 1.0, 3).box_radius(200).build()?;
    let dense = PotentialSpec::constant(1, 1.0, 200)?;
    for eps in [0.25, 1.0] {
        for (name, spec) in [("geometric", &sparse), ("constant", &dense)] {
            let profile = spec.sparseness_profile(eps, 200)?;
            let tail: Vec<String> = profile
                .sup_tail
                .iter()
                .map(|(r, sup)| format!("R={r}: {sup:.3e}"))
                .collect();
            println!("eps {eps} {name:>9}: {}", tail.join(", "));
        }
    }
    for outer in [1, 10, 50] {
        let c = sparse.find_concentration_cube(outer, 2, 0.1)?;
        println!("concentration cube outside radius {outer}: centred at {:?}", c.coords());
    }
    Ok(())
}
