//! Build walk kernels from presets and offset lists and inspect them.

use pvlab::kernel::WalkKernel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let custom = WalkKernel::from_entries(
        1,
        &[(vec![0], 0.1), (vec![1], 0.25), (vec![-1], 0.25), (vec![2], 0.2), (vec![-2], 0.2)],
    )?;
    for (name, k) in [
        ("simple1d", WalkKernel::simple1d()),
        ("lazy1d(0.25)", WalkKernel::preset("lazy1d(0.25)")?),
        ("simple2d", WalkKernel::simple2d()),
        ("range two", custom),
    ] {
        let rep = k.report();
        println!(
            "{name:>12}: range {}, spectrum [{:.4}, {:.4}], P^10(0,0) = {:.6}",
            rep.range,
            rep.spectrum.lower,
            rep.spectrum.upper,
            k.convolution_power_at_zero(10)
        );
    }
    Ok(())
}
