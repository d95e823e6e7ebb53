//! Checks the analytic gradient of the pair objective against central
//! differences on a handful of random instances, with and without the
//! non-smooth terms.

use slowpool::loss::{grad_check, random_instance, Hyperparams};

fn main() -> slowpool::Result<()> {
    let settings = [
        (
            "reconstruction only",
            Hyperparams {
                alpha: 0.0,
                beta: 0.0,
                ..Default::default()
            },
        ),
        (
            "with sparsity",
            Hyperparams {
                beta: 0.0,
                ..Default::default()
            },
        ),
        ("full objective", Hyperparams::default()),
    ];
    for (label, hyper) in settings {
        println!("{label}:");
        for seed in 0..5 {
            let (params, pair) = random_instance(16, 24, 4, 2, seed)?;
            let r = grad_check(&params, &pair, &hyper, 1e-5)?;
            let (buf, idx) = r.worst.unwrap_or(("-", 0));
            println!(
                "  seed {seed}: max relative error {:.2e} at {buf}[{idx}], {} checked, {} excluded",
                r.max_rel_error, r.checked, r.excluded
            );
        }
    }

    // a coarse step leaves the quadratic regime and the agreement degrades
    let (params, pair) = random_instance(16, 24, 4, 2, 3)?;
    for step in [1e-2, 1e-3, 1e-5, 1e-7] {
        let r = grad_check(&params, &pair, &Hyperparams::default(), step)?;
        println!("step {step:e}: max relative error {:.2e}", r.max_rel_error);
    }
    Ok(())
}
