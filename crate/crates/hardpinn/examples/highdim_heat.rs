//! Transient heat conduction in a d-dimensional unit ball, the scaling
//! benchmark: one Neumann condition on the sphere, the initial state blended
//! in exactly at t=0, and the auxiliary flux field keeping every residual
//! first-order. Runs d=3 briefly; bump the dimension or iteration counts to
//! reproduce the full-scale numbers.

use hardpinn::config::RunConfig;
use hardpinn::run;

fn main() {
    let json = r#"{
        "problem": "highdim_heat(3)",
        "mode": "hard",
        "network": { "main_hidden": [48, 48], "subnet_hidden": [16, 16] },
        "n_f": 300,
        "adam": { "iters": 400, "lr": 0.01 },
        "lbfgs": { "max_iters": 60, "memory": 50 },
        "seed": 0,
        "n_test": 256
    }"#;
    let dir = std::env::temp_dir().join("hardpinn_heat3");
    let mut cfg = RunConfig::from_json(json).unwrap();
    cfg.out_dir = Some(dir.to_string_lossy().into_owned());

    let art = run::run(&cfg).unwrap();
    println!(
        "d=3 heat: {} Adam + L-BFGS iterations, final loss {:.4e} ({})",
        art.total_iterations,
        art.final_loss,
        art.lbfgs_stop
            .map(|r| format!("L-BFGS stopped: {r:?}"))
            .unwrap_or_else(|| "Adam only".into())
    );

    let metrics = art.metrics.as_ref().unwrap();
    println!("\n   slice | MAE        | MAPE    | WMAPE");
    println!("---------+------------+---------+--------");
    for field in &metrics.fields {
        for s in &field.slices {
            println!(
                " {:>7} | {:.4e} | {:>6.3}% | {:>5.3}%",
                s.label,
                s.mae,
                100.0 * s.mape,
                100.0 * s.wmape
            );
        }
    }
    println!("\nartifacts in {}", dir.display());
}
