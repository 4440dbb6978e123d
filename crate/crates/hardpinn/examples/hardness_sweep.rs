//! Grid sweep over the hardness exponents. Each cell trains the annulus
//! problem from the same seed with a different (beta_s, beta_t) pair and
//! records its test error, which is how the exponents get tuned in practice.
//! The problem is steady, so beta_t is inert here and the sweep axis that
//! matters is beta_s.

use hardpinn::config::RunConfig;
use hardpinn::run;

fn main() {
    let json = r#"{
        "problem": "robin_annulus",
        "mode": "hard",
        "n_f": 128,
        "adam": { "iters": 300, "lr": 0.001 },
        "seed": 0,
        "n_test": 256
    }"#;
    let dir = std::env::temp_dir().join("hardpinn_sweep");
    let mut cfg = RunConfig::from_json(json).unwrap();
    cfg.out_dir = Some(dir.to_string_lossy().into_owned());

    let art = run::sweep(&cfg, &[2.0, 5.0], &[10.0]).unwrap();
    println!(" beta_s | beta_t | MAE        | WMAPE   | final loss");
    println!("--------+--------+------------+---------+-----------");
    for c in &art.cells {
        println!(
            " {:>6} | {:>6} | {:.4e} | {:>6.2}% | {:.4e}",
            c.beta_s,
            c.beta_t,
            c.mae,
            100.0 * c.wmape,
            c.final_loss
        );
    }
    println!("\nper-cell artifacts and sweep.csv in {}", dir.display());
}
