//! The analytic boundary layer on its own: condition normalization, the
//! rank-d projector, and general solutions that satisfy a Robin condition
//! identically, whatever the sub-network happens to output.

use hardpinn::autodiff::{Dual, Tape};
use hardpinn::boundary::{
    general_solution, householder_basis, normalize, BoundaryCondition, ParamFn,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn main() {
    // a Robin condition 2u + 0.5 (n . grad u) = 3 on some region
    let bc = BoundaryCondition::robin(
        "rim",
        0,
        ParamFn::Const(2.0),
        ParamFn::Const(0.5),
        ParamFn::Const(3.0),
    );

    let x = [0.6, -0.8];
    let normal = [0.6, -0.8]; // unit outward normal at x
    let (n_tilde, g_tilde) = normalize(&bc, &x, &normal).unwrap();
    println!("condition 2u + 0.5 dn(u) = 3 at x = {x:?}");
    println!("  normalized coefficients n~ = {n_tilde:?}");
    println!("  normalized right side   g~ = {g_tilde:.6}");

    let b = householder_basis(&n_tilde).unwrap();
    println!("  projector onto the condition's null space:");
    for row in &b {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:+.4}")).collect();
        println!("    [{}]", cells.join(", "));
    }
    let pn: f64 = b
        .iter()
        .map(|row| row.iter().zip(&n_tilde).map(|(a, c)| a * c).sum::<f64>().powi(2))
        .sum::<f64>()
        .sqrt();
    println!("  |B n~| = {pn:.2e} (n~ spans the nullified direction)");

    // feed the projector arbitrary network outputs: the condition holds
    // identically, so training can never violate it
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    println!("\ngeneral solutions for random network outputs w:");
    for _ in 0..5 {
        let tape = Tape::new();
        let w: Vec<Dual<'_>> = (0..3)
            .map(|_| Dual::constant(&tape, rng.gen_range(-2.0..2.0), 0))
            .collect();
        let xd: Vec<Dual<'_>> = x.iter().map(|&v| Dual::constant(&tape, v, 0)).collect();
        let nd: Vec<Dual<'_>> = normal.iter().map(|&v| Dual::constant(&tape, v, 0)).collect();
        let p = general_solution(&bc, &nd, &w, &xd).unwrap();
        let vals: Vec<f64> = p.iter().map(|v| v.value()).collect();
        let resid = n_tilde.iter().zip(&vals).map(|(a, b)| a * b).sum::<f64>() - g_tilde;
        println!(
            "  w = [{:+.3}, {:+.3}, {:+.3}]  ->  (u, p) = [{:+.4}, {:+.4}, {:+.4}]   n~.(u,p) - g~ = {resid:+.1e}",
            w[0].value(), w[1].value(), w[2].value(), vals[0], vals[1], vals[2]
        );
    }

    // Dirichlet and Neumann are the b = 0 and a = 0 corners of the same code path
    let dirichlet = BoundaryCondition::dirichlet("rim", 0, ParamFn::Const(1.5));
    let neumann = BoundaryCondition::neumann("rim", 0, ParamFn::Const(-0.25));
    for (label, bc) in [("dirichlet u = 1.5", dirichlet), ("neumann dn(u) = -0.25", neumann)] {
        let (n_tilde, g_tilde) = normalize(&bc, &x, &normal).unwrap();
        let tape = Tape::new();
        let w: Vec<Dual<'_>> =
            (0..3).map(|_| Dual::constant(&tape, rng.gen_range(-2.0..2.0), 0)).collect();
        let xd: Vec<Dual<'_>> = x.iter().map(|&v| Dual::constant(&tape, v, 0)).collect();
        let nd: Vec<Dual<'_>> = normal.iter().map(|&v| Dual::constant(&tape, v, 0)).collect();
        let p = general_solution(&bc, &nd, &w, &xd).unwrap();
        let vals: Vec<f64> = p.iter().map(|v| v.value()).collect();
        let resid = n_tilde.iter().zip(&vals).map(|(a, b)| a * b).sum::<f64>() - g_tilde;
        println!("\n{label}: (u, p) = [{:+.4}, {:+.4}, {:+.4}], residual {resid:+.1e}", vals[0], vals[1], vals[2]);
    }
}
