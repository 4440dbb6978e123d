//! How the hardness exponent trades boundary fidelity against blending
//! smoothness, measured on the battery-pack geometry: eleven cells, six
//! cooling pipes, and the casing wall, all with convective conditions. No
//! training happens here; the residuals below come from a randomly
//! initialized model, which is the point: the bound holds for any weights.

use hardpinn::ansatz::{assemble, AnsatzOptions, NetworkLayout};
use hardpinn::autodiff::{Dual, Tape};
use hardpinn::problems;

fn main() {
    let problem = problems::battery_pack();
    let layout = NetworkLayout { main_hidden: vec![16, 16], subnet_hidden: vec![8, 8] };
    println!(
        "{}: {} boundary conditions on {} regions, shared sub-networks per role",
        problem.name,
        problem.bcs.len(),
        problem.domain.n_regions()
    );

    println!("\n beta_s | max |BC residual|   worst region");
    println!("--------+----------------------------------");
    for beta_s in [1.0, 2.0, 5.0, 10.0] {
        let opts = AnsatzOptions { beta_s, beta_t: 30.0, ..AnsatzOptions::default() };
        let (ansatz, params) = assemble(&problem, &layout, &opts, 99).unwrap();
        let mut worst = 0.0f64;
        let mut worst_region = String::new();
        for (ri, def) in problem.bcs.iter().enumerate() {
            let region = &def.bc.region;
            let (pts, _) = problem.domain.sample_region_boundary(region, 12, 5000 + ri as u64).unwrap();
            for p in &pts {
                let tape = Tape::new();
                let bound = ansatz.bind(&tape, &params, false).unwrap();
                let xd: Vec<Dual<'_>> = p.iter().map(|&v| Dual::constant(&tape, v, 0)).collect();
                let td = Dual::constant(&tape, 0.5, 0);
                let r = bound.boundary_residual(0, region, &xd, Some(&td)).unwrap();
                if r.value().abs() > worst {
                    worst = r.value().abs();
                    worst_region = region.clone();
                }
            }
        }
        println!("   {beta_s:>4} | {worst:^18.3e} {worst_region}");
    }

    // the per-region decay rates the assembly picked: alpha = beta_s / gap,
    // where gap is each region's closest approach to any other region
    let opts = AnsatzOptions { beta_s: 5.0, ..AnsatzOptions::default() };
    let (ansatz, _) = assemble(&problem, &layout, &opts, 99).unwrap();
    println!("\nblend decay rates at beta_s = 5 (tightest gaps first):");
    let mut rates = ansatz.hardness();
    rates.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap());
    for (field, region, alpha) in rates.iter().take(5) {
        println!("  field {field}, region {region:<8} alpha = {alpha:.2}");
    }
}
