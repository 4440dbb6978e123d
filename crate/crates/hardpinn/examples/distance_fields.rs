//! Shapes, extended distance functions, and mesh-free interior sampling.
//! Prints a coarse ASCII picture of the battery-pack casing where each cell
//! shows which boundary region is nearest, then sampling statistics.

use hardpinn::geometry::{DistanceMode, Shape};
use hardpinn::problems;

fn main() {
    let square = Shape::Rectangle { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 };
    let hole = Shape::Circle { center: [0.5, 0.5], radius: 0.2 };
    println!("unit square with a r=0.2 hole, distances at a few points:");
    for p in [[0.5, 0.95], [0.5, 0.71], [0.25, 0.5], [0.05, 0.05]] {
        println!(
            "  x = ({:.2}, {:.2})   wall {:.3}   hole rim {:+.3}",
            p[0],
            p[1],
            square.exact_distance(&p),
            hole.exact_distance(&p)
        );
    }

    let problem = problems::battery_pack();
    let domain = &problem.domain;
    println!(
        "\nbattery casing: {} regions, dim {}, outer bbox {:?}",
        domain.n_regions(),
        domain.dim(),
        domain.outer().bbox()
    );

    // nearest-region map on a coarse grid: '#' outside the material,
    // 'c'/'p'/'w' for cell, pipe, and wall
    println!();
    for row in (0..13).rev() {
        let y = row as f64 * 12.0 / 12.0;
        let mut line = String::new();
        for col in 0..43 {
            let x = col as f64 * 21.0 / 42.0;
            if !domain.contains(&[x, y]) {
                line.push('#');
                continue;
            }
            let mut best = ("wall", f64::INFINITY);
            for (name, _) in domain.regions() {
                let d = domain.region_distance(name, &[x, y]).unwrap();
                if d < best.1 {
                    best = (name.as_str(), d);
                }
            }
            line.push(best.0.chars().next().unwrap());
        }
        println!("  {line}");
    }

    let pts = domain.sample_interior(4000, 11).unwrap();
    let min_wall = pts
        .iter()
        .map(|p| domain.distance(p))
        .fold(f64::INFINITY, f64::min);
    println!(
        "\nsampled {} interior points; every one inside the material, closest \
         boundary approach {min_wall:.4}",
        pts.len()
    );

    // the exact and smoothed full-boundary fields agree away from corners
    let exact = domain.full_boundary_field(DistanceMode::Exact);
    let soft = domain.full_boundary_field(DistanceMode::Soft(domain.soft_beta()));
    let mut worst = 0.0f64;
    for p in pts.iter().take(500) {
        worst = worst.max((exact.eval(p) - soft.eval(p)).abs());
    }
    println!("max |exact - softmin| boundary distance over 500 samples: {worst:.4}");
}
