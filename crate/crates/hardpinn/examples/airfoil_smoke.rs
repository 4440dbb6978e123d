//! Steady flow past a NACA 0015 airfoil with soft boundary losses and the
//! auxiliary gradient fields: three coupled fields, polygon geometry, and a
//! traction-free outlet. A real solve needs tens of thousands of iterations;
//! this smoke run just shows the multi-field objective moving.

use hardpinn::ansatz::{soft_assemble, NetworkLayout};
use hardpinn::problems;
use hardpinn::training::{loss_group_count, sample_soft_batch, soft_loss, train, TrainSchedule};
use std::cell::RefCell;

fn main() {
    let problem = problems::airfoil_ns();
    println!(
        "{}: fields (u, v, p), {} boundary conditions, {} additive loss groups",
        problem.name,
        problem.bcs.len(),
        loss_group_count(&problem, false, true)
    );

    let layout = NetworkLayout { main_hidden: vec![24, 24], subnet_hidden: vec![10, 10] };
    let (soft, params) = soft_assemble(&problem, &layout, true, 0).unwrap();
    let batch = sample_soft_batch(&problem, 200, 60, 0, 0).unwrap();

    let cell = RefCell::new(params);
    let mut theta = cell.borrow().flat.clone();
    let schedule = TrainSchedule { adam_iters: 150, adam_lr: 1e-3, ..TrainSchedule::default() };
    let outcome = train(
        |flat| {
            let mut p = cell.borrow_mut();
            p.flat.copy_from_slice(flat);
            soft_loss(&soft, &p, &problem, &batch, false)
        },
        &mut theta,
        &schedule,
        |row| {
            if row.iteration % 30 == 0 || row.iteration == 1 {
                println!(
                    "  iter {:>3}  total {:.4e}  (pde {:.2e}, equilibrium {:.2e}, bc {:.2e})",
                    row.iteration,
                    row.breakdown.total,
                    row.breakdown.pde,
                    row.breakdown.equilibrium,
                    row.breakdown.bc
                );
            }
            Ok(())
        },
        |_, _| Ok(()),
    )
    .unwrap();
    println!("after {} iterations: loss {:.4e}", outcome.total_iterations, outcome.final_loss);

    let mut p = cell.into_inner();
    p.flat.copy_from_slice(&theta);
    println!("\nvelocity and pressure probes:");
    for pt in [[-2.0, 0.0], [2.0, 1.0], [6.0, 0.0]] {
        let uvp = soft.predict(&p, &pt, None).unwrap();
        println!(
            "  ({:+.1}, {:+.1}): u {:+.3}  v {:+.3}  p {:+.3}",
            pt[0], pt[1], uvp[0], uvp[1], uvp[2]
        );
    }
}
