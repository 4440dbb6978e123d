//! Manufactured Robin problem on an annulus: trains briefly, then checks the
//! residual guarantee on both rims. On each rim the blended ansatz can only
//! violate its own condition through the other rim's contribution, which the
//! exponential blend damps by e^(-beta_s), so every measured residual must
//! sit under that damped cross-talk.

use hardpinn::ansatz::{assemble, AnsatzOptions, NetworkLayout};
use hardpinn::autodiff::{Dual, Tape};
use hardpinn::problems;
use hardpinn::training::{hc_loss, sample_collocation, train, TrainSchedule};
use std::cell::RefCell;

fn main() {
    let problem = problems::robin_annulus();
    let beta_s = 5.0;
    let opts = AnsatzOptions { beta_s, ..AnsatzOptions::default() };
    let layout = NetworkLayout { main_hidden: vec![24, 24], subnet_hidden: vec![12, 12] };
    let (ansatz, params) = assemble(&problem, &layout, &opts, 0).unwrap();
    let batch = sample_collocation(&problem, 128, 0).unwrap();

    let cell = RefCell::new(params);
    let mut theta = cell.borrow().flatten();
    let schedule = TrainSchedule { adam_iters: 600, adam_lr: 1e-3, ..TrainSchedule::default() };
    let outcome = train(
        |flat| {
            let mut p = cell.borrow_mut();
            p.assign_flat(flat);
            hc_loss(&ansatz, &p, &problem, &batch)
        },
        &mut theta,
        &schedule,
        |_| Ok(()),
        |_, _| Ok(()),
    )
    .unwrap();
    let mut params = cell.into_inner();
    params.assign_flat(&theta);
    println!("trained 600 Adam iterations, loss {:.4e}", outcome.final_loss);

    let damping = (-beta_s).exp();
    for region in ["inner", "outer"] {
        let (pts, _) = problem.domain.sample_region_boundary(region, 64, 3).unwrap();
        let mut max_resid = 0.0f64;
        let mut max_leak = 0.0f64;
        for p in &pts {
            let tape = Tape::new();
            let bound = ansatz.bind(&tape, &params, false).unwrap();
            let xd: Vec<Dual<'_>> = p.iter().map(|&v| Dual::constant(&tape, v, 0)).collect();
            max_resid = max_resid.max(bound.boundary_residual(0, region, &xd, None).unwrap().value().abs());
            max_leak = max_leak.max(bound.boundary_leakage(0, region, &xd, None).unwrap());
        }
        println!(
            "{region:>5} rim: max residual {max_resid:.3e}  <=  e^-{beta_s} * cross-talk {max_leak:.3e} = {:.3e}",
            damping * max_leak
        );
    }

    let truth = problem.truth.as_ref().unwrap().clone();
    let pts = problem.domain.sample_interior(256, 9).unwrap();
    let mut mae = 0.0;
    for x in &pts {
        let u = ansatz.predict(&params, x, None).unwrap()[0];
        mae += (u - truth.u(x, None)[0]).abs();
    }
    println!("interior MAE vs manufactured truth after the short run: {:.3e}", mae / pts.len() as f64);
}
