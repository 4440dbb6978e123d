//! Spot-checks both differentiation engines against central finite
//! differences: the reverse-mode tape on a closed-form expression, then the
//! full PDE+equilibrium loss gradient through an assembled ansatz.

use hardpinn::ansatz::{assemble, AnsatzOptions, NetworkLayout};
use hardpinn::autodiff::Tape;
use hardpinn::problems;
use hardpinn::training::{hc_loss, sample_collocation};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn closed_form(p: &[f64]) -> f64 {
    (p[0] * p[1]).tanh() + p[0].sin() * p[2].exp()
}

fn main() {
    // 1. a tiny expression, differentiated on the tape
    let point = [0.3, -1.2, 0.4];
    let tape = Tape::new();
    let v = tape.params(&point);
    let root = (v[0] * v[1]).tanh() + v[0].sin() * v[2].exp();
    let grad = tape.gradient(root).unwrap();

    println!("closed-form expression at {point:?}");
    let h = 1e-6;
    for (i, g) in grad.iter().enumerate() {
        let mut plus = point;
        let mut minus = point;
        plus[i] += h;
        minus[i] -= h;
        let fd = (closed_form(&plus) - closed_form(&minus)) / (2.0 * h);
        println!("  d/dp{i}: tape {g:+.10e}   central fd {fd:+.10e}");
    }

    // 2. the same comparison through an entire hard-constraint model:
    //    main network + boundary sub-networks + distance blending + the
    //    PDE and equilibrium residual terms.
    let problem = problems::robin_annulus();
    let layout = NetworkLayout { main_hidden: vec![12, 12], subnet_hidden: vec![8, 8] };
    let (ansatz, mut params) = assemble(&problem, &layout, &AnsatzOptions::default(), 7).unwrap();
    let batch = sample_collocation(&problem, 16, 3).unwrap();

    let theta = params.flatten();
    let lg = hc_loss(&ansatz, &params, &problem, &batch).unwrap();
    println!(
        "\n{} loss at random init: pde {:.4e} + equilibrium {:.4e} = {:.4e} ({} parameters)",
        problem.name, lg.breakdown.pde, lg.breakdown.equilibrium, lg.breakdown.total,
        theta.len()
    );

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..12 {
        let i = rng.gen_range(0..theta.len());
        let h = 1e-6 * theta[i].abs().max(1.0);
        let mut t = theta.clone();
        t[i] = theta[i] + h;
        params.assign_flat(&t);
        let fp = hc_loss(&ansatz, &params, &problem, &batch).unwrap().breakdown.total;
        t[i] = theta[i] - h;
        params.assign_flat(&t);
        let fm = hc_loss(&ansatz, &params, &problem, &batch).unwrap().breakdown.total;
        let fd = (fp - fm) / (2.0 * h);
        let rel = (fd - lg.grad[i]).abs() / fd.abs().max(lg.grad[i].abs()).max(1e-12);
        worst = worst.max(rel);
        println!("  theta[{i:>4}]: reverse {:+.6e}   fd {fd:+.6e}   rel {rel:.2e}", lg.grad[i]);
    }
    println!("worst relative error over 12 sampled parameters: {worst:.2e}");
}
