//! Second-order jets along a single direction.
//!
//! Carries (value, first tangents, d²/dx₀²) so a PDE residual written
//! directly against second input derivatives (the classic soft-PINN form)
//! can still be differentiated in parameters by the reverse sweep. This is
//! the only sanctioned source of second-order input derivatives in the
//! crate; everything else goes through the extra-fields reformulation.

use smallvec::SmallVec;

use super::tape::{Tape, Var};

#[derive(Clone)]
pub struct Jet2<'t> {
    pub val: Var<'t>,
    d1: SmallVec<[Var<'t>; 2]>,
    /// Second derivative along direction 0.
    pub d2: Var<'t>,
}

impl<'t> Jet2<'t> {
    pub fn input(tape: &'t Tape, value: f64, dir: usize, n_dirs: usize) -> Jet2<'t> {
        assert!(dir < n_dirs);
        let val = tape.constant(value);
        let d1 = (0..n_dirs)
            .map(|k| tape.constant(if k == dir { 1.0 } else { 0.0 }))
            .collect();
        Jet2 { val, d1, d2: tape.constant(0.0) }
    }

    pub fn constant(tape: &'t Tape, value: f64, n_dirs: usize) -> Jet2<'t> {
        let val = tape.constant(value);
        let d1 = (0..n_dirs).map(|_| tape.constant(0.0)).collect();
        Jet2 { val, d1, d2: tape.constant(0.0) }
    }

    pub(crate) fn from_slots(val: Var<'t>, d1: &[Var<'t>], d2: Var<'t>) -> Jet2<'t> {
        Jet2 { val, d1: d1.iter().copied().collect(), d2 }
    }

    pub fn tape(&self) -> &'t Tape {
        self.val.tape()
    }

    pub fn value(&self) -> f64 {
        self.val.value()
    }

    pub fn n_dirs(&self) -> usize {
        self.d1.len()
    }

    pub fn tangent(&self, k: usize) -> Var<'t> {
        self.d1[k]
    }

    pub fn add(&self, rhs: &Jet2<'t>) -> Jet2<'t> {
        Jet2 {
            val: self.val + rhs.val,
            d1: self.d1.iter().zip(&rhs.d1).map(|(&a, &b)| a + b).collect(),
            d2: self.d2 + rhs.d2,
        }
    }

    pub fn sub(&self, rhs: &Jet2<'t>) -> Jet2<'t> {
        Jet2 {
            val: self.val - rhs.val,
            d1: self.d1.iter().zip(&rhs.d1).map(|(&a, &b)| a - b).collect(),
            d2: self.d2 - rhs.d2,
        }
    }

    pub fn mul(&self, rhs: &Jet2<'t>) -> Jet2<'t> {
        let val = self.val * rhs.val;
        let d1 = self
            .d1
            .iter()
            .zip(&rhs.d1)
            .map(|(&da, &db)| da * rhs.val + self.val * db)
            .collect();
        let cross = self.d1[0] * rhs.d1[0];
        let d2 = self.d2 * rhs.val + cross * 2.0 + self.val * rhs.d2;
        Jet2 { val, d1, d2 }
    }

    pub fn scale(&self, c: f64) -> Jet2<'t> {
        Jet2 {
            val: self.val * c,
            d1: self.d1.iter().map(|&t| t * c).collect(),
            d2: self.d2 * c,
        }
    }

    pub fn add_const(&self, c: f64) -> Jet2<'t> {
        Jet2 { val: self.val + c, d1: self.d1.clone(), d2: self.d2 }
    }

    pub fn neg(&self) -> Jet2<'t> {
        self.scale(-1.0)
    }

    pub fn square(&self) -> Jet2<'t> {
        self.mul(self)
    }

    pub fn tanh(&self) -> Jet2<'t> {
        let s = self.val.tanh();
        let f = 1.0 - s.square(); // s'
        let g = (s * -2.0) * f; // s''
        let d1 = self.d1.iter().map(|&t| t * f).collect();
        let d2 = g * self.d1[0].square() + f * self.d2;
        Jet2 { val: s, d1, d2 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_derivative_of_tanh_squared() {
        // f(x) = tanh(x)²: f'' = 2(1−s²)² − 4s²(1−s²), s = tanh x
        let x0 = 0.6_f64;
        let tape = Tape::new();
        let x = Jet2::input(&tape, x0, 0, 1);
        let f = x.tanh().square();
        let s = x0.tanh();
        let sp = 1.0 - s * s;
        let expect_d1 = 2.0 * s * sp;
        let expect_d2 = 2.0 * sp * sp + 2.0 * s * (-2.0 * s * sp);
        assert!((f.tangent(0).value() - expect_d1).abs() < 1e-14);
        assert!((f.d2.value() - expect_d2).abs() < 1e-13);
    }

    #[test]
    fn product_second_derivative() {
        // f = x·sin-ish composite via polynomials: f = (x²)·(3x) = 3x³, f'' = 18x
        let x0 = 1.2_f64;
        let tape = Tape::new();
        let x = Jet2::input(&tape, x0, 0, 1);
        let f = x.square().mul(&x.scale(3.0));
        assert!((f.d2.value() - 18.0 * x0).abs() < 1e-12);
    }

    #[test]
    fn mixed_direction_jet() {
        // two dirs (x, t), second derivative along x only: f = t·x²
        let tape = Tape::new();
        let x = Jet2::input(&tape, 2.0, 0, 2);
        let t = Jet2::input(&tape, 5.0, 1, 2);
        let f = t.mul(&x.square());
        assert_eq!(f.tangent(0).value(), 2.0 * 5.0 * 2.0); // 2tx
        assert_eq!(f.tangent(1).value(), 4.0); // x²
        assert_eq!(f.d2.value(), 2.0 * 5.0); // 2t
    }

    #[test]
    fn parameter_gradient_through_second_derivative() {
        // loss = (d²û/dx²)² for û = c·tanh(wx): check ∂loss/∂c against
        // central finite differences in c.
        let (c0, w0, x0) = (0.8_f64, 1.4_f64, 0.35_f64);
        let eval = |c: f64| -> (f64, Option<f64>) {
            let tape = Tape::new();
            let cp = tape.param(c);
            let x = Jet2::input(&tape, x0, 0, 1);
            let pre = Jet2 {
                val: x.val * w0,
                d1: (0..1).map(|k| x.tangent(k) * w0).collect(),
                d2: x.d2 * w0,
            };
            let s = pre.tanh();
            let uxx = s.d2 * cp;
            let loss = uxx.square();
            tape.finalize();
            let g = tape.gradient(loss).unwrap();
            (loss.value(), Some(g[0]))
        };
        let (_, g) = eval(c0);
        let h = 1e-6;
        let (lp, _) = eval(c0 + h);
        let (lm, _) = eval(c0 - h);
        let fd = (lp - lm) / (2.0 * h);
        let rel = (g.unwrap() - fd).abs() / fd.abs().max(1e-12);
        assert!(rel < 1e-7, "rel err {rel}");
    }
}
