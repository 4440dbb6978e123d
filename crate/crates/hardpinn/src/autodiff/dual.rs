//! Forward-mode dual scalars recorded on the reverse tape.
//!
//! A [`Dual`] carries a value node plus one tangent node per active input
//! direction. Because tangents are ordinary tape nodes, parameter gradients
//! of derivative quantities (∇û, ∇·p̂, ∂û/∂t) come out of the same reverse
//! sweep as the loss itself.

use smallvec::SmallVec;

use super::tape::{AdError, Tape, Var};

type Tangents<'t> = SmallVec<[Var<'t>; 6]>;

#[derive(Clone)]
pub struct Dual<'t> {
    pub val: Var<'t>,
    tan: Tangents<'t>,
}

impl<'t> Dual<'t> {
    /// Input with unit tangent seed e_{dir} among `n_dirs` active directions.
    pub fn input(tape: &'t Tape, value: f64, dir: usize, n_dirs: usize) -> Dual<'t> {
        assert!(dir < n_dirs, "direction {dir} out of range for {n_dirs} directions");
        let val = tape.constant(value);
        let tan = (0..n_dirs)
            .map(|k| tape.constant(if k == dir { 1.0 } else { 0.0 }))
            .collect();
        Dual { val, tan }
    }

    /// Constant with zero tangents in every active direction.
    pub fn constant(tape: &'t Tape, value: f64, n_dirs: usize) -> Dual<'t> {
        let val = tape.constant(value);
        let tan = (0..n_dirs).map(|_| tape.constant(0.0)).collect();
        Dual { val, tan }
    }

    /// Wraps an existing node with zero tangents.
    pub fn from_var(v: Var<'t>, n_dirs: usize) -> Dual<'t> {
        let tape = v.tape();
        let tan = (0..n_dirs).map(|_| tape.constant(0.0)).collect();
        Dual { val: v, tan }
    }

    pub(crate) fn from_parts(val: Var<'t>, tan: Tangents<'t>) -> Dual<'t> {
        Dual { val, tan }
    }

    pub fn tape(&self) -> &'t Tape {
        self.val.tape()
    }

    pub fn n_dirs(&self) -> usize {
        self.tan.len()
    }

    pub fn value(&self) -> f64 {
        self.val.value()
    }

    /// The value node itself, for expressions that mix a dual's value with
    /// its tangents (residuals combining u with ∇·p, say).
    pub fn var(&self) -> Var<'t> {
        self.val
    }

    /// Tangent node in direction `k` (the forward-mode derivative ∂self/∂x_k).
    pub fn tangent(&self, k: usize) -> Var<'t> {
        self.tan[k]
    }

    pub fn tangents(&self) -> &[Var<'t>] {
        &self.tan
    }

    fn zip_tan(&self, rhs: &Dual<'t>, mut f: impl FnMut(Var<'t>, Var<'t>) -> Var<'t>) -> Tangents<'t> {
        debug_assert_eq!(self.tan.len(), rhs.tan.len(), "mixed tangent widths");
        self.tan.iter().zip(&rhs.tan).map(|(&a, &b)| f(a, b)).collect()
    }

    pub fn add(&self, rhs: &Dual<'t>) -> Dual<'t> {
        Dual {
            val: self.val + rhs.val,
            tan: self.zip_tan(rhs, |a, b| a + b),
        }
    }

    pub fn sub(&self, rhs: &Dual<'t>) -> Dual<'t> {
        Dual {
            val: self.val - rhs.val,
            tan: self.zip_tan(rhs, |a, b| a - b),
        }
    }

    pub fn mul(&self, rhs: &Dual<'t>) -> Dual<'t> {
        let val = self.val * rhs.val;
        let tan = self
            .tan
            .iter()
            .zip(&rhs.tan)
            .map(|(&da, &db)| da * rhs.val + self.val * db)
            .collect();
        Dual { val, tan }
    }

    pub fn div(&self, rhs: &Dual<'t>) -> Dual<'t> {
        let q = self.val / rhs.val;
        let tan = self
            .tan
            .iter()
            .zip(&rhs.tan)
            .map(|(&da, &db)| (da - q * db) / rhs.val)
            .collect();
        Dual { val: q, tan }
    }

    pub fn neg(&self) -> Dual<'t> {
        Dual {
            val: -self.val,
            tan: self.tan.iter().map(|&t| -t).collect(),
        }
    }

    /// Scale by a plain constant (no tangent contribution from the factor).
    pub fn scale(&self, c: f64) -> Dual<'t> {
        Dual {
            val: self.val * c,
            tan: self.tan.iter().map(|&t| t * c).collect(),
        }
    }

    pub fn add_const(&self, c: f64) -> Dual<'t> {
        Dual { val: self.val + c, tan: self.tan.clone() }
    }

    /// Multiply by a tape node that has no input dependence (a parameter).
    pub fn scale_var(&self, w: Var<'t>) -> Dual<'t> {
        Dual {
            val: self.val * w,
            tan: self.tan.iter().map(|&t| t * w).collect(),
        }
    }

    pub fn tanh(&self) -> Dual<'t> {
        let s = self.val.tanh();
        let f = 1.0 - s.square();
        Dual {
            val: s,
            tan: self.tan.iter().map(|&t| t * f).collect(),
        }
    }

    pub fn exp(&self) -> Dual<'t> {
        let e = self.val.exp();
        Dual {
            val: e,
            tan: self.tan.iter().map(|&t| t * e).collect(),
        }
    }

    pub fn sin(&self) -> Dual<'t> {
        let c = self.val.cos();
        Dual {
            val: self.val.sin(),
            tan: self.tan.iter().map(|&t| t * c).collect(),
        }
    }

    pub fn cos(&self) -> Dual<'t> {
        let s = -self.val.sin();
        Dual {
            val: self.val.cos(),
            tan: self.tan.iter().map(|&t| t * s).collect(),
        }
    }

    /// Four-quadrant arctangent, `self` as ordinate and `x` as abscissa.
    pub fn atan2(&self, x: &Dual<'t>) -> Dual<'t> {
        let val = self.val.atan2(x.val);
        let denom = x.val * x.val + self.val * self.val;
        let tan = self
            .tan
            .iter()
            .zip(&x.tan)
            .map(|(&dy, &dx)| (x.val * dy - self.val * dx) / denom)
            .collect();
        Dual { val, tan }
    }

    pub fn ln(&self) -> Dual<'t> {
        let v = self.val.ln();
        let r = self.val.recip();
        Dual {
            val: v,
            tan: self.tan.iter().map(|&t| t * r).collect(),
        }
    }

    pub fn sqrt(&self) -> Dual<'t> {
        let r = self.val.sqrt();
        // reuse ∂√x = 1/(2√x) through the recorded value
        let half_inv = if r.value() == 0.0 {
            r.tape().constant(0.0)
        } else {
            let two_r = r * 2.0;
            two_r.recip()
        };
        Dual {
            val: r,
            tan: self.tan.iter().map(|&t| t * half_inv).collect(),
        }
    }

    pub fn square(&self) -> Dual<'t> {
        let two_v = self.val * 2.0;
        Dual {
            val: self.val.square(),
            tan: self.tan.iter().map(|&t| t * two_v).collect(),
        }
    }

    pub fn powi(&self, n: i32) -> Dual<'t> {
        let val = self.val.powi(n);
        let d = self.val.powi(n - 1) * f64::from(n);
        Dual {
            val,
            tan: self.tan.iter().map(|&t| t * d).collect(),
        }
    }

    /// Branch minimum: value and tangents from whichever argument is smaller
    /// (ties pick `self`).
    pub fn min(&self, rhs: &Dual<'t>) -> Dual<'t> {
        if self.value() <= rhs.value() {
            self.clone()
        } else {
            rhs.clone()
        }
    }

    pub fn max(&self, rhs: &Dual<'t>) -> Dual<'t> {
        if self.value() >= rhs.value() {
            self.clone()
        } else {
            rhs.clone()
        }
    }
}

impl<'t> std::ops::Add for &Dual<'t> {
    type Output = Dual<'t>;
    fn add(self, rhs: &Dual<'t>) -> Dual<'t> {
        self.add(rhs)
    }
}

impl<'t> std::ops::Sub for &Dual<'t> {
    type Output = Dual<'t>;
    fn sub(self, rhs: &Dual<'t>) -> Dual<'t> {
        self.sub(rhs)
    }
}

impl<'t> std::ops::Mul for &Dual<'t> {
    type Output = Dual<'t>;
    fn mul(self, rhs: &Dual<'t>) -> Dual<'t> {
        self.mul(rhs)
    }
}

impl<'t> std::ops::Div for &Dual<'t> {
    type Output = Dual<'t>;
    fn div(self, rhs: &Dual<'t>) -> Dual<'t> {
        self.div(rhs)
    }
}

/// Forward-mode gradient of a scalar function at a point. The closure sees
/// one `Dual` per coordinate, each seeded with its own unit direction.
pub fn input_gradient<F>(f: F, x: &[f64]) -> Result<(f64, Vec<f64>), AdError>
where
    F: for<'t> Fn(&[Dual<'t>]) -> Dual<'t>,
{
    let tape = Tape::new();
    let n = x.len();
    let inputs: Vec<Dual<'_>> = x
        .iter()
        .enumerate()
        .map(|(i, &v)| Dual::input(&tape, v, i, n))
        .collect();
    let out = f(&inputs);
    if let Some(e) = tape.poison() {
        return Err(e);
    }
    let value = out.value();
    let grad = (0..n).map(|k| out.tangent(k).value()).collect();
    Ok((value, grad))
}
