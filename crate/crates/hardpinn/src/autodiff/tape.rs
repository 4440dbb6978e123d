//! Reverse-mode tape over scalar operations.
//!
//! The tape is a Wengert list: every recorded node stores its value and a
//! short list of (parent index, local partial) pairs, so a single reverse
//! sweep propagates adjoints without re-inspecting operation kinds. Forward
//! tangent arithmetic (see [`super::Dual`]) is recorded as ordinary nodes,
//! which is what makes one reverse sweep differentiate both values and
//! input-derivative quantities with respect to parameters.

use std::cell::{Cell, RefCell};
use std::fmt;

/// Errors surfaced by recording or sweeping a tape.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AdError {
    #[error("division by zero while recording")]
    DivisionByZero,
    #[error("log of non-positive value {0}")]
    NonPositiveLog(f64),
    #[error("square root of negative value {0}")]
    NegativeSqrt(f64),
    #[error("negative base {0} raised to negative power")]
    InvalidPower(f64),
    #[error("reverse sweep requested on a tape that was not finalized")]
    UnfinalizedTape,
    #[error("tape was mutated after finalize")]
    MutatedAfterFinalize,
    #[error("root node {0} is out of range for this tape")]
    RootOutOfRange(u32),
}

struct TapeInner {
    vals: Vec<f64>,
    /// `ends[i]` is the exclusive end of node i's argument range; the start
    /// is `ends[i-1]` (or 0). Leaves have empty ranges.
    ends: Vec<u32>,
    parents: Vec<u32>,
    partials: Vec<f64>,
    /// Leaf indices registered as trainable, in registration order.
    params: Vec<u32>,
    poison: Option<AdError>,
}

/// Append-only record of a scalar computation, single-writer.
pub struct Tape {
    inner: RefCell<TapeInner>,
    finalized: Cell<bool>,
}

/// Index of a recorded node, tied to its tape by lifetime.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    pub(crate) tape: &'t Tape,
    pub(crate) idx: u32,
}

/// Snapshot of tape extents, used to rewind per-point subgraphs while
/// keeping parameter leaves alive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mark {
    nodes: u32,
    args: u32,
    params: u32,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            inner: RefCell::new(TapeInner {
                vals: Vec::new(),
                ends: Vec::new(),
                parents: Vec::new(),
                partials: Vec::new(),
                params: Vec::new(),
                poison: None,
            }),
            finalized: Cell::new(false),
        }
    }

    pub fn len(&self) -> usize {
        self.inner.borrow().vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn param_count(&self) -> usize {
        self.inner.borrow().params.len()
    }

    /// Leaf with no derivative flowing anywhere (inputs, source terms).
    pub fn constant(&self, v: f64) -> Var<'_> {
        self.push0(v)
    }

    /// Trainable leaf; its adjoint is reported by [`Tape::gradient`] in
    /// registration order.
    pub fn param(&self, v: f64) -> Var<'_> {
        let var = self.push0(v);
        self.inner.borrow_mut().params.push(var.idx);
        var
    }

    /// Registers a slice of trainable leaves, preserving order.
    pub fn params(&self, vs: &[f64]) -> Vec<Var<'_>> {
        vs.iter().map(|&v| self.param(v)).collect()
    }

    pub fn value(&self, v: Var<'_>) -> f64 {
        self.inner.borrow().vals[v.idx as usize]
    }

    /// Marks the tape complete; recording past this point poisons the tape.
    pub fn finalize(&self) {
        self.finalized.set(true);
    }

    pub fn is_finalized(&self) -> bool {
        self.finalized.get()
    }

    pub fn mark(&self) -> Mark {
        let inner = self.inner.borrow();
        Mark {
            nodes: inner.vals.len() as u32,
            args: inner.parents.len() as u32,
            params: inner.params.len() as u32,
        }
    }

    /// Rewinds to a previous mark, dropping every node recorded after it.
    /// Clears the finalized flag and any poison so the caller can rebuild.
    pub fn reset_to(&self, mark: Mark) {
        let mut inner = self.inner.borrow_mut();
        inner.vals.truncate(mark.nodes as usize);
        inner.ends.truncate(mark.nodes as usize);
        inner.parents.truncate(mark.args as usize);
        inner.partials.truncate(mark.args as usize);
        inner.params.truncate(mark.params as usize);
        inner.poison = None;
        self.finalized.set(false);
    }

    /// First recording error, if any. Arithmetic never panics on domain
    /// violations; it records a NaN and remembers the error here.
    pub fn poison(&self) -> Option<AdError> {
        self.inner.borrow().poison.clone()
    }

    pub(crate) fn poison_with(&self, e: AdError) {
        let mut inner = self.inner.borrow_mut();
        if inner.poison.is_none() {
            inner.poison = Some(e);
        }
    }

    fn guard_mutation(&self, inner: &mut TapeInner) {
        if self.finalized.get() && inner.poison.is_none() {
            debug_assert!(false, "tape mutated after finalize");
            inner.poison = Some(AdError::MutatedAfterFinalize);
        }
    }

    pub(crate) fn push0(&self, v: f64) -> Var<'_> {
        let mut inner = self.inner.borrow_mut();
        self.guard_mutation(&mut inner);
        let idx = inner.vals.len() as u32;
        inner.vals.push(v);
        let end = inner.parents.len() as u32;
        inner.ends.push(end);
        Var { tape: self, idx }
    }

    pub(crate) fn push1(&self, v: f64, p: Var<'_>, d: f64) -> Var<'_> {
        debug_assert!(std::ptr::eq(p.tape, self));
        let mut inner = self.inner.borrow_mut();
        self.guard_mutation(&mut inner);
        let idx = inner.vals.len() as u32;
        inner.vals.push(v);
        inner.parents.push(p.idx);
        inner.partials.push(d);
        let end = inner.parents.len() as u32;
        inner.ends.push(end);
        Var { tape: self, idx }
    }

    pub(crate) fn push2(&self, v: f64, p1: Var<'_>, d1: f64, p2: Var<'_>, d2: f64) -> Var<'_> {
        debug_assert!(std::ptr::eq(p1.tape, self) && std::ptr::eq(p2.tape, self));
        let mut inner = self.inner.borrow_mut();
        self.guard_mutation(&mut inner);
        let idx = inner.vals.len() as u32;
        inner.vals.push(v);
        inner.parents.push(p1.idx);
        inner.partials.push(d1);
        inner.parents.push(p2.idx);
        inner.partials.push(d2);
        let end = inner.parents.len() as u32;
        inner.ends.push(end);
        Var { tape: self, idx }
    }

    /// Fused inner product: Σ wᵢ·xᵢ (+ bias). One node with 2k(+1) argument
    /// entries instead of 2k−1 nodes; this is the workhorse of MLP layers.
    pub fn dot(&self, ws: &[Var<'_>], xs: &[Var<'_>], bias: Option<Var<'_>>) -> Var<'_> {
        debug_assert_eq!(ws.len(), xs.len());
        let mut inner = self.inner.borrow_mut();
        self.guard_mutation(&mut inner);
        let mut acc = match bias {
            Some(b) => {
                debug_assert!(std::ptr::eq(b.tape, self));
                inner.vals[b.idx as usize]
            }
            None => 0.0,
        };
        for (w, x) in ws.iter().zip(xs) {
            debug_assert!(std::ptr::eq(w.tape, self) && std::ptr::eq(x.tape, self));
            let wv = inner.vals[w.idx as usize];
            let xv = inner.vals[x.idx as usize];
            acc += wv * xv;
            inner.parents.push(w.idx);
            inner.partials.push(xv);
            inner.parents.push(x.idx);
            inner.partials.push(wv);
        }
        if let Some(b) = bias {
            inner.parents.push(b.idx);
            inner.partials.push(1.0);
        }
        let idx = inner.vals.len() as u32;
        inner.vals.push(acc);
        let end = inner.parents.len() as u32;
        inner.ends.push(end);
        Var { tape: self, idx }
    }

    /// Fixed-coefficient combination: Σ cᵢ·vᵢ + c₀.
    pub fn linear(&self, coeffs: &[f64], vars: &[Var<'_>], c0: f64) -> Var<'_> {
        debug_assert_eq!(coeffs.len(), vars.len());
        let mut inner = self.inner.borrow_mut();
        self.guard_mutation(&mut inner);
        let mut acc = c0;
        for (&c, v) in coeffs.iter().zip(vars) {
            debug_assert!(std::ptr::eq(v.tape, self));
            acc += c * inner.vals[v.idx as usize];
            inner.parents.push(v.idx);
            inner.partials.push(c);
        }
        let idx = inner.vals.len() as u32;
        inner.vals.push(acc);
        let end = inner.parents.len() as u32;
        inner.ends.push(end);
        Var { tape: self, idx }
    }

    /// One reverse sweep from `root`; returns ∂root/∂param for every
    /// registered parameter leaf, in registration order.
    pub fn gradient(&self, root: Var<'_>) -> Result<Vec<f64>, AdError> {
        let mut adj = Vec::new();
        self.sweep_accumulate(root, 1.0, &mut adj, Mark { nodes: 0, args: 0, params: 0 })?;
        let inner = self.inner.borrow();
        Ok(inner.params.iter().map(|&p| adj[p as usize]).collect())
    }

    /// Reverse sweep that adds `seed · ∂root/∂node` into `adj`, zeroing only
    /// the region at or above `persist`: adjoints of leaves below the mark
    /// accumulate across calls. All nodes below the mark must be leaves.
    pub fn sweep_accumulate(
        &self,
        root: Var<'_>,
        seed: f64,
        adj: &mut Vec<f64>,
        persist: Mark,
    ) -> Result<(), AdError> {
        if !self.finalized.get() {
            return Err(AdError::UnfinalizedTape);
        }
        let inner = self.inner.borrow();
        if let Some(e) = &inner.poison {
            return Err(e.clone());
        }
        let n = inner.vals.len();
        if (root.idx as usize) >= n {
            return Err(AdError::RootOutOfRange(root.idx));
        }
        debug_assert!(persist.args == 0, "persisted tape region must hold only leaves");
        let lo = persist.nodes as usize;
        if adj.len() < n {
            adj.resize(n, 0.0);
        }
        for a in adj[lo..n].iter_mut() {
            *a = 0.0;
        }
        adj[root.idx as usize] += seed;
        let ends = &inner.ends;
        let parents = &inner.parents;
        let partials = &inner.partials;
        for i in (lo..n).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let start = if i == 0 { 0 } else { ends[i - 1] as usize };
            let end = ends[i] as usize;
            for k in start..end {
                adj[parents[k] as usize] += partials[k] * a;
            }
        }
        Ok(())
    }

    /// Copies parameter adjoints out of a sweep buffer, in registration order.
    pub fn param_adjoints(&self, adj: &[f64], out: &mut Vec<f64>) {
        let inner = self.inner.borrow();
        out.clear();
        out.extend(inner.params.iter().map(|&p| adj[p as usize]));
    }
}

impl fmt::Debug for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inner = self.inner.borrow();
        f.debug_struct("Tape")
            .field("nodes", &inner.vals.len())
            .field("args", &inner.parents.len())
            .field("params", &inner.params.len())
            .field("finalized", &self.finalized.get())
            .field("poison", &inner.poison)
            .finish()
    }
}

impl<'t> Var<'t> {
    pub fn value(self) -> f64 {
        self.tape.value(self)
    }

    pub fn tape(self) -> &'t Tape {
        self.tape
    }

    pub fn tanh(self) -> Var<'t> {
        let v = self.value().tanh();
        self.tape.push1(v, self, 1.0 - v * v)
    }

    pub fn exp(self) -> Var<'t> {
        let v = self.value().exp();
        self.tape.push1(v, self, v)
    }

    pub fn sin(self) -> Var<'t> {
        let x = self.value();
        self.tape.push1(x.sin(), self, x.cos())
    }

    pub fn cos(self) -> Var<'t> {
        let x = self.value();
        self.tape.push1(x.cos(), self, -x.sin())
    }

    /// Four-quadrant arctangent with `self` as the ordinate and `x` the
    /// abscissa. Undefined at the origin.
    pub fn atan2(self, x: Var<'t>) -> Var<'t> {
        let y_v = self.value();
        let x_v = x.value();
        let denom = x_v * x_v + y_v * y_v;
        if denom == 0.0 {
            self.tape.poison_with(AdError::DivisionByZero);
            return self.tape.push2(f64::NAN, self, f64::NAN, x, f64::NAN);
        }
        self.tape
            .push2(y_v.atan2(x_v), self, x_v / denom, x, -y_v / denom)
    }

    pub fn ln(self) -> Var<'t> {
        let x = self.value();
        if x <= 0.0 {
            self.tape.poison_with(AdError::NonPositiveLog(x));
            return self.tape.push1(f64::NAN, self, f64::NAN);
        }
        self.tape.push1(x.ln(), self, 1.0 / x)
    }

    pub fn sqrt(self) -> Var<'t> {
        let x = self.value();
        if x < 0.0 {
            self.tape.poison_with(AdError::NegativeSqrt(x));
            return self.tape.push1(f64::NAN, self, f64::NAN);
        }
        let r = x.sqrt();
        // ∂√x = 1/(2√x); at exactly zero leave a zero partial (subgradient)
        let d = if r == 0.0 { 0.0 } else { 0.5 / r };
        self.tape.push1(r, self, d)
    }

    pub fn powi(self, n: i32) -> Var<'t> {
        let x = self.value();
        if x == 0.0 && n < 0 {
            self.tape.poison_with(AdError::InvalidPower(x));
            return self.tape.push1(f64::NAN, self, f64::NAN);
        }
        let v = x.powi(n);
        let d = f64::from(n) * x.powi(n - 1);
        self.tape.push1(v, self, d)
    }

    pub fn recip(self) -> Var<'t> {
        let x = self.value();
        if x == 0.0 {
            self.tape.poison_with(AdError::DivisionByZero);
            return self.tape.push1(f64::NAN, self, f64::NAN);
        }
        self.tape.push1(1.0 / x, self, -1.0 / (x * x))
    }

    pub fn abs(self) -> Var<'t> {
        let x = self.value();
        let s = if x >= 0.0 { 1.0 } else { -1.0 };
        self.tape.push1(x.abs(), self, s)
    }

    /// Pointwise minimum with subgradient on the active branch (ties pick
    /// `self`, deterministically).
    pub fn min(self, other: Var<'t>) -> Var<'t> {
        if self.value() <= other.value() {
            self.tape.push1(self.value(), self, 1.0)
        } else {
            self.tape.push1(other.value(), other, 1.0)
        }
    }

    pub fn max(self, other: Var<'t>) -> Var<'t> {
        if self.value() >= other.value() {
            self.tape.push1(self.value(), self, 1.0)
        } else {
            self.tape.push1(other.value(), other, 1.0)
        }
    }

    pub fn square(self) -> Var<'t> {
        let x = self.value();
        self.tape.push1(x * x, self, 2.0 * x)
    }
}

impl<'t> std::ops::Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Var<'t>) -> Var<'t> {
        self.tape.push2(self.value() + rhs.value(), self, 1.0, rhs, 1.0)
    }
}

impl<'t> std::ops::Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Var<'t>) -> Var<'t> {
        self.tape.push2(self.value() - rhs.value(), self, 1.0, rhs, -1.0)
    }
}

impl<'t> std::ops::Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Var<'t>) -> Var<'t> {
        let (a, b) = (self.value(), rhs.value());
        self.tape.push2(a * b, self, b, rhs, a)
    }
}

impl<'t> std::ops::Div for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: Var<'t>) -> Var<'t> {
        let (a, b) = (self.value(), rhs.value());
        if b == 0.0 {
            self.tape.poison_with(AdError::DivisionByZero);
            return self.tape.push2(f64::NAN, self, f64::NAN, rhs, f64::NAN);
        }
        self.tape.push2(a / b, self, 1.0 / b, rhs, -a / (b * b))
    }
}

impl<'t> std::ops::Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.tape.push1(-self.value(), self, -1.0)
    }
}

impl<'t> std::ops::Add<f64> for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: f64) -> Var<'t> {
        self.tape.push1(self.value() + rhs, self, 1.0)
    }
}

impl<'t> std::ops::Sub<f64> for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: f64) -> Var<'t> {
        self.tape.push1(self.value() - rhs, self, 1.0)
    }
}

impl<'t> std::ops::Mul<f64> for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: f64) -> Var<'t> {
        self.tape.push1(self.value() * rhs, self, rhs)
    }
}

impl<'t> std::ops::Add<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn add(self, rhs: Var<'t>) -> Var<'t> {
        rhs + self
    }
}

impl<'t> std::ops::Sub<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn sub(self, rhs: Var<'t>) -> Var<'t> {
        rhs.tape.push1(self - rhs.value(), rhs, -1.0)
    }
}

impl<'t> std::ops::Mul<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn mul(self, rhs: Var<'t>) -> Var<'t> {
        rhs * self
    }
}
