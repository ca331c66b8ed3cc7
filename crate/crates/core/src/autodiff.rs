//! Minimal reverse-mode automatic differentiation over scalars.
//!
//! A [`Tape`] records every operation as a node holding its parents and the
//! local partial derivatives, evaluated eagerly during the forward pass.
//! Parent ids are always smaller than the node id, so a single reverse sweep
//! over the node list is a valid backward pass.
//!
//! The operation set is exactly what the wrapped-normal density, the KL
//! estimator, the hinge loss, and a small tanh MLP need; there is no
//! broadcasting, no tensors, and no higher-order support. Callers loop over
//! scalar [`Var`]s for vector work.
//!
//! A tape is single-threaded. The training loops create one tape per
//! minibatch and drop it after the update.

use std::cell::{Cell, RefCell};
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::scalar::{acosh_stable, Real, EPS_ALPHA};

#[derive(Clone, Copy)]
struct Node {
    value: f64,
    parents: [u32; 2],
    partials: [f64; 2],
    arity: u8,
}

/// Append-only record of a scalar computation.
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    domain_err: Cell<Option<(usize, &'static str)>>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            nodes: RefCell::new(Vec::new()),
            domain_err: Cell::new(None),
        }
    }

    pub fn with_capacity(n: usize) -> Self {
        Tape {
            nodes: RefCell::new(Vec::with_capacity(n)),
            domain_err: Cell::new(None),
        }
    }

    /// Creates a differentiable leaf.
    pub fn var(&self, value: f64) -> Var<'_> {
        let idx = self.push(Node {
            value,
            parents: [0, 0],
            partials: [0.0, 0.0],
            arity: 0,
        });
        Var { tape: self, idx }
    }

    /// Creates a constant leaf (a leaf like any other; "constant" only in
    /// that callers do not read its adjoint).
    pub fn constant(&self, value: f64) -> Var<'_> {
        self.var(value)
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    /// Discards all recorded nodes but keeps the allocation, so a training
    /// loop can reuse one tape instead of paying a large allocation per
    /// batch. Any [`Var`] created before the call is invalidated and must
    /// not be used afterwards.
    pub fn clear(&self) {
        self.nodes.borrow_mut().clear();
        self.domain_err.set(None);
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// First domain violation recorded during the forward pass, if any.
    pub fn domain_error(&self) -> Option<Error> {
        self.domain_err.get().map(|(node, context)| Error::ArithmeticDomain {
            node,
            context: context.to_string(),
        })
    }

    fn push(&self, node: Node) -> u32 {
        let mut nodes = self.nodes.borrow_mut();
        let idx = nodes.len();
        assert!(idx < u32::MAX as usize, "tape overflow");
        nodes.push(node);
        idx as u32
    }

    fn flag_domain(&self, idx: u32, context: &'static str) {
        if self.domain_err.get().is_none() {
            self.domain_err.set(Some((idx as usize, context)));
        }
    }

    /// Runs the backward pass from `root` and returns the adjoint of every
    /// node. Each node is visited exactly once, in reverse id order.
    pub fn backward(&self, root: Var<'_>) -> Result<Gradients> {
        if let Some(err) = self.domain_error() {
            return Err(err);
        }
        let nodes = self.nodes.borrow();
        let mut adjoints = vec![0.0; nodes.len()];
        adjoints[root.idx as usize] = 1.0;
        for (i, node) in nodes.iter().enumerate().rev() {
            let a = adjoints[i];
            if a == 0.0 {
                continue;
            }
            for k in 0..node.arity as usize {
                adjoints[node.parents[k] as usize] += a * node.partials[k];
            }
        }
        Ok(Gradients { adjoints })
    }
}

/// Adjoints of every tape node after a backward pass.
#[derive(Debug)]
pub struct Gradients {
    adjoints: Vec<f64>,
}

impl Gradients {
    pub fn wrt(&self, var: Var<'_>) -> f64 {
        self.adjoints[var.idx as usize]
    }
}

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    idx: u32,
}

impl<'t> Var<'t> {
    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    fn val(&self) -> f64 {
        self.tape.nodes.borrow()[self.idx as usize].value
    }

    fn unary(self, value: f64, partial: f64) -> Var<'t> {
        let idx = self.tape.push(Node {
            value,
            parents: [self.idx, 0],
            partials: [partial, 0.0],
            arity: 1,
        });
        Var { tape: self.tape, idx }
    }

    fn binary(self, rhs: Var<'t>, value: f64, pa: f64, pb: f64) -> Var<'t> {
        debug_assert!(std::ptr::eq(self.tape, rhs.tape), "vars from different tapes");
        let idx = self.tape.push(Node {
            value,
            parents: [self.idx, rhs.idx],
            partials: [pa, pb],
            arity: 2,
        });
        Var { tape: self.tape, idx }
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(rhs, self.val() + rhs.val(), 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(rhs, self.val() - rhs.val(), 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Var<'t>) -> Var<'t> {
        let (a, b) = (self.val(), rhs.val());
        self.binary(rhs, a * b, b, a)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: Var<'t>) -> Var<'t> {
        let (a, b) = (self.val(), rhs.val());
        let out = self.binary(rhs, a / b, 1.0 / b, -a / (b * b));
        if b == 0.0 {
            self.tape.flag_domain(out.idx, "division by zero");
        }
        out
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.unary(-self.val(), -1.0)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Var<'t>;
    fn add(self, c: f64) -> Var<'t> {
        self.unary(self.val() + c, 1.0)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, c: f64) -> Var<'t> {
        self.unary(self.val() - c, 1.0)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, c: f64) -> Var<'t> {
        self.unary(self.val() * c, c)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Var<'t>;
    fn div(self, c: f64) -> Var<'t> {
        self.unary(self.val() / c, 1.0 / c)
    }
}

impl<'t> Real for Var<'t> {
    fn value(self) -> f64 {
        self.val()
    }

    fn exp(self) -> Self {
        let e = self.val().exp();
        self.unary(e, e)
    }

    fn ln(self) -> Self {
        let x = self.val();
        let out = self.unary(x.ln(), 1.0 / x);
        if x <= 0.0 {
            self.tape.flag_domain(out.idx, "log of non-positive value");
        }
        out
    }

    fn sqrt(self) -> Self {
        let x = self.val();
        let s = x.sqrt();
        let out = self.unary(s, 0.5 / s);
        if x < 0.0 {
            self.tape.flag_domain(out.idx, "sqrt of negative value");
        }
        out
    }

    fn sinh(self) -> Self {
        let x = self.val();
        self.unary(x.sinh(), x.cosh())
    }

    fn cosh(self) -> Self {
        let x = self.val();
        self.unary(x.cosh(), x.sinh())
    }

    fn tanh(self) -> Self {
        let t = self.val().tanh();
        self.unary(t, 1.0 - t * t)
    }

    fn acosh_clamped(self) -> Self {
        let xc = self.val().max(1.0 + EPS_ALPHA);
        // (xc-1)(xc+1) instead of xc^2 - 1: no cancellation near 1.
        let partial = 1.0 / ((xc - 1.0) * (xc + 1.0)).sqrt();
        self.unary(acosh_stable(xc), partial)
    }

    fn powi(self, n: i32) -> Self {
        let x = self.val();
        self.unary(x.powi(n), n as f64 * x.powi(n - 1))
    }

    fn max_const(self, c: f64) -> Self {
        let x = self.val();
        // Subgradient 0 at the kink (standard hinge convention).
        let partial = if x > c { 1.0 } else { 0.0 };
        self.unary(x.max(c), partial)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{log_sinhc, log_sinhc_deriv, softplus};

    fn fd<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
        let h = 1e-5;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn square_gradient() {
        let tape = Tape::new();
        let x = tape.var(3.0);
        let y = x * x;
        let g = tape.backward(y).unwrap();
        assert_eq!(y.value(), 9.0);
        assert_eq!(g.wrt(x), 6.0);
    }

    #[test]
    fn acosh_gradient_analytic() {
        let tape = Tape::new();
        let x = tape.var(2.0);
        let y = x.acosh_clamped();
        let g = tape.backward(y).unwrap();
        assert!((g.wrt(x) - 1.0 / 3.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn leaf_root_gradient_is_one() {
        let tape = Tape::new();
        let x = tape.var(1.5);
        let g = tape.backward(x).unwrap();
        assert_eq!(g.wrt(x), 1.0);
    }

    #[test]
    fn product_gradients() {
        let tape = Tape::new();
        let a = tape.var(2.0);
        let b = tape.var(5.0);
        let y = a * b;
        let g = tape.backward(y).unwrap();
        assert_eq!(g.wrt(a), 5.0);
        assert_eq!(g.wrt(b), 2.0);
    }

    #[test]
    fn backward_is_deterministic() {
        let tape = Tape::new();
        let x = tape.var(0.7);
        let y = (x.sinh() * x + x.cosh()).ln() * x.tanh();
        let g1 = tape.backward(y).unwrap().wrt(x);
        let g2 = tape.backward(y).unwrap().wrt(x);
        assert_eq!(g1.to_bits(), g2.to_bits());
    }

    #[test]
    fn fan_out_accumulates() {
        let tape = Tape::new();
        let x = tape.var(3.0);
        let y = x * x + x; // 2x + 1 = 7
        let g = tape.backward(y).unwrap();
        assert_eq!(g.wrt(x), 7.0);
    }

    #[test]
    fn domain_error_identifies_node() {
        let tape = Tape::new();
        let x = tape.var(-1.0);
        let y = x.ln();
        match tape.backward(y) {
            Err(Error::ArithmeticDomain { node, .. }) => assert_eq!(node, 1),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn hinge_subgradient_zero_at_kink() {
        let tape = Tape::new();
        let x = tape.var(0.0);
        let y = x.max_const(0.0);
        let g = tape.backward(y).unwrap();
        assert_eq!(g.wrt(x), 0.0);
    }

    #[test]
    fn transcendental_chain_matches_fd() {
        let f = |x: f64| (x.sinh() / (x.cosh() + 2.0)).exp() * x.tanh();
        for &x0 in &[0.3, 1.0, 2.5, -1.2] {
            let tape = Tape::new();
            let x = tape.var(x0);
            let y = (x.sinh() / (x.cosh() + 2.0)).exp() * x.tanh();
            let g = tape.backward(y).unwrap().wrt(x);
            let want = fd(f, x0);
            assert!((g - want).abs() <= 1e-5 * want.abs().max(1e-2), "x={x0}");
        }
    }

    #[test]
    fn log_sinhc_gradient_matches_analytic() {
        // Including the series branch near r = 0, where the limit is 0.
        for &r0 in &[0.0, 1e-8, 1e-7, 1e-6, 1e-3, 0.5, 2.0, 10.0] {
            let tape = Tape::new();
            let r = tape.var(r0);
            let y = log_sinhc(r);
            let g = tape.backward(y).unwrap().wrt(r);
            assert!(
                (g - log_sinhc_deriv(r0)).abs() < 1e-8,
                "r={r0}: got {g}, want {}",
                log_sinhc_deriv(r0)
            );
        }
    }

    #[test]
    fn softplus_gradient_matches_sigmoid() {
        for &x0 in &[-30.0, -2.0, 0.0, 1.5, 30.0] {
            let tape = Tape::new();
            let x = tape.var(x0);
            let y = softplus(x);
            let g = tape.backward(y).unwrap().wrt(x);
            let sigmoid = 1.0 / (1.0 + (-x0).exp());
            assert!((g - sigmoid).abs() < 1e-12, "x={x0}");
        }
    }
}
