//! Reverse-mode automatic differentiation over dense matrices.
//!
//! A [`Tape`] records every operation applied to its [`Var`]s in creation
//! order. Calling [`Tape::backward`] on a `1 × 1` result replays the record in
//! reverse and accumulates adjoints for every node that (transitively) depends
//! on a leaf created with [`Tape::leaf`]. Values created with
//! [`Tape::constant`] never receive gradients, which is how detached inputs
//! (frozen parameters, stored counterfactuals) are expressed.

use std::cell::RefCell;

use super::matrix::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Affine { x: usize, weight: usize, bias: usize },
    Relu(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    Abs(usize),
    Square(usize),
    Sum(usize),
    Mean(usize),
    CrossEntropy { logits: usize, targets: Vec<usize>, probs: Matrix },
    Pick { input: usize, indices: Vec<usize> },
    Softmax(usize),
}

#[derive(Debug)]
struct Node {
    value: Matrix,
    op: Op,
    requires_grad: bool,
}

/// Operation trace for one differentiable computation.
///
/// Tapes are cheap to create and are meant to be thrown away after a single
/// backward pass. They are not `Sync`; concurrent evaluations each use their own.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: usize,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Var").field("id", &self.id).finish()
    }
}

/// Adjoints produced by [`Tape::backward`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
    shapes: Vec<(usize, usize)>,
}

impl Gradients {
    /// Gradient with respect to the recorded input `var`; zeros when `var` did
    /// not influence the output. Adjoints of intermediate nodes are not retained.
    pub fn wrt(&self, var: Var<'_>) -> Matrix {
        match &self.grads[var.id] {
            Some(g) => g.clone(),
            None => {
                let (r, c) = self.shapes[var.id];
                Matrix::zeros(r, c)
            }
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&self, value: Matrix, op: Op, requires_grad: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    /// Records a differentiable input.
    pub fn leaf(&self, value: Matrix) -> Var<'_> {
        self.push(value, Op::Leaf, true)
    }

    /// Records a value that is treated as a constant by `backward`.
    pub fn constant(&self, value: Matrix) -> Var<'_> {
        self.push(value, Op::Leaf, false)
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn requires(&self, ids: &[usize]) -> bool {
        let nodes = self.nodes.borrow();
        ids.iter().any(|&i| nodes[i].requires_grad)
    }

    fn unary(&self, a: usize, f: impl FnOnce(&Matrix) -> Matrix, op: Op) -> Var<'_> {
        let value = f(&self.nodes.borrow()[a].value);
        let rg = self.requires(&[a]);
        self.push(value, op, rg)
    }

    fn binary(
        &self,
        a: usize,
        b: usize,
        f: impl FnOnce(&Matrix, &Matrix) -> Matrix,
        op: Op,
    ) -> Var<'_> {
        let value = {
            let nodes = self.nodes.borrow();
            f(&nodes[a].value, &nodes[b].value)
        };
        let rg = self.requires(&[a, b]);
        self.push(value, op, rg)
    }

    /// Computes gradients of the scalar `output` with respect to every node.
    pub fn backward(&self, output: Var<'_>) -> Result<Gradients> {
        assert!(
            std::ptr::eq(output.tape, self),
            "backward called with a variable from another tape"
        );
        let nodes = self.nodes.borrow();
        let out_shape = nodes[output.id].value.shape();
        if out_shape != (1, 1) {
            return Err(Error::Contract(format!(
                "backward requires a 1x1 scalar output, got {}x{}",
                out_shape.0, out_shape.1
            )));
        }
        let mut grads: Vec<Option<Matrix>> = vec![None; nodes.len()];
        grads[output.id] = Some(Matrix::scalar(1.0));

        for id in (0..=output.id).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &nodes[id];
            if matches!(node.op, Op::Leaf) || !node.requires_grad {
                grads[id] = Some(g);
                continue;
            }
            let mut send = |target: usize, delta: Matrix| {
                if !nodes[target].requires_grad {
                    return;
                }
                match &mut grads[target] {
                    Some(acc) => acc.add_scaled(&delta, 1.0),
                    slot @ None => *slot = Some(delta),
                }
            };
            match &node.op {
                Op::Leaf => unreachable!(),
                Op::Affine { x, weight, bias } => {
                    let xv = &nodes[*x].value;
                    let wv = &nodes[*weight].value;
                    if nodes[*x].requires_grad {
                        let mut gx = Matrix::zeros(xv.rows(), xv.cols());
                        for i in 0..g.rows() {
                            let gi = g.row(i);
                            let row = gx.row_mut(i);
                            for (j, &gij) in gi.iter().enumerate() {
                                if gij == 0.0 {
                                    continue;
                                }
                                for (r, w) in row.iter_mut().zip(wv.row(j)) {
                                    *r += gij * w;
                                }
                            }
                        }
                        send(*x, gx);
                    }
                    if nodes[*weight].requires_grad {
                        let mut gw = Matrix::zeros(wv.rows(), wv.cols());
                        for i in 0..g.rows() {
                            let xi = xv.row(i);
                            for (j, &gij) in g.row(i).iter().enumerate() {
                                if gij == 0.0 {
                                    continue;
                                }
                                for (w, x) in gw.row_mut(j).iter_mut().zip(xi) {
                                    *w += gij * x;
                                }
                            }
                        }
                        send(*weight, gw);
                    }
                    if nodes[*bias].requires_grad {
                        let mut gb = Matrix::zeros(1, g.cols());
                        for i in 0..g.rows() {
                            for (b, v) in gb.as_mut_slice().iter_mut().zip(g.row(i)) {
                                *b += v;
                            }
                        }
                        let (br, bc) = nodes[*bias].value.shape();
                        send(*bias, Matrix::from_vec(br, bc, gb.into_vec()));
                    }
                }
                Op::Relu(a) => {
                    let av = &nodes[*a].value;
                    send(*a, g.zip_map(av, |gv, x| if x > 0.0 { gv } else { 0.0 }));
                }
                Op::Add(a, b) => {
                    send(*a, g.clone());
                    send(*b, g);
                }
                Op::Sub(a, b) => {
                    send(*a, g.clone());
                    send(*b, g.map(|v| -v));
                }
                Op::Mul(a, b) => {
                    send(*a, g.zip_map(&nodes[*b].value, |gv, bv| gv * bv));
                    send(*b, g.zip_map(&nodes[*a].value, |gv, av| gv * av));
                }
                Op::Scale(a, c) => send(*a, g.map(|v| v * c)),
                Op::Abs(a) => send(*a, g.zip_map(&nodes[*a].value, |gv, x| gv * sign(x))),
                Op::Square(a) => send(*a, g.zip_map(&nodes[*a].value, |gv, x| 2.0 * x * gv)),
                Op::Sum(a) => {
                    let (r, c) = nodes[*a].value.shape();
                    send(*a, Matrix::filled(r, c, g.get(0, 0)));
                }
                Op::Mean(a) => {
                    let (r, c) = nodes[*a].value.shape();
                    send(*a, Matrix::filled(r, c, g.get(0, 0) / (r * c) as f64));
                }
                Op::CrossEntropy {
                    logits,
                    targets,
                    probs,
                } => {
                    let mut gl = probs.clone();
                    for (i, &t) in targets.iter().enumerate() {
                        gl[(i, t)] -= 1.0;
                        let gi = g.get(i, 0);
                        for v in gl.row_mut(i) {
                            *v *= gi;
                        }
                    }
                    send(*logits, gl);
                }
                Op::Pick { input, indices } => {
                    let (r, c) = nodes[*input].value.shape();
                    let mut gi = Matrix::zeros(r, c);
                    for (i, &k) in indices.iter().enumerate() {
                        gi[(i, k)] = g.get(i, 0);
                    }
                    send(*input, gi);
                }
                Op::Softmax(a) => {
                    let s = &node.value;
                    let mut ga = Matrix::zeros(s.rows(), s.cols());
                    for i in 0..s.rows() {
                        let si = s.row(i);
                        let gi = g.row(i);
                        let dot: f64 = si.iter().zip(gi).map(|(x, y)| x * y).sum();
                        for ((o, sv), gv) in ga.row_mut(i).iter_mut().zip(si).zip(gi) {
                            *o = sv * (gv - dot);
                        }
                    }
                    send(*a, ga);
                }
            }
        }

        let shapes = nodes.iter().map(|n| n.value.shape()).collect();
        Ok(Gradients { grads, shapes })
    }
}

#[inline]
pub(crate) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Row-wise softmax, shifted by the row maximum (first index on ties).
pub(crate) fn softmax_rows(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for i in 0..m.rows() {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    out
}

/// Row-wise `-log softmax(logits)[target]` via log-sum-exp.
pub(crate) fn cross_entropy_rows(logits: &Matrix, targets: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(logits.rows(), 1);
    for (i, &t) in targets.iter().enumerate() {
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        out[(i, 0)] = lse - row[t];
    }
    out
}

impl<'t> Var<'t> {
    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn id(&self) -> usize {
        self.id
    }

    /// Copy of the recorded value.
    pub fn value(&self) -> Matrix {
        self.tape.nodes.borrow()[self.id].value.clone()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.tape.nodes.borrow()[self.id].value.shape()
    }

    /// Value of a `1 × 1` variable.
    pub fn scalar(&self) -> f64 {
        let nodes = self.tape.nodes.borrow();
        let v = &nodes[self.id].value;
        assert_eq!(v.shape(), (1, 1), "scalar() on a non-scalar variable");
        v.get(0, 0)
    }

    fn same_tape(&self, other: &Var<'t>) {
        assert!(
            std::ptr::eq(self.tape, other.tape),
            "variables belong to different tapes"
        );
    }

    /// `self · weightᵀ + bias` with `self: n×in`, `weight: out×in`, `bias: 1×out`.
    pub fn affine(self, weight: Var<'t>, bias: Var<'t>) -> Var<'t> {
        self.same_tape(&weight);
        self.same_tape(&bias);
        let value = {
            let nodes = self.tape.nodes.borrow();
            Matrix::affine(
                &nodes[self.id].value,
                &nodes[weight.id].value,
                &nodes[bias.id].value,
            )
        };
        let rg = self.tape.requires(&[self.id, weight.id, bias.id]);
        self.tape.push(
            value,
            Op::Affine {
                x: self.id,
                weight: weight.id,
                bias: bias.id,
            },
            rg,
        )
    }

    pub fn relu(self) -> Var<'t> {
        self.tape
            .unary(self.id, |m| m.map(|v| v.max(0.0)), Op::Relu(self.id))
    }

    pub fn add(self, other: Var<'t>) -> Var<'t> {
        self.same_tape(&other);
        self.tape.binary(
            self.id,
            other.id,
            |a, b| a.zip_map(b, |x, y| x + y),
            Op::Add(self.id, other.id),
        )
    }

    pub fn sub(self, other: Var<'t>) -> Var<'t> {
        self.same_tape(&other);
        self.tape.binary(
            self.id,
            other.id,
            |a, b| a.zip_map(b, |x, y| x - y),
            Op::Sub(self.id, other.id),
        )
    }

    /// Elementwise product.
    pub fn mul(self, other: Var<'t>) -> Var<'t> {
        self.same_tape(&other);
        self.tape.binary(
            self.id,
            other.id,
            |a, b| a.zip_map(b, |x, y| x * y),
            Op::Mul(self.id, other.id),
        )
    }

    pub fn scale(self, c: f64) -> Var<'t> {
        self.tape
            .unary(self.id, |m| m.map(|v| v * c), Op::Scale(self.id, c))
    }

    pub fn neg(self) -> Var<'t> {
        self.scale(-1.0)
    }

    /// Elementwise absolute value; the subgradient at zero is zero.
    pub fn abs(self) -> Var<'t> {
        self.tape.unary(self.id, |m| m.map(f64::abs), Op::Abs(self.id))
    }

    pub fn square(self) -> Var<'t> {
        self.tape
            .unary(self.id, |m| m.map(|v| v * v), Op::Square(self.id))
    }

    pub fn sum(self) -> Var<'t> {
        self.tape
            .unary(self.id, |m| Matrix::scalar(m.sum()), Op::Sum(self.id))
    }

    /// Mean over all entries. An empty input yields `0`.
    pub fn mean(self) -> Var<'t> {
        self.tape.unary(
            self.id,
            |m| {
                if m.is_empty() {
                    Matrix::scalar(0.0)
                } else {
                    Matrix::scalar(m.sum() / m.len() as f64)
                }
            },
            Op::Mean(self.id),
        )
    }

    /// Row-wise softmax.
    pub fn softmax(self) -> Var<'t> {
        self.tape.unary(self.id, softmax_rows, Op::Softmax(self.id))
    }

    /// Row-wise logit cross-entropy against `targets`; returns an `n × 1` column.
    ///
    /// Panics if a target is out of range; callers validate class indices first.
    pub fn cross_entropy(self, targets: &[usize]) -> Var<'t> {
        let (value, probs) = {
            let nodes = self.tape.nodes.borrow();
            let logits = &nodes[self.id].value;
            assert_eq!(logits.rows(), targets.len(), "one target per row");
            assert!(
                targets.iter().all(|&t| t < logits.cols()),
                "target index out of range"
            );
            (cross_entropy_rows(logits, targets), softmax_rows(logits))
        };
        let rg = self.tape.requires(&[self.id]);
        self.tape.push(
            value,
            Op::CrossEntropy {
                logits: self.id,
                targets: targets.to_vec(),
                probs,
            },
            rg,
        )
    }

    /// Selects entry `indices[i]` from row `i`; returns an `n × 1` column.
    pub fn pick(self, indices: &[usize]) -> Var<'t> {
        let value = {
            let nodes = self.tape.nodes.borrow();
            let m = &nodes[self.id].value;
            assert_eq!(m.rows(), indices.len(), "one index per row");
            let mut out = Matrix::zeros(m.rows(), 1);
            for (i, &k) in indices.iter().enumerate() {
                out[(i, 0)] = m.get(i, k);
            }
            out
        };
        let rg = self.tape.requires(&[self.id]);
        self.tape.push(
            value,
            Op::Pick {
                input: self.id,
                indices: indices.to_vec(),
            },
            rg,
        )
    }
}
