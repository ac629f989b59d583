//! Reverse-mode automatic differentiation on dynamic-dimension `f64` arrays.
//!
//! A [`Tape`] records a computation as an append-only list of nodes. Each op
//! stores its forward value and a backward closure; [`Tape::backward`] walks
//! the list in reverse and accumulates gradients into every differentiable
//! leaf. Everything is `f64` so the same code path serves training and
//! finite-difference gradient verification.
//!
//! Values are owned `ArrayD<f64>` in standard layout. Scalars are 0-d arrays.

mod conv;
mod ops;
mod sample;

pub mod check;
pub mod optim;
pub mod param;

pub use param::{Binding, ParamSet};

use ndarray::{ArrayD, IxDyn};
use std::cell::RefCell;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

/// Context handed to a backward closure.
pub(crate) struct BackCtx<'a> {
    pub parents: Vec<&'a ArrayD<f64>>,
    pub value: &'a ArrayD<f64>,
    pub grad: &'a ArrayD<f64>,
}

/// Computes parent gradients. `needs[i]` tells the closure whether parent `i`
/// requires a gradient at all; it may return `None` for parents that don't.
type BackFn = Box<dyn Fn(&BackCtx, &[bool]) -> Vec<Option<ArrayD<f64>>>>;

struct Node {
    value: ArrayD<f64>,
    parents: Vec<usize>,
    needs_grad: bool,
    backward: Option<BackFn>,
}

/// Gradients of one scalar output with respect to every tape node.
pub struct Gradients {
    grads: Vec<Option<ArrayD<f64>>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&ArrayD<f64>> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }
}

/// Append-only computation record.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of recorded nodes.
    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Non-differentiable input.
    pub fn constant(&self, value: ArrayD<f64>) -> Var {
        self.push(value, vec![], false, None)
    }

    /// Differentiable leaf.
    pub fn leaf(&self, value: ArrayD<f64>) -> Var {
        self.push(value, vec![], true, None)
    }

    /// 0-d constant.
    pub fn scalar(&self, x: f64) -> Var {
        self.constant(ArrayD::from_elem(IxDyn(&[]), x))
    }

    /// Clone of the forward value at `v`.
    pub fn value(&self, v: Var) -> ArrayD<f64> {
        self.nodes.borrow()[v.0].value.clone()
    }

    /// Forward value of a 0-d (or single-element) node as `f64`.
    pub fn scalar_value(&self, v: Var) -> f64 {
        let nodes = self.nodes.borrow();
        let a = &nodes[v.0].value;
        assert!(a.len() == 1, "scalar_value on non-scalar node");
        *a.iter().next().unwrap()
    }

    pub fn shape(&self, v: Var) -> Vec<usize> {
        self.nodes.borrow()[v.0].value.shape().to_vec()
    }

    pub(crate) fn needs_grad(&self, v: Var) -> bool {
        self.nodes.borrow()[v.0].needs_grad
    }

    /// Borrow the value at `v` for the duration of `f`.
    pub fn with_value<R>(&self, v: Var, f: impl FnOnce(&ArrayD<f64>) -> R) -> R {
        f(&self.nodes.borrow()[v.0].value)
    }

    pub(crate) fn push(
        &self,
        value: ArrayD<f64>,
        parents: Vec<usize>,
        leaf_needs_grad: bool,
        backward: Option<BackFn>,
    ) -> Var {
        debug_assert!(value.iter().all(|x| x.is_finite() || x.is_nan() || x.is_infinite()));
        let mut nodes = self.nodes.borrow_mut();
        let needs_grad = if parents.is_empty() {
            leaf_needs_grad
        } else {
            parents.iter().any(|&p| nodes[p].needs_grad)
        };
        let value = if value.is_standard_layout() {
            value
        } else {
            value.as_standard_layout().to_owned()
        };
        nodes.push(Node {
            value,
            parents,
            needs_grad,
            backward,
        });
        Var(nodes.len() - 1)
    }

    pub(crate) fn unary(
        &self,
        x: Var,
        value: ArrayD<f64>,
        back: impl Fn(&BackCtx) -> ArrayD<f64> + 'static,
    ) -> Var {
        self.push(
            value,
            vec![x.0],
            false,
            Some(Box::new(move |ctx, needs| {
                if needs[0] {
                    vec![Some(back(ctx))]
                } else {
                    vec![None]
                }
            })),
        )
    }

    /// Reverse sweep from a scalar `loss`. Gradients accumulate only into
    /// subgraphs that lead to differentiable leaves.
    pub fn backward(&self, loss: Var) -> Gradients {
        let nodes = self.nodes.borrow();
        assert_eq!(
            nodes[loss.0].value.len(),
            1,
            "backward() requires a scalar loss"
        );
        let mut grads: Vec<Option<ArrayD<f64>>> = vec![None; nodes.len()];
        grads[loss.0] = Some(ArrayD::from_elem(nodes[loss.0].value.raw_dim(), 1.0));

        for i in (0..=loss.0).rev() {
            if grads[i].is_none() || !nodes[i].needs_grad {
                continue;
            }
            let node = &nodes[i];
            let Some(back) = &node.backward else { continue };
            let parent_vals: Vec<&ArrayD<f64>> =
                node.parents.iter().map(|&p| &nodes[p].value).collect();
            let needs: Vec<bool> = node.parents.iter().map(|&p| nodes[p].needs_grad).collect();
            let ctx = BackCtx {
                parents: parent_vals,
                value: &node.value,
                grad: grads[i].as_ref().unwrap(),
            };
            let pgrads = back(&ctx, &needs);
            debug_assert_eq!(pgrads.len(), node.parents.len());
            for (slot, g) in node.parents.iter().zip(pgrads) {
                let Some(g) = g else { continue };
                debug_assert_eq!(g.shape(), nodes[*slot].value.shape());
                match &mut grads[*slot] {
                    Some(acc) => *acc += &g,
                    empty => *empty = Some(g),
                }
            }
        }
        Gradients { grads }
    }
}
