//! Elementwise, reduction and shape ops with NumPy-style broadcasting.

use super::{BackCtx, Tape, Var};
use ndarray::{concatenate, ArrayD, Axis, IxDyn, SliceInfoElem};

/// Shape both operands broadcast to, or panic with a clear message.
pub(crate) fn broadcast_shape(a: &[usize], b: &[usize]) -> Vec<usize> {
    let n = a.len().max(b.len());
    let mut out = vec![0usize; n];
    for i in 0..n {
        let da = if i < n - a.len() { 1 } else { a[i - (n - a.len())] };
        let db = if i < n - b.len() { 1 } else { b[i - (n - b.len())] };
        assert!(
            da == db || da == 1 || db == 1,
            "shapes {a:?} and {b:?} are not broadcast-compatible"
        );
        out[i] = da.max(db);
    }
    out
}

/// Sum `g` down to `shape` (inverse of broadcasting).
pub(crate) fn reduce_to_shape(g: &ArrayD<f64>, shape: &[usize]) -> ArrayD<f64> {
    let mut out = g.clone();
    while out.ndim() > shape.len() {
        out = out.sum_axis(Axis(0));
    }
    for (ax, (&od, &sd)) in out.shape().to_vec().iter().zip(shape).enumerate() {
        if sd == 1 && od != 1 {
            let mut summed = out.sum_axis(Axis(ax));
            summed.insert_axis_inplace(Axis(ax));
            out = summed;
        }
    }
    out
}

fn bcast(a: &ArrayD<f64>, shape: &[usize]) -> ArrayD<f64> {
    a.broadcast(IxDyn(shape)).expect("broadcast").to_owned()
}

impl Tape {
    fn binary(
        &self,
        a: Var,
        b: Var,
        value: ArrayD<f64>,
        back: impl Fn(&BackCtx, bool, bool) -> (Option<ArrayD<f64>>, Option<ArrayD<f64>>) + 'static,
    ) -> Var {
        self.push(
            value,
            vec![a.0, b.0],
            false,
            Some(Box::new(move |ctx, needs| {
                let (ga, gb) = back(ctx, needs[0], needs[1]);
                vec![ga, gb]
            })),
        )
    }

    pub fn add(&self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        let shape = broadcast_shape(va.shape(), vb.shape());
        let value = &bcast(&va, &shape) + &bcast(&vb, &shape);
        self.binary(a, b, value, |ctx, na, nb| {
            let ga = na.then(|| reduce_to_shape(ctx.grad, ctx.parents[0].shape()));
            let gb = nb.then(|| reduce_to_shape(ctx.grad, ctx.parents[1].shape()));
            (ga, gb)
        })
    }

    pub fn sub(&self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        let shape = broadcast_shape(va.shape(), vb.shape());
        let value = &bcast(&va, &shape) - &bcast(&vb, &shape);
        self.binary(a, b, value, |ctx, na, nb| {
            let ga = na.then(|| reduce_to_shape(ctx.grad, ctx.parents[0].shape()));
            let gb = nb.then(|| reduce_to_shape(&-ctx.grad.clone(), ctx.parents[1].shape()));
            (ga, gb)
        })
    }

    pub fn mul(&self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        let shape = broadcast_shape(va.shape(), vb.shape());
        let value = &bcast(&va, &shape) * &bcast(&vb, &shape);
        self.binary(a, b, value, move |ctx, na, nb| {
            let shape = broadcast_shape(ctx.parents[0].shape(), ctx.parents[1].shape());
            let ga = na.then(|| {
                let g = ctx.grad * &bcast(ctx.parents[1], &shape);
                reduce_to_shape(&g, ctx.parents[0].shape())
            });
            let gb = nb.then(|| {
                let g = ctx.grad * &bcast(ctx.parents[0], &shape);
                reduce_to_shape(&g, ctx.parents[1].shape())
            });
            (ga, gb)
        })
    }

    pub fn div(&self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        let shape = broadcast_shape(va.shape(), vb.shape());
        let value = &bcast(&va, &shape) / &bcast(&vb, &shape);
        self.binary(a, b, value, move |ctx, na, nb| {
            let shape = broadcast_shape(ctx.parents[0].shape(), ctx.parents[1].shape());
            let vb = bcast(ctx.parents[1], &shape);
            let ga = na.then(|| reduce_to_shape(&(ctx.grad / &vb), ctx.parents[0].shape()));
            let gb = nb.then(|| {
                let va = bcast(ctx.parents[0], &shape);
                let g = -(ctx.grad * &va) / (&vb * &vb);
                reduce_to_shape(&g, ctx.parents[1].shape())
            });
            (ga, gb)
        })
    }

    pub fn neg(&self, x: Var) -> Var {
        let value = -self.value(x);
        self.unary(x, value, |ctx| -ctx.grad.clone())
    }

    pub fn add_scalar(&self, x: Var, c: f64) -> Var {
        let value = self.value(x) + c;
        self.unary(x, value, |ctx| ctx.grad.clone())
    }

    pub fn mul_scalar(&self, x: Var, c: f64) -> Var {
        let value = self.value(x) * c;
        self.unary(x, value, move |ctx| ctx.grad * c)
    }

    pub fn square(&self, x: Var) -> Var {
        let v = self.value(x);
        let value = &v * &v;
        self.unary(x, value, |ctx| ctx.grad * ctx.parents[0] * 2.0)
    }

    /// Square root; the backward denominator is floored to avoid the
    /// infinite slope at zero.
    pub fn sqrt(&self, x: Var) -> Var {
        let value = self.value(x).mapv(f64::sqrt);
        self.unary(x, value, |ctx| {
            ctx.grad / &ctx.value.mapv(|y| (2.0 * y).max(1e-12))
        })
    }

    pub fn abs(&self, x: Var) -> Var {
        let value = self.value(x).mapv(f64::abs);
        self.unary(x, value, |ctx| {
            ctx.grad * &ctx.parents[0].mapv(|v| if v > 0.0 { 1.0 } else if v < 0.0 { -1.0 } else { 0.0 })
        })
    }

    pub fn exp(&self, x: Var) -> Var {
        let value = self.value(x).mapv(f64::exp);
        self.unary(x, value, |ctx| ctx.grad * ctx.value)
    }

    pub fn ln(&self, x: Var) -> Var {
        let value = self.value(x).mapv(f64::ln);
        self.unary(x, value, |ctx| ctx.grad / ctx.parents[0])
    }

    pub fn sigmoid(&self, x: Var) -> Var {
        let value = self.value(x).mapv(|v| 1.0 / (1.0 + (-v).exp()));
        self.unary(x, value, |ctx| {
            ctx.grad * &ctx.value.mapv(|y| y * (1.0 - y))
        })
    }

    pub fn tanh(&self, x: Var) -> Var {
        let value = self.value(x).mapv(f64::tanh);
        self.unary(x, value, |ctx| ctx.grad * &ctx.value.mapv(|y| 1.0 - y * y))
    }

    pub fn leaky_relu(&self, x: Var, slope: f64) -> Var {
        let value = self.value(x).mapv(|v| if v >= 0.0 { v } else { slope * v });
        self.unary(x, value, move |ctx| {
            ctx.grad * &ctx.parents[0].mapv(|v| if v >= 0.0 { 1.0 } else { slope })
        })
    }

    /// Clamp to `[lo, hi]`; gradient passes only strictly inside the range.
    pub fn clamp(&self, x: Var, lo: f64, hi: f64) -> Var {
        let value = self.value(x).mapv(|v| v.clamp(lo, hi));
        self.unary(x, value, move |ctx| {
            ctx.grad
                * &ctx.parents[0].mapv(|v| if v > lo && v < hi { 1.0 } else { 0.0 })
        })
    }

    pub fn sum_all(&self, x: Var) -> Var {
        let value = ArrayD::from_elem(IxDyn(&[]), self.value(x).sum());
        self.unary(x, value, |ctx| {
            let g = *ctx.grad.iter().next().unwrap();
            ArrayD::from_elem(ctx.parents[0].raw_dim(), g)
        })
    }

    pub fn mean_all(&self, x: Var) -> Var {
        let v = self.value(x);
        let n = v.len() as f64;
        let value = ArrayD::from_elem(IxDyn(&[]), v.sum() / n);
        self.unary(x, value, move |ctx| {
            let g = *ctx.grad.iter().next().unwrap();
            ArrayD::from_elem(ctx.parents[0].raw_dim(), g / n)
        })
    }

    /// Sum over `axes`, keeping them as size-1 dims.
    pub fn sum_axes(&self, x: Var, axes: &[usize]) -> Var {
        let mut value = self.value(x);
        let mut sorted = axes.to_vec();
        sorted.sort_unstable();
        for &ax in sorted.iter().rev() {
            let mut s = value.sum_axis(Axis(ax));
            s.insert_axis_inplace(Axis(ax));
            value = s;
        }
        self.unary(x, value, |ctx| {
            bcast(ctx.grad, ctx.parents[0].shape())
        })
    }

    pub fn reshape(&self, x: Var, shape: &[usize]) -> Var {
        let v = self.value(x);
        assert_eq!(
            v.len(),
            shape.iter().product::<usize>(),
            "reshape {:?} -> {:?}",
            v.shape(),
            shape
        );
        let value = v.into_shape_with_order(IxDyn(shape)).expect("reshape");
        self.unary(x, value, |ctx| {
            ctx.grad
                .clone()
                .into_shape_with_order(ctx.parents[0].raw_dim())
                .expect("reshape backward")
        })
    }

    pub fn permute(&self, x: Var, axes: &[usize]) -> Var {
        let value = self
            .value(x)
            .permuted_axes(IxDyn(axes))
            .as_standard_layout()
            .to_owned();
        let axes_owned = axes.to_vec();
        self.unary(x, value, move |ctx| {
            let mut inv = vec![0usize; axes_owned.len()];
            for (i, &a) in axes_owned.iter().enumerate() {
                inv[a] = i;
            }
            ctx.grad
                .clone()
                .permuted_axes(IxDyn(&inv))
                .as_standard_layout()
                .to_owned()
        })
    }

    /// Contiguous slice `[start, end)` along each axis.
    pub fn slice(&self, x: Var, ranges: &[(usize, usize)]) -> Var {
        let v = self.value(x);
        assert_eq!(v.ndim(), ranges.len());
        let info: Vec<SliceInfoElem> = ranges
            .iter()
            .map(|&(s, e)| SliceInfoElem::Slice {
                start: s as isize,
                end: Some(e as isize),
                step: 1,
            })
            .collect();
        let value = v.slice(info.as_slice()).to_owned();
        let ranges_owned = ranges.to_vec();
        self.unary(x, value, move |ctx| {
            let mut g = ArrayD::zeros(ctx.parents[0].raw_dim());
            let info: Vec<SliceInfoElem> = ranges_owned
                .iter()
                .map(|&(s, e)| SliceInfoElem::Slice {
                    start: s as isize,
                    end: Some(e as isize),
                    step: 1,
                })
                .collect();
            g.slice_mut(info.as_slice()).assign(ctx.grad);
            g
        })
    }

    pub fn concat(&self, axis: usize, xs: &[Var]) -> Var {
        assert!(!xs.is_empty());
        let vals: Vec<ArrayD<f64>> = xs.iter().map(|&v| self.value(v)).collect();
        let views: Vec<_> = vals.iter().map(|v| v.view()).collect();
        let value = concatenate(Axis(axis), &views).expect("concat");
        let parents: Vec<usize> = xs.iter().map(|v| v.0).collect();
        self.push(
            value,
            parents,
            false,
            Some(Box::new(move |ctx, needs| {
                let mut out = Vec::with_capacity(ctx.parents.len());
                let mut offset = 0usize;
                for (i, p) in ctx.parents.iter().enumerate() {
                    let len = p.shape()[axis];
                    if needs[i] {
                        let g = ctx
                            .grad
                            .slice_axis(Axis(axis), ndarray::Slice::from(offset as isize..(offset + len) as isize))
                            .to_owned();
                        out.push(Some(g));
                    } else {
                        out.push(None);
                    }
                    offset += len;
                }
                out
            })),
        )
    }

    /// Softmax along `axis`.
    pub fn softmax(&self, x: Var, axis: usize) -> Var {
        let v = self.value(x);
        let max = v.map_axis(Axis(axis), |lane| {
            lane.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        });
        let mut maxk = max;
        maxk.insert_axis_inplace(Axis(axis));
        let e = (&v - &maxk).mapv(f64::exp);
        let mut sum = e.sum_axis(Axis(axis));
        sum.insert_axis_inplace(Axis(axis));
        let value = &e / &sum;
        self.unary(x, value, move |ctx| {
            let y = ctx.value;
            let gy = ctx.grad * y;
            let mut dot = gy.sum_axis(Axis(axis));
            dot.insert_axis_inplace(Axis(axis));
            &gy - &(y * &dot)
        })
    }

    /// 2-D matrix product.
    pub fn matmul(&self, a: Var, b: Var) -> Var {
        let va = self.value(a).into_dimensionality::<ndarray::Ix2>().expect("matmul lhs 2-d");
        let vb = self.value(b).into_dimensionality::<ndarray::Ix2>().expect("matmul rhs 2-d");
        let value = va.dot(&vb).into_dyn();
        self.binary(a, b, value, |ctx, na, nb| {
            let g = ctx.grad.view().into_dimensionality::<ndarray::Ix2>().unwrap();
            let pa = ctx.parents[0].view().into_dimensionality::<ndarray::Ix2>().unwrap();
            let pb = ctx.parents[1].view().into_dimensionality::<ndarray::Ix2>().unwrap();
            let ga = na.then(|| g.dot(&pb.t()).into_dyn());
            let gb = nb.then(|| pa.t().dot(&g).into_dyn());
            (ga, gb)
        })
    }
}
