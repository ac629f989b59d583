//! Convolution ops (1-d/2-d/3-d, plus transposed variants) via im2col + GEMM.
//!
//! Layouts follow the usual channels-first convention:
//! conv2d `x:(N,C,H,W) w:(F,C,kh,kw)`, conv3d `x:(N,C,D,H,W) w:(F,C,kd,kh,kw)`,
//! transposed convs take `w:(C,F,..)`.

use super::{Tape, Var};
use ndarray::{Array2, ArrayD, ArrayViewD, Axis, IxDyn};

#[derive(Clone, Copy)]
struct Geom2 {
    c: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    sh: usize,
    sw: usize,
    ph: usize,
    pw: usize,
    oh: usize,
    ow: usize,
}

fn conv_out(size: usize, k: usize, s: usize, p: usize) -> usize {
    assert!(
        size + 2 * p >= k,
        "kernel {k} larger than padded input {size}+2*{p}"
    );
    (size + 2 * p - k) / s + 1
}

/// Gather image windows into a `(c*kh*kw, oh*ow)` matrix.
fn im2col2(img: &[f64], g: Geom2) -> Array2<f64> {
    let mut cols = Array2::<f64>::zeros((g.c * g.kh * g.kw, g.oh * g.ow));
    let cs = cols.as_slice_mut().unwrap();
    for c in 0..g.c {
        for ki in 0..g.kh {
            for kj in 0..g.kw {
                let row = (c * g.kh + ki) * g.kw + kj;
                let base = row * g.oh * g.ow;
                for oy in 0..g.oh {
                    let iy = (oy * g.sh + ki) as isize - g.ph as isize;
                    if iy < 0 || iy >= g.h as isize {
                        continue;
                    }
                    let src_row = c * g.h * g.w + iy as usize * g.w;
                    let dst_row = base + oy * g.ow;
                    for ox in 0..g.ow {
                        let ix = (ox * g.sw + kj) as isize - g.pw as isize;
                        if ix >= 0 && ix < g.w as isize {
                            cs[dst_row + ox] = img[src_row + ix as usize];
                        }
                    }
                }
            }
        }
    }
    cols
}

/// Scatter-add a column matrix back into an image (inverse of [`im2col2`]).
fn col2im2(cols: &Array2<f64>, g: Geom2) -> Vec<f64> {
    let mut img = vec![0.0f64; g.c * g.h * g.w];
    let cs = cols.as_slice().unwrap();
    for c in 0..g.c {
        for ki in 0..g.kh {
            for kj in 0..g.kw {
                let row = (c * g.kh + ki) * g.kw + kj;
                let base = row * g.oh * g.ow;
                for oy in 0..g.oh {
                    let iy = (oy * g.sh + ki) as isize - g.ph as isize;
                    if iy < 0 || iy >= g.h as isize {
                        continue;
                    }
                    let dst_row = c * g.h * g.w + iy as usize * g.w;
                    let src_row = base + oy * g.ow;
                    for ox in 0..g.ow {
                        let ix = (ox * g.sw + kj) as isize - g.pw as isize;
                        if ix >= 0 && ix < g.w as isize {
                            img[dst_row + ix as usize] += cs[src_row + ox];
                        }
                    }
                }
            }
        }
    }
    img
}

fn item_slice<'a>(x: &'a ArrayViewD<'a, f64>, n: usize, item_len: usize) -> &'a [f64] {
    &x.as_slice().expect("standard layout")[n * item_len..(n + 1) * item_len]
}

impl Tape {
    /// 2-d convolution. `x:(N,C,H,W)`, `w:(F,C,kh,kw)`, optional `b:(F)`.
    pub fn conv2d(&self, x: Var, w: Var, b: Option<Var>, stride: (usize, usize), pad: (usize, usize)) -> Var {
        let xv = self.value(x);
        let wv = self.value(w);
        let (n, c, h, wd) = dims4(xv.shape(), "conv2d input");
        let (f, wc, kh, kw) = dims4(wv.shape(), "conv2d weight");
        assert_eq!(c, wc, "conv2d channel mismatch");
        let g = Geom2 {
            c,
            h,
            w: wd,
            kh,
            kw,
            sh: stride.0,
            sw: stride.1,
            ph: pad.0,
            pw: pad.1,
            oh: conv_out(h, kh, stride.0, pad.0),
            ow: conv_out(wd, kw, stride.1, pad.1),
        };
        let w2 = wv
            .view()
            .into_shape_with_order((f, c * kh * kw))
            .unwrap()
            .to_owned();
        let mut out = ArrayD::<f64>::zeros(IxDyn(&[n, f, g.oh, g.ow]));
        {
            let xview = xv.view();
            let os = out.as_slice_mut().unwrap();
            for i in 0..n {
                let cols = im2col2(item_slice(&xview, i, c * h * wd), g);
                let y = w2.dot(&cols);
                os[i * f * g.oh * g.ow..(i + 1) * f * g.oh * g.ow]
                    .copy_from_slice(y.as_slice().unwrap());
            }
        }
        if let Some(bv) = b {
            let bval = self.value(bv);
            assert_eq!(bval.len(), f, "conv2d bias length");
            for i in 0..n {
                for ch in 0..f {
                    let bias = bval[[ch]];
                    out.index_axis_mut(Axis(0), i)
                        .index_axis_mut(Axis(0), ch)
                        .mapv_inplace(|v| v + bias);
                }
            }
        }
        let parents: Vec<usize> = match b {
            Some(bv) => vec![x.0, w.0, bv.0],
            None => vec![x.0, w.0],
        };
        let has_bias = b.is_some();
        self.push(
            out,
            parents,
            false,
            Some(Box::new(move |ctx, needs| {
                let xv = ctx.parents[0];
                let wv = ctx.parents[1];
                let gy = ctx.grad;
                let w2 = wv
                    .view()
                    .into_shape_with_order((f, c * kh * kw))
                    .unwrap()
                    .to_owned();
                let mut gx = needs[0].then(|| ArrayD::<f64>::zeros(xv.raw_dim()));
                let mut gw = needs[1].then(|| Array2::<f64>::zeros((f, c * kh * kw)));
                let gyv = gy.view();
                let xvv = xv.view();
                for i in 0..n {
                    let gy_n = Array2::from_shape_vec(
                        (f, g.oh * g.ow),
                        item_slice(&gyv, i, f * g.oh * g.ow).to_vec(),
                    )
                    .unwrap();
                    if let Some(gx) = gx.as_mut() {
                        let dcols = w2.t().dot(&gy_n);
                        let dimg = col2im2(&dcols, g);
                        gx.as_slice_mut().unwrap()[i * c * h * wd..(i + 1) * c * h * wd]
                            .copy_from_slice(&dimg);
                    }
                    if let Some(gw) = gw.as_mut() {
                        let cols = im2col2(item_slice(&xvv, i, c * h * wd), g);
                        *gw += &gy_n.dot(&cols.t());
                    }
                }
                let mut grads = vec![
                    gx,
                    gw.map(|m| m.into_shape_with_order(IxDyn(&[f, c, kh, kw])).unwrap()),
                ];
                if has_bias {
                    grads.push(needs[2].then(|| {
                        let mut gb = ArrayD::<f64>::zeros(IxDyn(&[f]));
                        for i in 0..n {
                            for ch in 0..f {
                                gb[[ch]] += gy
                                    .index_axis(Axis(0), i)
                                    .index_axis(Axis(0), ch)
                                    .sum();
                            }
                        }
                        gb
                    }));
                }
                grads
            })),
        )
    }

    /// Transposed 2-d convolution. `x:(N,C,H,W)`, `w:(C,F,kh,kw)`, output
    /// spatial size `(H-1)*stride - 2*pad + k`.
    pub fn conv_transpose2d(
        &self,
        x: Var,
        w: Var,
        b: Option<Var>,
        stride: (usize, usize),
        pad: (usize, usize),
    ) -> Var {
        let xv = self.value(x);
        let wv = self.value(w);
        let (n, c, h, wd) = dims4(xv.shape(), "conv_transpose2d input");
        let (wc, f, kh, kw) = dims4(wv.shape(), "conv_transpose2d weight");
        assert_eq!(c, wc, "conv_transpose2d channel mismatch");
        let oh = (h - 1) * stride.0 + kh - 2 * pad.0;
        let ow = (wd - 1) * stride.1 + kw - 2 * pad.1;
        // The "image" is the output; the input positions form the gather grid.
        let g = Geom2 {
            c: f,
            h: oh,
            w: ow,
            kh,
            kw,
            sh: stride.0,
            sw: stride.1,
            ph: pad.0,
            pw: pad.1,
            oh: h,
            ow: wd,
        };
        let w2 = wv
            .view()
            .into_shape_with_order((c, f * kh * kw))
            .unwrap()
            .to_owned();
        let mut out = ArrayD::<f64>::zeros(IxDyn(&[n, f, oh, ow]));
        {
            let xview = xv.view();
            let os = out.as_slice_mut().unwrap();
            for i in 0..n {
                let x_n = Array2::from_shape_vec(
                    (c, h * wd),
                    item_slice(&xview, i, c * h * wd).to_vec(),
                )
                .unwrap();
                let cols = w2.t().dot(&x_n);
                let img = col2im2(&cols, g);
                os[i * f * oh * ow..(i + 1) * f * oh * ow].copy_from_slice(&img);
            }
        }
        if let Some(bv) = b {
            let bval = self.value(bv);
            assert_eq!(bval.len(), f, "conv_transpose2d bias length");
            for i in 0..n {
                for ch in 0..f {
                    let bias = bval[[ch]];
                    out.index_axis_mut(Axis(0), i)
                        .index_axis_mut(Axis(0), ch)
                        .mapv_inplace(|v| v + bias);
                }
            }
        }
        let parents: Vec<usize> = match b {
            Some(bv) => vec![x.0, w.0, bv.0],
            None => vec![x.0, w.0],
        };
        let has_bias = b.is_some();
        self.push(
            out,
            parents,
            false,
            Some(Box::new(move |ctx, needs| {
                let xv = ctx.parents[0];
                let wv = ctx.parents[1];
                let gy = ctx.grad;
                let w2 = wv
                    .view()
                    .into_shape_with_order((c, f * kh * kw))
                    .unwrap()
                    .to_owned();
                let mut gx = needs[0].then(|| ArrayD::<f64>::zeros(xv.raw_dim()));
                let mut gw = needs[1].then(|| Array2::<f64>::zeros((c, f * kh * kw)));
                let gyv = gy.view();
                let xvv = xv.view();
                for i in 0..n {
                    let dcols = im2col2(item_slice(&gyv, i, f * oh * ow), g);
                    if let Some(gx) = gx.as_mut() {
                        let dx = w2.dot(&dcols);
                        gx.as_slice_mut().unwrap()[i * c * h * wd..(i + 1) * c * h * wd]
                            .copy_from_slice(dx.as_slice().unwrap());
                    }
                    if let Some(gw) = gw.as_mut() {
                        let x_n = Array2::from_shape_vec(
                            (c, h * wd),
                            item_slice(&xvv, i, c * h * wd).to_vec(),
                        )
                        .unwrap();
                        *gw += &x_n.dot(&dcols.t());
                    }
                }
                let mut grads = vec![
                    gx,
                    gw.map(|m| m.into_shape_with_order(IxDyn(&[c, f, kh, kw])).unwrap()),
                ];
                if has_bias {
                    grads.push(needs[2].then(|| {
                        let mut gb = ArrayD::<f64>::zeros(IxDyn(&[f]));
                        for i in 0..n {
                            for ch in 0..f {
                                gb[[ch]] += gy
                                    .index_axis(Axis(0), i)
                                    .index_axis(Axis(0), ch)
                                    .sum();
                            }
                        }
                        gb
                    }));
                }
                grads
            })),
        )
    }

    /// 1-d convolution over the last axis. `x:(N,C,L)`, `w:(F,C,k)`.
    pub fn conv1d(&self, x: Var, w: Var, b: Option<Var>, stride: usize, pad: usize) -> Var {
        let xs = self.shape(x);
        let ws = self.shape(w);
        assert_eq!(xs.len(), 3, "conv1d input must be (N,C,L)");
        assert_eq!(ws.len(), 3, "conv1d weight must be (F,C,k)");
        let x4 = self.reshape(x, &[xs[0], xs[1], 1, xs[2]]);
        let w4 = self.reshape(w, &[ws[0], ws[1], 1, ws[2]]);
        let y = self.conv2d(x4, w4, b, (1, stride), (0, pad));
        let ys = self.shape(y);
        self.reshape(y, &[ys[0], ys[1], ys[3]])
    }

    /// 3-d convolution. `x:(N,C,D,H,W)`, `w:(F,C,kd,kh,kw)`. Implemented by
    /// folding depth into the im2col channel axis of a 2-d pass per offset.
    pub fn conv3d(
        &self,
        x: Var,
        w: Var,
        b: Option<Var>,
        stride: (usize, usize, usize),
        pad: (usize, usize, usize),
    ) -> Var {
        let xv = self.value(x);
        let wv = self.value(w);
        let xs = xv.shape().to_vec();
        let ws = wv.shape().to_vec();
        assert_eq!(xs.len(), 5, "conv3d input must be (N,C,D,H,W)");
        assert_eq!(ws.len(), 5, "conv3d weight must be (F,C,kd,kh,kw)");
        let (n, c, d, h, wd) = (xs[0], xs[1], xs[2], xs[3], xs[4]);
        let (f, wc, kd, kh, kw) = (ws[0], ws[1], ws[2], ws[3], ws[4]);
        assert_eq!(c, wc, "conv3d channel mismatch");
        let od = conv_out(d, kd, stride.0, pad.0);
        let oh = conv_out(h, kh, stride.1, pad.1);
        let ow = conv_out(wd, kw, stride.2, pad.2);
        let g3 = Geom3 {
            c,
            d,
            h,
            w: wd,
            kd,
            kh,
            kw,
            s: stride,
            p: pad,
            od,
            oh,
            ow,
        };
        let w2 = wv
            .view()
            .into_shape_with_order((f, c * kd * kh * kw))
            .unwrap()
            .to_owned();
        let mut out = ArrayD::<f64>::zeros(IxDyn(&[n, f, od, oh, ow]));
        {
            let xview = xv.view();
            let os = out.as_slice_mut().unwrap();
            let item = c * d * h * wd;
            let oitem = f * od * oh * ow;
            for i in 0..n {
                let cols = im2col3(item_slice(&xview, i, item), g3);
                let y = w2.dot(&cols);
                os[i * oitem..(i + 1) * oitem].copy_from_slice(y.as_slice().unwrap());
            }
        }
        if let Some(bv) = b {
            let bval = self.value(bv);
            assert_eq!(bval.len(), f, "conv3d bias length");
            let plane = od * oh * ow;
            let os = out.as_slice_mut().unwrap();
            for i in 0..n {
                for ch in 0..f {
                    let bias = bval[[ch]];
                    let start = (i * f + ch) * plane;
                    for v in &mut os[start..start + plane] {
                        *v += bias;
                    }
                }
            }
        }
        let parents: Vec<usize> = match b {
            Some(bv) => vec![x.0, w.0, bv.0],
            None => vec![x.0, w.0],
        };
        let has_bias = b.is_some();
        self.push(
            out,
            parents,
            false,
            Some(Box::new(move |ctx, needs| {
                let xv = ctx.parents[0];
                let wv = ctx.parents[1];
                let gy = ctx.grad;
                let w2 = wv
                    .view()
                    .into_shape_with_order((f, c * kd * kh * kw))
                    .unwrap()
                    .to_owned();
                let mut gx = needs[0].then(|| ArrayD::<f64>::zeros(xv.raw_dim()));
                let mut gw = needs[1].then(|| Array2::<f64>::zeros((f, c * kd * kh * kw)));
                let gyv = gy.view();
                let xvv = xv.view();
                let item = c * d * h * wd;
                let oitem = f * od * oh * ow;
                for i in 0..n {
                    let gy_n = Array2::from_shape_vec(
                        (f, od * oh * ow),
                        item_slice(&gyv, i, oitem).to_vec(),
                    )
                    .unwrap();
                    if let Some(gx) = gx.as_mut() {
                        let dcols = w2.t().dot(&gy_n);
                        let dimg = col2im3(&dcols, g3);
                        gx.as_slice_mut().unwrap()[i * item..(i + 1) * item]
                            .copy_from_slice(&dimg);
                    }
                    if let Some(gw) = gw.as_mut() {
                        let cols = im2col3(item_slice(&xvv, i, item), g3);
                        *gw += &gy_n.dot(&cols.t());
                    }
                }
                let mut grads = vec![
                    gx,
                    gw.map(|m| {
                        m.into_shape_with_order(IxDyn(&[f, c, kd, kh, kw])).unwrap()
                    }),
                ];
                if has_bias {
                    grads.push(needs[2].then(|| {
                        let mut gb = ArrayD::<f64>::zeros(IxDyn(&[f]));
                        let plane = od * oh * ow;
                        let gys = gy.as_slice().unwrap();
                        for i in 0..n {
                            for ch in 0..f {
                                let start = (i * f + ch) * plane;
                                gb[[ch]] += gys[start..start + plane].iter().sum::<f64>();
                            }
                        }
                        gb
                    }));
                }
                grads
            })),
        )
    }

    /// Transposed 3-d convolution. `x:(N,C,D,H,W)`, `w:(C,F,kd,kh,kw)`.
    pub fn conv_transpose3d(
        &self,
        x: Var,
        w: Var,
        b: Option<Var>,
        stride: (usize, usize, usize),
        pad: (usize, usize, usize),
    ) -> Var {
        let xv = self.value(x);
        let wv = self.value(w);
        let xs = xv.shape().to_vec();
        let ws = wv.shape().to_vec();
        assert_eq!(xs.len(), 5, "conv_transpose3d input must be (N,C,D,H,W)");
        assert_eq!(ws.len(), 5, "conv_transpose3d weight must be (C,F,kd,kh,kw)");
        let (n, c, d, h, wd) = (xs[0], xs[1], xs[2], xs[3], xs[4]);
        let (wc, f, kd, kh, kw) = (ws[0], ws[1], ws[2], ws[3], ws[4]);
        assert_eq!(c, wc, "conv_transpose3d channel mismatch");
        let od = (d - 1) * stride.0 + kd - 2 * pad.0;
        let oh = (h - 1) * stride.1 + kh - 2 * pad.1;
        let ow = (wd - 1) * stride.2 + kw - 2 * pad.2;
        let g3 = Geom3 {
            c: f,
            d: od,
            h: oh,
            w: ow,
            kd,
            kh,
            kw,
            s: stride,
            p: pad,
            od: d,
            oh: h,
            ow: wd,
        };
        let w2 = wv
            .view()
            .into_shape_with_order((c, f * kd * kh * kw))
            .unwrap()
            .to_owned();
        let mut out = ArrayD::<f64>::zeros(IxDyn(&[n, f, od, oh, ow]));
        {
            let xview = xv.view();
            let os = out.as_slice_mut().unwrap();
            let item = c * d * h * wd;
            let oitem = f * od * oh * ow;
            for i in 0..n {
                let x_n = Array2::from_shape_vec(
                    (c, d * h * wd),
                    item_slice(&xview, i, item).to_vec(),
                )
                .unwrap();
                let cols = w2.t().dot(&x_n);
                let img = col2im3(&cols, g3);
                os[i * oitem..(i + 1) * oitem].copy_from_slice(&img);
            }
        }
        if let Some(bv) = b {
            let bval = self.value(bv);
            assert_eq!(bval.len(), f, "conv_transpose3d bias length");
            let plane = od * oh * ow;
            let os = out.as_slice_mut().unwrap();
            for i in 0..n {
                for ch in 0..f {
                    let bias = bval[[ch]];
                    let start = (i * f + ch) * plane;
                    for v in &mut os[start..start + plane] {
                        *v += bias;
                    }
                }
            }
        }
        let parents: Vec<usize> = match b {
            Some(bv) => vec![x.0, w.0, bv.0],
            None => vec![x.0, w.0],
        };
        let has_bias = b.is_some();
        self.push(
            out,
            parents,
            false,
            Some(Box::new(move |ctx, needs| {
                let xv = ctx.parents[0];
                let wv = ctx.parents[1];
                let gy = ctx.grad;
                let w2 = wv
                    .view()
                    .into_shape_with_order((c, f * kd * kh * kw))
                    .unwrap()
                    .to_owned();
                let mut gx = needs[0].then(|| ArrayD::<f64>::zeros(xv.raw_dim()));
                let mut gw = needs[1].then(|| Array2::<f64>::zeros((c, f * kd * kh * kw)));
                let gyv = gy.view();
                let xvv = xv.view();
                let item = c * d * h * wd;
                let oitem = f * od * oh * ow;
                for i in 0..n {
                    let dcols = im2col3(item_slice(&gyv, i, oitem), g3);
                    if let Some(gx) = gx.as_mut() {
                        let dx = w2.dot(&dcols);
                        gx.as_slice_mut().unwrap()[i * item..(i + 1) * item]
                            .copy_from_slice(dx.as_slice().unwrap());
                    }
                    if let Some(gw) = gw.as_mut() {
                        let x_n = Array2::from_shape_vec(
                            (c, d * h * wd),
                            item_slice(&xvv, i, item).to_vec(),
                        )
                        .unwrap();
                        *gw += &x_n.dot(&dcols.t());
                    }
                }
                let mut grads = vec![
                    gx,
                    gw.map(|m| {
                        m.into_shape_with_order(IxDyn(&[c, f, kd, kh, kw])).unwrap()
                    }),
                ];
                if has_bias {
                    grads.push(needs[2].then(|| {
                        let mut gb = ArrayD::<f64>::zeros(IxDyn(&[f]));
                        let plane = od * oh * ow;
                        let gys = gy.as_slice().unwrap();
                        for i in 0..n {
                            for ch in 0..f {
                                let start = (i * f + ch) * plane;
                                gb[[ch]] += gys[start..start + plane].iter().sum::<f64>();
                            }
                        }
                        gb
                    }));
                }
                grads
            })),
        )
    }
}

#[derive(Clone, Copy)]
struct Geom3 {
    c: usize,
    d: usize,
    h: usize,
    w: usize,
    kd: usize,
    kh: usize,
    kw: usize,
    s: (usize, usize, usize),
    p: (usize, usize, usize),
    od: usize,
    oh: usize,
    ow: usize,
}

fn im2col3(img: &[f64], g: Geom3) -> Array2<f64> {
    let rows = g.c * g.kd * g.kh * g.kw;
    let cols_n = g.od * g.oh * g.ow;
    let mut cols = Array2::<f64>::zeros((rows, cols_n));
    let cs = cols.as_slice_mut().unwrap();
    for c in 0..g.c {
        for kt in 0..g.kd {
            for ki in 0..g.kh {
                for kj in 0..g.kw {
                    let row = ((c * g.kd + kt) * g.kh + ki) * g.kw + kj;
                    let base = row * cols_n;
                    for ot in 0..g.od {
                        let it = (ot * g.s.0 + kt) as isize - g.p.0 as isize;
                        if it < 0 || it >= g.d as isize {
                            continue;
                        }
                        for oy in 0..g.oh {
                            let iy = (oy * g.s.1 + ki) as isize - g.p.1 as isize;
                            if iy < 0 || iy >= g.h as isize {
                                continue;
                            }
                            let src_row =
                                ((c * g.d + it as usize) * g.h + iy as usize) * g.w;
                            let dst_row = base + (ot * g.oh + oy) * g.ow;
                            for ox in 0..g.ow {
                                let ix = (ox * g.s.2 + kj) as isize - g.p.2 as isize;
                                if ix >= 0 && ix < g.w as isize {
                                    cs[dst_row + ox] = img[src_row + ix as usize];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    cols
}

fn col2im3(cols: &Array2<f64>, g: Geom3) -> Vec<f64> {
    let mut img = vec![0.0f64; g.c * g.d * g.h * g.w];
    let cols_n = g.od * g.oh * g.ow;
    let cs = cols.as_slice().unwrap();
    for c in 0..g.c {
        for kt in 0..g.kd {
            for ki in 0..g.kh {
                for kj in 0..g.kw {
                    let row = ((c * g.kd + kt) * g.kh + ki) * g.kw + kj;
                    let base = row * cols_n;
                    for ot in 0..g.od {
                        let it = (ot * g.s.0 + kt) as isize - g.p.0 as isize;
                        if it < 0 || it >= g.d as isize {
                            continue;
                        }
                        for oy in 0..g.oh {
                            let iy = (oy * g.s.1 + ki) as isize - g.p.1 as isize;
                            if iy < 0 || iy >= g.h as isize {
                                continue;
                            }
                            let dst_row =
                                ((c * g.d + it as usize) * g.h + iy as usize) * g.w;
                            let src_row = base + (ot * g.oh + oy) * g.ow;
                            for ox in 0..g.ow {
                                let ix = (ox * g.s.2 + kj) as isize - g.p.2 as isize;
                                if ix >= 0 && ix < g.w as isize {
                                    img[dst_row + ix as usize] += cs[src_row + ox];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    img
}

fn dims4(shape: &[usize], what: &str) -> (usize, usize, usize, usize) {
    assert_eq!(shape.len(), 4, "{what} must be 4-d, got {shape:?}");
    (shape[0], shape[1], shape[2], shape[3])
}
