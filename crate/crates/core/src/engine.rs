//! Layer-level Winograd convolution, the row-stationary schedule, and a small
//! reference graph executor.
//!
//! Output tiles that run past `OH × OW` are computed and discarded; input
//! reads outside the image return zero, which also realises the padding.

use std::collections::BTreeMap;
use std::ops::Range;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::AcceleratorConfig;
use crate::error::{Error, Result};
use crate::layer::{LayerDescriptor, LayerKind, ModeChoice};
use crate::matrix::Matrix;
use crate::mode::{make_mode, WinogradMode};
use crate::quant::quantize_matrix;
use crate::scalar::Scalar;
use crate::split::split_kernel;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConvOptions {
    /// Round transformed weights to this many fractional bits.
    pub weight_frac_bits: Option<u32>,
}

/// Transformed weights `V` for every (piece, od, id).
#[derive(Clone, Debug)]
pub struct PreparedWeights {
    pub mode: WinogradMode,
    pub choice: ModeChoice,
    /// Feature-map offsets `(ik, jk)` of the pieces.
    pub offsets: Vec<(usize, usize)>,
    id: usize,
    od: usize,
    v: Vec<Matrix>,
}

impl PreparedWeights {
    pub fn get(&self, piece: usize, od: usize, id: usize) -> &Matrix {
        &self.v[(piece * self.od + od) * self.id + id]
    }

    pub fn pieces(&self) -> usize {
        self.offsets.len()
    }
}

fn check_conv(layer: &LayerDescriptor, input: &Tensor, weights: &Tensor) -> Result<ModeChoice> {
    if layer.kind != LayerKind::Conv {
        return Err(Error::Unsupported(format!("{}: {} is not a convolution", layer.name, layer.kind)));
    }
    layer.validate()?;
    input.expect_dims("input", &layer.input.dims())?;
    weights.expect_dims("weights", &layer.weight_dims().expect("conv has weights"))?;
    layer.mode_choice()
}

pub fn prepare_weights(layer: &LayerDescriptor, weights: &Tensor, opts: &ConvOptions) -> Result<PreparedWeights> {
    let choice = layer.mode_choice()?;
    let mode = make_mode(choice.omega, choice.k)?;
    let (id, od) = (layer.id(), layer.od());
    let mut offsets = Vec::new();
    let mut per_kernel: Vec<Vec<Matrix>> = Vec::with_capacity(id * od);
    for i in 0..id {
        for o in 0..od {
            let plan = split_kernel(&weights.kernel(i, o), choice.k)?;
            if offsets.is_empty() {
                offsets = plan.pieces.iter().map(|p| p.offset(choice.k)).collect();
            }
            let vs = plan
                .pieces
                .iter()
                .map(|p| {
                    let v = mode.transform_kernel(&p.kernel)?;
                    Ok(match opts.weight_frac_bits {
                        Some(f) => quantize_matrix(&v, f),
                        None => v,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            per_kernel.push(vs);
        }
    }
    let pieces = offsets.len();
    let v = (0..pieces)
        .flat_map(|p| (0..od).flat_map(move |o| (0..id).map(move |i| (p, o, i))))
        .map(|(p, o, i)| per_kernel[i * od + o][p].clone())
        .collect();
    Ok(PreparedWeights { mode, choice, offsets, id, od, v })
}

/// The `ω × ω` input tile with top-left corner `(r0, c0)` in image coordinates.
pub fn gather_tile(input: &Tensor, id: usize, r0: isize, c0: isize, omega: usize) -> Matrix {
    Matrix::from_fn(omega, omega, |a, b| input.at3_padded(id, r0 + a as isize, c0 + b as isize))
}

/// Image coordinates of the input tile feeding output tile `(tr, tc)` through
/// the piece at `offset`.
pub fn tile_origin(tr: usize, tc: usize, m: usize, offset: (usize, usize), padding: usize) -> (isize, isize) {
    ((tr * m + offset.0) as isize - padding as isize, (tc * m + offset.1) as isize - padding as isize)
}

/// Add an `m × m` tile into `out[od]` at `(tr·m, tc·m)`, dropping rows/columns
/// past the edge.
pub fn accumulate_tile(out: &mut Tensor, od: usize, tr: usize, tc: usize, y: &Matrix) {
    let (oh, ow) = (out.dims()[1], out.dims()[2]);
    let m = y.rows();
    for a in 0..m {
        for b in 0..m {
            let (r, c) = (tr * m + a, tc * m + b);
            if r < oh && c < ow {
                out.add_at(&[od, r, c], y.get(a, b));
            }
        }
    }
}

pub fn conv_layer(layer: &LayerDescriptor, input: &Tensor, weights: &Tensor) -> Result<Tensor> {
    conv_layer_with(layer, input, weights, &ConvOptions::default())
}

/// Winograd convolution of one image; the channel sum is taken on `U ⊙ V`
/// before the output transform.
pub fn conv_layer_with(
    layer: &LayerDescriptor,
    input: &Tensor,
    weights: &Tensor,
    opts: &ConvOptions,
) -> Result<Tensor> {
    check_conv(layer, input, weights)?;
    let pw = prepare_weights(layer, weights, opts)?;
    let mode = &pw.mode;
    let (m, omega) = (mode.m(), mode.omega());
    let (tiles_h, tiles_w) = (layer.oh().div_ceil(m), layer.ow().div_ceil(m));
    let (id, od) = (layer.id(), layer.od());

    let tiles: Vec<(usize, usize)> = (0..tiles_h).flat_map(|r| (0..tiles_w).map(move |c| (r, c))).collect();
    let results: Vec<Vec<Matrix>> = tiles
        .par_iter()
        .map(|&(tr, tc)| {
            let mut ys = vec![Matrix::zeros(m, m); od];
            for (p, &off) in pw.offsets.iter().enumerate() {
                let (r0, c0) = tile_origin(tr, tc, m, off, layer.padding);
                let us = (0..id)
                    .map(|i| mode.transform_input(&gather_tile(input, i, r0, c0, omega)))
                    .collect::<Result<Vec<_>>>()?;
                for (o, y) in ys.iter_mut().enumerate() {
                    let mut e = Matrix::zeros(omega, omega);
                    for (i, u) in us.iter().enumerate() {
                        e.fma_hadamard(u, pw.get(p, o, i))?;
                    }
                    y.add_assign(&mode.transform_output(&e)?)?;
                }
            }
            Ok(ys)
        })
        .collect::<Result<_>>()?;

    let mut out = Tensor::zeros(&layer.output.dims());
    for (&(tr, tc), ys) in tiles.iter().zip(&results) {
        for (o, y) in ys.iter().enumerate() {
            accumulate_tile(&mut out, o, tr, tc, y);
        }
    }
    Ok(out)
}

/// Direct zero-padded stride-1 convolution.
pub fn direct_conv(input: &Tensor, weights: &Tensor, padding: usize) -> Result<Tensor> {
    let [id, ih, iw] = <[usize; 3]>::try_from(input.dims()).map_err(|_| Error::Shape("input must be 3-D".into()))?;
    let [wid, od, kh, kw] =
        <[usize; 4]>::try_from(weights.dims()).map_err(|_| Error::Shape("weights must be 4-D".into()))?;
    if wid != id {
        return Err(Error::Shape(format!("weights expect {wid} input channels, input has {id}")));
    }
    let (oh, ow) = match ((ih + 2 * padding + 1).checked_sub(kh), (iw + 2 * padding + 1).checked_sub(kw)) {
        (Some(a), Some(b)) if a > 0 && b > 0 => (a, b),
        _ => return Err(Error::Shape("kernel larger than padded input".into())),
    };
    let p = padding as isize;
    let mut out = Tensor::zeros(&[od, oh, ow]);
    for o in 0..od {
        for x in 0..oh {
            for y in 0..ow {
                let mut acc = Scalar::zero();
                for i in 0..id {
                    for u in 0..kh {
                        for v in 0..kw {
                            let w = weights.get(&[i, o, u, v]);
                            if !w.is_zero() {
                                acc += &(&input.at3_padded(i, (x + u) as isize - p, (y + v) as isize - p) * w);
                            }
                        }
                    }
                }
                out.set(&[o, x, y], acc);
            }
        }
    }
    Ok(out)
}

/// One row-stationary iteration of Algorithm 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RowStep {
    pub index: usize,
    /// Output rows computed in this iteration, clipped to `OH`.
    pub compute: Range<usize>,
    /// Input rows the computation reads (image coordinates, may be negative).
    pub input: Range<isize>,
    /// Input rows fetched for the next iteration.
    pub prefetch: Option<Range<isize>>,
    /// Output rows of the previous iteration drained to external memory.
    pub drain: Option<Range<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RowPlan {
    pub rs: usize,
    pub m: usize,
    /// Height of the (possibly split-padded) kernel.
    pub kernel_rows: usize,
    pub preload: Range<isize>,
    pub steps: Vec<RowStep>,
    pub flush: Range<usize>,
}

impl RowPlan {
    pub fn iterations(&self) -> usize {
        self.steps.len()
    }

    pub fn tile_rows_per_iteration(&self) -> usize {
        self.rs / self.m
    }
}

/// `⌈log2 x⌉` for `x ≥ 1`.
pub fn ceil_log2(x: usize) -> u32 {
    x.max(1).next_power_of_two().trailing_zeros()
}

/// Low-field width of the input address map for a layer.
pub fn low_bits(iw: usize, w_b: usize, channel_words: usize) -> u32 {
    ceil_log2(iw.div_ceil(w_b) * channel_words)
}

/// Output tiles one address of a PE's `ω × ω` output bank matrix holds.
pub fn tiles_per_out_entry(omega: usize, m: usize) -> usize {
    (omega / m).pow(2)
}

/// Output-buffer addresses needed per PE for `RS` rows.
pub fn out_entries(layer: &LayerDescriptor, config: &AcceleratorConfig, m: usize, rs: usize) -> usize {
    let tiles = layer.ow().div_ceil(config.pe_cols * m) * rs.div_ceil(m) * layer.od().div_ceil(config.pe_rows);
    tiles.div_ceil(tiles_per_out_entry(config.omega, m))
}

/// Input-bank words needed to hold the current and the next row block.
pub fn in_entries(layer: &LayerDescriptor, config: &AcceleratorConfig, choice: &ModeChoice, rs: usize) -> usize {
    let kh = choice.split.padded_h().max(choice.omega);
    let rows = 2 * rs + kh - 1;
    rows.div_ceil(config.h_b) << low_bits(layer.iw(), config.w_b, layer.id().div_ceil(config.q))
}

/// Row-stationary iteration plan with the largest feasible row step.
pub fn schedule_rows(layer: &LayerDescriptor, config: &AcceleratorConfig) -> Result<RowPlan> {
    let choice = layer.mode_choice()?;
    let m = choice.m;
    let oh = layer.oh();
    let max_t = oh.div_ceil(m);
    let fits = |t: usize| {
        let rs = t * m;
        out_entries(layer, config, m, rs) <= config.d_out && in_entries(layer, config, &choice, rs) <= config.d_in
    };
    let Some(t) = (1..=max_t).rev().find(|&t| fits(t)) else {
        let rs = m;
        return Err(Error::Infeasible(format!(
            "{}: even RS = {m} needs {} output entries (D_out = {}) and {} input words (D_in = {})",
            layer.name,
            out_entries(layer, config, m, rs),
            config.d_out,
            in_entries(layer, config, &choice, rs),
            config.d_in
        )));
    };
    Ok(plan_with_rs(layer, &choice, t * m))
}

/// Plan for a given row step (a multiple of `m`).
pub fn plan_with_rs(layer: &LayerDescriptor, choice: &ModeChoice, rs: usize) -> RowPlan {
    assert!(rs > 0 && rs.is_multiple_of(choice.m), "RS must be a positive multiple of m");
    let oh = layer.oh();
    let p = layer.padding as isize;
    let kh = choice.split.padded_h();
    let rows_in = |r: usize| -> Range<isize> {
        let start = r as isize - p;
        start..start + (rs + kh - 1) as isize
    };
    let n = oh.div_ceil(rs);
    let steps = (0..n)
        .map(|i| {
            let r = i * rs;
            RowStep {
                index: i,
                compute: r..(r + rs).min(oh),
                input: rows_in(r),
                prefetch: (i + 1 < n).then(|| {
                    let cur = rows_in(r);
                    let next = rows_in(r + rs);
                    cur.end.max(next.start)..next.end
                }),
                drain: (i > 0).then(|| (r - rs)..r),
            }
        })
        .collect::<Vec<_>>();
    let last = (n - 1) * rs;
    RowPlan { rs, m: choice.m, kernel_rows: kh, preload: rows_in(0), steps, flush: last..oh }
}

/// Execute the loop nest of the systolic array functionally:
/// row step, `OD/M`, (piece, `ID/Q` group), `RS/m`, `OW/(N·m)`, `M`, `N`.
///
/// Each PE sums `U ⊙ V` over its `Q` channels, applies the output transform,
/// and adds the tile into the output buffer, so channel groups are combined
/// after the transform.
pub fn tiled_loop_reference(
    layer: &LayerDescriptor,
    config: &AcceleratorConfig,
    input: &Tensor,
    weights: &Tensor,
) -> Result<Tensor> {
    check_conv(layer, input, weights)?;
    config.validate()?;
    if config.omega != layer.mode_choice()?.omega {
        return Err(Error::Config(format!("{}: layer mode does not match omega {}", layer.name, config.omega)));
    }
    let plan = schedule_rows(layer, config)?;
    let pw = prepare_weights(layer, weights, &ConvOptions::default())?;
    let mode = &pw.mode;
    let (m, omega) = (mode.m(), mode.omega());
    let (big_m, big_n, q) = (config.pe_rows, config.pe_cols, config.q);
    let (id, od) = (layer.id(), layer.od());
    let tiles_w = layer.ow().div_ceil(m);
    let groups = id.div_ceil(q);
    let col_blocks = layer.ow().div_ceil(big_n * m);
    let mut out = Tensor::zeros(&layer.output.dims());

    for step in &plan.steps {
        let tr0 = step.compute.start / m;
        let tile_rows = plan.tile_rows_per_iteration();
        // U for every tile of this row block, shared by all output channels.
        let mut u_cache: BTreeMap<(usize, usize, usize, usize), Matrix> = BTreeMap::new();
        for ob in 0..od.div_ceil(big_m) {
            for p in 0..pw.pieces() {
                for g in 0..groups {
                    for t in 0..tile_rows {
                        let tr = tr0 + t;
                        for cb in 0..col_blocks {
                            for i in 0..big_m {
                                let o = ob * big_m + i;
                                if o >= od {
                                    continue;
                                }
                                for j in 0..big_n {
                                    let tc = cb * big_n + j;
                                    if tc >= tiles_w {
                                        continue;
                                    }
                                    let mut e = Matrix::zeros(omega, omega);
                                    for ch in g * q..((g + 1) * q).min(id) {
                                        let u = match u_cache.get(&(p, ch, tr, tc)) {
                                            Some(u) => u,
                                            None => {
                                                let (r0, c0) = tile_origin(tr, tc, m, pw.offsets[p], layer.padding);
                                                let u = mode.transform_input(&gather_tile(input, ch, r0, c0, omega))?;
                                                u_cache.entry((p, ch, tr, tc)).or_insert(u)
                                            }
                                        };
                                        e.fma_hadamard(u, pw.get(p, o, ch))?;
                                    }
                                    accumulate_tile(&mut out, o, tr, tc, &mode.transform_output(&e)?);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Weights by layer name for [`run_graph`].
pub type Params = BTreeMap<String, Tensor>;

fn pool(layer: &LayerDescriptor, x: &Tensor) -> Tensor {
    let (k, s, p) = (layer.kernel_h, layer.stride, layer.padding as isize);
    let area = Scalar::from_int((k * k) as i64);
    Tensor::from_fn(&layer.output.dims(), |idx| {
        let (c, oy, ox) = (idx[0], idx[1], idx[2]);
        let window = (0..k).flat_map(|a| (0..k).map(move |b| (a, b)));
        let coords = window.map(|(a, b)| ((oy * s + a) as isize - p, (ox * s + b) as isize - p));
        match layer.kind {
            LayerKind::MaxPool => coords
                .filter(|&(r, cc)| r >= 0 && cc >= 0 && (r as usize) < layer.ih() && (cc as usize) < layer.iw())
                .map(|(r, cc)| x.at3_padded(c, r, cc))
                .max()
                .unwrap_or_else(Scalar::zero),
            _ => &coords.map(|(r, cc)| x.at3_padded(c, r, cc)).sum::<Scalar>() / &area,
        }
    })
}

fn fully_connected(layer: &LayerDescriptor, x: &Tensor, w: &Tensor) -> Result<Tensor> {
    w.expect_dims(&format!("{} weights", layer.name), &layer.weight_dims().expect("fc has weights"))?;
    let n = layer.input.volume();
    let mut out = Tensor::zeros(&layer.output.dims());
    for o in 0..layer.od() {
        let acc: Scalar = (0..n).map(|i| &x.data()[i] * w.get(&[i, o, 0, 0])).sum();
        out.set(&[o, 0, 0], acc);
    }
    Ok(out)
}

/// Run a topologically ordered layer list on one image.
pub fn run_graph(layers: &[LayerDescriptor], params: &Params, input: &Tensor) -> Result<Tensor> {
    let mut outputs: BTreeMap<&str, Tensor> = BTreeMap::new();
    let mut x = input.clone();
    for layer in layers {
        x.expect_dims(&format!("input of {}", layer.name), &layer.input.dims())?;
        let weights =
            || params.get(&layer.name).ok_or_else(|| Error::Config(format!("{}: missing weights", layer.name)));
        let y = match layer.kind {
            LayerKind::Conv => conv_layer(layer, &x, weights()?)?,
            LayerKind::MaxPool | LayerKind::AvgPool => pool(layer, &x),
            LayerKind::Relu => x.map(|v| if v.is_negative() { Scalar::zero() } else { v.clone() }),
            LayerKind::FullyConnected => fully_connected(layer, &x, weights()?)?,
            LayerKind::EltwiseAdd => {
                let from = layer.from.as_deref().unwrap_or_default();
                let other = outputs
                    .get(from)
                    .ok_or_else(|| Error::Config(format!("{}: unknown `from` layer `{from}`", layer.name)))?;
                other.expect_dims(&format!("{} operand", layer.name), x.dims())?;
                let data = x.data().iter().zip(other.data()).map(|(a, b)| a + b).collect();
                Tensor::from_vec(x.dims(), data)?
            }
        };
        outputs.insert(&layer.name, y.clone());
        x = y;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layer::Shape3;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn conv(id: usize, h: usize, w: usize, od: usize, k: (usize, usize), p: usize, omega: usize) -> LayerDescriptor {
        LayerDescriptor::conv("t", Shape3::new(id, h, w), od, k, p).unwrap().with_mode(omega).unwrap()
    }

    #[test]
    fn identity_one_by_one() {
        let layer = conv(3, 5, 6, 3, (1, 1), 0, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Tensor::random_int(&[3, 5, 6], -50, 50, &mut rng);
        let w = Tensor::from_fn(&[3, 3, 1, 1], |i| Scalar::from_int((i[0] == i[1]) as i64));
        assert_eq!(conv_layer(&layer, &x, &w).unwrap(), x);
    }

    #[test]
    fn matches_direct_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (omega, k, p) in [(4, (3, 3), 1), (6, (3, 3), 1), (4, (7, 7), 3), (6, (5, 5), 0), (6, (1, 7), 0)] {
            let layer = conv(3, 9, 10, 2, k, p, omega);
            let x = Tensor::random_int(&[3, 9, 10], -20, 20, &mut rng);
            let w = Tensor::random_int(&[3, 2, k.0, k.1], -5, 5, &mut rng);
            assert_eq!(conv_layer(&layer, &x, &w).unwrap(), direct_conv(&x, &w, p).unwrap(), "{omega} {k:?}");
        }
    }

    #[test]
    fn missing_mode_and_bad_shapes() {
        let layer = LayerDescriptor::conv("t", Shape3::new(1, 4, 4), 1, (3, 3), 0).unwrap();
        let x = Tensor::zeros(&[1, 4, 4]);
        let w = Tensor::zeros(&[1, 1, 3, 3]);
        assert!(matches!(conv_layer(&layer, &x, &w), Err(Error::Config(_))));
        let layer = layer.with_mode(4).unwrap();
        assert!(matches!(conv_layer(&layer, &Tensor::zeros(&[2, 4, 4]), &w), Err(Error::Shape(_))));
        let mut strided = layer.clone();
        strided.stride = 2;
        assert!(matches!(conv_layer(&strided, &x, &w), Err(Error::Unsupported(_))));
    }

    #[test]
    fn single_iteration_plan() {
        let layer = conv(1, 4, 4, 1, (3, 3), 1, 4);
        let cfg = AcceleratorConfig::new(4, 1, 1, 1, 1024, 1024);
        let plan = schedule_rows(&layer, &cfg).unwrap();
        assert_eq!(plan.rs, 4);
        assert_eq!(plan.iterations(), 1);
        assert_eq!(plan.preload, -1..5);
        assert_eq!(plan.flush, 0..4);
        assert_eq!(plan.steps[0].prefetch, None);
        assert_eq!(plan.steps[0].drain, None);
    }

    #[test]
    fn infeasible_when_output_buffer_too_small() {
        let layer = conv(1, 8, 64, 64, (3, 3), 1, 4);
        let cfg = AcceleratorConfig::new(4, 1, 1, 1, 1024, 4);
        // 32 tiles per row pair and channel, four tiles per address.
        assert_eq!(out_entries(&layer, &cfg, 2, 2), 32 * 64 / 4);
        assert!(matches!(schedule_rows(&layer, &cfg), Err(Error::Infeasible(_))));
    }

    #[test]
    fn low_bits_examples() {
        assert_eq!(low_bits(224, 8, 3), 7);
        assert_eq!(low_bits(8, 8, 1), 0);
        assert_eq!(ceil_log2(5), 3);
    }

    #[test]
    fn graph_conv_relu_maxpool() {
        let x = Tensor::from_i64(&[1, 4, 4], &[1, -2, 3, 0, 4, 5, -6, 7, -8, 9, 1, 2, 3, -4, 5, 6]).unwrap();
        let c = conv(1, 4, 4, 1, (1, 1), 0, 4);
        let r = LayerDescriptor::relu("r", c.output);
        let p = LayerDescriptor::pool("p", LayerKind::MaxPool, c.output, 2, 2).unwrap();
        let mut params = Params::new();
        params.insert("t".into(), Tensor::from_i64(&[1, 1, 1, 1], &[-1]).unwrap());
        let y = run_graph(&[c, r, p], &params, &x).unwrap();
        // Negated input, rectified, then 2x2 max.
        assert_eq!(y, Tensor::from_i64(&[1, 2, 2], &[2, 6, 8, 0]).unwrap());
    }

    #[test]
    fn empty_graph_is_identity() {
        let x = Tensor::from_i64(&[1, 1, 2], &[3, 4]).unwrap();
        assert_eq!(run_graph(&[], &Params::new(), &x).unwrap(), x);
    }
}
