//! Cycle-level simulation of the `M × N` systolic PE array.
//!
//! Every cycle each PE may consume one step: a `Q`-channel, `B`-image tile
//! pair arriving through its top (input) and left (weight) FIFO. Inputs move
//! down a column and weights move right along a row, one PE per cycle, so
//! PE `(i, j)` consumes a step `i + j` cycles after PE `(0, 0)`.
//!
//! Input tiles come from the banked input buffer through the three-stage
//! fetch pipeline, one fetch of `N` tiles per cycle. Weight entries arrive
//! over the external link at the start of each row-step iteration; a step
//! whose data has not arrived is not injected, which holds back its whole
//! wavefront.

use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

use crate::config::AcceleratorConfig;
use crate::engine::{accumulate_tile, prepare_weights, schedule_rows, ConvOptions, RowPlan};
use crate::error::{Error, Result};
use crate::layer::LayerDescriptor;
use crate::matrix::Matrix;
use crate::mem::{
    output_pingpong, weight_buffer_feed, AddressMap, BramMatrix, TileRequest, TraceRecord, WEIGHT_BUFFER_DEPTH,
};
use crate::report::{LayerRow, Report, ReportKind};
use crate::tensor::Tensor;

/// Depth of every PE-to-PE FIFO.
pub const FIFO_DEPTH: usize = 2;
/// Cycles from issuing a fetch to tiles leaving the plane pipeline.
pub const FETCH_PIPELINE: u64 = 3;

/// Blocks one PE from firing for a window of cycles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stall {
    pub pe: (usize, usize),
    pub from: u64,
    pub cycles: u64,
}

#[derive(Clone, Debug, Default)]
pub struct SimOptions {
    /// Record every bank access.
    pub memory_trace: bool,
    /// Fault injection for testing the skew checker.
    pub stall: Option<Stall>,
}

/// Consumption cycle of every step at every PE.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize)]
pub struct SkewTrace {
    pub pe_rows: usize,
    pub pe_cols: usize,
    /// `fire[i * N + j][s]`, steps numbered across the whole layer.
    pub fire: Vec<Vec<u64>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SkewViolation {
    pub pe: (usize, usize),
    pub step: usize,
    pub delta: i64,
    pub expected: i64,
}

/// Check that PE `(i, j)` consumes each step exactly `i + j` cycles after PE `(0, 0)`.
pub fn check_skew(trace: &SkewTrace) -> std::result::Result<(), SkewViolation> {
    let origin = &trace.fire[0];
    for i in 0..trace.pe_rows {
        for j in 0..trace.pe_cols {
            let fires = &trace.fire[i * trace.pe_cols + j];
            for (s, (&t, &t0)) in fires.iter().zip(origin).enumerate() {
                let delta = t as i64 - t0 as i64;
                if delta != (i + j) as i64 {
                    return Err(SkewViolation { pe: (i, j), step: s, delta, expected: (i + j) as i64 });
                }
            }
            if fires.len() != origin.len() {
                return Err(SkewViolation { pe: (i, j), step: fires.len(), delta: -1, expected: (i + j) as i64 });
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationReport {
    pub index: usize,
    pub steps: u64,
    /// From iteration start to the last output tile leaving the pipeline.
    pub compute_cycles: u64,
    /// External transfer time for weights, prefetch and drain.
    pub comm_cycles: u64,
    pub cycles: u64,
    /// Cycles the array edge waited on weights or fetches.
    pub stall_cycles: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    pub layer: String,
    pub rs: usize,
    pub iterations: Vec<IterationReport>,
    pub pre_cycles: u64,
    pub loop_cycles: u64,
    pub flush_cycles: u64,
    pub total_cycles: u64,
    /// Steps over all iterations.
    pub steps: u64,
    pub fifo_max_top: usize,
    pub fifo_max_left: usize,
    /// Busy cycles over total cycles, per PE (row-major).
    pub utilization: Vec<f64>,
    /// Busy fraction of PE (0,0) between its first and last step of each iteration.
    pub steady_utilization: f64,
    /// Per-iteration constant overhead: skew `M + N - 2`.
    pub skew_cycles: u64,
    /// Per-iteration constant overhead: fetch pipeline plus output pipeline.
    pub pipeline_cycles: u64,
    pub l_pipe: u64,
    #[serde(skip)]
    pub skew: SkewTrace,
    #[serde(skip)]
    pub memory_trace: Vec<TraceRecord>,
}

/// Decoded position of a step within an iteration.
#[derive(Clone, Copy, Debug)]
struct Step {
    od_block: usize,
    piece: usize,
    group: usize,
    tile_row: usize,
    col_block: usize,
}

struct Geometry {
    od_blocks: usize,
    pieces: usize,
    groups: usize,
    tile_rows: usize,
    col_blocks: usize,
}

impl Geometry {
    fn steps(&self) -> usize {
        self.od_blocks * self.pieces * self.groups * self.tile_rows * self.col_blocks
    }

    fn entry(&self, s: Step) -> usize {
        (s.od_block * self.pieces + s.piece) * self.groups + s.group
    }

    fn decode(&self, mut s: usize) -> Step {
        let col_block = s % self.col_blocks;
        s /= self.col_blocks;
        let tile_row = s % self.tile_rows;
        s /= self.tile_rows;
        let group = s % self.groups;
        s /= self.groups;
        let piece = s % self.pieces;
        Step { od_block: s / self.pieces, piece, group, tile_row, col_block }
    }
}

fn transfer_cycles(bytes: u64, bytes_per_cycle: f64) -> u64 {
    if bytes == 0 || bytes_per_cycle.is_infinite() {
        0
    } else {
        (bytes as f64 / bytes_per_cycle).ceil() as u64
    }
}

fn rows_in_image(rows: &std::ops::Range<isize>, ih: usize) -> u64 {
    (rows.end.min(ih as isize) - rows.start.max(0)).max(0) as u64
}

/// Simulate one convolution layer over a batch of `B` images.
pub fn simulate_layer(
    layer: &LayerDescriptor,
    config: &AcceleratorConfig,
    images: &[Tensor],
    weights: &Tensor,
) -> Result<(Vec<Tensor>, SimReport)> {
    simulate_layer_with(layer, config, images, weights, &SimOptions::default())
}

pub fn simulate_layer_with(
    layer: &LayerDescriptor,
    config: &AcceleratorConfig,
    images: &[Tensor],
    weights: &Tensor,
    opts: &SimOptions,
) -> Result<(Vec<Tensor>, SimReport)> {
    config.validate()?;
    layer.validate()?;
    let choice = layer.mode_choice()?;
    if choice.omega != config.omega {
        return Err(Error::Config(format!(
            "{}: layer mode F{} on an F{} array",
            layer.name, choice.omega, config.omega
        )));
    }
    if images.len() != config.batch {
        return Err(Error::Shape(format!("batch of {} images, config expects {}", images.len(), config.batch)));
    }
    for img in images {
        img.expect_dims("input", &layer.input.dims())?;
    }
    let plan: RowPlan = schedule_rows(layer, config)?;
    let pw = prepare_weights(layer, weights, &ConvOptions::default())?;
    let mode = &pw.mode;
    let (m, omega, k) = (mode.m(), mode.omega(), mode.k());
    let (big_m, big_n, q, b) = (config.pe_rows, config.pe_cols, config.q, config.batch);
    let (id, od, ih, iw, ow) = (layer.id(), layer.od(), layer.ih(), layer.iw(), layer.ow());
    let tiles_w = ow.div_ceil(m);
    let geo = Geometry {
        od_blocks: od.div_ceil(big_m),
        pieces: pw.pieces(),
        groups: id.div_ceil(q),
        tile_rows: plan.tile_rows_per_iteration(),
        col_blocks: ow.div_ceil(big_n * m),
    };
    let feed = weight_buffer_feed(omega, k, geo.pieces, id, od, q, big_m, WEIGHT_BUFFER_DEPTH)?;
    let bpc = config.bandwidth / config.freq_hz;
    let entry_bytes = (big_m * q * k * k) as u64;

    let map = AddressMap::new(config.h_b, config.w_b, geo.groups, iw, config.d_in).ring();
    let mut bram = BramMatrix::new(map, q * b, ih);
    let mut mem_trace = Vec::new();
    let mut scratch = Vec::new();
    let trace = |opts: &SimOptions, t: &mut Vec<TraceRecord>, s: &mut Vec<TraceRecord>| {
        if opts.memory_trace {
            t.append(s);
        } else {
            s.clear();
        }
    };

    let mut outs: Vec<Tensor> = (0..b).map(|_| Tensor::zeros(&layer.output.dims())).collect();
    let pes = big_m * big_n;
    let mut skew = SkewTrace { pe_rows: big_m, pe_cols: big_n, fire: vec![Vec::new(); pes] };
    let mut busy = vec![0u64; pes];
    let (mut fifo_max_top, mut fifo_max_left) = (0usize, 0usize);
    let mut steady_busy = 0u64;
    let mut steady_span = 0u64;

    // Preload.
    let pre_bytes = rows_in_image(&plan.preload, ih) * (id * iw * b) as u64;
    let pre_cycles = transfer_cycles(pre_bytes, bpc);
    bram.load_rows(0, images, q, plan.preload.clone(), &mut scratch)?;
    trace(opts, &mut mem_trace, &mut scratch);

    let mut now = pre_cycles;
    let mut iterations = Vec::with_capacity(plan.steps.len());
    let mut windows = Vec::with_capacity(plan.steps.len());
    let mut drain_words = Vec::with_capacity(plan.steps.len());
    let n_steps = geo.steps();
    let mut global_step = 0usize;

    for row_step in &plan.steps {
        let start = now;
        // The next block streams in while this one computes.
        if let Some(pf) = &row_step.prefetch {
            bram.load_rows(start, images, q, pf.clone(), &mut scratch)?;
            trace(opts, &mut mem_trace, &mut scratch);
        }
        let tr0 = row_step.compute.start / m;

        // Edge-ready time of each step: fetch pipeline and weight arrival.
        let mut ready = Vec::with_capacity(n_steps);
        let mut stall_cycles = 0u64;
        for s in 0..n_steps {
            let st = geo.decode(s);
            let e = geo.entry(st);
            let arrival = start + transfer_cycles((e as u64 + 1) * entry_bytes, bpc);
            let fetched = start + s as u64 + FETCH_PIPELINE;
            let prev = if s == 0 { 0 } else { ready[s - 1] + 1 };
            let r = fetched.max(arrival).max(prev);
            stall_cycles += r - fetched.max(prev);
            ready.push(r);
        }

        // Input tiles per step and column, transformed, keyed by step.
        let mut u_tiles: BTreeMap<usize, Vec<Option<Vec<Matrix>>>> = BTreeMap::new();
        let mut pending_cols: BTreeMap<usize, usize> = BTreeMap::new();

        let mut top: Vec<VecDeque<(usize, u64)>> = vec![VecDeque::new(); pes];
        let mut left: Vec<VecDeque<(usize, u64)>> = vec![VecDeque::new(); pes];
        let mut next_in = vec![0usize; big_n];
        let mut next_w = vec![0usize; big_m];
        let mut done = vec![0usize; pes];
        let mut fetched_upto = 0usize;
        let mut cycle = start;
        let mut last_progress = start;
        let mut last_fire = start;
        let mut first_fire_00 = None;
        let mut last_fire_00 = start;
        let mut busy_00 = 0u64;

        while done.iter().any(|&d| d < n_steps) {
            let mut progress = false;
            // Issue the fetch for every step whose data is due at the edge.
            while fetched_upto < n_steps && ready[fetched_upto] <= cycle + big_n as u64 {
                let s = fetched_upto;
                let st = geo.decode(s);
                let tr = tr0 + st.tile_row;
                let off = pw.offsets[st.piece];
                let req = TileRequest {
                    group: st.group,
                    r: (tr * m + off.0) as isize - layer.padding as isize,
                    c: (st.col_block * big_n * m + off.1) as isize - layer.padding as isize,
                    n: big_n,
                    omega,
                    m,
                };
                let fetch_cycle = ready[s].saturating_sub(FETCH_PIPELINE);
                let tiles = bram.fetch_tiles(fetch_cycle, &req, &mut scratch)?;
                trace(opts, &mut mem_trace, &mut scratch);
                let cols = tiles
                    .iter()
                    .enumerate()
                    .map(|(j, t)| {
                        let tc = st.col_block * big_n + j;
                        if tc >= tiles_w {
                            return Ok(None);
                        }
                        (0..q * b).map(|lane| mode.transform_input(&t.lane(lane))).collect::<Result<Vec<_>>>().map(Some)
                    })
                    .collect::<Result<Vec<_>>>()?;
                u_tiles.insert(s, cols);
                pending_cols.insert(s, big_n);
                fetched_upto += 1;
            }

            // Edge injection, skewed by row and column.
            for j in 0..big_n {
                let s = next_in[j];
                if s < n_steps && ready[s] + j as u64 <= cycle && s < fetched_upto && top[j].len() < FIFO_DEPTH {
                    top[j].push_back((s, cycle));
                    next_in[j] += 1;
                    progress = true;
                }
            }
            for i in 0..big_m {
                let s = next_w[i];
                if s < n_steps && ready[s] + i as u64 <= cycle && left[i * big_n].len() < FIFO_DEPTH {
                    left[i * big_n].push_back((s, cycle));
                    next_w[i] += 1;
                    progress = true;
                }
            }
            // PEs, downstream first so a pop frees space for an upstream push.
            for i in (0..big_m).rev() {
                for j in (0..big_n).rev() {
                    let p = i * big_n + j;
                    if let Some(f) = opts.stall {
                        if f.pe == (i, j) && cycle >= f.from && cycle < f.from + f.cycles {
                            continue;
                        }
                    }
                    let (Some(&(sa, ta)), Some(&(sb, tb))) = (top[p].front(), left[p].front()) else { continue };
                    if ta > cycle || tb > cycle {
                        continue;
                    }
                    assert_eq!(sa, sb, "input and weight streams out of step at PE ({i},{j})");
                    let down = (i + 1 < big_m).then(|| (i + 1) * big_n + j);
                    let right = (j + 1 < big_n).then(|| i * big_n + j + 1);
                    if down.is_some_and(|d| top[d].len() >= FIFO_DEPTH)
                        || right.is_some_and(|r| left[r].len() >= FIFO_DEPTH)
                    {
                        continue;
                    }
                    top[p].pop_front();
                    left[p].pop_front();
                    if let Some(d) = down {
                        top[d].push_back((sa, cycle + 1));
                    }
                    if let Some(r) = right {
                        left[r].push_back((sa, cycle + 1));
                    }

                    // Tile MAC over Q channels and B images, output transform, accumulate.
                    let st = geo.decode(sa);
                    let o = st.od_block * big_m + i;
                    let tc = st.col_block * big_n + j;
                    let entry = &feed.rows[i][geo.entry(st)];
                    debug_assert_eq!(entry.od, (o < od).then_some(o));
                    if let (Some(o), Some(us)) = (entry.od, u_tiles[&sa][j].as_ref()) {
                        let tr = tr0 + st.tile_row;
                        for (bi, out) in outs.iter_mut().enumerate() {
                            let mut e = Matrix::zeros(omega, omega);
                            for ch in entry.channels.clone() {
                                let lane = (ch - st.group * q) * b + bi;
                                e.fma_hadamard(&us[lane], pw.get(st.piece, o, ch))?;
                            }
                            accumulate_tile(out, o, tr, tc, &mode.transform_output(&e)?);
                        }
                    }
                    if i + 1 == big_m {
                        let left_cols = pending_cols.get_mut(&sa).expect("pending step");
                        *left_cols -= 1;
                        if *left_cols == 0 {
                            pending_cols.remove(&sa);
                            u_tiles.remove(&sa);
                        }
                    }

                    skew.fire[p].push(cycle);
                    busy[p] += 1;
                    done[p] += 1;
                    last_fire = cycle;
                    if p == 0 {
                        first_fire_00.get_or_insert(cycle);
                        last_fire_00 = cycle;
                        busy_00 += 1;
                    }
                    progress = true;
                }
            }

            fifo_max_top = fifo_max_top.max(top.iter().map(VecDeque::len).max().unwrap_or(0));
            fifo_max_left = fifo_max_left.max(left.iter().map(VecDeque::len).max().unwrap_or(0));

            if progress {
                last_progress = cycle;
            } else {
                let waiting_on_time = next_in.iter().any(|&s| s < n_steps && ready[s] > cycle)
                    || opts.stall.is_some_and(|f| cycle < f.from + f.cycles);
                if !waiting_on_time && cycle - last_progress > (big_m + big_n + 4) as u64 {
                    return Err(Error::Deadlock {
                        cycle,
                        detail: format!("{}: no PE can advance; done per PE {:?}", layer.name, done),
                    });
                }
            }
            cycle += 1;
        }

        let compute_cycles = last_fire + 1 + config.l_pipe - start;
        let in_rows = row_step.prefetch.as_ref().map_or(0, |r| rows_in_image(r, ih));
        let drain_rows = row_step.drain.as_ref().map_or(0, |r| r.len() as u64);
        let comm_bytes = feed.ddr_words as u64 + in_rows * (id * iw * b) as u64 + drain_rows * (od * ow * b) as u64;
        let comm_cycles = transfer_cycles(comm_bytes, bpc);
        let cycles = compute_cycles.max(comm_cycles);
        if let Some(f) = first_fire_00 {
            steady_busy += busy_00;
            steady_span += last_fire_00 - f + 1;
        }
        iterations.push(IterationReport {
            index: row_step.index,
            steps: n_steps as u64,
            compute_cycles,
            comm_cycles,
            cycles,
            stall_cycles,
        });
        windows.push((start, start + compute_cycles));
        drain_words.push((row_step.compute.len() * od * ow * b) as u64);
        now = start + cycles;
        global_step += n_steps;
    }
    debug_assert_eq!(skew.fire[0].len(), global_step);

    let pp = output_pingpong(&windows, &drain_words, bpc)?;
    let flush_words = *drain_words.last().unwrap_or(&0);
    let flush_cycles = transfer_cycles(flush_words, bpc);
    debug_assert!(pp.end <= now + flush_cycles);
    let loop_cycles: u64 = iterations.iter().map(|it| it.cycles).sum();
    let total_cycles = pre_cycles + loop_cycles + flush_cycles;
    let utilization = busy.iter().map(|&c| c as f64 / total_cycles.max(1) as f64).collect();
    let report = SimReport {
        layer: layer.name.clone(),
        rs: plan.rs,
        pre_cycles,
        loop_cycles,
        flush_cycles,
        total_cycles,
        steps: global_step as u64,
        fifo_max_top,
        fifo_max_left,
        utilization,
        steady_utilization: if steady_span == 0 { 0.0 } else { steady_busy as f64 / steady_span as f64 },
        skew_cycles: (big_m + big_n - 2) as u64,
        pipeline_cycles: FETCH_PIPELINE + config.l_pipe,
        l_pipe: config.l_pipe,
        iterations,
        skew,
        memory_trace: mem_trace,
    };
    Ok((outs, report))
}

impl SimReport {
    /// Row in the shared report shape; `t_comm` and `t_comp` are averages per
    /// iteration.
    pub fn row(&self, layer: &LayerDescriptor, config: &AcceleratorConfig) -> LayerRow {
        let n = self.iterations.len().max(1) as f64;
        let comm = self.iterations.iter().map(|it| it.comm_cycles as f64).sum::<f64>() / n;
        let comp = self.iterations.iter().map(|it| it.compute_cycles as f64).sum::<f64>() / n;
        let mut row = LayerRow::new(&self.layer, self.rs, self.iterations.len(), layer.ops());
        row.set_cycles(self.pre_cycles, comm, comp, self.loop_cycles, self.flush_cycles, config.freq_hz);
        let stall: u64 = self.iterations.iter().map(|it| it.stall_cycles).sum();
        for (k, v) in [
            ("steps", self.steps as f64),
            ("skew_cycles", self.skew_cycles as f64),
            ("pipeline_cycles", self.pipeline_cycles as f64),
            ("stall_cycles", stall as f64),
            ("fifo_max_top", self.fifo_max_top as f64),
            ("fifo_max_left", self.fifo_max_left as f64),
            ("steady_utilization", self.steady_utilization),
        ] {
            row.extra.insert(k.into(), v);
        }
        row
    }
}

/// Simulate every convolution layer of a network on its own random batch and
/// collect the rows. Returns the report and the per-layer sim reports.
pub fn simulate_network(
    layers: &[LayerDescriptor],
    config: &AcceleratorConfig,
    mut data: impl FnMut(&LayerDescriptor) -> Result<(Vec<Tensor>, Tensor)>,
    opts: &SimOptions,
) -> Result<(Report, Vec<SimReport>)> {
    let mut report = Report::new(ReportKind::Sim, config);
    let mut sims = Vec::new();
    for layer in layers.iter().filter(|l| l.is_conv()) {
        let (images, weights) = data(layer)?;
        let (_, rep) = simulate_layer_with(layer, config, &images, &weights, opts)?;
        report.layers.push(rep.row(layer, config));
        sims.push(rep);
    }
    report.finish();
    Ok((report, sims))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::conv_layer;
    use crate::layer::Shape3;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(
        id: usize,
        hw: usize,
        od: usize,
        k: usize,
        omega: usize,
        seed: u64,
    ) -> (LayerDescriptor, Vec<Tensor>, Tensor) {
        let layer =
            LayerDescriptor::conv("s", Shape3::new(id, hw, hw), od, (k, k), k / 2).unwrap().with_mode(omega).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let imgs = (0..2).map(|_| Tensor::random_int(&[id, hw, hw], -9, 9, &mut rng)).collect();
        let w = Tensor::random_int(&[id, od, k, k], -4, 4, &mut rng);
        (layer, imgs, w)
    }

    #[test]
    fn smallest_case() {
        let (layer, imgs, w) = setup(1, 2, 1, 1, 4, 1);
        let cfg = AcceleratorConfig::new(4, 1, 1, 1, 1024, 1024);
        let (out, rep) = simulate_layer(&layer, &cfg, &imgs, &w).unwrap();
        assert_eq!(out[0], conv_layer(&layer, &imgs[0], &w).unwrap());
        assert_eq!(rep.steps, 1);
        assert_eq!(rep.total_cycles, FETCH_PIPELINE + 1 + cfg.l_pipe);
    }

    #[test]
    fn matches_engine_and_skew() {
        let (layer, imgs, w) = setup(5, 7, 3, 3, 4, 2);
        let cfg = AcceleratorConfig::new(4, 2, 2, 2, 1024, 1024);
        let (out, rep) = simulate_layer(&layer, &cfg, &imgs, &w).unwrap();
        for (o, img) in out.iter().zip(&imgs) {
            assert_eq!(o, &conv_layer(&layer, img, &w).unwrap());
        }
        check_skew(&rep.skew).unwrap();
        assert!(rep.fifo_max_top <= FIFO_DEPTH && rep.fifo_max_left <= FIFO_DEPTH);
        assert_eq!(rep.total_cycles, rep.pre_cycles + rep.loop_cycles + rep.flush_cycles);
    }

    #[test]
    fn stall_is_detected_by_skew_check() {
        let (layer, imgs, w) = setup(4, 6, 4, 3, 4, 3);
        let cfg = AcceleratorConfig::new(4, 2, 2, 1, 1024, 1024);
        let opts = SimOptions { stall: Some(Stall { pe: (1, 0), from: 6, cycles: 3 }), ..Default::default() };
        let (out, rep) = simulate_layer_with(&layer, &cfg, &imgs, &w, &opts).unwrap();
        assert_eq!(out[1], conv_layer(&layer, &imgs[1], &w).unwrap());
        let v = check_skew(&rep.skew).unwrap_err();
        assert_eq!(v.pe, (1, 0));
    }

    #[test]
    fn two_by_two_lags() {
        let (layer, imgs, w) = setup(2, 4, 2, 3, 4, 4);
        let cfg = AcceleratorConfig::new(4, 2, 2, 1, 1024, 1024);
        let (_, rep) = simulate_layer(&layer, &cfg, &imgs, &w).unwrap();
        let lags: Vec<u64> = rep.skew.fire.iter().map(|f| f[0] - rep.skew.fire[0][0]).collect();
        assert_eq!(lags, vec![0, 1, 1, 2]);
    }
}
