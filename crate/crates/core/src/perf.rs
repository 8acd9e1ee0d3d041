//! Closed-form resource and latency models, the theoretical DSP-efficiency
//! calculator, and the design-space explorer.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{default_h_b, default_w_b, AcceleratorConfig};
use crate::engine::schedule_rows;
use crate::error::{Error, Result};
use crate::layer::{select_mode, LayerDescriptor};
use crate::mem::{weight_buffer_feed, WEIGHT_BUFFER_DEPTH};
use crate::report::{LayerRow, Report, ReportKind};

/// DSPs in one PE, `ω²·B·Q`.
pub fn dsp_per_pe(config: &AcceleratorConfig) -> usize {
    config.omega * config.omega * config.batch * config.q
}

/// `ω²·M·N·B·Q`.
pub fn dsp_usage(config: &AcceleratorConfig) -> usize {
    dsp_per_pe(config) * config.pe_rows * config.pe_cols
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BramUsage {
    /// Input bank matrix, `H_b·W_b·⌈8B/18⌉·⌈D_in/1024⌉`.
    pub input: usize,
    /// Weight buffers, `M·⌈16ω²Q/18⌉`.
    pub weight: usize,
    /// Ping-pong output buffers, `2·M·N·ω²·B·⌈D_out/1024⌉`.
    pub output: usize,
    pub total: usize,
}

pub fn bram_usage(config: &AcceleratorConfig) -> BramUsage {
    let c = config;
    let w2 = c.omega * c.omega;
    let input = c.h_b * c.w_b * (8 * c.batch).div_ceil(18) * c.d_in.div_ceil(1024);
    let weight = c.pe_rows * (16 * w2 * c.q).div_ceil(18);
    let output = 2 * c.pe_rows * c.pe_cols * w2 * c.batch * c.d_out.div_ceil(1024);
    BramUsage { input, weight, output, total: input + weight + output }
}

/// Latency terms of one convolution layer, in seconds. `t_comm` and `t_comp`
/// are per iteration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerModel {
    pub name: String,
    pub rs: usize,
    pub iterations: usize,
    pub splits: usize,
    pub d_weight: usize,
    pub d_input: usize,
    pub d_output: usize,
    /// PE steps per iteration.
    pub steps: u64,
    pub t_pre: f64,
    pub t_comm: f64,
    pub t_comp: f64,
    pub t_loop: f64,
    pub t_post: f64,
    pub t_total: f64,
}

fn transfer(bytes: usize, bw: f64) -> f64 {
    if bw.is_finite() {
        bytes as f64 / bw
    } else {
        0.0
    }
}

pub fn latency_model(layer: &LayerDescriptor, config: &AcceleratorConfig) -> Result<LayerModel> {
    layer.validate()?;
    config.validate()?;
    let choice = layer.mode_choice()?;
    if choice.omega != config.omega {
        return Err(Error::Config(format!(
            "{}: layer mode F{} on an F{} array",
            layer.name, choice.omega, config.omega
        )));
    }
    let plan = schedule_rows(layer, config)?;
    let (rs, m, k, splits) = (plan.rs, choice.m, choice.k, choice.splits());
    let (id, od, oh, ow, iw) = (layer.id(), layer.od(), layer.oh(), layer.ow(), layer.iw());
    let (b, bw, f) = (config.batch, config.bandwidth, config.freq_hz);

    let d_weight = splits * k * k * id * od;
    let d_input = rs * id * iw * b;
    let d_output = rs * od * ow * b;
    let steps = (splits
        * id.div_ceil(config.q)
        * od.div_ceil(config.pe_rows)
        * rs.div_ceil(m)
        * ow.div_ceil(config.pe_cols * m)) as u64;
    let t_comm = transfer(d_weight + d_input + d_output, bw);
    let t_comp = steps as f64 / f;
    let iterations = oh.div_ceil(rs);
    let t_loop = iterations as f64 * t_comm.max(t_comp);
    let pre_rows = (rs + layer.kernel_h).saturating_sub(layer.padding);
    let t_pre = transfer(pre_rows * id * iw * b, bw);
    let t_post = transfer(d_output, bw);
    Ok(LayerModel {
        name: layer.name.clone(),
        rs,
        iterations,
        splits,
        d_weight,
        d_input,
        d_output,
        steps,
        t_pre,
        t_comm,
        t_comp,
        t_loop,
        t_post,
        t_total: t_pre + t_loop + t_post,
    })
}

impl LayerModel {
    pub fn row(&self, layer: &LayerDescriptor, config: &AcceleratorConfig) -> LayerRow {
        let f = config.freq_hz;
        let mut row = LayerRow::new(&self.name, self.rs, self.iterations, layer.ops());
        row.set_times(self.t_pre, self.t_comm, self.t_comp, self.t_loop, self.t_post, f);
        row.extra.insert("splits".into(), self.splits as f64);
        row.extra.insert("steps_per_iteration".into(), self.steps as f64);
        row.extra.insert("d_weight".into(), self.d_weight as f64);
        row.extra.insert("d_input".into(), self.d_input as f64);
        row.extra.insert("d_output".into(), self.d_output as f64);
        row
    }
}

/// Model every convolution layer of a network; other layers are skipped.
pub fn model_network(layers: &[LayerDescriptor], config: &AcceleratorConfig) -> Result<Report> {
    let mut report = Report::new(ReportKind::Model, config);
    for layer in layers.iter().filter(|l| l.is_conv()) {
        report.layers.push(latency_model(layer, config)?.row(layer, config));
    }
    report.finish();
    Ok(report)
}

/// GOPS per DSP of the best mode for an `H_t × W_t` kernel at frequency `f`,
/// counting a MAC as two operations.
pub fn theoretical_dsp_efficiency(omega: usize, kh: usize, kw: usize, freq_hz: f64) -> Result<f64> {
    let c = select_mode(omega, kh, kw)?;
    let w2 = (omega * omega) as f64;
    Ok(2.0 * (c.m * c.m) as f64 * (kh * kw) as f64 * freq_hz / (c.splits() as f64 * w2) / 1e9)
}

/// Resource and platform limits for [`explore`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Budgets {
    pub dsp: usize,
    pub bram: usize,
    pub freq_hz: f64,
    pub bandwidth: f64,
}

pub const M_CANDIDATES: [usize; 16] = [1, 2, 3, 4, 5, 6, 8, 10, 12, 16, 20, 24, 32, 48, 64, 128];
pub const N_CANDIDATES: [usize; 2] = [1, 2];
pub const Q_CANDIDATES: [usize; 4] = [1, 2, 4, 8];
pub const DEPTH_CANDIDATES: [usize; 4] = [1024, 2048, 4096, 8192];

/// Every structurally valid grid point for `omega` under `budgets`, before the
/// budget and schedulability checks.
pub fn grid(omega: usize, budgets: &Budgets) -> Vec<AcceleratorConfig> {
    let mut out = Vec::new();
    for &m in &M_CANDIDATES {
        for &n in &N_CANDIDATES {
            for &q in &Q_CANDIDATES {
                for &d_in in &DEPTH_CANDIDATES {
                    for &d_out in &DEPTH_CANDIDATES {
                        let mut c = AcceleratorConfig::new(omega, m, n, q, d_in, d_out);
                        c.h_b = default_h_b(omega);
                        c.w_b = default_w_b(omega);
                        c.freq_hz = budgets.freq_hz;
                        c.bandwidth = budgets.bandwidth;
                        c.dsp_total = budgets.dsp;
                        c.bram_total = budgets.bram;
                        if c.validate().is_ok() {
                            out.push(c);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Why a grid point was rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rejection {
    Dsp,
    Bram,
    Schedule,
}

/// Layers with the `omega` mode assigned; non-convolution layers are dropped.
pub fn conv_layers(layers: &[LayerDescriptor], omega: usize) -> Result<Vec<LayerDescriptor>> {
    layers.iter().filter(|l| l.is_conv()).map(|l| l.clone().with_mode(omega)).collect()
}

/// `Σ t_total` of `config`, or why it is infeasible.
pub fn objective(convs: &[LayerDescriptor], config: &AcceleratorConfig) -> std::result::Result<f64, Rejection> {
    if dsp_usage(config) + config.dsp_slack > config.dsp_total {
        return Err(Rejection::Dsp);
    }
    if bram_usage(config).total + config.bram_slack > config.bram_total {
        return Err(Rejection::Bram);
    }
    let mut total = 0.0;
    for l in convs {
        let choice = l.mode_choice().map_err(|_| Rejection::Schedule)?;
        weight_buffer_feed(
            choice.omega,
            choice.k,
            choice.splits(),
            l.id(),
            l.od(),
            config.q,
            config.pe_rows,
            WEIGHT_BUFFER_DEPTH,
        )
        .map_err(|_| Rejection::Schedule)?;
        total += latency_model(l, config).map_err(|_| Rejection::Schedule)?.t_total;
    }
    Ok(total)
}

/// Total order used to pick among grid points.
pub fn rank(a: (f64, &AcceleratorConfig), b: (f64, &AcceleratorConfig)) -> Ordering {
    let key = |c: &AcceleratorConfig| (dsp_usage(c), bram_usage(c).total, c.pe_rows, c.pe_cols, c.q, c.d_in, c.d_out);
    a.0.total_cmp(&b.0).then_with(|| key(a.1).cmp(&key(b.1)))
}

#[derive(Clone, Debug, Serialize)]
pub struct Exploration {
    pub config: AcceleratorConfig,
    pub objective: f64,
    pub evaluated: usize,
    pub feasible: usize,
    pub report: Report,
}

/// Exhaustive search minimising `Σ t_total` over the grid.
pub fn explore(layers: &[LayerDescriptor], budgets: &Budgets, omega: usize) -> Result<Exploration> {
    let convs = conv_layers(layers, omega)?;
    if convs.is_empty() {
        return Err(Error::Config("no convolution layers to explore".into()));
    }
    if budgets.dsp == 0
        || budgets.bram == 0
        || budgets.freq_hz.is_nan()
        || budgets.freq_hz <= 0.0
        || budgets.bandwidth.is_nan()
        || budgets.bandwidth <= 0.0
    {
        return Err(Error::Config("budgets must be positive".into()));
    }
    let points = grid(omega, budgets);
    let scored: Vec<(AcceleratorConfig, std::result::Result<f64, Rejection>)> = points
        .into_par_iter()
        .map(|c| {
            let o = objective(&convs, &c);
            (c, o)
        })
        .collect();
    let evaluated = scored.len();
    let best = scored.iter().filter_map(|(c, o)| o.as_ref().ok().map(|&v| (v, c))).min_by(|a, b| rank(*a, *b));
    let feasible = scored.iter().filter(|(_, o)| o.is_ok()).count();
    let Some((objective, config)) = best else {
        return Err(Error::Infeasible(infeasibility(&scored, omega, budgets)));
    };
    let config = config.clone();
    let report = model_network(&convs, &config)?;
    Ok(Exploration { config, objective, evaluated, feasible, report })
}

fn infeasibility(
    scored: &[(AcceleratorConfig, std::result::Result<f64, Rejection>)],
    omega: usize,
    budgets: &Budgets,
) -> String {
    let count = |r: Rejection| scored.iter().filter(|(_, o)| *o == Err(r)).count();
    let smallest_pe = omega * omega * crate::config::DEFAULT_BATCH;
    if count(Rejection::Dsp) == scored.len() {
        format!("DSP budget {} is binding: the smallest PE needs {smallest_pe} DSPs", budgets.dsp)
    } else if count(Rejection::Schedule) == 0 {
        let min_bram = scored.iter().map(|(c, _)| bram_usage(c).total).min().unwrap_or(0);
        format!("BRAM budget {} is binding: the smallest DSP-feasible point needs {min_bram} BRAMs", budgets.bram)
    } else {
        format!(
            "no grid point fits: {} over the DSP budget, {} over the BRAM budget, {} with layers that do not fit the buffers",
            count(Rejection::Dsp),
            count(Rejection::Bram),
            count(Rejection::Schedule)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layer::Shape3;

    #[test]
    fn per_pe_dsp() {
        assert_eq!(dsp_per_pe(&AcceleratorConfig::new(4, 1, 1, 4, 1024, 1024)), 128);
        assert_eq!(dsp_per_pe(&AcceleratorConfig::new(6, 1, 1, 4, 1024, 1024)), 288);
        assert_eq!(dsp_usage(&AcceleratorConfig::zcu102_f4()), 2048);
    }

    #[test]
    fn bram_hand_example() {
        let u = bram_usage(&AcceleratorConfig::new(4, 1, 1, 1, 1024, 1024));
        assert_eq!((u.input, u.weight, u.output, u.total), (32, 15, 64, 111));
        let v = bram_usage(&AcceleratorConfig::new(4, 1, 1, 1, 1024, 2048));
        assert_eq!((v.input, v.weight, v.output), (32, 15, 128));
    }

    #[test]
    fn published_bram() {
        assert_eq!(bram_usage(&AcceleratorConfig::ultra96_f4()).total, 370);
        assert_eq!(bram_usage(&AcceleratorConfig::zcu102_f4()).total, 1736);
        assert_eq!(bram_usage(&AcceleratorConfig::zcu102_f6()).total, 2176);
    }

    #[test]
    fn compute_bound_limit() {
        let layer = LayerDescriptor::conv("c", Shape3::new(16, 20, 20), 16, (3, 3), 1).unwrap().with_mode(4).unwrap();
        let cfg = AcceleratorConfig::new(4, 2, 2, 4, 1024, 1024);
        let lm = latency_model(&layer, &cfg).unwrap();
        assert_eq!(lm.t_comm, 0.0);
        assert_eq!(lm.t_loop, lm.iterations as f64 * lm.t_comp);
        assert_eq!(lm.t_total, lm.t_loop);
    }

    #[test]
    fn efficiency_values() {
        let e = |o, h, w| theoretical_dsp_efficiency(o, h, w, 100e6).unwrap();
        assert!((e(4, 3, 3) - 0.45).abs() < 1e-12);
        assert!((e(6, 3, 3) - 0.8).abs() < 1e-12);
        assert!((e(4, 5, 5) - 0.3125).abs() < 1e-12);
    }

    #[test]
    fn budget_below_one_pe() {
        let layer = LayerDescriptor::conv("c", Shape3::new(4, 8, 8), 4, (3, 3), 1).unwrap();
        let b = Budgets { dsp: 16, bram: 10_000, freq_hz: 1e8, bandwidth: 1e10 };
        match explore(&[layer], &b, 4) {
            Err(Error::Infeasible(msg)) => assert!(msg.contains("DSP"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }
}
