//! One report shape for simulated and modelled runs, so the two can be diffed.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::config::AcceleratorConfig;
use crate::perf::{bram_usage, dsp_usage, BramUsage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportKind {
    Sim,
    Model,
}

/// Times are seconds, cycles are at the config clock. `t_comm` and `t_comp`
/// are per iteration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerRow {
    pub name: String,
    pub rs: usize,
    pub iterations: usize,
    /// Operations per image.
    pub ops: u64,
    pub t_pre: f64,
    pub t_comm: f64,
    pub t_comp: f64,
    pub t_loop: f64,
    pub t_post: f64,
    pub t_total: f64,
    pub cycles_pre: f64,
    pub cycles_loop: f64,
    pub cycles_post: f64,
    pub cycles_total: f64,
    pub extra: BTreeMap<String, f64>,
}

impl LayerRow {
    pub fn new(name: &str, rs: usize, iterations: usize, ops: u64) -> Self {
        LayerRow {
            name: name.to_string(),
            rs,
            iterations,
            ops,
            t_pre: 0.0,
            t_comm: 0.0,
            t_comp: 0.0,
            t_loop: 0.0,
            t_post: 0.0,
            t_total: 0.0,
            cycles_pre: 0.0,
            cycles_loop: 0.0,
            cycles_post: 0.0,
            cycles_total: 0.0,
            extra: BTreeMap::new(),
        }
    }

    pub fn set_times(&mut self, pre: f64, comm: f64, comp: f64, lp: f64, post: f64, freq_hz: f64) {
        (self.t_pre, self.t_comm, self.t_comp, self.t_loop, self.t_post) = (pre, comm, comp, lp, post);
        self.t_total = pre + lp + post;
        self.cycles_pre = pre * freq_hz;
        self.cycles_loop = lp * freq_hz;
        self.cycles_post = post * freq_hz;
        self.cycles_total = self.t_total * freq_hz;
    }

    pub fn set_cycles(&mut self, pre: u64, comm: f64, comp: f64, lp: u64, post: u64, freq_hz: f64) {
        self.set_times(
            pre as f64 / freq_hz,
            comm / freq_hz,
            comp / freq_hz,
            lp as f64 / freq_hz,
            post as f64 / freq_hz,
            freq_hz,
        );
        self.cycles_pre = pre as f64;
        self.cycles_loop = lp as f64;
        self.cycles_post = post as f64;
        self.cycles_total = (pre + lp + post) as f64;
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Totals {
    pub t_total: f64,
    pub cycles_total: f64,
    /// Operations for the whole batch.
    pub ops: u64,
    pub gops: f64,
    pub gops_per_dsp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Resources {
    pub dsp: usize,
    pub dsp_with_slack: usize,
    pub bram: BramUsage,
    pub bram_with_slack: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub kind: ReportKind,
    pub config: AcceleratorConfig,
    pub resources: Resources,
    pub layers: Vec<LayerRow>,
    pub totals: Totals,
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(kind: ReportKind, config: &AcceleratorConfig) -> Self {
        let dsp = dsp_usage(config);
        let bram = bram_usage(config);
        let mut notes = Vec::new();
        if dsp + config.dsp_slack > config.dsp_total {
            notes.push(format!("DSP use {} exceeds the {} available", dsp + config.dsp_slack, config.dsp_total));
        }
        if bram.total + config.bram_slack > config.bram_total {
            notes.push(format!(
                "BRAM use {} exceeds the {} available",
                bram.total + config.bram_slack,
                config.bram_total
            ));
        }
        Report {
            kind,
            config: config.clone(),
            resources: Resources {
                dsp,
                dsp_with_slack: dsp + config.dsp_slack,
                bram,
                bram_with_slack: bram.total + config.bram_slack,
            },
            layers: Vec::new(),
            totals: Totals::default(),
            notes,
        }
    }

    /// Recompute totals from the layer rows.
    pub fn finish(&mut self) {
        let t: f64 = self.layers.iter().map(|l| l.t_total).sum();
        let ops = self.layers.iter().map(|l| l.ops).sum::<u64>() * self.config.batch as u64;
        let gops = if t > 0.0 { ops as f64 / t / 1e9 } else { 0.0 };
        self.totals = Totals {
            t_total: t,
            cycles_total: self.layers.iter().map(|l| l.cycles_total).sum(),
            ops,
            gops,
            gops_per_dsp: gops / self.resources.dsp.max(1) as f64,
        };
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let kind = match self.kind {
            ReportKind::Sim => "simulation",
            ReportKind::Model => "model",
        };
        let c = &self.config;
        let _ = writeln!(s, "{kind}: {}", c.label());
        let _ = writeln!(s, "clock: {:.1} MHz, bandwidth: {}", c.freq_hz / 1e6, fmt_bw(c.bandwidth));
        let r = &self.resources;
        let _ = writeln!(s, "dsp: {} (with slack {})", r.dsp, r.dsp_with_slack);
        let _ = writeln!(
            s,
            "bram: {} = input {} + weight {} + output {} (with slack {})",
            r.bram.total, r.bram.input, r.bram.weight, r.bram.output, r.bram_with_slack
        );
        let _ = writeln!(
            s,
            "{:<12} {:>4} {:>5} {:>10} {:>10} {:>10} {:>10} {:>10} {:>12}",
            "layer", "RS", "iters", "pre_us", "comm_us", "comp_us", "loop_us", "post_us", "cycles"
        );
        for l in &self.layers {
            let _ = writeln!(
                s,
                "{:<12} {:>4} {:>5} {:>10.3} {:>10.3} {:>10.3} {:>10.3} {:>10.3} {:>12.0}",
                l.name,
                l.rs,
                l.iterations,
                l.t_pre * 1e6,
                l.t_comm * 1e6,
                l.t_comp * 1e6,
                l.t_loop * 1e6,
                l.t_post * 1e6,
                l.cycles_total
            );
        }
        let t = &self.totals;
        let _ = writeln!(s, "total: {:.3} us, {:.0} cycles", t.t_total * 1e6, t.cycles_total);
        let _ = writeln!(s, "throughput: {:.2} GOPS, {:.4} GOPS/DSP", t.gops, t.gops_per_dsp);
        for l in self.layers.iter().filter(|l| !l.extra.is_empty()) {
            let kv: Vec<String> = l.extra.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(s, "{}: {}", l.name, kv.join(" "));
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }
}

fn fmt_bw(bw: f64) -> String {
    if bw.is_finite() {
        format!("{:.3} GB/s", bw / 1e9)
    } else {
        "unlimited".into()
    }
}
