//! Accelerator parameters and platform presets.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mode::supported_kernels;

/// Hardware parameter tuple of one accelerator instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AcceleratorConfig {
    pub omega: usize,
    /// Systolic rows `M`; each row owns a slice of output channels.
    pub pe_rows: usize,
    /// Systolic columns `N`; each column owns one tile along the width.
    pub pe_cols: usize,
    /// Input channels per PE cycle.
    pub q: usize,
    pub batch: usize,
    pub h_b: usize,
    pub w_b: usize,
    pub d_in: usize,
    pub d_out: usize,
    pub freq_hz: f64,
    /// External bandwidth in bytes per second.
    pub bandwidth: f64,
    pub dsp_total: usize,
    pub bram_total: usize,
    /// Additive non-PE overhead reported next to the formula values.
    pub dsp_slack: usize,
    pub bram_slack: usize,
    /// Output transform and adder tree depth.
    pub l_pipe: u64,
}

pub const DEFAULT_BATCH: usize = 2;
pub const DEFAULT_L_PIPE: u64 = 4;

/// Bank rows for a filter size.
pub fn default_h_b(omega: usize) -> usize {
    if omega <= 4 {
        4
    } else {
        8
    }
}

/// Smallest power of two at least `2ω`.
pub fn default_w_b(omega: usize) -> usize {
    (2 * omega).next_power_of_two()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Platform {
    pub name: &'static str,
    pub dsp: usize,
    pub bram: usize,
    pub freq_hz: f64,
    pub bandwidth: f64,
}

pub const ULTRA96: Platform = Platform { name: "ultra96", dsp: 360, bram: 432, freq_hz: 250e6, bandwidth: 10.664e9 };
pub const ZCU102_F4: Platform =
    Platform { name: "zcu102-f4", dsp: 2520, bram: 1824, freq_hz: 250e6, bandwidth: 21.328e9 };
pub const ZCU102_F6: Platform =
    Platform { name: "zcu102-f6", dsp: 2520, bram: 1824, freq_hz: 214e6, bandwidth: 21.328e9 };

impl AcceleratorConfig {
    /// Config with the derived bank grid, batch 2 and unconstrained budgets.
    pub fn new(omega: usize, pe_rows: usize, pe_cols: usize, q: usize, d_in: usize, d_out: usize) -> Self {
        AcceleratorConfig {
            omega,
            pe_rows,
            pe_cols,
            q,
            batch: DEFAULT_BATCH,
            h_b: default_h_b(omega),
            w_b: default_w_b(omega),
            d_in,
            d_out,
            freq_hz: 100e6,
            bandwidth: f64::INFINITY,
            dsp_total: usize::MAX,
            bram_total: usize::MAX,
            dsp_slack: 0,
            bram_slack: 0,
            l_pipe: DEFAULT_L_PIPE,
        }
    }

    pub fn on_platform(mut self, p: &Platform) -> Self {
        self.freq_hz = p.freq_hz;
        self.bandwidth = p.bandwidth;
        self.dsp_total = p.dsp;
        self.bram_total = p.bram;
        self
    }

    /// Published Ultra96 F4 instance.
    pub fn ultra96_f4() -> Self {
        Self::new(4, 2, 1, 4, 4096, 1024).on_platform(&ULTRA96)
    }

    /// Published ZCU102 F4 instance.
    pub fn zcu102_f4() -> Self {
        Self::new(4, 8, 2, 4, 8192, 1024).on_platform(&ZCU102_F4)
    }

    /// Published ZCU102 F6 instance.
    pub fn zcu102_f6() -> Self {
        Self::new(6, 4, 2, 4, 4096, 1024).on_platform(&ZCU102_F6)
    }

    /// Structural checks; budgets are checked by the resource model.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if supported_kernels(self.omega).is_empty() {
            return bad(format!("omega must be 4 or 6, got {}", self.omega));
        }
        if self.pe_rows == 0 || self.pe_cols == 0 || self.q == 0 {
            return bad("M, N and Q must be positive".into());
        }
        if self.batch != DEFAULT_BATCH {
            return bad(format!("batch is fixed at {DEFAULT_BATCH}, got {}", self.batch));
        }
        if self.omega > self.h_b {
            return bad(format!("omega {} exceeds bank rows H_b = {}", self.omega, self.h_b));
        }
        if self.w_b < 2 * self.omega {
            return bad(format!("W_b = {} is below 2*omega", self.w_b));
        }
        if self.pe_cols * self.omega > self.w_b {
            return bad(format!(
                "N*omega = {} exceeds bank columns W_b = {}; the tile union would wrap onto itself",
                self.pe_cols * self.omega,
                self.w_b
            ));
        }
        if self.d_in == 0 || self.d_out == 0 {
            return bad("buffer depths must be positive".into());
        }
        if self.freq_hz.is_nan() || self.freq_hz <= 0.0 || self.bandwidth.is_nan() || self.bandwidth <= 0.0 {
            return bad("frequency and bandwidth must be positive".into());
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        format!(
            "F{} M={} N={} Q={} B={} D_in={} D_out={}",
            self.omega, self.pe_rows, self.pe_cols, self.q, self.batch, self.d_in, self.d_out
        )
    }
}
