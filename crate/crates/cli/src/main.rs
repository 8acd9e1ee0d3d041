use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use winocnn_core::engine::Params;
use winocnn_core::mem::write_trace;
use winocnn_core::{
    conv_layer, direct_conv, explore, make_mode, model_network, parse_config, parse_model, read_tensor, run_graph,
    shrink_chain, simulate_network, write_tensor, AcceleratorConfig, Budgets, LayerDescriptor, NetworkModel, Shape3,
    SimOptions, Tensor,
};

#[derive(Parser)]
#[command(name = "winocnn", version, about = "Winograd CNN accelerator engine, simulator and models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the network functionally on one input tensor.
    Run(RunArgs),
    /// Cycle-level simulation of every convolution layer.
    Simulate(SimArgs),
    /// Analytical latency and resource model.
    Model(ModelArgs),
    /// Search the accelerator parameter grid under resource budgets.
    Explore(ExploreArgs),
    /// Check Winograd against direct convolution on every convolution layer.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct Platform {
    /// Accelerator config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Winograd filter size; selects a preset when no config is given.
    #[arg(long, value_parser = ["4", "6"])]
    omega: Option<String>,
    /// Clock frequency in Hz.
    #[arg(long)]
    freq: Option<f64>,
    /// External bandwidth in bytes per second.
    #[arg(long)]
    bw: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    model: PathBuf,
    /// Input feature map; random when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Directory holding `<layer>.bin` or `<layer>.txt` weight tensors; random when omitted.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Write the final tensor here (text when the name ends in `.txt`).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_parser = ["4", "6"])]
    omega: Option<String>,
    /// Divide the network input's spatial size by this factor.
    #[arg(long, default_value_t = 1)]
    shrink: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct SimArgs {
    model: PathBuf,
    #[command(flatten)]
    platform: Platform,
    /// Divide each layer's spatial size by this factor.
    #[arg(long, default_value_t = 1)]
    shrink: usize,
    /// Divide each layer's channel counts by this factor.
    #[arg(long, default_value_t = 1)]
    shrink_channels: usize,
    /// Write every input-bank access to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    report: Format,
}

#[derive(Args)]
struct ModelArgs {
    model: PathBuf,
    #[command(flatten)]
    platform: Platform,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    report: Format,
}

#[derive(Args)]
struct ExploreArgs {
    model: PathBuf,
    #[arg(long, value_parser = ["4", "6"], default_value = "4")]
    omega: String,
    /// DSP budget.
    #[arg(long)]
    dsp: usize,
    /// BRAM18 budget.
    #[arg(long)]
    bram: usize,
    #[arg(long, default_value_t = 250e6)]
    freq: f64,
    #[arg(long, default_value_t = 10.664e9)]
    bw: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    report: Format,
}

#[derive(Args)]
struct VerifyArgs {
    model: PathBuf,
    #[arg(long, value_parser = ["4", "6"])]
    omega: Option<String>,
    /// Divide each layer's spatial size by this factor.
    #[arg(long, default_value_t = 8)]
    shrink: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    report: Format,
}

fn omega_arg(s: &Option<String>) -> Option<usize> {
    s.as_deref().map(|v| v.parse().expect("validated by clap"))
}

fn load_model(path: &Path, omega: Option<usize>) -> Result<NetworkModel> {
    parse_model(path, omega).with_context(|| format!("reading model {}", path.display()))
}

fn resolve_config(p: &Platform) -> Result<AcceleratorConfig> {
    let omega = omega_arg(&p.omega);
    let mut cfg = match &p.config {
        Some(path) => {
            let c = parse_config(path).with_context(|| format!("reading config {}", path.display()))?;
            if let Some(o) = omega.filter(|&o| o != c.omega) {
                bail!("--omega {o} contradicts omega {} in {}", c.omega, path.display());
            }
            c
        }
        None if omega == Some(6) => AcceleratorConfig::zcu102_f6(),
        None => AcceleratorConfig::ultra96_f4(),
    };
    if let Some(f) = p.freq {
        cfg.freq_hz = f;
    }
    if let Some(b) = p.bw {
        cfg.bandwidth = b;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn rng_for(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64))
}

fn emit(format: Format, text: String, json: String) {
    match format {
        Format::Text => print!("{text}"),
        Format::Json => println!("{json}"),
    }
}

fn mode_label(layer: &LayerDescriptor) -> String {
    match layer.mode_choice().and_then(|c| Ok((make_mode(c.omega, c.k)?, c.splits()))) {
        Ok((mode, 1)) => mode.label(),
        Ok((mode, s)) => format!("{} x{s}", mode.label()),
        Err(_) => "-".into(),
    }
}

fn cmd_run(a: &RunArgs) -> Result<()> {
    let net = load_model(&a.model, omega_arg(&a.omega))?;
    let layers = shrink_chain(&net.layers, a.shrink)?;
    let first = layers.first().expect("parser rejects empty models");
    let input = match &a.input {
        Some(p) => read_tensor(p).with_context(|| format!("reading input {}", p.display()))?,
        None => Tensor::random_int(&first.input.dims(), -8, 8, &mut rng_for(a.seed, usize::MAX)),
    };
    let mut params = Params::new();
    for (i, l) in layers.iter().enumerate() {
        let Some(dims) = l.weight_dims() else { continue };
        let w = match &a.weights {
            Some(dir) => {
                let bin = dir.join(format!("{}.bin", l.name));
                let path = if bin.exists() { bin } else { dir.join(format!("{}.txt", l.name)) };
                read_tensor(&path).with_context(|| format!("reading weights {}", path.display()))?
            }
            None => Tensor::random_int(&dims, -4, 4, &mut rng_for(a.seed, i)),
        };
        w.expect_dims(&format!("{} weights", l.name), &dims)?;
        params.insert(l.name.clone(), w);
    }
    let y = run_graph(&layers, &params, &input)?;
    let dims: Vec<String> = y.dims().iter().map(usize::to_string).collect();
    println!("layers: {}", layers.len());
    println!("output: {}", dims.join("x"));
    if let (Some(lo), Some(hi)) = (y.data().iter().min(), y.data().iter().max()) {
        println!("range: [{lo}, {hi}]");
    }
    if let Some(p) = &a.output {
        write_tensor(p, &y).with_context(|| format!("writing {}", p.display()))?;
        println!("written: {}", p.display());
    }
    Ok(())
}

fn shrink_layer(l: &LayerDescriptor, s: usize, c: usize) -> Result<LayerDescriptor> {
    let spatial = l.shrunk(s)?;
    if c <= 1 {
        return Ok(spatial);
    }
    let input = Shape3::new((l.id() / c).max(1), spatial.ih(), spatial.iw());
    let mut out = LayerDescriptor::conv(&l.name, input, (l.od() / c).max(1), (l.kernel_h, l.kernel_w), l.padding)?;
    out.mode = l.mode;
    Ok(out)
}

fn cmd_simulate(a: &SimArgs) -> Result<()> {
    let cfg = resolve_config(&a.platform)?;
    let net = load_model(&a.model, Some(cfg.omega))?;
    let layers = net
        .layers
        .iter()
        .filter(|l| l.is_conv())
        .map(|l| shrink_layer(l, a.shrink, a.shrink_channels))
        .collect::<Result<Vec<_>>>()?;
    if layers.is_empty() {
        bail!("{} has no convolution layers", a.model.display());
    }
    let mut index = 0;
    let data = |l: &LayerDescriptor| {
        let mut rng = rng_for(a.seed, index);
        index += 1;
        let imgs = (0..cfg.batch).map(|_| Tensor::random_int(&l.input.dims(), -8, 8, &mut rng)).collect();
        let w = Tensor::random_int(&l.weight_dims().expect("conv has weights"), -4, 4, &mut rng);
        Ok((imgs, w))
    };
    let opts = SimOptions { memory_trace: a.trace.is_some(), ..Default::default() };
    let (mut report, sims) = simulate_network(&layers, &cfg, data, &opts)?;
    if a.shrink > 1 || a.shrink_channels > 1 {
        report.notes.push(format!("layers shrunk by {} spatially and {} in channels", a.shrink, a.shrink_channels));
    }
    if let Some(path) = &a.trace {
        let mut out = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        for s in &sims {
            writeln!(out, "# {}", s.layer)?;
            write_trace(&s.memory_trace, &mut out)?;
        }
        out.flush()?;
    }
    emit(a.report, report.to_text(), report.to_json());
    Ok(())
}

fn cmd_model(a: &ModelArgs) -> Result<()> {
    let cfg = resolve_config(&a.platform)?;
    let net = load_model(&a.model, Some(cfg.omega))?;
    let report = model_network(&net.layers, &cfg)?;
    emit(a.report, report.to_text(), report.to_json());
    Ok(())
}

fn cmd_explore(a: &ExploreArgs) -> Result<()> {
    let omega = omega_arg(&Some(a.omega.clone())).expect("has default");
    let net = load_model(&a.model, Some(omega))?;
    let budgets = Budgets { dsp: a.dsp, bram: a.bram, freq_hz: a.freq, bandwidth: a.bw };
    let ex = explore(&net.layers, &budgets, omega)?;
    let c = &ex.config;
    let text = format!(
        "chosen: M={} N={} Q={} D_in={} D_out={}\nobjective: {:.3} ms\nfeasible: {} of {} grid points\n\n{}",
        c.pe_rows,
        c.pe_cols,
        c.q,
        c.d_in,
        c.d_out,
        ex.objective * 1e3,
        ex.feasible,
        ex.evaluated,
        ex.report.to_text()
    );
    let json = serde_json::to_string_pretty(&ex)?;
    emit(a.report, text, json);
    Ok(())
}

struct Check {
    name: String,
    shapes: String,
    mode: String,
    result: std::result::Result<bool, String>,
}

fn cmd_verify(a: &VerifyArgs) -> Result<bool> {
    let net = load_model(&a.model, omega_arg(&a.omega))?;
    let convs: Vec<(usize, &LayerDescriptor)> = net.layers.iter().enumerate().filter(|(_, l)| l.is_conv()).collect();
    if convs.is_empty() {
        bail!("{} has no convolution layers", a.model.display());
    }
    let checks: Vec<Check> = convs
        .par_iter()
        .map(|&(i, l)| {
            let small = l.shrunk(a.shrink);
            let shapes = small.as_ref().map_or_else(|_| "-".into(), |s| format!("{} -> {}", s.input, s.output));
            let result = small.map_err(|e| e.to_string()).and_then(|s| {
                let mut rng = rng_for(a.seed, i);
                let x = Tensor::random_int(&s.input.dims(), -8, 8, &mut rng);
                let w = Tensor::random_int(&s.weight_dims().expect("conv has weights"), -8, 8, &mut rng);
                let wino = conv_layer(&s, &x, &w).map_err(|e| e.to_string())?;
                let direct = direct_conv(&x, &w, s.padding).map_err(|e| e.to_string())?;
                Ok(wino == direct)
            });
            Check { name: l.name.clone(), shapes, mode: mode_label(l), result }
        })
        .collect();
    let passed = checks.iter().filter(|c| c.result == Ok(true)).count();
    let mut text = String::new();
    for c in &checks {
        let (status, why) = match &c.result {
            Ok(true) => ("PASS", String::new()),
            Ok(false) => ("FAIL", " (outputs differ)".to_string()),
            Err(e) => ("FAIL", format!(" ({e})")),
        };
        text += &format!("{status} {:<14} {:<28} {}{why}\n", c.name, c.shapes, c.mode);
    }
    text += &format!("{passed}/{} layers passed\n", checks.len());
    let json = json!({
        "shrink": a.shrink,
        "seed": a.seed,
        "layers": checks.iter().map(|c| json!({
            "name": c.name,
            "shapes": c.shapes,
            "mode": c.mode,
            "pass": c.result == Ok(true),
            "error": c.result.as_ref().err(),
        })).collect::<Vec<_>>(),
        "passed": passed,
    });
    emit(a.report, text, serde_json::to_string_pretty(&json)?);
    Ok(passed == checks.len())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a).map(|_| true),
        Command::Simulate(a) => cmd_simulate(a).map(|_| true),
        Command::Model(a) => cmd_model(a).map(|_| true),
        Command::Explore(a) => cmd_explore(a).map(|_| true),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: verification failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
