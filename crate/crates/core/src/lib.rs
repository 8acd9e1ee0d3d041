pub mod bitwidth;
pub mod config;
pub mod cook_toom;
pub mod engine;
pub mod error;
pub mod ingest;
pub mod layer;
pub mod matrix;
pub mod mem;
pub mod mode;
pub mod perf;
pub mod quant;
pub mod report;
pub mod scalar;
pub mod sim;
pub mod split;
pub mod tensor;

pub use bitwidth::{bitwidth_growth, bitwidth_oracle, bitwidth_report, BitwidthReport, Role};
pub use config::AcceleratorConfig;
pub use engine::{conv_layer, direct_conv, run_graph, schedule_rows, tiled_loop_reference, RowPlan};
pub use error::{Error, Result};
pub use ingest::{
    parse_config, parse_config_str, parse_model, parse_model_str, read_tensor, serialize_config, serialize_model,
    write_tensor, NetworkModel,
};
pub use layer::{select_mode, shrink_chain, LayerDescriptor, LayerKind, ModeChoice, Shape3};
pub use matrix::Matrix;
pub use mem::{map_address, AddressMap, BramMatrix, Location, TraceRecord};
pub use mode::{make_mode, WinogradMode};
pub use perf::{
    bram_usage, dsp_per_pe, dsp_usage, explore, latency_model, model_network, theoretical_dsp_efficiency, BramUsage,
    Budgets, Exploration, LayerModel,
};
pub use report::{LayerRow, Report, ReportKind};
pub use scalar::Scalar;
pub use sim::{simulate_layer, simulate_layer_with, simulate_network, SimOptions, SimReport};
pub use split::{split_kernel, SplitPlan};
pub use tensor::Tensor;
