use std::path::PathBuf;

use proptest::prelude::*;

use winocnn_core::ingest::{decode_tensor, encode_tensor, tensor_from_text, tensor_to_text};
use winocnn_core::{
    parse_config, parse_config_str, parse_model, parse_model_str, serialize_config, serialize_model, AcceleratorConfig,
    LayerKind, Scalar, Tensor,
};

fn repo(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

#[test]
fn vgg16_model_parses() {
    let net = parse_model(repo("models/vgg16.model"), None).unwrap();
    assert_eq!((net.batch, net.omega), (2, 4));
    let convs: Vec<_> = net.layers.iter().filter(|l| l.is_conv()).collect();
    assert_eq!(convs.len(), 13);
    let c31 = convs.iter().find(|l| l.name == "conv3_1").unwrap();
    assert_eq!((c31.id(), c31.od(), c31.ih(), c31.iw()), (128, 256, 56, 56));
    assert!(convs.iter().all(|l| l.mode_choice().unwrap().omega == 4));
    assert_eq!(net.layers.iter().filter(|l| l.kind == LayerKind::MaxPool).count(), 5);
    let last = net.layers.last().unwrap();
    assert_eq!((last.kind, last.od()), (LayerKind::FullyConnected, 1000));
    let ops: u64 = convs.iter().map(|l| l.ops()).sum();
    assert!((ops as f64 / 1e9 - 30.69).abs() < 0.01, "{ops}");
}

#[test]
fn inception_chain_parses() {
    let net = parse_model(repo("models/inception_chain.model"), None).unwrap();
    assert_eq!(net.omega, 6);
    let kernels: Vec<(usize, usize)> =
        net.layers.iter().filter(|l| l.is_conv()).map(|l| (l.kernel_h, l.kernel_w)).collect();
    assert_eq!(kernels, vec![(1, 1), (5, 5), (3, 3), (1, 7), (7, 1)]);
    let f4 = parse_model(repo("models/inception_chain.model"), Some(4)).unwrap();
    assert!(f4.layers.iter().filter(|l| l.is_conv()).all(|l| l.mode_choice().unwrap().omega == 4));
}

#[test]
fn bundled_models_round_trip() {
    for name in ["models/vgg16.model", "models/inception_chain.model"] {
        let net = parse_model(repo(name), None).unwrap();
        let again = parse_model_str(&serialize_model(&net), None).unwrap();
        assert_eq!(again.layers, net.layers, "{name}");
        assert_eq!((again.batch, again.omega), (net.batch, net.omega));
    }
}

#[test]
fn bundled_configs_match_presets() {
    let cases = [
        ("configs/ultra96-f4.cfg", AcceleratorConfig::ultra96_f4()),
        ("configs/zcu102-f4.cfg", AcceleratorConfig::zcu102_f4()),
        ("configs/zcu102-f6.cfg", AcceleratorConfig::zcu102_f6()),
    ];
    for (path, preset) in cases {
        let c = parse_config(repo(path)).unwrap();
        assert_eq!(c, preset, "{path}");
        assert_eq!(parse_config_str(&serialize_config(&c)).unwrap(), c);
    }
}

#[test]
fn missing_file_is_an_io_error() {
    let err = parse_model(repo("models/absent.model"), None).unwrap_err();
    assert!(matches!(err, winocnn_core::Error::Io(_)), "{err:?}");
}

fn tensor() -> impl Strategy<Value = Tensor> {
    prop::collection::vec(1..=4usize, 1..=4).prop_flat_map(|dims| {
        let n = dims.iter().product::<usize>();
        prop::collection::vec((-1000i64..1000, prop::sample::select(vec![1i64, 1, 1, 2, 3, 4, 8])), n).prop_map(
            move |vals| Tensor::from_vec(&dims, vals.iter().map(|&(a, b)| Scalar::ratio(a, b)).collect()).unwrap(),
        )
    })
}

proptest! {
    #[test]
    fn text_tensors_round_trip(t in tensor()) {
        prop_assert_eq!(tensor_from_text(&tensor_to_text(&t)).unwrap(), t);
    }

    #[test]
    fn integer_tensors_round_trip_in_binary(dims in prop::collection::vec(1..=5usize, 1..=5), seed in any::<i32>()) {
        let n = dims.iter().product::<usize>();
        let data: Vec<i64> = (0..n as i64).map(|i| (i * 7919).wrapping_add(seed as i64) % 100_000).collect();
        let t = Tensor::from_i64(&dims, &data).unwrap();
        prop_assert_eq!(decode_tensor(&encode_tensor(&t).unwrap()).unwrap(), t);
    }

    #[test]
    fn configs_round_trip(
        omega in prop::sample::select(vec![4usize, 6]),
        m in 1..=64usize,
        n in 1..=2usize,
        q in 1..=8usize,
        d_in in 1..=8192usize,
        d_out in 1..=8192usize,
        slack in 0..=100usize,
    ) {
        let mut c = AcceleratorConfig::new(omega, m, n, q, d_in, d_out);
        c.dsp_slack = slack;
        c.bram_total = 1000 + slack;
        c.freq_hz = 187.5e6;
        c.bandwidth = 12.8e9;
        prop_assert_eq!(parse_config_str(&serialize_config(&c)).unwrap(), c);
    }
}
