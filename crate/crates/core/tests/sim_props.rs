use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use winocnn_core::mem::{output_pingpong, weight_buffer_feed, WEIGHT_BUFFER_DEPTH};
use winocnn_core::sim::check_skew;
use winocnn_core::{
    conv_layer, latency_model, schedule_rows, simulate_layer, AcceleratorConfig, LayerDescriptor, Shape3, Tensor,
};

fn data(layer: &LayerDescriptor, rng: &mut impl Rng) -> (Vec<Tensor>, Tensor) {
    let imgs = (0..2).map(|_| Tensor::random_int(&layer.input.dims(), -16, 16, rng)).collect();
    let w = Tensor::random_int(&layer.weight_dims().unwrap(), -8, 8, rng);
    (imgs, w)
}

fn random_layer(rng: &mut impl Rng, omega: usize) -> LayerDescriptor {
    let kh: usize = rng.gen_range(1..=7);
    let kw: usize = if rng.gen_bool(0.7) { kh } else { rng.gen_range(1..=7) };
    let pad = rng.gen_range(0..=kh.min(kw) / 2);
    let h = rng.gen_range(kh.saturating_sub(2 * pad).max(1)..=12);
    let w = rng.gen_range(kw.saturating_sub(2 * pad).max(1)..=12);
    let id = rng.gen_range(1..=5);
    let od = rng.gen_range(1..=5);
    LayerDescriptor::conv("r", Shape3::new(id, h, w), od, (kh, kw), pad).unwrap().with_mode(omega).unwrap()
}

#[test]
fn simulator_matches_engine_on_random_layers() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for t in 0..20 {
        let omega = if t % 2 == 0 { 4 } else { 6 };
        let layer = random_layer(&mut rng, omega);
        let m = rng.gen_range(1..=4);
        let n = rng.gen_range(1..=2);
        let q = rng.gen_range(1..=3);
        let d_out = [16, 64, 1024][rng.gen_range(0..3)];
        let cfg = AcceleratorConfig::new(omega, m, n, q, 4096, d_out);
        let (imgs, w) = data(&layer, &mut rng);
        let (outs, rep) = simulate_layer(&layer, &cfg, &imgs, &w).unwrap();
        for (o, img) in outs.iter().zip(&imgs) {
            assert_eq!(o, &conv_layer(&layer, img, &w).unwrap(), "trial {t}: {layer:?} on {}", cfg.label());
        }
        check_skew(&rep.skew).unwrap();
        assert_eq!(rep.total_cycles, rep.pre_cycles + rep.loop_cycles + rep.flush_cycles);
    }
}

#[test]
fn eight_by_two_array_keeps_its_skew() {
    let layer = LayerDescriptor::conv("s", Shape3::new(4, 10, 16), 16, (3, 3), 1).unwrap().with_mode(4).unwrap();
    let cfg = AcceleratorConfig::new(4, 8, 2, 2, 4096, 1024);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (imgs, w) = data(&layer, &mut rng);
    let (outs, rep) = simulate_layer(&layer, &cfg, &imgs, &w).unwrap();
    assert_eq!(outs[0], conv_layer(&layer, &imgs[0], &w).unwrap());
    check_skew(&rep.skew).unwrap();
    let origin = &rep.skew.fire[0];
    for i in 0..8 {
        for j in 0..2 {
            let fires = &rep.skew.fire[i * 2 + j];
            assert_eq!(fires.len() as u64, rep.steps);
            assert!(fires.iter().zip(origin).all(|(t, t0)| t - t0 == (i + j) as u64));
        }
    }
}

/// A layer whose loop bounds divide evenly by every array used below, so a
/// larger array never leaves the step count unchanged.
fn even_layer() -> LayerDescriptor {
    LayerDescriptor::conv("e", Shape3::new(8, 16, 16), 8, (3, 3), 1).unwrap().with_mode(4).unwrap()
}

#[test]
fn larger_arrays_do_not_take_longer() {
    let layer = even_layer();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (imgs, w) = data(&layer, &mut rng);
    let cycles = |m, n, q| {
        let cfg = AcceleratorConfig::new(4, m, n, q, 4096, 1024);
        simulate_layer(&layer, &cfg, &imgs, &w).unwrap().1.total_cycles
    };
    let shapes = [(1, 1, 1), (2, 1, 1), (2, 2, 1), (2, 2, 2), (4, 2, 2), (4, 2, 4), (8, 2, 4)];
    let totals: Vec<u64> = shapes.iter().map(|&(m, n, q)| cycles(m, n, q)).collect();
    for (pair, shape) in totals.windows(2).zip(shapes.windows(2)) {
        assert!(pair[1] <= pair[0], "{:?} -> {:?}: {totals:?}", shape[0], shape[1]);
    }
}

#[test]
fn compute_bound_layer_keeps_pe_busy() {
    let layer = even_layer();
    let mut cfg = AcceleratorConfig::new(4, 2, 2, 2, 4096, 1024);
    cfg.bandwidth = f64::INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (imgs, w) = data(&layer, &mut rng);
    let (_, rep) = simulate_layer(&layer, &cfg, &imgs, &w).unwrap();
    assert_eq!(rep.steady_utilization, 1.0);
    assert!(rep.iterations.iter().all(|it| it.stall_cycles == 0 && it.comm_cycles == 0));
}

#[test]
fn simulation_tracks_model_within_five_percent() {
    let layers = [
        LayerDescriptor::conv("a", Shape3::new(16, 28, 28), 32, (3, 3), 1).unwrap().with_mode(4).unwrap(),
        LayerDescriptor::conv("b", Shape3::new(16, 24, 24), 16, (5, 5), 2).unwrap().with_mode(6).unwrap(),
        LayerDescriptor::conv("c", Shape3::new(32, 14, 14), 16, (1, 1), 0).unwrap().with_mode(4).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for layer in &layers {
        let omega = layer.mode_choice().unwrap().omega;
        let cfg = AcceleratorConfig::new(omega, 2, 1, 2, 4096, 64);
        let (imgs, w) = data(layer, &mut rng);
        let (_, rep) = simulate_layer(layer, &cfg, &imgs, &w).unwrap();
        let model = latency_model(layer, &cfg).unwrap().t_total * cfg.freq_hz;
        let gap = (rep.total_cycles as f64 - model).abs() / model;
        assert!(gap <= 0.05, "{}: sim {} model {model:.0} gap {gap:.4}", layer.name, rep.total_cycles);
    }
}

#[test]
fn weight_feed_fetches_d_weight() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..200 {
        let omega = if rng.gen_bool(0.5) { 4 } else { 6 };
        let kh = rng.gen_range(1..=11);
        let kw = rng.gen_range(1..=11);
        let pad = kh.min(kw) / 2;
        let layer = LayerDescriptor::conv(
            "w",
            Shape3::new(rng.gen_range(1..=64), 16, 16),
            rng.gen_range(1..=64),
            (kh, kw),
            pad,
        )
        .unwrap()
        .with_mode(omega)
        .unwrap();
        let q = [1, 2, 4, 8][rng.gen_range(0..4)];
        let m = rng.gen_range(1..=8);
        let cfg = AcceleratorConfig::new(omega, m, 1, q, 8192, 8192);
        let c = layer.mode_choice().unwrap();
        let feed =
            weight_buffer_feed(omega, c.k, c.splits(), layer.id(), layer.od(), q, m, WEIGHT_BUFFER_DEPTH).unwrap();
        let model = latency_model(&layer, &cfg).unwrap();
        assert_eq!(feed.ddr_words, model.d_weight);
        assert_eq!(feed.ddr_words, c.splits() * c.k * c.k * layer.id() * layer.od());
        let entries = c.splits() * layer.id().div_ceil(q) * layer.od().div_ceil(m);
        assert!(feed.rows.iter().all(|r| r.len() == entries));
        let delivered: usize = feed.rows.iter().flatten().filter(|e| e.od.is_some()).map(|e| e.channels.len()).sum();
        assert_eq!(delivered, c.splits() * layer.id() * layer.od());
    }
}

#[test]
fn ping_pong_drains_every_output_word() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..50 {
        let layer = random_layer(&mut rng, 4);
        let cfg = AcceleratorConfig::new(4, 1, 1, 1, 4096, rng.gen_range(2..=16));
        let Ok(plan) = schedule_rows(&layer, &cfg) else { continue };
        let b = cfg.batch;
        let mut windows = Vec::new();
        let mut words = Vec::new();
        let mut t = 0u64;
        for s in &plan.steps {
            let w = (s.compute.len() * layer.od() * layer.ow() * b) as u64;
            // Each compute window outlasts the drain running beside it.
            let len = w + rng.gen_range(0..50);
            windows.push((t, t + len));
            t += len;
            words.push(w);
        }
        let rep = output_pingpong(&windows, &words, 1.0).unwrap();
        assert_eq!(rep.drained_words, (layer.od() * layer.oh() * layer.ow() * b) as u64);
        assert_eq!(rep.drains.len(), plan.steps.len());
        if plan.steps.len() > 2 {
            assert!(output_pingpong(&windows, &words, 0.25).is_err());
        }
    }
}
