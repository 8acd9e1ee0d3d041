use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use winocnn_core::{
    conv_layer, direct_conv, schedule_rows, tiled_loop_reference, AcceleratorConfig, LayerDescriptor, Scalar, Shape3,
    Tensor,
};

#[derive(Clone, Debug)]
struct Case {
    omega: usize,
    id: usize,
    od: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    pad: usize,
    seed: u64,
}

impl Case {
    fn layer(&self) -> LayerDescriptor {
        LayerDescriptor::conv("p", Shape3::new(self.id, self.h, self.w), self.od, (self.kh, self.kw), self.pad)
            .unwrap()
            .with_mode(self.omega)
            .unwrap()
    }

    fn data(&self) -> (Tensor, Tensor) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let x = Tensor::random_int(&[self.id, self.h, self.w], -8, 8, &mut rng);
        let g = Tensor::random_int(&[self.id, self.od, self.kh, self.kw], -8, 8, &mut rng);
        (x, g)
    }
}

fn case(max_k: usize, max_hw: usize) -> impl Strategy<Value = Case> {
    (prop::sample::select(vec![4usize, 6]), 1..=max_k, 1..=max_k, 1..=3usize, 1..=3usize, any::<u64>()).prop_flat_map(
        move |(omega, kh, kw, id, od, seed)| {
            let pad = 0..=kh.min(kw) / 2;
            (Just((omega, kh, kw, id, od, seed)), pad).prop_flat_map(move |(t, pad)| {
                let (omega, kh, kw, id, od, seed) = t;
                let min_h = kh.saturating_sub(2 * pad).max(1);
                let min_w = kw.saturating_sub(2 * pad).max(1);
                (min_h..=max_hw.max(min_h), min_w..=max_hw.max(min_w)).prop_map(move |(h, w)| Case {
                    omega,
                    id,
                    od,
                    h,
                    w,
                    kh,
                    kw,
                    pad,
                    seed,
                })
            })
        },
    )
}

fn add(a: &Tensor, b: &Tensor) -> Tensor {
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x + y).collect();
    Tensor::from_vec(a.dims(), data).unwrap()
}

fn scale(a: &Tensor, s: i64) -> Tensor {
    let s = Scalar::from_int(s);
    a.map(|x| x * &s)
}

fn config(omega: usize, m: usize, n: usize, q: usize, d_out: usize) -> AcceleratorConfig {
    AcceleratorConfig::new(omega, m, n, q, 4096, d_out)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn winograd_equals_direct(c in case(9, 9)) {
        let layer = c.layer();
        let (x, g) = c.data();
        prop_assert_eq!(conv_layer(&layer, &x, &g).unwrap(), direct_conv(&x, &g, c.pad).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn linear_in_input_and_weights(c in case(5, 7), a in -3i64..=3, s2 in any::<u64>()) {
        let layer = c.layer();
        let (x, g) = c.data();
        let (y, h) = Case { seed: s2, ..c.clone() }.data();
        let conv = |x: &Tensor, g: &Tensor| conv_layer(&layer, x, g).unwrap();
        prop_assert_eq!(conv(&add(&scale(&x, a), &y), &g), add(&scale(&conv(&x, &g), a), &conv(&y, &g)));
        prop_assert_eq!(conv(&x, &add(&scale(&g, a), &h)), add(&scale(&conv(&x, &g), a), &conv(&x, &h)));
    }

    #[test]
    fn array_shape_does_not_change_result(
        c in case(7, 9),
        m in 1..=4usize,
        n in 1..=2usize,
        q in 1..=4usize,
    ) {
        let layer = c.layer();
        let (x, g) = c.data();
        let cfg = config(c.omega, m, n, q, 4096);
        prop_assert_eq!(tiled_loop_reference(&layer, &cfg, &x, &g).unwrap(), conv_layer(&layer, &x, &g).unwrap());
    }

    #[test]
    fn row_step_does_not_change_result(c in case(5, 12), d_out in 1..=8usize) {
        let layer = c.layer();
        let (x, g) = c.data();
        let want = conv_layer(&layer, &x, &g).unwrap();
        let cfg = config(c.omega, 1, 1, 1, d_out);
        match schedule_rows(&layer, &cfg) {
            Ok(plan) => {
                let covered: usize = plan.steps.iter().map(|s| s.compute.len()).sum();
                prop_assert_eq!(covered, layer.oh());
                prop_assert_eq!(tiled_loop_reference(&layer, &cfg, &x, &g).unwrap(), want);
            }
            Err(e) => prop_assert!(e.to_string().contains("output entries"), "{}", e),
        }
    }
}

#[test]
fn row_steps_of_one_layer_agree() {
    let layer = LayerDescriptor::conv("l", Shape3::new(3, 14, 10), 4, (3, 3), 1).unwrap().with_mode(4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x = Tensor::random_int(&[3, 14, 10], -9, 9, &mut rng);
    let g = Tensor::random_int(&[3, 4, 3, 3], -9, 9, &mut rng);
    let want = conv_layer(&layer, &x, &g).unwrap();
    let mut seen = Vec::new();
    for d_out in [2, 3, 4, 5, 8, 1024] {
        let cfg = config(4, 4, 1, 1, d_out);
        seen.push(schedule_rows(&layer, &cfg).unwrap().rs);
        assert_eq!(tiled_loop_reference(&layer, &cfg, &x, &g).unwrap(), want, "d_out {d_out}");
    }
    seen.dedup();
    assert!(seen.len() >= 3, "row steps {seen:?}");
}
