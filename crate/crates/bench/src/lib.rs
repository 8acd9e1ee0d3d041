//! Shared workloads for the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use winocnn_core::{LayerDescriptor, Shape3, Tensor};

/// A padded square convolution with seeded integer data.
pub struct Workload {
    pub layer: LayerDescriptor,
    pub images: Vec<Tensor>,
    pub weights: Tensor,
}

pub fn conv_workload(omega: usize, k: usize, id: usize, od: usize, hw: usize) -> Workload {
    let layer = LayerDescriptor::conv("bench", Shape3::new(id, hw, hw), od, (k, k), k / 2)
        .expect("valid layer")
        .with_mode(omega)
        .expect("supported kernel");
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let images = (0..2).map(|_| Tensor::random_int(&[id, hw, hw], -128, 127, &mut rng)).collect();
    let weights = Tensor::random_int(&[id, od, k, k], -128, 127, &mut rng);
    Workload { layer, images, weights }
}
