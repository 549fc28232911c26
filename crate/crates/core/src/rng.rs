//! Deterministic, partition-independent random streams.
//!
//! Every Monte-Carlo loop is split into fixed-size chunks; chunk `i` draws
//! from ChaCha stream `i` of the master seed. Results therefore do not depend
//! on how many worker threads process the chunks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const CHUNK: usize = 1 << 14;

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `(chunk index, chunk length)` pairs covering `total` samples.
pub fn chunks(total: usize) -> Vec<(u64, usize)> {
    (0..total.div_ceil(CHUNK))
        .map(|i| (i as u64, CHUNK.min(total - i * CHUNK)))
        .collect()
}

/// Uniform point on the unit sphere in `R^dim`.
pub fn unit_vector<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = crate::geom::norm(&v);
        if n > 1e-300 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}
