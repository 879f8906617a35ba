use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Portable random source for the simulator.
///
/// ChaCha8 keyed by `seed_from_u64`, uniforms built from the top 53 bits of
/// each 64-bit output, Gaussians by the Box–Muller transform with the second
/// variate of each pair cached. `ln`, `sin` and `cos` come from the `libm`
/// crate rather than the platform, so draws are bit-identical across
/// platforms and optimization levels (an optimizer may otherwise fuse
/// `sin`/`cos` into a `sincos` call that rounds differently).
#[derive(Clone, Debug)]
pub struct SimRng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        SimRng {
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(0, 1]`.
    pub fn uniform_open0(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform_open0();
        let u2 = self.uniform();
        let radius = (-2.0 * libm::log(u1)).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare = Some(radius * libm::sin(angle));
        radius * libm::cos(angle)
    }

    /// Index drawn from non-negative `weights` (not necessarily normalized).
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut target = self.uniform() * total;
        for (i, w) in weights.iter().enumerate() {
            if target < *w {
                return i;
            }
            target -= w;
        }
        weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
    }

    /// Length of a geometric segment with the given mean (support ≥ 1).
    pub fn geometric_length(&mut self, mean: f64, cap: u64) -> u64 {
        let p = 1.0 / mean;
        if p >= 1.0 {
            return 1;
        }
        let u = self.uniform_open0();
        let extra = (libm::log(u) / libm::log(1.0 - p)).floor();
        if extra >= cap as f64 {
            cap
        } else {
            1 + extra as u64
        }
    }

    /// Fisher–Yates shuffle driven by this generator.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = (self.next_u64() % (i as u64 + 1)) as usize;
            items.swap(i, j);
        }
    }
}
