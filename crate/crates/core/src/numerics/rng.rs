use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::{Scalar, Vector};

/// Seeded uniform stream backed by ChaCha8.
///
/// ChaCha output is defined independently of platform and word size, so a
/// given `(seed, stream)` produces the same sequence everywhere. Parallel work
/// draws from [`RngState::child`] streams with fixed indices.
#[derive(Clone, Debug)]
pub struct RngState {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngState {
    /// Root stream (stream index 0) for `seed`.
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        RngState {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream. A root's children share its key and use
    /// ChaCha stream `index + 1`; a child's children are keyed by
    /// `splitmix64(seed ^ splitmix64(stream))`.
    pub fn child(&self, index: u64) -> RngState {
        let key = if self.stream == 0 {
            self.seed
        } else {
            splitmix64(self.seed ^ splitmix64(self.stream))
        };
        Self::with_stream(key, index.wrapping_add(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform<T: Scalar>(&mut self) -> T {
        let bits = self.inner.next_u64() >> 11;
        T::lit(bits as f64 * (1.0 / (1u64 << 53) as f64))
    }

    pub fn uniform_range<T: Scalar>(&mut self, lo: T, hi: T) -> T {
        lo + (hi - lo) * self.uniform::<T>()
    }

    /// Two independent standard normals by Box–Muller.
    pub fn gaussian_pair<T: Scalar>(&mut self) -> (T, T) {
        // 1 - u lies in (0, 1], keeping the log finite
        let u1 = 1.0 - self.uniform::<f64>();
        let u2 = self.uniform::<f64>();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        (T::lit(radius * angle.cos()), T::lit(radius * angle.sin()))
    }

    /// Uniform draw from the closed ball of radius `r`, by rejection from the
    /// bounding cube.
    pub fn uniform_in_ball<T: Scalar>(&mut self, dim: usize, r: T) -> Vector<T> {
        assert!(dim > 0 && r > T::zero());
        loop {
            let v: Vec<T> = (0..dim).map(|_| self.uniform_range(-r, r)).collect();
            let v = Vector::from_vec_unchecked(v);
            if v.norm() <= r {
                return v;
            }
        }
    }
}

/// Free-function form of [`RngState::gaussian_pair`].
pub fn gaussian_pair<T: Scalar>(rng: &mut RngState) -> (T, T) {
    rng.gaussian_pair()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
