//! Small deterministic RNG used everywhere randomness is needed.
//!
//! SplitMix64 core with Box–Muller normals. Every consumer derives its own
//! stream from a seed plus a few stream ids, so results never depend on how
//! work is split across workers.

/// SplitMix64 generator. Cheap, seedable, and stable across platforms.
#[derive(Clone, Debug)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { state: seed }
    }

    /// Derives an independent stream from a seed and up to three stream ids.
    /// Mixing goes through the SplitMix64 finalizer so adjacent ids do not
    /// produce correlated streams.
    pub fn stream(seed: u64, a: u64, b: u64, c: u64) -> Self {
        let mut r = Rng::new(seed);
        let mut s = r.next_u64();
        s ^= mix(a.wrapping_add(0x9e37_79b9_7f4a_7c15));
        s ^= mix(b.wrapping_add(0x2545_f491_4f6c_dd1d));
        s ^= mix(c.wrapping_add(0x27d4_eb2f_1656_67c5));
        Rng::new(s)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        mix(self.state)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        // 53 high bits -> exactly representable dyadic in [0,1)
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Uniform in [lo, hi).
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box–Muller (one value per call; the paired value
    /// is discarded to keep the stream position independent of call parity).
    pub fn normal(&mut self) -> f64 {
        loop {
            let u1 = self.uniform();
            if u1 > 0.0 {
                let u2 = self.uniform();
                let r = (-2.0 * u1.ln()).sqrt();
                return r * (2.0 * std::f64::consts::PI * u2).cos();
            }
        }
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = (self.next_u64() % (i as u64 + 1)) as usize;
            xs.swap(i, j);
        }
    }
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
