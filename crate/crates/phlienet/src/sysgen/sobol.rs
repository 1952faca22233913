//! One-dimensional Sobol low-discrepancy sequence (Gray-code construction).
//!
//! The first Sobol dimension needs no direction-number table: direction
//! number j is 2^-(j+1). Points are generated in Gray-code order starting
//! from index 1 (the initial 0 point is skipped), which is the standard
//! ordering used for quasi-random parameter sampling.

/// `n` quasi-random points mapped affinely into [lo, hi].
///
/// `seed_offset` skips ahead in the sequence, selecting a disjoint
/// subsequence for held-out splits: point i of the result is Sobol index
/// `seed_offset + 1 + i`.
pub fn sobol_sample(range: [f64; 2], n: usize, seed_offset: u32) -> Vec<f64> {
    let [lo, hi] = range;
    let mut out = Vec::with_capacity(n);
    let mut x: u64 = 0;
    // advance through Gray-code order; index i flips bit trailing_ones(i-1)
    for i in 1..=(seed_offset as u64 + n as u64) {
        let bit = (i - 1).trailing_ones() as u64; // lowest zero bit of i-1
        x ^= 1u64 << (63 - bit);
        if i > seed_offset as u64 {
            let u = x as f64 / 2f64.powi(64);
            out.push(lo + (hi - lo) * u);
        }
    }
    out
}
