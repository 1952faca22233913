//! The learned interpolated embedding layer.
//!
//! Shows the RBF-softmax interpolation weights across the parameter range
//! (including extrapolation territory) and the convexity guarantees.
//!
//! Run with: cargo run --release --example lie_embedding

use phlienet::lie::{AnchorBank, LieSpec};

fn main() {
    let bank = AnchorBank::init(&LieSpec::new(5, 4, 0.2), [1.0, 8.0], 3);
    println!("anchors at normalized positions {:?}", bank.positions);

    println!("\n p_raw   p_norm   alpha (one row per probe)");
    for k in 0..9 {
        let p_raw = 0.5 + k as f64;
        let p = bank.normalize_param(p_raw);
        let alphas = bank.rbf_weights(p);
        let row: Vec<String> = alphas.iter().map(|a| format!("{a:.4}")).collect();
        let sum: f64 = alphas.iter().sum();
        println!("{p_raw:6.2}  {p:7.3}   [{}]  sum {sum:.12}", row.join(", "));
    }

    let (e, de) = bank.embed_with_param_grad(4.2);
    println!("\ne(4.2)        = {e:?}");
    println!("de/dp at 4.2  = {de:?}");

    // convex hull: each embedding coordinate stays inside the anchor range
    let d = bank.embedding_dim;
    let ed = bank.embeddings.data();
    for c in 0..d {
        let col: Vec<f64> = (0..bank.n_anchors).map(|i| ed[i * d + c]).collect();
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let v = e[c];
        assert!(v >= lo && v <= hi);
        println!("dim {c}: anchor range [{lo:+.3}, {hi:+.3}], e(4.2) = {v:+.3}");
    }
}
