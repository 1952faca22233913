use super::*;
use crate::rng::Rng;

fn store1(name: &str, shape: &[usize], data: Vec<f64>) -> ParameterStore {
    let mut s = ParameterStore::new();
    s.insert(name, Tensor::from_vec(shape, data));
    s
}

#[test]
fn square_value_and_grad() {
    // loss(theta) = theta^2 at theta = 3 -> (9, 6)
    let params = store1("theta", &[1], vec![3.0]);
    let (v, g) = value_and_grad(
        |g, p| {
            let t = p.node("theta");
            let sq = g.square(t);
            g.sum(sq)
        },
        &params,
    )
    .unwrap();
    assert_eq!(v, 9.0);
    assert_eq!(g.get("theta").unwrap().data(), &[6.0]);
}

#[test]
fn sum_grad_is_ones() {
    let params = store1("theta", &[2, 3], vec![1., -2., 3., 0.5, 7., -1.]);
    let (v, g) = value_and_grad(|g, p| g.sum(p.node("theta")), &params).unwrap();
    assert_eq!(v, 8.5);
    assert_eq!(g.get("theta").unwrap().data(), &[1.0; 6]);
}

#[test]
fn linearity_of_gradients() {
    // grad(l1 + l2) == grad(l1) + grad(l2) up to fp associativity
    let mut rng = Rng::new(11);
    let data: Vec<f64> = (0..6).map(|_| rng.normal()).collect();
    let params = store1("w", &[2, 3], data);

    let l1 = |g: &mut Graph, p: &BoundParams| {
        let w = p.node("w");
        let s = g.square(w);
        g.sum(s)
    };
    let l2 = |g: &mut Graph, p: &BoundParams| {
        let w = p.node("w");
        let t = g.tanh(w);
        g.mean(t)
    };
    let combined = |g: &mut Graph, p: &BoundParams| {
        let a = l1(g, p);
        let b = l2(g, p);
        g.add(a, b)
    };
    let (_, g1) = value_and_grad(l1, &params).unwrap();
    let (_, g2) = value_and_grad(l2, &params).unwrap();
    let (_, gc) = value_and_grad(combined, &params).unwrap();
    for i in 0..6 {
        let sum = g1.get("w").unwrap().data()[i] + g2.get("w").unwrap().data()[i];
        let got = gc.get("w").unwrap().data()[i];
        assert!((sum - got).abs() <= 1e-12 * sum.abs().max(1.0), "{sum} vs {got}");
    }
}

#[test]
fn deterministic_repeat() {
    let mut rng = Rng::new(5);
    let data: Vec<f64> = (0..12).map(|_| rng.normal()).collect();
    let params = store1("w", &[3, 4], data);
    let f = |g: &mut Graph, p: &BoundParams| {
        let w = p.node("w");
        let s = g.silu(w);
        let q = g.square(s);
        g.mean(q)
    };
    let (v1, g1) = value_and_grad(f, &params).unwrap();
    let (v2, g2) = value_and_grad(f, &params).unwrap();
    assert_eq!(v1.to_bits(), v2.to_bits());
    for (a, b) in g1.get("w").unwrap().data().iter().zip(g2.get("w").unwrap().data()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn non_finite_loss_reports_tensor() {
    let params = store1("w", &[1], vec![f64::MAX]);
    let err = value_and_grad(
        |g, p| {
            let w = p.node("w");
            let sq = g.square(w); // overflows to inf
            g.sum(sq)
        },
        &params,
    )
    .unwrap_err();
    match err {
        Error::NonFiniteLoss { tensor } => assert!(tensor.contains("square"), "{tensor}"),
        other => panic!("unexpected error {other:?}"),
    }
}

#[test]
fn flatten_unflatten_roundtrip_bit_exact() {
    let mut rng = Rng::new(77);
    let mut s = ParameterStore::new();
    s.insert("a", Tensor::from_vec(&[2, 2], (0..4).map(|_| rng.normal()).collect()));
    s.insert("b", Tensor::from_vec(&[3], (0..3).map(|_| rng.normal()).collect()));
    s.insert("c", Tensor::from_vec(&[1, 5], (0..5).map(|_| rng.normal()).collect()));
    let flat = s.flatten();
    assert_eq!(flat.len(), s.scalar_count());
    let back = s.unflatten_from(&flat);
    assert_eq!(s, back);
}

// Central-difference oracle for a scalar function, used to pin elementwise
// derivatives independently of the tape.
fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

#[test]
fn elementwise_derivatives_match_central_differences() {
    let points = [-2.0, -0.5, 0.0, 0.5, 1.7, 3.0];
    let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
    for &x in &points {
        let cases: [(&str, Box<dyn Fn(&mut Graph, NodeId) -> NodeId>, Box<dyn Fn(f64) -> f64>); 3] = [
            ("sigmoid", Box::new(|g, n| g.sigmoid(n)), Box::new(sig)),
            ("tanh", Box::new(|g, n| g.tanh(n)), Box::new(f64::tanh)),
            ("silu", Box::new(|g, n| g.silu(n)), Box::new(|v: f64| v * sig(v))),
        ];
        for (name, build, plain) in cases {
            let params = store1("x", &[1], vec![x]);
            let (_, grads) = value_and_grad(
                |g, p| {
                    let n = build(g, p.node("x"));
                    g.sum(n)
                },
                &params,
            )
            .unwrap();
            let analytic = grads.get("x").unwrap().data()[0];
            let numeric = central_diff(&plain, x, 1e-6);
            let rel = (analytic - numeric).abs() / analytic.abs().max(1.0);
            assert!(rel < 1e-6, "{name} at {x}: analytic {analytic} vs numeric {numeric}");
        }
    }
}

#[test]
fn silu_fd_check_at_half() {
    let params = store1("x", &[1], vec![0.5]);
    let report = finite_difference_check(
        |g, p| {
            let s = g.silu(p.node("x"));
            g.sum(s)
        },
        &params,
        1e-5,
        1e-6,
    )
    .unwrap();
    assert!(report.passed(), "worst {:?}", report.worst);
    assert!(report.max_rel_err < 1e-6);
}

#[test]
fn square_fd_tight() {
    let params = store1("x", &[1], vec![1.0]);
    let report =
        finite_difference_check(|g, p| { let s = g.square(p.node("x")); g.sum(s) }, &params, 1e-5, 1e-8)
            .unwrap();
    assert!(report.passed(), "worst {:?}", report.worst);
    assert!(report.max_rel_err < 1e-8);
}

#[test]
fn fd_check_flags_every_bad_scalar() {
    // A loss whose "analytic" gradient path is fine; shrink tolerance to force flags.
    let params = store1("x", &[3], vec![0.3, -1.2, 2.0]);
    let report = finite_difference_check(
        |g, p| {
            let t = g.tanh(p.node("x"));
            g.sum(t)
        },
        &params,
        1e-2, // coarse step -> visible truncation error
        1e-12,
    )
    .unwrap();
    assert_eq!(report.checked, 3);
    assert!(!report.failures.is_empty());
}

#[test]
fn matmul_and_bias_gradients_match_fd() {
    let mut rng = Rng::new(42);
    let mut params = ParameterStore::new();
    params.insert("w", Tensor::from_vec(&[3, 2], (0..6).map(|_| rng.normal()).collect()));
    params.insert("b", Tensor::from_vec(&[2], (0..2).map(|_| rng.normal()).collect()));
    let x = Tensor::from_vec(&[4, 3], (0..12).map(|_| rng.normal()).collect());
    let y = Tensor::from_vec(&[4, 2], (0..8).map(|_| rng.normal()).collect());

    let loss = move |g: &mut Graph, p: &BoundParams| {
        let xc = g.constant(x.clone());
        let yc = g.constant(y.clone());
        let wout = g.matmul(xc, p.node("w"));
        let pred = g.add_bias(wout, p.node("b"));
        let d = g.sub(pred, yc);
        let sq = g.square(d);
        g.mean(sq)
    };
    let report = finite_difference_check(loss, &params, 1e-5, 1e-8).unwrap();
    assert!(report.passed(), "worst {:?}", report.worst);
}

#[test]
fn conv_and_slice_gradients_match_fd() {
    let mut rng = Rng::new(9);
    let (b, cin, t, cout, k) = (2usize, 2usize, 6usize, 3usize, 3usize);
    let mut params = ParameterStore::new();
    params.insert("flat", Tensor::from_vec(&[cout * cin * k + cout], {
        (0..cout * cin * k + cout).map(|_| rng.normal() * 0.5).collect()
    }));
    let x = Tensor::from_vec(&[b, cin, t], (0..b * cin * t).map(|_| rng.normal()).collect());

    let loss = move |g: &mut Graph, p: &BoundParams| {
        let xc = g.constant(x.clone());
        let flat = p.node("flat");
        let kernel = g.slice(flat, 0, &[cout, cin, k]);
        let bias = g.slice(flat, cout * cin * k, &[cout]);
        let conv = g.causal_conv(xc, kernel, bias, 2);
        let act = g.silu(conv);
        let last = g.last_time(act);
        let sq = g.square(last);
        g.mean(sq)
    };
    let report = finite_difference_check(loss, &params, 1e-5, 1e-7).unwrap();
    assert!(report.passed(), "worst {:?}", report.worst);
}

#[test]
fn conv_grad_flows_to_input_nodes() {
    // When the conv input is itself a parameter, col2im must route gradients back.
    let mut rng = Rng::new(13);
    let (b, cin, t, cout, k) = (1usize, 2usize, 5usize, 2usize, 2usize);
    let mut params = ParameterStore::new();
    params.insert("x", Tensor::from_vec(&[b, cin, t], (0..b * cin * t).map(|_| rng.normal()).collect()));
    params.insert("kernel", Tensor::from_vec(&[cout, cin, k], (0..cout * cin * k).map(|_| rng.normal()).collect()));
    params.insert("bias", Tensor::from_vec(&[cout], vec![0.1, -0.2]));

    let loss = |g: &mut Graph, p: &BoundParams| {
        let conv = g.causal_conv(p.node("x"), p.node("kernel"), p.node("bias"), 1);
        let sq = g.square(conv);
        g.sum(sq)
    };
    let report = finite_difference_check(loss, &params, 1e-5, 1e-7).unwrap();
    assert!(report.passed(), "worst {:?}", report.worst);
}

#[test]
fn lstm_style_cell_gradients_match_fd() {
    // One recurrent step with slice_cols gating, as the trainer builds it.
    let (din, h) = (2usize, 3usize);
    let mut rng = Rng::new(21);
    let mut params = ParameterStore::new();
    params.insert("w_x", Tensor::from_vec(&[din, 4 * h], (0..din * 4 * h).map(|_| rng.normal() * 0.4).collect()));
    params.insert("w_h", Tensor::from_vec(&[h, 4 * h], (0..h * 4 * h).map(|_| rng.normal() * 0.4).collect()));
    params.insert("bias", Tensor::from_vec(&[4 * h], (0..4 * h).map(|_| rng.normal() * 0.2).collect()));
    let x = Tensor::from_vec(&[2, din], (0..2 * din).map(|_| rng.normal()).collect());

    let loss = move |g: &mut Graph, p: &BoundParams| {
        let xc = g.constant(x.clone());
        let h0 = g.constant(Tensor::zeros(&[2, h]));
        let c0 = g.constant(Tensor::zeros(&[2, h]));
        let xa = g.matmul(xc, p.node("w_x"));
        let ha = g.matmul(h0, p.node("w_h"));
        let s = g.add(xa, ha);
        let pre = g.add_bias(s, p.node("bias"));
        let i_s = g.slice_cols(pre, 0, h);
        let f_s = g.slice_cols(pre, h, h);
        let o_s = g.slice_cols(pre, 2 * h, h);
        let c_s = g.slice_cols(pre, 3 * h, h);
        let i_g = g.sigmoid(i_s);
        let f_g = g.sigmoid(f_s);
        let o_g = g.sigmoid(o_s);
        let cand = g.tanh(c_s);
        let fc = g.mul(f_g, c0);
        let ic = g.mul(i_g, cand);
        let c1 = g.add(fc, ic);
        let tc = g.tanh(c1);
        let h1 = g.mul(o_g, tc);
        let sq = g.square(h1);
        g.mean(sq)
    };
    let report = finite_difference_check(loss, &params, 1e-5, 1e-7).unwrap();
    assert!(report.passed(), "worst {:?}", report.worst);
}

#[test]
fn weighted_row_sum_grads() {
    let mut params = ParameterStore::new();
    params.insert("e", Tensor::from_vec(&[3, 2], vec![1., 2., 3., 4., 5., 6.]));
    let alphas = vec![0.2, 0.3, 0.5];
    let loss = move |g: &mut Graph, p: &BoundParams| {
        let ws = g.weighted_row_sum(p.node("e"), &alphas);
        let sq = g.square(ws);
        g.sum(sq)
    };
    let report = finite_difference_check(loss, &params, 1e-6, 1e-8).unwrap();
    assert!(report.passed(), "worst {:?}", report.worst);
}

#[test]
fn causality_of_conv_zero_padding() {
    // Output at time t must not see inputs after t: check against a direct sum.
    let (b, cin, t, cout, k, dil) = (1usize, 2usize, 8usize, 2usize, 3usize, 2usize);
    let mut rng = Rng::new(31);
    let x = Tensor::from_vec(&[b, cin, t], (0..b * cin * t).map(|_| rng.normal()).collect());
    let kernel = Tensor::from_vec(&[cout, cin, k], (0..cout * cin * k).map(|_| rng.normal()).collect());
    let bias = Tensor::from_vec(&[cout], vec![0.3, -0.7]);

    let mut g = Graph::new();
    let xi = g.constant(x.clone());
    let ki = g.constant(kernel.clone());
    let bi = g.constant(bias.clone());
    let out = g.causal_conv(xi, ki, bi, dil);
    let ov = g.value(out).clone();

    for co in 0..cout {
        for ti in 0..t {
            let mut want = bias.data()[co];
            for ci in 0..cin {
                for j in 0..k {
                    let tap = j * dil;
                    if tap <= ti {
                        want += kernel.data()[(co * cin + ci) * k + j] * x.data()[ci * t + ti - tap];
                    }
                }
            }
            let got = ov.data()[(co) * t + ti];
            assert!((want - got).abs() < 1e-12, "co={co} t={ti}: {want} vs {got}");
        }
    }
}
