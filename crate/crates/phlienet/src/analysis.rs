//! Embedding-space diagnostics emitted as plot-ready tables: PCA of query
//! embeddings, the RBF activation heatmap, and the weight-distance matrix.

use crate::error::{Error, Result};
use crate::hypernet;
use crate::lie::AnchorBank;
use crate::rollout::Variant;
use crate::trainer::ModelState;
use std::path::Path;

/// Top-2 principal-component projection with explained-variance ratios.
///
/// Deterministic sign convention: the largest-magnitude coordinate of each
/// component direction is positive (first index wins ties). Zero-variance
/// input projects to zeros with ratios (0, 0).
pub fn pca2(points: &[Vec<f64>]) -> (Vec<[f64; 2]>, [f64; 2], Vec<Vec<f64>>) {
    let m = points.len();
    assert!(m >= 2, "pca2 needs at least two points");
    let d = points[0].len();
    let mut mean = vec![0.0; d];
    for p in points {
        for (a, b) in mean.iter_mut().zip(p) {
            *a += b;
        }
    }
    for a in &mut mean {
        *a /= m as f64;
    }
    let centered: Vec<Vec<f64>> =
        points.iter().map(|p| p.iter().zip(&mean).map(|(a, b)| a - b).collect()).collect();

    // covariance (d x d)
    let mut cov = vec![vec![0.0; d]; d];
    for row in &centered {
        for i in 0..d {
            for j in i..d {
                cov[i][j] += row[i] * row[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= m as f64;
            cov[j][i] = cov[i][j];
        }
    }
    let total: f64 = (0..d).map(|i| cov[i][i]).sum();
    // scale-aware degeneracy: identical points differ only by rounding noise
    let scale: f64 =
        points.iter().map(|p| p.iter().map(|v| v * v).sum::<f64>()).sum::<f64>() / m as f64;
    if total <= 1e-24 * scale.max(1e-300) {
        return (vec![[0.0, 0.0]; m], [0.0, 0.0], vec![vec![0.0; d]; 2]);
    }

    let (eigvals, eigvecs) = jacobi_eigen(&cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigvals[b].partial_cmp(&eigvals[a]).unwrap());
    let mut components = Vec::new();
    let mut ratios = [0.0; 2];
    for k in 0..2 {
        if k >= d {
            components.push(vec![0.0; d]);
            continue;
        }
        let idx = order[k];
        let mut v: Vec<f64> = (0..d).map(|i| eigvecs[i][idx]).collect();
        // sign convention
        let mut arg = 0;
        for (i, c) in v.iter().enumerate() {
            if c.abs() > v[arg].abs() + 1e-15 {
                arg = i;
            }
        }
        if v[arg] < 0.0 {
            for c in &mut v {
                *c = -*c;
            }
        }
        ratios[k] = (eigvals[idx] / total).clamp(0.0, 1.0);
        components.push(v);
    }

    let projections: Vec<[f64; 2]> = centered
        .iter()
        .map(|row| {
            let p1: f64 = row.iter().zip(&components[0]).map(|(a, b)| a * b).sum();
            let p2: f64 = row.iter().zip(&components[1]).map(|(a, b)| a * b).sum();
            [p1, p2]
        })
        .collect();
    (projections, ratios, components)
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// (eigenvalues, eigenvector columns).
fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[i][j] * m[i][j];
            }
        }
        if off.sqrt() < 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eigvals: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    (eigvals, v)
}

/// Row i = rbf_weights(normalize(probe_i)); every row sums to one.
pub fn rbf_heatmap(bank: &AnchorBank, probes: &[f64]) -> Vec<Vec<f64>> {
    probes.iter().map(|&p| bank.rbf_weights(bank.normalize_param(p))).collect()
}

/// Uniform probe grid spanning the training range extended 10% both sides,
/// so extrapolation behavior is visible.
pub fn default_probe_grid(param_norm: [f64; 2], n: usize) -> Vec<f64> {
    let [lo, hi] = param_norm;
    let pad = 0.1 * (hi - lo);
    let (a, b) = (lo - pad, hi + pad);
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Plot-ready embedding diagnostics for one trained weight-generating model.
#[derive(Clone, Debug)]
pub struct EmbeddingReport {
    pub probe_params: Vec<f64>,
    /// e(p) per probe, (m x D_e).
    pub embeddings: Vec<Vec<f64>>,
    /// PCA of the query embeddings.
    pub projections: Vec<[f64; 2]>,
    pub explained_variance: [f64; 2],
    /// Anchor embeddings projected into the same basis.
    pub anchor_projections: Vec<[f64; 2]>,
    /// (m x N_e), rows sum to one.
    pub alpha_heatmap: Vec<Vec<f64>>,
    /// (m x m) pairwise L2 distances between generated weight vectors.
    pub weight_distances: Vec<Vec<f64>>,
}

/// Bundles pca2, rbf_heatmap, and the weight-distance matrix for a trained
/// model. Baseline variants carry no embedding space and are rejected.
pub fn embedding_report(state: &ModelState, probes: &[f64]) -> Result<EmbeddingReport> {
    if state.spec.variant != Variant::Phlienet {
        return Err(Error::Evaluation(format!(
            "embedding analysis needs a phlienet checkpoint, got variant {}",
            state.spec.variant.as_str()
        )));
    }
    assert!(!probes.is_empty());
    let bank = state
        .anchor_bank()
        .ok_or_else(|| Error::Config("phlienet state without anchor bank".into()))?;
    let hnn = state.spec.hypernet_spec().unwrap();

    let embeddings: Vec<Vec<f64>> = probes.iter().map(|&p| bank.embed(p)).collect();
    let alpha_heatmap = rbf_heatmap(&bank, probes);
    let weight_distances = if probes.len() >= 2 {
        hypernet::weight_distance_matrix(&hnn, &state.params, &bank, probes)?
    } else {
        vec![vec![0.0]]
    };

    let (projections, explained_variance, components) = if probes.len() >= 2 {
        pca2(&embeddings)
    } else {
        (vec![[0.0, 0.0]], [0.0, 0.0], vec![vec![0.0; bank.embedding_dim]; 2])
    };
    // project anchors into the same centered basis
    let d = bank.embedding_dim;
    let mut mean = vec![0.0; d];
    for e in &embeddings {
        for (a, b) in mean.iter_mut().zip(e) {
            *a += b;
        }
    }
    for a in &mut mean {
        *a /= embeddings.len() as f64;
    }
    let anchor_projections: Vec<[f64; 2]> = (0..bank.n_anchors)
        .map(|i| {
            let row = &bank.embeddings.data()[i * d..(i + 1) * d];
            let centered: Vec<f64> = row.iter().zip(&mean).map(|(a, b)| a - b).collect();
            let p1: f64 = centered.iter().zip(&components[0]).map(|(a, b)| a * b).sum();
            let p2: f64 = centered.iter().zip(&components[1]).map(|(a, b)| a * b).sum();
            [p1, p2]
        })
        .collect();

    Ok(EmbeddingReport {
        probe_params: probes.to_vec(),
        embeddings,
        projections,
        explained_variance,
        anchor_projections,
        alpha_heatmap,
        weight_distances,
    })
}

impl EmbeddingReport {
    /// embedding_pca.csv, rbf_heatmap.csv, weight_distances.csv.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let ppath = dir.join("embedding_pca.csv");
        let mut s = format!(
            "# explained_variance_pc1={},explained_variance_pc2={}\nkind,probe_param,pc1,pc2\n",
            self.explained_variance[0], self.explained_variance[1]
        );
        for (p, proj) in self.probe_params.iter().zip(&self.projections) {
            s.push_str(&format!("query,{p},{},{}\n", proj[0], proj[1]));
        }
        for (i, proj) in self.anchor_projections.iter().enumerate() {
            s.push_str(&format!("anchor,{i},{},{}\n", proj[0], proj[1]));
        }
        std::fs::write(&ppath, s).map_err(|e| Error::io(&ppath, e))?;

        let hpath = dir.join("rbf_heatmap.csv");
        let n_e = self.alpha_heatmap.first().map_or(0, |r| r.len());
        let mut s = String::from("probe_param");
        for i in 0..n_e {
            s.push_str(&format!(",alpha_{i}"));
        }
        s.push('\n');
        for (p, row) in self.probe_params.iter().zip(&self.alpha_heatmap) {
            s.push_str(&format!("{p}"));
            for a in row {
                s.push_str(&format!(",{a}"));
            }
            s.push('\n');
        }
        std::fs::write(&hpath, s).map_err(|e| Error::io(&hpath, e))?;

        let wpath = dir.join("weight_distances.csv");
        let mut s = String::from("probe_param");
        for p in &self.probe_params {
            s.push_str(&format!(",{p}"));
        }
        s.push('\n');
        for (p, row) in self.probe_params.iter().zip(&self.weight_distances) {
            s.push_str(&format!("{p}"));
            for d in row {
                s.push_str(&format!(",{d}"));
            }
            s.push('\n');
        }
        std::fs::write(&wpath, s).map_err(|e| Error::io(&wpath, e))?;
        Ok(())
    }
}

/// Fraction of consecutive probe pairs whose first principal coordinate
/// moves in the dominant direction (probes must be sorted by parameter); a
/// trained embedding that orders itself by the parameter scores near 1.
pub fn pc1_monotone_fraction(report: &EmbeddingReport) -> f64 {
    let pc1: Vec<f64> = report.projections.iter().map(|p| p[0]).collect();
    if pc1.len() < 2 {
        return 1.0;
    }
    let ups = pc1.windows(2).filter(|w| w[1] > w[0]).count();
    let downs = pc1.len() - 1 - ups;
    ups.max(downs) as f64 / (pc1.len() - 1) as f64
}

/// Fraction of rows whose off-diagonal distances grow monotonically with
/// |i - j| on both sides (probes must be sorted by parameter).
pub fn monotone_row_fraction(dist: &[Vec<f64>]) -> f64 {
    let m = dist.len();
    let mut ok = 0usize;
    for i in 0..m {
        let mut good = true;
        for j in i + 2..m {
            if dist[i][j] + 1e-12 < dist[i][j - 1] {
                good = false;
                break;
            }
        }
        if good {
            for j in (0..i.saturating_sub(1)).rev() {
                if dist[i][j] + 1e-12 < dist[i][j + 1] {
                    good = false;
                    break;
                }
            }
        }
        if good {
            ok += 1;
        }
    }
    ok as f64 / m as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::LieSpec;
    use crate::rng::Rng;
    use crate::sysgen::Scaler;
    use crate::targets::TargetSpec;
    use crate::trainer::ModelSpec;

    #[test]
    fn collinear_points_put_all_variance_on_pc1() {
        let points: Vec<Vec<f64>> =
            (0..10).map(|i| vec![i as f64 * 0.5, i as f64 * 1.0, -(i as f64) * 0.25]).collect();
        let (_, ratios, _) = pca2(&points);
        assert!((ratios[0] - 1.0).abs() < 1e-12);
        assert!(ratios[1].abs() < 1e-12);
    }

    #[test]
    fn axis_aligned_2d_recovers_coordinates() {
        // zero cross-covariance by construction, so pc1 is exactly the x axis
        let points: Vec<Vec<f64>> = vec![
            vec![-2.0, 0.1],
            vec![-1.0, -0.1],
            vec![0.0, 0.0],
            vec![1.0, -0.1],
            vec![2.0, 0.1],
        ];
        let (proj, ratios, comps) = pca2(&points);
        assert!(ratios[0] > 0.9);
        // pc1 is the x axis with positive orientation
        assert!((comps[0][0] - 1.0).abs() < 1e-6, "{:?}", comps[0]);
        for (p, orig) in proj.iter().zip(&points) {
            assert!((p[0] - orig[0]).abs() < 0.05);
        }
    }

    // Power-iteration + deflation oracle for the top-2 eigenpairs.
    fn power_oracle(points: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let m = points.len();
        let d = points[0].len();
        let mut mean = vec![0.0; d];
        for p in points {
            for (a, b) in mean.iter_mut().zip(p) {
                *a += b / m as f64;
            }
        }
        let mut cov = vec![vec![0.0; d]; d];
        for p in points {
            for i in 0..d {
                for j in 0..d {
                    cov[i][j] += (p[i] - mean[i]) * (p[j] - mean[j]) / m as f64;
                }
            }
        }
        let mut vals = Vec::new();
        let mut vecs = Vec::new();
        let mut deflated = cov.clone();
        for _ in 0..2 {
            let mut v = vec![1.0; d];
            for _ in 0..20000 {
                let mut w = vec![0.0; d];
                for i in 0..d {
                    for j in 0..d {
                        w[i] += deflated[i][j] * v[j];
                    }
                }
                let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                for (a, b) in v.iter_mut().zip(&w) {
                    *a = b / norm;
                }
            }
            let mut lambda = 0.0;
            for i in 0..d {
                for j in 0..d {
                    lambda += v[i] * deflated[i][j] * v[j];
                }
            }
            for i in 0..d {
                for j in 0..d {
                    deflated[i][j] -= lambda * v[i] * v[j];
                }
            }
            vals.push(lambda);
            vecs.push(v);
        }
        (vals, vecs)
    }

    #[test]
    fn random_matrix_matches_power_iteration_oracle() {
        let mut rng = Rng::new(33);
        let points: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..5).map(|k| rng.normal() * (1.0 + k as f64)).collect())
            .collect();
        let (proj, ratios, comps) = pca2(&points);
        let (vals, vecs) = power_oracle(&points);
        let total: f64 = {
            let m = points.len();
            let d = 5;
            let mut mean = vec![0.0; d];
            for p in &points {
                for (a, b) in mean.iter_mut().zip(p) {
                    *a += b / m as f64;
                }
            }
            points
                .iter()
                .map(|p| p.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .sum::<f64>()
                / m as f64
        };
        for k in 0..2 {
            assert!((ratios[k] - vals[k] / total).abs() < 1e-8, "ratio {k}");
            // directions agree up to sign
            let dot: f64 = comps[k].iter().zip(&vecs[k]).map(|(a, b)| a * b).sum();
            assert!((dot.abs() - 1.0).abs() < 1e-8, "component {k}: |dot| {}", dot.abs());
        }
        let _ = proj;
    }

    #[test]
    fn pca_translation_invariance_and_rotation_consistency() {
        let mut rng = Rng::new(44);
        let points: Vec<Vec<f64>> =
            (0..12).map(|_| (0..4).map(|_| rng.normal()).collect()).collect();
        let (proj_a, ratios_a, _) = pca2(&points);
        let shifted: Vec<Vec<f64>> =
            points.iter().map(|p| p.iter().map(|v| v + 5.5).collect()).collect();
        let (proj_b, ratios_b, _) = pca2(&shifted);
        for (a, b) in proj_a.iter().zip(&proj_b) {
            assert!((a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
        }
        assert!((ratios_a[0] - ratios_b[0]).abs() < 1e-12);

        // rotated inputs yield identical ratios and projections up to sign
        let rot = random_rotation(4, &mut rng);
        let rotated: Vec<Vec<f64>> = points
            .iter()
            .map(|p| (0..4).map(|i| (0..4).map(|j| rot[i][j] * p[j]).sum()).collect())
            .collect();
        let (proj_c, ratios_c, _) = pca2(&rotated);
        assert!((ratios_a[0] - ratios_c[0]).abs() < 1e-9);
        assert!((ratios_a[1] - ratios_c[1]).abs() < 1e-9);
        for (a, c) in proj_a.iter().zip(&proj_c) {
            assert!((a[0].abs() - c[0].abs()).abs() < 1e-8);
            assert!((a[1].abs() - c[1].abs()).abs() < 1e-8);
        }
    }

    fn random_rotation(d: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
        // Gram-Schmidt on a random Gaussian matrix
        let mut q: Vec<Vec<f64>> = Vec::new();
        for _ in 0..d {
            let mut v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            for u in &q {
                let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= dot * ui;
                }
            }
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            for vi in &mut v {
                *vi /= norm;
            }
            q.push(v);
        }
        q
    }

    #[test]
    fn zero_variance_input_is_all_zero() {
        let points = vec![vec![1.0, 2.0]; 5];
        let (proj, ratios, _) = pca2(&points);
        assert!(proj.iter().all(|p| p[0] == 0.0 && p[1] == 0.0));
        assert_eq!(ratios, [0.0, 0.0]);
    }

    fn phlienet_state(seed: u64) -> ModelState {
        let spec = ModelSpec::phlienet(
            "p",
            TargetSpec::tcnn_cd(2, 2, 8, 3, 3),
            LieSpec::new(4, 6, 0.2),
        );
        let scaler = Scaler { mean: vec![0.0, 0.0], std: vec![1.0, 1.0] };
        ModelState::init(&spec, &scaler, [1.0, 8.0], seed)
    }

    #[test]
    fn heatmap_rows_sum_to_one_and_peak_near_anchors() {
        let state = phlienet_state(2);
        let bank = state.anchor_bank().unwrap();
        let probes = default_probe_grid([1.0, 8.0], 50);
        let hm = rbf_heatmap(&bank, &probes);
        for row in &hm {
            let s: f64 = row.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        // a probe exactly at an anchor with a narrow kernel is near one-hot
        let mut narrow = bank.clone();
        narrow.bandwidth = 0.02;
        let at_anchor = narrow.param_norm[0]; // normalized 0 = anchor 0
        let row = rbf_heatmap(&narrow, &[at_anchor]);
        assert!(row[0][0] > 0.999, "{:?}", row[0]);
    }

    #[test]
    fn heatmap_rows_vary_smoothly() {
        let state = phlienet_state(3);
        let bank = state.anchor_bank().unwrap();
        let probes = default_probe_grid([1.0, 8.0], 200);
        let hm = rbf_heatmap(&bank, &probes);
        // normalized grid spacing over sigma bounds the l1 step
        let dp = (probes[1] - probes[0]) / (8.0 - 1.0);
        let bound = 4.0 * dp / bank.bandwidth;
        for w in hm.windows(2) {
            let l1: f64 = w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()).sum();
            assert!(l1 <= bound, "l1 {l1} > bound {bound}");
        }
    }

    #[test]
    fn report_rejects_baseline_variants() {
        let spec =
            ModelSpec::baseline("b", Variant::Agnostic, TargetSpec::ffnn(2, 2, 4, vec![4]));
        let scaler = Scaler { mean: vec![0.0, 0.0], std: vec![1.0, 1.0] };
        let state = ModelState::init(&spec, &scaler, [0.0, 1.0], 1);
        assert!(matches!(embedding_report(&state, &[0.5]), Err(Error::Evaluation(_))));
    }

    #[test]
    fn identical_anchor_embeddings_degenerate_report() {
        let mut state = phlienet_state(4);
        let emb = state.params.get_mut("lie.embeddings").unwrap();
        let d = 6;
        let row: Vec<f64> = (0..d).map(|i| i as f64 * 0.1).collect();
        for i in 0..4 {
            emb.data_mut()[i * d..(i + 1) * d].copy_from_slice(&row);
        }
        let probes = default_probe_grid([1.0, 8.0], 10);
        let report = embedding_report(&state, &probes).unwrap();
        assert_eq!(report.explained_variance, [0.0, 0.0]);
        assert!(report.projections.iter().all(|p| p[0] == 0.0 && p[1] == 0.0));
        // identical embeddings generate identical weights everywhere
        assert!(report.weight_distances.iter().flatten().all(|&v| v.abs() < 1e-9));
    }

    #[test]
    fn single_probe_report_is_degenerate_but_valid() {
        let state = phlienet_state(5);
        let report = embedding_report(&state, &[3.0]).unwrap();
        assert_eq!(report.weight_distances, vec![vec![0.0]]);
        assert_eq!(report.projections.len(), 1);
    }

    #[test]
    fn report_csvs_written() {
        let state = phlienet_state(6);
        let probes = default_probe_grid([1.0, 8.0], 12);
        let report = embedding_report(&state, &probes).unwrap();
        let dir = std::env::temp_dir().join(format!("phlianalysis_{}", std::process::id()));
        report.write(&dir).unwrap();
        for f in ["embedding_pca.csv", "rbf_heatmap.csv", "weight_distances.csv"] {
            let text = std::fs::read_to_string(dir.join(f)).unwrap();
            assert!(text.lines().count() >= 3, "{f} too short");
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn pc1_fraction_detects_ordered_projections() {
        let state = phlienet_state(9);
        let probes = default_probe_grid([1.0, 8.0], 30);
        let report = embedding_report(&state, &probes).unwrap();
        let f = pc1_monotone_fraction(&report);
        assert!((0.0..=1.0).contains(&f));
        // a line in embedding space is perfectly ordered
        let mut r2 = report.clone();
        r2.projections = (0..10).map(|i| [i as f64, 0.0]).collect();
        assert_eq!(pc1_monotone_fraction(&r2), 1.0);
        r2.projections = vec![[0.0, 0.0], [2.0, 0.0], [1.0, 0.0], [3.0, 0.0]];
        assert!((pc1_monotone_fraction(&r2) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn monotone_fraction_on_constructed_matrices() {
        // perfectly banded distances are monotone in every row
        let m = 6;
        let banded: Vec<Vec<f64>> =
            (0..m).map(|i| (0..m).map(|j| (i as f64 - j as f64).abs()).collect()).collect();
        assert_eq!(monotone_row_fraction(&banded), 1.0);
        // scrambled distances are not
        let mut rng = Rng::new(8);
        let noisy: Vec<Vec<f64>> =
            (0..m).map(|_| (0..m).map(|_| rng.uniform()).collect()).collect();
        assert!(monotone_row_fraction(&noisy) < 1.0);
    }
}
