//! Frame-embedding evaluation: Kendall's tau, phase classification, phase
//! progression, precision of cross-video retrieval at K, and DTW accuracy.
//!
//! Nearest-neighbor ties go to the smallest frame index throughout.

use alloc::vec;
use alloc::vec::Vec;

use crate::alignment::{distance_matrix, dtw_path};
use crate::error::{invalid, Error, Result};
use crate::linalg::{euclidean, solve, Matrix};
use crate::num;

/// Embeddings of one video with its per-frame annotations.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledVideo {
    pub embeddings: Matrix,
    pub labels: Vec<usize>,
    pub progress: Vec<f64>,
}

impl LabeledVideo {
    fn check(&self) -> Result<()> {
        let n = self.embeddings.rows();
        if self.labels.len() != n || self.progress.len() != n {
            return Err(invalid("annotations disagree with the number of frames"));
        }
        Ok(())
    }
}

fn nearest(query: &[f64], corpus: &Matrix) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (j, row) in corpus.row_iter().enumerate() {
        let d = euclidean(query, row);
        if d < best.0 {
            best = (d, j);
        }
    }
    best.1
}

/// `(concordant - discordant) / C(n, 2)` over frame pairs of `emb_a`, each
/// frame matched to its nearest neighbor in `emb_b`. A pair whose two frames
/// share a neighbor counts as discordant.
pub fn kendall_tau(emb_a: &Matrix, emb_b: &Matrix) -> Result<f64> {
    let n = emb_a.rows();
    if n < 2 {
        return Err(invalid("kendall tau needs at least two frames"));
    }
    if emb_b.rows() == 0 {
        return Err(invalid("second video has no frames"));
    }
    if emb_a.cols() != emb_b.cols() {
        return Err(Error::DimensionMismatch {
            expected: emb_a.cols(),
            got: emb_b.cols(),
        });
    }
    let nn: Vec<usize> = emb_a.row_iter().map(|r| nearest(r, emb_b)).collect();
    Ok(kendall_from_neighbors(&nn))
}

/// Tau from the neighbor sequence `nn[i]` of frames `i = 0..n`.
pub fn kendall_from_neighbors(nn: &[usize]) -> f64 {
    let n = nn.len();
    let mut score: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            score += if nn[i] < nn[j] { 1 } else { -1 };
        }
    }
    score as f64 / (n * (n - 1) / 2) as f64
}

/// Fraction of DTW path steps joining frames with equal labels.
pub fn dtw_accuracy(emb_a: &Matrix, labels_a: &[usize], emb_b: &Matrix, labels_b: &[usize]) -> Result<f64> {
    if labels_a.len() != emb_a.rows() || labels_b.len() != emb_b.rows() {
        return Err(invalid("labels disagree with the number of frames"));
    }
    let path = dtw_path(&distance_matrix(emb_a, emb_b)?);
    let hits = path.steps().iter().filter(|&&(i, j)| labels_a[i] == labels_b[j]).count();
    Ok(hits as f64 / path.len() as f64)
}

/// Mean fraction of the `k` nearest frames from *other* videos that share the
/// query's label, over every frame of every video.
pub fn average_precision_at_k(videos: &[LabeledVideo], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(invalid("K must be positive"));
    }
    if videos.len() < 2 {
        return Err(invalid("retrieval needs at least two videos"));
    }
    for v in videos {
        v.check()?;
    }
    let mut total = 0.0;
    let mut queries = 0usize;
    let mut cands: Vec<(f64, usize, usize)> = Vec::new();
    for (qv, query) in videos.iter().enumerate() {
        for (qi, q) in query.embeddings.row_iter().enumerate() {
            cands.clear();
            let mut order = 0;
            for (cv, corpus) in videos.iter().enumerate() {
                if cv == qv {
                    continue;
                }
                for (ci, c) in corpus.embeddings.row_iter().enumerate() {
                    cands.push((euclidean(q, c), order, corpus.labels[ci]));
                    order += 1;
                }
            }
            cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let take = k.min(cands.len());
            let hits = cands[..take].iter().filter(|c| c.2 == query.labels[qi]).count();
            total += hits as f64 / take as f64;
            queries += 1;
        }
    }
    Ok(total / queries as f64)
}

/// Per-dimension standardization fitted on a training design matrix.
struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    fn fit(x: &Matrix) -> Self {
        let (n, d) = x.shape();
        let mut mean = vec![0.0; d];
        for r in x.row_iter() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n as f64;
            }
        }
        let mut var = vec![0.0; d];
        for r in x.row_iter() {
            for k in 0..d {
                var[k] += (r[k] - mean[k]) * (r[k] - mean[k]) / n as f64;
            }
        }
        let scale = var.iter().map(|&v| if v > 1e-24 { 1.0 / num::sqrt(v) } else { 0.0 }).collect();
        Self { mean, scale }
    }

    fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) * s)
            .collect()
    }
}

/// Multinomial logistic regression trained by full-batch gradient descent.
pub struct SoftmaxClassifier {
    standardizer: Standardizer,
    /// `classes x (d + 1)`, bias last.
    weights: Matrix,
}

/// Fixed optimization budget of the phase classifier.
pub const CLASSIFIER_ITERS: usize = 400;
const CLASSIFIER_LR: f64 = 0.5;
const CLASSIFIER_L2: f64 = 1e-4;

impl SoftmaxClassifier {
    pub fn fit(x: &Matrix, labels: &[usize], classes: usize) -> Result<Self> {
        if x.rows() == 0 || labels.len() != x.rows() {
            return Err(invalid("classifier needs labelled training frames"));
        }
        if labels.iter().any(|&l| l >= classes) {
            return Err(invalid("label out of range"));
        }
        let standardizer = Standardizer::fit(x);
        let rows: Vec<Vec<f64>> = x.row_iter().map(|r| standardizer.apply(r)).collect();
        let d = x.cols();
        let n = rows.len() as f64;
        let mut w = Matrix::zeros(classes, d + 1);
        let mut grad = Matrix::zeros(classes, d + 1);
        let mut probs = vec![0.0; classes];
        for _ in 0..CLASSIFIER_ITERS {
            grad.as_mut_slice().iter_mut().for_each(|g| *g = 0.0);
            for (r, &y) in rows.iter().zip(labels) {
                Self::scores(&w, r, &mut probs);
                for c in 0..classes {
                    let e = (probs[c] - if c == y { 1.0 } else { 0.0 }) / n;
                    let g = grad.row_mut(c);
                    for k in 0..d {
                        g[k] += e * r[k];
                    }
                    g[d] += e;
                }
            }
            for c in 0..classes {
                for k in 0..=d {
                    let reg = if k < d { CLASSIFIER_L2 * w[(c, k)] } else { 0.0 };
                    w[(c, k)] -= CLASSIFIER_LR * (grad[(c, k)] + reg);
                }
            }
        }
        Ok(Self {
            standardizer,
            weights: w,
        })
    }

    fn scores(w: &Matrix, r: &[f64], out: &mut [f64]) {
        let d = r.len();
        for (c, o) in out.iter_mut().enumerate() {
            let row = w.row(c);
            *o = row[..d].iter().zip(r).map(|(a, b)| a * b).sum::<f64>() + row[d];
        }
        let hi = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for o in out.iter_mut() {
            *o = num::exp(*o - hi);
            s += *o;
        }
        for o in out.iter_mut() {
            *o /= s;
        }
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        let r = self.standardizer.apply(row);
        let mut p = vec![0.0; self.weights.rows()];
        Self::scores(&self.weights, &r, &mut p);
        (0..p.len()).fold(0, |best, c| if p[c] > p[best] { c } else { best })
    }
}

/// Deterministic stratified subsample: from each label, `max(1, round(f · n_c))`
/// evenly spaced frames in their original order.
pub fn stratified_subset(labels: &[usize], fraction: f64) -> Vec<usize> {
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut out = Vec::new();
    for c in 0..classes {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if members.is_empty() {
            continue;
        }
        let n = members.len();
        let count = ((fraction * n as f64 + 0.5) as usize).clamp(1, n);
        for k in 0..count {
            out.push(members[k * n / count]);
        }
    }
    out.sort_unstable();
    out
}

fn stack(videos: &[LabeledVideo]) -> Result<(Matrix, Vec<usize>, Vec<f64>)> {
    let d = videos.first().map_or(0, |v| v.embeddings.cols());
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut progress = Vec::new();
    for v in videos {
        v.check()?;
        if v.embeddings.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: v.embeddings.cols(),
            });
        }
        data.extend_from_slice(v.embeddings.as_slice());
        labels.extend_from_slice(&v.labels);
        progress.extend_from_slice(&v.progress);
    }
    Ok((Matrix::from_vec(labels.len(), d, data)?, labels, progress))
}

/// Test accuracy of the phase classifier trained on each fraction of the
/// training frames; one `(fraction, accuracy)` entry per requested fraction.
pub fn phase_classification(train: &[LabeledVideo], test: &[LabeledVideo], fractions: &[f64]) -> Result<Vec<(f64, f64)>> {
    let (x, y, _) = stack(train)?;
    let (xt, yt, _) = stack(test)?;
    if x.rows() == 0 || xt.rows() == 0 {
        return Err(invalid("phase classification needs train and test frames"));
    }
    let classes = y.iter().chain(&yt).copied().max().unwrap_or(0) + 1;
    let mut out = Vec::with_capacity(fractions.len());
    for &f in fractions {
        if !(f > 0.0 && f <= 1.0) {
            return Err(invalid("label fractions must lie in (0, 1]"));
        }
        let idx = stratified_subset(&y, f);
        let xs = x.select_rows(&idx);
        let ys: Vec<usize> = idx.iter().map(|&i| y[i]).collect();
        let clf = SoftmaxClassifier::fit(&xs, &ys, classes)?;
        let correct = xt.row_iter().zip(&yt).filter(|(r, &l)| clf.predict(r) == l).count();
        out.push((f, correct as f64 / xt.rows() as f64));
    }
    Ok(out)
}

/// Least-squares linear map (with intercept) from embeddings to targets.
/// A tiny ridge term keeps rank-deficient designs solvable.
pub fn fit_linear(x: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    let (n, d) = x.shape();
    if n == 0 || y.len() != n {
        return Err(invalid("regression needs matching rows and targets"));
    }
    let p = d + 1;
    let mut xtx = Matrix::zeros(p, p);
    let mut xty = vec![0.0; p];
    for (r, &t) in x.row_iter().zip(y) {
        for a in 0..p {
            let va = if a < d { r[a] } else { 1.0 };
            xty[a] += va * t;
            for b in 0..p {
                let vb = if b < d { r[b] } else { 1.0 };
                xtx[(a, b)] += va * vb;
            }
        }
    }
    let trace: f64 = (0..d).map(|k| xtx[(k, k)]).sum();
    let ridge = 1e-10 * (trace / d.max(1) as f64).max(1.0);
    for k in 0..d {
        xtx[(k, k)] += ridge;
    }
    solve(&xtx, &xty)
}

fn predict_linear(beta: &[f64], row: &[f64]) -> f64 {
    let d = row.len();
    beta[..d].iter().zip(row).map(|(b, v)| b * v).sum::<f64>() + beta[d]
}

/// Coefficient of determination of `pred` against `y`; `None` for constant `y`.
pub fn r_squared(y: &[f64], pred: &[f64]) -> Option<f64> {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if ss_tot <= 0.0 {
        return None;
    }
    let ss_res: f64 = y.iter().zip(pred).map(|(a, b)| (a - b) * (a - b)).sum();
    Some(1.0 - ss_res / ss_tot)
}

/// Linear regression from embeddings to progress, fitted on the training
/// videos; mean per-video R² on the test videos.
pub fn phase_progression(train: &[LabeledVideo], test: &[LabeledVideo]) -> Result<f64> {
    let (x, _, y) = stack(train)?;
    let beta = fit_linear(&x, &y)?;
    let mut total = 0.0;
    let mut count = 0usize;
    for v in test {
        v.check()?;
        let pred: Vec<f64> = v.embeddings.row_iter().map(|r| predict_linear(&beta, r)).collect();
        if let Some(r2) = r_squared(&v.progress, &pred) {
            total += r2;
            count += 1;
        }
    }
    if count == 0 {
        return Err(invalid("no test video with varying progress"));
    }
    Ok(total / count as f64)
}

/// The full metric suite.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub kendall_tau: f64,
    pub phase_classification: Vec<(f64, f64)>,
    pub phase_progression: f64,
    pub ap_at_k: Vec<(usize, f64)>,
    pub dtw_accuracy: f64,
}

impl EvalReport {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !(-1.0..=1.0).contains(&self.kendall_tau) {
            return Err(invalid("kendall tau out of range"));
        }
        if self.phase_classification.is_empty() || self.ap_at_k.is_empty() {
            return Err(invalid("metric maps must be nonempty"));
        }
        if !self.phase_classification.iter().all(|&(_, a)| unit(a)) || !self.ap_at_k.iter().all(|&(_, a)| unit(a)) {
            return Err(invalid("accuracy out of range"));
        }
        if !(self.phase_progression <= 1.0) || !unit(self.dtw_accuracy) {
            return Err(invalid("progression or DTW accuracy out of range"));
        }
        Ok(())
    }
}

/// Kendall's tau averaged over ordered pairs of distinct test videos.
pub fn mean_kendall_tau(test: &[LabeledVideo]) -> Result<f64> {
    let mut s = 0.0;
    let mut n = 0usize;
    for (a, va) in test.iter().enumerate() {
        for (b, vb) in test.iter().enumerate() {
            if a != b {
                s += kendall_tau(&va.embeddings, &vb.embeddings)?;
                n += 1;
            }
        }
    }
    if n == 0 {
        return Err(invalid("need at least two test videos"));
    }
    Ok(s / n as f64)
}

/// DTW accuracy averaged over unordered pairs of test videos.
pub fn mean_dtw_accuracy(test: &[LabeledVideo]) -> Result<f64> {
    let mut s = 0.0;
    let mut n = 0usize;
    for a in 0..test.len() {
        for b in a + 1..test.len() {
            s += dtw_accuracy(&test[a].embeddings, &test[a].labels, &test[b].embeddings, &test[b].labels)?;
            n += 1;
        }
    }
    if n == 0 {
        return Err(invalid("need at least two test videos"));
    }
    Ok(s / n as f64)
}

pub fn evaluate(train: &[LabeledVideo], test: &[LabeledVideo], fractions: &[f64], ks: &[usize]) -> Result<EvalReport> {
    let ap_at_k = ks
        .iter()
        .map(|&k| Ok((k, average_precision_at_k(test, k)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport {
        kendall_tau: mean_kendall_tau(test)?,
        phase_classification: phase_classification(train, test, fractions)?,
        phase_progression: phase_progression(train, test)?,
        ap_at_k,
        dtw_accuracy: mean_dtw_accuracy(test)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> Matrix {
        Matrix::from_fn(n, 2, |i, k| if k == 0 { i as f64 } else { (i as f64 * 0.37).sin() })
    }

    fn video(emb: Matrix, labels: Vec<usize>) -> LabeledVideo {
        let n = emb.rows();
        LabeledVideo {
            embeddings: emb,
            labels,
            progress: (0..n).map(|i| i as f64 / (n - 1).max(1) as f64).collect(),
        }
    }

    #[test]
    fn tau_self_and_reverse() {
        let z = line(7);
        assert_eq!(kendall_tau(&z, &z).unwrap(), 1.0);
        let rev = z.select_rows(&[6, 5, 4, 3, 2, 1, 0]);
        assert_eq!(kendall_tau(&z, &rev).unwrap(), -1.0);
    }

    #[test]
    fn tau_hand_case() {
        // neighbors of frames 0, 1, 2 are 0, 2, 1: pairs (0,1) and (0,2)
        // concordant, (1,2) discordant
        let a = Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        let b = Matrix::from_rows(&[[0.0], [2.1], [0.9]]).unwrap();
        assert!((kendall_tau(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn tau_duplicate_neighbors_are_discordant() {
        assert_eq!(kendall_from_neighbors(&[0, 0]), -1.0);
    }

    #[test]
    fn tau_needs_two_frames() {
        assert!(kendall_tau(&line(1), &line(3)).is_err());
    }

    #[test]
    fn tau_invariant_to_monotone_distance_transform() {
        // scaling all embeddings scales distances but keeps neighbor identity
        let a = Matrix::from_fn(6, 3, |i, k| ((i * 3 + k) as f64 * 0.9).sin());
        let b = Matrix::from_fn(8, 3, |i, k| ((i * 2 + k) as f64 * 0.7).cos());
        assert_eq!(kendall_tau(&a, &b).unwrap(), kendall_tau(&a.scale(4.0), &b.scale(4.0)).unwrap());
    }

    #[test]
    fn dtw_accuracy_examples() {
        let z = line(6);
        let l = vec![0, 0, 1, 1, 2, 2];
        assert_eq!(dtw_accuracy(&z, &l, &z, &l).unwrap(), 1.0);
        assert_eq!(dtw_accuracy(&z, &[0; 6], &z, &[1; 6]).unwrap(), 0.0);
        let zb = line(9);
        let lb = vec![0, 0, 0, 1, 1, 1, 2, 2, 2];
        let base = dtw_accuracy(&z, &l, &zb, &lb).unwrap();
        assert_eq!(base, dtw_accuracy(&z.scale(2.5), &l, &zb.scale(2.5), &lb).unwrap());
    }

    #[test]
    fn dtw_accuracy_close_to_ground_truth_path() {
        use crate::synth::{generate_videos, ground_truth_alignment, SynthConfig};
        use rand::SeedableRng;
        let cfg = SynthConfig { noise: 0.0, appearance: 0.0, ..SynthConfig::default() };
        let vids = generate_videos(&cfg, 4, &mut rand_chacha::ChaCha8Rng::seed_from_u64(11)).unwrap();
        for w in vids.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let gt = ground_truth_alignment(a, b).unwrap();
            let oracle = gt.steps().iter().filter(|&&(i, j)| a.phase_labels[i] == b.phase_labels[j]).count() as f64 / gt.len() as f64;
            let acc = dtw_accuracy(&a.features, &a.phase_labels, &b.features, &b.phase_labels).unwrap();
            assert!((acc - oracle).abs() <= 0.05, "{acc} vs {oracle}");
        }
    }

    #[test]
    fn ap_single_label_and_full_corpus() {
        let v1 = video(line(4), vec![0; 4]);
        let v2 = video(line(5), vec![0; 5]);
        for k in [1, 3, 9] {
            assert_eq!(average_precision_at_k(&[v1.clone(), v2.clone()], k).unwrap(), 1.0);
        }
        let v1 = video(line(4), vec![0, 0, 1, 1]);
        let v2 = video(line(4), vec![0, 1, 0, 1]);
        assert_eq!(average_precision_at_k(&[v1, v2], 4).unwrap(), 0.5);
    }

    #[test]
    fn ap_matches_brute_force() {
        let emb = |s: f64| Matrix::from_fn(3, 2, |i, k| ((i as f64 + s) * (k as f64 + 1.3)).sin());
        let vids = [
            video(emb(0.0), vec![0, 1, 1]),
            video(emb(0.5), vec![0, 0, 1]),
        ];
        // brute force: for every query rank all 3 frames of the other video
        let mut total = 0.0;
        for q in 0..2 {
            let o = 1 - q;
            for i in 0..3 {
                let mut d: Vec<(f64, usize)> = (0..3)
                    .map(|j| (euclidean(vids[q].embeddings.row(i), vids[o].embeddings.row(j)), j))
                    .collect();
                d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                let hits = d[..2].iter().filter(|x| vids[o].labels[x.1] == vids[q].labels[i]).count();
                total += hits as f64 / 2.0;
            }
        }
        assert!((average_precision_at_k(&vids, 2).unwrap() - total / 6.0).abs() < 1e-15);
    }

    #[test]
    fn classification_separable() {
        let mk = |offset: f64| {
            let emb = Matrix::from_fn(20, 2, |i, k| if k == 0 { if i < 10 { -1.0 - offset } else { 1.0 + offset } } else { ((i % 10) as f64 * 0.3).sin() });
            video(emb, (0..20).map(|i| usize::from(i >= 10)).collect())
        };
        let res = phase_classification(&[mk(0.0), mk(0.2)], &[mk(0.1)], &[0.1, 0.5, 1.0]).unwrap();
        assert_eq!(res.len(), 3);
        for (_, acc) in res {
            assert_eq!(acc, 1.0);
        }
    }

    #[test]
    fn classification_chance_with_shuffled_labels() {
        let mut s = 12345u64;
        let mut rnd = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut mk = |n: usize| {
            let emb = Matrix::from_fn(n, 4, |_, _| rnd());
            let labels: Vec<usize> = (0..n).map(|_| (rnd() * 4.0) as usize).collect();
            video(emb, labels)
        };
        let train = [mk(200), mk(200)];
        let test = [mk(400)];
        for (_, acc) in phase_classification(&train, &test, &[0.5, 1.0]).unwrap() {
            assert!((acc - 0.25).abs() <= 0.1, "{acc}");
        }
    }

    #[test]
    fn stratified_subset_keeps_every_class() {
        let labels = [0, 0, 0, 0, 1, 1, 2, 2, 2, 2, 2, 2];
        let idx = stratified_subset(&labels, 0.1);
        assert_eq!(idx, vec![0, 4, 6]);
        assert_eq!(stratified_subset(&labels, 1.0).len(), labels.len());
    }

    #[test]
    fn progression_exactly_linear() {
        let mk = |n: usize, s: f64| {
            let emb = Matrix::from_fn(n, 2, |i, k| if k == 0 { i as f64 / (n - 1) as f64 * 2.0 + 0.5 } else { (i as f64 * s).sin() });
            let progress = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
            LabeledVideo { embeddings: emb, labels: vec![0; n], progress }
        };
        let r2 = phase_progression(&[mk(10, 0.3), mk(14, 0.7)], &[mk(9, 0.5)]).unwrap();
        assert!((r2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn progression_constant_embeddings_nonpositive() {
        let mk = |n: usize| LabeledVideo {
            embeddings: Matrix::filled(n, 3, 0.7),
            labels: vec![0; n],
            progress: (0..n).map(|i| (i as f64 / (n - 1) as f64).powi(2)).collect(),
        };
        assert!(phase_progression(&[mk(10)], &[mk(7), mk(12)]).unwrap() <= 1e-9);
    }

    #[test]
    fn regression_matches_normal_equations() {
        // two points per dimension: y = 1 + 2 x0 - 3 x1 fits exactly through
        // (0,0)->1, (1,0)->3, (0,1)->-2, (1,1)->0
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let y = [1.0, 3.0, -2.0, 0.0];
        let beta = fit_linear(&x, &y).unwrap();
        assert!((beta[0] - 2.0).abs() < 1e-8);
        assert!((beta[1] + 3.0).abs() < 1e-8);
        assert!((beta[2] - 1.0).abs() < 1e-8);
        // noisy version against the closed form of the 1-D normal equations
        let x = Matrix::from_rows(&[[0.0], [1.0], [3.0]]).unwrap();
        let y = [1.0, 2.0, 2.0];
        let (mx, my) = (4.0 / 3.0, 5.0 / 3.0);
        let sxy = (0.0 - mx) * (1.0 - my) + (1.0 - mx) * (2.0 - my) + (3.0 - mx) * (2.0 - my);
        let sxx = mx * mx + (1.0 - mx) * (1.0 - mx) + (3.0 - mx) * (3.0 - mx);
        let slope = sxy / sxx;
        let beta = fit_linear(&x, &y).unwrap();
        assert!((beta[0] - slope).abs() < 1e-8);
        assert!((beta[1] - (my - slope * mx)).abs() < 1e-8);
    }

    #[test]
    fn report_ranges() {
        let vids: Vec<LabeledVideo> = (0..3)
            .map(|s| {
                let n = 8 + s;
                let emb = Matrix::from_fn(n, 3, |i, k| ((i * (k + 1)) as f64 * 0.4 + s as f64).sin());
                video(emb, (0..n).map(|i| i * 2 / n).collect())
            })
            .collect();
        let r = evaluate(&vids, &vids, &[0.5, 1.0], &[1, 3]).unwrap();
        r.validate().unwrap();
    }
}
