//! Dataset representation and margin geometry.
//!
//! Datasets store label-folded points: row `i` is `y_i * x_i`, so every
//! effective label is +1 and the objective only sees the folded rows.
//! After [`normalize`], all rows satisfy `|x_i| <= 1`.
//!
//! Two max-margin solvers are provided for `d = 2`: an exact candidate
//! enumeration ([`max_margin_2d`]) and an independent angle-grid oracle
//! ([`max_margin_grid`]) used to cross-check the exact solver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::math::{dot, fmt_f64, l2_norm};
use crate::{Error, Result};

/// Norm slack tolerated on stored points (`|x_i| <= 1 + NORM_SLACK`).
pub const NORM_SLACK: f64 = 1e-12;

/// A dataset of `n` label-folded points in `d` dimensions, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    d: usize,
    points: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from flat row-major storage, validating shape,
    /// finiteness, and the unit norm bound.
    pub fn new(d: usize, points: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        if points.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if !points.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: points.len() % d,
            });
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("points must be finite".into()));
        }
        let ds = Dataset { d, points };
        for i in 0..ds.len() {
            let norm = l2_norm(ds.point(i));
            if norm > 1.0 + NORM_SLACK {
                return Err(Error::NormTooLarge { index: i, norm });
            }
        }
        Ok(ds)
    }

    /// Builds a dataset from per-point rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map(|r| r.len()).ok_or(Error::EmptyDataset)?;
        let mut flat = Vec::with_capacity(rows.len() * d);
        for row in rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        Dataset::new(d, flat)
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.points.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Dimension of each point.
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Point `i` as a slice (panics if out of bounds).
    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.d)
    }

    /// Flat row-major storage.
    pub fn as_flat(&self) -> &[f64] {
        &self.points
    }

    /// Smallest inner product of `w` with any point.
    pub fn min_margin(&self, w: &[f64]) -> f64 {
        self.iter_points()
            .map(|x| dot(w, x))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Provenance of a margin certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    /// Exact 2-D candidate enumeration.
    Exact2d,
    /// Angle-grid scan.
    Grid,
    /// Margin guaranteed by construction (generated datasets); the true
    /// maximum margin may be larger.
    Nominal,
}

/// A unit direction with a certified margin, plus (for `d = 2`) the
/// orthogonal unit direction used for trajectory decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginCertificate {
    pub gamma: f64,
    pub w_star: Vec<f64>,
    /// `w_star` rotated by +90 degrees; present only when `d = 2`.
    pub v_star: Option<Vec<f64>>,
    pub kind: CertificateKind,
    /// Indices attaining the margin (exact solver only).
    pub support: Vec<usize>,
}

impl MarginCertificate {
    pub fn dim(&self) -> usize {
        self.w_star.len()
    }
}

/// Counter-clockwise rotation by 90 degrees: `(x, y) -> (-y, x)`.
fn rotate90(w: &[f64]) -> Vec<f64> {
    vec![-w[1], w[0]]
}

/// Folds labels and rescales so the largest point norm is 1.
///
/// Row `i` of the result is `y_i * x_i / max_j |x_j|`. Max norms already
/// within [`NORM_SLACK`] of 1 are treated as 1, so repeated normalization is
/// a bit-exact no-op.
pub fn normalize(raw: &[Vec<f64>], labels: &[f64]) -> Result<Dataset> {
    if raw.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if raw.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: raw.len(),
            got: labels.len(),
        });
    }
    for (i, y) in labels.iter().enumerate() {
        if *y != 1.0 && *y != -1.0 {
            return Err(Error::InvalidParameter(format!(
                "label {i} must be -1 or +1, got {y}"
            )));
        }
    }
    let d = raw[0].len();
    let mut max_norm = 0.0f64;
    for (i, row) in raw.iter().enumerate() {
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
        let norm = l2_norm(row);
        if norm == 0.0 {
            return Err(Error::ZeroNormPoint { index: i });
        }
        max_norm = max_norm.max(norm);
    }
    let scale = if (max_norm - 1.0).abs() <= NORM_SLACK {
        1.0
    } else {
        max_norm
    };
    let mut flat = Vec::with_capacity(raw.len() * d);
    for (row, y) in raw.iter().zip(labels) {
        flat.extend(row.iter().map(|v| y * v / scale));
    }
    Dataset::new(d, flat)
}

fn angle_in_2pi(w: &[f64]) -> f64 {
    let a = w[1].atan2(w[0]);
    if a < 0.0 {
        a + 2.0 * std::f64::consts::PI
    } else {
        a
    }
}

/// Exact 2-D max-margin direction by candidate enumeration.
///
/// The optimum of `max_{|w|=1} min_i <w, x_i>` is attained either where a
/// single constraint peaks (`w = x_i/|x_i|`) or where two constraints cross
/// (the unit directions orthogonal to `x_i - x_j`). All such candidates are
/// evaluated; ties are broken by the smallest angle in `[0, 2pi)`.
pub fn max_margin_2d(data: &Dataset) -> Result<MarginCertificate> {
    if data.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: data.dim(),
        });
    }
    let n = data.len();
    let mut candidates: Vec<[f64; 2]> = Vec::with_capacity(n + n * n);
    for x in data.iter_points() {
        let norm = l2_norm(x);
        if norm > 0.0 {
            candidates.push([x[0] / norm, x[1] / norm]);
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let xi = data.point(i);
            let xj = data.point(j);
            let diff = [xi[0] - xj[0], xi[1] - xj[1]];
            let norm = l2_norm(&diff);
            if norm == 0.0 {
                continue; // duplicate points: every direction equalizes
            }
            // Unit directions orthogonal to the difference, both signs.
            candidates.push([-diff[1] / norm, diff[0] / norm]);
            candidates.push([diff[1] / norm, -diff[0] / norm]);
        }
    }

    let mut best_margin = f64::NEG_INFINITY;
    let mut best: Option<[f64; 2]> = None;
    for cand in &candidates {
        let margin = data.min_margin(cand);
        let better = margin > best_margin
            || (margin == best_margin
                && best.is_some_and(|b| angle_in_2pi(cand) < angle_in_2pi(&b)));
        if better {
            best_margin = margin;
            best = Some(*cand);
        }
    }
    let w = best.expect("candidate list nonempty for nonempty dataset");
    if best_margin <= 0.0 {
        return Err(Error::NonSeparable {
            margin: best_margin,
        });
    }
    let tol = 1e-9 * best_margin.abs().max(1.0);
    let support = (0..n)
        .filter(|&i| dot(&w, data.point(i)) <= best_margin + tol)
        .collect();
    Ok(MarginCertificate {
        gamma: best_margin,
        w_star: w.to_vec(),
        v_star: Some(rotate90(&w)),
        kind: CertificateKind::Exact2d,
        support,
    })
}

/// Independent angle-grid oracle for the 2-D max margin.
///
/// Scans `resolution` equally spaced angles, then zooms into the bracket
/// around the best scanned angle so the returned margin is limited by float
/// precision rather than by the grid pitch. Never shares code with
/// [`max_margin_2d`].
pub fn max_margin_grid(data: &Dataset, resolution: usize) -> Result<MarginCertificate> {
    if data.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: data.dim(),
        });
    }
    if resolution < 4 {
        return Err(Error::InvalidParameter(
            "grid resolution must be at least 4".into(),
        ));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let eval = |theta: f64| -> f64 {
        let w = [theta.cos(), theta.sin()];
        data.min_margin(&w)
    };

    let mut best_theta = 0.0f64;
    let mut best_margin = f64::NEG_INFINITY;
    for k in 0..resolution {
        let theta = two_pi * (k as f64) / (resolution as f64);
        let margin = eval(theta);
        if margin > best_margin {
            best_margin = margin;
            best_theta = theta;
        }
    }

    // Local zoom on the winning bracket. 40 rounds of a 9-point stencil with
    // a 4x shrink end far below f64 angular resolution.
    let mut half = two_pi / (resolution as f64);
    for _ in 0..40 {
        let center = best_theta;
        for j in -4i32..=4 {
            let theta = center + (j as f64) * half / 4.0;
            let margin = eval(theta);
            if margin > best_margin {
                best_margin = margin;
                best_theta = theta;
            }
        }
        half /= 4.0;
    }

    if best_margin <= 0.0 {
        return Err(Error::NonSeparable {
            margin: best_margin,
        });
    }
    let w = vec![best_theta.cos(), best_theta.sin()];
    Ok(MarginCertificate {
        gamma: best_margin,
        v_star: Some(rotate90(&w)),
        w_star: w,
        kind: CertificateKind::Grid,
        support: Vec::new(),
    })
}

/// Samples a point uniformly from the `dim`-ball of the given radius.
fn sample_ball(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = l2_norm(&g);
        if norm > 0.0 {
            let u: f64 = rng.gen();
            let r = radius * u.powf(1.0 / dim as f64);
            return g.iter().map(|v| v * r / norm).collect();
        }
    }
}

/// Generates a random dataset with guaranteed margin `gamma` along `e1`.
///
/// Every point has first coordinate exactly `gamma`; the remaining
/// coordinates are uniform over the `(d-1)`-ball of radius
/// `sqrt(1 - gamma^2)`, so `|x_i| <= 1`. Deterministic given the seed.
pub fn generate_random(
    d: usize,
    n: usize,
    gamma: f64,
    seed: u64,
) -> Result<(Dataset, MarginCertificate)> {
    if d < 2 {
        return Err(Error::InvalidParameter("d must be >= 2".into()));
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if !(0.0 < gamma && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be in (0, 1), got {gamma}"
        )));
    }
    let radius = (1.0 - gamma * gamma).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flat = Vec::with_capacity(n * d);
    for _ in 0..n {
        flat.push(gamma);
        flat.extend(sample_ball(&mut rng, d - 1, radius));
    }
    let data = Dataset::new(d, flat)?;
    let mut w_star = vec![0.0; d];
    w_star[0] = 1.0;
    let v_star = (d == 2).then(|| rotate90(&w_star));
    let cert = MarginCertificate {
        gamma,
        w_star,
        v_star,
        kind: CertificateKind::Nominal,
        support: Vec::new(),
    };
    Ok((data, cert))
}

/// Writes the dataset as CSV with header `x1,...,xd,y`. Labels are already
/// folded into the rows, so `y` is always 1.
pub fn save_csv(data: &Dataset, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let header: Vec<String> = (1..=data.dim())
        .map(|j| format!("x{j}"))
        .chain(std::iter::once("y".to_string()))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for x in data.iter_points() {
        let fields: Vec<String> = x
            .iter()
            .map(|v| fmt_f64(*v))
            .chain(std::iter::once("1".to_string()))
            .collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Loads a dataset from CSV (`x1,...,xd,y` header, `y` in {-1, +1}).
///
/// With `normalize_input` set, labels are folded and the rows rescaled as in
/// [`normalize`]; otherwise all labels must already be +1 and every row must
/// satisfy the unit norm bound.
pub fn load_csv(path: &Path, normalize_input: bool) -> Result<Dataset> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::EmptyDataset)?;
    let header = header?;
    let cols: Vec<&str> = header.trim_end().split(',').collect();
    if cols.len() < 2 || cols.last() != Some(&"y") {
        return Err(Error::Parse {
            line: 1,
            message: "header must be x1,...,xd,y".into(),
        });
    }
    let d = cols.len() - 1;
    for (j, col) in cols[..d].iter().enumerate() {
        if *col != format!("x{}", j + 1) {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected column x{}, got {col}", j + 1),
            });
        }
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<f64> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        if fields.len() != d + 1 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {} fields, got {}", d + 1, fields.len()),
            });
        }
        let mut row = Vec::with_capacity(d);
        for f in &fields[..d] {
            row.push(f.trim().parse::<f64>().map_err(|e| Error::Parse {
                line: line_no,
                message: format!("bad number {f:?}: {e}"),
            })?);
        }
        let y = fields[d].trim().parse::<f64>().map_err(|e| Error::Parse {
            line: line_no,
            message: format!("bad label {:?}: {e}", fields[d]),
        })?;
        if y != 1.0 && y != -1.0 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("label must be -1 or 1, got {y}"),
            });
        }
        rows.push(row);
        labels.push(y);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if normalize_input {
        normalize(&rows, &labels)
    } else {
        if let Some(i) = labels.iter().position(|y| *y != 1.0) {
            return Err(Error::InvalidParameter(format!(
                "point {i} has label -1; reload with normalization to fold labels"
            )));
        }
        Dataset::from_rows(&rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    /// Angle between unit directions, ignoring sign.
    fn signfree_angle(a: &[f64], b: &[f64]) -> f64 {
        dot(a, b).abs().min(1.0).acos()
    }

    #[test]
    fn normalize_folds_labels_and_scales() {
        let ds = normalize(&[vec![2.0, 0.0], vec![0.0, -2.0]], &[1.0, -1.0]).unwrap();
        assert_eq!(ds.point(0), &[1.0, 0.0]);
        assert_eq!(ds.point(1), &[0.0, 1.0]);
    }

    #[test]
    fn normalize_is_identity_on_unit_data() {
        let ds = normalize(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, 1.0]).unwrap();
        assert_eq!(ds.point(0), &[1.0, 0.0]);
        assert_eq!(ds.point(1), &[0.0, 1.0]);
    }

    #[test]
    fn normalize_scales_single_point_to_unit_norm() {
        let ds = normalize(&[vec![0.5, 0.0]], &[1.0]).unwrap();
        assert_eq!(ds.point(0), &[1.0, 0.0]);
    }

    #[test]
    fn normalize_rejects_bad_input() {
        assert!(matches!(normalize(&[], &[]), Err(Error::EmptyDataset)));
        assert!(matches!(
            normalize(&[vec![0.0, 0.0]], &[1.0]),
            Err(Error::ZeroNormPoint { index: 0 })
        ));
    }

    #[test]
    fn max_margin_symmetric_pair() {
        let ds = Dataset::from_rows(&[vec![0.3, 0.9], vec![0.3, -0.9]]).unwrap();
        let cert = max_margin_2d(&ds).unwrap();
        assert_close(cert.gamma, 0.3, 1e-15);
        assert_close(cert.w_star[0], 1.0, 1e-15);
        assert_close(cert.w_star[1], 0.0, 1e-15);
        assert_eq!(cert.v_star.as_deref(), Some(&[-0.0, 1.0][..]));
        assert_eq!(cert.support, vec![0, 1]);
    }

    #[test]
    fn max_margin_single_point() {
        let ds = Dataset::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let cert = max_margin_2d(&ds).unwrap();
        assert_close(cert.gamma, 1.0, 1e-15);
        assert_eq!(cert.w_star, vec![1.0, 0.0]);
    }

    #[test]
    fn max_margin_rejects_non_separable() {
        let ds = Dataset::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        assert!(matches!(max_margin_2d(&ds), Err(Error::NonSeparable { .. })));
        assert!(matches!(
            max_margin_grid(&ds, 1 << 12),
            Err(Error::NonSeparable { .. })
        ));
    }

    #[test]
    fn exact_solver_agrees_with_grid_on_skewed_cluster() {
        // One outlier below the axis, five identical points near the top.
        let g = 0.1f64;
        let up = (1.0 - g * g).sqrt();
        let mut rows = vec![vec![g, -g]];
        rows.extend(std::iter::repeat_n(vec![g, up], 5));
        let ds = Dataset::from_rows(&rows).unwrap();
        let exact = max_margin_2d(&ds).unwrap();
        let grid = max_margin_grid(&ds, 1_000_000).unwrap();
        assert_close(exact.gamma, 0.1, 1e-12);
        assert_close(exact.w_star[0], 1.0, 1e-12);
        assert_close(exact.gamma, grid.gamma, 1e-6);
        assert!(signfree_angle(&exact.w_star, &grid.w_star) <= 1e-5);
    }

    #[test]
    fn grid_matches_symmetric_margin() {
        let ds = Dataset::from_rows(&[vec![0.3, 0.9], vec![0.3, -0.9]]).unwrap();
        let cert = max_margin_grid(&ds, 1_000_000).unwrap();
        assert_close(cert.gamma, 0.3, 1e-6);
    }

    #[test]
    fn exact_vs_grid_on_random_datasets() {
        // Trimmed version of the acceptance check: fewer seeds, coarser grid.
        for seed in 0..25u64 {
            let gamma = 0.1 + 0.6 * ((seed % 7) as f64) / 7.0;
            let n = 3 + (seed % 5) as usize;
            let (ds, _) = generate_random(2, n, gamma, seed).unwrap();
            let exact = max_margin_2d(&ds).unwrap();
            let grid = max_margin_grid(&ds, 100_000).unwrap();
            assert!(exact.gamma >= grid.gamma - 1e-9, "exact below grid oracle");
            assert_close(exact.gamma, grid.gamma, 1e-6);
            assert!(signfree_angle(&exact.w_star, &grid.w_star) <= 1e-5);
        }
    }

    #[test]
    fn generated_points_live_on_the_margin_slab() {
        let (ds, cert) = generate_random(2, 1, 0.5, 7).unwrap();
        let p = ds.point(0);
        assert_eq!(p[0], 0.5);
        assert!(p[1].abs() <= 0.75f64.sqrt());
        assert_eq!(cert.kind, CertificateKind::Nominal);
        assert_eq!(cert.w_star, vec![1.0, 0.0]);
    }

    #[test]
    fn generated_margin_is_exact_and_norms_bounded() {
        for seed in [1u64, 99, 12345] {
            let (ds, cert) = generate_random(5, 16, 0.3, seed).unwrap();
            for x in ds.iter_points() {
                assert_eq!(x[0], cert.gamma);
                assert!(l2_norm(x) <= 1.0 + NORM_SLACK);
            }
            assert!(ds.min_margin(&cert.w_star) >= cert.gamma - 1e-12);
        }
    }

    #[test]
    fn gamma_near_one_collapses_to_e1() {
        let (ds, _) = generate_random(3, 4, 1.0 - 1e-12, 3).unwrap();
        for x in ds.iter_points() {
            assert!((x[0] - (1.0 - 1e-12)).abs() < 1e-15);
            assert!(x[1].abs() < 2e-6 && x[2].abs() < 2e-6);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let (a, _) = generate_random(4, 8, 0.25, 42).unwrap();
        let (b, _) = generate_random(4, 8, 0.25, 42).unwrap();
        assert_eq!(a.as_flat(), b.as_flat());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let (ds, _) = generate_random(3, 10, 0.4, 11).unwrap();
        save_csv(&ds, &path).unwrap();
        let back = load_csv(&path, false).unwrap();
        assert_eq!(ds.as_flat(), back.as_flat());
    }

    #[test]
    fn csv_rejects_malformed_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "x1,x2,y\n1.0,0.0,0.5,0.1,1\n").unwrap();
        assert!(matches!(
            load_csv(&path, false),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn csv_folds_negative_labels_when_normalizing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("neg.csv");
        std::fs::write(&path, "x1,x2,y\n2.0,0.0,1\n0.0,-2.0,-1\n").unwrap();
        let ds = load_csv(&path, true).unwrap();
        assert_eq!(ds.point(0), &[1.0, 0.0]);
        assert_eq!(ds.point(1), &[0.0, 1.0]);
        // Without normalization the -1 label is refused.
        assert!(load_csv(&path, false).is_err());
    }

    #[test]
    fn csv_rejects_oversized_norms_without_normalization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("big.csv");
        std::fs::write(&path, "x1,x2,y\n2.0,0.0,1\n").unwrap();
        assert!(matches!(
            load_csv(&path, false),
            Err(Error::NormTooLarge { index: 0, .. })
        ));
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(
            rows in proptest::collection::vec(
                proptest::collection::vec(-100.0f64..100.0, 3), 1..12),
        ) {
            prop_assume!(rows.iter().all(|r| l2_norm(r) > 1e-6));
            let labels = vec![1.0; rows.len()];
            let once = normalize(&rows, &labels).unwrap();
            let rows2: Vec<Vec<f64>> = once.iter_points().map(|p| p.to_vec()).collect();
            let twice = normalize(&rows2, &labels).unwrap();
            prop_assert_eq!(once.as_flat(), twice.as_flat());
        }

        #[test]
        fn generated_norms_stay_in_unit_ball(
            seed in 0u64..1000,
            gamma in 0.05f64..0.95,
            d in 2usize..6,
            n in 1usize..10,
        ) {
            let (ds, _) = generate_random(d, n, gamma, seed).unwrap();
            for x in ds.iter_points() {
                prop_assert!(l2_norm(x) <= 1.0 + NORM_SLACK);
                prop_assert_eq!(x[0], gamma);
            }
        }
    }
}
