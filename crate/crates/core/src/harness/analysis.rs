//! Curve analysis on ensemble means: peak location and height, the ensemble
//! bootstrap for their uncertainty, and threshold crossings against a plateau.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::observables::mean;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub x: f64,
    pub y: f64,
}

/// Vertex of the parabola through the three highest neighbouring samples.
///
/// Falls back to the best sample when the maximum sits at an end of the
/// curve or the three points are not concave.
pub fn fit_peak(xs: &[f64], ys: &[f64]) -> Option<Peak> {
    let n = xs.len().min(ys.len());
    if n == 0 {
        return None;
    }
    let i = (0..n)
        .filter(|&i| ys[i].is_finite())
        .max_by(|&a, &b| ys[a].total_cmp(&ys[b]))?;
    let best = Peak { x: xs[i], y: ys[i] };
    if i == 0 || i + 1 >= n {
        return Some(best);
    }
    let (x0, x1, x2) = (xs[i - 1], xs[i], xs[i + 1]);
    let (y0, y1, y2) = (ys[i - 1], ys[i], ys[i + 1]);
    // Newton form: y = y0 + d1 (x - x0) + a (x - x0)(x - x1).
    let d1 = (y1 - y0) / (x1 - x0);
    let d2 = (y2 - y1) / (x2 - x1);
    let a = (d2 - d1) / (x2 - x0);
    if !(a < 0.0) {
        return Some(best);
    }
    let xv = 0.5 * (x0 + x1) - d1 / (2.0 * a);
    if !(xv >= x0 && xv <= x2) {
        return Some(best);
    }
    let yv = y0 + d1 * (xv - x0) + a * (xv - x0) * (xv - x1);
    Some(Peak { x: xv, y: yv.max(best.y) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakEstimate {
    pub peak: Peak,
    pub x_stderr: f64,
    pub y_stderr: f64,
}

/// Bootstrap of a peak over realizations.
///
/// `curve` maps a list of realization indices (drawn with replacement) to the
/// curve values at every axis point, so the pairing of realizations across
/// points is preserved within each resample.
pub fn bootstrap_peak(
    xs: &[f64],
    n_realizations: usize,
    resamples: usize,
    seed: u64,
    curve: impl Fn(&[usize]) -> Vec<f64>,
) -> Option<PeakEstimate> {
    let all: Vec<usize> = (0..n_realizations).collect();
    let peak = fit_peak(xs, &curve(&all))?;
    if n_realizations < 2 || resamples < 2 {
        return Some(PeakEstimate {
            peak,
            x_stderr: 0.0,
            y_stderr: 0.0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut px = Vec::with_capacity(resamples);
    let mut py = Vec::with_capacity(resamples);
    let mut idx = vec![0; n_realizations];
    for _ in 0..resamples {
        for v in idx.iter_mut() {
            *v = rng.random_range(0..n_realizations);
        }
        if let Some(p) = fit_peak(xs, &curve(&idx)) {
            px.push(p.x);
            py.push(p.y);
        }
    }
    let sd = |v: &[f64]| {
        let m = mean(v);
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len().max(2) - 1) as f64).sqrt()
    };
    Some(PeakEstimate {
        peak,
        x_stderr: sd(&px),
        y_stderr: sd(&py),
    })
}

/// Three-point running mean with shortened windows at the ends.
pub fn smooth3(ys: &[f64]) -> Vec<f64> {
    let n = ys.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            mean(&ys[lo..=hi])
        })
        .collect()
}

/// Plateau level of a step-like curve: the maximum of its three-point running
/// mean, together with the index where it is attained.
pub fn plateau(ys: &[f64]) -> Option<(usize, f64)> {
    smooth3(ys)
        .into_iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

fn interpolate(x0: f64, y0: f64, x1: f64, y1: f64, level: f64) -> f64 {
    if y1 == y0 {
        x0
    } else {
        x0 + (level - y0) * (x1 - x0) / (y1 - y0)
    }
}

/// First upward crossing of `fraction × plateau`, scanning from the low end of
/// the axis; linear interpolation between samples.
pub fn onset(xs: &[f64], ys: &[f64], fraction: f64) -> Option<f64> {
    let (_, level) = plateau(ys)?;
    let level = fraction * level;
    if ys[0] >= level {
        return Some(xs[0]);
    }
    (1..ys.len())
        .find(|&i| ys[i] >= level)
        .map(|i| interpolate(xs[i - 1], ys[i - 1], xs[i], ys[i], level))
}

/// First downward crossing of `fraction × plateau` after the plateau maximum.
pub fn offset(xs: &[f64], ys: &[f64], fraction: f64) -> Option<f64> {
    let (top, level) = plateau(ys)?;
    let level = fraction * level;
    (top + 1..ys.len())
        .find(|&i| ys[i] < level)
        .map(|i| interpolate(xs[i - 1], ys[i - 1], xs[i], ys[i], level))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parabola_vertex_is_exact() {
        let xs = [0.0, 1.0, 2.5, 3.0, 4.0];
        let f = |x: f64| 5.0 - 2.0 * (x - 2.2f64).powi(2);
        let ys: Vec<f64> = xs.iter().map(|x| f(*x)).collect();
        let p = fit_peak(&xs, &ys).unwrap();
        assert!((p.x - 2.2).abs() < 1e-12 && (p.y - 5.0).abs() < 1e-12);
    }

    #[test]
    fn edge_maximum_falls_back_to_sample() {
        let p = fit_peak(&[0.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(p, Peak { x: 2.0, y: 3.0 });
        assert!(fit_peak(&[], &[]).is_none());
    }

    #[test]
    fn step_onset_and_offset() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.05).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| if (0.3..0.6).contains(&x) { 1.0 } else { 0.0 })
            .collect();
        let on = onset(&xs, &ys, 0.5).unwrap();
        let off = offset(&xs, &ys, 0.5).unwrap();
        assert!(on > 0.25 && on <= 0.3, "{on}");
        assert!(off > 0.55 && off < 0.6, "{off}");
    }

    #[test]
    fn bootstrap_of_identical_realizations_has_no_spread() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let est = bootstrap_peak(&xs, 5, 50, 1, |_| vec![0.0, 2.0, 3.0, 1.0]).unwrap();
        assert!(est.x_stderr < 1e-12 && est.y_stderr < 1e-12);
    }

    proptest! {
        #[test]
        fn fitted_peak_not_below_sample_max(ys in proptest::collection::vec(-10.0f64..10.0, 1..12)) {
            let xs: Vec<f64> = (0..ys.len()).map(|i| i as f64).collect();
            let p = fit_peak(&xs, &ys).unwrap();
            let m = ys.iter().cloned().fold(f64::MIN, f64::max);
            prop_assert!(p.y >= m);
            prop_assert!(p.x >= 0.0 && p.x <= (ys.len() - 1) as f64);
        }
    }
}
