use rand::Rng;

use crate::rng::exp1;

/// log Σ exp(v), ignoring −∞ entries; −∞ for an empty or all −∞ input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// (Σ W G)² / Σ (W G)², or `None` when every product vanishes.
pub fn effective_sample_size(weights: &[f64], potentials: &[f64]) -> Option<f64> {
    let (s1, s2) = weights.iter().zip(potentials).fold((0.0, 0.0), |(a, b), (w, g)| {
        let p = w * g;
        (a + p, b + p * p)
    });
    (s1 > 0.0).then(|| s1 * s1 / s2)
}

/// ESS of normalized weights given in log form.
pub fn ess_from_normalized(weights: &[f64]) -> f64 {
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}

/// Multinomial counts of `n` draws from `weights`.
///
/// Uses `n` sorted uniforms built from exponential spacings, then one sweep
/// over the cumulative weights. Weights are normalized internally; the last
/// positive cell absorbs rounding at the top of the cdf.
pub fn multinomial_resample<R: Rng + ?Sized>(weights: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    let mut counts = vec![0usize; weights.len()];
    let total: f64 = weights.iter().sum();
    let Some(last_positive) = weights.iter().rposition(|&w| w > 0.0) else {
        return counts;
    };
    let mut spacings: Vec<f64> = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    for _ in 0..=n {
        acc += exp1(rng);
        spacings.push(acc);
    }
    let scale = total / acc;
    let mut cell = 0usize;
    let mut upper = weights[0];
    for s in &spacings[..n] {
        let u = s * scale;
        while u >= upper && cell < last_positive {
            cell += 1;
            upper += weights[cell];
        }
        counts[cell] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    #[test]
    fn ess_examples() {
        assert_eq!(effective_sample_size(&[0.25; 4], &[2.0; 4]), Some(4.0));
        assert_eq!(effective_sample_size(&[0.25; 4], &[0.0, 0.0, 3.0, 0.0]), Some(1.0));
        let ess = effective_sample_size(&[1.0, 1.0, 1.0], &[0.5, 0.25, 0.25]).unwrap();
        assert!((ess - 1.0 / 0.375).abs() < 1e-12);
        assert_eq!(effective_sample_size(&[0.5, 0.5], &[0.0, 0.0]), None);
    }

    #[test]
    fn point_mass_takes_everything() {
        let mut r = stream(3, Domain::Selection, 0, 0);
        assert_eq!(multinomial_resample(&[1.0, 0.0, 0.0], 100, &mut r), vec![100, 0, 0]);
        assert_eq!(multinomial_resample(&[0.0, 0.0, 1.0], 7, &mut r), vec![0, 0, 7]);
    }

    #[test]
    fn counts_sum_to_n() {
        let mut r = stream(4, Domain::Selection, 0, 0);
        let c = multinomial_resample(&[0.1, 0.2, 0.0, 0.7], 1000, &mut r);
        assert_eq!(c.iter().sum::<usize>(), 1000);
        assert_eq!(c[2], 0);
    }

    #[test]
    fn log_sum_exp_handles_infinities() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
        assert!((log_sum_exp(&[-1000.0, -1000.0, f64::NEG_INFINITY]) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
