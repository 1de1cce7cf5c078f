use crate::imgio::Volume3D;

use super::{Result, VolOpsError};

/// EM settings for [`gmm_segment`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmParams {
    pub classes: usize,
    pub max_iters: usize,
    /// Stop once |Δ log-likelihood| falls below this.
    pub tol: f64,
}

impl Default for GmmParams {
    fn default() -> Self {
        Self {
            classes: 3,
            max_iters: 500,
            tol: 1e-6,
        }
    }
}

/// Per-class posterior maps and fitted mixture parameters.
///
/// Classes are sorted by increasing mean.
#[derive(Debug, Clone, PartialEq)]
pub struct TissuePosteriors {
    pub dims: [usize; 3],
    pub posteriors: Vec<Vec<f64>>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub weights: Vec<f64>,
    /// Observed-data log-likelihood after each E-step.
    pub log_likelihoods: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Voxels with nonzero intensity that entered the fit.
    pub fitted_voxels: usize,
}

impl TissuePosteriors {
    pub fn class_count(&self) -> usize {
        self.means.len()
    }

    /// Index of the most probable class at each voxel.
    pub fn hard_labels(&self) -> Vec<usize> {
        let n = self.posteriors.first().map_or(0, |p| p.len());
        (0..n)
            .map(|v| {
                (0..self.class_count())
                    .max_by(|&a, &b| self.posteriors[a][v].total_cmp(&self.posteriors[b][v]))
                    .unwrap_or(0)
            })
            .collect()
    }
}

const LN_2PI: f64 = 1.837_877_066_409_345_3;

struct Mixture {
    means: Vec<f64>,
    variances: Vec<f64>,
    weights: Vec<f64>,
}

impl Mixture {
    /// Writes log(w_k N(x | μ_k, σ_k²)) for every class into `out`.
    fn log_joint(&self, x: f64, out: &mut [f64]) {
        for k in 0..self.means.len() {
            let d = x - self.means[k];
            out[k] = self.weights[k].ln()
                - 0.5 * (LN_2PI + self.variances[k].ln() + d * d / self.variances[k]);
        }
    }

    /// Normalizes `log_joint` into posteriors in place; returns log p(x).
    fn posteriors(&self, x: f64, buf: &mut [f64]) -> f64 {
        self.log_joint(x, buf);
        let max = buf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in buf.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in buf.iter_mut() {
            *v /= sum;
        }
        max + sum.ln()
    }
}

/// Fits a K-class 1-D Gaussian mixture to the nonzero intensities of `vol` by
/// expectation maximization and returns per-voxel class posteriors.
///
/// Initial means are the K quantiles at (k + ½)/K of the sorted intensities,
/// every class starts with the pooled variance and weight 1/K. Zero voxels
/// are excluded from the fit; their posteriors come from the fitted model.
pub fn gmm_segment(vol: &Volume3D, params: GmmParams) -> Result<TissuePosteriors> {
    let k_classes = params.classes;
    if k_classes == 0 {
        return Err(VolOpsError::InvalidArgument("class count must be >= 1".into()));
    }
    if !(params.tol >= 0.0) {
        return Err(VolOpsError::InvalidArgument(format!("tol {}", params.tol)));
    }
    let dims = vol.spatial_dims();
    let values = vol.spatial_values();
    let mut samples: Vec<f64> = values.iter().copied().filter(|&v| v != 0.0).collect();
    samples.sort_by(f64::total_cmp);
    let mut distinct = samples.clone();
    distinct.dedup();
    if distinct.len() < k_classes.max(1) || samples.is_empty() {
        return Err(VolOpsError::NotEnoughVoxels {
            distinct: distinct.len(),
            classes: k_classes,
        });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let pooled = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;

    if k_classes == 1 {
        return Ok(TissuePosteriors {
            dims,
            posteriors: vec![vec![1.0; values.len()]],
            means: vec![mean],
            variances: vec![pooled],
            weights: vec![1.0],
            log_likelihoods: Vec::new(),
            iterations: 0,
            converged: true,
            fitted_voxels: samples.len(),
        });
    }

    let range = samples[samples.len() - 1] - samples[0];
    let floor = 1e-6 * range * range;
    let quantile = |q: f64| {
        let idx = ((q * n) as usize).min(samples.len() - 1);
        samples[idx]
    };
    let mut mix = Mixture {
        means: (0..k_classes)
            .map(|k| quantile((k as f64 + 0.5) / k_classes as f64))
            .collect(),
        variances: vec![pooled; k_classes],
        weights: vec![1.0 / k_classes as f64; k_classes],
    };

    let mut buf = vec![0.0; k_classes];
    let mut log_likelihoods = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < params.max_iters {
        // E-step, accumulating sufficient statistics for the M-step.
        let mut resp_sum = vec![0.0; k_classes];
        let mut resp_x = vec![0.0; k_classes];
        let mut ll = 0.0;
        for &x in &samples {
            ll += mix.posteriors(x, &mut buf);
            for k in 0..k_classes {
                resp_sum[k] += buf[k];
                resp_x[k] += buf[k] * x;
            }
        }
        let done = log_likelihoods
            .last()
            .is_some_and(|prev: &f64| (ll - prev).abs() < params.tol);
        log_likelihoods.push(ll);
        if done {
            converged = true;
            break;
        }

        let means: Vec<f64> = (0..k_classes).map(|k| resp_x[k] / resp_sum[k]).collect();
        let mut resp_sq = vec![0.0; k_classes];
        for &x in &samples {
            mix.posteriors(x, &mut buf);
            for k in 0..k_classes {
                let d = x - means[k];
                resp_sq[k] += buf[k] * d * d;
            }
        }
        for k in 0..k_classes {
            let variance = resp_sq[k] / resp_sum[k];
            if !(variance >= floor) || resp_sum[k] == 0.0 || variance == 0.0 {
                return Err(VolOpsError::DegenerateClass {
                    class: k,
                    variance,
                    floor,
                });
            }
            mix.variances[k] = variance;
            mix.weights[k] = resp_sum[k] / n;
        }
        mix.means = means;
        iterations += 1;
    }

    let mut order: Vec<usize> = (0..k_classes).collect();
    order.sort_by(|&a, &b| mix.means[a].total_cmp(&mix.means[b]));
    let mix = Mixture {
        means: order.iter().map(|&k| mix.means[k]).collect(),
        variances: order.iter().map(|&k| mix.variances[k]).collect(),
        weights: order.iter().map(|&k| mix.weights[k]).collect(),
    };

    let mut posteriors = vec![vec![0.0; values.len()]; k_classes];
    for (v, &x) in values.iter().enumerate() {
        mix.posteriors(x, &mut buf);
        for k in 0..k_classes {
            posteriors[k][v] = buf[k];
        }
    }

    Ok(TissuePosteriors {
        dims,
        posteriors,
        means: mix.means,
        variances: mix.variances,
        weights: mix.weights,
        log_likelihoods,
        iterations,
        converged,
        fitted_voxels: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_class_constant_volume() {
        let vol = Volume3D::from_f64([4, 4, 4], [1.0; 3], vec![7.0; 64]).unwrap();
        let p = gmm_segment(
            &vol,
            GmmParams {
                classes: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(p.class_count(), 1);
        assert!(p.posteriors[0].iter().all(|&x| x == 1.0));
        assert_eq!(p.means, vec![7.0]);
    }

    #[test]
    fn two_intensities_three_classes() {
        let data: Vec<f64> = (0..64).map(|i| if i % 2 == 0 { 10.0 } else { 20.0 }).collect();
        let vol = Volume3D::from_f64([4, 4, 4], [1.0; 3], data).unwrap();
        let err = gmm_segment(&vol, GmmParams::default()).unwrap_err();
        assert!(matches!(
            err,
            VolOpsError::NotEnoughVoxels { .. } | VolOpsError::DegenerateClass { .. }
        ));
    }

    #[test]
    fn zero_voxels_excluded_from_fit() {
        let mut data = vec![0.0; 200];
        for (i, v) in data.iter_mut().enumerate().skip(100) {
            *v = if i % 2 == 0 { 50.0 + (i % 7) as f64 } else { 150.0 + (i % 5) as f64 };
        }
        let vol = Volume3D::from_f64([10, 10, 2], [1.0; 3], data).unwrap();
        let p = gmm_segment(
            &vol,
            GmmParams {
                classes: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(p.fitted_voxels, 100);
        assert!((p.means[0] - 53.0).abs() < 1.0, "{:?}", p.means);
        assert!((p.means[1] - 152.0).abs() < 1.0, "{:?}", p.means);
    }
}
