//! Monte Carlo estimation of normalized level-density moments and empirical
//! spectral densities with a semicircle overlay for the canonical domain.

use nalgebra::SymmetricEigen;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::{binomial, BigCount};
use crate::ensemble::{build_hamiltonian, sample_couplings_for_sample, EnsembleParams, HermitianMatrix};
use crate::error::{Error, Result};

/// Per-order Monte Carlo moment estimate.
#[derive(Debug, Clone, Serialize)]
pub struct MomentEstimate {
    pub order: u32,
    /// beta_2n = mean(tr H^2n / N) / mean(tr H^2 / N)^n.
    pub estimate: f64,
    /// Delta-method standard error of the ratio.
    pub std_error: f64,
    /// Mean of the numerator traces tr H^2n / N.
    pub numerator_mean: f64,
    /// Mean of the denominator trace tr H^2 / N.
    pub denominator_mean: f64,
}

/// Moment estimates over one ensemble run.
#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub schema_version: u32,
    pub samples: usize,
    pub seed: u64,
    pub dimension: usize,
    pub moments: Vec<MomentEstimate>,
}

/// Normalized power traces (1/N) sum_i lambda_i^order for each requested
/// order, from one full eigendecomposition.
pub fn realization_traces(h: &HermitianMatrix, orders: &[u32]) -> Result<Vec<f64>> {
    let n = h.dimension();
    if n == 0 {
        return Err(Error::InvalidParams("empty matrix".into()));
    }
    let eigen = SymmetricEigen::try_new(h.data().clone(), 1e-13, 10_000)
        .ok_or(Error::EigenFailure(n))?;
    let mut out = Vec::with_capacity(orders.len());
    for &order in orders {
        let mut acc = 0.0f64;
        for ev in eigen.eigenvalues.iter() {
            acc += ev.powi(order as i32);
        }
        out.push(acc / n as f64);
    }
    Ok(out)
}

/// Eigenvalues of one realization.
pub fn realization_spectrum(h: &HermitianMatrix) -> Result<Vec<f64>> {
    let n = h.dimension();
    let eigen = SymmetricEigen::try_new(h.data().clone(), 1e-13, 10_000)
        .ok_or(Error::EigenFailure(n))?;
    Ok(eigen.eigenvalues.iter().copied().collect())
}

/// Estimate the normalized moments beta_2n by the ratio of ensemble means,
/// with delta-method error propagation. Deterministic in (params, seed),
/// independent of the parallel schedule.
pub fn estimate_moments(
    params: &EnsembleParams,
    orders: &[u32],
    samples: usize,
    seed: u64,
) -> Result<MomentReport> {
    if samples < 2 {
        return Err(Error::InvalidParams("need at least 2 samples for an error estimate".into()));
    }
    for &o in orders {
        if o == 0 || o % 2 != 0 {
            return Err(Error::InvalidParams(format!("orders must be even and positive, got {o}")));
        }
    }
    let basis = params.basis()?;
    let mut all_orders: Vec<u32> = vec![2];
    all_orders.extend_from_slice(orders);

    // per-sample traces, computed in parallel but reduced in sample order
    let traces: Result<Vec<Vec<f64>>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let kernel = sample_couplings_for_sample(params, seed, s as u64)?;
            let h = build_hamiltonian(&kernel, &basis)?;
            realization_traces(&h, &all_orders)
        })
        .collect();
    let traces = traces?;

    let n_samples = samples as f64;
    let mean = |col: usize| -> f64 {
        traces.iter().map(|row| row[col]).sum::<f64>() / n_samples
    };
    let cov = |a: usize, b: usize, ma: f64, mb: f64| -> f64 {
        traces.iter().map(|row| (row[a] - ma) * (row[b] - mb)).sum::<f64>() / (n_samples - 1.0)
    };

    let den_mean = mean(0);
    if !(den_mean > 0.0) {
        return Err(Error::InvalidParams("denominator trace mean is not positive".into()));
    }
    let mut moments = Vec::with_capacity(orders.len());
    for (ix, &order) in orders.iter().enumerate() {
        let col = ix + 1;
        let n_half = (order / 2) as f64;
        let num_mean = mean(col);
        let estimate = num_mean / den_mean.powf(n_half);
        // delta method on g(X, Y) = X / Y^n
        let gx = 1.0 / den_mean.powf(n_half);
        let gy = -n_half * num_mean / den_mean.powf(n_half + 1.0);
        let var_x = cov(col, col, num_mean, num_mean) / n_samples;
        let var_y = cov(0, 0, den_mean, den_mean) / n_samples;
        let cov_xy = cov(col, 0, num_mean, den_mean) / n_samples;
        let var = gx * gx * var_x + gy * gy * var_y + 2.0 * gx * gy * cov_xy;
        moments.push(MomentEstimate {
            order,
            estimate,
            std_error: var.max(0.0).sqrt(),
            numerator_mean: num_mean,
            denominator_mean: den_mean,
        });
    }
    Ok(MomentReport {
        schema_version: 1,
        samples,
        seed,
        dimension: basis.len(),
        moments,
    })
}

/// The saddle-point trace normalization: Lambda^0 = C(m,k) C(l-m+k,k), the
/// value of (1/N) tr(mean H^2) at unit scale.
pub fn lambda0(m: u64, k: u64, l: u64) -> BigCount {
    assert!(k <= m && m <= l);
    binomial(m, k as i64) * binomial(l - m + k, k as i64)
}

/// A pooled-eigenvalue histogram with a semicircle overlay.
#[derive(Debug, Clone, Serialize)]
pub struct DensityHistogram {
    pub schema_version: u32,
    /// Bin edges, length bins + 1, symmetric around zero.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Unit-normalized heights (sum height * width = 1).
    pub heights: Vec<f64>,
    /// Semicircle density of radius `radius` at each bin midpoint.
    pub overlay: Vec<f64>,
    /// Semicircle radius 2 v0 sqrt(Lambda^0).
    pub radius: f64,
    pub samples: usize,
    pub total_eigenvalues: usize,
}

impl DensityHistogram {
    /// L1 distance between the histogram and the overlay, integrated over the
    /// binned range.
    pub fn l1_distance_to_overlay(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.counts.len() {
            let width = self.edges[i + 1] - self.edges[i];
            acc += (self.heights[i] - self.overlay[i]).abs() * width;
        }
        acc
    }

    /// CSV rows `bin_lo,bin_hi,height,overlay_height` with a schema comment.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# schema_version 1\nbin_lo,bin_hi,height,overlay_height\n");
        for i in 0..self.counts.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.edges[i],
                self.edges[i + 1],
                self.heights[i],
                self.overlay[i]
            ));
        }
        out
    }
}

/// Pool eigenvalues over samples into a unit-normalized histogram on
/// [-1.2R, 1.2R], R = 2 v0 sqrt(Lambda^0), with the semicircle overlay. The
/// overlay is a valid comparison only for 2k > m.
pub fn empirical_density(
    params: &EnsembleParams,
    samples: usize,
    bins: usize,
    seed: u64,
) -> Result<DensityHistogram> {
    if samples == 0 || bins == 0 {
        return Err(Error::InvalidParams("need at least one sample and one bin".into()));
    }
    let basis = params.basis()?;
    let lam0 = lambda0(params.m as u64, params.k as u64, params.l as u64)
        .to_f64()
        .ok_or_else(|| Error::InvalidParams("Lambda^0 overflow".into()))?;
    let radius = 2.0 * params.v0 * lam0.sqrt();
    let span = if radius > 0.0 { 1.2 * radius } else { 1.0 };

    let spectra: Result<Vec<Vec<f64>>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let kernel = sample_couplings_for_sample(params, seed, s as u64)?;
            let h = build_hamiltonian(&kernel, &basis)?;
            realization_spectrum(&h)
        })
        .collect();
    let spectra = spectra?;

    let edges: Vec<f64> =
        (0..=bins).map(|i| -span + 2.0 * span * i as f64 / bins as f64).collect();
    let width = 2.0 * span / bins as f64;
    let mut counts = vec![0u64; bins];
    let mut total = 0usize;
    for spectrum in &spectra {
        for &ev in spectrum {
            total += 1;
            let pos = ((ev + span) / width).floor();
            if pos >= 0.0 && (pos as usize) < bins {
                counts[pos as usize] += 1;
            }
        }
    }
    let norm = total as f64 * width;
    let heights: Vec<f64> = counts.iter().map(|&c| c as f64 / norm).collect();
    let overlay: Vec<f64> = (0..bins)
        .map(|i| {
            let x = 0.5 * (edges[i] + edges[i + 1]);
            semicircle_density(x, radius)
        })
        .collect();
    Ok(DensityHistogram {
        schema_version: 1,
        edges,
        counts,
        heights,
        overlay,
        radius,
        samples,
        total_eigenvalues: total,
    })
}

/// The unit-mass semicircle density of the given radius.
pub fn semicircle_density(x: f64, radius: f64) -> f64 {
    if x.abs() >= radius {
        0.0
    } else {
        2.0 / (std::f64::consts::PI * radius * radius) * (radius * radius - x * x).sqrt()
    }
}

/// Exact finite-l normalized moment from the Wick oracle, as f64 for
/// comparisons with Monte Carlo estimates.
pub fn oracle_moment_f64(
    l: u16,
    m: u16,
    k: u16,
    n2: usize,
    config: &crate::wick::OracleConfig,
) -> Result<f64> {
    let exact = crate::wick::exact_normalized_moment(l, m, k, n2, config)?;
    exact
        .to_f64()
        .ok_or_else(|| Error::InvalidParams("moment out of f64 range".into()))
}
