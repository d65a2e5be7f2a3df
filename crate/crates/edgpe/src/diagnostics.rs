//! Qualitative diagnostics of computed ground states: phase uniformity,
//! positivity on the bulk, symmetry defects and an exponential-decay fit.
//!
//! Minimizers are expected — up to a global phase and a translation — to
//! be positive, axially symmetric about the vertical axis, symmetric
//! about a horizontal plane, and exponentially decaying. Each expectation
//! becomes a scalar score:
//!
//! - the global phase is estimated as the mass-weighted circular mean and
//!   the residual phase spread is reported;
//! - positivity is probed by the smallest modulus on the region holding
//!   99.9% of the mass (the complement is amplitude-underflow territory);
//! - the axial defect compares the field against its average over
//!   rotations about the vertical line through the mass centroid,
//!   sampled on circles by trigonometric interpolation of each slice;
//! - the planar defect compares the field against its reflection through
//!   the horizontal plane nearest the centroid (snapped to the
//!   half-lattice, where reflection is an exact index map);
//! - the tail is summarized by a linear fit of log|u| against radius over
//!   shell averages, with its R².
//!
//! All scores are descriptive; none of them certifies a property.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::grid::{Kahan, WaveField};

/// Scores returned by [`qualitative_diagnostics`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualitativeReport {
    /// Mass centroid; the symmetry probes are centred on it.
    pub centroid: [f64; 3],
    /// Largest |arg(u·e^{−iθ*})| on the bulk region, θ* the mass-weighted
    /// mean phase. Near zero iff u = e^{iθ}|u| numerically.
    pub phase_deviation: f64,
    /// Smallest |u| over the region holding 99.9% of the mass.
    pub bulk_min_modulus: f64,
    /// Mass fraction actually captured by the bulk region (≥ 0.999).
    pub bulk_mass_fraction: f64,
    /// Relative L² distance to the rotation average about the vertical
    /// centroid axis, over the sampled cylinder.
    pub axial_defect: f64,
    /// Relative L² distance to the reflection average through the
    /// horizontal centroid plane.
    pub planar_defect: f64,
    /// Slope of the least-squares line through (r, ⟨log|u|⟩_shell) on the
    /// tail window; negative for decaying states.
    pub decay_slope: f64,
    /// R² of that fit; near 1 when the tail is a clean exponential.
    pub decay_r2: f64,
}

/// Mass fraction defining the bulk region for the pointwise probes.
const BULK_MASS: f64 = 0.999;
/// Radii and angles of the rotation-average sampling.
const AXIAL_RADII: usize = 40;
const AXIAL_ANGLES: usize = 16;
/// Tail window and shell count of the decay fit, relative to the box.
const TAIL_LO: f64 = 0.25;
const TAIL_HI: f64 = 0.45;
const TAIL_BINS: usize = 24;
/// Amplitude floor (relative to the peak) below which samples are
/// transform-roundoff noise and excluded from the decay fit.
const TAIL_FLOOR: f64 = 1e-13;

/// Computes the full report. Infallible: a vanishing field returns the
/// all-zero report.
pub fn qualitative_diagnostics(u: &WaveField) -> QualitativeReport {
    let grid = u.grid().as_ref();
    let data = u.data();
    let n = grid.n();
    let h = grid.h();

    let mut mass = Kahan::default();
    let mut first = [Kahan::default(), Kahan::default(), Kahan::default()];
    grid.for_each_point(|idx, x| {
        let rho = data[idx].norm_sqr();
        mass.add(rho);
        for (f, xa) in first.iter_mut().zip(x) {
            f.add(rho * xa);
        }
    });
    let total = mass.value();
    if !(total > 0.0) {
        return QualitativeReport {
            centroid: [0.0; 3],
            phase_deviation: 0.0,
            bulk_min_modulus: 0.0,
            bulk_mass_fraction: 0.0,
            axial_defect: 0.0,
            planar_defect: 0.0,
            decay_slope: 0.0,
            decay_r2: 0.0,
        };
    }
    let centroid = [
        first[0].value() / total,
        first[1].value() / total,
        first[2].value() / total,
    ];

    // bulk region: the fewest points holding BULK_MASS of the mass
    let mut by_density: Vec<(f64, u32)> = data
        .iter()
        .enumerate()
        .map(|(i, z)| (z.norm_sqr(), i as u32))
        .collect();
    by_density.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));
    let mut captured = Kahan::default();
    let mut bulk_len = 0;
    for &(rho, _) in &by_density {
        captured.add(rho);
        bulk_len += 1;
        if captured.value() >= BULK_MASS * total {
            break;
        }
    }
    let bulk = &by_density[..bulk_len];
    let bulk_min_modulus = bulk.last().map_or(0.0, |&(rho, _)| rho.sqrt());
    let bulk_mass_fraction = captured.value() / total;

    // mass-weighted mean phase and the residual spread on the bulk
    let mut zsum = Complex64::default();
    for z in data {
        zsum += z.norm() * z;
    }
    let rot = if zsum.norm() > 0.0 {
        zsum.conj() / zsum.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let phase_deviation = bulk
        .iter()
        .map(|&(_, i)| (data[i as usize] * rot).arg().abs())
        .fold(0.0, f64::max);

    // reflection defect through the snapped horizontal centroid plane
    let s3 = (2.0 * centroid[2] / h[2]).round() as i64;
    let mut num = Kahan::default();
    for i3 in 0..n[2] {
        let r3 = (s3 - i3 as i64).rem_euclid(n[2] as i64) as usize;
        for i2 in 0..n[1] {
            for i1 in 0..n[0] {
                let d = data[grid.idx(i1, i2, i3)] - data[grid.idx(i1, i2, r3)];
                num.add(d.norm_sqr());
            }
        }
    }
    let planar_defect = (num.value() / (4.0 * total)).sqrt();

    let axial_defect = axial_defect(u, centroid);
    let (decay_slope, decay_r2) = decay_fit(u, centroid);

    QualitativeReport {
        centroid,
        phase_deviation,
        bulk_min_modulus,
        bulk_mass_fraction,
        axial_defect,
        planar_defect,
        decay_slope,
        decay_r2,
    }
}

/// Relative L² distance between `u` and its rotation average about the
/// vertical line through `centroid`.
///
/// Each horizontal slice is sampled on concentric circles through its
/// trigonometric interpolant (exact for band-limited data, so a resolved
/// axisymmetric field scores at the aliasing level), and the angular
/// variance is integrated with the polar weight over the sampled
/// cylinder.
fn axial_defect(u: &WaveField, centroid: [f64; 3]) -> f64 {
    let grid = u.grid().as_ref();
    let data = u.data();
    let n = grid.n();
    let l = grid.l();
    let (n1, n2) = (n[0], n[1]);
    let r_max = 0.45 * l[0].min(l[1]);

    // phase rows e^{iξ(x + L/2)} of every sample point, per axis
    let npts = AXIAL_RADII * AXIAL_ANGLES;
    let mut ax = vec![Complex64::default(); npts * n1];
    let mut bx = vec![Complex64::default(); npts * n2];
    let (xi1, xi2) = (grid.xi_axis(0), grid.xi_axis(1));
    for q in 0..AXIAL_RADII {
        let r = (q as f64 + 0.5) * r_max / AXIAL_RADII as f64;
        for j in 0..AXIAL_ANGLES {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / AXIAL_ANGLES as f64;
            let p = q * AXIAL_ANGLES + j;
            let x = centroid[0] + r * phi.cos() + 0.5 * l[0];
            let y = centroid[1] + r * phi.sin() + 0.5 * l[1];
            for (k, &xi) in xi1.iter().enumerate() {
                ax[p * n1 + k] = Complex64::from_polar(1.0, xi * x);
            }
            for (k, &xi) in xi2.iter().enumerate() {
                bx[p * n2 + k] = Complex64::from_polar(1.0, xi * y);
            }
        }
    }

    let mut planner = FftPlanner::new();
    let fft1 = planner.plan_fft_forward(n1);
    let fft2 = planner.plan_fft_forward(n2);
    let mut slice = vec![Complex64::default(); n1 * n2];
    let mut col = vec![Complex64::default(); n2];
    let mut vals = vec![Complex64::default(); npts];
    let scale = 1.0 / (n1 * n2) as f64;
    let mut num = Kahan::default();
    let mut den = Kahan::default();

    for i3 in 0..n[2] {
        slice.copy_from_slice(&data[i3 * n1 * n2..(i3 + 1) * n1 * n2]);
        fft1.process(&mut slice);
        for k1 in 0..n1 {
            for (k2, c) in col.iter_mut().enumerate() {
                *c = slice[k2 * n1 + k1];
            }
            fft2.process(&mut col);
            for (k2, c) in col.iter().enumerate() {
                slice[k2 * n1 + k1] = *c;
            }
        }
        for (p, v) in vals.iter_mut().enumerate() {
            let a = &ax[p * n1..(p + 1) * n1];
            let b = &bx[p * n2..(p + 1) * n2];
            let mut acc = Complex64::default();
            for (k2, bk) in b.iter().enumerate() {
                let row = &slice[k2 * n1..(k2 + 1) * n1];
                let mut inner = Complex64::default();
                for (zk, ak) in row.iter().zip(a) {
                    inner += zk * ak;
                }
                acc += bk * inner;
            }
            *v = scale * acc;
        }
        for q in 0..AXIAL_RADII {
            let r = (q as f64 + 0.5) * r_max / AXIAL_RADII as f64;
            let ring = &vals[q * AXIAL_ANGLES..(q + 1) * AXIAL_ANGLES];
            let mean = ring.iter().sum::<Complex64>() / AXIAL_ANGLES as f64;
            for v in ring {
                num.add(r * (v - mean).norm_sqr());
                den.add(r * v.norm_sqr());
            }
        }
    }
    if den.value() > 0.0 {
        (num.value() / den.value()).sqrt()
    } else {
        0.0
    }
}

/// Least-squares line through the shell averages of log|u| on the tail
/// window; returns (slope, R²).
fn decay_fit(u: &WaveField, centroid: [f64; 3]) -> (f64, f64) {
    let grid = u.grid().as_ref();
    let data = u.data();
    let l = grid.l();
    let lmin = l[0].min(l[1]).min(l[2]);
    let (r_lo, r_hi) = (TAIL_LO * lmin, TAIL_HI * lmin);
    let rho_max = data.iter().map(Complex64::norm_sqr).fold(0.0, f64::max);
    let floor = TAIL_FLOOR * TAIL_FLOOR * rho_max;

    let mut sum_log = vec![0.0; TAIL_BINS];
    let mut sum_r = vec![0.0; TAIL_BINS];
    let mut count = vec![0usize; TAIL_BINS];
    grid.for_each_point(|idx, x| {
        let rho = data[idx].norm_sqr();
        if rho <= floor {
            return;
        }
        let mut r2 = 0.0;
        for a in 0..3 {
            let d = x[a] - centroid[a];
            r2 += d * d;
        }
        let r = r2.sqrt();
        if !(r_lo..r_hi).contains(&r) {
            return;
        }
        let bin = (((r - r_lo) / (r_hi - r_lo) * TAIL_BINS as f64) as usize)
            .min(TAIL_BINS - 1);
        sum_log[bin] += 0.5 * rho.ln();
        sum_r[bin] += r;
        count[bin] += 1;
    });

    let pts: Vec<(f64, f64)> = (0..TAIL_BINS)
        .filter(|&b| count[b] > 0)
        .map(|b| (sum_r[b] / count[b] as f64, sum_log[b] / count[b] as f64))
        .collect();
    if pts.len() < 3 {
        return (0.0, 0.0);
    }
    let m = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / m,
        pts.iter().map(|p| p.1).sum::<f64>() / m,
    );
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if syy <= 1e-30 * my.abs().max(1.0) {
        return (0.0, 1.0);
    }
    (sxy / sxx, sxy * sxy / (sxx * syy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::gaussian::GaussianAnsatz;
    use crate::grid::Grid;

    #[test]
    fn symmetric_gaussian_scores_clean_diagnostics() {
        let grid = Grid::new([14.0; 3], [32; 3]).unwrap();
        let mut u = GaussianAnsatz { sigma: 1.5, tau: 1.5, c: 2.0 }.field(Arc::clone(&grid));
        let theta = Complex64::from_polar(1.0, 0.7);
        for z in u.data_mut() {
            *z *= theta;
        }
        let rep = qualitative_diagnostics(&u);
        assert!(rep.phase_deviation <= 1e-9, "phase {}", rep.phase_deviation);
        assert!(rep.bulk_min_modulus > 1e-4, "min {}", rep.bulk_min_modulus);
        assert!(rep.bulk_mass_fraction >= BULK_MASS - 1e-12);
        assert!(rep.axial_defect <= 1e-5, "axial {}", rep.axial_defect);
        assert!(rep.planar_defect <= 1e-12, "planar {}", rep.planar_defect);
        assert!(rep.decay_slope < 0.0);
        assert!(rep.centroid.iter().all(|c| c.abs() < 1e-10));
    }

    #[test]
    fn exponential_tails_fit_a_negative_slope() {
        let grid = Grid::new([16.0; 3], [32; 3]).unwrap();
        let kappa = 1.1;
        let mut data = vec![Complex64::default(); grid.len()];
        grid.for_each_point(|idx, x| {
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            data[idx] = Complex64::new((-kappa * r).exp(), 0.0);
        });
        let u = WaveField::from_vec(grid, data).unwrap();
        let rep = qualitative_diagnostics(&u);
        assert!(
            (rep.decay_slope + kappa).abs() <= 0.05 * kappa,
            "slope {}",
            rep.decay_slope
        );
        assert!(rep.decay_r2 > 0.99, "r2 {}", rep.decay_r2);
        assert!(rep.planar_defect <= 1e-13);
    }

    #[test]
    fn broken_symmetries_are_detected() {
        let grid = Grid::new([14.0; 3], [32; 3]).unwrap();
        let base = GaussianAnsatz { sigma: 1.5, tau: 2.0, c: 2.0 }.field(Arc::clone(&grid));

        // m = 2 angular harmonic breaks axial symmetry only
        let mut warped = base.clone();
        {
            let data = warped.data_mut();
            grid.for_each_point(|idx, x| {
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                data[idx] *= 1.0 + 0.2 * (x[0] * x[0] - x[1] * x[1]) / (1.0 + r2);
            });
        }
        let rep = qualitative_diagnostics(&warped);
        assert!(rep.axial_defect > 0.02, "axial {}", rep.axial_defect);
        assert!(rep.planar_defect <= 1e-10, "planar {}", rep.planar_defect);
        assert!(rep.phase_deviation <= 1e-9);

        // odd vertical envelope breaks every horizontal reflection plane
        let mut tilted = base.clone();
        {
            let data = tilted.data_mut();
            grid.for_each_point(|idx, x| {
                data[idx] *= 1.0 + 0.3 * (x[2] / 1.5).tanh();
            });
        }
        let rep = qualitative_diagnostics(&tilted);
        assert!(rep.planar_defect > 0.02, "planar {}", rep.planar_defect);
        assert!(rep.axial_defect <= 1e-5, "axial {}", rep.axial_defect);

        // a linear phase is not a global phase
        let mut chirped = base;
        {
            let data = chirped.data_mut();
            grid.for_each_point(|idx, x| {
                data[idx] *= Complex64::from_polar(1.0, 0.8 * x[0]);
            });
        }
        let rep = qualitative_diagnostics(&chirped);
        assert!(rep.phase_deviation > 0.5, "phase {}", rep.phase_deviation);
    }

    #[test]
    fn bulk_region_ignores_the_noise_floor() {
        let grid = Grid::new([14.0; 3], [32; 3]).unwrap();
        let clean = GaussianAnsatz { sigma: 1.5, tau: 1.5, c: 2.0 }.field(Arc::clone(&grid));
        let reference = qualitative_diagnostics(&clean).bulk_min_modulus;

        let mut noisy = clean;
        noisy.data_mut()[0] = Complex64::new(1e-13, 0.0);
        let rep = qualitative_diagnostics(&noisy);
        assert!((rep.bulk_min_modulus - reference).abs() <= 1e-12);
        assert!(rep.bulk_min_modulus > 1e-4);
    }

    #[test]
    fn zero_field_yields_the_empty_report() {
        let grid = Grid::new([12.0; 3], [16; 3]).unwrap();
        let u = WaveField::from_vec(
            Arc::clone(&grid),
            vec![Complex64::default(); grid.len()],
        )
        .unwrap();
        let rep = qualitative_diagnostics(&u);
        assert_eq!(rep.bulk_min_modulus, 0.0);
        assert_eq!(rep.axial_defect, 0.0);
        assert_eq!(rep.decay_slope, 0.0);
    }
}
