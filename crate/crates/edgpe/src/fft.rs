//! Three-dimensional FFTs and continuum-normalized spectral transforms.
//!
//! The discrete forward transform approximates the continuum convention
//! F(f)(ξ) = ∫ f(x) e^{−ix·ξ} dx:
//!
//! ```text
//! F(ξ_k) = h₁h₂h₃ · (−1)^{k₁+k₂+k₃} · DFT(f)_k
//! ```
//!
//! where the alternating sign carries the e^{−ix·ξ} phase of the x-grid
//! origin at −L/2 (valid for even n). The inverse undoes both factors, so
//! `inverse(forward(f)) = f` to roundoff and Parseval reads
//! ‖f‖₂² = (2π)⁻³ · Σ_ξ |F(ξ)|² · (2π)³/V = (1/V) Σ_ξ |F(ξ)|².
//!
//! Internally the 3-d transform runs as batched 1-d line FFTs: the x₁
//! axis is contiguous and processed in one call; the x₂ and x₃ axes go
//! through tiled transposes so their lines are contiguous too, which is
//! what keeps the single-core cost near the FFT flop bound.

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::Result;
use crate::grid::{Grid, WaveField};

/// Direction tag for the raw transforms.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Dir {
    Fwd,
    Inv,
}

/// Cached FFT plans and scratch space for one grid shape.
///
/// Methods take `&mut self` because scratch buffers are reused between
/// calls; clone the planner (cheap, plans are shared `Arc`s) for use from
/// multiple threads.
pub struct Fft3 {
    grid: Arc<Grid>,
    fwd: [Arc<dyn Fft<f64>>; 3],
    inv: [Arc<dyn Fft<f64>>; 3],
    scratch: Vec<Complex64>,
    transpose: Vec<Complex64>,
}

impl Clone for Fft3 {
    fn clone(&self) -> Self {
        Fft3 {
            grid: self.grid.clone(),
            fwd: self.fwd.clone(),
            inv: self.inv.clone(),
            scratch: Vec::new(),
            transpose: Vec::new(),
        }
    }
}

impl Fft3 {
    /// Plans transforms for every axis of `grid`.
    pub fn new(grid: Arc<Grid>) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.n();
        let fwd = [
            planner.plan_fft_forward(n[0]),
            planner.plan_fft_forward(n[1]),
            planner.plan_fft_forward(n[2]),
        ];
        let inv = [
            planner.plan_fft_inverse(n[0]),
            planner.plan_fft_inverse(n[1]),
            planner.plan_fft_inverse(n[2]),
        ];
        Fft3 {
            grid,
            fwd,
            inv,
            scratch: Vec::new(),
            transpose: Vec::new(),
        }
    }

    /// The grid these plans belong to.
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn ensure_scratch(&mut self, plan_scratch: usize, transpose: usize) {
        if self.scratch.len() < plan_scratch {
            self.scratch.resize(plan_scratch, Complex64::new(0.0, 0.0));
        }
        if self.transpose.len() < transpose {
            self.transpose.resize(transpose, Complex64::new(0.0, 0.0));
        }
    }

    /// Unnormalized forward DFT along all three axes, in place.
    pub fn fft3(&mut self, data: &mut [Complex64]) {
        self.transform(data, Dir::Fwd);
    }

    /// Inverse DFT along all three axes, in place, scaled by 1/(n₁n₂n₃)
    /// so that `ifft3(fft3(f)) = f`.
    pub fn ifft3(&mut self, data: &mut [Complex64]) {
        self.transform(data, Dir::Inv);
        let scale = 1.0 / self.grid.len() as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }

    fn transform(&mut self, data: &mut [Complex64], dir: Dir) {
        let n = self.grid.n();
        assert_eq!(data.len(), self.grid.len(), "field/grid size mismatch");
        let plans = match dir {
            Dir::Fwd => self.fwd.clone(),
            Dir::Inv => self.inv.clone(),
        };
        let max_scratch = plans
            .iter()
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        let plane = n[0] * n[1];
        let vol = plane * n[2];
        self.ensure_scratch(max_scratch, vol);

        // Axis 1: lines are contiguous; one batched call over the volume.
        plans[0].process_with_scratch(data, &mut self.scratch);

        // Axis 2: per x₃-plane, transpose the n₁×n₂ block so axis-2 lines
        // become contiguous, batch-transform, transpose back.
        for i3 in 0..n[2] {
            let block = &mut data[i3 * plane..(i3 + 1) * plane];
            transpose_into(block, &mut self.transpose[..plane], n[0], n[1]);
            plans[1].process_with_scratch(&mut self.transpose[..plane], &mut self.scratch);
            transpose_into(&self.transpose[..plane], block, n[1], n[0]);
        }

        // Axis 3: the volume is an (n₁n₂)×n₃ column-major matrix; same
        // transpose trick with rows of length n₃.
        let m = plane;
        transpose_into(data, &mut self.transpose[..vol], m, n[2]);
        plans[2].process_with_scratch(&mut self.transpose[..vol], &mut self.scratch);
        transpose_into(&self.transpose[..vol], data, n[2], m);
    }

    /// Continuum-normalized forward transform: values of
    /// h³(−1)^{k₁+k₂+k₃}·DFT(f) on the wavenumber table.
    pub fn forward_transform(&mut self, f: &WaveField) -> Result<WaveField> {
        self.grid.check_same(f.grid())?;
        let mut data = f.data().to_vec();
        self.fft3(&mut data);
        let h3 = self.grid.dv();
        apply_alternating_phase(&self.grid, &mut data, h3);
        WaveField::from_vec(self.grid.clone(), data)
    }

    /// Exact inverse of [`Fft3::forward_transform`].
    pub fn inverse_transform(&mut self, spectral: &WaveField) -> Result<WaveField> {
        self.grid.check_same(spectral.grid())?;
        let mut data = spectral.data().to_vec();
        let inv_h3 = 1.0 / self.grid.dv();
        apply_alternating_phase(&self.grid, &mut data, inv_h3);
        self.ifft3(&mut data);
        WaveField::from_vec(self.grid.clone(), data)
    }
}

/// Transforms for real scalar fields (densities, potentials) on the
/// Hermitian half-spectrum.
///
/// Real input of shape n₁×n₂×n₃ maps to m₁×n₂×n₃ complex output with
/// m₁ = n₁/2 + 1; the redundant conjugate half along axis 1 is never
/// stored, roughly halving both transform cost and multiplier loops.
/// Forward is the unnormalized DFT restricted to k₁ ≤ n₁/2; inverse is
/// scaled so `inverse(forward(ρ)) = ρ`.
pub struct RealFft3 {
    grid: Arc<Grid>,
    m1: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    c_fwd: [Arc<dyn Fft<f64>>; 2],
    c_inv: [Arc<dyn Fft<f64>>; 2],
    line_re: Vec<f64>,
    line_cx: Vec<Complex64>,
    scratch: Vec<Complex64>,
    transpose: Vec<Complex64>,
}

impl RealFft3 {
    /// Plans half-spectrum transforms for `grid`.
    pub fn new(grid: Arc<Grid>) -> Self {
        let n = grid.n();
        let mut rplanner = RealFftPlanner::<f64>::new();
        let mut cplanner = FftPlanner::new();
        RealFft3 {
            m1: n[0] / 2 + 1,
            r2c: rplanner.plan_fft_forward(n[0]),
            c2r: rplanner.plan_fft_inverse(n[0]),
            c_fwd: [
                cplanner.plan_fft_forward(n[1]),
                cplanner.plan_fft_forward(n[2]),
            ],
            c_inv: [
                cplanner.plan_fft_inverse(n[1]),
                cplanner.plan_fft_inverse(n[2]),
            ],
            grid,
            line_re: Vec::new(),
            line_cx: Vec::new(),
            scratch: Vec::new(),
            transpose: Vec::new(),
        }
    }

    /// The grid these plans belong to.
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Half-spectrum shape [m₁, n₂, n₃].
    pub fn shape(&self) -> [usize; 3] {
        let n = self.grid.n();
        [self.m1, n[1], n[2]]
    }

    /// Number of stored spectral entries m₁·n₂·n₃.
    pub fn spectral_len(&self) -> usize {
        let n = self.grid.n();
        self.m1 * n[1] * n[2]
    }

    fn ensure_buffers(&mut self) {
        let n = self.grid.n();
        let half_vol = self.spectral_len();
        let cx_scratch = self
            .c_fwd
            .iter()
            .chain(self.c_inv.iter())
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0)
            .max(self.r2c.get_scratch_len())
            .max(self.c2r.get_scratch_len());
        if self.line_re.len() < n[0] {
            self.line_re.resize(n[0], 0.0);
        }
        if self.line_cx.len() < self.m1 {
            self.line_cx.resize(self.m1, Complex64::new(0.0, 0.0));
        }
        if self.scratch.len() < cx_scratch {
            self.scratch.resize(cx_scratch, Complex64::new(0.0, 0.0));
        }
        if self.transpose.len() < half_vol {
            self.transpose.resize(half_vol, Complex64::new(0.0, 0.0));
        }
    }

    /// Forward transform of a real field into `out` (resized to the
    /// half-spectrum length).
    pub fn forward(&mut self, rho: &[f64], out: &mut Vec<Complex64>) {
        let n = self.grid.n();
        assert_eq!(rho.len(), self.grid.len());
        self.ensure_buffers();
        out.resize(self.spectral_len(), Complex64::new(0.0, 0.0));

        // Axis 1: r2c per line (input lines are contiguous).
        let lines = n[1] * n[2];
        for li in 0..lines {
            self.line_re.copy_from_slice(&rho[li * n[0]..(li + 1) * n[0]]);
            self.r2c
                .process_with_scratch(
                    &mut self.line_re,
                    &mut out[li * self.m1..(li + 1) * self.m1],
                    &mut self.scratch,
                )
                .expect("r2c lengths are planned");
        }

        // Axes 2 and 3 are ordinary complex transforms on the half-width
        // volume.
        let plane = self.m1 * n[1];
        for i3 in 0..n[2] {
            let block = &mut out[i3 * plane..(i3 + 1) * plane];
            transpose_into(block, &mut self.transpose[..plane], self.m1, n[1]);
            self.c_fwd[0].process_with_scratch(&mut self.transpose[..plane], &mut self.scratch);
            transpose_into(&self.transpose[..plane], block, n[1], self.m1);
        }
        let half_vol = plane * n[2];
        transpose_into(out, &mut self.transpose[..half_vol], plane, n[2]);
        self.c_fwd[1].process_with_scratch(&mut self.transpose[..half_vol], &mut self.scratch);
        transpose_into(&self.transpose[..half_vol], out, n[2], plane);
    }

    /// Inverse transform of a half-spectrum into a real field; `spec` is
    /// consumed as workspace. Scaled so this inverts [`Self::forward`].
    pub fn inverse(&mut self, spec: &mut [Complex64], out: &mut [f64]) {
        let n = self.grid.n();
        assert_eq!(spec.len(), self.spectral_len());
        assert_eq!(out.len(), self.grid.len());
        self.ensure_buffers();

        let plane = self.m1 * n[1];
        let half_vol = plane * n[2];
        transpose_into(spec, &mut self.transpose[..half_vol], plane, n[2]);
        self.c_inv[1].process_with_scratch(&mut self.transpose[..half_vol], &mut self.scratch);
        transpose_into(&self.transpose[..half_vol], spec, n[2], plane);
        for i3 in 0..n[2] {
            let block = &mut spec[i3 * plane..(i3 + 1) * plane];
            transpose_into(block, &mut self.transpose[..plane], self.m1, n[1]);
            self.c_inv[0].process_with_scratch(&mut self.transpose[..plane], &mut self.scratch);
            transpose_into(&self.transpose[..plane], block, n[1], self.m1);
        }

        let scale = 1.0 / self.grid.len() as f64;
        let lines = n[1] * n[2];
        for li in 0..lines {
            let line = &mut spec[li * self.m1..(li + 1) * self.m1];
            // c2r ignores the imaginary parts that Hermitian symmetry
            // forces to zero; clear them so roundoff cannot leak.
            line[0].im = 0.0;
            line[self.m1 - 1].im = 0.0;
            self.line_cx.copy_from_slice(line);
            self.c2r
                .process_with_scratch(
                    &mut self.line_cx,
                    &mut out[li * n[0]..(li + 1) * n[0]],
                    &mut self.scratch,
                )
                .expect("c2r lengths are planned");
        }
        for v in out.iter_mut() {
            *v *= scale;
        }
    }

    /// Visits every stored half-spectrum entry with its wavevector and
    /// Hermitian multiplicity (2 for interior k₁, 1 for k₁ ∈ {0, n₁/2}),
    /// so full-spectrum sums can be taken over stored entries only.
    pub fn for_each_half_mode(&self, mut f: impl FnMut(usize, [f64; 3], f64)) {
        let n = self.grid.n();
        let mut idx = 0;
        for k3 in 0..n[2] {
            let xi3 = self.grid.xi_axis(2)[k3];
            for k2 in 0..n[1] {
                let xi2 = self.grid.xi_axis(1)[k2];
                for k1 in 0..self.m1 {
                    let xi1 = if k1 == n[0] / 2 {
                        // Nyquist: the signed table stores −π n₁/L₁; the
                        // magnitude is what multipliers need
                        -self.grid.xi_axis(0)[k1]
                    } else {
                        self.grid.xi_axis(0)[k1]
                    };
                    let mult = if k1 == 0 || k1 == n[0] / 2 { 1.0 } else { 2.0 };
                    f(idx, [xi1, xi2, xi3], mult);
                    idx += 1;
                }
            }
        }
    }
}

/// Multiplies by s·(−1)^{k₁+k₂+k₃} in storage order.
fn apply_alternating_phase(grid: &Grid, data: &mut [Complex64], s: f64) {
    let n = grid.n();
    let mut idx = 0;
    for k3 in 0..n[2] {
        for k2 in 0..n[1] {
            let row_sign = if (k2 + k3) % 2 == 0 { s } else { -s };
            let mut sign = row_sign;
            for _ in 0..n[0] {
                data[idx] *= sign;
                sign = -sign;
                idx += 1;
            }
        }
    }
}

const TILE: usize = 32;

/// dst[j + cols·i] = src[i + rows·j]: column-major rows×cols → cols×rows,
/// tiled for cache friendliness.
fn transpose_into(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    for j0 in (0..cols).step_by(TILE) {
        let j1 = (j0 + TILE).min(cols);
        for i0 in (0..rows).step_by(TILE) {
            let i1 = (i0 + TILE).min(rows);
            for j in j0..j1 {
                for i in i0..i1 {
                    dst[j + cols * i] = src[i + rows * j];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn gaussian_field(grid: Arc<Grid>) -> WaveField {
        WaveField::from_fn(grid, |x| {
            Complex64::new((-0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp(), 0.0)
        })
    }

    #[test]
    fn zero_maps_to_zero() {
        let g = Grid::new([8.0; 3], [8; 3]).unwrap();
        let mut fft = Fft3::new(g.clone());
        let z = WaveField::zeros(g);
        let s = fft.forward_transform(&z).unwrap();
        assert!(s.data().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn plane_wave_hits_single_mode() {
        let g = Grid::new([8.0, 8.0, 8.0], [8, 8, 8]).unwrap();
        let mut fft = Fft3::new(g.clone());
        // ξ₀ = (2π/L)·(1, 0, 2), a table wavenumber
        let xi0 = [
            2.0 * std::f64::consts::PI / 8.0,
            0.0,
            2.0 * std::f64::consts::PI / 8.0 * 2.0,
        ];
        let f = WaveField::from_fn(g.clone(), |x| {
            Complex64::from_polar(1.0, x[0] * xi0[0] + x[1] * xi0[1] + x[2] * xi0[2])
        });
        let s = fft.forward_transform(&f).unwrap();
        let target = g.idx(1, 0, 2);
        let vol = g.volume();
        let mut off_peak: f64 = 0.0;
        for (i, v) in s.data().iter().enumerate() {
            if i == target {
                assert!((v - Complex64::new(vol, 0.0)).norm() < 1e-9 * vol);
            } else {
                off_peak = off_peak.max(v.norm());
            }
        }
        assert!(off_peak < 1e-9 * vol);
    }

    #[test]
    fn gaussian_matches_continuum_transform() {
        // e^{−|x|²/2} → (2π)^{3/2} e^{−|ξ|²/2}; L = 24 keeps tails < 1e−30
        let g = Grid::new([24.0; 3], [48; 3]).unwrap();
        let mut fft = Fft3::new(g.clone());
        let f = gaussian_field(g.clone());
        let s = fft.forward_transform(&f).unwrap();
        let pref = (2.0 * std::f64::consts::PI).powf(1.5);
        let mut worst: f64 = 0.0;
        g.for_each_mode(|idx, xi| {
            let q2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
            if q2 < 9.0 {
                let exact = pref * (-0.5 * q2).exp();
                worst = worst.max((s.data()[idx].re - exact).abs() / exact);
                worst = worst.max(s.data()[idx].im.abs() / exact);
            }
        });
        assert!(worst < 1e-6, "worst relative error {worst:.3e}");
    }

    #[test]
    fn round_trip_is_identity() {
        let g = Grid::new([10.0, 12.0, 14.0], [16, 12, 20]).unwrap();
        let mut fft = Fft3::new(g.clone());
        // deterministic pseudo-random field
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rnd = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let f = WaveField::from_fn(g, |_| Complex64::new(rnd(), rnd()));
        let back = {
            let s = fft.forward_transform(&f).unwrap();
            fft.inverse_transform(&s).unwrap()
        };
        let sup = f.data().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let err = f
            .data()
            .iter()
            .zip(back.data())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12 * sup);
    }

    #[test]
    #[ignore = "timing probe, run with --ignored --nocapture"]
    fn bench_sizes() {
        for (l, n) in [(16.0, 48usize), (16.0, 64), (24.0, 96), (64.0, 128)] {
            let g = Grid::new([l; 3], [n; 3]).unwrap();
            let mut fft = Fft3::new(g.clone());
            let mut data: Vec<Complex64> = (0..g.len())
                .map(|i| Complex64::new((i % 17) as f64, (i % 5) as f64))
                .collect();
            // warm up plans and scratch
            fft.fft3(&mut data);
            fft.ifft3(&mut data);
            let reps = if n <= 64 { 40 } else { 10 };
            let t0 = std::time::Instant::now();
            for _ in 0..reps {
                fft.fft3(&mut data);
                fft.ifft3(&mut data);
            }
            let per = t0.elapsed().as_secs_f64() / (2 * reps) as f64;
            eprintln!("n = {n:>3}: {:.2} ms per 3-d FFT", per * 1e3);
        }
    }

    #[test]
    fn real_pipeline_round_trip_and_consistency() {
        let g = Grid::new([9.0, 11.0, 13.0], [16, 12, 8]).unwrap();
        let mut fft = Fft3::new(g.clone());
        let mut rfft = RealFft3::new(g.clone());
        let f = gaussian_field(g.clone());
        let rho: Vec<f64> = f.data().iter().map(|z| z.norm_sqr()).collect();

        // round trip
        let mut spec = Vec::new();
        rfft.forward(&rho, &mut spec);
        let mut back = vec![0.0; rho.len()];
        rfft.inverse(&mut spec.clone(), &mut back);
        let err = rho
            .iter()
            .zip(&back)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-13);

        // half-spectrum agrees with the full complex transform
        let mut full: Vec<Complex64> =
            rho.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        fft.fft3(&mut full);
        let n = g.n();
        let m1 = n[0] / 2 + 1;
        let mut worst: f64 = 0.0;
        for k3 in 0..n[2] {
            for k2 in 0..n[1] {
                for k1 in 0..m1 {
                    let a = spec[k1 + m1 * (k2 + n[1] * k3)];
                    let b = full[g.idx(k1, k2, k3)];
                    worst = worst.max((a - b).norm());
                }
            }
        }
        assert!(worst < 1e-10);

        // Hermitian-weighted half sum reproduces the full |·|² sum
        let full_sum: f64 = full.iter().map(|z| z.norm_sqr()).sum();
        let mut half_sum = 0.0;
        rfft.for_each_half_mode(|idx, _xi, mult| {
            half_sum += mult * spec[idx].norm_sqr();
        });
        assert!((full_sum - half_sum).abs() < 1e-9 * full_sum.max(1.0));
    }

    #[test]
    fn parseval_identity() {
        let g = Grid::new([9.0, 11.0, 13.0], [12, 16, 8]).unwrap();
        let mut fft = Fft3::new(g.clone());
        let f = gaussian_field(g.clone());
        let s = fft.forward_transform(&f).unwrap();
        let phys = f.mass();
        let spec: f64 = s.data().iter().map(|z| z.norm_sqr()).sum::<f64>() / g.volume();
        assert!((phys - spec).abs() < 1e-10 * phys);
    }
}
