//! Optimal constant of the 3d interpolation inequality
//!
//! ```text
//! ‖u‖_{2σ+2}^{2σ+2} ≤ C_σ^{2σ+2} · ‖∇u‖₂^{3σ} · ‖u‖₂^{2−σ},   σ ∈ (0, 2),
//! ```
//!
//! computed along two independent routes and cross-checked:
//!
//! 1. **Radial shooting** (`ode_ground_state`): the extremizer is the
//!    positive radial ground state of `−(3σ/2)Δψ + (1−σ/2)ψ = ψ^{2σ+1}`
//!    (conventional ground-state sign). A bisected shooting solve on the
//!    separatrix yields the profile; the constant is the value of the
//!    quotient on it. The virial identities `aA + bM = P` and
//!    `(a/2)A + (3b/2)M = 3P/(2σ+2)` of the solution double as a residual
//!    measure — at σ = 1 they collapse to `A = M`, `P = 2M`, so
//!    `C₁ = (2/‖ψ‖₂²)^{1/4}`.
//!
//! 2. **Direct maximization on the grid** (`direct_maximization`): a
//!    coordinate search over the generalized-Gaussian trial family
//!    `e^{−r^q/w}` (any trial bounds the supremum from below) seeds a
//!    normalized fixed-point iteration for `−Δu + u = u^{2σ+1}`, whose
//!    limit maximizes the quotient on the grid. The trial family alone
//!    plateaus ≈3% short of the optimum, so the fixed-point refinement is
//!    what closes the gap to the cross-route tolerance.
//!
//! Only σ = 1 is needed downstream (it feeds the explicit mass bound
//! `c_a`); other σ are supported at smoke-test quality.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{EdgpeError, Result};
use crate::fft::Fft3;
use crate::grid::{Grid, WaveField};

/// Box edge for the grid route. Small enough that n = 64 resolves the
/// unit-rate exponential tail, large enough that truncation stays below
/// the cross-resolution tolerance.
pub const GN_BOX: f64 = 12.0;

/// How the constant was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GNMethod {
    OdeGroundState,
    DirectMaximization,
}

/// The optimal constant `C_σ` with its provenance and a stationarity
/// residual (identity defect for the shooting route, fixed-point defect
/// for the grid route).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GNConstant {
    pub sigma: f64,
    pub value: f64,
    pub method: GNMethod,
    pub residual: f64,
}

fn coefficients(sigma: f64) -> Result<(f64, f64)> {
    if !(sigma > 0.0 && sigma < 2.0) {
        return Err(EdgpeError::InvalidArgument(format!(
            "the 3d inequality needs sigma in (0, 2), got {sigma}"
        )));
    }
    Ok((1.5 * sigma, 1.0 - 0.5 * sigma))
}

/// The scale-invariant quotient `‖u‖_{2σ+2}^{2σ+2}/(‖∇u‖₂^{3σ}‖u‖₂^{2−σ})`;
/// its supremum over nonzero fields equals `C_σ^{2σ+2}`.
pub fn weinstein_quotient(u: &WaveField, sigma: f64) -> Result<f64> {
    coefficients(sigma)?;
    let grid = u.grid();
    let mut fft = Fft3::new(Arc::clone(grid));
    let hat = fft.forward_transform(u)?;
    let hd = hat.data();
    let mut a = 0.0;
    grid.for_each_mode(|idx, xi| {
        a += (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]) * hd[idx].norm_sqr();
    });
    a /= grid.volume();
    let m = u.mass();
    let p = u.lp_power(2.0 * sigma + 2.0);
    if m <= 0.0 || a <= 0.0 {
        return Err(EdgpeError::InvalidArgument(
            "Weinstein quotient needs a nonzero, nonconstant field".into(),
        ));
    }
    Ok(p / (a.powf(1.5 * sigma) * m.powf(1.0 - 0.5 * sigma)))
}

/// Optimal constant by the reported route (grid maximization at n = 64),
/// cross-checked against the shooting route.
pub fn gn_constant(sigma: f64) -> Result<GNConstant> {
    gn_constant_on(sigma, 64)
}

/// Grid-route constant at resolution `n³` on the standard box, with the
/// shooting cross-check enforced to 10⁻³ (an order looser than the
/// documented agreement, so it only fires on genuine stalls).
pub fn gn_constant_on(sigma: f64, n: usize) -> Result<GNConstant> {
    let ode = gn_constant_ode(sigma)?;
    let grid = maximize_on_grid(sigma, n)?;
    let gap = (grid.value - ode.value).abs() / ode.value;
    if gap > 1e-3 {
        return Err(EdgpeError::NonConvergence {
            iters: 0,
            residual: gap,
        });
    }
    Ok(grid)
}

/// Optimal constant from the radial ground-state profile.
pub fn gn_constant_ode(sigma: f64) -> Result<GNConstant> {
    let (a, b) = coefficients(sigma)?;
    let dr = 2e-3;
    let rmax = 40.0;

    // the zero of the shooting potential U(ψ) = ψ^{2σ+2}/(2σ+2) − bψ²/2;
    // the separatrix amplitude lies strictly above it
    let s_zero = (b * (sigma + 1.0)).powf(1.0 / (2.0 * sigma));
    let turn = b.powf(1.0 / (2.0 * sigma));
    let thr = 0.85 * turn;
    let mut lo = 1.001 * s_zero;
    if shoot_classify(lo, a, b, sigma, thr, dr, rmax) == Shot::High {
        return Err(EdgpeError::InvalidBracket(
                "shooting amplitude bracket does not straddle the separatrix".into(),
            ));
    }
    let mut hi = 2.0 * s_zero;
    let mut expansions = 0;
    while shoot_classify(hi, a, b, sigma, thr, dr, rmax) == Shot::Low {
        hi *= 2.0;
        expansions += 1;
        if expansions > 12 {
            return Err(EdgpeError::InvalidBracket(
                "shooting amplitude bracket does not straddle the separatrix".into(),
            ));
        }
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        match shoot_classify(mid, a, b, sigma, thr, dr, rmax) {
            Shot::High => hi = mid,
            Shot::Low => lo = mid,
        }
    }
    let s = 0.5 * (lo + hi);

    let (m, grad, p) = shoot_quantities(s, a, b, sigma, dr);
    let j = p / (grad.powf(1.5 * sigma) * m.powf(1.0 - 0.5 * sigma));
    // virial identities of the profile as the residual
    let res_eq = (a * grad + b * m - p).abs() / p;
    let res_dil = (0.5 * a * grad + 1.5 * b * m - 3.0 * p / (2.0 * sigma + 2.0)).abs() / p;
    Ok(GNConstant {
        sigma,
        value: j.powf(1.0 / (2.0 * sigma + 2.0)),
        method: GNMethod::OdeGroundState,
        residual: res_eq + res_dil,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    Low,
    High,
}

/// Radial ODE right-hand side for `ψ'' = (bψ − ψ^{2σ+1})/a − (2/r)ψ'`,
/// with the symmetric-origin limit `ψ''(0) = (bψ − ψ^{2σ+1})/(3a)`.
fn rhs(r: f64, psi: f64, dpsi: f64, a: f64, b: f64, sigma: f64) -> (f64, f64) {
    let f = (b * psi - psi.abs().powf(2.0 * sigma) * psi) / a;
    if r < 1e-14 {
        (dpsi, f / 3.0)
    } else {
        (dpsi, f - 2.0 / r * dpsi)
    }
}

fn rk4_step(r: f64, psi: f64, dpsi: f64, dr: f64, a: f64, b: f64, sigma: f64) -> (f64, f64) {
    let (k1p, k1d) = rhs(r, psi, dpsi, a, b, sigma);
    let (k2p, k2d) = rhs(
        r + 0.5 * dr,
        psi + 0.5 * dr * k1p,
        dpsi + 0.5 * dr * k1d,
        a,
        b,
        sigma,
    );
    let (k3p, k3d) = rhs(
        r + 0.5 * dr,
        psi + 0.5 * dr * k2p,
        dpsi + 0.5 * dr * k2d,
        a,
        b,
        sigma,
    );
    let (k4p, k4d) = rhs(r + dr, psi + dr * k3p, dpsi + dr * k3d, a, b, sigma);
    (
        psi + dr / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
        dpsi + dr / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d),
    )
}

/// Overshoot/undershoot classifier: crossing zero means the amplitude is
/// too high, turning back up inside the well means too low.
fn shoot_classify(s: f64, a: f64, b: f64, sigma: f64, thr: f64, dr: f64, rmax: f64) -> Shot {
    let (mut psi, mut dpsi) = (s, 0.0);
    let mut r = 0.0;
    let steps = (rmax / dr).round() as usize;
    for _ in 0..steps {
        let (p, d) = rk4_step(r, psi, dpsi, dr, a, b, sigma);
        psi = p;
        dpsi = d;
        r += dr;
        if psi < 0.0 {
            return Shot::High;
        }
        if dpsi > 0.0 && psi < thr {
            return Shot::Low;
        }
    }
    Shot::Low
}

/// Trapezoid accumulation of `(M, ‖∇ψ‖₂², P)` along the separatrix shot,
/// truncated once the profile drops below 10⁻⁹ or regrows in the noise.
fn shoot_quantities(s: f64, a: f64, b: f64, sigma: f64, dr: f64) -> (f64, f64, f64) {
    let (mut psi, mut dpsi) = (s, 0.0);
    let mut r = 0.0;
    let (mut m, mut grad, mut p) = (0.0, 0.0, 0.0);
    let pw = 2.0 * sigma + 2.0;
    while r < 60.0 {
        let (psi1, dpsi1) = rk4_step(r, psi, dpsi, dr, a, b, sigma);
        let r1 = r + dr;
        m += 0.5 * dr * (r * r * psi * psi + r1 * r1 * psi1 * psi1);
        grad += 0.5 * dr * (r * r * dpsi * dpsi + r1 * r1 * dpsi1 * dpsi1);
        p += 0.5
            * dr
            * (r * r * psi.abs().powf(pw) + r1 * r1 * psi1.abs().powf(pw));
        psi = psi1;
        dpsi = dpsi1;
        r = r1;
        if psi < 1e-9 || (dpsi > 0.0 && psi < 1e-6) {
            break;
        }
    }
    let four_pi = 4.0 * std::f64::consts::PI;
    (four_pi * m, four_pi * grad, four_pi * p)
}

/// Discrete quotient ingredients for a real field, reusing one transform.
fn grid_quantities(
    fft: &mut Fft3,
    grid: &Grid,
    u: &[f64],
    scratch: &mut [Complex64],
    sigma: f64,
) -> (f64, f64, f64) {
    for (s, &v) in scratch.iter_mut().zip(u) {
        *s = Complex64::new(v, 0.0);
    }
    fft.fft3(scratch);
    let mut a = 0.0;
    grid.for_each_mode(|idx, xi| {
        a += (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]) * scratch[idx].norm_sqr();
    });
    let h3 = grid.dv();
    // raw DFT values: the continuum normalization contributes h⁶/V
    a *= h3 * h3 / grid.volume();
    let mut m = 0.0;
    let mut p = 0.0;
    let pw = 2.0 * sigma + 2.0;
    if sigma == 1.0 {
        for &v in u {
            let v2 = v * v;
            m += v2;
            p += v2 * v2;
        }
    } else {
        for &v in u {
            m += v * v;
            p += v.abs().powf(pw);
        }
    }
    (a, m * h3, p * h3)
}

fn quotient_of(a: f64, m: f64, p: f64, sigma: f64) -> f64 {
    p / (a.powf(1.5 * sigma) * m.powf(1.0 - 0.5 * sigma))
}

/// Grid-route maximization: guarded coordinate search over `e^{−r^q/w}`,
/// then the normalized fixed-point iteration
/// `u ← S^γ (1−Δ)⁻¹ u^{2σ+1}`, `S = (A+M)/P`, `γ = (2σ+1)/(2σ)`.
fn maximize_on_grid(sigma: f64, n: usize) -> Result<GNConstant> {
    coefficients(sigma)?;
    let grid = Grid::new([GN_BOX; 3], [n; 3])?;
    let mut fft = Fft3::new(Arc::clone(&grid));
    let len = grid.len();
    let mut scratch = vec![Complex64::new(0.0, 0.0); len];

    let radius: Vec<f64> = {
        let mut r = vec![0.0; len];
        grid.for_each_point(|idx, x| {
            r[idx] = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        });
        r
    };
    let trial = |q: f64, w: f64, out: &mut [f64]| {
        for (o, &r) in out.iter_mut().zip(&radius) {
            *o = (-r.powf(q) / w).exp();
        }
    };
    // decay guard: reject widths whose tail at the inscribed radius
    // exceeds 10⁻⁸ — on the torus the quotient is unbounded along
    // flattening directions (constants have no gradient), so the search
    // must stay within genuinely localized trials
    let admissible = |q: f64, w: f64| (1.0..4.0).contains(&q) && (GN_BOX / 2.0).powf(q) / w > 18.4;

    let mut u = vec![0.0; len];
    let mut eval = |q: f64, w: f64, u: &mut Vec<f64>, fft: &mut Fft3| {
        trial(q, w, u);
        let (a, m, p) = grid_quantities(fft, &grid, u, &mut scratch, sigma);
        quotient_of(a, m, p, sigma)
    };

    let (mut q, mut lw): (f64, f64) = (2.0, 0.0);
    let mut best = eval(q, lw.exp(), &mut u, &mut fft);
    let (mut dq, mut dlw): (f64, f64) = (0.3, 0.4);
    while dq.max(dlw) > 1e-3 {
        let mut improved = false;
        for (tq, tlw) in [(q + dq, lw), (q - dq, lw), (q, lw + dlw), (q, lw - dlw)] {
            if !admissible(tq, tlw.exp()) {
                continue;
            }
            let j = eval(tq, tlw.exp(), &mut u, &mut fft);
            if j > best {
                best = j;
                q = tq;
                lw = tlw;
                improved = true;
                break;
            }
        }
        if !improved {
            dq *= 0.5;
            dlw *= 0.5;
        }
    }
    trial(q, lw.exp(), &mut u);

    // normalize the seed so the first fixed-point scale factor is 1
    let (a, m, p) = grid_quantities(&mut fft, &grid, &u, &mut scratch, sigma);
    let lam = ((a + m) / p).powf(1.0 / (2.0 * sigma));
    for v in &mut u {
        *v *= lam;
    }

    let gamma = (2.0 * sigma + 1.0) / (2.0 * sigma);
    let mut j_prev = 0.0;
    let mut j = 0.0;
    let mut iters = 0;
    let mut next = vec![0.0; len];
    for it in 0..600 {
        iters = it + 1;
        let (a, m, p) = grid_quantities(&mut fft, &grid, &u, &mut scratch, sigma);
        j = quotient_of(a, m, p, sigma);
        let s = (a + m) / p;
        fixed_point_image(&mut fft, &grid, &u, &mut scratch, sigma, &mut next);
        let scale = s.powf(gamma);
        for (v, &g) in u.iter_mut().zip(&next) {
            *v = g * scale;
        }
        if it > 5 && (j - j_prev).abs() <= 1e-14 * j.abs() {
            break;
        }
        j_prev = j;
    }
    if iters >= 600 {
        return Err(EdgpeError::NonConvergence {
            iters,
            residual: (j - j_prev).abs() / j.abs(),
        });
    }

    // stationarity defect of the converged iterate
    let (a, m, p) = grid_quantities(&mut fft, &grid, &u, &mut scratch, sigma);
    j = quotient_of(a, m, p, sigma);
    let s = (a + m) / p;
    fixed_point_image(&mut fft, &grid, &u, &mut scratch, sigma, &mut next);
    let scale = s.powf(gamma);
    let mut num = 0.0;
    let mut den = 0.0;
    for (&v, &g) in u.iter().zip(&next) {
        let d = v - g * scale;
        num += d * d;
        den += v * v;
    }

    Ok(GNConstant {
        sigma,
        value: j.powf(1.0 / (2.0 * sigma + 2.0)),
        method: GNMethod::DirectMaximization,
        residual: (num / den).sqrt(),
    })
}

/// `(1−Δ)⁻¹ u^{2σ+1}` on the grid.
fn fixed_point_image(
    fft: &mut Fft3,
    grid: &Grid,
    u: &[f64],
    scratch: &mut [Complex64],
    sigma: f64,
    out: &mut [f64],
) {
    if sigma == 1.0 {
        for (s, &v) in scratch.iter_mut().zip(u) {
            *s = Complex64::new(v * v * v, 0.0);
        }
    } else {
        let pw = 2.0 * sigma + 1.0;
        for (s, &v) in scratch.iter_mut().zip(u) {
            *s = Complex64::new(v.abs().powf(pw - 1.0) * v, 0.0);
        }
    }
    fft.fft3(scratch);
    grid.for_each_mode(|idx, xi| {
        let q2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        scratch[idx] /= 1.0 + q2;
    });
    fft.ifft3(scratch);
    for (o, s) in out.iter_mut().zip(scratch.iter()) {
        *o = s.re;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::smooth_random_field;

    // frozen shooting-route values at σ = 1 (dr = 2·10⁻³ separatrix)
    const J1: f64 = 0.0407361021;
    const C1: f64 = 0.4492570155;

    #[test]
    fn shooting_route_reproduces_frozen_constants() {
        let gn = gn_constant_ode(1.0).unwrap();
        assert_eq!(gn.method, GNMethod::OdeGroundState);
        assert!((gn.value - C1).abs() <= 1e-7 * C1, "C1 = {}", gn.value);
        assert!(gn.residual <= 1e-6, "identity defect {}", gn.residual);
        let j = gn.value.powi(4);
        assert!((j - J1).abs() <= 1e-7 * J1);
    }

    #[test]
    fn shooting_identities_pin_the_profile() {
        // at σ = 1 the virial identities give C₁ = (2/M)^{1/4} directly
        let (a, b) = coefficients(1.0).unwrap();
        assert_eq!((a, b), (1.5, 0.5));
        let (m, grad, p) = shoot_quantities(3.066996241163, a, b, 1.0, 2e-3);
        assert!((grad / m - 1.0).abs() <= 1e-6);
        assert!((p / (2.0 * m) - 1.0).abs() <= 1e-6);
        assert!(((2.0 / m).powf(0.25) - C1).abs() <= 1e-7 * C1);
    }

    #[test]
    fn grid_route_agrees_with_shooting() {
        let gn = gn_constant(1.0).unwrap();
        assert_eq!(gn.method, GNMethod::DirectMaximization);
        assert!((gn.value - C1).abs() <= 1e-4 * C1, "C1 = {}", gn.value);
        assert!(gn.residual <= 1e-6, "fixed-point defect {}", gn.residual);
    }

    #[test]
    fn quotient_is_scale_invariant() {
        let grid = Grid::new([GN_BOX; 3], [64; 3]).unwrap();
        let mk = |amp: f64, width: f64| {
            WaveField::from_fn(Arc::clone(&grid), |x| {
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                Complex64::new(amp * (-r2 / (width * width)).exp(), 0.0)
            })
        };
        // widths chosen so both tails clear the box at the 10⁻⁵ level
        let j1 = weinstein_quotient(&mk(1.0, 1.2), 1.0).unwrap();
        let j2 = weinstein_quotient(&mk(2.7, 1.8), 1.0).unwrap();
        assert!((j1 - j2).abs() <= 1e-8 * j1, "{j1} vs {j2}");
    }

    #[test]
    fn gaussian_trial_bounds_the_supremum() {
        let grid = Grid::new([GN_BOX; 3], [64; 3]).unwrap();
        let u = WaveField::from_fn(Arc::clone(&grid), |x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            Complex64::new((-r2 / 2.0).exp(), 0.0)
        });
        let j = weinstein_quotient(&u, 1.0).unwrap();
        assert!(j <= J1 * (1.0 + 1e-9));
        assert!(j >= 0.8 * J1, "Gaussian should not be grossly suboptimal");
    }

    #[test]
    fn random_fields_respect_the_inequality() {
        let grid = Grid::new([16.0; 3], [48; 3]).unwrap();
        let mut fft = Fft3::new(Arc::clone(&grid));
        for seed in 0..20 {
            let u = smooth_random_field(&mut fft, seed, 1.2);
            let j = weinstein_quotient(&u, 1.0).unwrap();
            assert!(j <= J1 * (1.0 + 1e-6), "seed {seed}: {j}");
        }
    }

    #[test]
    fn smoke_sigma_half() {
        let ode = gn_constant_ode(0.5).unwrap();
        let grid = maximize_on_grid(0.5, 48).unwrap();
        assert!(
            (ode.value - grid.value).abs() <= 1e-3 * ode.value,
            "{} vs {}",
            ode.value,
            grid.value
        );
    }

    #[test]
    fn sigma_domain_is_enforced() {
        assert!(gn_constant_ode(2.0).is_err());
        assert!(gn_constant_ode(0.0).is_err());
        assert!(gn_constant_ode(-1.0).is_err());
        let grid = Grid::new([GN_BOX; 3], [16; 3]).unwrap();
        let zero = WaveField::zeros(grid);
        assert!(weinstein_quotient(&zero, 1.0).is_err());
    }
}
