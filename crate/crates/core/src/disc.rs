//! Toeplitz and Hankel operators on the Bergman space, in the orthonormal monomial basis
//! `e_n(z) = √((n+1)/π) zⁿ`.

use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, CMat};
use crate::operators::Symbol;
use crate::quadrature;
use crate::{Error, Result, C64};

fn radial_panels(u: &Symbol) -> Vec<f64> {
    let mut b: Vec<f64> = std::iter::once(0.0)
        .chain(u.breaks.iter().copied().filter(|&r| r > 0.0 && r < 1.0))
        .chain(std::iter::once(1.0))
        .collect();
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// `⟨P(u e_m), e_n⟩ = ∫_𝔻 u e_m ē_n dA` for `m, n ≤ degree_cap`.
///
/// Radial symbols give the diagonal `2(n+1)∫₀¹ u(r) r^{2n+1} dr`; general symbols are
/// integrated on a polar grid with an FFT in the angle.
pub fn toeplitz_matrix(u: &Symbol, degree_cap: usize) -> Result<CMat> {
    let n = degree_cap + 1;
    let (rs, ws) = quadrature::composite(&radial_panels(u), degree_cap + 24);
    if let Some(profile) = u.radial_profile() {
        let mut t = CMat::zeros((n, n));
        for (&r, &w) in rs.iter().zip(&ws) {
            let f = profile(r);
            if f == 0.0 {
                continue;
            }
            let r2 = r * r;
            let mut pw = r; // r^{2k+1}
            for k in 0..n {
                t[[k, k]] += C64::new(2.0 * (k as f64 + 1.0) * w * f * pw, 0.0);
                pw *= r2;
            }
        }
        return Ok(t);
    }
    let len = (2 * n + 8).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_inverse(len);
    let mut t = CMat::zeros((n, n));
    let mut buf = vec![C64::new(0.0, 0.0); len];
    let mut pw = vec![0.0; n];
    for (&r, &w) in rs.iter().zip(&ws) {
        for (l, b) in buf.iter_mut().enumerate() {
            let th = 2.0 * PI * l as f64 / len as f64;
            *b = u.eval(&crate::geometry::Point::disc(r * th.cos(), r * th.sin()));
        }
        // buf[j] = Σ_l u(θ_l) e^{+ijθ_l}
        fft.process(&mut buf);
        let mut p = 1.0;
        for (k, slot) in pw.iter_mut().enumerate() {
            *slot = p * (k as f64 + 1.0).sqrt();
            p *= r;
        }
        let scale = w * r * 2.0 / len as f64; // (2π/len)·(1/π)
        for m in 0..n {
            for k in 0..n {
                let j = (m as isize - k as isize).rem_euclid(len as isize) as usize;
                t[[k, m]] += buf[j] * (scale * pw[m] * pw[k]);
            }
        }
    }
    if t.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidParameter(format!("symbol {} produced non-finite Toeplitz entries", u.name)));
    }
    Ok(t)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HankelCheck {
    pub degree_cap: usize,
    /// Basis vectors `e_0 … e_{protected−1}` on which the identity is tested.
    pub protected: usize,
    /// `‖H_u*H_u − (T_{|u|²} − T_ū T_u)‖` on the protected block.
    pub residual: f64,
    pub hankel_norm: f64,
}

/// Tests `H_u*H_u = T_{|u|²} − T_ū T_u` with `H_u f = (I − P)(u f)` computed on a polar grid.
pub fn hankel_identity_residual(u: &Symbol, degree_cap: usize) -> Result<HankelCheck> {
    let n = degree_cap + 1;
    let protected = degree_cap / 2 + 1;
    let (rs, ws) = quadrature::composite(&radial_panels(u), degree_cap + 24);
    let len = 4 * n + 8;
    // grid values of e_k and u
    let npts = rs.len() * len;
    let mut grid_w = Vec::with_capacity(npts);
    let mut uvals = Vec::with_capacity(npts);
    let mut basis = CMat::zeros((npts, n));
    for (ir, (&r, &w)) in rs.iter().zip(&ws).enumerate() {
        for l in 0..len {
            let th = 2.0 * PI * l as f64 / len as f64;
            let idx = ir * len + l;
            grid_w.push(w * r * 2.0 * PI / len as f64);
            uvals.push(u.eval(&crate::geometry::Point::disc(r * th.cos(), r * th.sin())));
            let z = C64::from_polar(r, th);
            let mut p = C64::new(1.0, 0.0);
            for k in 0..n {
                basis[[idx, k]] = p * ((k as f64 + 1.0) / PI).sqrt();
                p *= z;
            }
        }
    }
    // g_m = u e_m on the grid, m < protected
    let mut g = CMat::zeros((npts, protected));
    for i in 0..npts {
        for m in 0..protected {
            g[[i, m]] = uvals[i] * basis[[i, m]];
        }
    }
    // c = Bᴴ W g (projection coefficients), h = g − B c
    let bw_h = linalg::scale_columns(&linalg::adjoint(&basis.view()), &grid_w);
    let c = bw_h.dot(&g);
    let h = &g - &basis.dot(&c);
    let hw_h = linalg::scale_columns(&linalg::adjoint(&h.view()), &grid_w);
    let hh = hw_h.dot(&h); // [m', m] = ⟨h_m, h_{m'}⟩
    let t_u = toeplitz_matrix(u, degree_cap)?;
    let t_ubar = toeplitz_matrix(&u.conj(), degree_cap)?;
    let t_abs = toeplitz_matrix(&u.abs_sqr(), degree_cap)?;
    let rhs = &t_abs - &t_ubar.dot(&t_u);
    let block = rhs.slice(ndarray::s![..protected, ..protected]).to_owned();
    let diff = &hh - &block;
    Ok(HankelCheck {
        degree_cap,
        protected,
        residual: linalg::spectral_norm(&diff)?,
        hankel_norm: linalg::spectral_norm(&hh)?.sqrt(),
    })
}
