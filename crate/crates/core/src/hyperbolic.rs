//! Curved-space picture of the lattice: the imaginary gauge field maps it onto
//! a hyperbolic lattice of curvature `-κ`, `κ = 4 ln²β`, with site `n` at
//! `x_n = x_0 e^{n sqrt κ}`.

use serde::Serialize;

use crate::error::{Error, Result};

pub fn curvature(beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!("beta = {beta} must be positive")));
    }
    Ok(4.0 * beta.ln().powi(2))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SiteCoordinates {
    pub sites: Vec<i64>,
    pub x: Vec<f64>,
    /// `κ = 0`: every site sits at `x_0`.
    pub flat: bool,
}

pub fn site_coordinates(x0: f64, n_range: std::ops::Range<i64>, kappa: f64) -> Result<SiteCoordinates> {
    if !(kappa >= 0.0) {
        return Err(Error::InvalidArgument(format!("kappa = {kappa} must be non-negative")));
    }
    let root = kappa.sqrt();
    let sites: Vec<i64> = n_range.collect();
    let x = sites.iter().map(|&n| x0 * (n as f64 * root).exp()).collect();
    Ok(SiteCoordinates { sites, x, flat: kappa == 0.0 })
}

/// `D_x = x_0 (e^{N' sqrt κ} - e^{N sqrt κ})`.
pub fn coupling_separation(x0: f64, n: i64, n_prime: i64, kappa: f64) -> f64 {
    let root = kappa.sqrt();
    x0 * ((n_prime as f64 * root).exp() - (n as f64 * root).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SurfacePoint {
    /// `+1` or `-1`, the sign in front of `sqrt(1/κ - r²)`.
    pub branch: i8,
    pub r: f64,
    pub theta: f64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub residual: f64,
}

fn arcsech(x: f64) -> f64 {
    ((1.0 + (1.0 - x * x).sqrt()) / x).ln()
}

/// `[u - arcsech(sqrt((v²+w²)κ))/sqrt κ]² + v² + w² - 1/κ`.
pub fn surface_residual(kappa: f64, u: f64, v: f64, w: f64) -> f64 {
    let rho2 = v * v + w * w;
    let a = arcsech((rho2 * kappa).sqrt().min(1.0)) / kappa.sqrt();
    (u - a).powi(2) + rho2 - 1.0 / kappa
}

pub fn pseudosphere_point(kappa: f64, r: f64, theta: f64, branch: i8) -> Result<SurfacePoint> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidArgument(format!("kappa = {kappa} must be positive")));
    }
    let rim = 1.0 / kappa.sqrt();
    if !(r > 0.0 && r <= rim) {
        return Err(Error::InvalidArgument(format!("r = {r} outside (0, {rim}]")));
    }
    let sign = if branch < 0 { -1.0 } else { 1.0 };
    let u = arcsech((r * kappa.sqrt()).min(1.0)) / kappa.sqrt() + sign * ((rim - r) * (rim + r)).max(0.0).sqrt();
    let (v, w) = (r * theta.cos(), r * theta.sin());
    Ok(SurfacePoint { branch: sign as i8, r, theta, u, v, w, residual: surface_residual(kappa, u, v, w) })
}

/// Both branches on an `r_count x theta_count` grid, `r` uniform over
/// `(0, 1/sqrt κ]` and `θ` uniform over `[0, 2π)`.
pub fn pseudosphere_sample(kappa: f64, r_count: usize, theta_count: usize) -> Result<Vec<SurfacePoint>> {
    if r_count == 0 || theta_count == 0 {
        return Err(Error::InvalidArgument("sample counts must be positive".into()));
    }
    if !(kappa > 0.0) {
        return Err(Error::InvalidArgument(format!("kappa = {kappa} must be positive")));
    }
    let rim = 1.0 / kappa.sqrt();
    let mut out = Vec::with_capacity(2 * r_count * theta_count);
    for branch in [1i8, -1] {
        for i in 1..=r_count {
            let r = rim * i as f64 / r_count as f64;
            for j in 0..theta_count {
                let theta = 2.0 * std::f64::consts::PI * j as f64 / theta_count as f64;
                out.push(pseudosphere_point(kappa, r, theta, branch)?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curvature_examples() {
        assert!((curvature(3f64.sqrt()).unwrap() - 3f64.ln().powi(2)).abs() < 1e-15);
        assert!((curvature(3f64.sqrt()).unwrap() - 1.2069).abs() < 1e-4);
        assert_eq!(curvature(1.0).unwrap(), 0.0);
        assert!((curvature(std::f64::consts::E).unwrap() - 4.0).abs() < 1e-15);
        assert!(curvature(0.0).is_err());
    }

    #[test]
    fn coordinates() {
        let k = curvature(3f64.sqrt()).unwrap();
        let c = site_coordinates(1.0, 0..3, k).unwrap();
        assert_eq!(c.x[0], 1.0);
        assert!((c.x[2] - 9.0).abs() < 1e-12);
        assert!((coupling_separation(1.0, 0, 2, k) - 8.0).abs() < 1e-12);
        let flat = site_coordinates(2.0, -2..2, 0.0).unwrap();
        assert!(flat.flat && flat.x.iter().all(|&x| x == 2.0));
    }

    #[test]
    fn rim_and_residuals() {
        let p = pseudosphere_point(2.0, 1.0 / 2f64.sqrt(), 0.3, 1).unwrap();
        let q = pseudosphere_point(2.0, 1.0 / 2f64.sqrt(), 0.3, -1).unwrap();
        assert!(p.u.abs() < 1e-15 && q.u.abs() < 1e-15);
        assert!(pseudosphere_point(1.0, 1.01, 0.0, 1).is_err());
        let pts = pseudosphere_sample(1.0, 40, 24).unwrap();
        assert_eq!(pts.len(), 2 * 40 * 24);
        assert!(pts.iter().all(|p| p.residual.abs() < 1e-10));
    }
}
