//! Bulirsch's generalized complete elliptic integral
//!
//! cel(kc, p, c, s) = ∫₀^{π/2} (c cos²φ + s sin²φ) / ((cos²φ + p sin²φ) √(cos²φ + kc² sin²φ)) dφ
//!
//! evaluated by the Bartky/Bulirsch descending transformation, which
//! converges quadratically. p ≤ 0 is handled by the Cauchy principal value
//! branch; p = 0 is needed on the cylinder mantle where (a−ρ)/(a+ρ) = 0.

use std::f64::consts::FRAC_PI_2;

const ERRTOL: f64 = 1e-10;

pub fn cel(kc: f64, p: f64, c: f64, s: f64) -> f64 {
    if kc == 0.0 {
        return f64::INFINITY;
    }
    let mut k = kc.abs();
    let mut em = 1.0;
    let (mut pp, mut cc, mut ss);
    if p > 0.0 {
        pp = p.sqrt();
        cc = c;
        ss = s / pp;
    } else {
        let mut f = kc * kc;
        let mut q = 1.0 - f;
        let g = 1.0 - p;
        f -= p;
        q *= s - c * p;
        pp = (f / g).sqrt();
        cc = (c - s) / g;
        ss = -q / (g * g * pp) + cc * pp;
    }
    let mut f = cc;
    cc += ss / pp;
    let mut g = k / pp;
    ss = 2.0 * (ss + f * g);
    pp += g;
    g = em;
    em += k;
    let mut kk = k;
    while (g - k).abs() > g * ERRTOL {
        k = 2.0 * kk.sqrt();
        kk = k * em;
        f = cc;
        cc += ss / pp;
        g = kk / pp;
        ss = 2.0 * (ss + f * g);
        pp += g;
        g = em;
        em += k;
    }
    FRAC_PI_2 * (ss + cc * em) / (em * (em + pp))
}

/// Complete elliptic integral of the first kind, parameter m = k².
pub fn ellip_k(m: f64) -> f64 {
    cel((1.0 - m).sqrt(), 1.0, 1.0, 1.0)
}

/// Complete elliptic integral of the second kind, parameter m = k².
pub fn ellip_e(m: f64) -> f64 {
    let kc2 = 1.0 - m;
    cel(kc2.sqrt(), 1.0, 1.0, kc2)
}
