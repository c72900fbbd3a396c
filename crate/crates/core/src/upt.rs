//! Unitary perturbation theory for `F = exp(−iτH0)·exp(−iεK)`.
//!
//! Everything works in the `H0` eigenbasis: `energies` are the sorted `E_k`
//! and the kick enters through its matrix `K_{ab} = ⟨E_a|K|E_b⟩`, which is
//! real for this model.

use std::f64::consts::TAU;

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::wrap_phase;
use crate::lmg::KickMatrix;
use crate::resonance::{Condition, ResonanceLabel};

/// Below this phase distance from a multiple of `2π` the degenerate path is required.
pub const DEGENERATE_GAP: f64 = 1e-8;
/// Below this the non-degenerate formulas are still evaluated but flagged.
pub const NEAR_SINGULAR_GAP: f64 = 1e-4;

/// Distance of `x` from the nearest multiple of `2π`.
pub fn phase_gap(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    r.min(TAU - r)
}

fn check_inputs(energies: &[f64], kick: &KickMatrix, k: usize) -> Result<()> {
    if kick.dim() != energies.len() {
        return Err(Error::DimensionMismatch(kick.dim(), energies.len()));
    }
    if k >= energies.len() {
        return Err(Error::OutOfRange { index: k as i64, dim: energies.len() });
    }
    Ok(())
}

/// Smallest `|mod(τ(E_{k'} − E_k), 2π)|` over `k' ≠ k`, erroring below [`DEGENERATE_GAP`].
pub fn nondegenerate_gap(energies: &[f64], tau: f64, k: usize) -> Result<f64> {
    let mut gap = f64::INFINITY;
    for (l, &e) in energies.iter().enumerate() {
        if l != k {
            gap = gap.min(phase_gap(tau * (e - energies[k])));
        }
    }
    if gap < DEGENERATE_GAP {
        return Err(Error::NearDegenerate { k, gap });
    }
    Ok(gap)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UptNonDegenerate {
    pub k: usize,
    pub phi0: f64,
    pub phi1: f64,
    pub phi2: f64,
    /// `⟨E_{k'}|f_k^(1)⟩` for every `k'`; the entry at `k` is zero.
    #[serde(skip)]
    pub f1_components: Vec<c64>,
    pub a2: f64,
    pub a3: f64,
    /// Smallest phase gap to another level, and whether it is below [`NEAR_SINGULAR_GAP`].
    pub min_gap: f64,
    pub near_singular: bool,
}

impl UptNonDegenerate {
    /// `1 − a₂ε² − a₃ε³`.
    pub fn fmax_series(&self, eps: f64) -> f64 {
        1.0 - self.a2 * eps * eps - self.a3 * eps.powi(3)
    }

    /// `φ0 + εφ1 + ε²φ2`, wrapped.
    pub fn phase_series(&self, eps: f64) -> f64 {
        wrap_phase(self.phi0 + eps * self.phi1 + eps * eps * self.phi2)
    }
}

/// `(φ0, φ1, φ2)` of level `k`.
pub fn quasienergy_corrections(energies: &[f64], kick: &KickMatrix, tau: f64, k: usize) -> Result<(f64, f64, f64)> {
    check_inputs(energies, kick, k)?;
    nondegenerate_gap(energies, tau, k)?;
    let phi0 = wrap_phase(tau * energies[k]);
    let phi1 = kick.get(k, k);
    let mut phi2 = 0.0;
    for (l, &e) in energies.iter().enumerate() {
        if l == k {
            continue;
        }
        let x = 0.5 * tau * (energies[k] - e);
        let kk = kick.get(k, l);
        phi2 += 0.5 * kk * kk * x.cos() / x.sin();
    }
    Ok((phi0, phi1, phi2))
}

/// `⟨E_{k'}|f_k^(1)⟩ = −i K_{k'k}/(e^{iτ(E_{k'} − E_k)} − 1)`.
pub fn eigenstate_first_order(energies: &[f64], kick: &KickMatrix, tau: f64, k: usize) -> Result<Vec<c64>> {
    check_inputs(energies, kick, k)?;
    let mut out = vec![c64::new(0.0, 0.0); energies.len()];
    for (l, &e) in energies.iter().enumerate() {
        if l == k {
            continue;
        }
        let den = c64::cis(tau * (e - energies[k])) - c64::new(1.0, 0.0);
        if den.norm() <= 1e-12 {
            return Err(Error::NearDegenerate { k, gap: den.norm() });
        }
        out[l] = c64::new(0.0, -kick.get(l, k)) / den;
    }
    Ok(out)
}

/// `a₂ = ¼ Σ_{k'≠k} K_{k'k}²/sin²(τ(E_{k'} − E_k)/2)`, the sine form.
pub fn a2_sine_form(energies: &[f64], kick: &KickMatrix, tau: f64, k: usize) -> f64 {
    let mut s = 0.0;
    for (l, &e) in energies.iter().enumerate() {
        if l != k {
            let kk = kick.get(l, k);
            let sn = (0.5 * tau * (e - energies[k])).sin();
            s += 0.25 * kk * kk / (sn * sn);
        }
    }
    s
}

/// The three sums that make up `a₃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct A3Terms {
    pub triple: f64,
    pub diagonal: f64,
    /// Vanishes for a real kick matrix.
    pub commutator: f64,
}

impl A3Terms {
    pub fn total(&self) -> f64 {
        self.triple + self.diagonal + self.commutator
    }
}

/// Third-order coefficient of `F_max` from the closed-form sums.
pub fn a3_coefficient(energies: &[f64], kick: &KickMatrix, tau: f64, k: usize) -> Result<A3Terms> {
    check_inputs(energies, kick, k)?;
    nondegenerate_gap(energies, tau, k)?;
    let n = energies.len();
    let x: Vec<f64> = energies.iter().map(|&e| 0.5 * tau * (energies[k] - e)).collect();
    let kcol: Vec<f64> = (0..n).map(|l| kick.get(l, k)).collect();
    // w_{k''} = cot(x_{k''}) K_{k''k}, zero at k.
    let w: Vec<f64> = (0..n).map(|l| if l == k { 0.0 } else { x[l].cos() / x[l].sin() * kcol[l] }).collect();
    let kw = crate::linalg::a_x(&kick.elements, &w);
    let k2col = crate::linalg::a_x(&kick.elements, &kcol);
    let (mut triple, mut diagonal, mut commutator) = (0.0, 0.0, 0.0);
    for l in 0..n {
        if l == k {
            continue;
        }
        let s = x[l].sin();
        let s2 = s * s;
        let inner = kw[l] - kick.get(l, l) * w[l];
        triple += 0.25 * kcol[l] * inner / s2;
        diagonal += 0.25 * x[l].cos() / (s2 * s) * kcol[l] * kcol[l] * (kick.get(l, l) - kick.get(k, k));
        commutator += 0.125 * (k2col[l] * kcol[l] - kcol[l] * k2col[l]) / s2;
    }
    Ok(A3Terms { triple, diagonal, commutator })
}

/// `a₃ = 2 Re⟨f^(1)|f^(2)⟩` from the explicit second-order components.
pub fn a3_from_components(energies: &[f64], kick: &KickMatrix, tau: f64, k: usize) -> Result<f64> {
    let f1 = eigenstate_first_order(energies, kick, tau, k)?;
    let n = energies.len();
    let phi1 = kick.get(k, k);
    let kcol: Vec<f64> = (0..n).map(|l| kick.get(l, k)).collect();
    let k2col = crate::linalg::a_x(&kick.elements, &kcol);
    let re: Vec<f64> = f1.iter().map(|c| c.re).collect();
    let im: Vec<f64> = f1.iter().map(|c| c.im).collect();
    let kre = crate::linalg::a_x(&kick.elements, &re);
    let kim = crate::linalg::a_x(&kick.elements, &im);
    let mut s = 0.0;
    for l in 0..n {
        if l == k {
            continue;
        }
        let e = c64::cis(tau * (energies[l] - energies[k]));
        let kf1 = c64::new(kre[l], kim[l]);
        let rhs = c64::new(0.0, -1.0) * kf1 - c64::new(0.5 * k2col[l], 0.0) + c64::new(0.0, phi1) * e * f1[l];
        let f2 = rhs / (e - c64::new(1.0, 0.0));
        s += 2.0 * (f1[l].conj() * f2).re;
    }
    Ok(s)
}

/// All non-degenerate corrections of level `k`.
pub fn non_degenerate(energies: &[f64], kick: &KickMatrix, tau: f64, k: usize) -> Result<UptNonDegenerate> {
    let (phi0, phi1, phi2) = quasienergy_corrections(energies, kick, tau, k)?;
    let min_gap = nondegenerate_gap(energies, tau, k)?;
    let f1_components = eigenstate_first_order(energies, kick, tau, k)?;
    let a2 = f1_components.iter().map(|c| c.norm_sqr()).sum();
    let a3 = a3_coefficient(energies, kick, tau, k)?.total();
    Ok(UptNonDegenerate { k, phi0, phi1, phi2, f1_components, a2, a3, min_gap, near_singular: min_gap < NEAR_SINGULAR_GAP })
}

/// `a₂` split into resonant-ladder terms `k' = k ± M·m` and the rest.
pub fn s2_split(energies: &[f64], kick: &KickMatrix, tau: f64, k: usize, label: ResonanceLabel) -> Result<(f64, f64)> {
    check_inputs(energies, kick, k)?;
    let m = label.m as i64;
    let (mut cr, mut nr) = (0.0, 0.0);
    for (l, &e) in energies.iter().enumerate() {
        if l == k {
            continue;
        }
        let kk = kick.get(l, k);
        let sn = (0.5 * tau * (e - energies[k])).sin();
        let term = 0.25 * kk * kk / (sn * sn);
        if (l as i64 - k as i64) % m == 0 {
            cr += term;
        } else {
            nr += term;
        }
    }
    Ok((cr, nr))
}

/// Eigenpairs of `[[a, b], [b, d]]`: `(λ_lo, λ_hi, v_lo, v_hi)`.
pub fn symmetric_2x2(a: f64, b: f64, d: f64) -> (f64, f64, [f64; 2], [f64; 2]) {
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let r = half.hypot(b);
    let theta = 0.5 * (2.0 * b).atan2(a - d);
    let (s, c) = theta.sin_cos();
    (mean - r, mean + r, [-s, c], [c, s])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UptDegenerate {
    pub k: usize,
    pub m: usize,
    /// `φ^(1)` of the states labelled `k` and `k+m`.
    pub phi1_pair: [f64; 2],
    /// `c[a][i]`: component of `|f_a^(0)⟩` on `|E_k⟩` (`i = 0`) and `|E_{k+m}⟩` (`i = 1`);
    /// `a = 0` is the state labelled `k`, with `|c[0][0]| ≥ |c[0][1]|`.
    pub c: [[f64; 2]; 2],
    /// `K_{k+m,k}/J`.
    pub kappa: f64,
    /// `K_{k+m,k+m} − K_{k,k}`.
    pub kappa_o: f64,
    pub j: f64,
}

impl UptDegenerate {
    /// `|⟨E_k|f_k^(0)⟩|²`.
    pub fn c_k1_sq(&self) -> f64 {
        self.c[0][0] * self.c[0][0]
    }

    /// `c = |κ₀|/(4|κ|)`, the `1/J` offset of `F_max` above one half.
    pub fn offset_c(&self) -> f64 {
        self.kappa_o.abs() / (4.0 * self.kappa.abs())
    }

    fn level(&self, a: usize) -> usize {
        if a == 0 {
            self.k
        } else {
            self.k + self.m
        }
    }
}

/// Zeroth-order pair from diagonalizing `K` inside `{|E_k⟩, |E_{k+m}⟩}`.
pub fn degenerate_block(kick: &KickMatrix, j: f64, k: usize, m: usize) -> Result<UptDegenerate> {
    let n = kick.dim();
    if k + m >= n || m == 0 {
        return Err(Error::OutOfRange { index: (k + m) as i64, dim: n });
    }
    let (a, b, d) = (kick.get(k, k), kick.get(k, k + m), kick.get(k + m, k + m));
    if b.abs() < 1e-12 {
        return Err(Error::VanishingCoupling(b));
    }
    let (lo, hi, vlo, vhi) = symmetric_2x2(a, b, d);
    // The state labelled k carries the larger weight on E_k; exact ties go to the lower phase.
    let lo_first = vlo[0].abs() >= vhi[0].abs() * (1.0 - 1e-15);
    let (pk, vk, pkm, vkm) = if lo_first { (lo, vlo, hi, vhi) } else { (hi, vhi, lo, vlo) };
    let sgn = |v: [f64; 2], i: usize| if v[i] < 0.0 { [-v[0], -v[1]] } else { v };
    let vk = sgn(vk, 0);
    let vkm = sgn(vkm, 1);
    Ok(UptDegenerate { k, m, phi1_pair: [pk, pkm], c: [vk, vkm], kappa: b / j, kappa_o: d - a, j })
}

/// `⟨E_{k'}|K|f_a^(0)⟩` for every `k'`.
fn k_on_pair_state(kick: &KickMatrix, block: &UptDegenerate, a: usize) -> Vec<f64> {
    let (i0, i1) = (block.k, block.k + block.m);
    let c = block.c[a];
    (0..kick.dim()).map(|l| c[0] * kick.get(l, i0) + c[1] * kick.get(l, i1)).collect()
}

/// `a₂^ER = ¼ Σ_{k'≠k,k+m} |⟨E_{k'}|K|f_a^(0)⟩|²/sin²(τ(E_{k'} − E_a)/2)`.
pub fn er_a2(energies: &[f64], kick: &KickMatrix, tau: f64, block: &UptDegenerate, a: usize) -> Result<f64> {
    if kick.dim() != energies.len() {
        return Err(Error::DimensionMismatch(kick.dim(), energies.len()));
    }
    let ea = energies[block.level(a)];
    let kf = k_on_pair_state(kick, block, a);
    let mut s = 0.0;
    for (l, &e) in energies.iter().enumerate() {
        if l == block.k || l == block.k + block.m {
            continue;
        }
        let sn = (0.5 * tau * (e - ea)).sin();
        s += 0.25 * kf[l] * kf[l] / (sn * sn);
    }
    Ok(s)
}

/// `⟨f_{a'}^(0)|f_a^(1)⟩` inside the degenerate pair.
pub fn er_first_order_mixing(energies: &[f64], kick: &KickMatrix, tau: f64, block: &UptDegenerate, a: usize) -> Result<c64> {
    if kick.dim() != energies.len() {
        return Err(Error::DimensionMismatch(kick.dim(), energies.len()));
    }
    let ap = 1 - a;
    let dphi = block.phi1_pair[a] - block.phi1_pair[ap];
    if dphi.abs() < 1e-12 * block.phi1_pair[a].abs().max(1.0) {
        return Err(Error::DegenerateFirstOrder);
    }
    let ea = energies[block.level(a)];
    let kfa = k_on_pair_state(kick, block, a);
    let kfap = k_on_pair_state(kick, block, ap);
    let mut sum = c64::new(0.0, 0.0);
    for (l, &e) in energies.iter().enumerate() {
        if l == block.k || l == block.k + block.m {
            continue;
        }
        let den = c64::cis(tau * (e - ea)) - c64::new(1.0, 0.0);
        sum += c64::new(kfap[l] * kfa[l], 0.0) / den;
    }
    let k2: f64 = kfap.iter().zip(&kfa).map(|(x, y)| x * y).sum();
    Ok(c64::new(0.0, -1.0 / dphi) * (sum + c64::new(0.5 * k2, 0.0)))
}

/// Leading exact-resonance prediction `(1 − a₂^ER ε²)|c_{k,1}|²`.
pub fn fmax_er(block: &UptDegenerate, a2_er: f64, eps: f64) -> f64 {
    (1.0 - a2_er * eps * eps) * block.c_k1_sq()
}

/// Adds the two terms involving the in-pair mixing `⟨f_{a'}^(0)|f_a^(1)⟩`.
pub fn fmax_er_with_mixing(block: &UptDegenerate, a2_er: f64, mixing: c64, eps: f64) -> f64 {
    let (ck, ckm) = (block.c[0][0], block.c[1][0]);
    fmax_er(block, a2_er, eps) + 2.0 * ck * ckm * mixing.re * eps + (ckm * ckm - ck * ck) * mixing.norm_sqr() * eps * eps
}

/// Inputs to the `ε_max` estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EpsMaxCoefficients {
    /// Truncated series `1 − a₂ε² − a₃ε³`.
    Series { a2: f64, a3: Option<f64> },
    /// Exact-resonance closed form.
    Exact { a2_er: f64, offset_c: f64 },
}

/// Estimated `ε_max`: smallest positive root of `a₂ε² + a₃ε³ = ½`, or
/// `√(2c/(J·a₂^ER))` at exact resonance.
pub fn predict_eps_max(coeffs: EpsMaxCoefficients, condition: Condition, j: f64) -> Result<f64> {
    match (coeffs, condition) {
        (EpsMaxCoefficients::Exact { a2_er, offset_c }, Condition::ER) => {
            if !(a2_er > 0.0 && offset_c > 0.0) {
                return Err(Error::NoRoot);
            }
            Ok((2.0 * offset_c / (j * a2_er)).sqrt())
        }
        (EpsMaxCoefficients::Series { a2, a3 }, Condition::NR | Condition::CR) => {
            if !(a2 > 0.0) {
                return Err(Error::NoRoot);
            }
            let quad = (0.5 / a2).sqrt();
            let a3 = a3.unwrap_or(0.0);
            if a3 == 0.0 {
                return Ok(quad);
            }
            let g = |e: f64| Ok(a2 * e * e + a3 * e.powi(3) - 0.5);
            let hi = if a3 > 0.0 {
                quad
            } else {
                let top = -2.0 * a2 / (3.0 * a3);
                if g(top)? < 0.0 {
                    return Err(Error::NoRoot);
                }
                top
            };
            crate::classical::bisect(&g, 0.0, hi, 1e-15 * hi)
        }
        _ => Err(Error::Invalid(format!("coefficients do not match condition {condition}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_closed_form() {
        let (lo, hi, vlo, vhi) = symmetric_2x2(1.0, 0.0, 3.0);
        assert_eq!((lo, hi), (1.0, 3.0));
        assert!((vlo[1].abs() - 0.0).abs() < 1e-15 || (vlo[0].abs() - 1.0).abs() < 1e-15);
        assert!(vhi[1].abs() > 0.999);
        let (lo, hi, vlo, _) = symmetric_2x2(2.0, 0.5, 2.0);
        assert!((lo - 1.5).abs() < 1e-15 && (hi - 2.5).abs() < 1e-15);
        assert!((vlo[0].abs() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn quadratic_truncation() {
        let e = predict_eps_max(EpsMaxCoefficients::Series { a2: 8.0, a3: None }, Condition::NR, 10.0).unwrap();
        assert!((e - 0.25).abs() < 1e-15);
    }

    #[test]
    fn phase_gap_wraps() {
        assert!(phase_gap(TAU * 3.0 + 1e-9) < 2e-9);
        assert!((phase_gap(-0.5) - 0.5).abs() < 1e-15);
    }
}
