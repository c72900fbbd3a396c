//! Classical limit on the phase-space disk `Q² + P² ≤ 4`.
//!
//! `h0` and `k` are the `J → ∞` limits of `⟨α|H0|α⟩/J` and `⟨α|K|α⟩/J`.
//! `Q` is the coordinate and `P` the momentum: `Q̇ = ∂h/∂P`, `Ṗ = −∂h/∂Q`.
//! The south pole of the Bloch sphere sits at the origin and the north pole
//! is smeared over the boundary circle.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Local tolerance of the map integrator. At 1e-11 the fifth-order pair drifts
/// by ~5e-8 in `h0` over 1e4 periods; 1e-13 keeps that below 1e-9.
pub const DEFAULT_MAP_TOL: f64 = 1e-13;

/// Seeds closer than this to the boundary circle (in `Q² + P²`) are rejected.
pub const BOUNDARY_MARGIN: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(q: f64, p: f64) -> Self {
        Self { q, p }
    }

    pub fn r2(&self) -> f64 {
        self.q * self.q + self.p * self.p
    }

    fn check(&self) -> Result<()> {
        if !(self.r2() <= 4.0) {
            return Err(Error::OutsideDisk { q: self.q, p: self.p });
        }
        Ok(())
    }

    /// `(φ, z)` with `Q = √(2(1+z)) cos φ`, `P = −√(2(1+z)) sin φ`.
    pub fn to_chart(&self) -> (f64, f64) {
        let z = self.r2() / 2.0 - 1.0;
        let phi = (-self.p).atan2(self.q).rem_euclid(TAU);
        (phi, z)
    }

    pub fn from_chart(phi: f64, z: f64) -> Self {
        let rho = (2.0 * (1.0 + z)).max(0.0).sqrt();
        Self { q: rho * phi.cos(), p: -rho * phi.sin() }
    }

    /// Unit mean-spin direction `⟨J⟩/J` of the coherent state at the point.
    /// The azimuth runs opposite to the chart angle `φ`.
    pub fn bloch(&self) -> [f64; 3] {
        let s = (1.0 - self.r2() / 4.0).max(0.0).sqrt();
        [self.q * s, self.p * s, self.r2() / 2.0 - 1.0]
    }

    pub fn from_bloch(v: [f64; 3]) -> Self {
        let r2 = 2.0 * (1.0 + v[2]);
        let s = (1.0 - r2 / 4.0).max(0.0).sqrt();
        if s < 1e-300 {
            return Self { q: r2.sqrt(), p: 0.0 };
        }
        Self { q: v[0] / s, p: v[1] / s }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    pub gamma_x: f64,
    pub gamma_y: f64,
}

impl Couplings {
    pub fn new(gamma_x: f64, gamma_y: f64) -> Self {
        Self { gamma_x, gamma_y }
    }
}

pub fn h0_classical(pt: PhasePoint, g: Couplings) -> Result<f64> {
    pt.check()?;
    Ok(h0_unchecked(pt.q, pt.p, g))
}

fn h0_unchecked(q: f64, p: f64, g: Couplings) -> f64 {
    let r2 = q * q + p * p;
    r2 / 2.0 - 1.0 + (1.0 - r2 / 4.0) * (g.gamma_x * q * q + g.gamma_y * p * p) / 2.0
}

pub fn kick_classical(pt: PhasePoint) -> Result<f64> {
    pt.check()?;
    let r2 = pt.r2();
    Ok(r2 / 2.0 - 1.0 + pt.q * (1.0 - r2 / 4.0).max(0.0).sqrt())
}

/// `(∂h0/∂Q, ∂h0/∂P)`.
fn h0_gradient(q: f64, p: f64, g: Couplings) -> (f64, f64) {
    let r2 = q * q + p * p;
    let quad = (g.gamma_x * q * q + g.gamma_y * p * p) / 2.0;
    let w = 1.0 - r2 / 4.0;
    (q - q / 2.0 * quad + w * g.gamma_x * q, p - p / 2.0 * quad + w * g.gamma_y * p)
}

/// `(∂k/∂Q, ∂k/∂P)`; singular only on the boundary circle.
fn kick_gradient(q: f64, p: f64) -> (f64, f64) {
    let s = (1.0 - (q * q + p * p) / 4.0).max(1e-300).sqrt();
    (q + s - q * q / (4.0 * s), p - q * p / (4.0 * s))
}

/// `A(φ) = γx cos²φ + γy sin²φ`.
fn a_of(phi: f64, g: Couplings) -> f64 {
    let c = phi.cos();
    let s = phi.sin();
    g.gamma_x * c * c + g.gamma_y * s * s
}

/// Period of the `h0` orbit at energy `e = E/J`:
/// `T = ∫₀^{2π} dφ / √(1 − 2eA + A²)`.
pub fn classical_period(energy: f64, g: Couplings) -> Result<f64> {
    if g.gamma_x.abs() > 1.0 || g.gamma_y.abs() > 1.0 {
        return Err(Error::InvalidParams("|gamma| must not exceed 1".into()));
    }
    if !(-1.0..=1.0).contains(&energy) {
        return Err(Error::EnergyOutOfRange(energy));
    }
    // 1 − 2eA + A² = (A − e)² + 1 − e²; its minimum over A ∈ [lo, hi] is closed-form.
    let (lo, hi) = (g.gamma_x.min(g.gamma_y), g.gamma_x.max(g.gamma_y));
    let a_star = energy.clamp(lo, hi);
    let min_rad = (a_star - energy).powi(2) + 1.0 - energy * energy;
    if min_rad <= 1e-14 {
        return Err(Error::SingularOrbit(energy));
    }
    let f = |phi: f64| 1.0 / (1.0 - 2.0 * energy * a_of(phi, g) + a_of(phi, g).powi(2)).sqrt();
    // A(φ) has the symmetries φ → −φ and φ → π − φ.
    Ok(4.0 * adaptive_gk(&f, 0.0, PI / 2.0, 0.25e-10)?)
}

/// Energies `e` with `n·T(e) = m·τ`, found by bracketing on a fine grid.
pub fn resonant_energies(m: u32, n: u32, tau: f64, g: Couplings) -> Result<Vec<f64>> {
    let target = m as f64 * tau / n as f64;
    let grid = 400;
    let h = |e: f64| classical_period(e, g).map(|t| t - target);
    let mut roots = Vec::new();
    let mut prev_e = -1.0;
    let mut prev = h(prev_e)?;
    for i in 1..=grid {
        let e = -1.0 + 2.0 * i as f64 / grid as f64;
        let cur = h(e)?;
        if prev == 0.0 {
            roots.push(prev_e);
        } else if prev.signum() != cur.signum() {
            roots.push(bisect(&h, prev_e, e, 1e-14)?);
        }
        prev_e = e;
        prev = cur;
    }
    Ok(roots)
}

pub(crate) fn bisect<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let mut fa = f(a)?;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a).abs() < tol {
            return Ok(mid);
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

const GK_X: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const GK_WK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const GK_WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = GK_WK[7] * fc;
    let mut g = GK_WG[3] * fc;
    for i in 0..7 {
        let x = h * GK_X[i];
        let s = f(c - x) + f(c + x);
        k += GK_WK[i] * s;
        if i % 2 == 1 {
            g += GK_WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature to an absolute tolerance.
pub fn adaptive_gk<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let mut stack = vec![(a, b, tol)];
    let mut total = 0.0;
    let mut evals = 0usize;
    while let Some((lo, hi, t)) = stack.pop() {
        let (v, err) = gk15(f, lo, hi);
        evals += 1;
        if !v.is_finite() {
            return Err(Error::Integrator("non-finite integrand".into()));
        }
        if err <= t || (hi - lo) < 1e-12 * (b - a).abs() {
            total += v;
        } else if evals > 100_000 {
            return Err(Error::Integrator("quadrature did not converge".into()));
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, t / 2.0));
            stack.push((mid, hi, t / 2.0));
        }
    }
    Ok(total)
}

/// Dormand–Prince 5(4) with local extrapolation and a mixed error norm.
pub fn integrate<F: Fn([f64; 2]) -> [f64; 2]>(f: &F, y0: [f64; 2], t_end: f64, tol: f64) -> Result<[f64; 2]> {
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    if t_end == 0.0 {
        return Ok(y0);
    }
    let dir = t_end.signum();
    let span = t_end.abs();
    let mut t = 0.0;
    let mut y = y0;
    let mut h = (span / 16.0).min(0.5 * tol.powf(0.2)).max(1e-12 * span);
    let mut k1 = f(y);
    let mut steps = 0usize;
    while t < span {
        if steps > 10_000_000 {
            return Err(Error::Integrator("too many steps".into()));
        }
        steps += 1;
        if t + h > span {
            h = span - t;
        }
        let hs = h * dir;
        let mut k = [[0.0; 2]; 7];
        k[0] = k1;
        for s in 1..7 {
            let mut ys = y;
            for (d, yd) in ys.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (r, kr) in k.iter().enumerate().take(s) {
                    acc += A[s][r] * kr[d];
                }
                *yd += hs * acc;
            }
            k[s] = f(ys);
        }
        let mut ynew = y;
        let mut err = 0.0f64;
        for d in 0..2 {
            let mut acc = 0.0;
            let mut eacc = 0.0;
            for s in 0..7 {
                if s < 6 {
                    acc += A[6][s] * k[s][d];
                }
                eacc += E[s] * k[s][d];
            }
            ynew[d] = y[d] + hs * acc;
            let sc = tol + tol * y[d].abs().max(ynew[d].abs());
            err = err.max((hs * eacc).abs() / sc);
        }
        if !err.is_finite() {
            return Err(Error::Integrator("non-finite step".into()));
        }
        if err <= 1.0 {
            t += h;
            y = ynew;
            k1 = k[6];
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            if h < 1e-14 * span {
                return Err(Error::Integrator("step size underflow".into()));
            }
        }
    }
    Ok(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapParams {
    pub couplings: Couplings,
    pub tau: f64,
    pub epsilon: f64,
    /// Local tolerance of the integrator.
    pub tol: f64,
}

impl MapParams {
    pub fn new(gamma_x: f64, gamma_y: f64, tau: f64, epsilon: f64) -> Self {
        Self { couplings: Couplings::new(gamma_x, gamma_y), tau, epsilon, tol: DEFAULT_MAP_TOL }
    }
}

/// Flow of `h0` for time `t` (negative `t` runs backwards).
pub fn free_flow(pt: PhasePoint, g: Couplings, t: f64, tol: f64) -> Result<PhasePoint> {
    let f = |y: [f64; 2]| {
        let (dq, dp) = h0_gradient(y[0], y[1], g);
        [dp, -dq]
    };
    let y = integrate(&f, [pt.q, pt.p], t, tol)?;
    guard(PhasePoint::new(y[0], y[1]))
}

/// Flow of `k` for fictitious time `t`.
pub fn kick_flow(pt: PhasePoint, t: f64, tol: f64) -> Result<PhasePoint> {
    let f = |y: [f64; 2]| {
        let (dq, dp) = kick_gradient(y[0], y[1]);
        [dp, -dq]
    };
    let y = integrate(&f, [pt.q, pt.p], t, tol)?;
    guard(PhasePoint::new(y[0], y[1]))
}

fn guard(pt: PhasePoint) -> Result<PhasePoint> {
    if !(pt.r2() < 4.0 - BOUNDARY_MARGIN) {
        return Err(Error::OutsideDisk { q: pt.q, p: pt.p });
    }
    Ok(pt)
}

/// One period: free flow for `τ`, then the kick flow for `ε`.
pub fn map_step(pt: PhasePoint, mp: &MapParams) -> Result<PhasePoint> {
    let after = free_flow(pt, mp.couplings, mp.tau, mp.tol)?;
    if mp.epsilon == 0.0 {
        return Ok(after);
    }
    kick_flow(after, mp.epsilon, mp.tol)
}

/// Inverse of [`map_step`].
pub fn map_step_inverse(pt: PhasePoint, mp: &MapParams) -> Result<PhasePoint> {
    let before = if mp.epsilon == 0.0 { pt } else { kick_flow(pt, -mp.epsilon, mp.tol)? };
    free_flow(before, mp.couplings, -mp.tau, mp.tol)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassicalOrbitRecord {
    pub initial: PhasePoint,
    pub strobe_points: Vec<PhasePoint>,
    pub energies: Vec<f64>,
}

impl ClassicalOrbitRecord {
    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.energies.first().copied().unwrap_or(0.0);
        self.energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max)
    }
}

/// Strobes after each full period; `energies[0]` belongs to the seed.
pub fn stroboscopic_map(seed: PhasePoint, mp: &MapParams, n_periods: usize) -> Result<ClassicalOrbitRecord> {
    if n_periods == 0 {
        return Err(Error::InvalidParams("n_periods must be at least 1".into()));
    }
    seed.check()?;
    if seed.r2() > 4.0 - BOUNDARY_MARGIN {
        return Err(Error::OutsideDisk { q: seed.q, p: seed.p });
    }
    let mut pts = Vec::with_capacity(n_periods);
    let mut energies = Vec::with_capacity(n_periods + 1);
    energies.push(h0_unchecked(seed.q, seed.p, mp.couplings));
    let mut cur = seed;
    for _ in 0..n_periods {
        cur = map_step(cur, mp)?;
        energies.push(h0_unchecked(cur.q, cur.p, mp.couplings));
        pts.push(cur);
    }
    Ok(ClassicalOrbitRecord { initial: seed, strobe_points: pts, energies })
}

/// Runs every seed; failures are kept per seed and do not stop the run.
pub fn poincare_section(seeds: &[PhasePoint], mp: &MapParams, n_periods: usize) -> Vec<Result<ClassicalOrbitRecord>> {
    seeds.iter().map(|&s| stroboscopic_map(s, mp, n_periods)).collect()
}

/// Deterministic seeds: `per_ring` points on each of `rings` contours of `h0`
/// crossing the positive `Q` axis at evenly spaced radii.
pub fn seed_lattice(rings: usize, per_ring: usize, g: Couplings) -> Vec<PhasePoint> {
    let mut out = Vec::with_capacity(rings * per_ring);
    for r in 0..rings {
        let q0 = 2.0 * (r as f64 + 0.5) / rings as f64 * 0.999;
        let e = h0_unchecked(q0, 0.0, g);
        for a in 0..per_ring {
            let phi = TAU * a as f64 / per_ring as f64;
            if let Some(pt) = point_on_contour(e, phi, g) {
                out.push(pt);
            }
        }
    }
    out
}

/// Point of the `h0 = e` contour along the ray at polar angle `phi` in the
/// `(Q, P)` plane, found by bisection in the radius.
pub fn point_on_contour(e: f64, phi: f64, g: Couplings) -> Option<PhasePoint> {
    let (c, s) = (phi.cos(), phi.sin());
    let h = |rho: f64| Ok(h0_unchecked(rho * c, rho * s, g) - e);
    let hi = 2.0 - 1e-9;
    let (f0, f1) = (h(0.0).ok()?, h(hi).ok()?);
    if f0.signum() == f1.signum() {
        return None;
    }
    let rho = bisect(&h, 0.0, hi, 1e-15).ok()?;
    Some(PhasePoint::new(rho * c, rho * s))
}

/// Rayleigh statistic `Z = N·R²` of the polar angles of the strobe points,
/// with `R` the mean resultant length. Under a uniform angle distribution
/// `P(Z > z) ≈ e^{−z}`.
pub fn angular_clustering(points: &[PhasePoint]) -> f64 {
    let n = points.len() as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (mut c, mut s) = (0.0, 0.0);
    for pt in points {
        let th = pt.p.atan2(pt.q);
        c += th.cos();
        s += th.sin();
    }
    (c * c + s * s) / n
}

/// Rayleigh threshold for a one-sided significance of `sigma` standard deviations.
pub fn rayleigh_threshold(sigma: f64) -> f64 {
    -normal_upper_tail(sigma).ln()
}

fn normal_upper_tail(x: f64) -> f64 {
    // Continued-fraction-free asymptotic form is accurate to well below 1% for x ≥ 3.
    let pdf = (-0.5 * x * x).exp() / (TAU).sqrt();
    let t = 1.0 / (x * x);
    pdf / x * (1.0 - t + 3.0 * t * t - 15.0 * t * t * t + 105.0 * t.powi(4))
}

/// Jacobian determinant of one map period by central differences.
pub fn jacobian_determinant(pt: PhasePoint, mp: &MapParams, h: f64) -> Result<f64> {
    let step = |q: f64, p: f64| map_step(PhasePoint::new(q, p), mp);
    let qp = step(pt.q + h, pt.p)?;
    let qm = step(pt.q - h, pt.p)?;
    let pp = step(pt.q, pt.p + h)?;
    let pm = step(pt.q, pt.p - h)?;
    let dqdq = (qp.q - qm.q) / (2.0 * h);
    let dpdq = (qp.p - qm.p) / (2.0 * h);
    let dqdp = (pp.q - pm.q) / (2.0 * h);
    let dpdp = (pp.p - pm.p) / (2.0 * h);
    Ok(dqdq * dpdp - dqdp * dpdq)
}
