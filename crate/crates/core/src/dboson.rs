//! Closed-form spectrum of N bosons with ℓ = 2.
//!
//! Seniority ν is conserved, so each level is labelled by ν, the number f
//! of bosons left after removing spin-zero triplets, and J ∈ [f, 2f]
//! without 2f - 1. Up to N-dependent constants the energy is
//! `E(ν, J) = -β ν(ν+3) + γ J(J+1)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::ensemble::{normal_deviate, realization_rng};
use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DBosonParams {
    pub v0: f64,
    pub v2: f64,
    pub v4: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl DBosonParams {
    pub fn new(v0: f64, v2: f64, v4: f64) -> Self {
        Self {
            v0,
            v2,
            v4,
            beta: v0 / 10.0 - v2 / 7.0 + 3.0 * v4 / 70.0,
            gamma: (v4 - v2) / 14.0,
        }
    }

    /// Relative energy of the level `(ν, J)`.
    pub fn energy(&self, nu: u32, j: u32) -> f64 {
        let (nu, j) = (nu as f64, j as f64);
        -self.beta * nu * (nu + 3.0) + self.gamma * j * (j + 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DBosonLevel {
    pub nu: u32,
    pub f: u32,
    pub j: u32,
    pub e_rel: f64,
}

/// Spins carried by `f` unpaired, untripled bosons.
pub fn free_spins(f: u32) -> impl Iterator<Item = u32> {
    (f..=2 * f).filter(move |&j| f == 0 || j != 2 * f - 1)
}

/// Every level of `N` bosons, one entry per (ν, f, J).
pub fn dboson_levels(n: u32, params: &DBosonParams) -> Vec<DBosonLevel> {
    let mut out = Vec::new();
    for nu in (n % 2..=n).rev().step_by(2) {
        for f in (nu % 3..=nu).rev().step_by(3) {
            for j in free_spins(f) {
                out.push(DBosonLevel {
                    nu,
                    f,
                    j,
                    e_rel: params.energy(nu, j),
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DBosonGround {
    pub j: u32,
    pub nu: u32,
    pub e_rel: f64,
    /// Another (ν, J) reaches the same energy.
    pub tie: bool,
    /// Spin outside {0, 2, 2N}.
    pub unusual: bool,
}

/// Lowest level of `N ≥ 2` bosons.
///
/// For fixed ν the γ term is extremal at the smallest spin (0 when 3 | ν,
/// else 2) or at the largest (2ν), so only those two candidates per
/// seniority are scanned.
pub fn dboson_ground(n: u32, params: &DBosonParams) -> Result<DBosonGround> {
    if n < 2 {
        return domain(format!("ground state needs N >= 2, got {n}"));
    }
    let candidates = (n % 2..=n).step_by(2).flat_map(|nu| {
        let j_min = if nu % 3 == 0 { 0 } else { 2 };
        [(nu, j_min), (nu, 2 * nu)]
    });
    Ok(select_ground(n, candidates.map(|(nu, j)| (nu, j, params.energy(nu, j)))))
}

fn select_ground(n: u32, levels: impl Iterator<Item = (u32, u32, f64)>) -> DBosonGround {
    let mut best: Option<(u32, u32, f64)> = None;
    let mut tie = false;
    let mut scale = 1.0f64;
    for (nu, j, e) in levels {
        scale = scale.max(e.abs());
        match best {
            None => best = Some((nu, j, e)),
            Some((bn, bj, be)) => {
                if e < be - 1e-12 * scale {
                    best = Some((nu, j, e));
                    tie = false;
                } else if (e - be).abs() <= 1e-12 * scale && (nu, j) != (bn, bj) {
                    tie = true;
                }
            }
        }
    }
    let (nu, j, e_rel) = best.expect("at least one level");
    DBosonGround {
        j,
        nu,
        e_rel,
        tie,
        unusual: !(j == 0 || j == 2 || j == 2 * n),
    }
}

/// Ground level found by scanning every level.
pub fn dboson_ground_exhaustive(n: u32, params: &DBosonParams) -> Result<DBosonGround> {
    if n < 2 {
        return domain(format!("ground state needs N >= 2, got {n}"));
    }
    let levels = dboson_levels(n, params);
    Ok(select_ground(n, levels.iter().map(|l| (l.nu, l.j, l.e_rel))))
}

/// Ground-spin frequencies at a large particle number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DBosonAsymptotics {
    pub n: u32,
    pub samples: u64,
    pub p0: f64,
    pub p2: f64,
    pub p_max: f64,
    /// Any other spin, or exact ties.
    pub p_other: f64,
}

/// Particle number used for the residue class `N mod 6`.
pub const ASYMPTOTIC_BASE: u32 = 600;

/// Monte Carlo estimate of `P(0)`, `P(2)` and `P(2N)` for `N = 600 + residue`
/// with `V0, V2, V4` independent standard normals.
pub fn dboson_asymptotics(residue: u32, samples: u64, seed: u64) -> Result<DBosonAsymptotics> {
    dboson_spin_frequencies(ASYMPTOTIC_BASE + residue % 6, samples, seed)
}

pub fn dboson_spin_frequencies(n: u32, samples: u64, seed: u64) -> Result<DBosonAsymptotics> {
    if samples == 0 {
        return domain("need at least one sample");
    }
    const CHUNK: u64 = 4096;
    let chunks = samples.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = realization_rng(seed, c);
            let mut k = [0u64; 4];
            for _ in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let p = DBosonParams::new(
                    normal_deviate(&mut rng),
                    normal_deviate(&mut rng),
                    normal_deviate(&mut rng),
                );
                let g = dboson_ground(n, &p)?;
                let slot = match g.j {
                    _ if g.tie => 3,
                    0 => 0,
                    2 => 1,
                    j if j == 2 * n => 2,
                    _ => 3,
                };
                k[slot] += 1;
            }
            Ok::<_, crate::Error>(k)
        })
        .try_reduce(|| [0u64; 4], |a, b| Ok([a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]))?;
    let w = samples as f64;
    Ok(DBosonAsymptotics {
        n,
        samples,
        p0: counts[0] as f64 / w,
        p2: counts[1] as f64 / w,
        p_max: counts[2] as f64 / w,
        p_other: counts[3] as f64 / w,
    })
}

/// Joint density of `(β, γ)` for independent standard-normal `V_L`.
pub fn beta_gamma_density(beta: f64, gamma: f64) -> f64 {
    70.0 / (3f64.sqrt() * std::f64::consts::PI)
        * (-4.0 / 3.0 * (25.0 * beta * beta - 65.0 * beta * gamma + 79.0 * gamma * gamma)).exp()
}

/// `P(β > 0, γ > 0) = 1/4 + arctan(13 / (7√3)) / (2π)`.
pub fn quadrant_probability() -> f64 {
    0.25 + (13.0 / (7.0 * 3f64.sqrt())).atan() / (2.0 * std::f64::consts::PI)
}

/// Integral of the `(β, γ)` density over a rectangle by the composite
/// Gauss-Legendre rule.
pub fn integrate_density(beta: (f64, f64), gamma: (f64, f64), panels: usize) -> f64 {
    // 5-point Gauss-Legendre nodes and weights on [-1, 1]
    const X: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683,
        0.538_469_310_105_683,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_889,
        0.478_628_670_499_366,
        0.478_628_670_499_366,
        0.236_926_885_056_189,
        0.236_926_885_056_189,
    ];
    let rule = |(lo, hi): (f64, f64)| -> Vec<(f64, f64)> {
        let h = (hi - lo) / panels as f64;
        (0..panels)
            .flat_map(|p| {
                let mid = lo + (p as f64 + 0.5) * h;
                X.iter().zip(W).map(move |(x, w)| (mid + 0.5 * h * x, 0.5 * h * w))
            })
            .collect()
    };
    let (bs, gs) = (rule(beta), rule(gamma));
    bs.iter()
        .map(|&(b, wb)| wb * gs.iter().map(|&(g, wg)| wg * beta_gamma_density(b, g)).sum::<f64>())
        .sum()
}

/// Numerical cross-check of [`quadrant_probability`].
pub fn quadrant_probability_numeric() -> f64 {
    integrate_density((0.0, 2.0), (0.0, 2.0), 200)
}
