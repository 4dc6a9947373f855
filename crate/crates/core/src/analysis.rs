//! Statistics over ensemble runs: spin probabilities, Gumbel fits of
//! ground-state energies, Q-matrix dimensionality, linear energy profiles,
//! cluster overlaps, Venn regions and the (V0, V2) atlas curve.

use std::collections::BTreeMap;

use faer::Mat;
use serde::Serialize;
use statrs::function::erf::{erfc, erf_inv};

use crate::dense::SymmetricEigen;
use crate::ensemble::{normal_deviate, realization_rng, RealizationRecord, RealizationSolver};
use crate::error::{domain, Error, Result};
use crate::fock::SectorBasis;
use crate::lanczos::dot;
use crate::operators::{
    apply_cluster, apply_pair_annihilation, special_interaction, ClusterOperator, Direction,
    HamiltonianTemplate, InteractionParams, SpecialKind,
};
use crate::solver::{project_onto_j, solve_ground, JBasis, SolverOptions};
use crate::sparse::SparseSymMatrix;

/// Ground-state spin counts for one particle number.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SpinProbabilities {
    pub counts: BTreeMap<u32, u64>,
    /// Realizations with a clean spin label.
    pub total: u64,
    /// Degenerate or failed realizations, left out of `total`.
    pub excluded: u64,
}

impl SpinProbabilities {
    /// `P(J)` with its binomial standard error.
    pub fn probability(&self, j: u32) -> (f64, f64) {
        if self.total == 0 {
            return (0.0, 0.0);
        }
        let w = self.total as f64;
        let p = self.counts.get(&j).copied().unwrap_or(0) as f64 / w;
        (p, (p * (1.0 - p) / w).sqrt())
    }

    pub fn table(&self) -> BTreeMap<u32, (f64, f64)> {
        self.counts.keys().map(|&j| (j, self.probability(j))).collect()
    }
}

pub fn spin_probabilities(records: &[RealizationRecord], n: u32) -> Result<SpinProbabilities> {
    let mut out = SpinProbabilities::default();
    for rec in records {
        let res = rec
            .result(n)
            .ok_or_else(|| Error::Domain(format!("record {} has no result for N={n}", rec.id)))?;
        match res.clean_spin() {
            Some(j) => {
                *out.counts.entry(j).or_default() += 1;
                out.total += 1;
            }
            None => out.excluded += 1,
        }
    }
    Ok(out)
}

/// Ground energies of the realizations whose ground state has spin `j`.
pub fn ground_energies(records: &[RealizationRecord], n: u32, j: u32) -> Vec<f64> {
    records
        .iter()
        .filter_map(|r| r.result(n))
        .filter(|res| res.clean_spin() == Some(j))
        .map(|res| res.e0)
        .collect()
}

const GUMBEL_MIN_SAMPLES: usize = 100;

/// Maximum-likelihood `(a, b)` of `G(E) = b exp[b(E-a) - exp(b(E-a))]`.
///
/// The likelihood equations reduce to `1/b = <E>_b - <E>` with `<E>_b`
/// the mean weighted by `exp(bE)`, solved by Newton's method; `a` then
/// follows in closed form.
pub fn fit_gumbel(energies: &[f64]) -> Result<(f64, f64)> {
    let n = energies.len();
    if n < GUMBEL_MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: GUMBEL_MIN_SAMPLES,
            got: n,
        });
    }
    if energies.iter().any(|e| !e.is_finite()) {
        return domain("energies must be finite");
    }
    let mean = energies.iter().sum::<f64>() / n as f64;
    let var = energies.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n as f64;
    if var <= 0.0 {
        return domain("energies have zero spread");
    }
    let top = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // weighted moments with exp(b (E - top)) for stability
    let moments = |b: f64| {
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for &e in energies {
            let w = (b * (e - top)).exp();
            s0 += w;
            s1 += w * e;
            s2 += w * e * e;
        }
        let m = s1 / s0;
        (s0, m, (s2 / s0 - m * m).max(0.0))
    };
    // moment estimate of the Gumbel scale as the starting point
    let mut b = std::f64::consts::PI / (6.0 * var).sqrt();
    let mut step = f64::INFINITY;
    for _ in 0..200 {
        let (_, wmean, wvar) = moments(b);
        let g = 1.0 / b - (wmean - mean);
        let dg = -1.0 / (b * b) - wvar;
        let mut next = b - g / dg;
        if next <= 0.0 {
            next = b / 2.0;
        }
        step = ((next - b) / b).abs();
        b = next;
        if step < 1e-10 {
            let (s0, _, _) = moments(b);
            let a = top + (s0 / n as f64).ln() / b;
            return Ok((a, b));
        }
    }
    Err(Error::NonConvergence {
        iterations: 200,
        residual: step,
    })
}

/// CDF of the fitted minimum-Gumbel law.
pub fn gumbel_cdf(e: f64, a: f64, b: f64) -> f64 {
    -(-(b * (e - a)).exp()).exp_m1()
}

/// Quantile function of the minimum-Gumbel law.
pub fn gumbel_quantile(p: f64, a: f64, b: f64) -> f64 {
    a + (-(-p).ln_1p()).ln() / b
}

/// Kolmogorov-Smirnov distance between the empirical CDF and the fit.
pub fn ks_statistic(energies: &[f64], a: f64, b: f64) -> f64 {
    let mut sorted = energies.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let f = gumbel_cdf(e, a, b);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Solution of the extreme-value relations for `(𝒟, E̅²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GumbelInversion {
    pub d_eff: f64,
    pub var_e: f64,
    /// `√E̅² / σ_max`.
    pub ratio: f64,
}

/// `(a, b)` predicted for minima of `d_eff` normals of variance `var_e`.
pub fn gumbel_from_dimension(d_eff: f64, var_e: f64) -> (f64, f64) {
    let a = -(2.0 * var_e).sqrt() * erf_inv((d_eff - 2.0) / d_eff);
    let density = (-a * a / (2.0 * var_e)).exp() / (2.0 * std::f64::consts::PI * var_e).sqrt();
    (a, d_eff * density)
}

const D_EFF_MAX: f64 = 1e9;

/// Inverts `|a| = √(2E̅²) erf⁻¹((𝒟-2)/𝒟)`, `b = 𝒟 f(a)` with `f` the
/// density of `N(0, E̅²)`.
///
/// Damped Newton in `(ln(𝒟-2), ln E̅²)` on the logarithms of both
/// relations, started from the large-𝒟 asymptotic solution.
pub fn invert_gumbel(a: f64, b: f64, sigma_max: f64) -> Result<GumbelInversion> {
    if !(a < 0.0) || !(b > 0.0) {
        return domain(format!("inversion needs a < 0 and b > 0, got ({a}, {b})"));
    }
    let abs_a = -a;
    let ln_b = b.ln();
    let half_ln_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    let residual = |x: f64, y: f64| {
        let d = 2.0 + x.exp();
        let u = abs_a / (2.0 * y.exp()).sqrt();
        let r1 = erfc(u).ln() - (2.0 / d).ln();
        let r2 = d.ln() - u * u - half_ln_2pi - 0.5 * y - ln_b;
        (r1, r2, d, u)
    };
    // large-𝒟 limit: u² = b|a|/2, 𝒟 = 2u√π e^{u²}, E̅² = |a|/b
    let u2 = (b * abs_a / 2.0).max(0.05);
    let d0 = (2.0 * u2.sqrt() * std::f64::consts::PI.sqrt() * u2.exp()).max(2.5);
    let mut x = (d0 - 2.0).ln();
    let mut y = (abs_a * abs_a / (2.0 * u2)).ln();
    let mut norm = f64::INFINITY;
    for _ in 0..200 {
        let (r1, r2, d, u) = residual(x, y);
        norm = r1.hypot(r2);
        if norm < 1e-13 {
            let var_e = y.exp();
            if !(d > 2.0 && d < D_EFF_MAX) {
                break;
            }
            return Ok(GumbelInversion {
                d_eff: d,
                var_e,
                ratio: var_e.sqrt() / sigma_max,
            });
        }
        let dx = (d - 2.0) / d;
        let g = -2.0 * (-u * u).exp() / (std::f64::consts::PI.sqrt() * erfc(u));
        let (j11, j12) = (dx, -0.5 * u * g);
        let (j21, j22) = (dx, u * u - 0.5);
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let sx = -(r1 * j22 - j12 * r2) / det;
        let sy = -(j11 * r2 - j21 * r1) / det;
        let mut t = 1.0;
        loop {
            let (nx, ny) = (x + t * sx, y + t * sy);
            let (q1, q2, _, _) = residual(nx, ny);
            if q1.hypot(q2) < norm || t < 1e-6 {
                x = nx;
                y = ny;
                break;
            }
            t /= 2.0;
        }
        if x > D_EFF_MAX.ln() {
            break;
        }
    }
    Err(Error::NonConvergence {
        iterations: 200,
        residual: norm,
    })
}

/// Fit, inversion and goodness of fit for one set of ground energies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GumbelFit {
    pub a: f64,
    pub b: f64,
    pub d_eff: f64,
    pub var_e: f64,
    pub sigma_max: f64,
    pub ks: f64,
    pub samples: usize,
}

impl GumbelFit {
    pub fn ratio(&self) -> f64 {
        self.var_e.sqrt() / self.sigma_max
    }
}

pub fn gumbel_analysis(energies: &[f64], sigma_max: f64) -> Result<GumbelFit> {
    let (a, b) = fit_gumbel(energies)?;
    let inv = invert_gumbel(a, b, sigma_max)?;
    Ok(GumbelFit {
        a,
        b,
        d_eff: inv.d_eff,
        var_e: inv.var_e,
        sigma_max,
        ks: ks_statistic(energies, a, b),
        samples: energies.len(),
    })
}

/// Minima over `d` independent standard normals, `trials` times.
pub fn normal_minima(d: usize, trials: usize, seed: u64) -> Vec<f64> {
    (0..trials as u64)
        .map(|t| {
            let mut rng = realization_rng(seed, t);
            (0..d).map(|_| normal_deviate(&mut rng)).fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Spectral decomposition of the averaged ground-state density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QAnalysis {
    /// Eigenvalues in descending order.
    pub q: Vec<f64>,
    /// Eigenvector `i` in J-basis components.
    pub vectors: Vec<Vec<f64>>,
    pub entropy: f64,
    pub d_gs: f64,
    pub samples: usize,
}

/// `Q = (1/W') Σ_n |φ_n><φ_n|` from J-basis components.
pub fn q_matrix(components: &[Vec<f64>]) -> Result<Mat<f64>> {
    if components.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: components.len(),
        });
    }
    let dim = components[0].len();
    let mut q = Mat::<f64>::zeros(dim, dim);
    for (n, c) in components.iter().enumerate() {
        if c.len() != dim {
            return domain("component lists differ in length");
        }
        let norm = dot(c, c);
        if (norm - 1.0).abs() > 1e-6 {
            return domain(format!("sample {n} has norm² {norm}, expected 1"));
        }
        for i in 0..dim {
            for j in 0..=i {
                q[(i, j)] += c[i] * c[j];
            }
        }
    }
    let w = components.len() as f64;
    Ok(Mat::from_fn(dim, dim, |i, j| {
        if i >= j {
            q[(i, j)] / w
        } else {
            q[(j, i)] / w
        }
    }))
}

pub fn q_analysis(components: &[Vec<f64>]) -> Result<QAnalysis> {
    let q = q_matrix(components)?;
    let eig = SymmetricEigen::new(&q)?;
    let order: Vec<usize> = (0..eig.len()).rev().collect();
    let values: Vec<f64> = order.iter().map(|&i| eig.values[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut v = eig.vector(i);
            crate::operators::fix_phase(&mut v);
            v
        })
        .collect();
    let entropy = -values
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>();
    Ok(QAnalysis {
        q: values,
        vectors,
        entropy,
        d_gs: entropy.exp(),
        samples: components.len(),
    })
}

/// Stored components of the clean spin-`j` ground states of `N`.
pub fn ground_components(records: &[RealizationRecord], n: u32, j: u32) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for rec in records {
        let Some(res) = rec.result(n) else { continue };
        if res.clean_spin() != Some(j) {
            continue;
        }
        match &res.components {
            Some(c) => out.push(c.clone()),
            None => return domain(format!("record {} lacks stored components for N={n}", rec.id)),
        }
    }
    Ok(out)
}

/// Pair-occupation weights `c_L = Σ_M ||P_LM ψ||²`; the energy of `ψ`
/// is `Σ_L V_L c_L`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearEnergyProfile {
    pub c: BTreeMap<u32, f64>,
    pub sum: f64,
    pub var: f64,
}

impl LinearEnergyProfile {
    pub fn energy(&self, params: &InteractionParams) -> f64 {
        self.c.iter().map(|(&l, &c)| params.get(l) * c).sum()
    }
}

pub fn linear_energy_profile(vector: &[f64], basis: &SectorBasis) -> Result<LinearEnergyProfile> {
    if vector.len() != basis.len() {
        return domain("vector length does not match basis");
    }
    let norm = dot(vector, vector);
    if (norm - 1.0).abs() > 1e-8 {
        return domain(format!("profile needs a unit vector (norm² = {norm})"));
    }
    let ell = basis.ell();
    let mut c = BTreeMap::new();
    for l in (0..=2 * ell).step_by(2) {
        let li = l as i32;
        let mut total = 0.0;
        for m in -li..=li {
            total += apply_pair_annihilation(basis, vector, l, m)?
                .iter()
                .map(|(_, x)| x * x)
                .sum::<f64>();
        }
        c.insert(l, total);
    }
    let sum = c.values().sum();
    let var = c.values().map(|x| x * x).sum();
    Ok(LinearEnergyProfile { c, sum, var })
}

/// One realization in a cluster report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusterPoint {
    pub id: u64,
    /// `|<φ(N_lo)| C |φ(N_hi)>|²`, shared by removal and addition.
    pub overlap: f64,
    /// `<φ(N_hi)| C†C |φ(N_hi)>`.
    pub removal_norm: f64,
    /// `<φ(N_lo)| C C† |φ(N_lo)>`.
    pub addition_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterReport {
    pub n_hi: u32,
    pub n_lo: u32,
    pub points: Vec<ClusterPoint>,
    /// Eigenvalues of `C†C` in the spin-zero subspace of `N_hi`, ascending.
    pub number_eigenvalues: Vec<f64>,
    pub cut: f64,
    /// Fraction of points with `removal_norm < cut`.
    pub below_cut: f64,
}

impl ClusterReport {
    /// Median of `|x - y| / y` for the removal points.
    pub fn median_relative_deviation(&self) -> Option<f64> {
        let mut dev: Vec<f64> = self
            .points
            .iter()
            .filter(|p| p.removal_norm > 0.0)
            .map(|p| (p.overlap - p.removal_norm).abs() / p.removal_norm)
            .collect();
        if dev.is_empty() {
            return None;
        }
        dev.sort_by(f64::total_cmp);
        let k = dev.len();
        Some(if k % 2 == 1 {
            dev[k / 2]
        } else {
            0.5 * (dev[k / 2 - 1] + dev[k / 2])
        })
    }
}

/// Cluster overlaps between spin-zero ground states of `N_hi` and `N_lo`.
///
/// Ground vectors are rebuilt from stored components with the solver's
/// J = 0 bases, so `solver` must belong to the run that produced `records`.
pub fn cluster_report(
    records: &[RealizationRecord],
    solver: &RealizationSolver,
    op: &ClusterOperator,
    n_hi: u32,
    n_lo: u32,
    cut: f64,
) -> Result<ClusterReport> {
    if n_hi != n_lo + op.size() {
        return domain(format!(
            "N_hi - N_lo = {} does not match cluster size {}",
            n_hi as i64 - n_lo as i64,
            op.size()
        ));
    }
    let hi_basis = solver.j_basis(n_hi, 0)?;
    let lo_basis = solver.j_basis(n_lo, 0)?;
    let hi_sector = hi_basis.basis();
    let lo_sector = lo_basis.basis();
    let mut points = Vec::new();
    for rec in records {
        let (Some(hi), Some(lo)) = (rec.result(n_hi), rec.result(n_lo)) else {
            return domain(format!("record {} lacks N={n_hi} or N={n_lo}", rec.id));
        };
        if hi.clean_spin() != Some(0) || lo.clean_spin() != Some(0) {
            continue;
        }
        let (Some(ch), Some(cl)) = (&hi.components, &lo.components) else {
            return domain(format!("record {} has no stored vectors", rec.id));
        };
        let phi_hi = hi_basis.reconstruct(ch)?;
        let phi_lo = lo_basis.reconstruct(cl)?;
        let removed = apply_cluster(op, Direction::Annihilate, hi_sector, &phi_hi, lo_sector)?;
        let added = apply_cluster(op, Direction::Create, lo_sector, &phi_lo, hi_sector)?;
        points.push(ClusterPoint {
            id: rec.id,
            overlap: dot(&phi_lo, &removed).powi(2),
            removal_norm: dot(&removed, &removed),
            addition_norm: dot(&added, &added),
        });
    }
    let number_eigenvalues = number_spectrum(op, &hi_basis, lo_sector)?;
    let below = points.iter().filter(|p| p.removal_norm < cut).count();
    let below_cut = if points.is_empty() {
        0.0
    } else {
        below as f64 / points.len() as f64
    };
    Ok(ClusterReport {
        n_hi,
        n_lo,
        points,
        number_eigenvalues,
        cut,
        below_cut,
    })
}

/// Eigenvalues of `C†C` restricted to the span of `jb`.
pub fn number_spectrum(op: &ClusterOperator, jb: &JBasis, lo_sector: &SectorBasis) -> Result<Vec<f64>> {
    let images = jb
        .columns()
        .iter()
        .map(|c| apply_cluster(op, Direction::Annihilate, jb.basis(), c, lo_sector))
        .collect::<Result<Vec<_>>>()?;
    let d = images.len();
    let gram = Mat::from_fn(d, d, |i, j| dot(&images[i], &images[j]));
    Ok(SymmetricEigen::new(&gram)?.values)
}

/// Equal-width histogram over `[lo, hi)`; values outside are dropped.
pub fn histogram(values: &[f64], bins: usize, lo: f64, hi: f64) -> Vec<u64> {
    let mut out = vec![0u64; bins];
    let width = (hi - lo) / bins as f64;
    for &v in values {
        if v >= lo && v < hi {
            out[(((v - lo) / width) as usize).min(bins - 1)] += 1;
        }
    }
    out
}

/// Counts of J = 0 ground-state patterns across several particle numbers.
/// Region `mask` has bit `i` set when `n_set[i]` has a J = 0 ground state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VennReport {
    pub n_set: Vec<u32>,
    pub counts: Vec<u64>,
    pub total: u64,
    pub excluded: u64,
}

impl VennReport {
    pub fn fraction(&self, mask: usize) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.counts[mask] as f64 / self.total as f64
        }
    }

    /// Fraction of realizations where every particle number in `mask` has
    /// a J = 0 ground state, regardless of the others.
    pub fn inclusive(&self, mask: usize) -> f64 {
        let hits: u64 = self
            .counts
            .iter()
            .enumerate()
            .filter(|(r, _)| r & mask == mask)
            .map(|(_, c)| c)
            .sum();
        if self.total == 0 {
            0.0
        } else {
            hits as f64 / self.total as f64
        }
    }
}

pub fn venn_fractions(records: &[RealizationRecord], n_set: &[u32]) -> Result<VennReport> {
    if n_set.is_empty() || n_set.len() > 16 {
        return domain("venn analysis needs between 1 and 16 particle numbers");
    }
    let mut counts = vec![0u64; 1 << n_set.len()];
    let mut total = 0;
    let mut excluded = 0;
    'records: for rec in records {
        let mut mask = 0usize;
        for (bit, &n) in n_set.iter().enumerate() {
            let res = rec
                .result(n)
                .ok_or_else(|| Error::Domain(format!("record {} has no result for N={n}", rec.id)))?;
            match res.clean_spin() {
                None => {
                    excluded += 1;
                    continue 'records;
                }
                Some(0) => mask |= 1 << bit,
                Some(_) => {}
            }
        }
        counts[mask] += 1;
        total += 1;
    }
    Ok(VennReport {
        n_set: n_set.to_vec(),
        counts,
        total,
        excluded,
    })
}

/// J = 0 ground state expressed in the leading Q eigenvectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtlasPoint {
    pub label: String,
    pub v0: f64,
    pub v2: f64,
    /// Overlaps with the leading eigenvectors, first one non-negative.
    pub coords: Vec<f64>,
    /// Length of `coords`; 1 when the state lies in their span.
    pub norm: f64,
}

/// Overlaps of J-basis `components` with `axes`, sign-fixed so the first
/// overlap is non-negative.
pub fn sphere_coordinates(components: &[f64], axes: &[Vec<f64>]) -> Vec<f64> {
    let mut c: Vec<f64> = axes.iter().map(|a| dot(a, components)).collect();
    if c.first().is_some_and(|&x| x < 0.0) {
        c.iter_mut().for_each(|x| *x = -*x);
    }
    c
}

/// The dashed curve of ground states for `(V0, V2) = (cos θ, sin θ)` on
/// `grid` angles, followed by the quadrupole-quadrupole, pairing and
/// `V2 = -1` points. Only J = 0 ground states are emitted.
pub fn atlas_curve(
    template: &HamiltonianTemplate,
    j_squared: &SparseSymMatrix,
    jb: &JBasis,
    axes: &[Vec<f64>],
    grid: usize,
    opts: &SolverOptions,
) -> Result<Vec<AtlasPoint>> {
    if jb.j() != 0 {
        return domain("the atlas uses the J = 0 basis");
    }
    if axes.iter().any(|a| a.len() != jb.len()) {
        return domain("axes must be given in J-basis components");
    }
    let ell = jb.shape().ell();
    let two_param = |v0: f64, v2: f64| {
        let mut v = vec![0.0; ell as usize + 1];
        v[0] = v0;
        v[1] = v2;
        InteractionParams::new(ell, v)
    };
    let mut points = Vec::new();
    let mut emit = |label: String, params: &InteractionParams| -> Result<()> {
        let h = template.assemble(params);
        let g = match solve_ground(&h, j_squared, opts) {
            Ok(g) if g.spin == 0 && !g.degenerate => g,
            // a mixed-spin lowest vector signals a degenerate ground level
            Ok(_) | Err(Error::SpinImpurity { .. }) => return Ok(()),
            Err(err) => return Err(err),
        };
        let comps = project_onto_j(&g.vector, jb)?;
        let coords = sphere_coordinates(&comps, axes);
        points.push(AtlasPoint {
            label,
            v0: params.get(0),
            v2: params.get(2),
            norm: dot(&coords, &coords).sqrt(),
            coords,
        });
        Ok(())
    };
    for k in 0..grid {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / grid as f64;
        emit(format!("theta={theta:.6}"), &two_param(theta.cos(), theta.sin())?)?;
    }
    emit("qq".into(), &special_interaction(SpecialKind::QuadrupoleQuadrupole, ell))?;
    emit("pairing".into(), &two_param(-1.0, 0.0)?)?;
    emit("v2=-1".into(), &two_param(0.0, -1.0)?)?;
    Ok(points)
}
