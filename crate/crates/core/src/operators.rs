//! Second-quantized operators in a sector basis: the two-body Hamiltonian
//! `H = Σ_L V_L Σ_M P†_{LM} P_{LM}`, the total angular momentum squared,
//! and spin-zero cluster creation/annihilation operators.

use std::sync::Arc;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::angular::{six_j, CouplingTable};
use crate::combinatorics::SystemShape;
use crate::error::{domain, Error, Result};
use crate::fock::{enumerate_sector, OccupationState, PackedKey, SectorBasis};
pub use crate::sparse::SparseSymMatrix;

/// Two-body interaction strengths `V_L` for `L = 0, 2, …, 2ℓ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionParams {
    ell: u32,
    v: Vec<f64>,
}

impl InteractionParams {
    /// `v[k]` is `V_{2k}`; exactly ℓ+1 entries are required.
    pub fn new(ell: u32, v: Vec<f64>) -> Result<Self> {
        if v.len() != ell as usize + 1 {
            return domain(format!(
                "ℓ={ell} needs {} interaction values, got {}",
                ell + 1,
                v.len()
            ));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return domain("interaction values must be finite");
        }
        Ok(Self { ell, v })
    }

    pub fn zero(ell: u32) -> Self {
        Self {
            ell,
            v: vec![0.0; ell as usize + 1],
        }
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    /// `V_L` for even `L`.
    pub fn get(&self, l: u32) -> f64 {
        assert!(l % 2 == 0 && l <= 2 * self.ell, "L must be even and <= 2ℓ");
        self.v[(l / 2) as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    /// Pairs `(L, V_L)`.
    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.v.iter().enumerate().map(|(k, &x)| (2 * k as u32, x))
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        assert_eq!(self.ell, other.ell);
        Self {
            ell: self.ell,
            v: self.v.iter().zip(&other.v).map(|(x, y)| a * x + b * y).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecialKind {
    /// `V_L = 1` for all L.
    Monopole,
    /// `V_L = δ_{L0}`.
    Pairing,
    /// `V_L = L(L+1) - 2ℓ(ℓ+1)`, the two-body part of J².
    Rotational,
    /// Two-body part of the attractive `-Q·Q`, scaled to `max |V_L| = 1`.
    QuadrupoleQuadrupole,
}

pub fn special_interaction(kind: SpecialKind, ell: u32) -> InteractionParams {
    let e = ell as i64;
    let two_body_j = |l: i64| (l * (l + 1) - 2 * e * (e + 1)) as f64;
    let v: Vec<f64> = match kind {
        SpecialKind::Monopole => vec![1.0; ell as usize + 1],
        SpecialKind::Pairing => (0..=e).map(|k| f64::from(k == 0)).collect(),
        SpecialKind::Rotational => (0..=e).map(|k| two_body_j(2 * k)).collect(),
        SpecialKind::QuadrupoleQuadrupole => {
            // <(ℓℓ)L| q1·q2 |(ℓℓ)L> ∝ (-1)^L {ℓ ℓ L; ℓ ℓ 2}, L even
            let raw: Vec<f64> = (0..=e).map(|k| -six_j(e, e, 2 * k, e, e, 2)).collect();
            let scale = raw.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            raw.into_iter().map(|x| x / scale).collect()
        }
    };
    InteractionParams { ell, v }
}

/// Unordered pairs `(m1 <= m2)` grouped by `m1 + m2`, with the pair
/// amplitudes `u^L_p = g_p c^{L,m1+m2}_{m1 m2}` (`g_p = 2` for `m1 != m2`)
/// so that `P†_{LM} = Σ_p u^L_p A†_p`.
struct PairChannels {
    ell: i32,
    // by_sum[μ + 2ℓ] = list of pairs
    by_sum: Vec<Vec<(i32, i32)>>,
    // amp[μ + 2ℓ][L/2][pair index]
    amp: Vec<Vec<Vec<f64>>>,
}

impl PairChannels {
    fn new(ell: u32) -> Self {
        let table = CouplingTable::for_ell(ell);
        let e = ell as i32;
        let mut by_sum = vec![Vec::new(); 4 * ell as usize + 1];
        for m1 in -e..=e {
            for m2 in m1..=e {
                by_sum[(m1 + m2 + 2 * e) as usize].push((m1, m2));
            }
        }
        let amp = by_sum
            .iter()
            .map(|pairs| {
                (0..=ell)
                    .map(|k| {
                        let l = 2 * k;
                        pairs
                            .iter()
                            .map(|&(m1, m2)| {
                                let g = if m1 == m2 { 1.0 } else { 2.0 };
                                g * table.coefficient(l, m1, m2)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self {
            ell: e,
            by_sum,
            amp,
        }
    }
}

/// Bosonic amplitude of removing one particle from each of `m1`, `m2`.
#[inline]
fn pair_removal(occ: &mut [u8], i1: usize, i2: usize) -> f64 {
    let a2 = occ[i2] as f64;
    if occ[i2] == 0 {
        return 0.0;
    }
    occ[i2] -= 1;
    if occ[i1] == 0 {
        occ[i2] += 1;
        return 0.0;
    }
    let a1 = occ[i1] as f64;
    occ[i1] -= 1;
    (a1 * a2).sqrt()
}

#[inline]
fn pair_addition(occ: &mut [u8], i1: usize, i2: usize) -> f64 {
    occ[i1] += 1;
    let a1 = occ[i1] as f64;
    occ[i2] += 1;
    let a2 = occ[i2] as f64;
    (a1 * a2).sqrt()
}

/// Default memory budget for operator templates, in bytes.
pub const DEFAULT_MEMORY_BUDGET: usize = 3 << 30;

/// Interaction-independent pieces of the Hamiltonian in one sector.
///
/// Holds the sparsity pattern of the upper triangle and, for every even
/// L, the values of `Σ_M P†_{LM} P_{LM}`. A Hamiltonian for given `V_L`
/// is the linear combination of these parts.
#[derive(Debug, Clone)]
pub struct HamiltonianTemplate {
    basis: Arc<SectorBasis>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    parts: Vec<Vec<f64>>,
}

impl HamiltonianTemplate {
    pub fn new(basis: Arc<SectorBasis>) -> Result<Self> {
        Self::with_budget(basis, DEFAULT_MEMORY_BUDGET)
    }

    pub fn with_budget(basis: Arc<SectorBasis>, budget_bytes: usize) -> Result<Self> {
        if basis.is_empty() {
            return domain("empty sector basis");
        }
        let ell = basis.ell();
        let n_l = ell as usize + 1;
        let bytes_per_entry = 4 + 8 * n_l;
        let max_entries = budget_bytes / bytes_per_entry;
        let channels = PairChannels::new(ell);
        let e = channels.ell;
        let dim = basis.len();

        let mut row_ptr = Vec::with_capacity(dim + 1);
        row_ptr.push(0);
        let mut cols: Vec<u32> = Vec::new();
        let mut parts: Vec<Vec<f64>> = vec![Vec::new(); n_l];

        let mut slot = vec![u32::MAX; dim];
        let mut row_cols: Vec<u32> = Vec::new();
        let mut row_vals: Vec<f64> = Vec::new();
        let mut work: Vec<u8> = Vec::with_capacity(2 * e as usize + 1);
        let mut order: Vec<usize> = Vec::new();

        for i in 0..dim {
            let src = basis.occupations(i);
            for (mu_idx, pairs) in channels.by_sum.iter().enumerate() {
                let amps = &channels.amp[mu_idx];
                for (q, &(m3, m4)) in pairs.iter().enumerate() {
                    work.clear();
                    work.extend_from_slice(src);
                    let i3 = (m3 + e) as usize;
                    let i4 = (m4 + e) as usize;
                    let down = pair_removal(&mut work, i3, i4);
                    if down == 0.0 {
                        continue;
                    }
                    for (p, &(m1, m2)) in pairs.iter().enumerate() {
                        let i1 = (m1 + e) as usize;
                        let i2 = (m2 + e) as usize;
                        let up = pair_addition(&mut work, i1, i2);
                        let target = basis.position_raw(&work);
                        work[i1] -= 1;
                        work[i2] -= 1;
                        let j = target.expect("H conserves N and M");
                        if j < i {
                            continue;
                        }
                        let amp = down * up;
                        let s = if slot[j] == u32::MAX {
                            slot[j] = row_cols.len() as u32;
                            row_cols.push(j as u32);
                            row_vals.extend(std::iter::repeat(0.0).take(n_l));
                            slot[j] as usize
                        } else {
                            slot[j] as usize
                        };
                        for (k, a) in amps.iter().enumerate() {
                            row_vals[s * n_l + k] += amp * a[p] * a[q];
                        }
                    }
                }
            }
            order.clear();
            order.extend(0..row_cols.len());
            order.sort_unstable_by_key(|&t| row_cols[t]);
            for &t in &order {
                cols.push(row_cols[t]);
                for k in 0..n_l {
                    parts[k].push(row_vals[t * n_l + k]);
                }
                slot[row_cols[t] as usize] = u32::MAX;
            }
            row_cols.clear();
            row_vals.clear();
            row_ptr.push(cols.len());
            if cols.len() > max_entries {
                return Err(Error::Capacity(format!(
                    "operator template for sector of dimension {dim} exceeds memory budget of {budget_bytes} bytes"
                )));
            }
        }
        Ok(Self {
            basis,
            row_ptr,
            cols,
            parts,
        })
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// `Σ_M P†_{LM} P_{LM}` for even `L`.
    pub fn part(&self, l: u32) -> SparseSymMatrix {
        SparseSymMatrix::from_csr(
            self.basis.len(),
            self.row_ptr.clone(),
            self.cols.clone(),
            self.parts[(l / 2) as usize].clone(),
        )
    }

    pub fn assemble(&self, params: &InteractionParams) -> SparseSymMatrix {
        assert_eq!(params.ell(), self.basis.ell(), "ℓ mismatch");
        let mut vals = vec![0.0; self.cols.len()];
        for (part, &v) in self.parts.iter().zip(params.values()) {
            if v == 0.0 {
                continue;
            }
            for (out, &x) in vals.iter_mut().zip(part) {
                *out += v * x;
            }
        }
        SparseSymMatrix::from_csr(
            self.basis.len(),
            self.row_ptr.clone(),
            self.cols.clone(),
            vals,
        )
    }

    /// `J² = ℓ(ℓ+1)N + H^{(j)}`.
    pub fn j_squared(&self) -> SparseSymMatrix {
        let shape = self.basis.shape();
        let ell = shape.ell() as f64;
        let rot = special_interaction(SpecialKind::Rotational, shape.ell());
        self.assemble(&rot)
            .add_diagonal(ell * (ell + 1.0) * shape.n() as f64)
    }
}

/// Matrix of `H = Σ_L V_L Σ_M P†_{LM} P_{LM}` in the sector.
pub fn build_hamiltonian(basis: Arc<SectorBasis>, params: &InteractionParams) -> Result<SparseSymMatrix> {
    Ok(HamiltonianTemplate::new(basis)?.assemble(params))
}

/// Matrix of the total angular momentum squared in the sector.
pub fn build_j_squared(basis: Arc<SectorBasis>) -> Result<SparseSymMatrix> {
    Ok(HamiltonianTemplate::new(basis)?.j_squared())
}

/// `P_{LM}|ψ>` as a sparse map over (N-2)-particle occupation states.
pub fn apply_pair_annihilation(
    basis: &SectorBasis,
    vector: &[f64],
    l: u32,
    m: i32,
) -> Result<Vec<(OccupationState, f64)>> {
    let ell = basis.ell();
    if l % 2 == 1 || l > 2 * ell {
        return domain(format!("pair spin L={l} must be even and <= 2ℓ"));
    }
    if m.unsigned_abs() > l {
        return domain(format!("|M|={} exceeds L={l}", m.abs()));
    }
    if basis.shape().n() < 2 {
        return Ok(Vec::new());
    }
    let table = CouplingTable::for_ell(ell);
    let e = ell as i32;
    let pairs: Vec<((i32, i32), f64)> = table
        .get(l, m)
        .iter()
        .filter(|((m1, m2), _)| m1 <= m2)
        .map(|&((m1, m2), c)| ((m1, m2), if m1 == m2 { c } else { 2.0 * c }))
        .collect();
    let mut acc: FxHashMap<PackedKey, (Vec<u8>, f64)> = FxHashMap::default();
    let mut work = Vec::new();
    for (i, &x) in vector.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for &((m1, m2), u) in &pairs {
            work.clear();
            work.extend_from_slice(basis.occupations(i));
            let amp = pair_removal(&mut work, (m1 + e) as usize, (m2 + e) as usize);
            if amp == 0.0 {
                continue;
            }
            let entry = acc
                .entry(PackedKey::pack(&work))
                .or_insert_with(|| (work.clone(), 0.0));
            entry.1 += u * amp * x;
        }
    }
    let mut out: Vec<(OccupationState, f64)> = acc
        .into_values()
        .map(|(occ, v)| (OccupationState::from_occupations(occ), v))
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// Creation or annihilation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Create,
    Annihilate,
}

/// Spin-zero cluster of `k` bosons, `C† = Σ_s c_s Π_m (a†_m)^{n_m} / √(n_m!)`,
/// so that `C†|0> = Σ_s c_s |s>`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterOperator {
    ell: u32,
    k: u32,
    expansion: Vec<(OccupationState, f64)>,
}

impl ClusterOperator {
    pub fn ell(&self) -> u32 {
        self.ell
    }

    /// Cluster size: 2 pair, 3 triplet, 4 quartet.
    pub fn size(&self) -> u32 {
        self.k
    }

    pub fn expansion(&self) -> &[(OccupationState, f64)] {
        &self.expansion
    }

    /// `<0|C C†|0>`.
    pub fn norm_squared(&self) -> f64 {
        self.expansion.iter().map(|(_, c)| c * c).sum()
    }
}

/// Largest-magnitude entry made positive; ties resolved by lowest index.
pub fn fix_phase(v: &mut [f64]) {
    let mut best = 0usize;
    let mut best_abs = -1.0;
    for (i, x) in v.iter().enumerate() {
        // prefer the earliest index among numerically equal magnitudes
        if x.abs() > best_abs * (1.0 + 1e-9) {
            best = i;
            best_abs = x.abs();
        }
    }
    if !v.is_empty() && v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Cluster operator creating the given normalized `J = 0` state of `k`
/// bosons (basis must be a `(k, M = 0)` sector).
pub fn cluster_from_state(basis: &SectorBasis, vector: &[f64]) -> Result<ClusterOperator> {
    if basis.m_total() != 0 {
        return domain("cluster states must live in the M = 0 sector");
    }
    if vector.len() != basis.len() {
        return domain("vector length does not match basis");
    }
    let norm: f64 = vector.iter().map(|x| x * x).sum();
    if (norm - 1.0).abs() > 1e-8 {
        return domain(format!("cluster state must be normalized (norm² = {norm})"));
    }
    let j2 = HamiltonianTemplate::new(Arc::new(basis.clone()))?.j_squared();
    let spin = j2.expectation(vector);
    if spin.abs() > 1e-8 {
        return domain(format!("cluster state must have J = 0 (<J²> = {spin:e})"));
    }
    let expansion = vector
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0.0)
        .map(|(i, &c)| (basis.state(i), c))
        .collect();
    Ok(ClusterOperator {
        ell: basis.ell(),
        k: basis.shape().n(),
        expansion,
    })
}

/// `C†` or `C` applied to a vector of the `src` sector, expressed in `dst`.
pub fn apply_cluster(
    op: &ClusterOperator,
    direction: Direction,
    src: &SectorBasis,
    vector: &[f64],
    dst: &SectorBasis,
) -> Result<Vec<f64>> {
    let n_src = src.shape().n() as i64;
    let n_dst = dst.shape().n() as i64;
    let k = op.k as i64;
    let expected = match direction {
        Direction::Create => n_src + k,
        Direction::Annihilate => n_src - k,
    };
    if expected < 0 {
        return domain(format!("cannot remove {k} bosons from {n_src}"));
    }
    if n_dst != expected || src.m_total() != dst.m_total() || src.ell() != op.ell || dst.ell() != op.ell {
        return domain("target sector does not match cluster action");
    }
    if vector.len() != src.len() {
        return domain("vector length does not match basis");
    }
    let mut out = vec![0.0; dst.len()];
    let mut work: Vec<u8> = Vec::new();
    for (i, &x) in vector.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        let occ = src.occupations(i);
        'terms: for (cluster, c) in &op.expansion {
            work.clear();
            work.extend_from_slice(occ);
            let mut amp = 1.0;
            for (slot, &take) in work.iter_mut().zip(cluster.occupations()) {
                let take = take as u32;
                if take == 0 {
                    continue;
                }
                let have = *slot as u32;
                match direction {
                    Direction::Create => {
                        // (a†)^t / √(t!) on n: √((n+1)…(n+t) / t!)
                        for s in 1..=take {
                            amp *= ((have + s) as f64 / s as f64).sqrt();
                        }
                        *slot += take as u8;
                    }
                    Direction::Annihilate => {
                        if have < take {
                            continue 'terms;
                        }
                        for s in 0..take {
                            amp *= ((have - s) as f64 / (s + 1) as f64).sqrt();
                        }
                        *slot -= take as u8;
                    }
                }
            }
            let j = dst.position_raw(&work).expect("cluster action stays in target sector");
            out[j] += c * amp * x;
        }
    }
    Ok(out)
}

/// Pair operator `P†_{00}` as a cluster operator.
pub fn pair_cluster(ell: u32) -> Result<ClusterOperator> {
    let shape = SystemShape::new(ell, 2)?;
    let basis = enumerate_sector(shape, 0)?;
    let table = CouplingTable::for_ell(ell);
    let vector: Vec<f64> = (0..basis.len())
        .map(|i| {
            let st = basis.state(i);
            let occupied: Vec<i32> = (-(ell as i32)..=ell as i32)
                .flat_map(|m| std::iter::repeat(m).take(st.get(m) as usize))
                .collect();
            let (m1, m2) = (occupied[0], occupied[1]);
            let c = table.coefficient(0, m1, m2);
            if m1 == m2 {
                std::f64::consts::SQRT_2 * c
            } else {
                2.0 * c
            }
        })
        .collect();
    cluster_from_state(&basis, &vector)
}

/// The unique normalized `J = 0` state of three bosons with even ℓ, as a
/// cluster operator `T†`.
pub fn triplet_state(ell: u32) -> Result<ClusterOperator> {
    if ell % 2 == 1 {
        return domain(format!("three bosons of odd spin ℓ={ell} cannot couple to J = 0"));
    }
    let shape = SystemShape::new(ell, 3)?;
    let jb = crate::solver::j_subspace_basis(shape, 0, &crate::solver::SolverOptions::default())?;
    if jb.len() != 1 {
        return Err(Error::Domain(format!(
            "expected a unique J = 0 triplet, found {}",
            jb.len()
        )));
    }
    cluster_from_state(jb.basis(), jb.column(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::SpinDistribution;
    use crate::fock::enumerate_sector;
    use crate::dense::SymmetricEigen;
    use faer::Mat;

    fn max_diff(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                worst = worst.max((a[(i, j)] - b[(i, j)]).abs());
            }
        }
        worst
    }

    fn sector(ell: u32, n: u32, m: i64) -> Arc<SectorBasis> {
        Arc::new(enumerate_sector(SystemShape::new(ell, n).unwrap(), m).unwrap())
    }

    fn eigenvalues(m: &SparseSymMatrix) -> Vec<f64> {
        SymmetricEigen::new(&m.to_dense()).unwrap().values
    }

    /// J² = J₋J₊ + J_z² + J_z assembled from single-particle ladders.
    fn j_squared_ladder(basis: &SectorBasis) -> SparseSymMatrix {
        let ell = basis.ell() as i32;
        let m_tot = basis.m_total() as f64;
        let mut trip = Vec::new();
        for i in 0..basis.len() {
            let s = basis.state(i);
            // J₋J₊ |s> = Σ_{m,m'} ...
            for m in -ell..ell {
                if s.get(m) == 0 {
                    continue;
                }
                let (up, a1) = crate::fock::apply_monomial(
                    &s,
                    &[crate::fock::Ladder::Annihilate(m), crate::fock::Ladder::Create(m + 1)],
                );
                let cp = (((ell - m) * (ell + m + 1)) as f64).sqrt();
                for mp in -ell + 1..=ell {
                    if up.get(mp) == 0 {
                        continue;
                    }
                    let (down, a2) = crate::fock::apply_monomial(
                        &up,
                        &[crate::fock::Ladder::Annihilate(mp), crate::fock::Ladder::Create(mp - 1)],
                    );
                    let cm = (((ell + mp) * (ell - mp + 1)) as f64).sqrt();
                    let j = basis.position(&down).unwrap();
                    let w = if i == j { 1.0 } else { 0.5 };
                    trip.push((i, j, w * a1 * cp * a2 * cm));
                }
            }
            trip.push((i, i, m_tot * m_tot + m_tot));
        }
        // off-diagonal entries arrive from both rows, hence the halves
        SparseSymMatrix::from_triplets(basis.len(), &trip)
    }

    #[test]
    fn quadrupole_pair_energies_from_m_scheme() {
        use crate::angular::clebsch_gordan as cg;
        for ell in [2i64, 3, 5] {
            let raw: Vec<f64> = (0..=ell)
                .map(|k| {
                    let l = 2 * k;
                    let mut s = 0.0;
                    for m1 in -ell..=ell {
                        for p1 in -ell..=ell {
                            for mu in -2..=2i64 {
                                let (m2, p2) = (-m1, -p1);
                                let sign = if mu % 2 == 0 { 1.0 } else { -1.0 };
                                s += cg(ell, m1, ell, m2, l, 0)
                                    * cg(ell, p1, ell, p2, l, 0)
                                    * sign
                                    * cg(ell, m1, 2, mu, ell, p1)
                                    * cg(ell, m2, 2, -mu, ell, p2);
                            }
                        }
                    }
                    -s
                })
                .collect();
            let scale = raw.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let v = special_interaction(SpecialKind::QuadrupoleQuadrupole, ell as u32);
            for (k, r) in raw.iter().enumerate() {
                assert!((v.get(2 * k as u32) - r / scale).abs() < 1e-12, "ell={ell} L={}", 2 * k);
            }
        }
    }

    #[test]
    fn j_squared_matches_ladder_construction() {
        for (ell, n, m) in [(2, 3, 0), (3, 4, 1), (4, 3, 0), (2, 5, 2)] {
            let b = sector(ell, n, m);
            let a = build_j_squared(b.clone()).unwrap().to_dense();
            let c = j_squared_ladder(&b).to_dense();
            assert!(max_diff(&a, &c) < 1e-10, "ell={ell} n={n}");
        }
    }

    #[test]
    fn monopole_is_pair_count() {
        let b = sector(4, 5, 0);
        let h = build_hamiltonian(b.clone(), &special_interaction(SpecialKind::Monopole, 4)).unwrap();
        let d = h.to_dense();
        let expected = Mat::from_fn(b.len(), b.len(), |i, j| if i == j { 10.0 } else { 0.0 });
        assert!(max_diff(&d, &expected) < 1e-10);
    }

    #[test]
    fn special_values() {
        assert_eq!(special_interaction(SpecialKind::Monopole, 3).values(), &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(special_interaction(SpecialKind::Pairing, 3).values(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(special_interaction(SpecialKind::Rotational, 2).values(), &[-12.0, -6.0, 8.0]);
    }

    #[test]
    fn single_boson_j_squared() {
        let b = sector(3, 1, 0);
        let j2 = build_j_squared(b).unwrap().to_dense();
        assert!((j2[(0, 0)] - 12.0).abs() < 1e-12);
    }

    #[test]
    fn rotational_spectrum_and_multiplicities() {
        let shape = SystemShape::new(5, 6).unwrap();
        let b = sector(5, 6, 0);
        let ev = eigenvalues(&build_j_squared(b).unwrap());
        let dist = SpinDistribution::new(shape);
        for j in 0..=shape.j_max() {
            let target = (j * (j + 1)) as f64;
            let mult = ev.iter().filter(|&&e| (e - target).abs() < 1e-6).count() as u128;
            assert_eq!(mult, dist.count(j), "J={j}");
        }
        assert_eq!(dist.count(0), 6);
    }

    #[test]
    fn hamiltonian_commutes_with_j_squared() {
        let b = sector(4, 5, 0);
        let t = HamiltonianTemplate::new(b).unwrap();
        let p = InteractionParams::new(4, vec![0.3, -1.2, 0.7, 2.1, -0.4]).unwrap();
        let h = t.assemble(&p).to_dense();
        let j2 = t.j_squared().to_dense();
        assert!(max_diff(&(&h * &j2), &(&j2 * &h)) < 1e-9);
    }

    #[test]
    fn linear_in_parameters() {
        let b = sector(3, 4, 0);
        let t = HamiltonianTemplate::new(b).unwrap();
        let p1 = InteractionParams::new(3, vec![1.0, -0.5, 0.25, 2.0]).unwrap();
        let p2 = InteractionParams::new(3, vec![-0.3, 0.8, 1.5, -1.0]).unwrap();
        let lhs = t.assemble(&p1.combine(2.0, &p2, -3.0)).to_dense();
        let (a, b) = (t.assemble(&p1).to_dense(), t.assemble(&p2).to_dense());
        let rhs = Mat::from_fn(a.nrows(), a.ncols(), |i, j| 2.0 * a[(i, j)] - 3.0 * b[(i, j)]);
        assert!(max_diff(&lhs, &rhs) < 1e-10);
    }

    #[test]
    fn sectors_share_multiplets() {
        let p = InteractionParams::new(3, vec![0.4, -1.0, 0.2, 0.9]).unwrap();
        let spectra: Vec<Vec<f64>> = (0..=2)
            .map(|m| eigenvalues(&build_hamiltonian(sector(3, 4, m), &p).unwrap()))
            .collect();
        // every level of M=2 appears in M=1 and M=0
        for e in &spectra[2] {
            for lower in &spectra[..2] {
                assert!(lower.iter().any(|x| (x - e).abs() < 1e-9));
            }
        }
    }

    #[test]
    fn pairing_spectrum_is_seniority_formula() {
        let (ell, n) = (3u32, 6u32);
        let b = sector(ell, n, 0);
        let ev = eigenvalues(&build_hamiltonian(b, &special_interaction(SpecialKind::Pairing, ell)).unwrap());
        let allowed: Vec<f64> = (0..=n)
            .filter(|nu| (n - nu) % 2 == 0)
            .map(|nu| ((n - nu) * (n + nu + 2 * ell - 1)) as f64 / (2 * (2 * ell + 1)) as f64)
            .collect();
        for e in ev {
            assert!(allowed.iter().any(|a| (a - e).abs() < 1e-9), "unexpected {e}");
        }
    }

    #[test]
    fn two_particle_pair_states_have_energy_v_l() {
        let ell = 3u32;
        let b = sector(ell, 2, 0);
        let t = HamiltonianTemplate::new(b.clone()).unwrap();
        let p = InteractionParams::new(ell, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let h = t.assemble(&p);
        let ev = eigenvalues(&h);
        let mut expected = p.values().to_vec();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, e) in ev.iter().zip(&expected) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn pair_cluster_matches_pair_coefficients() {
        let ell = 4u32;
        let pair = pair_cluster(ell).unwrap();
        assert!((pair.norm_squared() - 1.0).abs() < 1e-12);
        let coeffs = crate::angular::pair_coefficients(ell, 0, 0).unwrap();
        for (state, c) in pair.expansion() {
            let occupied: Vec<i32> = (-(ell as i32)..=ell as i32)
                .flat_map(|m| std::iter::repeat(m).take(state.get(m) as usize))
                .collect();
            let (m1, m2) = (occupied[0], occupied[1]);
            let raw = coeffs.iter().find(|&&(p, _)| p == (m1, m2)).unwrap().1;
            let expected = if m1 == m2 { std::f64::consts::SQRT_2 * raw } else { 2.0 * raw };
            assert!((c - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn pair_number_on_seniority_zero_state() {
        // (P†)²|0> normalized for ℓ=2; <P†P> = 4·7/(2·5)
        let ell = 2u32;
        let pair = pair_cluster(ell).unwrap();
        let b0 = sector(ell, 0, 0);
        let b2 = sector(ell, 2, 0);
        let b4 = sector(ell, 4, 0);
        let v2 = apply_cluster(&pair, Direction::Create, &b0, &[1.0], &b2).unwrap();
        let mut v4 = apply_cluster(&pair, Direction::Create, &b2, &v2, &b4).unwrap();
        let norm = v4.iter().map(|x| x * x).sum::<f64>().sqrt();
        v4.iter_mut().for_each(|x| *x /= norm);
        let removed = apply_cluster(&pair, Direction::Annihilate, &b4, &v4, &b2).unwrap();
        let number: f64 = removed.iter().map(|x| x * x).sum();
        assert!((number - 2.8).abs() < 1e-12);
        let h = build_hamiltonian(b4, &special_interaction(SpecialKind::Pairing, ell)).unwrap();
        assert!((h.expectation(&v4) - 2.8).abs() < 1e-12);
    }

    #[test]
    fn cluster_adjointness() {
        let ell = 2u32;
        let t = triplet_state(ell).unwrap();
        let b3 = sector(ell, 3, 0);
        let b6 = sector(ell, 6, 0);
        let u: Vec<f64> = (0..b3.len()).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0).collect();
        let w: Vec<f64> = (0..b6.len()).map(|i| ((i * 5 + 1) % 13) as f64 - 6.0).collect();
        let cw = apply_cluster(&t, Direction::Annihilate, &b6, &w, &b3).unwrap();
        let cu = apply_cluster(&t, Direction::Create, &b3, &u, &b6).unwrap();
        let lhs: f64 = u.iter().zip(&cw).map(|(a, b)| a * b).sum();
        let rhs: f64 = w.iter().zip(&cu).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0));
        assert!(apply_cluster(&t, Direction::Annihilate, &sector(ell, 2, 0), &[1.0; 2], &b3).is_err());
    }

    #[test]
    fn triplet_basics() {
        assert!(triplet_state(3).is_err());
        for ell in [2u32, 4, 6] {
            let t = triplet_state(ell).unwrap();
            assert_eq!(t.size(), 3);
            assert!((t.norm_squared() - 1.0).abs() < 1e-10);
            let b3 = sector(ell, 3, 0);
            let v = apply_cluster(&t, Direction::Create, &sector(ell, 0, 0), &[1.0], &b3).unwrap();
            let direct: Vec<f64> = b3
                .states()
                .map(|s| t.expansion().iter().find(|(x, _)| *x == s).map_or(0.0, |e| e.1))
                .collect();
            for (a, b) in v.iter().zip(&direct) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn triplet_energy_is_three_v_ell_for_d_bosons() {
        let t = triplet_state(2).unwrap();
        let b3 = sector(2, 3, 0);
        let v = apply_cluster(&t, Direction::Create, &sector(2, 0, 0), &[1.0], &b3).unwrap();
        let p = InteractionParams::new(2, vec![0.7, -1.3, 2.2]).unwrap();
        let e = build_hamiltonian(b3, &p).unwrap().expectation(&v);
        assert!((e - 3.0 * p.get(2)).abs() < 1e-10);
    }

    #[test]
    fn cluster_from_state_rejects_bad_input() {
        let b = enumerate_sector(SystemShape::new(2, 2).unwrap(), 0).unwrap();
        assert!(cluster_from_state(&b, &[1.0, 0.0, 0.0]).is_err());
        assert!(cluster_from_state(&b, &[0.5, 0.0, 0.0]).is_err());
    }
}
