//! Ground states, spin labels and fixed-J bases of the M = 0 sector.

use std::sync::Arc;

use serde::Serialize;

use crate::combinatorics::{spin_dim, SystemShape};
use crate::dense::SymmetricEigen;
use crate::error::{domain, Error, Result};
use crate::fock::{enumerate_sector, SectorBasis};
use crate::lanczos::{self, dot, normalize, LanczosParams};
use crate::operators::{fix_phase, HamiltonianTemplate};
use crate::sparse::SparseSymMatrix;

/// Largest `|<J²> - J(J+1)|` accepted when labelling a state with spin J.
pub const SPIN_TOLERANCE: f64 = 0.2;
/// Eigenvalues of J² within this distance of J(J+1) belong to spin J.
pub const J_CLUSTER_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Matrices up to this dimension are diagonalized densely.
    pub dense_threshold: usize,
    pub lanczos: LanczosParams,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            dense_threshold: 400,
            lanczos: LanczosParams::default(),
        }
    }
}

/// The `k` algebraically smallest eigenpairs, ascending. Eigenvectors are
/// unit norm with their largest-magnitude entry positive.
pub fn lowest_eigenpairs(
    matrix: &SparseSymMatrix,
    k: usize,
    opts: &SolverOptions,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = matrix.dim();
    if k == 0 || k > n {
        return domain(format!("requested {k} eigenpairs of a {n}-dimensional matrix"));
    }
    let mut pairs = if n <= opts.dense_threshold {
        let eig = SymmetricEigen::new(&matrix.to_dense())?;
        (0..k).map(|i| (eig.values[i], eig.vector(i))).collect()
    } else {
        let pairs = lanczos::thick_restart_lowest(matrix, k, &opts.lanczos)?;
        let scale = matrix.norm_bound().max(1.0);
        let mut av = vec![0.0; n];
        for (e, v) in &pairs {
            matrix.matvec_into(v, &mut av);
            let r = av
                .iter()
                .zip(v)
                .map(|(a, x)| (a - e * x).powi(2))
                .sum::<f64>()
                .sqrt();
            if r > 1e-8 * scale {
                return Err(Error::NonConvergence {
                    iterations: opts.lanczos.max_restarts,
                    residual: r,
                });
            }
        }
        pairs
    };
    for (_, v) in pairs.iter_mut() {
        fix_phase(v);
    }
    Ok(pairs)
}

/// Spin label from `<J²>`: `J = round((-1 + √(1 + 4<J²>)) / 2)`.
pub fn assign_spin(vector: &[f64], j_squared: &SparseSymMatrix) -> Result<u32> {
    let expectation = j_squared.expectation(vector);
    spin_from_expectation(expectation)
}

pub fn spin_from_expectation(expectation: f64) -> Result<u32> {
    let j = ((-1.0 + (1.0 + 4.0 * expectation.max(0.0)).sqrt()) / 2.0).round();
    if (expectation - j * (j + 1.0)).abs() > SPIN_TOLERANCE {
        return Err(Error::SpinImpurity { expectation });
    }
    Ok(j as u32)
}

/// Lowest state of a Hamiltonian in an M = 0 sector.
#[derive(Debug, Clone, Serialize)]
pub struct GroundSolution {
    pub energy: f64,
    pub vector: Vec<f64>,
    pub spin: u32,
    /// Distance to the next level in the sector (0 for one-dimensional sectors).
    pub gap: f64,
    pub degenerate: bool,
}

/// Ground state, spin and gap of `h` in the sector carrying `j_squared`.
pub fn solve_ground(
    h: &SparseSymMatrix,
    j_squared: &SparseSymMatrix,
    opts: &SolverOptions,
) -> Result<GroundSolution> {
    let k = h.dim().min(2);
    let mut pairs = lowest_eigenpairs(h, k, opts)?;
    let gap = if k == 2 { pairs[1].0 - pairs[0].0 } else { 0.0 };
    let (energy, vector) = pairs.swap_remove(0);
    let degenerate = k == 2 && gap < 1e-8 * energy.abs().max(1.0);
    let spin = assign_spin(&vector, j_squared)?;
    Ok(GroundSolution {
        energy,
        vector,
        spin,
        gap: gap.max(0.0),
        degenerate,
    })
}

/// Orthonormal basis of the spin-J subspace of an M = 0 sector.
#[derive(Debug, Clone)]
pub struct JBasis {
    shape: SystemShape,
    j: u32,
    basis: Arc<SectorBasis>,
    columns: Vec<Vec<f64>>,
}

impl JBasis {
    pub fn shape(&self) -> SystemShape {
        self.shape
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    pub fn basis(&self) -> &SectorBasis {
        &self.basis
    }

    pub fn sector(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.columns[i]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// Sector vector `Σ_i components[i] · column_i`.
    pub fn reconstruct(&self, components: &[f64]) -> Result<Vec<f64>> {
        if components.len() != self.columns.len() {
            return domain(format!(
                "{} components for a {}-dimensional J basis",
                components.len(),
                self.columns.len()
            ));
        }
        let mut out = vec![0.0; self.basis.len()];
        for (c, col) in components.iter().zip(&self.columns) {
            lanczos::axpy(*c, col, &mut out);
        }
        Ok(out)
    }
}

/// Overlaps `<column_i | vector>`.
pub fn project_onto_j(vector: &[f64], jb: &JBasis) -> Result<Vec<f64>> {
    if vector.len() != jb.basis.len() {
        return domain("vector does not belong to the J basis sector");
    }
    Ok(jb.columns.iter().map(|c| dot(c, vector)).collect())
}

/// Residual norms below this mark a direction as already spanned.
const ACCEPT: f64 = 1e-3;

/// Gram-Schmidt (twice) of `v` against `basis`; returns the residual norm
/// and leaves `v` normalized.
fn orthonormalize_against(basis: &[Vec<f64>], v: &mut [f64]) -> f64 {
    for _ in 0..2 {
        for c in basis {
            let h = dot(c, v);
            lanczos::axpy(-h, c, v);
        }
    }
    normalize(v)
}

/// Canonical form of the subspace spanned by the orthonormal columns `q`.
///
/// The projections `P e_k = Q Q^T e_k` of the coordinate directions are
/// taken in basis order and Gram-Schmidt orthogonalized; each accepted
/// column is phase fixed. The result depends only on the subspace.
fn canonical_columns(q: &[Vec<f64>], dim: usize) -> Result<Vec<Vec<f64>>> {
    let d = q.len();
    let mut coeffs: Vec<Vec<f64>> = Vec::with_capacity(d);
    for k in 0..dim {
        if coeffs.len() == d {
            break;
        }
        let mut row: Vec<f64> = q.iter().map(|c| c[k]).collect();
        if orthonormalize_against(&coeffs, &mut row) > ACCEPT {
            coeffs.push(row);
        }
    }
    if coeffs.len() != d {
        return Err(Error::Domain(format!(
            "found {} of {d} canonical directions",
            coeffs.len()
        )));
    }
    Ok(coeffs
        .iter()
        .map(|r| {
            let mut col = vec![0.0; dim];
            for (x, c) in r.iter().zip(q) {
                lanczos::axpy(*x, c, &mut col);
            }
            normalize(&mut col);
            fix_phase(&mut col);
            col
        })
        .collect())
}

/// Spin-J basis of the given M = 0 sector.
pub fn j_subspace_basis_in(
    sector: Arc<SectorBasis>,
    j_squared: &SparseSymMatrix,
    j: u32,
    opts: &SolverOptions,
) -> Result<JBasis> {
    let shape = sector.shape();
    if sector.m_total() != 0 {
        return domain("J bases are built in the M = 0 sector");
    }
    let count = spin_dim(shape, j)? as usize;
    if count == 0 {
        return domain(format!(
            "no J={j} states for ℓ={}, N={}",
            shape.ell(),
            shape.n()
        ));
    }
    let dim = sector.len();
    let target = (j * (j + 1)) as f64;
    let span = if dim <= opts.dense_threshold {
        let eig = SymmetricEigen::new(&j_squared.to_dense())?;
        let cluster: Vec<Vec<f64>> = (0..dim)
            .filter(|&i| (eig.values[i] - target).abs() < J_CLUSTER_TOLERANCE)
            .map(|i| eig.vector(i))
            .collect();
        if cluster.len() != count {
            return Err(Error::Domain(format!(
                "J² eigenvalue cluster at {target} has {} members, expected {count}",
                cluster.len()
            )));
        }
        cluster
    } else {
        // the Krylov space of J² is bounded by the number of distinct spins;
        // rounding delays breakdown, hence the slack in the step limit
        let mut spins = 0;
        for jj in 0..=shape.j_max() {
            if spin_dim(shape, jj)? > 0 {
                spins += 1;
            }
        }
        let mut span: Vec<Vec<f64>> = Vec::with_capacity(count);
        let mut attempt = 0u64;
        while span.len() < count {
            if attempt as usize >= 2 * count + 8 {
                return Err(Error::Domain(format!(
                    "spanned {} of {count} J={j} directions",
                    span.len()
                )));
            }
            let start = lanczos::start_vector(dim, 0x4a5f_0000 + attempt);
            attempt += 1;
            let Some(mut v) = lanczos::project_onto_eigenspace(
                j_squared,
                &start,
                target,
                J_CLUSTER_TOLERANCE,
                2 * spins + 8,
            )?
            else {
                continue;
            };
            normalize(&mut v);
            if orthonormalize_against(&span, &mut v) > ACCEPT {
                span.push(v);
            }
        }
        span
    };
    let columns = canonical_columns(&span, dim)?;
    Ok(JBasis {
        shape,
        j,
        basis: sector,
        columns,
    })
}

/// Spin-J basis of the M = 0 sector of `shape`.
pub fn j_subspace_basis(shape: SystemShape, j: u32, opts: &SolverOptions) -> Result<JBasis> {
    let sector = Arc::new(enumerate_sector(shape, 0)?);
    let j2 = HamiltonianTemplate::new(sector.clone())?.j_squared();
    j_subspace_basis_in(sector, &j2, j, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{build_hamiltonian, special_interaction, InteractionParams, SpecialKind};

    fn shape(ell: u32, n: u32) -> SystemShape {
        SystemShape::new(ell, n).unwrap()
    }

    fn sector(ell: u32, n: u32) -> Arc<SectorBasis> {
        Arc::new(enumerate_sector(shape(ell, n), 0).unwrap())
    }

    fn gram_deviation(cols: &[Vec<f64>]) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in cols.iter().enumerate() {
            for (j, b) in cols.iter().enumerate() {
                let expected = f64::from(i == j);
                worst = worst.max((dot(a, b) - expected).abs());
            }
        }
        worst
    }

    #[test]
    fn one_by_one() {
        let m = SparseSymMatrix::from_triplets(1, &[(0, 0, -2.5)]);
        let p = lowest_eigenpairs(&m, 1, &SolverOptions::default()).unwrap();
        assert_eq!(p[0].0, -2.5);
        assert_eq!(p[0].1, vec![1.0]);
        assert!(lowest_eigenpairs(&m, 2, &SolverOptions::default()).is_err());
    }

    #[test]
    fn monopole_all_levels_equal() {
        let b = sector(4, 5);
        let h = build_hamiltonian(b, &special_interaction(SpecialKind::Monopole, 4)).unwrap();
        let pairs = lowest_eigenpairs(&h, 3, &SolverOptions::default()).unwrap();
        for (e, _) in pairs {
            assert!((e - 10.0).abs() < 1e-9);
        }
    }

    #[test]
    fn dense_and_iterative_agree() {
        let b = sector(4, 6);
        let t = HamiltonianTemplate::new(b).unwrap();
        let dense = SolverOptions {
            dense_threshold: usize::MAX,
            ..Default::default()
        };
        let sparse = SolverOptions {
            dense_threshold: 0,
            ..Default::default()
        };
        for seed in 0..8u64 {
            let p = crate::ensemble::sample_interaction(42, seed, 4);
            let h = t.assemble(&p);
            let a = lowest_eigenpairs(&h, 2, &dense).unwrap();
            let b = lowest_eigenpairs(&h, 2, &sparse).unwrap();
            assert!((a[0].0 - b[0].0).abs() < 1e-8);
            assert!((a[1].0 - b[1].0).abs() < 1e-8);
            assert!((dot(&a[0].1, &b[0].1).abs() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn m_zero_holds_global_minimum() {
        let s = shape(3, 4);
        let p = InteractionParams::new(3, vec![0.3, -0.9, 1.1, -0.2]).unwrap();
        let opts = SolverOptions {
            dense_threshold: usize::MAX,
            ..Default::default()
        };
        let jm = s.j_max() as i64;
        let global = (-jm..=jm)
            .map(|m| {
                let b = Arc::new(enumerate_sector(s, m).unwrap());
                let h = build_hamiltonian(b, &p).unwrap();
                lowest_eigenpairs(&h, 1, &opts).unwrap()[0].0
            })
            .fold(f64::INFINITY, f64::min);
        let h0 = build_hamiltonian(sector(3, 4), &p).unwrap();
        let e0 = lowest_eigenpairs(&h0, 1, &opts).unwrap()[0].0;
        assert!((global - e0).abs() < 1e-10);
    }

    #[test]
    fn spin_labels() {
        assert_eq!(spin_from_expectation(0.0).unwrap(), 0);
        assert_eq!(spin_from_expectation(6.05).unwrap(), 2);
        assert!(matches!(spin_from_expectation(3.0), Err(Error::SpinImpurity { .. })));

        // aligned condensate in its own M = Nℓ sector
        let s = shape(3, 4);
        let top = Arc::new(enumerate_sector(s, 12).unwrap());
        assert_eq!(top.len(), 1);
        let j2 = HamiltonianTemplate::new(top).unwrap().j_squared();
        assert_eq!(assign_spin(&[1.0], &j2).unwrap(), 12);
    }

    #[test]
    fn attractive_pairing_ground_state_is_paired() {
        let b = sector(2, 4);
        let t = HamiltonianTemplate::new(b).unwrap();
        let h = t.assemble(&special_interaction(SpecialKind::Pairing, 2).combine(-1.0, &InteractionParams::zero(2), 0.0));
        let g = solve_ground(&h, &t.j_squared(), &SolverOptions::default()).unwrap();
        assert_eq!(g.spin, 0);
        assert!((g.energy + 2.8).abs() < 1e-10);
        assert!(!g.degenerate);
    }

    #[test]
    fn j_basis_properties() {
        let s = shape(5, 8);
        let jb = j_subspace_basis(s, 0, &SolverOptions::default()).unwrap();
        assert_eq!(jb.len(), 12);
        assert!(gram_deviation(jb.columns()) < 1e-9);
        let j2 = HamiltonianTemplate::new(jb.sector().clone()).unwrap().j_squared();
        for c in jb.columns() {
            assert!(j2.expectation(c).abs() < 1e-8);
        }
        let own = project_onto_j(jb.column(3), &jb).unwrap();
        for (i, x) in own.iter().enumerate() {
            assert!((x - f64::from(i == 3)).abs() < 1e-10);
        }
        let other = j_subspace_basis(s, 2, &SolverOptions::default()).unwrap();
        for c in other.columns() {
            assert!(project_onto_j(c, &jb).unwrap().iter().all(|x| x.abs() < 1e-8));
        }
        assert!(j_subspace_basis(shape(3, 13), 0, &SolverOptions::default()).is_err());
    }

    #[test]
    fn j_basis_dense_and_krylov_agree() {
        let s = shape(4, 6);
        let dense = SolverOptions {
            dense_threshold: usize::MAX,
            ..Default::default()
        };
        let krylov = SolverOptions {
            dense_threshold: 0,
            ..Default::default()
        };
        for j in [0u32, 4, 6] {
            let a = j_subspace_basis(s, j, &dense).unwrap();
            let b = j_subspace_basis(s, j, &krylov).unwrap();
            assert_eq!(a.len(), b.len());
            for (x, y) in a.columns().iter().zip(b.columns()) {
                let diff = x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
                assert!(diff < 1e-8, "J={j} diff={diff}");
            }
        }
    }

    #[test]
    fn j_basis_is_reproducible() {
        let s = shape(4, 5);
        let a = j_subspace_basis(s, 4, &SolverOptions::default()).unwrap();
        let b = j_subspace_basis(s, 4, &SolverOptions::default()).unwrap();
        assert_eq!(a.columns(), b.columns());
    }

    #[test]
    fn ground_states_are_spin_pure() {
        let s = shape(4, 5);
        let b = sector(4, 5);
        let t = HamiltonianTemplate::new(b.clone()).unwrap();
        let j2 = t.j_squared();
        for id in 0..5 {
            let p = crate::ensemble::sample_interaction(9, id, 4);
            let g = solve_ground(&t.assemble(&p), &j2, &SolverOptions::default()).unwrap();
            let jb = j_subspace_basis_in(b.clone(), &j2, g.spin, &SolverOptions::default()).unwrap();
            let comps = project_onto_j(&g.vector, &jb).unwrap();
            let w: f64 = comps.iter().map(|x| x * x).sum();
            assert!((w - 1.0).abs() < 1e-8);
            let back = jb.reconstruct(&comps).unwrap();
            let err = back.iter().zip(&g.vector).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-8);
            assert_eq!(jb.shape(), s);
        }
    }
}
