//! Exact state counting for N identical bosons of spin ℓ.
//!
//! Everything here is integer arithmetic. The number of multiplets with
//! total spin J is obtained from the distribution of the total magnetic
//! projection M through `D(J) = D'(M = J) - D'(M = J + 1)`.

use serde::Serialize;

use crate::error::{domain, Error, Result};

/// Largest boson spin accepted by the counting routines.
pub const MAX_ELL: u32 = 12;
/// Largest particle number accepted by the counting routines.
pub const MAX_N: u32 = 30;

/// Boson spin and particle number of a system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SystemShape {
    ell: u32,
    n: u32,
}

impl SystemShape {
    pub fn new(ell: u32, n: u32) -> Result<Self> {
        if ell == 0 {
            return domain("boson spin must be at least 1");
        }
        if ell > MAX_ELL || n > MAX_N {
            return Err(Error::Capacity(format!(
                "shape (ell={ell}, n={n}) exceeds limits ell <= {MAX_ELL}, n <= {MAX_N}"
            )));
        }
        Ok(Self { ell, n })
    }

    #[inline]
    pub fn ell(&self) -> u32 {
        self.ell
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    /// Number of single-particle substates, 2ℓ+1.
    #[inline]
    pub fn substates(&self) -> usize {
        2 * self.ell as usize + 1
    }

    /// Maximum total spin, Nℓ.
    #[inline]
    pub fn j_max(&self) -> u32 {
        self.n * self.ell
    }

    /// Number of pairs, N(N-1)/2.
    pub fn pair_count(&self) -> f64 {
        let n = self.n as f64;
        0.5 * n * (n - 1.0)
    }
}

/// Exact binomial coefficient with overflow detection.
fn binomial(n: u64, k: u64) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step.
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Dimension of the full symmetric Fock space, (2ℓ+N)! / ((2ℓ)! N!).
pub fn hilbert_dim(shape: SystemShape) -> u128 {
    let two_l = 2 * shape.ell as u64;
    binomial(two_l + shape.n as u64, shape.n as u64).expect("bounded by MAX_ELL, MAX_N")
}

/// Distribution of the total magnetic projection.
///
/// Entry `i` holds the number of occupation vectors with `M = i - Nℓ`.
/// Computed by a dynamic program over substates (unbounded knapsack on
/// particle count and shifted projection).
pub fn m_distribution(shape: SystemShape) -> Vec<u128> {
    let n = shape.n as usize;
    let width = 2 * shape.j_max() as usize + 1;
    // table[k][s]: vectors with k particles and shifted projection s = Σ (m+ℓ) n_m
    let mut table = vec![vec![0u128; width]; n + 1];
    table[0][0] = 1;
    for shift in 0..=(2 * shape.ell as usize) {
        for k in 1..=n {
            let (lo, hi) = table.split_at_mut(k);
            let prev = &lo[k - 1];
            let cur = &mut hi[0];
            for s in shift..width {
                let add = prev[s - shift];
                if add != 0 {
                    cur[s] = cur[s].checked_add(add).expect("counts bounded by hilbert_dim");
                }
            }
        }
    }
    table.swap_remove(n)
}

/// Count of states with total projection `m` (zero outside the range).
pub fn m_count(shape: SystemShape, m: i64) -> u128 {
    let jm = shape.j_max() as i64;
    if m.abs() > jm {
        return 0;
    }
    m_distribution(shape)[(m + jm) as usize]
}

/// Number of multiplets with total spin `j`.
pub fn spin_dim(shape: SystemShape, j: u32) -> Result<u128> {
    if j > shape.j_max() {
        return domain(format!("J={j} exceeds J_max={}", shape.j_max()));
    }
    let dist = m_distribution(shape);
    Ok(spin_dim_from(&dist, shape.j_max(), j))
}

fn spin_dim_from(dist: &[u128], j_max: u32, j: u32) -> u128 {
    let at = |m: u32| -> u128 {
        if m > j_max {
            0
        } else {
            dist[(m + j_max) as usize]
        }
    };
    at(j) - at(j + 1)
}

/// Three-boson spin counts from the recurrence in ℓ.
///
/// `D(ℓ, J) = D(ℓ-2, J) + [ℓ <= J <= 3ℓ and J != 3ℓ-1]`, started from
/// ℓ=1 (J ∈ {1, 3}) for odd ℓ and ℓ=2 (J ∈ {0, 2, 3, 4, 6}) for even ℓ.
pub fn spin_dim_three(ell: u32, j: u32) -> Result<u32> {
    if ell == 0 {
        return domain("boson spin must be at least 1");
    }
    if j > 3 * ell {
        return domain(format!("J={j} exceeds 3ℓ={}", 3 * ell));
    }
    let mut count = match ell % 2 {
        1 => u32::from(j == 1 || j == 3),
        _ => u32::from(matches!(j, 0 | 2 | 3 | 4 | 6)),
    };
    let mut l = if ell % 2 == 1 { 1 } else { 2 };
    while l < ell {
        l += 2;
        if (l..=3 * l).contains(&j) && j != 3 * l - 1 {
            count += 1;
        }
    }
    Ok(count)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FractionMode {
    Exact,
    Gaussian,
}

/// Complete spin-multiplicity table of a system.
#[derive(Debug, Clone, Serialize)]
pub struct SpinDistribution {
    pub shape: SystemShape,
    /// `counts[J]` = number of multiplets with spin J, J = 0..=Nℓ.
    pub counts: Vec<u128>,
    /// Total number of multiplets, Σ_J counts[J].
    pub total: u128,
    /// `m_counts[i]` = number of states with M = i - Nℓ.
    pub m_counts: Vec<u128>,
    /// Width parameter of the Gaussian approximation, 1 / (2 <M^2>).
    pub beta_fit: f64,
}

impl SpinDistribution {
    pub fn new(shape: SystemShape) -> Self {
        let m_counts = m_distribution(shape);
        let j_max = shape.j_max();
        let counts: Vec<u128> = (0..=j_max)
            .map(|j| spin_dim_from(&m_counts, j_max, j))
            .collect();
        let total = counts.iter().sum();
        let dim = m_counts.iter().sum::<u128>() as f64;
        let second_moment = m_counts
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let m = i as f64 - j_max as f64;
                m * m * c as f64
            })
            .sum::<f64>()
            / dim;
        let beta_fit = if second_moment > 0.0 {
            0.5 / second_moment
        } else {
            f64::INFINITY
        };
        Self {
            shape,
            counts,
            total,
            m_counts,
            beta_fit,
        }
    }

    pub fn count(&self, j: u32) -> u128 {
        self.counts.get(j as usize).copied().unwrap_or(0)
    }

    /// Fraction of multiplets with spin `j`, exact or from the Gaussian model
    /// `β (2J+1) exp(-β J (J+1))`.
    pub fn fraction(&self, j: u32, mode: FractionMode) -> f64 {
        match mode {
            FractionMode::Exact => self.count(j) as f64 / self.total as f64,
            FractionMode::Gaussian => {
                let b = self.beta_fit;
                let jf = j as f64;
                b * (2.0 * jf + 1.0) * (-b * jf * (jf + 1.0)).exp()
            }
        }
    }
}

/// Fraction of multiplets with spin `j`.
pub fn spin_fraction(shape: SystemShape, j: u32, mode: FractionMode) -> Result<f64> {
    if j > shape.j_max() {
        return domain(format!("J={j} exceeds J_max={}", shape.j_max()));
    }
    Ok(SpinDistribution::new(shape).fraction(j, mode))
}
