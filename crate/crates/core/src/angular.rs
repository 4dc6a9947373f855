//! Clebsch-Gordan coefficients for integer spins and the normalized
//! boson-pair coefficient tables built from them.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::combinatorics::MAX_ELL;
use crate::error::{domain, Result};

fn factorial(n: i64) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// Clebsch-Gordan coefficient `<j1 m1 j2 m2 | J M>` for integer spins,
/// Condon-Shortley phase convention.
///
/// Evaluated with the Racah single-sum formula in exact rational
/// arithmetic; the square root is taken only at the final conversion.
/// Selection-rule violations give 0.
pub fn clebsch_gordan(j1: i64, m1: i64, j2: i64, m2: i64, j: i64, m: i64) -> f64 {
    if j1 < 0 || j2 < 0 || j < 0 {
        return 0.0;
    }
    if m1 + m2 != m || m1.abs() > j1 || m2.abs() > j2 || m.abs() > j {
        return 0.0;
    }
    if j < (j1 - j2).abs() || j > j1 + j2 {
        return 0.0;
    }

    let prefactor = BigRational::new(
        BigInt::from(2 * j + 1)
            * factorial(j + j1 - j2)
            * factorial(j - j1 + j2)
            * factorial(j1 + j2 - j)
            * factorial(j + m)
            * factorial(j - m)
            * factorial(j1 - m1)
            * factorial(j1 + m1)
            * factorial(j2 - m2)
            * factorial(j2 + m2),
        factorial(j1 + j2 + j + 1),
    );

    let k_min = 0.max(j2 - j - m1).max(j1 - j + m2);
    let k_max = (j1 + j2 - j).min(j1 - m1).min(j2 + m2);
    let mut sum = BigRational::zero();
    for k in k_min..=k_max {
        let denom = factorial(k)
            * factorial(j1 + j2 - j - k)
            * factorial(j1 - m1 - k)
            * factorial(j2 + m2 - k)
            * factorial(j - j2 + m1 + k)
            * factorial(j - j1 - m2 + k);
        let term = BigRational::new(BigInt::one(), denom);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return 0.0;
    }
    let sign = if sum.is_negative() { -1.0 } else { 1.0 };
    let squared = &sum * &sum * prefactor;
    let value = squared.numer().to_f64().unwrap_or(f64::NAN) / squared.denom().to_f64().unwrap_or(f64::NAN);
    sign * value.sqrt()
}

fn triangle(a: i64, b: i64, c: i64) -> bool {
    c >= (a - b).abs() && c <= a + b
}

/// Wigner 6j symbol `{j1 j2 j3; j4 j5 j6}` for integer spins, exact Racah sum.
pub fn six_j(j1: i64, j2: i64, j3: i64, j4: i64, j5: i64, j6: i64) -> f64 {
    let triads = [(j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)];
    if [j1, j2, j3, j4, j5, j6].iter().any(|&j| j < 0) || triads.iter().any(|&(a, b, c)| !triangle(a, b, c)) {
        return 0.0;
    }
    let delta2 = |a: i64, b: i64, c: i64| {
        BigRational::new(
            factorial(a + b - c) * factorial(a - b + c) * factorial(-a + b + c),
            factorial(a + b + c + 1),
        )
    };
    let prefactor = triads
        .iter()
        .fold(BigRational::one(), |acc, &(a, b, c)| acc * delta2(a, b, c));
    let sums: Vec<i64> = triads.iter().map(|&(a, b, c)| a + b + c).collect();
    let tops = [j1 + j2 + j4 + j5, j2 + j3 + j5 + j6, j3 + j1 + j6 + j4];
    let t_min = *sums.iter().max().unwrap();
    let t_max = *tops.iter().min().unwrap();
    let mut sum = BigRational::zero();
    for t in t_min..=t_max {
        let denom = sums.iter().map(|&s| factorial(t - s)).product::<BigInt>()
            * tops.iter().map(|&s| factorial(s - t)).product::<BigInt>();
        let term = BigRational::new(factorial(t + 1), denom);
        if t % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return 0.0;
    }
    let sign = if sum.is_negative() { -1.0 } else { 1.0 };
    let squared = &sum * &sum * prefactor;
    let value = squared.numer().to_f64().unwrap_or(f64::NAN) / squared.denom().to_f64().unwrap_or(f64::NAN);
    sign * value.sqrt()
}

/// Normalized pair coefficients of `P†_{LM} = Σ c_{m1 m2} a†_{m1} a†_{m2}`.
///
/// Ordered pairs `(m1, m2)` with `m1 + m2 = M`; each coefficient is
/// `<ℓ m1 ℓ m2 | L M> / √2`, which makes `P†_{LM}|0>` a unit vector.
/// Odd `L` is rejected: its symmetric part vanishes identically.
pub fn pair_coefficients(ell: u32, l: u32, m: i32) -> Result<Vec<((i32, i32), f64)>> {
    if l > 2 * ell {
        return domain(format!("pair spin L={l} exceeds 2ℓ={}", 2 * ell));
    }
    if m.unsigned_abs() > l {
        return domain(format!("|M|={} exceeds L={l}", m.abs()));
    }
    let e = ell as i64;
    let raw: Vec<((i32, i32), f64)> = (-e..=e)
        .filter_map(|m1| {
            let m2 = m as i64 - m1;
            (m2.abs() <= e).then(|| {
                let c = clebsch_gordan(e, m1, e, m2, l as i64, m as i64);
                ((m1 as i32, m2 as i32), c / std::f64::consts::SQRT_2)
            })
        })
        .collect();
    if l % 2 == 1 {
        let sym: f64 = raw
            .iter()
            .map(|&((m1, m2), c)| {
                let swapped = raw
                    .iter()
                    .find(|&&(p, _)| p == (m2, m1))
                    .map_or(0.0, |&(_, c2)| c2);
                (c + swapped).abs()
            })
            .sum();
        debug_assert!(sym < 1e-12, "symmetric part of odd-L pair must vanish");
        return domain(format!("identical bosons forbid odd pair spin L={l}"));
    }
    Ok(raw)
}

/// Memoized pair coefficients for one boson spin.
///
/// `get(L, M)` returns the ordered-pair coefficients for even L.
#[derive(Debug)]
pub struct CouplingTable {
    ell: u32,
    // entries[L/2][M + L]
    entries: Vec<Vec<Vec<((i32, i32), f64)>>>,
}

impl CouplingTable {
    fn build(ell: u32) -> Self {
        let entries = (0..=ell)
            .map(|half| {
                let l = 2 * half;
                (-(l as i32)..=l as i32)
                    .map(|m| pair_coefficients(ell, l, m).expect("even L within range"))
                    .collect()
            })
            .collect();
        Self { ell, entries }
    }

    /// Shared table for `ell`; built once, lock-free afterwards.
    pub fn for_ell(ell: u32) -> &'static CouplingTable {
        static TABLES: [OnceLock<CouplingTable>; MAX_ELL as usize + 1] =
            [const { OnceLock::new() }; MAX_ELL as usize + 1];
        assert!((1..=MAX_ELL).contains(&ell), "ell out of range");
        TABLES[ell as usize].get_or_init(|| CouplingTable::build(ell))
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn get(&self, l: u32, m: i32) -> &[((i32, i32), f64)] {
        debug_assert!(l % 2 == 0);
        &self.entries[(l / 2) as usize][(m + l as i32) as usize]
    }

    /// Coefficient for a single ordered pair (0 if `m1 + m2 != M`).
    pub fn coefficient(&self, l: u32, m1: i32, m2: i32) -> f64 {
        let m = m1 + m2;
        if m.unsigned_abs() > l {
            return 0.0;
        }
        self.get(l, m)
            .iter()
            .find(|&&(p, _)| p == (m1, m2))
            .map_or(0.0, |&(_, c)| c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_j_values() {
        assert!((six_j(1, 1, 1, 1, 1, 1) - 1.0 / 6.0).abs() < 1e-15);
        assert!((six_j(2, 2, 2, 2, 2, 2) + 3.0 / 70.0).abs() < 1e-15);
        assert_eq!(six_j(1, 1, 3, 1, 1, 1), 0.0);
        // {a b c; b a 0} = (-1)^(a+b+c) / sqrt((2a+1)(2b+1))
        assert!((six_j(3, 2, 4, 2, 3, 0) + 1.0 / 35f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn six_j_orthogonality() {
        let (a, b, c, d) = (4, 4, 4, 4);
        for k in 0..=8 {
            for kp in 0..=8 {
                let s: f64 = (0..=8)
                    .map(|x| (2 * x + 1) as f64 * (2 * k + 1) as f64 * six_j(a, b, x, c, d, k) * six_j(a, b, x, c, d, kp))
                    .sum();
                let want = if k == kp { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-12, "{k} {kp}: {s}");
            }
        }
    }

    /// Racah formula evaluated directly in floating point.
    fn cg_float(j1: i64, m1: i64, j2: i64, m2: i64, j: i64, m: i64) -> f64 {
        if m1 + m2 != m || j < (j1 - j2).abs() || j > j1 + j2 {
            return 0.0;
        }
        if m1.abs() > j1 || m2.abs() > j2 || m.abs() > j {
            return 0.0;
        }
        let f = |n: i64| -> f64 { (1..=n).map(|k| k as f64).product() };
        let pre = ((2 * j + 1) as f64 * f(j + j1 - j2) * f(j - j1 + j2) * f(j1 + j2 - j)
            / f(j1 + j2 + j + 1))
        .sqrt()
            * (f(j + m) * f(j - m) * f(j1 - m1) * f(j1 + m1) * f(j2 - m2) * f(j2 + m2)).sqrt();
        let mut s = 0.0;
        for k in 0..=(j1 + j2 + j) {
            let args = [
                k,
                j1 + j2 - j - k,
                j1 - m1 - k,
                j2 + m2 - k,
                j - j2 + m1 + k,
                j - j1 - m2 + k,
            ];
            if args.iter().any(|&a| a < 0) {
                continue;
            }
            let d: f64 = args.iter().map(|&a| f(a)).product();
            s += if k % 2 == 0 { 1.0 } else { -1.0 } / d;
        }
        pre * s
    }

    #[test]
    fn stretched_and_closed_forms() {
        for l in 1..=8 {
            assert!((clebsch_gordan(l, l, l, l, 2 * l, 2 * l) - 1.0).abs() < 1e-14);
        }
        assert!((clebsch_gordan(2, 0, 2, 0, 0, 0) - 1.0 / 5f64.sqrt()).abs() < 1e-14);
        for j in 0..=6 {
            for m in -j..=j {
                let expected = if (j - m) % 2 == 0 { 1.0 } else { -1.0 } / ((2 * j + 1) as f64).sqrt();
                assert!((clebsch_gordan(j, m, j, -m, 0, 0) - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn selection_rules_give_zero() {
        assert_eq!(clebsch_gordan(2, 1, 2, 1, 4, 1), 0.0);
        assert_eq!(clebsch_gordan(2, 0, 2, 0, 5, 0), 0.0);
        assert_eq!(clebsch_gordan(1, 2, 1, 0, 1, 2), 0.0);
    }

    #[test]
    fn orthonormality_three_three() {
        let (j1, j2) = (3, 3);
        for jj in 0..=6 {
            for jp in 0..=6 {
                for mm in -jj..=jj {
                    for mp in -jp..=jp {
                        let mut s = 0.0;
                        for m1 in -j1..=j1 {
                            for m2 in -j2..=j2 {
                                s += clebsch_gordan(j1, m1, j2, m2, jj, mm)
                                    * clebsch_gordan(j1, m1, j2, m2, jp, mp);
                            }
                        }
                        let expected = f64::from(jj == jp && mm == mp);
                        assert!((s - expected).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn matches_float_racah() {
        for j1 in 0..=7i64 {
            for j2 in 0..=7i64 {
                for j in (j1 - j2).abs()..=(j1 + j2) {
                    for m1 in -j1..=j1 {
                        for m2 in -j2..=j2 {
                            let m = m1 + m2;
                            let a = clebsch_gordan(j1, m1, j2, m2, j, m);
                            let b = cg_float(j1, m1, j2, m2, j, m);
                            assert!((a - b).abs() < 1e-12, "{j1} {m1} {j2} {m2} {j} {m}: {a} vs {b}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn large_spin_still_unitary() {
        // cancellation-prone region: ℓ = 12 pairs
        let ell = 12;
        for l in [0i64, 12, 24] {
            let s: f64 = (-ell..=ell)
                .map(|m1| clebsch_gordan(ell, m1, ell, -m1, l, 0).powi(2))
                .sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pair_normalization() {
        for ell in 1..=6u32 {
            for l in (0..=2 * ell).step_by(2) {
                for m in -(l as i32)..=l as i32 {
                    let c = pair_coefficients(ell, l, m).unwrap();
                    // <0|P P†|0> = Σ c_{m1m2} (c_{m1m2} + c_{m2m1})
                    let norm: f64 = c
                        .iter()
                        .map(|&((m1, m2), v)| {
                            let sw = c.iter().find(|&&(p, _)| p == (m2, m1)).unwrap().1;
                            v * (v + sw)
                        })
                        .sum();
                    assert!((norm - 1.0).abs() < 1e-12);
                    for &((m1, m2), v) in &c {
                        let sw = c.iter().find(|&&(p, _)| p == (m2, m1)).unwrap().1;
                        assert!((v - sw).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn pair_special_cases() {
        for ell in 1..=5u32 {
            let top = pair_coefficients(ell, 2 * ell, 2 * ell as i32).unwrap();
            assert_eq!(top.len(), 1);
            assert!((top[0].1 - 1.0 / 2f64.sqrt()).abs() < 1e-14);
        }
        let c = pair_coefficients(2, 0, 0).unwrap();
        for ((m1, m2), v) in c {
            assert_eq!(m1, -m2);
            let sign = if (2 - m1) % 2 == 0 { 1.0 } else { -1.0 };
            assert!((v - sign / (5f64.sqrt() * 2f64.sqrt())).abs() < 1e-14);
        }
        assert!(pair_coefficients(3, 3, 0).is_err());
        assert!(pair_coefficients(3, 8, 0).is_err());
    }

    #[test]
    fn pair_completeness() {
        // Σ_{L even, M} 2 c^{LM}_{m1 m2} c^{LM}_{m3 m4} = symmetrized identity
        let ell = 3u32;
        let table = CouplingTable::for_ell(ell);
        let e = ell as i32;
        for m1 in -e..=e {
            for m2 in -e..=e {
                for m3 in -e..=e {
                    for m4 in -e..=e {
                        if m1 + m2 != m3 + m4 {
                            continue;
                        }
                        let mut s = 0.0;
                        for l in (0..=2 * ell).step_by(2) {
                            s += 2.0 * table.coefficient(l, m1, m2) * table.coefficient(l, m3, m4);
                        }
                        let expected = 0.5
                            * (f64::from(m1 == m3 && m2 == m4) + f64::from(m1 == m4 && m2 == m3));
                        assert!((s - expected).abs() < 1e-12);
                    }
                }
            }
        }
    }
}
