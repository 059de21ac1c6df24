//! Exact-sign orientation predicates.
//!
//! Three stages: a floating-point evaluation with a conservative forward
//! error bound; an exact integer determinant after per-column power-of-two
//! scaling (every f64 is a dyadic rational, so this is lossless); and, for
//! genuinely degenerate inputs, symbolic perturbation ("simulation of
//! simplicity"). Point p's coordinate c is perturbed by tau^(2^(p*d + c))
//! for an infinitesimal tau > 0, so perturbation exponents of distinct cell
//! subsets never collide and the first nonvanishing expansion coefficient
//! decides the sign.

use num_bigint::BigInt;
use num_traits::{One, Zero};

/// Conservative relative error factor for the f64 determinant filter
/// (hundreds of ulps; the true bound for n <= 6 is far smaller).
const FILTER_FACTOR: f64 = 1e-13;

/// Exact dyadic decomposition x = m * 2^e with odd m (m = 0 iff x = 0).
fn decode(x: f64) -> (i64, i64) {
    assert!(x.is_finite(), "non-finite coordinate");
    if x == 0.0 {
        return (0, 0);
    }
    let bits = x.to_bits();
    let neg = bits >> 63 == 1;
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let frac = (bits & ((1u64 << 52) - 1)) as i64;
    let (mut m, mut e) = if biased == 0 { (frac, -1074) } else { (frac | (1 << 52), biased - 1075) };
    let tz = m.trailing_zeros() as i64;
    m >>= tz;
    e += tz;
    (if neg { -m } else { m }, e)
}

/// Scales each column by a power of two so all entries become integers.
/// Preserves the sign of the determinant (and rank).
fn scaled_integer_matrix(rows: &[Vec<f64>]) -> Vec<Vec<BigInt>> {
    let n_rows = rows.len();
    let n_cols = rows[0].len();
    let decoded: Vec<Vec<(i64, i64)>> =
        rows.iter().map(|r| r.iter().map(|&x| decode(x)).collect()).collect();
    let mut out = vec![vec![BigInt::zero(); n_cols]; n_rows];
    for c in 0..n_cols {
        let min_e = (0..n_rows)
            .filter(|&r| decoded[r][c].0 != 0)
            .map(|r| decoded[r][c].1)
            .min();
        let Some(min_e) = min_e else { continue };
        for r in 0..n_rows {
            let (m, e) = decoded[r][c];
            if m != 0 {
                out[r][c] = BigInt::from(m) << ((e - min_e) as usize);
            }
        }
    }
    out
}

fn bigint_det(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = BigInt::zero();
    for r in 0..n {
        if m[r][0].is_zero() {
            continue;
        }
        let minor: Vec<Vec<BigInt>> =
            (0..n).filter(|&i| i != r).map(|i| m[i][1..].to_vec()).collect();
        let term = &m[r][0] * bigint_det(&minor);
        if r % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

/// (determinant, sum of absolute values of all expansion terms).
fn f64_det_with_magnitude(m: &[Vec<f64>]) -> (f64, f64) {
    let n = m.len();
    if n == 1 {
        return (m[0][0], m[0][0].abs());
    }
    let mut det = 0.0;
    let mut mag = 0.0;
    for r in 0..n {
        let a = m[r][0];
        if a == 0.0 {
            continue;
        }
        let sub: Vec<Vec<f64>> = (0..n).filter(|&i| i != r).map(|i| m[i][1..].to_vec()).collect();
        let (sd, sm) = f64_det_with_magnitude(&sub);
        det += if r % 2 == 0 { a * sd } else { -a * sd };
        mag += a.abs() * sm;
    }
    (det, mag)
}

fn homogeneous_rows(points: &[(usize, &[f64])]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|(_, c)| {
            let mut row = c.to_vec();
            row.push(1.0);
            row
        })
        .collect()
}

/// Sign of the homogeneous orientation determinant via stages 1 and 2 only:
/// -1, 0, or +1, with 0 meaning exactly degenerate.
pub fn orientation_exact_sign(points: &[(usize, &[f64])]) -> i8 {
    let rows = homogeneous_rows(points);
    let (det, mag) = f64_det_with_magnitude(&rows);
    if det.abs() > mag * FILTER_FACTOR {
        return if det > 0.0 { 1 } else { -1 };
    }
    let exact = bigint_det(&scaled_integer_matrix(&rows));
    match exact.sign() {
        num_bigint::Sign::Plus => 1,
        num_bigint::Sign::Minus => -1,
        num_bigint::Sign::NoSign => 0,
    }
}

/// Full three-stage orientation predicate. Each point carries its global
/// index, which pins its symbolic perturbation; indices must be pairwise
/// distinct or the no-cancellation guarantee breaks. Never returns 0.
pub fn orientation(points: &[(usize, &[f64])]) -> i8 {
    debug_assert!(
        {
            let mut idx: Vec<usize> = points.iter().map(|p| p.0).collect();
            idx.sort_unstable();
            idx.windows(2).all(|w| w[0] != w[1])
        },
        "orientation called with a repeated point index"
    );
    let s = orientation_exact_sign(points);
    if s != 0 {
        return s;
    }
    let rows = homogeneous_rows(points);
    let mat = scaled_integer_matrix(&rows);
    let d = points.len() - 1;
    let mut subsets = enumerate_partial_permutations(points.len(), d);
    // Perturbation exponent of a subset is sum of 2^rank over its cells;
    // comparing rank lists sorted descending, lexicographically, orders the
    // subsets by that sum (the largest differing rank decides).
    let key = |cells: &Vec<(usize, usize)>| -> Vec<u64> {
        let mut ranks: Vec<u64> =
            cells.iter().map(|&(r, c)| (points[r].0 as u64) * d as u64 + c as u64).collect();
        ranks.sort_unstable_by(|a, b| b.cmp(a));
        ranks
    };
    subsets.sort_by_cached_key(key);
    for cells in &subsets {
        let coef = laplace_coefficient(&mat, cells);
        match coef.sign() {
            num_bigint::Sign::Plus => return 1,
            num_bigint::Sign::Minus => return -1,
            num_bigint::Sign::NoSign => continue,
        }
    }
    unreachable!("a subset covering all coordinate columns has coefficient ±1");
}

/// All nonempty sets of matrix cells (row, col) with distinct rows and
/// distinct columns, rows in 0..n, cols restricted to 0..n_cols.
fn enumerate_partial_permutations(n: usize, n_cols: usize) -> Vec<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    let mut used = vec![false; n_cols];
    let mut cur = Vec::new();
    fn rec(
        row: usize,
        n: usize,
        n_cols: usize,
        used: &mut Vec<bool>,
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if row == n {
            if !cur.is_empty() {
                out.push(cur.clone());
            }
            return;
        }
        rec(row + 1, n, n_cols, used, cur, out);
        for c in 0..n_cols {
            if !used[c] {
                used[c] = true;
                cur.push((row, c));
                rec(row + 1, n, n_cols, used, cur, out);
                cur.pop();
                used[c] = false;
            }
        }
    }
    rec(0, n, n_cols, &mut used, &mut cur, &mut out);
    out
}

/// Coefficient of the product of the perturbations at `cells` in the
/// expansion of det(A + perturbations): the generalized Laplace term
/// (-1)^(sum rows + sum cols) * sgn(column sequence) * det(complement).
fn laplace_coefficient(mat: &[Vec<BigInt>], cells: &[(usize, usize)]) -> BigInt {
    let n = mat.len();
    let rows: Vec<usize> = cells.iter().map(|c| c.0).collect();
    let cols: Vec<usize> = cells.iter().map(|c| c.1).collect();
    let minor: Vec<Vec<BigInt>> = (0..n)
        .filter(|r| !rows.contains(r))
        .map(|r| (0..n).filter(|c| !cols.contains(c)).map(|c| mat[r][c].clone()).collect())
        .collect();
    let det = if minor.is_empty() { BigInt::one() } else { bigint_det(&minor) };
    if det.is_zero() {
        return det;
    }
    let mut inversions = 0usize;
    for a in 0..cols.len() {
        for b in (a + 1)..cols.len() {
            if cols[a] > cols[b] {
                inversions += 1;
            }
        }
    }
    let parity = rows.iter().sum::<usize>() + cols.iter().sum::<usize>() + inversions;
    if parity % 2 == 0 {
        det
    } else {
        -det
    }
}

/// Exact affine rank of a point set: the rank of the homogeneous matrix
/// [coords | 1], so full-dimensional in R^d means rank d + 1.
pub fn affine_rank(points: &[&[f64]]) -> usize {
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|c| {
            let mut row = c.to_vec();
            row.push(1.0);
            row
        })
        .collect();
    bigint_rank(scaled_integer_matrix(&rows))
}

/// Fraction-free Gaussian elimination rank over the integers.
fn bigint_rank(mut m: Vec<Vec<BigInt>>) -> usize {
    let n_rows = m.len();
    if n_rows == 0 {
        return 0;
    }
    let n_cols = m[0].len();
    let mut rank = 0;
    let mut row = 0;
    for col in 0..n_cols {
        let Some(p) = (row..n_rows).find(|&r| !m[r][col].is_zero()) else { continue };
        m.swap(row, p);
        for r in (row + 1)..n_rows {
            if m[r][col].is_zero() {
                continue;
            }
            let f1 = m[row][col].clone();
            let f2 = m[r][col].clone();
            for c in col..n_cols {
                m[r][c] = &m[r][c] * &f1 - &m[row][c] * &f2;
            }
        }
        rank += 1;
        row += 1;
        if row == n_rows {
            break;
        }
    }
    rank
}
