//! Exact rational helpers shared by the combinatorial modules.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary precision rational number.
pub type Q = BigRational;

/// A point with exact rational coordinates.
pub type QVector = Vec<Q>;

pub fn q_int(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

pub fn q_frac(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn q_vec(coords: &[i64]) -> QVector {
    coords.iter().map(|&c| q_int(c)).collect()
}

/// Exact conversion of a finite float; every finite `f64` is a dyadic rational.
pub fn q_from_f64(x: f64) -> Result<Q> {
    Q::from_float(x).ok_or_else(|| Error::Numeric(format!("cannot represent {x} as a rational")))
}

pub fn q_to_f64(q: &Q) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // Falls back to a ratio of truncated floats for huge operands.
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Formats as `p/q`, always with an explicit denominator (`3` becomes `3/1`).
pub fn format_q(q: &Q) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `p/q` or a plain integer.
pub fn parse_q(text: &str) -> Result<Q> {
    let text = text.trim();
    let parse_int = |s: &str| -> Result<BigInt> {
        s.trim()
            .parse::<BigInt>()
            .map_err(|_| Error::Parse(format!("invalid rational `{text}`")))
    };
    match text.split_once('/') {
        Some((n, d)) => {
            let d = parse_int(d)?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in `{text}`")));
            }
            Ok(Q::new(parse_int(n)?, d))
        }
        None => Ok(Q::from_integer(parse_int(text)?)),
    }
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

pub fn q_pow(q: &Q, exp: usize) -> Q {
    (0..exp).fold(Q::one(), |acc, _| acc * q)
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| acc + x * y)
}

/// Exact determinant by Gaussian elimination over `Q`.
pub fn determinant(mut rows: Vec<QVector>) -> Q {
    let n = rows.len();
    let mut det = Q::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !rows[r][col].is_zero()) else {
            return Q::zero();
        };
        if pivot != col {
            rows.swap(pivot, col);
            det = -det;
        }
        let p = rows[col][col].clone();
        det *= &p;
        for r in col + 1..n {
            if rows[r][col].is_zero() {
                continue;
            }
            let factor = &rows[r][col] / &p;
            for c in col..n {
                let delta = &factor * &rows[col][c];
                rows[r][c] -= delta;
            }
        }
    }
    det
}

/// Reduced row echelon form in place; returns the pivot columns.
pub fn row_reduce(rows: &mut [QVector]) -> Vec<usize> {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for x in rows[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let factor = rows[i][c].clone();
                for j in 0..ncols {
                    let delta = &factor * &rows[r][j];
                    rows[i][j] -= delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Basis of the right null space `{x : M x = 0}` of a matrix given by rows.
pub fn null_space(rows: &[QVector], ncols: usize) -> Vec<QVector> {
    let mut m: Vec<QVector> = rows.to_vec();
    let pivots = row_reduce(&mut m);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); ncols];
            v[f] = Q::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[row][f].clone();
            }
            v
        })
        .collect()
}

/// Scales a nonzero vector so its entries are coprime integers.
pub fn primitive_integer(v: &[Q]) -> QVector {
    use num_integer::Integer;
    let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v
        .iter()
        .map(|x| (x * Q::from_integer(lcm.clone())).to_integer())
        .collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return v.to_vec();
    }
    ints.into_iter().map(|x| Q::from_integer(x / &g)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_with_explicit_denominator() {
        assert_eq!(format_q(&q_int(3)), "3/1");
        assert_eq!(format_q(&q_frac(6, 9)), "2/3");
        assert_eq!(format_q(&q_frac(-1, 2)), "-1/2");
    }

    #[test]
    fn parse_round_trip() {
        assert_eq!(parse_q("3/1").unwrap(), q_int(3));
        assert_eq!(parse_q(" -4/6 ").unwrap(), q_frac(-2, 3));
        assert_eq!(parse_q("7").unwrap(), q_int(7));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("x").is_err());
    }

    #[test]
    fn determinant_small() {
        let m = vec![q_vec(&[2, 1]), q_vec(&[1, 3])];
        assert_eq!(determinant(m), q_int(5));
        let singular = vec![q_vec(&[1, 2, 3]), q_vec(&[2, 4, 6]), q_vec(&[0, 1, 1])];
        assert_eq!(determinant(singular), q_int(0));
    }

    #[test]
    fn null_space_of_plane() {
        let rows = vec![q_vec(&[1, 1, 1])];
        let ns = null_space(&rows, 3);
        assert_eq!(ns.len(), 2);
        for v in ns {
            assert!(dot(&v, &rows[0]).is_zero());
        }
    }

    #[test]
    fn floats_convert_exactly() {
        let q = q_from_f64(0.375).unwrap();
        assert_eq!(q, q_frac(3, 8));
        assert!(q_from_f64(f64::NAN).is_err());
    }
}
