use std::path::Path;

use maxlat_core::{Error, Result, TorusPoint};

enum Token {
    Rational(i64, u64),
    Real(f64),
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn token(s: &str) -> Result<Token> {
    let bad = || Error::InvalidArgument(format!("bad frequency coordinate `{s}`"));
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| bad())?;
        let q: u64 = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        return Ok(Token::Rational(p, q));
    }
    if let Ok(k) = s.parse::<i64>() {
        return Ok(Token::Rational(k, 1));
    }
    let x: f64 = s.parse().map_err(|_| bad())?;
    if !x.is_finite() {
        return Err(bad());
    }
    Ok(Token::Real(x))
}

/// A frequency from inline text or a file of the same form. All-rational
/// input stays exact over the least common denominator; one coordinate is
/// broadcast to all `d`.
pub fn parse_xi(spec: &str, d: u32) -> Result<TorusPoint> {
    let text = if Path::new(spec).is_file() {
        std::fs::read_to_string(spec)?
    } else {
        spec.to_string()
    };
    let mut tokens: Vec<Token> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(token)
        .collect::<Result<_>>()?;
    if tokens.len() == 1 && d > 1 {
        let t = tokens.pop().expect("one token");
        tokens = (0..d)
            .map(|_| match t {
                Token::Rational(p, q) => Token::Rational(p, q),
                Token::Real(x) => Token::Real(x),
            })
            .collect();
    }
    if tokens.len() != d as usize {
        return Err(Error::InvalidArgument(format!(
            "frequency has {} coordinates, expected {d}",
            tokens.len()
        )));
    }
    let rational: Option<Vec<(i64, u64)>> = tokens
        .iter()
        .map(|t| match t {
            Token::Rational(p, q) => Some((*p, *q)),
            Token::Real(_) => None,
        })
        .collect();
    match rational {
        Some(pq) => {
            let mut m = 1u64;
            for &(_, q) in &pq {
                m = m / gcd(m, q) * q;
                if m > 1 << 40 {
                    return Err(Error::InvalidArgument("common denominator too large".into()));
                }
            }
            let ks: Vec<i64> = pq.iter().map(|&(p, q)| p * (m / q) as i64).collect();
            TorusPoint::rational(&ks, m)
        }
        None => Ok(TorusPoint::new(
            tokens
                .iter()
                .map(|t| match t {
                    Token::Rational(p, q) => *p as f64 / *q as f64,
                    Token::Real(x) => *x,
                })
                .collect(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms() {
        let x = parse_xi("1/2,1/3", 2).unwrap();
        let q = x.rational_form().unwrap();
        assert_eq!((q.numerators.clone(), q.denom), (vec![-3, 2], 6));
        assert_eq!(parse_xi("0", 3).unwrap(), TorusPoint::zero(3));
        assert!(parse_xi("0.25, -0.1", 2).unwrap().rational_form().is_none());
        assert!(parse_xi("1,2,3", 2).is_err());
        assert!(parse_xi("1/0", 1).is_err());
        assert!(parse_xi("x", 1).is_err());
    }
}
