//! Shortest decimal strings for doubles, optionally rounded outward.
//!
//! A `Down` string never exceeds the value and an `Up` string never falls
//! below it, so `[down(lo), up(hi)]` encloses `[lo, hi]`. Every string also
//! parses back to the original double.

use num_bigint::BigUint;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rounding {
    Down,
    Up,
    Nearest,
}

/// Lower interval endpoint.
pub fn down(x: f64) -> String {
    format(x, Rounding::Down)
}

/// Upper interval endpoint.
pub fn up(x: f64) -> String {
    format(x, Rounding::Up)
}

/// Plain shortest round-trip string.
pub fn nearest(x: f64) -> String {
    format(x, Rounding::Nearest)
}

pub fn format(x: f64, rounding: Rounding) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let neg = x < 0.0;
    let (digits, scale) = exact_digits(x.abs());
    let away = match rounding {
        Rounding::Down => neg,
        Rounding::Up => !neg,
        Rounding::Nearest => false,
    };
    for p in 1..=digits.len() {
        let (head, k) = if rounding == Rounding::Nearest {
            nearest_digits(x.abs(), p)
        } else {
            directed_digits(&digits, scale, p, away)
        };
        let s = render(neg, &head, k);
        if s.parse::<f64>() == Ok(x) {
            return s;
        }
    }
    unreachable!("the exact expansion always round-trips")
}

/// Decimal digits `D` and scale `s` with `x = D·10^{-s}` exactly.
fn exact_digits(x: f64) -> (String, i64) {
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if biased == 0 { (frac, -1074) } else { (frac | (1u64 << 52), biased - 1075) };
    if exp >= 0 {
        ((BigUint::from(mant) << exp as usize).to_string(), 0)
    } else {
        ((BigUint::from(mant) * BigUint::from(5u32).pow((-exp) as u32)).to_string(), -exp)
    }
}

/// First `p` significant digits, bumped by one unit when rounding away from
/// zero and anything nonzero was dropped. Returns digits and power of ten.
fn directed_digits(digits: &str, scale: i64, p: usize, away: bool) -> (String, i64) {
    let (head, rest) = digits.split_at(p);
    let mut head: BigUint = head.parse().expect("decimal digits");
    if away && rest.bytes().any(|b| b != b'0') {
        head += 1u32;
    }
    (head.to_string(), rest.len() as i64 - scale)
}

fn nearest_digits(x: f64, p: usize) -> (String, i64) {
    let s = format!("{:.*e}", p - 1, x);
    let (mant, exp) = s.split_once('e').expect("exponent");
    let exp: i64 = exp.parse().expect("exponent");
    let digits: String = mant.chars().filter(char::is_ascii_digit).collect();
    let k = exp - (digits.len() as i64 - 1);
    (digits, k)
}

/// `±digits·10^k`, without trailing zeros, in plain or scientific notation.
fn render(neg: bool, digits: &str, k: i64) -> String {
    let trimmed = digits.trim_end_matches('0');
    let k = k + (digits.len() - trimmed.len()) as i64;
    let d = if trimmed.is_empty() { "0" } else { trimmed };
    let lead = d.len() as i64 - 1 + k;
    let sign = if neg { "-" } else { "" };
    if (-5..17).contains(&lead) {
        if k >= 0 {
            format!("{sign}{d}{}", "0".repeat(k as usize))
        } else if lead >= 0 {
            let (int, frac) = d.split_at((lead + 1) as usize);
            format!("{sign}{int}.{frac}")
        } else {
            format!("{sign}0.{}{d}", "0".repeat((-lead - 1) as usize))
        }
    } else if d.len() == 1 {
        format!("{sign}{d}e{lead}")
    } else {
        format!("{sign}{}.{}e{lead}", &d[..1], &d[1..])
    }
}
