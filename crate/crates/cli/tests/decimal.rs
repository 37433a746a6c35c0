use std::cmp::Ordering;

use jitterbound_cli::decimal::{down, nearest, up};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exact value `num / 2^shift2 / 10^shift10` of a decimal string or double,
/// kept as a pair (integer, power-of-two exponent, power-of-ten exponent).
struct Exact {
    int: BigInt,
    pow2: i64,
    pow10: i64,
}

fn from_decimal(s: &str) -> Exact {
    let (mant, exp) = match s.split_once('e') {
        Some((m, e)) => (m, e.parse::<i64>().unwrap()),
        None => (s, 0),
    };
    let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
    let digits = format!("{int_part}{frac_part}");
    Exact { int: digits.parse().unwrap(), pow2: 0, pow10: exp - frac_part.len() as i64 }
}

fn from_double(x: f64) -> Exact {
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let frac = (bits & ((1 << 52) - 1)) as i64;
    let (mant, exp) = if biased == 0 { (frac, -1074) } else { (frac | (1 << 52), biased - 1075) };
    let sign = if x < 0.0 { -1 } else { 1 };
    Exact { int: BigInt::from(sign * mant), pow2: exp, pow10: 0 }
}

/// Compares `a` and `b` after multiplying both by a common power of 2 and 10.
fn cmp(a: &Exact, b: &Exact) -> Ordering {
    let p2 = a.pow2.min(b.pow2);
    let p10 = a.pow10.min(b.pow10);
    let scale = |e: &Exact| {
        let mut v = e.int.clone();
        v <<= (e.pow2 - p2) as usize;
        v * BigInt::from(10).pow((e.pow10 - p10) as u32)
    };
    scale(a).cmp(&scale(b))
}

fn check(x: f64) {
    let (lo, hi, mid) = (down(x), up(x), nearest(x));
    for s in [&lo, &hi, &mid] {
        assert_eq!(s.parse::<f64>(), Ok(x), "{s} does not parse back to {x:e}");
    }
    let ex = from_double(x);
    assert_ne!(cmp(&from_decimal(&lo), &ex), Ordering::Greater, "{lo} > {x:e}");
    assert_ne!(cmp(&from_decimal(&hi), &ex), Ordering::Less, "{hi} < {x:e}");
    // The nearest form is as short as the standard shortest representation.
    let digits = |s: &str| s.split('e').next().unwrap().trim_start_matches(['-', '0', '.']).replace('.', "").trim_end_matches('0').len();
    assert_eq!(digits(&mid), digits(&format!("{x:e}")), "{mid} vs {x:e}");
}

#[test]
fn random_doubles_round_outward_and_back() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5000 {
        let x = f64::from_bits(rng.random::<u64>());
        if x.is_finite() && x != 0.0 {
            check(x);
        }
    }
    for _ in 0..5000 {
        let x = rng.random_range(-10.0..10.0) * 10f64.powi(rng.random_range(-8..8));
        if x != 0.0 {
            check(x);
        }
    }
}

#[test]
fn short_decimals_stay_short_on_their_exact_side() {
    for s in ["0.5", "0.25", "1", "1024", "-3", "0.1", "-0.7", "1e-7", "123.456"] {
        let x: f64 = s.parse().unwrap();
        check(x);
        let exact = cmp(&from_decimal(s), &from_double(x));
        match exact {
            Ordering::Equal => assert!(down(x) == s && up(x) == s, "{s}"),
            Ordering::Less => assert_eq!(down(x), s),
            Ordering::Greater => assert_eq!(up(x), s),
        }
    }
}

#[test]
fn extremes() {
    for x in [f64::MAX, f64::MIN, f64::MIN_POSITIVE, -f64::MIN_POSITIVE, 5e-324, -5e-324, 1.0 - f64::EPSILON / 2.0] {
        check(x);
    }
}
