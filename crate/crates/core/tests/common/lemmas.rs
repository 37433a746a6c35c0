//! Exact identities of the event matrices.

use jitterbound::model::LisSpec;
use nalgebra::DMatrix;
use rand::Rng;

fn is_zero(m: &DMatrix<f64>) -> bool {
    m.iter().all(|&x| x == 0.0)
}

/// Panics on the first product that is not exactly zero or pair that does
/// not exactly commute.
pub fn check_lemmas(lis: &LisSpec, rng: &mut rand_chacha::ChaCha8Rng) {
    let n = lis.n();
    let id = DMatrix::<f64>::identity(n, n);
    let d1 = rng.random_range(-1.0..1.0);
    let d2 = rng.random_range(-1.0..1.0);
    let x1 = lis.flow(d1);
    let x2 = lis.flow(d2);
    let du: Vec<_> = lis.e_u.iter().map(|e| e - &id).collect();
    let dy: Vec<_> = lis.e_y.iter().map(|e| e - &id).collect();

    // Single events.
    for u in &du {
        assert_eq!(u * &x1, *u);
    }
    for y in &dy {
        assert_eq!(&x1 * y, *y);
    }

    // Pairs: only "measure after actuate" survives a flow in between.
    let all: Vec<(char, usize, &DMatrix<f64>)> = du
        .iter()
        .enumerate()
        .map(|(i, m)| ('u', i, m))
        .chain(dy.iter().enumerate().map(|(j, m)| ('y', j, m)))
        .collect();
    for &(a, i, ma) in &all {
        for &(b, j, mb) in &all {
            if (a, i) == (b, j) {
                continue;
            }
            assert!(is_zero(&(ma * mb)), "({a}{i})({b}{j})");
            if !(a == 'y' && b == 'u') {
                assert!(is_zero(&(ma * &x1 * mb)), "({a}{i}) e ({b}{j})");
            }
            let ea = ma + &id;
            let eb = mb + &id;
            assert_eq!(&ea * &eb, &eb * &ea);
            for &(c, k, mc) in &all {
                if (c, k) == (b, j) || (c, k) == (a, i) {
                    continue;
                }
                assert!(is_zero(&(ma * &x1 * mb * &x2 * mc)), "({a}{i})({b}{j})({c}{k})");
            }
        }
    }
    for y in &dy {
        for u in &du {
            assert!(is_zero(&(y * u)));
        }
    }

    // The controller update commutes with the flow.
    assert_eq!(&lis.e_ctrl * &x1, &x1 * &lis.e_ctrl);
}
