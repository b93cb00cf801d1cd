use hcm_core::excursions::{excursion_decompose, gamma_down};
use hcm_core::{ExactPath, Rational};
use num_bigint::BigInt;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn z() -> Rational {
    q(0, 1)
}

// X: slope -1, up-jumps of 2 at t=1 and 1 at t=4.
// The minimum is -1 on arrival at t=1, regained at t=3; then -2 at t=4,
// regained at t=5. Hand-computed excursions are (1,3) and (4,5).
fn walk() -> ExactPath {
    let mut b = ExactPath::builder(z(), q(-1, 1), q(10, 1));
    b.push(q(1, 1), q(2, 1), q(-1, 1)).unwrap();
    b.push(q(4, 1), q(1, 1), q(-1, 1)).unwrap();
    b.finish()
}

// Y: drift 1/4, jumps 1/2 at t=1 and 3/10 at t=4.
fn companion() -> ExactPath {
    let mut b = ExactPath::builder(z(), q(1, 4), q(10, 1));
    b.push(q(1, 1), q(1, 2), q(1, 4)).unwrap();
    b.push(q(4, 1), q(3, 10), q(1, 4)).unwrap();
    b.finish()
}

#[test]
fn hand_computed_excursions() {
    let ex = excursion_decompose(&walk()).unwrap();
    let got: Vec<(Rational, Rational)> = ex.complete.iter().map(|e| (e.l.clone(), e.r.clone())).collect();
    assert_eq!(got, vec![(q(1, 1), q(3, 1)), (q(4, 1), q(5, 1))]);
    assert!(ex.unfinished_start.is_none());
}

#[test]
fn hand_computed_gamma_down() {
    // (1,3): Y(3-) - Y(1-) = 5/4 - 1/4 = 1
    // (4,5): Y(5-) - Y(4-) = 41/20 - 3/2 = 11/20
    let g = gamma_down(&walk(), &companion()).unwrap();
    assert_eq!(g, vec![(q(2, 1), q(1, 1)), (q(1, 1), q(11, 20))]);
}

#[test]
fn f64_and_exact_agree() {
    let mut b = hcm_core::Path::builder(0.0, -1.0, 10.0);
    b.push(1.0, 2.0, -1.0).unwrap();
    b.push(4.0, 1.0, -1.0).unwrap();
    let mut c = hcm_core::Path::builder(0.0, 0.25, 10.0);
    c.push(1.0, 0.5, 0.25).unwrap();
    c.push(4.0, 0.3, 0.25).unwrap();
    let g = gamma_down(&b.finish(), &c.finish()).unwrap();
    assert_eq!(g.len(), 2);
    assert!((g[0].0 - 2.0).abs() < 1e-12 && (g[0].1 - 1.0).abs() < 1e-12);
    assert!((g[1].0 - 1.0).abs() < 1e-12 && (g[1].1 - 0.55).abs() < 1e-12);
}

#[test]
fn excursion_still_open_at_horizon() {
    let mut b = ExactPath::builder(z(), q(-1, 1), q(3, 1));
    b.push(q(1, 1), q(5, 1), q(-1, 1)).unwrap();
    let ex = excursion_decompose(&b.finish()).unwrap();
    assert!(ex.complete.is_empty());
    assert_eq!(ex.unfinished_start, Some(q(1, 1)));
}
