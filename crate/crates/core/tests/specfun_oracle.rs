//! Compares the Bessel routines with mpmath tables (see
//! `fixtures/gen_bessel_fixtures.py`).

use spatial_anc::specfun::{bessel_j, bessel_y};

fn load(name: &str) -> Vec<(i32, f64, f64)> {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|line| {
            let mut it = line.split(',');
            let m = it.next().unwrap().parse().unwrap();
            let x = it.next().unwrap().parse().unwrap();
            let v = it.next().unwrap().parse().unwrap();
            (m, x, v)
        })
        .collect()
}

fn worst_relative(rows: &[(i32, f64, f64)], f: impl Fn(i32, f64) -> f64) -> (f64, i32, f64) {
    let mut worst = (0.0, 0, 0.0);
    for &(m, x, want) in rows {
        if want.abs() <= 1e-300 {
            continue;
        }
        let got = f(m, x);
        let rel = ((got - want) / want).abs();
        if !(rel <= worst.0) {
            worst = (rel, m, x);
        }
    }
    worst
}

#[test]
fn j_matches_high_precision_table() {
    let rows = load("bessel_j.csv");
    let (rel, m, x) = worst_relative(&rows, |m, x| bessel_j(m, x).unwrap());
    println!("J worst relative error {rel:e} (m={m}, x={x})");
    assert!(rel <= 1e-10, "worst J relative error {rel:e} at m={m}, x={x}");
}

#[test]
fn y_matches_high_precision_table() {
    let rows = load("bessel_y.csv");
    let (rel, m, x) = worst_relative(&rows, |m, x| bessel_y(m, x).unwrap());
    println!("Y worst relative error {rel:e} (m={m}, x={x})");
    assert!(rel <= 1e-8, "worst Y relative error {rel:e} at m={m}, x={x}");
}
