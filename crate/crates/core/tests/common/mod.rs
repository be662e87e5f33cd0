//! Shared oracles for the acceptance suite, independent of the library's
//! quadrature and estimators.

/// Composite 5-point Gauss-Legendre quadrature of `f` on `[0, 1]`.
pub fn gauss_legendre_01(f: impl Fn(f64) -> f64, panels: usize) -> f64 {
    const NODES: [f64; 5] = [
        -0.906179845938664,
        -0.5384693101056831,
        0.0,
        0.5384693101056831,
        0.906179845938664,
    ];
    const WEIGHTS: [f64; 5] = [
        0.23692688505618908,
        0.47862867049936647,
        0.5688888888888889,
        0.47862867049936647,
        0.23692688505618908,
    ];
    let h = 1.0 / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let mid = (k as f64 + 0.5) * h;
        for (t, w) in NODES.iter().zip(WEIGHTS) {
            total += w * f(mid + t * h / 2.0);
        }
    }
    total * h / 2.0
}

/// Pearson correlation.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}
