//! Central finite differences for checking analytic gradients.

/// Numerical gradient of `f` at `x` by central differences with step `h`.
pub fn central_difference(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let plus = f(&probe);
            probe[i] = orig - h;
            let minus = f(&probe);
            probe[i] = orig;
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mismatch {
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

/// First component where `analytic` and `numeric` disagree. Components where
/// both magnitudes are below `abs_tol` are compared absolutely, all others by
/// relative error against the larger magnitude.
pub fn first_mismatch(analytic: &[f64], numeric: &[f64], rel_tol: f64, abs_tol: f64) -> Option<Mismatch> {
    assert_eq!(analytic.len(), numeric.len(), "gradient lengths differ");
    analytic
        .iter()
        .zip(numeric)
        .enumerate()
        .find(|&(_, (&a, &n))| !within(a, n, rel_tol, abs_tol))
        .map(|(index, (&analytic, &numeric))| Mismatch {
            index,
            analytic,
            numeric,
        })
}

fn within(a: f64, n: f64, rel_tol: f64, abs_tol: f64) -> bool {
    let diff = (a - n).abs();
    let scale = a.abs().max(n.abs());
    if scale < abs_tol {
        diff <= abs_tol
    } else {
        diff <= rel_tol * scale
    }
}

pub fn assert_close(analytic: &[f64], numeric: &[f64], rel_tol: f64, abs_tol: f64) {
    if let Some(m) = first_mismatch(analytic, numeric, rel_tol, abs_tol) {
        panic!(
            "gradient mismatch at {}: analytic {:e} vs numeric {:e}",
            m.index, m.analytic, m.numeric
        );
    }
}
