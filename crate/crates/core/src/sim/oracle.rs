use nalgebra::{DMatrix, DVector};

/// Central-difference Jacobian of `f` at `x`, one column per input coordinate.
///
/// Errors from `f` are propagated unchanged.
pub fn finite_difference_oracle<F, E>(mut f: F, x: &DVector<f64>, step: f64) -> Result<DMatrix<f64>, E>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>, E>,
{
    assert!(step > 0.0, "finite-difference step must be positive");
    let mut columns = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        let mut forward = x.clone();
        forward[j] += step;
        let mut backward = x.clone();
        backward[j] -= step;
        let df = (f(&forward)? - f(&backward)?) / (2.0 * step);
        columns.push(df);
    }
    let rows = columns.first().map_or(0, |c| c.len());
    Ok(DMatrix::from_fn(rows, x.len(), |i, j| columns[j][i]))
}
