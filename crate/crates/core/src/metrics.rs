//! Imputation error metrics, evaluated only at the amputated positions.

use crate::error::{Error, Result};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub rmse: f64,
    /// A fraction: 0.5 means 50 %.
    pub mape: f64,
    pub count: usize,
}

/// Validates inputs and returns `(imputed, truth)` pairs at `indices` (0-based).
fn paired(imputed: &TimeSeries, truth: &TimeSeries, indices: &[usize]) -> Result<Vec<(f64, f64)>> {
    if imputed.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: imputed.len(),
            right: truth.len(),
        });
    }
    if indices.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    let len = truth.len();
    indices
        .iter()
        .map(|&i| {
            if i >= len {
                return Err(Error::IndexOutOfRange { index: i, len });
            }
            match (imputed.get(i), truth.get(i)) {
                (Some(a), Some(b)) => Ok((a, b)),
                (None, _) => Err(Error::MissingValuesPresent {
                    count: imputed.missing_count(),
                }),
                (_, None) => Err(Error::MissingValuesPresent {
                    count: truth.missing_count(),
                }),
            }
        })
        .collect()
}

/// Root mean square error over `indices`.
pub fn rmse(imputed: &TimeSeries, truth: &TimeSeries, indices: &[usize]) -> Result<f64> {
    let pairs = paired(imputed, truth, indices)?;
    let sse: f64 = pairs.iter().map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sse / pairs.len() as f64).sqrt())
}

/// Mean absolute percentage error over `indices`, as a fraction.
pub fn mape(imputed: &TimeSeries, truth: &TimeSeries, indices: &[usize]) -> Result<f64> {
    let pairs = paired(imputed, truth, indices)?;
    let mut total = 0.0;
    for (&i, (a, b)) in indices.iter().zip(&pairs) {
        if *b == 0.0 {
            return Err(Error::ZeroTruthValue(i));
        }
        total += (a - b).abs() / b.abs();
    }
    Ok(total / pairs.len() as f64)
}

/// Both metrics at once.
pub fn evaluate(imputed: &TimeSeries, truth: &TimeSeries, indices: &[usize]) -> Result<ErrorReport> {
    Ok(ErrorReport {
        rmse: rmse(imputed, truth, indices)?,
        mape: mape(imputed, truth, indices)?,
        count: indices.len(),
    })
}
