//! MCAR amputation with exponentially distributed gap increments.
//!
//! The position walk is `a <- ceil(a + Exp(rate))`; every landing position
//! inside the series is deleted. Because `a` is an integer,
//! `ceil(a + e) = a + ceil(e)`, so gaps between deletions are i.i.d.
//! `Geometric(1 - exp(-rate))` and the long-run missing fraction is
//! `1 - exp(-rate)`.
//!
//! Randomness comes from ChaCha8 seeded with [`rand::SeedableRng::seed_from_u64`],
//! which is specified bit-for-bit and platform independent. Exponential
//! variates use the inverse CDF, `-ln(1 - U) / rate` with `U` uniform on `[0, 1)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Missing-data mechanisms. Only [`Mechanism::Mcar`] is simulated.
///
/// With `r` the missingness indicator: MCAR has `P(r | Y_obs, Y_mis) = P(r)`;
/// MAR has `P(r | Y_obs, Y_mis) = P(r | Y_obs)`; NMAR depends on `Y_mis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mechanism {
    Mcar,
    Mar,
    Nmar,
}

/// A complete series with positions deleted.
#[derive(Debug, Clone, PartialEq)]
pub struct AmputationResult {
    pub data: TimeSeries,
    /// Strictly increasing, 1-based positions of the deleted values.
    pub na_indices: Vec<usize>,
    pub rate: f64,
    pub seed: u64,
    pub mechanism: Mechanism,
}

impl AmputationResult {
    /// 0-based positions, convenient for indexing.
    pub fn zero_based(&self) -> Vec<usize> {
        self.na_indices.iter().map(|i| i - 1).collect()
    }
}

/// The generator used for every seeded draw in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws one `Exp(rate)` variate by inversion.
pub fn exponential(rng: &mut impl Rng, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

/// 1-based deletion positions for a series of length `n`.
///
/// Takes only the length, never the values: selection is independent of the
/// data by construction.
pub fn mcar_positions(n: usize, rate: f64, seed: u64) -> Result<Vec<usize>> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::NegativeRate(rate));
    }
    if rate == 0.0 {
        return Ok(Vec::new());
    }
    let mut rng = seeded_rng(seed);
    let mut positions = Vec::new();
    let mut a: usize = 0;
    while a < n {
        let step = exponential(&mut rng, rate).ceil();
        // A zero draw (u = 0) still advances, matching the ceiling's intent.
        let step = if step >= n as f64 { n } else { (step as usize).max(1) };
        a += step;
        if a <= n {
            positions.push(a);
        }
    }
    Ok(positions)
}

/// Deletes values of a complete series at MCAR positions.
pub fn create_missing(series: &TimeSeries, rate: f64, seed: u64) -> Result<AmputationResult> {
    let missing = series.missing_count();
    if missing > 0 {
        return Err(Error::AlreadyMissing { count: missing });
    }
    let na_indices = mcar_positions(series.len(), rate, seed)?;
    let mut values = series.values().to_vec();
    for &i in &na_indices {
        values[i - 1] = None;
    }
    Ok(AmputationResult {
        data: series.with_values(values)?,
        na_indices,
        rate,
        seed,
        mechanism: Mechanism::Mcar,
    })
}
