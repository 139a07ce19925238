//! Geometric rate fitting for gap series.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateFit {
    /// Per-round contraction factor `exp(slope)`.
    pub rate: f64,
    pub r_squared: f64,
    /// Points used after cleaning and burn-in.
    pub points: usize,
}

pub const DEFAULT_BURN_IN: f64 = 0.2;

/// Least-squares fit of `ln(gap)` against `t` with the default 20% burn-in.
pub fn fit_geometric_rate(series: &[(f64, f64)]) -> Result<RateFit> {
    fit_geometric_rate_with(series, DEFAULT_BURN_IN)
}

/// The series is cut at the first point that is not above
/// `10 eps gap_0` (the precision floor). At least five points must
/// survive; the leading `burn_in` fraction of them is then dropped.
pub fn fit_geometric_rate_with(series: &[(f64, f64)], burn_in: f64) -> Result<RateFit> {
    if !(0.0..1.0).contains(&burn_in) {
        return Err(Error::Fit(alloc::format!("burn-in fraction {burn_in} not in [0, 1)")));
    }
    let Some(&(_, first)) = series.first() else {
        return Err(Error::Fit("empty series".into()));
    };
    if !(first > 0.0) || !first.is_finite() {
        return Err(Error::Fit(alloc::format!("initial gap {first} is not positive")));
    }
    let floor = 10.0 * f64::EPSILON * first;
    let clean: Vec<(f64, f64)> = series
        .iter()
        .take_while(|(_, g)| *g > floor && g.is_finite())
        .map(|&(t, g)| (t, g.ln()))
        .collect();
    if clean.len() < 5 {
        return Err(Error::Fit(alloc::format!("{} usable points, need at least 5", clean.len())));
    }
    let skip = (burn_in * clean.len() as f64).floor() as usize;
    let pts = &clean[skip..];
    if pts.len() < 2 {
        return Err(Error::Fit("fewer than 2 points after burn-in".into()));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, y) in pts {
        stt += (t - mt) * (t - mt);
        sty += (t - mt) * (y - my);
        syy += (y - my) * (y - my);
    }
    if stt == 0.0 {
        return Err(Error::Fit("all points share one round index".into()));
    }
    let slope = sty / stt;
    let r_squared = if syy <= f64::EPSILON * f64::EPSILON * n { 1.0 } else { (sty * sty) / (stt * syy) };
    Ok(RateFit { rate: slope.exp(), r_squared, points: pts.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(gaps: &[f64]) -> Vec<(f64, f64)> {
        gaps.iter().enumerate().map(|(t, &g)| (t as f64, g)).collect()
    }

    #[test]
    fn exact_geometric() {
        let fit = fit_geometric_rate(&series(&[1.0, 0.5, 0.25, 0.125, 0.0625])).unwrap();
        assert!((fit.rate - 0.5).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_series() {
        let fit = fit_geometric_rate(&series(&[3.0; 8])).unwrap();
        assert_eq!(fit.rate, 1.0);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn rejects_short_and_nonpositive() {
        assert!(fit_geometric_rate(&series(&[1.0, 0.5, 0.25, 0.125])).is_err());
        assert!(fit_geometric_rate(&series(&[1.0, 0.5, 0.0, 0.1, 0.1, 0.1])).is_err());
        assert!(fit_geometric_rate(&[]).is_err());
    }

    #[test]
    fn stops_at_precision_floor() {
        let mut gaps: Vec<f64> = (0..10).map(|k| 0.1f64.powi(k)).collect();
        gaps.extend([1e-30, 1e-12, 1e-31]);
        let fit = fit_geometric_rate(&series(&gaps)).unwrap();
        assert!((fit.rate - 0.1).abs() < 1e-9);
    }
}
