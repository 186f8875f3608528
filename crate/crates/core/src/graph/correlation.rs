//! Correlation of abnormality indicators and the derived distance.

use log::warn;

use crate::error::{Error, Result};

pub const DEFAULT_FAR_CONSTANT: f64 = 1e3;

/// Pearson correlation of equally long indicator series (one per entry of
/// `series`). Pairs involving a constant series are set to 0; the diagonal
/// is 1.
pub fn abnormality_correlation(series: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = series.len();
    let t = series.first().map_or(0, Vec::len);
    if series.iter().any(|s| s.len() != t) {
        return Err(Error::InvalidArgument("series differ in length".into()));
    }
    if t < 2 {
        return Err(Error::InsufficientData("need at least two time points".into()));
    }
    let centered: Vec<(Vec<f64>, f64)> = series
        .iter()
        .map(|s| {
            let mean = s.iter().sum::<f64>() / t as f64;
            let c: Vec<f64> = s.iter().map(|v| v - mean).collect();
            let ss = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            (c, ss)
        })
        .collect();
    let constant: Vec<usize> = (0..n).filter(|&k| centered[k].1 <= 1e-12).collect();
    if !constant.is_empty() {
        warn!("{} constant series; their correlations are set to 0", constant.len());
    }
    let mut corr = vec![vec![0.0; n]; n];
    for i in 0..n {
        corr[i][i] = 1.0;
        for j in i + 1..n {
            let (ci, si) = &centered[i];
            let (cj, sj) = &centered[j];
            let r = if *si <= 1e-12 || *sj <= 1e-12 {
                0.0
            } else {
                (ci.iter().zip(cj).map(|(a, b)| a * b).sum::<f64>() / (si * sj)).clamp(-1.0, 1.0)
            };
            corr[i][j] = r;
            corr[j][i] = r;
        }
    }
    Ok(corr)
}

/// 1/c for positive c, `far` otherwise; zero diagonal.
pub fn correlation_to_distance(corr: &[Vec<f64>], far: f64) -> Vec<Vec<f64>> {
    corr.iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &c)| if i == j { 0.0 } else if c > 0.0 { 1.0 / c } else { far })
                .collect()
        })
        .collect()
}
