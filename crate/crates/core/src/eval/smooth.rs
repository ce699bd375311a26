use crate::error::{Error, Result};

/// Per-coordinate least-squares line in time, evaluated at the plot times.
pub fn smooth_track(times: &[f64], points: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    if times.len() != points.len() {
        return Err(Error::shape("smooth_track", &[times.len()], &[points.len()]));
    }
    if points.len() < 2 {
        return Err(Error::domain("smoothing needs at least two plots"));
    }
    let n = times.len() as f64;
    let t_mean = times.iter().sum::<f64>() / n;
    let stt: f64 = times.iter().map(|t| (t - t_mean).powi(2)).sum();
    if !(stt > 0.0) {
        return Err(Error::domain("smoothing needs at least two distinct plot times"));
    }
    let mut fit = [(0.0, 0.0); 2];
    for (c, f) in fit.iter_mut().enumerate() {
        let mean = points.iter().map(|p| p[c]).sum::<f64>() / n;
        let sty: f64 = times.iter().zip(points).map(|(t, p)| (t - t_mean) * (p[c] - mean)).sum();
        let slope = sty / stt;
        *f = (mean - slope * t_mean, slope);
    }
    Ok(times
        .iter()
        .map(|t| [fit[0].0 + fit[0].1 * t, fit[1].0 + fit[1].1 * t])
        .collect())
}
