use super::{Array, Tape, Var};
use crate::error::Result;

/// Compares reverse-mode gradients of a scalar function against central
/// finite differences with step `h`.
///
/// `f` builds the computation on a fresh tape from the parameter handles
/// it is given and returns the scalar output. The result is the maximum
/// over all coordinates of `|analytic - numeric| / max(1, |analytic|)`.
pub fn grad_check<F>(f: F, params: &[Array], h: f64) -> Result<f64>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.param(p.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let grads = tape.backward(out)?;
    let analytic: Vec<Array> = params
        .iter()
        .zip(&vars)
        .map(|(p, &v)| grads.get(v).cloned().unwrap_or_else(|| Array::zeros(p.shape())))
        .collect();

    let eval = |ps: &[Array]| -> Result<f64> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = ps.iter().map(|p| tape.param(p.clone())).collect();
        let out = f(&mut tape, &vars)?;
        Ok(tape.value(out).item())
    };

    let mut work = params.to_vec();
    let mut worst: f64 = 0.0;
    for pi in 0..params.len() {
        for ci in 0..params[pi].len() {
            let orig = params[pi].data()[ci];
            work[pi].data_mut()[ci] = orig + h;
            let up = eval(&work)?;
            work[pi].data_mut()[ci] = orig - h;
            let down = eval(&work)?;
            work[pi].data_mut()[ci] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic[pi].data()[ci];
            worst = worst.max((a - numeric).abs() / a.abs().max(1.0));
        }
    }
    Ok(worst)
}
