use super::stats::cfar_alpha;
use crate::error::{Error, Result};

/// Cell-averaging CFAR over a 1-D power strip.
///
/// Each cell is compared against `α · mean` of `n_ref` reference cells,
/// `n_ref / 2` on each side beyond `guard` guard cells. The reference window
/// wraps at the strip ends so every cell sees exactly `n_ref` references.
pub fn ca_cfar(cells: &[f64], n_ref: usize, guard: usize, pfa: f64) -> Result<Vec<bool>> {
    if n_ref < 2 || !n_ref.is_multiple_of(2) {
        return Err(Error::domain(format!("n_ref must be even and >= 2, got {n_ref}")));
    }
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(Error::domain(format!("pfa must lie in (0, 1), got {pfa}")));
    }
    let half = n_ref / 2;
    let span = 2 * (half + guard) + 1;
    if cells.len() < span {
        return Err(Error::domain(format!(
            "strip of {} cells is smaller than the {span}-cell CFAR window",
            cells.len()
        )));
    }
    let n = cells.len();
    let scale = cfar_alpha(n_ref, pfa) / n_ref as f64;
    let at = |i: isize| cells[i.rem_euclid(n as isize) as usize];
    let mut out = Vec::with_capacity(n);
    for i in 0..n as isize {
        let mut sum = 0.0;
        for k in 1..=half as isize {
            let off = guard as isize + k;
            sum += at(i - off) + at(i + off);
        }
        out.push(cells[i as usize] > scale * sum);
    }
    Ok(out)
}
