use crate::error::{Error, Result};
use crate::sim::Observation;

/// True iff the Cartesian displacement fits within `v_max · (t2 − t1)`.
pub fn max_velocity_gate(z1: &Observation, z2: &Observation, v_max: f64) -> Result<bool> {
    if !(z1.t < z2.t) {
        return Err(Error::Ordering { t1: z1.t, t2: z2.t });
    }
    let (x1, y1) = z1.cartesian();
    let (x2, y2) = z2.cartesian();
    Ok((x2 - x1).hypot(y2 - y1) <= v_max * (z2.t - z1.t))
}

/// Position-derived radial velocities at the earlier and the later plot.
pub fn estimate_radial_velocities(z1: &Observation, z2: &Observation) -> Result<(f64, f64)> {
    if !(z1.t < z2.t) {
        return Err(Error::Ordering { t1: z1.t, t2: z2.t });
    }
    Ok(radial_estimates(z1.r, z1.theta, z2.r, z2.theta, z2.t - z1.t))
}

fn radial_estimates(r1: f64, th1: f64, r2: f64, th2: f64, dt: f64) -> (f64, f64) {
    let c = (th2 - th1).cos();
    ((r2 * c - r1) / dt, (r2 - r1 * c) / dt)
}

/// Nearest ambiguity number `m` and residual `|v + m·v_u − v̂|`.
pub fn resolve_ambiguity(v: f64, v_u: f64, v_hat: f64) -> (i64, f64) {
    let m = ((v_hat - v) / v_u).round();
    (m as i64, (v + m * v_u - v_hat).abs())
}

/// `([F_E,1, F_E,2], dcd)` for an ordered plot pair.
pub fn edge_features(z1: &Observation, z2: &Observation, v_u: f64) -> Result<([f64; 2], usize)> {
    let (vh1, vh2) = estimate_radial_velocities(z1, z2)?;
    let (_, f1) = resolve_ambiguity(z1.v, v_u, vh1);
    let (_, f2) = resolve_ambiguity(z2.v, v_u, vh2);
    Ok(([f1, f2], z1.d.abs_diff(z2.d)))
}
