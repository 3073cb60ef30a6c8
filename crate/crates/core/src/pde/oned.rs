use super::heat::{Axis1D, HeatOperator};
use crate::error::{invalid, Result};
use crate::model::{IgnitionReaction, PhysParams};

/// Solution of `ψ_t = κψ_yy + Mf(ψ)` on `[0, l]`, zero at both ends.
#[derive(Debug, Clone)]
pub struct Trajectory1D {
    pub l: f64,
    /// Interior nodes `y_j = (j + 1)·l/(n + 1)`.
    pub ys: Vec<f64>,
    pub sup_history: Vec<(f64, f64)>,
    pub snapshots: Vec<(f64, Vec<f64>)>,
    pub final_values: Vec<f64>,
    pub final_time: f64,
}

/// Strang-split 1D solver. `init` holds interior values only.
pub fn solve_1d_dirichlet(
    l: f64,
    params: &PhysParams,
    f: &IgnitionReaction,
    init: &[f64],
    t_end: f64,
    dt: f64,
    history_dt: f64,
) -> Result<Trajectory1D> {
    params.validate()?;
    let n = init.len();
    if n < 8 {
        return Err(invalid("init", "need at least 8 interior values"));
    }
    if !(l > 0.0) {
        return Err(invalid("l", "must be positive"));
    }
    if init.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(invalid("init", "values must lie in [0, 1]"));
    }
    if !(dt > 0.0 && history_dt > 0.0 && t_end >= 0.0) {
        return Err(invalid("dt", "time steps must be positive"));
    }
    let dy = l / (n + 1) as f64;
    let ys = (0..n).map(|j| (j + 1) as f64 * dy).collect();
    let mut heat = HeatOperator::new(n, dy, Axis1D::Dirichlet);
    let mut u = init.to_vec();
    let kappa = params.kappa;
    let mt_of = |h: f64| params.big_m * h;
    let react = |u: &mut [f64], h: f64| {
        if f.is_zero() {
            return;
        }
        let mt = mt_of(h);
        for v in u.iter_mut() {
            if *v > f.theta0() {
                let mid = *v + 0.5 * mt * f.eval(*v);
                *v = (*v + mt * f.eval(mid)).clamp(0.0, 1.0);
            }
        }
    };
    let sup = |u: &[f64]| u.iter().fold(0.0_f64, |m, v| m.max(*v));

    let mut t = 0.0;
    let mut out = Trajectory1D {
        l,
        ys,
        sup_history: vec![(0.0, sup(&u))],
        snapshots: vec![(0.0, u.clone())],
        final_values: Vec::new(),
        final_time: 0.0,
    };
    while t < t_end - 1e-12 {
        let span = (t_end - t).min(history_dt);
        let m = (span / dt - 1e-9).ceil().max(1.0) as usize;
        let h = span / m as f64;
        heat.apply(&mut u, 0.5 * kappa * h);
        for i in 0..m {
            react(&mut u, h);
            let tau = if i + 1 == m { 0.5 * h } else { h };
            heat.apply(&mut u, kappa * tau);
        }
        for v in u.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        t += span;
        out.sup_history.push((t, sup(&u)));
        out.snapshots.push((t, u.clone()));
    }
    out.final_time = t;
    out.final_values = u;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_reaction;

    #[test]
    fn zero_data_stays_zero() {
        let p = PhysParams::unit(0.25, 1.0).unwrap();
        let f = build_reaction("quadratic-ignition", 0.25, &[]).unwrap();
        let tr = solve_1d_dirichlet(5.0, &p, &f, &[0.0; 32], 5.0, 0.05, 0.5).unwrap();
        assert!(tr.final_values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn pure_diffusion_decays_at_lowest_mode() {
        let p = PhysParams::unit(0.25, 1.0).unwrap();
        let f = IgnitionReaction::zero(0.25);
        let n = 63;
        let l = 2.0;
        let dy = l / (n + 1) as f64;
        let init: Vec<f64> = (0..n)
            .map(|j| (std::f64::consts::PI * (j + 1) as f64 * dy / l).sin())
            .collect();
        let tr = solve_1d_dirichlet(l, &p, &f, &init, 1.0, 0.1, 0.5).unwrap();
        let lam = 4.0 / (dy * dy) * (std::f64::consts::PI * dy / (2.0 * l)).sin().powi(2);
        let expect = (-lam).exp();
        assert!((tr.sup_history.last().unwrap().1 / sup0(&init) - expect).abs() < 1e-10);
    }

    fn sup0(u: &[f64]) -> f64 {
        u.iter().cloned().fold(0.0, f64::max)
    }
}
