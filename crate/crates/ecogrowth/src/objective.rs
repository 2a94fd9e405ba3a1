//! Welfare functional and the projected sign-gradient ascent loop.
//!
//! The functional rewards consumption and penalizes pollution stock, tax
//! burden, and abatement cost:
//!
//! `I = T1 - T2 - T3 - T4`
//!
//! with `T1 = int c k`, `T2 = beta0 int p`, `T3 = beta1 int tau k`, and
//! `T4 = beta2 int xi p`, integrated over space and the whole horizon. Space
//! uses the lumped node weights, time the left-endpoint rule, matching the
//! frozen-coefficient convention of the steppers.
//!
//! The ascent loop: solve forward, solve the costates backward, pick a
//! bang-bang direction from nodewise signs, step and project back onto the
//! feasible set, then pick the best convex combination of old and new
//! controls by sampling the segment. Sampling includes the old point, so the
//! objective never decreases.

use crate::dynamics::{AdjointPair, ControlDirection, ControlSet, StatePair, System, Trajectory};
use crate::error::{Error, Result};
use crate::grid::{nonlocal_apply, Field};
use crate::model::{effective_capital, RegionMask};
use crate::scalar::Scalar;

/// Value of the welfare functional split into its four terms.
///
/// The penalty terms are stored with their weights applied, so
/// `total = t1_consumption - t2_pollution - t3_taxation - t4_abatement`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveBreakdown<T> {
    /// Consumption utility `int c k`.
    pub t1_consumption: T,
    /// Weighted pollution burden `beta0 int p`.
    pub t2_pollution: T,
    /// Weighted taxation disutility `beta1 int tau k`.
    pub t3_taxation: T,
    /// Weighted abatement cost `beta2 int xi p`.
    pub t4_abatement: T,
    /// `t1 - t2 - t3 - t4`.
    pub total: T,
}

/// Knobs of the ascent loop.
#[derive(Debug, Clone, Copy)]
pub struct OptimizerConfig<T> {
    /// Raw step size applied along the sign direction before projection.
    pub eps0: T,
    /// Number of subintervals of the line-search segment; `m` yields the
    /// samples `0, 1/m, ..., 1`.
    pub eta_samples: usize,
    /// Stop once an iteration improves the objective by less than this.
    pub tol: T,
    /// Maximum number of control updates.
    pub max_iter: usize,
}

impl<T: Scalar> Default for OptimizerConfig<T> {
    fn default() -> Self {
        OptimizerConfig {
            eps0: T::of(0.05),
            eta_samples: 10,
            tol: T::of(1e-6),
            max_iter: 50,
        }
    }
}

impl<T: Scalar> OptimizerConfig<T> {
    /// Rejects step sizes and tolerances that cannot drive the loop.
    pub fn validate(&self) -> Result<()> {
        if !self.eps0.is_finite() || self.eps0 < T::zero() {
            return Err(Error::InvalidParams(format!(
                "step size eps0 = {} must be finite and nonnegative",
                self.eps0
            )));
        }
        if self.eta_samples == 0 {
            return Err(Error::InvalidParams(
                "eta_samples must be at least 1".into(),
            ));
        }
        if !self.tol.is_finite() {
            return Err(Error::InvalidParams(format!(
                "tolerance {} must be finite",
                self.tol
            )));
        }
        Ok(())
    }
}

/// Why the ascent loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// An iteration improved the objective by less than the tolerance.
    Tolerance,
    /// The update budget ran out.
    MaxIter,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StopReason::Tolerance => write!(f, "tolerance"),
            StopReason::MaxIter => write!(f, "maxiter"),
        }
    }
}

/// Everything the ascent loop produced.
///
/// `controls` is the iterate the stopping rule selected; on a tolerance stop
/// that is the iterate *before* the final, sub-tolerance update, so the
/// slightly better final iterate is kept separately in `best_controls`.
#[derive(Debug, Clone)]
pub struct OptimizationResult<T> {
    /// Controls selected by the stopping rule.
    pub controls: ControlSet<T>,
    /// State trajectories under `controls`.
    pub state: StatePair<T>,
    /// Costate trajectories under `controls`.
    pub adjoint: AdjointPair<T>,
    /// Highest-objective iterate seen.
    pub best_controls: ControlSet<T>,
    /// Objective of `best_controls`.
    pub best_objective: ObjectiveBreakdown<T>,
    /// Objective after 0, 1, 2, ... updates; nondecreasing.
    pub objective_history: Vec<ObjectiveBreakdown<T>>,
    /// Line-search weight chosen at each update.
    pub eta_history: Vec<T>,
    /// Why the loop stopped.
    pub stop_reason: StopReason,
}

/// Evaluates the welfare functional for one state/control pair.
pub fn evaluate_objective<T: Scalar>(
    system: &System<T>,
    state: &StatePair<T>,
    controls: &ControlSet<T>,
) -> Result<ObjectiveBreakdown<T>> {
    let levels = system.num_levels();
    if state.k.len() != levels || state.p.len() != levels || controls.len() != levels {
        return Err(Error::ShapeMismatch(format!(
            "objective needs {levels} aligned levels, got state {}/{} and controls {}",
            state.k.len(),
            state.p.len(),
            controls.len()
        )));
    }
    let grid = system.grid();
    grid.check_field(state.k.level(0))?;
    let pr = system.params();
    let mut t1 = T::zero();
    let mut t2 = T::zero();
    let mut t3 = T::zero();
    let mut t4 = T::zero();
    for n in 0..system.num_steps() {
        let (k, p) = (state.k.level(n), state.p.level(n));
        let (c, tau, xi) = (
            controls.c().level(n),
            controls.tau().level(n),
            controls.xi().level(n),
        );
        for i in 0..grid.num_nodes() {
            let m = grid.quad_weight(i);
            t1 += m * c[i] * k[i];
            t2 += m * p[i];
            t3 += m * tau[i] * k[i];
            t4 += m * xi[i] * p[i];
        }
    }
    let dt = pr.dt;
    let t1_consumption = dt * t1;
    let t2_pollution = pr.beta0 * dt * t2;
    let t3_taxation = pr.beta1 * dt * t3;
    let t4_abatement = pr.beta2 * dt * t4;
    Ok(ObjectiveBreakdown {
        t1_consumption,
        t2_pollution,
        t3_taxation,
        t4_abatement,
        total: t1_consumption - t2_pollution - t3_taxation - t4_abatement,
    })
}

/// Marginal disutility of taxation at time level `n`:
///
/// `beta1 + f'((1 - I_w tau) k) (tech lambda_k / g(p) + theta Wt[lambda_p])`
///
/// where `Wt` applies the transposed emission kernel. Ascent moves the tax
/// against the sign of this field.
pub fn beta_star<T: Scalar>(
    system: &System<T>,
    state: &StatePair<T>,
    adjoint: &AdjointPair<T>,
    controls: &ControlSet<T>,
    n: usize,
) -> Field<T> {
    beta_star_fields(
        system,
        state.k.level(n),
        state.p.level(n),
        controls.tau().level(n),
        adjoint.lambda_k.level(n),
        adjoint.lambda_p.level(n),
    )
}

fn beta_star_fields<T: Scalar>(
    system: &System<T>,
    k: &Field<T>,
    p: &Field<T>,
    tau: &Field<T>,
    lk: &Field<T>,
    lp: &Field<T>,
) -> Field<T> {
    let grid = system.grid();
    let pr = system.params();
    let w = nonlocal_apply(grid, lp, system.kernel_transposed());
    let mut out = grid.zeros();
    for i in 0..grid.num_nodes() {
        let ke = effective_capital(k[i], tau[i], system.mask().contains(i));
        let fp = pr.production_deriv_raw(ke);
        let g = pr.pollution_feedback_raw(p[i]);
        out[i] = pr.beta1 + fp * (pr.tech * lk[i] / g + pr.theta * w[i]);
    }
    out
}

fn sgn<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// Nodewise bang-bang directions from the three switching fields:
/// `v1 = sgn(consumption_arg)`, `v2 = -sgn(tax_arg)`, `v3 = -sgn(abatement_arg)`,
/// with `v2`, `v3` forced to zero outside the control region.
///
/// Only the signs of the arguments matter, so scaling any of them by a
/// positive factor leaves the output unchanged.
pub fn sign_rule<T: Scalar>(
    consumption_arg: &Field<T>,
    tax_arg: &Field<T>,
    abatement_arg: &Field<T>,
    mask: &RegionMask,
) -> (Field<T>, Field<T>, Field<T>) {
    let n = consumption_arg.len();
    assert_eq!(tax_arg.len(), n, "switching field size mismatch");
    assert_eq!(abatement_arg.len(), n, "switching field size mismatch");
    let mut v1 = consumption_arg.clone();
    let mut v2 = tax_arg.clone();
    let mut v3 = abatement_arg.clone();
    for i in 0..n {
        v1[i] = sgn(consumption_arg[i]);
        if mask.contains(i) {
            v2[i] = -sgn(tax_arg[i]);
            v3[i] = -sgn(abatement_arg[i]);
        } else {
            v2[i] = T::zero();
            v3[i] = T::zero();
        }
    }
    (v1, v2, v3)
}

/// Ascent direction for every time level: consumption follows
/// `sgn(1 - lambda_k)`, tax `-sgn(beta_star)`, abatement
/// `-sgn(beta2 + lambda_p)`, the last two only on the control region.
pub fn ascent_direction<T: Scalar>(
    system: &System<T>,
    state: &StatePair<T>,
    adjoint: &AdjointPair<T>,
    controls: &ControlSet<T>,
) -> ControlDirection<T> {
    let grid = system.grid();
    let pr = system.params();
    let levels = controls.len();
    let mut v1s = Vec::with_capacity(levels);
    let mut v2s = Vec::with_capacity(levels);
    let mut v3s = Vec::with_capacity(levels);
    for n in 0..levels {
        let lk = adjoint.lambda_k.level(n);
        let lp = adjoint.lambda_p.level(n);
        let bstar = beta_star(system, state, adjoint, controls, n);
        let mut a1 = grid.zeros();
        let mut a3 = grid.zeros();
        for i in 0..grid.num_nodes() {
            a1[i] = T::one() - lk[i];
            a3[i] = pr.beta2 + lp[i];
        }
        let (v1, v2, v3) = sign_rule(&a1, &bstar, &a3, system.mask());
        v1s.push(v1);
        v2s.push(v2);
        v3s.push(v3);
    }
    let dt = pr.dt;
    ControlDirection {
        v1: Trajectory::from_fields(dt, v1s).expect("uniform level shapes"),
        v2: Trajectory::from_fields(dt, v2s).expect("uniform level shapes"),
        v3: Trajectory::from_fields(dt, v3s).expect("uniform level shapes"),
    }
}

/// Directional derivative of the welfare functional along `dir`, evaluated
/// through the costates:
///
/// `dI = int k (v1 (1 - lambda_k) - I_w v2 beta_star) - int p v3 I_w (beta2 + lambda_p)`
///
/// with the objective's space quadrature. Each time step contributes its
/// state, controls, and direction at the frozen level `n`, while the
/// costates enter at the step midpoint `(lambda(n) + lambda(n+1)) / 2`,
/// which pairs the backward scheme with the forward one more accurately
/// than either endpoint.
pub fn directional_derivative<T: Scalar>(
    system: &System<T>,
    state: &StatePair<T>,
    adjoint: &AdjointPair<T>,
    controls: &ControlSet<T>,
    dir: &ControlDirection<T>,
) -> T {
    let grid = system.grid();
    let pr = system.params();
    let mask = system.mask();
    let half = T::of(0.5);
    let mut acc = T::zero();
    for n in 0..system.num_steps() {
        let (k, p) = (state.k.level(n), state.p.level(n));
        let lk = adjoint
            .lambda_k
            .level(n)
            .lin_comb(half, adjoint.lambda_k.level(n + 1), half);
        let lp = adjoint
            .lambda_p
            .level(n)
            .lin_comb(half, adjoint.lambda_p.level(n + 1), half);
        let bstar = beta_star_fields(system, k, p, controls.tau().level(n), &lk, &lp);
        let (v1, v2, v3) = (dir.v1.level(n), dir.v2.level(n), dir.v3.level(n));
        for i in 0..grid.num_nodes() {
            let m = grid.quad_weight(i);
            let mut term = v1[i] * (T::one() - lk[i]);
            if mask.contains(i) {
                term -= v2[i] * bstar[i];
                acc -= m * p[i] * v3[i] * (pr.beta2 + lp[i]);
            }
            acc += m * k[i] * term;
        }
    }
    pr.dt * acc
}

/// Exact Euclidean projection of `(c, tau)` onto the triangle
/// `{c >= 0, tau >= 0, c + tau <= budget}`.
///
/// If clamping the negatives lands inside the budget, that is the nearest
/// point; otherwise the projection lies on the budget edge, found by
/// projecting onto that segment.
pub fn project_triangle<T: Scalar>(c: T, tau: T, budget: T) -> (T, T) {
    let cx = c.max(T::zero());
    let cy = tau.max(T::zero());
    if cx + cy <= budget {
        return (cx, cy);
    }
    let half = T::of(0.5);
    let t = (half * (budget - c + tau)).max(T::zero()).min(budget);
    (budget - t, t)
}

/// Moves `u` by `eps0` along `v`, then projects every node back onto the
/// feasible set: `(c, tau)` onto the budget triangle, `xi` onto the cap
/// interval, tax and abatement zeroed outside the control region.
pub fn feasible_step<T: Scalar>(
    system: &System<T>,
    u: &ControlSet<T>,
    v: &ControlDirection<T>,
    eps0: T,
) -> Result<ControlSet<T>> {
    let pr = system.params();
    let budget = pr.consumable();
    let cap = pr.abatement_cap;
    let levels = u.len();
    if v.v1.len() != levels {
        return Err(Error::ShapeMismatch(
            "direction and controls have different horizons".into(),
        ));
    }
    let grid = system.grid();
    let dt = pr.dt;
    let mut cs = Vec::with_capacity(levels);
    let mut taus = Vec::with_capacity(levels);
    let mut xis = Vec::with_capacity(levels);
    for n in 0..levels {
        let (c, tau, xi) = (u.c().level(n), u.tau().level(n), u.xi().level(n));
        let (v1, v2, v3) = (v.v1.level(n), v.v2.level(n), v.v3.level(n));
        let mut nc = grid.zeros();
        let mut nt = grid.zeros();
        let mut nx = grid.zeros();
        for i in 0..grid.num_nodes() {
            let (pc, pt) = project_triangle(c[i] + eps0 * v1[i], tau[i] + eps0 * v2[i], budget);
            nc[i] = pc;
            nt[i] = pt;
            nx[i] = (xi[i] + eps0 * v3[i]).max(T::zero()).min(cap);
        }
        cs.push(nc);
        taus.push(nt);
        xis.push(nx);
    }
    ControlSet::new(
        Trajectory::from_fields(dt, cs)?,
        Trajectory::from_fields(dt, taus)?,
        Trajectory::from_fields(dt, xis)?,
        u.mask().clone(),
        pr,
    )
}

/// What the line search settled on.
#[derive(Debug, Clone)]
pub struct LineSearchOutcome<T> {
    /// Winning weight on the old controls; `0` keeps the new point, `1` the
    /// old one.
    pub eta0: T,
    /// The winning convex combination.
    pub controls: ControlSet<T>,
    /// Its state trajectories.
    pub state: StatePair<T>,
    /// Its objective.
    pub objective: ObjectiveBreakdown<T>,
}

/// Maximizes `I(eta u_old + (1 - eta) u_new)` over the uniform samples
/// `eta in {0, 1/m, ..., 1}`, each evaluated with a full forward solve.
///
/// The sample `eta = 1` reproduces the old controls exactly, so the winner
/// never scores below them. Ties keep the smallest `eta`, preferring the
/// newer controls.
pub fn line_search<T: Scalar>(
    system: &System<T>,
    u_old: &ControlSet<T>,
    u_new: &ControlSet<T>,
    k0: &Field<T>,
    p0: &Field<T>,
    m: usize,
) -> Result<LineSearchOutcome<T>> {
    if m == 0 {
        return Err(Error::InvalidParams(
            "line search needs at least one subinterval".into(),
        ));
    }
    let pr = system.params();
    let mut best: Option<LineSearchOutcome<T>> = None;
    for j in 0..=m {
        let eta = T::of(j as f64) / T::of(m as f64);
        let candidate = ControlSet::convex(eta, u_old, u_new, pr)?;
        let state = system.solve_forward(&candidate, k0, p0)?;
        let objective = evaluate_objective(system, &state, &candidate)?;
        let better = match &best {
            None => true,
            Some(b) => objective.total > b.objective.total,
        };
        if better {
            best = Some(LineSearchOutcome {
                eta0: eta,
                controls: candidate,
                state,
                objective,
            });
        }
    }
    Ok(best.expect("at least two samples evaluated"))
}

/// Runs the full ascent loop from `initial`.
///
/// Each update solves the costates, forms the sign direction, steps and
/// projects, then line-searches the segment back toward the previous
/// controls. The loop stops when an update improves the objective by less
/// than `cfg.tol`, returning the pre-update controls, or after
/// `cfg.max_iter` updates, returning the last ones. With `max_iter == 0` the
/// initial controls come straight back after a single forward solve.
pub fn optimize<T: Scalar>(
    system: &System<T>,
    k0: &Field<T>,
    p0: &Field<T>,
    initial: ControlSet<T>,
    cfg: &OptimizerConfig<T>,
) -> Result<OptimizationResult<T>> {
    cfg.validate()?;
    initial.validate(system.params())?;
    let mut cur = initial;
    let mut cur_state = system.solve_forward(&cur, k0, p0)?;
    let mut cur_obj = evaluate_objective(system, &cur_state, &cur)?;
    let mut objective_history = vec![cur_obj];
    let mut eta_history = Vec::new();
    for _ in 0..cfg.max_iter {
        let adjoint = system.solve_adjoint(&cur_state, &cur)?;
        let dir = ascent_direction(system, &cur_state, &adjoint, &cur);
        let trial = feasible_step(system, &cur, &dir, cfg.eps0)?;
        let ls = line_search(system, &cur, &trial, k0, p0, cfg.eta_samples)?;
        ls.controls.validate(system.params())?;
        let improvement = ls.objective.total - cur_obj.total;
        objective_history.push(ls.objective);
        eta_history.push(ls.eta0);
        if improvement < cfg.tol {
            let (best_controls, best_objective) = if ls.objective.total > cur_obj.total {
                (ls.controls, ls.objective)
            } else {
                (cur.clone(), cur_obj)
            };
            return Ok(OptimizationResult {
                controls: cur,
                state: cur_state,
                adjoint,
                best_controls,
                best_objective,
                objective_history,
                eta_history,
                stop_reason: StopReason::Tolerance,
            });
        }
        cur = ls.controls;
        cur_state = ls.state;
        cur_obj = ls.objective;
    }
    let adjoint = system.solve_adjoint(&cur_state, &cur)?;
    Ok(OptimizationResult {
        controls: cur.clone(),
        state: cur_state,
        adjoint,
        best_controls: cur,
        best_objective: cur_obj,
        objective_history,
        eta_history,
        stop_reason: StopReason::MaxIter,
    })
}
