//! Forward state, backward costate, and sensitivity solvers.
//!
//! All three systems share one semi-implicit scheme: diffusion is treated
//! implicitly, reactions explicitly, so each step solves two constant-matrix
//! linear systems. The state uses `M/dt + A`; the costates additionally absorb
//! their constant decay into the matrix, `M/dt + A + delta M`, which keeps
//! every matrix time-independent and factored exactly once.
//!
//! Time levels are `0..=steps` with `steps = horizon / dt`. A step between
//! levels `n` and `n + 1`, in either direction, freezes coefficient fields
//! (state and controls) at level `n`.

use crate::banded::BandedCholesky;
use crate::error::{Error, Result};
use crate::grid::{nonlocal_apply, DiffusionOperator, Field, Grid, Kernel};
use crate::model::{effective_capital, ModelParams, RegionMask};
use crate::scalar::Scalar;

/// Absolute slack for the feasibility checks; covers floating-point roundoff
/// in convex combinations and projections, far below any control scale.
const FEASIBILITY_SLACK: f64 = 1e-12;

/// Ordered sequence of nodal fields, one per time level.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    dt: T,
    fields: Vec<Field<T>>,
}

impl<T: Scalar> Trajectory<T> {
    /// Builds a trajectory from pre-computed levels.
    pub fn from_fields(dt: T, fields: Vec<Field<T>>) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::ShapeMismatch("trajectory has no time levels".into()));
        }
        let len = fields[0].len();
        if fields.iter().any(|f| f.len() != len) {
            return Err(Error::ShapeMismatch(
                "trajectory levels live on different grids".into(),
            ));
        }
        Ok(Trajectory { dt, fields })
    }

    /// Constant-in-time, constant-in-space trajectory with `steps + 1` levels.
    pub fn constant(grid: &Grid<T>, steps: usize, dt: T, value: T) -> Self {
        Trajectory {
            dt,
            fields: vec![grid.constant(value); steps + 1],
        }
    }

    /// All-zero trajectory with `steps + 1` levels.
    pub fn zeros(grid: &Grid<T>, steps: usize, dt: T) -> Self {
        Self::constant(grid, steps, dt, T::zero())
    }

    /// Number of stored time levels (`steps + 1`).
    pub fn len(&self) -> usize {
        self.fields.len()
    }

    /// True only for an impossible empty trajectory.
    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// Number of time steps.
    pub fn num_steps(&self) -> usize {
        self.fields.len() - 1
    }

    /// Step size between levels.
    pub fn dt(&self) -> T {
        self.dt
    }

    /// Field at time level `n`.
    pub fn level(&self, n: usize) -> &Field<T> {
        &self.fields[n]
    }

    /// Mutable field at time level `n`.
    pub fn level_mut(&mut self, n: usize) -> &mut Field<T> {
        &mut self.fields[n]
    }

    /// Pointwise, levelwise combination `a * self + b * other`.
    pub fn lin_comb(&self, a: T, other: &Trajectory<T>, b: T) -> Trajectory<T> {
        assert_eq!(self.len(), other.len(), "trajectory length mismatch");
        let fields = self
            .fields
            .iter()
            .zip(&other.fields)
            .map(|(x, y)| x.lin_comb(a, y, b))
            .collect();
        Trajectory {
            dt: self.dt,
            fields,
        }
    }

    /// Smallest value over all levels and nodes, with the level it occurs at.
    pub fn global_min(&self) -> (usize, T) {
        let mut best = (0, T::infinity());
        for (n, f) in self.fields.iter().enumerate() {
            let m = f.min_value();
            if m < best.1 {
                best = (n, m);
            }
        }
        best
    }

    /// Largest absolute value over all levels and nodes.
    pub fn max_abs(&self) -> T {
        self.fields
            .iter()
            .fold(T::zero(), |m, f| m.max(f.max_abs()))
    }
}

/// Capital and pollution trajectories of one forward solve.
#[derive(Debug, Clone)]
pub struct StatePair<T> {
    /// Capital density over time.
    pub k: Trajectory<T>,
    /// Pollution density over time.
    pub p: Trajectory<T>,
}

impl<T: Scalar> StatePair<T> {
    /// Smallest capital and pollution values over the whole trajectory.
    pub fn min_values(&self) -> (T, T) {
        (self.k.global_min().1, self.p.global_min().1)
    }

    /// First quantity dipping below `-threshold`, with level and value.
    pub fn undershoot(&self, threshold: T) -> Option<(&'static str, usize, T)> {
        let (nk, mk) = self.k.global_min();
        if mk < -threshold {
            return Some(("capital", nk, mk));
        }
        let (np, mp) = self.p.global_min();
        if mp < -threshold {
            return Some(("pollution", np, mp));
        }
        None
    }
}

/// Costate trajectories of one backward solve.
#[derive(Debug, Clone)]
pub struct AdjointPair<T> {
    /// Costate attached to capital.
    pub lambda_k: Trajectory<T>,
    /// Costate attached to pollution.
    pub lambda_p: Trajectory<T>,
}

/// Feasible control triple: consumption on the whole domain, tax and
/// abatement supported on the control region.
///
/// Invariants, enforced at construction and re-checked each optimizer
/// iteration: `c >= 0`, `tau >= 0`, `c + tau <= 1 - saving` (up to roundoff
/// slack), `0 <= xi <= abatement_cap`, and `tau`, `xi` identically zero
/// outside the region.
#[derive(Debug, Clone)]
pub struct ControlSet<T> {
    c: Trajectory<T>,
    tau: Trajectory<T>,
    xi: Trajectory<T>,
    mask: RegionMask,
}

impl<T: Scalar> ControlSet<T> {
    /// Builds a control set; `tau` and `xi` are forced to zero outside the
    /// region, then all bounds are validated.
    pub fn new(
        c: Trajectory<T>,
        mut tau: Trajectory<T>,
        mut xi: Trajectory<T>,
        mask: RegionMask,
        params: &ModelParams<T>,
    ) -> Result<Self> {
        if c.len() != tau.len() || c.len() != xi.len() {
            return Err(Error::ShapeMismatch(
                "control trajectories have different lengths".into(),
            ));
        }
        for n in 0..tau.len() {
            for i in 0..mask.len() {
                if !mask.contains(i) {
                    tau.level_mut(n)[i] = T::zero();
                    xi.level_mut(n)[i] = T::zero();
                }
            }
        }
        let set = ControlSet { c, tau, xi, mask };
        set.validate(params)?;
        Ok(set)
    }

    /// Consumption trajectory.
    pub fn c(&self) -> &Trajectory<T> {
        &self.c
    }

    /// Green-tax trajectory.
    pub fn tau(&self) -> &Trajectory<T> {
        &self.tau
    }

    /// Abatement trajectory.
    pub fn xi(&self) -> &Trajectory<T> {
        &self.xi
    }

    /// Control-region mask the set was built with.
    pub fn mask(&self) -> &RegionMask {
        &self.mask
    }

    /// Number of time levels.
    pub fn len(&self) -> usize {
        self.c.len()
    }

    /// True only for an impossible empty set.
    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    /// Re-checks every feasibility invariant.
    pub fn validate(&self, params: &ModelParams<T>) -> Result<()> {
        let slack = T::of(FEASIBILITY_SLACK);
        let budget = params.consumable();
        let cap = params.abatement_cap;
        for n in 0..self.c.len() {
            let (c, tau, xi) = (self.c.level(n), self.tau.level(n), self.xi.level(n));
            for i in 0..self.mask.len() {
                let (ci, ti, xii) = (c[i], tau[i], xi[i]);
                if !(ci >= T::zero() && ti >= T::zero() && xii >= T::zero()) {
                    return Err(Error::Infeasible(format!(
                        "negative control at level {n}, node {i}: c={ci}, tau={ti}, xi={xii}"
                    )));
                }
                if ci + ti > budget + slack {
                    return Err(Error::Infeasible(format!(
                        "c + tau = {} exceeds budget {budget} at level {n}, node {i}",
                        ci + ti
                    )));
                }
                if xii > cap + slack {
                    return Err(Error::Infeasible(format!(
                        "xi = {xii} exceeds cap {cap} at level {n}, node {i}"
                    )));
                }
                if !self.mask.contains(i) && (ti != T::zero() || xii != T::zero()) {
                    return Err(Error::Infeasible(format!(
                        "tax or abatement active outside the region at level {n}, node {i}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Convex combination `eta * a + (1 - eta) * b`; feasibility is preserved
    /// by convexity and re-validated.
    pub fn convex(eta: T, a: &ControlSet<T>, b: &ControlSet<T>, params: &ModelParams<T>) -> Result<Self> {
        debug_assert_eq!(a.mask.flags(), b.mask.flags(), "mask mismatch");
        let w = T::one() - eta;
        ControlSet::new(
            a.c.lin_comb(eta, &b.c, w),
            a.tau.lin_comb(eta, &b.tau, w),
            a.xi.lin_comb(eta, &b.xi, w),
            a.mask.clone(),
            params,
        )
    }

    /// Perturbed set `self + eps * dir`; fails if the result is infeasible.
    pub fn add_scaled(
        &self,
        dir: &ControlDirection<T>,
        eps: T,
        params: &ModelParams<T>,
    ) -> Result<Self> {
        ControlSet::new(
            self.c.lin_comb(T::one(), &dir.v1, eps),
            self.tau.lin_comb(T::one(), &dir.v2, eps),
            self.xi.lin_comb(T::one(), &dir.v3, eps),
            self.mask.clone(),
            params,
        )
    }
}

/// Perturbation direction for the control triple; `v2` and `v3` vanish
/// outside the control region.
#[derive(Debug, Clone)]
pub struct ControlDirection<T> {
    /// Consumption perturbation.
    pub v1: Trajectory<T>,
    /// Tax perturbation.
    pub v2: Trajectory<T>,
    /// Abatement perturbation.
    pub v3: Trajectory<T>,
}

impl<T: Scalar> ControlDirection<T> {
    /// Direction pointing from `from` toward `to`, i.e. `to - from`.
    ///
    /// Both sets are feasible, so `from + eps * (to - from)` stays feasible
    /// for any `eps` in `[0, 1]`.
    pub fn difference(to: &ControlSet<T>, from: &ControlSet<T>) -> Self {
        let one = T::one();
        ControlDirection {
            v1: to.c().lin_comb(one, from.c(), -one),
            v2: to.tau().lin_comb(one, from.tau(), -one),
            v3: to.xi().lin_comb(one, from.xi(), -one),
        }
    }

    /// Scaled copy `factor * self`.
    pub fn scaled(&self, factor: T) -> Self {
        let zero_of = |t: &Trajectory<T>| t.lin_comb(factor, t, T::zero());
        ControlDirection {
            v1: zero_of(&self.v1),
            v2: zero_of(&self.v2),
            v3: zero_of(&self.v3),
        }
    }
}

/// Assembled operators, factorizations, and coefficients for one scenario.
///
/// Immutable after construction; both solvers and the optimizer borrow it
/// shared, so it can be used concurrently from several threads.
pub struct System<T> {
    grid: Grid<T>,
    params: ModelParams<T>,
    mask: RegionMask,
    kernel: Kernel<T>,
    kernel_t: Kernel<T>,
    op_k: DiffusionOperator<T>,
    op_p: DiffusionOperator<T>,
    state_k: BandedCholesky<T>,
    state_p: BandedCholesky<T>,
    adjoint_k: BandedCholesky<T>,
    adjoint_p: BandedCholesky<T>,
}

impl<T: Scalar> System<T> {
    /// Assembles and factors all four time-stepping matrices.
    pub fn new(
        grid: Grid<T>,
        params: ModelParams<T>,
        mask: RegionMask,
        kernel: Kernel<T>,
    ) -> Result<Self> {
        params.validate()?;
        if mask.len() != grid.num_nodes() {
            return Err(Error::ShapeMismatch(format!(
                "mask covers {} nodes, grid has {}",
                mask.len(),
                grid.num_nodes()
            )));
        }
        let op_k = DiffusionOperator::new(&grid, params.d1);
        let op_p = DiffusionOperator::new(&grid, params.d2);
        let inv_dt = T::one() / params.dt;
        let factor = |op: &DiffusionOperator<T>, shift: T| -> Result<BandedCholesky<T>> {
            let mut m = op.stiffness.clone();
            m.add_scaled_diagonal(&op.lumped_mass, shift);
            m.cholesky()
        };
        let state_k = factor(&op_k, inv_dt)?;
        let state_p = factor(&op_p, inv_dt)?;
        let adjoint_k = factor(&op_k, inv_dt + params.delta1)?;
        let adjoint_p = factor(&op_p, inv_dt + params.delta2)?;
        Ok(System {
            grid,
            params,
            mask,
            kernel_t: kernel.transposed(),
            kernel,
            op_k,
            op_p,
            state_k,
            state_p,
            adjoint_k,
            adjoint_p,
        })
    }

    /// Convenience constructor with the constant kernel from the parameters.
    pub fn with_constant_kernel(
        grid: Grid<T>,
        params: ModelParams<T>,
        mask: RegionMask,
    ) -> Result<Self> {
        let kernel = Kernel::Constant(params.phi);
        System::new(grid, params, mask, kernel)
    }

    /// Grid the system is assembled on.
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    /// Model parameters.
    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    /// Control-region mask.
    pub fn mask(&self) -> &RegionMask {
        &self.mask
    }

    /// Emission kernel.
    pub fn kernel(&self) -> &Kernel<T> {
        &self.kernel
    }

    /// Emission kernel with source and target swapped.
    pub fn kernel_transposed(&self) -> &Kernel<T> {
        &self.kernel_t
    }

    /// Capital diffusion operator.
    pub fn operator_k(&self) -> &DiffusionOperator<T> {
        &self.op_k
    }

    /// Pollution diffusion operator.
    pub fn operator_p(&self) -> &DiffusionOperator<T> {
        &self.op_p
    }

    /// Number of time steps over the horizon.
    pub fn num_steps(&self) -> usize {
        self.params.num_steps()
    }

    /// Expected number of stored time levels.
    pub fn num_levels(&self) -> usize {
        self.num_steps() + 1
    }

    /// One semi-implicit state step from level `n` to `n + 1`, with all
    /// fields frozen at level `n`.
    pub fn step_state(
        &self,
        k: &Field<T>,
        p: &Field<T>,
        c: &Field<T>,
        tau: &Field<T>,
        xi: &Field<T>,
    ) -> (Field<T>, Field<T>) {
        let n = self.grid.num_nodes();
        let pr = &self.params;
        let dt = pr.dt;
        let mut prod = self.grid.zeros();
        for i in 0..n {
            let ke = effective_capital(k[i], tau[i], self.mask.contains(i));
            prod[i] = pr.production_raw(ke);
        }
        let w = nonlocal_apply(&self.grid, &prod, &self.kernel);
        let mut rhs_k = vec![T::zero(); n];
        let mut rhs_p = vec![T::zero(); n];
        for i in 0..n {
            let g = pr.pollution_feedback_raw(p[i]);
            let growth = pr.tech * prod[i] / g - pr.delta1 * k[i] - c[i] * k[i];
            let emission = pr.theta * w[i] - pr.delta2 * p[i] - xi[i] * p[i];
            let m = self.grid.quad_weight(i);
            rhs_k[i] = m * (k[i] / dt + growth);
            rhs_p[i] = m * (p[i] / dt + emission);
        }
        self.state_k.solve_in_place(&mut rhs_k);
        self.state_p.solve_in_place(&mut rhs_p);
        (
            self.grid.field_unchecked(rhs_k),
            self.grid.field_unchecked(rhs_p),
        )
    }

    /// Solves the state system forward from `(k0, p0)` under `controls`.
    pub fn solve_forward(
        &self,
        controls: &ControlSet<T>,
        k0: &Field<T>,
        p0: &Field<T>,
    ) -> Result<StatePair<T>> {
        self.grid.check_field(k0)?;
        self.grid.check_field(p0)?;
        self.check_horizon(controls)?;
        let steps = self.num_steps();
        let mut ks = Vec::with_capacity(steps + 1);
        let mut ps = Vec::with_capacity(steps + 1);
        ks.push(k0.clone());
        ps.push(p0.clone());
        for n in 0..steps {
            let (k_next, p_next) = self.step_state(
                &ks[n],
                &ps[n],
                controls.c().level(n),
                controls.tau().level(n),
                controls.xi().level(n),
            );
            if !k_next.all_finite() {
                return Err(Error::NonFinite {
                    quantity: "capital",
                    step: n + 1,
                });
            }
            if !p_next.all_finite() {
                return Err(Error::NonFinite {
                    quantity: "pollution",
                    step: n + 1,
                });
            }
            ks.push(k_next);
            ps.push(p_next);
        }
        Ok(StatePair {
            k: Trajectory::from_fields(self.params.dt, ks)?,
            p: Trajectory::from_fields(self.params.dt, ps)?,
        })
    }

    /// One backward costate step from level `n + 1` to `n`.
    ///
    /// `lk_next`, `lp_next` are the costates at level `n + 1`; state and
    /// control fields are frozen at level `n`. Constant decay is implicit,
    /// every state-coupled source explicit.
    pub fn step_adjoint(
        &self,
        lk_next: &Field<T>,
        lp_next: &Field<T>,
        k: &Field<T>,
        p: &Field<T>,
        c: &Field<T>,
        tau: &Field<T>,
        xi: &Field<T>,
    ) -> (Field<T>, Field<T>) {
        let n = self.grid.num_nodes();
        let pr = &self.params;
        let dt = pr.dt;
        let w = nonlocal_apply(&self.grid, lp_next, &self.kernel_t);
        let mut rhs_k = vec![T::zero(); n];
        let mut rhs_p = vec![T::zero(); n];
        for i in 0..n {
            let inside = self.mask.contains(i);
            let retained = if inside { T::one() - tau[i] } else { T::one() };
            let ke = retained * k[i];
            let f = pr.production_raw(ke);
            let fp = pr.production_deriv_raw(ke);
            let g = pr.pollution_feedback_raw(p[i]);
            let growth = pr.tech * retained * fp / g - c[i];
            let src_k =
                growth * lk_next[i] + c[i] - pr.beta1 * tau[i] + retained * fp * pr.theta * w[i];
            let src_p = -(pr.beta0
                + pr.beta2 * xi[i]
                + lk_next[i] * pr.feedback_grad_factor(p[i]) * f
                + xi[i] * lp_next[i]);
            let m = self.grid.quad_weight(i);
            rhs_k[i] = m * (lk_next[i] / dt + src_k);
            rhs_p[i] = m * (lp_next[i] / dt + src_p);
        }
        self.adjoint_k.solve_in_place(&mut rhs_k);
        self.adjoint_p.solve_in_place(&mut rhs_p);
        (
            self.grid.field_unchecked(rhs_k),
            self.grid.field_unchecked(rhs_p),
        )
    }

    /// Solves the costate system backward from zero final data.
    pub fn solve_adjoint(
        &self,
        state: &StatePair<T>,
        controls: &ControlSet<T>,
    ) -> Result<AdjointPair<T>> {
        self.check_horizon(controls)?;
        self.check_state(state)?;
        let steps = self.num_steps();
        let mut lks = Vec::with_capacity(steps + 1);
        let mut lps = Vec::with_capacity(steps + 1);
        lks.push(self.grid.zeros());
        lps.push(self.grid.zeros());
        for n in (0..steps).rev() {
            let last = lks.len() - 1;
            let (lk, lp) = self.step_adjoint(
                &lks[last],
                &lps[last],
                state.k.level(n),
                state.p.level(n),
                controls.c().level(n),
                controls.tau().level(n),
                controls.xi().level(n),
            );
            if !lk.all_finite() {
                return Err(Error::NonFinite {
                    quantity: "capital costate",
                    step: n,
                });
            }
            if !lp.all_finite() {
                return Err(Error::NonFinite {
                    quantity: "pollution costate",
                    step: n,
                });
            }
            lks.push(lk);
            lps.push(lp);
        }
        lks.reverse();
        lps.reverse();
        Ok(AdjointPair {
            lambda_k: Trajectory::from_fields(self.params.dt, lks)?,
            lambda_p: Trajectory::from_fields(self.params.dt, lps)?,
        })
    }

    /// Solves the sensitivity system: the directional derivative of the
    /// state with respect to the controls, along `dir`, from zero initial
    /// data. Uses the same scheme and matrices as the state solve, so the
    /// result is the exact derivative of the discrete forward map.
    pub fn solve_sensitivity(
        &self,
        state: &StatePair<T>,
        controls: &ControlSet<T>,
        dir: &ControlDirection<T>,
    ) -> Result<(Trajectory<T>, Trajectory<T>)> {
        self.check_horizon(controls)?;
        self.check_state(state)?;
        if dir.v1.len() != controls.len() {
            return Err(Error::ShapeMismatch(
                "direction and controls have different horizons".into(),
            ));
        }
        let n = self.grid.num_nodes();
        let pr = &self.params;
        let dt = pr.dt;
        let steps = self.num_steps();
        let mut zks = Vec::with_capacity(steps + 1);
        let mut zps = Vec::with_capacity(steps + 1);
        zks.push(self.grid.zeros());
        zps.push(self.grid.zeros());
        for lev in 0..steps {
            let (k, p) = (state.k.level(lev), state.p.level(lev));
            let (c, tau, xi) = (
                controls.c().level(lev),
                controls.tau().level(lev),
                controls.xi().level(lev),
            );
            let (v1, v2, v3) = (dir.v1.level(lev), dir.v2.level(lev), dir.v3.level(lev));
            let (zk, zp) = (&zks[lev], &zps[lev]);
            // Shared linearized production: f'(ke) ((1 - tau) zk - v2 k),
            // which also feeds the nonlocal emission term.
            let mut lin_prod = self.grid.zeros();
            for i in 0..n {
                let inside = self.mask.contains(i);
                let retained = if inside { T::one() - tau[i] } else { T::one() };
                let fp = pr.production_deriv_raw(retained * k[i]);
                lin_prod[i] = fp * (retained * zk[i] - v2[i] * k[i]);
            }
            let wq = nonlocal_apply(&self.grid, &lin_prod, &self.kernel);
            let mut rhs_k = vec![T::zero(); n];
            let mut rhs_p = vec![T::zero(); n];
            for i in 0..n {
                let inside = self.mask.contains(i);
                let retained = if inside { T::one() - tau[i] } else { T::one() };
                let f = pr.production_raw(retained * k[i]);
                let g = pr.pollution_feedback_raw(p[i]);
                let hk = pr.tech / g * lin_prod[i]
                    - pr.delta1 * zk[i]
                    - c[i] * zk[i]
                    - v1[i] * k[i]
                    - pr.feedback_grad_factor(p[i]) * f * zp[i];
                let hp = pr.theta * wq[i] - pr.delta2 * zp[i] - xi[i] * zp[i] - v3[i] * p[i];
                let m = self.grid.quad_weight(i);
                rhs_k[i] = m * (zk[i] / dt + hk);
                rhs_p[i] = m * (zp[i] / dt + hp);
            }
            self.state_k.solve_in_place(&mut rhs_k);
            self.state_p.solve_in_place(&mut rhs_p);
            let zk_next = self.grid.field_unchecked(rhs_k);
            let zp_next = self.grid.field_unchecked(rhs_p);
            if !zk_next.all_finite() || !zp_next.all_finite() {
                return Err(Error::NonFinite {
                    quantity: "sensitivity",
                    step: lev + 1,
                });
            }
            zks.push(zk_next);
            zps.push(zp_next);
        }
        Ok((
            Trajectory::from_fields(dt, zks)?,
            Trajectory::from_fields(dt, zps)?,
        ))
    }

    fn check_horizon(&self, controls: &ControlSet<T>) -> Result<()> {
        let expected = self.num_levels();
        if controls.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "controls store {} levels, horizon needs {expected}",
                controls.len()
            )));
        }
        self.grid.check_field(controls.c().level(0))?;
        Ok(())
    }

    fn check_state(&self, state: &StatePair<T>) -> Result<()> {
        if state.k.len() != self.num_levels() || state.p.len() != self.num_levels() {
            return Err(Error::ShapeMismatch(format!(
                "state stores {}/{} levels, horizon needs {}",
                state.k.len(),
                state.p.len(),
                self.num_levels()
            )));
        }
        self.grid.check_field(state.k.level(0))?;
        Ok(())
    }
}
