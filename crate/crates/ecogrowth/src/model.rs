//! Pointwise model functions, parameter set, and control-region geometry.
//!
//! Production follows a saturating law `f(r) = alpha1 r^gamma / (1 + alpha2 r^gamma)`
//! of the effective (after-tax) capital, dampened by the pollution feedback
//! `g(p) = 1 + chi p^2`. Emissions feed pollution through a nonlocal kernel,
//! and three controls act on the economy: consumption `c` everywhere, green
//! tax `tau` and abatement `xi` on the control region.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Scalar;

/// All coefficients of the economy and of the welfare functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<T> {
    /// Capital diffusivity.
    pub d1: T,
    /// Pollution diffusivity.
    pub d2: T,
    /// Capital depreciation rate.
    pub delta1: T,
    /// Pollution natural decay rate.
    pub delta2: T,
    /// Technology level multiplying production.
    pub tech: T,
    /// Emission intensity of production.
    pub theta: T,
    /// Production numerator coefficient.
    pub alpha1: T,
    /// Production saturation coefficient.
    pub alpha2: T,
    /// Production exponent (at least 1).
    pub gamma: T,
    /// Pollution-feedback strength in `g(p) = 1 + chi p^2`.
    pub chi: T,
    /// Value of the constant emission kernel.
    pub phi: T,
    /// Saved share of output; consumption plus tax may not exceed `1 - saving`.
    pub saving: T,
    /// Upper bound on the abatement control.
    pub abatement_cap: T,
    /// Welfare weight of pollution stock damage.
    pub beta0: T,
    /// Welfare weight of tax drag on capital.
    pub beta1: T,
    /// Welfare weight of abatement cost.
    pub beta2: T,
    /// Final time of the planning horizon.
    pub horizon: T,
    /// Time step of the semi-implicit scheme.
    pub dt: T,
}

impl<T: Scalar> Default for ModelParams<T> {
    /// Benchmark coefficient set used by all scenario presets.
    fn default() -> Self {
        ModelParams {
            d1: T::one(),
            d2: T::one(),
            delta1: T::of(0.05),
            delta2: T::of(0.03),
            tech: T::one(),
            theta: T::of(2.0),
            alpha1: T::of(0.7),
            alpha2: T::one(),
            gamma: T::of(4.0),
            chi: T::one(),
            phi: T::of(0.3),
            saving: T::of(0.6),
            abatement_cap: T::of(0.5),
            beta0: T::one(),
            beta1: T::one(),
            beta2: T::one(),
            horizon: T::of(5.0),
            dt: T::of(0.05),
        }
    }
}

impl<T: Scalar> ModelParams<T> {
    /// Checks signs, ranges, and that the horizon is a whole number of steps.
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("d1", self.d1),
            ("d2", self.d2),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("tech", self.tech),
            ("theta", self.theta),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("chi", self.chi),
            ("phi", self.phi),
            ("abatement_cap", self.abatement_cap),
            ("beta0", self.beta0),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
        ];
        for (name, v) in nonneg {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        if !(self.gamma >= T::one()) {
            return Err(Error::InvalidParams(format!(
                "gamma must be at least 1, got {}",
                self.gamma
            )));
        }
        if !(self.saving > T::zero() && self.saving < T::one()) {
            return Err(Error::InvalidParams(format!(
                "saving must lie strictly between 0 and 1, got {}",
                self.saving
            )));
        }
        if !(self.dt > T::zero()) || !(self.horizon > T::zero()) {
            return Err(Error::InvalidParams(format!(
                "horizon {} and dt {} must be positive",
                self.horizon, self.dt
            )));
        }
        let steps = (self.horizon / self.dt).round();
        let drift = (steps * self.dt - self.horizon).abs();
        if steps < T::one() || drift > T::of(1e-9) * self.horizon.max(T::one()) {
            return Err(Error::InvalidParams(format!(
                "horizon {} is not a whole number of dt = {} steps",
                self.horizon, self.dt
            )));
        }
        Ok(())
    }

    /// Number of time steps over the horizon.
    pub fn num_steps(&self) -> usize {
        (self.horizon / self.dt)
            .round()
            .to_f64()
            .expect("step count fits in f64") as usize
    }

    /// Largest value `1 - saving` available for consumption plus tax.
    pub fn consumable(&self) -> T {
        T::one() - self.saving
    }

    /// Saturating production of capital `r`.
    ///
    /// Nondecreasing, zero at zero, approaches `alpha1 / alpha2` as `r` grows.
    pub fn production(&self, r: T) -> Result<T> {
        if r < T::zero() {
            return Err(Error::Domain(format!("production input {r} is negative")));
        }
        Ok(self.production_raw(r))
    }

    /// Derivative of the production function.
    pub fn production_deriv(&self, r: T) -> Result<T> {
        if r < T::zero() {
            return Err(Error::Domain(format!(
                "production derivative input {r} is negative"
            )));
        }
        Ok(self.production_deriv_raw(r))
    }

    /// Pollution damping factor `g(p) = 1 + chi p^2`, at least 1.
    pub fn pollution_feedback(&self, p: T) -> Result<T> {
        if p < T::zero() {
            return Err(Error::Domain(format!(
                "pollution feedback input {p} is negative"
            )));
        }
        Ok(self.pollution_feedback_raw(p))
    }

    /// Sensitivity of the damped technology level to pollution:
    /// `2 tech chi p / (1 + chi p^2)^2 = -d/dp [tech / g(p)]`.
    pub fn feedback_grad_factor(&self, p: T) -> T {
        let two = T::of(2.0);
        let g = self.pollution_feedback_raw(p);
        two * self.tech * self.chi * p / (g * g)
    }

    pub(crate) fn production_raw(&self, r: T) -> T {
        if r == T::zero() {
            // Avoids 0^gamma edge cases for gamma exactly 1.
            return T::zero();
        }
        let rg = r.powf(self.gamma);
        self.alpha1 * rg / (T::one() + self.alpha2 * rg)
    }

    pub(crate) fn production_deriv_raw(&self, r: T) -> T {
        if r == T::zero() {
            return if self.gamma == T::one() {
                self.alpha1
            } else {
                T::zero()
            };
        }
        let rg = r.powf(self.gamma);
        let den = T::one() + self.alpha2 * rg;
        self.alpha1 * self.gamma * r.powf(self.gamma - T::one()) / (den * den)
    }

    pub(crate) fn pollution_feedback_raw(&self, p: T) -> T {
        T::one() + self.chi * p * p
    }
}

/// After-tax capital available for production: `(1 - tau) k` inside the
/// control region, `k` outside.
#[inline]
pub fn effective_capital<T: Scalar>(k: T, tau: T, in_region: bool) -> T {
    if in_region {
        (T::one() - tau) * k
    } else {
        k
    }
}

/// Geometry of the control region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegionShape<T> {
    /// No control anywhere.
    Empty,
    /// Closed disk; nodes with `|x - center| <= radius` are controlled.
    Disk {
        /// Disk center.
        center: [T; 2],
        /// Disk radius.
        radius: T,
    },
    /// The whole domain is controlled.
    Whole,
}

/// Nodewise indicator of the control region on a specific grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    flags: Vec<bool>,
    inside: usize,
}

impl RegionMask {
    /// Rasterizes a region shape on the grid: a node belongs to the region
    /// when its position satisfies the shape predicate.
    pub fn build<T: Scalar>(grid: &Grid<T>, shape: &RegionShape<T>) -> Self {
        let n = grid.num_nodes();
        let mut flags = vec![false; n];
        match shape {
            RegionShape::Empty => {}
            RegionShape::Whole => flags.iter_mut().for_each(|f| *f = true),
            RegionShape::Disk { center, radius } => {
                for (i, flag) in flags.iter_mut().enumerate() {
                    let [x, y] = grid.node_position(i);
                    let dx = x - center[0];
                    let dy = y - center[1];
                    *flag = (dx * dx + dy * dy).sqrt() <= *radius;
                }
            }
        }
        let inside = flags.iter().filter(|f| **f).count();
        RegionMask { flags, inside }
    }

    /// Number of nodes covered by the mask.
    pub fn len(&self) -> usize {
        self.flags.len()
    }

    /// True when the mask covers no node.
    pub fn is_empty(&self) -> bool {
        self.inside == 0
    }

    /// Number of nodes inside the region.
    pub fn inside_count(&self) -> usize {
        self.inside
    }

    /// Whether node `i` lies inside the region.
    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.flags[i]
    }

    /// Indicator flags, node-ordered.
    pub fn flags(&self) -> &[bool] {
        &self.flags
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn bench_params() -> ModelParams<f64> {
        ModelParams::default()
    }

    #[test]
    fn default_params_validate() {
        bench_params().validate().unwrap();
        assert_eq!(bench_params().num_steps(), 100);
    }

    #[test]
    fn horizon_must_divide_into_steps() {
        let mut p = bench_params();
        p.dt = 0.07;
        assert!(p.validate().is_err());
        p.dt = 0.05;
        p.gamma = 0.5;
        assert!(p.validate().is_err());
        let mut q = bench_params();
        q.saving = 1.0;
        assert!(q.validate().is_err());
    }

    #[test]
    fn production_benchmark_values() {
        let p = bench_params();
        assert_eq!(p.production(0.0).unwrap(), 0.0);
        assert_relative_eq!(p.production(1.0).unwrap(), 0.35, epsilon = 1e-15);
        // Saturation toward alpha1 / alpha2.
        assert_relative_eq!(p.production(100.0).unwrap(), 0.7, epsilon = 1e-6);
        assert!(p.production(-1e-3).is_err());
    }

    #[test]
    fn production_deriv_benchmark_values() {
        let p = bench_params();
        assert_eq!(p.production_deriv(0.0).unwrap(), 0.0);
        assert_relative_eq!(p.production_deriv(1.0).unwrap(), 0.7, epsilon = 1e-15);
        assert!(p.production_deriv(-0.1).is_err());
        let mut linear = bench_params();
        linear.gamma = 1.0;
        assert_relative_eq!(linear.production_deriv(0.0).unwrap(), linear.alpha1);
    }

    #[test]
    fn derivative_matches_centered_differences_on_log_sweep() {
        let p = bench_params();
        // 100-point log-spaced sweep over four decades.
        for i in 0..100 {
            let r = 10f64.powf(-2.0 + 3.0 * i as f64 / 99.0);
            let h = 1e-6 * r.max(1e-3);
            let fd = (p.production_raw(r + h) - p.production_raw(r - h)) / (2.0 * h);
            let an = p.production_deriv(r).unwrap();
            assert_relative_eq!(an, fd, max_relative = 1e-5, epsilon = 1e-10);
        }
    }

    #[test]
    fn pollution_feedback_benchmark_values() {
        let p = bench_params();
        assert_eq!(p.pollution_feedback(0.0).unwrap(), 1.0);
        assert_relative_eq!(p.pollution_feedback(1.0).unwrap(), 2.0);
        assert_relative_eq!(p.pollution_feedback(3.0).unwrap(), 10.0);
        assert!(p.pollution_feedback(-0.5).is_err());
    }

    #[test]
    fn feedback_grad_factor_matches_centered_differences() {
        let mut p = bench_params();
        p.chi = 0.8;
        p.tech = 1.3;
        assert_eq!(p.feedback_grad_factor(0.0), 0.0);
        for i in 0..100 {
            let pv = 10f64.powf(-2.0 + 3.0 * i as f64 / 99.0);
            let h = 1e-6 * pv.max(1e-3);
            let damped = |p_val: f64| p.tech / p.pollution_feedback_raw(p_val);
            let fd = -(damped(pv + h) - damped(pv - h)) / (2.0 * h);
            assert_relative_eq!(p.feedback_grad_factor(pv), fd, max_relative = 1e-5, epsilon = 1e-10);
        }
        // Benchmark point with unit coefficients.
        let unit = bench_params();
        assert_relative_eq!(unit.feedback_grad_factor(1.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn effective_capital_applies_tax_only_inside_region() {
        assert_relative_eq!(effective_capital(2.0, 0.3, true), 1.4, epsilon = 1e-15);
        assert_relative_eq!(effective_capital(2.0, 0.3, false), 2.0);
        assert_eq!(effective_capital(0.0, 0.9, true), 0.0);
    }

    #[test]
    fn disk_mask_counts_and_membership() {
        let grid = Grid::<f64>::standard(8).unwrap();
        let shape = RegionShape::Disk {
            center: [0.0, 0.0],
            radius: 0.5,
        };
        let mask = RegionMask::build(&grid, &shape);
        // Center node inside, far corner outside, boundary node included.
        assert!(mask.contains(grid.node_index(4, 4)));
        assert!(!mask.contains(0));
        assert!(mask.contains(grid.node_index(6, 4)));
        assert!(mask.inside_count() > 0 && mask.inside_count() < grid.num_nodes());
    }

    #[test]
    fn whole_and_empty_masks_are_extreme() {
        let grid = Grid::<f64>::standard(4).unwrap();
        let whole = RegionMask::build(&grid, &RegionShape::Whole);
        assert_eq!(whole.inside_count(), grid.num_nodes());
        let empty = RegionMask::build(&grid, &RegionShape::Empty);
        assert!(empty.is_empty());
    }

    proptest! {
        #[test]
        fn production_is_monotone_and_bounded(a in 0.0f64..5.0, b in 0.0f64..5.0) {
            let p = bench_params();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let f_lo = p.production(lo).unwrap();
            let f_hi = p.production(hi).unwrap();
            prop_assert!(f_lo <= f_hi + 1e-15);
            prop_assert!(f_hi <= p.alpha1 / p.alpha2 + 1e-12);
            prop_assert!(f_lo >= 0.0);
        }

        #[test]
        fn feedback_is_at_least_one_and_increasing(a in 0.0f64..10.0, b in 0.0f64..10.0) {
            let p = bench_params();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let g_lo = p.pollution_feedback(lo).unwrap();
            let g_hi = p.pollution_feedback(hi).unwrap();
            prop_assert!(g_lo >= 1.0);
            prop_assert!(g_lo <= g_hi + 1e-15);
        }
    }
}
