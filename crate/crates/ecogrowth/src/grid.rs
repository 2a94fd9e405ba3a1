//! Uniform quadrilateral mesh, nodal fields, and spatial operators.
//!
//! Nodes are numbered row-major: node `i = iy * (nx + 1) + ix` sits at
//! `(xmin + ix * hx, ymin + iy * hy)`, so node 0 is the lower-left corner.
//! All spatial integrals use the lumped (row-sum) mass quadrature, which makes
//! the mass matrix diagonal and keeps every reduction a plain ordered sum.

use std::sync::Arc;

use crate::banded::SymBanded;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Axis-aligned rectangular domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect<T> {
    /// Left edge.
    pub xmin: T,
    /// Right edge.
    pub xmax: T,
    /// Bottom edge.
    pub ymin: T,
    /// Top edge.
    pub ymax: T,
}

impl<T: Scalar> Rect<T> {
    /// The benchmark domain `[-1, 1] x [-1, 1]`.
    pub fn standard() -> Self {
        Rect {
            xmin: -T::one(),
            xmax: T::one(),
            ymin: -T::one(),
            ymax: T::one(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.xmax > self.xmin && self.ymax > self.ymin) {
            return Err(Error::InvalidParams(format!(
                "degenerate domain [{}, {}] x [{}, {}]",
                self.xmin, self.xmax, self.ymin, self.ymax
            )));
        }
        Ok(())
    }
}

/// Uniform grid of bilinear quadrilateral elements.
#[derive(Debug, Clone)]
pub struct Grid<T> {
    nx: usize,
    ny: usize,
    bounds: Rect<T>,
    hx: T,
    hy: T,
    weights: Vec<T>,
}

impl<T: Scalar> Grid<T> {
    /// Builds an `nx` by `ny` element grid over `bounds`.
    pub fn new(nx: usize, ny: usize, bounds: Rect<T>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidParams(format!(
                "element counts must be positive, got {nx} x {ny}"
            )));
        }
        bounds.validate()?;
        let hx = (bounds.xmax - bounds.xmin) / T::of(nx as f64);
        let hy = (bounds.ymax - bounds.ymin) / T::of(ny as f64);
        let mut grid = Grid {
            nx,
            ny,
            bounds,
            hx,
            hy,
            weights: Vec::new(),
        };
        grid.weights = assemble_lumped_mass(&grid);
        Ok(grid)
    }

    /// Square grid with `n` elements per side on the standard domain.
    pub fn standard(n: usize) -> Result<Self> {
        Grid::new(n, n, Rect::standard())
    }

    /// Elements along x.
    pub fn nx(&self) -> usize {
        self.nx
    }

    /// Elements along y.
    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Domain bounds.
    pub fn bounds(&self) -> Rect<T> {
        self.bounds
    }

    /// Element width.
    pub fn hx(&self) -> T {
        self.hx
    }

    /// Element height.
    pub fn hy(&self) -> T {
        self.hy
    }

    /// Total node count `(nx + 1)(ny + 1)`.
    pub fn num_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    /// Total element count.
    pub fn num_elements(&self) -> usize {
        self.nx * self.ny
    }

    /// Nodes per grid row.
    pub fn row_len(&self) -> usize {
        self.nx + 1
    }

    /// Row-major node index for grid coordinates `(ix, iy)`.
    pub fn node_index(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(ix <= self.nx && iy <= self.ny);
        iy * (self.nx + 1) + ix
    }

    /// Position of node `i`.
    pub fn node_position(&self, i: usize) -> [T; 2] {
        debug_assert!(i < self.num_nodes());
        let ix = i % (self.nx + 1);
        let iy = i / (self.nx + 1);
        [
            self.bounds.xmin + T::of(ix as f64) * self.hx,
            self.bounds.ymin + T::of(iy as f64) * self.hy,
        ]
    }

    /// Corner nodes of element `(ex, ey)`, counterclockwise from lower-left.
    pub fn element_nodes(&self, ex: usize, ey: usize) -> [usize; 4] {
        debug_assert!(ex < self.nx && ey < self.ny);
        let base = ey * (self.nx + 1) + ex;
        let up = base + self.nx + 1;
        [base, base + 1, up + 1, up]
    }

    /// Lumped quadrature weight of node `i` (row sum of the consistent mass).
    pub fn quad_weight(&self, i: usize) -> T {
        self.weights[i]
    }

    /// All lumped quadrature weights.
    pub fn quad_weights(&self) -> &[T] {
        &self.weights
    }

    /// Lumped-quadrature integral of a nodal field over the domain.
    ///
    /// Exact for bilinear interpolants of affine functions on uniform grids.
    pub fn integrate(&self, field: &Field<T>) -> Result<T> {
        self.check_field(field)?;
        let mut acc = T::zero();
        for (w, v) in self.weights.iter().zip(field.values()) {
            acc += *w * *v;
        }
        Ok(acc)
    }

    /// Zero field on this grid.
    pub fn zeros(&self) -> Field<T> {
        self.constant(T::zero())
    }

    /// Constant field on this grid.
    pub fn constant(&self, value: T) -> Field<T> {
        Field {
            nnx: self.nx + 1,
            nny: self.ny + 1,
            values: vec![value; self.num_nodes()],
        }
    }

    /// Field sampled from a coordinate function.
    pub fn field_from_fn(&self, f: impl Fn(T, T) -> T) -> Field<T> {
        let mut values = Vec::with_capacity(self.num_nodes());
        for i in 0..self.num_nodes() {
            let [x, y] = self.node_position(i);
            values.push(f(x, y));
        }
        Field {
            nnx: self.nx + 1,
            nny: self.ny + 1,
            values,
        }
    }

    /// Field from raw nodal values; length and finiteness are validated.
    pub fn field_from_values(&self, values: Vec<T>) -> Result<Field<T>> {
        if values.len() != self.num_nodes() {
            return Err(Error::ShapeMismatch(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                self.num_nodes()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite field value at node {pos}"
            )));
        }
        Ok(Field {
            nnx: self.nx + 1,
            nny: self.ny + 1,
            values,
        })
    }

    /// Wraps solver output without validation; callers check finiteness.
    pub(crate) fn field_unchecked(&self, values: Vec<T>) -> Field<T> {
        debug_assert_eq!(values.len(), self.num_nodes());
        Field {
            nnx: self.nx + 1,
            nny: self.ny + 1,
            values,
        }
    }

    /// Rejects fields that do not belong to this grid.
    pub fn check_field(&self, field: &Field<T>) -> Result<()> {
        if field.nnx != self.nx + 1 || field.nny != self.ny + 1 {
            return Err(Error::ShapeMismatch(format!(
                "field shape {}x{} does not match grid {}x{}",
                field.nnx,
                field.nny,
                self.nx + 1,
                self.ny + 1
            )));
        }
        Ok(())
    }
}

/// One real value per grid node, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    nnx: usize,
    nny: usize,
    values: Vec<T>,
}

impl<T: Scalar> Field<T> {
    /// Number of nodal values.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True for the empty field (never produced by a valid grid).
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Nodal values, row-major.
    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Mutable nodal values.
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    /// Smallest nodal value.
    pub fn min_value(&self) -> T {
        self.values.iter().fold(T::infinity(), |m, v| m.min(*v))
    }

    /// Largest nodal value.
    pub fn max_value(&self) -> T {
        self.values
            .iter()
            .fold(T::neg_infinity(), |m, v| m.max(*v))
    }

    /// Largest absolute nodal value.
    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// True when every value is finite.
    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Pointwise linear combination `a * self + b * other`.
    pub fn lin_comb(&self, a: T, other: &Field<T>, b: T) -> Field<T> {
        assert_eq!(self.values.len(), other.values.len(), "field length mismatch");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * *x + b * *y)
            .collect();
        Field {
            nnx: self.nnx,
            nny: self.nny,
            values,
        }
    }
}

impl<T> std::ops::Index<usize> for Field<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.values[i]
    }
}

impl<T> std::ops::IndexMut<usize> for Field<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.values[i]
    }
}

// Exact integrals of bilinear gradient products on a rectangle, times 6.
// Local order: lower-left, lower-right, upper-right, upper-left.
const GRAD_XX: [[f64; 4]; 4] = [
    [2.0, -2.0, -1.0, 1.0],
    [-2.0, 2.0, 1.0, -1.0],
    [-1.0, 1.0, 2.0, -2.0],
    [1.0, -1.0, -2.0, 2.0],
];
const GRAD_YY: [[f64; 4]; 4] = [
    [2.0, 1.0, -1.0, -2.0],
    [1.0, 2.0, -2.0, -1.0],
    [-1.0, -2.0, 2.0, 1.0],
    [-2.0, -1.0, 1.0, 2.0],
];

/// Assembles the stiffness matrix `d * ∫ ∇φ_i · ∇φ_j` with exact integration.
///
/// Rows sum to zero (no-flux boundary), and on a uniform square grid the
/// interior stencil is `8/3 * d` on the diagonal with `-d/3` to each of the
/// eight neighbors.
pub fn assemble_stiffness<T: Scalar>(grid: &Grid<T>, diffusivity: T) -> SymBanded<T> {
    let n = grid.num_nodes();
    let bw = grid.nx() + 2;
    let mut a = SymBanded::zeros(n, bw);
    let six = T::of(6.0);
    let rx = diffusivity * grid.hy() / grid.hx() / six;
    let ry = diffusivity * grid.hx() / grid.hy() / six;
    for ey in 0..grid.ny() {
        for ex in 0..grid.nx() {
            let nodes = grid.element_nodes(ex, ey);
            for a_loc in 0..4 {
                for b_loc in 0..=a_loc {
                    let val = rx * T::of(GRAD_XX[a_loc][b_loc]) + ry * T::of(GRAD_YY[a_loc][b_loc]);
                    a.add(nodes[a_loc], nodes[b_loc], val);
                }
            }
        }
    }
    a
}

/// Lumped mass vector: row sums of the consistent bilinear mass matrix.
///
/// Each element contributes `hx * hy / 4` to each of its corners, so interior
/// nodes carry `hx * hy`, edge nodes half, and corners a quarter of that; the
/// total equals the domain area.
pub fn assemble_lumped_mass<T: Scalar>(grid: &Grid<T>) -> Vec<T> {
    let quarter = grid.hx() * grid.hy() / T::of(4.0);
    let mut m = vec![T::zero(); grid.num_nodes()];
    for ey in 0..grid.ny() {
        for ex in 0..grid.nx() {
            for node in grid.element_nodes(ex, ey) {
                m[node] += quarter;
            }
        }
    }
    m
}

/// Stiffness plus lumped mass for one diffusing field.
#[derive(Debug, Clone)]
pub struct DiffusionOperator<T> {
    /// Banded stiffness matrix scaled by the diffusivity.
    pub stiffness: SymBanded<T>,
    /// Diagonal lumped mass.
    pub lumped_mass: Vec<T>,
}

impl<T: Scalar> DiffusionOperator<T> {
    /// Assembles both parts for the given diffusivity.
    pub fn new(grid: &Grid<T>, diffusivity: T) -> Self {
        DiffusionOperator {
            stiffness: assemble_stiffness(grid, diffusivity),
            lumped_mass: assemble_lumped_mass(grid),
        }
    }
}

/// Spatial interaction kernel for the nonlocal emission term.
///
/// `eval(from, to)` is the weight with which a source at `from` contributes to
/// the field at `to`. Kernels must be bounded and nonnegative.
#[derive(Clone)]
pub enum Kernel<T> {
    /// Spatially constant kernel.
    Constant(T),
    /// Arbitrary kernel evaluated nodewise; applying it costs O(N^2).
    Nodewise(Arc<dyn Fn([T; 2], [T; 2]) -> T + Send + Sync>),
}

impl<T: Scalar> Kernel<T> {
    /// Kernel value from a source point to a target point.
    pub fn eval(&self, from: [T; 2], to: [T; 2]) -> T {
        match self {
            Kernel::Constant(v) => *v,
            Kernel::Nodewise(f) => f(from, to),
        }
    }

    /// Kernel with source and target roles swapped.
    pub fn transposed(&self) -> Kernel<T> {
        match self {
            Kernel::Constant(v) => Kernel::Constant(*v),
            Kernel::Nodewise(f) => {
                let f = Arc::clone(f);
                Kernel::Nodewise(Arc::new(move |from, to| f(to, from)))
            }
        }
    }
}

impl<T: std::fmt::Debug> std::fmt::Debug for Kernel<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Kernel::Constant(v) => write!(f, "Kernel::Constant({v:?})"),
            Kernel::Nodewise(_) => write!(f, "Kernel::Nodewise(..)"),
        }
    }
}

/// Applies the nonlocal operator: `w(x) = ∫ source(x') kernel(x', x) dx'`.
///
/// The integral uses the lumped quadrature. A constant kernel collapses to a
/// rank-one product, evaluated once and broadcast, so the result is exactly
/// constant in space.
pub fn nonlocal_apply<T: Scalar>(grid: &Grid<T>, source: &Field<T>, kernel: &Kernel<T>) -> Field<T> {
    grid.check_field(source)
        .expect("nonlocal source field must match the grid");
    match kernel {
        Kernel::Constant(v) => {
            let total = grid.integrate(source).expect("field checked above");
            grid.constant(*v * total)
        }
        Kernel::Nodewise(f) => {
            let n = grid.num_nodes();
            let positions: Vec<[T; 2]> = (0..n).map(|i| grid.node_position(i)).collect();
            let mut out = grid.zeros();
            for i in 0..n {
                let mut acc = T::zero();
                for j in 0..n {
                    acc += grid.quad_weight(j) * source[j] * f(positions[j], positions[i]);
                }
                out[i] = acc;
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Element stiffness via 2x2 Gauss quadrature, independent of the exact
    /// closed-form tables used by the assembly.
    fn gauss_element_stiffness(hx: f64, hy: f64, d: f64) -> [[f64; 4]; 4] {
        let g = 1.0 / 3f64.sqrt();
        let pts = [(-g, -g), (g, -g), (g, g), (-g, g)];
        // Shape function gradients on [-1,1]^2, local order bl, br, tr, tl.
        let dxi = |eta: f64| {
            [
                -(1.0 - eta) / 4.0,
                (1.0 - eta) / 4.0,
                (1.0 + eta) / 4.0,
                -(1.0 + eta) / 4.0,
            ]
        };
        let deta = |xi: f64| {
            [
                -(1.0 - xi) / 4.0,
                -(1.0 + xi) / 4.0,
                (1.0 + xi) / 4.0,
                (1.0 - xi) / 4.0,
            ]
        };
        let jac = hx * hy / 4.0;
        let mut ke = [[0.0; 4]; 4];
        for (xi, eta) in pts {
            let gx = dxi(eta).map(|v| v * 2.0 / hx);
            let gy = deta(xi).map(|v| v * 2.0 / hy);
            for a in 0..4 {
                for b in 0..4 {
                    ke[a][b] += d * (gx[a] * gx[b] + gy[a] * gy[b]) * jac;
                }
            }
        }
        ke
    }

    #[test]
    fn node_counts_match_closed_forms() {
        let tiny = Grid::<f64>::standard(1).unwrap();
        assert_eq!(tiny.num_nodes(), 4);
        assert_eq!(tiny.num_elements(), 1);
        let small = Grid::<f64>::standard(2).unwrap();
        assert_eq!(small.num_nodes(), 9);
        let bench = Grid::<f64>::standard(64).unwrap();
        assert_eq!(bench.num_nodes(), 4225);
    }

    #[test]
    fn degenerate_grids_are_rejected() {
        assert!(Grid::<f64>::new(0, 4, Rect::standard()).is_err());
        assert!(Grid::<f64>::new(4, 0, Rect::standard()).is_err());
        let flipped = Rect {
            xmin: 1.0,
            xmax: -1.0,
            ymin: -1.0,
            ymax: 1.0,
        };
        assert!(Grid::<f64>::new(4, 4, flipped).is_err());
    }

    #[test]
    fn node_numbering_is_row_major_from_lower_left() {
        let grid = Grid::<f64>::standard(2).unwrap();
        assert_eq!(grid.node_position(0), [-1.0, -1.0]);
        assert_eq!(grid.node_position(1), [0.0, -1.0]);
        assert_eq!(grid.node_position(3), [-1.0, 0.0]);
        assert_eq!(grid.node_position(8), [1.0, 1.0]);
        assert_eq!(grid.node_index(2, 1), 5);
        assert_eq!(grid.element_nodes(0, 0), [0, 1, 4, 3]);
        assert_eq!(grid.element_nodes(1, 1), [4, 5, 8, 7]);
    }

    #[test]
    fn stiffness_matches_gauss_quadrature_oracle() {
        let grid = Grid::<f64>::new(3, 2, Rect::standard()).unwrap();
        let d = 1.7;
        let a = assemble_stiffness(&grid, d);
        // Re-assemble densely from the quadrature oracle.
        let ke = gauss_element_stiffness(grid.hx(), grid.hy(), d);
        let n = grid.num_nodes();
        let mut dense = vec![vec![0.0; n]; n];
        for ey in 0..grid.ny() {
            for ex in 0..grid.nx() {
                let nodes = grid.element_nodes(ex, ey);
                for i in 0..4 {
                    for j in 0..4 {
                        dense[nodes[i]][nodes[j]] += ke[i][j];
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                assert_relative_eq!(a.get(i, j), dense[i][j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn interior_stencil_has_the_uniform_square_values() {
        let grid = Grid::<f64>::standard(2).unwrap();
        let a = assemble_stiffness(&grid, 1.0);
        let center = grid.node_index(1, 1);
        assert_relative_eq!(a.get(center, center), 8.0 / 3.0, epsilon = 1e-12);
        for neighbor in [0, 1, 2, 3, 5, 6, 7, 8] {
            assert_relative_eq!(a.get(center, neighbor), -1.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn stiffness_annihilates_constants() {
        let grid = Grid::<f64>::new(5, 4, Rect::standard()).unwrap();
        let a = assemble_stiffness(&grid, 2.3);
        for s in a.row_sums() {
            assert!(s.abs() <= 1e-12, "row sum {s}");
        }
        let zero = assemble_stiffness(&grid, 0.0);
        for i in 0..grid.num_nodes() {
            assert_eq!(zero.get(i, i), 0.0);
        }
    }

    #[test]
    fn lumped_mass_matches_consistent_row_sums() {
        // Consistent bilinear element mass has row sums hx*hy/4; accumulate
        // the element-count oracle per node and compare.
        let grid = Grid::<f64>::new(4, 3, Rect::standard()).unwrap();
        let m = assemble_lumped_mass(&grid);
        let cell = grid.hx() * grid.hy();
        for i in 0..grid.num_nodes() {
            let ix = i % grid.row_len();
            let iy = i / grid.row_len();
            let ex = if ix == 0 || ix == grid.nx() { 1.0 } else { 2.0 };
            let ey = if iy == 0 || iy == grid.ny() { 1.0 } else { 2.0 };
            assert_relative_eq!(m[i], cell / 4.0 * ex * ey, epsilon = 1e-14);
        }
        let total: f64 = m.iter().sum();
        assert_relative_eq!(total, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn unit_spacing_corner_weight_is_one_quarter() {
        let grid = Grid::<f64>::standard(2).unwrap();
        assert_relative_eq!(grid.quad_weight(0), 0.25, epsilon = 1e-15);
        assert_relative_eq!(grid.quad_weight(4), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn integrate_handles_constants_and_odd_functions() {
        let grid = Grid::<f64>::standard(8).unwrap();
        let ones = grid.constant(1.0);
        assert_relative_eq!(grid.integrate(&ones).unwrap(), 4.0, epsilon = 1e-12);
        assert_eq!(grid.integrate(&grid.zeros()).unwrap(), 0.0);
        let odd = grid.field_from_fn(|x, _| x);
        assert!(grid.integrate(&odd).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn integrate_rejects_foreign_fields() {
        let grid = Grid::<f64>::standard(4).unwrap();
        let other = Grid::<f64>::standard(5).unwrap();
        let field = other.constant(1.0);
        assert!(grid.integrate(&field).is_err());
    }

    #[test]
    fn field_validation_catches_bad_values() {
        let grid = Grid::<f64>::standard(2).unwrap();
        assert!(grid.field_from_values(vec![0.0; 8]).is_err());
        let mut vals = vec![0.0; 9];
        vals[3] = f64::NAN;
        assert!(grid.field_from_values(vals).is_err());
    }

    #[test]
    fn constant_kernel_collapses_to_a_constant_output() {
        let grid = Grid::<f64>::standard(6).unwrap();
        let ones = grid.constant(1.0);
        let w = nonlocal_apply(&grid, &ones, &Kernel::Constant(0.3));
        for i in 0..grid.num_nodes() {
            assert_relative_eq!(w[i], 1.2, epsilon = 1e-12);
        }
        let zero = nonlocal_apply(&grid, &ones, &Kernel::Constant(0.0));
        assert_eq!(zero.max_abs(), 0.0);
        let odd = grid.field_from_fn(|x, _| x);
        let w_odd = nonlocal_apply(&grid, &odd, &Kernel::Constant(0.3));
        assert!(w_odd.max_abs() <= 1e-12);
    }

    #[test]
    fn nodewise_kernel_matches_manual_quadrature() {
        let grid = Grid::<f64>::standard(3).unwrap();
        let kernel = Kernel::Nodewise(Arc::new(|from: [f64; 2], to: [f64; 2]| {
            0.1 + 0.05 * (from[0] * to[1]).abs()
        }));
        let source = grid.field_from_fn(|x, y| 1.0 + x + 0.5 * y);
        let w = nonlocal_apply(&grid, &source, &kernel);
        // Manual double loop, written independently of the implementation.
        for i in 0..grid.num_nodes() {
            let xi = grid.node_position(i);
            let mut acc = 0.0;
            for j in 0..grid.num_nodes() {
                let xj = grid.node_position(j);
                acc += grid.quad_weight(j) * source[j] * (0.1 + 0.05 * (xj[0] * xi[1]).abs());
            }
            assert_relative_eq!(w[i], acc, epsilon = 1e-13);
        }
    }

    #[test]
    fn transposed_kernel_swaps_arguments() {
        let kernel = Kernel::Nodewise(Arc::new(|from: [f64; 2], to: [f64; 2]| {
            from[0] + 2.0 * to[0]
        }));
        let t = kernel.transposed();
        assert_relative_eq!(kernel.eval([1.0, 0.0], [3.0, 0.0]), 7.0);
        assert_relative_eq!(t.eval([1.0, 0.0], [3.0, 0.0]), 5.0);
        let c = Kernel::Constant(0.3).transposed();
        assert_relative_eq!(c.eval([0.0, 0.0], [1.0, 1.0]), 0.3);
    }

    #[test]
    fn field_lin_comb_is_pointwise() {
        let grid = Grid::<f64>::standard(2).unwrap();
        let a = grid.field_from_fn(|x, _| x);
        let b = grid.constant(1.0);
        let c = a.lin_comb(2.0, &b, -0.5);
        for i in 0..grid.num_nodes() {
            assert_relative_eq!(c[i], 2.0 * a[i] - 0.5);
        }
    }
}
