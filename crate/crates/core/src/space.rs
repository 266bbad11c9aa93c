//! Weighted Dirichlet spaces `D_α` and weighted Bergman spaces `A²_α`:
//! coefficient norms, reproducing kernels and area-integral norms.
//!
//! Area measure convention: `dA = r dr dθ / π`, so the disc has mass 1, and
//! `dA_α = (1 − |z|²)^α dA`.

use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::AnalyticFunction;
use crate::criteria::AnnularGrid;
use crate::quadrature::gauss_legendre_unit;
use crate::series::TaylorSeries;
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpaceParams {
    pub alpha: f64,
}

impl SpaceParams {
    /// Any `α > −1`; Dirichlet-side operations additionally require `α < 1`.
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > -1.0 && alpha.is_finite()) {
            return Err(Error::OutOfRange(format!("alpha must exceed -1, got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn dirichlet(alpha: f64) -> Result<Self> {
        let p = Self::new(alpha)?;
        p.require_dirichlet_range()?;
        Ok(p)
    }

    pub fn require_dirichlet_range(&self) -> Result<()> {
        if self.alpha > -1.0 && self.alpha < 1.0 {
            Ok(())
        } else {
            Err(Error::OutOfRange(format!("alpha must lie in (-1, 1), got {}", self.alpha)))
        }
    }

    /// `(n+1)^{1−α}`, the Dirichlet weight of `|a_n|²`.
    pub fn weight(&self, n: usize) -> f64 {
        ((n + 1) as f64).powf(1.0 - self.alpha)
    }

    /// `(n+1)^{(α−1)/2}`: coefficient of `z^n` in the basis vector `e_n`.
    pub fn basis_scale(&self, n: usize) -> f64 {
        ((n + 1) as f64).powf(0.5 * (self.alpha - 1.0))
    }

    /// Orthonormal-basis coordinates of a series: `x_n = a_n (n+1)^{(1−α)/2}`.
    pub fn to_basis_coords(&self, f: &TaylorSeries) -> Vec<C64> {
        f.coeffs().iter().enumerate().map(|(n, a)| a / self.basis_scale(n)).collect()
    }

    pub fn from_basis_coords(&self, x: &[C64]) -> Result<TaylorSeries> {
        TaylorSeries::new(x.iter().enumerate().map(|(n, c)| c * self.basis_scale(n)).collect())
    }

    /// The basis vector `e_n` as a series truncated at `order`.
    pub fn basis_vector(&self, n: usize, order: usize) -> TaylorSeries {
        TaylorSeries::monomial(n, order).scale(C64::new(self.basis_scale(n), 0.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Dirichlet,
    Bergman,
}

/// Neumaier-compensated sum, accumulated in iteration order.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

/// Squared norm from coefficients: `Σ(n+1)^{1−α}|a_n|²` or `Σ(n+1)^{−1−α}|a_n|²`.
pub fn norm_sq_coeff(f: &TaylorSeries, p: &SpaceParams, space: SpaceKind) -> f64 {
    let exponent = match space {
        SpaceKind::Dirichlet => 1.0 - p.alpha,
        SpaceKind::Bergman => -1.0 - p.alpha,
    };
    compensated_sum(f.coeffs().iter().enumerate().map(|(n, a)| ((n + 1) as f64).powf(exponent) * a.norm_sqr()))
}

/// `⟨f, g⟩ = Σ (n+1)^{1−α} a_n conj(b_n)` over the common truncation.
pub fn inner_product(f: &TaylorSeries, g: &TaylorSeries, p: &SpaceParams) -> C64 {
    f.coeffs().iter().zip(g.coeffs()).enumerate().map(|(n, (a, b))| a * b.conj() * p.weight(n)).sum()
}

/// Truncated reproducing kernel `k_w(z) = Σ (w̄z)^n/(n+1)^{1−α}`.
#[derive(Clone, Debug)]
pub struct KernelVector {
    pub w: C64,
    pub series: TaylorSeries,
    /// Upper bound on `Σ_{n>N} (n+1)^{α−1}|w|^{2n}`, the discarded part of `‖k_w‖²`.
    pub tail_bound: f64,
}

impl KernelVector {
    /// Orthonormal-basis coordinates `conj(w)^n (n+1)^{(α−1)/2}`.
    pub fn basis_coords(&self, p: &SpaceParams) -> Vec<C64> {
        p.to_basis_coords(&self.series)
    }
}

/// Bound on `Σ_{n>N} (n+1)^{α−1} x^n` for `0 ≤ x < 1`.
pub fn kernel_tail_bound(x: f64, alpha: f64, order: usize) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let nf = order as f64;
    if alpha <= 1.0 {
        // Terms beyond N are dominated by (N+1)^{α−1} x^n.
        x.powf(nf) * (nf + 1.0).powf(alpha - 1.0) / (1.0 - x)
    } else {
        let q = ((nf + 3.0) / (nf + 2.0)).powf(alpha - 1.0) * x;
        let first = (nf + 2.0).powf(alpha - 1.0) * x.powf(nf + 1.0);
        if q < 1.0 {
            first / (1.0 - q)
        } else {
            f64::INFINITY
        }
    }
}

pub fn kernel_vector(w: C64, p: &SpaceParams, order: usize) -> Result<KernelVector> {
    if !(w.norm() <= 1.0 - 1e-6) {
        return Err(Error::OutOfRange(format!("kernel point |w| = {} is too close to the unit circle", w.norm())));
    }
    let wc = w.conj();
    let mut coeffs = Vec::with_capacity(order + 1);
    let mut pw = C64::new(1.0, 0.0);
    for n in 0..=order {
        coeffs.push(pw / p.weight(n));
        pw *= wc;
    }
    Ok(KernelVector {
        w,
        series: TaylorSeries::new(coeffs)?,
        tail_bound: kernel_tail_bound(w.norm_sqr(), p.alpha, order),
    })
}

/// `‖k_w‖²` partial sum with its certified tail and the `Γ(α)(1−|w|²)^{−α}` comparison.
#[derive(Clone, Debug, Serialize)]
pub struct KernelNorm {
    pub w_abs: f64,
    pub alpha: f64,
    pub order: usize,
    pub partial_sum: f64,
    pub tail_bound: f64,
    /// `Γ(α)(1−|w|²)^{−α}`, present for `α > 0`.
    pub comparison: Option<f64>,
    /// `partial_sum / comparison` and `(partial_sum + tail_bound) / comparison`.
    pub ratio_bounds: Option<(f64, f64)>,
}

pub fn kernel_norm_sq(w: C64, p: &SpaceParams, order: usize) -> KernelNorm {
    let x = w.norm_sqr();
    let alpha = p.alpha;
    let partial_sum = compensated_sum((0..=order).map(|n| ((n + 1) as f64).powf(alpha - 1.0) * x.powi(n as i32)));
    let tail_bound = kernel_tail_bound(x, alpha, order);
    let comparison = (alpha > 0.0).then(|| statrs::function::gamma::gamma(alpha) * (1.0 - x).powf(-alpha));
    KernelNorm {
        w_abs: w.norm(),
        alpha,
        order,
        partial_sum,
        tail_bound,
        comparison,
        ratio_bounds: comparison.map(|c| (partial_sum / c, (partial_sum + tail_bound) / c)),
    }
}

/// Smallest power-of-two truncation whose tail bound is below `rel_tol` of the partial sum.
pub fn kernel_norm_sq_certified(w: C64, p: &SpaceParams, rel_tol: f64) -> KernelNorm {
    let mut order = 64;
    loop {
        let k = kernel_norm_sq(w, p, order);
        if k.tail_bound <= rel_tol * k.partial_sum || order >= 1 << 24 {
            return k;
        }
        order *= 2;
    }
}

/// Polar product rule for integrals against `dA_α`.
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    pub radial_nodes: Vec<f64>,
    pub radial_weights: Vec<f64>,
    pub angular_count: usize,
}

impl QuadratureGrid {
    pub fn new(radial: usize, angular: usize) -> Self {
        let (radial_nodes, radial_weights) = gauss_legendre_unit(radial);
        Self { radial_nodes, radial_weights, angular_count: angular }
    }

    pub fn refined(&self) -> Self {
        Self::new(2 * self.radial_nodes.len(), 2 * self.angular_count)
    }

    /// `∫_D g dA_β`. With `s = 1 − r²` and `u = s^{β+1}` the weight `s^β ds`
    /// becomes `du/(β+1)`, so Gauss–Legendre runs on a bounded integrand.
    pub fn integrate<G>(&self, beta: f64, g: G) -> f64
    where
        G: Fn(C64) -> f64 + Sync,
    {
        let t = self.angular_count;
        let per_node: Vec<f64> = self
            .radial_nodes
            .par_iter()
            .map(|&u| {
                let s = u.powf(1.0 / (beta + 1.0));
                let r = (1.0 - s).max(0.0).sqrt();
                let samples = (0..t).map(|j| g(C64::from_polar(r, 2.0 * std::f64::consts::PI * j as f64 / t as f64)));
                compensated_sum(samples) / t as f64
            })
            .collect();
        compensated_sum(per_node.iter().zip(&self.radial_weights).map(|(v, w)| v * w)) / (beta + 1.0)
    }
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        Self::new(200, 512)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormVariant {
    /// `|f(0)|² + ∫|f'|² dA_α`.
    DAlphaFirstDeriv,
    /// `|f(0)|² + |f'(0)|² + ∫|f''|² dA_{α+2}`.
    RelationVSecondDeriv,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadratureNorm {
    pub value: f64,
    /// Same expression on the grid with doubled radial and angular counts.
    pub refined_value: f64,
    /// Set when grid doubling moves the value by more than 1%.
    pub grid_too_coarse: bool,
}

pub fn norm_sq_quadrature(
    f: &AnalyticFunction,
    p: &SpaceParams,
    grid: &QuadratureGrid,
    variant: NormVariant,
) -> Result<QuadratureNorm> {
    p.require_dirichlet_range()?;
    let eval = |g: &QuadratureGrid| {
        let j0 = f.jet(C64::new(0.0, 0.0));
        match variant {
            NormVariant::DAlphaFirstDeriv => j0.v.norm_sqr() + g.integrate(p.alpha, |z| f.jet(z).d1.norm_sqr()),
            NormVariant::RelationVSecondDeriv => {
                j0.v.norm_sqr() + j0.d1.norm_sqr() + g.integrate(p.alpha + 2.0, |z| f.jet(z).d2.norm_sqr())
            }
        }
    };
    let value = eval(grid);
    let refined_value = eval(&grid.refined());
    let scale = value.abs().max(refined_value.abs());
    let grid_too_coarse = scale > 0.0 && (value - refined_value).abs() > 0.01 * scale;
    Ok(QuadratureNorm { value, refined_value, grid_too_coarse })
}

/// Logarithmic growth bound for functions with bounded `(1−|z|²)|f'(z)|`.
#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    /// `M = max (1−|z|²)|f'(z)|` over the grid.
    pub sup_weighted_derivative: f64,
    /// Minimum over grid points of `M(log 2 + ½ log(1/(1−|z|²))) − |f(z) − f(0)|`.
    pub worst_slack: f64,
    pub holds: bool,
    pub decay_exponent: f64,
    /// Per-annulus max of `(1−|z|²)^{decay_exponent}|f(z)|`.
    pub weighted_annulus_max: Vec<f64>,
}

struct RingGrowth {
    sup_weighted_derivative: f64,
    weighted_max: f64,
    /// `(1−|z|², |f(z) − f(0)|)` per point.
    increments: Vec<(f64, f64)>,
}

pub fn growth_bound_check(f: &AnalyticFunction, grid: &AnnularGrid, decay_exponent: f64) -> GrowthReport {
    let f0 = f.value(C64::new(0.0, 0.0));
    let annuli: Vec<RingGrowth> = grid
        .annuli()
        .par_iter()
        .map(|ring| {
            let w = 1.0 - ring.radius * ring.radius;
            let mut sup_d = 0.0f64;
            let mut weighted = 0.0f64;
            let mut pts = Vec::with_capacity(ring.points.len());
            for &z in &ring.points {
                let j = f.jet(z);
                sup_d = sup_d.max(w * j.d1.norm());
                weighted = weighted.max(w.powf(decay_exponent) * j.v.norm());
                pts.push((w, (j.v - f0).norm()));
            }
            RingGrowth { sup_weighted_derivative: sup_d, weighted_max: weighted, increments: pts }
        })
        .collect();
    let m = annuli.iter().map(|a| a.sup_weighted_derivative).fold(0.0, f64::max);
    let worst_slack = annuli
        .iter()
        .flat_map(|a| a.increments.iter())
        .map(|&(w, lhs)| m * (std::f64::consts::LN_2 + 0.5 * (1.0 / w).ln()) - lhs)
        .fold(f64::INFINITY, f64::min);
    GrowthReport {
        sup_weighted_derivative: m,
        worst_slack,
        holds: worst_slack >= -1e-9,
        decay_exponent,
        weighted_annulus_max: annuli.iter().map(|a| a.weighted_max).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn coefficient_norm_examples() {
        let z = TaylorSeries::from_real(&[0.0, 1.0]).unwrap();
        let p = SpaceParams::new(0.5).unwrap();
        assert!((norm_sq_coeff(&z, &p, SpaceKind::Dirichlet) - 2f64.sqrt()).abs() < 1e-15);

        let one = TaylorSeries::one(3);
        for alpha in [-0.5, 0.0, 0.7, 1.5] {
            let p = SpaceParams::new(alpha).unwrap();
            assert_eq!(norm_sq_coeff(&one, &p, SpaceKind::Dirichlet), 1.0);
            assert_eq!(norm_sq_coeff(&one, &p, SpaceKind::Bergman), 1.0);
        }

        let geo = TaylorSeries::from_real(&(0..=64).map(|n| 0.5f64.powi(n)).collect::<Vec<_>>()).unwrap();
        let p = SpaceParams::new(0.0).unwrap();
        assert!((norm_sq_coeff(&geo, &p, SpaceKind::Dirichlet) - 16.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn inner_product_examples() {
        for alpha in [-0.5, 0.0, 0.5] {
            let p = SpaceParams::new(alpha).unwrap();
            let z1 = TaylorSeries::monomial(1, 4);
            let z2 = TaylorSeries::monomial(2, 4);
            assert_eq!(inner_product(&z1, &z2, &p), c(0.0, 0.0));
            for n in 0..8 {
                let e = p.basis_vector(n, 8);
                assert!((inner_product(&e, &e, &p) - 1.0).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn reproducing_property_at_point() {
        let p = SpaceParams::new(0.3).unwrap();
        let f = TaylorSeries::from_real(&[1.0, 1.0, 1.0]).unwrap();
        let w = c(0.3, 0.2);
        let k = kernel_vector(w, &p, 8).unwrap();
        let f8 = f.truncated(8);
        let lhs = inner_product(&f8, &k.series, &p);
        let fnorm = norm_sq_coeff(&f8, &p, SpaceKind::Dirichlet).sqrt();
        assert!((lhs - f.evaluate(w)).norm() <= k.tail_bound * fnorm + 1e-14);
    }

    #[test]
    fn kernel_vector_examples() {
        let p = SpaceParams::new(0.0).unwrap();
        let k0 = kernel_vector(c(0.0, 0.0), &p, 5).unwrap();
        assert_eq!(k0.tail_bound, 0.0);
        assert_eq!(k0.series.coeff(0), c(1.0, 0.0));
        assert!(k0.series.coeffs()[1..].iter().all(|x| x.norm() == 0.0));

        let k = kernel_vector(c(0.5, 0.0), &p, 4).unwrap();
        for n in 0..=4 {
            assert!((k.series.coeff(n) - 0.5f64.powi(n as i32) / (n + 1) as f64).norm() < 1e-16);
        }
        assert!(kernel_vector(c(0.9999999, 0.0), &p, 4).is_err());
    }

    #[test]
    fn kernel_norm_examples() {
        let p = SpaceParams::new(0.5).unwrap();
        let k = kernel_norm_sq(c(0.0, 0.0), &p, 10);
        assert_eq!(k.partial_sum, 1.0);
        assert!((k.comparison.unwrap() - std::f64::consts::PI.sqrt()).abs() < 1e-13);

        let p1 = SpaceParams::new(1.0).unwrap();
        let w = c(0.6, 0.0);
        let k = kernel_norm_sq_certified(w, &p1, 1e-16);
        assert!((k.partial_sum - 1.0 / (1.0 - 0.36)).abs() < 1e-14);
        assert!((k.comparison.unwrap() - 1.0 / 0.64).abs() < 1e-13);
    }

    #[test]
    fn tail_bound_dominates_true_tail() {
        for alpha in [-0.5, 0.25, 0.75, 1.0, 1.5] {
            for x in [0.1f64, 0.5, 0.81, 0.98] {
                let order = 40;
                let tail: f64 =
                    (order + 1..20_000).map(|n| ((n + 1) as f64).powf(alpha - 1.0) * x.powi(n as i32)).sum();
                let bound = kernel_tail_bound(x, alpha, order);
                assert!(bound >= tail, "alpha={alpha} x={x} bound={bound} tail={tail}");
            }
        }
    }

    #[test]
    fn quadrature_unit_mass() {
        let g = QuadratureGrid::new(50, 64);
        assert!((g.integrate(0.0, |_| 1.0) - 1.0).abs() < 1e-12);
        // ∫ (1−r²)^β dA = 1/(β+1).
        for beta in [-0.5, 0.5, 2.5] {
            assert!((g.integrate(beta, |_| 1.0) - 1.0 / (beta + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn quadrature_norm_examples() {
        let grid = QuadratureGrid::new(100, 128);
        let one = AnalyticFunction::constant(1.0);
        for variant in [NormVariant::DAlphaFirstDeriv, NormVariant::RelationVSecondDeriv] {
            let q = norm_sq_quadrature(&one, &SpaceParams::new(0.5).unwrap(), &grid, variant).unwrap();
            assert!((q.value - 1.0).abs() < 1e-14);
        }
        let z = AnalyticFunction::identity();
        let p0 = SpaceParams::new(0.0).unwrap();
        let q = norm_sq_quadrature(&z, &p0, &grid, NormVariant::DAlphaFirstDeriv).unwrap();
        assert!((q.value - 1.0).abs() < 1e-12);
        let coef = norm_sq_coeff(&TaylorSeries::monomial(1, 1), &p0, SpaceKind::Dirichlet);
        assert!((coef / q.value - 2.0).abs() < 1e-12);
        assert!(!q.grid_too_coarse);
    }

    #[test]
    fn growth_bound_constant() {
        let grid = AnnularGrid::new(10).unwrap();
        let r = growth_bound_check(&AnalyticFunction::constant(2.0), &grid, 0.1);
        assert_eq!(r.sup_weighted_derivative, 0.0);
        assert_eq!(r.worst_slack, 0.0);
        assert!(r.holds);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let terms = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(terms), 2.0);
    }
}
