//! Truncated Taylor series with complex coefficients and numerical
//! coefficient extraction from point evaluators.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::{Error, Result, C64, EPS};

/// Coefficients `c_0..=c_N` of a truncated power series about the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorSeries {
    coeffs: Vec<C64>,
}

impl TaylorSeries {
    /// Builds a series from its coefficients. At least one coefficient is required.
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Precondition("a truncated series needs at least one coefficient".into()));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::Precondition(format!("coefficient {i} is not finite")));
        }
        Ok(Self { coeffs })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn zero(order: usize) -> Self {
        Self { coeffs: vec![C64::new(0.0, 0.0); order + 1] }
    }

    /// The constant series `1` truncated at `order`.
    pub fn one(order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = C64::new(1.0, 0.0);
        s
    }

    pub fn monomial(n: usize, order: usize) -> Self {
        let mut s = Self::zero(order.max(n));
        s.coeffs[n] = C64::new(1.0, 0.0);
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }

    pub fn coeff(&self, n: usize) -> C64 {
        self.coeffs.get(n).copied().unwrap_or_default()
    }

    /// Truncates (or zero-pads) to a new order.
    pub fn truncated(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order + 1, C64::new(0.0, 0.0));
        Self { coeffs }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Termwise sum; the result has the smaller of the two orders.
    pub fn add(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        Self { coeffs: (0..=n).map(|i| self.coeffs[i] + other.coeffs[i]).collect() }
    }

    /// Horner evaluation of the truncated polynomial.
    pub fn evaluate(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Value and first two derivatives of the truncated polynomial at `z`.
    pub fn evaluate_jet(&self, z: C64) -> (C64, C64, C64) {
        let zero = C64::new(0.0, 0.0);
        let (mut v, mut d1, mut d2) = (zero, zero, zero);
        for &c in self.coeffs.iter().rev() {
            d2 = d2 * z + d1 * 2.0;
            d1 = d1 * z + v;
            v = v * z + c;
        }
        (v, d1, d2)
    }

    /// Termwise derivative, one order lower.
    pub fn derivative(&self) -> Result<Self> {
        if self.order() == 0 {
            return Err(Error::DifferentiateConstant);
        }
        Ok(Self { coeffs: (1..self.coeffs.len()).map(|j| self.coeffs[j] * j as f64).collect() })
    }

    /// Termwise antiderivative with zero constant term, one order higher.
    pub fn antiderivative(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(C64::new(0.0, 0.0));
        coeffs.extend(self.coeffs.iter().enumerate().map(|(j, c)| c / (j + 1) as f64));
        Self { coeffs }
    }
}

/// Product of two truncated series, kept at the smaller order.
pub fn cauchy_product(f: &TaylorSeries, g: &TaylorSeries) -> TaylorSeries {
    let n = f.order().min(g.order());
    let coeffs = (0..=n).map(|j| (0..=j).map(|i| f.coeffs[i] * g.coeffs[j - i]).sum()).collect();
    TaylorSeries { coeffs }
}

/// Sampling parameters for DFT-based coefficient extraction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtractionConfig {
    pub sample_radius: f64,
    /// Number of equispaced samples on the circle; a power of two.
    pub sample_count: usize,
    /// Tolerance on the error estimate relative to the largest coefficient.
    pub tail_tolerance: f64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self { sample_radius: 0.75, sample_count: 256, tail_tolerance: 1e-8 }
    }
}

impl ExtractionConfig {
    /// Default radius with enough samples for series of the given order.
    pub fn for_order(order: usize) -> Self {
        Self { sample_count: (4 * (order + 1)).next_power_of_two().max(256), ..Self::default() }
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.sample_radius = radius;
        self
    }

    pub fn validate(&self, order: usize) -> Result<()> {
        if !(self.sample_radius > 0.0 && self.sample_radius < 1.0) {
            return Err(Error::OutOfRange(format!("sample radius {} must lie in (0, 1)", self.sample_radius)));
        }
        if !self.sample_count.is_power_of_two() {
            return Err(Error::OutOfRange(format!("sample count {} must be a power of two", self.sample_count)));
        }
        if self.sample_count < 2 * (order + 1) {
            return Err(Error::OutOfRange(format!(
                "sample count {} too small for order {order}; need at least {}",
                self.sample_count,
                2 * (order + 1)
            )));
        }
        if !(self.tail_tolerance >= 0.0) {
            return Err(Error::OutOfRange("tail tolerance must be nonnegative".into()));
        }
        Ok(())
    }

    /// Sample points `ρ·e^{2πij/M}`.
    pub fn nodes(&self) -> Vec<C64> {
        circle_nodes(self.sample_radius, self.sample_count)
    }
}

pub(crate) fn circle_nodes(radius: f64, count: usize) -> Vec<C64> {
    (0..count).map(|j| C64::from_polar(radius, 2.0 * std::f64::consts::PI * j as f64 / count as f64)).collect()
}

/// Extracted coefficients plus an estimate of their absolute error.
#[derive(Clone, Debug)]
pub struct Extraction {
    pub series: TaylorSeries,
    /// Larger of the top-quarter coefficient magnitude and the DFT roundoff floor.
    pub error_estimate: f64,
    pub radius: f64,
}

/// Reusable DFT plan for extracting coefficients from circle samples.
#[derive(Clone)]
pub struct Extractor {
    fft: Arc<dyn Fft<f64>>,
    cfg: ExtractionConfig,
}

impl Extractor {
    pub fn new(cfg: ExtractionConfig) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(cfg.sample_count);
        Self { fft, cfg }
    }

    pub fn config(&self) -> &ExtractionConfig {
        &self.cfg
    }

    /// Coefficients `c_0..=c_order` from samples taken at [`ExtractionConfig::nodes`].
    pub fn from_samples(&self, samples: &[C64], order: usize) -> Result<Extraction> {
        let m = self.cfg.sample_count;
        assert_eq!(samples.len(), m, "sample vector length must equal the sample count");
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonAnalyticSample { index });
        }
        let mut buf = samples.to_vec();
        self.fft.process(&mut buf);
        let rho = self.cfg.sample_radius;
        let mut scale = 1.0 / m as f64;
        let mut coeffs = Vec::with_capacity(order + 1);
        for c in buf.iter().take(order + 1) {
            coeffs.push(c * scale);
            scale /= rho;
        }
        let max_sample = samples.iter().map(|s| s.norm()).fold(0.0, f64::max);
        let roundoff = EPS * (m as f64).log2() * max_sample * rho.powi(-(order as i32));
        let quarter = (order + 1).div_ceil(4);
        let top = coeffs[order + 1 - quarter..].iter().map(|c| c.norm()).fold(0.0, f64::max);
        Ok(Extraction { series: TaylorSeries { coeffs }, error_estimate: top.max(roundoff), radius: rho })
    }

    pub fn extract<F>(&self, f: F, order: usize) -> Result<Extraction>
    where
        F: Fn(C64) -> C64,
    {
        self.cfg.validate(order)?;
        let samples: Vec<C64> = self.cfg.nodes().into_iter().map(f).collect();
        self.from_samples(&samples, order)
    }
}

/// Taylor coefficients of a point evaluator by the discrete Cauchy integral.
pub fn extract_coeffs<F>(f: F, cfg: &ExtractionConfig, order: usize) -> Result<Extraction>
where
    F: Fn(C64) -> C64,
{
    cfg.validate(order)?;
    Extractor::new(*cfg).extract(f, order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn geometric(ratio: f64, order: usize) -> TaylorSeries {
        TaylorSeries::from_real(&(0..=order).map(|n| ratio.powi(n as i32)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn binomial_square() {
        let f = TaylorSeries::from_real(&[1.0, 1.0, 0.0]).unwrap();
        let sq = cauchy_product(&f, &f);
        assert_eq!(sq.coeffs(), &[c(1.0), c(2.0), c(1.0)]);
    }

    #[test]
    fn product_with_one_is_identity() {
        let f = TaylorSeries::new(vec![C64::new(0.3, -1.0), C64::new(2.0, 0.5), c(-4.0)]).unwrap();
        assert_eq!(cauchy_product(&f, &TaylorSeries::one(2)), f);
    }

    #[test]
    fn geometric_times_its_inverse() {
        let g = geometric(0.5, 8);
        let inv = TaylorSeries::from_real(&[1.0, -0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let p = cauchy_product(&g, &inv);
        assert!((p.coeff(0) - 1.0).norm() < 1e-15);
        for j in 1..=8 {
            assert!(p.coeff(j).norm() < 1e-15, "coefficient {j} = {}", p.coeff(j));
        }
    }

    #[test]
    fn derivative_examples() {
        let f = TaylorSeries::from_real(&[1.0, 2.0, 1.0]).unwrap();
        assert_eq!(f.derivative().unwrap().coeffs(), &[c(2.0), c(2.0)]);

        let k = TaylorSeries::from_real(&[3.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(k.derivative().unwrap(), TaylorSeries::zero(2));

        let g = geometric(0.5, 16).derivative().unwrap();
        assert_eq!(g.order(), 15);
        for j in 0..=15 {
            let expected = (j + 1) as f64 * 0.5f64.powi(j as i32 + 1);
            assert!((g.coeff(j) - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn derivative_of_order_zero_fails() {
        let err = TaylorSeries::one(0).derivative().unwrap_err();
        assert_eq!(err.to_string(), "cannot differentiate constant truncation below order 0");
    }

    #[test]
    fn evaluate_examples() {
        let f = TaylorSeries::from_real(&[1.0, 2.0, 1.0]).unwrap();
        assert_eq!(f.evaluate(c(0.0)), c(1.0));
        assert!((f.evaluate(C64::i()) - C64::new(0.0, 2.0)).norm() < 1e-15);
        let g = geometric(0.5, 64);
        assert!((g.evaluate(c(0.5)) - 4.0 / 3.0).norm() < 1e-12);
    }

    #[test]
    fn jet_evaluation_matches_derivative_series() {
        let f = TaylorSeries::new(vec![C64::new(1.0, 1.0), c(-2.0), C64::new(0.5, 3.0), c(0.25)]).unwrap();
        let z = C64::new(0.3, -0.2);
        let (v, d1, d2) = f.evaluate_jet(z);
        let fp = f.derivative().unwrap();
        assert!((v - f.evaluate(z)).norm() < 1e-15);
        assert!((d1 - fp.evaluate(z)).norm() < 1e-14);
        assert!((d2 - fp.derivative().unwrap().evaluate(z)).norm() < 1e-14);
    }

    #[test]
    fn extract_monomial() {
        let cfg = ExtractionConfig { sample_radius: 0.5, sample_count: 64, tail_tolerance: 0.0 };
        let e = extract_coeffs(|z| z * z, &cfg, 8).unwrap();
        for j in 0..=8 {
            let expected = if j == 2 { 1.0 } else { 0.0 };
            assert!((e.series.coeff(j) - expected).norm() < 1e-13, "c_{j} = {}", e.series.coeff(j));
        }
    }

    #[test]
    fn extract_geometric() {
        let cfg = ExtractionConfig { sample_radius: 0.9, sample_count: 256, tail_tolerance: 0.0 };
        let e = extract_coeffs(|z| 1.0 / (1.0 - z / 2.0), &cfg, 32).unwrap();
        for j in 0..=32 {
            assert!((e.series.coeff(j) - 0.5f64.powi(j as i32)).norm() < 1e-10);
        }
    }

    #[test]
    fn extract_exponential() {
        let cfg = ExtractionConfig { sample_radius: 0.5, sample_count: 128, tail_tolerance: 0.0 };
        let e = extract_coeffs(|z| z.exp(), &cfg, 16).unwrap();
        let mut fact = 1.0;
        for j in 0..=16 {
            if j > 0 {
                fact *= j as f64;
            }
            let err = (e.series.coeff(j) - 1.0 / fact).norm();
            // Sample roundoff is amplified by 2^j; the last coefficient sits at that floor.
            let tol = if j < 16 { 1e-12 } else { 1e-11 };
            assert!(err < tol, "c_{j}: {err:e}");
        }
    }

    #[test]
    fn non_finite_sample_is_rejected() {
        let cfg = ExtractionConfig { sample_radius: 0.5, sample_count: 64, tail_tolerance: 0.0 };
        let err = extract_coeffs(|z| 1.0 / (z - 0.5), &cfg, 8).unwrap_err();
        assert!(matches!(err, Error::NonAnalyticSample { index: 0 }));
        assert!(err.to_string().starts_with("evaluator not analytic on sampling circle"));
    }

    #[test]
    fn undersampling_is_rejected() {
        let cfg = ExtractionConfig { sample_radius: 0.5, sample_count: 16, tail_tolerance: 0.0 };
        assert!(matches!(extract_coeffs(|z| z, &cfg, 8), Err(Error::OutOfRange(_))));
        let cfg = ExtractionConfig { sample_count: 100, ..cfg };
        assert!(extract_coeffs(|z| z, &cfg, 8).is_err());
    }
}
