//! Matrix of `C_{ψ,φ} f = ψ·(f∘φ)` in the orthonormal basis `e_n = (n+1)^{(α−1)/2} z^n`.
//!
//! Column `k` holds the coefficients of `ψ·φ^k`, extracted from samples on one
//! circle; `φ^k` is formed by repeated pointwise multiplication of samples.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::catalog::AnalyticFunction;
use crate::series::{ExtractionConfig, Extractor, TaylorSeries};
use crate::space::{kernel_vector, SpaceParams};
use crate::{Error, Result, C64, EPS};

/// Radii tried in turn when the extraction error exceeds tolerance.
pub const ADAPTIVE_RADII: [f64; 4] = [0.75, 0.8, 0.85, 0.9];

#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    /// `entries[(j, k)] = ⟨C e_k, e_j⟩`.
    pub entries: DMatrix<C64>,
    pub params: SpaceParams,
    pub psi_label: String,
    pub phi_label: String,
    /// Error estimate for the entries of each column (basis scaling included).
    pub column_error: Vec<f64>,
    pub sample_radius: f64,
    pub sample_count: usize,
    pub warnings: Vec<String>,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim()).map(|k| self.entries[(k, k)]).collect()
    }

    /// Largest `|M[j][k]| − err_k` over `j < k`; nonpositive for a triangular matrix.
    pub fn upper_excess(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for k in 1..self.dim() {
            for j in 0..k {
                worst = worst.max(self.entries[(j, k)].norm() - self.column_error[k]);
            }
        }
        worst
    }

    pub fn apply_coords(&self, x: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let mut v = DVector::zeros(n);
        for (i, c) in x.iter().take(n).enumerate() {
            v[i] = *c;
        }
        (&self.entries * v).iter().copied().collect()
    }

    fn header(&self) -> serde_json::Value {
        json!({
            "alpha": self.params.alpha,
            "N": self.dim(),
            "psi": self.psi_label,
            "phi": self.phi_label,
            "sample_radius": self.sample_radius,
            "sample_count": self.sample_count,
            "column_error": self.column_error,
            "warnings": self.warnings,
        })
    }

    /// Header comment line (JSON object) followed by `j,k,re,im` rows.
    pub fn to_csv(&self) -> String {
        let header = serde_json::to_string(&self.header()).expect("header serializes");
        let mut out = format!("# {header}\nj,k,re,im\n");
        for j in 0..self.dim() {
            for k in 0..self.dim() {
                let c = self.entries[(j, k)];
                writeln!(out, "{j},{k},{},{}", crate::json::format_f64(c.re), crate::json::format_f64(c.im)).unwrap();
            }
        }
        out
    }

    /// `{"header": {...}, "entries": [[[re, im], ...], ...]}` in row-major order.
    pub fn to_json_value(&self) -> serde_json::Value {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.dim())
            .map(|j| (0..self.dim()).map(|k| [self.entries[(j, k)].re, self.entries[(j, k)].im]).collect())
            .collect();
        json!({ "header": self.header(), "entries": rows })
    }
}

fn check_inputs(psi: &AnalyticFunction, phi: &AnalyticFunction, p: &SpaceParams, n: usize) -> Result<()> {
    p.require_dirichlet_range()?;
    if !phi.meta().claims_self_map {
        return Err(Error::Precondition(format!("phi `{}` is not a self-map of the disc", phi.label())));
    }
    if n == 0 {
        return Err(Error::OutOfRange("matrix dimension must be positive".into()));
    }
    let probe = crate::series::circle_nodes(0.5, 16);
    if probe.iter().all(|&z| psi.value(z).norm() == 0.0) {
        return Err(Error::Precondition(format!("psi `{}` vanishes identically", psi.label())));
    }
    Ok(())
}

struct Attempt {
    columns: Vec<TaylorSeries>,
    coeff_error: Vec<f64>,
    relative: Vec<f64>,
    radius: f64,
}

fn assemble_at(psi: &AnalyticFunction, phi: &AnalyticFunction, n: usize, cfg: ExtractionConfig) -> Result<Attempt> {
    cfg.validate(n - 1)?;
    let nodes = cfg.nodes();
    let psi_s: Vec<C64> = nodes.iter().map(|&z| psi.value(z)).collect();
    let phi_s: Vec<C64> = nodes.iter().map(|&z| phi.value(z)).collect();
    let mut samples = Vec::with_capacity(n);
    let mut power = vec![C64::new(1.0, 0.0); nodes.len()];
    for _ in 0..n {
        samples.push(psi_s.iter().zip(&power).map(|(a, b)| a * b).collect::<Vec<C64>>());
        for (pw, f) in power.iter_mut().zip(&phi_s) {
            *pw *= f;
        }
    }
    let extractor = Extractor::new(cfg);
    let m = cfg.sample_count;
    let full = m / 2 - 1;
    let rho = cfg.sample_radius;
    let results: Vec<Result<(TaylorSeries, f64, f64)>> = samples
        .par_iter()
        .map(|s| {
            let ex = extractor.from_samples(s, full)?;
            let coeffs = ex.series.coeffs();
            // Aliasing: c_{j+M}ρ^M bounded through the extracted top quarter.
            let quarter = (full + 1).div_ceil(4);
            let top = coeffs[full + 1 - quarter..].iter().map(|c| c.norm()).fold(0.0, f64::max);
            let aliasing = top * rho.powi(m as i32);
            let max_sample = s.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let roundoff = EPS * (m as f64).log2() * max_sample * rho.powi(-((n - 1) as i32));
            let err = aliasing.max(roundoff);
            let series = ex.series.truncated(n - 1);
            let scale = series.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
            let rel = if scale > 0.0 { err / scale } else { 0.0 };
            Ok((series, err, rel))
        })
        .collect();
    let mut columns = Vec::with_capacity(n);
    let mut coeff_error = Vec::with_capacity(n);
    let mut relative = Vec::with_capacity(n);
    for r in results {
        let (s, e, rel) = r?;
        columns.push(s);
        coeff_error.push(e);
        relative.push(rel);
    }
    Ok(Attempt { columns, coeff_error, relative, radius: rho })
}

/// Assembles the `n × n` truncation. The sample radius of `cfg` is the first
/// radius tried; larger radii from [`ADAPTIVE_RADII`] follow while some
/// column's error estimate exceeds `cfg.tail_tolerance` relative to its largest
/// coefficient. The attempt with the smallest worst relative error is kept.
pub fn assemble_matrix(
    psi: &AnalyticFunction,
    phi: &AnalyticFunction,
    p: &SpaceParams,
    n: usize,
    cfg: &ExtractionConfig,
) -> Result<OperatorMatrix> {
    check_inputs(psi, phi, p, n)?;
    let mut radii = vec![cfg.sample_radius];
    radii.extend(ADAPTIVE_RADII.iter().copied().filter(|&r| r > cfg.sample_radius));
    let mut best: Option<(f64, Attempt)> = None;
    for r in radii {
        let attempt = assemble_at(psi, phi, n, cfg.with_radius(r))?;
        let worst = attempt.relative.iter().copied().fold(0.0, f64::max);
        let better = best.as_ref().is_none_or(|(w, _)| worst < *w);
        if better {
            best = Some((worst, attempt));
        }
        if worst <= cfg.tail_tolerance {
            break;
        }
    }
    let (_, attempt) = best.expect("at least one radius is tried");

    let col_scale: Vec<f64> = (0..n).map(|k| p.basis_scale(k)).collect();
    let row_scale: Vec<f64> = (0..n).map(|j| 1.0 / p.basis_scale(j)).collect();
    let max_row = row_scale.iter().copied().fold(0.0, f64::max);
    let entries = DMatrix::from_fn(n, n, |j, k| attempt.columns[k].coeff(j) * (col_scale[k] * row_scale[j]));
    let column_error: Vec<f64> = (0..n).map(|k| attempt.coeff_error[k] * col_scale[k] * max_row).collect();
    if let Some((j, k)) = (0..n).flat_map(|k| (0..n).map(move |j| (j, k))).find(|&(j, k)| !entries[(j, k)].is_finite())
    {
        return Err(Error::Precondition(format!("non-finite matrix entry at ({j}, {k})")));
    }

    let failing: Vec<usize> = (0..n).filter(|&k| attempt.relative[k] > cfg.tail_tolerance).collect();
    let mut warnings = Vec::new();
    if let Some(&worst_k) = failing.iter().max_by(|&&a, &&b| attempt.relative[a].total_cmp(&attempt.relative[b])) {
        warnings.push(format!(
            "{} of {n} columns exceed the extraction tolerance {:e}; worst relative error {:e} at column {worst_k}",
            failing.len(),
            cfg.tail_tolerance,
            attempt.relative[worst_k]
        ));
    }
    Ok(OperatorMatrix {
        entries,
        params: *p,
        psi_label: psi.label().to_string(),
        phi_label: phi.label().to_string(),
        column_error,
        sample_radius: attempt.radius,
        sample_count: cfg.sample_count,
        warnings,
    })
}

/// Coefficients `0..n` of `ψ·(f∘φ)` extracted from its point evaluator.
pub fn apply_operator(
    psi: &AnalyticFunction,
    phi: &AnalyticFunction,
    f: &TaylorSeries,
    p: &SpaceParams,
    n: usize,
    cfg: &ExtractionConfig,
) -> Result<crate::series::Extraction> {
    check_inputs(psi, phi, p, n)?;
    Extractor::new(*cfg).extract(|z| psi.value(z) * f.evaluate(phi.value(z)), n - 1)
}

#[derive(Clone, Debug, Serialize)]
pub struct AdjointKernelReport {
    pub z: [f64; 2],
    pub phi_z: [f64; 2],
    pub n: usize,
    /// `‖Mᴴv_z − conj(ψ(z))v_{φ(z)}‖ / ‖v_{φ(z)}‖`.
    pub residual: f64,
    pub tail_bound_z: f64,
    pub tail_bound_phi_z: f64,
}

/// Adjoint identity `C* k_z = conj(ψ(z)) k_{φ(z)}` on an assembled truncation.
pub fn adjoint_kernel_residual(
    m: &OperatorMatrix,
    psi: &AnalyticFunction,
    phi: &AnalyticFunction,
    z: C64,
) -> Result<AdjointKernelReport> {
    if !(z.norm() <= 0.8) {
        return Err(Error::Precondition(format!("adjoint kernel check needs |z| <= 0.8, got {}", z.norm())));
    }
    let n = m.dim();
    let p = &m.params;
    let kz = kernel_vector(z, p, n - 1)?;
    let w = phi.value(z);
    let kw = kernel_vector(w, p, n - 1)?;
    let vz = DVector::from_vec(kz.basis_coords(p));
    let vw = DVector::from_vec(kw.basis_coords(p));
    let lhs = m.entries.adjoint() * vz;
    let rhs = &vw * psi.value(z).conj();
    let denom = vw.norm();
    Ok(AdjointKernelReport {
        z: [z.re, z.im],
        phi_z: [w.re, w.im],
        n,
        residual: (lhs - rhs).norm() / denom,
        tail_bound_z: kz.tail_bound,
        tail_bound_phi_z: kw.tail_bound,
    })
}

pub fn adjoint_kernel_check(
    psi: &AnalyticFunction,
    phi: &AnalyticFunction,
    p: &SpaceParams,
    z: C64,
    n: usize,
    cfg: &ExtractionConfig,
) -> Result<AdjointKernelReport> {
    if !(z.norm() <= 0.8) {
        return Err(Error::Precondition(format!("adjoint kernel check needs |z| <= 0.8, got {}", z.norm())));
    }
    let m = assemble_matrix(psi, phi, p, n, cfg)?;
    adjoint_kernel_residual(&m, psi, phi, z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(spec: &str) -> AnalyticFunction {
        AnalyticFunction::parse(spec).unwrap()
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn ex1() -> (AnalyticFunction, AnalyticFunction) {
        (f("psi_power:beta=2.5"), f("mobius_self_map:lambda=0.5"))
    }

    #[test]
    fn contraction_gives_diagonal_powers() {
        for alpha in [-0.5, 0.0, 0.5] {
            let p = SpaceParams::new(alpha).unwrap();
            let m = assemble_matrix(
                &AnalyticFunction::constant(1.0),
                &f("polynomial:0,0.5"),
                &p,
                8,
                &ExtractionConfig::for_order(8),
            )
            .unwrap();
            for j in 0..8 {
                for k in 0..8 {
                    let want = if j == k { 0.5f64.powi(k as i32) } else { 0.0 };
                    assert!((m.entries[(j, k)] - c(want)).norm() < 1e-14, "({j},{k})");
                }
            }
        }
    }

    #[test]
    fn identity_symbol_gives_identity() {
        let p = SpaceParams::new(0.3).unwrap();
        let m = assemble_matrix(
            &AnalyticFunction::constant(1.0),
            &AnalyticFunction::identity(),
            &p,
            12,
            &ExtractionConfig::for_order(12),
        )
        .unwrap();
        let id = DMatrix::<C64>::identity(12, 12);
        assert!((m.entries - id).norm() < 1e-13);
    }

    #[test]
    fn example_matrix_is_lower_triangular_with_power_diagonal() {
        let (psi, phi) = ex1();
        let p = SpaceParams::new(0.5).unwrap();
        let m = assemble_matrix(&psi, &phi, &p, 64, &ExtractionConfig::for_order(64)).unwrap();
        assert!(m.upper_excess() <= 0.0, "upper excess {}", m.upper_excess());
        for (k, d) in m.diagonal().iter().enumerate() {
            assert!((d - c(0.5f64.powi(k as i32))).norm() <= 1e-10, "k={k} d={d}");
        }
        assert!(m.entries.iter().all(|e| e.is_finite()));
    }

    #[test]
    fn assembly_rejects_bad_inputs() {
        let p = SpaceParams::new(0.5).unwrap();
        let cfg = ExtractionConfig::for_order(8);
        let err = assemble_matrix(&AnalyticFunction::constant(1.0), &f("polynomial:0.5,1"), &p, 8, &cfg).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        let err = assemble_matrix(&AnalyticFunction::constant(0.0), &f("polynomial:0,0.5"), &p, 8, &cfg).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn apply_examples() {
        let p = SpaceParams::new(0.5).unwrap();
        let cfg = ExtractionConfig::for_order(16);
        let z2 = TaylorSeries::monomial(2, 2);
        let out = apply_operator(&AnalyticFunction::constant(1.0), &f("polynomial:0,0.5"), &z2, &p, 8, &cfg).unwrap();
        for (j, a) in out.series.coeffs().iter().enumerate() {
            let want = if j == 2 { 0.25 } else { 0.0 };
            assert!((a - c(want)).norm() < 1e-15);
        }
        let one = TaylorSeries::one(0);
        let out = apply_operator(&f("polynomial:0,0,1"), &AnalyticFunction::identity(), &one, &p, 8, &cfg).unwrap();
        for (j, a) in out.series.coeffs().iter().enumerate() {
            let want = if j == 2 { 1.0 } else { 0.0 };
            assert!((a - c(want)).norm() < 1e-15);
        }
    }

    #[test]
    fn apply_matches_matrix_product() {
        let (psi, phi) = ex1();
        let p = SpaceParams::new(0.5).unwrap();
        let n = 32;
        let cfg = ExtractionConfig::for_order(n);
        let m = assemble_matrix(&psi, &phi, &p, n, &cfg).unwrap();
        let poly = TaylorSeries::from_real(&[1.0, 1.0]).unwrap();
        let direct = apply_operator(&psi, &phi, &poly, &p, n, &cfg).unwrap();
        let via = p.from_basis_coords(&m.apply_coords(&p.to_basis_coords(&poly))).unwrap();
        for j in 0..n {
            assert!((direct.series.coeff(j) - via.coeff(j)).norm() <= 1e-9, "j={j}");
        }
    }

    #[test]
    fn adjoint_examples() {
        let p = SpaceParams::new(0.5).unwrap();
        let one = AnalyticFunction::constant(1.0);
        let half = f("polynomial:0,0.5");
        let r = adjoint_kernel_check(&one, &half, &p, c(0.0), 16, &ExtractionConfig::for_order(16)).unwrap();
        assert!(r.residual <= 1e-12);
        let r = adjoint_kernel_check(&one, &half, &p, c(0.5), 256, &ExtractionConfig::for_order(256)).unwrap();
        assert!(r.residual <= 1e-8, "{}", r.residual);
        assert!(adjoint_kernel_check(&one, &half, &p, c(0.9), 16, &ExtractionConfig::for_order(16)).is_err());
    }

    #[test]
    fn exports_carry_header() {
        let p = SpaceParams::new(0.5).unwrap();
        let m = assemble_matrix(
            &AnalyticFunction::constant(1.0),
            &f("polynomial:0,0.5"),
            &p,
            3,
            &ExtractionConfig::for_order(3),
        )
        .unwrap();
        let csv = m.to_csv();
        let mut lines = csv.lines();
        let head: serde_json::Value = serde_json::from_str(lines.next().unwrap().trim_start_matches("# ")).unwrap();
        assert_eq!(head["N"], 3);
        assert_eq!(lines.next().unwrap(), "j,k,re,im");
        assert_eq!(lines.count(), 9);
        let v = m.to_json_value();
        assert_eq!(v["entries"].as_array().unwrap().len(), 3);
        assert_eq!(v["header"]["alpha"], 0.5);
    }
}
