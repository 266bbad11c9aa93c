//! Fixed-point spectrum `{ψ(a)φ'(a)^n} ∪ {0}` against truncated-matrix eigenvalues.

pub mod eigen;

use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{conjugate_to_origin, find_fixed_point, AnalyticFunction};
use crate::operator::{assemble_matrix, OperatorMatrix};
use crate::series::{circle_nodes, ExtractionConfig, TaylorSeries};
use crate::space::SpaceParams;
use crate::{Error, Result, C64};

pub use eigen::{eigenvalues, eigenvector, sort_spectrum};

/// Default size of the predicted set.
pub const DEFAULT_PREDICTED: usize = 12;
/// Default number of leading predictions that must match.
pub const DEFAULT_REQUIRED: usize = 6;

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

#[derive(Clone, Debug)]
pub struct SpectrumPrediction {
    pub a: C64,
    pub psi_a: C64,
    pub phi_prime_a: C64,
    /// `ψ(a)φ'(a)^n`, `n = 0..P`; just `[0]` when `ψ(a) = 0`. Zero is always in the spectrum.
    pub predicted: Vec<C64>,
}

impl SpectrumPrediction {
    pub fn quasi_nilpotent(&self) -> bool {
        self.psi_a == C64::new(0.0, 0.0)
    }

    /// Index `n` and distance of the ladder value `ψ(a)φ'(a)^n`, `n ≤ max_n`, nearest to `lambda`.
    pub fn nearest_ladder(&self, lambda: C64, max_n: usize) -> (usize, f64) {
        let mut best = (0, (lambda - self.psi_a).norm());
        let mut v = self.psi_a;
        for n in 1..=max_n {
            v *= self.phi_prime_a;
            let d = (lambda - v).norm();
            if d < best.1 {
                best = (n, d);
            }
        }
        // The accumulation point 0 sits at the end of the ladder.
        let d0 = lambda.norm();
        if d0 < best.1 {
            best = (max_n, d0);
        }
        best
    }
}

/// Prediction from the jets of `ψ` and `φ` at the interior fixed point of `φ`.
pub fn predict_spectrum(
    psi: &AnalyticFunction,
    phi: &AnalyticFunction,
    p: &SpaceParams,
    count: usize,
) -> Result<SpectrumPrediction> {
    p.require_dirichlet_range()?;
    let a = match phi.meta().known_fixed_point {
        Some(a) => a,
        None => find_fixed_point(phi)?
            .ok_or_else(|| Error::Inapplicable(format!("no fixed point in D for `{}`", phi.label())))?,
    };
    prediction_at(psi, phi, a, count)
}

fn prediction_at(psi: &AnalyticFunction, phi: &AnalyticFunction, a: C64, count: usize) -> Result<SpectrumPrediction> {
    let psi_a = psi.value(a);
    let phi_prime_a = phi.jet(a).d1;
    if phi_prime_a.norm() >= 1.0 - 1e-12 {
        return Err(Error::Inapplicable(format!(
            "|phi'(a)| = {} at the fixed point; automorphisms and the identity are excluded",
            phi_prime_a.norm()
        )));
    }
    let predicted = if psi_a == C64::new(0.0, 0.0) {
        vec![psi_a]
    } else {
        let mut v = psi_a;
        (0..count.max(1))
            .map(|_| {
                let out = v;
                v *= phi_prime_a;
                out
            })
            .collect()
    };
    Ok(SpectrumPrediction { a, psi_a, phi_prime_a, predicted })
}

/// All `N` eigenvalues of a truncation, descending modulus then ascending argument.
pub fn truncated_eigenvalues(m: &OperatorMatrix) -> Result<Vec<C64>> {
    eigenvalues(&m.entries)
}

/// Per-index matching tolerances.
#[derive(Clone, Debug, Serialize)]
pub struct TolProfile {
    pub per_index: Vec<f64>,
}

impl TolProfile {
    pub fn uniform(tol: f64, len: usize) -> Self {
        Self { per_index: vec![tol; len] }
    }

    /// `max(floor, safety·|λ_n(N) − λ_n(N/2)|)` from matched eigenvalues at two sizes.
    pub fn from_doubling(coarse: &[C64], fine: &[C64], safety: f64, floor: f64) -> Self {
        Self { per_index: coarse.iter().zip(fine).map(|(c, f)| (safety * (f - c).norm()).max(floor)).collect() }
    }

    /// Decaying envelope `scale/N` used for quasi-nilpotent truncations.
    pub fn quasi_nilpotent(n: usize) -> Self {
        Self { per_index: vec![1e-2 / n as f64] }
    }

    pub fn at(&self, i: usize) -> f64 {
        self.per_index.get(i).or(self.per_index.last()).copied().unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumMatch {
    pub n: usize,
    pub predicted: [f64; 2],
    pub lambda: [f64; 2],
    pub err: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MatchOutcome {
    pub matches: Vec<SpectrumMatch>,
    pub required: usize,
    /// Quasi-nilpotent case: largest eigenvalue modulus.
    pub max_modulus: Option<f64>,
    pub pass: bool,
}

impl MatchOutcome {
    pub fn matched(&self) -> Vec<C64> {
        self.matches.iter().map(|m| C64::new(m.lambda[0], m.lambda[1])).collect()
    }

    pub fn max_err(&self, first: usize) -> f64 {
        self.matches.iter().take(first).map(|m| m.err).fold(0.0, f64::max)
    }
}

/// Greedy nearest matching of predictions (descending modulus) to unused eigenvalues.
pub fn match_spectra(pred: &SpectrumPrediction, eig: &[C64], profile: &TolProfile, required: usize) -> MatchOutcome {
    let mut used = vec![false; eig.len()];
    let mut matches = Vec::new();
    for (n, &target) in pred.predicted.iter().enumerate() {
        let best = eig
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, l)| (i, (l - target).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
        let Some((i, err)) = best else { break };
        used[i] = true;
        matches.push(SpectrumMatch { n, predicted: pair(target), lambda: pair(eig[i]), err });
    }
    if pred.quasi_nilpotent() {
        let max_modulus = eig.iter().map(|l| l.norm()).fold(0.0, f64::max);
        return MatchOutcome {
            matches,
            required: 0,
            max_modulus: Some(max_modulus),
            pass: max_modulus <= profile.at(0),
        };
    }
    let required = required.min(pred.predicted.len()).min(eig.len());
    let pass = matches.len() >= required && matches.iter().take(required).all(|m| m.err <= profile.at(m.n));
    MatchOutcome { matches, required, max_modulus: None, pass }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub max_err_first6: f64,
    pub errors: Vec<f64>,
    #[serde(skip)]
    pub matched: Vec<C64>,
    #[serde(skip)]
    pub eigenvalues: Vec<C64>,
}

/// Matched-eigenvalue errors for each truncation size; sizes run concurrently.
pub fn convergence_table(
    psi: &AnalyticFunction,
    phi: &AnalyticFunction,
    p: &SpaceParams,
    pred: &SpectrumPrediction,
    sizes: &[usize],
) -> Result<Vec<ConvergenceRow>> {
    sizes
        .par_iter()
        .map(|&n| {
            let m = assemble_matrix(psi, phi, p, n, &ExtractionConfig::for_order(n))?;
            let eig = truncated_eigenvalues(&m)?;
            let outcome = match_spectra(pred, &eig, &TolProfile::uniform(f64::INFINITY, 1), DEFAULT_REQUIRED);
            let errors: Vec<f64> = outcome.matches.iter().map(|m| m.err).collect();
            Ok(ConvergenceRow {
                n,
                max_err_first6: outcome.max_err(DEFAULT_REQUIRED),
                errors,
                matched: outcome.matched(),
                eigenvalues: eig,
            })
        })
        .collect()
}

/// Truncation sizes `{N/4, N/2, N}` (each at least 1, deduplicated).
pub fn doubling_sizes(n: usize) -> Vec<usize> {
    let mut v = vec![(n / 4).max(1), (n / 2).max(1), n];
    v.dedup();
    v
}

/// `max_{|z|=ρ} |ψ(z)f(φ(z)) − λf(z)|` over 128 equispaced points.
pub fn schroder_residual(
    psi: &AnalyticFunction,
    phi: &AnalyticFunction,
    lambda: C64,
    f: &TaylorSeries,
    rho: f64,
) -> f64 {
    circle_nodes(rho, 128)
        .into_iter()
        .map(|z| (psi.value(z) * f.evaluate(phi.value(z)) - lambda * f.evaluate(z)).norm())
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct LadderEntry {
    pub lambda: [f64; 2],
    pub residual: f64,
    pub ladder_index: usize,
    pub distance: f64,
}

/// Eigenpairs of a truncation with their Schröder residuals at `|z| = 0.5`
/// and the nearest ladder value `ψ(a)φ'(a)^n`, `n ≤ N`.
pub fn schroder_ladder(
    psi: &AnalyticFunction,
    phi: &AnalyticFunction,
    m: &OperatorMatrix,
    pred: &SpectrumPrediction,
    eig: &[C64],
) -> Result<Vec<LadderEntry>> {
    let n = m.dim();
    eig.iter()
        .map(|&lambda| {
            let x = eigenvector(&m.entries, lambda);
            let coords: Vec<C64> = x.iter().copied().collect();
            let f = m.params.from_basis_coords(&coords)?;
            let residual = schroder_residual(psi, phi, lambda, &f, 0.5);
            let (ladder_index, distance) = pred.nearest_ladder(lambda, n);
            Ok(LadderEntry { lambda: pair(lambda), residual, ladder_index, distance })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ConjugationReport {
    pub a: [f64; 2],
    pub prediction_direct: Vec<[f64; 2]>,
    pub prediction_conjugated: Vec<[f64; 2]>,
    pub prediction_difference: f64,
    pub conjugated_diagonal: Vec<[f64; 2]>,
    pub diagonal_error: f64,
    pub diagonal_ok: bool,
    /// `|λ_n(direct) − diag_n(conjugated)|` for the leading matches.
    pub eigen_differences: Vec<f64>,
    pub envelope: Vec<f64>,
    pub eigen_ok: bool,
}

/// Compares the direct truncation with the triangular truncation of the pair
/// conjugated so that the fixed point sits at the origin.
pub fn conjugation_invariance_check(
    psi: &AnalyticFunction,
    phi: &AnalyticFunction,
    a: C64,
    p: &SpaceParams,
    n: usize,
) -> Result<ConjugationReport> {
    let (zeta, eta) = conjugate_to_origin(psi, phi, a)?;
    let direct = prediction_at(psi, phi, a, DEFAULT_PREDICTED)?;
    let conj = prediction_at(&zeta, &eta, C64::new(0.0, 0.0), DEFAULT_PREDICTED)?;
    let prediction_difference =
        direct.predicted.iter().zip(&conj.predicted).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);

    let sizes = doubling_sizes(n);
    let (cm, table) = rayon::join(
        || assemble_matrix(&zeta, &eta, p, n, &ExtractionConfig::for_order(n)),
        || convergence_table(psi, phi, p, &direct, &sizes),
    );
    let cm = cm?;
    let table = table?;
    let k = DEFAULT_PREDICTED.min(n);
    let diag: Vec<C64> = cm.diagonal().into_iter().take(k).collect();
    let diagonal_error = diag.iter().zip(&direct.predicted).map(|(d, w)| (d - w).norm()).fold(0.0, f64::max);

    let fine = table.last().expect("sizes are nonempty");
    let envelope = envelope_from_table(&table);
    let eigen_differences: Vec<f64> = fine.matched.iter().zip(&diag).map(|(l, d)| (l - d).norm()).collect();
    let lead = DEFAULT_REQUIRED.min(eigen_differences.len());
    let eigen_ok = (0..lead).all(|i| eigen_differences[i] <= envelope.at(i));
    Ok(ConjugationReport {
        a: pair(a),
        prediction_direct: direct.predicted.iter().copied().map(pair).collect(),
        prediction_conjugated: conj.predicted.iter().copied().map(pair).collect(),
        prediction_difference,
        conjugated_diagonal: diag.iter().copied().map(pair).collect(),
        diagonal_error,
        diagonal_ok: diagonal_error <= 1e-8,
        eigen_differences,
        envelope: envelope.per_index,
        eigen_ok,
    })
}

/// Floor of the per-index envelope; errors at roundoff level stop shrinking.
pub const ENVELOPE_FLOOR: f64 = 1e-10;

/// Tolerance profile from the two finest rows of a convergence table.
pub fn envelope_from_table(table: &[ConvergenceRow]) -> TolProfile {
    match table {
        [.., coarse, fine] => TolProfile::from_doubling(&coarse.matched, &fine.matched, 10.0, ENVELOPE_FLOOR),
        [only] => TolProfile::uniform(ENVELOPE_FLOOR.max(only.max_err_first6), only.matched.len()),
        [] => TolProfile::uniform(ENVELOPE_FLOOR, 1),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub prediction: Vec<[f64; 2]>,
    #[serde(rename = "eigenvalues_N")]
    pub eigenvalues_n: Vec<[f64; 2]>,
    pub matches: Vec<SpectrumMatch>,
    pub convergence: Vec<ConvergenceRow>,
    #[serde(rename = "N")]
    pub n: usize,
    pub a: [f64; 2],
    pub psi_a: [f64; 2],
    pub phi_prime_a: [f64; 2],
    pub quasi_nilpotent: bool,
    pub tolerance: Vec<f64>,
    pub max_modulus: Option<f64>,
    pub pass: bool,
    pub conjugation: Option<ConjugationReport>,
    pub warnings: Vec<String>,
}

/// Prediction, dense eigenvalues at `N`, matching against the doubling envelope,
/// and (for a fixed point off the origin) the conjugated triangular route.
pub fn spectrum_report(
    psi: &AnalyticFunction,
    phi: &AnalyticFunction,
    p: &SpaceParams,
    n: usize,
) -> Result<SpectrumReport> {
    let pred = predict_spectrum(psi, phi, p, DEFAULT_PREDICTED)?;
    let sizes = doubling_sizes(n);
    let table = convergence_table(psi, phi, p, &pred, &sizes)?;
    let m = assemble_matrix(psi, phi, p, n, &ExtractionConfig::for_order(n))?;
    let eig = table.last().expect("sizes are nonempty").eigenvalues.clone();
    let profile = if pred.quasi_nilpotent() { TolProfile::quasi_nilpotent(n) } else { envelope_from_table(&table) };
    let outcome = match_spectra(&pred, &eig, &profile, DEFAULT_REQUIRED);
    let conjugation = if pred.a.norm() > 1e-10 && !pred.quasi_nilpotent() {
        Some(conjugation_invariance_check(psi, phi, pred.a, p, n)?)
    } else {
        None
    };
    Ok(SpectrumReport {
        prediction: pred.predicted.iter().copied().map(pair).collect(),
        eigenvalues_n: eig.iter().copied().map(pair).collect(),
        matches: outcome.matches.clone(),
        convergence: table,
        n,
        a: pair(pred.a),
        psi_a: pair(pred.psi_a),
        phi_prime_a: pair(pred.phi_prime_a),
        quasi_nilpotent: pred.quasi_nilpotent(),
        tolerance: profile.per_index,
        max_modulus: outcome.max_modulus,
        pass: outcome.pass,
        conjugation,
        warnings: m.warnings,
    })
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

    fn p(alpha: f64) -> SpaceParams {
        SpaceParams::new(alpha).unwrap()
    }

    #[test]
    fn predictions() {
        let pr = predict_spectrum(&f("psi_power:beta=2.5"), &f("mobius_self_map:lambda=0.5"), &p(0.5), 12).unwrap();
        assert_eq!(pr.a, c(0.0));
        for (n, v) in pr.predicted.iter().enumerate() {
            assert!((v - c(0.5f64.powi(n as i32))).norm() < 1e-15);
        }

        let pr = predict_spectrum(&f("polynomial:0,0,1"), &f("polynomial:0.25,0.5"), &p(0.5), 12).unwrap();
        assert!((pr.a - c(0.5)).norm() < 1e-14);
        for (n, v) in pr.predicted.iter().enumerate() {
            assert!((v - c(0.25 * 0.5f64.powi(n as i32))).norm() < 1e-14);
        }
        assert!(pr.predicted.windows(2).all(|w| w[1].norm() < w[0].norm()));

        let pr = predict_spectrum(&f("polynomial:0,0,1"), &f("polynomial:0,0.5"), &p(0.5), 12).unwrap();
        assert!(pr.quasi_nilpotent());
        assert_eq!(pr.predicted, vec![c(0.0)]);

        let err = predict_spectrum(&f("polynomial:1"), &f("polynomial:0.5,0,0.5"), &p(0.5), 12).unwrap_err();
        assert!(matches!(err, Error::Inapplicable(_)));
        assert_eq!(err.exit_code(), 4);
        let err = predict_spectrum(&f("polynomial:1"), &AnalyticFunction::identity(), &p(0.5), 12).unwrap_err();
        assert!(matches!(err, Error::Inapplicable(_)));
    }

    #[test]
    fn exact_matching() {
        let pred = SpectrumPrediction {
            a: c(0.0),
            psi_a: c(1.0),
            phi_prime_a: c(0.5),
            predicted: (0..8).map(|n| c(0.5f64.powi(n))).collect(),
        };
        let eig: Vec<C64> = (0..10).map(|n| c(0.5f64.powi(n))).collect();
        let out = match_spectra(&pred, &eig, &TolProfile::uniform(0.0, 8), 6);
        assert!(out.pass);
        assert!(out.matches.iter().all(|m| m.err == 0.0));
    }

    #[test]
    fn example_truncation_matches_diagonal() {
        let (psi, phi) = (f("psi_power:beta=2.5"), f("mobius_self_map:lambda=0.5"));
        let m = assemble_matrix(&psi, &phi, &p(0.5), 64, &ExtractionConfig::for_order(64)).unwrap();
        let eig = truncated_eigenvalues(&m).unwrap();
        assert_eq!(eig.len(), 64);
        for (k, l) in eig.iter().enumerate() {
            assert!((l - c(0.5f64.powi(k as i32))).norm() <= 1e-10, "k={k}");
        }
    }

    #[test]
    fn schroder_examples() {
        let one = AnalyticFunction::constant(1.0);
        let half = f("polynomial:0,0.5");
        assert_eq!(schroder_residual(&one, &half, c(1.0), &TaylorSeries::one(0), 0.5), 0.0);
        assert!(schroder_residual(&one, &half, c(0.5), &TaylorSeries::monomial(1, 1), 0.5) < 1e-16);

        let (psi, phi) = (f("psi_power:beta=2.5"), f("mobius_self_map:lambda=0.5"));
        let pa = p(0.5);
        let m = assemble_matrix(&psi, &phi, &pa, 64, &ExtractionConfig::for_order(64)).unwrap();
        let x = eigenvector(&m.entries, c(0.5));
        let fv = pa.from_basis_coords(&x.iter().copied().collect::<Vec<_>>()).unwrap();
        let r = schroder_residual(&psi, &phi, c(0.5), &fv, 0.5);
        assert!(r <= 1e-6, "residual {r}");
    }

    #[test]
    fn conjugation_at_origin_and_off_origin() {
        let pa = p(0.5);
        let r =
            conjugation_invariance_check(&f("psi_power:beta=2.5"), &f("mobius_self_map:lambda=0.5"), c(0.0), &pa, 32)
                .unwrap();
        assert_eq!(r.prediction_difference, 0.0);
        assert!(r.diagonal_ok);

        let r =
            conjugation_invariance_check(&f("polynomial:0,0,1"), &f("polynomial:0.25,0.5"), c(0.5), &pa, 48).unwrap();
        assert!(r.prediction_difference < 1e-14);
        assert!(r.diagonal_error <= 1e-8, "{}", r.diagonal_error);
        assert!(r.eigen_ok, "{:?} vs {:?}", r.eigen_differences, r.envelope);
    }

    #[test]
    fn family_fixed_point_routes_agree() {
        let psi = f("polynomial:0,0,1");
        let phi = f("phi_rk:k=2,r=0.5");
        let pred = predict_spectrum(&psi, &phi, &p(0.5), 12).unwrap();
        assert!(pred.a.norm() > 0.0 && pred.a.norm() < 1.0);
        assert!((pred.psi_a - pred.a * pred.a).norm() < 1e-14);
        let r = conjugation_invariance_check(&psi, &phi, pred.a, &p(0.5), 32).unwrap();
        assert!(r.diagonal_error <= 1e-8, "{}", r.diagonal_error);
    }

    #[test]
    fn quasi_nilpotent_envelope() {
        let r = spectrum_report(&f("polynomial:0,0,1"), &f("polynomial:0,0.5"), &p(0.5), 32).unwrap();
        assert!(r.quasi_nilpotent);
        assert!(r.pass, "max modulus {:?}", r.max_modulus);
    }
}
