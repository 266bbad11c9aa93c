//! Command drivers behind the `wco` binary. Each returns the full output text.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::catalog::{find_fixed_point, AnalyticFunction, CatalogSpec};
use crate::criteria::{check_corollary_boundary_zero, evaluate_quantities, AnnularGrid, CriteriaReport, Obstruction};
use crate::json::{self, SCHEMA};
use crate::operator::{adjoint_kernel_residual, assemble_matrix};
use crate::series::{extract_coeffs, ExtractionConfig};
use crate::space::{
    growth_bound_check, kernel_norm_sq_certified, norm_sq_coeff, norm_sq_quadrature, NormVariant, QuadratureGrid,
    SpaceKind, SpaceParams,
};
use crate::spectral::{match_spectra, predict_spectrum, spectrum_report, truncated_eigenvalues, TolProfile};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Analyze,
    Spectrum,
    KernelCheck,
    NormCheck,
    Sweep,
    PaperExamples,
}

/// Everything a run depends on; embedded in every JSON document.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub alpha: Option<f64>,
    pub psi: Option<String>,
    pub phi: Option<String>,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M_max")]
    pub m_max: u32,
    #[serde(rename = "T")]
    pub t: usize,
    pub output: Option<String>,
    pub matrix_out: Option<String>,
    /// Kernel-check radii `|w|`.
    pub w: Vec<f64>,
    /// Kernel-check points as `[re, im]`.
    pub z: Vec<[f64; 2]>,
    /// Norm-check function spec.
    pub f: Option<String>,
    pub decay_exponent: f64,
    pub vary: Option<String>,
    pub range: Option<String>,
    pub only: Option<String>,
    pub r: Option<f64>,
    pub k: Option<f64>,
    pub lambda: Option<f64>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            alpha: None,
            psi: None,
            phi: None,
            n: 64,
            m_max: 14,
            t: 256,
            output: None,
            matrix_out: None,
            w: vec![0.9, 0.99, 0.999],
            z: vec![[0.0, 0.0], [0.5, 0.0], [-0.3, 0.4], [0.0, 0.7]],
            f: None,
            decay_exponent: 0.5,
            vary: None,
            range: None,
            only: None,
            r: None,
            k: None,
            lambda: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(a) = self.alpha {
            if !(a > -1.0 && a < 1.0) {
                return Err(Error::OutOfRange(format!("alpha must lie in (-1, 1), got {a}")));
            }
        }
        if !(8..=4096).contains(&self.n) {
            return Err(Error::OutOfRange(format!("N must lie in [8, 4096], got {}", self.n)));
        }
        if !(6..=20).contains(&self.m_max) {
            return Err(Error::OutOfRange(format!("M_max must lie in [6, 20], got {}", self.m_max)));
        }
        if self.t < 8 {
            return Err(Error::OutOfRange(format!("T must be at least 8, got {}", self.t)));
        }
        Ok(())
    }

    fn alpha(&self) -> Result<f64> {
        self.alpha.ok_or_else(|| Error::OutOfRange("--alpha is required".into()))
    }

    fn params(&self) -> Result<SpaceParams> {
        SpaceParams::dirichlet(self.alpha()?)
    }

    fn function(spec: &Option<String>, name: &str) -> Result<AnalyticFunction> {
        let s = spec.as_deref().ok_or_else(|| Error::OutOfRange(format!("--{name} is required")))?;
        AnalyticFunction::parse(s)
    }

    fn pair(&self) -> Result<(AnalyticFunction, AnalyticFunction)> {
        Ok((Self::function(&self.psi, "psi")?, Self::function(&self.phi, "phi")?))
    }

    fn grid(&self) -> Result<AnnularGrid> {
        AnnularGrid::with_angular(self.m_max, self.t)
    }
}

/// Appends the schema tag and the run configuration to a report object.
fn document(body: Value, cfg: &RunConfig) -> String {
    let mut map = match body {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("result".into(), other);
            m
        }
    };
    map.insert("schema".into(), json!(SCHEMA));
    map.insert("config".into(), json::to_value(cfg));
    json::to_string(&Value::Object(map))
}

fn criteria_with_extras(
    psi: &AnalyticFunction,
    phi: &AnalyticFunction,
    p: &SpaceParams,
    grid: &AnnularGrid,
) -> Result<(CriteriaReport, Value)> {
    let report = evaluate_quantities(psi, phi, p, grid)?;
    let mut body = json::to_value(&report);
    // The boundary-zero obstruction is added whenever its hypotheses hold.
    if let Ok(bz) = check_corollary_boundary_zero(psi, phi, p, grid) {
        body.as_object_mut().expect("report is an object").insert("boundary_zero".into(), json::to_value(&bz));
    }
    Ok((report, body))
}

pub fn cmd_analyze(cfg: &RunConfig) -> Result<String> {
    cfg.validate()?;
    let p = cfg.params()?;
    let (psi, phi) = cfg.pair()?;
    let (_, body) = criteria_with_extras(&psi, &phi, &p, &cfg.grid()?)?;
    Ok(document(body, cfg))
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<String> {
    cfg.validate()?;
    let p = cfg.params()?;
    let (psi, phi) = cfg.pair()?;
    let report = spectrum_report(&psi, &phi, &p, cfg.n)?;
    let criteria = evaluate_quantities(&psi, &phi, &p, &cfg.grid()?)?;
    let mut body = json::to_value(&report);
    body.as_object_mut().expect("report is an object").insert(
        "hypotheses".into(),
        json!({
            "sufficient_compact": criteria.verdicts.sufficient_compact,
            "K_half_alpha_plus1": criteria.quantities.k_half_alpha_plus1.verdict,
        }),
    );
    if let Some(path) = &cfg.matrix_out {
        let m = assemble_matrix(&psi, &phi, &p, cfg.n, &ExtractionConfig::for_order(cfg.n))?;
        let text = if path.ends_with(".csv") { m.to_csv() } else { json::to_string(&m.to_json_value()) };
        std::fs::write(path, text)?;
    }
    Ok(document(body, cfg))
}

pub fn cmd_kernel_check(cfg: &RunConfig) -> Result<String> {
    cfg.validate()?;
    let p = cfg.params()?;
    let norms: Vec<Value> = cfg
        .w
        .iter()
        .map(|&r| {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::OutOfRange(format!("kernel radius must lie in [0, 1), got {r}")));
            }
            Ok(json::to_value(&kernel_norm_sq_certified(C64::new(r, 0.0), &p, 1e-12)))
        })
        .collect::<Result<_>>()?;
    let mut body = json!({ "alpha": p.alpha, "kernel_norms": norms });
    if cfg.psi.is_some() || cfg.phi.is_some() {
        let (psi, phi) = cfg.pair()?;
        let m = assemble_matrix(&psi, &phi, &p, cfg.n, &ExtractionConfig::for_order(cfg.n))?;
        let checks: Vec<Value> = cfg
            .z
            .iter()
            .map(|z| adjoint_kernel_residual(&m, &psi, &phi, C64::new(z[0], z[1])).map(|r| json::to_value(&r)))
            .collect::<Result<_>>()?;
        let obj = body.as_object_mut().expect("object");
        obj.insert("psi".into(), json!(psi.label()));
        obj.insert("phi".into(), json!(phi.label()));
        obj.insert("adjoint_kernel".into(), Value::Array(checks));
        obj.insert("matrix_warnings".into(), json!(m.warnings));
    }
    Ok(document(body, cfg))
}

pub fn cmd_norm_check(cfg: &RunConfig) -> Result<String> {
    cfg.validate()?;
    let p = cfg.params()?;
    let f = RunConfig::function(&cfg.f, "f")?;
    let ex = extract_coeffs(|z| f.value(z), &ExtractionConfig::for_order(cfg.n).with_radius(0.9), cfg.n - 1)?;
    let quad = QuadratureGrid::default();
    let first = norm_sq_quadrature(&f, &p, &quad, NormVariant::DAlphaFirstDeriv)?;
    let second = norm_sq_quadrature(&f, &p, &quad, NormVariant::RelationVSecondDeriv)?;
    let growth = growth_bound_check(&f, &cfg.grid()?, cfg.decay_exponent);
    let body = json!({
        "alpha": p.alpha,
        "function": f.label(),
        "coefficient_norm_sq": norm_sq_coeff(&ex.series, &p, SpaceKind::Dirichlet),
        "coefficient_error_estimate": ex.error_estimate,
        "quadrature": {
            "d_alpha_first_deriv": json::to_value(&first),
            "relation_v_second_deriv": json::to_value(&second),
        },
        "growth": json::to_value(&growth),
    });
    Ok(document(body, cfg))
}

/// `start:stop:steps` with `steps ≥ 1` evenly spaced values, endpoints included.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| Error::OutOfRange(format!("range `{s}`: {why}"));
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(bad("expected start:stop:steps"));
    };
    let start: f64 = a.trim().parse().map_err(|_| bad("start is not a number"))?;
    let stop: f64 = b.trim().parse().map_err(|_| bad("stop is not a number"))?;
    let steps: usize = n.trim().parse().map_err(|_| bad("steps is not a nonnegative integer"))?;
    if steps == 0 {
        return Err(bad("empty range"));
    }
    if steps == 1 {
        return Ok(vec![start]);
    }
    Ok((0..steps).map(|i| start + (stop - start) * i as f64 / (steps - 1) as f64).collect())
}

/// Replaces the value of `key` in a keyed catalog spec; `None` if the key is absent.
fn set_param(spec: &str, key: &str, value: f64) -> Option<String> {
    let (family, params) = spec.split_once(':')?;
    let mut hit = false;
    let rebuilt: Vec<String> = params
        .split(',')
        .map(|kv| match kv.split_once('=') {
            Some((k, _)) if k.trim() == key => {
                hit = true;
                format!("{}={value}", k.trim())
            }
            _ => kv.to_string(),
        })
        .collect();
    hit.then(|| format!("{family}:{}", rebuilt.join(",")))
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt_bool(b: Option<bool>) -> String {
    b.map(|v| v.to_string()).unwrap_or_default()
}

pub const SWEEP_HEADER: &str = "param,value,alpha,psi,phi,sufficient_bounded,sufficient_compact,necessary_bounded_ok,necessary_compact_ok,iff_bounded,iff_compact,fixed_point_re,fixed_point_im,max_err_first6";

pub fn cmd_sweep(cfg: &RunConfig) -> Result<String> {
    cfg.validate()?;
    let vary = cfg.vary.as_deref().ok_or_else(|| Error::OutOfRange("--vary is required".into()))?;
    let values = parse_range(cfg.range.as_deref().ok_or_else(|| Error::OutOfRange("--range is required".into()))?)?;
    let psi_spec = cfg.psi.clone().ok_or_else(|| Error::OutOfRange("--psi is required".into()))?;
    let phi_spec = cfg.phi.clone().ok_or_else(|| Error::OutOfRange("--phi is required".into()))?;

    let mut jobs = Vec::with_capacity(values.len());
    for &v in &values {
        let (alpha, psi, phi) = if vary == "alpha" {
            (v, psi_spec.clone(), phi_spec.clone())
        } else {
            let psi = set_param(&psi_spec, vary, v);
            let phi = set_param(&phi_spec, vary, v);
            if psi.is_none() && phi.is_none() {
                return Err(Error::OutOfRange(format!("neither spec has a parameter named `{vary}`")));
            }
            (cfg.alpha()?, psi.unwrap_or_else(|| psi_spec.clone()), phi.unwrap_or_else(|| phi_spec.clone()))
        };
        let p = SpaceParams::dirichlet(alpha)?;
        let psi_f = AnalyticFunction::parse(&psi)?;
        let phi_f = AnalyticFunction::parse(&phi)?;
        jobs.push((v, p, psi_f, phi_f));
    }
    let grid = cfg.grid()?;
    let rows: Vec<Result<String>> = jobs
        .par_iter()
        .map(|(v, p, psi, phi)| {
            let r = evaluate_quantities(psi, phi, p, &grid)?;
            let (fp_re, fp_im, err) = match predict_spectrum(psi, phi, p, 12) {
                Ok(pred) => {
                    let m = assemble_matrix(psi, phi, p, cfg.n, &ExtractionConfig::for_order(cfg.n))?;
                    let eig = truncated_eigenvalues(&m)?;
                    let out = match_spectra(&pred, &eig, &TolProfile::uniform(f64::INFINITY, 1), 6);
                    (json::format_f64(pred.a.re), json::format_f64(pred.a.im), json::format_f64(out.max_err(6)))
                }
                Err(Error::Inapplicable(_)) | Err(Error::InconclusiveFixedPoint { .. }) => Default::default(),
                Err(e) => return Err(e),
            };
            let vd = &r.verdicts;
            Ok([
                csv_field(vary),
                json::format_f64(*v),
                json::format_f64(p.alpha),
                csv_field(psi.label()),
                csv_field(phi.label()),
                vd.sufficient_bounded.to_string(),
                vd.sufficient_compact.to_string(),
                opt_bool(vd.necessary_bounded_ok),
                opt_bool(vd.necessary_compact_ok),
                opt_bool(vd.iff_bounded),
                opt_bool(vd.iff_compact),
                fp_re,
                fp_im,
                err,
            ]
            .join(","))
        })
        .collect();
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r?);
        out.push('\n');
    }
    Ok(out)
}

pub const SCENARIOS: [&str; 5] = ["phi_r1", "ex1", "exx1", "exx2", "remark"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioStatus {
    ConsistentWithPaper,
    Inconsistent,
    NotApplicable,
}

#[derive(Clone, Debug, Serialize)]
pub struct Scenario {
    pub name: String,
    pub status: ScenarioStatus,
    pub runs: Vec<Value>,
}

impl Scenario {
    fn from_runs(name: &str, runs: Vec<(bool, Value)>) -> Self {
        let status = if runs.is_empty() {
            ScenarioStatus::NotApplicable
        } else if runs.iter().all(|(ok, _)| *ok) {
            ScenarioStatus::ConsistentWithPaper
        } else {
            ScenarioStatus::Inconsistent
        };
        Self { name: name.to_string(), status, runs: runs.into_iter().map(|(_, v)| v).collect() }
    }
}

fn verdict_tags(r: &CriteriaReport) -> Value {
    let q = &r.quantities;
    json!({
        "B1": q.b1.verdict, "B2": q.b2.verdict, "B3": q.b3.verdict, "B4": q.b4.verdict,
        "K_half_alpha": q.k_half_alpha.verdict, "K_half_alpha_plus1": q.k_half_alpha_plus1.verdict,
    })
}

fn run_scenario(name: &str, cfg: &RunConfig, alphas: &[f64], grid: &AnnularGrid) -> Result<Scenario> {
    let lambda = cfg.lambda.unwrap_or(0.5);
    let runs: Vec<(bool, Value)> = match name {
        "phi_r1" => {
            let rs = cfg.r.map_or(vec![0.3, 0.6], |r| vec![r]);
            let mut out = Vec::new();
            for &r in &rs {
                let phi = CatalogSpec::PhiR1 { r }.build()?;
                for &alpha in alphas {
                    let rep = evaluate_quantities(
                        &AnalyticFunction::constant(1.0),
                        &phi,
                        &SpaceParams::dirichlet(alpha)?,
                        grid,
                    )?;
                    let ok = rep.verdicts.sufficient_bounded;
                    out.push((
                        ok,
                        json!({"r": r, "alpha": alpha, "sufficient_bounded": ok,
                        "sufficient_compact": rep.verdicts.sufficient_compact, "quantities": verdict_tags(&rep)}),
                    ));
                }
            }
            out
        }
        "ex1" => {
            let phi = CatalogSpec::MobiusSelfMap { lambda }.build()?;
            let mut out = Vec::new();
            for &alpha in alphas {
                let psi = CatalogSpec::PsiPower { beta: 2.0 + alpha }.build()?;
                let rep = evaluate_quantities(&psi, &phi, &SpaceParams::dirichlet(alpha)?, grid)?;
                let ok = rep.verdicts.sufficient_compact && rep.verdicts.sufficient_bounded;
                out.push((
                    ok,
                    json!({"lambda": lambda, "alpha": alpha, "psi": psi.label(),
                    "sufficient_compact": rep.verdicts.sufficient_compact, "quantities": verdict_tags(&rep)}),
                ));
            }
            out
        }
        "exx1" => {
            let phi = CatalogSpec::MobiusSelfMap { lambda }.build()?;
            let mut out = Vec::new();
            for &alpha in alphas {
                let psi = CatalogSpec::PsiPower { beta: 2.0 + alpha }.build()?;
                let rep = spectrum_report(&psi, &phi, &SpaceParams::dirichlet(alpha)?, cfg.n)?;
                let err6 = rep.matches.iter().take(6).map(|m| m.err).fold(0.0, f64::max);
                let ok = rep.matches.len() >= 6 && err6 <= 1e-8;
                out.push((
                    ok,
                    json!({"lambda": lambda, "alpha": alpha, "N": cfg.n, "a": rep.a,
                    "max_err_first6": err6, "matches": json::to_value(&rep.matches[..rep.matches.len().min(6)])}),
                ));
            }
            out
        }
        "exx2" => {
            let r = cfg.r.unwrap_or(0.5);
            let k = cfg.k.unwrap_or(2.0);
            let phi = CatalogSpec::PhiRk { r, k }.build()?;
            let psi = CatalogSpec::Polynomial(vec![0.0, 0.0, 1.0]).build()?;
            let mut out = Vec::new();
            for &alpha in alphas {
                let rep = spectrum_report(&psi, &phi, &SpaceParams::dirichlet(alpha)?, cfg.n)?;
                let a = C64::new(rep.a[0], rep.a[1]);
                let psi_a = C64::new(rep.psi_a[0], rep.psi_a[1]);
                let ladder_ok = (psi_a - a * a).norm() <= 1e-12;
                let conj_ok = rep.conjugation.as_ref().is_none_or(|c| c.diagonal_ok && c.eigen_ok);
                let ok = rep.pass && ladder_ok && conj_ok;
                out.push((
                    ok,
                    json!({"r": r, "k": k, "alpha": alpha, "N": cfg.n, "a_rk": rep.a,
                    "phi_prime_a": rep.phi_prime_a, "pass": rep.pass,
                    "conjugation": json::to_value(&rep.conjugation),
                    "max_err_first6": rep.matches.iter().take(6).map(|m| m.err).fold(0.0, f64::max)}),
                ));
            }
            out
        }
        "remark" => {
            let psi = CatalogSpec::Polynomial(vec![2.0, 1.0]).build()?;
            let phi = CatalogSpec::Polynomial(vec![0.5, 0.0, 0.5]).build()?;
            let fixed = find_fixed_point(&phi)?;
            let mut out = Vec::new();
            for &alpha in alphas.iter().filter(|&&a| a > 0.0 && a < 1.0) {
                let p = SpaceParams::dirichlet(alpha)?;
                let rep = evaluate_quantities(&psi, &phi, &p, grid)?;
                let bz = check_corollary_boundary_zero(&psi, &phi, &p, grid)?;
                let spec_inapplicable = matches!(predict_spectrum(&psi, &phi, &p, 12), Err(Error::Inapplicable(_)));
                let ok = fixed.is_none()
                    && rep.verdicts.necessary_compact_ok == Some(false)
                    && bz.verdict == Obstruction::NotCompact
                    && spec_inapplicable;
                out.push((
                    ok,
                    json!({"alpha": alpha, "interior_fixed_point": fixed.is_some(),
                    "necessary_compact_ok": rep.verdicts.necessary_compact_ok,
                    "K_half_alpha": rep.quantities.k_half_alpha.verdict,
                    "boundary_zero": json::to_value(&bz), "spectrum_inapplicable": spec_inapplicable}),
                ));
            }
            out
        }
        other => {
            return Err(Error::OutOfRange(format!(
                "unknown scenario `{other}`; expected one of {}",
                SCENARIOS.join(", ")
            )))
        }
    };
    Ok(Scenario::from_runs(name, runs))
}

/// Runs the worked-example scenarios; the flag is false when any is inconsistent.
pub fn cmd_paper_examples(cfg: &RunConfig) -> Result<(String, bool)> {
    cfg.validate()?;
    let names: Vec<&str> = match &cfg.only {
        Some(only) => {
            let name = only.as_str();
            if !SCENARIOS.contains(&name) {
                return Err(Error::OutOfRange(format!(
                    "unknown scenario `{name}`; expected one of {}",
                    SCENARIOS.join(", ")
                )));
            }
            vec![name]
        }
        None => SCENARIOS.to_vec(),
    };
    let alphas = match cfg.alpha {
        Some(a) => vec![a],
        None => vec![-0.5, 0.0, 0.5],
    };
    let grid = cfg.grid()?;
    let scenarios: Vec<Scenario> =
        names.par_iter().map(|n| run_scenario(n, cfg, &alphas, &grid)).collect::<Result<_>>()?;
    let ok = scenarios.iter().all(|s| s.status != ScenarioStatus::Inconsistent);
    let body = json!({ "scenarios": json::to_value(&scenarios), "all_consistent": ok });
    Ok((document(body, cfg), ok))
}
