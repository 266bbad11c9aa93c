//! Inducing functions on the unit disc with closed-form order-2 jets.
//!
//! Every family is built from a hand-derived chain rule; compositions and
//! conjugations propagate jets with the order-2 rules on [`Jet2`].

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use crate::series::{extract_coeffs, ExtractionConfig, TaylorSeries};
use crate::{Error, Result, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Value, first and second derivative of a function at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub v: C64,
    pub d1: C64,
    pub d2: C64,
}

impl Jet2 {
    pub fn new(v: C64, d1: C64, d2: C64) -> Self {
        Self { v, d1, d2 }
    }

    pub fn constant(v: C64) -> Self {
        Self { v, d1: ZERO, d2: ZERO }
    }

    /// Jet of the identity map at `z`.
    pub fn variable(z: C64) -> Self {
        Self { v: z, d1: ONE, d2: ZERO }
    }

    /// Chain rule: `self` is the outer jet evaluated at `inner.v`.
    pub fn chain(self, inner: Jet2) -> Jet2 {
        Jet2 { v: self.v, d1: self.d1 * inner.d1, d2: self.d2 * inner.d1 * inner.d1 + self.d1 * inner.d2 }
    }

    pub fn scale(self, s: C64) -> Jet2 {
        Jet2 { v: self.v * s, d1: self.d1 * s, d2: self.d2 * s }
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.d1.is_finite() && self.d2.is_finite()
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 { v: self.v + o.v, d1: self.d1 + o.d1, d2: self.d2 + o.d2 }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        Jet2 { v: self.v - o.v, d1: self.d1 - o.d1, d2: self.d2 - o.d2 }
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }
}

/// Claims attached to a function by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionMeta {
    pub label: String,
    pub claims_self_map: bool,
    pub claims_univalent: bool,
    pub known_fixed_point: Option<C64>,
    /// Extends continuously to the closed disc.
    pub continuous_on_closure: bool,
}

type Evaluator = dyn Fn(C64) -> Jet2 + Send + Sync;

/// A holomorphic function on the disc given by its jet evaluator.
#[derive(Clone)]
pub struct AnalyticFunction {
    eval: Arc<Evaluator>,
    meta: FunctionMeta,
}

impl fmt::Debug for AnalyticFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticFunction").field("meta", &self.meta).finish()
    }
}

impl AnalyticFunction {
    pub fn new<F>(meta: FunctionMeta, eval: F) -> Self
    where
        F: Fn(C64) -> Jet2 + Send + Sync + 'static,
    {
        Self { eval: Arc::new(eval), meta }
    }

    pub fn jet(&self, z: C64) -> Jet2 {
        (self.eval)(z)
    }

    pub fn value(&self, z: C64) -> C64 {
        (self.eval)(z).v
    }

    pub fn meta(&self) -> &FunctionMeta {
        &self.meta
    }

    pub fn label(&self) -> &str {
        &self.meta.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.meta.label = label.into();
        self
    }

    pub fn parse(spec: &str) -> Result<Self> {
        CatalogSpec::parse(spec)?.build()
    }

    pub fn identity() -> Self {
        CatalogSpec::Polynomial(vec![0.0, 1.0]).build().expect("identity is a valid polynomial")
    }

    pub fn constant(c: f64) -> Self {
        CatalogSpec::Polynomial(vec![c]).build().expect("constants are valid polynomials")
    }
}

/// The involutive disc automorphism `φ_a(z) = (a − z)/(1 − ā z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MobiusAutomorphism {
    a: C64,
}

impl MobiusAutomorphism {
    pub fn new(a: C64) -> Result<Self> {
        if !(a.norm() < 1.0) {
            return Err(Error::OutOfRange(format!("automorphism centre |a| = {} must be < 1", a.norm())));
        }
        Ok(Self { a })
    }

    pub fn centre(&self) -> C64 {
        self.a
    }

    pub fn apply(&self, z: C64) -> C64 {
        (self.a - z) / (1.0 - self.a.conj() * z)
    }

    pub fn jet(&self, z: C64) -> Jet2 {
        let a = self.a;
        let den = 1.0 - a.conj() * z;
        let k = a.norm_sqr() - 1.0;
        Jet2 { v: (a - z) / den, d1: k / (den * den), d2: 2.0 * a.conj() * k / (den * den * den) }
    }

    /// Interior fixed point `(1 − √(1−|a|²))/ā`, or 0 when `a = 0`.
    pub fn fixed_point(&self) -> C64 {
        if self.a.norm() == 0.0 {
            ZERO
        } else {
            (1.0 - (1.0 - self.a.norm_sqr()).sqrt()) / self.a.conj()
        }
    }

    pub fn to_function(self) -> AnalyticFunction {
        let fp = self.fixed_point();
        let label = CatalogSpec::MobiusAuto { a: self.a }.label();
        AnalyticFunction::new(
            FunctionMeta {
                label,
                claims_self_map: true,
                claims_univalent: true,
                known_fixed_point: Some(fp),
                continuous_on_closure: true,
            },
            move |z| self.jet(z),
        )
    }
}

/// A parsed catalog entry. Grammar: `name[:key=value(,key=value)*]`;
/// `polynomial` takes positional coefficients `polynomial:c0,c1,...`.
#[derive(Clone, Debug, PartialEq)]
pub enum CatalogSpec {
    /// `λz/(1 − (1−λ)z)` with `λ ∈ [1/2, 1)`.
    MobiusSelfMap {
        lambda: f64,
    },
    /// `exp((1−r)(z+1)/(rz−1))`.
    PhiR1 {
        r: f64,
    },
    /// `exp((z(rk−1) + (r−k))/(1 − rz))` with `k > 1`.
    PhiRk {
        r: f64,
        k: f64,
    },
    /// `(1 − z)^β`, principal branch.
    PsiPower {
        beta: f64,
    },
    /// Real coefficients, lowest degree first.
    Polynomial(Vec<f64>),
    Affine {
        c0: f64,
        c1: f64,
    },
    MobiusAuto {
        a: C64,
    },
    /// `log(1/(1 − z))`.
    LogKernel,
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

impl CatalogSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        let invalid = |reason: String| Error::InvalidSpec { spec: spec.to_string(), reason };
        let spec_trim = spec.trim();
        let (name, rest) = match spec_trim.split_once(':') {
            Some((n, r)) => (n.trim(), r.trim()),
            None => (spec_trim, ""),
        };
        let items: Vec<&str> =
            if rest.is_empty() { Vec::new() } else { rest.split([',', ':']).map(str::trim).collect() };
        let parse_num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| invalid(format!("`{s}` is not a finite decimal value")))
        };

        if name == "polynomial" {
            if items.is_empty() {
                return Err(invalid("polynomial needs at least one coefficient".into()));
            }
            let coeffs = items.iter().map(|s| parse_num(s)).collect::<Result<Vec<_>>>()?;
            return Ok(CatalogSpec::Polynomial(coeffs));
        }

        let mut pairs: Vec<(&str, f64)> = Vec::new();
        for item in &items {
            let (k, v) = item.split_once('=').ok_or_else(|| invalid(format!("expected key=value, found `{item}`")))?;
            let k = k.trim();
            if pairs.iter().any(|(p, _)| *p == k) {
                return Err(invalid(format!("duplicate key `{k}`")));
            }
            pairs.push((k, parse_num(v.trim())?));
        }
        let allowed: &[&str] = match name {
            "mobius_self_map" => &["lambda"],
            "phi_r1" => &["r"],
            "phi_rk" => &["k", "r"],
            "psi_power" => &["beta"],
            "affine" => &["c0", "c1"],
            "mobius_auto" => &["a", "a_im"],
            "log_kernel" => &[],
            _ => return Err(invalid(format!("unknown family `{name}`"))),
        };
        if let Some((k, _)) = pairs.iter().find(|(k, _)| !allowed.contains(k)) {
            return Err(invalid(format!("unknown key `{k}` for `{name}`")));
        }
        let get = |key: &str| pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
        let need = |key: &str| get(key).ok_or_else(|| invalid(format!("missing key `{key}`")));
        Ok(match name {
            "mobius_self_map" => CatalogSpec::MobiusSelfMap { lambda: need("lambda")? },
            "phi_r1" => CatalogSpec::PhiR1 { r: need("r")? },
            "phi_rk" => CatalogSpec::PhiRk { r: need("r")?, k: need("k")? },
            "psi_power" => CatalogSpec::PsiPower { beta: need("beta")? },
            "affine" => CatalogSpec::Affine { c0: need("c0")?, c1: need("c1")? },
            "mobius_auto" => CatalogSpec::MobiusAuto { a: C64::new(need("a")?, get("a_im").unwrap_or(0.0)) },
            _ => CatalogSpec::LogKernel,
        })
    }

    /// Canonical label: keys sorted, shortest round-trip decimals.
    pub fn label(&self) -> String {
        match self {
            CatalogSpec::MobiusSelfMap { lambda } => format!("mobius_self_map:lambda={}", fmt_num(*lambda)),
            CatalogSpec::PhiR1 { r } => format!("phi_r1:r={}", fmt_num(*r)),
            CatalogSpec::PhiRk { r, k } => format!("phi_rk:k={},r={}", fmt_num(*k), fmt_num(*r)),
            CatalogSpec::PsiPower { beta } => format!("psi_power:beta={}", fmt_num(*beta)),
            CatalogSpec::Polynomial(c) => {
                format!("polynomial:{}", c.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(","))
            }
            CatalogSpec::Affine { c0, c1 } => format!("affine:c0={},c1={}", fmt_num(*c0), fmt_num(*c1)),
            CatalogSpec::MobiusAuto { a } => {
                if a.im == 0.0 {
                    format!("mobius_auto:a={}", fmt_num(a.re))
                } else {
                    format!("mobius_auto:a={},a_im={}", fmt_num(a.re), fmt_num(a.im))
                }
            }
            CatalogSpec::LogKernel => "log_kernel".to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::OutOfRange(msg));
        match *self {
            CatalogSpec::MobiusSelfMap { lambda } if !(0.5..1.0).contains(&lambda) => {
                bad(format!("mobius_self_map requires lambda in [1/2, 1), got {lambda}"))
            }
            CatalogSpec::PhiR1 { r } if !(r > 0.0 && r < 1.0) => bad(format!("phi_r1 requires r in (0, 1), got {r}")),
            CatalogSpec::PhiRk { r, .. } if !(r > 0.0 && r < 1.0) => {
                bad(format!("phi_rk requires r in (0, 1), got {r}"))
            }
            CatalogSpec::PhiRk { k, .. } if !(k > 1.0) => bad(format!("phi_rk requires k > 1, got {k}")),
            CatalogSpec::PsiPower { beta } if !(beta > 0.0) => bad(format!("psi_power requires beta > 0, got {beta}")),
            CatalogSpec::MobiusAuto { a } if !(a.norm() < 1.0) => {
                bad(format!("mobius_auto requires |a| < 1, got {}", a.norm()))
            }
            _ => Ok(()),
        }
    }

    pub fn build(&self) -> Result<AnalyticFunction> {
        self.validate()?;
        let label = self.label();
        Ok(match self.clone() {
            CatalogSpec::MobiusSelfMap { lambda } => {
                let b = 1.0 - lambda;
                AnalyticFunction::new(
                    FunctionMeta {
                        label,
                        claims_self_map: true,
                        claims_univalent: true,
                        known_fixed_point: Some(ZERO),
                        continuous_on_closure: true,
                    },
                    move |z| {
                        let den = 1.0 - b * z;
                        Jet2 { v: lambda * z / den, d1: lambda / (den * den), d2: 2.0 * lambda * b / (den * den * den) }
                    },
                )
            }
            CatalogSpec::PhiR1 { r } => exp_mobius(label, r, 1.0),
            CatalogSpec::PhiRk { r, k } => exp_mobius(label, r, k),
            CatalogSpec::PsiPower { beta } => AnalyticFunction::new(
                FunctionMeta {
                    label,
                    claims_self_map: false,
                    claims_univalent: beta <= 1.0,
                    known_fixed_point: None,
                    continuous_on_closure: true,
                },
                move |z| {
                    let w = 1.0 - z;
                    if w == ZERO {
                        return Jet2::constant(ZERO);
                    }
                    let v = w.powf(beta);
                    Jet2 { v, d1: -beta * v / w, d2: beta * (beta - 1.0) * v / (w * w) }
                },
            ),
            CatalogSpec::Polynomial(coeffs) => polynomial(label, coeffs),
            CatalogSpec::Affine { c0, c1 } => {
                let mut f = polynomial(label, vec![c0, c1]);
                f.meta.claims_univalent = c1 != 0.0;
                f
            }
            CatalogSpec::MobiusAuto { a } => MobiusAutomorphism::new(a)?.to_function(),
            CatalogSpec::LogKernel => AnalyticFunction::new(
                FunctionMeta {
                    label,
                    claims_self_map: false,
                    claims_univalent: true,
                    known_fixed_point: None,
                    continuous_on_closure: false,
                },
                |z| {
                    let w = 1.0 - z;
                    Jet2 { v: -w.ln(), d1: 1.0 / w, d2: 1.0 / (w * w) }
                },
            ),
        })
    }
}

// exp(w(z)) with w(z) = (az + b)/(1 − rz), a = rk − 1, b = r − k.
fn exp_mobius(label: String, r: f64, k: f64) -> AnalyticFunction {
    let a = r * k - 1.0;
    let b = r - k;
    let num = a + r * b;
    AnalyticFunction::new(
        FunctionMeta {
            label,
            claims_self_map: true,
            claims_univalent: true,
            known_fixed_point: None,
            continuous_on_closure: true,
        },
        move |z| {
            let den = 1.0 - r * z;
            let w = (a * z + b) / den;
            let w1 = num / (den * den);
            let w2 = 2.0 * r * num / (den * den * den);
            let e = w.exp();
            Jet2 { v: e, d1: e * w1, d2: e * (w1 * w1 + w2) }
        },
    )
}

fn polynomial(label: String, mut coeffs: Vec<f64>) -> AnalyticFunction {
    while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
        coeffs.pop();
    }
    let abs_sum: f64 = coeffs.iter().map(|c| c.abs()).sum();
    let degree = coeffs.len() - 1;
    let fixed = if coeffs.len() > 1 && coeffs[0] == 0.0 {
        Some(ZERO)
    } else if degree == 1 && coeffs[1] != 1.0 {
        let p = coeffs[0] / (1.0 - coeffs[1]);
        (p.abs() < 1.0).then_some(C64::new(p, 0.0))
    } else {
        None
    };
    let series = TaylorSeries::from_real(&coeffs).expect("finite coefficients");
    AnalyticFunction::new(
        FunctionMeta {
            label,
            claims_self_map: abs_sum <= 1.0 + 1e-12,
            claims_univalent: degree == 1,
            known_fixed_point: fixed,
            continuous_on_closure: true,
        },
        move |z| {
            let (v, d1, d2) = series.evaluate_jet(z);
            Jet2 { v, d1, d2 }
        },
    )
}

/// `outer ∘ inner`, with jets from the order-2 chain rule.
pub fn jet_compose(outer: &AnalyticFunction, inner: &AnalyticFunction) -> Result<AnalyticFunction> {
    if !inner.meta.claims_self_map {
        return Err(Error::Precondition(format!("inner function `{}` is not a self-map of the disc", inner.label())));
    }
    let (f, g) = (outer.clone(), inner.clone());
    Ok(AnalyticFunction::new(
        FunctionMeta {
            label: format!("({})∘({})", outer.label(), inner.label()),
            claims_self_map: outer.meta.claims_self_map,
            claims_univalent: outer.meta.claims_univalent && inner.meta.claims_univalent,
            known_fixed_point: None,
            continuous_on_closure: outer.meta.continuous_on_closure && inner.meta.continuous_on_closure,
        },
        move |z| {
            let gi = g.jet(z);
            f.jet(gi.v).chain(gi)
        },
    ))
}

/// Pointwise product `f·g`.
pub fn jet_product(f: &AnalyticFunction, g: &AnalyticFunction) -> AnalyticFunction {
    let (a, b) = (f.clone(), g.clone());
    AnalyticFunction::new(
        FunctionMeta {
            label: format!("({})·({})", f.label(), g.label()),
            claims_self_map: f.meta.claims_self_map && g.meta.claims_self_map,
            claims_univalent: false,
            known_fixed_point: None,
            continuous_on_closure: f.meta.continuous_on_closure && g.meta.continuous_on_closure,
        },
        move |z| a.jet(z) * b.jet(z),
    )
}

/// Conjugation moving the fixed point `a` of `φ` to the origin:
/// `ζ = ψ∘φ_a` and `η = φ_a∘φ∘φ_a`.
pub fn conjugate_to_origin(
    psi: &AnalyticFunction,
    phi: &AnalyticFunction,
    a: C64,
) -> Result<(AnalyticFunction, AnalyticFunction)> {
    let auto = MobiusAutomorphism::new(a)?;
    let defect = (phi.value(a) - a).norm();
    if !(defect <= 1e-8) {
        return Err(Error::Precondition(format!(
            "a = {a} is not a fixed point of `{}` (|φ(a) − a| = {defect:e})",
            phi.label()
        )));
    }
    let pa = auto.to_function();
    let zeta = jet_compose(psi, &pa)?;
    let mut eta = jet_compose(&pa, &jet_compose(phi, &pa)?)?;
    eta.meta.known_fixed_point = Some(ZERO);
    eta.meta.claims_univalent = phi.meta.claims_univalent;
    Ok((zeta, eta))
}

/// Radius below which `τ = φ/z` is evaluated from its Taylor series.
const TAU_SERIES_RADIUS: f64 = 0.25;
const TAU_SERIES_ORDER: usize = 64;

/// Factorization `φ(z) = z·τ(z)` for a map fixing the origin.
pub fn factor_tau(phi: &AnalyticFunction) -> Result<AnalyticFunction> {
    let at0 = phi.value(ZERO);
    if !(at0.norm() <= 1e-10) {
        return Err(Error::Precondition(format!(
            "factorization φ = z·τ needs φ(0) = 0, got |φ(0)| = {:e}",
            at0.norm()
        )));
    }
    let cfg = ExtractionConfig { sample_radius: 0.5, sample_count: 256, tail_tolerance: 0.0 };
    let phi_series = extract_coeffs(|z| phi.value(z), &cfg, TAU_SERIES_ORDER + 1)?.series;
    // Shift out the (vanishing) constant term.
    let tau_series = TaylorSeries::new(phi_series.coeffs()[1..].to_vec())?;
    let f = phi.clone();
    Ok(AnalyticFunction::new(
        FunctionMeta {
            label: format!("tau[{}]", phi.label()),
            claims_self_map: phi.meta.claims_self_map,
            claims_univalent: false,
            known_fixed_point: None,
            continuous_on_closure: phi.meta.continuous_on_closure,
        },
        move |z| {
            if z.norm() < TAU_SERIES_RADIUS {
                let (v, d1, d2) = tau_series.evaluate_jet(z);
                return Jet2 { v, d1, d2 };
            }
            let j = f.jet(z);
            let z2 = z * z;
            Jet2 { v: j.v / z, d1: (j.d1 * z - j.v) / z2, d2: (j.d2 * z2 - 2.0 * j.d1 * z + 2.0 * j.v) / (z2 * z) }
        },
    ))
}

const FIXED_POINT_MAX_STEPS: usize = 100_000;
const FIXED_POINT_STEP_TOL: f64 = 1e-13;
const BOUNDARY_MARGIN: f64 = 1e-6;
const BOUNDARY_RUN: usize = 100;

/// Interior fixed point of a self-map by iteration from 0, or `None` when the
/// orbit is attracted to the boundary.
pub fn find_fixed_point(phi: &AnalyticFunction) -> Result<Option<C64>> {
    if !phi.meta.claims_self_map {
        return Err(Error::Precondition(format!("`{}` is not a self-map of the disc", phi.label())));
    }
    let edge = 1.0 - BOUNDARY_MARGIN;
    let mut z = ZERO;
    let mut near_boundary = 0usize;
    for _ in 0..FIXED_POINT_MAX_STEPS {
        let next = phi.value(z);
        if !next.is_finite() {
            return Err(Error::NonAnalyticSample { index: 0 });
        }
        if next.norm() > edge {
            near_boundary += 1;
            if near_boundary >= BOUNDARY_RUN {
                return Ok(None);
            }
        } else {
            near_boundary = 0;
        }
        if (next - z).norm() < FIXED_POINT_STEP_TOL && next.norm() < edge {
            return Ok(Some(newton_polish(phi, next)));
        }
        z = next;
    }
    // Slow (parabolic) orbits: continue with Newton on φ(z) − z.
    let mut w = z;
    for _ in 0..200 {
        let j = phi.jet(w);
        let g = j.v - w;
        let dg = j.d1 - 1.0;
        if g.norm() == 0.0 || dg.norm() == 0.0 {
            break;
        }
        let step = g / dg;
        w -= step;
        if !w.is_finite() {
            break;
        }
        if w.norm() >= edge {
            return Ok(None);
        }
        if step.norm() < 1e-15 {
            break;
        }
    }
    let j = phi.jet(w);
    if w.norm() < edge && (j.v - w).norm() < 1e-12 && j.d1.norm() < 1.0 {
        return Ok(Some(w));
    }
    Err(Error::InconclusiveFixedPoint { steps: FIXED_POINT_MAX_STEPS, last_re: z.re, last_im: z.im })
}

fn newton_polish(phi: &AnalyticFunction, mut z: C64) -> C64 {
    let mut best = (phi.value(z) - z).norm();
    for _ in 0..8 {
        let j = phi.jet(z);
        let dg = j.d1 - 1.0;
        if dg.norm() == 0.0 {
            break;
        }
        let cand = z - (j.v - z) / dg;
        let res = (phi.value(cand) - cand).norm();
        if !(res < best) {
            break;
        }
        best = res;
        z = cand;
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn mobius_self_map_jet_at_origin() {
        let f = AnalyticFunction::parse("mobius_self_map:lambda=0.5").unwrap();
        let j = f.jet(ZERO);
        assert!(close(j.v, ZERO, 1e-15) && close(j.d1, c(0.5, 0.0), 1e-15) && close(j.d2, c(0.5, 0.0), 1e-15));
    }

    #[test]
    fn psi_power_jet_at_origin() {
        let f = AnalyticFunction::parse("psi_power:beta=2.5").unwrap();
        let j = f.jet(ZERO);
        assert!(close(j.v, c(1.0, 0.0), 1e-15));
        assert!(close(j.d1, c(-2.5, 0.0), 1e-15));
        assert!(close(j.d2, c(3.75, 0.0), 1e-15));
    }

    #[test]
    fn mobius_auto_at_zero_is_negation() {
        let f = AnalyticFunction::parse("mobius_auto:a=0").unwrap();
        for z in [c(0.3, 0.1), c(-0.7, 0.2), ZERO] {
            let j = f.jet(z);
            assert!(close(j.v, -z, 1e-15) && close(j.d1, c(-1.0, 0.0), 1e-15) && close(j.d2, ZERO, 1e-15));
        }
    }

    #[test]
    fn parameter_ranges_are_enforced() {
        for spec in [
            "mobius_self_map:lambda=1",
            "mobius_self_map:lambda=0.4",
            "phi_r1:r=1",
            "phi_rk:k=1,r=0.5",
            "psi_power:beta=0",
            "mobius_auto:a=1",
        ] {
            assert!(matches!(AnalyticFunction::parse(spec), Err(Error::OutOfRange(_))), "{spec}");
        }
        for spec in ["nope:x=1", "phi_rk:r=0.5", "psi_power:beta=abc", "polynomial", "affine:c0=1,c9=2"] {
            assert!(matches!(AnalyticFunction::parse(spec), Err(Error::InvalidSpec { .. })), "{spec}");
        }
    }

    #[test]
    fn labels_are_canonical() {
        assert_eq!(CatalogSpec::parse("phi_rk:r=0.5,k=2").unwrap().label(), "phi_rk:k=2,r=0.5");
        assert_eq!(CatalogSpec::parse("phi_rk:k=2:r=0.5").unwrap().label(), "phi_rk:k=2,r=0.5");
        assert_eq!(CatalogSpec::parse("polynomial:0.5,0,0.5").unwrap().label(), "polynomial:0.5,0,0.5");
        assert_eq!(CatalogSpec::parse("log_kernel").unwrap(), CatalogSpec::LogKernel);
    }

    #[test]
    fn compose_square_with_affine() {
        let sq = AnalyticFunction::parse("polynomial:0,0,1").unwrap();
        let aff = AnalyticFunction::parse("affine:c0=0.25,c1=0.5").unwrap();
        let h = jet_compose(&sq, &aff).unwrap();
        let j = h.jet(ZERO);
        assert!(close(j.v, c(0.0625, 0.0), 1e-15));
        assert!(close(j.d1, c(0.25, 0.0), 1e-15));
        assert!(close(j.d2, c(0.5, 0.0), 1e-15));
    }

    #[test]
    fn compose_with_identity_is_pointwise_equal() {
        let f = AnalyticFunction::parse("phi_rk:r=0.5,k=2").unwrap();
        let h = jet_compose(&f, &AnalyticFunction::identity()).unwrap();
        for z in [c(0.1, 0.2), c(-0.6, 0.3), c(0.0, -0.9)] {
            assert_eq!(h.jet(z), f.jet(z));
        }
    }

    #[test]
    fn compose_requires_self_map_inner() {
        let psi = AnalyticFunction::parse("psi_power:beta=2").unwrap();
        assert!(matches!(jet_compose(&psi, &psi), Err(Error::Precondition(_))));
    }

    #[test]
    fn zeta_at_origin_is_psi_at_a() {
        let psi = AnalyticFunction::parse("polynomial:0,0,1").unwrap();
        let pa = MobiusAutomorphism::new(c(0.5, 0.0)).unwrap().to_function();
        let zeta = jet_compose(&psi, &pa).unwrap();
        assert!(close(zeta.value(ZERO), c(0.25, 0.0), 1e-15));
    }

    #[test]
    fn conjugation_of_affine_map() {
        let psi = AnalyticFunction::parse("polynomial:0,0,1").unwrap();
        let phi = AnalyticFunction::parse("affine:c0=0.25,c1=0.5").unwrap();
        let (zeta, eta) = conjugate_to_origin(&psi, &phi, c(0.5, 0.0)).unwrap();
        assert!(close(zeta.value(ZERO), c(0.25, 0.0), 1e-10));
        assert!(close(eta.value(ZERO), ZERO, 1e-10));
        assert!(close(eta.jet(ZERO).d1, c(0.5, 0.0), 1e-10));
    }

    #[test]
    fn conjugation_at_origin_is_negation() {
        let psi = AnalyticFunction::parse("psi_power:beta=2.5").unwrap();
        let phi = AnalyticFunction::parse("mobius_self_map:lambda=0.5").unwrap();
        let (zeta, eta) = conjugate_to_origin(&psi, &phi, ZERO).unwrap();
        for z in [c(0.2, 0.1), c(-0.5, 0.4)] {
            assert!(close(zeta.value(z), psi.value(-z), 1e-15));
            assert!(close(eta.value(z), -phi.value(-z), 1e-15));
        }
        assert!(close(eta.jet(ZERO).d1, c(0.5, 0.0), 1e-10));
    }

    #[test]
    fn conjugation_rejects_non_fixed_point() {
        let phi = AnalyticFunction::parse("affine:c0=0.25,c1=0.5").unwrap();
        let err = conjugate_to_origin(&AnalyticFunction::constant(1.0), &phi, c(0.1, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn tau_examples() {
        let half = AnalyticFunction::parse("polynomial:0,0.5").unwrap();
        let tau = factor_tau(&half).unwrap();
        for z in [ZERO, c(1e-5, 0.0), c(0.2, 0.1), c(0.7, -0.3)] {
            assert!(close(tau.value(z), c(0.5, 0.0), 1e-12), "{z}");
            assert!(tau.jet(z).d1.norm() < 1e-10);
        }
        let sq = AnalyticFunction::parse("polynomial:0,0,1").unwrap();
        let tau = factor_tau(&sq).unwrap();
        for z in [ZERO, c(0.3, 0.3), c(-0.8, 0.1)] {
            assert!(close(tau.value(z), z, 1e-12));
        }
        let ex1 = AnalyticFunction::parse("mobius_self_map:lambda=0.5").unwrap();
        let tau = factor_tau(&ex1).unwrap();
        assert!(close(tau.value(ZERO), c(0.5, 0.0), 1e-12));
        for z in [c(0.1, 0.0), c(0.5, 0.5), c(-0.9, 0.0)] {
            assert!(close(tau.value(z), 0.5 / (1.0 - 0.5 * z), 1e-12));
        }
    }

    #[test]
    fn tau_requires_origin_fixed() {
        let phi = AnalyticFunction::parse("affine:c0=0.25,c1=0.5").unwrap();
        assert!(matches!(factor_tau(&phi), Err(Error::Precondition(_))));
    }

    #[test]
    fn fixed_point_examples() {
        let aff = AnalyticFunction::parse("affine:c0=0.25,c1=0.5").unwrap();
        assert!(close(find_fixed_point(&aff).unwrap().unwrap(), c(0.5, 0.0), 1e-13));

        for lambda in ["0.5", "0.75", "0.95"] {
            let ex1 = AnalyticFunction::parse(&format!("mobius_self_map:lambda={lambda}")).unwrap();
            assert!(close(find_fixed_point(&ex1).unwrap().unwrap(), ZERO, 1e-13));
        }

        let parabolic = AnalyticFunction::parse("polynomial:0.5,0,0.5").unwrap();
        assert_eq!(find_fixed_point(&parabolic).unwrap(), None);
    }

    #[test]
    fn fixed_point_of_phi_rk_is_interior() {
        let phi = AnalyticFunction::parse("phi_rk:r=0.5,k=2").unwrap();
        let a = find_fixed_point(&phi).unwrap().unwrap();
        assert!(a.norm() < 1.0);
        assert!((phi.value(a) - a).norm() < 1e-14);
        let d = phi.jet(a).d1.norm();
        assert!(d > 0.0 && d <= 1.0);
    }

    #[test]
    fn fixed_point_requires_self_map() {
        let psi = AnalyticFunction::parse("polynomial:2,1").unwrap();
        assert!(matches!(find_fixed_point(&psi), Err(Error::Precondition(_))));
    }

    #[test]
    fn automorphism_fixed_point() {
        let auto = MobiusAutomorphism::new(c(0.3, 0.4)).unwrap();
        let p = auto.fixed_point();
        assert!(p.norm() < 1.0);
        assert!(close(auto.apply(p), p, 1e-14));
    }
}
