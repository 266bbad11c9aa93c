//! Boundedness and compactness criterion quantities sampled on annular grids.
//!
//! Suprema over the disc are approximated by grid maxima and boundary limits
//! by the trend of per-annulus maxima on radii `1 − 2^{−m}`. Nothing here is a
//! certified bound; every report records the classification policy it used.

use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{find_fixed_point, AnalyticFunction, MobiusAutomorphism};
use crate::space::SpaceParams;
use crate::{Error, Result, C64};

/// One circle of the annular grid.
#[derive(Clone, Debug)]
pub struct Annulus {
    pub m: u32,
    pub radius: f64,
    pub points: Vec<C64>,
}

/// Radii `r_m = 1 − 2^{−m}`, `m = 1..=M_max`, each with equispaced angles.
#[derive(Clone, Debug)]
pub struct AnnularGrid {
    annuli: Vec<Annulus>,
}

pub const DEFAULT_M_MAX: u32 = 14;
pub const DEFAULT_ANGULAR: usize = 256;

impl AnnularGrid {
    /// Default angular counts: 256 points, doubled for `m > 8`.
    pub fn new(m_max: u32) -> Result<Self> {
        Self::with_angular(m_max, DEFAULT_ANGULAR)
    }

    pub fn with_angular(m_max: u32, base: usize) -> Result<Self> {
        if !(1..=40).contains(&m_max) {
            return Err(Error::OutOfRange(format!("M_max must lie in [1, 40], got {m_max}")));
        }
        if base == 0 {
            return Err(Error::OutOfRange("angular count must be positive".into()));
        }
        let annuli = (1..=m_max)
            .map(|m| {
                let radius = 1.0 - 0.5f64.powi(m as i32);
                let t = if m > 8 { 2 * base } else { base };
                Annulus { m, radius, points: crate::series::circle_nodes(radius, t) }
            })
            .collect();
        Ok(Self { annuli })
    }

    pub fn annuli(&self) -> &[Annulus] {
        &self.annuli
    }

    pub fn m_max(&self) -> u32 {
        self.annuli.len() as u32
    }

    pub fn angular_counts(&self) -> Vec<usize> {
        self.annuli.iter().map(|a| a.points.len()).collect()
    }

    pub fn points(&self) -> impl Iterator<Item = C64> + '_ {
        self.annuli.iter().flat_map(|a| a.points.iter().copied())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    TendsToZero,
    BoundedPositive,
    Growing,
    Inconclusive,
}

impl Verdict {
    pub fn is_bounded(self) -> bool {
        matches!(self, Verdict::TendsToZero | Verdict::BoundedPositive)
    }
}

/// Thresholds of the boundary-limit classification.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ClassificationPolicy {
    /// Last maximum below this fraction of the overall maximum counts as zero.
    pub zero_fraction: f64,
    /// Alternatively, every step ratio over the last window at most this value
    /// (a power-law decay of exponent at least 0.1 in `1 − r`).
    pub decay_ratio: f64,
    /// Last maximum above this multiple of the median counts as growth.
    pub growth_factor: f64,
    /// Relative spread of the last window accepted as a positive level.
    pub level_variation: f64,
    pub window: usize,
}

impl Default for ClassificationPolicy {
    fn default() -> Self {
        Self { zero_fraction: 1e-3, decay_ratio: 2f64.powf(-0.1), growth_factor: 10.0, level_variation: 0.2, window: 4 }
    }
}

impl ClassificationPolicy {
    pub fn classify(&self, s: &[f64]) -> Verdict {
        if s.is_empty() || s.iter().any(|x| !x.is_finite()) {
            return if s.iter().any(|x| x.is_infinite()) { Verdict::Growing } else { Verdict::Inconclusive };
        }
        let max = s.iter().copied().fold(0.0, f64::max);
        if max == 0.0 {
            return Verdict::TendsToZero;
        }
        let w = self.window.min(s.len());
        let tail = &s[s.len() - w..];
        let last = tail[w - 1];
        let nonincreasing = tail.windows(2).all(|p| p[1] <= p[0] * (1.0 + 1e-12));
        let decaying = tail.windows(2).all(|p| p[1] <= self.decay_ratio * p[0]);
        if nonincreasing && (last < self.zero_fraction * max || decaying) {
            return Verdict::TendsToZero;
        }
        let mut sorted = s.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if sorted.len() % 2 == 1 {
            sorted[sorted.len() / 2]
        } else {
            0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
        };
        let growing_steps = tail.windows(2).all(|p| p[1] >= p[0] / self.decay_ratio);
        if last > self.growth_factor * median || growing_steps {
            return Verdict::Growing;
        }
        let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = tail.iter().copied().fold(0.0, f64::max);
        let mean = tail.iter().sum::<f64>() / w as f64;
        if lo > 0.0 && (hi - lo) < self.level_variation * mean {
            return Verdict::BoundedPositive;
        }
        Verdict::Inconclusive
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QuantitySummary {
    pub global_max: f64,
    pub annulus_max: Vec<f64>,
    pub verdict: Verdict,
}

impl QuantitySummary {
    fn from_sequence(seq: Vec<f64>, policy: &ClassificationPolicy) -> Self {
        Self { global_max: seq.iter().copied().fold(0.0, f64::max), verdict: policy.classify(&seq), annulus_max: seq }
    }
}

/// The six criterion quantities, in report order.
#[derive(Clone, Debug, Serialize)]
pub struct Quantities {
    /// `|ψ''|(1−|z|²)`
    #[serde(rename = "B1")]
    pub b1: QuantitySummary,
    /// `|φ'ψ'|(1−|z|²)`
    #[serde(rename = "B2")]
    pub b2: QuantitySummary,
    /// `|φ''ψ|(1−|z|²)`
    #[serde(rename = "B3")]
    pub b3: QuantitySummary,
    /// `|φ'ψ|((1−|z|²)/(1−|φ|²))^{α/2+1}`
    #[serde(rename = "B4")]
    pub b4: QuantitySummary,
    /// `|ψ|((1−|z|²)/(1−|φ|²))^{α/2}`
    #[serde(rename = "K_half_alpha")]
    pub k_half_alpha: QuantitySummary,
    /// `|ψ|((1−|z|²)/(1−|φ|²))^{α/2+1}`
    #[serde(rename = "K_half_alpha_plus1")]
    pub k_half_alpha_plus1: QuantitySummary,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdicts {
    pub sufficient_bounded: bool,
    pub sufficient_compact: bool,
    /// Only defined for `α ∈ (0, 1)`.
    pub necessary_bounded_ok: Option<bool>,
    pub necessary_compact_ok: Option<bool>,
    /// Emitted only when the characterization hypotheses are detected.
    pub iff_bounded: Option<bool>,
    pub iff_compact: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GridSummary {
    #[serde(rename = "M_max")]
    pub m_max: u32,
    #[serde(rename = "T")]
    pub t: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SecondDerivativeLevel {
    pub annulus_max: Vec<f64>,
    /// Last-window variation below the level threshold (bounded `φ''` proxy).
    pub level: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriteriaReport {
    pub alpha: f64,
    pub psi: String,
    pub phi: String,
    pub grid: GridSummary,
    pub quantities: Quantities,
    pub verdicts: Verdicts,
    pub assumed: Vec<String>,
    pub phi_second_derivative: SecondDerivativeLevel,
    /// Samples with `1 − |φ(z)|² < 1e−14`, excluded from the ratio quantities.
    pub flagged_samples: usize,
    pub policy: ClassificationPolicy,
}

#[derive(Default, Clone, Copy)]
struct RingMax {
    b: [f64; 4],
    k: f64,
    k1: f64,
    phi2: f64,
    flagged: usize,
}

/// Evaluates all criterion quantities on the grid and assigns verdicts.
pub fn evaluate_quantities(
    psi: &AnalyticFunction,
    phi: &AnalyticFunction,
    p: &SpaceParams,
    grid: &AnnularGrid,
) -> Result<CriteriaReport> {
    evaluate_quantities_with(psi, phi, p, grid, &ClassificationPolicy::default())
}

pub fn evaluate_quantities_with(
    psi: &AnalyticFunction,
    phi: &AnalyticFunction,
    p: &SpaceParams,
    grid: &AnnularGrid,
    policy: &ClassificationPolicy,
) -> Result<CriteriaReport> {
    p.require_dirichlet_range()?;
    if !phi.meta().claims_self_map {
        return Err(Error::Precondition(format!("phi `{}` is not a self-map of the disc", phi.label())));
    }
    let alpha = p.alpha;
    let rings: Vec<RingMax> = grid
        .annuli()
        .par_iter()
        .map(|ring| {
            let mut acc = RingMax::default();
            let w = 1.0 - ring.radius * ring.radius;
            for &z in &ring.points {
                let s = psi.jet(z);
                let f = phi.jet(z);
                acc.b[0] = acc.b[0].max(s.d2.norm() * w);
                acc.b[1] = acc.b[1].max((f.d1 * s.d1).norm() * w);
                acc.b[2] = acc.b[2].max((f.d2 * s.v).norm() * w);
                acc.phi2 = acc.phi2.max(f.d2.norm());
                let wp = 1.0 - f.v.norm_sqr();
                if wp < 1e-14 {
                    acc.flagged += 1;
                    continue;
                }
                let ratio = w / wp;
                let rk = ratio.powf(0.5 * alpha);
                acc.b[3] = acc.b[3].max((f.d1 * s.v).norm() * rk * ratio);
                acc.k = acc.k.max(s.v.norm() * rk);
                acc.k1 = acc.k1.max(s.v.norm() * rk * ratio);
            }
            acc
        })
        .collect();

    let seq = |f: &dyn Fn(&RingMax) -> f64| rings.iter().map(f).collect::<Vec<f64>>();
    let summary = |f: &dyn Fn(&RingMax) -> f64| QuantitySummary::from_sequence(seq(f), policy);
    let quantities = Quantities {
        b1: summary(&|r| r.b[0]),
        b2: summary(&|r| r.b[1]),
        b3: summary(&|r| r.b[2]),
        b4: summary(&|r| r.b[3]),
        k_half_alpha: summary(&|r| r.k),
        k_half_alpha_plus1: summary(&|r| r.k1),
    };
    let phi2 = seq(&|r| r.phi2);
    let phi2_level = {
        let w = policy.window.min(phi2.len());
        let tail = &phi2[phi2.len() - w..];
        let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = tail.iter().copied().fold(0.0, f64::max);
        let mean = tail.iter().sum::<f64>() / w as f64;
        hi.is_finite() && (mean == 0.0 || (hi - lo) < policy.level_variation * mean)
    };

    let univalent = phi.meta().claims_univalent;
    let bs = [&quantities.b1, &quantities.b2, &quantities.b3, &quantities.b4];
    let finite = bs.iter().all(|q| q.global_max.is_finite());
    let sufficient_bounded = univalent && finite && bs.iter().all(|q| q.verdict.is_bounded());
    let sufficient_compact = univalent && finite && bs.iter().all(|q| q.verdict == Verdict::TendsToZero);

    let in_unit = alpha > 0.0 && alpha < 1.0;
    let kv = quantities.k_half_alpha.verdict;
    let (necessary_bounded_ok, necessary_compact_ok) =
        if in_unit { (Some(kv.is_bounded()), Some(kv == Verdict::TendsToZero)) } else { (None, None) };
    let characterization = in_unit && univalent && phi2_level;
    let b1v = quantities.b1.verdict;
    let iff_bounded = (characterization && b1v.is_bounded()).then_some(kv.is_bounded());
    let iff_compact = (characterization && b1v == Verdict::TendsToZero).then_some(kv == Verdict::TendsToZero);

    let mut assumed = vec!["phi is a holomorphic self-map of the disc (metadata)".to_string()];
    if univalent {
        assumed.push("phi is univalent (metadata)".to_string());
    } else {
        assumed.push("phi not known to be univalent: sufficient conditions not applied".to_string());
    }
    assumed.push("suprema approximated by grid maxima".to_string());
    assumed.push("boundary limits classified from per-annulus maxima".to_string());
    if phi2_level {
        assumed.push("phi'' bounded (per-annulus maxima level)".to_string());
    }

    Ok(CriteriaReport {
        alpha,
        psi: psi.label().to_string(),
        phi: phi.label().to_string(),
        grid: GridSummary { m_max: grid.m_max(), t: grid.angular_counts() },
        quantities,
        verdicts: Verdicts {
            sufficient_bounded,
            sufficient_compact,
            necessary_bounded_ok,
            necessary_compact_ok,
            iff_bounded,
            iff_compact,
        },
        assumed,
        phi_second_derivative: SecondDerivativeLevel { annulus_max: phi2, level: phi2_level },
        flagged_samples: rings.iter().map(|r| r.flagged).sum(),
        policy: *policy,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Obstruction {
    NotCompact,
    Inconclusive,
}

/// Outcome of the automorphism lower bound `((1−|a|)/(1+|a|))^{α/2}|ψ| ≤ K_{α/2}`.
#[derive(Clone, Debug, Serialize)]
pub struct AutomorphismReport {
    pub a: [f64; 2],
    pub constant: f64,
    /// Largest `constant·|ψ(z)| − K_{α/2}(z)` over the grid.
    pub max_violation: f64,
    pub inequality_holds: bool,
    pub outer_annulus_max_psi: f64,
    pub positivity_floor: f64,
    pub verdict: Obstruction,
}

pub fn check_corollary_automorphism(
    psi: &AnalyticFunction,
    a: C64,
    p: &SpaceParams,
    grid: &AnnularGrid,
) -> Result<AutomorphismReport> {
    if !(p.alpha > 0.0 && p.alpha < 1.0) {
        return Err(Error::Precondition(format!("automorphism obstruction needs alpha in (0, 1), got {}", p.alpha)));
    }
    let auto = MobiusAutomorphism::new(a)?;
    let constant = ((1.0 - a.norm()) / (1.0 + a.norm())).powf(0.5 * p.alpha);
    let max_violation = grid
        .annuli()
        .par_iter()
        .map(|ring| {
            ring.points
                .iter()
                .map(|&z| {
                    let ps = psi.value(z).norm();
                    let ratio = (1.0 - z.norm_sqr()) / (1.0 - auto.apply(z).norm_sqr());
                    constant * ps - ps * ratio.powf(0.5 * p.alpha)
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let outer = grid.annuli().last().expect("grid has at least one annulus");
    let outer_annulus_max_psi = outer.points.iter().map(|&z| psi.value(z).norm()).fold(0.0, f64::max);
    let positivity_floor = 1e-6;
    Ok(AutomorphismReport {
        a: [a.re, a.im],
        constant,
        max_violation,
        inequality_holds: max_violation <= 1e-12,
        outer_annulus_max_psi,
        positivity_floor,
        verdict: if outer_annulus_max_psi > positivity_floor {
            Obstruction::NotCompact
        } else {
            Obstruction::Inconclusive
        },
    })
}

/// Boundary-zero obstruction for maps without an interior fixed point.
#[derive(Clone, Debug, Serialize)]
pub struct BoundaryZeroReport {
    /// Witnesses need `|z|` and `|φ(z)|` above this.
    pub modulus_threshold: f64,
    /// Witnesses need `|φ(z) − z|` below this.
    pub proximity: f64,
    pub witness_count: usize,
    pub min_abs_psi: Option<f64>,
    pub positivity_floor: f64,
    pub verdict: Obstruction,
}

pub fn check_corollary_boundary_zero(
    psi: &AnalyticFunction,
    phi: &AnalyticFunction,
    p: &SpaceParams,
    grid: &AnnularGrid,
) -> Result<BoundaryZeroReport> {
    if !(p.alpha > 0.0 && p.alpha < 1.0) {
        return Err(Error::Precondition(format!("boundary-zero obstruction needs alpha in (0, 1), got {}", p.alpha)));
    }
    if let Some(a) = find_fixed_point(phi)? {
        return Err(Error::Precondition(format!(
            "boundary-zero obstruction needs phi without a fixed point in the disc; `{}` fixes {a}",
            phi.label()
        )));
    }
    if !psi.meta().continuous_on_closure {
        return Err(Error::Precondition(format!(
            "boundary-zero obstruction needs psi continuous on the closed disc; `{}` is not",
            psi.label()
        )));
    }
    let m_max = grid.m_max() as i32;
    let modulus_threshold = 1.0 - 0.5f64.powi(m_max - 1);
    let proximity = 0.5f64.powf(0.5 * (m_max - 1) as f64);
    let positivity_floor = 0.5f64.powf(0.5 * m_max as f64);
    let mut witness_count = 0;
    let mut min_abs: Option<f64> = None;
    for z in grid.points() {
        let w = phi.value(z);
        if z.norm() > modulus_threshold && w.norm() > modulus_threshold && (w - z).norm() < proximity {
            witness_count += 1;
            let v = psi.value(z).norm();
            min_abs = Some(min_abs.map_or(v, |m: f64| m.min(v)));
        }
    }
    let verdict = match min_abs {
        Some(v) if v > positivity_floor => Obstruction::NotCompact,
        _ => Obstruction::Inconclusive,
    };
    Ok(BoundaryZeroReport {
        modulus_threshold,
        proximity,
        witness_count,
        min_abs_psi: min_abs,
        positivity_floor,
        verdict,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonMode {
    /// `φ(0) = 0`: `K^β ≤ K^α` pointwise.
    OriginFixed,
    /// `φ(0) = a ≠ 0`: comparability with the `φ_a∘φ` form.
    Conjugated,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub mode: ComparisonMode,
    pub alpha: f64,
    pub beta: f64,
    /// Origin-fixed mode: largest `K^β − K^α`.
    pub max_violation: f64,
    /// Conjugated mode: range of the ratio of the two sides, over both exponents.
    pub ratio_range: Option<[f64; 2]>,
    pub ratio_bounds: Option<[f64; 2]>,
    pub holds: bool,
}

/// Exponent monotonicity of `|ψ|((1−|z|²)/(1−|φ|²))^{γ/2}` between `γ = α` and `γ = β`.
pub fn comparison_monotonicity(
    psi: &AnalyticFunction,
    phi: &AnalyticFunction,
    alpha: f64,
    beta: f64,
    grid: &AnnularGrid,
) -> Result<ComparisonReport> {
    if !(0.0 < alpha && alpha < beta && beta < 1.0) {
        return Err(Error::Precondition(format!(
            "comparison needs 0 < alpha < beta < 1, got alpha={alpha}, beta={beta}"
        )));
    }
    let a = phi.value(C64::new(0.0, 0.0));
    let pts: Vec<C64> = grid.points().collect();
    if a.norm() <= 1e-10 {
        let max_violation = pts
            .par_iter()
            .map(|&z| {
                let ps = psi.value(z).norm();
                let ratio = (1.0 - z.norm_sqr()) / (1.0 - phi.value(z).norm_sqr());
                ps * ratio.powf(0.5 * beta) - ps * ratio.powf(0.5 * alpha)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        return Ok(ComparisonReport {
            mode: ComparisonMode::OriginFixed,
            alpha,
            beta,
            max_violation,
            ratio_range: None,
            ratio_bounds: None,
            holds: max_violation <= 1e-12,
        });
    }
    let auto = MobiusAutomorphism::new(a)?;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &z in &pts {
        let w = phi.value(z);
        let wz = 1.0 - z.norm_sqr();
        let direct = wz / (1.0 - w.norm_sqr());
        let conj = wz / (1.0 - auto.apply(w).norm_sqr());
        for g in [alpha, beta] {
            let r = direct.powf(0.5 * g) / conj.powf(0.5 * g);
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    let an = a.norm();
    let bounds = [((1.0 - an * an) / 4.0).powf(0.5 * beta), ((1.0 + an) / (1.0 - an)).powf(0.5 * beta)];
    Ok(ComparisonReport {
        mode: ComparisonMode::Conjugated,
        alpha,
        beta,
        max_violation: 0.0,
        ratio_range: Some([lo, hi]),
        ratio_bounds: Some(bounds),
        holds: lo >= bounds[0] * (1.0 - 1e-12) && hi <= bounds[1] * (1.0 + 1e-12),
    })
}
