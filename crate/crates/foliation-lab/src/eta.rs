//! The modulus of uniformization: exact values on registered leaf charts,
//! certified lower/upper bounds elsewhere, discontinuity scans, leafwise
//! metric lengths, completeness probes at the singular set, and the
//! homogeneous-field density bounds.
//!
//! Two normalizations are carried side by side: `s` is the extremal
//! derivative `sup |f'(0)|` over holomorphic discs into the leaf, and
//! `eta = s^2` is the squared form the worked examples manipulate. Length
//! elements use `2 ||dz|| / s` so that punctured-disc lengths reproduce the
//! leafwise Poincare lengths.

use crate::expr::{Expr, C};
use crate::field::{Point, Polydisc, PolyVectorField, Tangent};
use crate::leaf::{
    certified_flow_disc_radius_in, classify_with_families, LeafChart, LeafError, LeafFamily,
    LeafModel,
};
use crate::variety::AnalyticSetModel;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EtaError {
    #[error("model coordinate sits at the puncture")]
    AtPuncture,
    #[error("model coordinate lies outside the model disc")]
    OutsideModel,
    #[error("point lies on the singular set")]
    OnSingularSet,
    #[error("point is on or outside the domain boundary")]
    OnBoundary,
    #[error("the field vanishes at the point")]
    ZeroField,
    #[error("s vanishes on the path interior")]
    ZeroSOnPath,
    #[error("no registered ray family approaches the target")]
    NoRays,
    #[error("sequence point left the domain")]
    SequenceLeftDomain,
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Leaf(#[from] LeafError),
}

/// Everything eta computations need to know about a scenario.
#[derive(Clone, Copy)]
pub struct EtaContext<'a> {
    pub field: &'a PolyVectorField,
    pub e_model: &'a AnalyticSetModel,
    pub families: &'a [LeafFamily],
    /// Synthetic scenarios may pin `s` to a constant to calibrate the
    /// completeness detector.
    pub s_override: Option<f64>,
}

impl<'a> EtaContext<'a> {
    pub fn domain(&self) -> &'a Polydisc {
        self.field.domain()
    }

    pub fn classify(&self, p: &Point) -> Option<LeafChart> {
        classify_with_families(self.families, self.domain(), p)
    }
}

/// Extremal derivative radius of the model at `zeta`:
/// `sup { |phi'(0)| : phi holomorphic disc -> model, phi(0) = zeta }`.
///
/// Closed forms: `(r^2 - |zeta|^2)/r` for the disc, `2|zeta| ln(r/|zeta|)`
/// for the punctured disc.
pub fn extremal_radius(model: &LeafModel, zeta: C) -> Result<f64, EtaError> {
    let r = model.radius();
    let a = zeta.norm();
    if a >= r {
        return Err(EtaError::OutsideModel);
    }
    match model {
        LeafModel::Disc { .. } => Ok((r * r - a * a) / r),
        LeafModel::PuncturedDisc { .. } => {
            if a == 0.0 {
                return Err(EtaError::AtPuncture);
            }
            Ok(2.0 * a * (r / a).ln())
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EtaKind {
    Exact,
    Lower,
    Upper,
    Interval { s_lower: f64, s_upper: f64 },
}

impl EtaKind {
    pub fn label(&self) -> &'static str {
        match self {
            EtaKind::Exact => "exact",
            EtaKind::Lower => "lower",
            EtaKind::Upper => "upper",
            EtaKind::Interval { .. } => "interval",
        }
    }
}

#[derive(Clone, Debug)]
pub struct EtaSample {
    pub point: Point,
    /// Extremal derivative sup |f'(0)|.
    pub s: f64,
    /// Its square, the quantity the worked examples track; `eta == s * s`
    /// exactly by construction.
    pub eta: f64,
    pub kind: EtaKind,
    pub leaf_ref: Option<String>,
}

impl EtaSample {
    pub fn new(point: Point, s: f64, kind: EtaKind, leaf_ref: Option<String>) -> Self {
        EtaSample { point, s, eta: s * s, kind, leaf_ref }
    }
}

/// Exact modulus through an injective chart: competitors factor through the
/// chart, so `s = ||gamma'(zeta)|| * extremal_radius(model, zeta)`.
pub fn eta_exact(chart: &LeafChart, zeta: C) -> Result<EtaSample, EtaError> {
    let sigma = extremal_radius(&chart.model, zeta)?;
    let s = chart.derivative_at(zeta).norm() * sigma;
    Ok(EtaSample::new(chart.point_at(zeta), s, EtaKind::Exact, Some(chart.id.clone())))
}

/// Exact modulus at an ambient point covered by a registered chart.
pub fn eta_exact_at(ctx: &EtaContext, p: &Point) -> Result<EtaSample, EtaError> {
    let chart = ctx.classify(p).ok_or(EtaError::Leaf(LeafError::NoChart))?;
    eta_exact(&chart, chart.base_param)
}

/// Certified lower bound: the flow disc `t -> Phi(p, R t)` is a competitor
/// with derivative `R X(p)` at 0.
pub fn eta_lower_flow(ctx: &EtaContext, p: &Point, safety: f64) -> Result<EtaSample, EtaError> {
    eta_lower_flow_in(ctx, ctx.domain(), p, safety)
}

/// Lower bound with the flow confined to the subdomain `u`.
pub fn eta_lower_flow_in(
    ctx: &EtaContext,
    u: &Polydisc,
    p: &Point,
    safety: f64,
) -> Result<EtaSample, EtaError> {
    let x = ctx.field.eval(p);
    if x.norm() == 0.0 {
        return Err(EtaError::ZeroField);
    }
    let radius = certified_flow_disc_radius_in(ctx.field, u, p, safety)?;
    let s = radius.radius * x.norm();
    Ok(EtaSample::new(p.clone(), s, EtaKind::Lower, None))
}

/// Certified upper bound from the coordinatewise Schwarz bound on the
/// polydisc: any holomorphic disc into `u` through `p` has
/// `|f'(0)| <= || (sigma_j)_j ||` with per-coordinate disc radii `sigma_j`.
pub fn eta_upper_ambient(u: &Polydisc, p: &Point) -> Result<EtaSample, EtaError> {
    let mut acc = 0.0f64;
    for (j, &r) in u.radii().iter().enumerate() {
        let a = (p.0[j] - u.center().0[j]).norm();
        if a >= r {
            return Err(EtaError::OnBoundary);
        }
        let sigma = (r * r - a * a) / r;
        acc += sigma * sigma;
    }
    Ok(EtaSample::new(p.clone(), acc.sqrt(), EtaKind::Upper, None))
}

/// Best available sample at a point: exact via a chart, an override constant
/// for synthetic scenarios, otherwise a certified interval.
pub fn eta_best(ctx: &EtaContext, p: &Point, safety: f64) -> Result<EtaSample, EtaError> {
    if let Some(s_fix) = ctx.s_override {
        return Ok(EtaSample::new(p.clone(), s_fix, EtaKind::Exact, None));
    }
    if let Some(chart) = ctx.classify(p) {
        return eta_exact(&chart, chart.base_param);
    }
    let lower = eta_lower_flow(ctx, p, safety)?;
    let upper = eta_upper_ambient(ctx.domain(), p)?;
    let mid = 0.5 * (lower.s + upper.s);
    Ok(EtaSample::new(
        p.clone(),
        mid,
        EtaKind::Interval { s_lower: lower.s, s_upper: upper.s },
        None,
    ))
}

/// Report on eta along a sequence of points.
#[derive(Clone, Debug)]
pub struct SequenceReport {
    pub samples: Vec<EtaSample>,
    /// Value at the deepest sequence point.
    pub limit_eta: f64,
    /// limsup - liminf of eta over the last three points.
    pub oscillation: f64,
    pub cauchy_ok: bool,
    /// Max distance of sampled uniformizer images (deepest point) to the
    /// union of E and the limit leaf, when computable.
    pub image_max_dist: Option<f64>,
}

/// Evaluate eta along a sequence of points converging to a target; all
/// points must carry registered charts.
pub fn sequence_report(
    ctx: &EtaContext,
    points: &[Point],
    limit_point: Option<&Point>,
) -> Result<SequenceReport, EtaError> {
    if points.is_empty() {
        return Err(EtaError::BadParams("empty sequence".into()));
    }
    let mut samples = Vec::with_capacity(points.len());
    for p in points {
        if !ctx.domain().contains(p) {
            return Err(EtaError::SequenceLeftDomain);
        }
        samples.push(eta_exact_at(ctx, p)?);
    }
    let last = samples.len().saturating_sub(3);
    let tail: Vec<f64> = samples[last..].iter().map(|s| s.eta).collect();
    let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    let limit_eta = samples.last().unwrap().eta;
    let oscillation = hi - lo;
    let cauchy_ok = oscillation <= 1e-3 * (1.0 + limit_eta.abs());
    // uniformizer-image check at the deepest point
    let image_max_dist = {
        let p_last = &points[points.len() - 1];
        ctx.classify(p_last).map(|chart| {
            let limit_leaf = limit_point.and_then(|lp| ctx.classify(lp));
            let mut worst = 0.0f64;
            for img in uniformizer_images(&chart, chart.base_param, 25) {
                let mut d = ctx.e_model.distance(&img);
                if let Some(ll) = &limit_leaf {
                    d = d.min(leaf_distance(ll, &img, 400));
                }
                worst = worst.max(d);
            }
            worst
        })
    };
    Ok(SequenceReport { samples, limit_eta, oscillation, cauchy_ok, image_max_dist })
}

/// Images of the extremal uniformizer through `zeta0` on a grid of the unit
/// disc: the Moebius reparameterization for disc models, the exponential
/// covering composed with a disc automorphism for punctured models.
pub fn uniformizer_images(chart: &LeafChart, zeta0: C, grid: usize) -> Vec<Point> {
    let r = chart.model.radius();
    let mut out = Vec::new();
    for i in 0..grid {
        for j in 0..grid {
            let re = (i as f64 / (grid - 1) as f64) * 1.8 - 0.9;
            let im = (j as f64 / (grid - 1) as f64) * 1.8 - 0.9;
            let w = C::new(re, im);
            if w.norm() > 0.9 {
                continue;
            }
            let zeta = match chart.model {
                LeafModel::Disc { .. } => {
                    let c = zeta0 / r;
                    (w + c) / (C::new(1.0, 0.0) + c.conj() * w) * r
                }
                LeafModel::PuncturedDisc { .. } => {
                    let s0 = (zeta0 / r).ln();
                    let a = (C::new(1.0, 0.0) + s0) / (C::new(1.0, 0.0) - s0);
                    let fw = (w + a) / (C::new(1.0, 0.0) + a.conj() * w);
                    ((fw - C::new(1.0, 0.0)) / (fw + C::new(1.0, 0.0))).exp() * r
                }
            };
            out.push(chart.point_at(zeta));
        }
    }
    out
}

/// Distance from a point to the sampled image of a chart.
pub fn leaf_distance(chart: &LeafChart, p: &Point, samples: usize) -> f64 {
    let r = chart.model.radius();
    let mut best = f64::INFINITY;
    for i in 0..samples {
        let frac = (i as f64 + 0.5) / samples as f64;
        let rad = r * frac.sqrt() * 0.98;
        let th = std::f64::consts::TAU * (i as f64) * 0.6180339887498949;
        let z = C::new(rad * th.cos(), rad * th.sin());
        if !chart.model.contains(z) {
            continue;
        }
        best = best.min(chart.point_at(z).dist(p));
    }
    best
}

#[derive(Clone, Debug)]
pub struct ScanRow {
    pub index: Vec<usize>,
    pub point: Point,
    pub sample: Option<EtaSample>,
    pub on_singular_set: bool,
    pub flagged: bool,
}

#[derive(Clone, Debug)]
pub struct FlagWitness {
    pub target: Point,
    /// (family id, eta limit along that family's approach)
    pub family_limits: Vec<(String, f64)>,
    pub gap: f64,
}

#[derive(Clone, Debug)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
    pub flags: Vec<(usize, FlagWitness)>,
    pub skipped_on_e: usize,
    pub skipped_no_chart: usize,
    pub skipped_probes: usize,
    pub max_s: f64,
    pub gap_tol_used: f64,
}

/// Gap tolerance of the discontinuity scan: absolute, or a multiple of the
/// largest exact `s` seen on the grid.
#[derive(Clone, Copy, Debug)]
pub enum GapTol {
    Absolute(f64),
    FactorOfMaxS(f64),
}

impl Default for GapTol {
    fn default() -> Self {
        GapTol::FactorOfMaxS(0.1)
    }
}

/// Empirical discontinuity scan.
///
/// Grid points covered by registered charts are probed through the E-targets
/// of their leaves: eta limits along every registered family approaching the
/// same target are compared, and the point is flagged when the limits
/// disagree beyond the gap tolerance. Probes not covered by any chart are
/// skipped and counted.
pub fn discontinuity_scan(
    ctx: &EtaContext,
    grid_per_axis: usize,
    gap_tol: GapTol,
) -> Result<ScanReport, EtaError> {
    if grid_per_axis < 2 {
        return Err(EtaError::BadParams("grid must have at least 2 points per axis".into()));
    }
    let n = ctx.domain().dim();
    let axes: Vec<Vec<f64>> = ctx
        .domain()
        .radii()
        .iter()
        .map(|&r| scan_axis_values(r, grid_per_axis))
        .collect();
    let total = grid_per_axis.pow(n as u32);
    let mut rows: Vec<ScanRow> = Vec::with_capacity(total);
    let mut skipped_on_e = 0usize;
    let mut skipped_no_chart = 0usize;
    let mut max_s = 0.0f64;
    for flat in 0..total {
        let mut rem = flat;
        let mut index = Vec::with_capacity(n);
        let mut coords = Vec::with_capacity(n);
        for axis in axes.iter() {
            let i = rem % grid_per_axis;
            rem /= grid_per_axis;
            index.push(i);
            coords.push(C::new(axis[i], 0.0));
        }
        let p = Point::new(coords);
        if ctx.e_model.contains(&p, 1e-9) {
            skipped_on_e += 1;
            rows.push(ScanRow { index, point: p, sample: None, on_singular_set: true, flagged: false });
            continue;
        }
        let sample = ctx.classify(&p).and_then(|ch| eta_exact(&ch, ch.base_param).ok());
        match &sample {
            Some(s) => max_s = max_s.max(s.s),
            None => skipped_no_chart += 1,
        }
        rows.push(ScanRow { index, point: p, sample, on_singular_set: false, flagged: false });
    }
    let gap_tol_used = match gap_tol {
        GapTol::Absolute(t) => t,
        GapTol::FactorOfMaxS(f) => f * max_s,
    };
    // family-limit reports per E-target, cached across the grid
    let mut cache: BTreeMap<String, (FlagWitness, usize)> = BTreeMap::new();
    let mut flags: Vec<(usize, FlagWitness)> = Vec::new();
    for row_idx in 0..rows.len() {
        let chart = match rows[row_idx].sample.as_ref().and_then(|s| s.leaf_ref.as_ref()) {
            Some(_) => ctx.classify(&rows[row_idx].point),
            None => None,
        };
        let chart = match chart {
            Some(c) => c,
            None => continue,
        };
        let target = match chart.puncture_image() {
            Some(t) if ctx.e_model.contains(&t, 1e-8) => t,
            _ => continue,
        };
        let key = crate::csvfmt::fmt_point(&target.0);
        if !cache.contains_key(&key) {
            let (witness, skipped) = family_limits_at(ctx, &target);
            cache.insert(key.clone(), (witness, skipped));
        }
        let (witness, _) = cache.get(&key).unwrap().clone();
        if witness.family_limits.len() >= 2 && witness.gap > gap_tol_used {
            rows[row_idx].flagged = true;
            flags.push((row_idx, witness));
        }
    }
    let skipped_probes: usize = cache.values().map(|(_, k)| *k).sum();
    Ok(ScanReport { rows, flags, skipped_on_e, skipped_no_chart, skipped_probes, max_s, gap_tol_used })
}

fn scan_axis_values(r: f64, m: usize) -> Vec<f64> {
    let a = 0.9 * r;
    let mut vals: Vec<f64> =
        (0..m).map(|i| -a + 2.0 * a * i as f64 / (m - 1) as f64).collect();
    let mut best = 0usize;
    for (i, v) in vals.iter().enumerate() {
        if v.abs() < vals[best].abs() {
            best = i;
        }
    }
    vals[best] = 0.0;
    vals
}

/// Eta limits along every registered family approaching `target`, via
/// straight-line axis probes at a shrinking ladder. Returns the witness and
/// the number of chartless probes skipped.
pub fn family_limits_at(ctx: &EtaContext, target: &Point) -> (FlagWitness, usize) {
    let n = target.dim();
    let delta0 = 0.05 * ctx.domain().min_radius();
    let ladder = 12usize;
    let mut per_family: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let mut skipped = 0usize;
    for j in 0..n {
        for sign in [1.0f64, -1.0] {
            for i in 0..ladder {
                let delta = delta0 * 0.5f64.powi(i as i32);
                let mut coords = target.0.clone();
                coords[j] += C::new(sign * delta, 0.0);
                let q = Point::new(coords);
                if !ctx.domain().contains(&q) || ctx.e_model.contains(&q, 1e-9) {
                    continue;
                }
                match ctx.classify(&q) {
                    Some(ch) => {
                        if let Ok(s) = eta_exact(&ch, ch.base_param) {
                            per_family.entry(ch.family.clone()).or_default().push((delta, s.eta));
                        }
                    }
                    None => skipped += 1,
                }
            }
        }
    }
    let mut family_limits: Vec<(String, f64)> = Vec::new();
    for (fam, mut vals) in per_family {
        if vals.len() < 4 {
            continue;
        }
        vals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        family_limits.push((fam, vals[0].1));
    }
    let hi = family_limits.iter().map(|f| f.1).fold(f64::NEG_INFINITY, f64::max);
    let lo = family_limits.iter().map(|f| f.1).fold(f64::INFINITY, f64::min);
    let gap = if family_limits.len() >= 2 { hi - lo } else { 0.0 };
    (FlagWitness { target: target.clone(), family_limits, gap }, skipped)
}

/// Piecewise-smooth path into the ambient space, with symbolic derivative.
#[derive(Clone, Debug)]
pub struct PathSpec {
    pub components: Vec<Expr>,
}

impl PathSpec {
    pub fn new(components: Vec<Expr>) -> Self {
        assert!(components.iter().all(|c| c.nvars() == 1));
        PathSpec { components }
    }

    /// Straight segment between two points.
    pub fn linear(from: &Point, to: &Point) -> Self {
        let comps = from
            .0
            .iter()
            .zip(&to.0)
            .map(|(a, b)| {
                let u = Expr::var(1, 0);
                Expr::constant(1, *a).add(u.mul(Expr::constant(1, b - a)))
            })
            .collect();
        PathSpec { components: comps }
    }

    /// Geometric radial path `u -> dir * r_start (r_end/r_start)^u`.
    pub fn radial_geometric(dir: &Tangent, r_start: f64, r_end: f64) -> Self {
        assert!(r_start > 0.0 && r_end > 0.0);
        let l = (r_end / r_start).ln();
        let comps = dir
            .0
            .iter()
            .map(|&d| {
                let u = Expr::var(1, 0);
                Expr::constant(1, d * r_start).mul(u.mul(Expr::constant(1, C::new(l, 0.0))).exp())
            })
            .collect();
        PathSpec { components: comps }
    }

    pub fn eval(&self, u: f64) -> Point {
        let z = [C::new(u, 0.0)];
        Point::new(self.components.iter().map(|c| c.eval(&z)).collect())
    }

    pub fn velocity(&self, u: f64) -> Tangent {
        let z = [C::new(u, 0.0)];
        Tangent(self.components.iter().map(|c| c.partial(0).eval(&z)).collect())
    }
}

#[derive(Clone, Debug)]
pub struct LengthReport {
    pub length: f64,
    /// Points where only interval data was available (midpoint used).
    pub interval_points: usize,
}

/// Leafwise Poincare length of the path over `[0, 1 - delta]` by composite
/// Simpson quadrature of `2 ||path'(u)|| / s(path(u))`.
pub fn metric_length(
    ctx: &EtaContext,
    path: &PathSpec,
    steps: usize,
    delta: f64,
) -> Result<LengthReport, EtaError> {
    if !(0.0..1.0).contains(&delta) {
        return Err(EtaError::BadParams("delta must lie in [0, 1)".into()));
    }
    let panels = steps.max(8) & !1usize; // even
    let upper = 1.0 - delta;
    let h = upper / panels as f64;
    let mut interval_points = 0usize;
    let mut integrand = |u: f64| -> Result<f64, EtaError> {
        let p = path.eval(u);
        let sample = eta_best(ctx, &p, 0.9)?;
        if let EtaKind::Interval { .. } = sample.kind {
            interval_points += 1;
        }
        if sample.s <= 0.0 {
            return Err(EtaError::ZeroSOnPath);
        }
        Ok(2.0 * path.velocity(u).norm() / sample.s)
    };
    let mut acc = integrand(0.0)? + integrand(upper)?;
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * integrand(i as f64 * h)?;
    }
    Ok(LengthReport { length: acc * h / 3.0, interval_points })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Completeness {
    Complete,
    Incomplete,
    Inconclusive,
}

impl std::fmt::Display for Completeness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Completeness::Complete => "complete",
            Completeness::Incomplete => "incomplete",
            Completeness::Inconclusive => "inconclusive",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Debug)]
pub struct RayReport {
    pub family: String,
    pub chart_id: String,
    /// Truncated lengths at `delta_k = 2^-k`, k = 1..=kmax.
    pub lengths: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct CompletenessReport {
    pub verdict: Completeness,
    pub rays: Vec<RayReport>,
    pub thresholds: Vec<f64>,
}

/// Probe completeness of the metric `4g/eta` at a target `q` of E.
///
/// Rays run radially in the model coordinate of every registered leaf whose
/// puncture maps to `q`, parameterized with an essential slowdown
/// `rho(u) = rho_0 exp(1 - (1-u)^{-2})` so the truncation ladder
/// `delta_k = 2^-k` probes doubly-exponentially small radii; lengths are
/// computed in log-radius form, which stays finite down to the deepest rung.
/// Complete means every ray's truncated length clears the linear threshold
/// schedule `T_k = k`; incomplete means some ray's lengths become Cauchy.
pub fn completeness_probe(
    ctx: &EtaContext,
    q: &Point,
    kmax: usize,
) -> Result<CompletenessReport, EtaError> {
    if kmax < 3 || kmax > 20 {
        return Err(EtaError::BadParams("kmax must lie in 3..=20".into()));
    }
    // collect charts whose puncture hits q, via axis probes
    let mut charts: Vec<LeafChart> = Vec::new();
    let n = q.dim();
    let delta = 0.02 * ctx.domain().min_radius();
    for j in 0..n {
        for sign in [1.0f64, -1.0] {
            let mut coords = q.0.clone();
            coords[j] += C::new(sign * delta, 0.0);
            let probe = Point::new(coords);
            if !ctx.domain().contains(&probe) {
                continue;
            }
            if let Some(ch) = ctx.classify(&probe) {
                if let Some(t) = ch.puncture_image() {
                    if t.dist(q) <= 1e-9 && charts.iter().all(|c| c.id != ch.id) {
                        charts.push(ch);
                    }
                }
            }
        }
    }
    if charts.is_empty() {
        return Err(EtaError::NoRays);
    }
    let thresholds: Vec<f64> = (1..=kmax).map(|k| k as f64).collect();
    let mut rays = Vec::new();
    let mut all_clear = true;
    let mut any_cauchy = false;
    for chart in &charts {
        let r = chart.model.radius();
        let rho_start = 0.5 * r;
        let lengths: Vec<f64> = (1..=kmax)
            .map(|k| ray_length_log_radius(ctx, chart, rho_start, k))
            .collect();
        for (k, &len) in lengths.iter().enumerate() {
            if len <= thresholds[k] {
                all_clear = false;
            }
        }
        let m = lengths.len();
        if m >= 3
            && (lengths[m - 1] - lengths[m - 2]).abs() < 1e-3
            && (lengths[m - 2] - lengths[m - 3]).abs() < 1e-3
        {
            any_cauchy = true;
        }
        rays.push(RayReport {
            family: chart.family.clone(),
            chart_id: chart.id.clone(),
            lengths,
        });
    }
    let verdict = if any_cauchy {
        Completeness::Incomplete
    } else if all_clear {
        Completeness::Complete
    } else {
        Completeness::Inconclusive
    };
    Ok(CompletenessReport { verdict, rays, thresholds })
}

/// Truncated ray length at `delta_k = 2^-k` for the essential radial
/// parameterization, integrated in `w = ln(1/(1-u))`.
///
/// With `lambda = ln rho = ln rho_start + 1 - e^{2w}`, the exact-chart length
/// element reduces to `2 e^{2w} / (ln(r/rho_start) - 1 + e^{2w}) dw` (the
/// chart derivative cancels between speed and `s`), so no coordinate ever
/// underflows. The override branch keeps the ambient speed explicitly.
fn ray_length_log_radius(ctx: &EtaContext, chart: &LeafChart, rho_start: f64, k: usize) -> f64 {
    let r = chart.model.radius();
    let c0 = (r / rho_start).ln() - 1.0;
    let w_max = k as f64 * std::f64::consts::LN_2;
    let panels = (64 + 16 * k) & !1usize;
    let h = w_max / panels as f64;
    let theta0 = chart.base_param.arg();
    let f = |w: f64| -> f64 {
        match ctx.s_override {
            None => {
                let denom = c0 + (2.0 * w).exp();
                2.0 * (2.0 * w).exp() / denom
            }
            Some(s_fix) => {
                // speed = ||gamma'(zeta)|| * |dzeta/dw|, |dzeta/dw| = rho * 2 e^{2w}
                let lambda = rho_start.ln() + 1.0 - (2.0 * w).exp();
                let rho = lambda.exp();
                let zeta = C::new(theta0.cos(), theta0.sin()) * rho;
                let gprime = chart.derivative_at(zeta).norm();
                2.0 * gprime * rho * 2.0 * (2.0 * w).exp() / s_fix
            }
        }
    };
    let mut acc = f(0.0) + f(w_max);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    acc * h / 3.0
}

/// Hermitian density `h(z) = |pi(z)|^{2k-2} / (||X(z)||^2 ln^2(|pi(z)|/r))`
/// for fields whose first two components are homogeneous of degree `k` in
/// `(z1, z2)`.
pub fn ex32_density(z: &Point, k: u32, r: f64, field: &PolyVectorField) -> Result<f64, EtaError> {
    let pi_norm = (z.0[0].norm_sqr() + z.0[1].norm_sqr()).sqrt();
    if pi_norm == 0.0 {
        return Err(EtaError::BadParams("pi(z) = 0".into()));
    }
    if pi_norm >= r {
        return Err(EtaError::BadParams("|pi(z)| must be < r".into()));
    }
    let x = field.eval(z).norm();
    if x == 0.0 {
        return Err(EtaError::ZeroField);
    }
    let log = (pi_norm / r).ln();
    Ok(pi_norm.powi(2 * k as i32 - 2) / (x * x * log * log))
}

/// Empirical extremes of `||X(z)|| / |pi(z)|^k` over a deterministic grid of
/// `0 < |pi(z)| < rho`; returns `(C_low, C_high)`, certifying the comparison
/// constant `C = max(1/C_low, C_high)`.
pub fn ex32_bounds_check(
    field: &PolyVectorField,
    k: u32,
    rho: f64,
    grid: usize,
) -> Result<(f64, f64), EtaError> {
    if grid < 3 {
        return Err(EtaError::BadParams("grid must be >= 3".into()));
    }
    let n = field.dim();
    let mut c_low = f64::INFINITY;
    let mut c_high = 0.0f64;
    let radii = 8usize;
    let z3_vals: Vec<f64> = if n >= 3 {
        (0..grid)
            .map(|i| {
                let r3 = field.domain().radii()[2];
                -0.8 * r3 + 1.6 * r3 * i as f64 / (grid - 1) as f64
            })
            .collect()
    } else {
        vec![0.0]
    };
    for ir in 0..radii {
        let pi_norm = rho * 0.9 * 0.5f64.powi(ir as i32);
        for it in 0..grid {
            let t = it as f64 / (grid - 1) as f64;
            let (c1, c2) = ((1.0 - t * t).sqrt(), t);
            for ia in 0..grid {
                let th1 = std::f64::consts::TAU * ia as f64 / grid as f64;
                for ib in 0..grid {
                    let th2 = std::f64::consts::TAU * ib as f64 / grid as f64;
                    for &z3 in &z3_vals {
                        let mut coords = vec![C::new(0.0, 0.0); n];
                        coords[0] = C::new(th1.cos(), th1.sin()) * (c1 * pi_norm);
                        coords[1] = C::new(th2.cos(), th2.sin()) * (c2 * pi_norm);
                        if n >= 3 {
                            coords[2] = C::new(z3, 0.0);
                        }
                        let z = Point::new(coords);
                        if !field.domain().contains(&z) {
                            continue;
                        }
                        let ratio = field.eval(&z).norm() / pi_norm.powi(k as i32);
                        c_low = c_low.min(ratio);
                        c_high = c_high.max(ratio);
                    }
                }
            }
        }
    }
    if !c_low.is_finite() {
        return Err(EtaError::BadParams("grid produced no valid points".into()));
    }
    Ok((c_low, c_high))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PolyVectorField;
    use crate::leaf::{ChartComp, FamilyKind};
    use crate::variety::SetPiece;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn extremal_radius_closed_forms() {
        let d1 = LeafModel::Disc { r: 1.0 };
        assert_eq!(extremal_radius(&d1, c(0.0, 0.0)).unwrap(), 1.0);
        let dr = LeafModel::Disc { r: 0.35 };
        assert_eq!(extremal_radius(&dr, c(0.0, 0.0)).unwrap(), 0.35);
        let p1 = LeafModel::PuncturedDisc { r: 1.0 };
        let z = c((-1.0f64).exp(), 0.0);
        let got = extremal_radius(&p1, z).unwrap();
        assert!((got - 2.0 * (-1.0f64).exp()).abs() < 1e-15, "2/e case: {got}");
        assert!(matches!(extremal_radius(&p1, c(0.0, 0.0)), Err(EtaError::AtPuncture)));
        assert!(matches!(extremal_radius(&p1, c(1.5, 0.0)), Err(EtaError::OutsideModel)));
    }

    fn h_plane_chart(z: C) -> LeafChart {
        LeafChart {
            id: "h".into(),
            family: "h".into(),
            model: LeafModel::Disc { r: 1.0 },
            components: vec![
                ChartComp::Mono { coeff: c(1.0, 0.0), power: 1 },
                ChartComp::Const(c(0.0, 0.0)),
                ChartComp::Const(z),
            ],
            base_param: c(0.0, 0.0),
        }
    }

    #[test]
    fn eta_exact_on_h_plane_leaf_is_one() {
        let chart = h_plane_chart(c(0.3, 0.0));
        let s = eta_exact(&chart, c(0.0, 0.0)).unwrap();
        assert_eq!(s.s, 1.0);
        assert_eq!(s.eta, 1.0);
    }

    #[test]
    fn eta_exact_on_punctured_chart_is_c_independent() {
        // leaves {(0, xi, c)} of the z-fibered degenerate field
        let mk = |cc: C, y: C| LeafChart {
            id: "s1".into(),
            family: "s1".into(),
            model: LeafModel::PuncturedDisc { r: 0.9 },
            components: vec![
                ChartComp::Const(c(0.0, 0.0)),
                ChartComp::Mono { coeff: c(1.0, 0.0), power: 1 },
                ChartComp::Const(cc),
            ],
            base_param: y,
        };
        let y = c(0.4, 0.0);
        let a = eta_exact(&mk(c(0.3, 0.0), y), y).unwrap();
        let b = eta_exact(&mk(c(0.001, 0.0), y), y).unwrap();
        let want = 2.0 * 0.4 * (0.9f64 / 0.4).ln();
        assert!((a.s - want).abs() < 1e-15);
        assert_eq!(a.s, b.s);
        assert_eq!(a.eta, a.s * a.s);
    }

    #[test]
    fn eta_tends_to_zero_at_puncture() {
        let chart = LeafChart {
            id: "p".into(),
            family: "p".into(),
            model: LeafModel::PuncturedDisc { r: 1.0 },
            components: vec![ChartComp::Mono { coeff: c(1.0, 0.0), power: 1 }],
            base_param: c(0.5, 0.0),
        };
        // stay below the 1/e maximum of 2a ln(1/a) so the ladder is
        // strictly decreasing
        let mut prev = f64::INFINITY;
        for k in 1..12 {
            let z = c(0.3 * 0.5f64.powi(k), 0.0);
            let s = eta_exact(&chart, z).unwrap().s;
            assert!(s < prev);
            prev = s;
        }
        assert!(prev < 1e-2);
    }

    #[test]
    fn eta_upper_ambient_closed_forms() {
        let u1 = Polydisc::unit(1);
        assert_eq!(eta_upper_ambient(&u1, &Point::origin(1)).unwrap().s, 1.0);
        let u2 = Polydisc::unit(2);
        let got = eta_upper_ambient(&u2, &Point::origin(2)).unwrap().s;
        assert!((got - 2.0f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            eta_upper_ambient(&u1, &Point::from_re(&[1.0])),
            Err(EtaError::OnBoundary)
        ));
    }

    fn h_plane_ctx_parts() -> (PolyVectorField, AnalyticSetModel, Vec<LeafFamily>) {
        let field = PolyVectorField::parse("z ; x*y ; x*y", Polydisc::unit(3)).unwrap();
        let e = AnalyticSetModel::new(vec![
            SetPiece::linear("x-axis", Point::origin(3), vec![Tangent::unit(3, 0)]),
            SetPiece::linear("y-axis", Point::origin(3), vec![Tangent::unit(3, 1)]),
        ]);
        let families = vec![
            LeafFamily {
                id: "h_plane",
                kind: FamilyKind::CoordLine {
                    moving: 0,
                    zero: vec![1],
                    nonzero: vec![2],
                    punctured: false,
                },
            },
            LeafFamily { id: "g_curve", kind: FamilyKind::GCurve },
        ];
        (field, e, families)
    }

    #[test]
    fn lower_bound_stays_below_exact_and_close_on_constant_leaves() {
        let (field, e, families) = h_plane_ctx_parts();
        let ctx = EtaContext { field: &field, e_model: &e, families: &families, s_override: None };
        for cc in [0.1, 0.25, 0.5] {
            let p = Point::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(cc, 0.0)]);
            let exact = eta_exact_at(&ctx, &p).unwrap();
            let lower = eta_lower_flow(&ctx, &p, 0.9).unwrap();
            let upper = eta_upper_ambient(ctx.domain(), &p).unwrap();
            assert!(lower.s <= exact.s * (1.0 + 1e-12));
            assert!(exact.s <= upper.s * (1.0 + 1e-12));
            assert!(lower.s >= 0.8 * exact.s, "ratio {} at c={}", lower.s / exact.s, cc);
        }
        // zero field at a singular point is an error
        let p = Point::new(vec![c(0.3, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(eta_lower_flow(&ctx, &p, 0.9), Err(EtaError::ZeroField)));
    }

    #[test]
    fn sequence_of_h_plane_points_has_constant_eta() {
        let (field, e, families) = h_plane_ctx_parts();
        let ctx = EtaContext { field: &field, e_model: &e, families: &families, s_override: None };
        let points: Vec<Point> = (2..=200)
            .map(|k| Point::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0 / k as f64, 0.0)]))
            .collect();
        let rep = sequence_report(&ctx, &points, Some(&Point::origin(3))).unwrap();
        assert!(rep.samples.iter().all(|s| s.eta == 1.0));
        assert_eq!(rep.limit_eta, 1.0);
        assert!(rep.cauchy_ok);
        // uniformizer images approach E
        let d = rep.image_max_dist.expect("chart sequence");
        assert!(d < 0.02, "image distance {d}");
    }

    #[test]
    fn sequence_along_g_leaf_vanishes() {
        let (field, e, families) = h_plane_ctx_parts();
        let ctx = EtaContext { field: &field, e_model: &e, families: &families, s_override: None };
        let points: Vec<Point> = (1..=25)
            .map(|k| {
                let w = c(0.5f64.powi(k), 0.0);
                Point::new(vec![w, w * w * 0.5, w * w * 0.5])
            })
            .collect();
        let rep = sequence_report(&ctx, &points, Some(&Point::origin(3))).unwrap();
        assert!(rep.limit_eta < 1e-11);
        let first = &rep.samples[0];
        assert!(first.eta > rep.limit_eta);
    }

    #[test]
    fn metric_length_disc_closed_form() {
        // identity disc leaf in C^1: length 0 -> 1-eps is ln((2-eps)/eps)
        let field = PolyVectorField::parse("1", Polydisc::unit(1)).unwrap();
        let e = AnalyticSetModel::empty();
        let families =
            vec![LeafFamily { id: "disc", kind: FamilyKind::Identity1D { punctured: false } }];
        let ctx = EtaContext { field: &field, e_model: &e, families: &families, s_override: None };
        for eps in [1e-2, 1e-3] {
            let path = PathSpec::linear(&Point::origin(1), &Point::from_re(&[1.0 - eps]));
            let got = metric_length(&ctx, &path, 4096, 0.0).unwrap().length;
            let want = ((2.0 - eps) / eps).ln();
            assert!((got - want).abs() < 1e-3, "eps {eps}: {got} vs {want}");
        }
    }

    #[test]
    fn metric_length_punctured_closed_form() {
        let field = PolyVectorField::parse("x", Polydisc::unit(1)).unwrap();
        let e = AnalyticSetModel::new(vec![SetPiece::point("origin", Point::origin(1))]);
        let families =
            vec![LeafFamily { id: "star", kind: FamilyKind::Identity1D { punctured: true } }];
        let ctx = EtaContext { field: &field, e_model: &e, families: &families, s_override: None };
        for eps in [1e-2, 1e-4] {
            let dir = Tangent::unit(1, 0);
            let path = PathSpec::radial_geometric(&dir, eps, 0.5);
            let got = metric_length(&ctx, &path, 2048, 0.0).unwrap().length;
            let want = (1.0f64 / eps).ln().ln() - 2.0f64.ln().ln();
            assert!((got - want).abs() < 1e-3, "eps {eps}: {got} vs {want}");
        }
    }

    #[test]
    fn constant_s_segment_length() {
        let field = PolyVectorField::parse("x", Polydisc::unit(1)).unwrap();
        let e = AnalyticSetModel::new(vec![SetPiece::point("origin", Point::origin(1))]);
        let families =
            vec![LeafFamily { id: "star", kind: FamilyKind::Identity1D { punctured: true } }];
        let ctx =
            EtaContext { field: &field, e_model: &e, families: &families, s_override: Some(1.0) };
        let path = PathSpec::linear(&Point::from_re(&[0.1]), &Point::from_re(&[0.6]));
        let got = metric_length(&ctx, &path, 512, 0.0).unwrap().length;
        assert!((got - 2.0 * 0.5).abs() < 1e-9);
    }

    #[test]
    fn completeness_verdicts() {
        // punctured identity leaf: complete at the origin
        let field = PolyVectorField::parse("x", Polydisc::unit(1)).unwrap();
        let e = AnalyticSetModel::new(vec![SetPiece::point("origin", Point::origin(1))]);
        let families =
            vec![LeafFamily { id: "star", kind: FamilyKind::Identity1D { punctured: true } }];
        let ctx = EtaContext { field: &field, e_model: &e, families: &families, s_override: None };
        let rep = completeness_probe(&ctx, &Point::origin(1), 20).unwrap();
        assert_eq!(rep.verdict, Completeness::Complete);
        for (k, t) in rep.thresholds.iter().enumerate() {
            assert!(rep.rays[0].lengths[k] > *t);
        }
        // flat override: finite length, incomplete
        let ctx_flat =
            EtaContext { field: &field, e_model: &e, families: &families, s_override: Some(1.0) };
        let rep = completeness_probe(&ctx_flat, &Point::origin(1), 20).unwrap();
        assert_eq!(rep.verdict, Completeness::Incomplete);
    }

    #[test]
    fn completeness_ray_rungs_match_closed_form() {
        let field = PolyVectorField::parse("x", Polydisc::unit(1)).unwrap();
        let e = AnalyticSetModel::new(vec![SetPiece::point("origin", Point::origin(1))]);
        let families =
            vec![LeafFamily { id: "star", kind: FamilyKind::Identity1D { punctured: true } }];
        let ctx = EtaContext { field: &field, e_model: &e, families: &families, s_override: None };
        let rep = completeness_probe(&ctx, &Point::origin(1), 12).unwrap();
        // exact rung value: ln(c0 + 4^k) - ln(c0 + 1), c0 = ln 2 - 1
        let c0 = 2.0f64.ln() - 1.0;
        for (i, len) in rep.rays[0].lengths.iter().enumerate() {
            let k = (i + 1) as f64;
            let want = (c0 + (4.0f64).powf(k)).ln() - (c0 + 1.0).ln();
            assert!((len - want).abs() < 1e-6, "rung {k}: {len} vs {want}");
        }
    }

    #[test]
    fn ex32_density_direct_value() {
        let field = PolyVectorField::parse("x ; y ; 0", Polydisc::unit(3)).unwrap();
        let z = Point::from_re(&[0.25, 0.0, 0.0]);
        let got = ex32_density(&z, 1, 1.0, &field).unwrap();
        let want = 16.0 / (4.0f64.ln() * 4.0f64.ln());
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn ex32_bounds_for_linear_and_quadratic_fields() {
        let lin = PolyVectorField::parse("x ; y ; 0", Polydisc::unit(3)).unwrap();
        let (lo, hi) = ex32_bounds_check(&lin, 1, 0.5, 8).unwrap();
        assert!((lo - 1.0).abs() < 1e-12);
        assert!((hi - 1.0).abs() < 1e-12);
        let quad = PolyVectorField::parse("x^2 ; y^2 ; 0", Polydisc::unit(3)).unwrap();
        let (lo, hi) = ex32_bounds_check(&quad, 2, 0.5, 12).unwrap();
        // grid min/max oracle: sqrt(u^2 + (1-u)^2) over u in [0,1] has range
        // [1/sqrt 2, 1]
        assert!((lo - 0.5f64.sqrt()).abs() < 5e-3, "lo {lo}");
        assert!((hi - 1.0).abs() < 5e-3, "hi {hi}");
    }

    #[test]
    fn eta_equals_s_squared_everywhere() {
        let (field, e, families) = h_plane_ctx_parts();
        let ctx = EtaContext { field: &field, e_model: &e, families: &families, s_override: None };
        let p = Point::new(vec![c(0.2, 0.1), c(0.0, 0.0), c(0.4, 0.0)]);
        for sample in [
            eta_exact_at(&ctx, &p).unwrap(),
            eta_lower_flow(&ctx, &p, 0.9).unwrap(),
            eta_upper_ambient(ctx.domain(), &p).unwrap(),
        ] {
            assert_eq!(sample.eta, sample.s * sample.s);
        }
    }

    #[test]
    fn rotation_leaves_s_invariant() {
        // rotating chart coordinates by unit scalars leaves ||gamma'|| and
        // hence s unchanged
        let chart = h_plane_chart(c(0.3, 0.0));
        let base = eta_exact(&chart, c(0.2, 0.1)).unwrap();
        for th in [0.4f64, 1.3, 2.9] {
            let u = C::new(th.cos(), th.sin());
            let rotated = LeafChart {
                id: "rot".into(),
                family: "rot".into(),
                model: chart.model,
                components: chart
                    .components
                    .iter()
                    .map(|comp| match comp {
                        ChartComp::Const(cc) => ChartComp::Const(cc * u),
                        ChartComp::Mono { coeff, power } => {
                            ChartComp::Mono { coeff: coeff * u, power: *power }
                        }
                    })
                    .collect(),
                base_param: chart.base_param,
            };
            let got = eta_exact(&rotated, c(0.2, 0.1)).unwrap();
            assert!((got.s - base.s).abs() < 1e-15);
        }
    }
}
