//! Leaf tracing: complex-time flow with certified existence radii, and the
//! exact disc / punctured-disc model charts registered by the builtin
//! scenarios.

use crate::expr::C;
use crate::field::{Point, Polydisc, PolyVectorField, Tangent};
use crate::variety::AnalyticSetModel;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

/// Domain shrink factor used for the `certified` flag of flow results and as
/// the default safety for certified radii.
pub const DEFAULT_SAFETY: f64 = 0.9;

/// Coordinates are treated as exactly zero below this threshold when leaves
/// are classified.
pub const CLASSIFY_ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LeafError {
    #[error("trajectory exits the domain after fraction {fraction:.6} of |t|")]
    DomainExit { endpoint: Point, fraction: f64, step_count: usize },
    #[error("step size underflow near the singular set")]
    StepUnderflow { endpoint: Point, step_count: usize },
    #[error("field vanishes at the base point")]
    ZeroField,
    #[error("base point is not interior to the domain")]
    NotInterior,
    #[error("safety must lie in (0, 1)")]
    BadSafety,
    #[error("no registered chart covers the point")]
    NoChart,
    #[error("chart validation failed: {0}")]
    ChartInvalid(String),
    #[error("chart does not restrict to the requested domain: {0}")]
    NotInRestriction(String),
}

/// Result of a certified complex-time flow along a straight ray.
#[derive(Clone, Debug)]
pub struct FlowResult {
    pub endpoint: Point,
    pub t_used: C,
    pub step_count: usize,
    /// Whole integrated segment (all accepted stage points) stayed inside the
    /// domain shrunk by [`DEFAULT_SAFETY`].
    pub certified: bool,
}

// Fehlberg 7(8) tableau: 13 stages, 8th-order propagation with embedded
// 7th-order error estimate.
const STAGES: usize = 13;
const A: [[f64; 12]; 13] = [
    [0.0; 12],
    [2.0 / 27.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 36.0, 1.0 / 12.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 24.0, 0.0, 1.0 / 8.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [5.0 / 12.0, 0.0, -25.0 / 16.0, 25.0 / 16.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 20.0, 0.0, 0.0, 1.0 / 4.0, 1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [
        -25.0 / 108.0,
        0.0,
        0.0,
        125.0 / 108.0,
        -65.0 / 27.0,
        125.0 / 54.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [31.0 / 300.0, 0.0, 0.0, 0.0, 61.0 / 225.0, -2.0 / 9.0, 13.0 / 900.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [2.0, 0.0, 0.0, -53.0 / 6.0, 704.0 / 45.0, -107.0 / 9.0, 67.0 / 90.0, 3.0, 0.0, 0.0, 0.0, 0.0],
    [
        -91.0 / 108.0,
        0.0,
        0.0,
        23.0 / 108.0,
        -976.0 / 135.0,
        311.0 / 54.0,
        -19.0 / 60.0,
        17.0 / 6.0,
        -1.0 / 12.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        2383.0 / 4100.0,
        0.0,
        0.0,
        -341.0 / 164.0,
        4496.0 / 1025.0,
        -301.0 / 82.0,
        2133.0 / 4100.0,
        45.0 / 82.0,
        45.0 / 164.0,
        18.0 / 41.0,
        0.0,
        0.0,
    ],
    [
        3.0 / 205.0,
        0.0,
        0.0,
        0.0,
        0.0,
        -6.0 / 41.0,
        -3.0 / 205.0,
        -3.0 / 41.0,
        3.0 / 41.0,
        6.0 / 41.0,
        0.0,
        0.0,
    ],
    [
        -1777.0 / 4100.0,
        0.0,
        0.0,
        -341.0 / 164.0,
        4496.0 / 1025.0,
        -289.0 / 82.0,
        2193.0 / 4100.0,
        51.0 / 82.0,
        33.0 / 164.0,
        12.0 / 41.0,
        0.0,
        1.0,
    ],
];
const B8: [f64; 13] = [
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    34.0 / 105.0,
    9.0 / 35.0,
    9.0 / 35.0,
    9.0 / 280.0,
    9.0 / 280.0,
    0.0,
    41.0 / 840.0,
    41.0 / 840.0,
];
const ERR_C: f64 = 41.0 / 840.0;

/// Solve `dz/ds = X(z)` along the straight complex-time segment `s in [0, t]`
/// with adaptive 8th-order stepping; local error per step stays below `tol`
/// relative to `1 + |z|`.
pub fn flow(field: &PolyVectorField, p: &Point, t: C, tol: f64) -> Result<FlowResult, LeafError> {
    assert!(tol > 0.0, "tolerance must be positive");
    let n = field.dim();
    assert_eq!(p.dim(), n);
    let cert_domain = field.domain().shrink(DEFAULT_SAFETY);
    let total = t.norm();
    if total == 0.0 {
        return Ok(FlowResult {
            endpoint: p.clone(),
            t_used: C::new(0.0, 0.0),
            step_count: 0,
            certified: cert_domain.contains(p),
        });
    }
    let dir = t / total;
    let rhs = |y: &[C], out: &mut Vec<C>| {
        out.clear();
        let val = field.eval(&Point::new(y.to_vec()));
        out.extend(val.0.iter().map(|v| v * dir));
    };

    let mut y: Vec<C> = p.0.clone();
    let mut s = 0.0f64;
    let mut steps = 0usize;
    let mut certified = cert_domain.contains(p);
    let f0 = field.eval(p).norm();
    let mut h = (0.25 / (1.0 + f0)).min(total);
    let mut k: Vec<Vec<C>> = vec![Vec::new(); STAGES];
    let mut stage_y: Vec<C> = vec![C::new(0.0, 0.0); n];

    while s < total {
        if steps > 200_000 {
            return Err(LeafError::StepUnderflow { endpoint: Point::new(y), step_count: steps });
        }
        let last = s + h >= total;
        let hh = if last { total - s } else { h };
        // stages
        let mut stages_inside = true;
        for i in 0..STAGES {
            for (j, sy) in stage_y.iter_mut().enumerate() {
                let mut acc = y[j];
                for m in 0..i {
                    let a = A[i][m];
                    if a != 0.0 {
                        acc += k[m][j] * (hh * a);
                    }
                }
                *sy = acc;
            }
            if i > 0 && !cert_domain.contains(&Point::new(stage_y.clone())) {
                stages_inside = false;
            }
            let mut out = std::mem::take(&mut k[i]);
            rhs(&stage_y, &mut out);
            k[i] = out;
        }
        // 8th-order update and embedded error
        let mut ynew = y.clone();
        let mut err_norm = 0.0f64;
        for j in 0..n {
            let mut acc = C::new(0.0, 0.0);
            for (i, &b) in B8.iter().enumerate() {
                if b != 0.0 {
                    acc += k[i][j] * b;
                }
            }
            ynew[j] = y[j] + acc * hh;
            let e = (k[0][j] + k[10][j] - k[11][j] - k[12][j]) * (hh * ERR_C);
            let scale = tol * (1.0 + y[j].norm());
            err_norm = err_norm.max(e.norm() / scale);
        }
        let endpoint_inside = field.domain().contains(&Point::new(ynew.clone()));
        if err_norm <= 1.0 && endpoint_inside {
            // accept
            y = ynew;
            s += hh;
            steps += 1;
            if !stages_inside || !cert_domain.contains(&Point::new(y.clone())) {
                certified = false;
            }
            let factor = if err_norm > 0.0 {
                (0.9 * err_norm.powf(-1.0 / 8.0)).clamp(0.2, 4.0)
            } else {
                4.0
            };
            h = (h * factor).min(total);
        } else {
            // reject: shrink, detecting boundary exit on underflow
            let factor = if !endpoint_inside {
                0.5
            } else {
                (0.9 * err_norm.powf(-1.0 / 8.0)).clamp(0.1, 0.5)
            };
            h *= factor;
            if h < 1e-13 * total.max(1.0) {
                let pt = Point::new(y);
                let near_boundary = field.domain().dist_to_boundary(&pt) < 1e-6;
                return if near_boundary || !endpoint_inside {
                    Err(LeafError::DomainExit {
                        endpoint: pt,
                        fraction: s / total,
                        step_count: steps,
                    })
                } else {
                    Err(LeafError::StepUnderflow { endpoint: pt, step_count: steps })
                };
            }
        }
    }
    Ok(FlowResult { endpoint: Point::new(y), t_used: dir * s, step_count: steps, certified })
}

/// Certified radius of a complex-time flow disc around `p`.
#[derive(Clone, Debug)]
pub struct RadiusReport {
    /// Radius R: `t -> flow(p, t)` is holomorphic on `|t| < R` with image in
    /// the safety-shrunk domain.
    pub radius: f64,
    /// Single-step Picard radius before ray chaining.
    pub base_radius: f64,
}

const RAYS: usize = 24;
const MAX_CHAIN: usize = 240;
const RAY_MARGIN: f64 = 0.97;

/// Picard–Lindelöf radius `safety * d(p, bd U') / M`, enlarged by chaining
/// certified steps along rays of the complex-time plane and taking the
/// minimum ray reach (sound for a disc by monodromy: the per-ray chains keep
/// the whole disc image inside the shrunken domain).
pub fn certified_flow_disc_radius(
    field: &PolyVectorField,
    p: &Point,
    safety: f64,
) -> Result<RadiusReport, LeafError> {
    certified_flow_disc_radius_in(field, field.domain(), p, safety)
}

/// Same as [`certified_flow_disc_radius`] but confined to the subdomain `u`.
pub fn certified_flow_disc_radius_in(
    field: &PolyVectorField,
    u: &Polydisc,
    p: &Point,
    safety: f64,
) -> Result<RadiusReport, LeafError> {
    if !(safety > 0.0 && safety < 1.0) {
        return Err(LeafError::BadSafety);
    }
    if !u.contains(p) {
        return Err(LeafError::NotInterior);
    }
    let shrunk = u.shrink(safety);
    let m_bound = sup_norm_estimate(field, &shrunk);
    if m_bound <= 1e-300 {
        return Err(LeafError::ZeroField);
    }
    let d0 = shrunk.dist_to_boundary(p);
    if d0 <= 0.0 {
        return Ok(RadiusReport { radius: 0.0, base_radius: 0.0 });
    }
    let base = safety * d0 / m_bound;
    let restricted = field.with_domain(u.clone());
    let mut min_reach = f64::INFINITY;
    for ray in 0..RAYS {
        let theta = 2.0 * std::f64::consts::PI * ray as f64 / RAYS as f64;
        let e_itheta = C::new(theta.cos(), theta.sin());
        let mut q = p.clone();
        let mut tau = 0.0f64;
        for _ in 0..MAX_CHAIN {
            let d = shrunk.dist_to_boundary(&q);
            if d <= 0.0 {
                break;
            }
            let step = safety * d / m_bound;
            if tau > 0.0 && step < 1e-3 * tau {
                break;
            }
            match flow(&restricted, &q, e_itheta * step, 1e-10) {
                Ok(r) => {
                    q = r.endpoint;
                    tau += step;
                }
                Err(_) => break,
            }
        }
        min_reach = min_reach.min(tau);
    }
    let radius = (RAY_MARGIN * min_reach).max(base.min(min_reach));
    Ok(RadiusReport { radius, base_radius: base })
}

/// Certified estimate of `sup ||X||` over the closed polydisc: the minimum of
/// the coefficient bound and a dense-grid maximum padded by a Lipschitz bound.
fn sup_norm_estimate(field: &PolyVectorField, u: &Polydisc) -> f64 {
    let coef = field.sup_norm_bound(u);
    let n = field.dim();
    let g = 4usize; // per real dimension
    let lip = field.jacobian_norm_bound(u);
    let mut max_spacing = 0.0f64;
    for &r in u.radii() {
        max_spacing = max_spacing.max(2.0 * r / (g - 1) as f64);
    }
    let total = g.pow(2 * n as u32);
    if total > 1 << 16 {
        return coef;
    }
    let coord = |step: usize| (step as f64 / (g - 1) as f64) * 2.0 - 1.0;
    let mut grid_max = 0.0f64;
    for flat in 0..total {
        let mut rem = flat;
        let mut z = Vec::with_capacity(n);
        for j in 0..n {
            let a = rem % g;
            rem /= g;
            let b = rem % g;
            rem /= g;
            z.push(C::new(
                u.center().0[j].re + u.radii()[j] * coord(a),
                u.center().0[j].im + u.radii()[j] * coord(b),
            ));
        }
        grid_max = grid_max.max(field.eval(&Point::new(z)).norm());
    }
    coef.min(grid_max + lip * max_spacing)
}

/// Conformal model of a leaf chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LeafModel {
    Disc { r: f64 },
    PuncturedDisc { r: f64 },
}

impl LeafModel {
    pub fn radius(&self) -> f64 {
        match self {
            LeafModel::Disc { r } | LeafModel::PuncturedDisc { r } => *r,
        }
    }

    pub fn is_punctured(&self) -> bool {
        matches!(self, LeafModel::PuncturedDisc { .. })
    }

    pub fn contains(&self, z: C) -> bool {
        let inside = z.norm() < self.radius();
        match self {
            LeafModel::Disc { .. } => inside,
            LeafModel::PuncturedDisc { .. } => inside && z.norm() > 0.0,
        }
    }

    pub fn with_radius(&self, r: f64) -> LeafModel {
        match self {
            LeafModel::Disc { .. } => LeafModel::Disc { r },
            LeafModel::PuncturedDisc { .. } => LeafModel::PuncturedDisc { r },
        }
    }
}

/// One coordinate of a chart map: constant or a monomial in the model
/// coordinate. Monomial components keep restriction to centered polydiscs
/// exactly classifiable.
#[derive(Clone, Debug, PartialEq)]
pub enum ChartComp {
    Const(C),
    Mono { coeff: C, power: u32 },
}

impl ChartComp {
    pub fn eval(&self, z: C) -> C {
        match self {
            ChartComp::Const(c) => *c,
            ChartComp::Mono { coeff, power } => coeff * z.powu(*power),
        }
    }

    pub fn deriv(&self, z: C) -> C {
        match self {
            ChartComp::Const(_) => C::new(0.0, 0.0),
            ChartComp::Mono { coeff, power } => {
                if *power == 0 {
                    C::new(0.0, 0.0)
                } else {
                    coeff * C::new(*power as f64, 0.0) * z.powu(power - 1)
                }
            }
        }
    }
}

/// Injective holomorphic parameterization of a leaf over a disc or punctured
/// disc model.
#[derive(Clone, Debug)]
pub struct LeafChart {
    pub id: String,
    pub family: String,
    pub model: LeafModel,
    pub components: Vec<ChartComp>,
    pub base_param: C,
}

impl LeafChart {
    pub fn ambient_dim(&self) -> usize {
        self.components.len()
    }

    pub fn point_at(&self, z: C) -> Point {
        Point::new(self.components.iter().map(|c| c.eval(z)).collect())
    }

    pub fn derivative_at(&self, z: C) -> Tangent {
        Tangent(self.components.iter().map(|c| c.deriv(z)).collect())
    }

    pub fn base_point(&self) -> Point {
        self.point_at(self.base_param)
    }

    /// Image of the puncture (the E-target of a separatrix-adjacent leaf).
    pub fn puncture_image(&self) -> Option<Point> {
        if self.model.is_punctured() {
            Some(self.point_at(C::new(0.0, 0.0)))
        } else {
            None
        }
    }

    /// Numeric validation of the chart invariants: injectivity on sampled
    /// pairs, nonvanishing derivative, image off E away from the puncture,
    /// and tangency to the field.
    pub fn validate(
        &self,
        field: Option<&PolyVectorField>,
        e_model: &AnalyticSetModel,
    ) -> Result<(), LeafError> {
        let mut rng = ChaCha12Rng::seed_from_u64(0x1eaf);
        let r = self.model.radius();
        let lo = if self.model.is_punctured() { 1e-3 } else { 0.0 };
        let sample = |rng: &mut ChaCha12Rng| -> C {
            let rad = r * (lo + (0.97 - lo) * rng.gen_range(0.0..1.0f64));
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            C::new(rad * th.cos(), rad * th.sin())
        };
        for _ in 0..1000 {
            let z1 = sample(&mut rng);
            let z2 = sample(&mut rng);
            if (z1 - z2).norm() < 1e-12 {
                continue;
            }
            let sep = self.point_at(z1).dist(&self.point_at(z2));
            if sep <= 0.0 {
                return Err(LeafError::ChartInvalid(format!(
                    "chart {} not injective at {z1} vs {z2}",
                    self.id
                )));
            }
        }
        for _ in 0..1000 {
            let z = sample(&mut rng);
            if self.derivative_at(z).norm() == 0.0 {
                return Err(LeafError::ChartInvalid(format!(
                    "chart {} has vanishing derivative at {z}",
                    self.id
                )));
            }
            if !e_model.is_empty() {
                let p = self.point_at(z);
                if e_model.distance(&p) < 1e-9 && z.norm() > 1e-6 * r {
                    return Err(LeafError::ChartInvalid(format!(
                        "chart {} image meets E at {z}",
                        self.id
                    )));
                }
            }
            if let Some(f) = field {
                let x = f.eval(&self.point_at(z));
                let g = self.derivative_at(z);
                if x.norm() > 1e-13 {
                    let res = tangency_residual(&x, &g);
                    if res > 1e-8 {
                        return Err(LeafError::ChartInvalid(format!(
                            "chart {} not tangent to the field at {z} (residual {res:.3e})",
                            self.id
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Restrict the chart to the connected component through the base point
    /// of (leaf intersect u), for coordinate-aligned polydiscs centered at
    /// the chart's monomial center.
    pub fn restricted_to(&self, u: &Polydisc) -> Result<LeafChart, LeafError> {
        let mut r_new = self.model.radius();
        for (j, comp) in self.components.iter().enumerate() {
            let cu = u.center().0[j];
            let ru = u.radii()[j];
            match comp {
                ChartComp::Const(c) => {
                    if (c - cu).norm() >= ru {
                        return Err(LeafError::NotInRestriction(format!(
                            "constant coordinate {j} lies outside the domain"
                        )));
                    }
                }
                ChartComp::Mono { coeff, power } => {
                    if cu.norm() > 1e-12 {
                        return Err(LeafError::NotInRestriction(format!(
                            "domain is not centered on the chart axis in coordinate {j}"
                        )));
                    }
                    if coeff.norm() > 0.0 {
                        let bound = (ru / coeff.norm()).powf(1.0 / *power as f64);
                        r_new = r_new.min(bound);
                    }
                }
            }
        }
        if !(self.base_param.norm() < r_new) {
            return Err(LeafError::NotInRestriction(
                "base point is outside the restricted component".into(),
            ));
        }
        Ok(LeafChart {
            id: format!("{}|r{:.6e}", self.id, r_new),
            family: self.family.clone(),
            model: self.model.with_radius(r_new),
            components: self.components.clone(),
            base_param: self.base_param,
        })
    }
}

/// Relative parallelism defect of x against g, computed without the sqrt
/// cancellation: `|| x |g|^2 - <x,g> g || / (|x| |g|^2)`.
pub fn tangency_residual(x: &Tangent, g: &Tangent) -> f64 {
    let g2 = g.norm() * g.norm();
    let c = x.dot_h(g);
    let mut num = 0.0f64;
    for j in 0..x.dim() {
        num += (x.0[j] * C::new(g2, 0.0) - c * g.0[j]).norm_sqr();
    }
    num.sqrt() / (x.norm() * g2)
}

/// A registered family of model leaves of a scenario.
#[derive(Clone, Debug)]
pub struct LeafFamily {
    pub id: &'static str,
    pub kind: FamilyKind,
}

#[derive(Clone, Debug)]
pub enum FamilyKind {
    /// Leaves `{ p + zeta e_moving }` with listed coordinates pinned to zero
    /// and others required nonzero; model radius is the domain radius of the
    /// moving coordinate.
    CoordLine { moving: usize, zero: Vec<usize>, nonzero: Vec<usize>, punctured: bool },
    /// The curve `w -> (w, w^2/2, w^2/2)` on the unit polydisc.
    GCurve,
    /// Complex lines through the origin of the (i, j)-plane at fixed third
    /// coordinate.
    PlaneLine { i: usize, j: usize, fixed: usize },
    /// The diagonal `z_i = z_j` at fixed third coordinate.
    PlaneDiagonal { i: usize, j: usize, fixed: usize },
    /// Identity chart of a one-dimensional ambient disc.
    Identity1D { punctured: bool },
}

fn fmt_param(c: C) -> String {
    format!("{:+.9e}{:+.9e}i", c.re + 0.0, c.im + 0.0)
}

impl LeafFamily {
    /// Attempt to classify `p` as a point of one of this family's leaves.
    pub fn classify(&self, domain: &Polydisc, p: &Point) -> Option<LeafChart> {
        let n = p.dim();
        match &self.kind {
            FamilyKind::CoordLine { moving, zero, nonzero, punctured } => {
                for &j in zero {
                    if p.0[j].norm() > CLASSIFY_ZERO_TOL {
                        return None;
                    }
                }
                for &j in nonzero {
                    if p.0[j].norm() <= CLASSIFY_ZERO_TOL {
                        return None;
                    }
                }
                if *punctured && p.0[*moving].norm() <= CLASSIFY_ZERO_TOL {
                    return None;
                }
                let mut comps = Vec::with_capacity(n);
                let mut tag = String::new();
                for j in 0..n {
                    if j == *moving {
                        comps.push(ChartComp::Mono { coeff: C::new(1.0, 0.0), power: 1 });
                    } else if zero.contains(&j) {
                        comps.push(ChartComp::Const(C::new(0.0, 0.0)));
                    } else {
                        comps.push(ChartComp::Const(p.0[j]));
                        tag.push_str(&format!("{}={};", j, fmt_param(p.0[j])));
                    }
                }
                let r = domain.radii()[*moving];
                let model =
                    if *punctured { LeafModel::PuncturedDisc { r } } else { LeafModel::Disc { r } };
                Some(LeafChart {
                    id: format!("{}[{}]", self.id, tag),
                    family: self.id.to_string(),
                    model,
                    components: comps,
                    base_param: p.0[*moving],
                })
            }
            FamilyKind::GCurve => {
                let w = p.0[0];
                if w.norm() <= CLASSIFY_ZERO_TOL {
                    return None;
                }
                let half = w * w * 0.5;
                if (p.0[1] - half).norm() > CLASSIFY_ZERO_TOL
                    || (p.0[2] - half).norm() > CLASSIFY_ZERO_TOL
                {
                    return None;
                }
                Some(LeafChart {
                    id: format!("{}[]", self.id),
                    family: self.id.to_string(),
                    model: LeafModel::PuncturedDisc { r: domain.radii()[0] },
                    components: vec![
                        ChartComp::Mono { coeff: C::new(1.0, 0.0), power: 1 },
                        ChartComp::Mono { coeff: C::new(0.5, 0.0), power: 2 },
                        ChartComp::Mono { coeff: C::new(0.5, 0.0), power: 2 },
                    ],
                    base_param: w,
                })
            }
            FamilyKind::PlaneLine { i, j, fixed } => {
                let (pi, pj) = (p.0[*i], p.0[*j]);
                let m = pi.norm().max(pj.norm());
                if m <= CLASSIFY_ZERO_TOL {
                    return None;
                }
                let ai = pi / m;
                let aj = pj / m;
                let mut r_model = f64::INFINITY;
                if ai.norm() > 0.0 {
                    r_model = r_model.min(domain.radii()[*i] / ai.norm());
                }
                if aj.norm() > 0.0 {
                    r_model = r_model.min(domain.radii()[*j] / aj.norm());
                }
                let mut comps = vec![ChartComp::Const(C::new(0.0, 0.0)); p.dim()];
                comps[*i] = ChartComp::Mono { coeff: ai, power: 1 };
                comps[*j] = ChartComp::Mono { coeff: aj, power: 1 };
                comps[*fixed] = ChartComp::Const(p.0[*fixed]);
                Some(LeafChart {
                    id: format!(
                        "{}[dir={},{};c={}]",
                        self.id,
                        fmt_param(ai),
                        fmt_param(aj),
                        fmt_param(p.0[*fixed])
                    ),
                    family: self.id.to_string(),
                    model: LeafModel::PuncturedDisc { r: r_model },
                    components: comps,
                    base_param: C::new(m, 0.0),
                })
            }
            FamilyKind::PlaneDiagonal { i, j, fixed } => {
                let (pi, pj) = (p.0[*i], p.0[*j]);
                if pi.norm() <= CLASSIFY_ZERO_TOL || (pi - pj).norm() > CLASSIFY_ZERO_TOL {
                    return None;
                }
                let r_model = domain.radii()[*i].min(domain.radii()[*j]);
                let mut comps = vec![ChartComp::Const(C::new(0.0, 0.0)); p.dim()];
                comps[*i] = ChartComp::Mono { coeff: C::new(1.0, 0.0), power: 1 };
                comps[*j] = ChartComp::Mono { coeff: C::new(1.0, 0.0), power: 1 };
                comps[*fixed] = ChartComp::Const(p.0[*fixed]);
                Some(LeafChart {
                    id: format!("{}[c={}]", self.id, fmt_param(p.0[*fixed])),
                    family: self.id.to_string(),
                    model: LeafModel::PuncturedDisc { r: r_model },
                    components: comps,
                    base_param: pi,
                })
            }
            FamilyKind::Identity1D { punctured } => {
                if *punctured && p.0[0].norm() <= CLASSIFY_ZERO_TOL {
                    return None;
                }
                let r = domain.radii()[0];
                let model =
                    if *punctured { LeafModel::PuncturedDisc { r } } else { LeafModel::Disc { r } };
                Some(LeafChart {
                    id: format!("{}[]", self.id),
                    family: self.id.to_string(),
                    model,
                    components: vec![ChartComp::Mono { coeff: C::new(1.0, 0.0), power: 1 }],
                    base_param: p.0[0],
                })
            }
        }
    }
}

/// First registered chart covering `p`, if any.
pub fn classify_with_families(
    families: &[LeafFamily],
    domain: &Polydisc,
    p: &Point,
) -> Option<LeafChart> {
    families.iter().find_map(|f| f.classify(domain, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn diag_field() -> PolyVectorField {
        PolyVectorField::parse("x ; 2*y", Polydisc::unit_bidisc()).unwrap()
    }

    #[test]
    fn flow_of_linear_field_matches_exponential() {
        let f = diag_field();
        let p = Point::from_re(&[0.3, 0.25]);
        let t = c(0.4, 0.3);
        let r = flow(&f, &p, t, 1e-10).unwrap();
        let want = [c(0.3, 0.0) * t.exp(), c(0.25, 0.0) * (t * 2.0).exp()];
        for j in 0..2 {
            let rel = (r.endpoint.0[j] - want[j]).norm() / want[j].norm();
            assert!(rel <= 1e-8, "relative error {rel}");
        }
        assert!(r.certified);
    }

    #[test]
    fn flow_on_invariant_plane_is_affine() {
        // z d/dx + xy d/dy + xy d/dz restricted to {y = 0}: endpoint (ct, 0, c)
        let f = PolyVectorField::parse("z ; x*y ; x*y", Polydisc::unit(3)).unwrap();
        let cc = c(0.4, -0.1);
        let p = Point::new(vec![c(0.0, 0.0), c(0.0, 0.0), cc]);
        let t = c(0.3, 0.2);
        let r = flow(&f, &p, t, 1e-10).unwrap();
        assert!((r.endpoint.0[0] - cc * t).norm() < 1e-11);
        assert_eq!(r.endpoint.0[1], c(0.0, 0.0));
        assert!((r.endpoint.0[2] - cc).norm() < 1e-13);
    }

    #[test]
    fn flow_half_turn_negates_coordinate() {
        let f = PolyVectorField::parse("x ; 0", Polydisc::unit_bidisc()).unwrap();
        let p = Point::from_re(&[0.5, 0.0]);
        let r = flow(&f, &p, c(0.0, std::f64::consts::PI), 1e-11).unwrap();
        assert!((r.endpoint.0[0] - c(-0.5, 0.0)).norm() < 1e-9);
        assert!(r.endpoint.0[1].norm() < 1e-14);
    }

    #[test]
    fn flow_reports_domain_exit() {
        let f = PolyVectorField::parse("x ; 0", Polydisc::unit_bidisc()).unwrap();
        let p = Point::from_re(&[0.5, 0.0]);
        // real time 2 would need |x| = 0.5 e^2 > 1
        match flow(&f, &p, c(2.0, 0.0), 1e-10) {
            Err(LeafError::DomainExit { fraction, .. }) => {
                // exit at e^s = 2 => s = ln 2, fraction ln2/2
                assert!((fraction - (2.0f64.ln() / 2.0)).abs() < 1e-3);
            }
            other => panic!("expected domain exit, got {other:?}"),
        }
    }

    #[test]
    fn flow_group_law_and_tangency() {
        let f = diag_field();
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        for _ in 0..100 {
            let p = Point::new(vec![
                c(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)),
                c(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)),
            ]);
            let s = c(rng.gen_range(-0.15..0.15), rng.gen_range(-0.15..0.15));
            let t = c(rng.gen_range(-0.15..0.15), rng.gen_range(-0.15..0.15));
            let a = flow(&f, &p, s, 1e-10).unwrap();
            let b = flow(&f, &a.endpoint, t, 1e-10).unwrap();
            let direct = flow(&f, &p, s + t, 1e-10).unwrap();
            if a.certified && b.certified && direct.certified {
                assert!(b.endpoint.dist(&direct.endpoint) < 1e-7);
            }
        }
        // finite-difference tangency at t = 0
        let p = Point::from_re(&[0.2, 0.1]);
        let h = 1e-6;
        let fw = flow(&f, &p, c(h, 0.0), 1e-12).unwrap();
        let bw = flow(&f, &p, c(-h, 0.0), 1e-12).unwrap();
        let x = f.eval(&p);
        for j in 0..2 {
            let fd = (fw.endpoint.0[j] - bw.endpoint.0[j]) / (2.0 * h);
            assert!((fd - x.0[j]).norm() < 1e-6);
        }
    }

    #[test]
    fn certified_radius_constant_field() {
        let f = PolyVectorField::parse("1 ; 0", Polydisc::unit_bidisc()).unwrap();
        let r95 = certified_flow_disc_radius(&f, &Point::origin(2), 0.95).unwrap();
        assert!(r95.radius >= 0.85, "radius {}", r95.radius);
        assert!(r95.radius <= 0.96);
        let r90 = certified_flow_disc_radius(&f, &Point::origin(2), 0.9).unwrap();
        assert!(r95.radius > r90.radius);
    }

    #[test]
    fn certified_radius_radial_field_on_disc() {
        let f = PolyVectorField::parse("x", Polydisc::unit(1)).unwrap();
        let p = Point::from_re(&[0.5]);
        let safety = 0.9;
        let r = certified_flow_disc_radius(&f, &p, safety).unwrap();
        assert!(r.radius >= safety * 0.5, "radius {}", r.radius);
        // exact reach within the shrunken disc is ln(0.9/0.5)
        assert!(r.radius <= (0.9f64 / 0.5).ln() + 1e-9);
    }

    #[test]
    fn certified_radius_tracks_closed_form_exit_time() {
        let f = diag_field();
        let p = Point::from_re(&[0.25, 0.25]);
        let safety = 0.9;
        // closed-form exit from the unshrunk domain along the worst ray
        let t_exact = ((1.0f64 / 0.25).ln()).min((1.0f64 / 0.25).ln() / 2.0);
        let r = certified_flow_disc_radius(&f, &p, safety).unwrap();
        assert!(r.radius <= t_exact);
        assert!(r.radius >= safety * safety * t_exact, "radius {} vs {}", r.radius, t_exact);
    }

    #[test]
    fn certified_radius_rejects_zero_field() {
        let f = PolyVectorField::parse("0 ; 0", Polydisc::unit_bidisc()).unwrap();
        assert!(matches!(
            certified_flow_disc_radius(&f, &Point::origin(2), 0.9),
            Err(LeafError::ZeroField)
        ));
    }

    #[test]
    fn chart_eval_and_restriction() {
        let chart = LeafChart {
            id: "t".into(),
            family: "t".into(),
            model: LeafModel::Disc { r: 1.0 },
            components: vec![
                ChartComp::Mono { coeff: c(1.0, 0.0), power: 1 },
                ChartComp::Const(c(0.0, 0.0)),
                ChartComp::Const(c(0.4, 0.0)),
            ],
            base_param: c(0.0, 0.0),
        };
        let restricted = chart
            .restricted_to(&Polydisc::new(Point::origin(3), vec![0.5, 1.0, 1.0]))
            .unwrap();
        assert_eq!(restricted.model.radius(), 0.5);
        // constant coordinate outside the domain
        assert!(chart
            .restricted_to(&Polydisc::new(Point::origin(3), vec![0.5, 1.0, 0.3]))
            .is_err());
    }

    #[test]
    fn gcurve_classification_round_trips() {
        let fam = LeafFamily { id: "g", kind: FamilyKind::GCurve };
        let dom = Polydisc::unit(3);
        let w = c(0.3, 0.2);
        let p = Point::new(vec![w, w * w * 0.5, w * w * 0.5]);
        let chart = fam.classify(&dom, &p).unwrap();
        assert_eq!(chart.base_param, w);
        assert!(chart.base_point().dist(&p) < 1e-15);
        assert!(fam.classify(&dom, &Point::from_re(&[0.3, 0.1, 0.1])).is_none());
    }
}
