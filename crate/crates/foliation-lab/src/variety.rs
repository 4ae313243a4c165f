//! Models of the singular set E, Whitney-style tangent cones of analytic
//! sets, and F-invariance of hypersurfaces.

use crate::expr::{Expr, Poly, C};
use crate::field::{line_angle, Point, Polydisc, PolyVectorField, Tangent};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

/// Angular resolution at which cone directions are deduplicated (radians).
pub const DIRECTION_DEDUP_RAD: f64 = 1e-3;
/// Residual threshold for relations certified on sampled set cones.
pub const SET_RELATION_TOL: f64 = 1e-10;
/// Membership tolerance for "p lies on E".
pub const ON_SET_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum VarietyError {
    #[error("point is not on the set (distance {0:.3e})")]
    NotOnSet(f64),
    #[error("grid density must be at least 2 per real dimension")]
    GridTooCoarse,
    #[error("hypersurface polynomial is identically zero")]
    ZeroPolynomial,
    #[error("could not sample enough points of the zero set ({found} of {wanted}); verdict inconclusive")]
    Inconclusive { found: usize, wanted: usize },
    #[error("set piece is empty or degenerate: {0}")]
    BadPiece(String),
}

/// One direction of a cone, remembered with the sampling scale that produced
/// it (None for exact/structural directions).
#[derive(Clone, Debug)]
pub struct ConeDirection {
    pub dir: Tangent,
    pub scale: Option<f64>,
}

/// A certified complex-linear relation `sum_j coeffs_j v_j = 0` holding for
/// every stored direction.
#[derive(Clone, Debug)]
pub struct Relation {
    pub coeffs: Vec<C>,
    pub residual: f64,
}

/// A set of complex directions modulo unit-scalar phase, with optional
/// certified linear relations and an optional subspace the directions fill.
#[derive(Clone, Debug, Default)]
pub struct ConeSet {
    pub directions: Vec<ConeDirection>,
    pub relations: Vec<Relation>,
    /// Hermitian-orthonormal basis of a subspace whose unit sphere the
    /// directions cover (when certified by the coverage test).
    pub span_hint: Option<Vec<Tangent>>,
    /// Scales at which every sample landed on E (skipped, reported).
    pub skipped_scales: Vec<f64>,
}

impl ConeSet {
    pub fn dim(&self) -> usize {
        self.directions
            .first()
            .map(|d| d.dir.dim())
            .or_else(|| self.span_hint.as_ref().and_then(|b| b.first().map(|v| v.dim())))
            .unwrap_or(0)
    }

    /// Minimal line angle from `v` to this cone, using the span when the
    /// directions certifiably fill it and the discrete direction set
    /// otherwise.
    pub fn min_angle_to(&self, v: &Tangent) -> f64 {
        if let Some(basis) = &self.span_hint {
            return angle_to_span(v, basis);
        }
        self.directions
            .iter()
            .map(|d| line_angle(&d.dir, v))
            .fold(f64::INFINITY, f64::min)
    }

    /// Minimal principal angle between two cones.
    pub fn min_angle_between(&self, other: &ConeSet) -> f64 {
        match (&self.span_hint, &other.span_hint) {
            (Some(a), Some(b)) => span_min_angle(a, b),
            (Some(_), None) => other
                .directions
                .iter()
                .map(|d| self.min_angle_to(&d.dir))
                .fold(f64::INFINITY, f64::min),
            _ => self
                .directions
                .iter()
                .map(|d| other.min_angle_to(&d.dir))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Residual of the worst stored relation against the worst direction.
    pub fn max_relation_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in &self.relations {
            let ell = Tangent(r.coeffs.clone());
            for d in &self.directions {
                worst = worst.max(ell.dot_b(&d.dir).norm());
            }
        }
        worst
    }
}

/// Canonical representative of a complex direction: unit norm, first
/// non-negligible component rotated to the positive real axis.
pub fn canonicalize_direction(v: &Tangent) -> Option<Tangent> {
    let u = v.normalized()?;
    let lead = u.0.iter().find(|c| c.norm() > 1e-12)?;
    let phase = lead.conj() / lead.norm();
    Some(u.scale(phase))
}

/// Greedy dedup at the fixed angular resolution.
///
/// Canonicalized vectors within the dedup angle differ by at most that much
/// in the real part of their leading component, so after sorting on it only
/// a short window of predecessors has to be compared; the squared hermitian
/// dot replaces the acos in the hot loop.
pub fn dedupe_directions(mut dirs: Vec<ConeDirection>) -> Vec<ConeDirection> {
    let cos2 = DIRECTION_DEDUP_RAD.cos().powi(2);
    let window = 3.0 * DIRECTION_DEDUP_RAD;
    dirs.sort_by(|a, b| {
        a.dir.0[0]
            .re
            .partial_cmp(&b.dir.0[0].re)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    // lines within the dedup angle also match componentwise in modulus, so a
    // cheap second-component prefilter skips most full dot products
    let m1 = |d: &ConeDirection| if d.dir.dim() > 1 { d.dir.0[1].norm() } else { 0.0 };
    let mut kept: Vec<ConeDirection> = Vec::new();
    let mut kept_m1: Vec<f64> = Vec::new();
    for d in dirs {
        let lo = d.dir.0[0].re - window;
        let dm1 = m1(&d);
        let start = kept.partition_point(|k| k.dir.0[0].re < lo);
        let dup = kept[start..].iter().zip(&kept_m1[start..]).any(|(k, &km1)| {
            (km1 - dm1).abs() <= window && k.dir.dot_h(&d.dir).norm_sqr() >= cos2
        });
        if !dup {
            kept_m1.push(dm1);
            kept.push(d);
        }
    }
    kept
}

/// Angle from a vector to a subspace given by a hermitian-ONB. The zero
/// subspace is infinitely far from every direction.
pub fn angle_to_span(v: &Tangent, basis: &[Tangent]) -> f64 {
    if basis.is_empty() {
        return f64::INFINITY;
    }
    let n = v.norm();
    if n == 0.0 {
        return 0.0;
    }
    let mut proj_sq = 0.0;
    for b in basis {
        proj_sq += v.dot_h(b).norm_sqr();
    }
    let c = (proj_sq.sqrt() / n).min(1.0);
    c.acos()
}

/// Minimal principal angle between two subspaces given by hermitian-ONBs.
pub fn span_min_angle(a: &[Tangent], b: &[Tangent]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let m = DMatrix::<C>::from_fn(a.len(), b.len(), |i, j| a[i].dot_h(&b[j]));
    let svd = m.svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    smax.min(1.0).acos()
}

/// Complex nullspace basis of the matrix whose rows are `rows` (bilinear:
/// `rows * v = 0`), via SVD with the given relative cutoff. Wide inputs are
/// padded with zero rows so the thin SVD still exposes all right-singular
/// vectors.
fn nullspace(rows: &[Vec<C>], n: usize, rel_cutoff: f64) -> Vec<Vec<C>> {
    if rows.is_empty() {
        // whole space
        return (0..n)
            .map(|j| {
                let mut v = vec![C::new(0.0, 0.0); n];
                v[j] = C::new(1.0, 0.0);
                v
            })
            .collect();
    }
    let m_rows = rows.len().max(n);
    let m = DMatrix::<C>::from_fn(m_rows, n, |i, j| {
        if i < rows.len() {
            rows[i][j]
        } else {
            C::new(0.0, 0.0)
        }
    });
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("svd requested v_t");
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = if smax > 0.0 { smax * rel_cutoff } else { f64::INFINITY };
    let mut out = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff {
            let row = v_t.row(k);
            // rows of V^H are conjugated basis vectors of V; A v = 0 needs
            // the v columns themselves
            out.push(row.iter().map(|c| c.conj()).collect());
        }
    }
    out
}

/// Extract certified relations from a direction set: nullspace vectors whose
/// worst bilinear residual against all directions stays below `tol`.
pub fn certified_relations(dirs: &[ConeDirection], n: usize, tol: f64) -> Vec<Relation> {
    if dirs.is_empty() {
        return Vec::new();
    }
    let rows: Vec<Vec<C>> = dirs.iter().map(|d| d.dir.0.clone()).collect();
    let mut rels = Vec::new();
    for cand in nullspace(&rows, n, 1e-7) {
        let ell = Tangent(cand);
        let ell = match canonicalize_direction(&ell) {
            Some(e) => e,
            None => continue,
        };
        let residual = dirs.iter().map(|d| ell.dot_b(&d.dir).norm()).fold(0.0_f64, f64::max);
        if residual <= tol {
            rels.push(Relation { coeffs: ell.0, residual });
        }
    }
    rels
}

/// Hermitian-ONB of the subspace annihilated by the given relations.
pub fn relation_nullspace_basis(relations: &[Relation], n: usize) -> Vec<Tangent> {
    let rows: Vec<Vec<C>> = relations.iter().map(|r| r.coeffs.clone()).collect();
    let raw = nullspace(&rows, n, 1e-9);
    // orthonormalize (modified Gram-Schmidt)
    let mut basis: Vec<Tangent> = Vec::new();
    for v in raw {
        let mut v = Tangent(v);
        for b in &basis {
            let c = v.dot_h(b);
            v = v.add(&b.scale(-c));
        }
        if let Some(u) = v.normalized() {
            if v.norm() > 1e-10 {
                basis.push(u);
            }
        }
    }
    basis
}

/// One piece of an analytic set model.
#[derive(Clone, Debug)]
pub enum PieceGeom {
    /// An isolated point (zero-dimensional stratum; its tangent cone is {0}).
    IsolatedPoint { at: Point },
    /// Affine-linear: `base + span(C-basis)`.
    Linear { base: Point, span: Vec<Tangent> },
    /// Holomorphic chart from a model polydisc; tangent spaces come from the
    /// derivative columns.
    Chart { map: Vec<Expr>, model: Polydisc },
}

#[derive(Clone, Debug)]
pub struct SetPiece {
    pub label: String,
    pub geom: PieceGeom,
}

impl SetPiece {
    pub fn point(label: &str, at: Point) -> Self {
        SetPiece { label: label.to_string(), geom: PieceGeom::IsolatedPoint { at } }
    }

    /// Nearest point of the piece to `p` (exact for points and linear
    /// pieces).
    pub fn nearest_point(&self, p: &Point) -> Point {
        match &self.geom {
            PieceGeom::IsolatedPoint { at } => at.clone(),
            PieceGeom::Linear { base, span } => {
                let d = p.sub(base);
                let mut proj = Tangent::zero(p.dim());
                for b in span {
                    let c = d.dot_h(b);
                    proj = proj.add(&b.scale(c));
                }
                base.add_scaled(&proj, C::new(1.0, 0.0))
            }
            PieceGeom::Chart { .. } => p.clone(),
        }
    }

    pub fn linear(label: &str, base: Point, span: Vec<Tangent>) -> Self {
        let mut ortho: Vec<Tangent> = Vec::new();
        for v in span {
            let mut v = v;
            for b in &ortho {
                let c = v.dot_h(b);
                v = v.add(&b.scale(-c));
            }
            if let Some(u) = v.normalized() {
                ortho.push(u);
            }
        }
        assert!(!ortho.is_empty(), "linear piece must have a nonzero span");
        SetPiece { label: label.to_string(), geom: PieceGeom::Linear { base, span: ortho } }
    }

    pub fn complex_dim(&self) -> usize {
        match &self.geom {
            PieceGeom::IsolatedPoint { .. } => 0,
            PieceGeom::Linear { span, .. } => span.len(),
            PieceGeom::Chart { model, .. } => model.dim(),
        }
    }

    /// Euclidean distance from `p` to the piece (affine distance for linear
    /// pieces; sampled + refined for charts).
    pub fn distance(&self, p: &Point) -> f64 {
        match &self.geom {
            PieceGeom::IsolatedPoint { at } => at.dist(p),
            PieceGeom::Linear { base, span } => {
                let d = p.sub(base);
                let mut residual = d.clone();
                for b in span {
                    let c = residual.dot_h(b);
                    residual = residual.add(&b.scale(-c));
                }
                residual.norm()
            }
            PieceGeom::Chart { map, model } => {
                let mut best = f64::INFINITY;
                let mut best_z: Vec<C> = model.center().0.clone();
                let grid = 8;
                let k = model.dim();
                let mut idx = vec![0usize; 2 * k];
                loop {
                    let mut z = Vec::with_capacity(k);
                    for j in 0..k {
                        let re = model.center().0[j].re
                            + model.radii()[j] * (idx[2 * j] as f64 / (grid - 1) as f64 * 2.0 - 1.0) * 0.95;
                        let im = model.center().0[j].im
                            + model.radii()[j] * (idx[2 * j + 1] as f64 / (grid - 1) as f64 * 2.0 - 1.0) * 0.95;
                        z.push(C::new(re, im));
                    }
                    let q = Point::new(map.iter().map(|m| m.eval(&z)).collect());
                    let d = q.dist(p);
                    if d < best {
                        best = d;
                        best_z = z;
                    }
                    // odometer
                    let mut carry = true;
                    for digit in idx.iter_mut() {
                        if carry {
                            *digit += 1;
                            if *digit == grid {
                                *digit = 0;
                            } else {
                                carry = false;
                            }
                        }
                    }
                    if carry {
                        break;
                    }
                }
                // Gauss-Newton refinement on |map(z) - p|^2
                let mut z = best_z;
                for _ in 0..40 {
                    let q = Point::new(map.iter().map(|m| m.eval(&z)).collect());
                    let r = q.sub(p);
                    let jac = DMatrix::<C>::from_fn(map.len(), k, |i, j| map[i].partial(j).eval(&z));
                    let jh = jac.adjoint();
                    let normal = &jh * &jac;
                    let rhs = jh * DMatrix::<C>::from_fn(map.len(), 1, |i, _| r.0[i]);
                    let step = match normal.lu().solve(&rhs) {
                        Some(s) => s,
                        None => break,
                    };
                    for j in 0..k {
                        z[j] -= step[(j, 0)];
                    }
                    let qn = Point::new(map.iter().map(|m| m.eval(&z)).collect());
                    let dn = qn.dist(p);
                    if dn >= best {
                        break;
                    }
                    best = dn;
                }
                best
            }
        }
    }

    /// Tangent-space ONB at a parameter/nearby point of the piece.
    pub fn tangent_basis_at(&self, p: &Point) -> Vec<Tangent> {
        match &self.geom {
            PieceGeom::IsolatedPoint { .. } => Vec::new(),
            PieceGeom::Linear { span, .. } => span.clone(),
            PieceGeom::Chart { map, model } => {
                // use the nearest-parameter derivative columns
                let k = model.dim();
                let z = model.center().0.clone();
                let mut zbest = z;
                let mut dbest = f64::INFINITY;
                let mut rng = ChaCha12Rng::seed_from_u64(0x5eed);
                for _ in 0..400 {
                    let cand: Vec<C> = (0..k)
                        .map(|j| {
                            model.center().0[j]
                                + C::new(
                                    rng.gen_range(-1.0..1.0) * model.radii()[j] * 0.95,
                                    rng.gen_range(-1.0..1.0) * model.radii()[j] * 0.95,
                                )
                        })
                        .collect();
                    let q = Point::new(map.iter().map(|m| m.eval(&cand)).collect());
                    let d = q.dist(p);
                    if d < dbest {
                        dbest = d;
                        zbest = cand;
                    }
                }
                let cols: Vec<Tangent> = (0..k)
                    .map(|j| Tangent(map.iter().map(|m| m.partial(j).eval(&zbest)).collect()))
                    .collect();
                let mut ortho: Vec<Tangent> = Vec::new();
                for v in cols {
                    let mut v = v;
                    for b in &ortho {
                        let c = v.dot_h(b);
                        v = v.add(&b.scale(-c));
                    }
                    if let Some(u) = v.normalized() {
                        ortho.push(u);
                    }
                }
                ortho
            }
        }
    }

    /// Sample a regular point of the piece at distance ~`scale` from `p`.
    pub(crate) fn sample_near(&self, p: &Point, scale: f64, rng: &mut ChaCha12Rng) -> Option<Point> {
        match &self.geom {
            PieceGeom::IsolatedPoint { .. } => None,
            PieceGeom::Linear { base, span } => {
                let offset = p.sub(base);
                let mut in_plane = Tangent::zero(p.dim());
                for b in span {
                    let c = offset.dot_h(b);
                    in_plane = in_plane.add(&b.scale(c));
                }
                // random in-plane step of length `scale`
                let mut step = Tangent::zero(p.dim());
                for b in span {
                    let g = C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    step = step.add(&b.scale(g));
                }
                let step = step.normalized()?.scale(C::new(scale, 0.0));
                let q = base.add_scaled(&in_plane.add(&step), C::new(1.0, 0.0));
                Some(q)
            }
            PieceGeom::Chart { .. } => None,
        }
    }
}

/// Union-of-pieces model of an analytic set.
#[derive(Clone, Debug)]
pub struct AnalyticSetModel {
    pieces: Vec<SetPiece>,
}

impl AnalyticSetModel {
    pub fn new(pieces: Vec<SetPiece>) -> Self {
        AnalyticSetModel { pieces }
    }

    pub fn empty() -> Self {
        AnalyticSetModel { pieces: Vec::new() }
    }

    /// Validate codimension >= 2 in ambient dimension `n` (singular sets of
    /// foliations by curves).
    pub fn validate_as_singular_set(&self, n: usize) -> Result<(), VarietyError> {
        for p in &self.pieces {
            if p.complex_dim() + 2 > n {
                return Err(VarietyError::BadPiece(format!(
                    "piece {} has dimension {} but codimension >= 2 is required in C^{}",
                    p.label,
                    p.complex_dim(),
                    n
                )));
            }
        }
        Ok(())
    }

    pub fn pieces(&self) -> &[SetPiece] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn distance(&self, p: &Point) -> f64 {
        self.pieces.iter().map(|x| x.distance(p)).fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        !self.pieces.is_empty() && self.distance(p) <= tol
    }

    pub fn pieces_through(&self, p: &Point, tol: f64) -> Vec<&SetPiece> {
        self.pieces.iter().filter(|x| x.distance(p) <= tol).collect()
    }

    /// Parse a piece literal: `linear base=(0,0,0) span=(0,1,0) span=(0,0,1)`.
    pub fn parse_piece(src: &str, label: &str) -> Result<SetPiece, VarietyError> {
        let src = src.trim();
        let rest = src
            .strip_prefix("linear")
            .ok_or_else(|| VarietyError::BadPiece(format!("unsupported piece literal: {src}")))?;
        let mut base: Option<Point> = None;
        let mut span: Vec<Tangent> = Vec::new();
        for part in rest.split_whitespace() {
            if let Some(v) = part.strip_prefix("base=") {
                let coords = crate::expr::parse_tuple(v)
                    .map_err(|e| VarietyError::BadPiece(format!("bad base tuple: {e}")))?;
                base = Some(Point::new(coords));
            } else if let Some(v) = part.strip_prefix("span=") {
                let coords = crate::expr::parse_tuple(v)
                    .map_err(|e| VarietyError::BadPiece(format!("bad span tuple: {e}")))?;
                span.push(Tangent(coords));
            } else {
                return Err(VarietyError::BadPiece(format!("unknown key in piece literal: {part}")));
            }
        }
        let base = base.ok_or_else(|| VarietyError::BadPiece("missing base=".into()))?;
        if span.is_empty() {
            return Err(VarietyError::BadPiece("missing span=".into()));
        }
        Ok(SetPiece::linear(label, base, span))
    }
}

/// Numerically found zero set of the field.
#[derive(Clone, Debug)]
pub struct SingularLocus {
    pub points: Vec<Point>,
    pub dropped_seeds: usize,
}

/// Newton refinement of grid seeds where `||X||` is locally minimal.
pub fn singular_locus(
    field: &PolyVectorField,
    grid_density: usize,
) -> Result<SingularLocus, VarietyError> {
    if grid_density < 2 {
        return Err(VarietyError::GridTooCoarse);
    }
    let n = field.dim();
    let dom = field.domain();
    let dims = 2 * n;
    let total = grid_density.pow(dims as u32);
    let coord = |step: usize| -> f64 { (step as f64 / (grid_density - 1) as f64) * 2.0 - 1.0 };
    // grid values of ||X||^2
    let mut values = vec![0.0f64; total];
    let mut points: Vec<Point> = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let mut z = Vec::with_capacity(n);
        for j in 0..n {
            let a = rem % grid_density;
            rem /= grid_density;
            let b = rem % grid_density;
            rem /= grid_density;
            let re = dom.center().0[j].re + 0.95 * dom.radii()[j] * coord(a);
            let im = dom.center().0[j].im + 0.95 * dom.radii()[j] * coord(b);
            z.push(C::new(re, im));
        }
        let p = Point::new(z);
        // the square re/im grid pokes past the coordinate discs at corners
        if !dom.contains_closed(&p, 0.0) {
            values[flat] = f64::INFINITY;
            points.push(p);
            continue;
        }
        let t = field.eval(&p);
        values[flat] = t.norm() * t.norm();
        points.push(p);
    }
    // local minima among axis neighbors
    let mut seeds: Vec<usize> = Vec::new();
    let strides: Vec<usize> = (0..dims).map(|d| grid_density.pow(d as u32)).collect();
    'outer: for flat in 0..total {
        if !values[flat].is_finite() {
            continue;
        }
        let mut rem = flat;
        let mut digits = Vec::with_capacity(dims);
        for _ in 0..dims {
            digits.push(rem % grid_density);
            rem /= grid_density;
        }
        for d in 0..dims {
            if digits[d] > 0 && values[flat - strides[d]] < values[flat] {
                continue 'outer;
            }
            if digits[d] + 1 < grid_density && values[flat + strides[d]] < values[flat] {
                continue 'outer;
            }
        }
        seeds.push(flat);
    }
    let mut found: Vec<Point> = Vec::new();
    let mut dropped = 0usize;
    for seed in seeds {
        match newton_zero(field, &points[seed]) {
            Some(p) if dom.contains_closed(&p, 1e-9) => {
                if found.iter().all(|q| q.dist(&p) > 1e-6) {
                    found.push(p);
                }
            }
            _ => dropped += 1,
        }
    }
    Ok(SingularLocus { points: found, dropped_seeds: dropped })
}

/// Damped pseudo-inverse Newton on X(z) = 0. The target residual sits far
/// below the acceptance threshold so that points near degenerate strata
/// (where the field vanishes to second order) still land within ~1e-9 of the
/// zero set.
fn newton_zero(field: &PolyVectorField, start: &Point) -> Option<Point> {
    let n = field.dim();
    let mut p = start.clone();
    let mut res = field.eval(&p).norm();
    for _ in 0..300 {
        if res <= 1e-18 {
            break;
        }
        let jac = field.jacobian(&p).matrix;
        let f = DMatrix::<C>::from_fn(n, 1, |i, _| field.eval(&p).0[i]);
        let svd = jac.svd(true, true);
        let step = svd.solve(&f, 1e-12).ok()?;
        let mut damping = 1.0f64;
        let mut improved = false;
        for _ in 0..8 {
            let cand = Point::new(
                (0..n).map(|j| p.0[j] - step[(j, 0)] * C::new(damping, 0.0)).collect(),
            );
            let r = field.eval(&cand).norm();
            if r < res {
                p = cand;
                res = r;
                improved = true;
                break;
            }
            damping *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if res <= 1e-10 {
        Some(p)
    } else {
        None
    }
}

/// Whitney-style tangent cone of the set at `p`: exact tangent space at
/// regular points of a single piece, union of per-piece limits at singular
/// points.
pub fn tangent_cone_of_set(
    e_model: &AnalyticSetModel,
    p: &Point,
    scales: usize,
    samples_per_scale: usize,
    seed: u64,
) -> Result<ConeSet, VarietyError> {
    let d = e_model.distance(p);
    if d > ON_SET_TOL {
        return Err(VarietyError::NotOnSet(d));
    }
    let through = e_model.pieces_through(p, ON_SET_TOL);
    let n = p.dim();
    if through.len() == 1 {
        // regular point of a single piece: exact tangent space
        let basis = through[0].tangent_basis_at(p);
        return Ok(exact_span_cone(&basis, n));
    }
    // singular point: union over pieces of sampled tangent-space limits
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut dirs: Vec<ConeDirection> = Vec::new();
    let base_scale = 0.05;
    for piece in &through {
        for k in 0..scales {
            let scale = base_scale * 0.5f64.powi(k as i32);
            for _ in 0..samples_per_scale.max(1) {
                let q = match piece.sample_near(p, scale, &mut rng) {
                    Some(q) => q,
                    None => continue,
                };
                let basis = piece.tangent_basis_at(&q);
                for b in &basis {
                    if let Some(cd) = canonicalize_direction(b) {
                        dirs.push(ConeDirection { dir: cd, scale: Some(scale) });
                    }
                }
                if basis.len() > 1 {
                    // random in-space combinations to populate the sphere
                    for _ in 0..4 {
                        let mut v = Tangent::zero(n);
                        for b in &basis {
                            let g = C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                            v = v.add(&b.scale(g));
                        }
                        if let Some(cd) = canonicalize_direction(&v) {
                            dirs.push(ConeDirection { dir: cd, scale: Some(scale) });
                        }
                    }
                }
            }
        }
    }
    let dirs = dedupe_directions(dirs);
    let relations = certified_relations(&dirs, n, SET_RELATION_TOL);
    // all pieces sharing one span => that span is the cone
    let spans: Vec<Vec<Tangent>> = through.iter().map(|pc| pc.tangent_basis_at(p)).collect();
    let same_span = spans.windows(2).all(|w| {
        w[0].len() == w[1].len() && span_min_angle(&w[0], &w[1]) < 1e-9 && {
            // min principal angle near 0 is necessary but not sufficient;
            // compare both ways via projections
            w[0].iter().all(|v| angle_to_span(v, &w[1]) < 1e-9)
                && w[1].iter().all(|v| angle_to_span(v, &w[0]) < 1e-9)
        }
    });
    let span_hint = if same_span { Some(spans[0].clone()) } else { None };
    Ok(ConeSet { directions: dirs, relations, span_hint, skipped_scales: Vec::new() })
}

fn exact_span_cone(basis: &[Tangent], n: usize) -> ConeSet {
    let mut dirs: Vec<ConeDirection> = Vec::new();
    for b in basis {
        if let Some(cd) = canonicalize_direction(b) {
            dirs.push(ConeDirection { dir: cd, scale: None });
        }
    }
    if basis.len() > 1 {
        let mut rng = ChaCha12Rng::seed_from_u64(0xc04e);
        for _ in 0..24 {
            let mut v = Tangent::zero(n);
            for b in basis {
                let g = C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                v = v.add(&b.scale(g));
            }
            if let Some(cd) = canonicalize_direction(&v) {
                dirs.push(ConeDirection { dir: cd, scale: None });
            }
        }
    }
    let dirs = dedupe_directions(dirs);
    let relations = certified_relations(&dirs, n, SET_RELATION_TOL);
    ConeSet { directions: dirs, relations, span_hint: Some(basis.to_vec()), skipped_scales: Vec::new() }
}

/// Decide F-invariance of the hypersurface `{f = 0}`.
///
/// Exact polynomial division is used when `f` is a monomial (in particular a
/// coordinate function); otherwise the derivative `X(f)` is tested for
/// vanishing at sampled points of the zero set. A failed sampling run is
/// reported as inconclusive, distinct from `false`.
pub fn is_invariant_hypersurface(
    f: &Poly,
    field: &PolyVectorField,
) -> Result<bool, VarietyError> {
    if f.is_zero() {
        return Err(VarietyError::ZeroPolynomial);
    }
    let n = field.dim();
    assert_eq!(f.nvars(), n);
    // X(f) = sum_i X_i df/dx_i
    let mut xf = Expr::poly(Poly::zero(n));
    for (i, comp) in field.components().iter().enumerate() {
        xf = xf.add(comp.clone().mul(Expr::poly(f.partial(i))));
    }
    if xf.is_zero() {
        return Ok(true);
    }
    if let Some((exps, _)) = f.as_monomial() {
        if let Some(p) = xf.as_poly() {
            return Ok(p.divisible_by_monomial(exps));
        }
    }
    // sampling route: 200 regular points of {f = 0}
    let wanted = 200usize;
    let mut found = 0usize;
    let mut ok = true;
    let mut rng = ChaCha12Rng::seed_from_u64(0xf0f0);
    let dom = field.domain();
    // pick a variable f actually depends on
    let dep: Vec<usize> = (0..n).filter(|&j| !f.partial(j).is_zero()).collect();
    if dep.is_empty() {
        // nonzero constant: empty zero set
        return Err(VarietyError::Inconclusive { found: 0, wanted });
    }
    let mut attempts = 0usize;
    while found < wanted && attempts < wanted * 60 {
        attempts += 1;
        let j = dep[attempts % dep.len()];
        // random values for the other coordinates
        let mut z: Vec<C> = (0..n)
            .map(|k| {
                dom.center().0[k]
                    + C::new(
                        rng.gen_range(-0.8..0.8) * dom.radii()[k],
                        rng.gen_range(-0.8..0.8) * dom.radii()[k],
                    )
            })
            .collect();
        // univariate polynomial in z_j
        let uni = restrict_to_var(f, &z, j);
        let roots = durand_kerner(&uni, &mut rng);
        for r in roots {
            if (r - dom.center().0[j]).norm() >= dom.radii()[j] {
                continue;
            }
            z[j] = r;
            // accept regular-ish points only
            let grad_norm: f64 =
                (0..n).map(|k| f.partial(k).eval(&z).norm_sqr()).sum::<f64>().sqrt();
            if grad_norm < 1e-8 {
                continue;
            }
            if f.eval(&z).norm() > 1e-9 {
                continue;
            }
            found += 1;
            if xf.eval(&z).norm() > 1e-9 {
                ok = false;
            }
            if found >= wanted {
                break;
            }
        }
    }
    if found < wanted {
        return Err(VarietyError::Inconclusive { found, wanted });
    }
    Ok(ok)
}

/// Coefficients (ascending) of `f` restricted to variable `j`, the others
/// frozen at `z`.
fn restrict_to_var(f: &Poly, z: &[C], j: usize) -> Vec<C> {
    let mut deg = 0u32;
    for (exps, _) in f.terms() {
        deg = deg.max(exps[j]);
    }
    let mut coeffs = vec![C::new(0.0, 0.0); deg as usize + 1];
    for (exps, c) in f.terms() {
        let mut t = c;
        for (k, &e) in exps.iter().enumerate() {
            if k != j && e > 0 {
                t *= z[k].powu(e);
            }
        }
        coeffs[exps[j] as usize] += t;
    }
    coeffs
}

/// All roots of a univariate complex polynomial (ascending coefficients) via
/// Durand-Kerner iteration.
fn durand_kerner(coeffs: &[C], rng: &mut ChaCha12Rng) -> Vec<C> {
    // trim leading zeros
    let mut c: Vec<C> = coeffs.to_vec();
    while c.len() > 1 && c.last().unwrap().norm() < 1e-300 {
        c.pop();
    }
    let deg = c.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let monic: Vec<C> = c.iter().map(|a| a / lead).collect();
    let eval = |z: C| -> C {
        let mut acc = C::new(0.0, 0.0);
        for a in monic.iter().rev() {
            acc = acc * z + a;
        }
        acc
    };
    let mut roots: Vec<C> = (0..deg)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * (k as f64 + rng.gen_range(0.0..0.3)) / deg as f64;
            C::new(0.4 + 0.1 * rng.gen_range(0.0..1.0), 0.0) * C::new(th.cos(), th.sin())
        })
        .collect();
    for _ in 0..200 {
        let mut delta: f64 = 0.0;
        for i in 0..deg {
            let mut denom = C::new(1.0, 0.0);
            for k in 0..deg {
                if k != i {
                    denom *= roots[i] - roots[k];
                }
            }
            if denom.norm() < 1e-300 {
                continue;
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-13 {
            break;
        }
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn axis(n: usize, j: usize) -> Tangent {
        Tangent::unit(n, j)
    }

    fn union_of_axes_yz() -> AnalyticSetModel {
        AnalyticSetModel::new(vec![
            SetPiece::linear("y-axis", Point::origin(3), vec![axis(3, 1)]),
            SetPiece::linear("z-axis", Point::origin(3), vec![axis(3, 2)]),
        ])
    }

    #[test]
    fn singular_locus_of_linear_field_is_origin() {
        let f = PolyVectorField::parse("x ; 2*y", Polydisc::unit_bidisc()).unwrap();
        let locus = singular_locus(&f, 5).unwrap();
        assert!(!locus.points.is_empty());
        for p in &locus.points {
            assert!(p.dist(&Point::origin(2)) < 1e-8);
        }
    }

    #[test]
    fn singular_locus_of_e15_shape_lies_on_axis_union() {
        let f = PolyVectorField::parse("x ; z*y ; z*y", Polydisc::unit(3)).unwrap();
        let e = union_of_axes_yz();
        let locus = singular_locus(&f, 4).unwrap();
        assert!(!locus.points.is_empty());
        for p in &locus.points {
            assert!(e.distance(p) < 1e-7, "found point off the model: {p:?}");
        }
    }

    #[test]
    fn singular_locus_of_constant_field_is_empty() {
        let f = PolyVectorField::parse("1 ; 1", Polydisc::unit_bidisc()).unwrap();
        let locus = singular_locus(&f, 4).unwrap();
        assert!(locus.points.is_empty());
    }

    #[test]
    fn cone_of_axis_union_at_origin() {
        let e = union_of_axes_yz();
        let cone = tangent_cone_of_set(&e, &Point::origin(3), 6, 4, 1).unwrap();
        // directions should be exactly {e2, e3} after canonicalization
        assert_eq!(cone.directions.len(), 2);
        let want = [axis(3, 1), axis(3, 2)];
        for w in &want {
            assert!(cone.directions.iter().any(|d| line_angle(&d.dir, w) < 1e-9));
        }
        // union of two lines, not a subspace
        assert!(cone.span_hint.is_none());
        // common annihilator: e1
        assert!(cone
            .relations
            .iter()
            .any(|r| line_angle(&Tangent(r.coeffs.clone()), &axis(3, 0)) < 1e-9));
        assert!(cone.max_relation_residual() <= SET_RELATION_TOL);
    }

    #[test]
    fn cone_of_line_is_exact_at_regular_points() {
        let e = AnalyticSetModel::new(vec![SetPiece::linear(
            "z-axis",
            Point::origin(3),
            vec![axis(3, 2)],
        )]);
        let p = Point::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(0.4, -0.2)]);
        let cone = tangent_cone_of_set(&e, &p, 6, 4, 1).unwrap();
        assert_eq!(cone.directions.len(), 1);
        assert!(line_angle(&cone.directions[0].dir, &axis(3, 2)) < 1e-12);
        let span = cone.span_hint.expect("regular point has exact span");
        assert_eq!(span.len(), 1);
    }

    #[test]
    fn cone_rejects_points_off_the_set() {
        let e = union_of_axes_yz();
        let p = Point::from_re(&[0.3, 0.3, 0.3]);
        assert!(matches!(
            tangent_cone_of_set(&e, &p, 4, 4, 1),
            Err(VarietyError::NotOnSet(_))
        ));
    }

    #[test]
    fn canonicalization_is_phase_invariant() {
        let v = Tangent(vec![c(0.3, -0.4), c(0.1, 0.9), c(0.0, 0.0)]);
        let a = canonicalize_direction(&v).unwrap();
        for th in [0.3f64, 1.2, -2.4] {
            let w = v.scale(C::new(th.cos(), th.sin()));
            let b = canonicalize_direction(&w).unwrap();
            for j in 0..3 {
                assert!((a.0[j] - b.0[j]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn invariance_via_exact_division() {
        // example 1.16 shape: X = x d/dx + z y d/dy, f = x
        let f316 = PolyVectorField::parse("x ; z*y ; 0", Polydisc::unit(3)).unwrap();
        let fx = Poly::var(3, 0);
        assert!(is_invariant_hypersurface(&fx, &f316).unwrap());

        // example 1.15 shape: X = z d/dx + x y d/dy + x y d/dz, f = y
        let f315 = PolyVectorField::parse("z ; x*y ; x*y", Polydisc::unit(3)).unwrap();
        let fy = Poly::var(3, 1);
        assert!(is_invariant_hypersurface(&fy, &f315).unwrap());
    }

    #[test]
    fn non_invariant_hypersurface_detected_by_sampling() {
        let f = PolyVectorField::parse("x ; 2*y", Polydisc::unit_bidisc()).unwrap();
        let fxy = parse_expr("x - y", 2).unwrap().as_poly().unwrap().clone();
        assert!(!is_invariant_hypersurface(&fxy, &f).unwrap());
    }

    /// Independent oracle: multivariate division of g by a single divisor f
    /// (lex order), returning true iff remainder is zero.
    fn division_oracle_divisible(g: &Poly, f: &Poly) -> bool {
        let n = g.nvars();
        let lead = |p: &Poly| -> Option<(Vec<u32>, C)> {
            p.terms().map(|(e, c)| (e.to_vec(), c)).max_by(|a, b| a.0.cmp(&b.0))
        };
        let (lf, cf) = match lead(f) {
            Some(x) => x,
            None => return false,
        };
        let mut rem = g.clone();
        for _ in 0..10_000 {
            if rem.is_zero() {
                return true;
            }
            let (lr, cr) = lead(&rem).unwrap();
            let divides = lr.iter().zip(&lf).all(|(a, b)| a >= b);
            if !divides {
                return false;
            }
            let q_exp: Vec<u32> = lr.iter().zip(&lf).map(|(a, b)| a - b).collect();
            let q = Poly::monomial(n, &q_exp, cr / cf);
            rem = rem.sub(&q.mul(f));
        }
        false
    }

    #[test]
    fn sampling_verdicts_match_division_oracle() {
        let dom = Polydisc::unit_bidisc();
        let x_field = PolyVectorField::parse("x ; 2*y", dom.clone()).unwrap();
        let cases = [
            ("x - y", false),
            ("x*y", true), // X(xy) = xy + 2xy = 3xy divisible
            ("x^2", true), // X(x^2) = 2x^2
        ];
        for (src, _want) in cases {
            let f = parse_expr(src, 2).unwrap().as_poly().unwrap().clone();
            let mut xf = Poly::zero(2);
            for (i, comp) in x_field.components().iter().enumerate() {
                xf = xf.add(&comp.as_poly().unwrap().mul(&f.partial(i)));
            }
            let oracle = division_oracle_divisible(&xf, &f);
            let got = is_invariant_hypersurface(&f, &x_field).unwrap();
            assert_eq!(got, oracle, "disagreement for f = {src}");
        }
    }

    #[test]
    fn invariance_is_scale_invariant() {
        let field = PolyVectorField::parse("x ; z*y ; 0", Polydisc::unit(3)).unwrap();
        let f = Poly::var(3, 0);
        let scaled = f.scale(c(3.0, -2.0));
        assert_eq!(
            is_invariant_hypersurface(&f, &field).unwrap(),
            is_invariant_hypersurface(&scaled, &field).unwrap()
        );
    }

    #[test]
    fn zero_polynomial_is_rejected() {
        let field = PolyVectorField::parse("x ; y", Polydisc::unit_bidisc()).unwrap();
        assert!(matches!(
            is_invariant_hypersurface(&Poly::zero(2), &field),
            Err(VarietyError::ZeroPolynomial)
        ));
    }

    #[test]
    fn piece_literal_parses() {
        let piece = AnalyticSetModel::parse_piece("linear base=(0,0,0) span=(0,1,0)", "p0").unwrap();
        assert_eq!(piece.complex_dim(), 1);
        let p = Point::new(vec![c(0.0, 0.0), c(0.5, 0.1), c(0.0, 0.0)]);
        assert!(piece.distance(&p) < 1e-12);
    }
}
