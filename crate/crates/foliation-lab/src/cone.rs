//! Tangent cone of the foliation at singular points and the transversality
//! verdict.
//!
//! Directions of the cone are limits of normalized field values at
//! nonsingular points approaching the base point; the estimator samples a
//! geometric scale ladder, certifies linear relations by nullspace
//! extraction, and recognizes when the collected directions fill the unit
//! sphere of the relation-cut subspace.

use crate::field::{line_angle, Point, Polydisc, PolyVectorField, Tangent};
use crate::variety::{
    canonicalize_direction, certified_relations, dedupe_directions, relation_nullspace_basis,
    tangent_cone_of_set, AnalyticSetModel, ConeDirection, ConeSet, VarietyError,
};
use crate::expr::C;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

/// Residual threshold for relations certified on sampled foliation cones.
pub const FOLIATION_RELATION_TOL: f64 = 1e-8;
/// Coverage resolution for the span test (directions must be this dense in
/// the candidate subspace sphere).
pub const SPAN_COVERAGE_EPS: f64 = 0.05;
/// Angular tolerance at which a realized witness certifies a shared
/// direction.
pub const WITNESS_TOL: f64 = 1e-3;
/// Default angular floor for the transversal verdict.
pub const THETA_MIN_DEFAULT: f64 = 0.1;

#[derive(Debug, Error)]
pub enum ConeError {
    #[error("base point is not on the singular set: {0}")]
    NotOnSingularSet(#[from] VarietyError),
    #[error("no points of E found in the requested neighborhood")]
    EmptyESample,
    #[error("every sample landed on E at all scales")]
    DegenerateSampler,
}

/// Parameters of the cone sampler.
#[derive(Clone, Debug)]
pub struct ConeParams {
    /// Outermost sampling radius; defaults to a fraction of the distance to
    /// the domain boundary.
    pub base_scale: Option<f64>,
    /// Rungs of the geometric scale ladder `r_k = r_0 2^{-k}`.
    pub num_scales: usize,
    pub samples_per_scale: usize,
    pub seed: u64,
}

impl Default for ConeParams {
    fn default() -> Self {
        ConeParams { base_scale: None, num_scales: 21, samples_per_scale: 1600, seed: 0 }
    }
}

pub(crate) fn gaussian(rng: &mut ChaCha12Rng) -> f64 {
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    (-2.0 * u1.ln()).sqrt() * u2.cos()
}

pub(crate) fn random_unit_tangent(n: usize, rng: &mut ChaCha12Rng) -> Tangent {
    loop {
        let v = Tangent((0..n).map(|_| C::new(gaussian(rng), gaussian(rng))).collect());
        if let Some(u) = v.normalized() {
            return u;
        }
    }
}

/// Estimate the tangent cone of the foliation at `p`.
pub fn estimate_foliation_cone(
    field: &PolyVectorField,
    e_model: &AnalyticSetModel,
    p: &Point,
    params: &ConeParams,
) -> Result<ConeSet, ConeError> {
    let d = e_model.distance(p);
    if d > crate::variety::ON_SET_TOL {
        return Err(ConeError::NotOnSingularSet(VarietyError::NotOnSet(d)));
    }
    let n = field.dim();
    let boundary_gap = field.domain().dist_to_boundary(p).max(1e-6);
    let r0 = params
        .base_scale
        .unwrap_or(0.1 * field.domain().min_radius())
        .min(0.45 * boundary_gap);
    let mut rng = ChaCha12Rng::seed_from_u64(params.seed);
    rng.set_stream(0x10_c0);
    let mut dirs: Vec<ConeDirection> = Vec::new();
    let mut skipped_scales = Vec::new();
    let push_sample = |q: &Point, scale: f64, dirs: &mut Vec<ConeDirection>| -> bool {
        if !field.domain().contains(q) {
            return false;
        }
        let x = field.eval(q);
        if x.norm() <= 1e-250 {
            return false; // sample landed on E
        }
        if let Some(cd) = canonicalize_direction(&x) {
            dirs.push(ConeDirection { dir: cd, scale: Some(scale) });
            true
        } else {
            false
        }
    };
    // isotropic samples per rung of the scale ladder
    for k in 0..params.num_scales {
        let scale = r0 * 0.5f64.powi(k as i32);
        let mut used = 0usize;
        for _ in 0..params.samples_per_scale {
            let u = random_unit_tangent(n, &mut rng);
            let q = p.add_scaled(&u, C::new(scale, 0.0));
            if push_sample(&q, scale, &mut dirs) {
                used += 1;
            }
        }
        if used == 0 {
            skipped_scales.push(scale);
        }
    }
    // rung-mixture samples: every coordinate draws its own ladder rung, so
    // approach sequences whose coordinates vanish at different orders (the
    // square-root-type sequences of degenerate singular points) are sampled
    // too
    let mixture = 3 * params.num_scales * params.samples_per_scale;
    for _ in 0..mixture {
        let mut offset = Vec::with_capacity(n);
        let mut eff: f64 = 0.0;
        for _ in 0..n {
            let rung = rng.gen_range(0..params.num_scales as i32);
            let mag = r0 * 0.5f64.powi(rung);
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            let w = rng.gen_range(0.0f64..1.0).sqrt() * mag;
            offset.push(C::new(w * th.cos(), w * th.sin()));
            eff = eff.max(w);
        }
        let q = Point::new(p.0.iter().zip(&offset).map(|(a, b)| a + b).collect());
        push_sample(&q, eff.max(1e-300), &mut dirs);
    }
    if dirs.is_empty() {
        return Err(ConeError::DegenerateSampler);
    }
    let dirs = dedupe_directions(dirs);
    let relations = certified_relations(&dirs, n, FOLIATION_RELATION_TOL);
    let basis = relation_nullspace_basis(&relations, n);
    let span_hint = if span_coverage(&dirs, &basis, SPAN_COVERAGE_EPS, params.seed ^ 0x5ee) {
        Some(basis)
    } else {
        None
    };
    Ok(ConeSet { directions: dirs, relations, span_hint, skipped_scales })
}

/// Coverage test: collected directions are `eps`-dense in the unit sphere of
/// the subspace spanned by `basis` (modulo phase), probed on a deterministic
/// test lattice.
pub fn span_coverage(dirs: &[ConeDirection], basis: &[Tangent], eps: f64, seed: u64) -> bool {
    if basis.is_empty() || dirs.is_empty() {
        return false;
    }
    let cos_eps2 = eps.cos().powi(2);
    // dirs come out of the dedup sorted by the real part of the leading
    // component; lines within `eps` differ there by at most ~1.5 eps, so a
    // window scan around the probe's own leading magnitude suffices
    let window = 1.6 * eps;
    let covered = |w: &Tangent| {
        let w = match canonicalize_direction(w) {
            Some(u) => u,
            None => return true,
        };
        let c0 = w.0[0].re;
        let lo = dirs.partition_point(|d| d.dir.0[0].re < c0 - window);
        dirs[lo..]
            .iter()
            .take_while(|d| d.dir.0[0].re <= c0 + window)
            .any(|d| d.dir.dot_h(&w).norm_sqr() >= cos_eps2)
    };
    if basis.len() == 1 {
        return covered(&basis[0]);
    }
    if basis.len() == 2 {
        // The projective line of a complex plane is a round sphere with the
        // line angle as half the great-circle distance; probe it on a
        // Fibonacci lattice lifted through the (theta, phi) parameterization.
        let trials = 1200usize;
        let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
        for t in 0..trials {
            let zfrac = (2 * t + 1) as f64 / (2 * trials) as f64;
            let cos_theta = 1.0 - 2.0 * zfrac;
            let theta = cos_theta.clamp(-1.0, 1.0).acos();
            let phi = std::f64::consts::TAU * (t as f64 / golden).fract();
            let c0 = C::new((theta / 2.0).cos(), 0.0);
            let c1 = C::new(0.0, phi).exp() * (theta / 2.0).sin();
            let w = basis[0].scale(c0).add(&basis[1].scale(c1));
            if !covered(&w) {
                return false;
            }
        }
        return true;
    }
    // higher-dimensional spans: random probes
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(0xc07e);
    for _ in 0..1500usize {
        let mut w = Tangent::zero(basis[0].dim());
        for b in basis {
            let g = C::new(gaussian(&mut rng), gaussian(&mut rng));
            w = w.add(&b.scale(g));
        }
        let w = match w.normalized() {
            Some(u) => u,
            None => continue,
        };
        if !covered(&w) {
            return false;
        }
    }
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Transversal,
    NotTransversal,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Transversal => "transversal",
            Verdict::NotTransversal => "not_transversal",
            Verdict::Inconclusive => "inconclusive",
        };
        write!(f, "{s}")
    }
}

/// Realized shared direction: a point `q` of E together with a normalized
/// field direction that approaches a tangent direction of E.
#[derive(Clone, Debug)]
pub struct Witness {
    pub point: Point,
    pub direction: Tangent,
    pub angle: f64,
}

#[derive(Clone, Debug)]
pub struct TransversalityVerdict {
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub min_angle: f64,
    pub neighborhood: Polydisc,
}

/// Decide the transversality verdict at `p` by sampling `q` in a
/// neighborhood of `p` on E, comparing the foliation cone against the set
/// cone, and running a directed witness search toward every tangent
/// direction of E.
pub fn is_transversal_type(
    field: &PolyVectorField,
    e_model: &AnalyticSetModel,
    p: &Point,
    theta_min: f64,
    nbhd_radius: Option<f64>,
    seed: u64,
) -> Result<TransversalityVerdict, ConeError> {
    let d = e_model.distance(p);
    if d > crate::variety::ON_SET_TOL {
        return Err(ConeError::NotOnSingularSet(VarietyError::NotOnSet(d)));
    }
    let rho = nbhd_radius.unwrap_or(0.25 * field.domain().min_radius());
    let neighborhood = Polydisc::new(p.clone(), vec![rho; p.dim()]);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(0x7a5);

    // sample points of E in the neighborhood, always including p
    let mut samples: Vec<Point> = vec![p.clone()];
    for piece in e_model.pieces() {
        let nearest = piece.nearest_point(p);
        if nearest.dist(p) > rho {
            continue;
        }
        if samples.iter().all(|s| s.dist(&nearest) > 1e-9) && field.domain().contains(&nearest) {
            samples.push(nearest.clone());
        }
        for _ in 0..6 {
            let scale = rng.gen_range(0.05..0.8) * rho;
            if let Some(q) = piece.sample_near(&nearest, scale, &mut rng) {
                if q.dist(p) <= rho
                    && field.domain().contains(&q)
                    && samples.iter().all(|s| s.dist(&q) > 1e-9)
                {
                    samples.push(q);
                }
            }
        }
    }
    if samples.is_empty() {
        return Err(ConeError::EmptyESample);
    }

    let cone_params = ConeParams { num_scales: 12, samples_per_scale: 90, seed, base_scale: None };
    let mut min_angle = f64::INFINITY;
    let mut best_witness: Option<Witness> = None;
    for (qi, q) in samples.iter().enumerate() {
        let cone_e = tangent_cone_of_set(e_model, q, 6, 6, seed ^ (qi as u64))
            .map_err(ConeError::NotOnSingularSet)?;
        let cone_f = estimate_foliation_cone(field, e_model, q, &cone_params)?;
        min_angle = min_angle.min(cone_f.min_angle_between(&cone_e));
        // directed witness search toward each E-direction
        for (wi, w) in cone_e.directions.iter().enumerate() {
            let scan = witness_scan(field, q, &w.dir, seed ^ ((qi as u64) << 8) ^ wi as u64);
            min_angle = min_angle.min(scan.best_angle);
            if scan.found {
                let better = best_witness.as_ref().map_or(true, |b| scan.best_angle < b.angle);
                if better {
                    best_witness = Some(Witness {
                        point: q.clone(),
                        direction: scan.best_dir.clone(),
                        angle: scan.best_angle,
                    });
                }
            }
        }
    }
    let verdict = if let Some(w) = &best_witness {
        let _ = w;
        Verdict::NotTransversal
    } else if min_angle >= theta_min {
        Verdict::Transversal
    } else {
        Verdict::Inconclusive
    };
    Ok(TransversalityVerdict { verdict, witness: best_witness, min_angle, neighborhood })
}

struct WitnessScan {
    best_angle: f64,
    best_dir: Tangent,
    found: bool,
}

/// Minimize the angle between the field direction at `q + delta u` and the
/// target direction `w` over the unit sphere of offsets `u`, along a
/// shrinking scale ladder; a witness is realized when the angle drops below
/// [`WITNESS_TOL`] at the smallest scales.
fn witness_scan(field: &PolyVectorField, q: &Point, w: &Tangent, seed: u64) -> WitnessScan {
    let n = field.dim();
    let gap = field.domain().dist_to_boundary(q).max(1e-6);
    let delta0 = (0.08 * field.domain().min_radius()).min(0.4 * gap);
    let scales = 10usize;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(0x317);
    let mut best_angle = f64::INFINITY;
    let mut best_dir = Tangent::unit(n, 0);
    let mut per_scale = Vec::with_capacity(scales);
    for k in 0..scales {
        let delta = delta0 * 0.5f64.powi(k as i32);
        let objective = |v: &[f64]| -> f64 {
            let mut u = Tangent(
                (0..n).map(|j| C::new(v[2 * j], v[2 * j + 1])).collect::<Vec<C>>(),
            );
            u = match u.normalized() {
                Some(x) => x,
                None => return f64::INFINITY,
            };
            let pt = q.add_scaled(&u, C::new(delta, 0.0));
            let x = field.eval(&pt);
            if x.norm() <= 1e-250 {
                return f64::INFINITY;
            }
            line_angle(&x, w)
        };
        // coarse scan
        let mut best_v = vec![0.0f64; 2 * n];
        let mut best_here = f64::INFINITY;
        for _ in 0..128 {
            let u = random_unit_tangent(n, &mut rng);
            let v: Vec<f64> = u.0.iter().flat_map(|c| [c.re, c.im]).collect();
            let val = objective(&v);
            if val < best_here {
                best_here = val;
                best_v = v;
            }
        }
        // simplex refinement
        let (vv, val) = nelder_mead(&objective, &best_v, 0.25, 140);
        if val < best_here {
            best_here = val;
            best_v = vv;
        }
        per_scale.push(best_here);
        if best_here < best_angle {
            best_angle = best_here;
            let mut u = Tangent(
                (0..n).map(|j| C::new(best_v[2 * j], best_v[2 * j + 1])).collect::<Vec<C>>(),
            );
            if let Some(x) = u.normalized() {
                u = x;
            }
            let pt = q.add_scaled(&u, C::new(delta, 0.0));
            if let Some(cd) = canonicalize_direction(&field.eval(&pt)) {
                best_dir = cd;
            }
        }
    }
    let m = per_scale.len();
    let found = m >= 2 && per_scale[m - 1] <= WITNESS_TOL && per_scale[m - 2] <= 10.0 * WITNESS_TOL;
    WitnessScan { best_angle, best_dir, found }
}

/// Plain Nelder–Mead over R^d.
fn nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    x0: &[f64],
    scale: f64,
    iters: usize,
) -> (Vec<f64>, f64) {
    let d = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for j in 0..d {
        let mut x = x0.to_vec();
        x[j] += scale;
        let v = f(&x);
        simplex.push((x, v));
    }
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let best = simplex[0].1;
        let worst = simplex[d].1;
        if (worst - best).abs() < 1e-14 {
            break;
        }
        let centroid: Vec<f64> = (0..d)
            .map(|j| simplex[..d].iter().map(|(x, _)| x[j]).sum::<f64>() / d as f64)
            .collect();
        let xr: Vec<f64> =
            (0..d).map(|j| centroid[j] + (centroid[j] - simplex[d].0[j])).collect();
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe: Vec<f64> =
                (0..d).map(|j| centroid[j] + 2.0 * (centroid[j] - simplex[d].0[j])).collect();
            let fe = f(&xe);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let xc: Vec<f64> =
                (0..d).map(|j| centroid[j] + 0.5 * (simplex[d].0[j] - centroid[j])).collect();
            let fc = f(&xc);
            if fc < simplex[d].1 {
                simplex[d] = (xc, fc);
            } else {
                let x0c = simplex[0].0.clone();
                for k in 1..=d {
                    let xs: Vec<f64> =
                        (0..d).map(|j| x0c[j] + 0.5 * (simplex[k].0[j] - x0c[j])).collect();
                    let fs = f(&xs);
                    simplex[k] = (xs, fs);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    simplex.swap_remove(0).into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{normal_form, NormalForm, Polydisc};
    use crate::variety::SetPiece;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn origin_point_model(n: usize) -> AnalyticSetModel {
        AnalyticSetModel::new(vec![SetPiece::point("origin", Point::origin(n))])
    }

    fn e14_shape() -> (PolyVectorField, AnalyticSetModel) {
        // x d/dx + (2+z) y d/dy on the unit polydisc; E = z-axis
        let f = PolyVectorField::parse("x ; (2+z)*y ; 0", Polydisc::unit(3)).unwrap();
        let e = AnalyticSetModel::new(vec![SetPiece::linear(
            "z-axis",
            Point::origin(3),
            vec![Tangent::unit(3, 2)],
        )]);
        (f, e)
    }

    fn e15_shape() -> (PolyVectorField, AnalyticSetModel) {
        // x d/dx + zy d/dy + zy d/dz; E = y-axis + z-axis
        let f = PolyVectorField::parse("x ; z*y ; z*y", Polydisc::unit(3)).unwrap();
        let e = AnalyticSetModel::new(vec![
            SetPiece::linear("y-axis", Point::origin(3), vec![Tangent::unit(3, 1)]),
            SetPiece::linear("z-axis", Point::origin(3), vec![Tangent::unit(3, 2)]),
        ]);
        (f, e)
    }

    #[test]
    fn linearizable_cone_fills_the_plane() {
        let f = normal_form(NormalForm::Linearizable { alpha: c(0.0, 2.0) }).unwrap();
        let e = origin_point_model(2);
        let params = ConeParams { num_scales: 10, samples_per_scale: 2600, seed: 3, base_scale: None };
        let cone = estimate_foliation_cone(&f, &e, &Point::origin(2), &params).unwrap();
        assert!(cone.relations.is_empty(), "no relations expected: {:?}", cone.relations);
        let span = cone.span_hint.expect("directions should fill C^2");
        assert_eq!(span.len(), 2);
    }

    #[test]
    fn linear_z_fiber_cone_certifies_vanishing_third_component() {
        let (f, e) = e14_shape();
        let p = Point::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(0.3, 0.0)]);
        let cone =
            estimate_foliation_cone(&f, &e, &p, &ConeParams { seed: 5, ..Default::default() })
                .unwrap();
        let expected = Tangent::unit(3, 2);
        assert!(
            cone.relations.iter().any(|r| line_angle(&Tangent(r.coeffs.clone()), &expected) < 1e-6),
            "missing v3 = 0 relation: {:?}",
            cone.relations
        );
        assert!(cone.max_relation_residual() <= FOLIATION_RELATION_TOL);
        let span = cone.span_hint.expect("span <e1, e2>");
        assert_eq!(span.len(), 2);
        for b in &span {
            assert!(b.0[2].norm() < 1e-8);
        }
    }

    #[test]
    fn shared_component_cone_certifies_equal_components() {
        let (f, e) = e15_shape();
        let cone = estimate_foliation_cone(
            &f,
            &e,
            &Point::origin(3),
            &ConeParams { seed: 7, ..Default::default() },
        )
        .unwrap();
        // v2 = v3, i.e. relation (0, 1, -1)/sqrt(2)
        let expected = Tangent(vec![c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)]);
        assert!(
            cone.relations.iter().any(|r| line_angle(&Tangent(r.coeffs.clone()), &expected) < 1e-6),
            "missing v2 = v3 relation: {:?}",
            cone.relations
        );
        let span = cone.span_hint.expect("span <(1,0,0),(0,1,1)>");
        assert_eq!(span.len(), 2);
        // the span contains (1,0,0) and (0,1,1)/sqrt 2
        let v1 = Tangent(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let v2 = Tangent(vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(crate::variety::angle_to_span(&v1, &span) < 1e-7);
        assert!(crate::variety::angle_to_span(&v2, &span) < 1e-7);
    }

    #[test]
    fn scale_invariance_of_canonical_directions() {
        let v = Tangent(vec![c(0.2, 0.5), c(-0.3, 0.1), c(0.0, 0.7)]);
        let a = canonicalize_direction(&v).unwrap();
        let b = canonicalize_direction(&v.scale(c(-3.7, 2.2))).unwrap();
        for j in 0..3 {
            assert!((a.0[j] - b.0[j]).norm() < 1e-12);
        }
    }

    #[test]
    fn transversal_verdict_for_fibered_linear_field() {
        let (f, e) = e14_shape();
        let p = Point::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(0.4, 0.0)]);
        let v = is_transversal_type(&f, &e, &p, THETA_MIN_DEFAULT, None, 11).unwrap();
        assert_eq!(v.verdict, Verdict::Transversal);
        assert!(v.min_angle > 1.5, "angle should be ~pi/2, got {}", v.min_angle);
    }

    #[test]
    fn transversal_verdict_for_shared_component_field() {
        let (f, e) = e15_shape();
        for p in [
            Point::new(vec![c(0.0, 0.0), c(0.4, 0.0), c(0.0, 0.0)]),
            Point::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(0.4, 0.0)]),
            Point::origin(3),
        ] {
            let v = is_transversal_type(&f, &e, &p, THETA_MIN_DEFAULT, Some(0.15), 13).unwrap();
            assert_eq!(v.verdict, Verdict::Transversal, "at {p:?}");
            // exact floor is pi/4
            assert!(v.min_angle > 0.6, "angle {} at {:?}", v.min_angle, p);
        }
    }

    #[test]
    fn witness_found_on_degenerate_axis() {
        // x d/dx + zy d/dy: not transversal along the y-axis, witness (0,1,0)
        let f = PolyVectorField::parse("x ; z*y ; 0", Polydisc::unit(3)).unwrap();
        let e = AnalyticSetModel::new(vec![
            SetPiece::linear("y-axis", Point::origin(3), vec![Tangent::unit(3, 1)]),
            SetPiece::linear("z-axis", Point::origin(3), vec![Tangent::unit(3, 2)]),
        ]);
        let p = Point::new(vec![c(0.0, 0.0), c(0.45, 0.0), c(0.0, 0.0)]);
        let v = is_transversal_type(&f, &e, &p, THETA_MIN_DEFAULT, Some(0.2), 17).unwrap();
        assert_eq!(v.verdict, Verdict::NotTransversal);
        let w = v.witness.expect("witness required");
        assert!(line_angle(&w.direction, &Tangent::unit(3, 1)) <= WITNESS_TOL);
        // and transversal on the z-axis away from 0
        let q = Point::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
        let v = is_transversal_type(&f, &e, &q, THETA_MIN_DEFAULT, Some(0.2), 19).unwrap();
        assert_eq!(v.verdict, Verdict::Transversal);
    }

    #[test]
    fn relation_certification_is_stable_under_denser_sampling() {
        let (f, e) = e15_shape();
        let p = Point::origin(3);
        let dense = estimate_foliation_cone(
            &f,
            &e,
            &p,
            &ConeParams { num_scales: 10, samples_per_scale: 400, seed: 23, base_scale: None },
        )
        .unwrap();
        for spc in [40usize, 80, 160] {
            let cone = estimate_foliation_cone(
                &f,
                &e,
                &p,
                &ConeParams { num_scales: 10, samples_per_scale: spc, seed: 23, base_scale: None },
            )
            .unwrap();
            for r in &dense.relations {
                let want = Tangent(r.coeffs.clone());
                assert!(
                    cone.relations.iter().any(|s| line_angle(&Tangent(s.coeffs.clone()), &want) < 1e-6),
                    "relation lost at samples_per_scale {spc}"
                );
            }
        }
    }

    #[test]
    fn isolated_singular_point_is_always_transversal() {
        let f = normal_form(NormalForm::PoincareDulac { n: 2, a: c(1.0, 0.0) }).unwrap();
        let e = origin_point_model(2);
        let v = is_transversal_type(&f, &e, &Point::origin(2), THETA_MIN_DEFAULT, None, 29).unwrap();
        assert_eq!(v.verdict, Verdict::Transversal);
        assert!(v.min_angle.is_infinite());
    }
}
