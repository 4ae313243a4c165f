//! Ambient geometry and polynomial holomorphic vector fields on polydiscs.
//!
//! The hermitian metric is fixed to the Euclidean metric on C^n throughout;
//! every norm below is the Euclidean one.

use crate::expr::{self, Expr, ParseError, Poly, C};
use nalgebra::DMatrix;
use thiserror::Error;

/// A point of the ambient polydisc in C^n.
#[derive(Clone, Debug, PartialEq)]
pub struct Point(pub Vec<C>);

/// A tangent vector at a point of C^n.
#[derive(Clone, Debug, PartialEq)]
pub struct Tangent(pub Vec<C>);

impl Point {
    pub fn new(coords: Vec<C>) -> Self {
        assert!(!coords.is_empty(), "points need at least one coordinate");
        assert!(coords.iter().all(|c| c.re.is_finite() && c.im.is_finite()));
        Point(coords)
    }

    pub fn from_re(re: &[f64]) -> Self {
        Point::new(re.iter().map(|&x| C::new(x, 0.0)).collect())
    }

    pub fn origin(n: usize) -> Self {
        Point::new(vec![C::new(0.0, 0.0); n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn add_scaled(&self, dir: &Tangent, t: C) -> Point {
        Point::new(self.0.iter().zip(&dir.0).map(|(p, d)| p + t * d).collect())
    }

    pub fn sub(&self, other: &Point) -> Tangent {
        Tangent(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }
}

impl Tangent {
    pub fn zero(n: usize) -> Self {
        Tangent(vec![C::new(0.0, 0.0); n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Hermitian inner product `sum_j u_j * conj(v_j)`.
    pub fn dot_h(&self, other: &Tangent) -> C {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b.conj()).sum()
    }

    /// Complex-bilinear pairing `sum_j u_j * v_j` (no conjugation); this is
    /// the pairing in which cone relations annihilate directions.
    pub fn dot_b(&self, other: &Tangent) -> C {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&self, c: C) -> Tangent {
        Tangent(self.0.iter().map(|v| v * c).collect())
    }

    pub fn add(&self, other: &Tangent) -> Tangent {
        Tangent(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn normalized(&self) -> Option<Tangent> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            None
        } else {
            Some(self.scale(C::new(1.0 / n, 0.0)))
        }
    }

    pub fn unit(n: usize, j: usize) -> Tangent {
        let mut v = Tangent::zero(n);
        v.0[j] = C::new(1.0, 0.0);
        v
    }
}

/// Fubini-Study angle between complex lines spanned by unit vectors:
/// `acos |<u, v>|`, in [0, pi/2].
pub fn line_angle(u: &Tangent, v: &Tangent) -> f64 {
    let c = u.dot_h(v).norm() / (u.norm() * v.norm());
    c.min(1.0).acos()
}

/// An open polydisc `{ z : |z_j - c_j| < r_j }`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polydisc {
    center: Point,
    radii: Vec<f64>,
}

impl Polydisc {
    pub fn new(center: Point, radii: Vec<f64>) -> Self {
        assert_eq!(center.dim(), radii.len());
        assert!(radii.iter().all(|&r| r > 0.0), "polydisc radii must be positive");
        Polydisc { center, radii }
    }

    pub fn unit(n: usize) -> Self {
        Polydisc::new(Point::origin(n), vec![1.0; n])
    }

    pub fn unit_bidisc() -> Self {
        Polydisc::unit(2)
    }

    pub fn dim(&self) -> usize {
        self.radii.len()
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.0.iter()
            .zip(&self.center.0)
            .zip(&self.radii)
            .all(|((z, c), &r)| (z - c).norm() < r)
    }

    pub fn contains_closed(&self, p: &Point, tol: f64) -> bool {
        p.0.iter()
            .zip(&self.center.0)
            .zip(&self.radii)
            .all(|((z, c), &r)| (z - c).norm() <= r + tol)
    }

    /// Euclidean distance from an interior point to the boundary,
    /// `min_j (r_j - |z_j - c_j|)`; negative outside.
    pub fn dist_to_boundary(&self, p: &Point) -> f64 {
        p.0.iter()
            .zip(&self.center.0)
            .zip(&self.radii)
            .map(|((z, c), &r)| r - (z - c).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn shrink(&self, factor: f64) -> Polydisc {
        assert!(factor > 0.0);
        Polydisc::new(self.center.clone(), self.radii.iter().map(|r| r * factor).collect())
    }

    pub fn scale_radii(&self, factor: f64) -> Polydisc {
        self.shrink(factor)
    }

    pub fn min_radius(&self) -> f64 {
        self.radii.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("dimension mismatch: field has {field} coordinates, point has {point}")]
    DimensionMismatch { field: usize, point: usize },
    #[error("parameter violates the normal form condition: {0}")]
    BadNormalForm(String),
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("index undefined: second eigenvalue is zero")]
    IndexUndefined,
}

/// Evaluation outcome; out-of-domain probes are reported but still carry the
/// value (boundary-adjacent sampling relies on this).
#[derive(Clone, Debug)]
pub struct FieldEval {
    pub tangent: Tangent,
    pub in_domain: bool,
}

/// Jacobian of the field at a point, with eigenvalue data for n = 2.
#[derive(Clone, Debug)]
pub struct JacobianReport {
    pub matrix: DMatrix<C>,
    /// Eigenvalues, only computed for n = 2. Ordered so that a triangular
    /// Jacobian reads its diagonal in order.
    pub eigenvalues: Option<(C, C)>,
}

impl JacobianReport {
    /// Index `alpha = lambda_2 / lambda_1` for n = 2 (so the linear field
    /// `x d/dx + a y d/dy` has index `a`). Undefined when `lambda_1 = 0`.
    pub fn index(&self) -> Result<C, FieldError> {
        let (l1, l2) = self.eigenvalues.ok_or(FieldError::IndexUndefined)?;
        if l1.norm() == 0.0 {
            return Err(FieldError::IndexUndefined);
        }
        Ok(l2 / l1)
    }
}

/// Holomorphic vector field with polynomial (or simple analytic) components
/// on a polydisc.
#[derive(Clone, Debug)]
pub struct PolyVectorField {
    components: Vec<Expr>,
    domain: Polydisc,
}

impl PolyVectorField {
    pub fn new(components: Vec<Expr>, domain: Polydisc) -> Self {
        assert_eq!(components.len(), domain.dim());
        assert!(components.iter().all(|c| c.nvars() == domain.dim()));
        PolyVectorField { components, domain }
    }

    /// Parse from the `;`-separated component syntax, e.g. `x ; z*y ; z*y`.
    pub fn parse(src: &str, domain: Polydisc) -> Result<Self, FieldError> {
        let comps = expr::parse_components(src, domain.dim())?;
        Ok(PolyVectorField::new(comps, domain))
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn domain(&self) -> &Polydisc {
        &self.domain
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn with_domain(&self, domain: Polydisc) -> PolyVectorField {
        PolyVectorField::new(self.components.clone(), domain)
    }

    /// Componentwise evaluation; panics on dimension mismatch.
    pub fn eval(&self, p: &Point) -> Tangent {
        assert_eq!(p.dim(), self.dim(), "field/point dimension mismatch");
        Tangent(self.components.iter().map(|c| c.eval(&p.0)).collect())
    }

    /// Evaluation with the domain membership reported explicitly.
    pub fn eval_checked(&self, p: &Point) -> Result<FieldEval, FieldError> {
        if p.dim() != self.dim() {
            return Err(FieldError::DimensionMismatch { field: self.dim(), point: p.dim() });
        }
        Ok(FieldEval { tangent: self.eval(p), in_domain: self.domain.contains(p) })
    }

    pub fn norm_at(&self, p: &Point) -> f64 {
        self.eval(p).norm()
    }

    /// Matrix of formal partial derivatives evaluated at `p`; row i holds the
    /// gradient of component i.
    pub fn jacobian(&self, p: &Point) -> JacobianReport {
        let n = self.dim();
        assert_eq!(p.dim(), n);
        let mut m = DMatrix::<C>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.components[i].partial(j).eval(&p.0);
            }
        }
        let eigenvalues = if n == 2 { Some(eigen2(&m)) } else { None };
        JacobianReport { matrix: m, eigenvalues }
    }

    /// Certified upper bound for `sup ||X||` over the closed polydisc `u`.
    pub fn sup_norm_bound(&self, u: &Polydisc) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let b = c.sup_bound(&u.center().0, u.radii());
                b * b
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Certified upper bound for the Frobenius norm of the Jacobian over `u`
    /// (a Lipschitz constant for the field on `u`).
    pub fn jacobian_norm_bound(&self, u: &Polydisc) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let b = self.components[i].partial(j).sup_bound(&u.center().0, u.radii());
                acc += b * b;
            }
        }
        acc.sqrt()
    }
}

/// Eigenvalues of a 2x2 complex matrix, ordered so that (numerically)
/// triangular input reads its diagonal in order.
fn eigen2(m: &DMatrix<C>) -> (C, C) {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let scale = a.norm() + b.norm() + c.norm() + d.norm();
    let off = b.norm().min(c.norm());
    if scale == 0.0 {
        return (C::new(0.0, 0.0), C::new(0.0, 0.0));
    }
    if off <= 1e-14 * scale {
        return (a, d);
    }
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr - det.scale(4.0)).sqrt();
    let l1 = (tr + disc).scale(0.5);
    let l2 = (tr - disc).scale(0.5);
    // deterministic order: by (re, im)
    if (l1.re, l1.im) <= (l2.re, l2.im) {
        (l1, l2)
    } else {
        (l2, l1)
    }
}

/// The local normal forms used by the worked examples on the unit bidisc.
#[derive(Clone, Debug)]
pub enum NormalForm {
    /// `x d/dx + a y d/dy`, `a` not in R^- u {0} and `a, 1/a` not in N.
    Linearizable { alpha: C },
    /// `x d/dx + a y (1 + f(x, y)) d/dy` with `a` negative real and
    /// `x, y | f`.
    ResonantNegative { alpha: f64, f: Poly },
    /// `x d/dx + (n y + a x^n) d/dy`.
    PoincareDulac { n: u32, a: C },
    /// `(n x + a y^n) d/dx + y d/dy`.
    PoincareDulacSwapped { n: u32, a: C },
}

fn is_positive_integer(a: C) -> bool {
    a.im.abs() < 1e-12 && a.re >= 1.0 - 1e-12 && (a.re - a.re.round()).abs() < 1e-12
}

/// Build a normal-form field on the unit bidisc.
pub fn normal_form(kind: NormalForm) -> Result<PolyVectorField, FieldError> {
    let dom = Polydisc::unit_bidisc();
    let x = Poly::var(2, 0);
    let y = Poly::var(2, 1);
    match kind {
        NormalForm::Linearizable { alpha } => {
            if alpha.norm() == 0.0 {
                return Err(FieldError::BadNormalForm("alpha must be nonzero".into()));
            }
            if alpha.im.abs() < 1e-12 && alpha.re < 0.0 {
                return Err(FieldError::BadNormalForm("alpha must not be negative real".into()));
            }
            if is_positive_integer(alpha) || is_positive_integer(alpha.inv()) {
                return Err(FieldError::BadNormalForm(
                    "alpha and 1/alpha must not be positive integers".into(),
                ));
            }
            let comps = vec![Expr::poly(x), Expr::poly(y.scale(alpha))];
            Ok(PolyVectorField::new(comps, dom))
        }
        NormalForm::ResonantNegative { alpha, f } => {
            if !(alpha < 0.0) {
                return Err(FieldError::BadNormalForm("alpha must be negative real".into()));
            }
            if f.nvars() != 2 {
                return Err(FieldError::BadNormalForm("f must be a polynomial in x, y".into()));
            }
            if !f.divisible_by_monomial(&[1, 0]) || !f.divisible_by_monomial(&[0, 1]) {
                return Err(FieldError::BadNormalForm("f must be divisible by both x and y".into()));
            }
            let a = C::new(alpha, 0.0);
            // a*y*(1+f) = a*y + a*y*f
            let second = y.scale(a).add(&y.mul(&f).scale(a));
            Ok(PolyVectorField::new(vec![Expr::poly(x), Expr::poly(second)], dom))
        }
        NormalForm::PoincareDulac { n, a } => {
            if n == 0 {
                return Err(FieldError::BadNormalForm("n must be a positive integer".into()));
            }
            let second = y.scale(C::new(n as f64, 0.0)).add(&x.pow(n).scale(a));
            Ok(PolyVectorField::new(vec![Expr::poly(x), Expr::poly(second)], dom))
        }
        NormalForm::PoincareDulacSwapped { n, a } => {
            if n == 0 {
                return Err(FieldError::BadNormalForm("n must be a positive integer".into()));
            }
            let first = x.scale(C::new(n as f64, 0.0)).add(&y.pow(n).scale(a));
            Ok(PolyVectorField::new(vec![Expr::poly(first), Expr::poly(y)], dom))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use rand::Rng;
    use rand::SeedableRng;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn linear_diag_field() -> PolyVectorField {
        PolyVectorField::parse("x ; 2*y", Polydisc::unit_bidisc()).unwrap()
    }

    fn e15_field() -> PolyVectorField {
        // x d/dx + z y d/dy + z y d/dz on the unit polydisc (example 1.5 shape)
        PolyVectorField::parse("x ; z*y ; z*y", Polydisc::unit(3)).unwrap()
    }

    #[test]
    fn eval_direct_polynomial() {
        let f = linear_diag_field();
        let t = f.eval(&Point::from_re(&[1.0, 1.0]));
        assert_eq!(t.0, vec![c(1.0, 0.0), c(2.0, 0.0)]);
    }

    #[test]
    fn eval_matches_scaled_sequence_for_linear_normal_form() {
        // m * X(z_m) = (v1, v2) for z_m = (v1/m, v2/(alpha m))
        let alpha = c(0.0, 2.0);
        let f = normal_form(NormalForm::Linearizable { alpha }).unwrap();
        let v1 = c(0.3, -0.1);
        let v2 = c(-0.2, 0.4);
        for m in [1.0_f64, 7.0, 123.0, 4096.0] {
            let zm = Point::new(vec![v1 / m, v2 / (alpha * m)]);
            let t = f.eval(&zm).scale(c(m, 0.0));
            assert!((t.0[0] - v1).norm() < 1e-12);
            assert!((t.0[1] - v2).norm() < 1e-12);
        }
    }

    #[test]
    fn singular_point_evaluates_to_zero() {
        let f = e15_field();
        let t = f.eval(&Point::origin(3));
        assert!(t.norm() == 0.0);
    }

    #[test]
    fn eval_checked_reports_out_of_domain() {
        let f = linear_diag_field();
        let r = f.eval_checked(&Point::from_re(&[1.5, 0.0])).unwrap();
        assert!(!r.in_domain);
        assert_eq!(r.tangent.0[0], c(1.5, 0.0));
        assert!(matches!(
            f.eval_checked(&Point::from_re(&[0.0])),
            Err(FieldError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn jacobian_of_diagonal_field() {
        let alpha = c(0.0, 2.0);
        let f = normal_form(NormalForm::Linearizable { alpha }).unwrap();
        let j = f.jacobian(&Point::origin(2));
        assert_eq!(j.matrix[(0, 0)], c(1.0, 0.0));
        assert_eq!(j.matrix[(1, 1)], alpha);
        assert_eq!(j.matrix[(0, 1)], c(0.0, 0.0));
        assert_eq!(j.index().unwrap(), alpha);
    }

    #[test]
    fn jacobian_zero_linear_part_has_undefined_index() {
        let f = PolyVectorField::parse("x^2 ; y^2", Polydisc::unit_bidisc()).unwrap();
        let j = f.jacobian(&Point::origin(2));
        assert!(j.matrix.iter().all(|c| c.norm() == 0.0));
        assert!(matches!(j.index(), Err(FieldError::IndexUndefined)));
    }

    #[test]
    fn jacobian_of_e15_field_at_origin() {
        // frozen from the symbolic differentiation oracle below
        let f = e15_field();
        let j = f.jacobian(&Point::origin(3));
        let expect = [
            [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        ];
        for i in 0..3 {
            for k in 0..3 {
                assert_eq!(j.matrix[(i, k)], expect[i][k]);
            }
        }
        // independent check: symbolic partials evaluated directly
        for (i, comp) in ["x", "z*y", "z*y"].iter().enumerate() {
            let e = parse_expr(comp, 3).unwrap();
            for k in 0..3 {
                assert_eq!(e.partial(k).eval(&Point::origin(3).0), expect[i][k]);
            }
        }
    }

    #[test]
    fn jacobian_matches_central_finite_differences() {
        let f = e15_field();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        let h = 1e-5;
        for _ in 0..100 {
            let p = Point::new(
                (0..3)
                    .map(|_| c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)))
                    .collect(),
            );
            let j = f.jacobian(&p);
            for k in 0..3 {
                let mut pp = p.clone();
                let mut pm = p.clone();
                pp.0[k] += c(h, 0.0);
                pm.0[k] -= c(h, 0.0);
                let fp = f.eval(&pp);
                let fm = f.eval(&pm);
                for i in 0..3 {
                    let fd = (fp.0[i] - fm.0[i]) / (2.0 * h);
                    let exact = j.matrix[(i, k)];
                    let denom = exact.norm().max(1.0);
                    assert!(
                        (fd - exact).norm() / denom <= 1e-6,
                        "fd {fd} vs exact {exact} at ({i},{k})"
                    );
                }
            }
        }
    }

    #[test]
    fn normal_forms_match_reference_components() {
        let f = normal_form(NormalForm::Linearizable { alpha: c(0.0, 2.0) }).unwrap();
        let p = Point::new(vec![c(0.3, 0.0), c(0.5, 0.0)]);
        assert_eq!(f.eval(&p).0, vec![c(0.3, 0.0), c(0.0, 1.0)]);

        let f = normal_form(NormalForm::PoincareDulac { n: 2, a: c(1.0, 0.0) }).unwrap();
        // x d/dx + (2y + x^2) d/dy
        assert_eq!(f.eval(&p).0, vec![c(0.3, 0.0), c(1.09, 0.0)]);

        let fxy = parse_expr("x*y", 2).unwrap().as_poly().unwrap().clone();
        let f = normal_form(NormalForm::ResonantNegative { alpha: -1.0, f: fxy }).unwrap();
        // x d/dx - y(1 + xy) d/dy
        let t = f.eval(&p);
        assert_eq!(t.0[0], c(0.3, 0.0));
        assert!((t.0[1] - c(-0.5 * 1.15, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn normal_form_outputs_vanish_at_origin() {
        let cases: Vec<PolyVectorField> = vec![
            normal_form(NormalForm::Linearizable { alpha: c(0.0, 2.0) }).unwrap(),
            normal_form(NormalForm::PoincareDulac { n: 2, a: c(1.0, 0.0) }).unwrap(),
            normal_form(NormalForm::PoincareDulacSwapped { n: 3, a: c(0.5, 0.5) }).unwrap(),
            normal_form(NormalForm::ResonantNegative {
                alpha: -1.0,
                f: parse_expr("x*y", 2).unwrap().as_poly().unwrap().clone(),
            })
            .unwrap(),
        ];
        for f in cases {
            assert_eq!(f.eval(&Point::origin(2)).norm(), 0.0);
        }
    }

    #[test]
    fn normal_form_rejects_bad_parameters() {
        assert!(normal_form(NormalForm::Linearizable { alpha: c(0.0, 0.0) }).is_err());
        assert!(normal_form(NormalForm::Linearizable { alpha: c(-2.0, 0.0) }).is_err());
        assert!(normal_form(NormalForm::Linearizable { alpha: c(3.0, 0.0) }).is_err());
        assert!(normal_form(NormalForm::Linearizable { alpha: c(0.5, 0.0) }).is_err());
        assert!(normal_form(NormalForm::PoincareDulac { n: 0, a: c(1.0, 0.0) }).is_err());
        // f = x is not divisible by y
        let fx = Poly::var(2, 0);
        assert!(normal_form(NormalForm::ResonantNegative { alpha: -1.0, f: fx }).is_err());
    }

    #[test]
    fn eval_is_complex_linear_in_coefficients() {
        let dom = Polydisc::unit_bidisc();
        let f = PolyVectorField::parse("x + y^2 ; x*y", dom.clone()).unwrap();
        let g = PolyVectorField::parse("y ; x^2 - y", dom.clone()).unwrap();
        let a = c(0.7, -0.3);
        let b = c(-0.2, 1.1);
        let combo: Vec<Expr> = f
            .components()
            .iter()
            .zip(g.components())
            .map(|(cf, cg)| {
                cf.clone()
                    .mul(Expr::constant(2, a))
                    .add(cg.clone().mul(Expr::constant(2, b)))
            })
            .collect();
        let h = PolyVectorField::new(combo, dom);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        for _ in 0..50 {
            let p = Point::new(
                (0..2)
                    .map(|_| c(rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9)))
                    .collect(),
            );
            let lhs = h.eval(&p);
            let rhs = f.eval(&p).scale(a).add(&g.eval(&p).scale(b));
            for i in 0..2 {
                assert!((lhs.0[i] - rhs.0[i]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn polydisc_distance_and_membership() {
        let d = Polydisc::new(Point::from_re(&[0.0, 0.0]), vec![1.0, 0.5]);
        assert!(d.contains(&Point::from_re(&[0.9, 0.4])));
        assert!(!d.contains(&Point::from_re(&[0.9, 0.6])));
        let p = Point::from_re(&[0.5, 0.0]);
        assert!((d.dist_to_boundary(&p) - 0.5).abs() < 1e-15);
    }
}
