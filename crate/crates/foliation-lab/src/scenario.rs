//! Builtin scenarios: one per worked example, each packaging the field, the
//! singular-set model, the registered leaf charts, named point sequences,
//! and a declarative list of expected outcomes with citations.

use crate::eta::EtaContext;
use crate::expr::C;
use crate::field::{normal_form, NormalForm, Point, Polydisc, PolyVectorField, Tangent};
use crate::leaf::{classify_with_families, FamilyKind, LeafChart, LeafFamily};
use crate::variety::{AnalyticSetModel, SetPiece};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario {0:?}")]
    Unknown(String),
    #[error("unknown sequence {0:?}")]
    UnknownSequence(String),
    #[error("sequence point generation failed: {0}")]
    Sequence(String),
}

/// Named generator of a point sequence converging to a registered target.
#[derive(Clone, Debug)]
pub struct SequenceSpec {
    pub id: &'static str,
    pub citation: &'static str,
    pub gen: SequenceGen,
}

#[derive(Clone, Debug)]
pub enum SequenceGen {
    /// `base + (1/k) e_moving`, k = 2..=horizon+1.
    AxisInverse { base: Point, moving: usize },
    /// Points of the chart through `at`, with the model coordinate halved at
    /// every step (capped above the classification tolerance).
    ChartLadder { at: Point },
}

impl SequenceSpec {
    pub fn points(&self, scenario: &Scenario, horizon: usize) -> Result<Vec<Point>, ScenarioError> {
        match &self.gen {
            SequenceGen::AxisInverse { base, moving } => Ok((2..=horizon + 1)
                .map(|k| {
                    let mut coords = base.0.clone();
                    coords[*moving] += C::new(1.0 / k as f64, 0.0);
                    Point::new(coords)
                })
                .collect()),
            SequenceGen::ChartLadder { at } => {
                let chart = scenario
                    .classify(at)
                    .ok_or_else(|| ScenarioError::Sequence(format!("no chart at {at:?}")))?;
                let mut out = Vec::new();
                for k in 1..=horizon {
                    let zeta = chart.base_param * C::new(0.5f64.powi(k as i32), 0.0);
                    if zeta.norm() < 1e-7 {
                        break;
                    }
                    out.push(chart.point_at(zeta));
                }
                if out.is_empty() {
                    return Err(ScenarioError::Sequence("empty ladder".into()));
                }
                Ok(out)
            }
        }
    }

    /// The point the sequence converges to.
    pub fn limit_point(&self, scenario: &Scenario) -> Option<Point> {
        match &self.gen {
            SequenceGen::AxisInverse { base, .. } => Some(base.clone()),
            SequenceGen::ChartLadder { at } => {
                scenario.classify(at).and_then(|c| c.puncture_image())
            }
        }
    }
}

/// A declarative expected outcome, executed by the report runner.
#[derive(Clone, Debug)]
pub struct Expectation {
    pub id: &'static str,
    pub citation: &'static str,
    pub check: Check,
}

#[derive(Clone, Debug)]
pub enum Check {
    /// The foliation cone at `point` fills the whole ambient space
    /// (0.05-dense direction set, no certified relations).
    ConeFullSpan { point: Point },
    /// A certified relation close to `relation` and a coverage-certified
    /// span of the stated dimension containing the listed vectors, at every
    /// point.
    ConeRelationSpan {
        points: Vec<Point>,
        relation: Vec<C>,
        span_dim: usize,
        span_contains: Vec<Vec<C>>,
    },
    TransversalAt { points: Vec<Point>, nbhd: Option<f64>, min_angle_at_least: f64 },
    NotTransversalAt { points: Vec<Point>, nbhd: Option<f64>, witness_dir: Option<Vec<C>> },
    /// Eta along the sequence converges to the stated value.
    EtaSequenceLimit { sequence: &'static str, horizon: usize, expected_eta: f64, tol: f64 },
    /// Eta along the sequence is a nonzero constant.
    EtaSequenceConstant { sequence: &'static str, horizon: usize },
    /// Two sequences to the same target disagree by at least `min_gap`.
    DiscontinuityGap {
        seq_high: &'static str,
        seq_low: &'static str,
        horizon: usize,
        min_gap: f64,
    },
    ScanZeroFlags { grid: usize, gap_factor: f64 },
    ScanFlagsOnSeparatrixLeavesOnly { grid: usize, gap_factor: f64, min_contiguous: usize },
    InvariantHypersurface { f_src: &'static str, expected: bool },
    /// All numerically found zeros of the field lie on the E model.
    SingularLocusOnModel { grid_density: usize },
    CompleteAt {
        targets: Vec<Point>,
        kmax: usize,
        expected: crate::eta::Completeness,
    },
    /// Uniformizer images of the deepest sequence point stay near leaf + E.
    LimitImagesNearLeafOrE { sequence: &'static str, horizon: usize, max_dist: f64 },
    /// Family limits at the targets agree (continuous extension).
    ContinuousAcrossFamiliesAt { targets: Vec<Point>, max_gap: f64 },
    Ex32Bounds { k: u32, rho: f64, grid: usize, c_low: f64, c_high: f64, tol: f64 },
    /// metric_length along the radial punctured path reproduces
    /// `ln ln(1/eps) - ln ln 2`.
    LengthClosedFormPunctured { eps: Vec<f64>, tol: f64 },
    /// metric_length along the radial disc path reproduces
    /// `ln((2-eps)/eps)`.
    LengthClosedFormDisc { eps: Vec<f64>, tol: f64 },
    /// Registered charts at the probe points pass the chart invariants.
    ChartsValid { probes: Vec<Point> },
}

/// A packaged worked example.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub id: &'static str,
    pub description: &'static str,
    pub field: PolyVectorField,
    pub e_model: AnalyticSetModel,
    pub families: Vec<LeafFamily>,
    pub sequences: Vec<SequenceSpec>,
    pub expectations: Vec<Expectation>,
    pub s_override: Option<f64>,
}

impl Scenario {
    pub fn domain(&self) -> &Polydisc {
        self.field.domain()
    }

    pub fn eta_ctx(&self) -> EtaContext<'_> {
        EtaContext {
            field: &self.field,
            e_model: &self.e_model,
            families: &self.families,
            s_override: self.s_override,
        }
    }

    pub fn classify(&self, p: &Point) -> Option<LeafChart> {
        classify_with_families(&self.families, self.domain(), p)
    }

    pub fn sequence(&self, id: &str) -> Result<&SequenceSpec, ScenarioError> {
        self.sequences
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| ScenarioError::UnknownSequence(id.to_string()))
    }

    /// Random points on registered leaves (used by the bound checks).
    pub fn sample_chart_points(&self, seed: u64, count: usize) -> Vec<Point> {
        if self.families.is_empty() {
            return Vec::new();
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(0x5a3);
        let mut out = Vec::with_capacity(count);
        let mut guard = 0usize;
        while out.len() < count && guard < count * 50 {
            guard += 1;
            let fam = &self.families[rng.gen_range(0..self.families.len())];
            if let Some(p) = sample_family_point(fam, self.domain(), &mut rng) {
                if self.domain().contains(&p)
                    && !self.e_model.contains(&p, 1e-9)
                    && self.classify(&p).is_some()
                {
                    out.push(p);
                }
            }
        }
        out
    }
}

fn sample_family_point(
    fam: &LeafFamily,
    domain: &Polydisc,
    rng: &mut ChaCha12Rng,
) -> Option<Point> {
    let n = domain.dim();
    let annulus = |rng: &mut ChaCha12Rng, r: f64| -> C {
        let mag = r * rng.gen_range(0.08..0.82);
        let th = rng.gen_range(0.0..std::f64::consts::TAU);
        C::new(mag * th.cos(), mag * th.sin())
    };
    match &fam.kind {
        FamilyKind::CoordLine { moving, zero, nonzero, .. } => {
            let mut coords = vec![C::new(0.0, 0.0); n];
            coords[*moving] = annulus(rng, domain.radii()[*moving]);
            for j in 0..n {
                if j == *moving || zero.contains(&j) {
                    continue;
                }
                if nonzero.contains(&j) {
                    coords[j] = annulus(rng, domain.radii()[j]);
                } else {
                    // free coordinate: sometimes exactly zero
                    if rng.gen_bool(0.3) {
                        coords[j] = C::new(0.0, 0.0);
                    } else {
                        coords[j] = annulus(rng, domain.radii()[j]);
                    }
                }
            }
            Some(Point::new(coords))
        }
        FamilyKind::GCurve => {
            let w = annulus(rng, domain.radii()[0]);
            Some(Point::new(vec![w, w * w * 0.5, w * w * 0.5]))
        }
        FamilyKind::PlaneLine { i, j, fixed } => {
            let mut coords = vec![C::new(0.0, 0.0); n];
            coords[*i] = annulus(rng, domain.radii()[*i]);
            coords[*j] = annulus(rng, domain.radii()[*j]);
            coords[*fixed] = annulus(rng, domain.radii()[*fixed]);
            Some(Point::new(coords))
        }
        FamilyKind::PlaneDiagonal { i, j, fixed } => {
            let mut coords = vec![C::new(0.0, 0.0); n];
            let v = annulus(rng, domain.radii()[*i].min(domain.radii()[*j]));
            coords[*i] = v;
            coords[*j] = v;
            coords[*fixed] = annulus(rng, domain.radii()[*fixed]);
            Some(Point::new(coords))
        }
        FamilyKind::Identity1D { .. } => Some(Point::new(vec![annulus(rng, domain.radii()[0])])),
    }
}

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn pt(coords: &[(f64, f64)]) -> Point {
    Point::new(coords.iter().map(|&(re, im)| c(re, im)).collect())
}

fn axis_line(label: &str, n: usize, j: usize) -> SetPiece {
    SetPiece::linear(label, Point::origin(n), vec![Tangent::unit(n, j)])
}

fn cv(coords: &[(f64, f64)]) -> Vec<C> {
    coords.iter().map(|&(re, im)| c(re, im)).collect()
}

fn e13_scenario(
    id: &'static str,
    description: &'static str,
    field: PolyVectorField,
) -> Scenario {
    Scenario {
        id,
        description,
        field,
        e_model: AnalyticSetModel::new(vec![SetPiece::point("origin", Point::origin(2))]),
        families: Vec::new(),
        sequences: Vec::new(),
        expectations: vec![
            Expectation {
                id: "cone_full_plane",
                citation: "Example 1.3",
                check: Check::ConeFullSpan { point: Point::origin(2) },
            },
            Expectation {
                id: "singular_locus_origin",
                citation: "Example 1.3",
                check: Check::SingularLocusOnModel { grid_density: 5 },
            },
            Expectation {
                id: "transversal_discrete_e",
                citation: "remark after Theorem 1.8",
                check: Check::TransversalAt {
                    points: vec![Point::origin(2)],
                    nbhd: None,
                    min_angle_at_least: 0.1,
                },
            },
        ],
        s_override: None,
    }
}

fn build_scenarios() -> Vec<Scenario> {
    let mut out = Vec::new();

    // the three normal-form cases with cone C^2 at the origin
    out.push(e13_scenario(
        "E1.3-1",
        "linearizable normal form x d/dx + 2i y d/dy on the unit bidisc",
        normal_form(NormalForm::Linearizable { alpha: c(0.0, 2.0) }).unwrap(),
    ));
    out.push(e13_scenario(
        "E1.3-2",
        "resonant normal form x d/dx - y(1 + xy) d/dy on the unit bidisc",
        normal_form(NormalForm::ResonantNegative {
            alpha: -1.0,
            f: crate::expr::parse_expr("x*y", 2).unwrap().as_poly().unwrap().clone(),
        })
        .unwrap(),
    ));
    out.push(e13_scenario(
        "E1.3-3",
        "resonant integer-index normal form x d/dx + (2y + x^2) d/dy",
        normal_form(NormalForm::PoincareDulac { n: 2, a: c(1.0, 0.0) }).unwrap(),
    ));

    // E1.4: x d/dx + h(z) y d/dy with h = 2 + z (nonvanishing on the disc)
    {
        let field = PolyVectorField::parse("x ; (2+z)*y ; 0", Polydisc::unit(3)).unwrap();
        let e_model = AnalyticSetModel::new(vec![axis_line("z-axis", 3, 2)]);
        let families = vec![
            LeafFamily {
                id: "sigma2",
                kind: FamilyKind::CoordLine {
                    moving: 0,
                    zero: vec![1],
                    nonzero: vec![],
                    punctured: true,
                },
            },
            LeafFamily {
                id: "sigma1",
                kind: FamilyKind::CoordLine {
                    moving: 1,
                    zero: vec![0],
                    nonzero: vec![],
                    punctured: true,
                },
            },
        ];
        let cone_points: Vec<Point> = (0..10)
            .map(|k| pt(&[(0.0, 0.0), (0.0, 0.0), (-0.72 + 0.16 * k as f64, 0.02 * k as f64)]))
            .collect();
        out.push(Scenario {
            id: "E1.4",
            description: "z-fibered linear field x d/dx + (2+z) y d/dy; E = z-axis",
            field,
            e_model,
            families,
            sequences: Vec::new(),
            expectations: vec![
                Expectation {
                    id: "cone_span_e1_e2",
                    citation: "Example 1.4",
                    check: Check::ConeRelationSpan {
                        points: cone_points.clone(),
                        relation: cv(&[(0.0, 0.0), (0.0, 0.0), (1.0, 0.0)]),
                        span_dim: 2,
                        span_contains: vec![
                            cv(&[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0)]),
                            cv(&[(0.0, 0.0), (1.0, 0.0), (0.0, 0.0)]),
                        ],
                    },
                },
                Expectation {
                    id: "transversal_on_e",
                    citation: "Example 1.4",
                    check: Check::TransversalAt {
                        points: cone_points,
                        nbhd: None,
                        min_angle_at_least: 0.5,
                    },
                },
                Expectation {
                    id: "fibers_invariant",
                    citation: "Example 1.4",
                    check: Check::InvariantHypersurface { f_src: "z - 0.3", expected: true },
                },
                Expectation {
                    id: "singular_locus_on_axis",
                    citation: "Example 1.4",
                    check: Check::SingularLocusOnModel { grid_density: 4 },
                },
                Expectation {
                    id: "charts_consistent",
                    citation: "Example 1.4",
                    check: Check::ChartsValid {
                        probes: vec![pt(&[(0.3, 0.1), (0.0, 0.0), (0.4, 0.0)]), pt(&[(0.0, 0.0), (0.25, -0.1), (0.5, 0.0)])],
                    },
                },
            ],
            s_override: None,
        });
    }

    // E1.5: x d/dx + zy d/dy + zy d/dz
    {
        let field = PolyVectorField::parse(
            "x ; z*y ; z*y",
            Polydisc::new(Point::origin(3), vec![1.0, 0.9, 0.8]),
        )
        .unwrap();
        let e_model =
            AnalyticSetModel::new(vec![axis_line("y-axis", 3, 1), axis_line("z-axis", 3, 2)]);
        let families = vec![
            LeafFamily {
                id: "sigma2",
                kind: FamilyKind::CoordLine {
                    moving: 0,
                    zero: vec![1],
                    nonzero: vec![],
                    punctured: true,
                },
            },
            LeafFamily {
                id: "sigma3",
                kind: FamilyKind::CoordLine {
                    moving: 0,
                    zero: vec![2],
                    nonzero: vec![],
                    punctured: true,
                },
            },
        ];
        let base_points = vec![
            pt(&[(0.0, 0.0), (0.4, 0.0), (0.0, 0.0)]),
            pt(&[(0.0, 0.0), (0.0, 0.0), (0.4, 0.0)]),
            Point::origin(3),
        ];
        out.push(Scenario {
            id: "E1.5",
            description: "shared-component field x d/dx + zy d/dy + zy d/dz; E = y-axis + z-axis",
            field,
            e_model,
            families,
            sequences: Vec::new(),
            expectations: vec![
                Expectation {
                    id: "cone_span_shared",
                    citation: "Example 1.5",
                    check: Check::ConeRelationSpan {
                        points: base_points.clone(),
                        relation: cv(&[(0.0, 0.0), (1.0, 0.0), (-1.0, 0.0)]),
                        span_dim: 2,
                        span_contains: vec![
                            cv(&[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0)]),
                            cv(&[(0.0, 0.0), (1.0, 0.0), (1.0, 0.0)]),
                        ],
                    },
                },
                Expectation {
                    id: "transversal_all_classes",
                    citation: "Example 1.5",
                    check: Check::TransversalAt {
                        points: base_points,
                        nbhd: Some(0.15),
                        min_angle_at_least: 0.1,
                    },
                },
                Expectation {
                    id: "singular_locus_on_axes",
                    citation: "Example 1.5",
                    check: Check::SingularLocusOnModel { grid_density: 4 },
                },
                Expectation {
                    id: "charts_consistent",
                    citation: "Example 1.5",
                    check: Check::ChartsValid {
                        probes: vec![pt(&[(0.3, 0.0), (0.0, 0.0), (0.35, 0.0)]), pt(&[(0.3, 0.0), (0.3, 0.0), (0.0, 0.0)])],
                    },
                },
            ],
            s_override: None,
        });
    }

    // E1.14: x d/dx + e^z y d/dy
    {
        let field = PolyVectorField::parse("x ; exp(z)*y ; 0", Polydisc::unit(3)).unwrap();
        let e_model = AnalyticSetModel::new(vec![axis_line("z-axis", 3, 2)]);
        let families = vec![
            LeafFamily {
                id: "sigma2",
                kind: FamilyKind::CoordLine {
                    moving: 0,
                    zero: vec![1],
                    nonzero: vec![],
                    punctured: true,
                },
            },
            LeafFamily {
                id: "sigma1",
                kind: FamilyKind::CoordLine {
                    moving: 1,
                    zero: vec![0],
                    nonzero: vec![],
                    punctured: true,
                },
            },
        ];
        out.push(Scenario {
            id: "E1.14",
            description: "exponentially fibered field x d/dx + e^z y d/dy; eta extends to all of M",
            field,
            e_model,
            families,
            sequences: Vec::new(),
            expectations: vec![
                Expectation {
                    id: "transversal_on_e",
                    citation: "Example 1.14",
                    check: Check::TransversalAt {
                        points: vec![
                            pt(&[(0.0, 0.0), (0.0, 0.0), (0.0, 0.0)]),
                            pt(&[(0.0, 0.0), (0.0, 0.0), (0.45, 0.0)]),
                            pt(&[(0.0, 0.0), (0.0, 0.0), (-0.3, 0.2)]),
                        ],
                        nbhd: None,
                        min_angle_at_least: 0.5,
                    },
                },
                Expectation {
                    id: "coordinate_planes_invariant",
                    citation: "Example 1.14",
                    check: Check::InvariantHypersurface { f_src: "x", expected: true },
                },
                Expectation {
                    id: "y_plane_invariant",
                    citation: "Example 1.14",
                    check: Check::InvariantHypersurface { f_src: "y", expected: true },
                },
                Expectation {
                    id: "scan_no_flags",
                    citation: "Example 1.14",
                    check: Check::ScanZeroFlags { grid: 10, gap_factor: 0.05 },
                },
            ],
            s_override: None,
        });
    }

    // E1.15: z d/dx + xy d/dy + xy d/dz
    {
        let field = PolyVectorField::parse("z ; x*y ; x*y", Polydisc::unit(3)).unwrap();
        let e_model =
            AnalyticSetModel::new(vec![axis_line("x-axis", 3, 0), axis_line("y-axis", 3, 1)]);
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
        let sequences = vec![
            SequenceSpec {
                id: "pn",
                citation: "Example 1.15",
                gen: SequenceGen::AxisInverse { base: Point::origin(3), moving: 2 },
            },
            SequenceSpec {
                id: "qn",
                citation: "Example 1.15",
                gen: SequenceGen::ChartLadder { at: pt(&[(0.5, 0.0), (0.125, 0.0), (0.125, 0.0)]) },
            },
        ];
        out.push(Scenario {
            id: "E1.15",
            description: "field z d/dx + xy d/dy + xy d/dz with a disc family and a punctured separatrix through 0",
            field,
            e_model,
            families,
            sequences,
            expectations: vec![
                Expectation {
                    id: "eta_pn_equals_one",
                    citation: "Example 1.15",
                    check: Check::EtaSequenceLimit {
                        sequence: "pn",
                        horizon: 200,
                        expected_eta: 1.0,
                        tol: 0.0,
                    },
                },
                Expectation {
                    id: "eta_qn_vanishes",
                    citation: "Example 1.15",
                    check: Check::EtaSequenceLimit {
                        sequence: "qn",
                        horizon: 25,
                        expected_eta: 0.0,
                        tol: 1e-10,
                    },
                },
                Expectation {
                    id: "gap_at_origin",
                    citation: "Example 1.15",
                    check: Check::DiscontinuityGap {
                        seq_high: "pn",
                        seq_low: "qn",
                        horizon: 200,
                        min_gap: 0.9,
                    },
                },
                Expectation {
                    id: "not_transversal_at_origin",
                    citation: "Example 1.15",
                    check: Check::NotTransversalAt {
                        points: vec![Point::origin(3), pt(&[(0.4, 0.0), (0.0, 0.0), (0.0, 0.0)])],
                        nbhd: Some(0.15),
                        witness_dir: Some(cv(&[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0)])),
                    },
                },
                Expectation {
                    id: "h_plane_invariant",
                    citation: "Example 1.15",
                    check: Check::InvariantHypersurface { f_src: "y", expected: true },
                },
                Expectation {
                    id: "uniformizer_limits_in_leaf_or_e",
                    citation: "Lemma 1.6",
                    check: Check::LimitImagesNearLeafOrE {
                        sequence: "pn",
                        horizon: 200,
                        max_dist: 0.02,
                    },
                },
                Expectation {
                    id: "singular_locus_on_axes",
                    citation: "Example 1.15",
                    check: Check::SingularLocusOnModel { grid_density: 4 },
                },
                Expectation {
                    id: "charts_consistent",
                    citation: "Example 1.15",
                    check: Check::ChartsValid {
                        probes: vec![
                            pt(&[(0.2, 0.0), (0.0, 0.0), (0.4, 0.0)]),
                            pt(&[(0.5, 0.0), (0.125, 0.0), (0.125, 0.0)]),
                        ],
                    },
                },
            ],
            s_override: None,
        });
    }

    // E1.16: x d/dx + zy d/dy
    {
        let field = PolyVectorField::parse(
            "x ; z*y ; 0",
            Polydisc::new(Point::origin(3), vec![1.0, 0.9, 0.8]),
        )
        .unwrap();
        let e_model =
            AnalyticSetModel::new(vec![axis_line("y-axis", 3, 1), axis_line("z-axis", 3, 2)]);
        let families = vec![
            LeafFamily {
                id: "sigma1",
                kind: FamilyKind::CoordLine {
                    moving: 1,
                    zero: vec![0],
                    nonzero: vec![2],
                    punctured: true,
                },
            },
            LeafFamily {
                id: "sigma3",
                kind: FamilyKind::CoordLine {
                    moving: 0,
                    zero: vec![2],
                    nonzero: vec![],
                    punctured: true,
                },
            },
            LeafFamily {
                id: "sigma2",
                kind: FamilyKind::CoordLine {
                    moving: 0,
                    zero: vec![1],
                    nonzero: vec![],
                    punctured: true,
                },
            },
        ];
        let y_axis_points = vec![
            pt(&[(0.0, 0.0), (0.45, 0.0), (0.0, 0.0)]),
            pt(&[(0.0, 0.0), (-0.3, 0.25), (0.0, 0.0)]),
        ];
        let z_axis_points = vec![
            pt(&[(0.0, 0.0), (0.0, 0.0), (0.4, 0.0)]),
            pt(&[(0.0, 0.0), (0.0, 0.0), (-0.35, 0.2)]),
        ];
        let sequences = vec![
            SequenceSpec {
                id: "pn",
                citation: "Example 1.16",
                gen: SequenceGen::AxisInverse {
                    base: pt(&[(0.0, 0.0), (0.45, 0.0), (0.0, 0.0)]),
                    moving: 2,
                },
            },
            SequenceSpec {
                id: "qn",
                citation: "Example 1.16",
                gen: SequenceGen::ChartLadder { at: pt(&[(0.45, 0.0), (0.45, 0.0), (0.0, 0.0)]) },
            },
        ];
        out.push(Scenario {
            id: "E1.16",
            description: "degenerate z-fibered field x d/dx + zy d/dy; eta extends to the z-axis but not to the y-axis",
            field,
            e_model,
            families,
            sequences,
            expectations: vec![
                Expectation {
                    id: "not_transversal_on_y_axis",
                    citation: "Example 1.16",
                    check: Check::NotTransversalAt {
                        points: y_axis_points.clone(),
                        nbhd: Some(0.2),
                        witness_dir: Some(cv(&[(0.0, 0.0), (1.0, 0.0), (0.0, 0.0)])),
                    },
                },
                Expectation {
                    id: "transversal_on_z_axis",
                    citation: "Example 1.16",
                    check: Check::TransversalAt {
                        points: z_axis_points.clone(),
                        nbhd: Some(0.2),
                        min_angle_at_least: 0.1,
                    },
                },
                Expectation {
                    id: "eta_pn_constant_nonzero",
                    citation: "Example 1.16",
                    check: Check::EtaSequenceConstant { sequence: "pn", horizon: 120 },
                },
                Expectation {
                    id: "eta_qn_vanishes",
                    citation: "Example 1.16",
                    check: Check::EtaSequenceLimit {
                        sequence: "qn",
                        horizon: 22,
                        expected_eta: 0.0,
                        tol: 1e-8,
                    },
                },
                Expectation {
                    id: "scan_flags_open_near_y_axis",
                    citation: "Example 1.16; Theorem 1.9(1)",
                    check: Check::ScanFlagsOnSeparatrixLeavesOnly {
                        grid: 10,
                        gap_factor: 0.05,
                        min_contiguous: 5,
                    },
                },
                Expectation {
                    id: "continuous_extension_on_z_axis",
                    citation: "Example 1.16",
                    check: Check::ContinuousAcrossFamiliesAt {
                        targets: z_axis_points,
                        max_gap: 1e-2,
                    },
                },
                Expectation {
                    id: "x_plane_invariant",
                    citation: "Example 1.16",
                    check: Check::InvariantHypersurface { f_src: "x", expected: true },
                },
                Expectation {
                    id: "y_plane_invariant",
                    citation: "Example 1.16",
                    check: Check::InvariantHypersurface { f_src: "y", expected: true },
                },
                Expectation {
                    id: "z_plane_invariant",
                    citation: "Example 1.16",
                    check: Check::InvariantHypersurface { f_src: "z", expected: true },
                },
                Expectation {
                    id: "separatrix_rays_complete",
                    citation: "Example 1.16; §3 (P.2)",
                    check: Check::CompleteAt {
                        targets: vec![
                            pt(&[(0.0, 0.0), (0.45, 0.0), (0.0, 0.0)]),
                            pt(&[(0.0, 0.0), (0.0, 0.0), (0.4, 0.0)]),
                        ],
                        kmax: 20,
                        expected: crate::eta::Completeness::Complete,
                    },
                },
                Expectation {
                    id: "singular_locus_on_axes",
                    citation: "Example 1.16",
                    check: Check::SingularLocusOnModel { grid_density: 4 },
                },
            ],
            s_override: None,
        });
    }

    // E1.17: same field as E1.5, eta-side expectations
    {
        let field = PolyVectorField::parse(
            "x ; z*y ; z*y",
            Polydisc::new(Point::origin(3), vec![1.0, 0.9, 0.8]),
        )
        .unwrap();
        let e_model =
            AnalyticSetModel::new(vec![axis_line("y-axis", 3, 1), axis_line("z-axis", 3, 2)]);
        let families = vec![
            LeafFamily {
                id: "sigma2",
                kind: FamilyKind::CoordLine {
                    moving: 0,
                    zero: vec![1],
                    nonzero: vec![],
                    punctured: true,
                },
            },
            LeafFamily {
                id: "sigma3",
                kind: FamilyKind::CoordLine {
                    moving: 0,
                    zero: vec![2],
                    nonzero: vec![],
                    punctured: true,
                },
            },
        ];
        out.push(Scenario {
            id: "E1.17",
            description: "transversal shared-component field; eta extends continuously to all of M",
            field,
            e_model,
            families,
            sequences: Vec::new(),
            expectations: vec![
                Expectation {
                    id: "transversal_everywhere",
                    citation: "Example 1.17; Example 1.5",
                    check: Check::TransversalAt {
                        points: vec![
                            pt(&[(0.0, 0.0), (0.4, 0.0), (0.0, 0.0)]),
                            pt(&[(0.0, 0.0), (0.0, 0.0), (0.4, 0.0)]),
                            Point::origin(3),
                        ],
                        nbhd: Some(0.15),
                        min_angle_at_least: 0.1,
                    },
                },
                Expectation {
                    id: "scan_no_flags",
                    citation: "Example 1.17",
                    check: Check::ScanZeroFlags { grid: 10, gap_factor: 0.05 },
                },
                Expectation {
                    id: "x_plane_invariant",
                    citation: "Example 1.17",
                    check: Check::InvariantHypersurface { f_src: "x", expected: true },
                },
                Expectation {
                    id: "y_plane_invariant",
                    citation: "Example 1.17",
                    check: Check::InvariantHypersurface { f_src: "y", expected: true },
                },
                Expectation {
                    id: "z_plane_invariant",
                    citation: "Example 1.17",
                    check: Check::InvariantHypersurface { f_src: "z", expected: true },
                },
            ],
            s_override: None,
        });
    }

    // E1.18: xy d/dx + zy d/dy + zx d/dz
    {
        let field = PolyVectorField::parse(
            "x*y ; z*y ; z*x",
            Polydisc::new(Point::origin(3), vec![1.0, 0.9, 0.8]),
        )
        .unwrap();
        let e_model = AnalyticSetModel::new(vec![
            axis_line("x-axis", 3, 0),
            axis_line("y-axis", 3, 1),
            axis_line("z-axis", 3, 2),
        ]);
        let families = vec![
            LeafFamily {
                id: "sigma3",
                kind: FamilyKind::CoordLine {
                    moving: 0,
                    zero: vec![2],
                    nonzero: vec![1],
                    punctured: true,
                },
            },
            LeafFamily {
                id: "sigma2",
                kind: FamilyKind::CoordLine {
                    moving: 2,
                    zero: vec![1],
                    nonzero: vec![0],
                    punctured: true,
                },
            },
            LeafFamily {
                id: "sigma1",
                kind: FamilyKind::CoordLine {
                    moving: 1,
                    zero: vec![0],
                    nonzero: vec![2],
                    punctured: true,
                },
            },
        ];
        let axis_points: Vec<Point> = vec![
            pt(&[(0.45, 0.0), (0.0, 0.0), (0.0, 0.0)]),
            pt(&[(-0.3, 0.2), (0.0, 0.0), (0.0, 0.0)]),
            pt(&[(0.7, 0.0), (0.0, 0.0), (0.0, 0.0)]),
            pt(&[(0.0, 0.0), (0.45, 0.0), (0.0, 0.0)]),
            pt(&[(0.0, 0.0), (-0.4, 0.0), (0.0, 0.0)]),
            pt(&[(0.0, 0.0), (0.3, 0.3), (0.0, 0.0)]),
            pt(&[(0.0, 0.0), (0.0, 0.0), (0.4, 0.0)]),
            pt(&[(0.0, 0.0), (0.0, 0.0), (-0.35, 0.0)]),
            pt(&[(0.0, 0.0), (0.0, 0.0), (0.2, -0.3)]),
            Point::origin(3),
        ];
        let sequences = vec![
            SequenceSpec {
                id: "pn",
                citation: "Example 1.18",
                gen: SequenceGen::AxisInverse {
                    base: pt(&[(0.45, 0.0), (0.0, 0.0), (0.0, 0.0)]),
                    moving: 1,
                },
            },
            SequenceSpec {
                id: "qn",
                citation: "Example 1.18",
                gen: SequenceGen::ChartLadder { at: pt(&[(0.45, 0.0), (0.0, 0.0), (0.3, 0.0)]) },
            },
        ];
        out.push(Scenario {
            id: "E1.18",
            description: "fully degenerate field xy d/dx + zy d/dy + zx d/dz; not transversal anywhere on E",
            field,
            e_model,
            families,
            sequences,
            expectations: vec![
                Expectation {
                    id: "not_transversal_on_axes",
                    citation: "Example 1.18",
                    check: Check::NotTransversalAt {
                        points: axis_points,
                        nbhd: Some(0.15),
                        witness_dir: None,
                    },
                },
                Expectation {
                    id: "eta_pn_constant_nonzero",
                    citation: "Example 1.18",
                    check: Check::EtaSequenceConstant { sequence: "pn", horizon: 120 },
                },
                Expectation {
                    id: "eta_qn_vanishes",
                    citation: "Example 1.18",
                    check: Check::EtaSequenceLimit {
                        sequence: "qn",
                        horizon: 22,
                        expected_eta: 0.0,
                        tol: 1e-8,
                    },
                },
                Expectation {
                    id: "scan_flags_open_near_axes",
                    citation: "Example 1.18; Theorem 1.9(1)",
                    check: Check::ScanFlagsOnSeparatrixLeavesOnly {
                        grid: 10,
                        gap_factor: 0.05,
                        min_contiguous: 5,
                    },
                },
                Expectation {
                    id: "x_plane_invariant",
                    citation: "Example 1.18",
                    check: Check::InvariantHypersurface { f_src: "x", expected: true },
                },
                Expectation {
                    id: "y_plane_invariant",
                    citation: "Example 1.18",
                    check: Check::InvariantHypersurface { f_src: "y", expected: true },
                },
                Expectation {
                    id: "z_plane_invariant",
                    citation: "Example 1.18",
                    check: Check::InvariantHypersurface { f_src: "z", expected: true },
                },
                Expectation {
                    id: "separatrix_rays_complete",
                    citation: "Example 1.18; §3 (P.2)",
                    check: Check::CompleteAt {
                        targets: vec![
                            pt(&[(0.45, 0.0), (0.0, 0.0), (0.0, 0.0)]),
                            pt(&[(0.0, 0.0), (0.45, 0.0), (0.0, 0.0)]),
                            pt(&[(0.0, 0.0), (0.0, 0.0), (0.4, 0.0)]),
                        ],
                        kmax: 20,
                        expected: crate::eta::Completeness::Complete,
                    },
                },
                Expectation {
                    id: "singular_locus_on_axes",
                    citation: "Example 1.18",
                    check: Check::SingularLocusOnModel { grid_density: 4 },
                },
            ],
            s_override: None,
        });
    }

    // E3.2: homogeneous (z1, z2)-fields with the z3-axis as singular set
    {
        let field = PolyVectorField::parse(
            "x ; y ; 0",
            Polydisc::new(Point::origin(3), vec![0.8, 0.8, 0.8]),
        )
        .unwrap();
        let e_model = AnalyticSetModel::new(vec![axis_line("z3-axis", 3, 2)]);
        let families = vec![LeafFamily { id: "line", kind: FamilyKind::PlaneLine { i: 0, j: 1, fixed: 2 } }];
        out.push(Scenario {
            id: "E3.2-k1",
            description: "radial homogeneous field (z1, z2, 0) of degree 1; complete at E",
            field,
            e_model,
            families,
            sequences: Vec::new(),
            expectations: vec![
                Expectation {
                    id: "comparison_constant_exact",
                    citation: "Example 3.2",
                    check: Check::Ex32Bounds {
                        k: 1,
                        rho: 0.5,
                        grid: 8,
                        c_low: 1.0,
                        c_high: 1.0,
                        tol: 1e-12,
                    },
                },
                Expectation {
                    id: "complete_at_e",
                    citation: "Example 3.2; Theorem 3.1",
                    check: Check::CompleteAt {
                        targets: vec![
                            pt(&[(0.0, 0.0), (0.0, 0.0), (0.2, 0.0)]),
                            pt(&[(0.0, 0.0), (0.0, 0.0), (-0.3, 0.1)]),
                        ],
                        kmax: 20,
                        expected: crate::eta::Completeness::Complete,
                    },
                },
                Expectation {
                    id: "transversal_on_e",
                    citation: "Example 3.2",
                    check: Check::TransversalAt {
                        points: vec![pt(&[(0.0, 0.0), (0.0, 0.0), (0.2, 0.0)])],
                        nbhd: Some(0.15),
                        min_angle_at_least: 0.5,
                    },
                },
                Expectation {
                    id: "singular_locus_on_axis",
                    citation: "Example 3.2",
                    check: Check::SingularLocusOnModel { grid_density: 4 },
                },
            ],
            s_override: None,
        });

        let field = PolyVectorField::parse(
            "x^2 ; y^2 ; 0",
            Polydisc::new(Point::origin(3), vec![0.8, 0.8, 0.8]),
        )
        .unwrap();
        let e_model = AnalyticSetModel::new(vec![axis_line("z3-axis", 3, 2)]);
        let families = vec![
            LeafFamily {
                id: "axis1",
                kind: FamilyKind::CoordLine {
                    moving: 0,
                    zero: vec![1],
                    nonzero: vec![],
                    punctured: true,
                },
            },
            LeafFamily {
                id: "axis2",
                kind: FamilyKind::CoordLine {
                    moving: 1,
                    zero: vec![0],
                    nonzero: vec![],
                    punctured: true,
                },
            },
            LeafFamily { id: "diagonal", kind: FamilyKind::PlaneDiagonal { i: 0, j: 1, fixed: 2 } },
        ];
        out.push(Scenario {
            id: "E3.2-k2",
            description: "homogeneous field (z1^2, z2^2, 0) of degree 2; complete at E",
            field,
            e_model,
            families,
            sequences: Vec::new(),
            expectations: vec![
                Expectation {
                    id: "comparison_constants",
                    citation: "Example 3.2",
                    check: Check::Ex32Bounds {
                        k: 2,
                        rho: 0.5,
                        grid: 12,
                        c_low: std::f64::consts::FRAC_1_SQRT_2,
                        c_high: 1.0,
                        tol: 5e-3,
                    },
                },
                Expectation {
                    id: "complete_at_e",
                    citation: "Example 3.2; Theorem 3.1",
                    check: Check::CompleteAt {
                        targets: vec![pt(&[(0.0, 0.0), (0.0, 0.0), (0.2, 0.0)])],
                        kmax: 20,
                        expected: crate::eta::Completeness::Complete,
                    },
                },
                Expectation {
                    id: "transversal_on_e",
                    citation: "Example 3.2",
                    check: Check::TransversalAt {
                        points: vec![pt(&[(0.0, 0.0), (0.0, 0.0), (0.2, 0.0)])],
                        nbhd: Some(0.15),
                        min_angle_at_least: 0.5,
                    },
                },
            ],
            s_override: None,
        });
    }

    // synthetic calibration scenarios
    {
        let field = PolyVectorField::parse("1", Polydisc::unit(1)).unwrap();
        out.push(Scenario {
            id: "synthetic-disc",
            description: "identity disc leaf in C^1 (length calibration)",
            field,
            e_model: AnalyticSetModel::empty(),
            families: vec![LeafFamily {
                id: "disc",
                kind: FamilyKind::Identity1D { punctured: false },
            }],
            sequences: Vec::new(),
            expectations: vec![Expectation {
                id: "disc_lengths_closed_form",
                citation: "§3 (P.2)",
                check: Check::LengthClosedFormDisc { eps: vec![1e-2, 1e-3], tol: 1e-3 },
            }],
            s_override: None,
        });

        let field = PolyVectorField::parse("x", Polydisc::unit(1)).unwrap();
        out.push(Scenario {
            id: "synthetic-punctured",
            description: "identity punctured-disc leaf in C^1 (length and completeness calibration)",
            field: field.clone(),
            e_model: AnalyticSetModel::new(vec![SetPiece::point("origin", Point::origin(1))]),
            families: vec![LeafFamily {
                id: "star",
                kind: FamilyKind::Identity1D { punctured: true },
            }],
            sequences: Vec::new(),
            expectations: vec![
                Expectation {
                    id: "punctured_lengths_closed_form",
                    citation: "§3 (P.2)",
                    check: Check::LengthClosedFormPunctured {
                        eps: vec![1e-2, 1e-4, 1e-6],
                        tol: 1e-3,
                    },
                },
                Expectation {
                    id: "complete_at_puncture",
                    citation: "§3 (P.2)",
                    check: Check::CompleteAt {
                        targets: vec![Point::origin(1)],
                        kmax: 20,
                        expected: crate::eta::Completeness::Complete,
                    },
                },
            ],
            s_override: None,
        });

        out.push(Scenario {
            id: "synthetic-flat",
            description: "punctured leaf with s pinned to 1 (incompleteness calibration)",
            field,
            e_model: AnalyticSetModel::new(vec![SetPiece::point("origin", Point::origin(1))]),
            families: vec![LeafFamily {
                id: "star",
                kind: FamilyKind::Identity1D { punctured: true },
            }],
            sequences: Vec::new(),
            expectations: vec![Expectation {
                id: "incomplete_at_puncture",
                citation: "§3 (P.2)",
                check: Check::CompleteAt {
                    targets: vec![Point::origin(1)],
                    kmax: 20,
                    expected: crate::eta::Completeness::Incomplete,
                },
            }],
            s_override: Some(1.0),
        });
    }

    out
}

static REGISTRY: OnceLock<Vec<Scenario>> = OnceLock::new();

pub fn builtin_scenarios() -> &'static [Scenario] {
    REGISTRY.get_or_init(build_scenarios)
}

pub fn find_scenario(id: &str) -> Result<&'static Scenario, ScenarioError> {
    builtin_scenarios()
        .iter()
        .find(|s| s.id == id)
        .ok_or_else(|| ScenarioError::Unknown(id.to_string()))
}
