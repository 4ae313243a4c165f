use foliation_lab::cone::*;
use foliation_lab::field::*;
use foliation_lab::variety::*;
use std::time::Instant;

#[test]
fn profile_cone() {
    let f = PolyVectorField::parse("x ; (2+z)*y ; 0", Polydisc::unit(3)).unwrap();
    let e = AnalyticSetModel::new(vec![SetPiece::linear("z", Point::origin(3), vec![Tangent::unit(3,2)])]);
    let p = Point::new(vec![Default::default(), Default::default(), foliation_lab::expr::C::new(0.3,0.0)]);
    let t0 = Instant::now();
    let cone = estimate_foliation_cone(&f, &e, &p, &ConeParams { seed: 5, ..Default::default() }).unwrap();
    println!("total {:?} dirs {} rels {} span {:?}", t0.elapsed(), cone.directions.len(), cone.relations.len(), cone.span_hint.as_ref().map(|b| b.len()));
}
