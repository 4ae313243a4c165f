//! Execute a scenario's declared expectations and emit PASS/FAIL lines with
//! measured values and citations. Individual check errors are reported as
//! failures, never aborting the suite.

use crate::cone::{estimate_foliation_cone, is_transversal_type, ConeParams, Verdict};
use crate::csvfmt::fmt_f64;
use crate::eta::{
    completeness_probe, discontinuity_scan, family_limits_at, metric_length, sequence_report,
    GapTol, PathSpec,
};
use crate::expr::C;
use crate::field::{line_angle, Point, Tangent};
use crate::scenario::{Check, Scenario};
use crate::variety::{angle_to_span, is_invariant_hypersurface, singular_locus, tangent_cone_of_set};

#[derive(Clone, Debug)]
pub struct ReportLine {
    pub scenario: String,
    pub check_id: String,
    pub pass: bool,
    pub measured: String,
    pub expected: String,
    pub citation: String,
}

#[derive(Clone, Debug)]
pub struct ReportOutcome {
    pub lines: Vec<ReportLine>,
    pub all_pass: bool,
}

impl ReportOutcome {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            out.push_str(&format!(
                "[{}] {}: {} (measured: {}; expected: {}) — {}\n",
                l.scenario,
                l.check_id,
                if l.pass { "PASS" } else { "FAIL" },
                l.measured,
                l.expected,
                l.citation
            ));
        }
        out.push_str(&format!(
            "{}: {} of {} checks passed\n",
            if self.all_pass { "OK" } else { "FAILED" },
            self.lines.iter().filter(|l| l.pass).count(),
            self.lines.len()
        ));
        out
    }

    pub fn render_csv(&self) -> String {
        let mut out = String::from("scenario,check,status,measured,expected,citation\n");
        for l in &self.lines {
            out.push_str(&format!(
                "{},{},{},{:?},{:?},{:?}\n",
                l.scenario,
                l.check_id,
                if l.pass { "PASS" } else { "FAIL" },
                l.measured,
                l.expected,
                l.citation
            ));
        }
        out
    }
}

struct CheckResult {
    pass: bool,
    measured: String,
    expected: String,
}

fn ok(measured: String, expected: String) -> CheckResult {
    CheckResult { pass: true, measured, expected }
}

fn fail(measured: String, expected: String) -> CheckResult {
    CheckResult { pass: false, measured, expected }
}

/// Run every declared expectation of the scenario.
pub fn run_report(scenario: &Scenario, seed: u64) -> ReportOutcome {
    let mut lines = Vec::new();
    for exp in &scenario.expectations {
        let result = if exp.citation.trim().is_empty() {
            fail("missing citation".into(), "every expectation carries a citation".into())
        } else {
            run_check(scenario, &exp.check, seed)
        };
        lines.push(ReportLine {
            scenario: scenario.id.to_string(),
            check_id: exp.id.to_string(),
            pass: result.pass,
            measured: result.measured,
            expected: result.expected,
            citation: exp.citation.to_string(),
        });
    }
    let all_pass = lines.iter().all(|l| l.pass);
    ReportOutcome { lines, all_pass }
}

fn tangent_of(v: &[C]) -> Tangent {
    Tangent(v.to_vec())
}

fn run_check(scenario: &Scenario, check: &Check, seed: u64) -> CheckResult {
    let ctx = scenario.eta_ctx();
    match check {
        Check::ConeFullSpan { point } => {
            let params = ConeParams { seed, ..Default::default() };
            match estimate_foliation_cone(&scenario.field, &scenario.e_model, point, &params) {
                Ok(cone) => {
                    let n = scenario.domain().dim();
                    let full = cone.relations.is_empty()
                        && cone.span_hint.as_ref().map_or(false, |b| b.len() == n);
                    let measured = format!(
                        "{} directions, {} relations, span {}",
                        cone.directions.len(),
                        cone.relations.len(),
                        cone.span_hint.as_ref().map_or(0, |b| b.len())
                    );
                    let expected = format!("0 relations, 0.05-dense span of dimension {n}");
                    if full {
                        ok(measured, expected)
                    } else {
                        fail(measured, expected)
                    }
                }
                Err(e) => fail(format!("error: {e}"), "cone estimate".into()),
            }
        }
        Check::ConeRelationSpan { points, relation, span_dim, span_contains } => {
            let want_rel = tangent_of(relation);
            let mut worst_residual: f64 = 0.0;
            for (i, p) in points.iter().enumerate() {
                let params =
                    ConeParams { seed: seed ^ i as u64, num_scales: 12, ..Default::default() };
                let cone =
                    match estimate_foliation_cone(&scenario.field, &scenario.e_model, p, &params) {
                        Ok(c) => c,
                        Err(e) => return fail(format!("error at {p:?}: {e}"), "cone".into()),
                    };
                let found = cone
                    .relations
                    .iter()
                    .find(|r| line_angle(&tangent_of(&r.coeffs), &want_rel) < 1e-6);
                let rel = match found {
                    Some(r) => r,
                    None => {
                        return fail(
                            format!("no matching relation at point {i} ({} found)", cone.relations.len()),
                            "certified relation".into(),
                        )
                    }
                };
                worst_residual = worst_residual.max(rel.residual);
                if rel.residual > 1e-8 {
                    return fail(
                        format!("relation residual {:.3e}", rel.residual),
                        "residual <= 1e-8".into(),
                    );
                }
                let span = match &cone.span_hint {
                    Some(b) if b.len() == *span_dim => b.clone(),
                    other => {
                        return fail(
                            format!("span dim {:?} at point {i}", other.as_ref().map(|b| b.len())),
                            format!("coverage-certified span of dim {span_dim}"),
                        )
                    }
                };
                for v in span_contains {
                    let ang = angle_to_span(&tangent_of(v), &span);
                    if ang > 1e-6 {
                        return fail(
                            format!("span misses a generator by {ang:.3e} rad"),
                            "span contains the listed vectors".into(),
                        );
                    }
                }
            }
            ok(
                format!("relation residual <= {}", fmt_f64(worst_residual)),
                format!("relation + span at {} points", points.len()),
            )
        }
        Check::TransversalAt { points, nbhd, min_angle_at_least } => {
            let mut min_angle = f64::INFINITY;
            for (i, p) in points.iter().enumerate() {
                match is_transversal_type(&scenario.field, &scenario.e_model, p, 0.1, *nbhd, seed ^ i as u64) {
                    Ok(v) => {
                        min_angle = min_angle.min(v.min_angle);
                        if v.verdict != Verdict::Transversal {
                            return fail(
                                format!("verdict {} at point {i} (angle {:.3})", v.verdict, v.min_angle),
                                "transversal".into(),
                            );
                        }
                    }
                    Err(e) => return fail(format!("error at {p:?}: {e}"), "transversal".into()),
                }
            }
            let measured = if min_angle.is_finite() {
                format!("min angle {}", fmt_f64(min_angle))
            } else {
                "min angle inf (discrete E)".to_string()
            };
            if min_angle >= *min_angle_at_least {
                ok(measured, format!("transversal, angle >= {min_angle_at_least}"))
            } else {
                fail(measured, format!("angle >= {min_angle_at_least}"))
            }
        }
        Check::NotTransversalAt { points, nbhd, witness_dir } => {
            let mut worst_angle: f64 = 0.0;
            for (i, p) in points.iter().enumerate() {
                match is_transversal_type(&scenario.field, &scenario.e_model, p, 0.1, *nbhd, seed ^ i as u64) {
                    Ok(v) => {
                        if v.verdict != Verdict::NotTransversal {
                            return fail(
                                format!("verdict {} at point {i}", v.verdict),
                                "not_transversal".into(),
                            );
                        }
                        let w = match v.witness {
                            Some(w) => w,
                            None => return fail("missing witness".into(), "witness".into()),
                        };
                        worst_angle = worst_angle.max(w.angle);
                        if let Some(dir) = witness_dir {
                            let ang = line_angle(&w.direction, &tangent_of(dir));
                            if ang > 1e-3 {
                                return fail(
                                    format!("witness direction off by {ang:.3e} rad"),
                                    "witness within 1e-3 of the stated direction".into(),
                                );
                            }
                        }
                    }
                    Err(e) => return fail(format!("error at {p:?}: {e}"), "not_transversal".into()),
                }
            }
            ok(
                format!("witness angle <= {}", fmt_f64(worst_angle)),
                format!("not_transversal with realized witness at {} points", points.len()),
            )
        }
        Check::EtaSequenceLimit { sequence, horizon, expected_eta, tol } => {
            let seq = match scenario.sequence(sequence) {
                Ok(s) => s,
                Err(e) => return fail(format!("{e}"), "sequence".into()),
            };
            let pts = match seq.points(scenario, *horizon) {
                Ok(p) => p,
                Err(e) => return fail(format!("{e}"), "sequence points".into()),
            };
            let limit_pt = seq.limit_point(scenario);
            match sequence_report(&ctx, &pts, limit_pt.as_ref()) {
                Ok(rep) => {
                    let err = (rep.limit_eta - expected_eta).abs();
                    let measured = format!("limit eta {}", fmt_f64(rep.limit_eta));
                    let expected = format!("eta -> {} (tol {})", expected_eta, tol);
                    if err <= *tol {
                        ok(measured, expected)
                    } else {
                        fail(measured, expected)
                    }
                }
                Err(e) => fail(format!("error: {e}"), "sequence limit".into()),
            }
        }
        Check::EtaSequenceConstant { sequence, horizon } => {
            let seq = match scenario.sequence(sequence) {
                Ok(s) => s,
                Err(e) => return fail(format!("{e}"), "sequence".into()),
            };
            let pts = match seq.points(scenario, *horizon) {
                Ok(p) => p,
                Err(e) => return fail(format!("{e}"), "sequence points".into()),
            };
            match sequence_report(&ctx, &pts, None) {
                Ok(rep) => {
                    let first = rep.samples[0].eta;
                    let spread = rep
                        .samples
                        .iter()
                        .map(|s| (s.eta - first).abs())
                        .fold(0.0f64, f64::max);
                    let measured =
                        format!("eta {} with spread {}", fmt_f64(first), fmt_f64(spread));
                    if first > 1e-6 && spread <= 1e-12 * (1.0 + first) {
                        ok(measured, "constant nonzero eta along the sequence".into())
                    } else {
                        fail(measured, "constant nonzero eta along the sequence".into())
                    }
                }
                Err(e) => fail(format!("error: {e}"), "sequence".into()),
            }
        }
        Check::DiscontinuityGap { seq_high, seq_low, horizon, min_gap } => {
            let run = |id: &str, horizon: usize| -> Result<f64, String> {
                let seq = scenario.sequence(id).map_err(|e| e.to_string())?;
                let pts = seq.points(scenario, horizon).map_err(|e| e.to_string())?;
                let rep = sequence_report(&ctx, &pts, None).map_err(|e| e.to_string())?;
                Ok(rep.limit_eta)
            };
            match (run(seq_high, *horizon), run(seq_low, *horizon)) {
                (Ok(hi), Ok(lo)) => {
                    let gap = (hi - lo).abs();
                    let measured = format!("gap {}", fmt_f64(gap));
                    if gap >= *min_gap {
                        ok(measured, format!("gap >= {min_gap}"))
                    } else {
                        fail(measured, format!("gap >= {min_gap}"))
                    }
                }
                (Err(e), _) | (_, Err(e)) => fail(format!("error: {e}"), "gap".into()),
            }
        }
        Check::ScanZeroFlags { grid, gap_factor } => {
            match discontinuity_scan(&ctx, *grid, GapTol::FactorOfMaxS(*gap_factor)) {
                Ok(rep) => {
                    let measured = format!(
                        "{} flags on {} rows ({} chartless probes skipped)",
                        rep.flags.len(),
                        rep.rows.len(),
                        rep.skipped_no_chart
                    );
                    if rep.flags.is_empty() {
                        ok(measured, "zero flags".into())
                    } else {
                        fail(measured, "zero flags".into())
                    }
                }
                Err(e) => fail(format!("error: {e}"), "scan".into()),
            }
        }
        Check::ScanFlagsOnSeparatrixLeavesOnly { grid, gap_factor, min_contiguous } => {
            match discontinuity_scan(&ctx, *grid, GapTol::FactorOfMaxS(*gap_factor)) {
                Ok(rep) => {
                    if rep.flags.is_empty() {
                        return fail("zero flags".into(), "flags near the degenerate axes".into());
                    }
                    // every flagged row sits on a separatrix-adjacent leaf
                    for (row_idx, _) in &rep.flags {
                        let row = &rep.rows[*row_idx];
                        let chart = match scenario.classify(&row.point) {
                            Some(c) => c,
                            None => {
                                return fail(
                                    "flagged row without a chart".into(),
                                    "flags only on registered leaves".into(),
                                )
                            }
                        };
                        let target = chart.puncture_image();
                        let sep = target.map_or(false, |t| scenario.e_model.contains(&t, 1e-8));
                        if !sep {
                            return fail(
                                format!("flag on non-separatrix leaf {}", chart.id),
                                "flags only on separatrix-adjacent leaves".into(),
                            );
                        }
                    }
                    // open patch: a contiguous run of flagged cells on a leaf
                    let mut best_run = 0usize;
                    let mut by_leaf: std::collections::BTreeMap<String, Vec<&crate::eta::ScanRow>> =
                        std::collections::BTreeMap::new();
                    for (row_idx, _) in &rep.flags {
                        let row = &rep.rows[*row_idx];
                        if let Some(s) = &row.sample {
                            if let Some(leaf) = &s.leaf_ref {
                                by_leaf.entry(leaf.clone()).or_default().push(row);
                            }
                        }
                    }
                    for rows in by_leaf.values() {
                        // find the axis along which the leaf's rows vary
                        let n = rows[0].index.len();
                        for axis in 0..n {
                            let mut idx: Vec<usize> = rows.iter().map(|r| r.index[axis]).collect();
                            idx.sort_unstable();
                            idx.dedup();
                            if idx.len() < 2 {
                                continue;
                            }
                            let mut run = 1usize;
                            let mut max_run = 1usize;
                            for w in idx.windows(2) {
                                if w[1] == w[0] + 1 {
                                    run += 1;
                                } else {
                                    run = 1;
                                }
                                max_run = max_run.max(run);
                            }
                            best_run = best_run.max(max_run);
                        }
                    }
                    let measured = format!(
                        "{} flags, longest contiguous run {best_run}",
                        rep.flags.len()
                    );
                    if best_run >= *min_contiguous {
                        ok(measured, format!("open flagged patch (run >= {min_contiguous})"))
                    } else {
                        fail(measured, format!("open flagged patch (run >= {min_contiguous})"))
                    }
                }
                Err(e) => fail(format!("error: {e}"), "scan".into()),
            }
        }
        Check::InvariantHypersurface { f_src, expected } => {
            let n = scenario.domain().dim();
            let f = match crate::expr::parse_expr(f_src, n) {
                Ok(e) => match e.as_poly() {
                    Some(p) => p.clone(),
                    None => return fail("not polynomial".into(), "polynomial f".into()),
                },
                Err(e) => return fail(format!("parse error: {e}"), "polynomial f".into()),
            };
            match is_invariant_hypersurface(&f, &scenario.field) {
                Ok(got) => {
                    let measured = format!("invariant = {got}");
                    if got == *expected {
                        ok(measured, format!("invariant = {expected}"))
                    } else {
                        fail(measured, format!("invariant = {expected}"))
                    }
                }
                Err(e) => fail(format!("inconclusive: {e}"), format!("invariant = {expected}")),
            }
        }
        Check::SingularLocusOnModel { grid_density } => {
            match singular_locus(&scenario.field, *grid_density) {
                Ok(locus) => {
                    let empty_e = scenario.e_model.is_empty();
                    if empty_e {
                        return if locus.points.is_empty() {
                            ok("no zeros found".into(), "empty singular set".into())
                        } else {
                            fail(
                                format!("{} spurious zeros", locus.points.len()),
                                "empty singular set".into(),
                            )
                        };
                    }
                    if locus.points.is_empty() {
                        return fail("no zeros found".into(), "zeros on the E model".into());
                    }
                    let worst = locus
                        .points
                        .iter()
                        .map(|p| scenario.e_model.distance(p))
                        .fold(0.0f64, f64::max);
                    let measured = format!(
                        "{} zeros, max distance to model {}",
                        locus.points.len(),
                        fmt_f64(worst)
                    );
                    if worst <= 1e-8 {
                        ok(measured, "all zeros within 1e-8 of the model".into())
                    } else {
                        fail(measured, "all zeros within 1e-8 of the model".into())
                    }
                }
                Err(e) => fail(format!("error: {e}"), "singular locus".into()),
            }
        }
        Check::CompleteAt { targets, kmax, expected } => {
            for t in targets {
                match completeness_probe(&ctx, t, *kmax) {
                    Ok(rep) => {
                        if rep.verdict != *expected {
                            return fail(
                                format!("verdict {} at {t:?}", rep.verdict),
                                format!("{expected}"),
                            );
                        }
                    }
                    Err(e) => return fail(format!("error at {t:?}: {e}"), format!("{expected}")),
                }
            }
            ok(format!("verdict {expected} at {} targets", targets.len()), format!("{expected}"))
        }
        Check::LimitImagesNearLeafOrE { sequence, horizon, max_dist } => {
            let seq = match scenario.sequence(sequence) {
                Ok(s) => s,
                Err(e) => return fail(format!("{e}"), "sequence".into()),
            };
            let pts = match seq.points(scenario, *horizon) {
                Ok(p) => p,
                Err(e) => return fail(format!("{e}"), "sequence points".into()),
            };
            let limit_pt = seq.limit_point(scenario);
            match sequence_report(&ctx, &pts, limit_pt.as_ref()) {
                Ok(rep) => match rep.image_max_dist {
                    Some(d) => {
                        let measured = format!("max image distance {}", fmt_f64(d));
                        if d <= *max_dist {
                            ok(measured, format!("<= {max_dist}"))
                        } else {
                            fail(measured, format!("<= {max_dist}"))
                        }
                    }
                    None => fail("no image data".into(), "uniformizer images".into()),
                },
                Err(e) => fail(format!("error: {e}"), "sequence".into()),
            }
        }
        Check::ContinuousAcrossFamiliesAt { targets, max_gap } => {
            let mut worst: f64 = 0.0;
            for t in targets {
                let (witness, _) = family_limits_at(&ctx, t);
                if witness.family_limits.len() < 2 {
                    return fail(
                        format!("only {} family limits at {t:?}", witness.family_limits.len()),
                        "two comparable families".into(),
                    );
                }
                worst = worst.max(witness.gap);
            }
            let measured = format!("max family gap {}", fmt_f64(worst));
            if worst <= *max_gap {
                ok(measured, format!("gap <= {max_gap}"))
            } else {
                fail(measured, format!("gap <= {max_gap}"))
            }
        }
        Check::Ex32Bounds { k, rho, grid, c_low, c_high, tol } => {
            match crate::eta::ex32_bounds_check(&scenario.field, *k, *rho, *grid) {
                Ok((lo, hi)) => {
                    let measured = format!("C_low {} C_high {}", fmt_f64(lo), fmt_f64(hi));
                    let expected = format!("C_low {} C_high {} (tol {})", c_low, c_high, tol);
                    if (lo - c_low).abs() <= *tol && (hi - c_high).abs() <= *tol {
                        ok(measured, expected)
                    } else {
                        fail(measured, expected)
                    }
                }
                Err(e) => fail(format!("error: {e}"), "bounds".into()),
            }
        }
        Check::LengthClosedFormPunctured { eps, tol } => {
            let dir = Tangent::unit(1, 0);
            for &e in eps {
                let path = PathSpec::radial_geometric(&dir, e, 0.5);
                match metric_length(&ctx, &path, 2048, 0.0) {
                    Ok(rep) => {
                        let want = (1.0f64 / e).ln().ln() - 2.0f64.ln().ln();
                        if (rep.length - want).abs() > *tol {
                            return fail(
                                format!("length {} at eps {e}", fmt_f64(rep.length)),
                                format!("ln ln(1/eps) - ln ln 2 = {}", fmt_f64(want)),
                            );
                        }
                    }
                    Err(err) => return fail(format!("error: {err}"), "length".into()),
                }
            }
            ok(format!("{} epsilon rungs match", eps.len()), format!("within {tol}"))
        }
        Check::LengthClosedFormDisc { eps, tol } => {
            for &e in eps {
                let path = PathSpec::linear(&Point::origin(1), &Point::from_re(&[1.0 - e]));
                match metric_length(&ctx, &path, 4096, 0.0) {
                    Ok(rep) => {
                        let want = ((2.0 - e) / e).ln();
                        if (rep.length - want).abs() > *tol {
                            return fail(
                                format!("length {} at eps {e}", fmt_f64(rep.length)),
                                format!("ln((2-eps)/eps) = {}", fmt_f64(want)),
                            );
                        }
                    }
                    Err(err) => return fail(format!("error: {err}"), "length".into()),
                }
            }
            ok(format!("{} epsilon rungs match", eps.len()), format!("within {tol}"))
        }
        Check::ChartsValid { probes } => {
            for p in probes {
                let chart = match scenario.classify(p) {
                    Some(c) => c,
                    None => return fail(format!("no chart at {p:?}"), "registered chart".into()),
                };
                if let Err(e) = chart.validate(Some(&scenario.field), &scenario.e_model) {
                    return fail(format!("{e}"), "chart invariants".into());
                }
            }
            ok(format!("{} charts validated", probes.len()), "chart invariants hold".into())
        }
    }
}

/// Cone estimate for a scenario, as used by the CLI `cone` subcommand.
pub fn cone_csv(scenario: &Scenario, p: &Point, params: &ConeParams) -> Result<String, String> {
    let cone = estimate_foliation_cone(&scenario.field, &scenario.e_model, p, params)
        .map_err(|e| e.to_string())?;
    let n = scenario.domain().dim();
    let mut out = String::new();
    let header: Vec<String> = (1..=n)
        .flat_map(|j| vec![format!("comp{j}_re"), format!("comp{j}_im")])
        .collect();
    out.push_str(&format!("kind,{},scale\n", header.join(",")));
    for d in &cone.directions {
        out.push_str(&format!(
            "direction,{},{}\n",
            crate::csvfmt::fmt_point(&d.dir.0),
            d.scale.map(fmt_f64).unwrap_or_default()
        ));
    }
    for r in &cone.relations {
        out.push_str(&format!("relation,{},\n", crate::csvfmt::fmt_point(&r.coeffs)));
    }
    if let Some(basis) = &cone.span_hint {
        for b in basis {
            out.push_str(&format!("span,{},\n", crate::csvfmt::fmt_point(&b.0)));
        }
    }
    Ok(out)
}

/// Set-cone estimate (shares the CSV shape with `cone_csv`).
pub fn set_cone_csv(scenario: &Scenario, p: &Point, seed: u64) -> Result<String, String> {
    let cone = tangent_cone_of_set(&scenario.e_model, p, 8, 12, seed).map_err(|e| e.to_string())?;
    let n = scenario.domain().dim();
    let mut out = String::new();
    let header: Vec<String> = (1..=n)
        .flat_map(|j| vec![format!("comp{j}_re"), format!("comp{j}_im")])
        .collect();
    out.push_str(&format!("kind,{},scale\n", header.join(",")));
    for d in &cone.directions {
        out.push_str(&format!(
            "direction,{},{}\n",
            crate::csvfmt::fmt_point(&d.dir.0),
            d.scale.map(fmt_f64).unwrap_or_default()
        ));
    }
    for r in &cone.relations {
        out.push_str(&format!("relation,{},\n", crate::csvfmt::fmt_point(&r.coeffs)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::find_scenario;

    #[test]
    fn synthetic_scenarios_report_all_pass() {
        for id in ["synthetic-disc", "synthetic-punctured", "synthetic-flat"] {
            let s = find_scenario(id).unwrap();
            let outcome = run_report(s, 7);
            assert!(outcome.all_pass, "{id}: {}", outcome.render_text());
        }
    }

    #[test]
    fn report_is_deterministic() {
        let s = find_scenario("synthetic-punctured").unwrap();
        let a = run_report(s, 42).render_csv();
        let b = run_report(s, 42).render_csv();
        assert_eq!(a, b);
    }

    #[test]
    fn report_text_mentions_every_check() {
        let s = find_scenario("E1.4").unwrap();
        let outcome = run_report(s, 3);
        let text = outcome.render_text();
        for exp in &s.expectations {
            assert!(text.contains(exp.id), "missing {}", exp.id);
        }
    }
}
