//! Numerical laboratory for singular holomorphic foliations by curves on
//! polydiscs in C^n.
//!
//! The crate computes, for a foliation generated by a polynomial (or simple
//! analytic) vector field:
//!
//! * the Whitney-C4 tangent cone of the singular set and of the foliation at
//!   singular points, together with certified linear relations between
//!   limiting directions ([`variety`], [`cone`]);
//! * the transversality verdict at singular points ([`cone`]);
//! * the modulus of uniformization `eta` — exactly on registered disc and
//!   punctured-disc leaf charts, by certified lower/upper bounds elsewhere
//!   ([`eta`], [`leaf`]);
//! * leafwise Poincare lengths, completeness probes at the singular set, and
//!   the homogeneous-field density bounds ([`eta`]);
//! * the Hausdorff domain metric `rho` and the domain-functional convergence
//!   experiments ([`domain`]).
//!
//! Built-in scenarios ([`scenario`]) package the worked examples E1.3–E3.2
//! with declarative expected outcomes; [`report`] executes them and emits
//! PASS/FAIL lines with citations.

pub mod cone;
pub mod config;
pub mod csvfmt;
pub mod domain;
pub mod eta;
pub mod expr;
pub mod field;
pub mod leaf;
pub mod report;
pub mod scenario;
pub mod variety;

pub use expr::{Expr, ParseError, Poly, C};
pub use field::{Point, Polydisc, PolyVectorField, Tangent};

/// Environment variable capping the rayon worker count for all scans.
pub const THREADS_ENV: &str = "FOLIATION_LAB_THREADS";

/// Initialize the global thread pool from `FOLIATION_LAB_THREADS`.
///
/// Call once at process start; later calls are ignored. Results never depend
/// on the worker count (all parallel reductions are order-preserving).
pub fn init_parallelism() {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}
