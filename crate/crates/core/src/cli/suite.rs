//! `coarsedim verify`: a compact pass over the invariants of every module.

use std::sync::Arc;

use serde::Serialize;
use serde_json::json;

use super::{arc, envelope, CliError, Output, VerifyArgs};
use crate::covers::{best_effort_decomposition, disjoint_to_cover};
use crate::groups::amalgam::{amalgam_projection, CyclicAmalgam};
use crate::groups::bounds::{asdim_upper_bound, BoundExpr};
use crate::groups::cayley::{cayley_ball, left_invariance_check, AbelianGroup, Heisenberg};
use crate::groups::extension::{heisenberg_abelianization, kernel_neighborhood_check};
use crate::groups::{Element, GroupError, GroupModel};
use crate::hurewicz::{assemble, HurewiczConfig};
use crate::metric::{FiniteMetricSpace, MetricMap, TripleCheck};
use crate::polyhedra::{measure_uniformization_constant, projection_lipschitz_check};

#[derive(Debug, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// `Z²` with a defect: multiplying `(2, 0)` by anything of length above 1
/// shifts the second coordinate. Left translation by `(2, 0)` is then no
/// longer an isometry.
struct SkewedPlane;

impl GroupModel for SkewedPlane {
    fn name(&self) -> String {
        "skewed Z^2".into()
    }

    fn identity(&self) -> Element {
        vec![0, 0]
    }

    fn generators(&self) -> Vec<(String, Element)> {
        AbelianGroup::free(2).generators()
    }

    fn multiply(&self, a: &Element, b: &Element) -> Result<Element, GroupError> {
        let mut c = vec![a[0] + b[0], a[1] + b[1]];
        if a[..] == [2, 0] && b[0].abs() + b[1].abs() > 1 {
            c[1] += 1;
        }
        Ok(c)
    }
}

type Check = Box<dyn Fn() -> Result<String, String>>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn checks(inject_fault: bool) -> Vec<(&'static str, Check)> {
    vec![
        (
            "metric axioms on a 6x6 grid",
            Box::new(|| {
                let r = FiniteMetricSpace::grid(6, 6).map_err(err)?.verify_axioms(TripleCheck::Exhaustive).map_err(err)?;
                Ok(format!("{} triples", r.triples_checked))
            }),
        ),
        (
            "colored decomposition and nerve projection on a 10x10 grid",
            Box::new(|| {
                let s = arc(FiniteMetricSpace::grid(10, 10).map_err(err)?);
                let solved = best_effort_decomposition(&s, &s.all_points(), 1.0, 3.0).map_err(err)?;
                let cover = disjoint_to_cover(&solved.decomposition).map_err(err)?;
                let p = projection_lipschitz_check(&cover).map_err(err)?;
                if !p.holds() {
                    return Err(format!("projection Lipschitz {} above bound {} at {:?}", p.measured, p.bound, p.witness));
                }
                Ok(format!("{} colors, projection {:.4} <= {:.4}", solved.decomposition.colors(), p.measured, p.bound))
            }),
        ),
        (
            "mapping cylinder constant in dimension 1",
            Box::new(|| {
                let m = measure_uniformization_constant(1);
                if m.constant >= 1.0 && m.constant.is_finite() {
                    Ok(format!("c_1 = {:.4} over {} maps", m.constant, m.maps))
                } else {
                    Err(format!("c_1 = {}", m.constant))
                }
            }),
        ),
        (
            "tower assembly on a 30x3 grid",
            Box::new(|| {
                let x = Arc::new(FiniteMetricSpace::grid(30, 3).map_err(err)?);
                let y = Arc::new(FiniteMetricSpace::path(30).map_err(err)?);
                let f = MetricMap::new(x, y, (0..90).map(|p| p / 3).collect()).map_err(err)?;
                let cfg = HurewiczConfig::new(f, 1.0, 1, 1, vec![1.0; 3], Some(2.0)).map_err(err)?;
                let rep = assemble(cfg).map_err(err)?.report;
                if !rep.dimension_ok() {
                    return Err(format!("dim K = {} above n + k", rep.dim_k));
                }
                if !rep.face_agreement.holds(super::commands::FACE_TOLERANCE) {
                    return Err(format!("faces disagree by {} at {:?}", rep.face_agreement.max_deviation, rep.face_agreement.witness));
                }
                if !rep.cobounded() {
                    return Err(format!("cobound {} above {}", rep.cobound, rep.cobound_limit));
                }
                Ok(format!("dim K = {}, {} towers", rep.dim_k, rep.towers.len()))
            }),
        ),
        (
            "left invariance of the word metric",
            Box::new(move || {
                let group: Box<dyn GroupModel> =
                    if inject_fault { Box::new(SkewedPlane) } else { Box::new(AbelianGroup::free(2)) };
                let inv = left_invariance_check(group.as_ref(), 3).map_err(err)?;
                match inv.witness {
                    None => Ok(format!("{} triples on {}", inv.triples_checked, group.name())),
                    Some((g, x, y)) => Err(format!("d(gx, gy) != d(x, y) for g = {g}, x = {x}, y = {y}")),
                }
            }),
        ),
        (
            "Heisenberg ball sizes",
            Box::new(|| {
                let sizes: Vec<usize> = (0..=2)
                    .map(|r| cayley_ball(&Heisenberg, r, 100_000).map(|b| b.elements.len()))
                    .collect::<Result<_, _>>()
                    .map_err(err)?;
                if sizes[..2] == [1, 5] {
                    Ok(format!("{sizes:?}"))
                } else {
                    Err(format!("{sizes:?}"))
                }
            }),
        ),
        (
            "kernel neighborhoods for Heisenberg onto Z^2",
            Box::new(|| {
                let z2 = AbelianGroup::free(2);
                for r in 0..=2 {
                    let c = kernel_neighborhood_check(&Heisenberg, &z2, &heisenberg_abelianization, r, 5).map_err(err)?;
                    if let Some(w) = c.witness {
                        return Err(format!("R = {r}: sets differ at {w}"));
                    }
                }
                Ok("R = 0, 1, 2 on B_5".into())
            }),
        ),
        (
            "amalgam coset projection",
            Box::new(|| {
                let rep = amalgam_projection(&CyclicAmalgam::z2_z3(), 3).map_err(err)?;
                if rep.slotwise_max <= 1.0 + 1e-12 {
                    Ok(format!("slotwise {:.3}, literal {:.3}", rep.slotwise_max, rep.literal_max))
                } else {
                    Err(format!("slotwise ratio {} at {:?}", rep.slotwise_max, rep.slotwise_witness))
                }
            }),
        ),
        (
            "polycyclic bound",
            Box::new(|| {
                let series = "ZZZ".parse().map_err(err)?;
                let b = asdim_upper_bound(&BoundExpr::Polycyclic { series }).map_err(err)?.bound;
                if b == 3 {
                    Ok("asdim <= 3".into())
                } else {
                    Err(format!("got {b}"))
                }
            }),
        ),
    ]
}

pub fn verify(args: &VerifyArgs, out: &Output) -> Result<(), CliError> {
    let outcomes: Vec<CheckOutcome> = checks(args.inject_fault)
        .into_iter()
        .map(|(name, check)| {
            let (passed, detail) = match check() {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckOutcome { name, passed, detail }
        })
        .collect();
    if args.json {
        let result = json!({ "checks": outcomes });
        out.json(&envelope("verify", json!({ "inject_fault": args.inject_fault }), None, "module invariants", result))?;
    } else {
        let text: Vec<String> = outcomes
            .iter()
            .map(|o| format!("{} {}: {}", if o.passed { "ok  " } else { "FAIL" }, o.name, o.detail))
            .collect();
        out.emit(&text.join("\n"))?;
    }
    match outcomes.iter().find(|o| !o.passed) {
        None => Ok(()),
        Some(o) => Err(CliError::Invariant(format!("{}: {}", o.name, o.detail))),
    }
}
