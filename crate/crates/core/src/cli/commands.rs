use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    arc, envelope, grid_dims, load_space, read_json, CliError, CoverCmd, DecompositionDoc, FreeprodArgs, GroupCmd,
    HurewiczArgs, Output, SpaceCmd, SpaceDoc, Workspace,
};
use crate::covers::{best_effort_decomposition, colored_decomposition, scale_dimension_profile, ColoredDecomposition, SolveMode};
use crate::groups::amalgam::{amalgam_projection, CyclicAmalgam};
use crate::groups::bounds::{asdim_upper_bound, BoundExpr};
use crate::groups::cayley::{cayley_ball, left_invariance_check, AbelianGroup, Heisenberg};
use crate::groups::extension::{heisenberg_abelianization, kernel_neighborhood_check};
use crate::groups::free_product::{
    free_product_space, free_product_tree, stratification_inclusions, tree_projection, FreeProduct, PointedSpace,
    WordMetric, WordSpace, WORD_CAP,
};
use crate::groups::hyperbolic::{
    geometric_radii, height_projection, hyperbolization, tree_target_report, TREE_REPORT_SEED,
};
use crate::groups::{GroupError, GroupSpec};
use crate::hurewicz::{assemble, discrete_geodesic_witness, HurewiczConfig};
use crate::metric::{measured_lipschitz, FiniteMetricSpace, MetricMap, PairBudget, TripleCheck};
use crate::polyhedra::uniformization_table;

/// Tolerance for the face-agreement check of assembled towers.
pub const FACE_TOLERANCE: f64 = 1e-9;

pub fn space(cmd: &SpaceCmd, out: &Output) -> Result<(), CliError> {
    match cmd {
        SpaceCmd::Build { spec } => {
            let words: Vec<&str> = spec.iter().map(String::as_str).collect();
            let space = match words.as_slice() {
                ["grid", w, h] => load_space(&format!("grid:{w}x{h}"))?,
                ["path", n] => load_space(&format!("path:{n}"))?,
                ["cycle", n] => load_space(&format!("cycle:{n}"))?,
                ["matrix" | "graph", file] => load_space(file)?,
                _ => return Err(CliError::Input(format!("unrecognized space description {:?}", spec.join(" ")))),
            };
            out.json(&serde_json::to_value(SpaceDoc::of(&space))?)
        }
        SpaceCmd::Check { space, exhaustive } => {
            let s = load_space(space)?;
            let check = if *exhaustive { TripleCheck::Exhaustive } else { TripleCheck::default_for(s.len()) };
            let seed = match check {
                TripleCheck::Sampled { seed, .. } => Some(seed),
                TripleCheck::Exhaustive => None,
            };
            let report = s.verify_axioms(check)?;
            out.json(&envelope("space check", json!({ "space": space }), seed, "metric axioms", serde_json::to_value(report)?))
        }
        SpaceCmd::Info { space } => {
            let s = load_space(space)?;
            let result = json!({
                "points": s.len(),
                "diameter": s.diameter(),
                "min_positive_distance": s.min_positive_distance(),
                "provenance": s.provenance(),
                "integral": s.is_integral(),
                "non_geodesic_pair": discrete_geodesic_witness(&s),
            });
            out.json(&envelope("space info", json!({ "space": space }), None, "summary", result))
        }
    }
}

/// `None` is `auto`: exact within the cluster cap, greedy beyond it.
fn parse_mode(mode: &str) -> Result<Option<SolveMode>, CliError> {
    match mode {
        "auto" => Ok(None),
        "exact" => Ok(Some(SolveMode::Exact)),
        "greedy" => Ok(Some(SolveMode::Greedy)),
        other => Err(CliError::Input(format!("mode must be auto, exact or greedy, got {other:?}"))),
    }
}

pub fn cover(cmd: &CoverCmd, out: &Output) -> Result<(), CliError> {
    match cmd {
        CoverCmd::Solve { space, d, b, mode } => {
            let s = arc(load_space(space)?);
            let universe = s.all_points();
            let solved = match parse_mode(mode)? {
                Some(m) => colored_decomposition(&s, &universe, *d, *b, m)?,
                None => best_effort_decomposition(&s, &universe, *d, *b)?,
            };
            let dec = &solved.decomposition;
            let result = json!({
                "D": d,
                "B": b,
                "colors": dec.colors(),
                "kind": solved.kind.label(),
                "clusters": solved.clusters,
                "offset": solved.offset,
                "mesh": dec.mesh(),
                "universe": dec.universe(),
                "families": dec.families(),
            });
            let params = json!({ "space": space, "D": d, "B": b, "mode": mode });
            out.json(&envelope("cover solve", params, None, "ball carving and coloring", result))
        }
        CoverCmd::Verify { space, cover } => {
            let s = arc(load_space(space)?);
            let doc: DecompositionDoc = read_json(cover)?;
            let universe = doc.universe.clone().unwrap_or_else(|| s.all_points());
            let dec = ColoredDecomposition::new(s, universe, doc.families, doc.d, doc.b)?;
            let result = json!({ "valid": true, "colors": dec.colors(), "mesh": dec.mesh() });
            let params = json!({ "space": space, "cover": cover });
            out.json(&envelope("cover verify", params, None, "disjointness, mesh and covering", result))
        }
        CoverCmd::Profile { space, d_list, multiplier } => {
            let s = arc(load_space(space)?);
            let rows = scale_dimension_profile(&s, d_list, *multiplier)?;
            let mut csv = String::from("D,B,colors,mode,seconds\n");
            for r in rows {
                let _ = writeln!(csv, "{},{},{},{},{:.6}", r.d, r.b, r.colors, r.mode, r.seconds);
            }
            out.emit(csv.trim_end())
        }
    }
}

#[derive(Debug, Deserialize)]
struct MapDoc {
    codomain: String,
    images: Vec<usize>,
}

fn load_map(space_spec: &str, map: &str) -> Result<MetricMap<FiniteMetricSpace>, CliError> {
    let domain = arc(load_space(space_spec)?);
    let n = domain.len();
    let (codomain, images) = match map {
        "projection" => {
            let (w, h) = grid_dims(space_spec)
                .ok_or_else(|| CliError::Input("the projection map needs a grid:WxH space".into()))?;
            (arc(FiniteMetricSpace::path(w)?), (0..n).map(|p| p / h).collect())
        }
        "constant" => (arc(FiniteMetricSpace::path(1)?), vec![0; n]),
        file => {
            let doc: MapDoc = read_json(Path::new(file))?;
            (arc(load_space(&doc.codomain)?), doc.images)
        }
    };
    Ok(MetricMap::new(domain, codomain, images)?)
}

pub fn hurewicz(args: &HurewiczArgs, ws: &Workspace, out: &Output) -> Result<(), CliError> {
    let f = load_map(&args.space, &args.map)?;
    let r = match args.r.as_str() {
        "auto" => None,
        v => Some(v.parse::<f64>().map_err(|_| CliError::Input(format!("--r must be auto or a number, got {v:?}")))?),
    };
    let top = args.n + args.k;
    let (c_table, cache) = ws.cached("uniformization", &json!({ "max": top }), || Ok(uniformization_table(top)))?;
    let config = HurewiczConfig::new(f, args.epsilon, args.n, args.k, c_table, r)?.with_mesh_multiplier(args.mesh_multiplier);
    if config.below_required() {
        eprintln!(
            "warning: r = {} is below the required scale {}; the epsilon bound is not guaranteed",
            config.r, config.required_r
        );
    }
    let asm = assemble(config)?;
    let report = &asm.report;
    let checks = json!({
        "dimension_ok": report.dimension_ok(),
        "cobounded": report.cobounded(),
        "faces_agree": report.face_agreement.holds(FACE_TOLERANCE),
        "lipschitz_within_epsilon": report.lipschitz_within_epsilon(),
        "towers_within_recursion": report.towers_within_recursion(),
        "recursion_within_closed_form": report.recursion_within_closed_form(),
    });
    let params = json!({
        "space": args.space, "map": args.map, "epsilon": args.epsilon, "n": args.n, "k": args.k,
        "r": args.r, "mesh_multiplier": args.mesh_multiplier, "c_table_cache": cache,
    });
    out.json(&envelope(
        "hurewicz run",
        params,
        report.seed,
        "tower assembly into the nerve polyhedron",
        json!({ "report": report, "checks": checks }),
    ))?;
    let mut failed = Vec::new();
    if !report.dimension_ok() {
        failed.push("dimension");
    }
    if !report.cobounded() {
        failed.push("cobound");
    }
    if !report.face_agreement.holds(FACE_TOLERANCE) {
        failed.push("face agreement");
    }
    if !report.below_required && !report.lipschitz_within_epsilon() {
        failed.push("lipschitz");
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invariant(format!("failed checks: {}", failed.join(", "))))
    }
}

/// `free:R`, `zn:R`, `cyclic:M`, `heisenberg`, a JSON literal, or a JSON file.
pub fn parse_group(s: &str) -> Result<GroupSpec, CliError> {
    if s.trim_start().starts_with('{') {
        return Ok(serde_json::from_str(s)?);
    }
    if Path::new(s).is_file() {
        return read_json(Path::new(s));
    }
    let (name, arg) = match s.split_once(':') {
        Some((n, a)) => (n, Some(a.parse::<i64>().map_err(|_| CliError::Input(format!("bad group parameter in {s:?}")))?)),
        None => (s, None),
    };
    let params = match (name, arg) {
        ("free" | "zn" | "free-abelian", Some(r)) => json!({ "rank": r }),
        ("cyclic", Some(m)) => json!({ "order": m }),
        (_, None) => json!({}),
        _ => return Err(CliError::Input(format!("group {name:?} takes no parameter"))),
    };
    Ok(GroupSpec::builtin(name, params))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BallSummary {
    pub group: String,
    pub radius: usize,
    pub size: usize,
    /// Number of elements of each word length `0..=R`.
    pub spheres: Vec<usize>,
    pub diameter: f64,
    pub left_invariance_triples: usize,
    pub left_invariance_witness: Option<(String, String, String)>,
}

fn freeprod_space(a: &FreeprodArgs) -> Result<WordSpace, CliError> {
    let metric = match a.metric.as_str() {
        "literal" => WordMetric::Literal,
        "slotwise" => WordMetric::Slotwise,
        other => return Err(CliError::Input(format!("metric must be literal or slotwise, got {other:?}"))),
    };
    let x = PointedSpace::new(arc(load_space(&a.x)?), a.base_x)?;
    let y = PointedSpace::new(arc(load_space(&a.y)?), a.base_y)?;
    Ok(free_product_space(FreeProduct::new(x, y, a.rescale)?, a.max_norm, metric, WORD_CAP)?)
}

fn freeprod_params(a: &FreeprodArgs) -> Value {
    json!({
        "x": a.x, "y": a.y, "base_x": a.base_x, "base_y": a.base_y,
        "max_norm": a.max_norm, "rescale": a.rescale, "metric": a.metric,
    })
}

pub fn group(cmd: &GroupCmd, ws: &Workspace, out: &Output) -> Result<(), CliError> {
    match cmd {
        GroupCmd::Ball { group, r, cap } => {
            let spec = parse_group(group)?;
            let params = json!({ "group": spec, "R": r, "cap": cap });
            let (summary, cache) = ws.cached("ball", &params, || {
                let model = spec.build()?;
                let ball = cayley_ball(model.as_ref(), *r, *cap)?;
                let inv = left_invariance_check(model.as_ref(), (*r).min(3))?;
                let mut spheres = vec![0; r + 1];
                for &l in &ball.word_length {
                    spheres[l] += 1;
                }
                Ok(BallSummary {
                    group: ball.group.clone(),
                    radius: *r,
                    size: ball.elements.len(),
                    spheres,
                    diameter: ball.space.diameter(),
                    left_invariance_triples: inv.triples_checked,
                    left_invariance_witness: inv.witness,
                })
            })?;
            let mut params = params;
            params["cache"] = json!(cache);
            let failed = summary.left_invariance_witness.clone();
            out.json(&envelope("group ball", params, None, "word metric on B_R(e)", serde_json::to_value(summary)?))?;
            match failed {
                None => Ok(()),
                Some(w) => Err(CliError::Invariant(format!("left invariance fails at {w:?}"))),
            }
        }
        GroupCmd::Freeprod(a) => {
            let ws_ = freeprod_space(a)?;
            let result = json!({
                "points": ws_.words.len(),
                "diameter": ws_.space.diameter(),
                "scale": ws_.product.induced_lipschitz(),
                "stratum_inclusions": stratification_inclusions(&ws_).map_err(CliError::Invariant)?,
                "words": ws_.words.iter().map(ToString::to_string).collect::<Vec<_>>(),
            });
            out.json(&envelope("group freeprod", freeprod_params(a), None, "free product of pointed spaces", result))
        }
        GroupCmd::Tree(a) => {
            let ws_ = freeprod_space(a)?;
            let tree = free_product_tree(&ws_)?;
            let proj = tree_projection(&ws_, &tree)?;
            let lip = measured_lipschitz(&proj, PairBudget::All);
            let evidence = tree_target_report(&proj, &[0.0, 1.0, 2.0], &[1.0, 2.0], 8, 1.0, TREE_REPORT_SEED)?;
            let result = json!({
                "vertices": tree.vertices.len(),
                "edges": tree.edges.len(),
                "lipschitz": lip.constant,
                "lipschitz_witness": lip.witness,
                "tree_target": evidence,
            });
            out.json(&envelope(
                "group tree",
                freeprod_params(a),
                Some(TREE_REPORT_SEED),
                "coset tree projection",
                result,
            ))
        }
        GroupCmd::Amalgam { which, r } => {
            let model = match which.as_str() {
                "z2-z3" => CyclicAmalgam::z2_z3(),
                "z-2z-z" => CyclicAmalgam::z_2z_z(),
                "z4-z2-z6" => CyclicAmalgam::z4_z2_z6(),
                other => return Err(CliError::Input(format!("unknown amalgam {other:?}"))),
            };
            let report = amalgam_projection(&model, *r)?;
            out.json(&envelope(
                "group amalgam",
                json!({ "which": which, "R": r }),
                None,
                "normal forms and coset projection",
                serde_json::to_value(report)?,
            ))
        }
        GroupCmd::Extension { quotient, r, ball } => {
            let check = match quotient.as_str() {
                "heisenberg-z2" => {
                    kernel_neighborhood_check(&Heisenberg, &AbelianGroup::free(2), &heisenberg_abelianization, *r, *ball)?
                }
                "z-z2" => {
                    let phi = |g: &Vec<i64>| -> Result<Vec<i64>, GroupError> { Ok(vec![g[0].rem_euclid(2)]) };
                    kernel_neighborhood_check(&AbelianGroup::free(1), &AbelianGroup::cyclic(2), &phi, *r, *ball)?
                }
                other => return Err(CliError::Input(format!("unknown extension {other:?}"))),
            };
            let equal = check.equal();
            let params = json!({ "quotient": quotient, "R": r, "ball": ball });
            out.json(&envelope("group extension", params, None, "W_R(e) = N_R(K)", serde_json::to_value(&check)?))?;
            if equal {
                Ok(())
            } else {
                Err(CliError::Invariant(format!("W_R(e) and N_R(K) differ at {}", check.witness.unwrap_or_default())))
            }
        }
        GroupCmd::Hyperbolize { base, levels, t0, q } => {
            let b = arc(load_space(base)?);
            let h = hyperbolization(b, &geometric_radii(*t0, *q, *levels))?;
            let check = TripleCheck::default_for(h.space.len());
            let axioms = h.space.verify_axioms(check)?;
            let height = measured_lipschitz(&height_projection(&h)?, PairBudget::All);
            let seed = match check {
                TripleCheck::Sampled { seed, .. } => Some(seed),
                TripleCheck::Exhaustive => None,
            };
            let result = json!({
                "points": h.points.len(),
                "diameter": h.space.diameter(),
                "axioms": axioms,
                "height_lipschitz": height.constant,
            });
            let params = json!({ "base": base, "levels": levels, "t0": t0, "q": q });
            out.json(&envelope("group hyperbolize", params, seed, "space of balls", result))
        }
        GroupCmd::Bound { spec, json: as_json } => {
            let expr = parse_bound(spec)?;
            let report = asdim_upper_bound(&expr)?;
            if *as_json {
                out.json(&envelope("group bound", json!({ "expr": expr }), None, &report.rule, serde_json::to_value(&report)?))
            } else {
                let mut text = report.chain.join("\n");
                let _ = write!(text, "\nasdim ≤ {}", report.bound);
                out.emit(&text)
            }
        }
    }
}

/// A leaf name, or `NAME=N` for a leaf with a given bound.
fn leaf(s: &str) -> BoundExpr {
    match s.split_once('=').and_then(|(n, b)| Some((n, b.parse::<usize>().ok()?))) {
        Some((name, b)) => BoundExpr::known(name, b),
        None => BoundExpr::leaf(s),
    }
}

fn parse_bound(spec: &[String]) -> Result<BoundExpr, CliError> {
    let words: Vec<&str> = spec.iter().map(String::as_str).collect();
    Ok(match words.as_slice() {
        ["polycyclic", series @ ..] if !series.is_empty() => {
            BoundExpr::Polycyclic { series: series.join(" ").parse()? }
        }
        ["free-product", a, b] => BoundExpr::FreeProduct { left: Box::new(leaf(a)), right: Box::new(leaf(b)) },
        ["amalgam", c, a, b] => BoundExpr::Amalgam {
            c: Box::new(leaf(c)),
            a_mod_c: Box::new(leaf(a)),
            b_mod_c: Box::new(leaf(b)),
        },
        ["extension", k, q] => BoundExpr::Extension { kernel: Box::new(leaf(k)), quotient: Box::new(leaf(q)) },
        ["json", file] => read_json(Path::new(file))?,
        _ => return Err(CliError::Input(format!("unrecognized bound expression {:?}", spec.join(" ")))),
    })
}
