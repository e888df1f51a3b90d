//! One function per subcommand. Each writes its outputs and reports
//! whether violations or failed bounds were found.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Result;
use avoidset::analyze::{
    angle_report, direction_report, distance_report, falconer_angle_check, verify_exclusion, verify_transversals,
    AnalysisReport, PointCloud, Provenance,
};
use avoidset::geom::{fmt_point, BoundingBox, BoxDoc, Point};
use avoidset::nested::dimension::{box_counting_dimension, cantor_endpoints, geometric_scales};
use avoidset::nested::measure::{ball_mass_bound_check, fit_mass_constant};
use avoidset::nested::schedule::{Level, ScheduleMode};
use avoidset::nested::tree::TreeError;
use avoidset::nested::{
    build_tree, make_schedule, packing_constants, validate_schedule, GridNet, NetGenerator, Schedule, StageNet,
};
use avoidset::presets::{all_presets, builtin_preset, catalog, ConfigurationSpec};
use avoidset::scalar::{fmt_rational, int, parse_rational, rational_to_f64};
use avoidset::stage::{build_stage, build_stage_with_grid, Anchor, ThicknessPolicy};
use avoidset::{Rational, RationalPoly};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{usage, RunConfig};

/// Stage clouds are verified when they have at most this many one-per-ball tuples.
const MAX_STAGE_TUPLES: f64 = 1e6;

pub struct Outcome {
    pub failed: bool,
    pub lines: Vec<String>,
}

fn q(field: &str, text: &str) -> Result<Rational> {
    parse_rational(text).ok_or_else(|| usage(format!("field '{field}': '{text}' is not a rational p/q")))
}

fn point(field: &str, items: &[String]) -> Result<Point> {
    items.iter().map(|s| q(field, s)).collect()
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = PathBuf::from(cfg.out.clone().unwrap_or_else(|| "avoidset-out".into()));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// CSV body behind a `# config:` comment line.
fn write_csv(path: &Path, cfg: &RunConfig, body: &str) -> Result<()> {
    let text = format!("# config: {}\n{body}", serde_json::to_string(cfg)?);
    fs::write(path, text)?;
    Ok(())
}

fn report(cfg: &RunConfig, body: Value) -> Value {
    let mut v = json!({ "config": cfg });
    if let (Some(obj), Value::Object(extra)) = (v.as_object_mut(), body) {
        obj.extend(extra);
    }
    v
}

/// The preset's specs in dimension `n`; `name:member` selects one.
fn specs(cfg: &RunConfig, n: usize) -> Result<Vec<ConfigurationSpec>> {
    let name = cfg
        .preset
        .as_deref()
        .ok_or_else(|| usage("field 'preset' is required"))?;
    let base = name.split(':').next().unwrap_or(name);
    let all = builtin_preset(base, n, &cfg.params).map_err(|e| usage(format!("field 'preset': {e}")))?;
    if base == name {
        return Ok(all);
    }
    let chosen: Vec<_> = all.into_iter().filter(|s| s.name == name).collect();
    if chosen.is_empty() {
        return Err(usage(format!("field 'preset': no member named '{name}'")));
    }
    Ok(chosen)
}

fn one_spec(cfg: &RunConfig, n: usize) -> Result<ConfigurationSpec> {
    let mut s = specs(cfg, n)?;
    if s.len() != 1 {
        let names: Vec<_> = s.iter().map(|s| s.name.clone()).collect();
        return Err(usage(format!("field 'preset': pick one of {}", names.join(", "))));
    }
    Ok(s.remove(0))
}

/// Integer-coefficient polynomial and anchor driving a stage; the anchor
/// defaults to the preset's witness.
fn stage_input(cfg: &RunConfig, spec: &ConfigurationSpec) -> Result<(RationalPoly, Anchor)> {
    let polys = spec.composed_polys();
    let poly = polys
        .get(cfg.poly_index)
        .ok_or_else(|| usage(format!("field 'poly_index': spec has {} polynomials", polys.len())))?
        .clear_denominators()
        .0;
    let pts = match &cfg.anchor {
        Some(a) => a.iter().map(|p| point("anchor", p)).collect::<Result<Vec<_>>>()?,
        None => spec
            .witness
            .clone()
            .ok_or_else(|| usage("field 'anchor' is required: preset has no witness"))?,
    };
    let anchor = Anchor::new(&poly, pts).map_err(|e| usage(format!("field 'anchor': {e}")))?;
    Ok((poly, anchor))
}

fn anchor_box(anchor: &Anchor) -> BoundingBox {
    let r = &anchor.radius;
    let n = anchor.dim();
    let lo = (0..n)
        .map(|k| anchor.points.iter().map(|p| &p[k] - r).min().expect("nonempty"))
        .collect();
    let hi = (0..n)
        .map(|k| anchor.points.iter().map(|p| &p[k] + r).max().expect("nonempty"))
        .collect();
    BoundingBox::new(lo, hi)
}

pub fn presets(cfg: &RunConfig) -> Result<Outcome> {
    let dir = out_dir(cfg)?;
    let cat = catalog();
    let specs: Vec<_> = cfg
        .n
        .map(|n| all_presets(n).iter().map(|s| s.summary()).collect())
        .unwrap_or_default();
    let mut lines: Vec<String> = cat
        .iter()
        .map(|e| format!("{} (n >= {}, degree {})", e.name, e.n_min, e.degree))
        .collect();
    for s in &specs {
        lines.push(format!("  {}: m = {}, degree {}", s.name, s.m, s.degree));
    }
    write_json(
        &dir.join("report.json"),
        &report(cfg, json!({ "catalog": cat, "specs": specs })),
    )?;
    Ok(Outcome { failed: false, lines })
}

pub fn stage(cfg: &mut RunConfig) -> Result<Outcome> {
    let n = *cfg.n.get_or_insert(2);
    let spec = one_spec(cfg, n)?;
    let (poly, anchor) = stage_input(cfg, &spec)?;
    let bbox = match &cfg.bounding_box {
        Some(b) => b.to_box().ok_or_else(|| usage("field 'bounding_box': malformed"))?,
        None => anchor_box(&anchor),
    };
    cfg.bounding_box = Some(BoxDoc::from(&bbox));
    let built = match cfg.grid {
        Some(g) => build_stage_with_grid(&poly, &anchor, g, &bbox),
        None => {
            let h = q("h", cfg.h.get_or_insert_with(|| "3/25".into()))?;
            let policy = match cfg.thickness.get_or_insert_with(|| "record".into()).as_str() {
                "record" => ThicknessPolicy::Record,
                "require" => ThicknessPolicy::Require,
                other => {
                    return Err(usage(format!(
                        "field 'thickness': expected record|require, got '{other}'"
                    )))
                }
            };
            build_stage(&poly, &anchor, &h, &bbox, policy)
        }
    };
    let (st, points) = built.map_err(|e| usage(format!("stage: {e}")))?;
    let perturbations = *cfg.perturbations.get_or_insert(1000);
    let gap = st
        .certify_gap(perturbations, cfg.seed)
        .map_err(|e| usage(format!("stage: {e}")))?;
    let (cloud, groups) = PointCloud::from_groups(&points.balls, Provenance::Stage)?;
    let transversals: f64 = groups.iter().map(|g| g.len() as f64).product();
    let verify = if transversals <= MAX_STAGE_TUPLES {
        Some(verify_transversals(&cloud, &groups, &spec)?)
    } else {
        None
    };
    let failed = gap.violations > 0 || gap.zeros > 0 || verify.as_ref().is_some_and(|v| !v.is_clean());
    let dir = out_dir(cfg)?;
    write_csv(&dir.join("points.csv"), cfg, &points.to_csv(st.n))?;
    write_json(
        &dir.join("report.json"),
        &report(
            cfg,
            json!({ "spec": spec.summary(), "stage": st.metadata(), "gap": gap, "verify": verify }),
        ),
    )?;
    let mut lines = vec![
        format!("grid N = {}, points = {}", st.grid, points.len()),
        format!(
            "lattice tuples = {}, perturbations = {}, min margins = {} / {}",
            gap.lattice_tuples,
            gap.perturbations,
            gap.min_lattice_margin.as_deref().unwrap_or("-"),
            gap.min_perturbed_margin.as_deref().unwrap_or("-")
        ),
        format!("gap violations = {}, zeros = {}", gap.violations, gap.zeros),
    ];
    if let Some(v) = &verify {
        lines.push(format!(
            "one-per-ball tuples = {}, violations = {}",
            v.tuples_evaluated,
            v.violations.len()
        ));
    }
    Ok(Outcome { failed, lines })
}

fn schedule_from(cfg: &mut RunConfig, n: usize, d: u32) -> Result<Schedule> {
    let mode = *cfg.mode.get_or_insert(ScheduleMode::Relaxed);
    if let Some(list) = &cfg.schedule {
        let levels = list
            .iter()
            .map(|s| {
                let h = q("schedule", s)?;
                if h <= int(0) || h >= int(1) {
                    return Err(usage(format!("field 'schedule': {s} is not in (0, 1)")));
                }
                Ok(Level::exact(h))
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(Schedule { n, d, mode, levels });
    }
    let k = *cfg.levels.get_or_insert(3);
    let ratio = q("ratio", cfg.ratio.get_or_insert_with(|| "1/400".into()))?;
    make_schedule(n, d, k, mode, &ratio).map_err(|e| usage(format!("schedule: {e}")))
}

pub fn schedule(cfg: &mut RunConfig) -> Result<Outcome> {
    let n = *cfg.n.get_or_insert(1);
    let d = *cfg.d.get_or_insert(1);
    let s = schedule_from(cfg, n, d)?;
    let rep = validate_schedule(&s);
    let mut lines = Vec::new();
    for l in &rep.levels {
        lines.push(match &l.h {
            Some(h) => format!("h_{} = {h} (ln h = {:.6})", l.level, l.ln_h),
            None => format!("h_{}: ln h = {:.6e}", l.level, l.ln_h),
        });
    }
    lines.push(format!("all inequalities hold: {}", rep.all_pass));
    let dir = out_dir(cfg)?;
    write_json(&dir.join("report.json"), &report(cfg, json!({ "schedule": rep })))?;
    let failed = !rep.all_pass && (s.mode == ScheduleMode::Strict || cfg.schedule.is_some());
    Ok(Outcome { failed, lines })
}

pub fn tree(cfg: &mut RunConfig) -> Result<Outcome> {
    let net = cfg.net.get_or_insert_with(|| "grid".into()).clone();
    let (generator, n, default_d): (Box<dyn NetGenerator>, usize, u32) = match net.as_str() {
        "grid" => (Box::new(GridNet), *cfg.n.get_or_insert(1), 1),
        "stage" => {
            let spec = one_spec(cfg, cfg.n.unwrap_or(2))?;
            let (poly, anchor) = stage_input(cfg, &spec)?;
            let d = poly.degree().finite().unwrap_or(1);
            let n = anchor.dim();
            cfg.n = Some(n);
            (Box::new(StageNet::new(poly, anchor)), n, d)
        }
        other => return Err(usage(format!("field 'net': expected grid|stage, got '{other}'"))),
    };
    let d = *cfg.d.get_or_insert(default_d);
    let s = schedule_from(cfg, n, d)?;
    let root = match &cfg.root {
        Some(r) => point("root", r)?,
        None => vec![int(0); n],
    };
    if root.len() != n {
        return Err(usage(format!("field 'root': expected {n} coordinates")));
    }
    let dir = out_dir(cfg)?;
    let tree = match build_tree(&s, root, generator.as_ref(), packing_constants(n)) {
        Ok(t) => t,
        Err(e @ TreeError::PackingFailure { .. }) => {
            write_json(
                &dir.join("report.json"),
                &report(cfg, json!({ "error": e.to_string() })),
            )?;
            return Ok(Outcome {
                failed: true,
                lines: vec![e.to_string()],
            });
        }
        Err(e) => return Err(usage(format!("tree: {e}"))),
    };
    let contained = tree.children_contained();
    let disjoint = tree.levels_disjoint();
    let leaves = tree.leaf_count();
    let predicted = tree.predicted_leaf_count();
    let mut mass = None;
    if let Some(trials) = cfg.mass_trials {
        let r_min = rational_to_f64(tree.leaf_radius());
        let constant = match cfg.mass_constant {
            Some(c) => c,
            None => fit_mass_constant(&tree, trials.saturating_mul(100), cfg.seed, r_min),
        };
        cfg.mass_constant = Some(constant);
        mass = Some(ball_mass_bound_check(
            &tree,
            trials,
            cfg.seed.wrapping_add(1),
            constant,
            r_min,
        ));
    }
    let failed = !contained || !disjoint || leaves != predicted || mass.as_ref().is_some_and(|m| m.violations > 0);
    let centers: String = tree
        .leaf_centers()
        .iter()
        .map(|p| fmt_point(p).join(",") + "\n")
        .collect();
    let header: String = (0..n).map(|k| format!("coord_{k}")).collect::<Vec<_>>().join(",");
    write_csv(&dir.join("points.csv"), cfg, &format!("{header}\n{centers}"))?;
    let mut doc = serde_json::to_value(tree.to_doc())?;
    if let Some(obj) = doc.as_object_mut() {
        obj.insert("config".into(), serde_json::to_value(&*cfg)?);
    }
    write_json(&dir.join("tree.json"), &doc)?;
    write_json(
        &dir.join("report.json"),
        &report(
            cfg,
            json!({
                "leaf_count": leaves,
                "predicted_leaf_count": predicted,
                "child_counts": tree.child_counts,
                "radii": tree.radii.iter().map(fmt_rational).collect::<Vec<_>>(),
                "children_contained": contained,
                "levels_disjoint": disjoint,
                "mass_bound": mass,
            }),
        ),
    )?;
    let mut lines = vec![
        format!(
            "leaves = {leaves} (predicted {predicted}), child counts = {:?}",
            tree.child_counts
        ),
        format!("contained = {contained}, disjoint = {disjoint}"),
    ];
    if let Some(m) = &mass {
        lines.push(format!(
            "mass bound: {} violations in {} balls, constant {:e}",
            m.violations, m.trials, m.constant
        ));
    }
    Ok(Outcome { failed, lines })
}

fn load_cloud(cfg: &RunConfig) -> Result<PointCloud> {
    let path = cfg.input.as_deref().ok_or_else(|| usage("field 'input' is required"))?;
    let file = fs::File::open(path).map_err(|e| usage(format!("field 'input': {path}: {e}")))?;
    PointCloud::read_csv(file, Provenance::External).map_err(|e| usage(format!("{path}: {e}")))
}

pub fn verify(cfg: &mut RunConfig) -> Result<Outcome> {
    let cloud = load_cloud(cfg)?;
    cfg.n = Some(cloud.n);
    let pruning = *cfg.pruning.get_or_insert(true);
    let mut reports = Vec::new();
    for spec in specs(cfg, cloud.n)? {
        reports.push(verify_exclusion(&cloud, &spec, pruning)?);
    }
    let lines = reports
        .iter()
        .map(|r| {
            format!(
                "{}: {} violations in {} tuples",
                r.spec,
                r.violations.len(),
                r.tuples_total
            )
        })
        .collect();
    let failed = reports.iter().any(|r| !r.is_clean());
    write_json(
        &out_dir(cfg)?.join("report.json"),
        &report(cfg, json!({ "reports": reports })),
    )?;
    Ok(Outcome { failed, lines })
}

pub fn analyze(cfg: &mut RunConfig) -> Result<Outcome> {
    let cloud = load_cloud(cfg)?;
    cfg.n = Some(cloud.n);
    let excluded = cfg
        .excluded_distances
        .iter()
        .map(|s| q("excluded_distances", s))
        .collect::<Result<Vec<_>>>()?;
    let targets = cfg
        .cos2_targets
        .iter()
        .map(|s| q("cos2_targets", s))
        .collect::<Result<Vec<_>>>()?;
    let angles = if cloud.n >= 2 {
        Some(angle_report(&cloud, &targets)?)
    } else {
        None
    };
    let directions = if cloud.n >= 2 {
        Some(direction_report(&cloud)?)
    } else {
        None
    };
    let distances = distance_report(&cloud, &excluded);
    let falconer = match &cfg.falconer {
        Some(f) => {
            if f.i_max == 0 || f.scales.len() < f.i_max as usize || f.scales.iter().any(|&s| s < 2) || f.n < 2 {
                return Err(usage("field 'falconer': need i_max >= 1 scales >= 2 and n >= 2"));
            }
            Some(falconer_angle_check(&f.scales, f.i_max, f.n, f.samples, cfg.seed))
        }
        None => None,
    };
    let target_hits: usize = angles
        .as_ref()
        .map_or(0, |a| a.target_hits.values().map(Vec::len).sum());
    let escapes = falconer.as_ref().map_or(0, |f| f.escapes.len());
    let mut lines = vec![format!(
        "points = {}, distinct squared distances = {}, repeated = {}, excluded hits = {}",
        cloud.len(),
        distances.distinct,
        distances.repeated.len(),
        distances.excluded_hits
    )];
    if let Some(a) = &angles {
        lines.push(format!(
            "angles = {}, distinct = {}, target hits = {target_hits}",
            a.angles, a.distinct
        ));
    }
    if let Some(d) = &directions {
        lines.push(format!(
            "parallel pairs = {}, collinear triples = {}",
            d.parallel.len(),
            d.collinear_triples.len()
        ));
    }
    if let Some(f) = &falconer {
        lines.push(format!(
            "falconer: {} checked, {} exempt, {} escapes ({})",
            f.checked, f.exempt, escapes, f.status
        ));
    }
    let failed = distances.excluded_hits > 0 || target_hits > 0 || escapes > 0;
    let body = AnalysisReport {
        points: cloud.len(),
        n: cloud.n,
        angles,
        distances,
        directions,
        falconer,
    };
    write_json(
        &out_dir(cfg)?.join("report.json"),
        &report(cfg, serde_json::to_value(body)?),
    )?;
    Ok(Outcome { failed, lines })
}

pub fn dim(cfg: &mut RunConfig) -> Result<Outcome> {
    let source = cfg
        .source
        .get_or_insert_with(|| {
            if cfg.input.is_some() {
                "input".into()
            } else {
                "cantor".into()
            }
        })
        .clone();
    let (points, default_scales): (Vec<Point>, Vec<Rational>) = match source.as_str() {
        "cantor" => {
            let k = *cfg.cantor_stage.get_or_insert(6);
            if k == 0 || k > 20 {
                return Err(usage("field 'cantor_stage': expected 1..=20"));
            }
            let scales = (1..=k).map(|j| int(1) / int(3i64.pow(j))).collect();
            (cantor_endpoints::<Rational>(k), scales)
        }
        "input" => (load_cloud(cfg)?.points, geometric_scales(0.25, 1.0 / 4096.0, 9)),
        other => return Err(usage(format!("field 'source': expected cantor|input, got '{other}'"))),
    };
    let scales = match (&cfg.scales, cfg.scale_range) {
        (Some(list), _) => list.iter().map(|s| q("scales", s)).collect::<Result<Vec<_>>>()?,
        (None, Some((hi, lo, k))) => {
            if !(hi > lo && lo > 0.0 && k >= 2) {
                return Err(usage("field 'scale_range': expected [hi, lo, count] with hi > lo > 0"));
            }
            geometric_scales(hi, lo, k)
        }
        (None, None) => default_scales,
    };
    let est = box_counting_dimension(&points, &scales).map_err(|e| usage(format!("dim: {e}")))?;
    let dir = out_dir(cfg)?;
    write_csv(&dir.join("boxcounts.csv"), cfg, &est.to_csv())?;
    write_json(
        &dir.join("report.json"),
        &report(cfg, json!({ "points": points.len(), "estimate": est })),
    )?;
    Ok(Outcome {
        failed: false,
        lines: vec![format!(
            "slope = {:.4} +- {:.4} over {} scales",
            est.slope,
            est.stderr,
            est.counts.len()
        )],
    })
}
