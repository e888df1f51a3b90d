use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use avoidset::analyze::cloud::{integer_grid, PointCloud, Provenance};
use avoidset::analyze::falconer::{c_cover_bound, falconer_angle_check, falconer_c_cover};
use avoidset::analyze::verify::verify_exclusion;
use avoidset::geom::{BoundingBox, Point};
use avoidset::nested::dimension::{box_counting_dimension, cantor_endpoints, geometric_scales};
use avoidset::nested::measure::ball_mass_bound_check;
use avoidset::nested::schedule::validate_schedule;
use avoidset::nested::{build_tree, make_schedule, packing_constants, GridNet, ScheduleMode, StageNet};
use avoidset::poly::{Monomial, Poly};
use avoidset::presets::{all_presets, builtin_preset, ConfigurationSpec, PRESET_NAMES};
use avoidset::scalar::{int, parse_rational, ratio, rational_to_f64};
use avoidset::stage::{build_stage, Anchor, LatticeStage, StagePointSet, ThicknessPolicy};
use avoidset::{Rational, RationalPoly};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20240611;

/// Calibrated once with `fit_mass_constant(tree, 100_000, 7, leaf radius)`,
/// which returned 335.8169...
const FROZEN_MASS_CONSTANT: f64 = 336.0;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn spec_named(full: &str, n: usize) -> ConfigurationSpec {
    let base = full.split(':').next().unwrap();
    builtin_preset(base, n, &BTreeMap::new())
        .unwrap()
        .into_iter()
        .find(|s| s.name == full)
        .unwrap()
}

fn anchor_box(anchor: &Anchor) -> BoundingBox {
    let r = &anchor.radius;
    let lo = (0..anchor.dim())
        .map(|k| anchor.points.iter().map(|p| &p[k] - r).min().unwrap())
        .collect();
    let hi = (0..anchor.dim())
        .map(|k| anchor.points.iter().map(|p| &p[k] + r).max().unwrap())
        .collect();
    BoundingBox::new(lo, hi)
}

fn right_angle_stage() -> (ConfigurationSpec, LatticeStage, StagePointSet) {
    let spec = spec_named("right_angle:P2", 2);
    let poly = spec.polys[0].clear_denominators().0;
    let pts = vec![vec![int(0), int(0)], vec![int(1), int(0)], vec![int(0), int(1)]];
    let anchor = Anchor::new(&poly, pts).unwrap();
    let bbox = anchor_box(&anchor);
    let (stage, points) = build_stage(&poly, &anchor, &ratio(3, 25), &bbox, ThicknessPolicy::Record).unwrap();
    (spec, stage, points)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (_, stage, _) = right_angle_stage();
    let gap = stage.certify_gap(10_000, SEED).unwrap();
    let elapsed = start.elapsed();
    let quarter = ratio(1, 4);
    let lattice = gap.min_lattice_margin.as_deref().and_then(parse_rational);
    let perturbed = gap.min_perturbed_margin.as_deref().and_then(parse_rational);
    let pass = stage.grid <= 12
        && gap.lattice_tuples > 0
        && gap.perturbations == 10_000
        && lattice.as_ref().is_some_and(|m| m >= &quarter)
        && perturbed.as_ref().is_some_and(|m| m >= &quarter)
        && gap.violations == 0
        && gap.zeros == 0
        && elapsed <= Duration::from_secs(60);
    outcome(
        pass,
        format!(
            "N = {}, lattice tuples = {}, perturbations = {}, min margins {} / {}, violations = {}, zeros = {}, {:.2?}",
            stage.grid,
            gap.lattice_tuples,
            gap.perturbations,
            gap.min_lattice_margin.as_deref().unwrap_or("-"),
            gap.min_perturbed_margin.as_deref().unwrap_or("-"),
            gap.violations,
            gap.zeros,
            elapsed
        ),
    )
}

fn naive_right_angles(points: &[Point]) -> usize {
    let mut count = 0;
    for (a, x) in points.iter().enumerate() {
        for (b, y) in points.iter().enumerate() {
            for (c, z) in points.iter().enumerate() {
                if a == b || b == c || a == c {
                    continue;
                }
                let d: Rational = (0..x.len()).map(|k| (&x[k] - &y[k]) * (&z[k] - &x[k])).sum();
                if d.is_zero() {
                    count += 1;
                }
            }
        }
    }
    count
}

fn criterion_2() -> Outcome {
    let (spec, _, points) = right_angle_stage();
    let cloud = PointCloud::dedup(points.all_points(), Provenance::Stage).unwrap();
    let stage_rep = verify_exclusion(&cloud, &spec, true).unwrap();
    let grid = integer_grid(4, 2);
    let grid_rep = verify_exclusion(&grid, &spec, true).unwrap();
    let naive = naive_right_angles(&grid.points);
    let pass = stage_rep.is_clean() && grid_rep.violations.len() == naive && naive > 0;
    outcome(
        pass,
        format!(
            "stage cloud of {} points: {} violations; 4x4 grid: {} violations, naive oracle {}",
            cloud.len(),
            stage_rep.violations.len(),
            grid_rep.violations.len(),
            naive
        ),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut mismatches = Vec::new();
    for n in [2u64, 3] {
        for i in [1u64, 2, 3] {
            let expect = Rational::new((162 * n.pow(5)).into(), (i * i).into());
            for grid in [2u64, 3] {
                let cover = falconer_c_cover(grid, i, n);
                if cover.pre_merge_length != expect || c_cover_bound(n, i) != expect {
                    mismatches.push(format!("(N={grid}, n={n}, i={i})"));
                }
            }
        }
    }
    let rep = falconer_angle_check(&[4], 1, 2, 200, SEED);
    let elapsed = start.elapsed();
    let pass = mismatches.is_empty()
        && rep.escapes.is_empty()
        && rep.checked + rep.exempt + rep.degenerate == 200
        && elapsed <= Duration::from_secs(30);
    outcome(
        pass,
        format!(
            "covering mismatches {:?}; angle check: {} checked, {} exempt, {} degenerate, {} escapes, {:.2?}",
            mismatches,
            rep.checked,
            rep.exempt,
            rep.degenerate,
            rep.escapes.len(),
            elapsed
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut problems = Vec::new();
    let mut checked = 0;
    for n in 1..=2 {
        for d in 1..=2 {
            for k in 1..=3 {
                let s = make_schedule(n, d, k, ScheduleMode::Strict, &ratio(1, 2)).unwrap();
                let rep = validate_schedule(&s);
                let margins_ok = rep
                    .levels
                    .iter()
                    .all(|l| l.power_decay.margin >= 0.0 && l.product_decay.margin >= 0.0);
                if !rep.all_pass || !margins_ok {
                    problems.push(format!("strict n={n} d={d} k={k}"));
                }
                let coarse = validate_schedule(&s.with_level(1, ratio(1, 2))).failing_levels();
                if coarse != vec![1] {
                    problems.push(format!("h1 -> 1/2 at n={n} d={d} k={k}: {coarse:?}"));
                }
                if k >= 2 {
                    let scaled = validate_schedule(&s.with_scaled_level(2, &int(10))).failing_levels();
                    if scaled != vec![2] {
                        problems.push(format!("h2 x 10 at n={n} d={d} k={k}: {scaled:?}"));
                    }
                }
                checked += 1;
            }
        }
    }
    outcome(
        problems.is_empty(),
        format!("{checked} strict schedules, problems {problems:?}"),
    )
}

fn criterion_5() -> Outcome {
    let s = make_schedule(1, 1, 3, ScheduleMode::Relaxed, &ratio(1, 400)).unwrap();
    let tree = build_tree(&s, vec![int(0)], &GridNet, packing_constants(1)).unwrap();
    let product: usize = tree.child_counts.iter().product();
    let r_min = rational_to_f64(tree.leaf_radius());
    let mass = ball_mass_bound_check(&tree, 1000, SEED, FROZEN_MASS_CONSTANT, r_min);
    let pass =
        tree.leaf_count() == product && tree.children_contained() && tree.levels_disjoint() && mass.violations == 0;
    outcome(
        pass,
        format!(
            "child counts {:?}, leaves {} (product {}), contained {}, disjoint {}, mass violations {} of {} (max ratio {:.1}, nonzero {})",
            tree.child_counts,
            tree.leaf_count(),
            product,
            tree.children_contained(),
            tree.levels_disjoint(),
            mass.violations,
            mass.trials,
            mass.max_ratio,
            mass.nonzero_masses
        ),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let scales: Vec<Rational> = (1..=6).map(|j| int(1) / int(3i64.pow(j))).collect();
    let cantor = box_counting_dimension(&cantor_endpoints::<Rational>(6), &scales).unwrap();

    // graph-type relation y = x^2 between two points of the line
    let poly = Poly::parse("x1 - x0^2", 2).unwrap();
    let anchor = Anchor::new(&poly, vec![vec![ratio(1, 2)], vec![ratio(1, 4)]]).unwrap();
    let net = StageNet::new(poly, anchor);
    let s = make_schedule(1, 2, 2, ScheduleMode::Relaxed, &ratio(1, 300_000)).unwrap();
    let tree = build_tree(&s, vec![ratio(1, 2)], &net, packing_constants(1)).unwrap();
    let finest = rational_to_f64(s.h(2).unwrap());
    let window: Vec<Rational> = geometric_scales(0.5, finest, 12);
    let composed = box_counting_dimension(&tree.leaf_centers(), &window).unwrap();
    let elapsed = start.elapsed();
    let pass = (cantor.slope - 0.6309).abs() <= 0.05
        && (0.35..=0.75).contains(&composed.slope)
        && elapsed <= Duration::from_secs(120);
    outcome(
        pass,
        format!(
            "cantor slope {:.4}; composed set: {} leaves, slope {:.4} +- {:.4} over [{:e}, 0.5]; {:.2?}",
            cantor.slope,
            tree.leaf_count(),
            composed.slope,
            composed.stderr,
            finest,
            elapsed
        ),
    )
}

fn random_poly(rng: &mut ChaCha8Rng) -> RationalPoly {
    let vars = rng.gen_range(1..=6);
    let terms = (0..rng.gen_range(1..=6)).map(|_| {
        let mut exps = vec![0u32; vars];
        for _ in 0..rng.gen_range(0..=4) {
            exps[rng.gen_range(0..vars)] += 1;
        }
        (
            Monomial::from_exponents(exps),
            ratio(rng.gen_range(-9..=9), rng.gen_range(1..=5)),
        )
    });
    Poly::from_terms(vars, terms.collect::<Vec<_>>())
}

fn random_rational(rng: &mut ChaCha8Rng) -> Rational {
    ratio(rng.gen_range(-20..=20), rng.gen_range(1..=7))
}

/// `q'(0)` for `q` of degree at most `deg`, from its values at `0..=deg`.
fn derivative_at_zero(values: &[Rational]) -> Rational {
    let deg = values.len() as i64 - 1;
    let mut total = Rational::zero();
    for (k, v) in values.iter().enumerate() {
        let k = k as i64;
        let weight = if k == 0 {
            -(1..=deg).map(|j| ratio(1, j)).sum::<Rational>()
        } else {
            let num: Rational = (1..=deg).filter(|&j| j != k).map(|j| int(-j)).product();
            let den: Rational = (0..=deg).filter(|&j| j != k).map(|j| int(k - j)).product();
            num / den
        };
        total += v * weight;
    }
    total
}

fn criterion_7() -> Outcome {
    let mut bad_chains = Vec::new();
    let mut polys = 0;
    let mut covered = std::collections::BTreeSet::new();
    for n in 1..=3 {
        for spec in all_presets(n) {
            covered.insert(spec.name.split(':').next().unwrap().to_string());
            for p in spec.composed_polys() {
                polys += 1;
                let ok = p
                    .top_monomial_chain()
                    .map(|c| c.is_consistent() && c.last().constant_value().is_some_and(|v| !v.is_zero()));
                if ok != Ok(true) {
                    bad_chains.push(format!("{} (n={n})", spec.name));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut failures = 0;
    for _ in 0..500 {
        let p = random_poly(&mut rng);
        let v = p.num_vars();
        let x: Vec<Rational> = (0..v).map(|_| random_rational(&mut rng)).collect();
        let e: Vec<Rational> = (0..v).map(|_| random_rational(&mut rng)).collect();
        let directional: Rational = p
            .gradient()
            .iter()
            .zip(&e)
            .map(|(g, ej)| g.eval(&x).unwrap() * ej)
            .sum();
        let values: Vec<Rational> = (0..=4)
            .map(|t| {
                let at: Vec<Rational> = x.iter().zip(&e).map(|(xi, ei)| xi + ei * int(t)).collect();
                p.eval(&at).unwrap()
            })
            .collect();
        if derivative_at_zero(&values) != directional {
            failures += 1;
        }
    }
    let all_names = PRESET_NAMES.iter().all(|n| covered.contains(*n));
    let pass = bad_chains.is_empty() && all_names && failures == 0;
    outcome(
        pass,
        format!(
            "{} presets, {polys} polynomials, bad chains {bad_chains:?}; directional identity failures {failures} of 500",
            covered.len()
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut problems = Vec::new();
    let mut checked = 0;
    let mut covered = std::collections::BTreeSet::new();
    for n in 1..=3 {
        for spec in all_presets(n) {
            let (Some(w), Some(a)) = (&spec.witness, &spec.anti_witness) else {
                problems.push(format!("{} (n={n}) ships no witness pair", spec.name));
                continue;
            };
            let zero = spec.eval(w).unwrap().iter().all(Zero::is_zero);
            let nonzero = spec.eval(a).unwrap().iter().any(|v| !v.is_zero());
            if !zero || !nonzero {
                problems.push(format!("{} (n={n})", spec.name));
            }
            covered.insert(spec.name.split(':').next().unwrap().to_string());
            checked += 1;
        }
    }
    let pass = problems.is_empty() && covered.len() == PRESET_NAMES.len();
    outcome(
        pass,
        format!("{checked} specs over {} presets, problems {problems:?}", covered.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("gap invariant", criterion_1),
        ("exclusion soundness", criterion_2),
        ("covering identity", criterion_3),
        ("schedule validation", criterion_4),
        ("ball-tree contract", criterion_5),
        ("dimension slope", criterion_6),
        ("derivative chain", criterion_7),
        ("witness pairs", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {} {}: {} ({})",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
