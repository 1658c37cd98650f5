//! Acceptance suite. Every criterion prints one PASS or FAIL line with the
//! numbers behind the verdict; the process exits nonzero if any fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use solenoid::fixtures::{
    load_fixture, random_sequence, rank3_sp, repeat_ab, theta_cycle, theta_cycle_steps,
    FIXTURE_NAMES,
};
use solenoid::fold_machine::{transition_matrix, GraphMap};
use solenoid::graph_core::shapes::{gamma3, rose, theta};
use solenoid::graph_core::{rev, CoreGraph, DartId, Point};
use solenoid::measure_cones::metric::delta_of;
use solenoid::measure_cones::{
    birkhoff_check, certify_unique_ergodicity, check_weight_equations, contraction_trace,
    evaluate_transverse_measure, perron_weights, push_weights, veech_inequality_check,
    CertificateStatus, WeightVector,
};
use solenoid::ratio::{rat, Rational};
use solenoid::sequence_lab::audits::{audit_expanding, scan_full_mingling};
use solenoid::sequence_lab::{AuditConfig, BacktrackPolicy, Generator, SplitSequence, Template};
use solenoid::solenoid_scope::{
    compute_fiber, fiber_partition_system, scan_star_chains, trace_partial_leaf, LeafStatus,
    PointSpec, TurnSpec,
};
use solenoid::{FloatMatrix, IntMatrix};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("transition-matrix multiplicativity", multiplicativity),
        ("fixture exactness", fixture_exactness),
        ("graph bounds", graph_bounds),
        ("mingling implies expanding", mingling_expanding),
        ("Veech inequality", veech),
        ("contraction and certificate", contraction_certificate),
        ("dimension bounds", dimension_bounds),
        ("weight equations", weight_equations),
        ("fiber row-sum identity", fiber_row_sums),
        ("tree-basis axioms", tree_bases),
        ("measure consistency", measure_consistency),
        ("singularity census", singularity_census),
        ("negative fixture", negative_fixture),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {} [{:.2?}]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            t.elapsed()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn extended(mut s: SplitSequence, depth: usize) -> SplitSequence {
    s.extend_to(depth).expect("sequence extends");
    s
}

/// Random uncharted chains of rank 2 and 3, partial folds allowed, plus
/// strongly proper rank-3 chains. Chains whose generator gets stuck
/// before `depth(seed)` are skipped.
fn random_chains(count: u64, depth: impl Fn(u64) -> usize) -> Vec<(String, SplitSequence)> {
    let mut out = Vec::new();
    for seed in 0..count {
        let (name, g, sp) = match seed % 4 {
            0 => ("theta", theta(), false),
            1 => ("rose2", rose(2), false),
            2 => ("gamma3", gamma3(), false),
            _ => ("gamma3-sp", gamma3(), true),
        };
        let mut s = random_sequence(g, seed, sp).expect("random sequence");
        if s.extend_to(depth(seed)).is_ok() {
            out.push((format!("{name}#{seed}"), s));
        }
    }
    out
}

/// Natural-edge classes of a graph found by walking through valence-2
/// vertices, keyed by dart. Independent of the library's natural structure.
fn natural_classes(g: &CoreGraph) -> BTreeMap<DartId, usize> {
    let mut class = BTreeMap::new();
    let mut next = 0;
    for d in g.darts() {
        if class.contains_key(&d) || g.valence(g.origin(d)) == 2 {
            continue;
        }
        let mut cur = d;
        loop {
            class.insert(cur, next);
            class.insert(rev(cur), next);
            let t = g.terminus(cur);
            if g.valence(t) != 2 {
                break;
            }
            cur = *g.star(t).iter().find(|&&x| x != rev(cur)).unwrap();
        }
        next += 1;
    }
    class
}

/// Components of edge-interior preimages, counted geometrically: cut the
/// image of each domain natural edge wherever it passes a codomain vertex
/// of valence at least 3, and tally each piece by its natural edge.
fn component_oracle(f: &GraphMap) -> IntMatrix {
    let cod = &f.codomain;
    let classes = natural_classes(cod);
    // Row order follows the library's labels so the matrices compare.
    let row_of: BTreeMap<usize, usize> = classes
        .iter()
        .map(|(&d, &c)| (c, cod.natural().edge_index(d)))
        .collect();
    let dom_classes = natural_classes(&f.domain);
    let ncols = f.domain.natural().edges.len();
    let mut m = IntMatrix::zeros(cod.natural().edges.len(), ncols);
    let mut done = vec![false; ncols];
    for &d in dom_classes.keys() {
        if f.domain.valence(f.domain.origin(d)) == 2 {
            continue;
        }
        let col = f.domain.natural().edge_index(d);
        if done[col] {
            continue;
        }
        done[col] = true;
        let mut path = Vec::new();
        let mut cur = d;
        loop {
            path.extend(f.dart_map[&cur].iter().copied());
            let t = f.domain.terminus(cur);
            if f.domain.valence(t) != 2 {
                break;
            }
            cur = *f.domain.star(t).iter().find(|&&x| x != rev(cur)).unwrap();
        }
        let mut piece_start = true;
        for &x in &path {
            if piece_start {
                m[(row_of[&classes[&x]], col)] += BigInt::from(1);
            }
            piece_start = cod.valence(cod.terminus(x)) >= 3;
        }
    }
    m
}

fn multiplicativity() -> Outcome {
    let t = Instant::now();
    let chains = random_chains(160, |seed| 2 + (seed % 5) as usize);
    let (mut total, mut products, mut oracle_tm, mut oracle_window) = (0, 0, 0, 0);
    let (mut sp_total, mut sp_products) = (0, 0);
    let mut per_fold = (0, 0);
    let mut first_miss = None;
    for (name, s) in &chains {
        for k in 1..=s.depth() as i32 {
            let f = s.fold(-k).unwrap();
            per_fold.0 += 1;
            if component_oracle(&f.map) == f.matrix.matrix {
                per_fold.1 += 1;
            }
        }
        let sp = name.contains("-sp#");
        for i in 2..=s.depth() as i32 {
            let c = s.composite(-i, 0).unwrap();
            let tm = transition_matrix(&c).matrix;
            let w = (*s.window(-i, 0).unwrap().matrix).clone();
            let oracle = component_oracle(&c);
            total += 1;
            if tm == w {
                products += 1;
            } else if first_miss.is_none() {
                first_miss = Some(format!("{name} window(-{i},0)"));
            }
            oracle_tm += usize::from(oracle == tm);
            oracle_window += usize::from(oracle == w);
            if sp {
                sp_total += 1;
                sp_products += usize::from(tm == w);
            }
        }
    }
    let fast = t.elapsed() < Duration::from_secs(60);
    let pass = chains.len() >= 100
        && total == products
        && oracle_tm == total
        && oracle_window == total
        && per_fold.0 == per_fold.1
        && fast;
    outcome(
        pass,
        format!(
            "{} chains; composite matrix equals window product on {products}/{total} \
             (strongly proper chains {sp_products}/{sp_total}); oracle agrees with \
             transition_matrix on {oracle_tm}/{total}, with the product on \
             {oracle_window}/{total}; single folds {}/{}{}",
            chains.len(),
            per_fold.1,
            per_fold.0,
            first_miss.map_or(String::new(), |m| format!("; first mismatch {m}"))
        ),
    )
}

fn fixture_exactness() -> Outcome {
    let s = extended(theta_cycle().unwrap(), 9);
    let m_ab = IntMatrix::from_i64_rows(&[[1, 0, 0], [0, 1, 0], [1, 1, 1]]);
    let m_bc = IntMatrix::from_i64_rows(&[[1, 1, 1], [0, 1, 0], [0, 0, 1]]);
    let m_ca = IntMatrix::from_i64_rows(&[[1, 0, 0], [1, 1, 1], [0, 0, 1]]);
    let window = IntMatrix::from_i64_rows(&[[2, 1, 2], [1, 1, 1], [3, 2, 4]]);
    let cycle = [&m_ab, &m_bc, &m_ca];
    let mut bad = Vec::new();
    for k in 1..=9 {
        let f = &s.fold(-k).unwrap().matrix;
        if f.matrix != *cycle[(k as usize - 1) % 3] || f.rows != ["a", "b", "c"] {
            bad.push(format!("fold({})", -k));
        }
    }
    let w = s.window(-3, 0).unwrap().matrix;
    if *w != window {
        bad.push("window(-3,0)".into());
    }
    // Independent product of the three stated matrices.
    let mut prod = IntMatrix::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    prod[(i, l)] += &m_ab[(i, j)] * &m_bc[(j, k)] * &m_ca[(k, l)];
                }
            }
        }
    }
    if prod != window {
        bad.push("stated product".into());
    }
    if *s.window(-6, -3).unwrap().matrix != window {
        bad.push("window(-6,-3)".into());
    }
    outcome(
        bad.is_empty(),
        if bad.is_empty() {
            "M_AB, M_BC, M_CA cycle through 9 folds; window(-3,0) = [[2,1,2],[1,1,1],[3,2,4]]"
                .into()
        } else {
            format!("mismatches: {}", bad.join(", "))
        },
    )
}

fn graph_bounds() -> Outcome {
    let mut seqs: Vec<(String, SplitSequence)> = vec![
        ("THETA_CYCLE".into(), extended(theta_cycle().unwrap(), 30)),
        ("REPEAT_AB".into(), extended(repeat_ab().unwrap(), 30)),
        ("RANK3_SP".into(), extended(rank3_sp().unwrap(), 20)),
    ];
    seqs.extend(random_chains(80, |_| 12));
    let mut graphs = 0;
    let mut bad = Vec::new();
    for (name, s) in &seqs {
        for k in 0..=s.depth() as i32 {
            let b = s.graph(-k).unwrap().bounds();
            graphs += 1;
            // Recount independently of the report.
            let g = s.graph(-k).unwrap();
            let n = g.rank();
            let v = g.vertices().filter(|&v| g.valence(v) >= 3).count();
            let e = natural_classes(g)
                .values()
                .collect::<std::collections::BTreeSet<_>>()
                .len();
            if !b.ok() || v > 2 * (n - 1) || e > 3 * (n - 1) {
                bad.push(format!("{name} level {}: V={v} E={e} n={n}", -k));
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{graphs} level graphs over {} sequences; violations: {}",
            seqs.len(),
            bad.len()
        ) + &bad
            .first()
            .map_or(String::new(), |b| format!(" (first {b})")),
    )
}

/// Periodic theta sequences whose period is a random word in the three
/// fold steps of the theta cycle, each with its own fold length. Words
/// that miss a step never mingle fully. Words whose fold lengths outgrow
/// an edge are skipped until `count` sequences are found.
fn random_theta_words(count: usize, depth: usize) -> Vec<(String, SplitSequence)> {
    let lengths = [rat(1, 4), rat(1, 3), rat(1, 2)];
    let mut out = Vec::new();
    for seed in 0..40 * count as u64 {
        if out.len() == count {
            break;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let len = rng.gen_range(2..=6);
        let mut word = String::new();
        let steps = (0..len)
            .map(|_| {
                let k = rng.gen_range(0..3);
                word.push(['x', 'y', 'z'][k]);
                theta_cycle_steps(lengths[rng.gen_range(0..3)].clone()).swap_remove(k)
            })
            .collect();
        let g = theta();
        let t = Template::of_graph(&g, &["u", "v"]);
        let generator = Generator::Periodic {
            steps,
            backtracking: BacktrackPolicy::Allow,
        };
        let mut s = SplitSequence::new(g, Some(generator), Some(t)).expect("theta word");
        if s.extend_to(depth).is_ok() {
            out.push((format!("word-{word}#{seed}"), s));
        }
    }
    out
}

fn mingling_expanding() -> Outcome {
    let mut seqs = random_theta_words(40, 20);
    let words = seqs.len();
    seqs.extend(random_chains(24, |_| 20));
    let cfg = AuditConfig::default();
    let (mut mingling, mut conflicts) = (0, Vec::new());
    for (name, s) in &seqs {
        let (m, _) = scan_full_mingling(s, 20, &cfg);
        if m.is_verified() {
            mingling += 1;
            if audit_expanding(s, 20, &cfg).is_violated() {
                conflicts.push(name.clone());
            }
        }
    }
    outcome(
        seqs.len() >= 50 && mingling > 0 && conflicts.is_empty(),
        format!(
            "{} sequences to depth 20 ({words} periodic theta words), {mingling} fully mingling, \
             {} of those with expanding violated",
            seqs.len(),
            conflicts.len()
        ),
    )
}

fn veech() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut holds, mut birkhoff, mut worst) = (0, 0, f64::NEG_INFINITY);
    let n_samples = 10_000;
    for _ in 0..n_samples {
        let n = rng.gen_range(2..=4);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(1.0..8.0)).collect())
            .collect();
        let b = FloatMatrix::from_rows(rows);
        let delta = delta_of(&b).expect("positive matrix");
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
        let c = veech_inequality_check(&b, delta, &u, &v).unwrap();
        holds += usize::from(c.holds);
        worst = worst.max(c.lhs - c.rhs);
        birkhoff += usize::from(birkhoff_check(&b, delta, &u, &v).unwrap().holds);
    }
    // δ = 1: a constant matrix sends everything to one ray.
    let ones = FloatMatrix::from_rows(vec![vec![2.0; 3]; 3]);
    let eq = veech_inequality_check(&ones, 1.0, &[0.2, 0.5, 0.3], &[0.7, 0.1, 0.2]).unwrap();
    let equality = eq.rhs.abs() < 1e-12 && eq.lhs.abs() < 1e-12;
    outcome(
        holds == n_samples && equality,
        format!(
            "inequality holds on {holds}/{n_samples} samples (largest lhs - rhs {worst:.3}); \
             delta = 1 gives rhs {:.1e}; Birkhoff contraction holds on {birkhoff}/{n_samples}",
            eq.rhs
        ),
    )
}

fn float_diameter(cols: &[Vec<BigInt>]) -> f64 {
    let unit: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| {
            let x: Vec<f64> = c.iter().map(|v| v.to_f64().unwrap()).collect();
            let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.into_iter().map(|v| v / n).collect()
        })
        .collect();
    let mut best = 0.0f64;
    for a in &unit {
        for b in &unit {
            let d = a
                .iter()
                .zip(b)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt();
            best = best.max(d);
        }
    }
    best
}

fn contraction_certificate() -> Outcome {
    let t = Instant::now();
    let s = extended(theta_cycle().unwrap(), 120);
    let c = certify_unique_ergodicity(&s, 120, 1e-8).unwrap();
    let elapsed = t.elapsed();
    let d = &c.certified_diameters;
    let decreasing = d.windows(2).all(|w| w[1] < w[0]);
    let small = d.iter().position(|&x| x < 1e-6);
    let width = c.witness.as_ref().map_or(0, |w| w.width);
    // Float recomputation where doubles still resolve the diameter.
    let mut oracle_ok = true;
    for k in 0..=(30 / width.max(1)) {
        let depth = k * width;
        let cols = s.window(-(depth as i32), 0).unwrap().matrix.columns();
        let f = float_diameter(&cols);
        if (f - d[k]).abs() > 1e-9 * f.max(1e-3) {
            oracle_ok = false;
        }
    }
    let pass = c.status == CertificateStatus::UniquelyErgodicExact
        && decreasing
        && small.is_some_and(|k| k * width <= 120)
        && oracle_ok
        && elapsed < Duration::from_secs(10);
    outcome(
        pass,
        format!(
            "status {:?}, window width {width}, {} certified depths strictly decreasing: {decreasing}, \
             first below 1e-6 at depth {:?}, float oracle agrees: {oracle_ok}, runtime {elapsed:.2?}",
            c.status,
            d.len(),
            small.map(|k| k * width)
        ),
    )
}

fn dimension_bounds() -> Outcome {
    let mut seqs: Vec<(String, SplitSequence)> = FIXTURE_NAMES
        .iter()
        .map(|n| (n.to_string(), extended(load_fixture(n).unwrap(), 24)))
        .collect();
    seqs.extend(random_chains(24, |_| 12));
    let mut bad = Vec::new();
    let mut coarse_rank2 = Vec::new();
    for (name, s) in &seqs {
        let c = certify_unique_ergodicity(s, s.depth(), 1e-8).unwrap();
        let b = c.dim_bounds;
        let n = s.rank();
        if !(1 <= b.lower && b.lower <= b.smallest_recurring && b.smallest_recurring <= 3 * (n - 1))
            || b.coarse != 3 * (n - 1)
        {
            bad.push(format!("{name}: {b:?}"));
        }
        if n == 2 {
            coarse_rank2.push(b.coarse);
        }
    }
    let rank2_ok = !coarse_rank2.is_empty() && coarse_rank2.iter().all(|&c| c == 3);
    outcome(
        bad.is_empty() && rank2_ok,
        format!(
            "{} certificates, {} inconsistent; rank-2 coarse bounds {:?}",
            seqs.len(),
            bad.len(),
            coarse_rank2
                .iter()
                .collect::<std::collections::BTreeSet<_>>()
        ) + &bad
            .first()
            .map_or(String::new(), |b| format!(" (first {b})")),
    )
}

fn weight_equations() -> Outcome {
    let s = extended(theta_cycle().unwrap(), 3);
    let one = || rat(1, 1);
    let w = WeightVector::new(-3, vec![one(), one(), one()]).unwrap();
    let ws = push_weights(&s, w, 0).unwrap();
    let ints = |v: &[i64]| v.iter().map(|&x| rat(x, 1)).collect::<Vec<Rational>>();
    let expected = [
        ints(&[1, 1, 1]),
        ints(&[1, 3, 1]),
        ints(&[5, 3, 1]),
        ints(&[5, 3, 9]),
    ];
    let theta_ok = ws.iter().map(|w| &w.entries).eq(expected.iter())
        && check_weight_equations(&s, &ws).unwrap().all_zero();

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let chains = random_chains(60, |seed| 3 + (seed % 4) as usize);
    let mut ok = 0;
    for (_, s) in &chains {
        let bottom = s.bottom();
        let n = s.edge_count(bottom);
        let entries: Vec<Rational> = (0..n)
            .map(|_| rat(rng.gen_range(0..20), rng.gen_range(1..7)))
            .collect();
        let ws = push_weights(s, WeightVector::new(bottom, entries.clone()).unwrap(), 0).unwrap();
        let exact = check_weight_equations(s, &ws).unwrap().all_zero();
        // The top weights also equal the whole window applied at once.
        let w = s.window(bottom, 0).unwrap().matrix;
        let top: Vec<Rational> = (0..w.nrows())
            .map(|i| {
                (0..n).fold(Rational::zero(), |a, j| {
                    a + Rational::from_integer(w[(i, j)].clone()) * &entries[j]
                })
            })
            .collect();
        ok += usize::from(exact && ws.last().unwrap().entries == top);
    }
    outcome(
        theta_ok && ok == chains.len(),
        format!(
            "THETA_CYCLE (1,1,1) -> (1,3,1) -> (5,3,1) -> (5,3,9) exact: {theta_ok}; \
             random rational weights exact on {ok}/{} chains",
            chains.len()
        ),
    )
}

fn row_sum(s: &SplitSequence, depth: usize, edge: usize) -> BigInt {
    let w = s.window(-(depth as i32), 0).unwrap().matrix;
    (0..w.ncols()).map(|j| w[(edge, j)].clone()).sum()
}

fn fiber_row_sums() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let fixtures: Vec<(String, SplitSequence)> = FIXTURE_NAMES
        .iter()
        .map(|n| (n.to_string(), extended(load_fixture(n).unwrap(), 6)))
        .collect();
    let (mut total, mut agree) = (0, 0);
    let mut by_fixture: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (name, s) in &fixtures {
        for _ in 0..8 {
            let g = s.graph(0).unwrap();
            let e = rng.gen_range(0..g.natural().edges.len());
            let len = g.path_len(&g.natural().edges[e].darts);
            let pos = len * rat(rng.gen_range(1..996), 997);
            let q = PointSpec::on_natural(s, 0, e, &pos).unwrap();
            let d = rng.gen_range(1..=6);
            let tree = compute_fiber(s, &q, d).unwrap();
            let hit = BigInt::from(tree.leaf_count(d)) == row_sum(s, d, e);
            total += 1;
            agree += usize::from(hit);
            let entry = by_fixture.entry(name.clone()).or_default();
            entry.0 += usize::from(hit);
            entry.1 += 1;
        }
    }
    let s = &fixtures[0].1;
    let g = s.graph(0).unwrap();
    let c = g.natural().index_of_label("c").unwrap();
    let q = PointSpec::on_natural(s, 0, c, &rat(2, 3)).unwrap();
    let leaves = compute_fiber(s, &q, 3).unwrap().leaf_count(3);
    let sum = row_sum(s, 3, c);
    outcome(
        agree == total && total >= 20 && leaves == 9,
        format!(
            "leaf count equals row sum at {agree}/{total} basepoints ({}); THETA_CYCLE q in C \
             at depth 3: {leaves} leaves, row sum {sum}",
            by_fixture
                .iter()
                .map(|(n, (a, t))| format!("{n} {a}/{t}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn tree_bases() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut seqs: Vec<SplitSequence> = FIXTURE_NAMES
        .iter()
        .map(|n| extended(load_fixture(n).unwrap(), 6))
        .collect();
    seqs.extend(random_chains(20, |_| 6).into_iter().map(|(_, s)| s));
    let (mut ok, mut oracle_ok) = (0, 0);
    let fibers = 100;
    for i in 0..fibers {
        let s = &seqs[i % seqs.len()];
        let g = s.graph(0).unwrap();
        let q = if rng.gen_bool(0.2) {
            let vs: Vec<_> = g.vertices().collect();
            PointSpec::new(0, Point::Vertex(vs[rng.gen_range(0..vs.len())]))
        } else {
            let e = rng.gen_range(0..g.natural().edges.len());
            let len = g.path_len(&g.natural().edges[e].darts);
            PointSpec::on_natural(s, 0, e, &(len * rat(rng.gen_range(1..96), 97))).unwrap()
        };
        let depth = rng.gen_range(1..=6);
        let tree = compute_fiber(s, &q, depth).unwrap();
        let ps = fiber_partition_system(&tree);
        ok += usize::from(ps.checks.all());
        // Recheck the axioms here, plus that children are fold preimages.
        let n = tree.leaf_count(depth);
        let parts = &ps.partitions;
        let mut good = parts.len() == depth + 1 && parts[0].len() == 1 && parts[0][0].len() == n;
        for (d, p) in parts.iter().enumerate() {
            let mut seen: Vec<usize> = p.iter().flatten().copied().collect();
            seen.sort_unstable();
            good &= seen == (0..n).collect::<Vec<_>>() && p.iter().all(|b| !b.is_empty());
            if d > 0 {
                good &= p.iter().all(|b| {
                    parts[d - 1]
                        .iter()
                        .filter(|c| b.iter().all(|x| c.contains(x)))
                        .count()
                        == 1
                });
                good &= parts[d - 1].len() <= p.len();
            }
        }
        for node in &tree.nodes {
            if let Some(parent) = node.parent {
                let up = s.push_point(node.point.level, node.point.level + 1, &node.point.point);
                good &= up == tree.nodes[parent].point.point;
            }
        }
        oracle_ok += usize::from(good);
    }
    outcome(
        ok == fibers && oracle_ok == fibers,
        format!("{ok}/{fibers} fibers pass the library checks, {oracle_ok}/{fibers} the independent recheck"),
    )
}

fn measure_consistency() -> Outcome {
    let s = extended(theta_cycle().unwrap(), 45);
    let ws = perron_weights(&s, 45).unwrap();
    let (records, census) = scan_star_chains(&s, 12).unwrap();
    let v = *records[census.candidates[0]].vertices.last().unwrap();
    let g = s.graph(0).unwrap();
    let star = g.star(v).to_vec();
    let depths: Vec<usize> = (1..=40).collect();
    let mut notes = Vec::new();
    let mut pass = true;
    for i in 0..star.len() {
        for j in i + 1..star.len() {
            let turn = TurnSpec::Vertex {
                level: 0,
                vertex: v,
                darts: (star[i], star[j]),
            };
            // Basepoints: the vertex itself and a point on the first prong.
            let p = Point::Vertex(v);
            let e = g.natural().edge_index(star[i]);
            let len = g.path_len(&g.natural().edges[e].darts);
            let q = g.point_at_natural(e, &(len * rat(1, 7)));
            let mut widths = Vec::new();
            let mut overlap = true;
            for &d in &depths {
                let a = evaluate_transverse_measure(&s, &ws, &turn, &p, d).unwrap();
                let b = evaluate_transverse_measure(&s, &ws, &turn, &q, d).unwrap();
                overlap &= a.overlaps(&b);
                widths.push(a.remainder_bound.max(b.remainder_bound));
            }
            // Non-increasing at every depth; strictly smaller after each
            // full period of three folds.
            let monotone =
                widths.windows(2).all(|w| w[1] <= w[0]) && widths.windows(4).all(|w| w[3] < w[0]);
            let below = widths.iter().position(|&w| w < 1e-6).map(|k| depths[k]);
            pass &= overlap && monotone && below.is_some();
            notes.push(format!(
                "turn ({},{}): overlap {overlap}, shrinking {monotone}, below 1e-6 at depth {below:?}",
                star[i], star[j]
            ));
        }
    }
    outcome(pass, notes.join("; "))
}

fn singularity_census() -> Outcome {
    let s = extended(theta_cycle().unwrap(), 12);
    let (records, census) = scan_star_chains(&s, 12).unwrap();
    let level0 = &s.levels()[0];
    let v_name = level0
        .template
        .as_ref()
        .or(s.template())
        .and_then(|t| t.vertex_index("v"))
        .zip(level0.chart.as_ref())
        .map(|(i, c)| c.vertices[i]);
    let v_chain = census.candidates.len() == 1
        && Some(*records[census.candidates[0]].vertices.last().unwrap()) == v_name;
    let mut others = Vec::new();
    for name in FIXTURE_NAMES {
        let s = extended(load_fixture(name).unwrap(), 12);
        match scan_star_chains(&s, 12) {
            Ok((_, c)) => others.push(format!("{name} {}/{}", c.candidates.len(), c.bound)),
            Err(e) => {
                others.push(format!("{name} error {e}"));
                return outcome(false, others.join(", "));
            }
        }
    }
    outcome(
        v_chain,
        format!(
            "THETA_CYCLE candidates {:?} (v-chain: {v_chain}); census/bound: {}",
            census.candidates,
            others.join(", ")
        ),
    )
}

fn negative_fixture() -> Outcome {
    let s = extended(repeat_ab().unwrap(), 20);
    let r = audit_expanding(&s, 20, &AuditConfig::default());
    let labels: Vec<String> = r
        .witness
        .as_ref()
        .and_then(|w| w.get("labels"))
        .and_then(|l| serde_json::from_value(l.clone()).ok())
        .unwrap_or_default();
    let c_witness = r.is_violated() && !labels.is_empty() && labels.iter().all(|l| l == "c");
    let g = s.graph(0).unwrap();
    let a = g.natural().index_of_label("a").unwrap();
    let q = PointSpec::on_natural(&s, 0, a, &rat(1, 3)).unwrap();
    let leaf = trace_partial_leaf(&s, &q, 10, 20).map(|t| t.status);
    let closed = matches!(leaf, Ok(LeafStatus::Closed { .. }));
    let ranks: Vec<usize> = contraction_trace(&s, 0, 20)
        .unwrap()
        .iter()
        .map(|r| r.rank)
        .collect();
    let min_rank = ranks.iter().copied().min().unwrap();
    outcome(
        c_witness && closed && min_rank >= 2,
        format!(
            "expanding violated with witness of {} c-edges: {c_witness}; leaf {leaf:?}; \
             least rank over 21 depths {min_rank}",
            labels.len()
        ),
    )
}
