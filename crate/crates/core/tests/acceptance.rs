//! Acceptance criteria 1–10, one PASS/FAIL line each.
//!
//! Verdict lines are written to stdout directly so they show up without `--nocapture`.
//! The ignored test reruns criteria 6 and 10 on larger grids.

use std::io::Write;
use std::time::Instant;

use anisofm::experiments::{
    haar_average, item_rng, kappa_spectrum, random_spd, tail_probability_check,
};
use anisofm::lattice::{minkowski_minima_bruteforce, minkowski_sandwich_check, reduce_basis};
use anisofm::mesh::{build_mesh, mesh_metrics, radius_bound_check, verify_mesh, ReducedMesh};
use anisofm::metric::{random_rotation, spd_from_spectrum, Rotation, SpdMatrix};
use anisofm::solver::{
    br_baseline_solve, fast_march, gauss_seidel_solve, linf_error, mask_fraction, omega1_mask, theorem_a_check,
    Decomposer, DistanceField, Grid,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn report(id: usize, name: &str, v: &Verdict, secs: f64) -> bool {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {id:>2} {:<4} {name} ({secs:.1} s): {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    let _ = out.flush();
    v.pass
}

fn reduced(m: &SpdMatrix) -> ReducedMesh {
    build_mesh(m, &reduce_basis(m).unwrap()).unwrap()
}

/// Criteria 1 and 2 share the corpus.
fn mesh_corpus() -> (Verdict, f64, Verdict, f64) {
    let mut failures1 = Vec::new();
    let mut violations2 = 0;
    let mut t1 = 0.0;
    let mut t2 = 0.0;
    for d in 2..=4 {
        for i in 0..1000u64 {
            let start = Instant::now();
            let m = random_spd(d, 1e6, &mut item_rng(100 + d as u64, i)).unwrap();
            let basis = reduce_basis(&m).unwrap();
            let mesh = build_mesh(&m, &basis).unwrap();
            let r = verify_mesh(&m, &mesh);
            t1 += start.elapsed().as_secs_f64();
            if !r.passed() {
                failures1.push((d, i));
            }
            let start = Instant::now();
            if !radius_bound_check(&m, &mesh, basis.norms()) {
                violations2 += 1;
            }
            t2 += start.elapsed().as_secs_f64();
        }
    }
    let c1 = verdict(
        failures1.is_empty() && t1 < 60.0,
        format!("{} of 3000 meshes fail verify_mesh {:?}; runtime {t1:.1} s (limit 60 s)", failures1.len(), failures1),
    );
    let c2 = verdict(violations2 == 0, format!("{violations2} radius sandwich violations over 3000 meshes"));
    (c1, t1, c2, t2)
}

fn reduction_oracle() -> Verdict {
    let mut mismatches = 0;
    let mut sandwich = 0;
    let mut worst: f64 = 0.0;
    for d in 2..=4 {
        for i in 0..500u64 {
            let m = random_spd(d, 1e4, &mut item_rng(200 + d as u64, i)).unwrap();
            let fast = reduce_basis(&m).unwrap();
            let (brute, _) = minkowski_minima_bruteforce(&m).unwrap();
            let rel = fast.norms().iter().zip(&brute).map(|(a, b)| ((a - b) / b).abs()).fold(0.0, f64::max);
            worst = worst.max(rel);
            if rel > 1e-10 {
                mismatches += 1;
            }
            if !minkowski_sandwich_check(&m, &brute) {
                sandwich += 1;
            }
        }
    }
    verdict(
        mismatches == 0 && sandwich == 0,
        format!("{mismatches} norm mismatches (worst relative {worst:.1e}), {sandwich} sandwich failures over 1500"),
    )
}

fn orientation_metrics() -> Vec<(f64, SpdMatrix)> {
    let mut out = Vec::new();
    for (ki, &k) in [1.0, 10.0, 100.0].iter().enumerate() {
        for j in 0..8u64 {
            let r = random_rotation(2, &mut item_rng(400 + ki as u64, j)).unwrap();
            out.push((k, spd_from_spectrum(&kappa_spectrum(2, k), &r).unwrap()));
        }
    }
    out
}

/// Criteria 4 and 5 share the solves.
fn solver_bounds() -> (Verdict, Verdict, f64) {
    let start = Instant::now();
    let grid = Grid::new(2, 100).unwrap();
    let mut lower_violations = 0;
    let mut worst_lower: f64 = 0.0;
    let mut upper_violations = 0;
    let mut checked = 0;
    for (_, m) in orientation_metrics() {
        let mesh = reduced(&m);
        let (f, _) = fast_march(&m, &mesh, grid).unwrap();
        for (idx, &v) in f.values().iter().enumerate() {
            let norm = m.lattice_norm(&grid.node(idx));
            let gap = v - norm;
            if gap < -1e-12 * norm {
                lower_violations += 1;
            }
            if norm > 0.0 {
                worst_lower = worst_lower.min(gap / norm);
            }
        }
        let mask = omega1_mask(&mesh, &grid).unwrap();
        let rep = theorem_a_check(&m, &mesh, &f, &mesh_metrics(&m, &mesh), &mask).unwrap();
        upper_violations += rep.violations;
        checked += rep.nodes_checked;
    }
    let secs = start.elapsed().as_secs_f64();
    (
        verdict(
            lower_violations == 0,
            format!("{lower_violations} nodes below ‖z‖_M on 24 metrics, n=100 (worst relative gap {worst_lower:.1e})"),
        ),
        verdict(
            upper_violations == 0 && secs < 120.0,
            format!("{upper_violations} violations over {checked} Ω*¹ nodes; runtime {secs:.1} s (limit 120 s)"),
        ),
        secs,
    )
}

fn one_pass_equivalence(sizes: &[(usize, i64)]) -> Verdict {
    let mut worst: f64 = 0.0;
    let mut trace_failures = 0;
    for &(d, n) in sizes {
        let grid = Grid::new(d, n).unwrap();
        for i in 0..20u64 {
            let m = random_spd(d, 1e3, &mut item_rng(600 + d as u64, i)).unwrap();
            let mesh = reduced(&m);
            let (fm, trace) = fast_march(&m, &mesh, grid).unwrap();
            let gs = gauss_seidel_solve(&m, &mesh, grid, 1e-12).unwrap();
            worst = worst.max(fm.max_difference(&gs));
            let frozen = trace.order.iter().zip(&trace.accepted_values).all(|(&idx, &v)| fm.values()[idx] == v);
            if !trace.is_monotone() || !trace.is_injective(grid.len()) || !frozen {
                trace_failures += 1;
            }
        }
    }
    let grids: Vec<String> = sizes.iter().map(|(d, n)| format!("d={d} n={n}")).collect();
    verdict(
        worst <= 1e-8 && trace_failures == 0,
        format!("sup |FM − GS| = {worst:.1e}, {trace_failures} trace failures; 20 metrics on {}", grids.join(", ")),
    )
}

fn within(x: f64, target: f64, rel: f64) -> bool {
    (x - target).abs() <= rel * target
}

fn reference_configuration() -> (Verdict, f64) {
    let start = Instant::now();
    let m = spd_from_spectrum(&[0.1, 10.0], &Rotation::from_axis_2d([1.0, 0.6]).unwrap()).unwrap();
    let grid = Grid::new(2, 500).unwrap();
    let mesh = reduced(&m);
    let (fm, _) = fast_march(&m, &mesh, grid).unwrap();
    let mask = omega1_mask(&mesh, &grid).unwrap();
    let e_all = linf_error(&m, &fm, None).0;
    let e_mask = linf_error(&m, &fm, Some(&mask)).0;
    let frac = mask_fraction(&grid, &mask);
    let base: DistanceField = br_baseline_solve(&m, grid, 1e-10).unwrap();
    let e_base = linf_error(&m, &base, None).0;
    let id = SpdMatrix::identity(2).unwrap();
    let (fi, _) = fast_march(&id, &reduced(&id), grid).unwrap();
    let e_iso = linf_error(&id, &fi, None).0;
    let secs = start.elapsed().as_secs_f64();
    let pass = within(e_all, 2.69, 0.15)
        && within(e_mask, 1.25, 0.20)
        && (frac - 0.37).abs() <= 0.05
        && within(e_iso, 2.1, 0.10)
        && e_base >= 5.0 * e_all
        && secs < 60.0;
    (
        verdict(
            pass,
            format!(
                "L∞(Ω*) {e_all:.4} (2.69±15%), L∞(Ω*¹) {e_mask:.4} (1.25±20%), mask {frac:.4} (0.37±0.05), \
                 isotropic {e_iso:.4} (2.1±10%), baseline {e_base:.2} (≥ 5×FM); runtime {secs:.1} s (limit 60 s)"
            ),
        ),
        secs,
    )
}

fn haar_ratios() -> (Verdict, f64) {
    let start = Instant::now();
    let norm = |d: usize, k: f64| {
        let m = spd_from_spectrum(&kappa_spectrum(d, k), &Rotation::identity(d).unwrap()).unwrap();
        haar_average(&m, 2000, 800 + d as u64).unwrap().normalized
    };
    let r2 = norm(2, 1000.0) / norm(2, 10.0);
    let r3 = norm(3, 100.0) / norm(3, 10.0);
    let secs = start.elapsed().as_secs_f64();
    let ok = |r: f64| (1.0 / 1.5..=1.5).contains(&r);
    (
        verdict(
            ok(r2) && ok(r3) && secs < 60.0,
            format!("d=2 κ=1000/κ=10 ratio {r2:.4}, d=3 κ=100/κ=10 ratio {r3:.4} (within [0.667, 1.5]); runtime {secs:.1} s (limit 60 s)"),
        ),
        secs,
    )
}

fn tail_bound() -> Verdict {
    let mut lines = Vec::new();
    let mut pass = true;
    for d in [2, 3] {
        let m = spd_from_spectrum(&kappa_spectrum(d, 100.0), &Rotation::identity(d).unwrap()).unwrap();
        let rep = tail_probability_check(&m, &[0.1, 0.2, 0.5], 10_000, 900 + d as u64).unwrap();
        pass &= rep.passed();
        for r in &rep.rows {
            lines.push(format!("d={d} δ={}: {:.4} ≤ {:.4}", r.delta, r.frequency, r.bound + 3.0 * r.std_error));
        }
    }
    verdict(pass, lines.join(", "))
}

fn super_solution_sandwich(sizes: &[(usize, i64)]) -> Verdict {
    let mut violations = 0;
    let mut checked = 0;
    for &(d, n) in sizes {
        let grid = Grid::new(d, n).unwrap();
        for i in 0..10u64 {
            let m = random_spd(d, 1e3, &mut item_rng(1000 + d as u64, i)).unwrap();
            let mesh = reduced(&m);
            let metrics = mesh_metrics(&m, &mesh);
            let dec = Decomposer::new(&mesh).unwrap();
            let (f, _) = fast_march(&m, &mesh, grid).unwrap();
            let mask = omega1_mask(&mesh, &grid).unwrap();
            for idx in (0..grid.len()).filter(|&i| mask[i]) {
                let z = grid.node(idx);
                let exact = m.lattice_norm(&z);
                let upper = dec.super_solution(&m, &metrics, &z).unwrap();
                let v = f.values()[idx];
                checked += 1;
                if v < exact * (1.0 - 1e-12) || v > upper + 1e-9 * (1.0 + exact) {
                    violations += 1;
                }
            }
        }
    }
    let grids: Vec<String> = sizes.iter().map(|(d, n)| format!("d={d} n={n}")).collect();
    verdict(violations == 0, format!("{violations} violations over {checked} masked nodes; 10 metrics on {}", grids.join(", ")))
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

const SIZES6: &[(usize, i64)] = &[(2, 50), (3, 20), (4, 4)];
const SIZES10: &[(usize, i64)] = &[(2, 100), (3, 30), (4, 5)];
const SIZES6_EXTENDED: &[(usize, i64)] = &[(3, 50), (4, 8)];
const SIZES10_EXTENDED: &[(usize, i64)] = &[(3, 100), (4, 10)];

#[test]
fn acceptance_criteria() {
    let mut all = true;

    let (c1, t1, c2, t2) = mesh_corpus();
    all &= report(1, "mesh invariants", &c1, t1);
    all &= report(2, "radius sandwich", &c2, t2);

    let (c3, t3) = timed(reduction_oracle);
    all &= report(3, "reduction oracle", &c3, t3);

    let (c4, c5, t45) = solver_bounds();
    all &= report(4, "solver lower bound", &c4, t45);
    all &= report(5, "solver upper bound", &c5, t45);

    let (c6, t6) = timed(|| one_pass_equivalence(SIZES6));
    all &= report(6, "one-pass equivalence [reduced 3D/4D grids]", &c6, t6);

    let (c7, t7) = reference_configuration();
    all &= report(7, "constant-metric reproduction", &c7, t7);

    let (c8, t8) = haar_ratios();
    all &= report(8, "Haar average κ-independence", &c8, t8);

    let (c9, t9) = timed(tail_bound);
    all &= report(9, "λ₁ tail bound", &c9, t9);

    let (c10, t10) = timed(|| super_solution_sandwich(SIZES10));
    all &= report(10, "super-solution sandwich [reduced 3D/4D grids]", &c10, t10);

    assert!(all, "at least one acceptance criterion failed");
}

#[test]
#[ignore = "larger 3D/4D grids, about 25 minutes"]
fn acceptance_extended_grids() {
    let (c6, t6) = timed(|| one_pass_equivalence(SIZES6_EXTENDED));
    let ok6 = report(6, "one-pass equivalence [extended grids]", &c6, t6);
    let (c10, t10) = timed(|| super_solution_sandwich(SIZES10_EXTENDED));
    let ok10 = report(10, "super-solution sandwich [extended grids]", &c10, t10);
    assert!(ok6 && ok10);
}
