//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line to
//! stderr (uncaptured) and then asserts.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use paircorr::config::{CorrelationConfig, PsiMode, Scaling};
use paircorr::empirical::{
    empirical_measure_with, gap_position, oracle_measure, pair_gap_stream, short_vectors,
    AccumulateOptions,
};
use paircorr::pairgeom::{brute_force_j, enumerate_j, make_frame};
use paircorr::quad;
use paircorr::ring::{norm_cap_for_power, DiscPoints, FieldParams, QuadInt};
use paircorr::runner::{compare, empirical_table, CsvTable};
use paircorr::theory::{
    classify_regime, density_rho, kernel_g, primitive_h, CaseId, ThetaSum, THETA_MASS_STEPS,
};

fn report(n: u32, pass: bool, elapsed: Duration, detail: &str) {
    let line = format!(
        "criterion {n}: {} ({:.1} s) {detail}\n",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    // written to the raw handle so the line survives output capture
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn gauss_cfg(n: i64, alpha: f64, beta: f64) -> CorrelationConfig {
    CorrelationConfig::new(FieldParams::gaussian(), alpha, Scaling::power(beta), n)
}

#[test]
fn criterion_1_oracle_equivalence() {
    let start = Instant::now();
    let mut checked = 0usize;
    let mut mismatch = None;
    'outer: for d in [-3, -4, -7, -8, -11] {
        let field = FieldParams::new(d).unwrap();
        for n in 1..=40i64 {
            let cap = norm_cap_for_power(n as f64, 0.4);
            for p in DiscPoints::with_norm_cap(cap, &field) {
                let frame = make_frame(p, &field).unwrap();
                let fast: Vec<QuadInt> = enumerate_j(&frame, n).collect();
                let mut sorted = fast.clone();
                sorted.sort();
                sorted.dedup();
                let slow: Vec<QuadInt> = brute_force_j(p, n, &field).unwrap().into_iter().collect();
                checked += 1;
                if sorted.len() != fast.len() || sorted != slow {
                    mismatch = Some(format!("D={d} N={n} p={p}"));
                    break 'outer;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = mismatch.is_none() && elapsed < Duration::from_secs(60);
    report(
        1,
        pass,
        elapsed,
        &format!("{checked} (D, N, p) triples; mismatch: {}", mismatch.as_deref().unwrap_or("none")),
    );
    assert!(pass);
}

#[test]
fn criterion_2_double_path() {
    let start = Instant::now();
    let mut configs = 0usize;
    let mut atoms = 0usize;
    let mut mismatch = None;
    'outer: for d in [-4, -3] {
        for alpha in [0.2, 0.4] {
            for beta in [0.5, 1.0] {
                for n in 2..=25i64 {
                    let cfg = CorrelationConfig::new(FieldParams::new(d).unwrap(), alpha, Scaling::power(beta), n)
                        .with_psi(PsiMode::Value(1.0));
                    let psi = 1.0;
                    let h = empirical_measure_with(&cfg, psi, AccumulateOptions::default()).unwrap();
                    let fast = h.atoms.expect("atom-exact mode");
                    let slow = oracle_measure(&cfg, psi).unwrap();
                    configs += 1;
                    atoms += slow.len();
                    if fast != slow {
                        mismatch = Some(format!("D={d} alpha={alpha} beta={beta} N={n}"));
                        break 'outer;
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = mismatch.is_none() && elapsed < Duration::from_secs(120);
    report(
        2,
        pass,
        elapsed,
        &format!(
            "{configs} configurations, {atoms} atoms; mismatch: {}",
            mismatch.as_deref().unwrap_or("none")
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_3_constants() {
    let start = Instant::now();
    let g = |u: f64| kernel_g(u).unwrap();
    let k = FieldParams::gaussian();
    let direct = [
        ("g(0)", g(0.0), 2.0 / 3.0),
        ("g(1)", g(1.0), PI / 2.0),
        ("h(1)", primitive_h(1.0).unwrap(), -PI / 8.0),
        ("rho(0)", density_rho(0.0, 1.0, &k).unwrap(), 8.0 * PI / (3.0 * 4.0)),
        (
            "rho(2λ)",
            density_rho(2.0, 1.0, &k).unwrap(),
            4.0 * PI * PI / (4.0 * 8.0),
        ),
        (
            "rho continuity λ=0.7",
            density_rho(1.4 * (1.0 - 1e-15), 0.7, &k).unwrap(),
            density_rho(1.4 * (1.0 + 1e-15), 0.7, &k).unwrap(),
        ),
    ];
    let quadrature = [
        ("∫₀¹ g", quad::integrate(g, 0.0, 1.0, 1e-13), PI / 4.0),
        (
            "∫₀^∞ g",
            quad::integrate_with_breaks(g, 0.0, f64::INFINITY, &[1.0], 1e-13),
            PI / 2.0,
        ),
    ];
    let mut worst = String::new();
    let mut pass = true;
    for (name, got, want, tol) in direct
        .iter()
        .map(|&(n, a, b)| (n, a, b, 1e-12))
        .chain(quadrature.iter().map(|&(n, a, b)| (n, a, b, 1e-8)))
    {
        let err = (got - want).abs();
        if err > tol {
            pass = false;
        }
        worst.push_str(&format!("{name}:{err:.1e} "));
    }
    report(3, pass, start.elapsed(), worst.trim_end());
    assert!(pass);
}

#[test]
fn criterion_4_theta_mass() {
    let start = Instant::now();
    let want = 2.0 * PI * PI / 4.0;
    let mut detail = String::new();
    let mut pass = true;
    for n in [10_000_000i64, 1_000_000_000] {
        let cfg = gauss_cfg(n, 0.15, 0.8);
        assert_eq!(classify_regime(0.15, cfg.scaling, &cfg.field).case_id, CaseId::One);
        let mass = ThetaSum::from_config(&cfg).unwrap().mass(THETA_MASS_STEPS);
        let rel = (mass / want - 1.0).abs();
        pass &= rel <= 1e-6;
        detail.push_str(&format!("N={n:e}: rel err {rel:.2e}; "));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(30);
    report(4, pass, elapsed, detail.trim_end_matches("; "));
    assert!(pass);
}

#[test]
fn criterion_5_fig6_convergence() {
    let start = Instant::now();
    let target = 2.0 * PI / 3.0;
    let ts: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.01).collect();
    let mut sups = Vec::new();
    for m in [10u32, 12, 14] {
        let cfg = gauss_cfg(10i64.pow(m), 0.15, 0.9);
        assert_eq!(classify_regime(0.15, cfg.scaling, &cfg.field).case_id, CaseId::Three);
        let sum = ThetaSum::from_config(&cfg).unwrap();
        let sup = sum
            .eval_many(&ts)
            .iter()
            .map(|v| (v - target).abs())
            .fold(0.0, f64::max);
        sups.push(sup);
    }
    let elapsed = start.elapsed();
    let monotone = sups.windows(2).all(|w| w[1] <= w[0]);
    let pass = monotone && sups[2] <= 0.1 && elapsed < Duration::from_secs(60);
    report(
        5,
        pass,
        elapsed,
        &format!(
            "sup|Θ_N − 2π/3| on [0,10] = {:.4} (1e10), {:.4} (1e12), {:.4} (1e14); monotone: {monotone}; bound 0.1",
            sups[0], sups[1], sups[2]
        ),
    );
    assert!(pass);
}

fn fig1_config() -> CorrelationConfig {
    gauss_cfg(3000, 0.15, 0.85)
        .with_psi(PsiMode::Power(2.3))
        .with_bins(0.1, -2.0, 2.0)
}

/// The criterion-6 table built on 8 workers, shared with criterion 9.
fn fig1_table_8() -> &'static (CsvTable, Duration) {
    static CELL: OnceLock<(CsvTable, Duration)> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let t = empirical_table(&fig1_config(), AccumulateOptions { threads: Some(8) }).unwrap();
        (t, start.elapsed())
    })
}

#[test]
fn criterion_6_fig1_reproduction() {
    let (table, elapsed) = fig1_table_8();
    let k = FieldParams::gaussian();
    let rho = |t: f64| density_rho(t, 1.0, &k).unwrap();
    let w = 0.1;
    let mut theory = CsvTable::new();
    theory.set("bin_width", w);
    let mut l1 = 0.0;
    for &(c, d) in &table.rows {
        let avg = quad::integrate_with_breaks(rho, c - w / 2.0, c + w / 2.0, &[0.0], 1e-14) / w;
        theory.rows.push((c, avg));
        l1 += (d - avg).abs() * w;
    }
    let total = quad::integrate_with_breaks(rho, -2.0, 2.0, &[0.0], 1e-14);
    let via_compare = compare(table, &theory, Some((-2.0, 2.0))).unwrap();
    assert!((via_compare.l1 - l1).abs() < 1e-12);
    let bound = 0.15 * total;
    let pass = l1 <= bound && *elapsed < Duration::from_secs(240);
    report(
        6,
        pass,
        *elapsed,
        &format!(
            "L1 = {l1:.4}, bound 0.15·∫ρ = {bound:.4} (∫ρ = {total:.4}), sup = {:.4}, mass diff = {:.4}",
            via_compare.sup, via_compare.mass_diff
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_cardinality() {
    let start = Instant::now();
    let n: i64 = 500;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for d in [-4, -3] {
        let field = FieldParams::new(d).unwrap();
        for p in DiscPoints::with_norm_cap(9, &field) {
            let fr = make_frame(p, &field).unwrap();
            let card = enumerate_j(&fr, n).count() as f64;
            let ratio = card * fr.cp_abs_v() / (PI * fr.abs_p * (n * n) as f64);
            worst = worst.max((ratio - 1.0).abs());
            count += 1;
        }
    }
    let pass = worst <= 0.05;
    report(
        7,
        pass,
        start.elapsed(),
        &format!("{count} elements p (D ∈ {{−4, −3}}, |p| ≤ 3), max |ratio − 1| = {worst:.4}"),
    );
    assert!(pass);
}

#[test]
fn criterion_8_level_repulsion() {
    let start = Instant::now();
    let n: i64 = 2000;
    let cfg = gauss_cfg(n, 0.15, 2.0)
        .with_psi(PsiMode::Power(3.0 + 0.15 - 2.0))
        .with_bins(0.99, 0.0, 0.99);
    let min_gap = pair_gap_stream(&cfg).fold(f64::INFINITY, f64::min);
    let nn = (n * n) as f64;
    let bound = nn * (1.0 / nn).ln_1p();
    // exact smallest ratio b/a > 1 with b ≤ N² is N²/(N² − 1)
    let exact_min = gap_position(cfg.phi(), n * n, n * n - 1);
    let h = empirical_measure_with(&cfg, 1.0, AccumulateOptions::default()).unwrap();
    let first_bin = h.mass[0];
    let count = short_vectors(&cfg).count();
    let pass = min_gap >= bound * (1.0 - 1e-15) && min_gap > 0.9999998 && first_bin == 0.0;
    report(
        8,
        pass,
        start.elapsed(),
        &format!(
            "{count} short vectors, {} pairs; min positive atom {min_gap:.10} (N²ln(1+1/N²) = {bound:.10}, smallest possible {exact_min:.10}); mass in [0, 0.99) = {first_bin}",
            h.total_pairs
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_9_determinism() {
    let (eight, _) = fig1_table_8();
    let start = Instant::now();
    let one = empirical_table(&fig1_config(), AccumulateOptions { threads: Some(1) }).unwrap();
    let elapsed = start.elapsed();
    let (a, b) = (one.render(), eight.render());
    let pass = a.as_bytes() == b.as_bytes();
    report(
        9,
        pass,
        elapsed,
        &format!("1-worker vs 8-worker CSV: {} bytes each, identical: {pass}", a.len()),
    );
    assert!(pass);
}
