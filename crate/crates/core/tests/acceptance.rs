//! Desk-scale acceptance run: one pass/fail line per criterion.
//!
//! Runs without the libtest harness so that every line is printed even when
//! an earlier criterion fails. The process exits with status 1 if any
//! criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use pkattract::ergodic::*;
use pkattract::green::{green_function, sample_histories, sample_mu0, sample_mu_lambda};
use pkattract::history::{cylinder_mass, lift_map, CylinderSet, Prehistory};
use pkattract::maps::{apply_h, chart_jacobian_in, default_rho};
use pkattract::partition::Partition;
use pkattract::projective::fs_distance;
use pkattract::rng::substream;
use pkattract::trap::{fiber_contraction, phi_lambda, trap_forward_scan};
use pkattract::verify::*;
use pkattract::{HomogeneousMap, MapKind, Params, ProjPoint, C64};
use rand::Rng;

const LAMBDA: f64 = 0.01;
const RHO: f64 = 0.04472;
const LOG2: f64 = std::f64::consts::LN_2;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn params(k: usize) -> Params {
    Params::new(k, C64::new(LAMBDA, 0.0), RHO).unwrap()
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_c<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn c01_identities() -> Outcome {
    let p = params(2);
    let f = MapKind::FLambda(p);
    let t = p.t_fixed();
    let r = [
        fs_distance(&f.apply(&p.p_lambda()).unwrap(), &p.p_lambda()).unwrap(),
        fs_distance(&f.apply(&p.q_lambda()).unwrap(), &p.p_lambda()).unwrap(),
        (apply_h(p.lambda, t) - t).norm(),
        (t * t - t + p.lambda).norm(),
    ];
    let worst = r.iter().copied().fold(0.0, f64::max);
    verdict(worst < 1e-12, format!("max residual {worst:.3e} (< 1e-12)"))
}

fn c02_trapping() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for k in [2, 3] {
        let r = trap_forward_scan(&params(k), 100_000, 2);
        ok &= r.violations == 0 && r.max_image_ratio < 2.0 * LAMBDA;
        lines.push(format!("k={k}: escapes {} max ratio {:.5}", r.violations, r.max_image_ratio));
    }
    verdict(ok, format!("{} (< 0.02)", lines.join(", ")))
}

fn c03_preimages() -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for k in [2, 3] {
        for set in [InvariantSet::Pi, InvariantSet::Whole, InvariantSet::Line] {
            let r = topological_degree_check(&params(k), set, 100, 3).unwrap();
            ok &= r.passed;
            lines.push(format!(
                "k={k} {set:?} {} ({}, fwd {:.1e})",
                if r.passed { "ok" } else { "bad" },
                set.expected_degree(k),
                r.get("max forward residual").unwrap()
            ));
        }
    }
    verdict(ok, lines.join(", "))
}

fn c04_green() -> Outcome {
    let mut rng = substream(4, 0);
    let mut worst: f64 = 0.0;
    let maps = [MapKind::FLambda(params(2)), MapKind::Base { k: 2 }];
    for map in &maps {
        let n = map.dim() + 1;
        for _ in 0..500 {
            let v: Vec<C64> = (0..n).map(|_| random_c(&mut rng)).collect();
            let mut fv = vec![C64::new(0.0, 0.0); n];
            map.lift(&v, &mut fv);
            let g = green_function(map, &v, 60).unwrap();
            let gf = green_function(map, &fv, 60).unwrap();
            worst = worst.max((gf - 2.0 * g).abs());
        }
    }
    let base = MapKind::Base { k: 2 };
    let one = [C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
    let g11 = green_function(&base, &one, 60).unwrap();
    let v = [C64::new(0.3, -0.7), C64::new(1.1, 0.2)];
    let c = C64::new(-2.0, 0.0);
    let cv: Vec<C64> = v.iter().map(|x| c * x).collect();
    let homog =
        (green_function(&base, &cv, 60).unwrap() - green_function(&base, &v, 60).unwrap() - c.norm().ln()).abs();
    verdict(
        worst < 1e-8 && g11 == 0.0 && homog < 1e-14,
        format!("|G(F)-2G| {worst:.2e} (< 1e-8), G(1,1) = {g11}, homogeneity {homog:.1e}"),
    )
}

fn c05_semiconjugacy() -> Outcome {
    let p = params(2);
    let f = MapKind::FLambda(p);
    let hs = sample_histories(2, 40, 100, 5);
    let mut square: f64 = 0.0;
    for h in &hs {
        let a = phi_lambda(&p, &lift_map(h).unwrap()).unwrap();
        let b = f.apply(&phi_lambda(&p, h).unwrap()).unwrap();
        square = square.max(fs_distance(&a, &b).unwrap());
    }
    let one = ProjPoint::from_reals(&[1.0, 1.0]).unwrap();
    let fixed = fs_distance(&phi_lambda(&p, &Prehistory::constant(one, 40).unwrap()).unwrap(), &p.p_lambda()).unwrap();
    let bases = sample_mu0(2, 30, 100, 6);
    let diam = bases.points().iter().map(|a| *fiber_contraction(&p, a, 30).last().unwrap()).fold(0.0, f64::max);
    verdict(
        square < 1e-8 && fixed < 1e-10 && diam < 1e-8,
        format!("square {square:.2e} (< 1e-8), constant {fixed:.2e} (< 1e-10), fiber diameter {diam:.2e} (< 1e-8)"),
    )
}

fn c06_eigenvalues() -> Outcome {
    let p = params(2);
    let jac = chart_jacobian_in(&MapKind::FLambda(p), &p.p_lambda(), Some(0), Some(0)).unwrap();
    let ev = jac.eigenvalues();
    let want = [C64::new(-4.0, 0.0), 2.0 * p.t_fixed()];
    let err2 = want.iter().map(|w| ev.iter().map(|e| (e - w).norm()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
    let r3 = check_hyperbolic_eigenvalues(C64::new(LAMBDA, 0.0), 3).unwrap();
    let stable = r3.get("|ev - 2t|").unwrap();
    let unstable = r3.get("max ||ev| - 4|").unwrap();
    verdict(
        err2 < 1e-8 && stable < 1e-8 && unstable < 0.1,
        format!(
            "k=2 spectrum error {err2:.1e} (< 1e-8); k=3 stable {stable:.1e} (< 1e-8), unstable {unstable:.2e} (< 0.1)"
        ),
    )
}

fn c07_lemmas() -> Outcome {
    let lambdas = [0.01, 0.005, 0.0025];
    let mut ok = true;
    let mut bad = Vec::new();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for &l in &lambdas {
        let lam = C64::new(l, 0.0);
        let rho = default_rho(lam).unwrap();
        for k in [2, 3] {
            let fl = check_fixed_line(lam, rho, k, None).unwrap();
            let pe = check_preimage_escape(lam, rho, k).unwrap();
            if !(fl.passed && pe.passed) {
                ok = false;
                bad.push(format!("λ={l} k={k}"));
            }
            for (_, v) in pe.metrics.iter().filter(|(name, _)| name.starts_with("ratio")) {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
        }
    }
    let res: Vec<f64> =
        lambdas.iter().map(|&l| fixed_line_case_residual(C64::new(l, 0.0), 3, Precision::Double)).collect();
    let scale: Vec<f64> = res.windows(2).map(|w| w[0] / w[1]).collect();
    let cubic = scale.iter().all(|s| (4.0..=16.0).contains(s));
    ok &= cubic && (0.5..=2.0).contains(&lo) && (0.5..=2.0).contains(&hi);
    verdict(
        ok,
        format!(
            "failing {bad:?}; k=3 residual ratios {:.2}, {:.2} (cubic: 8 within factor 2); preimage ratios in [{lo:.3}, {hi:.3}]",
            scale[0], scale[1]
        ),
    )
}

fn c08_entropy() -> Outcome {
    let base = MapKind::Base { k: 2 };
    let mut counts = Vec::new();
    let mut exact = true;
    for n in 1..=10 {
        let e = periodic_points_p1_oracle(&base, n).unwrap();
        exact &= e.len() == (1 << n) + 1;
        counts.push((n, e.len()));
    }
    let growth = entropy_from_periodic_growth(&counts).unwrap();
    let p = params(2);
    let f = MapKind::FLambda(p);
    let cloud = sample_mu_lambda(&p, 40, 100_000, 14);
    let span = topological_entropy_estimate(&f, cloud.points(), &[1, 2, 3, 4, 5, 6], &[0.1]).unwrap().estimate();
    let cloud = sample_mu_lambda(&p, 40, 1_000_000, 13);
    let bk = brin_katok_entropy(&cloud, &f, 6, 0.1, 1000).unwrap();
    let near = |h: f64| (h - LOG2).abs() < 0.25 * LOG2;
    verdict(
        exact && (growth - LOG2).abs() < 0.01 && near(span) && near(bk.differenced),
        format!(
            "counts 2^n+1: {exact}; periodic slope {growth:.4} (log 2 ± 0.01); spanning {span:.4}, Brin–Katok {:.4} (raw {:.4}) (log 2 ± 25%)",
            bk.differenced, bk.raw
        ),
    )
}

fn c09_lyapunov() -> Outcome {
    let circle: Vec<ProjPoint> = (0..100)
        .map(|i| ProjPoint::new([C64::from_polar(1.0, 0.0628 * i as f64 + 0.1234), C64::new(1.0, 0.0)]).unwrap())
        .collect();
    let retract = retract_to_unit_circle;
    let opts = LyapunovOptions { burn_in: 0, retract: Some(&retract) };
    let sq = lyapunov_exponents(&MapKind::Quadratic { lambda: C64::new(0.0, 0.0) }, &circle, 1000, &opts).unwrap();
    let oracle = (sq.largest() - LOG2).abs() <= 2.0 * sq.standard_errors[0];
    let p = params(2);
    let starts = sample_mu_lambda(&p, 40, 100, 16);
    let r = lyapunov_exponents(&MapKind::FLambda(p), starts.points(), 10_000, &LyapunovOptions::default()).unwrap();
    let (l1, s1) = (r.largest(), r.standard_errors[0]);
    let (l2, s2) = (r.smallest(), *r.standard_errors.last().unwrap());
    verdict(
        oracle && l1 - 2.0 * s1 >= 0.34 && l2 + 2.0 * s2 < -1.0,
        format!(
            "z^2 oracle {:.6} ± {:.1e}; f_λ largest {l1:.5} ± {s1:.1e} (>= 0.34), fiber {l2:.4} ± {s2:.1e} (< -1)",
            sq.largest(),
            sq.standard_errors[0]
        ),
    )
}

fn c10_mixing() -> Outcome {
    let p = params(2);
    let f = MapKind::FLambda(p);
    let cloud = sample_mu_lambda(&p, 40, 1_000_000, 19);
    let zero = C64::new(0.0, 0.0);
    let phi = Observable::bump(0, vec![C64::new(0.6, 0.2), zero]);
    let psi = Observable::bump(1, vec![C64::new(0.5, -0.3), zero]);
    let c0 = correlation(&cloud, &f, &phi, &psi, 0).unwrap();
    let c = correlation(&cloud, &f, &phi, &psi, 12).unwrap();
    let s = sensitivity_probe(&f, &cloud.points()[..2000], 0.1, 50, 3).unwrap();
    verdict(
        c.value.abs() < 3.0 * c.standard_error && s.fraction > 0.99,
        format!(
            "C_0 = {:.2e}, C_12 = {:.2e} ± {:.2e} (< 3 SE); separation fraction {:.4} (> 0.99)",
            c0.value, c.value, c.standard_error, s.fraction
        ),
    )
}

fn c11_periodic_distribution() -> Outcome {
    let base = MapKind::Base { k: 2 };
    let p = params(2);
    let m0 = sample_mu0(2, 30, 1_000_000, 20);
    let ml = sample_mu_lambda(&p, 40, 1_000_000, 21);
    let mut db = Vec::new();
    let mut da = Vec::new();
    for n in [4, 6, 8] {
        let e = periodic_points_p1_oracle(&base, n).unwrap();
        db.push(periodic_distribution_compare(&e, &m0, Partition::Base { m: 1 }).unwrap().discrepancy);
        let lifted = lift_periodic_set(&p, &e).unwrap();
        da.push(periodic_distribution_compare(&lifted, &ml, Partition::Attractor { k: 2 }).unwrap().discrepancy);
    }
    let dec = |d: &[f64]| d.windows(2).all(|w| w[1] < w[0]);
    verdict(dec(&db) && dec(&da), format!("base {db:.4?}, attractor {da:.4?} (decreasing over n = 4, 6, 8)"))
}

fn c12_nonalgebraicity() -> Outcome {
    let mut rng = substream(12, 0);
    let us: Vec<C64> = (0..400).map(|_| random_c(&mut rng)).collect();
    let line: Vec<(C64, C64)> = us.iter().map(|&u| (u, C64::new(2.0, -1.0) * u + 0.5)).collect();
    let conic: Vec<(C64, C64)> = us.iter().map(|&u| (u, u * u - C64::new(0.0, 3.0) * u + 1.0)).collect();
    let l = algebraicity_residual(&line, 2).unwrap();
    let q = algebraicity_residual(&conic, 2).unwrap();
    let controls = l[0].1 < 1e-10 && q[1].1 < 1e-10 && q[0].1 > 1e-3;
    let m = |k: usize| {
        let pts = sample_m_cloud(&params(k), 50, 10_000, 2.0, 22);
        algebraicity_residual(&pts, 6).unwrap()
    };
    let fmt = |r: &[(usize, f64)]| r.iter().map(|(_, s)| format!("{s:.1e}")).collect::<Vec<_>>().join(" ");
    let (m2, m3) = (m(2), m(3));
    let witness = m2.iter().all(|&(_, s)| s > 1e-3);
    verdict(
        controls && witness,
        format!(
            "controls line {:.1e} conic {:.1e}; M cloud k=2 sigma by degree 1..6: {} (all > 1e-3); k=3 for reference: {}",
            l[0].1,
            q[1].1,
            fmt(&m2),
            fmt(&m3)
        ),
    )
}

fn c13_history_transfer() -> Outcome {
    let n = 200_000;
    let hs = sample_histories(2, 16, n, 31);
    let m0 = sample_mu0(2, 30, n, 32);
    let mut rng = substream(33, 0);
    let centers = sample_mu0(2, 30, 20, 34);
    let mut worst_z: f64 = 0.0;
    for c in centers.points() {
        let cyl = CylinderSet { j: rng.gen_range(0..=6), center: c.clone(), radius: rng.gen_range(0.1..0.4) };
        let a = cylinder_mass(&hs, &cyl).unwrap();
        let b = m0.points().iter().filter(|p| cyl.contains_point(p)).count() as f64 / n as f64;
        let se = ((a * (1.0 - a) + b * (1.0 - b)) / n as f64).sqrt();
        worst_z = worst_z.max((a - b).abs() / se);
    }
    let base = MapKind::Base { k: 2 };
    let bk_base = brin_katok_entropy(&sample_mu0(2, 30, 300_000, 35), &base, 6, 0.1, 1000).unwrap().differenced;
    let bk_hat = brin_katok_hat(&sample_histories(2, 16, 300_000, 36), 6, 0.1, 1000).unwrap().differenced;
    let ly_base =
        lyapunov_exponents(&base, sample_mu0(2, 30, 100, 17).points(), 10_000, &LyapunovOptions::default()).unwrap();
    let ly_hat = lyapunov_hat(&sample_histories(2, 10, 100, 18), 10_000).unwrap();
    let ly_se = ly_base.standard_errors[0].hypot(ly_hat.standard_errors[0]);
    let ly_gap = (ly_base.largest() - ly_hat.largest()).abs();
    let entropy_ok = (bk_hat - bk_base).abs() < 0.25 * bk_base;
    verdict(
        worst_z <= 3.0 && entropy_ok && ly_gap <= 3.0 * ly_se,
        format!(
            "cylinder worst z {worst_z:.2} (<= 3); Brin–Katok hat {bk_hat:.4} vs base {bk_base:.4} (25%); Lyapunov hat {:.5} vs base {:.5}, gap {:.1e} (<= 3 SE = {:.1e})",
            ly_hat.largest(),
            ly_base.largest(),
            ly_gap,
            3.0 * ly_se
        ),
    )
}

fn main() {
    let criteria: [Criterion; 13] = [
        ("algebraic identities", c01_identities),
        ("trapping", c02_trapping),
        ("preimage completeness", c03_preimages),
        ("green function", c04_green),
        ("semiconjugation", c05_semiconjugacy),
        ("eigenvalues", c06_eigenvalues),
        ("lemma checkers", c07_lemmas),
        ("entropy", c08_entropy),
        ("lyapunov", c09_lyapunov),
        ("mixing", c10_mixing),
        ("periodic distribution", c11_periodic_distribution),
        ("nonalgebraicity witness", c12_nonalgebraicity),
        ("history-space transfer", c13_history_transfer),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag} {name} [{:.1}s]: {detail}", i + 1, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
