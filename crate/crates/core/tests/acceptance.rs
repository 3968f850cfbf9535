//! Acceptance report: one PASS/FAIL line per criterion at the stated
//! tolerances, plus `info:` lines with the numbers behind each verdict.
//!
//! Runs without the libtest harness so the report is always printed; the
//! process exits non-zero only if a criterion cannot be evaluated at all.
//! Set `CJT_ACCEPTANCE_STRICT=1` to also fail on any FAIL verdict.

use std::time::{Duration, Instant};

use cjt_core::config::{coulomb_chain, homogeneous_chain, short_range_chain};
use cjt_core::ed::cartesian::{cartesian_dense, hermitian_spectrum};
use cjt_core::ed::hamiltonian::build_hamiltonian;
use cjt_core::lab::constants::TWO_PI;
use cjt_core::meanfield::{detect_transition, linspace, SweepPoint, TRANSITION_THRESHOLD};
use cjt_core::*;

type Res<T> = std::result::Result<T, Box<dyn std::error::Error>>;

struct Verdict {
    pass: bool,
    summary: String,
    info: Vec<String>,
}

impl Verdict {
    fn new(summary: impl Into<String>) -> Self {
        Verdict {
            pass: true,
            summary: summary.into(),
            info: Vec::new(),
        }
    }

    /// Records one sub-check; the criterion passes only if all do.
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        self.pass &= ok;
        self.info.push(format!(
            "[{}] {}",
            if ok { "ok" } else { "FAIL" },
            what.into()
        ));
    }

    fn note(&mut self, what: impl Into<String>) {
        self.info.push(format!("note: {}", what.into()));
    }
}

fn bath(p: &ModelParams) -> Res<(CouplingMatrix64, PhononSpectrum64)> {
    let c = build_couplings(p)?;
    let s = diagonalize_bath(&c)?;
    Ok((c, s))
}

fn sweep(p: &ModelParams, s: &PhononSpectrum64, grid: &[f64]) -> Res<Vec<SweepPoint<f64>>> {
    Ok(mean_field_sweep(p, s, grid, &MeanFieldOptions::default())?)
}

fn spectra(
    p: &ModelParams,
    s: &PhononSpectrum64,
    pts: &[SweepPoint<f64>],
) -> Res<Vec<GaussianSpectrum64>> {
    pts.iter()
        .map(|pt| {
            Ok(gaussian_spectrum(
                &p.with_g(pt.g),
                s,
                &pt.solution,
                &Default::default(),
            )?)
        })
        .collect()
}

fn center_peaked(pt: &SweepPoint<f64>) -> (bool, usize) {
    let n = &pt.observables.phonons_per_site;
    let argmax = n.imax();
    let len = n.len();
    let central = if len % 2 == 0 {
        argmax == len / 2 - 1 || argmax == len / 2
    } else {
        argmax == len / 2
    };
    (central, argmax)
}

fn criterion_1() -> Res<Verdict> {
    let mut v = Verdict::new("analytic critical point on a periodic ring");
    let p = ModelParams {
        n_sites: 16,
        omega_z: 1.0,
        delta_bare: 2.2,
        g: 0.0,
        coupling_scheme: CouplingScheme::Homogeneous {
            t: 0.5,
            range: HopRange::Nearest,
        },
        boundary: Boundary::Periodic,
        staggered: true,
        include_local_shift: true,
    };
    // Delta_0 = Delta - 2t (local shift) - 2t (uniform staggered mode) = 0.2
    let delta0 = 0.2;
    let gc = (delta0 * p.omega_z / 2.0).sqrt();
    let (_, s) = bath(&p)?;
    v.note(format!(
        "lowest mode {:.15} vs analytic {delta0}",
        s.lowest()
    ));
    let grid = linspace(0.0, 0.6, 601);
    let pts = sweep(&p, &s, &grid)?;
    let found = detect_transition(&pts, TRANSITION_THRESHOLD).ok_or("no transition detected")?;
    v.check(
        (found - gc).abs() <= 1e-3,
        format!("detected g_c = {found:.6}, analytic {gc:.6}, grid spacing 1e-3"),
    );
    let n = p.n_sites as f64;
    let (mut cos_err, mut alpha_err) = (0.0f64, 0.0f64);
    for pt in pts.iter().filter(|pt| pt.g > gc) {
        let want_cos = gc * gc / (pt.g * pt.g);
        for &th in pt.solution.theta.iter() {
            cos_err = cos_err.max((th.cos().abs() - want_cos).abs());
        }
        let sin = pt.solution.theta[0].sin().abs();
        let want_alpha = pt.g * n.sqrt() / (2.0 * delta0) * sin;
        let a0 = &pt.solution.alpha[0];
        alpha_err = alpha_err
            .max((a0.right.norm() - want_alpha).abs())
            .max((a0.left.norm() - want_alpha).abs());
    }
    v.check(
        cos_err < 1e-8,
        format!("max ||cos theta| - g_c^2/g^2| = {cos_err:.2e}"),
    );
    v.check(
        alpha_err < 1e-8,
        format!("max ||alpha_(e,0)| - g sqrt(N)/(2 Delta_0) |sin theta|| = {alpha_err:.2e}"),
    );
    Ok(v)
}

fn criterion_2() -> Res<Verdict> {
    let mut v = Verdict::new("chain transition points and condensate profiles");
    let grid = linspace(0.0, 0.6, 601);
    for (name, p, target) in [
        ("homogeneous t=0.5", homogeneous_chain(20), 0.30),
        ("Coulomb centre hop 0.5", coulomb_chain(20), 0.25),
    ] {
        let (_, s) = bath(&p)?;
        let pts = sweep(&p, &s, &grid)?;
        let Some(gc) = detect_transition(&pts, TRANSITION_THRESHOLD) else {
            v.check(false, format!("{name}: no transition on [0, 0.6]"));
            continue;
        };
        v.check(
            (gc - target).abs() <= 0.05,
            format!("{name}: kink at g = {gc:.4}, expected {target} +- 0.05"),
        );
        let above = pts
            .iter()
            .find(|pt| pt.g > gc)
            .ok_or("no point above g_c")?;
        let (central, at) = center_peaked(above);
        v.check(
            central,
            format!("{name}: n_j at g = {:.3} peaks at site {at} of 20", above.g),
        );
    }
    // context for the verdict: nearby readings of the same caption
    let mut dip = homogeneous_chain(20);
    dip.coupling_scheme = CouplingScheme::Homogeneous {
        t: 0.5,
        range: HopRange::Dipolar,
    };
    let (_, s) = bath(&dip)?;
    let pts = sweep(&dip, &s, &grid)?;
    v.note(format!(
        "dipolar homogeneous chain (t/|j-l|^3) kinks at {:?}",
        detect_transition(&pts, TRANSITION_THRESHOLD)
    ));
    let lab = from_lab_params(&LabParams::ca40(20))?;
    let (_, s) = bath(&lab.model)?;
    let pts = sweep(&lab.model, &s, &grid)?;
    v.note(format!(
        "Ca40 lab chain N=20 (centre hop {:.3}) kinks at {:?}",
        lab.hop / lab.omega_z,
        detect_transition(&pts, TRANSITION_THRESHOLD)
    ));
    Ok(v)
}

fn criterion_3() -> Res<Verdict> {
    let mut v = Verdict::new("fluctuation peaks, channel ordering and size growth");
    let p = homogeneous_chain(20);
    let (_, s) = bath(&p)?;
    let grid = linspace(0.0, 0.6, 241);
    let pts = sweep(&p, &s, &grid)?;
    let gc = detect_transition(&pts, TRANSITION_THRESHOLD).ok_or("no transition")?;
    let fs: Vec<_> = spectra(&p, &s, &pts)?
        .iter()
        .map(fluctuation_variances)
        .collect();
    let argmax = |pick: fn(&FluctuationVariances<f64>) -> f64| {
        let k = (0..fs.len())
            .max_by(|&a, &b| pick(&fs[a]).total_cmp(&pick(&fs[b])))
            .unwrap();
        pts[k].g
    };
    for (name, pick) in [
        (
            "F_s",
            (|f: &FluctuationVariances<f64>| f.spin) as fn(&_) -> f64,
        ),
        ("F_l", |f| f.left),
        ("F_r", |f| f.right),
    ] {
        let at = argmax(pick);
        v.check(
            (at - gc).abs() <= 0.05,
            format!("{name} peaks at g = {at:.4}; detected g_c = {gc:.4}"),
        );
    }
    let ordered: Vec<_> = pts
        .iter()
        .zip(&fs)
        .filter(|(pt, _)| pt.g > gc)
        .map(|(pt, f)| (pt.g, *f))
        .collect();
    let bad = ordered
        .iter()
        .filter(|(_, f)| !(f.spin > f.left && f.right > f.left))
        .count();
    v.check(
        bad == 0,
        format!(
            "F_s, F_r > F_l at {} of {} ordered-phase points",
            ordered.len() - bad,
            ordered.len()
        ),
    );
    if let Some((g, f)) = ordered.first() {
        v.note(format!(
            "g = {g:.4}: F_s = {:.4e}, F_l = {:.4e}, F_r = {:.4e}",
            f.spin, f.left, f.right
        ));
    }
    let mirrored = ordered
        .iter()
        .filter(|(_, f)| f.spin > f.right && f.left > f.right)
        .count();
    v.note(format!(
        "F_s, F_l > F_r holds at {mirrored} of {} ordered-phase points",
        ordered.len()
    ));

    let mut by_size = Vec::new();
    for n in [10, 20, 40] {
        let m = homogeneous_chain(n).with_g(0.3);
        let (_, s) = bath(&m)?;
        let sol = solve_mean_field(&m, &s, &MeanFieldOptions::default(), None)?;
        let f = fluctuation_variances(&gaussian_spectrum(&m, &s, &sol, &Default::default())?);
        v.note(format!(
            "N = {n}, g = 0.3: F_s = {:.5}, F_l = {:.5}, F_r = {:.5}",
            f.spin, f.left, f.right
        ));
        by_size.push(f);
    }
    let grows = |pick: fn(&FluctuationVariances<f64>) -> f64| {
        by_size.windows(2).all(|w| pick(&w[1]) > pick(&w[0]))
    };
    v.check(
        grows(|f| f.spin) && grows(|f| f.left) && grows(|f| f.right),
        "F_s, F_l, F_r at g = 0.3 strictly increase over N = 10, 20, 40",
    );
    Ok(v)
}

fn min_gap(p: &ModelParams, grid: &[f64]) -> Res<(f64, f64, Option<f64>)> {
    let (_, s) = bath(p)?;
    let pts = sweep(p, &s, grid)?;
    let mut best = (f64::NAN, f64::INFINITY);
    for (pt, gs) in pts.iter().zip(spectra(p, &s, &pts)?) {
        if let Some(gap) = gs.gap() {
            if gap < best.1 {
                best = (pt.g, gap);
            }
        }
    }
    Ok((
        best.0,
        best.1,
        detect_transition(&pts, TRANSITION_THRESHOLD),
    ))
}

fn criterion_4() -> Res<Verdict> {
    let mut v = Verdict::new("minimum Gaussian gap of the Coulomb chain");
    let fine = linspace(0.0, 0.6, 601);
    let coarse = linspace(0.0, 0.6, 13);
    for (n, target) in [(10, 0.045), (20, 0.02)] {
        let p = coulomb_chain(n);
        let (g, gap, gc) = min_gap(&p, &fine)?;
        v.check(
            (gap - target).abs() <= 0.5 * target,
            format!(
                "N = {n}: min gap {gap:.5} at g = {g:.3} (g_c {gc:?}), expected {target} +- 50%"
            ),
        );
        let (gc_, gap_c, _) = min_gap(&p, &coarse)?;
        v.note(format!(
            "N = {n}: on a 0.05 grid the minimum is {gap_c:.5} at g = {gc_:.2}"
        ));
    }
    Ok(v)
}

struct EdPoint {
    factor: f64,
    g: f64,
    e_mf: f64,
    e_ed: f64,
    op_mf: f64,
    op_ed: f64,
    commutator: f64,
    converged_at: Option<usize>,
}

fn ed_point(
    p: &ModelParams,
    c: &CouplingMatrix64,
    s: &PhononSpectrum64,
    factor: f64,
    gc: f64,
) -> Res<EdPoint> {
    let g = factor * gc;
    let q = p.with_g(g);
    let mf = solve_mean_field(&q, s, &MeanFieldOptions::default(), None)?;
    let obs = mf_observables(&mf, s);
    let cfg = EdConfig {
        truncation: Truncation::Total,
        dim_cap: 3_000_000,
        check_commutator: true,
        ..EdConfig::default()
    };
    let top = match p.n_sites {
        1 => 24,
        2 => 16,
        _ => 10,
    };
    let cutoffs: Vec<usize> = (4..=top).collect();
    let rep = convergence_scan(&q, c, &cfg, &cutoffs)?;
    let last = rep.points.last().ok_or("empty scan")?;
    Ok(EdPoint {
        factor,
        g,
        e_mf: mf.energy,
        e_ed: last.ground_energy,
        op_mf: obs.order_parameter,
        op_ed: last.order_parameter,
        commutator: rep
            .points
            .iter()
            .filter_map(|r| r.commutator_norm)
            .fold(0.0, f64::max),
        converged_at: rep.converged_at,
    })
}

fn criterion_5() -> Res<Verdict> {
    let mut v = Verdict::new("oracle suite against exact diagonalization, N = 1..3");
    let mut parity = 0.0f64;
    for n in [1usize, 2, 3] {
        let p = short_range_chain(n);
        let (c, s) = bath(&p)?;
        let gc = critical_coupling_estimate(&s, p.omega_z)?.from_lowest_mode;
        let mut points = Vec::new();
        for f in [0.25, 0.5, 0.9, 1.1, 2.0] {
            points.push(ed_point(&p, &c, &s, f, gc)?);
        }
        for e in &points {
            v.note(format!(
                "N = {n}, g = {:.4} ({}g_c): E_MF = {:.6}, E_ED = {:.6}, rel {:.3}, O.P. MF {:.3e} ED {:.3e}, n_b converged at {:?}",
                e.g,
                e.factor,
                e.e_mf,
                e.e_ed,
                (e.e_mf - e.e_ed) / e.e_ed.abs(),
                e.op_mf,
                e.op_ed,
                e.converged_at
            ));
        }
        v.check(
            points.iter().all(|e| e.converged_at.is_some()),
            format!("N = {n}: every ED point converged in n_b"),
        );
        v.check(
            points.iter().all(|e| e.e_mf >= e.e_ed - 1e-9),
            format!("N = {n}: E_MF >= E_ED at all points"),
        );
        let far: Vec<_> = points
            .iter()
            .filter(|e| e.factor <= 0.5 || e.factor >= 2.0)
            .collect();
        let worst = far
            .iter()
            .map(|e| (e.e_mf - e.e_ed) / e.e_ed.abs())
            .fold(0.0f64, f64::max);
        v.check(
            worst < 0.05,
            format!("N = {n}: largest relative E_MF - E_ED away from g_c = {worst:.3} (< 0.05)"),
        );
        let normal: Vec<_> = points.iter().filter(|e| e.factor <= 0.5).collect();
        let op_normal = normal.iter().map(|e| e.op_ed).fold(0.0f64, f64::max);
        let op_mf_normal = normal.iter().map(|e| e.op_mf).fold(0.0f64, f64::max);
        v.check(
            op_normal < 1e-3 && op_mf_normal < 1e-3,
            format!(
                "N = {n}: normal-regime O.P. MF {op_mf_normal:.2e}, ED {op_normal:.2e} (< 1e-3)"
            ),
        );
        let ordered = points
            .iter()
            .find(|e| e.factor >= 2.0)
            .ok_or("no ordered point")?;
        v.check(
            ordered.op_ed > 10.0 * op_normal,
            format!(
                "N = {n}: ordered ED O.P. {:.3e} vs 10x normal {:.3e}",
                ordered.op_ed,
                10.0 * op_normal
            ),
        );
        let comm = points.iter().map(|e| e.commutator).fold(0.0f64, f64::max);
        v.check(comm < 1e-12, format!("N = {n}: ||[H, C]|| = {comm:.1e}"));

        // chiral and Cartesian assemblies on the same (total-number) truncation
        let cutoff = match n {
            1 => 6,
            2 => 3,
            _ => 1,
        };
        for f in [0.5, 1.0, 2.0] {
            let q = p.with_g(f * gc);
            let chiral = build_hamiltonian(&q, &c, cutoff, Truncation::Total, 1 << 20)?;
            let a: Vec<f64> = chiral
                .to_dense()
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .collect();
            let mut a = a;
            a.sort_by(f64::total_cmp);
            let b = hermitian_spectrum(cartesian_dense(q.omega_z, q.g, &c, cutoff, 1 << 20)?);
            let diff = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0f64, f64::max);
            parity = parity.max(if a.len() == b.len() {
                diff
            } else {
                f64::INFINITY
            });
        }
    }
    v.check(
        parity < 1e-10,
        format!("chiral vs Cartesian spectra differ by {parity:.1e}"),
    );
    Ok(v)
}

fn criterion_6() -> Res<Verdict> {
    let mut v = Verdict::new("structural invariants");
    let (mut res, mut mirror, mut recon) = (0.0f64, 0.0f64, 0.0f64);
    for n in 1..=100 {
        let geom: ChainGeometry64 = equilibrium_positions(n)?;
        res = res.max(geom.residual());
        let x = &geom.positions;
        for j in 0..n {
            mirror = mirror.max((x[j] + x[n - 1 - j]).abs());
        }
        // a centre-hop scale needs a bond
        let chains = if n == 1 {
            vec![homogeneous_chain(n)]
        } else {
            vec![coulomb_chain(n), homogeneous_chain(n)]
        };
        for p in chains {
            let (c, s) = bath(&p)?;
            recon = recon.max((s.reconstruct() - c.one_body()).amax());
        }
    }
    v.check(
        res < 1e-12,
        format!("equilibrium residual {res:.1e} for N = 1..100"),
    );
    v.check(mirror < 1e-10, format!("mirror asymmetry {mirror:.1e}"));
    v.check(
        recon < 1e-10,
        format!("phonon reconstruction error {recon:.1e}"),
    );
    let mut norm = 0.0f64;
    for p in [homogeneous_chain(20), coulomb_chain(20)] {
        let (_, s) = bath(&p)?;
        let pts = sweep(&p, &s, &linspace(0.0, 0.6, 50))?;
        for gs in spectra(&p, &s, &pts)? {
            norm = gs
                .normalization_errors()
                .iter()
                .fold(norm, |m, e| m.max(e.abs()));
        }
    }
    v.check(
        norm < 1e-8,
        format!("symplectic normalization error {norm:.1e} over 50 g points"),
    );
    Ok(v)
}

fn criterion_7() -> Res<Verdict> {
    let mut v = Verdict::new("Ca40 laboratory parameter mapping");
    let conv = from_lab_params(&LabParams::ca40(20))?;
    let wz = TWO_PI * 20e3;
    v.check(
        (conv.omega_z / wz - 1.0).abs() < 1e-9,
        format!("omega_z = 2pi x {:.6} kHz", conv.omega_z / TWO_PI / 1e3),
    );
    let d = conv.delta / conv.omega_z;
    v.check((d - 2.2).abs() < 1e-9, format!("Delta = {d:.9} omega_z"));
    // spacing quoted as 16 um to two figures: t ~ d^-3 is known to 3 x 0.5/16 ~ 10 %
    let t = conv.hop / conv.omega_z;
    v.check(
        (t - 0.5).abs() <= 0.05,
        format!("t_coul = {t:.4} omega_z, expected 0.5 within the 10 % implied by d = 16 um"),
    );
    let g = conv.g / conv.omega_z;
    v.check(
        (g - 0.2).abs() <= 0.15 * 0.2,
        format!("g = {g:.4} omega_z, expected 0.2 within 15 %"),
    );
    v.note(format!(
        "r_bar = {:.4e} m, g/omega_t = {:.2e}, t/omega_t = {:.2e}",
        conv.r_bar, conv.rwa_ratio_g, conv.rwa_ratio_t
    ));
    Ok(v)
}

fn main() {
    let criteria: [(u8, fn() -> Res<Verdict>, Duration); 7] = [
        (1, criterion_1, Duration::from_secs(10)),
        (2, criterion_2, Duration::from_secs(60)),
        (3, criterion_3, Duration::from_secs(300)),
        (4, criterion_4, Duration::from_secs(u64::MAX / 4)),
        (5, criterion_5, Duration::from_secs(300)),
        (6, criterion_6, Duration::from_secs(30)),
        (7, criterion_7, Duration::from_secs(u64::MAX / 4)),
    ];
    let mut passed = 0;
    let mut broken = false;
    for (id, f, budget) in criteria {
        let start = Instant::now();
        let out = f();
        let took = start.elapsed();
        match out {
            Ok(mut v) => {
                if budget.as_secs() < u64::MAX / 8 {
                    v.check(
                        took <= budget,
                        format!(
                            "runtime {:.2} s within {} s",
                            took.as_secs_f64(),
                            budget.as_secs()
                        ),
                    );
                }
                passed += v.pass as usize;
                println!(
                    "criterion {id}: {} - {} ({:.2} s)",
                    if v.pass { "PASS" } else { "FAIL" },
                    v.summary,
                    took.as_secs_f64()
                );
                for line in &v.info {
                    println!("    {line}");
                }
            }
            Err(e) => {
                broken = true;
                println!("criterion {id}: FAIL - could not be evaluated: {e}");
            }
        }
    }
    println!("acceptance: {passed}/7 criteria pass");
    let strict = std::env::var("CJT_ACCEPTANCE_STRICT").is_ok_and(|s| s == "1");
    if broken || (strict && passed < 7) {
        std::process::exit(1);
    }
}
