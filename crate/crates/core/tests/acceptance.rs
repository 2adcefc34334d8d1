//! End-to-end acceptance checks. Runs as a plain binary (no libtest harness)
//! so that every criterion prints its own PASS/FAIL line; exits non-zero if
//! any criterion fails.

use std::time::Instant;

use otoc_core::analysis::calibration::{calibrate_hamiltonian, simulate_quench, CalibrationOptions, QuenchData};
use otoc_core::analysis::jackknife_mean;
use otoc_core::analysis::velocity::{crossing_time, CrossingMethod};
use otoc_core::campaign::entropy::entropy_table;
use otoc_core::campaign::tools::run_ramsey;
use otoc_core::campaign::{
    analyze_dataset, run_otoc_campaign, simulate_dataset, simulate_zbasis, AnalysisOptions, CampaignConfig,
    OtocReport, RunOptions,
};
use otoc_core::noise::NoiseSpec;
use otoc_core::protocol::{OtocSeries, SiteSeries};
use otoc_core::rng::{stream, Purpose};
use otoc_core::spin::HamiltonianSpec;
use rand_distr::{Distribution, Normal};

const ALPHA_121: &str = include_str!("../../../configs/alpha121.toml");
const ALPHA_085: &str = include_str!("../../../configs/alpha085.toml");
const ENTROPY: &str = include_str!("../../../configs/entropy.toml");

type Check = Result<String, String>;

fn config(text: &str) -> CampaignConfig {
    CampaignConfig::from_toml_str(text).expect("shipped config parses")
}

fn with_noise(text: &str) -> CampaignConfig {
    config(&format!("{text}\n[noise]\n"))
}

fn campaign(cfg: &CampaignConfig, exact: bool) -> OtocReport {
    let data = simulate_dataset(cfg, &RunOptions::default()).expect("campaign runs");
    analyze_dataset(&data, &AnalysisOptions { exact, ..Default::default() }).expect("analysis runs")
}

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn anchors(reports: &[(&str, &OtocReport)]) -> Check {
    let mut worst_sigma: f64 = 0.0;
    let mut worst_exact: f64 = 0.0;
    for (_, r) in reports {
        let v_site = r.config["v"]["site"].as_u64().unwrap() as usize;
        let anchor = |site: usize| if site == v_site { -1.0 } else { 1.0 };
        for s in &r.series {
            for ss in &s.sites {
                let p = &ss.points[0];
                assert_eq!(p.time, 0.0);
                let z = (p.value - anchor(ss.site)).abs() / p.std_error.max(1e-12);
                worst_sigma = worst_sigma.max(if (p.value - anchor(ss.site)).abs() < 1e-12 { 0.0 } else { z });
            }
        }
        for ex in r.exact.iter().flatten() {
            worst_exact = worst_exact.max((ex.values[0] - anchor(ex.site)).abs());
        }
    }
    let names: Vec<&str> = reports.iter().map(|(n, _)| *n).collect();
    verdict(
        worst_sigma <= 3.0 && worst_exact <= 1e-10,
        format!("max |O_n(0) - anchor| = {worst_sigma:.2} sigma, exact off by {worst_exact:.1e} ({})", names.join(", ")),
    )
}

fn oracle_equivalence() -> Check {
    let cfg = config(
        "seed = 99\nn_unitaries = 2000\norder = 6\nexact_expectation = true\n\
         times_ms = [0, 1, 2, 3, 4, 5, 6, 8]\nw_sites = [1, 2, 4, 6]\n\
         [hamiltonian]\nn_spins = 6\nj0_hz = 30.13\nalpha = 1.21\nb_field_hz = 1500\ndouble_count_pairs = true\n",
    );
    let data = simulate_dataset(&cfg, &RunOptions::default()).map_err(|e| e.to_string())?;
    let opts = AnalysisOptions { orders: Some(vec![6]), ..Default::default() };
    let r = analyze_dataset(&data, &opts).map_err(|e| e.to_string())?;
    let o6 = r.series_of_order(6).unwrap();
    let mut worst = (0.0f64, 0, 0.0);
    for (s, ex) in o6.sites.iter().zip(r.exact.as_ref().unwrap()) {
        for (p, v) in s.points.iter().zip(&ex.values) {
            let z = (p.value - v).abs() / p.std_error.max(1e-10);
            if z > worst.0 {
                worst = (z, s.site, p.time);
            }
        }
    }
    verdict(worst.0 <= 3.0, format!("max |O_6 - O| = {:.2} jackknife errors (site {}, t = {} s)", worst.0, worst.1, worst.2))
}

/// Sites ordered by their first 0.5 crossing; sites that never cross come last
/// in site order.
fn arrival_order(sites: &[SiteSeries]) -> Vec<usize> {
    let mut crossing: Vec<(f64, usize)> = sites
        .iter()
        .filter(|s| s.site > 1)
        .map(|s| {
            let t = crossing_time(s, 0.5, CrossingMethod::MonotoneCubic).ok().flatten();
            (t.unwrap_or(f64::INFINITY), s.site)
        })
        .collect();
    crossing.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    crossing.into_iter().map(|(_, s)| s).collect()
}

fn exact_as_series(r: &OtocReport, template: &OtocSeries) -> Vec<SiteSeries> {
    template
        .sites
        .iter()
        .zip(r.exact.as_ref().unwrap())
        .map(|(s, ex)| {
            let mut s = s.clone();
            for (p, v) in s.points.iter_mut().zip(&ex.values) {
                p.value = *v;
                p.reliable = true;
            }
            s
        })
        .collect()
}

fn reproduction(r: &OtocReport) -> Check {
    let dev = r.deviations.iter().find(|d| d.order == 2).ok_or("no O_2 deviation")?;
    let o2 = r.series_of_order(2).unwrap();
    let measured = arrival_order(&o2.sites);
    let exact = arrival_order(&exact_as_series(r, o2));
    verdict(
        dev.max_abs_deviation <= 0.1 && measured == exact,
        format!(
            "max |O_2 - O| = {:.3} (site {}, t = {} s); arrival order {:?} vs exact {:?}",
            dev.max_abs_deviation, dev.site, dev.time, measured, exact
        ),
    )
}

fn butterfly(r121: &OtocReport, r085: &OtocReport) -> Check {
    let fit = |r: &OtocReport| {
        r.velocity.clone().ok_or_else(|| r.velocity_error.clone().unwrap_or_default())
    };
    let (a, b) = (fit(r121)?, fit(r085)?);
    let ok = (800.0..=1200.0).contains(&a.v2)
        && (600.0..=1000.0).contains(&b.v2)
        && b.collapse_residual() > a.collapse_residual();
    verdict(
        ok,
        format!(
            "alpha 1.21: v2 = {:.0} (spread {:.0}), residual {:.4}; alpha 0.85: v2 = {:.0} (spread {:.0}), residual {:.4}",
            a.v2,
            a.delta_v2.unwrap_or(0.0),
            a.collapse_residual(),
            b.v2,
            b.delta_v2.unwrap_or(0.0),
            b.collapse_residual()
        ),
    )
}

fn noise_robustness(clean: &OtocReport, noisy: &OtocReport) -> Check {
    let (a, b) = (clean.series_of_order(2).unwrap(), noisy.series_of_order(2).unwrap());
    let mut worst = (0.0f64, 0, 0.0);
    for (sa, sb) in a.sites.iter().zip(&b.sites) {
        for (pa, pb) in sa.points.iter().zip(&sb.points) {
            let sigma = pa.std_error.hypot(pb.std_error);
            let z = (pa.value - pb.value).abs() / sigma.max(1e-12);
            if z > worst.0 {
                worst = (z, sa.site, pa.time);
            }
        }
    }
    verdict(worst.0 <= 3.0, format!("max |O_2 noisy - O_2| = {:.2} combined sigma (site {}, t = {} s)", worst.0, worst.1, worst.2))
}

fn ramsey() -> Check {
    let r = run_ramsey(&NoiseSpec::default(), 0.05, 1e-4, 2000, 0).map_err(|e| e.to_string())?;
    let near = |target: f64| r.revivals_s.iter().any(|t| (t - target).abs() <= 1e-3);
    let decay = r.one_over_e_s.unwrap_or(f64::NAN);
    let ok = near(4.9e-3) && near(9.8e-3) && (decay - 0.033).abs() <= 0.3 * 0.033;
    let ms: Vec<String> = r.revivals_s.iter().take(3).map(|t| format!("{:.1}", t * 1e3)).collect();
    verdict(ok, format!("first revivals at [{}] ms, 1/e at {:.1} ms", ms.join(", "), decay * 1e3))
}

fn entropy() -> Check {
    let noisy = config(ENTROPY);
    let mut quiet = noisy.clone();
    quiet.noise = None;
    let n = noisy.hamiltonian_spec().unwrap().n_spins;
    let parts = noisy.entropy.as_ref().unwrap().resolve_partitions(n).map_err(|e| e.to_string())?;
    let table = |cfg: &CampaignConfig| {
        let z = simulate_zbasis(cfg, &RunOptions::default()).map_err(|e| e.to_string())?;
        entropy_table(&z, &parts).map_err(|e| e.to_string())
    };
    let (tn, tq) = (table(&noisy)?, table(&quiet)?);
    let full = |t: &otoc_core::campaign::EntropyTable, time: f64| {
        t.get(time, &parts[n - 1]).and_then(|r| r.entropy).unwrap_or(f64::NAN)
    };
    let (n2, n5) = (full(&tn, 2e-3), full(&tn, 5e-3));
    let quiet_max = [0.0, 2e-3, 5e-3].iter().map(|&t| full(&tq, t)).fold(f64::NEG_INFINITY, f64::max);
    let best_sub = parts[..n - 1]
        .iter()
        .filter_map(|p| tn.get(2e-3, p).and_then(|r| r.entropy))
        .fold(f64::NEG_INFINITY, f64::max);
    let ok = (n2 - 0.8).abs() <= 0.15 && (n5 - 0.8).abs() <= 0.15 && quiet_max <= 0.1 && best_sub > n2;
    verdict(
        ok,
        format!(
            "full system with noise: {n2:.3} (2 ms), {n5:.3} (5 ms); without noise max {quiet_max:.3}; largest subsystem at 2 ms {best_sub:.3}"
        ),
    )
}

fn second_moment(clean: &OtocReport, noisy: &OtocReport) -> Check {
    let value = |m: &otoc_core::protocol::SecondMoment| m.corrected.unwrap_or(m.raw).value;
    let c: Vec<f64> = clean.second_moment.iter().map(value).collect();
    let n: Vec<f64> = noisy.second_moment.iter().map(value).collect();
    let at_zero = (c[0] - 1.0 / 3.0).abs() <= 0.02;
    let monotone = c.windows(2).all(|w| w[1] < w[0]);
    let dominated = clean.times.iter().zip(c.iter().zip(&n)).filter(|(t, _)| **t >= 2e-3 - 1e-12).all(|(_, (a, b))| b <= a);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    verdict(
        at_zero && monotone && dominated,
        format!("unitary [{}], noisy [{}], raw at t=0 {:.4}", fmt(&c), fmt(&n), clean.second_moment[0].raw.value),
    )
}

fn statistics() -> Check {
    let mut rng = stream(9, Purpose::Calibration, 0, 0);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let samples: Vec<f64> = (0..500).map(|_| normal.sample(&mut rng)).collect();
    let mean = samples.iter().sum::<f64>() / 500.0;
    let s = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 499.0).sqrt();
    let jk = jackknife_mean(&samples).map_err(|e| e.to_string())?;
    let jk_ratio = jk.std_error / (s / 500f64.sqrt());

    let truth = HamiltonianSpec {
        double_count_pairs: true,
        ..HamiltonianSpec::from_hz(8, 30.13, 1.21, 1500.0).unwrap()
    };
    let times: Vec<f64> = (0..=40).map(|i| i as f64 * 2.5e-4).collect();
    let clean = simulate_quench(&truth, 4, &times).map_err(|e| e.to_string())?;
    let guess = HamiltonianSpec { j0: truth.j0 * 1.1, alpha: truth.alpha * 0.93, ..truth };
    let opts = CalibrationOptions::default();
    let rel = |fit: &otoc_core::analysis::CalibrationFit| {
        ((fit.j0 / truth.j0 - 1.0).abs()).max((fit.alpha / truth.alpha - 1.0).abs())
    };
    let fit = calibrate_hamiltonian(&clean, &guess, 4, &opts).map_err(|e| e.to_string())?;
    let clean_err = rel(&fit);

    let noise = Normal::new(0.0, 0.02).unwrap();
    let mut noisy_err: f64 = 0.0;
    for rep in 0..5 {
        let mut rng = stream(9, Purpose::Calibration, 1 + rep, 0);
        let m = clean
            .magnetization
            .iter()
            .map(|row| row.iter().map(|v| v + noise.sample(&mut rng)).collect())
            .collect();
        let data = QuenchData::new(times.clone(), m).map_err(|e| e.to_string())?;
        let fit = calibrate_hamiltonian(&data, &guess, 4, &opts).map_err(|e| e.to_string())?;
        noisy_err = noisy_err.max(rel(&fit));
    }
    verdict(
        (jk_ratio - 1.0).abs() <= 0.1 && clean_err <= 5e-3 && noisy_err <= 0.05,
        format!(
            "jackknife / (s/sqrt n) = {jk_ratio:.4}; calibration off by {:.2e} noiseless, {:.2}% worst of 5 noisy fits",
            clean_err,
            noisy_err * 100.0
        ),
    )
}

fn determinism() -> Check {
    let cfg = with_noise(ALPHA_121);
    let dirs: Vec<tempfile::TempDir> = [1, 4, 0].iter().map(|_| tempfile::tempdir().unwrap()).collect();
    for (dir, workers) in dirs.iter().zip([Some(1), Some(4), None]) {
        let opts = RunOptions { workers, unitary_limit: Some(24), ..Default::default() };
        run_otoc_campaign(&cfg, dir.path(), &opts).map_err(|e| e.to_string())?;
    }
    let mut compared = 0;
    for name in ["dataset.csv", "dataset.json"] {
        let first = std::fs::read(dirs[0].path().join(name)).map_err(|e| e.to_string())?;
        for d in &dirs[1..] {
            if std::fs::read(d.path().join(name)).map_err(|e| e.to_string())? != first {
                return Err(format!("{name} differs between worker counts"));
            }
            compared += 1;
        }
    }
    Ok(format!("{compared} dataset files byte-identical across 1, 4 and all workers"))
}

fn main() {
    let started = Instant::now();
    let mut failed = 0;
    let mut report = |n: usize, name: &str, check: Check| {
        let (tag, detail) = match check {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {n:>2} {tag} {name}: {detail}  [{:.0} s]", started.elapsed().as_secs_f64());
    };

    let clean = campaign(&config(ALPHA_121), true);
    let noisy = campaign(&with_noise(ALPHA_121), false);
    let wide = campaign(&config(ALPHA_085), true);

    report(1, "t=0 anchors", anchors(&[("alpha 1.21", &clean), ("alpha 0.85", &wide)]));
    report(2, "O_N equals the exact OTOC", oracle_equivalence());
    report(3, "O_2 tracks the exact OTOC", reproduction(&clean));
    report(4, "butterfly velocity", butterfly(&clean, &wide));
    report(5, "noise robustness", noise_robustness(&clean, &noisy));
    report(6, "Ramsey revivals and decay", ramsey());
    report(7, "Renyi entropy", entropy());
    report(8, "second moment", second_moment(&clean, &noisy));
    report(9, "jackknife and calibration", statistics());
    report(10, "determinism", determinism());

    println!("{} of 10 criteria failed", failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
