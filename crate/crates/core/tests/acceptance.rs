//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs with `cargo test --test acceptance`.

use std::cell::Cell;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use sbneuro::extract::synth::add_multiplicative_noise;
use sbneuro::extract::{calibrate_vccs, compute_gm, fit_device, FitParam, VccsModel};
use sbneuro::neuron::{
    fit_parasitic, ideal_frequency, measure_frequency, recommended_dt, run, CurrentSource,
    MeasureOptions, NeuronConfig, C_LARGE, C_SMALL, V_D_HIGH, V_D_LOW,
};
use sbneuro::sbmodel::{
    drain_current, ion_preset_bias, ion_vs_inverse_length, output_curve, transfer_curve, BiasPoint,
    DeviceParams, IvCurve, MEASURED_GATE_LENGTHS,
};
use sbneuro::snn::{train, IrisDataset, TrainConfig};
use sbneuro::stats::fit_line;

type Outcome = Result<String, String>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn within(elapsed: Duration, limit_s: f64, what: &str) -> Result<(), String> {
    if elapsed.as_secs_f64() < limit_s {
        Ok(())
    } else {
        Err(format!(
            "{what} took {:.2} s, limit {limit_s} s",
            elapsed.as_secs_f64()
        ))
    }
}

fn lif_closed_form() -> Outcome {
    let clock = Instant::now();
    let cfg = NeuronConfig {
        v_th: 0.6,
        v_reset: 0.0,
        ..NeuronConfig::with_source(C_LARGE, V_D_HIGH, CurrentSource::Constant(2.82e-9))
    };
    let ideal = ideal_frequency(2.82e-9, &cfg).map_err(|e| e.to_string())?;
    let opts = MeasureOptions {
        dt: Some(1.0 / ideal / 1000.0),
        ..MeasureOptions::default()
    };
    let m = measure_frequency(&cfg, 0.0, &opts).map_err(|e| e.to_string())?;
    within(clock.elapsed(), 1.0, "measurement")?;
    let err = rel(m.f_hz, 1.0);
    if m.timed_out || err > 5e-3 {
        return Err(format!("f = {} Hz, error {err:e}", m.f_hz));
    }
    Ok(format!(
        "f = {:.6} Hz (ideal {ideal:.6}), error {err:.1e}",
        m.f_hz
    ))
}

fn sbneuro(dir: &Path, args: &[&str]) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_sbneuro"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(format!(
            "sbneuro {args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        ))
    }
}

fn column(path: &Path, k: usize) -> Result<Vec<f64>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    text.lines()
        .skip(1)
        .map(|l| {
            l.split(',')
                .nth(k)
                .and_then(|s| s.parse().ok())
                .ok_or(l.to_string())
        })
        .collect()
}

fn real_time_regime() -> Outcome {
    const I_BOUND: f64 = 2.8e-6;
    let sweep: Vec<f64> = (0..=20).map(|k| k as f64 * 0.25).collect();
    let opts = MeasureOptions::default();
    let f_max = Cell::new(0.0f64);
    let n_models = Cell::new(0);
    let check = |model: VccsModel, v_d: f64| -> Result<(), String> {
        let cfg = NeuronConfig::with_source(C_LARGE, v_d, CurrentSource::Vccs(model));
        for &v in &sweep {
            let f = measure_frequency(&cfg, v, &opts)
                .map_err(|e| e.to_string())?
                .f_hz;
            if !(f < 1000.0) {
                return Err(format!("f = {f} Hz at v_tg {v}"));
            }
            f_max.set(f_max.get().max(f));
        }
        n_models.set(n_models.get() + 1);
        Ok(())
    };

    // Models fitted to the default device and to devices with lower barriers.
    for phi_b0 in [0.75, 0.6, 0.45, 0.3] {
        let params = DeviceParams {
            phi_b0,
            phi_min: 0.3f64.min(phi_b0),
            ..DeviceParams::default()
        };
        for v_d in [V_D_LOW, V_D_HIGH] {
            let m = calibrate_vccs(&params, (-1.0, 6.0), 141, 0.0, v_d - 0.3, 15)
                .map_err(|e| e.to_string())?;
            if m.max_current() <= I_BOUND {
                check(m, v_d)?;
            }
        }
    }
    // The worst case: a map that saturates at the bound.
    let knots = vec![(0.0, 0.0), (1.0, 1e-7), (2.0, 1e-6), (3.0, I_BOUND)];
    check(VccsModel::from_knots(knots).unwrap(), V_D_HIGH)?;
    // Random monotone maps bounded by the bound.
    let mut runner = TestRunner::new(Config {
        cases: 64,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = prop::collection::vec(0.0f64..1.0, 3..8);
    runner
        .run(&strategy, |fracs| {
            let mut acc = 0.0;
            let total: f64 = fracs.iter().sum::<f64>().max(1e-12);
            let knots = fracs
                .iter()
                .enumerate()
                .map(|(k, f)| {
                    acc += f / total * I_BOUND;
                    (k as f64 * 0.8 - 0.5, acc.min(I_BOUND))
                })
                .collect();
            let m = VccsModel::from_knots(knots).unwrap();
            check(m, V_D_HIGH).map_err(TestCaseError::fail)
        })
        .map_err(|e| e.to_string())?;

    // The fig7c preset as shipped.
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    sbneuro(dir.path(), &["freq", "--preset", "fig7c"])?;
    for stem in ["fig7c_vd1.5", "fig7c_vd2.5"] {
        for f in column(&dir.path().join(format!("{stem}.csv")), 1)? {
            if !(f < 1000.0) {
                return Err(format!("{stem}: f = {f} Hz"));
            }
            f_max.set(f_max.get().max(f));
        }
    }
    Ok(format!(
        "{} maps plus the fig7c preset, max {:.1} Hz",
        n_models.get(),
        f_max.get()
    ))
}

fn parasitic_fit() -> Outcome {
    let clock = Instant::now();
    let c_par = fit_parasitic(5.4, C_SMALL, C_LARGE).map_err(|e| e.to_string())?;
    let err = rel(c_par, 1.0556e-9);
    if err > 1e-3 {
        return Err(format!("c_par = {c_par:e} F, error {err:e}"));
    }
    let device = CurrentSource::Device {
        params: DeviceParams::default(),
        v_bg: 0.0,
    };
    let vccs = calibrate_vccs(&DeviceParams::default(), (-1.0, 6.0), 141, 0.0, 2.2, 15)
        .map_err(|e| e.to_string())?;
    let opts = MeasureOptions::default();
    let mut worst = 0.0f64;
    for (source, v_tg) in [(device, 0.5), (CurrentSource::Vccs(vccs), 2.0)] {
        let mut small = NeuronConfig::with_source(C_SMALL, V_D_HIGH, source);
        small.c_par = c_par;
        let mut large = small.clone();
        large.c_ext = C_LARGE;
        let fs = measure_frequency(&small, v_tg, &opts).map_err(|e| e.to_string())?;
        let fl = measure_frequency(&large, v_tg, &opts).map_err(|e| e.to_string())?;
        if fs.timed_out || fl.timed_out {
            return Err(format!("timed out at v_tg {v_tg}"));
        }
        worst = worst.max(rel(fs.f_hz / fl.f_hz, 5.4));
    }
    within(clock.elapsed(), 5.0, "fit and re-simulation")?;
    if worst > 1e-6 {
        return Err(format!("ratio error {worst:e}"));
    }
    Ok(format!(
        "c_par = {:.5} nF, ratio error {worst:.1e}",
        c_par * 1e9
    ))
}

fn arb_params() -> impl Strategy<Value = DeviceParams> {
    (
        (0.0f64..0.4, 0.0f64..0.6, 0.02f64..0.3, 0.0f64..0.2),
        (-1.0f64..2.0, 1.0f64..20.0, 250.0f64..400.0),
        (3.0f64..9.0, 0.0f64..1e6, 5e-6f64..1e-4),
    )
        .prop_map(
            |((phi_min, extra, gamma_tg, gamma_bg), (v_t0, n, t), (log_rho, r_sd, l_g))| {
                DeviceParams {
                    phi_min,
                    phi_b0: phi_min + extra,
                    gamma_tg,
                    gamma_bg,
                    v_t0,
                    n_ideality: n,
                    temperature: t,
                    rho_sheet: 10f64.powf(log_rho),
                    r_sd_ext: r_sd,
                    l_g,
                    ..DeviceParams::default()
                }
            },
        )
}

fn arb_vccs() -> impl Strategy<Value = VccsModel> {
    (
        prop::collection::vec((0.1f64..1.0, 0.0f64..1.0), 2..8),
        1e-10f64..1e-6,
    )
        .prop_map(|(steps, scale)| {
            let (mut v, mut i) = (-1.0, 0.0);
            let knots = steps
                .into_iter()
                .map(|(dv, di)| {
                    v += dv;
                    i += di * scale;
                    (v, i)
                })
                .collect();
            VccsModel::from_knots(knots).unwrap()
        })
}

fn monotonicity_suite() -> Outcome {
    let clock = Instant::now();
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (
        arb_params(),
        (
            -5.0f64..10.0,
            -5.0f64..5.0,
            0.0f64..5.0,
            0.0f64..2.0,
            0.0f64..2.0,
        ),
        arb_vccs(),
        (-1.0f64..6.0, 0.0f64..2.0, 1e-12f64..1e-8),
    );
    runner
        .run(
            &strategy,
            |(p, (v_tg, v_bg, v_ds, d_tg, d_ds), m, (v1, dv, c))| {
                let i = drain_current(&p, &BiasPoint::new(v_tg, v_bg, v_ds)).unwrap();
                let i_tg = drain_current(&p, &BiasPoint::new(v_tg + d_tg, v_bg, v_ds)).unwrap();
                let i_ds = drain_current(&p, &BiasPoint::new(v_tg, v_bg, v_ds + d_ds)).unwrap();
                prop_assert!(i_tg >= i, "v_tg: {} -> {}", i, i_tg);
                prop_assert!(i_ds >= i, "v_ds: {} -> {}", i, i_ds);

                let cfg = NeuronConfig::with_source(c, V_D_HIGH, CurrentSource::Vccs(m));
                let opts = MeasureOptions::default();
                let fa = measure_frequency(&cfg, v1, &opts).unwrap().f_hz;
                let fb = measure_frequency(&cfg, v1 + dv, &opts).unwrap().f_hz;
                prop_assert!(fb >= fa * (1.0 - 1e-12), "f: {} -> {}", fa, fb);
                Ok(())
            },
        )
        .map_err(|e| e.to_string())?;
    within(clock.elapsed(), 30.0, "1000 cases")?;
    Ok(format!(
        "1000 cases, 0 failures, {:.2} s",
        clock.elapsed().as_secs_f64()
    ))
}

fn ion_scaling() -> Outcome {
    let p = DeviceParams::channel_limited(10e-6);
    let pts = ion_vs_inverse_length(&p, &MEASURED_GATE_LENGTHS, &ion_preset_bias(&p))
        .map_err(|e| e.to_string())?;
    let fit = fit_line(&pts).ok_or("degenerate fit")?;
    if pts.len() != 4 || fit.r_squared < 0.99 || fit.slope <= 0.0 {
        return Err(format!("R² = {}, slope {}", fit.r_squared, fit.slope));
    }
    Ok(format!(
        "R² = {:.6} over {{10, 20, 25, 75}} µm",
        fit.r_squared
    ))
}

fn extraction_oracles() -> Outcome {
    let clock = Instant::now();
    // Exponential subthreshold-like curve with a closed-form derivative.
    let (a, s) = (1e-12, 0.25);
    let mut c = IvCurve::new();
    let step = 0.01;
    for k in 0..=300 {
        let v = k as f64 * step;
        c.push(BiasPoint::new(v, 0.0, 0.1), a * (v / s).exp());
    }
    let gm = compute_gm(&c).map_err(|e| e.to_string())?;
    let mut worst_gm = 0.0f64;
    for &(v, g) in &gm {
        worst_gm = worst_gm.max(rel(g, a / s * (v / s).exp()));
    }
    if worst_gm > 0.01 {
        return Err(format!("g_m error {worst_gm:e}"));
    }

    let truth = DeviceParams::default();
    let vtg: Vec<f64> = (0..=40).map(|k| k as f64 * 0.15).collect();
    let vds: Vec<f64> = (1..=25).map(|k| k as f64 * 0.1).collect();
    let clean = vec![
        transfer_curve(&truth, &vtg, 0.0, 0.1).map_err(|e| e.to_string())?,
        transfer_curve(&truth, &vtg, 0.0, 2.5).map_err(|e| e.to_string())?,
        output_curve(&truth, &vds, 3.0, 0.0).map_err(|e| e.to_string())?,
    ];
    let noisy = add_multiplicative_noise(&clean, 0.01, 42);
    let guess = DeviceParams {
        phi_b0: truth.phi_b0 * 1.3,
        rho_sheet: truth.rho_sheet * 0.7,
        ..truth
    };
    let rep = fit_device(&noisy, &guess, &[FitParam::PhiB0, FitParam::RhoSheet])
        .map_err(|e| e.to_string())?;
    let e_phi = rel(rep.fitted.phi_b0, truth.phi_b0);
    let e_rho = rel(rep.fitted.rho_sheet, truth.rho_sheet);
    within(clock.elapsed(), 60.0, "extraction")?;
    if !rep.converged || e_phi > 0.05 || e_rho > 0.10 {
        return Err(format!(
            "converged {}, phi_b0 error {e_phi:e}, rho_sheet error {e_rho:e}",
            rep.converged
        ));
    }
    Ok(format!(
        "g_m error {worst_gm:.1e}; phi_b0 error {:.2}%, rho_sheet error {:.2}%",
        e_phi * 100.0,
        e_rho * 100.0
    ))
}

fn snn_accuracy() -> Outcome {
    let clock = Instant::now();
    let cfg = TrainConfig::default();
    if cfg.seed != 42 {
        return Err(format!("default seed is {}", cfg.seed));
    }
    let report = train(&IrisDataset::embedded(), &cfg).map_err(|e| e.to_string())?;
    within(clock.elapsed(), 300.0, "training")?;
    let summary = format!(
        "test {}/{} = {:.1}%, peak test {:.1}%, peak train {:.1}%, 29/30 final {} peak {}",
        report.test_correct,
        report.test_total,
        report.final_test_acc * 100.0,
        report.peak_test_acc * 100.0,
        report.peak_train_acc * 100.0,
        report.reference_reached,
        report.reference_reached_at_peak
    );
    if !report.summary().contains("peak") {
        return Err("report does not state peak accuracy".into());
    }
    if report.final_test_acc < 0.9 {
        return Err(summary);
    }
    Ok(summary)
}

fn charge_conservation() -> Outcome {
    let params = DeviceParams::default();
    let mut worst = 0.0f64;
    let mut intervals = 0;
    let cases = [
        (C_LARGE, V_D_LOW, 2.5, 0.0),
        (C_LARGE, V_D_HIGH, 1.0, 0.0),
        (C_SMALL, V_D_HIGH, 3.0, 1e-4),
        (C_SMALL, V_D_LOW, 4.0, 0.0),
    ];
    for (c, v_d, v_tg, t_ref) in cases {
        let mut cfg =
            NeuronConfig::with_source(c, v_d, CurrentSource::Device { params, v_bg: 0.0 });
        cfg.t_refractory = t_ref;
        let dt = recommended_dt(&cfg, v_tg, 1000.0)
            .map_err(|e| e.to_string())?
            .ok_or("no spikes expected")?;
        let period = 1000.0 * dt;
        let r = run(&cfg, v_tg, 6.0 * period, dt, Some(1)).map_err(|e| e.to_string())?;
        let tr = r.trace.ok_or("no trace")?;
        let q_need = cfg.c_total() * (cfg.v_th - cfg.v_reset);
        let current = |v: f64| cfg.source.current(v_tg, cfg.v_d - v).unwrap();
        let mut q = None::<f64>;
        for k in 1..tr.t.len() {
            let (t0, t1) = (tr.t[k - 1], tr.t[k]);
            if t1 == t0 {
                if tr.v_mem[k] == cfg.v_reset && tr.v_mem[k - 1] == cfg.v_th {
                    if let Some(q) = q {
                        worst = worst.max(rel(q, q_need));
                        intervals += 1;
                    }
                    q = Some(0.0);
                }
                continue;
            }
            // The membrane is clamped during the refractory hold.
            let held = tr.v_mem[k - 1] == cfg.v_reset && tr.v_mem[k] == cfg.v_reset;
            if let (Some(q), false) = (q.as_mut(), held) {
                *q += 0.5 * (t1 - t0) * (current(tr.v_mem[k - 1]) + current(tr.v_mem[k]));
            }
        }
    }
    if intervals == 0 {
        return Err("no complete interspike interval".into());
    }
    if worst > 5e-3 {
        return Err(format!("charge error {worst:e}"));
    }
    Ok(format!(
        "{intervals} intervals, worst charge error {worst:.1e}"
    ))
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    fs::write(
        d.join("neuron.json"),
        r#"{"schema": "neuron-v1", "c_ext": 1e-11, "v_d": 2.5, "source": {"constant_current": 1e-10}}"#,
    )
    .map_err(|e| e.to_string())?;
    let runs: Vec<(&str, Vec<&str>)> = vec![
        (
            "sweep",
            vec![
                "sweep",
                "--kind",
                "back-gate",
                "--from",
                "-2",
                "--to",
                "2",
                "--noise",
                "0.02",
            ],
        ),
        (
            "fig6c",
            vec!["sweep", "--preset", "fig6c", "--format", "json"],
        ),
        (
            "fit",
            vec!["fit", "--data", "sweep/iv.csv", "--free", "phi_b0"],
        ),
        (
            "neuron",
            vec!["neuron", "--preset", "fig7b", "--duration", "0.5"],
        ),
        (
            "neuron_cfg",
            vec![
                "neuron",
                "--config",
                "neuron.json",
                "--v-tg",
                "1",
                "--duration",
                "0.5",
            ],
        ),
        (
            "freq",
            vec!["freq", "--preset", "fig7c-cap", "--fit-parasitic", "5.4"],
        ),
        ("snn", vec!["snn", "train", "--epochs", "2", "--seed", "7"]),
        (
            "eval",
            vec![
                "snn",
                "eval",
                "--weights",
                "snn/weights.json",
                "--seed",
                "7",
            ],
        ),
        (
            "plot",
            vec!["plotdata", "--input", "sweep/iv.csv", "--log-y"],
        ),
    ];
    let mut compared = 0;
    for (name, args) in &runs {
        let mut a = args.clone();
        a.extend(["--out-dir", name]);
        sbneuro(d, &a)?;
        let replay_dir = format!("{name}_replay");
        let manifest = format!("{name}/manifest.json");
        sbneuro(
            d,
            &["replay", "--manifest", &manifest, "--out-dir", &replay_dir],
        )?;
        for entry in fs::read_dir(d.join(name)).map_err(|e| e.to_string())? {
            let entry = entry.map_err(|e| e.to_string())?;
            let file = entry.file_name();
            if file == "manifest.json" {
                continue;
            }
            let a = fs::read(entry.path()).map_err(|e| e.to_string())?;
            let b = fs::read(d.join(&replay_dir).join(&file))
                .map_err(|e| format!("{name}: replay lacks {file:?}: {e}"))?;
            if a != b {
                return Err(format!("{name}: {file:?} differs on replay"));
            }
            compared += 1;
        }
    }
    Ok(format!(
        "{} commands, {compared} files byte-identical on replay",
        runs.len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("LIF closed form", lif_closed_form),
        ("real-time regime", real_time_regime),
        ("parasitic fit", parasitic_fit),
        ("monotonicity", monotonicity_suite),
        ("I_ON vs 1/L_G", ion_scaling),
        ("extraction oracles", extraction_oracles),
        ("SNN accuracy", snn_accuracy),
        ("charge conservation", charge_conservation),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
