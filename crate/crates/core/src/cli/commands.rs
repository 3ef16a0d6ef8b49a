use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::context::{sha256_hex, Context, RunManifest, Table};
use super::{
    execute, Cli, CliError, Command, FitArgs, FreqArgs, NeuronArgs, PlotArgs, SnnAction,
    SnnEvalArgs, SnnTrainArgs, SweepArgs, SweepKind,
};
use crate::extract::synth::add_multiplicative_noise;
use crate::extract::{
    calibrate_vccs, compute_gm, extract_mobility, extract_rsd, extract_vt, fit_device, FitParam,
    Geometry,
};
use crate::io::{fmt_f64, parse_numeric_csv};
use crate::neuron::{
    fit_parasitic, frequency_sweep, recommended_dt, run, CurrentSource, MeasureOptions,
    NeuronConfig, C_LARGE, C_SMALL, V_D_HIGH, V_D_LOW,
};
use crate::sbmodel::{
    back_gate_curve, gate_leakage, ion_preset_bias, ion_vs_inverse_length, output_curve,
    transfer_curve, DeviceParams, IvCurve, MEASURED_GATE_LENGTHS,
};
use crate::snn::{
    evaluate, prepare, train, EncoderConfig, IrisDataset, SynapseMatrix, TrainConfig,
    EMBEDDED_IRIS_CSV,
};

const MAX_GRID_POINTS: usize = 1_000_000;
/// Trace points kept per run when no decimation is given.
const TRACE_POINTS: u64 = 5000;

pub(super) fn dispatch(cli: &Cli, ctx: &mut Context) -> Result<(), CliError> {
    match &cli.command {
        Command::Sweep(a) => sweep(cli, a, ctx),
        Command::Fit(a) => fit(cli, a, ctx),
        Command::Neuron(a) => neuron(cli, a, ctx),
        Command::Freq(a) => freq(cli, a, ctx),
        Command::Snn {
            action: SnnAction::Train(a),
        } => snn_train(cli, a, ctx),
        Command::Snn {
            action: SnnAction::Eval(a),
        } => snn_eval(cli, a, ctx),
        Command::Plotdata(a) => plotdata(a, ctx),
        Command::Replay(_) => unreachable!("replay is handled before dispatch"),
    }
}

fn json_value(text: &str) -> Value {
    serde_json::from_str(text).expect("own JSON output parses")
}

fn load_params(cli: &Cli, ctx: &mut Context) -> Result<DeviceParams, CliError> {
    let params = match &cli.params {
        Some(p) => {
            let text = ctx.read(p)?;
            DeviceParams::from_json(&text)
                .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?
        }
        None => DeviceParams::default(),
    };
    ctx.set_config("params", json_value(&params.to_json()));
    Ok(params)
}

/// `from, from + step, …` up to `to` inclusive (with a small tolerance).
pub(super) fn grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(from.is_finite() && to.is_finite() && step.is_finite() && step > 0.0 && to >= from) {
        return Err(CliError::Input(format!(
            "bad sweep range {from}..{to} step {step}: need finite values, step > 0, to >= from"
        )));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize + 1;
    if n > MAX_GRID_POINTS {
        return Err(CliError::Input(format!(
            "sweep has {n} points, limit {MAX_GRID_POINTS}"
        )));
    }
    Ok((0..n).map(|k| from + k as f64 * step).collect())
}

fn iv_table(curve: &IvCurve) -> Table {
    let mut t = Table::new(&["v_tg", "v_bg", "v_ds", "i_d"]);
    for r in curve.records() {
        t.push(vec![r.bias.v_tg, r.bias.v_bg, r.bias.v_ds, r.i_d]);
    }
    t
}

fn pairs_table(columns: &[&'static str], pairs: &[(f64, f64)]) -> Table {
    let mut t = Table::new(columns);
    for &(a, b) in pairs {
        t.push(vec![a, b]);
    }
    t
}

fn sweep(cli: &Cli, a: &SweepArgs, ctx: &mut Context) -> Result<(), CliError> {
    let params = load_params(cli, ctx)?;
    if let Some(name) = &cli.preset {
        ctx.set_config("preset", json!(name));
        return sweep_preset(name, &params, ctx);
    }
    let values = grid(a.from, a.to, a.step)?;
    let curve = match a.kind {
        SweepKind::Transfer => transfer_curve(&params, &values, a.v_bg, a.v_ds)?,
        SweepKind::Output => output_curve(&params, &values, a.v_tg, a.v_bg)?,
        SweepKind::BackGate => back_gate_curve(&params, &values, a.v_tg, a.v_ds)?,
    };
    let kind = format!("{:?}", a.kind).to_lowercase();
    ctx.set_config(
        "sweep",
        json!({"kind": kind, "from": a.from, "to": a.to, "step": a.step,
               "v_tg": a.v_tg, "v_bg": a.v_bg, "v_ds": a.v_ds, "noise": a.noise}),
    );
    let curve = match a.noise {
        Some(rel) => {
            if !(rel >= 0.0 && rel.is_finite()) {
                return Err(CliError::Input(format!("noise must be >= 0, got {rel}")));
            }
            let seed = cli.seed.unwrap_or(0);
            ctx.seed = Some(seed);
            add_multiplicative_noise(&[curve], rel, seed).remove(0)
        }
        None => curve,
    };
    ctx.write_table("iv", &iv_table(&curve))
}

fn sweep_preset(name: &str, base: &DeviceParams, ctx: &mut Context) -> Result<(), CliError> {
    let with_l = |l_g: f64| DeviceParams { l_g, ..*base };
    match name {
        "fig4a" => {
            let p = with_l(20e-6);
            let c = back_gate_curve(&p, &grid(-5.0, 5.0, 0.1)?, 0.0, 1.0)?;
            ctx.write_table("fig4a_id_vbg", &iv_table(&c))
        }
        "fig4b" => {
            let p = with_l(20e-6);
            for (k, v_bg) in [0.0, 1.0, 2.0, 3.0].into_iter().enumerate() {
                let c = output_curve(&p, &grid(0.0, 3.0, 0.05)?, 0.0, v_bg)?;
                ctx.write_table(&format!("fig4b_id_vd_{k}"), &iv_table(&c))?;
            }
            Ok(())
        }
        "fig4c" => {
            let mut t = Table::new(&["v_ds", "i_leak"]);
            for v in grid(0.0, 3.0, 0.1)? {
                t.push(vec![v, gate_leakage(base)]);
            }
            ctx.write_table("fig4c_leakage", &t)
        }
        "fig5a" => {
            let p = with_l(10e-6);
            for (k, v_ds) in [0.1, 1.0, 2.0].into_iter().enumerate() {
                let c = transfer_curve(&p, &grid(-2.0, 8.0, 0.1)?, 0.0, v_ds)?;
                ctx.write_table(&format!("fig5a_id_vtg_{k}"), &iv_table(&c))?;
            }
            Ok(())
        }
        "fig5b" => {
            let p = with_l(10e-6);
            for (k, v_tg) in [2.0, 4.0, 6.0, 8.0].into_iter().enumerate() {
                let c = output_curve(&p, &grid(0.0, 3.0, 0.05)?, v_tg, 0.0)?;
                ctx.write_table(&format!("fig5b_id_vd_{k}"), &iv_table(&c))?;
            }
            Ok(())
        }
        "fig5c" | "fig5d" | "fig5e" => {
            let p = with_l(10e-6);
            let v_ds = 0.1;
            let transfer = transfer_curve(&p, &grid(0.0, 8.0, 0.05)?, 0.0, v_ds)?;
            match name {
                "fig5c" => ctx.write_table("fig5c_gm", &pairs_table(&["v_tg", "g_m"], &compute_gm(&transfer)?)),
                "fig5d" => {
                    let mu = extract_mobility(&compute_gm(&transfer)?, &Geometry::from(&p), v_ds)?;
                    ctx.write_table("fig5d_mobility", &pairs_table(&["v_tg", "mu_eff"], &mu))
                }
                _ => {
                    let v_t = extract_vt(&transfer)?;
                    let curves = [5.0, 6.0, 7.0, 8.0]
                        .iter()
                        .map(|&v_tg| output_curve(&p, &grid(0.0, 0.05, 0.01)?, v_tg, 0.0).map_err(CliError::from))
                        .collect::<Result<Vec<_>, _>>()?;
                    let rsd = extract_rsd(&curves, v_t)?;
                    ctx.say(&format!("v_t = {} V", fmt_f64(v_t)));
                    ctx.say(&format!("r_sd = {} ohm (r^2 = {})", fmt_f64(rsd.r_sd), fmt_f64(rsd.r_squared)));
                    ctx.write_table("fig5e_rsd", &pairs_table(&["inv_overdrive", "r_tot"], &rsd.points))
                }
            }
        }
        "fig6a" => {
            let p = with_l(10e-6);
            for (k, v_bg) in [-2.0, 0.0, 2.0, 4.0].into_iter().enumerate() {
                let c = transfer_curve(&p, &grid(-2.0, 8.0, 0.1)?, v_bg, 1.0)?;
                ctx.write_table(&format!("fig6a_id_vtg_{k}"), &iv_table(&c))?;
            }
            Ok(())
        }
        "fig6b" => {
            for (k, l_g) in MEASURED_GATE_LENGTHS.into_iter().enumerate() {
                let c = transfer_curve(&with_l(l_g), &grid(-2.0, 8.0, 0.1)?, 0.0, 1.0)?;
                ctx.write_table(&format!("fig6b_id_vtg_{k}"), &iv_table(&c))?;
            }
            Ok(())
        }
        "fig6c" => {
            let p = DeviceParams {
                phi_min: 0.0,
                ..*base
            };
            let rows = ion_vs_inverse_length(&p, &MEASURED_GATE_LENGTHS, &ion_preset_bias(&p))?;
            let mut t = Table::new(&["l_g", "inv_l_g", "i_on"]);
            for (l, (inv, i)) in MEASURED_GATE_LENGTHS.iter().zip(rows) {
                t.push(vec![*l, inv, i]);
            }
            ctx.write_table("fig6c_ion", &t)
        }
        other => Err(CliError::Input(format!(
            "unknown sweep preset {other:?} (fig4a fig4b fig4c fig5a fig5b fig5c fig5d fig5e fig6a fig6b fig6c)"
        ))),
    }
}

fn fit(cli: &Cli, a: &FitArgs, ctx: &mut Context) -> Result<(), CliError> {
    let initial = load_params(cli, ctx)?;
    let mut curves = Vec::with_capacity(a.data.len());
    for path in &a.data {
        let text = ctx.read(path)?;
        let c = IvCurve::from_csv(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        curves.push(c);
    }
    let free = a
        .free
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<FitParam>())
        .collect::<Result<Vec<_>, _>>()?;
    ctx.set_config(
        "free",
        json!(free.iter().map(|p| p.name()).collect::<Vec<_>>()),
    );
    let report = fit_device(&curves, &initial, &free)?;
    ctx.say(&format!(
        "converged {} after {} iterations, rms log10 residual {} -> {}",
        report.converged,
        report.iterations,
        fmt_f64(report.initial_rms_log),
        fmt_f64(report.residual_rms_log)
    ));
    let mut text = report.to_json();
    text.push('\n');
    ctx.write("fit_report.json", &text)?;
    let mut params = report.fitted.to_json();
    params.push('\n');
    ctx.write("fitted_params.json", &params)
}

fn load_neuron_config(cli: &Cli, ctx: &mut Context) -> Result<Option<NeuronConfig>, CliError> {
    match &cli.config {
        Some(path) => {
            let text = ctx.read(path)?;
            let base = path.parent().unwrap_or(Path::new("."));
            let cfg = NeuronConfig::from_json(&text, base)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            Ok(Some(cfg))
        }
        None => Ok(None),
    }
}

fn neuron(cli: &Cli, a: &NeuronArgs, ctx: &mut Context) -> Result<(), CliError> {
    let (config, default_v, default_duration) =
        match (load_neuron_config(cli, ctx)?, cli.preset.as_deref()) {
            (Some(cfg), _) => (cfg, vec![], None),
            (None, Some("fig7b")) => {
                let params = load_params(cli, ctx)?;
                let cfg = NeuronConfig::with_source(
                    C_LARGE,
                    V_D_LOW,
                    CurrentSource::Device { params, v_bg: 0.0 },
                );
                (cfg, vec![2.0, 2.5, 3.0, 3.5], Some(2.0))
            }
            (None, Some(other)) => {
                return Err(CliError::Input(format!(
                    "unknown neuron preset {other:?} (fig7b)"
                )))
            }
            (None, None) => {
                return Err(CliError::Input("neuron needs --config or --preset".into()))
            }
        };
    if let Some(p) = &cli.preset {
        ctx.set_config("preset", json!(p));
    }
    let v_tgs = if a.v_tg.is_empty() {
        default_v
    } else {
        a.v_tg.clone()
    };
    if v_tgs.is_empty() {
        return Err(CliError::Input("give at least one --v-tg".into()));
    }
    let duration = a
        .duration
        .or(default_duration)
        .ok_or_else(|| CliError::Input("give --duration".into()))?;
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(CliError::Input(format!(
            "duration must be positive, got {duration}"
        )));
    }
    let mut runs = Vec::new();
    for (k, &v_tg) in v_tgs.iter().enumerate() {
        let dt = match cli.dt {
            Some(dt) => dt,
            None => recommended_dt(&config, v_tg, 1000.0)?
                .map_or(duration / 1000.0, |dt| dt.min(duration / 1000.0)),
        };
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(CliError::Input(format!("dt must be positive, got {dt}")));
        }
        let n_steps = (duration / dt).ceil() as u64;
        let decimation = a
            .decimation
            .unwrap_or_else(|| n_steps.div_ceil(TRACE_POINTS).max(1) as usize);
        let r = run(&config, v_tg, duration, dt, Some(decimation))?;
        let trace = r.trace.expect("trace requested");
        let mut t = Table::new(&["t", "v_mem"]);
        for (&ti, &vi) in trace.t.iter().zip(&trace.v_mem) {
            t.push(vec![ti, vi]);
        }
        ctx.write_table(&format!("trace_{k}"), &t)?;
        let mut s = Table::new(&["t_spike"]);
        for &ts in &r.spikes {
            s.push(vec![ts]);
        }
        ctx.write_table(&format!("spikes_{k}"), &s)?;
        ctx.say(&format!(
            "v_tg {}: {} spikes",
            fmt_f64(v_tg),
            r.spikes.len()
        ));
        runs.push(json!({"v_tg": v_tg, "dt": dt, "decimation": decimation}));
    }
    ctx.set_config("neuron", json_value(&config.to_json()));
    ctx.set_config("duration", json!(duration));
    ctx.set_config("runs", Value::Array(runs));
    Ok(())
}

/// Output neuron of the frequency presets: VCCS calibrated from `params`
/// at mid-charge drain bias.
fn calibrated_neuron(
    params: &DeviceParams,
    c_ext: f64,
    v_d: f64,
) -> Result<NeuronConfig, CliError> {
    let v_ds = v_d - 0.3;
    let vccs = calibrate_vccs(params, (-1.0, 6.0), 141, 0.0, v_ds, 15)?;
    Ok(NeuronConfig::with_source(
        c_ext,
        v_d,
        CurrentSource::Vccs(vccs),
    ))
}

fn freq(cli: &Cli, a: &FreqArgs, ctx: &mut Context) -> Result<(), CliError> {
    let c_par = match a.fit_parasitic {
        Some(ratio) => {
            let c_par = fit_parasitic(ratio, a.c_small, a.c_large)?;
            ctx.say(&format!("c_par = {} F", fmt_f64(c_par)));
            let doc = json!({"f_ratio": ratio, "c_small": a.c_small, "c_large": a.c_large, "c_par": c_par});
            let mut text = serde_json::to_string_pretty(&doc).expect("json");
            text.push('\n');
            ctx.write("parasitic.json", &text)?;
            Some(c_par)
        }
        None => None,
    };
    let default_list = || grid(0.0, 5.0, 0.25);
    let (series, default_v): (Vec<(String, NeuronConfig)>, Vec<f64>) =
        match (load_neuron_config(cli, ctx)?, cli.preset.as_deref()) {
            (Some(cfg), _) => (vec![("freq".into(), cfg)], vec![]),
            (None, Some("fig7c")) => {
                let params = load_params(cli, ctx)?;
                let s = [V_D_LOW, V_D_HIGH]
                    .iter()
                    .map(|&v_d| {
                        Ok((
                            format!("fig7c_vd{v_d}"),
                            calibrated_neuron(&params, C_LARGE, v_d)?,
                        ))
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                (s, default_list()?)
            }
            (None, Some("fig7c-cap")) => {
                let params = load_params(cli, ctx)?;
                let mut s = Vec::new();
                for (label, c) in [("10pF", C_SMALL), ("4.7nF", C_LARGE)] {
                    let mut cfg = calibrated_neuron(&params, c, V_D_HIGH)?;
                    cfg.c_par = c_par.unwrap_or(0.0);
                    s.push((format!("fig7c_c{label}"), cfg));
                }
                (s, default_list()?)
            }
            (None, Some(other)) => {
                return Err(CliError::Input(format!(
                    "unknown freq preset {other:?} (fig7c fig7c-cap)"
                )))
            }
            (None, None) if c_par.is_some() => return Ok(()),
            (None, None) => {
                return Err(CliError::Input(
                    "freq needs --config, --preset or --fit-parasitic".into(),
                ))
            }
        };
    if let Some(p) = &cli.preset {
        ctx.set_config("preset", json!(p));
    }
    let v_tgs = if a.v_tg_list.is_empty() {
        default_v
    } else {
        a.v_tg_list.clone()
    };
    if v_tgs.is_empty() && cli.config.is_some() && a.v_tg_list.is_empty() {
        return Err(CliError::Input("give --v-tg-list".into()));
    }
    let mut opts = MeasureOptions {
        dt: cli.dt,
        ..MeasureOptions::default()
    };
    if let Some(t) = a.timeout {
        opts.timeout = t;
    }
    let mut curves = Vec::new();
    let mut configs = serde_json::Map::new();
    for (stem, cfg) in &series {
        let curve = frequency_sweep(cfg, &v_tgs, &opts)?;
        let n_timeout = curve.timed_out.iter().filter(|&&t| t).count();
        ctx.write_table(stem, &pairs_table(&["v_tg", "f_hz"], &curve.points))?;
        let f_max = curve.points.iter().map(|p| p.1).fold(0.0, f64::max);
        ctx.say(&format!(
            "{stem}: max {} Hz, {n_timeout} timed out",
            fmt_f64(f_max)
        ));
        configs.insert(stem.clone(), json_value(&cfg.to_json()));
        curves.push(curve);
    }
    if cli.preset.as_deref() == Some("fig7c-cap") {
        let mut t = Table::new(&["v_tg", "ratio"]);
        for (s, l) in curves[0].points.iter().zip(&curves[1].points) {
            if l.1 > 0.0 {
                t.push(vec![s.0, s.1 / l.1]);
            }
        }
        ctx.write_table("fig7c_ratio", &t)?;
    }
    ctx.set_config("neurons", Value::Object(configs));
    ctx.set_config("v_tg", json!(v_tgs));
    ctx.set_config(
        "measure",
        json!({"dt": opts.dt, "steps_per_period": opts.steps_per_period,
               "timeout": opts.timeout, "max_steps": opts.max_steps}),
    );
    Ok(())
}

fn load_train_config(cli: &Cli, ctx: &mut Context) -> Result<TrainConfig, CliError> {
    let mut cfg = match (&cli.config, cli.preset.as_deref()) {
        (Some(path), _) => {
            let text = ctx.read(path)?;
            TrainConfig::from_json(&text)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        }
        (None, None | Some("fig7e")) => TrainConfig::default(),
        (None, Some(other)) => {
            return Err(CliError::Input(format!(
                "unknown snn preset {other:?} (fig7e)"
            )))
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dt) = cli.dt {
        cfg.dt = dt;
    }
    Ok(cfg)
}

fn load_dataset(path: Option<&Path>, ctx: &mut Context) -> Result<IrisDataset, CliError> {
    match IrisDataset::resolve_path(path) {
        Some(p) => {
            let text = ctx.read(&p)?;
            IrisDataset::from_csv(&text)
                .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))
        }
        None => {
            ctx.note_input(EMBEDDED_IRIS_LABEL, EMBEDDED_IRIS_CSV.as_bytes());
            Ok(IrisDataset::embedded())
        }
    }
}

const EMBEDDED_IRIS_LABEL: &str = "embedded:iris.csv";

fn snn_train(cli: &Cli, a: &SnnTrainArgs, ctx: &mut Context) -> Result<(), CliError> {
    let mut cfg = load_train_config(cli, ctx)?;
    if let Some(e) = a.epochs {
        cfg.epochs = e;
    }
    cfg.validate()?;
    ctx.seed = Some(cfg.seed);
    let data = load_dataset(a.data.as_deref(), ctx)?;
    let report = train(&data, &cfg)?;
    let mut w = report.weights.to_json();
    w.push('\n');
    ctx.write("weights.json", &w)?;
    let mut hist = Table::new(&["epoch", "train_acc", "test_acc"]);
    for h in &report.history {
        hist.push(vec![h.epoch as f64, h.train_acc, h.test_acc]);
    }
    ctx.write_table("accuracy", &hist)?;
    let doc = json!({
        "final_test_acc": report.final_test_acc,
        "final_train_acc": report.final_train_acc,
        "peak_test_acc": report.peak_test_acc,
        "peak_train_acc": report.peak_train_acc,
        "test_correct": report.test_correct,
        "test_total": report.test_total,
        "reference_29_of_30_final": report.reference_reached,
        "reference_29_of_30_peak": report.reference_reached_at_peak,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("json");
    text.push('\n');
    ctx.write("train_report.json", &text)?;
    ctx.stdout.push_str(&report.summary());
    ctx.set_config("train", json_value(&cfg.to_json()));
    Ok(())
}

fn snn_eval(cli: &Cli, a: &SnnEvalArgs, ctx: &mut Context) -> Result<(), CliError> {
    let cfg = load_train_config(cli, ctx)?;
    cfg.validate()?;
    ctx.seed = Some(cfg.seed);
    let text = ctx.read(&a.weights)?;
    let w = SynapseMatrix::from_json(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", a.weights.display())))?;
    let data = load_dataset(a.data.as_deref(), ctx)?;
    let encoder: EncoderConfig = cfg.encoder_for(&data);
    if w.rows() != encoder.n_inputs() || w.cols() != 3 {
        return Err(CliError::Input(format!(
            "weights are {}x{}, network needs {}x3",
            w.rows(),
            w.cols(),
            encoder.n_inputs()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (train_set, test_set, _) = prepare(&data, &cfg, encoder.n_inputs(), &mut rng);
    let train_acc = evaluate(&train_set, &w, &encoder, &cfg)?;
    let test_acc = evaluate(&test_set, &w, &encoder, &cfg)?;
    let all_acc = evaluate(data.samples(), &w, &encoder, &cfg)?;
    ctx.say(&format!("train accuracy {train_acc:.4}"));
    ctx.say(&format!("test accuracy {test_acc:.4}"));
    let doc = json!({"train_acc": train_acc, "test_acc": test_acc, "all_acc": all_acc});
    let mut out = serde_json::to_string_pretty(&doc).expect("json");
    out.push('\n');
    ctx.write("eval.json", &out)?;
    ctx.set_config("train", json_value(&cfg.to_json()));
    Ok(())
}

fn plotdata(a: &PlotArgs, ctx: &mut Context) -> Result<(), CliError> {
    let text = ctx.read(&a.input)?;
    ctx.set_config("log_y", json!(a.log_y));
    if text.trim().is_empty() {
        return Ok(());
    }
    let header: Vec<String> = text
        .lines()
        .next()
        .unwrap_or("")
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    if header.len() < 2 {
        return Err(CliError::Input(format!(
            "{}: need at least two columns",
            a.input.display()
        )));
    }
    let cols: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = parse_numeric_csv(&text, &cols)
        .map_err(|e| CliError::Input(format!("{}: {e}", a.input.display())))?;
    let stem = a
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".into());
    for (j, name) in cols.iter().enumerate().skip(1) {
        let y_label = if a.log_y {
            format!("log10_{name}")
        } else {
            name.to_string()
        };
        let mut out = format!("# {} {}\n", cols[0], y_label);
        for (_, row) in &rows {
            let y = if a.log_y {
                if row[j] <= 0.0 {
                    continue;
                }
                row[j].log10()
            } else {
                row[j]
            };
            out.push_str(&format!("{} {}\n", fmt_f64(row[0]), fmt_f64(y)));
        }
        ctx.write(&format!("{stem}_{name}.dat"), &out)?;
    }
    Ok(())
}

pub(super) fn replay(manifest: &Path, out_dir: &Path) -> Result<String, CliError> {
    let text = std::fs::read_to_string(manifest)
        .map_err(|e| CliError::Input(format!("{}: {e}", manifest.display())))?;
    let m = RunManifest::from_json(&text)?;
    for input in &m.inputs {
        let bytes = if input.path == EMBEDDED_IRIS_LABEL {
            EMBEDDED_IRIS_CSV.as_bytes().to_vec()
        } else {
            std::fs::read(&input.path)
                .map_err(|e| CliError::Input(format!("{}: {e}", input.path)))?
        };
        if sha256_hex(&bytes) != input.sha256 {
            return Err(CliError::Input(format!(
                "input {} changed since the recorded run",
                input.path
            )));
        }
    }
    let mut args = m.args.clone();
    args.push("--out-dir".into());
    args.push(out_dir.display().to_string());
    execute(&args)
}
