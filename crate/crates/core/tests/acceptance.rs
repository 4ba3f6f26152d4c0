//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wdipln::circuit::{
    build_wdipln_nominal, find_dips, AddSubPanel, Imbalance, SpectralGrid, WdmLayout,
};
use wdipln::cli::{run, Cli, HARDWARE_BIAS_IMBALANCE};
use wdipln::devices::{ring_phase_winding, RingDevice, PROBE_WAVELENGTH_NM};
use wdipln::mlp::{gradient_check, run_gate_experiment, train, GateTask, MlpModel, TrainParams};
use wdipln::neuron::{configured_readout, expected_mac, signed_readout, InputEncoding, NeuronConfig, Topology};
use wdipln::scaling::{electrical_io, footprint, format_area, pad_area, ArchitectureSpec, Variant};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, Box<dyn Fn() -> Outcome>);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn table_golden() -> Outcome {
    let sizes = [
        ("12.8", "7.2", "1.6e-3", "8.08e-2"),
        ("102.4", "57.6", "1.28e-2", "8.64e-2"),
    ];
    let ios = [[64, 64, 64, 64], [512, 512, 512, 288]];
    let mut cells = 0;
    for (row, m) in [1, 8].into_iter().enumerate() {
        let want = [sizes[row].0, sizes[row].1, sizes[row].2, sizes[row].3];
        for (k, v) in Variant::ALL.into_iter().enumerate() {
            let spec = ArchitectureSpec::new(v, 8, m);
            let got = format_area(footprint(&spec));
            check(got == want[k], format!("{v:?} N=8 M={m} size {got} != {}", want[k]))?;
            let io = electrical_io(&spec);
            check(io == ios[row][k], format!("{v:?} N=8 M={m} I/O {io} != {}", ios[row][k]))?;
            cells += 2;
        }
    }
    Ok(format!("{cells}/16 cells"))
}

fn pad_estimate() -> Outcome {
    let a = pad_area(288, 60.0, 150.0, 16, 18).map_err(|e| e.to_string())?;
    check(a == 6.48, format!("{a} mm^2"))?;
    Ok(format!("{a} mm^2"))
}

fn bare(a: f64, r: f64) -> RingDevice {
    RingDevice {
        r,
        a0: a,
        roundtrip_length_um: TAU * 5.0,
        n_eff0: 2.45,
        n_group: 4.2,
        dn_dv: 0.0,
        da_dv: 0.0,
        voltage: 0.0,
        reference_wavelength_nm: PROBE_WAVELENGTH_NM,
        voltage_range: (0.0, 2.0),
    }
}

fn ring_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_null: f64 = 0.0;
    let mut worst_unit: f64 = 0.0;
    let mut windings = 0;
    for _ in 0..1000 {
        let r = rng.gen_range(0.5..0.999);
        let ring = bare(r, r);
        let res = ring.resonance_near(rng.gen_range(1500.0..1600.0));
        worst_null = worst_null.max(ring.transfer(res).unwrap().norm());

        let ring = bare(1.0, rng.gen_range(0.5..0.999));
        let l = rng.gen_range(1500.0..1600.0);
        worst_unit = worst_unit.max((ring.transfer(l).unwrap().norm() - 1.0).abs());

        let (a, r) = loop {
            let a: f64 = rng.gen_range(0.5..1.0);
            let r = rng.gen_range(0.5..0.999);
            if (a - r).abs() > 1e-3 {
                break (a, r);
            }
        };
        let ring = bare(a, r);
        let res = ring.resonance_near(rng.gen_range(1500.0..1600.0));
        let half = ring.fsr_nm(res) / 2.0;
        let w = ring_phase_winding(&ring, res - half, res + half, 64).map_err(|e| e.to_string())?;
        let want = u32::from(a > r);
        check(w == want, format!("winding {w} for a={a} r={r}"))?;
        windings += 1;
    }
    check(worst_null <= 1e-10, format!("critical null {worst_null:e}"))?;
    check(worst_unit <= 1e-10, format!("lossless deviation {worst_unit:e}"))?;
    Ok(format!(
        "null {worst_null:.1e}, unimodular {worst_unit:.1e}, {windings} windings"
    ))
}

fn mac_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let n = rng.gen_range(1..=8);
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let c = NeuronConfig::new(w, x);
        let got = configured_readout(&c, Topology::Ring(InputEncoding::Continuous))
            .map_err(|e| format!("config {i}: {e}"))?;
        worst = worst.max((got.abs() - expected_mac(&c).abs()).abs());
    }
    check(worst <= 2e-3, format!("max error {worst:e}"))?;
    Ok(format!("1000 configs, max error {worst:.2e}"))
}

fn channel_isolation() -> Outcome {
    let layout = WdmLayout::with_spacing_linewidths(4, 20.0);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.gen_range(1..=8);
        let w: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect())
            .collect();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let g = build_wdipln_nominal(&w, &x, &layout).map_err(|e| e.to_string())?;
        let r = build_wdipln_nominal(&vec![vec![1.0; n]; 4], &vec![1.0; n], &layout)
            .map_err(|e| e.to_string())?;
        for (j, wj) in w.iter().enumerate() {
            let l = layout.channel_wavelength(j);
            let got = signed_readout(g.evaluate(l).unwrap(), r.evaluate(l).unwrap());
            let want = wj.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() / n as f64;
            worst = worst.max((got - want).abs());
        }
    }
    check(worst < 0.01, format!("max channel error {worst:e}"))?;
    Ok(format!("M=4, 20 linewidths, max error {worst:.2e}"))
}

fn fig4_matrix() -> Outcome {
    let probe = PROBE_WAVELENGTH_NM;
    let grid = SpectralGrid::centered(probe, 1500.0, 1.0).unwrap();
    let panels = AddSubPanel::all(probe, 0.8);
    let trace = |i: usize, bias: Option<Imbalance>| {
        let mut g = panels[i].build().unwrap();
        if let Some(b) = bias {
            let branches = g.imbalance().to_vec();
            g = g.with_imbalance(branches, b).unwrap();
        }
        g.sweep(&grid).unwrap()
    };
    let mut dips = Vec::new();
    for (i, want) in [(0, 1), (4, 2), (8, 3)] {
        let n = find_dips(&trace(i, None).transmission_db(), 1.0).len();
        check(n == want, format!("panel {} has {n} dips, expected {want}", panels[i].label))?;
        dips.push(n);
    }
    let ii = trace(1, None);
    let peak = ii.transmission_db().into_iter().fold(f64::MIN, f64::max);
    check(peak <= -100.0, format!("panel ii peaks at {peak} dB"))?;
    for i in [6, 7] {
        let s = trace(i, None);
        let centre = s.len() / 2;
        let at_probe = s.points[centre].transmission_db;
        check(
            (at_probe - 20.0 * 0.5f64.log10()).abs() < 0.1,
            format!("panel {} at probe {at_probe} dB", panels[i].label),
        )?;
        let d = find_dips(&s.transmission_db(), 1.0);
        check(
            d.len() == 1 && (s.points[d[0].index].wavelength_nm - (probe - 0.8)).abs() < 0.01,
            format!("panel {} dips {:?}", panels[i].label, d),
        )?;
    }
    let hw = trace(1, Some(HARDWARE_BIAS_IMBALANCE)).transmission_db();
    let mut sorted = hw.clone();
    sorted.sort_by(f64::total_cmp);
    let floor = sorted[sorted.len() / 2];
    check((-40.0..=-25.0).contains(&floor), format!("preset floor {floor} dB"))?;
    Ok(format!("dips {dips:?}, ii peak {peak:.0} dB, preset floor {floor:.1} dB"))
}

fn gate(task: GateTask) -> Outcome {
    let model = train(task, 0, &TrainParams::default()).map_err(|e| e.to_string())?;
    let log = run_gate_experiment(task, &model, None).map_err(|e| e.to_string())?;
    let err = log.max_stage_error();
    check(log.accuracy == 1.0, format!("accuracy {}", log.accuracy))?;
    check(err < 5e-3, format!("stage error {err:e}"))?;
    Ok(format!("4/4, stage error {err:.2e}"))
}

fn gradient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < 100 {
        let p: [f64; 9] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let m = MlpModel::from_params(&p);
        let x = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
        let f = m.forward(x);
        if f.hidden_pre.iter().chain([&f.output_pre]).any(|z| z.abs() < 1e-3) {
            continue;
        }
        let y = f64::from(rng.gen_bool(0.5));
        worst = worst.max(gradient_check(&m, x, y, 1e-5));
        checked += 1;
    }
    check(worst <= 1e-6, format!("max relative error {worst:e}"))?;
    Ok(format!("100 models, max relative error {worst:.1e}"))
}

fn run_args(args: &[&str]) -> Result<wdipln::cli::RunManifest, String> {
    let argv: Vec<String> = std::iter::once("wdipln").chain(args.iter().copied()).map(String::from).collect();
    let cli = <Cli as clap::Parser>::try_parse_from(&argv).map_err(|e| e.to_string())?;
    run(cli, argv).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/addsub_v.json");
    let config = tmp.path().join("neuron.json");
    std::fs::write(
        &config,
        NeuronConfig::new(vec![0.5, -0.75, 0.25], vec![0.3, 0.9, 1.0]).with_bias(0.2).to_json(),
    )
    .map_err(|e| e.to_string())?;
    let commands: Vec<Vec<String>> = vec![
        vec!["sweep".into(), "--netlist".into(), fixture.display().to_string()],
        vec!["addsub".into(), "--format".into(), "json".into()],
        vec!["gates".into(), "--gate".into(), "xor".into(), "--seed".into(), "4".into()],
        vec!["scaling".into()],
        vec!["eval".into(), "--config".into(), config.display().to_string(), "--noise-preset".into(), "hardware".into()],
    ];
    let mut files = 0;
    for (i, cmd) in commands.iter().enumerate() {
        let first: PathBuf = tmp.path().join(format!("a{i}"));
        let second: PathBuf = tmp.path().join(format!("b{i}"));
        let mut args: Vec<&str> = cmd.iter().map(String::as_str).collect();
        let out = first.display().to_string();
        args.extend(["--out", &out]);
        let m = run_args(&args)?;
        let manifest = first.join(format!(
            "{}.manifest.json",
            if m.command == "gates" { "gates_xor" } else { m.command.as_str() }
        ));
        let second_s = second.display().to_string();
        let m2 = run_args(&["rerun", "--manifest", &manifest.display().to_string(), "--out", &second_s])?;
        check(m.outputs == m2.outputs, format!("{}: output lists differ", m.command))?;
        for name in &m.outputs {
            let a = std::fs::read(first.join(name)).map_err(|e| e.to_string())?;
            let b = std::fs::read(second.join(name)).map_err(|e| e.to_string())?;
            check(a == b, format!("{}: {name} differs on rerun", m.command))?;
            files += 1;
        }
    }
    Ok(format!("{} commands, {files} files byte-identical", commands.len()))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("table_golden", Duration::from_secs(1), Box::new(table_golden)),
        ("pad_area", Duration::from_secs(1), Box::new(pad_estimate)),
        ("ring_property_suite", Duration::from_secs(10), Box::new(ring_properties)),
        ("mac_equivalence_oracle", Duration::from_secs(60), Box::new(mac_oracle)),
        ("channel_isolation", Duration::from_secs(60), Box::new(channel_isolation)),
        ("addsub_matrix", Duration::from_secs(30), Box::new(fig4_matrix)),
        ("gate_and", Duration::from_secs(60), Box::new(|| gate(GateTask::And))),
        ("gate_or", Duration::from_secs(60), Box::new(|| gate(GateTask::Or))),
        ("gate_xor", Duration::from_secs(60), Box::new(|| gate(GateTask::Xor))),
        ("trainer_gradient_check", Duration::from_secs(10), Box::new(gradient)),
        ("cli_determinism", Duration::from_secs(120), Box::new(determinism)),
    ];
    let mut failed = 0;
    for (name, budget, f) in criteria {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let elapsed = t.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > budget => Err(format!("{msg}; took {elapsed:.2?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS {name}: {msg} [{elapsed:.2?}]"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name}: {msg} [{elapsed:.2?}]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
