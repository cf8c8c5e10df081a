use num_complex::Complex64;
use qlm_core::atomic_response::{chi_closed_form, complex_relaxation};
use qlm_core::bloch::default_ky_grid;
use qlm_core::liouvillian::{build_liouvillian, residual, steady_state};
use qlm_core::pipeline::{
    branching_row, contour_at, crossing, epsilon_scan, fom_summary, linspace, lossless_drive, FomSummary,
};
use qlm_core::{
    chi_ddr, figure_of_merit, find_operating_point, numeric_chi, scan_branching, CouplingStrength,
    DriveConfig, LevelScheme, OperatingPoint, ProbeConfig, TopologyClass,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{PumpMode, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Plot, Series, Sink, Table};

fn complex(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn finite_or_string(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

fn operating_point(cfg: &RunConfig) -> CliResult<OperatingPoint> {
    Ok(find_operating_point(&cfg.levels, &cfg.drive, cfg.zeta, &cfg.search())?)
}

fn operating_point_json(op: &OperatingPoint) -> Value {
    json!({
        "delta_b": op.delta_b,
        "pump_rate": op.pump_rate,
        "chi": complex(op.chi),
        "epsilon": complex(op.epsilon),
        "fom": finite_or_string(figure_of_merit(op.epsilon).value),
    })
}

pub fn cmd_operating_point(cfg: &RunConfig, sink: &mut Sink) -> CliResult<Value> {
    let op = operating_point(cfg)?;
    let mut table = Table::new(&["delta_b", "pump_rate", "re_eps", "im_eps", "re_chi", "im_chi"]);
    table.push(vec![
        Cell::Num(op.delta_b),
        Cell::Num(op.pump_rate),
        Cell::Num(op.epsilon.re),
        Cell::Num(op.epsilon.im),
        Cell::Num(op.chi.re),
        Cell::Num(op.chi.im),
    ]);
    sink.table("operating-point", &table)?;
    sink.summary(json!({ "operating_point": operating_point_json(&op) }))
}

pub fn cmd_susceptibility_scan(cfg: &RunConfig, sink: &mut Sink) -> CliResult<Value> {
    let (lo, hi) = cfg.susceptibility_scan.window.expect("resolved");
    let grid = linspace(lo, hi, cfg.susceptibility_scan.points);
    let closed_drive = cfg.drive.with_pump(0.0);
    let closed: Vec<Complex64> = epsilon_scan(&cfg.levels, &closed_drive, cfg.zeta, &grid, cfg.probe.omega_b)
        .into_iter()
        .collect::<Result<_, _>>()?;
    let pumped = cfg.drive.pump_rate > 0.0;
    let oracle: Option<Vec<Complex64>> = if pumped {
        Some(
            epsilon_scan(&cfg.levels, &cfg.drive, cfg.zeta, &grid, cfg.probe.omega_b)
                .into_iter()
                .collect::<Result<_, _>>()?,
        )
    } else {
        None
    };

    let mut columns = vec!["delta_b", "re_eps", "im_eps"];
    if pumped {
        columns.extend(["re_eps_oracle", "im_eps_oracle"]);
    }
    let mut table = Table::new(&columns);
    for (k, &x) in grid.iter().enumerate() {
        let mut row = vec![Cell::Num(x), Cell::Num(closed[k].re), Cell::Num(closed[k].im)];
        if let Some(o) = &oracle {
            row.extend([Cell::Num(o[k].re), Cell::Num(o[k].im)]);
        }
        table.push(row);
    }
    sink.table("susceptibility-scan", &table)?;

    let mut plot = Plot::new("Peak permittivity vs probe detuning", "Delta_b / gamma0", "epsilon");
    let pts = |f: &dyn Fn(Complex64) -> f64, v: &[Complex64]| grid.iter().zip(v).map(|(x, e)| (*x, f(*e))).collect();
    plot.series.push(Series::new("Re eps", pts(&|e| e.re, &closed)));
    plot.series.push(Series::new("Im eps", pts(&|e| e.im, &closed)));
    if let Some(o) = &oracle {
        plot.series.push(Series::new("Re eps (oracle, pumped)", pts(&|e| e.re, o)).dashed());
        plot.series.push(Series::new("Im eps (oracle, pumped)", pts(&|e| e.im, o)).dashed());
    }
    plot.hlines.push(0.0);
    sink.svg("susceptibility-scan", &plot)?;

    let min_re = closed.iter().map(|e| e.re).fold(f64::INFINITY, f64::min);
    sink.summary(json!({
        "points": grid.len(),
        "oracle_path": pumped,
        "min_re_eps_closed_form": min_re,
    }))
}

pub fn cmd_fom_scan(cfg: &RunConfig, sink: &mut Sink) -> CliResult<Value> {
    let (lo, hi) = cfg.fom_scan.window.expect("resolved");
    let grid = linspace(lo, hi, cfg.fom_scan.points);
    let (pump, op) = match cfg.fom_scan.pump {
        PumpMode::OperatingPoint => {
            let op = operating_point(cfg)?;
            (op.pump_rate, Some(op))
        }
        PumpMode::Configured => (cfg.drive.pump_rate, None),
    };
    let mut table = Table::new(&["omega_d", "delta_b", "re_eps", "im_eps", "fom", "gain"]);
    let mut plot = Plot::new("Figure of merit vs probe detuning", "Delta_b / gamma0", "|Re eps| / Im eps");
    let mut summaries: Vec<(f64, FomSummary)> = Vec::new();
    for &omega_d in &cfg.fom_scan.omega_d_values {
        let drive = cfg.drive.with_rabi(cfg.drive.omega_a, omega_d).with_pump(pump);
        let eps: Vec<Complex64> = epsilon_scan(&cfg.levels, &drive, cfg.zeta, &grid, cfg.probe.omega_b)
            .into_iter()
            .collect::<Result<_, _>>()?;
        let mut pts = Vec::with_capacity(grid.len());
        for (x, e) in grid.iter().zip(&eps) {
            let f = figure_of_merit(*e);
            table.push(vec![
                Cell::Num(omega_d),
                Cell::Num(*x),
                Cell::Num(e.re),
                Cell::Num(e.im),
                Cell::Num(f.value),
                Cell::Int(i64::from(f.gain)),
            ]);
            pts.push((*x, f.value));
        }
        plot.series.push(Series::new(format!("Omega_d = {omega_d}"), pts));
        summaries.push((omega_d, fom_summary(&grid, &eps)?));
    }
    sink.table("fom-scan", &table)?;
    sink.svg("fom-scan", &plot)?;

    let peaks_increase = summaries.windows(2).all(|w| w[1].1.peak > w[0].1.peak);
    let bandwidth_narrows = summaries.windows(2).all(|w| w[1].1.bandwidth < w[0].1.bandwidth);
    let curves: Vec<Value> = summaries
        .iter()
        .map(|(od, s)| {
            json!({
                "omega_d": od,
                "peak": finite_or_string(s.peak),
                "peak_delta_b": s.peak_delta_b,
                "max_finite": s.max_finite,
                "divergent": s.divergent,
                "gain": s.gain,
                "bandwidth": s.bandwidth,
            })
        })
        .collect();
    sink.summary(json!({
        "pump_rate": pump,
        "operating_point": op.as_ref().map(operating_point_json),
        "curves": curves,
        "peaks_increase": peaks_increase,
        "bandwidth_narrows": bandwidth_narrows,
    }))
}

pub fn cmd_contour(cfg: &RunConfig, sink: &mut Sink) -> CliResult<Value> {
    let op = operating_point(cfg)?;
    let probe = ProbeConfig {
        delta_b: op.delta_b,
        omega_b: cfg.probe.omega_b,
    };
    let grid = default_ky_grid(cfg.geometry.period_a, cfg.contour.ky_points);
    let threshold = cfg.contour.threshold.expect("resolved");
    let mut plot = Plot::new("Isofrequency contours", "k_y / k0", "k_z / k0");
    let mut records = Vec::new();
    let mut verdicts = Vec::new();
    for (k, &(omega_a, omega_d)) in cfg.contour.drives.iter().enumerate() {
        let base = cfg.drive.with_rabi(omega_a, omega_d);
        let drive = if k == 0 || !cfg.contour.rebisect_pump {
            base.with_pump(op.pump_rate)
        } else {
            lossless_drive(&cfg.levels, &base, op.delta_b, cfg.zeta, &cfg.search())?.0
        };
        let run = contour_at(&cfg.levels, &drive, &probe, cfg.zeta, &cfg.geometry, &grid, threshold)?;
        let mut table = Table::new(&["k_y", "re_k_z", "im_k_z", "propagating"]);
        for p in &run.contour.points {
            table.push(vec![
                Cell::Num(p.k_y),
                Cell::Num(p.k_z.re),
                Cell::Num(p.k_z.im),
                Cell::Int(i64::from(p.propagating)),
            ]);
        }
        sink.table(&format!("contour-{k}"), &table)?;
        let mut profile = Table::new(&["z_mid", "re_eps", "im_eps"]);
        for (z, s) in run.profile.midpoints().iter().zip(&run.profile.slabs) {
            profile.push(vec![Cell::Num(*z), Cell::Num(s.eps.re), Cell::Num(s.eps.im)]);
        }
        sink.table(&format!("profile-{k}"), &profile)?;

        let label = format!("({omega_a}, {omega_d})");
        let re: Vec<(f64, f64)> = run.contour.points.iter().map(|p| (p.k_y, p.k_z.re.abs())).collect();
        let im: Vec<(f64, f64)> = run.contour.points.iter().map(|p| (p.k_y, p.k_z.im)).collect();
        plot.series.push(Series::new(format!("Re k_z {label}"), re));
        plot.series.push(Series::new(format!("Im k_z {label}"), im).dashed());
        verdicts.push(run.contour.topology);
        records.push(json!({
            "omega_a": omega_a,
            "omega_d": omega_d,
            "pump_rate": drive.pump_rate,
            "chi": complex(run.chi),
            "epsilon_peak": complex(run.epsilon_peak),
            "topology": run.contour.topology.as_str(),
            "k_max_propagating": run.contour.k_max_propagating,
            "zone_edge": run.contour.zone_edge,
            "transition": run.contour.transition.map(|t| json!({
                "k_y": t.k_y,
                "k_z": complex(t.k_z),
            })),
        }));
    }
    plot.hlines.push(0.5 / cfg.geometry.period_a);
    sink.svg("contour", &plot)?;
    let transition = verdicts.len() >= 2 && verdicts[0] == TopologyClass::Open && verdicts[1] == TopologyClass::Closed;
    let summary = sink.summary(json!({
        "operating_point": operating_point_json(&op),
        "contours": records,
        "open_to_closed": transition,
    }))?;
    if verdicts.contains(&TopologyClass::Indeterminate) {
        return Err(CliError::Indeterminate(format!(
            "topology verdicts {:?}; see {}",
            verdicts.iter().map(|v| v.as_str()).collect::<Vec<_>>(),
            sink.dir.join("contour-summary.json").display()
        )));
    }
    Ok(summary)
}

pub fn cmd_decay_scan(cfg: &RunConfig, sink: &mut Sink) -> CliResult<Value> {
    let op = operating_point(cfg)?;
    let probe = ProbeConfig {
        delta_b: op.delta_b,
        omega_b: cfg.probe.omega_b,
    };
    let s = &cfg.decay_scan;
    let grid = linspace(s.omega_a_start, s.omega_a_stop, s.points);
    let drive_at = |omega_a: f64| cfg.drive.with_rabi(omega_a, cfg.drive.omega_d).with_pump(op.pump_rate);
    let row = |omega_a: f64| {
        branching_row(
            &cfg.levels,
            &drive_at(omega_a),
            &probe,
            cfg.zeta,
            &cfg.geometry,
            &cfg.dipole,
            &cfg.decay_tolerance,
        )
    };
    let baseline = row(0.0)?.0;
    let rows = scan_branching(&grid, row);

    let mut table = Table::new(&["omega_a", "xi", "xi_normalized", "gamma3", "quadrature_error", "status"]);
    let mut good = Vec::new();
    let mut failures = Vec::new();
    for (omega_a, r) in grid.iter().zip(&rows) {
        match r {
            Ok(p) => {
                table.push(vec![
                    Cell::Num(p.omega_a),
                    Cell::Num(p.xi),
                    Cell::Num(p.xi / baseline),
                    Cell::Num(p.gamma3),
                    Cell::Num(p.quadrature_error),
                    Cell::Text("ok".into()),
                ]);
                good.push((p.omega_a, p.xi));
            }
            Err(e) => {
                table.push(vec![
                    Cell::Num(*omega_a),
                    Cell::Num(f64::NAN),
                    Cell::Num(f64::NAN),
                    Cell::Num(f64::NAN),
                    Cell::Num(f64::NAN),
                    Cell::Text(e.kind().into()),
                ]);
                failures.push(json!({ "omega_a": omega_a, "error": e.kind(), "message": e.to_string() }));
            }
        }
    }
    sink.table("decay-scan", &table)?;
    let mut plot = Plot::new("Branching ratio vs drive", "Omega_a / gamma0", "xi");
    plot.series.push(Series::new("xi", good.clone()));
    plot.hlines.push(1.0);
    sink.svg("decay-scan", &plot)?;

    let fold = good
        .iter()
        .map(|&(_, xi)| (xi / baseline).max(baseline / xi))
        .fold(1.0, f64::max);
    sink.summary(json!({
        "operating_point": operating_point_json(&op),
        "baseline_xi": baseline,
        "fold_change": fold,
        "xi_one_crossing": crossing(&good, 1.0),
        "failed_rows": failures,
    }))
}

struct Sample {
    levels: LevelScheme,
    drive: DriveConfig,
    delta_b: f64,
    zeta: CouplingStrength,
}

fn random_sample(rng: &mut ChaCha8Rng) -> Sample {
    let mut u = |lo: f64, hi: f64| rng.random_range(lo..hi);
    Sample {
        levels: LevelScheme {
            gamma_a: u(0.3, 1.5),
            gamma_b: u(0.3, 1.5),
            gamma_d: u(0.3, 1.5),
        },
        drive: DriveConfig {
            omega_a: u(0.1, 2.0),
            omega_d: u(0.01, 0.5),
            delta_a: u(-2.0, 2.0),
            delta_d: u(-2.0, 2.0),
            pump_rate: 0.0,
        },
        delta_b: u(-2.0, 2.0),
        zeta: CouplingStrength(u(1.0, 20.0)),
    }
}

fn sample_json(s: &Sample) -> Value {
    json!({
        "levels": s.levels,
        "drive": s.drive,
        "delta_b": s.delta_b,
        "zeta": s.zeta.value(),
    })
}

pub fn cmd_oracle_verify(cfg: &RunConfig, sink: &mut Sink, seed: u64) -> CliResult<Value> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega_b = cfg.probe.omega_b;
    let pump = cfg.drive.pump_rate;
    let mut samples: Vec<Sample> = (0..cfg.oracle.samples).map(|_| random_sample(&mut rng)).collect();

    if pump > 0.0 {
        // The closed form has no pump term; check the oracle's own physics instead.
        for s in &mut samples {
            s.drive.pump_rate = pump;
        }
        let checks: Vec<(f64, f64, f64, f64)> = samples
            .par_iter()
            .map(|s| {
                let probe = ProbeConfig { delta_b: s.delta_b, omega_b };
                let l = build_liouvillian(&s.levels, &s.drive, &probe);
                let rho = steady_state(&l)?;
                Ok((
                    residual(&s.levels, &s.drive, &probe, &rho),
                    (rho.trace() - 1.0).norm(),
                    rho.hermiticity_error(),
                    rho.min_eigenvalue(),
                ))
            })
            .collect::<Result<_, qlm_core::Error>>()?;
        let mut table = Table::new(&["sample", "residual", "trace_error", "hermiticity_error", "min_eigenvalue"]);
        for (k, c) in checks.iter().enumerate() {
            table.push(vec![Cell::Int(k as i64), Cell::Num(c.0), Cell::Num(c.1), Cell::Num(c.2), Cell::Num(c.3)]);
        }
        sink.table("oracle-verify", &table)?;
        let worst_residual = checks.iter().map(|c| c.0).fold(0.0, f64::max);
        let min_eig = checks.iter().map(|c| c.3).fold(f64::INFINITY, f64::min);
        let physical = worst_residual < 1e-10 && min_eig > -1e-12;
        let summary = sink.summary(json!({
            "mode": "pump-characterization",
            "seed": seed,
            "worst_residual": worst_residual,
            "min_eigenvalue": min_eig,
            "pass": physical,
        }))?;
        if !physical {
            return Err(CliError::Verification(format!(
                "steady states unphysical: residual {worst_residual:e}, min eigenvalue {min_eig:e}"
            )));
        }
        return Ok(summary);
    }

    let negative = cfg.oracle.negative_control;
    let deviations: Vec<(Complex64, Complex64, f64)> = samples
        .par_iter()
        .map(|s| {
            let closed = if negative {
                let mut rates = complex_relaxation(&s.levels, s.drive.delta_a, s.delta_b, s.drive.delta_d);
                rates.gamma_cb = rates.gamma_cb.conj();
                chi_ddr(s.zeta, &rates, s.drive.omega_a, s.drive.omega_d)?
            } else {
                chi_closed_form(&s.levels, &s.drive, s.delta_b, s.zeta)?
            };
            let probe = ProbeConfig { delta_b: s.delta_b, omega_b };
            let oracle = numeric_chi(&s.levels, &s.drive, &probe, s.zeta)?;
            Ok((closed, oracle, (closed - oracle).norm() / closed.norm()))
        })
        .collect::<Result<_, qlm_core::Error>>()?;
    let mut table = Table::new(&["sample", "re_chi_closed", "im_chi_closed", "re_chi_oracle", "im_chi_oracle", "relative_deviation"]);
    for (k, d) in deviations.iter().enumerate() {
        table.push(vec![
            Cell::Int(k as i64),
            Cell::Num(d.0.re),
            Cell::Num(d.0.im),
            Cell::Num(d.1.re),
            Cell::Num(d.1.im),
            Cell::Num(d.2),
        ]);
    }
    sink.table("oracle-verify", &table)?;
    let (worst, max_dev) = deviations
        .iter()
        .enumerate()
        .map(|(k, d)| (k, d.2))
        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    let pass = max_dev < cfg.oracle.tolerance;
    let summary = sink.summary(json!({
        "mode": "equivalence",
        "seed": seed,
        "samples": samples.len(),
        "max_relative_deviation": max_dev,
        "tolerance": cfg.oracle.tolerance,
        "worst_sample": sample_json(&samples[worst]),
        "pass": pass,
    }))?;
    if !pass {
        return Err(CliError::Verification(format!(
            "max relative deviation {max_dev:e} at sample {worst}: {}",
            sample_json(&samples[worst])
        )));
    }
    Ok(summary)
}
