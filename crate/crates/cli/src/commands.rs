//! Command implementations. Every command writes `<out>.csv`,
//! `<out>.report.json` and `<out>.manifest.json`.

use mlfield::balayage::{self, BalayageField};
use mlfield::io;
use mlfield::kernel;
use mlfield::model::{MomentTable, RadialModel};
use mlfield::nonradial::{NonRadialModel, Normalization};
use mlfield::sampler::{self, McmcParams, SampleConfig, SampleMode};
use mlfield::special::{self, MLContourParams, MLParams};
use mlfield::ward;
use mlfield::{Complex64, Error, Result};
use serde_json::{json, Value};

use crate::spec::RunSpec;

pub fn run(spec: &RunSpec) -> Result<()> {
    let (header, rows, report) = match spec.command.as_str() {
        "ml-eval" => ml_eval(spec)?,
        "density" => density(spec)?,
        "kernel" => kernel_dump(spec)?,
        "ward" => ward_scan(spec)?,
        "sample" => return sample(spec),
        "clt" => clt(spec)?,
        "balayage" => balayage_cmd(spec)?,
        "bulk-check" => bulk_check(spec)?,
        "figure1" => figure1(spec)?,
        "figure2" => figure2(spec)?,
        other => return Err(Error::InvalidParameter(format!("unknown command {other:?}"))),
    };
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    io::write_csv(format!("{}.csv", spec.out), &header_refs, rows)?;
    finish(spec, report)
}

fn finish(spec: &RunSpec, report: Value) -> Result<()> {
    io::write_json(&report, format!("{}.report.json", spec.out))?;
    io::write_json(&spec.manifest(), format!("{}.manifest.json", spec.out))?;
    Ok(())
}

fn model_of(spec: &RunSpec) -> Result<RadialModel> {
    RadialModel::new(spec.k, spec.charge(), spec.tau0, spec.n, spec.beta)
}

type CommandOutput = (Vec<String>, Vec<Vec<f64>>, Value);

fn ml_eval(spec: &RunSpec) -> Result<CommandOutput> {
    let x = spec
        .x
        .ok_or_else(|| Error::InvalidParameter("ml-eval needs --x".into()))?;
    if spec.tail {
        let cp = MLContourParams::default_for(spec.k);
        let contour = special::ml_tail(spec.k, spec.charge(), x, &cp)?;
        let (asymptotic, first_omitted) = special::ml_tail_asymptotic(spec.k, spec.charge(), x, 3);
        let discrepancy = contour - asymptotic;
        let report = json!({
            "kind": "ml-tail",
            "k": spec.k,
            "c": spec.charge(),
            "x": x,
            "contour": contour,
            "asymptotic_3_terms": asymptotic,
            "first_omitted_term": first_omitted,
            "discrepancy": discrepancy,
        });
        Ok((
            vec!["x".into(), "contour".into(), "asymptotic".into(), "first_omitted".into(), "discrepancy".into()],
            vec![vec![x, contour, asymptotic, first_omitted, discrepancy]],
            report,
        ))
    } else {
        let a = spec
            .ml_a
            .ok_or_else(|| Error::InvalidParameter("ml-eval needs --a (or --tail)".into()))?;
        let b = spec
            .ml_b
            .ok_or_else(|| Error::InvalidParameter("ml-eval needs --b (or --tail)".into()))?;
        let p = MLParams::new(a, b)?;
        let value = special::mittag_leffler(p, Complex64::new(x, 0.0))?;
        let report = json!({
            "kind": "mittag-leffler",
            "a": a, "b": b, "x": x,
            "value_re": value.re, "value_im": value.im,
        });
        Ok((
            vec!["a".into(), "b".into(), "x".into(), "value_re".into(), "value_im".into()],
            vec![vec![a, b, x, value.re, value.im]],
            report,
        ))
    }
}

fn density(spec: &RunSpec) -> Result<CommandOutput> {
    let model = model_of(spec)?;
    let points = spec
        .eval_points()
        .ok_or_else(|| Error::InvalidParameter("density needs --grid or --points".into()))?;
    let field = if spec.limiting {
        kernel::limiting_field(&model, &points, "limiting_density")?
    } else {
        let table = MomentTable::build(&model, model.n())?;
        kernel::finite_n_field(&table, &points, "finite_n_density")?
    };
    let rows = field
        .points
        .iter()
        .zip(&field.values)
        .map(|(p, &v)| vec![p.re, p.im, v])
        .collect();
    let report = io::field_sidecar(&field);
    Ok((vec!["re".into(), "im".into(), "value".into()], rows, report))
}

fn kernel_dump(spec: &RunSpec) -> Result<CommandOutput> {
    let model = model_of(spec)?;
    let j_max = model.n().max(64);
    let table = MomentTable::build(&model, j_max)?;
    let rows: Vec<Vec<f64>> = (0..=j_max)
        .map(|j| vec![j as f64, table.log_norm(j), table.coefficient(j)])
        .collect();
    let z = Complex64::new(spec.x.unwrap_or(1.0), 0.0);
    let diag = kernel::limiting_kernel(&model, z, z)?;
    let report = json!({
        "kind": "kernel",
        "droplet_radius": model.droplet_radius(),
        "microscopic_scale": model.microscopic_scale(),
        "l0_diag_at": z.re,
        "l0_diag": diag.re,
        "limiting_density_at": z.re,
        "limiting_density": kernel::limiting_density(&model, z),
        "table_horizon": j_max,
    });
    Ok((vec!["j".into(), "log_norm".into(), "coefficient".into()], rows, report))
}

/// Default Ward scan points: twelve points spiralling through the annulus
/// 0.3 <= |z| <= 2.
pub fn default_annulus(count: usize) -> Vec<Complex64> {
    (0..count)
        .map(|i| {
            let r = 0.3 + (2.0 - 0.3) * i as f64 / (count - 1) as f64;
            Complex64::from_polar(r, 2.3999632297286533 * i as f64)
        })
        .collect()
}

fn ward_scan(spec: &RunSpec) -> Result<CommandOutput> {
    let model = model_of(spec)?;
    let points = spec.eval_points().unwrap_or_else(|| default_annulus(12));
    let mut rows = Vec::with_capacity(points.len());
    let mut max_residual = 0f64;
    for z in points {
        let rep = ward::ward_residual(&model, z, spec.fd_step)?;
        max_residual = max_residual.max(rep.residual);
        rows.push(vec![
            z.re,
            z.im,
            rep.residual,
            rep.quad_error_estimate,
            rep.components.dbar_c.re,
            rep.components.dbar_c.im,
            rep.components.density,
            rep.components.laplacian_v0,
            rep.components.laplacian_log_density,
        ]);
    }
    let report = json!({
        "kind": "ward",
        "k": spec.k, "c": spec.charge(), "tau0": spec.tau0,
        "fd_step": spec.fd_step,
        "points": rows.len(),
        "max_residual": max_residual,
    });
    Ok((
        [
            "re", "im", "residual", "quad_error", "dbar_c_re", "dbar_c_im", "density", "lap_v0",
            "lap_log_density",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
        rows,
        report,
    ))
}

fn sample(spec: &RunSpec) -> Result<()> {
    let model = model_of(spec)?;
    let (config, report) = match spec.mode.as_str() {
        "moduli" => {
            let cfg = SampleConfig { model, mode: SampleMode::ModuliExact, seed: spec.seed };
            let config = sampler::sample_moduli(&cfg)?;
            let report = json!({
                "kind": "sample",
                "mode": "moduli-exact",
                "seed": spec.seed,
                "n": model.n(),
                "k": model.k(),
                "c": model.c(),
            });
            (config, report)
        }
        _ => {
            let params = McmcParams::new(spec.steps, spec.burn_in, spec.proposal_scale)?;
            let cfg = SampleConfig { model, mode: SampleMode::Mcmc(params), seed: spec.seed };
            let run = sampler::run_mcmc(&cfg, sampler::radial_potential(model))?;
            let report = json!({
                "kind": "sample",
                "mode": "mcmc",
                "seed": spec.seed,
                "n": model.n(),
                "k": model.k(),
                "c": model.c(),
                "beta": model.beta(),
                "steps": spec.steps,
                "burn_in": spec.burn_in,
                "acceptance_rate": run.acceptance_rate,
                "tuned_proposal_scale": run.proposal_scale,
                "records": run.records,
            });
            (run.configuration, report)
        }
    };
    io::write_configuration_csv(&config, format!("{}.csv", spec.out))?;
    finish(spec, report)
}

fn clt(spec: &RunSpec) -> Result<CommandOutput> {
    let ns = if spec.n_list.is_empty() { vec![spec.n] } else { spec.n_list.clone() };
    let models: Vec<RadialModel> = ns
        .iter()
        .map(|&n| RadialModel::new(spec.k, spec.charge(), spec.tau0, n, spec.beta))
        .collect::<Result<_>>()?;
    let experiment = sampler::clt_experiment(&models, spec.trials, spec.seed)?;
    let rows = experiment
        .reports
        .iter()
        .map(|r| {
            vec![
                r.n as f64,
                r.k as f64,
                r.c,
                r.empirical_mean,
                r.se_mean,
                r.empirical_var,
                r.se_var,
                r.exact_var_over_logn,
                r.ad_statistic,
                r.pass as u8 as f64,
            ]
        })
        .collect();
    let all_pass = experiment.reports.iter().all(|r| r.pass);
    let report = json!({
        "kind": "clt",
        "experiment": serde_json::to_value(&experiment)?,
        "pass": all_pass,
    });
    Ok((
        [
            "n", "k", "c", "empirical_mean", "se_mean", "empirical_var", "se_var",
            "exact_var_over_logn", "ad_statistic", "pass",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
        rows,
        report,
    ))
}

fn balayage_report(field: &BalayageField, expected_c: f64) -> Value {
    json!({
        "kind": "balayage",
        "inner_mass": field.inner_mass,
        "rim_mass": field.rim_mass,
        "total_mass": field.total_mass,
        "expected_c": expected_c,
        "rim_mass_toward_insertion": field.rim_mass_toward_insertion,
        "rim_mass_away": field.rim_mass_away,
        "normalization": match field.normalization {
            Normalization::PureLog => "pure-log",
            Normalization::Green => "green",
        },
        "metadata": io::field_sidecar(&field.field)["metadata"].clone(),
    })
}

fn balayage_cmd(spec: &RunSpec) -> Result<CommandOutput> {
    match spec.insertion {
        None => {
            let grid = spec
                .eval_points()
                .unwrap_or_else(|| crate::spec::GridSpec { min: -1.5, max: 1.5, count: 101 }.points());
            let field = balayage::rho_field_radial(spec.k, spec.charge(), spec.n, &grid)?;
            let rows = field_rows(&field);
            let report = balayage_report(&field, spec.charge());
            Ok((vec!["re".into(), "im".into(), "rho".into()], rows, report))
        }
        Some(a) => {
            let charge = integer_charge(spec.charge())?;
            let model = NonRadialModel::new(spec.n, charge, a)?;
            let norm = parse_normalization(&spec.normalization)?;
            let grid = spec
                .eval_points()
                .unwrap_or_else(|| crate::spec::GridSpec { min: -1.3, max: 1.3, count: 81 }.points());
            let field = balayage::rho_field_nonradial(&model, norm, &grid)?;
            let rows = field_rows(&field);
            let report = balayage_report(&field, charge as f64);
            Ok((vec!["re".into(), "im".into(), "rho".into()], rows, report))
        }
    }
}

fn field_rows(field: &BalayageField) -> Vec<Vec<f64>> {
    field
        .field
        .points
        .iter()
        .zip(&field.field.values)
        .map(|(p, &v)| vec![p.re, p.im, v])
        .collect()
}

fn integer_charge(c: f64) -> Result<u32> {
    if c.fract() != 0.0 || !(0.0..=3.0).contains(&c) {
        return Err(Error::InvalidParameter(format!(
            "off-center insertion requires an integer charge in 0..=3, got {c}"
        )));
    }
    Ok(c as u32)
}

fn parse_normalization(raw: &str) -> Result<Normalization> {
    match raw {
        "pure-log" => Ok(Normalization::PureLog),
        "green" => Ok(Normalization::Green),
        other => Err(Error::InvalidParameter(format!(
            "normalization for this command must be pure-log or green, got {other:?}"
        ))),
    }
}

fn bulk_check(spec: &RunSpec) -> Result<CommandOutput> {
    let model = model_of(spec)?;
    let points = spec.eval_points().unwrap_or_else(|| {
        let r = 0.55 * model.droplet_radius();
        (0..8)
            .map(|i| Complex64::from_polar(r, std::f64::consts::PI * i as f64 / 4.0))
            .collect()
    });
    let mut rows = Vec::with_capacity(points.len());
    let mut max_dev = 0f64;
    for zeta in points {
        let ratio = kernel::bulk_asymptotic_ratio(&model, zeta)?;
        max_dev = max_dev.max((ratio - 1.0).abs());
        rows.push(vec![zeta.re, zeta.im, ratio, (ratio - 1.0).abs()]);
    }
    let report = json!({
        "kind": "bulk-check",
        "n": model.n(), "k": model.k(), "c": model.c(),
        "max_deviation": max_dev,
    });
    Ok((
        vec!["re".into(), "im".into(), "ratio".into(), "deviation".into()],
        rows,
        report,
    ))
}

fn figure1(spec: &RunSpec) -> Result<CommandOutput> {
    let res = spec.resolution.max(2);
    let x0 = 1e-3;
    let xs: Vec<f64> = (0..res)
        .map(|i| x0 + (spec.xmax - x0) * i as f64 / (res - 1) as f64)
        .collect();
    let mut header = vec!["x".to_string()];
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut max_terms = 0usize;
    for &c in &spec.c_list {
        let model = RadialModel::new(spec.k, c, spec.tau0, 1, 1.0)?;
        let mut col = Vec::with_capacity(res);
        for &x in &xs {
            let (v, terms) = kernel::limiting_density_with_terms(&model, Complex64::new(x, 0.0));
            max_terms = max_terms.max(terms);
            col.push(v);
        }
        header.push(format!("r_c={c}"));
        columns.push(col);
    }
    header.push("laplacian_q0".to_string());
    let ref_model = RadialModel::new(spec.k, 0.0, spec.tau0, 1, 1.0)?;
    columns.push(xs.iter().map(|&x| ref_model.laplacian_q0(Complex64::new(x, 0.0))).collect());

    let rows: Vec<Vec<f64>> = (0..res)
        .map(|i| {
            let mut row = Vec::with_capacity(header.len());
            row.push(xs[i]);
            for col in &columns {
                row.push(col[i]);
            }
            row
        })
        .collect();
    let report = json!({
        "kind": "figure1",
        "k": spec.k,
        "charges": spec.c_list,
        "xmax": spec.xmax,
        "resolution": res,
        "series_truncation_j": max_terms,
    });
    Ok((header, rows, report))
}

fn figure2(spec: &RunSpec) -> Result<CommandOutput> {
    let a = spec.insertion.unwrap_or(Complex64::new(0.3, 0.0));
    let charge = integer_charge(spec.charge())?;
    let model = NonRadialModel::new(spec.n, charge, a)?;
    let grid = spec
        .eval_points()
        .unwrap_or_else(|| crate::spec::GridSpec { min: -1.3, max: 1.3, count: 81 }.points());

    let both = spec.normalization == "both";
    let mut header = vec!["re".to_string(), "im".to_string()];
    let mut fields = Vec::new();
    if both || spec.normalization == "pure-log" {
        fields.push(("rho_pure_log", balayage::rho_field_nonradial(&model, Normalization::PureLog, &grid)?));
    }
    if both || spec.normalization == "green" {
        fields.push(("rho_green", balayage::rho_field_nonradial(&model, Normalization::Green, &grid)?));
    }
    for (name, _) in &fields {
        header.push(name.to_string());
    }

    let rows: Vec<Vec<f64>> = grid
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut row = vec![p.re, p.im];
            for (_, f) in &fields {
                row.push(f.field.values[i]);
            }
            row
        })
        .collect();

    let mut report = json!({
        "kind": "figure2",
        "n": spec.n,
        "c": charge,
        "insertion_re": a.re,
        "insertion_im": a.im,
    });
    for (name, f) in &fields {
        // location of the field minimum (the depletion basin)
        let (mut min_v, mut min_z) = (f64::INFINITY, Complex64::new(0.0, 0.0));
        for (p, &v) in f.field.points.iter().zip(&f.field.values) {
            if v < min_v {
                min_v = v;
                min_z = *p;
            }
        }
        report[name.to_string()] = json!({
            "min_value": min_v,
            "min_re": min_z.re,
            "min_im": min_z.im,
            "inner_mass": f.inner_mass,
            "rim_mass": f.rim_mass,
            "total_mass": f.total_mass,
            "rim_mass_toward_insertion": f.rim_mass_toward_insertion,
            "rim_mass_away": f.rim_mass_away,
        });
    }
    Ok((header, rows, report))
}
