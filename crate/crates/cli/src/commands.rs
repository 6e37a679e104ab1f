//! One function per subcommand; each returns the table to emit.

use std::f64::consts::PI;
use std::path::PathBuf;

use siphon_core::acceptance;
use siphon_core::calibration::{fit_efficiencies_with, fit_overlap, scan_loss_explanations};
use siphon_core::elements::{db_to_loss_fraction, phase_bound_min_phi};
use siphon_core::experiments::{
    dominant_period, exceeds_visibility_threshold, fringe_visibility, hom_delay_scan, single_photon_fringe,
    two_photon_fringe, visibility_vs_pair_probability, HomExperiment,
};
use siphon_core::source::{count_rates, DetectorModel, SqueezedSource};

use crate::config::{linspace, RunConfig};
use crate::error::CliError;
use crate::input::{read_counts, read_visibilities};
use crate::output::{Cell, Table};

/// Puts the run metadata (command, config hash, seed, truncation deficit)
/// ahead of the command's own entries.
fn finish(mut table: Table, command: &str, config: &RunConfig, deficit: f64) -> Table {
    let mut head = Table::new(&[]);
    head.meta("command", command)
        .meta("version", env!("CARGO_PKG_VERSION"))
        .meta("config_sha256", config.digest())
        .meta("seed", config.seed().to_string())
        .meta("truncation_deficit", deficit);
    head.metadata.append(&mut table.metadata);
    table.metadata = head.metadata;
    table
}

fn experiment(config: &RunConfig) -> Result<HomExperiment, CliError> {
    Ok(HomExperiment::new(
        config.losses()?,
        config.mmi()?,
        config.n_max_pairs()?,
    )?)
}

pub fn hom_dip(config: &RunConfig) -> Result<Table, CliError> {
    let exp = experiment(config)?;
    let overlap = config.overlap()?;
    let xi = config.xi_sq()?.sqrt();
    let d = &config.delay;
    let taus_fs = linspace("delay", d.start_fs, d.stop_fs, d.points)?;
    let taus: Vec<f64> = taus_fs.iter().map(|t| t * 1e-15).collect();
    let scan = hom_delay_scan(&exp, &taus, xi, &overlap)?;
    let p = scan.probabilities;

    let mut t = Table::new(&["tau_fs", "overlap", "coincidence", "normalized"]);
    t.meta("xi_sq", xi * xi)
        .meta("alpha_ov", overlap.alpha_ov)
        .meta("p_i", p.p_i)
        .meta("p_d", p.p_d)
        .meta("visibility", p.mixture_visibility(overlap.alpha_ov)?)
        .meta("dip_fwhm_fs", overlap.dip_fwhm() * 1e15);
    let base = scan.baseline();
    for (tau, point) in taus_fs.iter().zip(&scan.points) {
        t.push(vec![
            (*tau).into(),
            point.overlap.into(),
            point.coincidence.into(),
            (point.coincidence / base).into(),
        ]);
    }
    Ok(finish(t, "hom-dip", config, p.truncation_deficit))
}

pub fn vis_vs_power(config: &RunConfig) -> Result<Table, CliError> {
    let exp = experiment(config)?;
    let alpha = config.overlap()?.alpha_ov;
    let grid = config.power_grid()?;
    let xis: Vec<f64> = grid.iter().map(|q| q.sqrt()).collect();
    let curve = visibility_vs_pair_probability(&exp, &xis, alpha)?;
    let deficit =
        SqueezedSource::from_xi_sq(*grid.last().expect("non-empty grid"), exp.n_max_pairs())?.truncation_deficit();

    let mut t = Table::new(&["xi", "pair_probability", "visibility"]);
    t.meta("alpha_ov", alpha)
        .meta("nominal_visibility", exp.nominal_visibility(alpha)?);
    for point in &curve {
        t.push(vec![
            point.xi.into(),
            point.pair_probability.into(),
            point.visibility.into(),
        ]);
    }
    Ok(finish(t, "vis-vs-power", config, deficit))
}

pub fn fringe(config: &RunConfig) -> Result<Table, CliError> {
    let mmi = config.mmi()?;
    let cal = config.calibration()?;
    let alpha = config.overlap()?.alpha_ov;
    let f = &config.fringe;
    let volts = linspace("fringe", f.voltage_start, f.voltage_stop, f.points)?;
    let single = single_photon_fringe(&volts, &cal, &mmi)?;
    let double = two_photon_fringe(&volts, &cal, &mmi, alpha)?;
    let phis: Vec<f64> = single.iter().map(|p| p.phi).collect();
    let ys: Vec<f64> = single.iter().map(|p| p.probability).collect();
    let yd: Vec<f64> = double.iter().map(|p| p.probability).collect();
    let v1 = fringe_visibility(&ys)?;
    let v2 = fringe_visibility(&yd)?;
    let p1 = dominant_period(&phis, &ys)?;
    let p2 = dominant_period(&phis, &yd)?;

    let mut t = Table::new(&["voltage", "phi", "single_photon", "two_photon"]);
    t.meta("alpha_ov", alpha)
        .meta("single_photon_visibility", v1)
        .meta("two_photon_visibility", v2)
        .meta("exceeds_threshold", exceeds_visibility_threshold(v2))
        .meta("single_photon_period", p1)
        .meta("two_photon_period", p2)
        .meta("period_ratio", p1 / p2);
    for ((v, s), d) in volts.iter().zip(&single).zip(&double) {
        t.push(vec![
            (*v).into(),
            s.phi.into(),
            s.probability.into(),
            d.probability.into(),
        ]);
    }
    Ok(finish(t, "fringe", config, 0.0))
}

pub fn bound(config: &RunConfig) -> Result<Table, CliError> {
    let mut t = Table::new(&["loss_db", "alpha_loss", "phi_min", "phi_max", "max_phase_offset"]);
    for &db in &config.bound.loss_db {
        if !(db >= 0.0 && db.is_finite()) {
            return Err(CliError::ConfigValue {
                field: "bound.loss_db".into(),
                message: format!("loss must be a finite number of dB >= 0, got {db}"),
            });
        }
        let alpha = db_to_loss_fraction(db);
        let lo = phase_bound_min_phi(alpha)?;
        t.push(vec![
            db.into(),
            alpha.into(),
            lo.into(),
            (2.0 * PI - lo).into(),
            (PI - lo).into(),
        ]);
    }
    Ok(finish(t, "bound", config, 0.0))
}

fn fit_input(config: &RunConfig, command: &str) -> Result<PathBuf, CliError> {
    config.input_path().ok_or_else(|| CliError::ConfigValue {
        field: "fit.input".into(),
        message: format!("{command} needs an input CSV (set fit.input or pass --input)"),
    })
}

pub fn fit_counts(config: &RunConfig) -> Result<Table, CliError> {
    let records = read_counts(&fit_input(config, "fit-counts")?)?;
    let f = config.fit.repetition_rate;
    let fit = fit_efficiencies_with(&records, f, &config.fit_options())?;
    let det = DetectorModel::new(fit.eta1, fit.eta2)?;

    let mut t = Table::new(&[
        "intensity",
        "xi_sq",
        "c1",
        "c2",
        "cc",
        "c1_model",
        "c2_model",
        "cc_model",
    ]);
    t.meta("repetition_rate", f)
        .meta("eta1", fit.eta1)
        .meta("eta2", fit.eta2)
        .meta("residual", fit.residual)
        .meta("converged", fit.converged)
        .meta("iterations", fit.iterations)
        .meta("condition", fit.condition);
    for (r, q) in records.iter().zip(&fit.xi_sq_per_power) {
        let m = count_rates(q.sqrt(), &det, f)?;
        t.push(vec![
            r.intensity.into(),
            (*q).into(),
            r.c1.into(),
            r.c2.into(),
            r.cc.into(),
            m.c1.into(),
            m.c2.into(),
            m.cc.into(),
        ]);
    }
    Ok(finish(t, "fit-counts", config, 0.0))
}

pub fn fit_visibility(config: &RunConfig) -> Result<Table, CliError> {
    let records = read_visibilities(&fit_input(config, "fit-visibility")?)?;
    let exp = experiment(config)?;
    let fit = fit_overlap(&records, &exp, config.seed())?;
    let max_xi_sq = records.iter().map(|r| r.xi_sq).fold(0.0, f64::max);
    let deficit = SqueezedSource::from_xi_sq(max_xi_sq, exp.n_max_pairs())?.truncation_deficit();

    let mut t = Table::new(&["xi_sq", "v", "v_model", "unit_visibility"]);
    t.meta("alpha_ov", fit.alpha_ov)
        .meta("v_nominal", fit.v_nominal)
        .meta("v_nominal_stderr", fit.v_nominal_stderr)
        .meta("residual", fit.residual);
    if let Ok(e) = scan_loss_explanations(fit.v_nominal, fit.alpha_ov) {
        t.meta("explaining_loss_db", e.loss_db).meta("explaining_phi", e.phi);
    }
    for (r, u) in records.iter().zip(&fit.unit_visibility) {
        t.push(vec![r.xi_sq.into(), r.v.into(), (fit.alpha_ov * u).into(), (*u).into()]);
    }
    Ok(finish(t, "fit-visibility", config, deficit))
}

/// The table of results and the number of failed criteria.
pub fn selftest(config: &RunConfig, only: Option<usize>) -> Result<(Table, usize), CliError> {
    if let Some(n) = only {
        if !(1..=acceptance::CRITERIA).contains(&n) {
            return Err(CliError::ConfigValue {
                field: "criterion".into(),
                message: format!("criteria are numbered 1 to {}", acceptance::CRITERIA),
            });
        }
    }
    let results = match only {
        Some(n) => vec![acceptance::run(n)],
        None => acceptance::run_all(),
    };
    let mut t = Table::new(&["criterion", "title", "passed", "elapsed_s", "detail"]);
    for r in &results {
        eprintln!("{r}");
        t.push(vec![
            r.number.into(),
            r.title.into(),
            r.passed.into(),
            r.elapsed.as_secs_f64().into(),
            Cell::Text(r.detail.clone()),
        ]);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    t.meta("failed", failed);
    Ok((finish(t, "selftest", config, 0.0), failed))
}
