//! The five subcommands: simulate, fit, select, study, oracle.

use std::path::Path;

use nhpp_core::io;
use nhpp_core::seed::derive_seed;
use nhpp_core::{
    dic_and_lpml, enumerate_models, lpml, lpml_partition_oracle, posterior_summary,
    replicate_study, sample_posterior, scenario_preset, select, simulate_nhpp, CandidateSet, Chain,
    CovariateField, Error, ModelSpec, PointPattern, QuadratureGrid, Result, Theta,
};

use crate::config::{
    model_from_one_based, prepare_out_dir, require_seed, write_manifest, CandidateConfig,
    CovariateConfig, FitConfig, OracleConfig, SelectConfig, SimulateConfig, StudyConfig,
};

fn load_covariates(configs: &[CovariateConfig], base: &Path) -> Result<Vec<CovariateField>> {
    configs.iter().map(|c| c.load(base)).collect()
}

/// Default grid: the first raster's resolution when rasters are present,
/// otherwise 100x100.
fn default_grid(fields: &[CovariateField]) -> (usize, usize) {
    fields
        .iter()
        .find_map(|f| f.as_raster().map(|r| (r.nx(), r.ny())))
        .unwrap_or((100, 100))
}

pub fn cmd_simulate(mut cfg: SimulateConfig) -> Result<()> {
    let seed = require_seed(cfg.seed)?;
    cfg.seed = Some(seed);
    let out = prepare_out_dir(&cfg.out_dir)?;

    let preset = scenario_preset(cfg.preset)?;
    let data = preset.realize(derive_seed(seed, 0))?;
    let pattern = simulate_nhpp(
        &data.intensity,
        &preset.region,
        cfg.method,
        derive_seed(seed, 1),
    )?;

    io::write_pattern_csv(&out.join("pattern.csv"), &pattern)?;
    for field in &data.fields {
        if let Some(raster) = field.as_raster() {
            io::write_raster(&out.join(format!("covariate_{}.txt", field.name())), raster)?;
        }
    }
    write_manifest(&out, "simulate", &cfg)?;
    println!(
        "simulate: preset {} seed {} -> {} events in {}",
        cfg.preset,
        seed,
        pattern.len(),
        out.display()
    );
    Ok(())
}

pub fn cmd_fit(mut cfg: FitConfig) -> Result<()> {
    let seed = require_seed(cfg.seed)?;
    cfg.seed = Some(seed);
    let out = prepare_out_dir(&cfg.out_dir)?;

    let pattern = io::read_pattern_csv(&cfg.points, cfg.region)?;
    let fields = load_covariates(&cfg.covariates, Path::new("."))?;
    let model = model_from_one_based(&cfg.model, fields.len())?;
    let (gx, gy) = cfg.grid.unwrap_or_else(|| default_grid(&fields));
    cfg.grid = Some((gx, gy));
    let grid = QuadratureGrid::new(cfg.region, gx, gy)?;
    let prior = cfg.prior.unwrap_or_default();
    let mcmc = cfg.mcmc.build(seed)?;

    let chain = sample_posterior(&pattern, &model, &fields, &prior, &mcmc, &grid)?;
    let (dic, lpml_result) = dic_and_lpml(&chain, &model, &fields, &pattern, &grid)?;

    io::write_chain_csv(&out.join("chain.csv"), &chain)?;
    if chain.n_kept() >= 10 {
        let summary = posterior_summary(&chain, 0.95)?;
        io::write_summary_json(&out.join("summary.json"), &summary)?;
    }
    io::write_event_terms_csv(&out.join("event_terms.csv"), &lpml_result)?;
    io::write_criteria_json(
        &out.join("criteria.json"),
        &model.label(&fields),
        &dic,
        &lpml_result,
        Some("event_terms.csv"),
    )?;
    write_manifest(&out, "fit", &cfg)?;
    println!(
        "fit: model '{}' on {} events -> dic {:.4}, lpml {:.4}",
        model.label(&fields),
        pattern.len(),
        dic.dic,
        lpml_result.lpml
    );
    if let Some(w) = chain.tuning_warning() {
        eprintln!("warning: {w}");
    }
    Ok(())
}

pub fn cmd_select(mut cfg: SelectConfig) -> Result<()> {
    let seed = require_seed(cfg.seed)?;
    cfg.seed = Some(seed);
    let out = prepare_out_dir(&cfg.out_dir)?;

    let pattern = io::read_pattern_csv(&cfg.points, cfg.region)?;
    let fields = load_covariates(&cfg.covariates, Path::new("."))?;
    let candidates = match &cfg.candidates {
        CandidateConfig::All {
            include_homogeneous,
        } => enumerate_models(fields.len(), *include_homogeneous)?,
        CandidateConfig::Explicit(list) => {
            let models = list
                .iter()
                .map(|idx| model_from_one_based(idx, fields.len()))
                .collect::<Result<Vec<ModelSpec>>>()?;
            CandidateSet::new(models)?
        }
    };
    let (gx, gy) = cfg.grid.unwrap_or_else(|| default_grid(&fields));
    cfg.grid = Some((gx, gy));
    let grid = QuadratureGrid::new(cfg.region, gx, gy)?;
    let prior = cfg.prior.unwrap_or_default();
    let mcmc = cfg.mcmc.build(seed)?;

    let report = select(&pattern, &fields, &candidates, &prior, &mcmc, &grid)?;
    io::write_selection_csv(&out.join("selection.csv"), &report)?;
    io::write_selection_json(&out.join("selection.json"), &report)?;
    write_manifest(&out, "select", &cfg)?;

    match (report.winner_dic, report.winner_lpml) {
        (Some(d), Some(l)) => println!(
            "select: {} candidates -> smallest DIC '{}', largest LPML '{}'",
            report.rows.len(),
            report.rows[d].label,
            report.rows[l].label
        ),
        _ => println!("select: every candidate failed"),
    }
    Ok(())
}

pub fn cmd_study(mut cfg: StudyConfig) -> Result<()> {
    let seed = require_seed(cfg.seed)?;
    cfg.seed = Some(seed);
    let out = prepare_out_dir(&cfg.out_dir)?;

    let preset = scenario_preset(cfg.preset)?;
    let mcmc = cfg.mcmc.build(seed)?;
    let report = replicate_study(&preset, cfg.replicates, seed, &mcmc, cfg.method)?;

    io::write_study_csv(&out.join("study.csv"), &report)?;
    io::write_study_diffs_csv(&out.join("study_diffs.csv"), &report)?;
    io::write_study_json(&out.join("study.json"), &report)?;
    write_manifest(&out, "study", &cfg)?;
    println!(
        "study: preset {} with {} replicates ({} excluded) -> {}",
        cfg.preset,
        report.n_replicates,
        report.n_excluded,
        out.display()
    );
    Ok(())
}

fn oracle_rows(
    chain: &Chain,
    model: &ModelSpec,
    fields: &[CovariateField],
    pattern: &PointPattern,
    grid: &QuadratureGrid,
    schedule: &[usize],
) -> Result<Vec<(usize, f64, f64, f64)>> {
    let target = lpml(chain, model, fields, pattern, grid)?.lpml;
    let mut rows = Vec::with_capacity(schedule.len());
    for &n in schedule {
        let partition = QuadratureGrid::new(pattern.region(), n, n)?;
        let value = lpml_partition_oracle(chain, model, fields, pattern, &partition)?;
        rows.push((n, value, target, (value - target).abs()));
    }
    Ok(rows)
}

pub fn cmd_oracle(mut cfg: OracleConfig) -> Result<()> {
    let out = prepare_out_dir(&cfg.out_dir)?;

    let rows = if cfg.fixture {
        // Two-sample homogeneous fixture: chain {lambda0=1, lambda0=2},
        // one event at the center of the unit square.
        let region = nhpp_core::Region::unit_square();
        let pattern = PointPattern::new(vec![nhpp_core::Point::new(0.5, 0.5)], region)?;
        let chain = Chain::from_samples(vec![Theta::new(1.0, vec![])?, Theta::new(2.0, vec![])?])?;
        let (gx, gy) = cfg.grid.unwrap_or((100, 100));
        cfg.grid = Some((gx, gy));
        let grid = QuadratureGrid::new(region, gx, gy)?;
        oracle_rows(
            &chain,
            &ModelSpec::homogeneous(),
            &[],
            &pattern,
            &grid,
            &cfg.schedule,
        )?
    } else {
        let seed = require_seed(cfg.seed)?;
        cfg.seed = Some(seed);
        let points = cfg
            .points
            .clone()
            .ok_or_else(|| Error::Config("oracle needs points or fixture=true".into()))?;
        let pattern = io::read_pattern_csv(&points, cfg.region)?;
        let fields = load_covariates(&cfg.covariates, Path::new("."))?;
        let model = model_from_one_based(&cfg.model, fields.len())?;
        let (gx, gy) = cfg.grid.unwrap_or_else(|| default_grid(&fields));
        cfg.grid = Some((gx, gy));
        let grid = QuadratureGrid::new(cfg.region, gx, gy)?;
        let prior = cfg.prior.unwrap_or_default();
        let mcmc = cfg.mcmc.build(seed)?;
        let chain = sample_posterior(&pattern, &model, &fields, &prior, &mcmc, &grid)?;
        oracle_rows(&chain, &model, &fields, &pattern, &grid, &cfg.schedule)?
    };

    let path = out.join("oracle.csv");
    {
        use std::io::Write;
        let file = std::fs::File::create(&path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        let mut w = std::io::BufWriter::new(file);
        writeln!(w, "partition,oracle,lpml,abs_diff").map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        for (n, oracle, target, diff) in &rows {
            writeln!(w, "{n},{oracle},{target},{diff}").map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
        }
    }
    write_manifest(&out, "oracle", &cfg)?;
    if let Some((n, oracle, target, diff)) = rows.last() {
        println!("oracle: finest partition {n}x{n} -> oracle {oracle:.6} vs lpml {target:.6} (|diff| {diff:.2e})");
    }
    Ok(())
}
