//! The three subcommands. Each writes its artifacts into `cfg.out` and
//! returns a summary for the caller to report.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use folbm::harmonic::{
    density_ode_solve_relaxed, occupation_estimate_after, DensityProfile, DEFAULT_BURN_IN,
};
use folbm::rng::{PathRng, StreamPurpose};
use folbm::sde::{fobm_flow_1d, fobm_frame_bundle, FramePoint, SdeConfig};
use folbm::stats::TestReport;

use crate::config::{ConfigError, Construction, ModelKind, RunConfig};
use crate::verify::{self, Suite, BREAKABLE, PROPERTIES};
use crate::CliError;

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Io { path, source })
}

fn finish<W: Write>(mut w: W, path: PathBuf) -> Result<(), CliError> {
    w.flush().map_err(|source| CliError::Io { path, source })
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Io { path, source })
}

fn ensure_out(cfg: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out).map_err(|source| CliError::Io {
        path: cfg.out.clone(),
        source,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulateSummary {
    pub rows: usize,
    pub paths_csv: PathBuf,
}

/// Simulates `n_paths` paths from `start` and writes `paths.csv` and
/// `meta.txt`.
pub fn simulate(cfg: &RunConfig) -> Result<SimulateSummary, CliError> {
    let model = cfg.build_model()?;
    let x0 = cfg.start_point(model.dim());
    let sde = SdeConfig::new(cfg.dt, cfg.steps)
        .paths(cfg.n_paths)
        .seed(cfg.seed)
        .stride(cfg.stride)
        .record_noise(false);
    let ens = match cfg.construction {
        Construction::FrameBundle => fobm_frame_bundle(model.as_ref(), &FramePoint::at(model.as_ref(), &x0)?, &sde)?,
        Construction::Flow => fobm_flow_1d(model.as_ref(), &x0, &sde)?,
    };
    ensure_out(cfg)?;
    let paths_csv = cfg.out.join("paths.csv");
    let mut w = create(&cfg.out, "paths.csv")?;
    ens.write_csv(&mut w).map_err(|source| CliError::Io {
        path: paths_csv.clone(),
        source,
    })?;
    finish(w, paths_csv.clone())?;
    let meta = format!("# folbm simulate\n{}", cfg.to_text());
    write_file(&cfg.out, "meta.txt", &meta)?;
    Ok(SimulateSummary {
        rows: ens.n_paths() * ens.n_records(),
        paths_csv,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensitySummary {
    pub linf_gap: f64,
    pub sigma_min: f64,
    pub sigma_next: f64,
    pub warnings: Vec<String>,
    pub chi_square: f64,
    pub p_value: f64,
}

/// Solves the torus density equation on `grid` points, compares it with the
/// closed form, and histograms `samples` occupation samples on
/// `bins × bins` cells.
///
/// The occupation samples start from the uniform coordinate law and are
/// moved by the flow construction to the burn-in time, which the flow
/// reaches exactly in a single step.
pub fn density(cfg: &RunConfig) -> Result<DensitySummary, CliError> {
    if cfg.model != ModelKind::Torus3 {
        return Err(ConfigError::invalid("model", "the density command needs model = torus3").into());
    }
    let torus = cfg.torus()?;
    let solve = density_ode_solve_relaxed(cfg.b, cfg.grid).map_err(|e| match e {
        folbm::Error::InvalidGrid { n, reason } => ConfigError::invalid("grid", format!("{n}: {reason}")).into(),
        other => CliError::from(other),
    })?;
    let closed = DensityProfile::from_fn(cfg.b, cfg.grid, |x| torus.harmonic_density(x));
    let linf_gap = solve.profile.linf_distance(|x| torus.harmonic_density(x));

    let starts: Vec<_> = (0..cfg.samples)
        .map(|i| {
            let mut rng = PathRng::new(cfg.seed, i as u64, StreamPurpose::Initial);
            folbm::geometry::ChartPoint::new(vec![
                2.0 * std::f64::consts::PI * rng.uniform(),
                2.0 * std::f64::consts::PI * rng.uniform(),
            ])
        })
        .collect();
    let sde = SdeConfig::new(DEFAULT_BURN_IN, 1)
        .seed(cfg.seed)
        .endpoints_only()
        .record_noise(false);
    let ens = folbm::sde::fobm_flow_1d_from(&torus, &starts, &sde)?;
    let hist = occupation_estimate_after(&ens, cfg.bins, DEFAULT_BURN_IN);
    let chi = hist.chi_square_uniform()?;

    ensure_out(cfg)?;
    for (name, profile) in [("density_ode.csv", &solve.profile), ("density_closed_form.csv", &closed)] {
        let path = cfg.out.join(name);
        let mut w = create(&cfg.out, name)?;
        profile.write_csv(&mut w).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        finish(w, path)?;
    }
    let path = cfg.out.join("occupation.csv");
    let mut w = create(&cfg.out, "occupation.csv")?;
    hist.write_csv(&mut w).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    finish(w, path)?;

    let mut report = String::new();
    let _ = writeln!(report, "b = {}", cfg.b);
    let _ = writeln!(report, "grid = {}", cfg.grid);
    let _ = writeln!(report, "linf_gap = {linf_gap:e}");
    let _ = writeln!(report, "sigma_min = {:e}", solve.sigma_min);
    let _ = writeln!(report, "sigma_next = {:e}", solve.sigma_next);
    for w in &solve.warnings {
        let _ = writeln!(report, "warning = {w}");
    }
    let _ = writeln!(report, "occupation_samples = {}", hist.total);
    let _ = writeln!(report, "occupation_bins = {}", cfg.bins);
    let _ = writeln!(report, "chi_square = {:e}", chi.statistic);
    let _ = writeln!(report, "chi_square_dof = {}", chi.dof);
    let _ = writeln!(report, "chi_square_p_value = {:e}", chi.p_value);
    write_file(&cfg.out, "density_report.txt", &report)?;

    Ok(DensitySummary {
        linf_gap,
        sigma_min: solve.sigma_min,
        sigma_next: solve.sigma_next,
        warnings: solve.warnings,
        chi_square: chi.statistic,
        p_value: chi.p_value,
    })
}

/// Selection and fault injection for [`verify`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyOptions {
    pub only: Option<String>,
    pub break_property: Option<String>,
}

/// Runs the verification suite and writes `verify_report.txt`, one line per
/// property.
pub fn verify(cfg: &RunConfig, opts: &VerifyOptions) -> Result<Vec<TestReport>, CliError> {
    let names: Vec<&str> = match &opts.only {
        Some(name) if PROPERTIES.contains(&name.as_str()) => vec![name.as_str()],
        Some(name) => {
            return Err(ConfigError::invalid(
                "only",
                format!("unknown property `{name}`; expected one of {}", PROPERTIES.join(", ")),
            )
            .into())
        }
        None => PROPERTIES.to_vec(),
    };
    let mut suite = Suite::new(cfg.torus()?, cfg.kronecker()?, cfg.seed, cfg.grid);
    match opts.break_property.as_deref() {
        None => {}
        Some("qv") => suite.qv_noise_scale = verify::QV_FAULT_SCALE,
        Some("generator") => suite.generator_noise_scale = verify::GENERATOR_FAULT_SCALE,
        Some(other) => {
            return Err(ConfigError::invalid(
                "break",
                format!("cannot break `{other}`; expected one of {}", BREAKABLE.join(", ")),
            )
            .into())
        }
    }
    let mut reports = Vec::with_capacity(names.len());
    for name in names {
        reports.push(suite.run(name)?);
    }
    ensure_out(cfg)?;
    let text: String = reports.iter().map(|r| format!("{r}\n")).collect();
    write_file(&cfg.out, "verify_report.txt", &text)?;
    Ok(reports)
}
