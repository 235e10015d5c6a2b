//! One runner per subcommand. Each writes its files under the output
//! directory and returns the paths it wrote.

use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;
use skewspec_core::bounds::{eigenpair_distance_bound, sigma_plus_bound, PhaseGrid, SpectrumBound};
use skewspec_core::gaps::{
    certify_gap, empirical_gaps, gap_upper_bound, largest_empirical_gap, profile_over_hull,
    profile_phase_set, uniform_grid, DistanceProfile,
};
use skewspec_core::io::fmt_real;
use skewspec_core::lyapunov::lyapunov_curve;
use skewspec_core::{build_restriction, EigenPair, PotentialSpec};

use crate::config::{Command, ExperimentConfig, Format, IntervalSpec};
use crate::error::{CliError, CliResult};
use crate::output::{OutDir, Provenance};

pub fn run(config: &ExperimentConfig, out: &OutDir) -> CliResult<Vec<PathBuf>> {
    let mut written = vec![out.write_text("config.toml", &config.to_toml())?];
    let spec = config.potential_spec()?;
    let more = match config.command {
        Command::Eig => run_eig(config, &spec, out)?,
        Command::SpectrumScan => run_spectrum_scan(config, &spec, out)?,
        Command::Sigma => run_sigma(config, &spec, out)?,
        Command::GapProfile => run_gap_profile(config, &spec, out)?,
        Command::GapBound => run_gap_bound(config, &spec, out)?,
        Command::CertifyGap => run_certify_gap(config, &spec, out)?,
        Command::Lyap => run_lyap(config, &spec, out)?,
    };
    written.extend(more);
    Ok(written)
}

fn core<T>(context: impl Into<String>, r: skewspec_core::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::from_core(context, e))
}

fn write_eigenvalues(dir: &OutDir, format: Format, values: &[f64]) -> CliResult<PathBuf> {
    match format {
        Format::Csv => dir.write_with("eigenvalues.csv", |w| {
            writeln!(w, "j,lambda")?;
            for (j, v) in values.iter().enumerate() {
                writeln!(w, "{j},{}", fmt_real(*v))?;
            }
            Ok(())
        }),
        Format::Json => {
            let items: Vec<_> = values
                .iter()
                .enumerate()
                .map(|(j, v)| json!({ "j": j, "lambda": v }))
                .collect();
            dir.write_json("eigenvalues.json", &items)
        }
    }
}

/// Eigenvalue indices (0-based) for a named region: the anchor plus
/// `neighbors` on each side, clipped to the spectrum.
pub fn region_indices(region: &str, n: usize, neighbors: usize) -> Vec<usize> {
    let anchor = match region {
        "left" => 0,
        "right" => n - 1,
        _ => n.div_ceil(2) - 1,
    };
    let lo = anchor.saturating_sub(neighbors);
    let hi = (anchor + neighbors).min(n - 1);
    (lo..=hi).collect()
}

#[derive(Serialize)]
struct SelectedPair {
    region: String,
    j: usize,
    value: f64,
    boundary_weight: f64,
    residual: f64,
    bracket_width: f64,
    distance_bound: f64,
}

fn run_eig(cfg: &ExperimentConfig, spec: &PotentialSpec, out: &OutDir) -> CliResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut summary = Vec::new();
    for &n in &cfg.sizes {
        let dir = out.sub(n)?;
        let op = core("building H_N", build_restriction(spec, 0, n))?;
        let values = op.all_eigenvalues();
        written.push(write_eigenvalues(&dir, cfg.format, &values)?);

        let mut chosen: Vec<(String, usize)> = Vec::new();
        for r in &cfg.eig.regions {
            for j in region_indices(r, n, cfg.eig.neighbors) {
                if !chosen.iter().any(|(_, k)| *k == j) {
                    chosen.push((r.clone(), j));
                }
            }
        }
        let pairs: Vec<(String, EigenPair)> = chosen
            .into_iter()
            .map(|(r, j)| {
                core(format!("eigenpair {j} at N = {n}"), op.eigenpair(j)).map(|p| (r, p))
            })
            .collect::<CliResult<_>>()?;
        written.push(dir.write_with("eigenvectors.csv", |w| {
            write!(w, "n")?;
            for (_, p) in &pairs {
                write!(w, ",xi_{}", p.index)?;
            }
            writeln!(w)?;
            for site in 0..n {
                write!(w, "{site}")?;
                for (_, p) in &pairs {
                    write!(w, ",{}", fmt_real(p.vector[site]))?;
                }
                writeln!(w)?;
            }
            Ok(())
        })?);
        let selected: Vec<SelectedPair> = pairs
            .iter()
            .map(|(r, p)| SelectedPair {
                region: r.clone(),
                j: p.index,
                value: p.value,
                boundary_weight: p.boundary_weight,
                residual: p.residual,
                bracket_width: p.bracket_width,
                distance_bound: eigenpair_distance_bound(p),
            })
            .collect();
        summary.push(json!({ "N": n, "selected": selected }));
    }
    written.push(out.write_json(
        "eig.json",
        &json!({ "provenance": Provenance::new(cfg), "results": summary }),
    )?);
    Ok(written)
}

fn run_spectrum_scan(
    cfg: &ExperimentConfig,
    spec: &PotentialSpec,
    out: &OutDir,
) -> CliResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut summary = Vec::new();
    for &n in &cfg.sizes {
        let dir = out.sub(n)?;
        let op = core("building H_N", build_restriction(spec, 0, n))?;
        let values = op.all_eigenvalues();
        written.push(write_eigenvalues(&dir, cfg.format, &values)?);
        let (lo, hi) = (values[0], values[n - 1]);
        let gaps = empirical_gaps(&values, lo, hi, cfg.gap.scan_threshold);
        let largest = largest_empirical_gap(&values);
        summary.push(json!({
            "N": n,
            "lambda_min": lo,
            "lambda_max": hi,
            "largest_gap": largest.map(|g| json!({ "lo": g.lo, "hi": g.hi, "width": g.width() })),
            "gaps_above_threshold": gaps.iter().map(|g| json!({ "lo": g.lo, "hi": g.hi, "width": g.width() })).collect::<Vec<_>>(),
        }));
    }
    written.push(out.write_json(
        "scan_summary.json",
        &json!({ "provenance": Provenance::new(cfg), "results": summary }),
    )?);
    Ok(written)
}

fn sigma_for(cfg: &ExperimentConfig, spec: &PotentialSpec, n: usize) -> CliResult<SpectrumBound> {
    core(
        format!("sigma bound at N = {n}"),
        sigma_plus_bound(spec, n, &cfg.sigma_options()),
    )
}

fn run_sigma(
    cfg: &ExperimentConfig,
    spec: &PotentialSpec,
    out: &OutDir,
) -> CliResult<Vec<PathBuf>> {
    let results = cfg
        .sizes
        .iter()
        .map(|&n| sigma_for(cfg, spec, n))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(vec![out.write_json(
        "sigma.json",
        &json!({ "provenance": Provenance::new(cfg), "results": results }),
    )?])
}

fn profile_for(
    cfg: &ExperimentConfig,
    spec: &PotentialSpec,
    bound: &SpectrumBound,
) -> CliResult<DistanceProfile> {
    let n = bound.n;
    let phases = core(
        "phase set",
        profile_phase_set(spec, Some(bound), cfg.grids.phase_nx, cfg.grids.phase_ny),
    )?;
    core(
        format!("distance profile at N = {n}"),
        profile_over_hull(spec, bound, &phases, cfg.grids.nt),
    )
}

fn write_profile(
    cfg: &ExperimentConfig,
    dir: &OutDir,
    p: &DistanceProfile,
) -> CliResult<Vec<PathBuf>> {
    let profile = match cfg.format {
        Format::Csv => dir.write_with("profile.csv", |w| p.write_csv(w))?,
        Format::Json => dir.write_json("profile.json", p)?,
    };
    let phases = dir.write_with("phases.csv", |w| {
        writeln!(w, "phase_index,x,y")?;
        for (i, ph) in p.phase_set.iter().enumerate() {
            writeln!(w, "{i},{},{}", fmt_real(ph.x()), fmt_real(ph.y()))?;
        }
        Ok(())
    })?;
    Ok(vec![profile, phases])
}

fn profile_summary(p: &DistanceProfile) -> serde_json::Value {
    let (i, d) = p
        .d_values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bd), (i, &d)| {
            if d > bd {
                (i, d)
            } else {
                (bi, bd)
            }
        });
    json!({
        "N": p.n,
        "t_points": p.t_grid.len(),
        "t_range": [p.t_grid[0], p.t_grid[p.t_grid.len() - 1]],
        "step": p.step(),
        "phases": p.phase_set.len(),
        "max_d": d,
        "t_at_max": p.t_grid[i],
        "lipschitz_excess": p.lipschitz_excess(),
        "max_certification_error": p.max_certification_error,
    })
}

fn run_gap_profile(
    cfg: &ExperimentConfig,
    spec: &PotentialSpec,
    out: &OutDir,
) -> CliResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut results = Vec::new();
    for &n in &cfg.sizes {
        let bound = sigma_for(cfg, spec, n)?;
        let p = profile_for(cfg, spec, &bound)?;
        written.extend(write_profile(cfg, &out.sub(n)?, &p)?);
        results.push(json!({ "sigma": bound, "profile": profile_summary(&p) }));
    }
    written.push(out.write_json(
        "gap_profile.json",
        &json!({ "provenance": Provenance::new(cfg), "results": results }),
    )?);
    Ok(written)
}

fn run_gap_bound(
    cfg: &ExperimentConfig,
    spec: &PotentialSpec,
    out: &OutDir,
) -> CliResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut results = Vec::new();
    for &n in &cfg.sizes {
        let bound = sigma_for(cfg, spec, n)?;
        let p = profile_for(cfg, spec, &bound)?;
        let gap = core(format!("gap bound at N = {n}"), gap_upper_bound(&p, &bound))?;
        let values = core("building H_N", build_restriction(spec, 0, n))?.all_eigenvalues();
        let empirical = largest_empirical_gap(&values);
        written.extend(write_profile(cfg, &out.sub(n)?, &p)?);
        results.push(json!({
            "sigma": bound,
            "profile": profile_summary(&p),
            "gap": gap,
            "largest_empirical_gap": empirical.map(|g| json!({ "lo": g.lo, "hi": g.hi, "width": g.width() })),
        }));
    }
    written.push(out.write_json(
        "gap_bound.json",
        &json!({ "provenance": Provenance::new(cfg), "results": results }),
    )?);
    Ok(written)
}

fn run_certify_gap(
    cfg: &ExperimentConfig,
    spec: &PotentialSpec,
    out: &OutDir,
) -> CliResult<Vec<PathBuf>> {
    let grid = PhaseGrid::new(cfg.grids.cert_nx, cfg.grids.cert_ny)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut results = Vec::new();
    for &n in &cfg.sizes {
        let (interval, source) = match &cfg.gap.interval {
            IntervalSpec::Explicit([lo, hi]) => ((*lo, *hi), json!("explicit")),
            IntervalSpec::Named(_) => {
                let values = core("building H_N", build_restriction(spec, 0, n))?.all_eigenvalues();
                let g = largest_empirical_gap(&values)
                    .ok_or_else(|| CliError::Config(format!("N = {n} has no gap to certify")))?;
                let third = g.width() / 3.0;
                (
                    (g.lo + third, g.hi - third),
                    json!({ "widest_gap": { "lo": g.lo, "hi": g.hi }, "part": "middle third" }),
                )
            }
        };
        let cert = core(
            format!("gap certificate at N = {n}"),
            certify_gap(spec, n, interval, grid),
        )?;
        results.push(json!({ "certificate": cert, "certified": cert.certified(), "interval_source": source }));
    }
    Ok(vec![out.write_json(
        "certify_gap.json",
        &json!({ "provenance": Provenance::new(cfg), "results": results }),
    )?])
}

fn run_lyap(cfg: &ExperimentConfig, spec: &PotentialSpec, out: &OutDir) -> CliResult<Vec<PathBuf>> {
    let energies = core(
        "energy grid",
        uniform_grid(cfg.energy.lo, cfg.energy.hi, cfg.grids.ne),
    )?;
    let mut written = Vec::new();
    let mut results = Vec::new();
    for &n in &cfg.sizes {
        let curve = core(
            format!("Lyapunov curve at N = {n}"),
            lyapunov_curve(spec, &energies, n, cfg.lyap.num_phases, cfg.seed),
        )?;
        let dir = out.sub(n)?;
        written.push(match cfg.format {
            Format::Csv => dir.write_with("lyapunov.csv", |w| curve.write_csv(w))?,
            Format::Json => dir.write_json("lyapunov.json", &curve)?,
        });
        results.push(json!({
            "N": n,
            "num_phases": curve.num_phases,
            "seed": curve.seed,
            "family": curve.family,
            "phases": curve.phases,
            "iid_seeds": curve.iid_seeds,
            "phase_averaged": curve.num_phases > 1,
            "minimum": curve.minimum().map(|(e, l)| json!({ "E": e, "L": l })),
        }));
    }
    written.push(out.write_json(
        "lyapunov.json",
        &json!({ "provenance": Provenance::new(cfg), "results": results }),
    )?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regions_clip() {
        assert_eq!(region_indices("left", 10, 2), vec![0, 1, 2]);
        assert_eq!(region_indices("center", 10, 1), vec![3, 4, 5]);
        assert_eq!(region_indices("right", 10, 2), vec![7, 8, 9]);
        assert_eq!(region_indices("center", 1, 3), vec![0]);
    }
}
