//! One function per subcommand, each turning parsed arguments into a table.

use std::f64::consts::LN_2;

use cdma_core::interpolation::{free_energy_terms, nishimori_check, sum_rule_check, TermsOptions};
use cdma_core::montecarlo::{
    concentration_experiment, estimate_capacity, limit_trend, universality_experiment,
    ExperimentConfig,
};
use cdma_core::replica::{
    capacity_bound_with_grid, colored_noise_bound, gaussian_closed_form, gaussian_replica,
    phase_scan, unequal_power_bound, NoiseSpectrum, PowerProfile,
};
use cdma_core::{capacity_bound, GaussianIntegrator, SpreadingDistribution, SystemParams};

use crate::args::{
    ColoredArgs, Command, Common, ConcentrateArgs, Ensemble, GridArgs, PathArgs, PowersArgs,
    ReplicaArgs, SimulateArgs, SumRuleArgs, SystemArgs, TrendArgs, UniversalityArgs,
};
use crate::error::CliError;
use crate::table::{Cell, Table};

pub const REPLICA_HEADER: &[&str] = &[
    "beta", "sigma2", "m_star", "lambda_star", "c_rs_nats", "c_rs_bits", "n_fixed_points",
];
pub const PHASE_HEADER: &[&str] = &[
    "beta", "sigma2", "root_count", "m_star", "lambda_star", "c_rs_nats", "c_rs_bits",
];
pub const SIMULATE_HEADER: &[&str] = &[
    "K", "N", "beta_actual", "sigma2", "dist", "n_matrices", "n_noise", "mi_nats_mean",
    "mi_nats_se", "ber_mean", "ber_se", "bound_nats",
];
pub const CONCENTRATE_HEADER: &[&str] =
    &["K", "var_mi", "var_f", "tail_freq_mi", "tail_freq_f", "epsilon"];
pub const UNIVERSALITY_HEADER: &[&str] = &["K", "dist", "mi_nats_mean", "mi_nats_se"];
pub const TREND_HEADER: &[&str] =
    &["K", "N", "beta_actual", "sigma2", "mi_nats_mean", "mi_nats_se"];
pub const INTERPOLATE_HEADER: &[&str] = &[
    "t", "u", "f_mean", "f_se", "dfdt_fd", "T1_raw", "T2_raw", "T1_reduced", "T2_reduced", "R",
    "R_se",
];
pub const NISHIMORI_HEADER: &[&str] = &[
    "t", "u", "res_mq", "res_mq_se", "res_X11", "res_X11_se", "res_X12", "res_X12_se",
];
pub const SUMRULE_HEADER: &[&str] = &["m", "u", "lhs", "rhs", "residual", "budget"];
pub const GAUSSIAN_HEADER: &[&str] =
    &["beta", "sigma2", "closed_form_nats", "replica_nats", "m_star", "abs_diff"];
pub const COLORED_HEADER: &[&str] =
    &["beta", "sigma2", "rho", "lambda_col", "c_upper_nats", "argmin_m"];
pub const POWERS_HEADER: &[&str] = &["beta", "sigma2", "profile", "c_upper_nats", "argmin_m"];

type Out = Result<Table, CliError>;

pub fn run(command: &Command, common: &Common) -> Out {
    let quad = &common.quad;
    let seed = common.seed;
    let bits = common.bits;
    match command {
        Command::Replica(a) => replica(a, quad),
        Command::Phase(a) => phase(a, quad),
        Command::Simulate(a) => simulate(a, quad, seed, bits),
        Command::Concentrate(a) => concentrate(a, seed),
        Command::Universality(a) => universality(a, seed, bits),
        Command::Trend(a) => trend(a, seed, bits),
        Command::Interpolate(a) => interpolate(a, quad, seed),
        Command::Nishimori(a) => nishimori(a, quad, seed),
        Command::Sumrule(a) => sumrule(a, quad, seed),
        Command::Gaussian(a) => gaussian(a, bits),
        Command::Colored(a) => colored(a, quad, bits),
        Command::Powers(a) => powers(a, quad, bits),
    }
}

fn grid_points(g: &GridArgs) -> Vec<(f64, f64)> {
    g.beta
        .0
        .iter()
        .flat_map(|&b| g.sigma2.0.iter().map(move |&s| (b, s)))
        .collect()
}

fn reported(c: f64, as_printed: bool) -> f64 {
    if as_printed {
        c - LN_2
    } else {
        c
    }
}

fn replica(a: &ReplicaArgs, quad: &GaussianIntegrator) -> Out {
    let mut table = Table::new(REPLICA_HEADER);
    for (beta, sigma2) in grid_points(&a.grid_args) {
        let params = SystemParams::asymptotic(beta, sigma2)?;
        let sol = capacity_bound_with_grid(&params, quad, a.grid)?;
        let c = reported(sol.c_upper, a.as_printed);
        table.push(vec![
            beta.into(),
            sigma2.into(),
            sol.argmin.m.into(),
            sol.argmin.lambda.into(),
            c.into(),
            (c / LN_2).into(),
            sol.fixed_points.len().into(),
        ]);
    }
    Ok(table)
}

fn phase(a: &ReplicaArgs, quad: &GaussianIntegrator) -> Out {
    let mut table = Table::new(PHASE_HEADER);
    let cells = phase_scan(&a.grid_args.beta.0, &a.grid_args.sigma2.0, quad, a.grid)?;
    for cell in cells {
        let c = reported(cell.c_upper, a.as_printed);
        table.push(vec![
            cell.beta.into(),
            cell.sigma2.into(),
            cell.root_count.into(),
            cell.m_star.into(),
            cell.lambda_star.into(),
            c.into(),
            (c / LN_2).into(),
        ]);
    }
    Ok(table)
}

fn config(
    users: usize,
    sigma2: f64,
    dist: &SpreadingDistribution,
    e: &Ensemble,
    seed: u64,
) -> Result<ExperimentConfig, CliError> {
    let params = SystemParams::with_load(users, e.beta, sigma2)?;
    let mut cfg = ExperimentConfig::new(params, e.matrices, e.noise_draws, seed).with_dist(dist.clone());
    cfg.k_max = e.k_max;
    Ok(cfg)
}

fn first_users(users: &[usize]) -> Result<usize, CliError> {
    users
        .first()
        .copied()
        .ok_or_else(|| CliError::Usage("`--K` needs at least one value".into()))
}

fn simulate(a: &SimulateArgs, quad: &GaussianIntegrator, seed: u64, bits: bool) -> Out {
    let mut table = Table::new(SIMULATE_HEADER);
    if bits {
        table.extend_header(&["mi_bits_mean", "mi_bits_se", "bound_bits"]);
    }
    for &k in &a.users {
        for &sigma2 in &a.sigma2.0 {
            let mut cfg = config(k, sigma2, &a.dist, &a.ensemble, seed)?;
            cfg.seed = cdma_core::rng::derive_seed(seed, k as u64);
            let rec = estimate_capacity(&cfg)?;
            let p = rec.params;
            let bound = capacity_bound(&SystemParams::asymptotic(p.beta(), sigma2)?, quad)?.c_upper;
            let mut row: Vec<Cell> = vec![
                k.into(),
                p.chips().unwrap_or(0).into(),
                p.beta().into(),
                sigma2.into(),
                a.dist.to_string().into(),
                cfg.n_matrices.into(),
                cfg.n_noise.into(),
                rec.capacity_mean.into(),
                rec.capacity_se.into(),
                rec.ber_mean.into(),
                rec.ber_se.into(),
                bound.into(),
            ];
            if bits {
                row.extend([
                    (rec.capacity_mean / LN_2).into(),
                    (rec.capacity_se / LN_2).into(),
                    (bound / LN_2).into(),
                ]);
            }
            table.push(row);
        }
    }
    Ok(table)
}

fn concentrate(a: &ConcentrateArgs, seed: u64) -> Out {
    let mut cfg = config(first_users(&a.users)?, a.sigma2, &a.dist, &a.ensemble, seed)?;
    cfg.epsilons = a.epsilon.clone();
    let mut table = Table::new(CONCENTRATE_HEADER);
    for r in concentration_experiment(&cfg, &a.users)? {
        table.push(vec![
            r.users.into(),
            r.var_mi.into(),
            r.var_f.into(),
            r.tail_freq_mi.into(),
            r.tail_freq_f.into(),
            r.epsilon.into(),
        ]);
    }
    Ok(table)
}

fn universality(a: &UniversalityArgs, seed: u64, bits: bool) -> Out {
    let dist = a.dists.first().cloned().unwrap_or(SpreadingDistribution::GaussianUnit);
    let cfg = config(first_users(&a.users)?, a.sigma2, &dist, &a.ensemble, seed)?;
    let mut table = Table::new(UNIVERSALITY_HEADER);
    if bits {
        table.extend_header(&["mi_bits_mean", "mi_bits_se"]);
    }
    for r in universality_experiment(&cfg, &a.users, &a.dists)? {
        let mut row: Vec<Cell> = vec![
            r.users.into(),
            r.dist.to_string().into(),
            r.capacity_mean.into(),
            r.capacity_se.into(),
        ];
        if bits {
            row.extend([(r.capacity_mean / LN_2).into(), (r.capacity_se / LN_2).into()]);
        }
        table.push(row);
    }
    Ok(table)
}

fn trend(a: &TrendArgs, seed: u64, bits: bool) -> Out {
    let cfg = config(first_users(&a.users)?, a.sigma2, &a.dist, &a.ensemble, seed)?;
    let mut table = Table::new(TREND_HEADER);
    if bits {
        table.extend_header(&["mi_bits_mean", "mi_bits_se"]);
    }
    for r in limit_trend(&cfg, &a.users)? {
        let mut row: Vec<Cell> = vec![
            r.users.into(),
            r.chips.into(),
            r.beta_actual.into(),
            r.sigma2.into(),
            r.capacity_mean.into(),
            r.capacity_se.into(),
        ];
        if bits {
            row.extend([(r.capacity_mean / LN_2).into(), (r.capacity_se / LN_2).into()]);
        }
        table.push(row);
    }
    Ok(table)
}

/// Finite parameters, the interpolation `m`, and sampling options.
fn path_setup(
    s: &SystemArgs,
    quad: &GaussianIntegrator,
    seed: u64,
) -> Result<(SystemParams, f64, TermsOptions), CliError> {
    let params = SystemParams::finite(s.users, s.chips.unwrap_or(s.users), s.sigma2)?;
    let m = match s.m {
        Some(m) => m,
        None => capacity_bound(&SystemParams::asymptotic(params.beta(), s.sigma2)?, quad)?.argmin.m,
    };
    let mut opts = TermsOptions::new(s.samples, seed);
    opts.dist = s.dist.clone();
    opts.k_max = s.k_max;
    Ok((params, m, opts))
}

// Every (t, u) point reuses the same seed, so curves along t are drawn
// with common random numbers.
fn interpolate(a: &PathArgs, quad: &GaussianIntegrator, seed: u64) -> Out {
    let (params, m, mut opts) = path_setup(&a.system, quad, seed)?;
    opts.delta = a.delta;
    let mut table = Table::new(INTERPOLATE_HEADER);
    for &u in &a.u.0 {
        for &t in &a.t.0 {
            let b = free_energy_terms(t, u, m, &params, &opts)?;
            table.push(vec![
                t.into(),
                u.into(),
                b.f.mean.into(),
                b.f.se.into(),
                b.dfdt_fd.mean.into(),
                b.t1_raw.mean.into(),
                b.t2_raw.mean.into(),
                b.t1_reduced.mean.into(),
                b.t2_reduced.mean.into(),
                b.r.mean.into(),
                b.r.se.into(),
            ]);
        }
    }
    Ok(table)
}

fn nishimori(a: &PathArgs, quad: &GaussianIntegrator, seed: u64) -> Out {
    let (params, m, opts) = path_setup(&a.system, quad, seed)?;
    let mut table = Table::new(NISHIMORI_HEADER);
    for &u in &a.u.0 {
        for &t in &a.t.0 {
            let r = nishimori_check(t, u, m, &params, &opts)?;
            table.push(vec![
                t.into(),
                u.into(),
                r.res_mq.mean.into(),
                r.res_mq.se.into(),
                r.res_x11.mean.into(),
                r.res_x11.se.into(),
                r.res_x12.mean.into(),
                r.res_x12.se.into(),
            ]);
        }
    }
    Ok(table)
}

fn sumrule(a: &SumRuleArgs, quad: &GaussianIntegrator, seed: u64) -> Out {
    let (params, m, opts) = path_setup(&a.system, quad, seed)?;
    let mut table = Table::new(SUMRULE_HEADER);
    for &u in &a.u.0 {
        let r = sum_rule_check(m, &params, u, &a.t_grid.0, &opts)?;
        table.push(vec![
            r.m.into(),
            r.u.into(),
            r.lhs.mean.into(),
            r.rhs.mean.into(),
            r.residual.mean.into(),
            r.budget.into(),
        ]);
    }
    Ok(table)
}

fn gaussian(a: &GridArgs, bits: bool) -> Out {
    let mut table = Table::new(GAUSSIAN_HEADER);
    if bits {
        table.extend_header(&["closed_form_bits", "replica_bits"]);
    }
    for (beta, sigma2) in grid_points(a) {
        let closed = gaussian_closed_form(beta, sigma2)?;
        let saddle = gaussian_replica(beta, sigma2)?;
        let mut row: Vec<Cell> = vec![
            beta.into(),
            sigma2.into(),
            closed.into(),
            saddle.value.into(),
            saddle.m.into(),
            (closed - saddle.value).abs().into(),
        ];
        if bits {
            row.extend([(closed / LN_2).into(), (saddle.value / LN_2).into()]);
        }
        table.push(row);
    }
    Ok(table)
}

fn colored(a: &ColoredArgs, quad: &GaussianIntegrator, bits: bool) -> Out {
    let mut table = Table::new(COLORED_HEADER);
    if bits {
        table.extend_header(&["c_upper_bits"]);
    }
    for (beta, sigma2) in grid_points(&a.grid_args) {
        let params = SystemParams::asymptotic(beta, sigma2)?;
        for &rho in &a.rho.0 {
            let spectrum = NoiseSpectrum::ar1(sigma2, rho)?;
            let b = colored_noise_bound(&params, &spectrum, quad, a.omega_grid)?;
            let mut row: Vec<Cell> = vec![
                beta.into(),
                sigma2.into(),
                rho.into(),
                b.lambda.into(),
                b.c_upper.into(),
                b.argmin_m.into(),
            ];
            if bits {
                row.push((b.c_upper / LN_2).into());
            }
            table.push(row);
        }
    }
    Ok(table)
}

fn powers(a: &PowersArgs, quad: &GaussianIntegrator, bits: bool) -> Out {
    let profiles = a
        .profile
        .iter()
        .map(|s| PowerProfile::parse(s).map(|p| (s.as_str(), p)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(POWERS_HEADER);
    if bits {
        table.extend_header(&["c_upper_bits"]);
    }
    for (beta, sigma2) in grid_points(&a.grid_args) {
        let params = SystemParams::asymptotic(beta, sigma2)?;
        for (label, profile) in &profiles {
            let b = unequal_power_bound(&params, profile, quad);
            let mut row: Vec<Cell> = vec![
                beta.into(),
                sigma2.into(),
                (*label).into(),
                b.c_upper.into(),
                b.argmin_m.into(),
            ];
            if bits {
                row.push((b.c_upper / LN_2).into());
            }
            table.push(row);
        }
    }
    Ok(table)
}
