//! Subcommand implementations: merge flags into the configuration, run the
//! library, and hand a [`Report`] to the writer.

use std::path::Path;

use review_pricing::catalan::CatalanTable;
use review_pricing::dp::{self, DpConfig, DpMethod};
use review_pricing::extended::{self, ExtendedConfig, HorizonSeed, MeanTable, QualityDistribution, DEFAULT_MAX_HORIZON};
use review_pricing::figures::{self, FigurePreset};
use review_pricing::learning;
use review_pricing::model::{detect_lattice, ModelParams, PricingMode};
use review_pricing::series;
use review_pricing::simulator::{self, Market, Policy, SimConfig, TrueQuality};
use serde_json::json;

use crate::config::{Format, ModeKind, PolicyKind, QualityKind, RunConfig, SolverBlock};
use crate::error::CliError;
use crate::output::{num, Report, Table};
use crate::{BinaryArgs, Cli, Command, ExtendedArgs, MethodArg, ModeArgs};

pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cli.format.is_some() {
        cfg.output.format = cli.format;
    }
    if cli.output.is_some() {
        cfg.output.path = cli.output.clone();
    }
    merge(&mut cfg, &cli.command)?;
    if cli.dump_config {
        print!("{}", cfg.dump()?);
        return Ok(());
    }
    cfg.solver.check()?;
    if let Command::ReproduceFigures { out, .. } = &cli.command {
        return reproduce_figures(&cfg, out);
    }
    let report = execute(&cfg, &cli.command)?;
    report.emit(cfg.output.format, cfg.output.path.as_deref())
}

fn set<T: Copy>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn merge_binary(cfg: &mut RunConfig, args: &BinaryArgs) -> Result<(), CliError> {
    let m = cfg.binary_mut()?;
    set(&mut m.p, args.p);
    set(&mut m.q, args.q);
    set(&mut m.c, args.c);
    set(&mut m.delta, args.delta);
    set(&mut m.x0, args.x0);
    Ok(())
}

fn merge_extended(cfg: &mut RunConfig, args: &ExtendedArgs) -> Result<(), CliError> {
    let m = cfg.extended_mut()?;
    set(&mut m.lo, args.lo);
    set(&mut m.hi, args.hi);
    set(&mut m.points, args.grid_points);
    set(&mut m.c, args.c);
    set(&mut m.delta, args.delta);
    Ok(())
}

fn merge_mode(solver: &mut SolverBlock, args: &ModeArgs) {
    set(&mut solver.mode, args.mode);
    if args.price.is_some() {
        solver.price = args.price;
    }
}

fn merge(cfg: &mut RunConfig, command: &Command) -> Result<(), CliError> {
    match command {
        Command::SolveDp {
            model,
            mode,
            seed_epsilon,
            method,
            max_denominator,
        } => {
            merge_binary(cfg, model)?;
            merge_mode(&mut cfg.solver, mode);
            set(&mut cfg.solver.dp_seed_epsilon, *seed_epsilon);
            set(&mut cfg.solver.max_denominator, *max_denominator);
            if let Some(m) = method {
                cfg.solver.dp_method = match m {
                    MethodArg::BackwardInduction => DpMethod::BackwardInduction,
                    MethodArg::InverseRecursion => DpMethod::InverseRecursion,
                };
            }
        }
        Command::SolveSeries { model, mode, epsilon } => {
            merge_binary(cfg, model)?;
            merge_mode(&mut cfg.solver, mode);
            set(&mut cfg.solver.epsilon, *epsilon);
        }
        Command::StaticSweep { model, epsilon, points } => {
            merge_binary(cfg, model)?;
            set(&mut cfg.solver.epsilon, *epsilon);
            set(&mut cfg.solver.price_points, *points);
        }
        Command::Catalan { .. } => {}
        Command::Learning {
            model,
            x_stop,
            price,
            epsilon,
            ..
        } => {
            merge_binary(cfg, model)?;
            set(&mut cfg.solver.epsilon, *epsilon);
            if price.is_some() {
                cfg.solver.price = *price;
            }
            if x_stop.is_some() {
                cfg.simulation.x_stop = *x_stop;
            }
        }
        Command::ExtendedSolve {
            market,
            mode,
            horizon,
            raw_seed,
        } => {
            merge_extended(cfg, market)?;
            merge_mode(&mut cfg.solver, mode);
            set(&mut cfg.solver.horizon, *horizon);
            if *raw_seed {
                cfg.solver.horizon_seed = HorizonSeed::Raw;
            }
        }
        Command::ExtendedPriceSweep { market, horizon, points } => {
            merge_extended(cfg, market)?;
            set(&mut cfg.solver.horizon, *horizon);
            set(&mut cfg.solver.price_points, *points);
        }
        Command::ExtendedCostSweep {
            market,
            horizon,
            points,
            costs,
        } => {
            merge_extended(cfg, market)?;
            set(&mut cfg.solver.horizon, *horizon);
            set(&mut cfg.solver.price_points, *points);
            set(&mut cfg.solver.cost_points, *costs);
        }
        Command::Simulate {
            model,
            extended,
            lo,
            hi,
            grid_points,
            policy,
            price,
            x_stop,
            true_quality,
            quality,
            runs,
            horizon,
            seed,
        } => {
            if *extended || cfg.extended.is_some() {
                if model.p.is_some() || model.q.is_some() || model.x0.is_some() {
                    return Err(CliError::Config(
                        "--p, --q and --x0 describe the two-point market; drop them with --extended".into(),
                    ));
                }
                merge_extended(
                    cfg,
                    &ExtendedArgs {
                        lo: *lo,
                        hi: *hi,
                        grid_points: *grid_points,
                        c: model.c,
                        delta: model.delta,
                    },
                )?;
            } else {
                if lo.is_some() || hi.is_some() || grid_points.is_some() {
                    return Err(CliError::Config("--lo, --hi and --grid-points need --extended".into()));
                }
                merge_binary(cfg, model)?;
            }
            let sim = &mut cfg.simulation;
            set(&mut sim.policy, *policy);
            set(&mut sim.true_quality, *true_quality);
            set(&mut sim.runs, *runs);
            set(&mut sim.horizon, *horizon);
            set(&mut sim.seed, *seed);
            if x_stop.is_some() {
                sim.x_stop = *x_stop;
            }
            if quality.is_some() {
                sim.quality = *quality;
            }
            if price.is_some() {
                cfg.solver.price = *price;
            }
        }
        Command::ReproduceFigures {
            horizon,
            points,
            costs,
            grid_points,
            ..
        } => {
            // Both market blocks feed the figures.
            cfg.model.get_or_insert_with(Default::default);
            let ext = cfg.extended.get_or_insert_with(Default::default);
            set(&mut ext.points, *grid_points);
            set(&mut cfg.solver.horizon, *horizon);
            set(&mut cfg.solver.price_points, *points);
            set(&mut cfg.solver.cost_points, *costs);
        }
    }
    Ok(())
}

fn binary_params(cfg: &RunConfig) -> Result<ModelParams, CliError> {
    cfg.model.unwrap_or_default().params()
}

fn extended_market(cfg: &RunConfig) -> Result<(QualityDistribution, f64, f64), CliError> {
    let m = cfg.extended.unwrap_or_default();
    let dist = QualityDistribution::uniform_grid(m.lo, m.hi, m.points)?;
    Ok((dist, m.c, m.delta))
}

fn pricing_mode(solver: &SolverBlock) -> Result<PricingMode, CliError> {
    match (solver.mode, solver.price) {
        (ModeKind::Dynamic, _) => Ok(PricingMode::Dynamic),
        (ModeKind::Static, Some(price)) => Ok(PricingMode::Static { price }),
        (ModeKind::Static, None) => Err(CliError::Config("static mode needs a price (--price)".into())),
    }
}

fn scalar_report(headers: &[&'static str], cells: Vec<String>, json: serde_json::Value) -> Report {
    let mut table = Table::new(headers);
    table.push(cells);
    Report {
        table,
        json,
        default_format: Format::Json,
    }
}

fn execute(cfg: &RunConfig, command: &Command) -> Result<Report, CliError> {
    let solver = &cfg.solver;
    match command {
        Command::SolveDp { .. } => {
            let params = binary_params(cfg)?;
            let mode = pricing_mode(solver)?;
            let lattice = detect_lattice(&params, solver.max_denominator, solver.lattice_tol);
            let dp_config = DpConfig {
                epsilon: solver.dp_seed_epsilon,
                method: solver.dp_method,
                ..DpConfig::default()
            };
            let sol = dp::solve_with(&params, lattice.as_ref(), mode, &dp_config)?;
            let mut table = Table::new(&["index", "prior", "value"]);
            let mut values = Vec::new();
            for (i, x, v) in sol.rows() {
                table.push(vec![i.to_string(), num(x), num(v)]);
                values.push(json!({"i": i, "x": x, "V": v}));
            }
            let json = json!({
                "x_stop_estimate": sol.x_stop_estimate,
                "value_at_x0": sol.value_at_x0(),
                "i_stop": sol.i_stop,
                "method": sol.method,
                "values": values,
            });
            Ok(Report {
                table,
                json,
                default_format: Format::Json,
            })
        }
        Command::SolveSeries { .. } => {
            let params = binary_params(cfg)?;
            let sol = series::solve(&params, pricing_mode(solver)?, solver.epsilon)?;
            Ok(scalar_report(
                &["x_star", "value", "epsilon", "t_epsilon"],
                vec![num(sol.x_star), num(sol.value), num(sol.epsilon), sol.t_epsilon.to_string()],
                json!({
                    "x0": params.x0,
                    "x_star": sol.x_star,
                    "value": sol.value,
                    "epsilon": sol.epsilon,
                    "t_epsilon": sol.t_epsilon,
                    "mode": sol.mode,
                }),
            ))
        }
        Command::StaticSweep { .. } => {
            let params = binary_params(cfg)?;
            let points = series::static_sweep(&params, solver.epsilon, solver.price_points)?;
            let mut table = Table::new(&["price", "value", "m_pi", "frontier"]);
            for pt in &points {
                table.push(vec![num(pt.price), num(pt.value), pt.m_pi.to_string(), pt.frontier.to_string()]);
            }
            Ok(Report {
                table,
                json: serde_json::to_value(&points)?,
                default_format: Format::Csv,
            })
        }
        Command::Catalan { a, b, m, tmax } => {
            let cat = CatalanTable::build(*a, *b, *m, *tmax)?;
            let mut table = Table::new(&["likes", "dislikes", "count"]);
            let mut cells = Vec::new();
            for (l, d, count) in cat.cells() {
                table.push(vec![l.to_string(), d.to_string(), count.to_string()]);
                cells.push(json!({"likes": l, "dislikes": d, "count": count.to_string()}));
            }
            Ok(Report {
                table,
                json: json!({"a": a, "b": b, "m": m, "tmax": tmax, "cells": cells}),
                default_format: Format::Csv,
            })
        }
        Command::Learning { x, .. } => {
            let params = binary_params(cfg)?;
            let x = x.unwrap_or(params.x0);
            let x_stop = match cfg.simulation.x_stop {
                Some(v) => v,
                None => series::stopping_prior(&params, solver.epsilon)?.x_star,
            };
            let report = learning::sell_forever_bounds(x, x_stop, &params)?;
            let budget = learning::net_dislike_budget(x, x_stop, &params)?;
            let false_negative = solver
                .price
                .map(|price| learning::false_negative_ratio(&params.with_x0(x)?, price, solver.epsilon))
                .transpose()?;
            let mut table = Table::new(&["quantity", "value"]);
            let mut row = |name: &str, v: f64| table.push(vec![name.to_string(), num(v)]);
            row("x0", report.x0);
            row("x_stop", report.x_stop);
            row("lower", report.lower);
            row("upper", report.upper);
            if let Some(v) = report.exact_symmetric {
                row("exact_symmetric", v);
            }
            row("given_good_lower", report.given_good_lower);
            row("net_dislike_budget", budget.m_int as f64);
            if let Some(fnr) = &false_negative {
                row("fn_static", fnr.fn_static);
                row("fn_dynamic", fnr.fn_dynamic);
                row("fn_ratio", fnr.ratio);
            }
            let mut json = serde_json::to_value(report)?;
            json["net_dislike_budget"] = serde_json::to_value(budget)?;
            if let Some(fnr) = false_negative {
                json["false_negative"] = serde_json::to_value(fnr)?;
            }
            Ok(Report {
                table,
                json,
                default_format: Format::Json,
            })
        }
        Command::ExtendedSolve { .. } => {
            let (dist, c, delta) = extended_market(cfg)?;
            let table = MeanTable::build(&dist, solver.horizon);
            let config = ExtendedConfig {
                seed: solver.horizon_seed,
                max_horizon: DEFAULT_MAX_HORIZON,
            };
            let sol = extended::solve_with_table(&table, c, delta, solver.horizon, pricing_mode(solver)?, &config)?;
            Ok(scalar_report(
                &["value", "horizon", "error_bound"],
                vec![num(sol.value), sol.horizon.to_string(), num(sol.error_bound)],
                json!({
                    "value": sol.value,
                    "horizon": sol.horizon,
                    "error_bound": sol.error_bound,
                    "mean_quality": dist.mean(),
                    "mode": sol.mode,
                    "seed": sol.seed,
                }),
            ))
        }
        Command::ExtendedPriceSweep { .. } => {
            let (dist, c, delta) = extended_market(cfg)?;
            let table = MeanTable::build(&dist, solver.horizon);
            let hi = dist.mean().max(c);
            let prices = extended::price_grid(c, hi, solver.price_points);
            let rows = extended::price_sweep(&table, c, delta, solver.horizon, &prices)?;
            let mut out = Table::new(&["price", "revenue"]);
            for &(price, revenue) in &rows {
                out.push(vec![num(price), num(revenue)]);
            }
            let json = rows.iter().map(|&(price, revenue)| json!({"price": price, "revenue": revenue})).collect();
            Ok(Report {
                table: out,
                json: serde_json::Value::Array(json),
                default_format: Format::Csv,
            })
        }
        Command::ExtendedCostSweep { .. } => {
            let (dist, _, delta) = extended_market(cfg)?;
            let table = MeanTable::build(&dist, solver.horizon);
            // Costs strictly between the lowest quality and the mean, where
            // selling is neither free of risk nor hopeless.
            let (lo, hi) = (dist.support()[0], dist.mean());
            let n = solver.cost_points;
            let costs: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * (k as f64 + 0.5) / n as f64).collect();
            let rows = extended::cost_sweep(&table, &costs, delta, solver.horizon, solver.price_points)?;
            let mut out = Table::new(&["cost", "revenue_static", "revenue_dynamic"]);
            for r in &rows {
                out.push(vec![num(r.cost), num(r.revenue_static), num(r.revenue_dynamic)]);
            }
            Ok(Report {
                table: out,
                json: serde_json::to_value(&rows)?,
                default_format: Format::Csv,
            })
        }
        Command::Simulate { .. } => simulate(cfg),
        Command::ReproduceFigures { .. } => unreachable!("handled before execute"),
    }
}

fn simulate(cfg: &RunConfig) -> Result<Report, CliError> {
    let sim = &cfg.simulation;
    let market = match cfg.extended {
        Some(_) => {
            let (dist, c, delta) = extended_market(cfg)?;
            Market::Extended { dist, c, delta }
        }
        None => Market::Binary {
            params: binary_params(cfg)?,
        },
    };
    let policy = match sim.policy {
        PolicyKind::Dynamic => Policy::Dynamic,
        PolicyKind::Static => Policy::Static {
            price: cfg
                .solver
                .price
                .ok_or_else(|| CliError::Config("the static policy needs --price".into()))?,
        },
        PolicyKind::Threshold => Policy::Threshold {
            x_stop: sim
                .x_stop
                .ok_or_else(|| CliError::Config("the threshold policy needs --x-stop".into()))?,
        },
    };
    let true_quality = match sim.true_quality {
        QualityKind::Good => TrueQuality::Good,
        QualityKind::Bad => TrueQuality::Bad,
        QualityKind::Prior => TrueQuality::FromPrior,
        QualityKind::Fixed => TrueQuality::Fixed(
            sim.quality
                .ok_or_else(|| CliError::Config("--true-quality fixed needs --quality".into()))?,
        ),
    };
    let stats = simulator::run(&SimConfig {
        market,
        policy,
        true_quality,
        horizon: sim.horizon,
        runs: sim.runs,
        seed: sim.seed,
        extended_horizon: cfg.solver.horizon,
    })?;
    let mut table = Table::new(&["stop_time", "runs"]);
    for (t, n) in &stats.stop_time_histogram {
        table.push(vec![t.to_string(), n.to_string()]);
    }
    Ok(Report {
        table,
        json: serde_json::to_value(&stats)?,
        default_format: Format::Json,
    })
}

fn reproduce_figures(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let ext = cfg.extended.unwrap_or_default();
    let preset = FigurePreset {
        binary: binary_params(cfg)?,
        extended_lo: ext.lo,
        extended_hi: ext.hi,
        extended_points: ext.points,
        extended_horizon: cfg.solver.horizon,
        epsilon: cfg.solver.epsilon,
        price_points: cfg.solver.price_points,
        cost_points: cfg.solver.cost_points,
        ..FigurePreset::default()
    };
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out.display())))?;

    let (values, _) = figures::dp_values(&preset.binary)?;
    let mut t = Table::new(&["index", "prior", "value"]);
    for r in &values {
        t.push(vec![r.index.to_string(), num(r.prior), num(r.value)]);
    }
    t.save(&out.join("fig1_dp_values.csv"))?;

    for (name, params) in [("sym", preset.binary), ("gen", preset.general)] {
        let mut t = Table::new(&["price", "value", "m_pi", "frontier"]);
        for pt in figures::static_sweep(&params, &preset)? {
            t.push(vec![num(pt.price), num(pt.value), pt.m_pi.to_string(), pt.frontier.to_string()]);
        }
        t.save(&out.join(format!("fig3_static_sweep_{name}.csv")))?;
    }

    let mut t = Table::new(&["price", "revenue_binary", "revenue_extended"]);
    for r in figures::price_sweep(&preset)? {
        t.push(vec![num(r.price), num(r.revenue_binary), num(r.revenue_extended)]);
    }
    t.save(&out.join("fig4_price_sweep.csv"))?;

    let mut t = Table::new(&["cost", "static_binary", "dynamic_binary", "static_extended", "dynamic_extended"]);
    for r in figures::cost_sweep(&preset)? {
        t.push(vec![
            num(r.cost),
            num(r.static_binary),
            num(r.dynamic_binary),
            num(r.static_extended),
            num(r.dynamic_extended),
        ]);
    }
    t.save(&out.join("fig5_cost_sweep.csv"))?;
    eprintln!("wrote 5 files to {}", out.display());
    Ok(())
}
