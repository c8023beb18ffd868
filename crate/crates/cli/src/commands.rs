use std::fs;
use std::path::Path;

use serde::Serialize;

use veil_core::cfmm::{find_sure_loss, find_sure_loss_veiled};
use veil_core::freq::{classify_stream, empirical_bounds, gap_trace, odds_interval, WindowSpec};
use veil_core::game::{corner_extrema_full, find_veiled_equilibrium, designated_corner_pair, sweep, ConventionResult};
use veil_core::oracle::{
    simulate_population, welfare_compare, CoordinationLayer, Design, Settlement, SimulationConfig,
};
use veil_core::rng::{MachineOneConfig, MachineTwoConfig};
use veil_core::{
    AggregatorParams, BoSGame, Classification, DrawStream, ForkScenario, IntervalStrategy, MachineOne,
    PopulationSpec, PriceBracket, PricedTrade, ReserveState, SearchSpace,
};

use crate::config::{
    self, AnalyzeConfig, CfmmConfig, DesignName, GameConfig, GenConfig, ScenarioConfig, SettlementName,
};
use crate::failure::Failure;
use crate::output::{num, OutDir};

pub fn gen(cfg: &GenConfig, out: &Path) -> Result<(), Failure> {
    if !(cfg.threshold > 0.0 && cfg.threshold < 1.0) {
        return Err(Failure::usage(format!("threshold = {} must lie in (0, 1)", cfg.threshold)));
    }
    let header = ["n", "z", "u", "bit"];
    let bit = |b: bool| if b { "1".to_string() } else { "0".to_string() };
    let mut dir = OutDir::create(out)?;
    match cfg.machine {
        1 => {
            let mc = match &cfg.subset {
                Some(s) => MachineOneConfig::new(s.clone(), cfg.seed)?,
                None => MachineOneConfig::with_measure(cfg.p, cfg.seed)?,
            };
            let mut m = MachineOne::new(mc);
            let rows = (0..cfg.n).map(move |i| {
                let (u, b) = m.next_sample();
                vec![i.to_string(), num(u), num(u), bit(b)]
            });
            dir.csv("stream.csv", &header, rows)?;
        }
        2 => {
            let mc = MachineTwoConfig {
                phi: cfg.phi,
                psi: cfg.psi,
                location_x0: cfg.x0,
                scale_gamma: cfg.gamma,
                seed: cfg.seed,
                fee_per_draw: cfg.fee_per_draw,
                reseed_every: None,
            };
            let mut s = DrawStream::new(mc)?;
            let threshold = cfg.threshold;
            let rows = (0..cfg.n).map(move |i| {
                let d = s.next_draw();
                vec![i.to_string(), num(d.z), num(d.u), bit(d.u >= threshold)]
            });
            dir.csv("stream.csv", &header, rows)?;
        }
        m => return Err(Failure::usage(format!("machine must be 1 or 2, got {m}"))),
    }
    dir.finish("gen", cfg, vec![cfg.seed])?;
    Ok(())
}

/// Reads a `bit` column from a stream dump, or one 0/1 value per line.
pub fn read_bits(path: &Path) -> Result<Vec<bool>, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::data(format!("reading {}: {e}", path.display())))?;
    let parse = |s: &str, line: usize| match s.trim() {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        other => Err(Failure::data(format!(
            "{}:{line}: expected 0 or 1, found {other:?}",
            path.display()
        ))),
    };
    let first = text.lines().next().unwrap_or("");
    if first.split(',').any(|h| h.trim() == "bit") {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let col = rdr
            .headers()
            .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?
            .iter()
            .position(|h| h.trim() == "bit")
            .expect("header checked above");
        rdr.records()
            .enumerate()
            .map(|(i, r)| {
                let r = r.map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
                parse(r.get(col).unwrap_or(""), i + 2)
            })
            .collect()
    } else {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| parse(l, i + 1))
            .collect()
    }
}

#[derive(Serialize)]
struct BoundsReport {
    lower: f64,
    upper: f64,
    gap: f64,
    classification: Classification,
    epsilon: f64,
    lower_odds: f64,
    upper_odds: f64,
    sample_size: usize,
    spec: WindowSpec,
}

pub fn analyze(cfg: &AnalyzeConfig, out: &Path) -> Result<(), Failure> {
    let input = cfg
        .input
        .as_deref()
        .ok_or_else(|| Failure::usage("analyze needs an input file"))?;
    let shortest = cfg.windows.iter().copied().min().unwrap_or(0);
    let stride = cfg.stride.unwrap_or((shortest / 10).max(1));
    let spec = WindowSpec::new(cfg.min_window, cfg.windows.clone(), stride)?;
    let bits = read_bits(input)?;
    let bounds = empirical_bounds::<f64>(&bits, &spec)?;
    let (lower_odds, upper_odds) = odds_interval(&bounds)?;
    let trace_window = cfg.trace_window.unwrap_or(cfg.windows[0]);
    let trace_stride = cfg.trace_stride.unwrap_or((trace_window / 10).max(1));
    let trace = gap_trace::<f64>(&bits, trace_window, trace_stride)?;

    let mut dir = OutDir::create(out)?;
    dir.json(
        "bounds.json",
        &BoundsReport {
            lower: bounds.lower,
            upper: bounds.upper,
            gap: bounds.gap(),
            classification: classify_stream(&bounds, cfg.epsilon),
            epsilon: cfg.epsilon,
            lower_odds,
            upper_odds,
            sample_size: bounds.sample_size,
            spec,
        },
    )?;
    dir.csv(
        "trace.csv",
        &["pos", "mean"],
        trace.into_iter().map(|(pos, m)| vec![pos.to_string(), num(m)]),
    )?;
    dir.finish("analyze", cfg, vec![])?;
    Ok(())
}

#[derive(Serialize)]
struct CornerCheck {
    a: f64,
    designated_min_corner: f64,
    designated_max_corner: f64,
    full_min: f64,
    full_max: f64,
    full_argmin: (f64, f64),
    full_midrange: f64,
}

#[derive(Serialize)]
struct GameReport {
    lambda: f64,
    e: f64,
    c: f64,
    a_star: f64,
    veiled_payoff: f64,
    pareto_dominates: bool,
    degenerate_only: bool,
    passing: usize,
    point_response: bool,
    grid_step: f64,
    full_extrema: ConventionResult<f64>,
    corner_check: CornerCheck,
}

pub fn game(cfg: &GameConfig, out: &Path) -> Result<(), Failure> {
    let game = BoSGame::new(cfg.lambda)?;
    let rep = find_veiled_equilibrium(&game, cfg.grid_step)?;
    let rows = sweep(&game, cfg.sweep_step)?;

    // compare the two corner conventions halfway to the feasibility bound
    let a = game.max_half_width() / 2.0;
    let (lo, hi) = designated_corner_pair(&game, a)?;
    let s = IntervalStrategy::new(rep.e - a, rep.e + a)?;
    let full = corner_extrema_full(&game, &s, &s);

    let mut dir = OutDir::create(out)?;
    dir.json(
        "equilibrium.json",
        &GameReport {
            lambda: rep.lambda,
            e: rep.e,
            c: rep.c,
            a_star: rep.a_star,
            veiled_payoff: rep.veiled_payoff,
            pareto_dominates: rep.pareto_dominates,
            degenerate_only: rep.degenerate_only,
            passing: rep.passing,
            point_response: rep.point_response,
            grid_step: rep.grid_step,
            full_extrema: rep.full_extrema,
            corner_check: CornerCheck {
                a,
                designated_min_corner: lo,
                designated_max_corner: hi,
                full_min: full.min,
                full_max: full.max,
                full_argmin: full.argmin,
                full_midrange: 0.5 * (full.min + full.max),
            },
        },
    )?;
    dir.csv(
        "sweep.csv",
        &[
            "a",
            "veiled_payoff",
            "closed_form",
            "designated_min_corner",
            "designated_max_corner",
            "full_min",
            "full_max",
        ],
        rows.into_iter().map(|r| {
            [r.a, r.veiled_payoff, r.closed_form, r.designated_min_corner, r.designated_max_corner, r.full_min, r.full_max]
                .into_iter()
                .map(num)
                .collect()
        }),
    )?;
    dir.finish("game", cfg, vec![])?;
    Ok(())
}

#[derive(Serialize)]
struct SureLossReport {
    found: bool,
    mode: &'static str,
    trades: Vec<PricedTrade>,
    payoff_at_low: Option<f64>,
    payoff_at_high: Option<f64>,
    pool: ReserveState,
    bracket: PriceBracket,
    alpha: f64,
    #[serde(with = "config::rho")]
    rho: f64,
}

pub fn cfmm(cfg: &CfmmConfig, out: &Path) -> Result<(), Failure> {
    let bracket = PriceBracket::new(cfg.p_low, cfg.p_high)?;
    let pool = match cfg.pool {
        Some(p) => ReserveState::new(p.r1, p.r2, p.k)?,
        None => ReserveState::anchored(bracket.mid(), cfg.pool_depth)?,
    };
    let params = AggregatorParams::new(cfg.alpha, cfg.rho)?;
    let space = SearchSpace::new(cfg.depth, cfg.trade_grid)?;
    let (mode, found) = if cfg.veiled {
        if cfg.grid_points == 0 {
            return Err(Failure::usage("grid_points must be positive"));
        }
        ("set", find_sure_loss_veiled(&bracket, &pool, &space, cfg.grid_points)?)
    } else {
        ("point", find_sure_loss(&params, &bracket, &pool, &space)?)
    };
    let report = SureLossReport {
        found: found.is_some(),
        mode,
        payoff_at_low: found.as_ref().map(|w| w.payoff_at_low),
        payoff_at_high: found.as_ref().map(|w| w.payoff_at_high),
        trades: found.map(|w| w.trades).unwrap_or_default(),
        pool,
        bracket,
        alpha: cfg.alpha,
        rho: cfg.rho,
    };
    let mut dir = OutDir::create(out)?;
    dir.json("sure_loss.json", &report)?;
    dir.finish("cfmm", cfg, vec![])?;
    Ok(())
}

#[derive(Serialize)]
struct TypeSummary {
    type_alpha: f64,
    #[serde(with = "config::rho")]
    type_rho: f64,
    weight: f64,
    avg_utility: f64,
    veil_utility: f64,
    delta: f64,
    exploited_under_avg: bool,
    min_veil_utility: f64,
}

#[derive(Serialize)]
struct OracleSummary {
    design: DesignName,
    epochs: usize,
    seed: u64,
    welfare: f64,
    welfare_avg: f64,
    welfare_veil: f64,
    welfare_delta: f64,
    violation: bool,
    settlement: SettlementName,
    settlement_price_avg: Option<f64>,
    settlement_price_veil: Option<f64>,
    per_type: Vec<TypeSummary>,
}

pub fn oracle(sc: &ScenarioConfig, out: &Path) -> Result<(), Failure> {
    let scenario = ForkScenario::new(sc.p_s, sc.p_n, sc.epochs, sc.seed)?;
    let pop = PopulationSpec::new(
        sc.population
            .iter()
            .map(|t| Ok((AggregatorParams::new(t.alpha, t.rho)?, t.weight)))
            .collect::<Result<Vec<_>, veil_core::Error>>()?,
    )?;
    let machine = MachineTwoConfig {
        phi: sc.machine.phi,
        psi: sc.machine.psi,
        location_x0: sc.machine.x0,
        scale_gamma: sc.machine.gamma,
        ..MachineTwoConfig::with_seed(sc.seed)
    };
    let sim = SimulationConfig {
        pool_depth: sc.pool_depth,
        search: SearchSpace::new(sc.depth, sc.trade_grid)?,
        grid_points: sc.grid_points,
        machine,
        settlement: match sc.settlement {
            SettlementName::Endpoint => Settlement::Endpoint,
            SettlementName::Veiled => Settlement::Veiled,
        },
        coordination: sc.coordination.map(|c| CoordinationLayer {
            lambda: c.lambda,
            grid_step: c.grid_step,
        }),
    };
    let avg = simulate_population(&pop, &scenario, &Design::Avg(sc.fairness), &sim)?;
    let veil = simulate_population(&pop, &scenario, &Design::Veil, &sim)?;
    let cmp = welfare_compare(&avg, &veil)?;

    let mut dir = OutDir::create(out)?;
    let header = ["type_alpha", "type_rho", "weight", "mean_utility"];
    for (name, table) in [("utility_avg.csv", &avg), ("utility_veil.csv", &veil)] {
        dir.csv(
            name,
            &header,
            table
                .rows
                .iter()
                .map(|r| vec![num(r.alpha), num(r.rho), num(r.weight), num(r.mean_utility)]),
        )?;
    }
    let per_type = avg
        .rows
        .iter()
        .zip(&veil.rows)
        .zip(&cmp.per_type_delta)
        .map(|((a, v), &d)| TypeSummary {
            type_alpha: a.alpha,
            type_rho: a.rho,
            weight: a.weight,
            avg_utility: a.mean_utility,
            veil_utility: v.mean_utility,
            delta: d,
            exploited_under_avg: a.exploited,
            min_veil_utility: v.min_utility,
        })
        .collect();
    dir.json(
        "summary.json",
        &OracleSummary {
            design: sc.design,
            epochs: sc.epochs,
            seed: sc.seed,
            welfare: match sc.design {
                DesignName::Avg => cmp.welfare_avg,
                DesignName::Veil => cmp.welfare_veil,
            },
            welfare_avg: cmp.welfare_avg,
            welfare_veil: cmp.welfare_veil,
            welfare_delta: cmp.welfare_delta,
            violation: cmp.violation,
            settlement: sc.settlement,
            settlement_price_avg: avg.settlement_price,
            settlement_price_veil: veil.settlement_price,
            per_type,
        },
    )?;
    dir.finish("oracle", sc, vec![sc.seed])?;
    Ok(())
}
