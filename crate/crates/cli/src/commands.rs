use arctic_core::entropy::{asm_s, aztec_s, Model};
use arctic_core::exact::{format_rational, ln_rational};
use arctic_core::exact_asm::{asm_11_ratio, asm_1refined, asm_count, asm_rate, enumerate_asms};
use arctic_core::exact_aztec::{
    aztec_rate, lgv_oracle, multirefined_rate, multirefined_ratio, unrefined_Z, RefinementSpec,
    WeightParam,
};
use arctic_core::properties::{run_all, SuiteConfig};
use arctic_core::step_model::{sixvertex_lagrangean, ModelTag, Step, StepSet};
use arctic_core::tangent::{interior_grid, reconstruct_from_lattice, TangentProblem};
use chrono::{SecondsFormat, Utc};
use itertools::Itertools;
use num_bigint::BigUint;
use rayon::prelude::*;

use crate::output::{round12, Cell, Format, Table};
use crate::{
    AsmCommand, AztecCommand, Cli, Command, Common, ConvergeArgs, CountArgs, EvalArgs, ExactArgs,
    Failure, Fixture, LagrangeanCommand, LagrangeanModel, ModelArg, PropertiesArgs, Source,
    TangentArgs,
};

/// Tolerance on the curve residual per rate source.
pub const CLOSED_RESIDUAL_TOL: f64 = 1e-6;
pub const LATTICE_RESIDUAL_TOL: f64 = 5e-2;

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let common = &cli.common;
    let (table, verdict) = match &cli.command {
        Command::Aztec {
            command: AztecCommand::Exact(a),
        } => aztec_exact(a)?,
        Command::Converge(a) => converge(a)?,
        Command::Tangent(a) => tangent(a)?,
        Command::Properties(a) => properties(a)?,
        Command::Lagrangean {
            command: LagrangeanCommand::Eval(a),
        } => (lagrangean_eval(a)?, Ok(())),
        Command::Asm {
            command: AsmCommand::Count(a),
        } => asm_count_cmd(a)?,
    };
    emit(table, common, matches!(cli.command, Command::Properties(_)))?;
    verdict
}

fn emit(mut table: Table, common: &Common, json_default: bool) -> Result<(), Failure> {
    table.meta("version", env!("CARGO_PKG_VERSION"));
    if !common.no_timestamp {
        table.meta(
            "timestamp",
            Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        );
    }
    let format = common.format.unwrap_or(if json_default {
        Format::Json
    } else {
        Format::Csv
    });
    table.write_to(format, common.out.as_deref())?;
    Ok(())
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

fn parse_weight(w: &str) -> Result<WeightParam, Failure> {
    Ok(WeightParam::parse(w)?)
}

type Outcome = (Table, Result<(), Failure>);

fn aztec_exact(a: &ExactArgs) -> Result<Outcome, Failure> {
    let w = parse_weight(&a.w)?;
    let spec = if a.k.is_empty() && a.l.is_empty() {
        RefinementSpec::empty()
    } else {
        RefinementSpec::new(a.k.clone(), a.l.clone())?
    };
    let ratio = multirefined_ratio(a.n, &spec, &w)?;
    let z = unrefined_Z(a.n, &w);
    let refined = &ratio * &z;
    let oracle = if a.oracle {
        Some(lgv_oracle(a.n, &spec, &w)?)
    } else {
        None
    };
    let mut table = Table::new(
        "aztec-exact/1",
        &[
            "n",
            "w",
            "k",
            "l",
            "ratio",
            "z_n",
            "refined_z",
            "oracle_z",
            "oracle_match",
        ],
    );
    table.meta("model", "aztec");
    let matched = oracle.as_ref().map(|o| *o == refined);
    table.push(vec![
        a.n.into(),
        format_rational(w.value()).into(),
        join(spec.kvec()).into(),
        join(spec.lvec()).into(),
        format_rational(&ratio).into(),
        format_rational(&z).into(),
        format_rational(&refined).into(),
        oracle.as_ref().map(format_rational).into(),
        matched.into(),
    ]);
    let verdict = match (matched, &oracle) {
        (Some(false), Some(o)) => Err(Failure::Check(format!(
            "determinant gives {} but the path count is {}",
            format_rational(&refined),
            format_rational(o)
        ))),
        _ => Ok(()),
    };
    Ok((table, verdict))
}

struct RateRow {
    n: u64,
    r: Cell,
    s: Cell,
    lattice: f64,
    predicted: f64,
}

fn converge(a: &ConvergeArgs) -> Result<Outcome, Failure> {
    let w = parse_weight(&a.w)?;
    let wf = w.to_f64();
    let fixture = a.fixture.unwrap_or(match a.model {
        ModelArg::Aztec => Fixture::Grid,
        ModelArg::Asm => Fixture::FirstRow,
    });
    let valid = matches!(
        (a.model, fixture),
        (ModelArg::Aztec, Fixture::Grid | Fixture::Multi)
            | (ModelArg::Asm, Fixture::FirstRow | Fixture::Corner)
    );
    if !valid {
        return Err(Failure::Usage(format!(
            "fixture {fixture:?} does not apply to model {:?}",
            a.model
        )));
    }
    if a.n.iter().any(|&n| n < 1) {
        return Err(Failure::Usage("orders must be >= 1".into()));
    }
    let s_grid = a.s_grid.clone().unwrap_or_else(|| a.r_grid.clone());
    if a.r_grid.is_empty() || s_grid.is_empty() {
        return Err(Failure::Usage("grids must be nonempty".into()));
    }
    let rows: Vec<RateRow> = match fixture {
        Fixture::Grid => {
            let tasks: Vec<(u64, f64, f64)> =
                a.n.iter()
                    .cartesian_product(a.r_grid.iter())
                    .cartesian_product(s_grid.iter())
                    .map(|((&n, &r), &s)| (n, r, s))
                    .collect();
            tasks
                .par_iter()
                .map(|&(n, r, s)| {
                    Ok(RateRow {
                        n,
                        r: r.into(),
                        s: s.into(),
                        lattice: aztec_rate(n, r, s, &w)?,
                        predicted: aztec_s(r, s, wf)?,
                    })
                })
                .collect::<arctic_core::Result<_>>()?
        }
        Fixture::Multi => {
            if a.r_grid.len() != s_grid.len() {
                return Err(Failure::Usage(
                    "--r-grid and --s-grid must have equal length for a multirefinement".into(),
                ));
            }
            let predicted = a
                .r_grid
                .iter()
                .zip(&s_grid)
                .map(|(&r, &s)| aztec_s(r, s, wf))
                .sum::<arctic_core::Result<f64>>()?;
            a.n.par_iter()
                .map(|&n| {
                    Ok(RateRow {
                        n,
                        r: join(&a.r_grid).into(),
                        s: join(&s_grid).into(),
                        lattice: multirefined_rate(n, &a.r_grid, &s_grid, &w)?,
                        predicted,
                    })
                })
                .collect::<arctic_core::Result<_>>()?
        }
        Fixture::FirstRow => {
            let tasks: Vec<(u64, f64)> =
                a.n.iter()
                    .flat_map(|&n| a.r_grid.iter().map(move |&r| (n, r)))
                    .collect();
            tasks
                .par_iter()
                .map(|&(n, r)| {
                    Ok(RateRow {
                        n,
                        r: r.into(),
                        s: 0.5.into(),
                        lattice: asm_rate(n, r)?,
                        predicted: asm_s(r, 0.5)?,
                    })
                })
                .collect::<arctic_core::Result<_>>()?
        }
        Fixture::Corner => {
            a.n.iter()
                .map(|&n| {
                    Ok(RateRow {
                        n,
                        r: 0.0.into(),
                        s: 0.0.into(),
                        lattice: ln_rational(&asm_11_ratio(n)?) / n as f64,
                        predicted: asm_s(0.0, 0.0)?,
                    })
                })
                .collect::<arctic_core::Result<_>>()?
        }
    };

    let mut table = Table::new(
        "converge/1",
        &["n", "r", "s", "lattice_rate", "predicted_S", "difference"],
    );
    table.meta("model", format!("{:?}", a.model).to_lowercase());
    table.meta("fixture", format!("{fixture:?}").to_lowercase());
    if a.model == ModelArg::Aztec {
        table.meta("w", format_rational(w.value()));
    }
    let mut worst: Vec<(u64, f64)> = Vec::new();
    for row in rows {
        // difference of the printed (rounded) values, so it can be recomputed
        let (lat, pred) = (round12(row.lattice), round12(row.predicted));
        let diff = round12(lat - pred);
        match worst.iter_mut().find(|(n, _)| *n == row.n) {
            Some(entry) => entry.1 = entry.1.max(diff.abs()),
            None => worst.push((row.n, diff.abs())),
        }
        table.push(vec![
            row.n.into(),
            row.r,
            row.s,
            lat.into(),
            pred.into(),
            diff.into(),
        ]);
    }
    for &(n, m) in &worst {
        table.summarize(vec![("n", n.into()), ("max_abs_difference", m.into())]);
    }
    let verdict = match a.check {
        Some(tol) => {
            let (n, m) = worst
                .iter()
                .copied()
                .max_by_key(|(n, _)| *n)
                .unwrap_or((0, 0.0));
            if m <= tol {
                Ok(())
            } else {
                Err(Failure::Check(format!(
                    "max |difference| {m:e} at n = {n} exceeds {tol:e}"
                )))
            }
        }
        None => Ok(()),
    };
    Ok((table, verdict))
}

fn tangent(a: &TangentArgs) -> Result<Outcome, Failure> {
    let wf = parse_weight(&a.w)?.to_f64();
    let model = match a.model {
        ModelArg::Aztec => Model::aztec(wf)?,
        ModelArg::Asm => Model::Asm,
    };
    let default_range = match (a.model, a.source) {
        (ModelArg::Asm, Source::Closed) => (0.0, 0.5),
        (ModelArg::Asm, Source::Lattice) => (0.05, 0.45),
        (ModelArg::Aztec, Source::Closed) => (0.0, 3.0),
        (ModelArg::Aztec, Source::Lattice) => (0.2, 2.0),
    };
    let grid = match &a.r_grid {
        Some(g) if !g.is_empty() => g.clone(),
        Some(_) => return Err(Failure::Usage("--r-grid is empty".into())),
        None if a.points == 0 => return Err(Failure::Usage("--points must be >= 1".into())),
        None => interior_grid(default_range.0, default_range.1, a.points),
    };
    let (curve, tol) = match a.source {
        Source::Closed => (
            TangentProblem::closed(model)?.envelope(&grid)?,
            CLOSED_RESIDUAL_TOL,
        ),
        Source::Lattice => {
            let n =
                a.n.ok_or_else(|| Failure::Usage("--source lattice needs --n".into()))?;
            (
                reconstruct_from_lattice(model, n, &grid)?,
                LATTICE_RESIDUAL_TOL,
            )
        }
    };
    let mut table = Table::new("tangent/1", &["r", "t_star", "x", "y", "residual"]);
    table.meta("model", format!("{:?}", a.model).to_lowercase());
    if a.model == ModelArg::Aztec {
        table.meta("w", wf);
        table.meta("s_pinned", 0);
    }
    table.meta("source", format!("{:?}", a.source).to_lowercase());
    if let Some(n) = a.n.filter(|_| a.source == Source::Lattice) {
        table.meta("n", n);
    }
    for p in &curve.samples {
        table.push(vec![
            p.r.into(),
            p.t_star.into(),
            p.x.into(),
            p.y.into(),
            p.residual.into(),
        ]);
    }
    let worst = curve.max_abs_residual();
    table.summarize(vec![
        ("max_abs_residual", worst.into()),
        ("tolerance", tol.into()),
    ]);
    let verdict = if worst <= tol {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "max residual {worst:e} exceeds {tol:e}"
        )))
    };
    Ok((table, verdict))
}

fn properties(a: &PropertiesArgs) -> Result<Outcome, Failure> {
    let cfg = SuiteConfig {
        seed: a.seed,
        permutation_tuples: a.tuples,
        slopes: a.points,
        ..SuiteConfig::default()
    };
    let report = run_all(&cfg)?;
    let mut table = Table::new(
        "properties/1",
        &[
            "property",
            "passed",
            "checks",
            "worst_location",
            "worst_value",
        ],
    );
    table.meta("seed", a.seed);
    for r in &report.results {
        table.push(vec![
            r.name.as_str().into(),
            r.passed.into(),
            (r.checks as u64).into(),
            r.worst.as_ref().map(|w| w.location.clone()).into(),
            r.worst.as_ref().map(|w| w.value).into(),
        ]);
    }
    let failed: Vec<&str> = report
        .results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name.as_str())
        .collect();
    let verdict = if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "properties failed: {}",
            failed.join(", ")
        )))
    };
    Ok((table, verdict))
}

fn parse_steps(spec: &str) -> Result<Vec<Step>, Failure> {
    spec.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let parts: Vec<&str> = s.split(',').map(str::trim).collect();
            let bad = || Failure::Usage(format!("step `{s}` is not `u,v,weight`"));
            if parts.len() != 3 {
                return Err(bad());
            }
            let u = parts[0].parse().map_err(|_| bad())?;
            let v = parts[1].parse().map_err(|_| bad())?;
            let w = parts[2].parse().map_err(|_| bad())?;
            Ok(Step::new(u, v, w)?)
        })
        .collect()
}

fn lagrangean_eval(a: &EvalArgs) -> Result<Table, Failure> {
    let mut table = Table::new("lagrangean/1", &["t", "x", "y", "L", "Lprime"]);
    let steps = match a.model {
        LagrangeanModel::Aztec => {
            let w = parse_weight(&a.w)?.to_f64();
            table.meta("w", w);
            Some(StepSet::aztec(w)?)
        }
        LagrangeanModel::Asm => Some(StepSet::asm()),
        LagrangeanModel::Custom => {
            let spec = a
                .steps
                .as_deref()
                .ok_or_else(|| Failure::Usage("--model custom needs --steps".into()))?;
            table.meta("steps", spec);
            Some(StepSet::new(parse_steps(spec)?, ModelTag::Custom)?)
        }
        LagrangeanModel::Sixvertex => None,
    };
    table.meta("model", format!("{:?}", a.model).to_lowercase());
    match steps {
        Some(steps) => {
            let rows =
                a.t.par_iter()
                    .map(|&t| {
                        let sol = steps.solve_xy(t)?;
                        let e = steps.lagrangean(t)?;
                        Ok(vec![
                            t.into(),
                            sol.x.into(),
                            sol.y.into(),
                            e.value.into(),
                            e.derivative.into(),
                        ])
                    })
                    .collect::<arctic_core::Result<Vec<_>>>()?;
            rows.into_iter().for_each(|r| table.push(r));
        }
        None => {
            let (w1, w2) = a
                .w1
                .zip(a.w2)
                .ok_or_else(|| Failure::Usage("--model sixvertex needs --w1 and --w2".into()))?;
            table.meta("w1", w1);
            table.meta("w2", w2);
            for &t in &a.t {
                let l = sixvertex_lagrangean(t, w1, w2)?;
                table.push(vec![
                    t.into(),
                    Cell::Empty,
                    Cell::Empty,
                    l.into(),
                    Cell::Empty,
                ]);
            }
        }
    }
    Ok(table)
}

fn asm_count_cmd(a: &CountArgs) -> Result<Outcome, Failure> {
    let mut table = Table::new(
        "asm-count/1",
        &["n", "k", "count", "oracle_count", "oracle_match"],
    );
    table.meta("model", "asm");
    let mut mismatches = Vec::new();
    for &n in &a.n {
        let census = if a.oracle {
            Some(enumerate_asms(n as usize)?)
        } else {
            None
        };
        let entries: Vec<(Option<u64>, BigUint, Option<u64>)> = if a.k.is_empty() {
            vec![(None, asm_count(n)?.value, census.as_ref().map(|c| c.total))]
        } else {
            a.k.iter()
                .map(|&k| {
                    Ok((
                        Some(k),
                        asm_1refined(n, k)?.value,
                        census.as_ref().map(|c| c.first_row[k as usize - 1]),
                    ))
                })
                .collect::<arctic_core::Result<_>>()?
        };
        for (k, count, oracle) in entries {
            let matched = oracle.map(|o| BigUint::from(o) == count);
            if matched == Some(false) {
                mismatches.push(format!(
                    "n={n} k={k:?}: formula {count}, enumeration {}",
                    oracle.unwrap_or_default()
                ));
            }
            table.push(vec![
                n.into(),
                k.into(),
                count.to_string().into(),
                oracle.into(),
                matched.into(),
            ]);
        }
    }
    let verdict = if mismatches.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(mismatches.join("; ")))
    };
    Ok((table, verdict))
}
