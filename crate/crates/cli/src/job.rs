//! Every command reduces to a [`Job`]: a serialisable description of one
//! table. Figure configs and sidecars store jobs, so re-running one
//! reproduces the table exactly.

use std::collections::BTreeMap;
use std::f64::consts::LOG2_10;
use std::sync::Arc;

use aloha_sic::sim::{estimate_r_curve, simulate_paired, simulate_with, Estimate};
use aloha_sic::{
    collision_optimum, ergodic_sum_capacity, lambda_max, p_saturated, success_curve, sum_rate_max, Branch,
    NetworkConfig, Receiver, ReceiverModel, ReceiverRegistry, SimOptions, SimStats,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::params::{Snr, Sweep, Values};
use crate::table::{Cell, Table};

/// Monte Carlo overlay: slots per point and the base seed. Point `k` of a
/// sweep uses seed `seed + k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimSpec {
    pub slots: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Job {
    /// `r_i` against the threshold; `i` defaults to `n - 1`.
    SuccessVsMu {
        n: usize,
        rho_db: Snr,
        receivers: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        i: Option<usize>,
        mu: Sweep,
    },
    /// `r_0..r_{n-1}` at one threshold, optionally with Monte Carlo estimates.
    SuccessVsI {
        n: usize,
        rho_db: Snr,
        receivers: Vec<String>,
        mu: f64,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        simulation_only: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        simulate: Option<SimSpec>,
    },
    /// Success probability and throughput against `q0`.
    ThroughputVsQ0 {
        n: usize,
        rho_db: Snr,
        receivers: Vec<String>,
        mu: f64,
        q0: Sweep,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        simulate: Option<SimSpec>,
    },
    /// Throughput against the threshold, at a fixed `q0` or, when `q0` is
    /// absent, at the throughput-maximising one.
    ThroughputVsMu {
        n: usize,
        rho_db: Snr,
        receivers: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q0: Option<f64>,
        mu: Sweep,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        simulate: Option<SimSpec>,
    },
    /// Sum rate against the threshold with `q0` at its optimum.
    SumRateVsMu {
        n: usize,
        rho_db: Snr,
        receivers: Vec<String>,
        mu: Sweep,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        simulate: Option<SimSpec>,
    },
    /// Maximum sum rate against SNR.
    OptimumVsRho {
        n: usize,
        rho_db: Values,
        receivers: Vec<String>,
        #[serde(default)]
        detail: bool,
        #[serde(default)]
        capacity: bool,
        #[serde(default)]
        slopes: bool,
    },
    OperatingPoint {
        n: usize,
        rho_db: Snr,
        receivers: Vec<String>,
    },
    Simulate {
        n: usize,
        rho_db: Snr,
        receivers: Vec<String>,
        mu: Values,
        q0: Values,
        slots: u64,
        seed: u64,
    },
    Capacity {
        n: usize,
        rho_db: Values,
    },
}

impl Job {
    pub fn simulation_mut(&mut self) -> Option<&mut Option<SimSpec>> {
        match self {
            Job::SuccessVsI { simulate, .. }
            | Job::ThroughputVsQ0 { simulate, .. }
            | Job::ThroughputVsMu { simulate, .. }
            | Job::SumRateVsMu { simulate, .. } => Some(simulate),
            _ => None,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Job::Simulate { seed, .. } => Some(*seed),
            Job::SuccessVsI { simulate, .. }
            | Job::ThroughputVsQ0 { simulate, .. }
            | Job::ThroughputVsMu { simulate, .. }
            | Job::SumRateVsMu { simulate, .. } => simulate.map(|s| s.seed),
            _ => None,
        }
    }
}

/// Expands `all` and checks every name against the registry. Analytic
/// commands expand `all` to one receiver per model.
pub fn expand_receivers(names: &[String], registry: &ReceiverRegistry, analytic: bool) -> CliResult<Vec<String>> {
    let mut out: Vec<String> = Vec::new();
    for name in names {
        if name.eq_ignore_ascii_case("all") {
            if analytic {
                out.extend(ReceiverModel::ALL.iter().map(|m| m.name().to_string()));
            } else {
                out.extend(registry.names().map(str::to_string));
            }
        } else {
            out.push(registry.get(name)?.name().to_string());
        }
    }
    let mut seen = std::collections::HashSet::new();
    out.retain(|n| seen.insert(n.clone()));
    if out.is_empty() {
        return Err(CliError::usage("no receivers selected"));
    }
    Ok(out)
}

pub struct Runner {
    pub registry: ReceiverRegistry,
    pub sim: SimOptions,
}

fn model_tag(model: ReceiverModel) -> &'static str {
    match model {
        ReceiverModel::Collision => "collision",
        ReceiverModel::Capture => "capture",
        ReceiverModel::OrderedSic => "ordered",
        ReceiverModel::UnorderedSic => "unordered_lb",
    }
}

fn sim_tag(r: &dyn Receiver) -> String {
    r.name().replace('-', "_")
}

fn push_estimate(row: &mut Vec<Cell>, e: Estimate) {
    row.push(e.mean.into());
    row.push(e.se.into());
}

fn estimate_columns(cols: &mut Vec<String>, prefix: &str, receivers: &[Arc<dyn Receiver>]) {
    for r in receivers {
        cols.push(format!("{prefix}_{}", sim_tag(r.as_ref())));
        cols.push(format!("{prefix}_{}_se", sim_tag(r.as_ref())));
    }
}

fn check_n(n: usize) -> CliResult<()> {
    if n == 0 {
        return Err(CliError::usage("--n must be at least 1"));
    }
    Ok(())
}

impl Runner {
    pub fn new(sim: SimOptions) -> Self {
        Runner {
            registry: ReceiverRegistry::with_defaults(),
            sim,
        }
    }

    fn resolve(&self, names: &[String]) -> CliResult<Vec<Arc<dyn Receiver>>> {
        names.iter().map(|n| Ok(self.registry.get(n)?)).collect()
    }

    /// One receiver per model, in request order; variants sharing a model
    /// share its closed form.
    fn analytic(&self, names: &[String]) -> CliResult<Vec<Arc<dyn Receiver>>> {
        let mut seen = Vec::new();
        let mut out = Vec::new();
        for r in self.resolve(names)? {
            if !seen.contains(&r.model()) {
                seen.push(r.model());
                out.push(r);
            }
        }
        Ok(out)
    }

    pub fn run(&self, job: &Job) -> CliResult<Table> {
        match job {
            Job::SuccessVsMu {
                n,
                rho_db,
                receivers,
                i,
                mu,
            } => self.success_vs_mu(*n, *rho_db, receivers, *i, mu),
            Job::SuccessVsI {
                n,
                rho_db,
                receivers,
                mu,
                simulation_only,
                simulate,
            } => self.success_vs_i(*n, *rho_db, receivers, *mu, *simulation_only, *simulate),
            Job::ThroughputVsQ0 {
                n,
                rho_db,
                receivers,
                mu,
                q0,
                simulate,
            } => self.throughput_vs_q0(*n, *rho_db, receivers, *mu, q0, *simulate),
            Job::ThroughputVsMu {
                n,
                rho_db,
                receivers,
                q0,
                mu,
                simulate,
            } => self.throughput_vs_mu(*n, *rho_db, receivers, *q0, mu, *simulate),
            Job::SumRateVsMu {
                n,
                rho_db,
                receivers,
                mu,
                simulate,
            } => self.sum_rate_vs_mu(*n, *rho_db, receivers, mu, *simulate),
            Job::OptimumVsRho {
                n,
                rho_db,
                receivers,
                detail,
                capacity,
                slopes,
            } => self.optimum_vs_rho(*n, rho_db, receivers, *detail, *capacity, *slopes),
            Job::OperatingPoint { n, rho_db, receivers } => self.operating_point(*n, *rho_db, receivers),
            Job::Simulate {
                n,
                rho_db,
                receivers,
                mu,
                q0,
                slots,
                seed,
            } => self.simulate(*n, *rho_db, receivers, mu, q0, *slots, *seed),
            Job::Capacity { n, rho_db } => capacity(*n, rho_db),
        }
    }

    fn success_vs_mu(&self, n: usize, rho: Snr, names: &[String], i: Option<usize>, mu: &Sweep) -> CliResult<Table> {
        check_n(n)?;
        let i = i.unwrap_or(n - 1);
        if i >= n {
            return Err(CliError::usage(format!("--i {i} needs to be below --n {n}")));
        }
        let receivers = self.analytic(names)?;
        let mut cols = vec!["mu".to_string()];
        cols.extend(receivers.iter().map(|r| format!("r_{}", model_tag(r.model()))));
        let mut table = Table::new(cols);
        for mu in mu.values() {
            let mut row = vec![Cell::Num(mu)];
            for r in &receivers {
                row.push(success_curve(i + 1, mu, rho.linear(), r.as_ref())?.get(i).into());
            }
            table.push(row);
        }
        Ok(table)
    }

    fn success_vs_i(
        &self,
        n: usize,
        rho: Snr,
        names: &[String],
        mu: f64,
        simulation_only: bool,
        sim: Option<SimSpec>,
    ) -> CliResult<Table> {
        check_n(n)?;
        if simulation_only && sim.is_none() {
            return Err(CliError::usage("a simulation-only run needs --slots"));
        }
        let analytic = if simulation_only {
            Vec::new()
        } else {
            self.analytic(names)?
        };
        let simulated = if sim.is_some() {
            self.resolve(names)?
        } else {
            Vec::new()
        };
        let curves = analytic
            .iter()
            .map(|r| success_curve(n, mu, rho.linear(), r.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        let estimates = match sim {
            Some(s) => simulated
                .iter()
                .map(|r| estimate_r_curve(n, mu, rho.linear(), r.as_ref(), s.slots, s.seed, &self.sim))
                .collect::<Result<Vec<_>, _>>()?,
            None => Vec::new(),
        };
        let mut cols = vec!["i".to_string()];
        cols.extend(analytic.iter().map(|r| format!("r_{}", model_tag(r.model()))));
        estimate_columns(&mut cols, "sim_r", &simulated);
        let mut table = Table::new(cols);
        for i in 0..n {
            let mut row = vec![Cell::from(i)];
            row.extend(curves.iter().map(|c| Cell::Num(c.get(i))));
            for e in &estimates {
                push_estimate(
                    &mut row,
                    Estimate {
                        mean: e[i].mean,
                        se: e[i].se,
                    },
                );
            }
            table.push(row);
        }
        Ok(table)
    }

    fn throughput_vs_q0(
        &self,
        n: usize,
        rho: Snr,
        names: &[String],
        mu: f64,
        q0: &Sweep,
        sim: Option<SimSpec>,
    ) -> CliResult<Table> {
        check_n(n)?;
        let analytic = self.analytic(names)?;
        let simulated = if sim.is_some() {
            self.resolve(names)?
        } else {
            Vec::new()
        };
        let curves = analytic
            .iter()
            .map(|r| success_curve(n, mu, rho.linear(), r.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        let mut cols = vec!["q0".to_string()];
        for r in &analytic {
            cols.push(format!("p_{}", model_tag(r.model())));
            cols.push(format!("throughput_{}", model_tag(r.model())));
        }
        estimate_columns(&mut cols, "sim_p", &simulated);
        estimate_columns(&mut cols, "sim_throughput", &simulated);
        let mut table = Table::new(cols);
        for (k, q0) in q0.values().into_iter().enumerate() {
            let mut row = vec![Cell::Num(q0)];
            for curve in &curves {
                let p = p_saturated(n, q0, curve)?.value();
                row.push(p.into());
                row.push((n as f64 * q0 * p).into());
            }
            if let Some(s) = sim {
                let stats = self.paired(n, rho, mu, q0, &simulated, s, k)?;
                stats.iter().for_each(|st| push_estimate(&mut row, st.p_hat));
                stats.iter().for_each(|st| push_estimate(&mut row, st.throughput));
            }
            table.push(row);
        }
        Ok(table)
    }

    fn throughput_vs_mu(
        &self,
        n: usize,
        rho: Snr,
        names: &[String],
        q0: Option<f64>,
        mu: &Sweep,
        sim: Option<SimSpec>,
    ) -> CliResult<Table> {
        check_n(n)?;
        let analytic = self.analytic(names)?;
        let simulated = if sim.is_some() {
            self.resolve(names)?
        } else {
            Vec::new()
        };
        let mut cols = vec!["mu".to_string()];
        for r in &analytic {
            let tag = model_tag(r.model());
            match q0 {
                Some(_) => cols.extend([format!("p_{tag}"), format!("throughput_{tag}")]),
                None => cols.extend([format!("q0_star_{tag}"), format!("lambda_max_{tag}")]),
            }
        }
        estimate_columns(&mut cols, "sim_throughput", &simulated);
        let mut table = Table::new(cols);
        for (k, mu) in mu.values().into_iter().enumerate() {
            let mut row = vec![Cell::Num(mu)];
            match q0 {
                Some(q0) => {
                    for r in &analytic {
                        let curve = success_curve(n, mu, rho.linear(), r.as_ref())?;
                        let p = p_saturated(n, q0, &curve)?.value();
                        row.extend([Cell::Num(p), Cell::Num(n as f64 * q0 * p)]);
                    }
                    if let Some(s) = sim {
                        let stats = self.paired(n, rho, mu, q0, &simulated, s, k)?;
                        stats.iter().for_each(|st| push_estimate(&mut row, st.throughput));
                    }
                }
                None => {
                    let optima = self.optimal_q0(n, rho, mu, &analytic, &simulated)?;
                    for r in &analytic {
                        let (lambda, q0) = optima[&r.model()];
                        row.extend([Cell::Num(q0), Cell::Num(lambda)]);
                    }
                    if let Some(s) = sim {
                        for r in &simulated {
                            let q0 = optima[&r.model()].1;
                            push_estimate(&mut row, self.single(n, rho, mu, q0, r.as_ref(), s, k)?.throughput);
                        }
                    }
                }
            }
            table.push(row);
        }
        Ok(table)
    }

    fn sum_rate_vs_mu(
        &self,
        n: usize,
        rho: Snr,
        names: &[String],
        mu: &Sweep,
        sim: Option<SimSpec>,
    ) -> CliResult<Table> {
        check_n(n)?;
        let analytic = self.analytic(names)?;
        let simulated = if sim.is_some() {
            self.resolve(names)?
        } else {
            Vec::new()
        };
        let mut cols = vec!["mu".to_string()];
        for r in &analytic {
            let tag = model_tag(r.model());
            cols.extend([format!("q0_star_{tag}"), format!("sum_rate_{tag}")]);
        }
        estimate_columns(&mut cols, "sim_sum_rate", &simulated);
        let mut table = Table::new(cols);
        for (k, mu) in mu.values().into_iter().enumerate() {
            let mut row = vec![Cell::Num(mu)];
            let optima = self.optimal_q0(n, rho, mu, &analytic, &simulated)?;
            for r in &analytic {
                let (lambda, q0) = optima[&r.model()];
                row.extend([Cell::Num(q0), Cell::Num(lambda * mu.ln_1p() / std::f64::consts::LN_2)]);
            }
            if let Some(s) = sim {
                for r in &simulated {
                    let q0 = optima[&r.model()].1;
                    push_estimate(&mut row, self.single(n, rho, mu, q0, r.as_ref(), s, k)?.sum_rate);
                }
            }
            table.push(row);
        }
        Ok(table)
    }

    fn optimal_q0(
        &self,
        n: usize,
        rho: Snr,
        mu: f64,
        analytic: &[Arc<dyn Receiver>],
        simulated: &[Arc<dyn Receiver>],
    ) -> CliResult<BTreeMap<ReceiverModel, (f64, f64)>> {
        let mut out = BTreeMap::new();
        for r in analytic.iter().chain(simulated) {
            if let std::collections::btree_map::Entry::Vacant(e) = out.entry(r.model()) {
                e.insert(lambda_max(n, rho.linear(), mu, r.as_ref())?);
            }
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn paired(
        &self,
        n: usize,
        rho: Snr,
        mu: f64,
        q0: f64,
        receivers: &[Arc<dyn Receiver>],
        sim: SimSpec,
        point: usize,
    ) -> CliResult<Vec<SimStats>> {
        let cfg = NetworkConfig::uniform(n, rho.linear(), mu, q0)?;
        let refs: Vec<&dyn Receiver> = receivers.iter().map(|r| r.as_ref()).collect();
        Ok(simulate_paired(
            &cfg,
            &refs,
            sim.slots,
            sim.seed.wrapping_add(point as u64),
            &self.sim,
        )?)
    }

    #[allow(clippy::too_many_arguments)]
    fn single(
        &self,
        n: usize,
        rho: Snr,
        mu: f64,
        q0: f64,
        receiver: &dyn Receiver,
        sim: SimSpec,
        point: usize,
    ) -> CliResult<SimStats> {
        let cfg = NetworkConfig::uniform(n, rho.linear(), mu, q0)?;
        Ok(simulate_with(
            &cfg,
            receiver,
            sim.slots,
            sim.seed.wrapping_add(point as u64),
            &self.sim,
        )?)
    }

    fn optimum_vs_rho(
        &self,
        n: usize,
        rho_db: &Values,
        names: &[String],
        detail: bool,
        with_capacity: bool,
        slopes: bool,
    ) -> CliResult<Table> {
        check_n(n)?;
        let analytic = self.analytic(names)?;
        let snrs = rho_db
            .values()
            .into_iter()
            .map(Snr::from_db)
            .collect::<Result<Vec<_>, _>>()
            .map_err(CliError::Usage)?;
        let mut rates: Vec<Vec<f64>> = Vec::new();
        let mut cols = vec!["rho_db".to_string()];
        for r in &analytic {
            let tag = model_tag(r.model());
            cols.push(format!("c_{tag}"));
            if detail {
                cols.extend([
                    format!("mu_star_{tag}"),
                    format!("q0_star_{tag}"),
                    format!("lambda_max_{tag}"),
                ]);
            }
        }
        if with_capacity {
            cols.push("c_sum".into());
        }
        if slopes {
            cols.extend(analytic.iter().map(|r| format!("slope_{}", model_tag(r.model()))));
            if with_capacity {
                cols.push("slope_sum".into());
            }
        }
        let mut table = Table::new(cols);
        for (k, snr) in snrs.iter().enumerate() {
            let mut row = vec![Cell::Num(snr.db())];
            let mut c = Vec::new();
            for r in &analytic {
                let (op, _) = sum_rate_max(n, snr.linear(), r.as_ref())?;
                row.push(op.sum_rate.into());
                if detail {
                    row.extend([Cell::Num(op.mu_star), Cell::Num(op.q0_star), Cell::Num(op.lambda_max)]);
                }
                c.push(op.sum_rate);
            }
            if with_capacity {
                let cap = ergodic_sum_capacity(n, snr.linear())?;
                row.push(cap.into());
                c.push(cap);
            }
            if slopes {
                match k.checked_sub(1) {
                    Some(prev) => {
                        let octaves = (snr.db() - snrs[prev].db()) / 10.0 * LOG2_10;
                        row.extend(
                            c.iter()
                                .zip(&rates[prev])
                                .map(|(now, before)| Cell::Num((now - before) / octaves)),
                        );
                    }
                    None => row.extend(std::iter::repeat_n(Cell::Empty, c.len())),
                }
            }
            rates.push(c);
            table.push(row);
        }
        Ok(table)
    }

    fn operating_point(&self, n: usize, rho: Snr, names: &[String]) -> CliResult<Table> {
        check_n(n)?;
        let cols = [
            "receiver",
            "n",
            "rho_db",
            "rho",
            "mu_star",
            "q0_star",
            "lambda_max",
            "sum_rate",
            "branch",
            "mu_0",
        ];
        let mut table = Table::new(cols.iter().map(|c| c.to_string()).collect());
        for r in self.analytic(names)? {
            let (op, mu_0) = match r.model() {
                ReceiverModel::Collision => (collision_optimum(n, rho.linear())?, None),
                _ => {
                    let (op, diag) = sum_rate_max(n, rho.linear(), r.as_ref())?;
                    (op, diag.mu_0)
                }
            };
            let branch = match op.branch {
                Branch::High => "high",
                Branch::Low => "low",
            };
            table.push(vec![
                r.name().into(),
                n.into(),
                rho.db().into(),
                rho.linear().into(),
                op.mu_star.into(),
                op.q0_star.into(),
                op.lambda_max.into(),
                op.sum_rate.into(),
                branch.into(),
                mu_0.into(),
            ]);
        }
        Ok(table)
    }

    #[allow(clippy::too_many_arguments)]
    fn simulate(
        &self,
        n: usize,
        rho: Snr,
        names: &[String],
        mu: &Values,
        q0: &Values,
        slots: u64,
        seed: u64,
    ) -> CliResult<Table> {
        check_n(n)?;
        let receivers = self.resolve(names)?;
        let cols = [
            "receiver",
            "mu",
            "q0",
            "slots",
            "throughput",
            "throughput_se",
            "p_hat",
            "p_hat_se",
            "sum_rate",
            "sum_rate_se",
        ];
        let mut table = Table::new(cols.iter().map(|c| c.to_string()).collect());
        let spec = SimSpec { slots, seed };
        let mut point = 0;
        for mu in mu.values() {
            for q0 in q0.values() {
                for st in self.paired(n, rho, mu, q0, &receivers, spec, point)? {
                    let mut row = vec![Cell::Text(st.receiver.clone()), mu.into(), q0.into(), st.slots.into()];
                    push_estimate(&mut row, st.throughput);
                    push_estimate(&mut row, st.p_hat);
                    push_estimate(&mut row, st.sum_rate);
                    table.push(row);
                }
                point += 1;
            }
        }
        Ok(table)
    }
}

fn capacity(n: usize, rho_db: &Values) -> CliResult<Table> {
    check_n(n)?;
    let mut table = Table::new(vec!["rho_db".into(), "rho".into(), "c_sum".into()]);
    for db in rho_db.values() {
        let snr = Snr::from_db(db).map_err(CliError::Usage)?;
        table.push(vec![
            db.into(),
            snr.linear().into(),
            ergodic_sum_capacity(n, snr.linear())?.into(),
        ]);
    }
    Ok(table)
}
