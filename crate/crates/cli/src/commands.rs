//! Command implementations.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use lrdproc::analytics::{
    covariance_report, estimate_hurst_with, hurst_of_state, indicator_series, inter_arrival_summary,
    variance_growth, write_curves, write_rows, CurvePoint, HurstEstimate, ReportRow,
};
use lrdproc::{
    enumerate_all, joint_probability, sample_batch, EngineConfig, OccupancyPattern, Params, SampleBatch,
    SamplerConfig, Strategy, StrategyChoice,
};

use crate::args::{parse_list, Command, Options, SampleFormat};
use crate::failure::{Failure, EXIT_IO};

/// Everything that determines a command's output, resolved up front.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub params_path: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub n: Option<usize>,
    pub replicates: Option<usize>,
    pub lags: Vec<u64>,
    pub blocks: Option<Vec<usize>>,
    pub strategy: StrategyChoice,
    pub parallelism: usize,
    pub cap_a0: usize,
    pub cap_frontier: usize,
}

impl RunConfig {
    pub fn resolve(opts: Options, command: Command) -> Result<Self, Failure> {
        let lags = match &opts.lags {
            Some(text) => parse_list(text).map_err(Failure::usage)?,
            None => (1..=10).collect(),
        };
        if lags.contains(&0) {
            return Err(Failure::usage("lags must be positive"));
        }
        let blocks = opts
            .blocks
            .as_deref()
            .map(|t| parse_list(t).map(|v| v.into_iter().map(|b| b as usize).collect()))
            .transpose()
            .map_err(Failure::usage)?;
        Ok(Self {
            command,
            params_path: opts.params,
            out: opts.out,
            seed: opts.seed,
            n: opts.n,
            replicates: opts.replicates,
            lags,
            blocks,
            strategy: opts.strategy,
            parallelism: opts.parallelism.max(1),
            cap_a0: opts.cap_a0,
            cap_frontier: opts.cap_frontier,
        })
    }

    pub fn engine(&self) -> EngineConfig {
        EngineConfig {
            cap_a0: self.cap_a0,
            frontier_cap: self.cap_frontier,
            ..EngineConfig::default()
        }
    }

    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            frontier_cap: self.cap_frontier,
        }
    }

    fn params_text(&self) -> Result<String, Failure> {
        let path = self
            .params_path
            .as_ref()
            .ok_or_else(|| Failure::usage("--params is required"))?;
        fs::read_to_string(path).map_err(|e| Failure::new(EXIT_IO, "params.file", format!("{}: {e}", path.display())))
    }

    pub fn params(&self) -> Result<Params, Failure> {
        Ok(Params::from_toml_str(&self.params_text()?)?)
    }

    /// `#`-prefixed block echoing the artifact version, the parameters and
    /// every setting that affects the output. Thread count and output path
    /// are left out since they never change the bytes written.
    pub fn header(&self, params: &Params) -> String {
        let mut h = format!("# lrdproc {}\n# command: {}\n", env!("CARGO_PKG_VERSION"), self.command.name());
        h.push_str(&format!("# params_digest: {}\n", params.digest()));
        for line in params.to_toml_string().lines() {
            h.push_str(&format!("# params: {line}\n"));
        }
        h.push_str(&format!("# seed: {}\n", self.seed));
        let opt = |v: Option<usize>| v.map_or_else(|| "default".to_string(), |x| x.to_string());
        let join = |v: &[u64]| v.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        let blocks = self.blocks.as_ref().map_or_else(
            || "default".to_string(),
            |b| b.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
        );
        h.push_str(&format!(
            "# config: n={} replicates={} lags={} blocks={} strategy={} cap_a0={} cap_frontier={}\n",
            opt(self.n),
            opt(self.replicates),
            join(&self.lags),
            blocks,
            strategy_name(self.strategy),
            self.cap_a0,
            self.cap_frontier
        ));
        match &self.command {
            Command::Prob { pattern, pattern_text } => {
                if let Some(p) = pattern {
                    h.push_str(&format!("# pattern_file: {}\n", p.display()));
                }
                if let Some(t) = pattern_text {
                    for line in t.lines() {
                        h.push_str(&format!("# pattern: {line}\n"));
                    }
                }
            }
            Command::Sample { format } => h.push_str(&format!("# format: {}\n", format!("{format:?}").to_lowercase())),
            Command::Analyze { input: Some(p), .. } => h.push_str(&format!("# input: {}\n", p.display())),
            Command::Fracmult { grid: Some(g), .. } => h.push_str(&format!("# grid: {g}\n")),
            _ => {}
        }
        h
    }
}

fn strategy_name(s: StrategyChoice) -> &'static str {
    match s {
        StrategyChoice::Recursive => "recursive",
        StrategyChoice::Dp => "dp",
        StrategyChoice::Auto => "auto",
    }
}

fn used_strategy(s: Strategy) -> &'static str {
    match s {
        Strategy::Recursion => "recursion",
        Strategy::DynamicProgram => "dp",
        Strategy::ClosedForm => "closed_form",
    }
}

pub fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            fs::File::create(p).map_err(|e| Failure::new(EXIT_IO, "io", format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn validate(cfg: &RunConfig) -> Result<(), Failure> {
    let text = cfg.params_text()?;
    let raw = Params::from_toml_str_unchecked(&text)?;
    let verdict = Params::new(raw.hurst_vec().to_vec(), raw.prob_vec().to_vec(), raw.coupling_vec().to_vec());
    let mut out = open_out(cfg.out.as_deref())?;
    out.write_all(cfg.header(verdict.as_ref().unwrap_or(&raw)).as_bytes())?;
    for (k, t) in raw.validation_terms().iter().enumerate() {
        writeln!(out, "term_{}={:.16e}", k + 1, t)?;
    }
    let sum = raw.validation_sum();
    writeln!(out, "sum_exact={sum:.16e}")?;
    let status = if verdict.is_ok() { "PASS" } else { "FAIL" };
    writeln!(out, "sum={sum:.3} {status}")?;
    out.flush()?;
    verdict.map(|_| ()).map_err(Failure::from)
}

pub fn prob(cfg: &RunConfig, pattern: Option<&Path>, text: Option<&str>) -> Result<(), Failure> {
    let params = cfg.params()?;
    let source = match (pattern, text) {
        (Some(p), _) => fs::read_to_string(p).map_err(|e| Failure::new(EXIT_IO, "pattern.file", format!("{}: {e}", p.display())))?,
        (None, Some(t)) => t.to_string(),
        (None, None) => return Err(Failure::usage("prob needs --pattern or --pattern-text")),
    };
    let pat = OccupancyPattern::parse(&source)?;
    if pat.is_empty() {
        return Err(Failure::new(EXIT_IO, "pattern.parse", "pattern is empty"));
    }
    let mut engine = cfg.engine();
    engine.horizon = engine.horizon.max(pat.max_index().unwrap_or(0));
    let r = joint_probability(&params, &pat, cfg.strategy, &engine)?;
    let mut out = open_out(cfg.out.as_deref())?;
    out.write_all(cfg.header(&params).as_bytes())?;
    writeln!(out, "pattern={pat}")?;
    writeln!(out, "probability={:.16e}", r.value)?;
    writeln!(out, "ln_probability={:.16e}", r.ln_value)?;
    writeln!(out, "strategy={}", used_strategy(r.strategy))?;
    writeln!(out, "base_state_times={}", r.condition_count)?;
    writeln!(out, "condition_estimate={:.6e}", r.condition_estimate)?;
    writeln!(out, "tainted={}", r.tainted)?;
    if r.ill_conditioned() {
        writeln!(out, "# warning: heavy cancellation in the signed sum")?;
    }
    out.flush()?;
    Ok(())
}

pub fn sample(cfg: &RunConfig, format: SampleFormat) -> Result<(), Failure> {
    let params = cfg.params()?;
    let batch = sample_batch(
        &params,
        cfg.n.unwrap_or(50),
        cfg.replicates.unwrap_or(1),
        cfg.seed,
        cfg.parallelism,
        &cfg.sampler(),
    )?;
    let mut out = open_out(cfg.out.as_deref())?;
    out.write_all(cfg.header(&params).as_bytes())?;
    match format {
        SampleFormat::Csv => batch.write_csv(&mut out)?,
        SampleFormat::Compact => batch.write_compact(&mut out)?,
    }
    out.flush()?;
    Ok(())
}

/// Reads `replicate,index,state` rows back into paths.
pub fn read_paths(text: &str, m: usize) -> Result<Vec<Vec<u8>>, Failure> {
    let bad = |line: usize, msg: &str| Failure::new(EXIT_IO, "input.parse", format!("line {line}: {msg}"));
    let mut paths: Vec<Vec<u8>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("replicate") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(bad(i + 1, "expected replicate,index,state"));
        }
        let parse = |s: &str| s.trim().parse::<usize>().map_err(|_| bad(i + 1, "non-integer field"));
        let (r, idx, s) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
        if s > m {
            return Err(bad(i + 1, "state outside 0..=m"));
        }
        if r == paths.len() {
            paths.push(Vec::new());
        }
        let path = paths.get_mut(r).ok_or_else(|| bad(i + 1, "replicates out of order"))?;
        if idx != path.len() + 1 {
            return Err(bad(i + 1, "indices must run 1, 2, ... within a replicate"));
        }
        path.push(s as u8);
    }
    if paths.is_empty() {
        return Err(Failure::new(EXIT_IO, "input.parse", "no paths in input"));
    }
    Ok(paths)
}

fn hurst_row(est: &HurstEstimate, pooled: usize, theory: f64) -> ReportRow {
    ReportRow {
        metric: "hurst".into(),
        state: est.state.map_or_else(|| "-".into(), |k| k.to_string()),
        at: pooled as u64,
        empirical: est.estimate,
        stderr: est.fit.slope_stderr / 2.0,
        theoretical: theory,
    }
}

pub fn analyze(cfg: &RunConfig, input: Option<&Path>, curves: Option<&Path>) -> Result<(), Failure> {
    let params = cfg.params()?;
    let m = params.m();
    let paths: Vec<Vec<u8>> = match input {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::new(EXIT_IO, "input.file", format!("{}: {e}", p.display())))?;
            read_paths(&text, m)?
        }
        None => {
            let batch: SampleBatch = sample_batch(
                &params,
                cfg.n.unwrap_or(4096),
                cfg.replicates.unwrap_or(16),
                cfg.seed,
                cfg.parallelism,
                &cfg.sampler(),
            )?;
            batch.paths.into_iter().map(|p| p.states).collect()
        }
    };
    let pooled: usize = paths.iter().map(Vec::len).sum();
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    let mut curve: Vec<CurvePoint> = Vec::new();

    let pairs: Vec<(usize, usize)> = (0..=m).flat_map(|a| (a..=m).map(move |b| (a, b))).collect();
    rows.extend(covariance_report(&params, &paths, &pairs, &cfg.lags)?.iter().map(|c| c.row()));

    let top_h = params.hurst_vec().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for k in 0..=m {
        let est = match &cfg.blocks {
            Some(b) => estimate_hurst_with(&indicator_series(&paths, k), b).map(|mut e| {
                e.state = Some(k);
                e
            }),
            None => hurst_of_state(&paths, k),
        };
        match est {
            Ok(e) => {
                rows.push(hurst_row(&e, pooled, if k == 0 { top_h } else { params.hurst(k) }));
                curve.extend(e.curve());
            }
            Err(e) => notes.push(format!("# skipped hurst state {k}: {e}")),
        }
    }
    for k in 1..=m {
        match inter_arrival_summary(&params, &paths, k) {
            Ok(s) => {
                rows.extend(s.rows());
                curve.extend(s.curve());
            }
            Err(e) => notes.push(format!("# skipped interarrival state {k}: {e}")),
        }
    }

    let mut out = open_out(cfg.out.as_deref())?;
    out.write_all(cfg.header(&params).as_bytes())?;
    writeln!(out, "# replicates: {} pooled_length: {pooled}", paths.len())?;
    for n in &notes {
        writeln!(out, "{n}")?;
    }
    write_rows(&mut out, &rows)?;
    out.flush()?;
    if let Some(p) = curves {
        let mut c = open_out(Some(p))?;
        c.write_all(cfg.header(&params).as_bytes())?;
        write_curves(&mut c, &curve)?;
        c.flush()?;
    }
    Ok(())
}

pub fn fracmult(cfg: &RunConfig, grid: Option<&str>, curves: Option<&Path>) -> Result<(), Failure> {
    let params = cfg.params()?;
    let ns: Vec<usize> = match grid {
        Some(g) => parse_list(g).map_err(Failure::usage)?.into_iter().map(|n| n as usize).collect(),
        None => (6..=12).map(|e| 1usize << e).collect(),
    };
    let growth = variance_growth(
        &params,
        &ns,
        cfg.replicates.unwrap_or(1000),
        cfg.seed,
        cfg.parallelism,
        &cfg.sampler(),
    )?;
    let mut out = open_out(cfg.out.as_deref())?;
    out.write_all(cfg.header(&params).as_bytes())?;
    write_rows(&mut out, &growth.rows())?;
    out.flush()?;
    if let Some(p) = curves {
        let mut c = open_out(Some(p))?;
        c.write_all(cfg.header(&params).as_bytes())?;
        write_curves(&mut c, &growth.curve())?;
        c.flush()?;
    }
    Ok(())
}

pub fn enumerate(cfg: &RunConfig) -> Result<(), Failure> {
    let params = cfg.params()?;
    let table = enumerate_all(&params, cfg.n.unwrap_or(4))?;
    let mut out = open_out(cfg.out.as_deref())?;
    out.write_all(cfg.header(&params).as_bytes())?;
    out.write_all(table.to_csv().as_bytes())?;
    out.flush()?;
    Ok(())
}
