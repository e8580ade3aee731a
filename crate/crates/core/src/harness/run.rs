use std::fmt::Write as _;
use std::time::Duration;

use super::config::{ConfigError, RunConfig};
use super::workload::{Job, JobOutput};
use crate::engine::{run_three, Net, PartyOutcome, Setup};
use crate::party::PartyId;
use crate::transport::{MeterReport, Phase};

/// How a run ended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    /// At least one party aborted; lists each aborting party and its check.
    Abort(Vec<(PartyId, String)>),
    /// Transport or input failure outside the protocol.
    Failed(String),
}

impl RunStatus {
    pub fn name(&self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::Abort(_) => "abort",
            RunStatus::Failed(_) => "failed",
        }
    }
}

/// Result of `run`: meters, outputs and informational timings.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub workload: String,
    pub mode: &'static str,
    pub fair: bool,
    pub net: Net,
    pub seed: u64,
    pub repetitions: usize,
    pub status: RunStatus,
    /// Outputs per party from the last repetition; `None` where a party did not
    /// finish.
    pub outputs: [Option<JobOutput>; 3],
    pub expected: Option<String>,
    /// Whether every finishing party's output matches the reference.
    pub correct: Option<bool>,
    /// Meter of the first repetition.
    pub meter: MeterReport,
    /// Whether every repetition produced the same meter.
    pub meter_stable: bool,
    /// Mean wall-clock time per phase across repetitions.
    pub latency: [Duration; 3],
    /// Multiplication gates or prediction dimension.
    pub size: usize,
    pub is_circuit: bool,
}

impl RunReport {
    /// 0 ok, 2 abort, 1 for wrong outputs and other failures.
    pub fn exit_code(&self) -> i32 {
        match (&self.status, self.correct) {
            (RunStatus::Ok, Some(false)) => 1,
            (RunStatus::Ok, _) => 0,
            (RunStatus::Abort(_), _) => 2,
            (RunStatus::Failed(_), _) => 1,
        }
    }

    fn net_name(&self) -> &'static str {
        match self.net {
            Net::Memory => "memory",
            Net::Tcp => "tcp",
        }
    }

    /// Machine-readable `key=value` pairs: status, outputs, meter and timings.
    pub fn key_values(&self) -> Vec<(String, String)> {
        let mut kv = vec![
            ("status".to_string(), self.status.name().to_string()),
            ("workload".into(), self.workload.clone()),
            ("mode".into(), self.mode.to_string()),
            ("fair".into(), self.fair.to_string()),
            ("transport".into(), self.net_name().into()),
            ("seed".into(), self.seed.to_string()),
            ("repetitions".into(), self.repetitions.to_string()),
            ("meter_stable".into(), self.meter_stable.to_string()),
        ];
        if let RunStatus::Abort(list) = &self.status {
            for (p, check) in list {
                kv.push((format!("abort.{p}"), check.clone()));
            }
        }
        if let RunStatus::Failed(m) = &self.status {
            kv.push(("failure".into(), m.clone()));
        }
        for id in PartyId::ALL {
            if let Some(o) = &self.outputs[id.index()] {
                kv.push((format!("output.{id}"), o.to_string()));
            }
        }
        if let Some(e) = &self.expected {
            kv.push(("expected".into(), e.clone()));
        }
        if let Some(c) = self.correct {
            kv.push(("correct".into(), c.to_string()));
        }
        kv.extend(self.meter.key_values());
        for ph in Phase::ALL {
            kv.push((
                format!("{}.latency_us", ph.name()),
                self.latency[ph.index()].as_micros().to_string(),
            ));
        }
        kv
    }

    /// The human-readable report followed by the `key=value` section.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "workload     {}", self.workload);
        let fair = if self.fair { " (fair output)" } else { "" };
        let _ = writeln!(s, "mode         {}{fair}", self.mode);
        let _ = writeln!(s, "transport    {}", self.net_name());
        let _ = writeln!(s, "seed         {}", self.seed);
        let _ = writeln!(s, "repetitions  {}", self.repetitions);
        let _ = writeln!(s);
        match &self.status {
            RunStatus::Ok => {
                let _ = writeln!(s, "status: ok");
            }
            RunStatus::Abort(list) => {
                for (p, check) in list {
                    let _ = writeln!(s, "status: abort at {p}: {check}");
                }
            }
            RunStatus::Failed(m) => {
                let _ = writeln!(s, "status: failed: {m}");
            }
        }
        for id in PartyId::ALL {
            match &self.outputs[id.index()] {
                Some(o) => {
                    let _ = writeln!(s, "output {id}: {o}");
                }
                None => {
                    let _ = writeln!(s, "output {id}: none");
                }
            }
        }
        if let Some(e) = &self.expected {
            let verdict = match self.correct {
                Some(true) => "match",
                Some(false) => "MISMATCH",
                None => "not checked",
            };
            let _ = writeln!(s, "expected:  {e} ({verdict})");
        }
        let _ = writeln!(s);
        s.push_str(&self.meter.render());
        if !self.meter_stable {
            let _ = writeln!(s, "warning: meters differed between repetitions");
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "latency (mean per run, this machine; not comparable across hardware)"
        );
        for ph in Phase::ALL {
            let _ = writeln!(
                s,
                "  {:<8} {:>12.3} ms",
                ph.name(),
                self.latency[ph.index()].as_secs_f64() * 1e3
            );
        }
        let work = self.latency[Phase::Offline.index()] + self.latency[Phase::Online.index()];
        if !work.is_zero() {
            let per_sec = 1.0 / work.as_secs_f64();
            if self.is_circuit {
                let _ = writeln!(
                    s,
                    "  throughput {:.0} mul gates/s (offline + online)",
                    per_sec * self.size as f64
                );
            } else {
                let _ = writeln!(s, "  throughput {per_sec:.1} queries/s (offline + online)");
            }
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "--- key=value");
        for (k, v) in self.key_values() {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }
}

/// Errors that stop a run before any protocol starts.
pub type RunResult = Result<RunReport, ConfigError>;

/// Runs the configured workload at three in-process parties, `repetitions`
/// times with the same seed.
pub fn cmd_run(cfg: &RunConfig) -> RunResult {
    let job = Job::from_config(cfg)?;
    let faults = cfg.load_faults()?;
    let setup = Setup::seeded(cfg.seed)
        .with_net(cfg.net)
        .with_faults(faults)
        .with_timeout(cfg.timeout);
    let mut meter: Option<MeterReport> = None;
    let mut stable = true;
    let mut total = [Duration::ZERO; 3];
    let mut last = None;
    for _ in 0..cfg.repetitions {
        let run = run_three(&setup, |p| job.execute(p));
        match &meter {
            None => meter = Some(run.report.clone()),
            Some(m) => stable &= *m == run.report,
        }
        for (t, x) in total.iter_mut().zip(run.phase_times) {
            *t += x;
        }
        last = Some(run);
    }
    let run = last.expect("at least one repetition");
    let aborts: Vec<(PartyId, String)> = PartyId::ALL
        .iter()
        .zip(&run.outcomes)
        .filter_map(|(id, o)| match o {
            PartyOutcome::Aborted(c) => Some((*id, c.clone())),
            _ => None,
        })
        .collect();
    let status = if !aborts.is_empty() {
        RunStatus::Abort(aborts)
    } else if let Some(f) = run.failure() {
        RunStatus::Failed(f.to_string())
    } else {
        RunStatus::Ok
    };
    let outputs = run.outcomes.each_ref().map(|o| o.output().cloned());
    let correct = job.expected.as_ref().and_then(|e| {
        let finished: Vec<&JobOutput> = outputs.iter().flatten().collect();
        (!finished.is_empty()).then(|| finished.iter().all(|o| e.accepts(o)))
    });
    let reps = cfg.repetitions as u32;
    Ok(RunReport {
        workload: job.description.clone(),
        mode: cfg.mode.name(),
        fair: cfg.fair,
        net: cfg.net,
        seed: cfg.seed,
        repetitions: cfg.repetitions,
        status,
        outputs,
        expected: job.expected.as_ref().map(|e| e.to_string()),
        correct,
        meter: meter.expect("at least one repetition"),
        meter_stable: stable,
        latency: total.map(|t| t / reps),
        size: job.size(),
        is_circuit: job.is_circuit(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{CircuitSource, Workload};
    use crate::ml::{Mode, ModelKind};

    #[test]
    fn semi_aes_online_elements_are_twice_the_and_gates_plus_io() {
        let cfg = RunConfig {
            workload: Workload::Circuit(CircuitSource::Aes128),
            ..Default::default()
        };
        let r = cmd_run(&cfg).unwrap();
        assert_eq!(r.exit_code(), 0, "{}", r.render());
        assert_eq!(r.correct, Some(true));
        let io = 2 * 128 + 128 + 1 + 3 * 128;
        assert_eq!(r.meter.elements(Phase::Online), 2 * 6800 + io);
        assert!(r.render().contains("status=ok"));
    }

    #[test]
    fn repeated_runs_keep_the_same_meter() {
        let cfg = RunConfig {
            mode: Mode::Mal,
            repetitions: 3,
            triples: crate::engine::TripleParams::default().with_bucket(2),
            ..Default::default()
        };
        let r = cmd_run(&cfg).unwrap();
        assert!(r.meter_stable);
        assert_eq!(r.exit_code(), 0);
    }

    #[test]
    fn mal_linreg_online_elements() {
        let cfg = RunConfig {
            mode: Mode::Mal,
            workload: Workload::Predict {
                kind: ModelKind::LinReg,
                dim: 784,
                model: None,
                query: None,
            },
            triples: crate::engine::TripleParams::default().with_bucket(2),
            ..Default::default()
        };
        let r = cmd_run(&cfg).unwrap();
        assert_eq!(r.correct, Some(true));
        assert_eq!(r.meter.elements(Phase::Online), 2 * 784 + 2);
    }

    #[test]
    fn config_errors_stop_before_running() {
        let cfg = RunConfig {
            repetitions: 0,
            ..Default::default()
        };
        assert!(matches!(cmd_run(&cfg), Err(ConfigError::Invalid(_))));
    }
}
