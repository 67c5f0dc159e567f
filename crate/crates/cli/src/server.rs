//! The `weight-server` command: a newline-delimited request/response loop
//! over stdin/stdout so external training loops can consume the weighting
//! engine without linking it.
//!
//! One JSON request per line, one JSON response per line, strictly in
//! order. The indicator state persists across requests; any malformed or
//! invalid request produces a single-line error response and leaves the
//! state untouched. The task count is fixed by the first successful
//! request.

use std::io::{BufRead, Write};

use anyhow::Result;
use serde::{Deserialize, Serialize};

use go4align::error::Error as CoreError;
use go4align::indicators::TaskRiskVector;
use go4align::weighters::{ClusterEngine, WeighterState};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Request {
    risks: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct Response<'a> {
    weights: &'a [f64],
    labels: &'a [usize],
    omega: &'a [f64],
    iteration: u64,
}

#[derive(Debug, Serialize)]
struct ErrorResponse {
    error: &'static str,
}

const E_PARSE: &str = "E_PARSE";
const E_RISK: &str = "E_RISK";
const E_PROTOCOL: &str = "E_PROTOCOL";

pub struct ServerOptions {
    pub beta: f64,
    pub k: usize,
    pub cadence: usize,
    pub engine: ClusterEngine,
}

struct Session {
    options: ServerOptions,
    state: Option<WeighterState>,
    iteration: u64,
}

impl Session {
    fn new(options: ServerOptions) -> Self {
        Self {
            options,
            state: None,
            iteration: 0,
        }
    }

    fn respond(&mut self, line: &str) -> String {
        match self.process(line) {
            Ok(response) => response,
            Err(code) => serde_json::to_string(&ErrorResponse { error: code })
                .expect("error responses serialize"),
        }
    }

    fn process(&mut self, line: &str) -> Result<String, &'static str> {
        let request: Request = serde_json::from_str(line).map_err(|_| E_PARSE)?;
        let risks = TaskRiskVector::new(request.risks, self.iteration).map_err(|e| match e {
            CoreError::InvalidTaskCount { .. }
            | CoreError::NonpositiveRisk { .. }
            | CoreError::NonFinite { .. } => E_RISK,
            _ => E_PROTOCOL,
        })?;

        if let Some(state) = &self.state {
            if risks.len() != state.task_count() {
                return Err(E_PROTOCOL);
            }
        } else {
            if self.options.k > risks.len() {
                return Err(E_PROTOCOL);
            }
            let state = WeighterState::go4align(
                risks.len(),
                self.options.beta,
                self.options.k,
                self.options.cadence,
                self.options.engine,
            )
            .map_err(|_| E_PROTOCOL)?;
            self.state = Some(state);
        }

        let state = self.state.as_mut().expect("state established above");
        // All inputs are validated; the pipeline cannot fail past here.
        let output = state.weigh(&risks).map_err(|_| E_PROTOCOL)?;
        let grouping = output.grouping.as_ref().expect("grouping strategy");
        let response = serde_json::to_string(&Response {
            weights: &output.weights,
            labels: &grouping.labels,
            omega: &grouping.omega,
            iteration: self.iteration,
        })
        .expect("responses serialize");
        self.iteration += 1;
        Ok(response)
    }
}

pub fn cmd_weight_server(options: ServerOptions) -> Result<i32> {
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut session = Session::new(options);
    for line in stdin.lock().lines() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let response = session.respond(&line);
        writeln!(out, "{response}")?;
        out.flush()?;
    }
    Ok(0)
}
