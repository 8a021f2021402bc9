//! Pluggable MILP backends: the bundled exact solver or an external command.

use std::path::Path;
use std::process::Command;

use log::info;

use crate::branch::reference_solve;
use crate::error::SolveError;
use crate::model::MixedIntegerModel;
use crate::mps::emit_mps;
use crate::solution::{parse_solution, SolutionVector, SolveOptions};

/// Environment variable holding an external solver command template.
pub const SOLVER_CMD_ENV: &str = "DECARB_SOLVER_CMD";

pub trait MilpBackend {
    fn name(&self) -> &str;
    fn solve(&self, model: &MixedIntegerModel, options: &SolveOptions) -> Result<SolutionVector, SolveError>;
}

#[derive(Debug, Clone, Default)]
pub struct ReferenceBackend;

impl MilpBackend for ReferenceBackend {
    fn name(&self) -> &str {
        "reference"
    }

    fn solve(&self, model: &MixedIntegerModel, options: &SolveOptions) -> Result<SolutionVector, SolveError> {
        reference_solve(model, options)
    }
}

/// Runs a shell command template; `{mps}` and `{sol}` are replaced by file
/// paths. The command must write a solution file in the format of
/// [`crate::solution::write_solution`].
#[derive(Debug, Clone)]
pub struct CommandBackend {
    pub template: String,
}

impl CommandBackend {
    pub fn from_env() -> Option<Self> {
        std::env::var(SOLVER_CMD_ENV)
            .ok()
            .filter(|s| !s.trim().is_empty())
            .map(|template| CommandBackend { template })
    }

    fn run_in(&self, dir: &Path, model: &MixedIntegerModel) -> Result<SolutionVector, SolveError> {
        let mps = dir.join("model.mps");
        let sol = dir.join("model.sol");
        std::fs::write(&mps, emit_mps(model))?;
        let cmd = self
            .template
            .replace("{mps}", &mps.to_string_lossy())
            .replace("{sol}", &sol.to_string_lossy());
        info!("running external solver: {cmd}");
        let out = Command::new("sh").arg("-c").arg(&cmd).output()?;
        if !out.status.success() {
            return Err(SolveError::External(format!(
                "`{cmd}` exited with {}: {}",
                out.status,
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        let text = std::fs::read_to_string(&sol)
            .map_err(|e| SolveError::External(format!("cannot read {}: {e}", sol.display())))?;
        parse_solution(&text, model)
    }
}

impl MilpBackend for CommandBackend {
    fn name(&self) -> &str {
        "command"
    }

    fn solve(&self, model: &MixedIntegerModel, _options: &SolveOptions) -> Result<SolutionVector, SolveError> {
        let dir = tempfile::tempdir()?;
        self.run_in(dir.path(), model)
    }
}

/// External command when the environment names one, the bundled solver otherwise.
pub fn default_backend() -> Box<dyn MilpBackend> {
    match CommandBackend::from_env() {
        Some(b) => Box::new(b),
        None => Box::new(ReferenceBackend),
    }
}
