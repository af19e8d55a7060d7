//! Command-line front end: scenario parsing and validation, the five
//! subcommands, and run manifests.

pub mod commands;
pub mod error;
pub mod manifest;
pub mod scenario;

use std::path::Path;

pub use commands::{Command, CommandOutput, Output};
pub use error::{CliError, Issue};
pub use manifest::{FileRecord, RunManifest, RunRecord};
pub use scenario::Scenario;

/// Overrides given on the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, sc: &mut Scenario) {
        if let Some(seed) = self.seed {
            sc.seed = seed;
        }
        if let Some(n) = self.samples {
            sc.dynamics.n_samples = n;
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub record: RunRecord,
    pub summary: String,
}

/// Validates the scenario, runs `cmd` and, only if it succeeds, writes its
/// outputs, the resolved scenario and the updated manifest into `out`.
pub fn run(cmd: Command, scenario: &Scenario, out: &Path) -> Result<RunReport, CliError> {
    let started = manifest::unix_millis();
    scenario.validate()?;
    let result = commands::execute(cmd, scenario)?;

    let scenario_file = format!("{}.scenario.json", cmd.name());
    let scenario_json = scenario.to_json();
    let mut files = result.files;
    files.push(Output { path: scenario_file.clone(), bytes: scenario_json.clone().into_bytes() });

    let io = |e: std::io::Error, p: &Path| CliError::Io(format!("{}: {e}", p.display()));
    let mut records = Vec::with_capacity(files.len());
    for f in &files {
        let target = out.join(&f.path);
        if let Some(parent) = target.parent() {
            std::fs::create_dir_all(parent).map_err(|e| io(e, parent))?;
        }
        std::fs::write(&target, &f.bytes).map_err(|e| io(e, &target))?;
        records.push(FileRecord { path: f.path.clone(), sha256: manifest::sha256_hex(&f.bytes), bytes: f.bytes.len() as u64 });
    }
    let record = RunRecord {
        command: cmd.name().into(),
        scenario_file,
        scenario_sha256: manifest::sha256_hex(scenario_json.as_bytes()),
        seed: scenario.seed,
        started_unix_ms: started,
        finished_unix_ms: manifest::unix_millis(),
        outputs: records,
    };
    let mut m = RunManifest::load_or_new(out);
    m.runs.insert(cmd.name().into(), record.clone());
    let path = out.join(manifest::MANIFEST_FILE);
    std::fs::write(&path, m.to_json()).map_err(|e| io(e, &path))?;
    Ok(RunReport { record, summary: result.summary })
}
