use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::foldmetrics::{read_structure_csv, FoldError, Structure};
use crate::scalar::Scalar;
use crate::seqcore::{residues_to_string, EmbeddingForm, MsaEmbedding, SequenceEmbedding};

use super::{PredictError, StructurePredictor};

pub const REQUEST_FILE: &str = "request.json";
pub const RESPONSE_FILE: &str = "response.csv";
const STDERR_FILE: &str = "stderr.log";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalConfig {
    /// Shell command; `{workdir}` is replaced by the request directory.
    pub command: String,
    pub timeout_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRequest {
    pub id: String,
    pub sequence: String,
    pub msa: Vec<String>,
}

/// Runs an out-of-process predictor through `request.json` / `response.csv`
/// files in a working directory. Forward only.
#[derive(Debug, Clone)]
pub struct ExternalPredictor {
    config: ExternalConfig,
    workdir: PathBuf,
    id: String,
}

fn workdir_lock(dir: &Path) -> Arc<Mutex<()>> {
    static LOCKS: OnceLock<Mutex<HashMap<PathBuf, Arc<Mutex<()>>>>> = OnceLock::new();
    let key = dir.canonicalize().unwrap_or_else(|_| dir.to_path_buf());
    let mut map = LOCKS
        .get_or_init(Default::default)
        .lock()
        .unwrap_or_else(|e| e.into_inner());
    map.entry(key).or_default().clone()
}

impl ExternalPredictor {
    pub fn new(config: ExternalConfig, workdir: impl Into<PathBuf>) -> Self {
        Self {
            config,
            workdir: workdir.into(),
            id: "query".into(),
        }
    }

    /// Identifier written into subsequent requests.
    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn workdir(&self) -> &Path {
        &self.workdir
    }

    pub fn run<T: Scalar>(&self, request: &PredictRequest) -> Result<Structure<T>, PredictError> {
        let lock = workdir_lock(&self.workdir);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());

        fs::create_dir_all(&self.workdir)?;
        let response = self.workdir.join(RESPONSE_FILE);
        if response.exists() {
            fs::remove_file(&response)?;
        }
        let body = serde_json::to_string_pretty(request)
            .map_err(|e| PredictError::MalformedResponse(e.to_string()))?;
        fs::write(self.workdir.join(REQUEST_FILE), body)?;

        let command = self
            .config
            .command
            .replace("{workdir}", &self.workdir.to_string_lossy());
        let stderr = fs::File::create(self.workdir.join(STDERR_FILE))?;
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&command)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(stderr)
            .spawn()
            .map_err(|e| PredictError::Spawn(format!("{command}: {e}")))?;

        let deadline = Instant::now() + Duration::from_secs_f64(self.config.timeout_secs.max(0.0));
        let status = loop {
            if let Some(status) = child.try_wait()? {
                break status;
            }
            if Instant::now() >= deadline {
                let _ = child.kill();
                let _ = child.wait();
                return Err(PredictError::Timeout {
                    secs: self.config.timeout_secs,
                });
            }
            std::thread::sleep(Duration::from_millis(5));
        };
        if !status.success() {
            let stderr = fs::read_to_string(self.workdir.join(STDERR_FILE)).unwrap_or_default();
            return Err(PredictError::CommandFailed {
                code: status.code(),
                stderr: stderr.trim().to_string(),
            });
        }

        let text = fs::read_to_string(&response).map_err(|e| {
            PredictError::MalformedResponse(format!("cannot read {}: {e}", response.display()))
        })?;
        let structure = read_structure_csv::<T>(&text).map_err(|e| match e {
            FoldError::Parse { .. } | FoldError::Empty | FoldError::NonFinite { .. } => {
                PredictError::MalformedResponse(e.to_string())
            }
            other => PredictError::Fold(other),
        })?;
        let expected = request.sequence.chars().count();
        if structure.len() != expected {
            return Err(PredictError::LengthMismatch {
                found: structure.len(),
                expected,
            });
        }
        Ok(structure)
    }
}

impl<T: Scalar> StructurePredictor<T> for ExternalPredictor {
    fn predict(
        &self,
        seq: &SequenceEmbedding<T>,
        msa: &MsaEmbedding,
    ) -> Result<Structure<T>, PredictError> {
        if seq.form() != EmbeddingForm::OneHot {
            return Err(PredictError::NotOneHot);
        }
        let residues = seq.argmax(false);
        let request = PredictRequest {
            id: self.id.clone(),
            sequence: residues_to_string(&residues),
            msa: if msa.is_empty() {
                vec![residues_to_string(&residues)]
            } else {
                msa.to_text_rows()
            },
        };
        self.run(&request)
    }

    fn describe(&self) -> String {
        format!("external({})", self.config.command)
    }
}
