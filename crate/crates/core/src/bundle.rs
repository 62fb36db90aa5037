//! Self-contained certificate bundles: the inputs, a digest of them, the
//! seed and PRNG, the pipeline trace and the final certificate.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::certificate::{reverify, CertInputs, Reverification, SubspaceCertificate};
use crate::error::Result;
use crate::pipeline::{Mode, PipelineTrace};
use crate::random::PRNG_ALGORITHM;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateBundle {
    pub inputs: CertInputs,
    /// SHA-256 of the JSON encoding of `inputs`, hex.
    pub inputs_digest: String,
    pub seed: u64,
    pub prng: String,
    pub mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trace: Option<PipelineTrace>,
    pub certificate: SubspaceCertificate,
}

pub fn digest_inputs(inputs: &CertInputs) -> Result<String> {
    let json = serde_json::to_vec(inputs)?;
    Ok(hex::encode(Sha256::digest(&json)))
}

impl CertificateBundle {
    pub fn new(
        inputs: CertInputs,
        seed: u64,
        mode: Mode,
        trace: Option<PipelineTrace>,
        certificate: SubspaceCertificate,
    ) -> Result<Self> {
        Ok(Self {
            inputs_digest: digest_inputs(&inputs)?,
            inputs,
            seed,
            prng: PRNG_ALGORITHM.to_string(),
            mode,
            trace,
            certificate,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Recomputes everything in `bundle` from its stored inputs: the digest,
/// every measured value and inequality of the certificate, and the
/// monotonicity of the trace.
pub fn verify_bundle(bundle: &CertificateBundle) -> Result<Reverification> {
    let mut problems = Vec::new();
    let digest = digest_inputs(&bundle.inputs)?;
    if digest != bundle.inputs_digest {
        problems.push(format!(
            "inputs digest mismatch: recorded {}, recomputed {digest}",
            bundle.inputs_digest
        ));
    }
    let cert = reverify(&bundle.certificate, &bundle.inputs)?;
    problems.extend(cert.problems);
    if let Some(trace) = &bundle.trace {
        for (i, step) in trace.steps.iter().enumerate() {
            if !step.decreases() {
                problems.push(format!(
                    "trace step {i} ({:?}): {} went from {} to {}, short of the recorded decrement {}",
                    step.kind, step.quantity, step.before, step.after, step.min_decrement
                ));
            }
        }
        if !trace.is_monotone() && problems.is_empty() {
            problems.push("trace subspaces are not nested".into());
        }
        if let Some(last) = trace.steps.last() {
            if !last.subspace.is_subspace_of(&bundle.certificate.subspace) {
                problems.push("final trace subspace is not inside the certified subspace".into());
            }
        }
    }
    Ok(Reverification {
        ok: problems.is_empty(),
        problems,
    })
}
