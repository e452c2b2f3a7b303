//! End-to-end runs of a configured experiment.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::{ExperimentConfig, HarnessSettings};
use crate::harness::{
    build_slice_table, index_function, rotation_search, Objective, Provenance, SliceTable, VerificationReport,
};
use crate::lang::{validate_cover, CoverSpec, CoverValidation};
use crate::measures::{Execution, MeasureEstimate, RngStream, Surface};
use crate::partition::{PartitionHandle, ScalePresence};
use crate::Error;

/// Version of the JSON report layout.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

// Stream ids under the config seed. Each stage draws from its own stream so
// changing one budget leaves the others' draws untouched.
const VALIDATION_STREAM: u64 = 1;
const SLICES_STREAM: u64 = 2;
const CERTIFICATE_STREAM: u64 = 3;
const BASE_MASS_STREAM: u64 = 4;
const SURFACE_MASS_STREAM: u64 = 5;
const SCALE_STREAM: u64 = 6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceChecks {
    /// Grid points where the parts' slices fail to cover the fibre.
    pub cover_violations: Vec<usize>,
    /// Grid points where no slice reaches `1/t`.
    pub pigeonhole_violations: Vec<usize>,
}

/// The JSON document written by `verify`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub surface: String,
    pub partition: String,
    pub cover: Vec<String>,
    pub harness: HarnessSettings,
    /// Estimated mass missed by the cover.
    pub uncovered: MeasureEstimate,
    pub slice_checks: SliceChecks,
    pub verification: VerificationReport,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// A config turned into live objects.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub surface: Surface,
    pub handle: PartitionHandle,
}

#[derive(Debug)]
pub struct VerifyOutcome {
    pub report: ExperimentReport,
    pub table: SliceTable,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Self {
        let surface = Surface::new(config.surface.clone());
        let handle = PartitionHandle::new(surface.clone(), config.partition.clone());
        Experiment { config, surface, handle }
    }

    fn stream(&self, id: u64) -> RngStream {
        RngStream::new(self.config.seed, id)
    }

    /// Checks that the cover covers the surface and absorbs the axis into its
    /// first part. A cover missing positive mass is an error.
    pub fn validated_cover(&self, exec: Execution) -> Result<CoverValidation, Error> {
        let cover = CoverSpec::new(self.config.cover.clone(), self.surface.clone())?;
        let h = &self.config.harness;
        let v = validate_cover(&cover, h.validation_samples, h.z, self.stream(VALIDATION_STREAM), exec)?;
        if !v.covers {
            return Err(Error::Uncovered(v.uncovered));
        }
        Ok(v)
    }

    pub fn slice_table(&self, cover: &CoverSpec, exec: Execution) -> Result<SliceTable, Error> {
        let h = &self.config.harness;
        Ok(build_slice_table(cover, h.grid, h.samples_per_cell, self.stream(SLICES_STREAM), exec)?)
    }

    /// The full pipeline: validation, slice table, index function, search
    /// and certificate.
    pub fn verify(&self, exec: Execution) -> Result<VerifyOutcome, Error> {
        let validation = self.validated_cover(exec)?;
        let cover = &validation.cover;
        let table = self.slice_table(cover, exec)?;
        let idx = index_function(&table);
        let h = &self.config.harness;
        let mut verification =
            rotation_search(cover, &self.handle, &table, &idx, &h.search(), self.stream(CERTIFICATE_STREAM), exec)?;
        verification.provenance =
            Some(Provenance { config_sha256: self.config.config_sha256.clone(), seed: self.config.seed });
        let report = ExperimentReport {
            schema_version: REPORT_SCHEMA_VERSION,
            surface: self.config.surface.to_string(),
            partition: self.config.partition.to_string(),
            cover: self.config.cover_source(),
            harness: *h,
            uncovered: validation.uncovered,
            slice_checks: SliceChecks {
                cover_violations: table.cover_violations(h.z),
                pigeonhole_violations: table.pigeonhole_violations(h.z),
            },
            verification,
        };
        Ok(VerifyOutcome { report, table })
    }

    /// Writes whichever of the report, slice table and objective curves the
    /// config names.
    pub fn write_outputs(&self, outcome: &VerifyOutcome, exec: Execution) -> Result<(), Error> {
        let out = &self.config.output;
        if let Some(p) = &out.report {
            write_file(p, |w| w.write_all(outcome.report.to_json().as_bytes()))?;
        }
        if let Some(p) = &out.slices {
            write_file(p, |w| outcome.table.write_csv(w))?;
        }
        if let Some(p) = &out.objective {
            write_file(p, |w| Objective::new(&outcome.table, &self.handle).write_csv(w, exec))?;
        }
        Ok(())
    }

    pub fn partition_stats(
        &self,
        depth: u32,
        samples_per_interval: u64,
        exec: Execution,
    ) -> Result<PartitionStats, Error> {
        let n = self.config.harness.validation_samples;
        let base = &self.config.partition;
        Ok(PartitionStats {
            partition: base.to_string(),
            surface: self.config.surface.to_string(),
            base_masses: base.base_masses(n, self.stream(BASE_MASS_STREAM), exec),
            surface_masses: self.handle.partition_masses(n, self.stream(SURFACE_MASS_STREAM), exec)?,
            scale_presence: base.scale_presence(depth, samples_per_interval, self.stream(SCALE_STREAM), exec),
        })
    }
}

/// Output of `partition-stats`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionStats {
    pub partition: String,
    pub surface: String,
    /// `μ₁(E_i^C)`.
    pub base_masses: Vec<MeasureEstimate>,
    /// `μ(E_i^X)`.
    pub surface_masses: Vec<MeasureEstimate>,
    pub scale_presence: ScalePresence,
}

/// Creates `path` (and its parent directories) and fills it via `fill`.
pub fn write_file(path: &Path, fill: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Error> {
    let io_err = |source| Error::Io { path: path.display().to_string(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err)?;
    }
    let mut w = BufWriter::new(fs::File::create(path).map_err(io_err)?);
    fill(&mut w).and_then(|()| w.flush()).map_err(io_err)
}
