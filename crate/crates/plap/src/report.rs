//! JSON reports. Every report carries the hashes of the configuration it was produced from.

use std::path::Path;

use plap_core::dynamics::{AbsorbReport, CompactReport, ContractionReport};
use plap_core::ValidationReport;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub experiment: &'static str,
    pub spec_hash: String,
    pub config_hash: String,
    pub seed: u64,
    pub passed: bool,
    #[serde(flatten)]
    pub body: Body,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Body {
    Validate(ValidateBody),
    Simulate(SimulateBody),
    Contract(ContractBody),
    Absorb(AbsorbBody),
    Compact(CompactBody),
    Attractor(AttractorBody),
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionJson {
    pub condition: &'static str,
    pub passed: bool,
    pub estimate: f64,
    pub secondary: f64,
    pub location: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub refinements: Vec<f64>,
    pub message: String,
}

impl From<&ValidationReport> for ConditionJson {
    fn from(r: &ValidationReport) -> Self {
        ConditionJson {
            condition: r.condition.label(),
            passed: r.passed,
            estimate: r.estimate,
            secondary: r.secondary,
            location: r.location,
            refinements: r.refinements.clone(),
            message: r.message.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidateBody {
    pub conditions: Vec<ConditionJson>,
    pub grid_nodes: usize,
    pub spacing: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateBody {
    pub t_start: f64,
    pub t_final: f64,
    pub steps: usize,
    pub final_l2: f64,
    pub max_balance_residual: f64,
    pub snapshots: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionJson {
    pub pair: usize,
    pub c: f64,
    pub initial_distance: f64,
    pub max_ratio: f64,
    /// `[t, ratio]` per checkpoint.
    pub ratios: Vec<[f64; 2]>,
    pub passed: bool,
}

impl ContractionJson {
    pub fn new(pair: usize, r: &ContractionReport) -> Self {
        ContractionJson {
            pair,
            c: r.c,
            initial_distance: r.initial_distance,
            max_ratio: r.max_ratio,
            ratios: r.ratios.iter().map(|&(t, q)| [t, q]).collect(),
            passed: r.passed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractBody {
    pub contraction: Vec<ContractionJson>,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntryJson {
    pub initial_l2_sq: f64,
    pub entry_time: Option<f64>,
    pub exits: usize,
    pub decay_rate: Option<f64>,
    pub final_l2_sq: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AbsorbBody {
    pub embedding_constant: f64,
    pub rho_sq: f64,
    pub c1_h: f64,
    pub c2_h: f64,
    pub g_l2_sq: f64,
    pub c1_emp: Option<f64>,
    pub horizon: f64,
    pub t0: Option<f64>,
    pub entries: Vec<EntryJson>,
}

impl From<&AbsorbReport> for AbsorbBody {
    fn from(r: &AbsorbReport) -> Self {
        AbsorbBody {
            embedding_constant: r.radius.embedding_constant,
            rho_sq: r.radius.rho_sq,
            c1_h: r.radius.c1_h,
            c2_h: r.radius.c2_h,
            g_l2_sq: r.radius.g_l2_sq,
            c1_emp: r.c1_emp,
            horizon: r.horizon,
            t0: r.t0,
            entries: r
                .entries
                .iter()
                .map(|e| EntryJson {
                    initial_l2_sq: e.initial_l2_sq,
                    entry_time: e.entry_time,
                    exits: e.exits,
                    decay_rate: e.decay_rate,
                    final_l2_sq: e.final_l2_sq,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeJson {
    pub p: f64,
    pub epsilon: f64,
    pub c1: f64,
    pub c5: f64,
    pub value: f64,
    pub min_late_d_sq: f64,
    pub holds: bool,
    /// The envelope is a fitted finite-time proxy, not a proof of compactness.
    pub heuristic: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompactBody {
    /// `[t, D(t)]` per checkpoint.
    pub diameters: Vec<[f64; 2]>,
    pub shrinking: bool,
    pub envelope: EnvelopeJson,
}

impl From<&CompactReport> for CompactBody {
    fn from(r: &CompactReport) -> Self {
        let e = &r.envelope;
        CompactBody {
            diameters: r.times.iter().zip(&r.diameters).map(|(&t, &d)| [t, d]).collect(),
            shrinking: r.shrinking,
            envelope: EnvelopeJson {
                p: e.p,
                epsilon: e.epsilon,
                c1: e.c1,
                c5: e.c5,
                value: e.value,
                min_late_d_sq: e.min_late_d_sq,
                holds: e.holds,
                heuristic: true,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AttractorBody {
    pub t_burn: f64,
    pub spacing: f64,
    /// `‖u‖` of each snapshot, one row per trajectory.
    pub norms: Vec<Vec<f64>>,
    /// Largest pairwise distance among the final snapshots.
    pub spread: f64,
    pub tolerance: f64,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports are always serializable");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }
}
