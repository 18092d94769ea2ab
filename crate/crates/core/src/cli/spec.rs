use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::adversary::{ancilla_rotation, AncillaTarget, AttackStrategy, BasisPolicy};
use crate::postproc::PostProcessParams;
use crate::protocol::ProtocolConfig;
use crate::qsim::AncillaState;

/// Files `run` can write.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Artifact {
    Transcript,
    Stats,
    Table1,
    Keys,
}

impl Artifact {
    pub fn parse_list(list: &str) -> Result<Vec<Artifact>, CliError> {
        let mut out = Vec::new();
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let a = match item {
                "transcript" => Artifact::Transcript,
                "stats" => Artifact::Stats,
                "table1" => Artifact::Table1,
                "keys" => Artifact::Keys,
                other => return Err(CliError::Config(format!("unknown artifact `{other}`"))),
            };
            if !out.contains(&a) {
                out.push(a);
            }
        }
        Ok(out)
    }
}

/// Attack descriptor as written in the config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackSpec {
    #[default]
    None,
    InterceptResendC {
        #[serde(default = "default_policy")]
        basis_policy: BasisPolicy,
    },
    MeasureDeInX,
    /// Probe in |0⟩ coupled by a rotation of strength `epsilon`.
    EntangleAncilla {
        epsilon: f64,
        #[serde(default = "default_target")]
        target: AncillaTarget,
    },
}

fn default_policy() -> BasisPolicy {
    BasisPolicy::RandomPerRound
}

fn default_target() -> AncillaTarget {
    AncillaTarget::CParticle
}

impl AttackSpec {
    pub fn to_strategy(&self) -> Result<AttackStrategy, CliError> {
        Ok(match *self {
            AttackSpec::None => AttackStrategy::NoAttack,
            AttackSpec::InterceptResendC { basis_policy } => AttackStrategy::InterceptResendC { basis_policy },
            AttackSpec::MeasureDeInX => AttackStrategy::MeasureDEInX,
            AttackSpec::EntangleAncilla { epsilon, target } => {
                if !(0.0..=1.0).contains(&epsilon) {
                    return Err(CliError::Config(format!("epsilon = {epsilon} must lie in [0, 1]")));
                }
                AttackStrategy::EntangleAncilla {
                    u: ancilla_rotation(epsilon).map_err(|e| CliError::Config(e.to_string()))?,
                    ancilla: AncillaState::zero(),
                    target,
                }
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PostprocessSpec {
    pub block_size: Option<usize>,
    pub safety_margin: u64,
}

impl Default for PostprocessSpec {
    fn default() -> Self {
        let d = PostProcessParams::default();
        PostprocessSpec {
            block_size: d.block_size,
            safety_margin: d.safety_margin,
        }
    }
}

impl From<PostprocessSpec> for PostProcessParams {
    fn from(s: PostprocessSpec) -> Self {
        PostProcessParams {
            block_size: s.block_size,
            safety_margin: s.safety_margin,
        }
    }
}

/// Everything `run` needs. Campaign `r` uses seed `protocol.seed + r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignSpec {
    pub protocol: ProtocolConfig,
    pub attack: AttackSpec,
    pub repetitions: u64,
    /// Not echoed into stats.json, so runs into different directories
    /// produce identical files.
    #[serde(skip_serializing)]
    pub output_dir: PathBuf,
    pub emit: Vec<Artifact>,
    /// Length of the random secret Alice shares after a successful campaign.
    pub secret_bits: usize,
    pub postprocess: PostprocessSpec,
}

impl Default for CampaignSpec {
    fn default() -> Self {
        CampaignSpec {
            protocol: ProtocolConfig::default(),
            attack: AttackSpec::None,
            repetitions: 1,
            output_dir: PathBuf::from("out"),
            emit: vec![Artifact::Transcript, Artifact::Stats, Artifact::Keys],
            secret_bits: 128,
            postprocess: PostprocessSpec::default(),
        }
    }
}

impl CampaignSpec {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.protocol.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.repetitions == 0 {
            return Err(CliError::Config("repetitions must be at least 1".into()));
        }
        self.attack.to_strategy()?;
        if self.postprocess.block_size == Some(0) {
            return Err(CliError::Config("block_size must be at least 1".into()));
        }
        Ok(())
    }

    pub fn campaign_seed(&self, repetition: u64) -> u64 {
        self.protocol.seed.wrapping_add(repetition)
    }
}
