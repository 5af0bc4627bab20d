use std::str::FromStr;

use serde::Serialize;

use crate::baselines::{brute_force_opt_np, run_srpt, BRUTE_MAX_JOBS, BRUTE_MAX_MACHINES};
use crate::error::{Error, Result};
use crate::flow::{flow_sum, BaselineKind};
use crate::model::Instance;
use crate::time::TimeQ;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselinePolicy {
    /// Brute force when tiny, SRPT on one machine, the generator's witness
    /// when there is one, otherwise `Σ p`.
    Auto,
    Srpt,
    BruteForce,
    Witness,
    SumP,
}

impl FromStr for BaselinePolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => BaselinePolicy::Auto,
            "srpt" => BaselinePolicy::Srpt,
            "brute-force" => BaselinePolicy::BruteForce,
            "witness" => BaselinePolicy::Witness,
            "sum-p" => BaselinePolicy::SumP,
            _ => return Err(Error::Config(format!("unknown baseline {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ratio {
    pub ratio: TimeQ,
    pub baseline: BaselineKind,
    pub baseline_flow: TimeQ,
}

impl Ratio {
    /// `"exact"` when the baseline is an optimum (SRPT on one machine or
    /// exhaustive search); `"bound"` for witnesses, `Σ p` and multi-machine
    /// SRPT.
    pub fn kind(&self, machines: usize) -> &'static str {
        match self.baseline {
            BaselineKind::BruteForce => "exact",
            BaselineKind::Srpt if machines == 1 => "exact",
            _ => "bound",
        }
    }

    pub fn decimal(&self) -> String {
        self.ratio.to_decimal(20)
    }
}

/// `alg_flow / baseline`. `witness_flow` is the generator's witness value,
/// if the instance came from a generator.
pub fn compute_ratio(
    alg_flow: &TimeQ,
    instance: &Instance,
    policy: BaselinePolicy,
    witness_flow: Option<&TimeQ>,
) -> Result<Ratio> {
    let (n, m) = (instance.n(), instance.machines());
    let chosen = match policy {
        BaselinePolicy::Auto => {
            if n <= BRUTE_MAX_JOBS && m <= BRUTE_MAX_MACHINES {
                BaselinePolicy::BruteForce
            } else if m == 1 {
                BaselinePolicy::Srpt
            } else if witness_flow.is_some() {
                BaselinePolicy::Witness
            } else {
                BaselinePolicy::SumP
            }
        }
        p => p,
    };
    let (baseline, baseline_flow) = match chosen {
        BaselinePolicy::BruteForce => (BaselineKind::BruteForce, brute_force_opt_np(instance)?.1),
        BaselinePolicy::Srpt => (BaselineKind::Srpt, flow_sum(instance, &run_srpt(instance, m > 1))?),
        BaselinePolicy::Witness => (
            BaselineKind::Witness,
            witness_flow
                .cloned()
                .ok_or_else(|| Error::Config("witness baseline requested for an instance without a witness".into()))?,
        ),
        BaselinePolicy::SumP => (BaselineKind::SumP, instance.total_size()),
        BaselinePolicy::Auto => unreachable!("resolved above"),
    };
    let ratio = if baseline_flow.is_zero() {
        if alg_flow.is_zero() {
            TimeQ::one()
        } else {
            return Err(Error::Config("baseline flow is zero but the algorithm's is not".into()));
        }
    } else {
        alg_flow / &baseline_flow
    };
    Ok(Ratio { ratio, baseline, baseline_flow })
}
