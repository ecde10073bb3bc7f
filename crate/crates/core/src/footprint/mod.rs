//! Energy, water, carbon and cost of large classification campaigns.
//!
//! Energy is wall-clock inference time at the provider's throughput times a
//! constant power draw. Water and CO₂ scale energy by the site's
//! water-usage effectiveness and carbon intensity. Cost is either API
//! billing per token or electricity for self-hosted models. Derived
//! quantities always use unrounded energy.

mod display;
mod published;

pub use display::{format_cost, format_count, format_ratio, ratios_tsv, report_tsv, rounded_cost};
pub use published::{published_footprint_checks, PublishedRow, PUBLISHED_ROWS};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const DEFAULT_CATALOG: &str = include_str!("../../data/providers.toml");
pub const DEFAULT_POWER_DRAW_KW: f64 = 0.35;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FootprintError {
    #[error("provider `{0}`: throughput must be positive")]
    NonPositiveTps(String),
    #[error("provider `{provider}`: {field} must be non-negative and finite")]
    NegativeConstant { provider: String, field: &'static str },
    #[error("provider `{provider}`: no {what} for {hosting} hosting")]
    MissingRate {
        provider: String,
        hosting: HostingMode,
        what: &'static str,
    },
    #[error("unknown provider `{0}`")]
    UnknownProvider(String),
    #[error("provider catalog: {0}")]
    Catalog(String),
}

/// A batch of classification requests with a fixed per-item token budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Workload {
    pub item_count: u64,
    pub prompt_tokens_per_item: u64,
    pub content_tokens_per_item: u64,
    pub output_tokens_per_item: u64,
}

impl Default for Workload {
    fn default() -> Self {
        Self::items(10_000_000_000)
    }
}

impl Workload {
    /// `item_count` items with a 76-token instruction, 36 content tokens and
    /// a single output token each.
    pub fn items(item_count: u64) -> Self {
        Self {
            item_count,
            prompt_tokens_per_item: 76,
            content_tokens_per_item: 36,
            output_tokens_per_item: 1,
        }
    }

    pub fn input_tokens(&self) -> f64 {
        self.item_count as f64 * (self.prompt_tokens_per_item + self.content_tokens_per_item) as f64
    }

    pub fn output_tokens(&self) -> f64 {
        self.item_count as f64 * self.output_tokens_per_item as f64
    }

    pub fn total_tokens(&self) -> f64 {
        self.input_tokens() + self.output_tokens()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HostingMode {
    ApiBilled,
    SelfHosted,
}

impl std::fmt::Display for HostingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            HostingMode::ApiBilled => "api_billed",
            HostingMode::SelfHosted => "self_hosted",
        })
    }
}

/// Which tokens API billing charges at the input rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BillingConvention {
    /// All tokens, input and output, at the input rate, plus output tokens at
    /// the output rate.
    #[default]
    TotalAtInputRate,
    /// Input tokens at the input rate, output tokens at the output rate.
    InputAtInputRate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderProfile {
    pub id: String,
    #[serde(default)]
    pub provider: String,
    #[serde(default)]
    pub model: String,
    #[serde(default)]
    pub parameters: Option<String>,
    /// Tokens per second.
    pub tps: f64,
    #[serde(default = "default_power")]
    pub power_draw_kw: f64,
    /// Litres of water per kWh.
    pub wue: f64,
    /// kg CO₂ per kWh.
    pub cif: f64,
    /// USD per million input tokens.
    #[serde(default)]
    pub rate_in: Option<f64>,
    /// USD per million output tokens.
    #[serde(default)]
    pub rate_out: Option<f64>,
    /// USD per kWh.
    #[serde(default)]
    pub electricity_price: Option<f64>,
    pub hosting: HostingMode,
}

fn default_power() -> f64 {
    DEFAULT_POWER_DRAW_KW
}

impl ProviderProfile {
    pub fn validate(&self) -> Result<(), FootprintError> {
        if !(self.tps > 0.0 && self.tps.is_finite()) {
            return Err(FootprintError::NonPositiveTps(self.id.clone()));
        }
        let fields = [
            ("power_draw_kw", Some(self.power_draw_kw)),
            ("wue", Some(self.wue)),
            ("cif", Some(self.cif)),
            ("rate_in", self.rate_in),
            ("rate_out", self.rate_out),
            ("electricity_price", self.electricity_price),
        ];
        for (field, value) in fields {
            if let Some(v) = value {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(FootprintError::NegativeConstant {
                        provider: self.id.clone(),
                        field,
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FootprintReport {
    pub id: String,
    pub tps: f64,
    pub duration_s: f64,
    pub energy_mwh: f64,
    pub water_m3: f64,
    pub co2_t: f64,
    /// None when the profile carries no price for its hosting mode.
    pub cost_usd: Option<f64>,
}

/// Energy in MWh: (tokens / tps) seconds at `power_draw_kw`.
pub fn estimate_energy(workload: &Workload, profile: &ProviderProfile) -> Result<f64, FootprintError> {
    profile.validate()?;
    let kwh = workload.total_tokens() / profile.tps * profile.power_draw_kw / 3600.0;
    Ok(kwh / 1000.0)
}

/// Water in m³ for an (unrounded) energy in MWh.
pub fn estimate_water(energy_mwh: f64, profile: &ProviderProfile) -> f64 {
    // MWh × L/kWh = m³
    energy_mwh * profile.wue
}

/// CO₂ in tonnes for an (unrounded) energy in MWh.
pub fn estimate_co2(energy_mwh: f64, profile: &ProviderProfile) -> f64 {
    // MWh × kg/kWh = t
    energy_mwh * profile.cif
}

pub fn estimate_cost(
    workload: &Workload,
    profile: &ProviderProfile,
    convention: BillingConvention,
) -> Result<f64, FootprintError> {
    let missing = |what| FootprintError::MissingRate {
        provider: profile.id.clone(),
        hosting: profile.hosting,
        what,
    };
    match profile.hosting {
        HostingMode::ApiBilled => {
            let rate_in = profile.rate_in.ok_or_else(|| missing("input rate"))?;
            let rate_out = profile.rate_out.ok_or_else(|| missing("output rate"))?;
            let billed_at_input = match convention {
                BillingConvention::TotalAtInputRate => workload.total_tokens(),
                BillingConvention::InputAtInputRate => workload.input_tokens(),
            };
            Ok(billed_at_input * rate_in / 1e6 + workload.output_tokens() * rate_out / 1e6)
        }
        HostingMode::SelfHosted => {
            let price = profile.electricity_price.ok_or_else(|| missing("electricity price"))?;
            Ok(estimate_energy(workload, profile)? * 1000.0 * price)
        }
    }
}

pub fn estimate(
    workload: &Workload,
    profile: &ProviderProfile,
    convention: BillingConvention,
) -> Result<FootprintReport, FootprintError> {
    let energy_mwh = estimate_energy(workload, profile)?;
    let cost_usd = match estimate_cost(workload, profile, convention) {
        Ok(c) => Some(c),
        Err(FootprintError::MissingRate { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(FootprintReport {
        id: profile.id.clone(),
        tps: profile.tps,
        duration_s: workload.total_tokens() / profile.tps,
        energy_mwh,
        water_m3: estimate_water(energy_mwh, profile),
        co2_t: estimate_co2(energy_mwh, profile),
        cost_usd,
    })
}

/// One provider measured against the baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub id: String,
    pub baseline_tps: f64,
    pub tps: f64,
    /// baseline tps / tps.
    pub speedup: f64,
    pub baseline_cost: Option<f64>,
    pub cost: Option<f64>,
    /// cost / baseline cost, from unrounded costs.
    pub cost_ratio: Option<f64>,
    /// The same ratio from costs rounded as they are displayed.
    pub displayed_cost_ratio: Option<f64>,
    /// co2 − baseline co2, tonnes.
    pub co2_delta_t: f64,
}

pub fn compare(reports: &BTreeMap<String, FootprintReport>, baseline: &str) -> Result<Vec<Comparison>, FootprintError> {
    let base = reports
        .get(baseline)
        .ok_or_else(|| FootprintError::UnknownProvider(baseline.to_string()))?;
    Ok(reports
        .values()
        .filter(|r| r.id != base.id)
        .map(|r| {
            let ratio = |a: Option<f64>, b: Option<f64>| match (a, b) {
                (Some(a), Some(b)) if b > 0.0 => Some(a / b),
                _ => None,
            };
            Comparison {
                id: r.id.clone(),
                baseline_tps: base.tps,
                tps: r.tps,
                speedup: base.tps / r.tps,
                baseline_cost: base.cost_usd,
                cost: r.cost_usd,
                cost_ratio: ratio(r.cost_usd, base.cost_usd),
                displayed_cost_ratio: ratio(r.cost_usd.map(rounded_cost), base.cost_usd.map(rounded_cost)),
                co2_delta_t: r.co2_t - base.co2_t,
            }
        })
        .collect())
}

/// Provider profiles plus the fine-tuning token constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub fine_tuning_tokens: u64,
    #[serde(rename = "provider")]
    pub providers: Vec<ProviderProfile>,
}

impl Catalog {
    pub fn from_toml(source: &str) -> Result<Self, FootprintError> {
        let catalog: Catalog = toml::from_str(source).map_err(|e| FootprintError::Catalog(e.to_string()))?;
        let mut seen = std::collections::BTreeSet::new();
        for p in &catalog.providers {
            p.validate()?;
            if !seen.insert(p.id.as_str()) {
                return Err(FootprintError::Catalog(format!("duplicate provider `{}`", p.id)));
            }
        }
        Ok(catalog)
    }

    /// The twelve shipped provider profiles.
    pub fn default_catalog() -> Self {
        Self::from_toml(DEFAULT_CATALOG).expect("bundled catalog is valid")
    }

    pub fn get(&self, id: &str) -> Result<&ProviderProfile, FootprintError> {
        self.providers
            .iter()
            .find(|p| p.id == id)
            .ok_or_else(|| FootprintError::UnknownProvider(id.to_string()))
    }

    /// Reports for every provider, keyed by id.
    pub fn estimate_all(
        &self,
        workload: &Workload,
        convention: BillingConvention,
    ) -> Result<BTreeMap<String, FootprintReport>, FootprintError> {
        self.providers
            .iter()
            .map(|p| Ok((p.id.clone(), estimate(workload, p, convention)?)))
            .collect()
    }
}
