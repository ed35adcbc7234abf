use serde::{Deserialize, Serialize};
use tabprep_agent::episode::{DEFAULT_MAX_TURNS, DEFAULT_SAMPLE_ROWS};
use tabprep_agent::reward::RewardWeights;

/// USD per million tokens. Cached input tokens are a subset of the input
/// tokens and are billed at their own rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenPricing {
    pub input_per_mtok: f64,
    pub output_per_mtok: f64,
    #[serde(default)]
    pub cached_input_per_mtok: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessConfig {
    pub max_turns: usize,
    pub sample_rows: usize,
    /// Messages kept after the task prompt, counted in policy/environment
    /// pairs. `None` keeps the full history.
    pub history_window: Option<usize>,
    pub weights: RewardWeights,
    pub gpu_hourly_price: f64,
    pub token_pricing: Option<TokenPricing>,
    pub parallelism: usize,
    pub seed: u64,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            max_turns: DEFAULT_MAX_TURNS,
            sample_rows: DEFAULT_SAMPLE_ROWS,
            history_window: None,
            weights: RewardWeights::default(),
            gpu_hourly_price: 0.91,
            token_pricing: None,
            parallelism: 1,
            seed: 0,
        }
    }
}

impl HarnessConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_turns == 0 {
            return Err("max_turns must be positive".into());
        }
        if self.sample_rows == 0 {
            return Err("sample_rows must be positive".into());
        }
        if self.parallelism == 0 {
            return Err("parallelism must be positive".into());
        }
        if !(self.gpu_hourly_price.is_finite() && self.gpu_hourly_price > 0.0) {
            return Err("gpu_hourly_price must be positive".into());
        }
        if let Some(p) = self.token_pricing {
            if [p.input_per_mtok, p.output_per_mtok, p.cached_input_per_mtok].iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err("token prices must be non-negative".into());
            }
        }
        let w = self.weights;
        if [w.alpha, w.beta, w.gamma].iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err("reward weights must be non-negative".into());
        }
        Ok(())
    }
}
