//! Agent side of the preparation loop: the reasoning tree, the tagged action
//! protocol, observations, policy adapters, the episode driver and rewards.

pub mod episode;
pub mod observation;
pub mod policy;
pub mod protocol;
pub mod reward;
pub mod trajectory;
pub mod tree;

pub use episode::{run_episode, run_episode_with_tree, EpisodeConfig, TaskSpec};
pub use policy::{ChatClient, ChatConfig, ChatPolicy, HeuristicPolicy, Policy, PolicySession, ScriptedPolicy};
pub use reward::{RewardBreakdown, RewardWeights, RuleJudge};
pub use trajectory::{Status, Trajectory};
pub use tree::ReasoningTree;
