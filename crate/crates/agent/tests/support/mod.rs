pub mod random_policy;
