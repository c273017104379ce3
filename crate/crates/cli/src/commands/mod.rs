pub mod analyze;
pub mod bench;
pub mod generate;
pub mod oracle_eval;
pub mod reconstruct;
pub mod sweep;
