use thiserror::Error;

use crate::lattice::Configuration;

/// Errors produced by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation was called without its precondition holding.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A brute-force routine was asked to exceed its size guard.
    #[error("capacity exceeded: {what} is {got}, limit {limit}")]
    Capacity {
        what: &'static str,
        got: u128,
        limit: u128,
    },

    /// The extremal chains did not meet at time zero within the epoch budget.
    #[error("no coalescence after {epochs} epochs: lower = [{lower}], upper = [{upper}]")]
    NoCoalescence {
        epochs: u32,
        lower: Configuration,
        upper: Configuration,
    },

    /// Shared-event evolution of an attractive model broke the partial order.
    #[error("order violation at event {event_index} (t = {time}): configs {lower} <= {upper} broken at site {site}")]
    OrderViolation {
        event_index: usize,
        time: f64,
        lower: usize,
        upper: usize,
        site: usize,
    },

    /// A model file failed to parse or validate.
    #[error("model file: {0}")]
    Parse(String),

    /// Per-sample failure inside a batch run.
    #[error("sample {index}: {source}")]
    Batch {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
