//! Predicate and type names the engines agree on.

pub const TYPE: &str = "@type";
pub const TIMESTAMP: &str = "@timestamp";
pub const ACTIVITY: &str = "@activity";

pub const PERFORMED: &str = "performed";
pub const HAPPENED_BEFORE: &str = "happened-before";

/// `version --version-of--> artifact`
pub const VERSION_OF: &str = "version-of";
/// `parent-version --evolved-into--> child-version`
pub const EVOLVED_INTO: &str = "evolved-into";
pub const CREATED_AT: &str = "@created-at";
pub const AUTHOR: &str = "@author";

pub const EVENT_TYPE: &str = "event";
pub const VERSION_TYPE: &str = "version";
pub const ACTIVITY_TYPE: &str = "activity";

/// Annotation attributes of a reified activity node.
pub const ACTIVITY_KEYS: [&str; 7] = ["what", "how", "when", "who", "where", "which", "why"];
