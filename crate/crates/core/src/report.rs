//! A single verified equality: what was expected, what was computed, and
//! whether they agree. Commands aggregate these into JSON reports; a report
//! passes iff every check does.

use std::fmt::Display;

use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub computed: String,
    pub pass: bool,
}

impl Check {
    /// Check that two displayable values agree.
    pub fn eq<A: Display, B: Display>(name: impl Into<String>, expected: A, computed: B) -> Check {
        let expected = expected.to_string();
        let computed = computed.to_string();
        let pass = expected == computed;
        Check { name: name.into(), expected, computed, pass }
    }

    /// Check an already-evaluated condition, recording context strings.
    pub fn holds(name: impl Into<String>, description: impl Into<String>, pass: bool) -> Check {
        Check {
            name: name.into(),
            expected: "true".into(),
            computed: description.into(),
            pass,
        }
    }
}

/// True iff every check passed.
pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}
