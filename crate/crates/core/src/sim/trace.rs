use std::fmt;

/// One kernel event: time (ms), kind, acting node, subject, outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub time: f64,
    pub kind: &'static str,
    pub actor: String,
    pub subject: String,
    pub outcome: String,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}",
            self.time, self.kind, self.actor, self.subject, self.outcome
        )
    }
}
