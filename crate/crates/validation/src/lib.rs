//! Reporting for the acceptance run: one `PASS`/`FAIL` line per criterion
//! and a closing tally.

use std::process::ExitCode;
use std::time::Duration;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: &'static str,
    pub passed: bool,
}

#[derive(Debug, Default)]
pub struct Run {
    filter: Option<String>,
    outcomes: Vec<Outcome>,
}

impl Run {
    /// `filter` keeps only criteria whose id contains it.
    pub fn new(filter: Option<String>) -> Self {
        Self {
            filter,
            outcomes: Vec::new(),
        }
    }

    /// Reads the filter from the command line. Cargo forwards its own
    /// `--flags`, so the first bare word is taken.
    pub fn from_args() -> Self {
        Self::new(std::env::args().skip(1).find(|a| !a.starts_with('-')))
    }

    pub fn wants(&self, id: &str) -> bool {
        self.filter.as_deref().is_none_or(|f| id.contains(f))
    }

    pub fn record(&mut self, id: &'static str, passed: bool, detail: String) {
        println!("{} [{id}] {detail}", if passed { "PASS" } else { "FAIL" });
        self.outcomes.push(Outcome { id, passed });
    }

    pub fn info(&self, id: &str, detail: String) {
        println!("INFO [{id}] {detail}");
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn failed(&self) -> Vec<&'static str> {
        self.outcomes
            .iter()
            .filter(|o| !o.passed)
            .map(|o| o.id)
            .collect()
    }

    pub fn summary(&self) -> String {
        let failed = self.failed();
        let tail = if failed.is_empty() {
            String::new()
        } else {
            format!(" ({})", failed.join(", "))
        };
        format!(
            "acceptance: {} passed, {} failed{tail}",
            self.outcomes.len() - failed.len(),
            failed.len()
        )
    }

    /// Prints the tally; failure if any criterion failed.
    pub fn finish(self) -> ExitCode {
        println!("{}", self.summary());
        if self.failed().is_empty() {
            ExitCode::SUCCESS
        } else {
            ExitCode::FAILURE
        }
    }
}

pub fn within(elapsed: Duration, budget_secs: u64) -> bool {
    elapsed <= Duration::from_secs(budget_secs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tally_and_filter() {
        let mut run = Run::new(Some("3".into()));
        assert!(run.wants("3b") && !run.wants("4a"));
        run.record("3a", true, String::new());
        run.record("3b", false, String::new());
        assert_eq!(run.failed(), ["3b"]);
        assert_eq!(run.summary(), "acceptance: 1 passed, 1 failed (3b)");
        assert_eq!(run.finish(), ExitCode::FAILURE);
    }
}
