//! Report records: one self-describing JSON object per check, plus a
//! plain-text table rendering.

use crate::error::Error;
use crate::kolyvagin::{BoundCheck, FiniteSingular};
use crate::selmer_line::{LineStrategy, SelmerComparison};
use crate::stark::IndexReport;
use serde::{Deserialize, Serialize};
use std::io::Write;

pub const EXIT_OK: i32 = 0;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_CHECK: i32 = 3;
pub const EXIT_CAP: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Hypothesis,
    Cap,
    Check,
}

impl Severity {
    pub fn of(e: &Error) -> Severity {
        use Error::*;
        match e {
            PEqualsTwo | ChiOdd | SplitPrimeInS { .. } | RamifiedP { .. } | NonInvertibleOrder { .. }
            | UnrealizableCharacter { .. } | OddCharacter(_) | OddInducedCharacter(_) | EvenCharacter
            | InvalidConfig(_) | BadLevelPrime { .. } | Unsupported(_) | BadResidue { .. } | DegenerateResidue { .. }
            | NotAGroup(_) | NoDegreeOnePlace { .. } => Severity::Hypothesis,
            BoundExceeded { .. } | PrecisionUnreached(_) | PrecisionTooLow(_) => Severity::Cap,
            _ => Severity::Check,
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Severity::Hypothesis => EXIT_HYPOTHESIS,
            Severity::Cap => EXIT_CAP,
            Severity::Check => EXIT_CHECK,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Record {
    Config {
        mode: String,
        tasks: usize,
        m: u32,
        digits: u32,
    },
    ClassNumberFormula {
        field: String,
        degree: usize,
        class_number: String,
        /// log10 of the relative residual between the two sides.
        log10_residual: f64,
        digits: u32,
        pass: bool,
    },
    Index {
        field: String,
        report: IndexReport,
        pass: bool,
    },
    Regulator {
        field: String,
        p: u64,
        r: usize,
        ratio: String,
        log10_residual: f64,
        digits: u32,
        p_valuation: i64,
        pass: bool,
    },
    Selmer {
        field: String,
        p: u64,
        strategy: LineStrategy,
        comparison: SelmerComparison,
        verified_at: u32,
        pass: bool,
    },
    ScanHit {
        field: String,
        d: i64,
        p: u64,
        class_number: String,
        invariants: Vec<String>,
    },
    KolyvaginLevel {
        field: String,
        p: u64,
        m: u32,
        tau: Vec<u64>,
        /// kappa_1 equals the Stark unit (level 1 only).
        stark_match: Option<bool>,
        distribution_relation: bool,
        unramified_outside_tau: bool,
        finite_singular: Vec<FiniteSingular>,
        chi_part: bool,
        certificate_bits: u32,
        aux_primes: usize,
        failures: Vec<String>,
        pass: bool,
    },
    KolyvaginBound {
        field: String,
        p: u64,
        m: u32,
        levels: usize,
        bound: BoundCheck,
        pass: bool,
    },
    Error {
        field: Option<String>,
        p: Option<u64>,
        stage: String,
        code: String,
        message: String,
        severity: Severity,
    },
    CacheGc {
        dir: String,
        kept: usize,
        removed: usize,
    },
    Summary {
        records: usize,
        failures: usize,
        errors: usize,
        exit_code: i32,
    },
}

impl Record {
    pub fn error(field: Option<&str>, p: Option<u64>, stage: &str, e: &Error) -> Record {
        Record::Error {
            field: field.map(String::from),
            p,
            stage: stage.into(),
            code: e.code().into(),
            message: e.to_string(),
            severity: Severity::of(e),
        }
    }

    /// `Some(false)` for a failed check, `None` for records that are not checks.
    pub fn passed(&self) -> Option<bool> {
        match self {
            Record::ClassNumberFormula { pass, .. }
            | Record::Index { pass, .. }
            | Record::Regulator { pass, .. }
            | Record::Selmer { pass, .. }
            | Record::KolyvaginLevel { pass, .. }
            | Record::KolyvaginBound { pass, .. } => Some(*pass),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Record::Config { .. } => "config",
            Record::ClassNumberFormula { .. } => "class_number_formula",
            Record::Index { .. } => "index",
            Record::Regulator { .. } => "regulator",
            Record::Selmer { .. } => "selmer",
            Record::ScanHit { .. } => "scan_hit",
            Record::KolyvaginLevel { .. } => "kolyvagin_level",
            Record::KolyvaginBound { .. } => "kolyvagin_bound",
            Record::Error { .. } => "error",
            Record::CacheGc { .. } => "cache_gc",
            Record::Summary { .. } => "summary",
        }
    }

    fn table_row(&self) -> String {
        let status = match self.passed() {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "",
        };
        let detail = match self {
            Record::Config { mode, tasks, m, digits } => format!("{mode}: {tasks} tasks, m = {m}, {digits} digits"),
            Record::ClassNumberFormula {
                field,
                class_number,
                log10_residual,
                ..
            } => format!("{field}: h = {class_number}, residual 1e{log10_residual:.1}"),
            Record::Index { field, report, .. } => format!(
                "{field} p = {}: lhs {} rhs {} ({:?})",
                report.p, report.lhs, report.rhs, report.verdict
            ),
            Record::Regulator {
                field,
                p,
                ratio,
                log10_residual,
                ..
            } => format!("{field} p = {p}: ratio {ratio}, residual 1e{log10_residual:.1}"),
            Record::Selmer { field, p, comparison, .. } => format!(
                "{field} p = {p}: {} - {} vs {}",
                comparison.numerator, comparison.denominator, comparison.direct_quotient
            ),
            Record::ScanHit {
                field, p, class_number, ..
            } => format!("{field}: p = {p} divides h = {class_number}"),
            Record::KolyvaginLevel { field, p, m, tau, failures, .. } => {
                format!("{field} p^m = {p}^{m} tau = {tau:?} {}", failures.join("; "))
            }
            Record::KolyvaginBound { field, bound, .. } => {
                format!("{field}: {} <= {} (H-S {})", bound.lhs, bound.rhs, bound.hs)
            }
            Record::Error {
                field, stage, code, message, ..
            } => format!("{} {stage}: {code} {message}", field.as_deref().unwrap_or("-")),
            Record::CacheGc { dir, kept, removed } => format!("{dir}: kept {kept}, removed {removed}"),
            Record::Summary {
                records,
                failures,
                errors,
                exit_code,
            } => format!("{records} records, {failures} failures, {errors} errors, exit {exit_code}"),
        };
        format!("{:<22} {:<5} {detail}", self.kind(), status)
    }
}

/// Exit status of a finished record stream: the most severe error or
/// failed check wins, check failures first.
pub fn exit_code(records: &[Record]) -> i32 {
    let failed = records.iter().any(|r| r.passed() == Some(false));
    let worst = records
        .iter()
        .filter_map(|r| match r {
            Record::Error { severity, .. } => Some(*severity),
            _ => None,
        })
        .max();
    match (failed, worst) {
        (true, _) | (_, Some(Severity::Check)) => EXIT_CHECK,
        (false, Some(s)) => s.exit_code(),
        (false, None) => EXIT_OK,
    }
}

pub fn summary(records: &[Record]) -> Record {
    Record::Summary {
        records: records.len(),
        failures: records.iter().filter(|r| r.passed() == Some(false)).count(),
        errors: records.iter().filter(|r| matches!(r, Record::Error { .. })).count(),
        exit_code: exit_code(records),
    }
}

pub fn write_jsonl<W: Write>(out: &mut W, records: &[Record]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn write_table<W: Write>(out: &mut W, records: &[Record]) -> std::io::Result<()> {
    writeln!(out, "{:<22} {:<5} detail", "record", "")?;
    for r in records {
        writeln!(out, "{}", r.table_row())?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let cap = Record::error(None, None, "x", &Error::BoundExceeded {
            what: "q".into(),
            value: 2,
            cap: 1,
        });
        let hyp = Record::error(None, None, "x", &Error::PEqualsTwo);
        let check = Record::error(None, None, "x", &Error::DescentFailure("x".into()));
        assert_eq!(exit_code(&[]), EXIT_OK);
        assert_eq!(exit_code(&[hyp.clone()]), EXIT_HYPOTHESIS);
        assert_eq!(exit_code(&[hyp.clone(), cap.clone()]), EXIT_CAP);
        assert_eq!(exit_code(&[cap.clone(), check]), EXIT_CHECK);
        let failed = Record::KolyvaginBound {
            field: "f".into(),
            p: 3,
            m: 1,
            levels: 1,
            bound: BoundCheck {
                lhs: 1,
                rhs: 0,
                holds: false,
                equality: false,
                hs: true,
            },
            pass: false,
        };
        assert_eq!(exit_code(&[cap, failed.clone()]), EXIT_CHECK);
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &[failed.clone()]).unwrap();
        let line = String::from_utf8(buf).unwrap();
        assert!(line.starts_with("{\"record\":\"kolyvagin_bound\""));
        let back: Record = serde_json::from_str(line.trim()).unwrap();
        assert_eq!(back, failed);
    }
}
