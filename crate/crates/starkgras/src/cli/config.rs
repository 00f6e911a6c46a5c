//! Run configuration: a TOML file (`key = value` lines under `[sections]`)
//! merged with command-line overrides, then validated against the standing
//! hypotheses.

use crate::class_unit::FieldCharacter;
use crate::cyclotomic_fields::{field_from_characters, AbelianField, DirichletCharacter};
use crate::error::{Error, Result};
use crate::exact_algebra::arith::{fundamental_discriminant, gcd, is_prime, is_squarefree, primes_up_to};
use crate::stark::{default_s, default_t, induced_components, t_factor_is_p_unit};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub const CACHE_ENV: &str = "STARKGRAS_CACHE_DIR";
pub const DEFAULT_CACHE_DIR: &str = ".starkgras-cache";

/// Largest discriminant parameter accepted by a scan.
pub const SCAN_CAP: i64 = 5000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Verify,
    Scan,
    Kolyvagin,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Jsonl,
    Table,
}

/// A field L with the character chi to study.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FieldSpec {
    /// Q(sqrt d) with its nontrivial character.
    Quadratic { d: i64 },
    /// Q(sqrt base, sqrt twist), chi the character of Q(sqrt twist)
    /// restricted to Gal(L/Q(sqrt base)).
    Biquadratic { base: i64, twist: i64 },
}

impl FieldSpec {
    pub fn label(&self) -> String {
        match self {
            FieldSpec::Quadratic { d } => format!("Q(sqrt{d})"),
            FieldSpec::Biquadratic { base, twist } => format!("Q(sqrt{base},sqrt{twist})"),
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            FieldSpec::Quadratic { .. } => 1,
            FieldSpec::Biquadratic { .. } => 2,
        }
    }

    fn check_d(d: i64) -> Result<()> {
        if d < 0 {
            return Err(Error::ChiOdd);
        }
        if d < 2 || !is_squarefree(d as u64) {
            return Err(Error::InvalidConfig(format!("{d} is not a squarefree integer > 1")));
        }
        Ok(())
    }

    pub fn field(&self) -> Result<AbelianField> {
        match *self {
            FieldSpec::Quadratic { d } => {
                Self::check_d(d)?;
                AbelianField::real_quadratic(d)
            }
            FieldSpec::Biquadratic { base, twist } => {
                Self::check_d(base)?;
                Self::check_d(twist)?;
                if base == twist {
                    return Err(Error::InvalidConfig(format!("sqrt{base} twice")));
                }
                let (a, b) = (AbelianField::real_quadratic(twist)?, AbelianField::real_quadratic(base)?);
                if gcd(a.modulus(), b.modulus()) == 1 {
                    a.tensor(&b)
                } else {
                    let (x, y) = (quadratic_character(twist), quadratic_character(base));
                    field_from_characters(&[DirichletCharacter::trivial(1), x.mul(&y).primitive(), x, y])
                }
            }
        }
    }

    pub fn character(&self, field: &AbelianField) -> Result<FieldCharacter> {
        match *self {
            FieldSpec::Quadratic { .. } => {
                let psi = field
                    .characters()
                    .into_iter()
                    .find(|c| !c.is_trivial())
                    .expect("quadratic field has a nontrivial character");
                FieldCharacter::over_rationals(field, &psi)
            }
            FieldSpec::Biquadratic { base, twist } => FieldCharacter::over_subfield(
                field,
                &quadratic_character(twist),
                &[quadratic_character(base)],
            ),
        }
    }
}

/// The character of Q(sqrt d).
fn quadratic_character(d: i64) -> DirichletCharacter {
    DirichletCharacter::quadratic(fundamental_discriminant(d))
}

/// `d` or `base:twist`.
impl FromStr for FieldSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let int = |t: &str| t.trim().parse::<i64>().map_err(|e| format!("{t:?}: {e}"));
        match s.split_once(':') {
            None => Ok(FieldSpec::Quadratic { d: int(s)? }),
            Some((a, b)) => Ok(FieldSpec::Biquadratic { base: int(a)?, twist: int(b)? }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanRange {
    pub lo: i64,
    pub hi: i64,
    /// Scan L = Q(sqrt base, sqrt d) instead of Q(sqrt d).
    pub base: Option<i64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub minkowski: u64,
    pub prime_bound: u64,
    pub level_cap: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            minkowski: 20_000,
            prime_bound: 200,
            level_cap: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub fields: Vec<FieldSpec>,
    pub scan: Option<ScanRange>,
    pub p: Vec<u64>,
    pub m: u32,
    pub digits: u32,
    /// Finite primes of S, as rational primes.
    pub s: Option<Vec<u64>>,
    pub t: Option<Vec<u64>>,
    /// Kolyvagin primes are searched up to this bound.
    pub q_bound: u64,
    pub caps: Caps,
    pub cache_dir: Option<PathBuf>,
    pub format: OutputFormat,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(mode: Mode) -> Self {
        RunConfig {
            mode,
            fields: Vec::new(),
            scan: None,
            p: Vec::new(),
            m: 2,
            digits: 80,
            s: None,
            t: None,
            q_bound: 200,
            caps: Caps::default(),
            cache_dir: None,
            format: OutputFormat::Jsonl,
            output: None,
        }
    }

    /// Fill from a config file; keys absent from the file keep their value.
    pub fn apply_file(&mut self, file: &ConfigFile) {
        if let Some(run) = &file.run {
            if let Some(m) = run.mode {
                self.mode = m;
            }
        }
        if let Some(f) = &file.field {
            let mut fields: Vec<FieldSpec> = f.quadratic.iter().flatten().map(|&d| FieldSpec::Quadratic { d }).collect();
            fields.extend(f.biquadratic.iter().flatten().map(|&[base, twist]| FieldSpec::Biquadratic { base, twist }));
            if !fields.is_empty() {
                self.fields = fields;
            }
            if let Some([lo, hi]) = f.scan_range {
                self.scan = Some(ScanRange { lo, hi, base: f.scan_base });
            }
        }
        if let Some(c) = &file.check {
            set(&mut self.p, c.p.clone());
            set(&mut self.m, c.m);
            set(&mut self.digits, c.digits);
            if c.s.is_some() {
                self.s = c.s.clone();
            }
            if c.t.is_some() {
                self.t = c.t.clone();
            }
            set(&mut self.q_bound, c.q_bound);
        }
        if let Some(c) = &file.caps {
            set(&mut self.caps.minkowski, c.minkowski);
            set(&mut self.caps.prime_bound, c.prime_bound);
            set(&mut self.caps.level_cap, c.level_cap);
        }
        if let Some(c) = &file.cache {
            if c.dir.is_some() {
                self.cache_dir = c.dir.clone();
            }
        }
        if let Some(o) = &file.output {
            set(&mut self.format, o.format);
            if let Some(path) = &o.path {
                self.output = (path.as_os_str() != "-").then(|| path.clone());
            }
        }
    }

    pub fn resolved_cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR))
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub run: Option<RunSection>,
    pub field: Option<FieldSection>,
    pub check: Option<CheckSection>,
    pub caps: Option<CapsSection>,
    pub cache: Option<CacheSection>,
    pub output: Option<OutputSection>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub mode: Option<Mode>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    pub quadratic: Option<Vec<i64>>,
    pub biquadratic: Option<Vec<[i64; 2]>>,
    pub scan_range: Option<[i64; 2]>,
    pub scan_base: Option<i64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    pub p: Option<Vec<u64>>,
    pub m: Option<u32>,
    pub digits: Option<u32>,
    pub s: Option<Vec<u64>>,
    pub t: Option<Vec<u64>>,
    pub q_bound: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapsSection {
    pub minkowski: Option<u64>,
    pub prime_bound: Option<u64>,
    pub level_cap: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheSection {
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub format: Option<OutputFormat>,
    pub path: Option<PathBuf>,
}

pub fn parse_config(text: &str) -> Result<ConfigFile> {
    toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
}

pub fn read_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// One (L, chi, p) job with S and T resolved.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub field: FieldSpec,
    pub label: String,
    pub conductor: u64,
    pub r: usize,
    pub p: u64,
    pub s: Vec<u64>,
    pub t: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedConfig {
    pub config: RunConfig,
    pub tasks: Vec<Task>,
}

/// Checks every hypothesis and fills S and T; errors name the violated
/// hypothesis.
pub fn validate_config(cfg: &RunConfig) -> Result<NormalizedConfig> {
    for &p in &cfg.p {
        if p == 2 {
            return Err(Error::PEqualsTwo);
        }
        if !is_prime(p) {
            return Err(Error::InvalidConfig(format!("p = {p} is not prime")));
        }
    }
    if cfg.m == 0 {
        return Err(Error::InvalidConfig("m must be positive".into()));
    }
    if cfg.digits < 10 {
        return Err(Error::InvalidConfig("digits must be at least 10".into()));
    }
    let mut tasks = Vec::new();
    match cfg.mode {
        Mode::Scan => {
            let range = cfg
                .scan
                .ok_or_else(|| Error::InvalidConfig("scan needs field.scan_range".into()))?;
            if range.lo > range.hi || range.lo < 2 {
                return Err(Error::InvalidConfig(format!("bad scan range {}..{}", range.lo, range.hi)));
            }
            if range.hi > SCAN_CAP {
                return Err(Error::BoundExceeded {
                    what: "scan range".into(),
                    value: range.hi as u64,
                    cap: SCAN_CAP as u64,
                });
            }
            if let Some(b) = range.base {
                FieldSpec::check_d(b)?;
            }
        }
        Mode::Verify | Mode::Kolyvagin => {
            if cfg.mode == Mode::Kolyvagin {
                if cfg.q_bound > cfg.caps.prime_bound {
                    return Err(Error::BoundExceeded {
                        what: "Kolyvagin prime bound".into(),
                        value: cfg.q_bound,
                        cap: cfg.caps.prime_bound,
                    });
                }
                if let Some(f) = cfg.fields.iter().find(|f| f.rank() != 1) {
                    return Err(Error::Unsupported(format!("derived classes need a quadratic field, got {}", f.label())));
                }
            }
            for spec in &cfg.fields {
                let field = spec.field()?;
                let chi = spec.character(&field)?;
                for &p in &cfg.p {
                    tasks.push(task(spec, &field, &chi, p, cfg)?);
                }
            }
        }
    }
    Ok(NormalizedConfig {
        config: cfg.clone(),
        tasks,
    })
}

fn task(spec: &FieldSpec, field: &AbelianField, chi: &FieldCharacter, p: u64, cfg: &RunConfig) -> Result<Task> {
    let conductor = field.conductor();
    if conductor % p == 0 {
        return Err(Error::RamifiedP { p });
    }
    let degree = field.degree() as u64;
    if degree % p == 0 {
        return Err(Error::NonInvertibleOrder { p, order: degree });
    }
    let components = induced_components(chi)?;
    let r = chi.rank();
    let splits = |q: u64| matches!(field.galois_index(q as i64), Ok(0));
    // k is totally real of degree r, and every finite prime of S has at
    // least one place of k above it
    let places = |s: &[u64]| r + s.len();
    let ramified = default_s(&components);
    let s = match &cfg.s {
        Some(s) => {
            if let Some(q) = ramified.iter().find(|q| !s.contains(q)) {
                return Err(Error::InvalidConfig(format!("S must contain the ramified prime {q}")));
            }
            if let Some(&q) = s.iter().find(|&&q| !is_prime(q)) {
                return Err(Error::InvalidConfig(format!("{q} in S is not prime")));
            }
            if places(s) < r + 1 {
                return Err(Error::InvalidConfig(format!("S has fewer than {} places", r + 1)));
            }
            let mut s = s.clone();
            s.sort_unstable();
            s.dedup();
            s
        }
        None => {
            let mut s = ramified;
            let extra: Vec<u64> = primes_up_to(1000).into_iter().filter(|&q| !splits(q) && !s.contains(&q)).collect();
            let mut extra = extra.into_iter();
            while places(&s) < r + 1 {
                s.push(extra.next().expect("a non-split prime below 1000"));
            }
            s.sort_unstable();
            s
        }
    };
    if let Some(&q) = s.iter().find(|&&q| splits(q)) {
        return Err(Error::SplitPrimeInS { q });
    }
    let t = match &cfg.t {
        Some(t) => {
            for &l in t {
                let bad = |why: &str| Err(Error::InvalidConfig(format!("T prime {l} {why}")));
                if !is_prime(l) || l == 2 {
                    return bad("is not an odd prime");
                }
                if s.contains(&l) {
                    return bad("lies in S");
                }
                if l == p || field.modulus() % l == 0 {
                    return bad("divides p times the conductor");
                }
                if !components.iter().all(|c| t_factor_is_p_unit(c, l, p)) {
                    return bad("makes 1 - chi(l) l a non-unit at p");
                }
            }
            t.clone()
        }
        None => default_t(&components, p, field.modulus()),
    };
    Ok(Task {
        field: spec.clone(),
        label: spec.label(),
        conductor,
        r,
        p,
        s,
        t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verify(fields: &[&str], p: &[u64]) -> RunConfig {
        let mut cfg = RunConfig::new(Mode::Verify);
        cfg.fields = fields.iter().map(|f| f.parse().unwrap()).collect();
        cfg.p = p.to_vec();
        cfg
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let n = validate_config(&verify(&["5"], &[3])).unwrap();
        assert_eq!(n.tasks.len(), 1);
        let t = &n.tasks[0];
        assert_eq!((t.r, t.conductor, t.s.clone(), t.t.clone()), (1, 5, vec![5], vec![7]));
    }

    #[test]
    fn hypothesis_failures_are_named() {
        assert_eq!(validate_config(&verify(&["5"], &[2])), Err(Error::PEqualsTwo));
        assert_eq!(validate_config(&verify(&["5"], &[5])), Err(Error::RamifiedP { p: 5 }));
        assert_eq!(validate_config(&verify(&["-3"], &[5])), Err(Error::ChiOdd));
        // 11 splits in Q(sqrt 5)
        let mut cfg = verify(&["5"], &[3]);
        cfg.s = Some(vec![5, 11]);
        assert_eq!(validate_config(&cfg), Err(Error::SplitPrimeInS { q: 11 }));
        cfg.s = Some(vec![7]);
        assert!(matches!(validate_config(&cfg), Err(Error::InvalidConfig(_))));
        let mut cfg = verify(&["5"], &[3]);
        cfg.t = Some(vec![19]);
        assert!(matches!(validate_config(&cfg), Err(Error::InvalidConfig(_))));
        let mut cfg = verify(&["5"], &[3]);
        cfg.mode = Mode::Kolyvagin;
        cfg.q_bound = 500;
        assert!(matches!(validate_config(&cfg), Err(Error::BoundExceeded { .. })));
    }

    #[test]
    fn empty_p_list_has_no_tasks() {
        assert!(validate_config(&verify(&["5", "79"], &[])).unwrap().tasks.is_empty());
    }

    #[test]
    fn file_and_overrides() {
        let text = r#"
[run]
mode = "kolyvagin"

[field]
quadratic = [2, 5]
biquadratic = [[5, 13]]

[check]
p = [3]
m = 1

[caps]
level_cap = 500

[output]
format = "table"
path = "-"
"#;
        let file = parse_config(text).unwrap();
        let mut cfg = RunConfig::new(Mode::Verify);
        cfg.apply_file(&file);
        assert_eq!(cfg.mode, Mode::Kolyvagin);
        assert_eq!(cfg.fields.len(), 3);
        assert_eq!(cfg.fields[2], FieldSpec::Biquadratic { base: 5, twist: 13 });
        assert_eq!((cfg.m, cfg.caps.level_cap, cfg.format, cfg.output.clone()), (1, 500, OutputFormat::Table, None));
        assert!(matches!(parse_config("[check]\nq = 3\n"), Err(Error::InvalidConfig(_))));
        assert_eq!(cfg.resolved_cache_dir(), PathBuf::from(DEFAULT_CACHE_DIR));
    }

    #[test]
    fn biquadratic_tasks() {
        let n = validate_config(&verify(&["5:13"], &[3, 7])).unwrap();
        assert_eq!(n.tasks.len(), 2);
        assert!(n.tasks.iter().all(|t| t.r == 2 && t.conductor == 65));
        assert_eq!("5:13".parse::<FieldSpec>().unwrap().label(), "Q(sqrt5,sqrt13)");
        assert!("x".parse::<FieldSpec>().is_err());
    }
}
