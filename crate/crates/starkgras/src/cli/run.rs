//! The verify, scan and kolyvagin pipelines.

use super::cache::Cache;
use super::config::{validate_config, FieldSpec, Mode, RunConfig, Task};
use super::report::{summary, Record};
use crate::class_unit::{class_group, unit_chi_lattice, ClassGroupOptions};
use crate::error::{Error, Result};
use crate::exact_algebra::arith::is_squarefree;
use crate::kolyvagin::{DerivedClass, KolyvaginCaps, KolyvaginContext};
use crate::lfunctions::class_number_formula_check;
use crate::numeric::bits_for_digits;
use crate::par::{self, ExecMode};
use crate::selmer_line::{compare_adaptive, LineStrategy};
use crate::stark::{
    rank2_index, stark_unit_rank1, theorem_ab_report, verify_regulator_identity, FieldArithmetic, RegulatorCheck,
    StarkParams, Verdict,
};
use rug::Float;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

pub struct Runner<'a> {
    pub cache: Option<&'a Cache>,
    pub exec: ExecMode,
}

impl Runner<'_> {
    /// Validates `cfg` and runs its mode; the stream always ends with a
    /// summary record.
    pub fn run(&self, cfg: &RunConfig) -> Vec<Record> {
        let mut records = match validate_config(cfg) {
            Err(e) => vec![Record::error(None, None, "validate", &e)],
            Ok(norm) => {
                let mut out = vec![Record::Config {
                    mode: format!("{:?}", cfg.mode).to_lowercase(),
                    tasks: norm.tasks.len(),
                    m: cfg.m,
                    digits: cfg.digits,
                }];
                out.extend(match cfg.mode {
                    Mode::Verify => self.verify(cfg, &norm.tasks),
                    Mode::Scan => self.scan(cfg),
                    Mode::Kolyvagin => self.kolyvagin(cfg, &norm.tasks),
                });
                out
            }
        };
        records.push(summary(&records));
        records
    }

    /// Cached unless the computation reported an error.
    fn cached<K: Serialize>(&self, module: &str, key: &K, compute: impl FnOnce() -> Vec<Record>) -> Vec<Record> {
        let Some(cache) = self.cache else {
            return compute();
        };
        let key = Cache::key(module, key);
        if let Some(records) = cache.get::<Vec<Record>>(&key) {
            return records;
        }
        let records = compute();
        if !records.iter().any(|r| matches!(r, Record::Error { .. })) {
            if let Err(e) = cache.put(&key, &records) {
                log::warn!("cache write failed: {e}");
            }
        }
        records
    }

    fn class_options(&self, cfg: &RunConfig) -> ClassGroupOptions {
        ClassGroupOptions {
            minkowski_cap: cfg.caps.minkowski,
            mode: self.exec,
            ..ClassGroupOptions::default()
        }
    }

    fn verify(&self, cfg: &RunConfig, tasks: &[Task]) -> Vec<Record> {
        let mut groups: Vec<(FieldSpec, Vec<Task>)> = Vec::new();
        for t in tasks {
            match groups.iter_mut().find(|(f, _)| *f == t.field) {
                Some((_, v)) => v.push(t.clone()),
                None => groups.push((t.field.clone(), vec![t.clone()])),
            }
        }
        let key_of = |g: &(FieldSpec, Vec<Task>)| (g.1.clone(), cfg.m, cfg.digits, cfg.caps.minkowski);
        par::map(self.exec, &groups, |g| {
            self.cached("verify", &key_of(g), || verify_field(&g.0, &g.1, cfg, &self.class_options(cfg)))
        })
        .into_iter()
        .flatten()
        .collect()
    }

    fn scan(&self, cfg: &RunConfig) -> Vec<Record> {
        let range = cfg.scan.expect("validated");
        let specs: Vec<(i64, FieldSpec)> = (range.lo..=range.hi)
            .filter(|&d| is_squarefree(d as u64) && Some(d) != range.base)
            .map(|d| {
                let spec = match range.base {
                    None => FieldSpec::Quadratic { d },
                    Some(base) => FieldSpec::Biquadratic { base, twist: d },
                };
                (d, spec)
            })
            .collect();
        let opts = self.class_options(cfg);
        let rows = par::map(self.exec, &specs, |(d, spec)| {
            let key = (spec.clone(), cfg.caps.minkowski);
            let entry: Result<ScanEntry> = match self.cache.and_then(|c| c.get(&Cache::key("scan", &key))) {
                Some(e) => Ok(e),
                None => spec.field().and_then(|f| class_group(&f, &opts)).map(|cg| {
                    let e = ScanEntry {
                        class_number: cg.order().to_string(),
                        invariants: cg.invariants.iter().map(|i| i.to_string()).collect(),
                    };
                    if let Some(c) = self.cache {
                        if let Err(err) = c.put(&Cache::key("scan", &key), &e) {
                            log::warn!("cache write failed: {err}");
                        }
                    }
                    e
                }),
            };
            match entry {
                Err(e) => vec![Record::error(Some(&spec.label()), None, "class_group", &e)],
                Ok(e) => {
                    let h: rug::Integer = e.class_number.parse().expect("cached class number");
                    cfg.p
                        .iter()
                        .filter(|&&p| h.is_divisible_u(p as u32))
                        .map(|&p| Record::ScanHit {
                            field: spec.label(),
                            d: *d,
                            p,
                            class_number: e.class_number.clone(),
                            invariants: e.invariants.clone(),
                        })
                        .collect()
                }
            }
        });
        rows.into_iter().flatten().collect()
    }

    fn kolyvagin(&self, cfg: &RunConfig, tasks: &[Task]) -> Vec<Record> {
        tasks
            .iter()
            .flat_map(|t| {
                let key = (t.clone(), cfg.m, cfg.digits, cfg.q_bound, cfg.caps);
                self.cached("kolyvagin", &key, || self.kolyvagin_task(t, cfg))
            })
            .collect()
    }

    fn kolyvagin_task(&self, task: &Task, cfg: &RunConfig) -> Vec<Record> {
        let label = task.label.clone();
        let p = task.p;
        let fail = |stage: &str, e: &Error| vec![Record::error(Some(&label), Some(p), stage, e)];
        let ctx = match kolyvagin_context(task, cfg, &self.class_options(cfg)) {
            Ok(c) => c,
            Err(e) => return fail("setup", &e),
        };
        let levels = match ctx.levels(cfg.q_bound) {
            Ok(l) => l,
            Err(e) => return fail("levels", &e),
        };
        let stark = match ctx.stark_unit() {
            Ok(u) => u,
            Err(e) => return fail("stark_unit", &e),
        };
        let classes = ctx.derived_classes(&levels, self.exec);
        let by_tau: HashMap<Vec<u64>, &DerivedClass> = classes
            .iter()
            .filter_map(|c| c.as_ref().ok())
            .map(|c| (c.tau.clone(), c))
            .collect();
        let checks = par::map(self.exec, &levels, |tau| -> Result<Record> {
            let qs: Vec<u64> = tau.iter().map(|q| q.q).collect();
            let kappa = by_tau.get(&qs).copied();
            let kappa = match kappa {
                Some(k) => k,
                None => {
                    let i = levels.iter().position(|l| l == tau).unwrap();
                    return Err(classes[i].as_ref().err().cloned().unwrap());
                }
            };
            let lower: Vec<DerivedClass> = qs
                .iter()
                .filter_map(|&q| {
                    let below: Vec<u64> = qs.iter().copied().filter(|&r| r != q).collect();
                    by_tau.get(&below).map(|c| (*c).clone())
                })
                .collect();
            let report = ctx.check_local_conditions(kappa, &lower)?;
            let stark_match = qs.is_empty().then(|| kappa.representative == stark);
            let mut distribution_relation = true;
            for &q in &qs {
                distribution_relation &= ctx.distribution_relation(tau, q)?;
            }
            let pass = report.all_hold() && stark_match != Some(false) && distribution_relation;
            Ok(Record::KolyvaginLevel {
                field: label.clone(),
                p,
                m: cfg.m,
                tau: qs,
                stark_match,
                distribution_relation,
                unramified_outside_tau: report.unramified_outside_tau,
                finite_singular: report.finite_singular,
                chi_part: kappa.chi_twisted_fixed,
                certificate_bits: kappa.certificate_bits,
                aux_primes: kappa.aux_primes,
                failures: report.failures,
                pass,
            })
        });
        let mut out: Vec<Record> = checks
            .into_iter()
            .zip(&levels)
            .map(|(r, tau)| {
                r.unwrap_or_else(|e| {
                    let qs: Vec<String> = tau.iter().map(|q| q.q.to_string()).collect();
                    Record::error(Some(&label), Some(p), &format!("level [{}]", qs.join(",")), &e)
                })
            })
            .collect();
        match ctx.bound_check() {
            Ok(bound) => out.push(Record::KolyvaginBound {
                field: label.clone(),
                p,
                m: cfg.m,
                levels: levels.len(),
                pass: bound.holds && (!bound.hs || bound.equality),
                bound,
            }),
            Err(e) => out.extend(fail("bound", &e)),
        }
        out
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ScanEntry {
    class_number: String,
    invariants: Vec<String>,
}

fn kolyvagin_context(task: &Task, cfg: &RunConfig, opts: &ClassGroupOptions) -> Result<KolyvaginContext> {
    let field = task.field.field()?;
    let chi = task.field.character(&field)?;
    let arith = FieldArithmetic::compute(&field, opts)?;
    let caps = KolyvaginCaps {
        prime_bound: cfg.caps.prime_bound,
        level_cap: cfg.caps.level_cap,
        ..KolyvaginCaps::default()
    };
    let mut ctx = KolyvaginContext::new(arith, &chi, task.p, cfg.m, caps)?;
    ctx.s_primes = task.s.clone();
    ctx.t_primes = task.t.clone();
    ctx.digits = cfg.digits;
    Ok(ctx)
}

/// log10 of a nonnegative residual; exact zero maps to the working
/// precision so the value stays finite.
fn log10_residual(x: &Float, digits: u32) -> f64 {
    if x.is_zero() {
        -((digits + 30) as f64)
    } else {
        Float::with_val(x.prec(), x.log10_ref()).to_f64()
    }
}

fn regulator_record(label: &str, task: &Task, check: &RegulatorCheck, cfg: &RunConfig) -> Record {
    let log10 = log10_residual(&check.residual, cfg.digits);
    let small = log10 < -((cfg.digits / 2) as f64);
    Record::Regulator {
        field: label.into(),
        p: task.p,
        r: task.r,
        ratio: check.ratio.to_string(),
        log10_residual: log10,
        digits: check.digits,
        p_valuation: check.p_valuation,
        // for r = 2 the valuation is the index itself
        pass: small && (task.r != 1 || check.is_p_unit()),
    }
}

fn verify_field(spec: &FieldSpec, tasks: &[Task], cfg: &RunConfig, opts: &ClassGroupOptions) -> Vec<Record> {
    let label = spec.label();
    let mut out = Vec::new();
    let setup = spec
        .field()
        .and_then(|f| Ok((spec.character(&f)?, FieldArithmetic::compute(&f, opts)?)));
    let (chi, arith) = match setup {
        Ok(x) => x,
        Err(e) => return vec![Record::error(Some(&label), None, "class_group", &e)],
    };
    let field = arith.field().clone();
    let h = arith.classes.order();
    let reg = arith.units.regulator(&arith.co, bits_for_digits(cfg.digits + 30));
    match class_number_formula_check(&field, &h, &reg, cfg.digits) {
        Ok(res) => {
            let log10 = log10_residual(&res, cfg.digits);
            out.push(Record::ClassNumberFormula {
                field: label.clone(),
                degree: field.degree(),
                class_number: h.to_string(),
                log10_residual: log10,
                digits: cfg.digits,
                pass: log10 < -((cfg.digits - 10) as f64),
            });
        }
        Err(e) => out.push(Record::error(Some(&label), None, "class_number_formula", &e)),
    }
    for task in tasks {
        let p = task.p;
        let err = |stage: &str, e: &Error| Record::error(Some(&label), Some(p), stage, e);
        let params = StarkParams {
            s_primes: Some(task.s.clone()),
            t_primes: Some(task.t.clone()),
            ..StarkParams::new(p, cfg.m, cfg.digits)
        };
        out.push(match theorem_ab_report(&arith, &chi, &params) {
            Ok(report) => Record::Index {
                field: label.clone(),
                pass: report.verdict != Verdict::Violation,
                report,
            },
            Err(e) => err("index", &e),
        });
        let check = if task.r == 1 {
            stark_unit_rank1(&arith.co, &chi, &params)
                .and_then(|eps| verify_regulator_identity(&arith.co, &eps, p, cfg.digits))
        } else {
            rank2_index(&arith, &chi, &params).map(|r| r.check)
        };
        out.push(match check {
            Ok(c) => regulator_record(&label, task, &c, cfg),
            Err(e) => err("regulator", &e),
        });
        let selmer = unit_chi_lattice(&arith.co, &arith.units, &chi, p, cfg.m).and_then(|lat| {
            match compare_adaptive(&arith.units, &lat, LineStrategy::Natural, cfg.m) {
                Err(Error::NoDegreeOnePlace { .. }) => compare_adaptive(&arith.units, &lat, LineStrategy::FirstBasis, cfg.m),
                other => other,
            }
        });
        out.push(match selmer {
            Ok(a) => Record::Selmer {
                field: label.clone(),
                p,
                strategy: a.line.strategy,
                pass: a.comparison.identity_holds(),
                comparison: a.comparison,
                verified_at: a.verified_at,
            },
            Err(e) => err("selmer", &e),
        });
    }
    out
}
