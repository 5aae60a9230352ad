//! The `trinum` command line. Every subcommand writes a line-oriented
//! `KEY\tVALUE` report to stdout; timings and diagnostics go to stderr.

pub mod cache;
pub mod setspec;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::escalator::{self, EscalationNode, EscalationTree, NodeStatus, TreeConfig};
use crate::quadform::{self, EquivalenceRow, Shift, TernaryQuadraticForm};
use crate::rules::{self, Claim, ScanOptions};
use crate::triangular::{self, TriangularForm};

pub use cache::{cache_load, cache_load_for, cache_store, CacheError};
pub use setspec::{parse_set, ParseError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

/// Conditional bounds published for the depth-3 leaves of the odd tree:
/// form, bound for the quadratic form, bound for odd squares.
pub const PUBLISHED_BOUNDS: [(&str, &str, &str); 8] = [
    ("1,2,6", "1.23e9", "1.23e9"),
    ("1,2,8", "6.0e8", "6.0e8"),
    ("1,2,9", "1.68e6", "6.72e6"),
    ("1,2,11", "8.0e4", "1.6e5"),
    ("1,4,5", "2.6e5", "2.6e5"),
    ("1,4,8", "5.7e8", "5.7e8"),
    ("1,4,9", "1.1e12", "1.1e12"),
    ("1,5,6", "4.55e9", "1.82e10"),
];

#[derive(Debug, Parser)]
#[command(name = "trinum", version, about = "Representation of integers by sums of triangular numbers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CacheArgs {
    /// Directory for on-disk sieve tables.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Smallest member of a set a form misses.
    Truant {
        #[arg(long, value_parser = parse_form)]
        form: TriangularForm,
        #[arg(long, value_parser = parse_target)]
        set: escalator::TargetSet,
        #[arg(long)]
        bound: u64,
        #[command(flatten)]
        cache: CacheArgs,
    },
    /// Escalation tree and its truant set.
    Tree {
        #[arg(long, value_parser = parse_target)]
        set: escalator::TargetSet,
        #[arg(long, default_value_t = 100_000)]
        truant_bound: u64,
        #[arg(long, default_value_t = 200_000)]
        leaf_bound: u64,
        #[arg(long, default_value_t = 1_000_000)]
        max_nodes: usize,
        /// Sieve every leaf instead of citing theorems.
        #[arg(long)]
        no_known_rules: bool,
        /// List children that keep their parent's truant.
        #[arg(long)]
        stuck: bool,
        /// Print the published conditional leaf bounds as metadata.
        #[arg(long, visible_alias = "show-published-bounds")]
        show_paper_bounds: bool,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Missed values of a form split into residue classes and sporadics.
    Scan {
        #[arg(long, value_parser = parse_form)]
        form: TriangularForm,
        #[arg(long)]
        bound: u64,
        /// Moduli searched for fully missed classes.
        #[arg(long, value_delimiter = ',', default_values_t = rules::DEFAULT_SCAN_MODULI)]
        moduli: Vec<u64>,
        /// Supplied class `M:r1,r2`; repeatable.
        #[arg(long = "class", value_parser = parse_class)]
        classes: Vec<(u64, Vec<u64>)>,
        #[command(flatten)]
        cache: CacheArgs,
    },
    /// Checks triangular/quadratic equivalence rows.
    Equiv {
        /// Built-in row index (0-7) or `all`.
        #[arg(long, conflicts_with_all = ["form", "quadratic", "shift"])]
        row: Option<String>,
        /// Custom row: triangular form with three coefficients.
        #[arg(long, value_parser = parse_form, requires_all = ["quadratic", "shift"])]
        form: Option<TriangularForm>,
        /// Custom row: `a,b,c,d,e,f`.
        #[arg(long, value_parser = parse_quadratic)]
        quadratic: Option<TernaryQuadraticForm>,
        /// Custom row: e.g. `8n+9`.
        #[arg(long, value_parser = parse_shift)]
        shift: Option<Shift>,
        #[arg(long)]
        bound: u64,
    },
    /// Checks catalog exclusion rules against the sieve.
    VerifyRule {
        #[arg(long, value_parser = parse_form)]
        form: TriangularForm,
        #[arg(long)]
        bound: u64,
        /// Catalog file instead of the built-in one.
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[command(flatten)]
        cache: CacheArgs,
    },
    /// Builds the form that misses exactly one truant and checks it.
    Witness {
        #[arg(long, value_parser = parse_form)]
        form: TriangularForm,
        #[arg(long)]
        truant: u64,
        #[arg(long, value_parser = parse_target)]
        set: escalator::TargetSet,
        #[arg(long)]
        bound: u64,
    },
    /// Representation count and one representation.
    Represent {
        #[arg(long, value_parser = parse_form)]
        form: TriangularForm,
        #[arg(long)]
        n: u64,
    },
}

fn parse_form(s: &str) -> Result<TriangularForm, String> {
    let form: TriangularForm = s.parse().map_err(|e: triangular::Error| e.to_string())?;
    if form.is_empty() {
        return Err("form needs at least one coefficient".into());
    }
    Ok(form)
}

fn parse_target(s: &str) -> Result<escalator::TargetSet, String> {
    parse_set(s).map_err(|e| e.to_string())
}

fn parse_shift(s: &str) -> Result<Shift, String> {
    s.parse().map_err(|e: quadform::Error| e.to_string())
}

fn parse_numbers<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    s.split(',').map(|t| t.trim().parse().map_err(|_| format!("bad number '{t}'"))).collect()
}

fn parse_quadratic(s: &str) -> Result<TernaryQuadraticForm, String> {
    let v: Vec<i64> = parse_numbers(s)?;
    let [a, b, c, d, e, f] = v[..] else {
        return Err("expected six coefficients a,b,c,d,e,f".into());
    };
    TernaryQuadraticForm::new(a, b, c, d, e, f).map_err(|e| e.to_string())
}

fn parse_class(s: &str) -> Result<(u64, Vec<u64>), String> {
    let (m, rs) = s.split_once(':').ok_or("expected M:r1,r2")?;
    let m: u64 = m.parse().map_err(|_| format!("bad modulus '{m}'"))?;
    if m == 0 {
        return Err("modulus must be positive".into());
    }
    Ok((m, parse_numbers(rs)?))
}

/// Exit status and both output channels of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Report {
    out: String,
    err: String,
}

impl Report {
    fn record(&mut self, key: &str, value: impl std::fmt::Display) {
        writeln!(self.out, "{key}\t{value}").unwrap();
    }

    fn note(&mut self, line: impl std::fmt::Display) {
        writeln!(self.err, "{line}").unwrap();
    }

    fn finish(self, code: i32) -> Outcome {
        Outcome { code, stdout: self.out, stderr: self.err }
    }
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn list_or_none(items: &[u64]) -> String {
    if items.is_empty() { "none".into() } else { join(items) }
}

fn coeff_text(form: &TriangularForm) -> String {
    if form.is_empty() { "-".into() } else { join(form.coeffs()) }
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { code: EXIT_USAGE, stdout: String::new(), stderr: text }
            } else {
                Outcome { code: EXIT_OK, stdout: text, stderr: String::new() }
            };
        }
    };
    let mut rep = Report { out: String::new(), err: String::new() };
    let start = Instant::now();
    let code = match dispatch(cli.command, &mut rep) {
        Ok(code) => code,
        Err((code, message)) => {
            rep.note(format!("error: {message}"));
            code
        }
    };
    rep.note(format!("elapsed\t{:.3}s", start.elapsed().as_secs_f64()));
    rep.finish(code)
}

type Failure = (i32, String);

fn resource(e: impl std::fmt::Display) -> Failure {
    (EXIT_RESOURCE, e.to_string())
}

fn usage(e: impl std::fmt::Display) -> Failure {
    (EXIT_USAGE, e.to_string())
}

fn dispatch(command: Command, rep: &mut Report) -> Result<i32, Failure> {
    match command {
        Command::Truant { form, set, bound, cache } => {
            let (table, source) = cache::cached_table(cache.cache_dir.as_deref(), &form, bound).map_err(resource)?;
            let members = set.membership_words(bound).map_err(resource)?;
            rep.record("FORM", &form);
            rep.record("SET", &set);
            rep.record("BOUND", bound);
            match table.first_unrepresented_in(&members) {
                Some(s) => rep.record("TRUANT", s),
                None => rep.record("TRUANT", "none"),
            }
            if source == cache::Source::Cache {
                rep.note("table served from cache");
            }
            Ok(EXIT_OK)
        }
        Command::Tree {
            set,
            truant_bound,
            leaf_bound,
            max_nodes,
            no_known_rules,
            stuck,
            show_paper_bounds,
            out,
        } => {
            let config = TreeConfig { leaf_bound, truant_bound, use_known_rules: !no_known_rules, max_nodes };
            rep.record("SET", &set);
            rep.record("TRUANT_BOUND", truant_bound);
            rep.record("LEAF_BOUND", leaf_bound);
            if show_paper_bounds {
                rep.record("BOUNDS_NOTE", "published conditional bounds; not verified here, leaves are checked to LEAF_BOUND only");
                for (form, quad, odd) in PUBLISHED_BOUNDS {
                    rep.record("PUBLISHED_BOUND", format!("{form}\t{quad}\t{odd}"));
                }
            }
            let (tree, code) = match escalator::build_tree(&set, &config) {
                Ok(tree) => (tree, EXIT_OK),
                Err(escalator::Error::NodeBudget { limit, partial }) => {
                    rep.note(format!("error: tree exceeded {limit} nodes; partial tree follows"));
                    (*partial, EXIT_RESOURCE)
                }
                Err(escalator::Error::InvalidConfig(m)) => return Err(usage(m)),
                Err(e) => return Err(resource(e)),
            };
            tree.warnings.iter().for_each(|w| rep.note(format!("warning: {w}")));
            write_tree(rep, &tree, stuck);
            if let Some(path) = out {
                std::fs::write(&path, &rep.out).map_err(resource)?;
            }
            Ok(code)
        }
        Command::Scan { form, bound, moduli, classes, cache } => {
            let (table, _) = cache::cached_table(cache.cache_dir.as_deref(), &form, bound).map_err(resource)?;
            let options = ScanOptions {
                supplied: classes.into_iter().map(|(m, rs)| (m, rs.into_iter().collect())).collect(),
                moduli,
            };
            let report = rules::table3_scan_on(&table, &options);
            rep.record("FORM", &form);
            rep.record("BOUND", bound);
            rep.record("MISSING", report.missing.len());
            for c in &report.classes {
                rep.record(
                    "CLASS",
                    format!(
                        "{}\t{}\t{}\t{}\t{}",
                        c.modulus,
                        c.residue,
                        if c.full { "full" } else { "partial" },
                        c.missing,
                        if c.supplied { "supplied" } else { "detected" }
                    ),
                );
            }
            rep.record("SPORADICS", list_or_none(&report.sporadics));
            Ok(EXIT_OK)
        }
        Command::Equiv { row, form, quadratic, shift, bound } => {
            let rows: Vec<(String, EquivalenceRow)> = match (row.as_deref(), form) {
                (Some("all"), _) | (None, None) => {
                    quadform::table1_rows().into_iter().enumerate().map(|(i, r)| (i.to_string(), r)).collect()
                }
                (Some(k), _) => {
                    let i: usize = k.parse().map_err(|_| usage(format!("bad row '{k}'")))?;
                    let r = quadform::table1_rows()
                        .into_iter()
                        .nth(i)
                        .ok_or_else(|| usage(format!("row {i} out of range 0-7")))?;
                    vec![(i.to_string(), r)]
                }
                (None, Some(form)) => {
                    let r = EquivalenceRow::new(form, quadratic.unwrap(), shift.unwrap()).map_err(usage)?;
                    vec![("custom".into(), r)]
                }
            };
            rep.record("BOUND", bound);
            let mut code = EXIT_OK;
            for (label, row) in rows {
                let violations = quadform::table1_check(&row, bound).map_err(resource)?;
                if !violations.is_empty() {
                    code = EXIT_MISMATCH;
                }
                rep.record(
                    "ROW",
                    format!(
                        "{label}\t{}\t{}\t{}\t{}",
                        coeff_text(&row.triangular),
                        row.quadratic,
                        row.shift,
                        list_or_none(&violations)
                    ),
                );
            }
            Ok(code)
        }
        Command::VerifyRule { form, bound, catalog, cache } => {
            let entries = match catalog {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(usage)?;
                    rules::parse_catalog(&text).map_err(usage)?
                }
                None => rules::builtin_catalog(),
            };
            let entries: Vec<_> = entries.into_iter().filter(|e| e.form == form).collect();
            if entries.is_empty() {
                return Err(usage(format!("no catalog rule for {form}")));
            }
            let (table, _) = cache::cached_table(cache.cache_dir.as_deref(), &form, bound).map_err(resource)?;
            rep.record("FORM", &form);
            rep.record("BOUND", bound);
            let mut code = EXIT_OK;
            for entry in entries {
                let v = rules::verify_rule_on(&table, &entry.rule);
                let pass = v.passes(entry.rule.claim);
                if !pass {
                    code = EXIT_MISMATCH;
                }
                let shown = match entry.rule.claim {
                    Claim::Exact => &v.exact_violations,
                    Claim::NecessaryOnly => &v.necessity_violations,
                };
                let head: Vec<u64> = shown.iter().copied().take(20).collect();
                rep.record(
                    "RULE",
                    format!(
                        "{}\t{}\t{}\t{}",
                        entry.rule,
                        if pass { "PASS" } else { "FAIL" },
                        shown.len(),
                        list_or_none(&head)
                    ),
                );
            }
            Ok(code)
        }
        Command::Witness { form, truant, set, bound } => {
            let (witness, violations) = match escalator::witness_form(&form, truant, &set, bound) {
                Ok(v) => v,
                Err(e) => return Err(resource(e)),
            };
            rep.record("FORM", &form);
            rep.record("TRUANT", truant);
            rep.record("SET", &set);
            rep.record("BOUND", bound);
            rep.record("WITNESS_LEN", witness.len());
            rep.record("APPENDED", format!("{}..{}x3", truant + 1, (truant + 1) * (truant + 2) - 1));
            rep.record("VIOLATIONS", list_or_none(&violations));
            Ok(if violations.is_empty() { EXIT_OK } else { EXIT_MISMATCH })
        }
        Command::Represent { form, n } => {
            let count = triangular::count_reps(&form, n).map_err(resource)?;
            let witness = triangular::find_representation(&form, n).map_err(resource)?;
            rep.record("FORM", &form);
            rep.record("N", n);
            rep.record("COUNT", count);
            match witness {
                Some(xs) => rep.record("WITNESS", join(xs)),
                None => rep.record("WITNESS", "none"),
            }
            Ok(EXIT_OK)
        }
    }
}

fn status_fields(node: &EscalationNode) -> (&'static str, String) {
    match node.status {
        NodeStatus::Truant(s) => ("truant", s.to_string()),
        NodeStatus::ProvisionalLeaf { verified_bound } => ("leaf", format!("verified<={verified_bound}")),
        NodeStatus::KnownLeaf { rule } => ("known", rule.id.to_string()),
        NodeStatus::Pending => ("pending", "-".into()),
    }
}

fn write_tree(rep: &mut Report, tree: &EscalationTree, stuck: bool) {
    for node in tree.nodes() {
        let (status, detail) = status_fields(node);
        rep.record("NODE", format!("{}\t{status}\t{detail}", coeff_text(&node.form)));
    }
    if stuck {
        for (parent, c) in escalator::stuck_report(tree) {
            rep.record("STUCK", format!("{}\t{c}", coeff_text(&parent)));
        }
    }
    rep.record("NODES", tree.node_count());
    rep.record("S0", join(&tree.s0));
}
