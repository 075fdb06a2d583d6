//! Report assembly and rendering.
//!
//! Everything between the begin/end markers is deterministic for a given
//! scenario file: numbers carry 17 significant digits, rows keep scenario
//! order, and timing stays outside the markers. The table form is for eyes,
//! the record stream (tab-separated `record` lines) for machines.

use std::fmt::Write as _;

pub const TABLE_BEGIN: &str = "-- begin report --";
pub const TABLE_END: &str = "-- end report --";
pub const RECORD_BEGIN: &str = "record\tbegin";
pub const RECORD_END: &str = "record\tend";

/// One scalar diagnostic: infinity norm and grid-weighted L2 norm.
#[derive(Debug, Clone)]
pub struct Measure {
    pub name: String,
    pub inf: f64,
    pub l2: f64,
}

#[derive(Debug, Clone)]
pub struct LevelReport {
    pub index: usize,
    pub extents: Vec<usize>,
    pub spacing: Vec<f64>,
    pub measures: Vec<Measure>,
}

/// Observed refinement behavior of one measure across levels.
#[derive(Debug, Clone)]
pub struct OrderRow {
    pub name: String,
    /// log2 ratios of successive infinity norms.
    pub pairs: Vec<f64>,
    /// Final-pair order, or "exact" when every level is exactly zero, or
    /// "non-monotone" when the norms fail to decrease.
    pub observed: String,
}

#[derive(Debug, Clone)]
pub struct CheckRow {
    pub name: String,
    pub observed: String,
    pub expected: String,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub name: String,
    pub kind: String,
    pub echo: Vec<(String, String)>,
    pub measures: Vec<Measure>,
    pub levels: Vec<LevelReport>,
    pub orders: Vec<OrderRow>,
    pub checks: Vec<CheckRow>,
    pub passed: bool,
}

pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

impl Report {
    pub fn passed_count(&self) -> (usize, usize) {
        let pass = self.checks.iter().filter(|c| c.pass).count();
        (pass, self.checks.len())
    }

    pub fn render_table(&self, elapsed_ms: f64) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{TABLE_BEGIN}");
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "kind = {}", self.kind);
        let _ = writeln!(s, "scenario:");
        for (path, raw) in &self.echo {
            let _ = writeln!(s, "  {path} = {raw}");
        }
        if !self.levels.is_empty() {
            let _ = writeln!(s, "levels:");
            for lv in &self.levels {
                let extents: Vec<String> = lv.extents.iter().map(|n| n.to_string()).collect();
                let spacing: Vec<String> = lv.spacing.iter().map(|h| sig17(*h)).collect();
                let _ = writeln!(
                    s,
                    "  level {}  extents = {}  spacing = {}",
                    lv.index,
                    extents.join("x"),
                    spacing.join(", ")
                );
                for m in &lv.measures {
                    let _ = writeln!(
                        s,
                        "    {:<16} inf = {:<24} l2 = {}",
                        m.name,
                        sig17(m.inf),
                        sig17(m.l2)
                    );
                }
            }
        }
        if !self.measures.is_empty() {
            let _ = writeln!(s, "measures:");
            for m in &self.measures {
                let _ = writeln!(
                    s,
                    "  {:<18} inf = {:<24} l2 = {}",
                    m.name,
                    sig17(m.inf),
                    sig17(m.l2)
                );
            }
        }
        if !self.orders.is_empty() {
            let _ = writeln!(s, "orders:");
            for o in &self.orders {
                let pairs: Vec<String> = o.pairs.iter().map(|p| sig17(*p)).collect();
                let _ = writeln!(
                    s,
                    "  {:<18} pairs = [{}]  observed = {}",
                    o.name,
                    pairs.join(", "),
                    o.observed
                );
            }
        }
        let _ = writeln!(s, "checks:");
        for c in &self.checks {
            let _ = writeln!(
                s,
                "  [{}] {:<22} observed = {:<24} required = {}",
                if c.pass { "pass" } else { "FAIL" },
                c.name,
                c.observed,
                c.expected
            );
        }
        let (ok, total) = self.passed_count();
        let _ = writeln!(
            s,
            "result = {} ({ok}/{total} checks)",
            if self.passed { "pass" } else { "fail" }
        );
        let _ = writeln!(s, "{TABLE_END}");
        let _ = writeln!(s, "elapsed-ms = {elapsed_ms:.3}");
        s
    }

    pub fn render_records(&self, elapsed_ms: f64) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{RECORD_BEGIN}");
        let _ = writeln!(s, "record\treport\tname={}\tkind={}", self.name, self.kind);
        for (path, raw) in &self.echo {
            let _ = writeln!(s, "record\techo\tpath={path}\tvalue={raw}");
        }
        for lv in &self.levels {
            let extents: Vec<String> = lv.extents.iter().map(|n| n.to_string()).collect();
            let spacing: Vec<String> = lv.spacing.iter().map(|h| sig17(*h)).collect();
            let _ = writeln!(
                s,
                "record\tlevel\tindex={}\textents={}\tspacing={}",
                lv.index,
                extents.join("x"),
                spacing.join(",")
            );
            for m in &lv.measures {
                let _ = writeln!(
                    s,
                    "record\tlevel-measure\tindex={}\tname={}\tinf={}\tl2={}",
                    lv.index,
                    m.name,
                    sig17(m.inf),
                    sig17(m.l2)
                );
            }
        }
        for m in &self.measures {
            let _ = writeln!(
                s,
                "record\tmeasure\tname={}\tinf={}\tl2={}",
                m.name,
                sig17(m.inf),
                sig17(m.l2)
            );
        }
        for o in &self.orders {
            let pairs: Vec<String> = o.pairs.iter().map(|p| sig17(*p)).collect();
            let _ = writeln!(
                s,
                "record\torder\tname={}\tpairs={}\tobserved={}",
                o.name,
                pairs.join(","),
                o.observed
            );
        }
        for c in &self.checks {
            let _ = writeln!(
                s,
                "record\tcheck\tname={}\tobserved={}\trequired={}\tpass={}",
                c.name,
                c.observed,
                c.expected,
                u8::from(c.pass)
            );
        }
        let _ = writeln!(s, "record\tresult\tpass={}", u8::from(self.passed));
        let _ = writeln!(s, "{RECORD_END}");
        let _ = writeln!(s, "record\ttiming\telapsed-ms={elapsed_ms:.3}");
        s
    }
}
