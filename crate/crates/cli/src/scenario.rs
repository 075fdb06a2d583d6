//! Scenario files: a line-based nested key-value format.
//!
//! ```text
//! # comment
//! kind = equilibrium
//! grid {
//!   extents = 5, 5, 5
//!   spacing = 0.25, 0.25, 0.25
//! }
//! ```
//!
//! A line is a comment, `key = value`, `key {` opening a block, or `}`.
//! Keys are unique within a block and keep file order. Field values are
//! comma-separated expression lists over `rho1 rho2 rho3`, or a tabulated
//! number list prefixed with `values:` holding one tuple per grid node.

use std::collections::BTreeSet;

use cosserat_core::grid::MAX_DIM;
use cosserat_core::ParameterGrid;

use crate::error::CliError;
use crate::expr::Expr;

#[derive(Debug, Clone)]
pub enum Value {
    Leaf { raw: String, line: usize },
    Block(Tree),
}

#[derive(Debug, Clone, Default)]
pub struct Tree {
    pub entries: Vec<(String, Value)>,
    pub line: usize,
}

impl Tree {
    fn get(&self, key: &str) -> Option<&Value> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v)
    }

    fn has(&self, key: &str) -> bool {
        self.get(key).is_some()
    }
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

pub fn parse_tree(src: &str) -> Result<Tree, CliError> {
    // Frames: (block key within its parent, tree under construction).
    let mut stack: Vec<(Option<String>, Tree)> = vec![(None, Tree::default())];
    for (idx, raw_line) in src.lines().enumerate() {
        let line = idx + 1;
        let text = raw_line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        if text == "}" {
            let (key, done) = stack.pop().expect("stack nonempty");
            let Some(key) = key else {
                return Err(CliError::parse(line, "unmatched '}'"));
            };
            let parent = &mut stack.last_mut().expect("root remains").1;
            parent.entries.push((key, Value::Block(done)));
            continue;
        }
        if let Some(name) = text.strip_suffix('{') {
            let key = name.trim();
            if !valid_key(key) {
                return Err(CliError::parse(line, format!("bad block name '{key}'")));
            }
            if stack.last().expect("stack nonempty").1.has(key) {
                return Err(CliError::parse(line, format!("duplicate key '{key}'")));
            }
            stack.push((
                Some(key.to_string()),
                Tree {
                    entries: Vec::new(),
                    line,
                },
            ));
            continue;
        }
        match text.split_once('=') {
            Some((k, v)) => {
                let key = k.trim();
                if !valid_key(key) {
                    return Err(CliError::parse(line, format!("bad key '{key}'")));
                }
                let parent = &mut stack.last_mut().expect("stack nonempty").1;
                if parent.has(key) {
                    return Err(CliError::parse(line, format!("duplicate key '{key}'")));
                }
                parent.entries.push((
                    key.to_string(),
                    Value::Leaf {
                        raw: v.trim().to_string(),
                        line,
                    },
                ));
            }
            None => {
                return Err(CliError::parse(
                    line,
                    "expected 'key = value', 'name {', or '}'",
                ))
            }
        }
    }
    if stack.len() > 1 {
        return Err(CliError::parse(
            stack.last().expect("open frame").1.line,
            "block is never closed",
        ));
    }
    Ok(stack.pop().expect("root tree").1)
}

/// Flattened `path = raw` lines of the tree, in file order; the scenario
/// echo inside reports.
pub fn flatten(tree: &Tree) -> Vec<(String, String)> {
    fn walk(tree: &Tree, prefix: &str, out: &mut Vec<(String, String)>) {
        for (k, v) in &tree.entries {
            let path = if prefix.is_empty() {
                k.clone()
            } else {
                format!("{prefix}.{k}")
            };
            match v {
                Value::Leaf { raw, .. } => out.push((path, raw.clone())),
                Value::Block(t) => walk(t, &path, out),
            }
        }
    }
    let mut out = Vec::new();
    walk(tree, "", &mut out);
    out
}

/// Cursor into the tree that renders full dotted paths in error messages.
#[derive(Clone)]
pub struct Fields<'t> {
    tree: &'t Tree,
    path: String,
}

impl<'t> Fields<'t> {
    pub fn root(tree: &'t Tree) -> Self {
        Fields {
            tree,
            path: String::new(),
        }
    }

    fn child_path(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn invalid(&self, key: &str, line: usize, msg: impl Into<String>) -> CliError {
        CliError::validation(self.child_path(key), line, msg)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.tree.entries.iter().map(|(k, _)| k.as_str())
    }

    pub fn leaf(&self, key: &str) -> Result<(&'t str, usize), CliError> {
        match self.tree.get(key) {
            Some(Value::Leaf { raw, line }) => Ok((raw.as_str(), *line)),
            Some(Value::Block(t)) => Err(self.invalid(key, t.line, "expected a value, found a block")),
            None => Err(CliError::validation(
                self.child_path(key),
                self.tree.line,
                "required field is missing",
            )),
        }
    }

    pub fn opt_leaf(&self, key: &str) -> Result<Option<(&'t str, usize)>, CliError> {
        match self.tree.get(key) {
            None => Ok(None),
            Some(_) => self.leaf(key).map(Some),
        }
    }

    pub fn block(&self, key: &str) -> Result<Fields<'t>, CliError> {
        match self.tree.get(key) {
            Some(Value::Block(t)) => Ok(Fields {
                tree: t,
                path: self.child_path(key),
            }),
            Some(Value::Leaf { line, .. }) => {
                Err(self.invalid(key, *line, "expected a block, found a value"))
            }
            None => Err(CliError::validation(
                self.child_path(key),
                self.tree.line,
                "required block is missing",
            )),
        }
    }

    pub fn opt_block(&self, key: &str) -> Result<Option<Fields<'t>>, CliError> {
        match self.tree.get(key) {
            None => Ok(None),
            Some(_) => self.block(key).map(Some),
        }
    }

    pub fn number(&self, key: &str) -> Result<f64, CliError> {
        let (raw, line) = self.leaf(key)?;
        Expr::eval_const(raw).map_err(|e| self.invalid(key, line, e.to_string()))
    }

    pub fn opt_number(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.opt_leaf(key)? {
            None => Ok(None),
            Some(_) => self.number(key).map(Some),
        }
    }

    pub fn integer(&self, key: &str) -> Result<usize, CliError> {
        let (raw, line) = self.leaf(key)?;
        raw.parse::<usize>()
            .map_err(|_| self.invalid(key, line, format!("expected a non-negative integer, got '{raw}'")))
    }

    pub fn boolean(&self, key: &str) -> Result<bool, CliError> {
        let (raw, line) = self.leaf(key)?;
        match raw {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(self.invalid(key, line, format!("expected true or false, got '{raw}'"))),
        }
    }

    /// Comma-separated constant expression list of a fixed arity.
    pub fn number_list(&self, key: &str, arity: usize) -> Result<Vec<f64>, CliError> {
        let (raw, line) = self.leaf(key)?;
        let parts: Vec<&str> = raw.split(',').collect();
        if parts.len() != arity {
            return Err(self.invalid(
                key,
                line,
                format!("expected {arity} comma-separated numbers, got {}", parts.len()),
            ));
        }
        parts
            .iter()
            .map(|p| Expr::eval_const(p).map_err(|e| self.invalid(key, line, e.to_string())))
            .collect()
    }

    /// A field given either as `arity` expressions or as a tabulated
    /// `values:` list with `arity` numbers per grid node.
    pub fn field(&self, key: &str, arity: usize) -> Result<FieldData, CliError> {
        let (raw, line) = self.leaf(key)?;
        if let Some(numbers) = raw.strip_prefix("values:") {
            let values: Result<Vec<f64>, CliError> = numbers
                .split(',')
                .map(|p| {
                    p.trim().parse::<f64>().map_err(|_| {
                        self.invalid(key, line, format!("tabulated entry '{}' is not a number", p.trim()))
                    })
                })
                .collect();
            return Ok(FieldData::Tabulated {
                arity,
                values: values?,
                line,
            });
        }
        let parts: Vec<&str> = raw.split(',').collect();
        if parts.len() != arity {
            return Err(self.invalid(
                key,
                line,
                format!("expected {arity} comma-separated expressions, got {}", parts.len()),
            ));
        }
        let exprs: Result<Vec<Expr>, CliError> = parts
            .iter()
            .map(|p| Expr::parse(p).map_err(|e| self.invalid(key, line, e.to_string())))
            .collect();
        Ok(FieldData::Exprs(exprs?))
    }

    pub fn opt_field(&self, key: &str) -> bool {
        self.tree.has(key)
    }

    /// Rejects keys outside the allowed set, naming the first offender.
    pub fn expect_keys(&self, allowed: &[&str]) -> Result<(), CliError> {
        let allowed: BTreeSet<&str> = allowed.iter().copied().collect();
        for (k, v) in &self.tree.entries {
            if !allowed.contains(k.as_str()) {
                let line = match v {
                    Value::Leaf { line, .. } => *line,
                    Value::Block(t) => t.line,
                };
                return Err(self.invalid(k, line, "unknown field"));
            }
        }
        Ok(())
    }
}

/// Node-resolved data of one field: expressions evaluated at the node
/// coordinates, or a table with one tuple per node.
#[derive(Debug, Clone)]
pub enum FieldData {
    Exprs(Vec<Expr>),
    Tabulated {
        arity: usize,
        values: Vec<f64>,
        line: usize,
    },
}

impl FieldData {
    pub fn is_tabulated(&self) -> bool {
        matches!(self, FieldData::Tabulated { .. })
    }

    /// Checks a table against the grid size; expressions always fit.
    pub fn check_grid(&self, path: &str, grid: &ParameterGrid) -> Result<(), CliError> {
        if let FieldData::Tabulated { arity, values, line } = self {
            let expected = arity * grid.node_count();
            if values.len() != expected {
                return Err(CliError::validation(
                    path,
                    *line,
                    format!(
                        "tabulated field holds {} numbers, grid needs {} ({} per node)",
                        values.len(),
                        expected,
                        arity
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn at(&self, grid: &ParameterGrid, node: usize, out: &mut [f64]) {
        match self {
            FieldData::Exprs(exprs) => {
                let c = grid.coords(node);
                let rho = [c[0], c[1], c[2]];
                for (slot, e) in out.iter_mut().zip(exprs) {
                    *slot = e.eval(&rho);
                }
            }
            FieldData::Tabulated { arity, values, .. } => {
                out.copy_from_slice(&values[arity * node..arity * (node + 1)]);
            }
        }
    }

    /// Evaluates an expression field at an arbitrary coordinate (boundary
    /// conditions, refined grids). Tables cannot do this.
    pub fn at_coords(&self, rho: &[f64; 3], out: &mut [f64]) {
        match self {
            FieldData::Exprs(exprs) => {
                for (slot, e) in out.iter_mut().zip(exprs) {
                    *slot = e.eval(rho);
                }
            }
            FieldData::Tabulated { .. } => unreachable!("tabulated fields are node-bound"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    DeformationCheck,
    Compatibility,
    Equilibrium,
    RodSolve,
    ConvergenceStudy,
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::DeformationCheck => "deformation-check",
            Kind::Compatibility => "compatibility",
            Kind::Equilibrium => "equilibrium",
            Kind::RodSolve => "rod-solve",
            Kind::ConvergenceStudy => "convergence-study",
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridSpec {
    pub extents: Vec<usize>,
    pub spacing: Vec<f64>,
}

impl GridSpec {
    pub fn build(&self) -> Result<ParameterGrid, CliError> {
        ParameterGrid::new(&self.extents, &self.spacing)
            .map_err(|e| CliError::numerical("building the grid", e))
    }

    /// Same domain with halved spacing, `level` times.
    pub fn refined(&self, level: usize) -> GridSpec {
        let factor = 1usize << level;
        GridSpec {
            extents: self.extents.iter().map(|n| (n - 1) * factor + 1).collect(),
            spacing: self.spacing.iter().map(|h| h / factor as f64).collect(),
        }
    }
}

/// Displacement field spec: translation plus a rotation given as an
/// axis-angle vector, both over the coordinates.
#[derive(Debug, Clone)]
pub struct ChiSpec {
    pub translation: FieldData,
    pub rotation: FieldData,
}

#[derive(Debug, Clone)]
pub enum StateSpec {
    Inclusion,
    Displaced(ChiSpec),
}

#[derive(Debug, Clone)]
pub struct FormSpec {
    pub f: Option<FieldData>,
    pub m: Option<FieldData>,
    pub sigma: Vec<Option<FieldData>>,
    pub mu: Vec<Option<FieldData>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Picture {
    Lagrangian,
    Eulerian,
    Cosserat3d,
}

#[derive(Debug, Clone)]
pub struct VariationSpec {
    pub dx: FieldData,
    pub de: FieldData,
}

#[derive(Debug, Clone)]
pub struct LawSpec {
    pub stretch: f64,
    pub shear: f64,
    pub twist: f64,
    pub bend: f64,
    pub body_force: Option<FieldData>,
    pub body_couple: Option<FieldData>,
}

impl LawSpec {
    pub fn is_loaded(&self) -> bool {
        self.body_force.is_some() || self.body_couple.is_some()
    }
}

#[derive(Debug, Clone)]
pub enum EndSpec {
    Clamped {
        translation: FieldData,
        rotation: FieldData,
    },
    Free {
        force: FieldData,
        couple: FieldData,
    },
}

#[derive(Debug, Clone)]
pub struct TargetSpec {
    pub translation: FieldData,
    pub rotation: FieldData,
}

#[derive(Debug, Clone)]
pub enum Payload {
    DeformationCheck {
        chi: ChiSpec,
    },
    Compatibility {
        chi: ChiSpec,
    },
    Equilibrium {
        state: StateSpec,
        form: FormSpec,
        picture: Picture,
        project: bool,
        /// Integrability gate handed to the residual operators. Inclusion
        /// states satisfy it exactly; displaced states only to O(h^2), so
        /// scenarios over displaced states set this explicitly.
        state_tol: f64,
        variation: Option<VariationSpec>,
    },
    RodSolve {
        law: LawSpec,
        start: EndSpec,
        end: EndSpec,
        target: Option<TargetSpec>,
    },
    Study {
        levels: usize,
        order_band: f64,
        base: Box<Scenario>,
    },
}

#[derive(Debug, Clone)]
pub enum CheckDecl {
    /// `<measure>-max = tol`: the measure's infinity norm must be at most
    /// tol (scaled by --tol-scale).
    MaxNorm { measure: String, tol: f64 },
    /// `require-converged = true|false`
    Converged(bool),
    /// `max-iterations = n`
    MaxIterations(usize),
    /// `<measure>-order = p`: observed refinement order within the band.
    Order { measure: String, expected: f64 },
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub decl: CheckDecl,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub kind: Kind,
    pub grid: GridSpec,
    pub payload: Payload,
    pub checks: Vec<Check>,
    pub echo: Vec<(String, String)>,
}

fn parse_grid(fields: &Fields) -> Result<GridSpec, CliError> {
    let grid = fields.block("grid")?;
    grid.expect_keys(&["extents", "spacing"])?;
    let (raw, line) = grid.leaf("extents")?;
    let extents: Result<Vec<usize>, CliError> = raw
        .split(',')
        .map(|p| {
            p.trim().parse::<usize>().map_err(|_| {
                CliError::validation(
                    "grid.extents",
                    line,
                    format!("'{}' is not a node count", p.trim()),
                )
            })
        })
        .collect();
    let extents = extents?;
    if extents.is_empty() || extents.len() > MAX_DIM {
        return Err(CliError::validation(
            "grid.extents",
            line,
            format!("expected 1 to {MAX_DIM} axes, got {}", extents.len()),
        ));
    }
    let spacing = grid.number_list("spacing", extents.len())?;
    Ok(GridSpec { extents, spacing })
}

fn parse_chi(fields: &Fields) -> Result<ChiSpec, CliError> {
    let chi = fields.block("chi")?;
    chi.expect_keys(&["translation", "rotation"])?;
    Ok(ChiSpec {
        translation: chi.field("translation", 3)?,
        rotation: chi.field("rotation", 3)?,
    })
}

fn parse_state(fields: &Fields) -> Result<StateSpec, CliError> {
    let state = fields.block("state")?;
    state.expect_keys(&["type", "chi"])?;
    let (ty, line) = state.leaf("type")?;
    match ty {
        "inclusion" => Ok(StateSpec::Inclusion),
        "displaced" => Ok(StateSpec::Displaced(parse_chi(&state)?)),
        _ => Err(CliError::validation(
            "state.type",
            line,
            format!("expected inclusion or displaced, got '{ty}'"),
        )),
    }
}

fn parse_form(fields: &Fields, dim: usize) -> Result<FormSpec, CliError> {
    let form = fields.block("form")?;
    let mut allowed = vec!["f".to_string(), "m".to_string()];
    for a in 1..=dim {
        allowed.push(format!("sigma{a}"));
        allowed.push(format!("mu{a}"));
    }
    let allowed_refs: Vec<&str> = allowed.iter().map(|s| s.as_str()).collect();
    form.expect_keys(&allowed_refs)?;

    let parse_opt = |key: &str, arity: usize| -> Result<Option<FieldData>, CliError> {
        if form.opt_field(key) {
            form.field(key, arity).map(Some)
        } else {
            Ok(None)
        }
    };
    let mut sigma = Vec::new();
    let mut mu = Vec::new();
    for a in 1..=dim {
        sigma.push(parse_opt(&format!("sigma{a}"), 3)?);
        mu.push(parse_opt(&format!("mu{a}"), 9)?);
    }
    Ok(FormSpec {
        f: parse_opt("f", 3)?,
        m: parse_opt("m", 9)?,
        sigma,
        mu,
    })
}

fn parse_law(fields: &Fields) -> Result<LawSpec, CliError> {
    let law = fields.block("law")?;
    law.expect_keys(&[
        "name",
        "stretch",
        "shear",
        "twist",
        "bend",
        "body-force",
        "body-couple",
    ])?;
    let (name, line) = law.leaf("name")?;
    if name != "linear-rod" {
        return Err(CliError::validation(
            "law.name",
            line,
            format!("unknown law '{name}' (available: linear-rod)"),
        ));
    }
    let opt = |key: &str| -> Result<Option<FieldData>, CliError> {
        if law.opt_field(key) {
            law.field(key, 3).map(Some)
        } else {
            Ok(None)
        }
    };
    Ok(LawSpec {
        stretch: law.number("stretch")?,
        shear: law.number("shear")?,
        twist: law.number("twist")?,
        bend: law.number("bend")?,
        body_force: opt("body-force")?,
        body_couple: opt("body-couple")?,
    })
}

fn parse_end(fields: &Fields, key: &str) -> Result<EndSpec, CliError> {
    let end = fields.block(key)?;
    end.expect_keys(&["type", "translation", "rotation", "force", "couple"])?;
    let (ty, line) = end.leaf("type")?;
    match ty {
        "clamped" => Ok(EndSpec::Clamped {
            translation: end.field("translation", 3)?,
            rotation: end.field("rotation", 3)?,
        }),
        "free" => Ok(EndSpec::Free {
            force: end.field("force", 3)?,
            couple: end.field("couple", 3)?,
        }),
        _ => Err(CliError::validation(
            format!("bc.{key}.type"),
            line,
            format!("expected clamped or free, got '{ty}'"),
        )),
    }
}

/// Measures each kind can produce, for validating check declarations.
fn known_measures(payload_dim: usize, payload: &Payload) -> Vec<String> {
    match payload {
        Payload::DeformationCheck { .. } => vec!["deformation".into()],
        Payload::Compatibility { .. } => {
            let mut m = vec!["deformation".into(), "dislocation".into(), "disclination".into()];
            if payload_dim == 3 {
                m.push("incompatibility".into());
            }
            m
        }
        Payload::Equilibrium { variation, .. } => {
            let mut m = vec![
                "force".into(),
                "moment".into(),
                "euclidian-force".into(),
                "euclidian-moment".into(),
            ];
            if variation.is_some() {
                m.push("ibp-defect".into());
            }
            m
        }
        Payload::RodSolve { law, target, .. } => {
            let mut m = vec!["residual".into(), "iterations".into()];
            if target.is_some() {
                m.push("target-error".into());
            }
            if !law.is_loaded() {
                m.push("equilibrium".into());
            }
            m
        }
        Payload::Study { base, .. } => known_measures(base.grid.extents.len(), &base.payload),
    }
}

fn solves_a_rod(payload: &Payload) -> bool {
    match payload {
        Payload::RodSolve { .. } => true,
        Payload::Study { base, .. } => solves_a_rod(&base.payload),
        _ => false,
    }
}

fn parse_checks(fields: &Fields, kind: Kind, payload: &Payload, dim: usize) -> Result<Vec<Check>, CliError> {
    let checks = fields.block("checks")?;
    let measures = known_measures(dim, payload);
    let mut out = Vec::new();
    for key in checks.keys().map(str::to_string).collect::<Vec<_>>() {
        let decl = if key == "require-converged" {
            if !solves_a_rod(payload) {
                return Err(CliError::validation(
                    format!("checks.{key}"),
                    checks.leaf(&key)?.1,
                    "only rod-solve scenarios converge",
                ));
            }
            CheckDecl::Converged(checks.boolean(&key)?)
        } else if key == "max-iterations" {
            if !solves_a_rod(payload) {
                return Err(CliError::validation(
                    format!("checks.{key}"),
                    checks.leaf(&key)?.1,
                    "only rod-solve scenarios iterate",
                ));
            }
            CheckDecl::MaxIterations(checks.integer(&key)?)
        } else if let Some(measure) = key.strip_suffix("-max") {
            if !measures.iter().any(|m| m == measure) {
                return Err(CliError::validation(
                    format!("checks.{key}"),
                    checks.leaf(&key)?.1,
                    format!("no measure '{measure}' here (available: {})", measures.join(", ")),
                ));
            }
            CheckDecl::MaxNorm {
                measure: measure.to_string(),
                tol: checks.number(&key)?,
            }
        } else if let Some(measure) = key.strip_suffix("-order") {
            if kind != Kind::ConvergenceStudy {
                return Err(CliError::validation(
                    format!("checks.{key}"),
                    checks.leaf(&key)?.1,
                    "order checks need a convergence-study scenario",
                ));
            }
            if !measures.iter().any(|m| m == measure) {
                return Err(CliError::validation(
                    format!("checks.{key}"),
                    checks.leaf(&key)?.1,
                    format!("no measure '{measure}' here (available: {})", measures.join(", ")),
                ));
            }
            CheckDecl::Order {
                measure: measure.to_string(),
                expected: checks.number(&key)?,
            }
        } else {
            return Err(CliError::validation(
                format!("checks.{key}"),
                checks.leaf(&key)?.1,
                "unknown check (expected <measure>-max, <measure>-order, require-converged, or max-iterations)",
            ));
        };
        out.push(Check { name: key, decl });
    }
    if out.is_empty() {
        return Err(CliError::validation(
            "checks",
            fields.block("checks")?.tree.line,
            "at least one check must be declared",
        ));
    }
    Ok(out)
}

/// Everything a refinement study resamples must be re-evaluable at new
/// coordinates, so tabulated fields are rejected inside study bases.
pub fn reject_tabulated(scenario: &Scenario) -> Result<(), CliError> {
    let mut tabulated: Vec<&str> = Vec::new();
    let mut probe = |fd: &Option<FieldData>, name: &'static str| {
        if fd.as_ref().is_some_and(FieldData::is_tabulated) {
            tabulated.push(name);
        }
    };
    match &scenario.payload {
        Payload::DeformationCheck { chi } | Payload::Compatibility { chi } => {
            probe(&Some(chi.translation.clone()), "chi.translation");
            probe(&Some(chi.rotation.clone()), "chi.rotation");
        }
        Payload::Equilibrium {
            state,
            form,
            variation,
            ..
        } => {
            if let StateSpec::Displaced(chi) = state {
                probe(&Some(chi.translation.clone()), "state.chi.translation");
                probe(&Some(chi.rotation.clone()), "state.chi.rotation");
            }
            probe(&form.f, "form.f");
            probe(&form.m, "form.m");
            for s in &form.sigma {
                probe(s, "form.sigma");
            }
            for m in &form.mu {
                probe(m, "form.mu");
            }
            if let Some(v) = variation {
                probe(&Some(v.dx.clone()), "variation.dx");
                probe(&Some(v.de.clone()), "variation.de");
            }
        }
        Payload::RodSolve { law, target, .. } => {
            probe(&law.body_force, "law.body-force");
            probe(&law.body_couple, "law.body-couple");
            if let Some(t) = target {
                probe(&Some(t.translation.clone()), "target.translation");
                probe(&Some(t.rotation.clone()), "target.rotation");
            }
        }
        Payload::Study { .. } => {}
    }
    match tabulated.first() {
        None => Ok(()),
        Some(name) => Err(CliError::validation(
            *name,
            0,
            "refinement studies need closed-form fields; this one is tabulated",
        )),
    }
}

fn build(name: &str, tree: &Tree) -> Result<Scenario, CliError> {
    let fields = Fields::root(tree);
    let (kind_raw, kind_line) = fields.leaf("kind")?;
    let kind = match kind_raw {
        "deformation-check" => Kind::DeformationCheck,
        "compatibility" => Kind::Compatibility,
        "equilibrium" => Kind::Equilibrium,
        "rod-solve" => Kind::RodSolve,
        "convergence-study" => Kind::ConvergenceStudy,
        _ => {
            return Err(CliError::validation(
                "kind",
                kind_line,
                format!(
                    "unknown kind '{kind_raw}' (available: deformation-check, compatibility, equilibrium, rod-solve, convergence-study)"
                ),
            ))
        }
    };

    if kind == Kind::ConvergenceStudy {
        fields.expect_keys(&["kind", "levels", "order-band", "base", "checks"])?;
        let levels = fields.integer("levels")?;
        if levels < 3 {
            return Err(CliError::validation(
                "levels",
                fields.leaf("levels")?.1,
                format!("a study needs at least 3 levels, got {levels}"),
            ));
        }
        let order_band = fields.opt_number("order-band")?.unwrap_or(0.3);
        let base_fields = fields.block("base")?;
        let base = build_base(name, base_fields)?;
        reject_tabulated(&base)?;
        let payload = Payload::Study {
            levels,
            order_band,
            base: Box::new(base),
        };
        let grid = match &payload {
            Payload::Study { base, .. } => base.grid.clone(),
            _ => unreachable!(),
        };
        let checks = parse_checks(&fields, kind, &payload, grid.extents.len())?;
        return Ok(Scenario {
            name: name.to_string(),
            kind,
            grid,
            payload,
            checks,
            echo: flatten(tree),
        });
    }

    let scenario = build_kind(name, kind, &fields)?;
    let checks = parse_checks(&fields, kind, &scenario.payload, scenario.grid.extents.len())?;
    Ok(Scenario {
        checks,
        echo: flatten(tree),
        ..scenario
    })
}

/// A study base is a scenario without its own checks block; measures are
/// judged by the study's order checks instead.
fn build_base(name: &str, fields: Fields) -> Result<Scenario, CliError> {
    let (kind_raw, kind_line) = fields.leaf("kind")?;
    let kind = match kind_raw {
        "deformation-check" => Kind::DeformationCheck,
        "compatibility" => Kind::Compatibility,
        "equilibrium" => Kind::Equilibrium,
        "rod-solve" => Kind::RodSolve,
        "convergence-study" => {
            return Err(CliError::validation(
                "base.kind",
                kind_line,
                "studies do not nest",
            ))
        }
        _ => {
            return Err(CliError::validation(
                "base.kind",
                kind_line,
                format!("unknown kind '{kind_raw}'"),
            ))
        }
    };
    build_kind(name, kind, &fields)
}

fn build_kind(name: &str, kind: Kind, fields: &Fields) -> Result<Scenario, CliError> {
    let grid = parse_grid(fields)?;
    let dim = grid.extents.len();
    let payload = match kind {
        Kind::DeformationCheck => {
            fields.expect_keys(&["kind", "grid", "chi", "checks"])?;
            Payload::DeformationCheck {
                chi: parse_chi(fields)?,
            }
        }
        Kind::Compatibility => {
            fields.expect_keys(&["kind", "grid", "chi", "checks"])?;
            if dim < 2 {
                return Err(CliError::validation(
                    "grid.extents",
                    0,
                    "compatibility needs at least two parameter axes",
                ));
            }
            Payload::Compatibility {
                chi: parse_chi(fields)?,
            }
        }
        Kind::Equilibrium => {
            fields.expect_keys(&[
                "kind",
                "grid",
                "state",
                "form",
                "picture",
                "euclidian-project",
                "state-tolerance",
                "variation",
                "checks",
            ])?;
            let (pic, pic_line) = fields.leaf("picture")?;
            let picture = match pic {
                "lagrangian" => Picture::Lagrangian,
                "eulerian" => Picture::Eulerian,
                "cosserat3d" => Picture::Cosserat3d,
                _ => {
                    return Err(CliError::validation(
                        "picture",
                        pic_line,
                        format!("expected lagrangian, eulerian, or cosserat3d, got '{pic}'"),
                    ))
                }
            };
            if picture == Picture::Cosserat3d && dim != 3 {
                return Err(CliError::validation(
                    "picture",
                    pic_line,
                    "cosserat3d needs a three-axis grid",
                ));
            }
            let variation = match fields.opt_block("variation")? {
                None => None,
                Some(v) => {
                    v.expect_keys(&["dx", "de"])?;
                    Some(VariationSpec {
                        dx: v.field("dx", 3)?,
                        de: v.field("de", 9)?,
                    })
                }
            };
            let project = match fields.opt_leaf("euclidian-project")? {
                None => false,
                Some(_) => fields.boolean("euclidian-project")?,
            };
            let state_tol = fields.opt_number("state-tolerance")?.unwrap_or(1e-8);
            if state_tol <= 0.0 {
                return Err(CliError::validation(
                    "state-tolerance",
                    fields.leaf("state-tolerance")?.1,
                    "must be positive",
                ));
            }
            Payload::Equilibrium {
                state: parse_state(fields)?,
                form: parse_form(fields, dim)?,
                picture,
                project,
                state_tol,
                variation,
            }
        }
        Kind::RodSolve => {
            fields.expect_keys(&["kind", "grid", "law", "bc", "target", "checks"])?;
            if dim != 1 {
                return Err(CliError::validation(
                    "grid.extents",
                    0,
                    "rod-solve needs a one-axis grid",
                ));
            }
            let bc = fields.block("bc")?;
            bc.expect_keys(&["start", "end"])?;
            let target = match fields.opt_block("target")? {
                None => None,
                Some(t) => {
                    t.expect_keys(&["translation", "rotation"])?;
                    Some(TargetSpec {
                        translation: t.field("translation", 3)?,
                        rotation: t.field("rotation", 3)?,
                    })
                }
            };
            Payload::RodSolve {
                law: parse_law(fields)?,
                start: parse_end(&bc, "start")?,
                end: parse_end(&bc, "end")?,
                target,
            }
        }
        Kind::ConvergenceStudy => unreachable!("handled by build"),
    };
    Ok(Scenario {
        name: name.to_string(),
        kind,
        grid,
        payload,
        checks: Vec::new(),
        echo: Vec::new(),
    })
}

pub fn parse_scenario(name: &str, src: &str) -> Result<Scenario, CliError> {
    let tree = parse_tree(src)?;
    build(name, &tree)
}
