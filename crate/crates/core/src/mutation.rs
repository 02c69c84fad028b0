//! First-order mutation operators and second-order composition.
//!
//! Operators:
//! - `AOR` swaps an arithmetic operator within `+ - * / %`
//! - `ROR` swaps a relational operator within `< <= > >= == !=`
//! - `LCR` swaps `&&` and `||`
//! - `CRP` replaces a literal `c` with each of `c+1, c-1, 0, 1, -c` (deduplicated, never `c`)
//! - `EXR` replaces a whole expression slot (right-hand side, condition,
//!   returned value, print/call argument) with the literal `0` or `1`

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::fnv;
use crate::minilang::{
    parse_scalar, print_literal, BinOp, ElementId, Expr, Fixed, OpClass, Program, Value,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MutationError {
    #[error("cannot compose two mutations of the same element {0}")]
    SameElement(ElementId),
    #[error("only first-order mutants can be composed")]
    NotFirstOrder,
    #[error("a mutant needs at least one and at most two instances, got {0}")]
    BadOrder(usize),
    #[error("site {site} of element {element} does not match a {operator} mutation")]
    StaleSite {
        element: ElementId,
        site: SitePath,
        operator: MutationOperator,
    },
    #[error("malformed mutant catalog line {line}: {message}")]
    Catalog { line: usize, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MutationOperator {
    #[serde(rename = "AOR")]
    Aor,
    #[serde(rename = "ROR")]
    Ror,
    #[serde(rename = "LCR")]
    Lcr,
    #[serde(rename = "CRP")]
    Crp,
    #[serde(rename = "EXR")]
    Exr,
}

impl MutationOperator {
    pub fn name(self) -> &'static str {
        match self {
            MutationOperator::Aor => "AOR",
            MutationOperator::Ror => "ROR",
            MutationOperator::Lcr => "LCR",
            MutationOperator::Crp => "CRP",
            MutationOperator::Exr => "EXR",
        }
    }
}

impl fmt::Display for MutationOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Path to a sub-expression: the statement's expression slot, then child
/// indices (binary: 0 = left, 1 = right; call: argument index).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SitePath(pub Vec<u16>);

impl fmt::Display for SitePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u16::to_string).collect();
        f.write_str(&parts.join("."))
    }
}

impl FromStr for SitePath {
    type Err = std::num::ParseIntError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split('.')
            .map(str::parse)
            .collect::<Result<Vec<_>, _>>()
            .map(SitePath)
    }
}

impl Serialize for SitePath {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SitePath {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// What gets written at the site: an operator token or a literal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Replacement {
    Operator(BinOp),
    Literal(Value),
}

impl fmt::Display for Replacement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Replacement::Operator(op) => f.write_str(op.symbol()),
            Replacement::Literal(v) => f.write_str(&print_literal(*v)),
        }
    }
}

impl FromStr for Replacement {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(op) = BinOp::from_symbol(s) {
            return Ok(Replacement::Operator(op));
        }
        parse_scalar(s)
            .map(Replacement::Literal)
            .ok_or_else(|| format!("bad replacement token `{s}`"))
    }
}

impl Serialize for Replacement {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Replacement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationInstance {
    pub element: ElementId,
    pub operator: MutationOperator,
    pub site: SitePath,
    pub replacement: Replacement,
}

impl MutationInstance {
    fn fingerprint(&self) -> u64 {
        let text = format!(
            "{}|{}|{}|{}",
            self.element.index(),
            self.operator,
            self.site,
            self.replacement
        );
        fnv::fnv1a(text.as_bytes(), fnv::OFFSET)
    }
}

impl fmt::Display for MutationInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}@{}->{}",
            self.element, self.operator, self.site, self.replacement
        )
    }
}

/// Order-insensitive identity of a mutant's instance set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MutantId(pub u64);

impl fmt::Display for MutantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl Serialize for MutantId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MutantId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        u64::from_str_radix(&s, 16)
            .map(MutantId)
            .map_err(serde::de::Error::custom)
    }
}

/// A first-order (one instance) or second-order (two instances at distinct
/// elements) mutant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MutantRecord", into = "MutantRecord")]
pub struct Mutant {
    instances: Vec<MutationInstance>,
    id: MutantId,
}

#[derive(Serialize, Deserialize)]
struct MutantRecord {
    id: MutantId,
    order: usize,
    instances: Vec<MutationInstance>,
}

impl From<Mutant> for MutantRecord {
    fn from(m: Mutant) -> Self {
        MutantRecord {
            id: m.id,
            order: m.order(),
            instances: m.instances,
        }
    }
}

impl TryFrom<MutantRecord> for Mutant {
    type Error = String;
    fn try_from(r: MutantRecord) -> Result<Self, Self::Error> {
        if r.order != r.instances.len() {
            return Err(format!(
                "order {} does not match {} instances",
                r.order,
                r.instances.len()
            ));
        }
        let m = Mutant::new(r.instances).map_err(|e| e.to_string())?;
        if m.id != r.id {
            return Err(format!(
                "id {} does not match instances (expected {})",
                r.id, m.id
            ));
        }
        Ok(m)
    }
}

impl Mutant {
    pub fn new(instances: Vec<MutationInstance>) -> Result<Mutant, MutationError> {
        match instances.len() {
            1 => {}
            2 if instances[0].element == instances[1].element => {
                return Err(MutationError::SameElement(instances[0].element));
            }
            2 => {}
            n => return Err(MutationError::BadOrder(n)),
        }
        let mut prints: Vec<u64> = instances
            .iter()
            .map(MutationInstance::fingerprint)
            .collect();
        prints.sort_unstable();
        let mut h = fnv::OFFSET;
        for p in prints {
            h = fnv::fnv1a(&p.to_le_bytes(), h);
        }
        Ok(Mutant {
            instances,
            id: MutantId(h),
        })
    }

    pub fn first_order(instance: MutationInstance) -> Mutant {
        Mutant::new(vec![instance]).expect("single instance is always valid")
    }

    pub fn id(&self) -> MutantId {
        self.id
    }

    pub fn order(&self) -> usize {
        self.instances.len()
    }

    pub fn instances(&self) -> &[MutationInstance] {
        &self.instances
    }

    pub fn elements(&self) -> Vec<ElementId> {
        self.instances.iter().map(|i| i.element).collect()
    }

    /// The two constituent first-order mutants of a second-order mutant.
    pub fn constituents(&self) -> Option<(Mutant, Mutant)> {
        match self.instances.as_slice() {
            [a, b] => Some((
                Mutant::first_order(a.clone()),
                Mutant::first_order(b.clone()),
            )),
            _ => None,
        }
    }
}

impl fmt::Display for Mutant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.instances.iter().map(|i| i.to_string()).collect();
        write!(f, "{} [{}]", self.id, parts.join(" + "))
    }
}

/// All first-order mutations applicable to element `e`, in a fixed order:
/// operator and literal sites in pre-order per slot, then `EXR` per slot.
/// Empty when `e` is out of range.
pub fn enumerate_fom_sites(p: &Program, e: ElementId) -> Vec<MutationInstance> {
    let Some(st) = p.statement(e) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let slots = st.stmt.slots();
    for (slot, expr) in slots.iter().enumerate() {
        let mut path = vec![slot as u16];
        collect_sites(e, expr, &mut path, &mut out);
    }
    for (slot, expr) in slots.iter().enumerate() {
        for lit in [Value::Int(0), Value::Int(1)] {
            if matches!(expr, Expr::Lit(v) if *v == lit) {
                continue;
            }
            out.push(MutationInstance {
                element: e,
                operator: MutationOperator::Exr,
                site: SitePath(vec![slot as u16]),
                replacement: Replacement::Literal(lit),
            });
        }
    }
    out
}

/// Every first-order mutation of every element, in element order.
pub fn enumerate_all_sites(p: &Program) -> Vec<MutationInstance> {
    (0..p.element_count())
        .flat_map(|i| enumerate_fom_sites(p, ElementId(i)))
        .collect()
}

fn collect_sites(e: ElementId, expr: &Expr, path: &mut Vec<u16>, out: &mut Vec<MutationInstance>) {
    match expr {
        Expr::Binary(op, ..) => {
            let (operator, family): (_, &[BinOp]) = match op.class() {
                OpClass::Arithmetic => (MutationOperator::Aor, &BinOp::ARITHMETIC),
                OpClass::Relational => (MutationOperator::Ror, &BinOp::RELATIONAL),
                OpClass::Logical => (MutationOperator::Lcr, &BinOp::LOGICAL),
            };
            for alt in family.iter().filter(|alt| *alt != op) {
                out.push(MutationInstance {
                    element: e,
                    operator,
                    site: SitePath(path.clone()),
                    replacement: Replacement::Operator(*alt),
                });
            }
        }
        Expr::Lit(v) => {
            for alt in constant_replacements(*v) {
                out.push(MutationInstance {
                    element: e,
                    operator: MutationOperator::Crp,
                    site: SitePath(path.clone()),
                    replacement: Replacement::Literal(alt),
                });
            }
        }
        _ => {}
    }
    for (i, child) in expr.children().into_iter().enumerate() {
        path.push(i as u16);
        collect_sites(e, child, path, out);
        path.pop();
    }
}

/// `{c+1, c-1, 0, 1, -c}` minus `c`, deduplicated by numeric value, kept in
/// that order. Values that would overflow are skipped.
fn constant_replacements(c: Value) -> Vec<Value> {
    let candidates: Vec<Option<Value>> = match c {
        Value::Int(v) => vec![
            v.checked_add(1).map(Value::Int),
            v.checked_sub(1).map(Value::Int),
            Some(Value::Int(0)),
            Some(Value::Int(1)),
            v.checked_neg().map(Value::Int),
        ],
        Value::Fixed(f) => {
            let one = Fixed::ONE.raw();
            vec![
                f.raw().checked_add(one).map(|r| Value::Fixed(Fixed(r))),
                f.raw().checked_sub(one).map(|r| Value::Fixed(Fixed(r))),
                Some(Value::Fixed(Fixed::ZERO)),
                Some(Value::Fixed(Fixed::ONE)),
                f.raw().checked_neg().map(|r| Value::Fixed(Fixed(r))),
            ]
        }
        Value::Unit => Vec::new(),
    };
    let mut out: Vec<Value> = Vec::new();
    for v in candidates.into_iter().flatten() {
        if v != c && !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// Samples `count` first-order mutants of `e` uniformly with replacement.
pub fn generate_foms<R: Rng + ?Sized>(
    p: &Program,
    e: ElementId,
    count: usize,
    rng: &mut R,
) -> Vec<Mutant> {
    let sites = enumerate_fom_sites(p, e);
    sample_foms(&sites, count, rng)
}

/// Samples `count` first-order mutants uniformly with replacement from `sites`.
pub fn sample_foms<R: Rng + ?Sized>(
    sites: &[MutationInstance],
    count: usize,
    rng: &mut R,
) -> Vec<Mutant> {
    if sites.is_empty() {
        return Vec::new();
    }
    (0..count)
        .map(|_| {
            let i = rng.gen_range(0..sites.len() as u64) as usize;
            Mutant::first_order(sites[i].clone())
        })
        .collect()
}

/// Combines two first-order mutants at distinct elements.
pub fn compose_som(f1: &Mutant, f2: &Mutant) -> Result<Mutant, MutationError> {
    if f1.order() != 1 || f2.order() != 1 {
        return Err(MutationError::NotFirstOrder);
    }
    Mutant::new(vec![f1.instances[0].clone(), f2.instances[0].clone()])
}

/// Returns a copy of `p` with every instance of `m` applied.
pub fn apply(p: &Program, m: &Mutant) -> Result<Program, MutationError> {
    let mut out = p.clone();
    for inst in m.instances() {
        apply_instance(&mut out, inst)?;
    }
    Ok(out)
}

fn apply_instance(p: &mut Program, inst: &MutationInstance) -> Result<(), MutationError> {
    let stale = || MutationError::StaleSite {
        element: inst.element,
        site: inst.site.clone(),
        operator: inst.operator,
    };
    let (slot, rest) = inst.site.0.split_first().ok_or_else(stale)?;
    let st = p.statement_mut(inst.element).ok_or_else(stale)?;
    let mut node = st.stmt.slot_mut(*slot as usize).ok_or_else(stale)?;
    for idx in rest {
        node = node.child_mut(*idx as usize).ok_or_else(stale)?;
    }
    match (inst.operator, inst.replacement, &mut *node) {
        (MutationOperator::Aor, Replacement::Operator(new), Expr::Binary(op, ..))
            if op.class() == OpClass::Arithmetic
                && new.class() == OpClass::Arithmetic
                && *op != new =>
        {
            *op = new
        }
        (MutationOperator::Ror, Replacement::Operator(new), Expr::Binary(op, ..))
            if op.class() == OpClass::Relational
                && new.class() == OpClass::Relational
                && *op != new =>
        {
            *op = new
        }
        (MutationOperator::Lcr, Replacement::Operator(new), Expr::Binary(op, ..))
            if op.class() == OpClass::Logical && new.class() == OpClass::Logical && *op != new =>
        {
            *op = new
        }
        (MutationOperator::Crp, Replacement::Literal(new), Expr::Lit(old)) if *old != new => {
            *old = new
        }
        (MutationOperator::Exr, Replacement::Literal(new), expr) if rest.is_empty() => {
            if matches!(expr, Expr::Lit(old) if *old == new) {
                return Err(stale());
            }
            *expr = Expr::Lit(new)
        }
        _ => return Err(stale()),
    }
    Ok(())
}

/// Serializes mutants as JSON lines.
pub fn write_catalog(mutants: &[Mutant]) -> String {
    let mut out = String::new();
    for m in mutants {
        out.push_str(&serde_json::to_string(m).expect("mutants serialize"));
        out.push('\n');
    }
    out
}

pub fn read_catalog(text: &str) -> Result<Vec<Mutant>, MutationError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| MutationError::Catalog {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::{enumerate_elements, parse, print_program};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ALG1: &str = "func main(b) {\n  a = 1;\n  a = a + 1;\n  if (b % 2 == 0) {\n    a = a * 2;\n  }\n  c = 100;\n  return a;\n}\n";

    fn count_by_op(sites: &[MutationInstance], op: MutationOperator) -> usize {
        sites.iter().filter(|s| s.operator == op).count()
    }

    #[test]
    fn increment_statement_has_nine_sites() {
        let p = parse(ALG1).unwrap();
        let sites = enumerate_fom_sites(&p, ElementId(1));
        assert_eq!(count_by_op(&sites, MutationOperator::Aor), 4);
        assert_eq!(count_by_op(&sites, MutationOperator::Crp), 3);
        assert_eq!(count_by_op(&sites, MutationOperator::Exr), 2);
        assert_eq!(sites.len(), 9);
        let crp: Vec<String> = sites
            .iter()
            .filter(|s| s.operator == MutationOperator::Crp)
            .map(|s| s.replacement.to_string())
            .collect();
        assert_eq!(crp, vec!["2", "0", "-1"]);
    }

    #[test]
    fn bare_return_has_only_exr() {
        let p = parse("func main(fee) { return fee; }").unwrap();
        let sites = enumerate_fom_sites(&p, ElementId(0));
        assert_eq!(sites.len(), 2);
        assert!(sites.iter().all(|s| s.operator == MutationOperator::Exr));
    }

    #[test]
    fn parity_condition_sites() {
        let p = parse(ALG1).unwrap();
        let sites = enumerate_fom_sites(&p, ElementId(2));
        assert_eq!(count_by_op(&sites, MutationOperator::Ror), 5);
        assert_eq!(count_by_op(&sites, MutationOperator::Aor), 4);
        // `2` -> {3, 1, 0, -2}; `0` -> {1, -1}
        assert_eq!(count_by_op(&sites, MutationOperator::Crp), 6);
        assert_eq!(count_by_op(&sites, MutationOperator::Exr), 2);
        assert_eq!(sites.len(), 17);
    }

    #[test]
    fn exr_skips_textual_noop() {
        let p = parse("func main() { a = 1; }").unwrap();
        let exr: Vec<_> = enumerate_fom_sites(&p, ElementId(0))
            .into_iter()
            .filter(|s| s.operator == MutationOperator::Exr)
            .collect();
        assert_eq!(exr.len(), 1);
        assert_eq!(exr[0].replacement, Replacement::Literal(Value::Int(0)));
    }

    #[test]
    fn decimal_constants() {
        assert_eq!(
            constant_replacements(Value::Fixed(Fixed(9_000))),
            vec![
                Value::Fixed(Fixed(19_000)),
                Value::Fixed(Fixed(-1_000)),
                Value::Fixed(Fixed(0)),
                Value::Fixed(Fixed(10_000)),
                Value::Fixed(Fixed(-9_000))
            ]
        );
        assert_eq!(
            constant_replacements(Value::Int(0)),
            vec![Value::Int(1), Value::Int(-1)]
        );
    }

    #[test]
    fn motivating_exr_mutation() {
        let p = parse(ALG1).unwrap();
        let inst = MutationInstance {
            element: ElementId(1),
            operator: MutationOperator::Exr,
            site: SitePath(vec![0]),
            replacement: Replacement::Literal(Value::Int(2)),
        };
        let m = Mutant::first_order(inst);
        let q = apply(&p, &m).unwrap();
        assert!(print_program(&q).contains("a = 2;"));
        assert_eq!(apply(&p, &m).unwrap(), q);
    }

    #[test]
    fn stale_sites_rejected() {
        let p = parse(ALG1).unwrap();
        let bad = |element, operator, site: Vec<u16>, replacement| {
            let m = Mutant::first_order(MutationInstance {
                element,
                operator,
                site: SitePath(site),
                replacement,
            });
            apply(&p, &m)
        };
        let plus = Replacement::Operator(BinOp::Sub);
        assert!(bad(ElementId(0), MutationOperator::Aor, vec![0], plus).is_err());
        assert!(bad(ElementId(1), MutationOperator::Aor, vec![0, 5], plus).is_err());
        assert!(bad(
            ElementId(1),
            MutationOperator::Ror,
            vec![0],
            Replacement::Operator(BinOp::Lt)
        )
        .is_err());
        assert!(bad(
            ElementId(9),
            MutationOperator::Exr,
            vec![0],
            Replacement::Literal(Value::Int(0))
        )
        .is_err());
        assert!(bad(
            ElementId(0),
            MutationOperator::Crp,
            vec![0],
            Replacement::Literal(Value::Int(1))
        )
        .is_err());
        assert!(bad(
            ElementId(1),
            MutationOperator::Exr,
            vec![0, 0],
            Replacement::Literal(Value::Int(0))
        )
        .is_err());
    }

    #[test]
    fn composition() {
        let p = parse(ALG1).unwrap();
        let f1 = Mutant::first_order(enumerate_fom_sites(&p, ElementId(1))[0].clone());
        let f2 = Mutant::first_order(enumerate_fom_sites(&p, ElementId(2))[0].clone());
        let h = compose_som(&f1, &f2).unwrap();
        assert_eq!(h.order(), 2);
        assert_eq!(h.id(), compose_som(&f2, &f1).unwrap().id());
        assert_ne!(h.id(), f1.id());
        assert_eq!(h.constituents(), Some((f1.clone(), f2.clone())));
        let f3 = Mutant::first_order(enumerate_fom_sites(&p, ElementId(1))[1].clone());
        assert_eq!(
            compose_som(&f1, &f3),
            Err(MutationError::SameElement(ElementId(1)))
        );
        assert_eq!(compose_som(&h, &f1), Err(MutationError::NotFirstOrder));
        // applying a SOM equals applying its instances one after the other
        let seq = apply(&apply(&p, &f1).unwrap(), &f2).unwrap();
        assert_eq!(apply(&p, &h).unwrap(), seq);
    }

    #[test]
    fn sampling() {
        let p = parse(ALG1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let foms = generate_foms(&p, ElementId(1), 100, &mut rng);
        assert_eq!(foms.len(), 100);
        let distinct: std::collections::BTreeSet<_> = foms.iter().map(Mutant::id).collect();
        assert!(distinct.len() > 5 && distinct.len() <= 9);
        let again = generate_foms(&p, ElementId(1), 100, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(foms, again);
        assert!(sample_foms(&[], 5, &mut rng).is_empty());
    }

    #[test]
    fn catalog_roundtrip() {
        let p = parse(ALG1).unwrap();
        let sites = enumerate_all_sites(&p);
        let f1 = Mutant::first_order(sites[0].clone());
        let h = compose_som(&f1, &Mutant::first_order(sites[sites.len() - 1].clone())).unwrap();
        let text = write_catalog(&[f1.clone(), h.clone()]);
        assert!(text
            .lines()
            .next()
            .unwrap()
            .contains("\"operator\":\"CRP\""));
        assert_eq!(read_catalog(&text).unwrap(), vec![f1, h]);
        assert!(read_catalog("{\"id\":\"00\",\"order\":1,\"instances\":[]}").is_err());
    }

    const BIGGER: &str = "func f(x, y) { if (x > 1 && y <= 2.5 || x == -3) { return x * 2 - y / 4; } return x % 3; }\nfunc main(a, b) { s = f(a, b) + 0.75; while (s < 10) { s = s + 1; } print(s, a - 1); f(1, 2); return s; }";

    proptest! {
        #[test]
        fn every_site_applies_and_changes_program(idx in 0usize..200) {
            let p = parse(BIGGER).unwrap();
            let sites = enumerate_all_sites(&p);
            let inst = &sites[idx % sites.len()];
            let m = Mutant::first_order(inst.clone());
            let q = apply(&p, &m).unwrap();
            prop_assert_ne!(&q, &p);
            let reparsed = parse(&print_program(&q)).unwrap();
            prop_assert_eq!(&reparsed, &q);
            prop_assert_eq!(enumerate_elements(&q), enumerate_elements(&p));
        }

        #[test]
        fn composition_is_order_insensitive(a in 0usize..200, b in 0usize..200) {
            let p = parse(BIGGER).unwrap();
            let sites = enumerate_all_sites(&p);
            let (x, y) = (&sites[a % sites.len()], &sites[b % sites.len()]);
            prop_assume!(x.element != y.element);
            let (fx, fy) = (Mutant::first_order(x.clone()), Mutant::first_order(y.clone()));
            let h1 = compose_som(&fx, &fy).unwrap();
            let h2 = compose_som(&fy, &fx).unwrap();
            prop_assert_eq!(h1.id(), h2.id());
            prop_assert_eq!(apply(&p, &h1).unwrap(), apply(&p, &h2).unwrap());
        }
    }
}
