//! Textual forms used on the command line and in HTTP requests.
//!
//! ```text
//! parameter   Child|Parent1=v1,Parent2=v2:value     (roots: Child:value)
//! event       Var=value
//! evidence    Var=value,Var=value,...               (may be empty)
//! constraint  P(Y=y) - P(Z=z) >= eps
//!             P(Y=y) / P(Z=z) >= eps
//!             P(Y=y) >= eps                         (or <= for each form)
//! ```
//!
//! Value labels are matched case-sensitively.

use crate::error::{Error, Result};
use crate::model::{BeliefNetwork, Event, Evidence, MetaParameter};
use crate::sensitivity::{Constraint, ConstraintKind, Direction};

fn syntax(what: &'static str, message: impl Into<String>) -> Error {
    Error::Syntax {
        what,
        message: message.into(),
    }
}

fn split_assignment<'a>(what: &'static str, text: &'a str) -> Result<(&'a str, &'a str)> {
    let (name, value) = text
        .split_once('=')
        .ok_or_else(|| syntax(what, format!("expected `Var=value`, got `{text}`")))?;
    let (name, value) = (name.trim(), value.trim());
    if name.is_empty() || value.is_empty() {
        return Err(syntax(what, format!("expected `Var=value`, got `{text}`")));
    }
    Ok((name, value))
}

pub fn parse_event(net: &BeliefNetwork, text: &str) -> Result<Event> {
    let (name, value) = split_assignment("event", text)?;
    Event::from_labels(net, name, value)
}

pub fn parse_evidence(net: &BeliefNetwork, text: &str) -> Result<Evidence> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Evidence::new());
    }
    let pairs = text
        .split(',')
        .map(|item| split_assignment("evidence", item))
        .collect::<Result<Vec<_>>>()?;
    Evidence::from_labels(net, pairs)
}

pub fn parse_param(net: &BeliefNetwork, text: &str) -> Result<MetaParameter> {
    let (head, value) = text
        .trim()
        .rsplit_once(':')
        .ok_or_else(|| syntax("parameter", format!("missing `:value` in `{text}`")))?;
    let (child, parents) = match head.split_once('|') {
        Some((child, parents)) => (child.trim(), Some(parents)),
        None => (head.trim(), None),
    };
    let var = net.lookup(child)?;
    let value = net.lookup_value(var, value.trim())?;

    let declared = net.cpt(var).parents();
    let mut parent_values: Vec<Option<usize>> = vec![None; declared.len()];
    if let Some(parents) = parents {
        for item in parents.split(',') {
            let (name, label) = split_assignment("parameter", item)?;
            let parent = net.lookup(name)?;
            let slot = declared.iter().position(|&p| p == parent).ok_or_else(|| {
                syntax(
                    "parameter",
                    format!("`{name}` is not a parent of `{child}`"),
                )
            })?;
            if parent_values[slot].is_some() {
                return Err(syntax("parameter", format!("parent `{name}` given twice")));
            }
            parent_values[slot] = Some(net.lookup_value(parent, label)?);
        }
    }
    let parent_values = parent_values
        .iter()
        .zip(declared)
        .map(|(v, &p)| {
            v.ok_or_else(|| {
                syntax(
                    "parameter",
                    format!("parent `{}` of `{child}` is unassigned", net.name(p)),
                )
            })
        })
        .collect::<Result<Vec<_>>>()?;
    MetaParameter::new(net, var, &parent_values, value)
}

/// Strips `P(` ... `)` around an event.
fn parse_probability_term(net: &BeliefNetwork, term: &str) -> Result<Event> {
    let inner = term
        .trim()
        .strip_prefix("P(")
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| syntax("constraint", format!("expected `P(Var=value)`, got `{}`", term.trim())))?;
    parse_event(net, inner)
}

pub fn parse_constraint(net: &BeliefNetwork, text: &str) -> Result<Constraint> {
    let (lhs, direction, rhs) = if let Some((l, r)) = text.split_once(">=") {
        (l, Direction::AtLeast, r)
    } else if let Some((l, r)) = text.split_once("<=") {
        (l, Direction::AtMost, r)
    } else {
        return Err(syntax("constraint", "missing `>=` or `<=`"));
    };
    let epsilon: f64 = rhs
        .trim()
        .parse()
        .map_err(|_| syntax("constraint", format!("threshold `{}` is not a number", rhs.trim())))?;

    // Both operators sit between a closing and an opening parenthesis.
    let split = [(")-", ConstraintKind::Difference), (")/", ConstraintKind::Ratio)]
        .into_iter()
        .find_map(|(op, kind)| {
            let compact: String = lhs.chars().filter(|c| !c.is_whitespace()).collect();
            compact.find(op).map(|at| {
                (
                    kind,
                    compact[..=at].to_string(),
                    compact[at + 2..].to_string(),
                )
            })
        });
    let constraint = match split {
        Some((kind, y, z)) => {
            let y = parse_probability_term(net, &y)?;
            let z = parse_probability_term(net, &z)?;
            match kind {
                ConstraintKind::Difference => Constraint::difference(y, z, direction, epsilon),
                _ => Constraint::ratio(y, z, direction, epsilon),
            }
        }
        None => Constraint::value(parse_probability_term(net, lhs)?, direction, epsilon),
    };
    Ok(constraint)
}

/// Formats `x` with `digits` significant digits, dropping trailing zeros and
/// switching to exponent notation outside `[1e-4, 10^digits)`.
pub fn format_number(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (_, exp) = sci.split_once('e').expect("exponent notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let (mantissa, _) = sci.split_once('e').unwrap();
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs());
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
