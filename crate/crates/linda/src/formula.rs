//! Model formulas: `u + c1 + c2`, with an optional random intercept written
//! as `| g` or `(1 | g)`. The first term is the covariate of interest.

use linda_core::DesignSpec;

use crate::error::{Error, Result};

pub fn parse_formula(formula: &str) -> Result<DesignSpec> {
    let err = |message: &str| Error::Formula { formula: formula.to_string(), message: message.to_string() };
    let text = formula.trim();
    let text = text.strip_prefix('~').unwrap_or(text);

    let mut terms = Vec::new();
    let mut group = None;
    let mut set_group = |g: &str| -> Result<()> {
        let g = g.trim();
        if !is_name(g) {
            return Err(err("grouping factor must be a single variable name"));
        }
        if group.replace(g.to_string()).is_some() {
            return Err(err("at most one random intercept is supported"));
        }
        Ok(())
    };

    let (fixed, bar) = match text.find('|') {
        Some(i) if !text[..i].contains('(') => (&text[..i], Some(&text[i + 1..])),
        _ => (text, None),
    };
    if let Some(g) = bar {
        set_group(g)?;
    }
    for raw in fixed.split('+') {
        let term = raw.trim();
        if let Some(inner) = term.strip_prefix('(').and_then(|t| t.strip_suffix(')')) {
            match inner.split_once('|') {
                Some((one, g)) if one.trim() == "1" => set_group(g)?,
                _ => return Err(err("only random intercepts `(1 | g)` are supported")),
            }
        } else if term.is_empty() {
            return Err(err("empty term"));
        } else if !is_name(term) {
            return Err(err(&format!("unsupported term `{term}`")));
        } else if terms.iter().any(|t| t == term) {
            return Err(err(&format!("term `{term}` appears twice")));
        } else {
            terms.push(term.to_string());
        }
    }
    if terms.is_empty() {
        return Err(err("no covariate of interest"));
    }
    if let Some(g) = &group {
        if terms.contains(g) {
            return Err(err("grouping factor also appears as a fixed effect"));
        }
    }
    let mut spec = DesignSpec::new(terms.remove(0));
    for t in terms {
        spec = spec.adjust(t);
    }
    if let Some(g) = group {
        spec = spec.group(g);
    }
    Ok(spec)
}

fn is_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || matches!(c, '_' | '.' | '-'))
}
