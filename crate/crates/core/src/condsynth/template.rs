use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::lang::{parse_expr, Piece};
use super::CondError;
use crate::constraints::TypeName;
use crate::models::Context;

/// Skeleton element: literal text or the placeholder `V{n}` (1-based).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Slot {
    Text(String),
    Hole(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    pub id: usize,
    pub skeleton: Vec<Slot>,
    pub arity: usize,
    pub placeholder_types: Vec<TypeName>,
    pub result_type: TypeName,
    pub count: usize,
}

/// Identity of a template: skeleton, placeholder types and result type.
pub type TemplateKey = (Vec<Slot>, Vec<TypeName>, TypeName);

impl Template {
    pub fn key(&self) -> TemplateKey {
        (
            self.skeleton.clone(),
            self.placeholder_types.clone(),
            self.result_type.clone(),
        )
    }

    pub fn instantiate(&self, vars: &[&str]) -> String {
        self.skeleton
            .iter()
            .map(|s| match s {
                Slot::Text(t) => t.as_str(),
                Slot::Hole(i) => vars[i - 1],
            })
            .collect()
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.skeleton {
            match s {
                Slot::Text(t) => f.write_str(t)?,
                Slot::Hole(i) => write!(f, "V{i}")?,
            }
        }
        Ok(())
    }
}

/// An atomic condition cut into its template key and the variables that
/// fill the placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Abstracted {
    pub canonical: String,
    pub key: TemplateKey,
    pub variables: Vec<String>,
}

pub fn abstract_condition(ctx: &Context, src: &str) -> Result<Abstracted, CondError> {
    let expr = parse_expr(src).map_err(|e| CondError::Parse {
        text: src.to_string(),
        error: e,
    })?;
    if expr.has_logic() {
        return Err(CondError::NotAtomic(src.to_string()));
    }
    let mut skeleton = Vec::new();
    let mut types = Vec::new();
    let mut variables = Vec::new();
    for p in expr.pieces() {
        match p {
            Piece::Text(t) => skeleton.push(Slot::Text(t)),
            Piece::Var(v) => {
                let info = ctx
                    .variable(&v)
                    .ok_or_else(|| CondError::UndeclaredVariable(v.clone()))?;
                types.push(info.type_name.clone());
                variables.push(v);
                skeleton.push(Slot::Hole(variables.len()));
            }
        }
    }
    Ok(Abstracted {
        canonical: expr.to_string(),
        key: (skeleton, types, ctx.result_type.clone()),
        variables,
    })
}

/// Abstracts every condition and merges identical templates, numbering
/// them by first appearance.
pub fn mine_templates<'a>(
    corpus: impl IntoIterator<Item = (&'a Context, &'a str)>,
) -> Result<Vec<Template>, CondError> {
    let mut out: Vec<Template> = Vec::new();
    let mut index: HashMap<TemplateKey, usize> = HashMap::new();
    for (ctx, src) in corpus {
        let a = abstract_condition(ctx, src)?;
        match index.get(&a.key) {
            Some(&i) => out[i].count += 1,
            None => {
                let (skeleton, placeholder_types, result_type) = a.key.clone();
                index.insert(a.key, out.len());
                out.push(Template {
                    id: out.len(),
                    arity: placeholder_types.len(),
                    skeleton,
                    placeholder_types,
                    result_type,
                    count: 1,
                });
            }
        }
    }
    Ok(out)
}

pub fn find_template<'t>(templates: &'t [Template], key: &TemplateKey) -> Option<&'t Template> {
    templates.iter().find(|t| {
        t.skeleton == key.0 && t.placeholder_types == key.1 && t.result_type == key.2
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::VariableInfo;

    fn ctx() -> Context {
        Context::simple(
            vec![
                VariableInfo::new("hours", "Int"),
                VariableInfo::new("x", "int"),
                VariableInfo::new("y", "int"),
                VariableInfo::new("c", "Object[]"),
                VariableInfo::new("d", "int"),
            ],
            "Boolean",
        )
    }

    #[test]
    fn mining() {
        let c = ctx();
        let t = mine_templates([(&c, "hours > 12")]).unwrap();
        assert_eq!(t[0].to_string(), "V1 > 12");
        assert_eq!(t[0].arity, 1);
        assert_eq!(t[0].placeholder_types, [TypeName::new("Int")]);

        let t = mine_templates([(&c, "c[d] == null")]).unwrap();
        assert_eq!(t[0].to_string(), "V1[V2] == null");
        assert_eq!(t[0].arity, 2);

        let t = mine_templates([(&c, "x > 0"), (&c, "y>0"), (&c, "x > 1")]).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!((t[0].count, t[1].count), (2, 1));
        assert_eq!(t[1].id, 1);

        let t = mine_templates([(&c, "true")]).unwrap();
        assert_eq!(t[0].arity, 0);
    }

    #[test]
    fn mining_errors() {
        let c = ctx();
        assert_eq!(
            mine_templates([(&c, "z > 0")]),
            Err(CondError::UndeclaredVariable("z".into()))
        );
        assert!(matches!(mine_templates([(&c, "x > 0 && y > 0")]), Err(CondError::NotAtomic(_))));
    }

    #[test]
    fn instantiate_round_trip() {
        let c = ctx();
        let a = abstract_condition(&c, "c[ d ]==null").unwrap();
        let t = &mine_templates([(&c, "c[d] == null")]).unwrap()[0];
        let vars: Vec<&str> = a.variables.iter().map(String::as_str).collect();
        assert_eq!(t.instantiate(&vars), a.canonical);
    }
}
