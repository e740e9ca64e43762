//! Text specifications for fields and vectors.

use std::path::Path;

use qcdl_core::gallery::QConvention;
use qcdl_core::{Domain, Error, GridField, QField, Result};

/// Comma-separated reals. The empty string is the empty list.
pub fn parse_vec(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse(format!("bad number '{t}'")))
        })
        .collect()
}

/// Either an explicit field or a dilatation convention of the mapping.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    Constant(f64),
    Radial { exponent: f64, center: Option<Vec<f64>> },
    Affine { slope: f64, offset: f64 },
    Grid(String),
    Convention(QConvention),
}

impl FieldSpec {
    /// `const:1`, `radial:s=0.5` (optionally `radial:s=0.5,c=0.1/0.2`),
    /// `affine:a=1,b=0`, `grid:<path>`, or one of `inner`, `outer`,
    /// `outer_power`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if let Some(c) = QConvention::parse(text) {
            return Ok(FieldSpec::Convention(c));
        }
        let (name, params) = text
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("bad field spec '{text}'")))?;
        let num = |key: &str, v: &str| -> Result<f64> {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Parse(format!("bad value '{v}' for '{key}' in field spec '{text}'")))
        };
        match name.trim().to_ascii_lowercase().as_str() {
            "const" | "constant" => Ok(FieldSpec::Constant(num("const", params)?)),
            "radial" => {
                let (mut exponent, mut center) = (None, None);
                for kv in params.split(',') {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| Error::Parse(format!("bad token '{kv}' in field spec '{text}'")))?;
                    match k.trim() {
                        "s" => exponent = Some(num("s", v)?),
                        "c" => {
                            center = Some(
                                v.split('/')
                                    .map(|t| num("c", t))
                                    .collect::<Result<Vec<_>>>()?,
                            )
                        }
                        other => {
                            return Err(Error::Parse(format!("unknown key '{other}' in field spec '{text}'")))
                        }
                    }
                }
                let exponent =
                    exponent.ok_or_else(|| Error::Parse(format!("field spec '{text}' needs s=")))?;
                Ok(FieldSpec::Radial { exponent, center })
            }
            "affine" => {
                let (mut slope, mut offset) = (1.0, 0.0);
                for kv in params.split(',').filter(|t| !t.trim().is_empty()) {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| Error::Parse(format!("bad token '{kv}' in field spec '{text}'")))?;
                    match k.trim() {
                        "a" => slope = num("a", v)?,
                        "b" => offset = num("b", v)?,
                        other => {
                            return Err(Error::Parse(format!("unknown key '{other}' in field spec '{text}'")))
                        }
                    }
                }
                Ok(FieldSpec::Affine { slope, offset })
            }
            "grid" => {
                if params.trim().is_empty() {
                    return Err(Error::Parse("grid field spec needs a path".into()));
                }
                Ok(FieldSpec::Grid(params.trim().to_string()))
            }
            other => Err(Error::Parse(format!("unknown field kind '{other}'"))),
        }
    }

    /// Builds the field on `domain`; grid fields keep their own box.
    /// Conventions need a mapping and are resolved by the caller.
    pub fn build(&self, domain: Domain) -> Result<QField> {
        let n = domain.dim();
        match self {
            FieldSpec::Constant(c) => QField::constant(*c, domain),
            FieldSpec::Radial { exponent, center } => {
                let center = center.clone().unwrap_or_else(|| vec![0.0; n]);
                QField::radial_power(center, *exponent, domain)
            }
            FieldSpec::Affine { slope, offset } => QField::coordinate_affine(*slope, *offset, domain),
            FieldSpec::Grid(path) => {
                let field = QField::grid(GridField::load(Path::new(path))?);
                if field.dim() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: field.dim(),
                    });
                }
                Ok(field)
            }
            FieldSpec::Convention(c) => Err(Error::InvalidArgument(format!(
                "field convention '{}' needs a mapping",
                c.as_str()
            ))),
        }
    }
}
