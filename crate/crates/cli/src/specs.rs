//! Text forms of mesh generators and analytic fields, e.g. `disk(1, 29)` or
//! `linear(1, -2, 0.5)`.

use fieldbridge::mesh::generate::MeshSpec;
use fieldbridge::Point2;

use crate::error::CliError;

/// Splits `name(a, b, ...)` into its name and numeric arguments. A bare `name` has no
/// arguments.
pub fn parse_call(s: &str) -> Result<(String, Vec<f64>), CliError> {
    let s = s.trim();
    let bad = || CliError::Usage(format!("cannot parse `{s}`; expected name(arg, ...)"));
    let Some(open) = s.find('(') else {
        if s.is_empty() || !s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(bad());
        }
        return Ok((s.to_ascii_lowercase(), Vec::new()));
    };
    let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
    let name = s[..open].trim().to_ascii_lowercase();
    if name.is_empty() {
        return Err(bad());
    }
    let args = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(|a| a.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    Ok((name, args))
}

fn count(v: f64, what: &str) -> Result<usize, CliError> {
    if v >= 0.0 && v.fract() == 0.0 && v < 1e9 {
        Ok(v as usize)
    } else {
        Err(CliError::Usage(format!("{what} must be a non-negative integer, got {v}")))
    }
}

fn arity(name: &str, args: &[f64], n: usize) -> Result<(), CliError> {
    if args.len() == n {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{name} takes {n} arguments, got {}", args.len())))
    }
}

pub fn parse_mesh_spec(s: &str) -> Result<MeshSpec, CliError> {
    let (name, a) = parse_call(s)?;
    Ok(match name.as_str() {
        "square" => {
            arity(&name, &a, 1)?;
            MeshSpec::Square { n: count(a[0], "n")? }
        }
        "rectangle" => {
            arity(&name, &a, 4)?;
            MeshSpec::Rectangle { nx: count(a[0], "nx")?, ny: count(a[1], "ny")?, width: a[2], height: a[3] }
        }
        "disk" => {
            arity(&name, &a, 2)?;
            MeshSpec::Disk { radius: a[0], rings: count(a[1], "rings")? }
        }
        "annulus" => {
            arity(&name, &a, 3)?;
            MeshSpec::Annulus { r_in: a[0], r_out: a[1], rings: count(a[2], "rings")? }
        }
        "graded" => {
            arity(&name, &a, 4)?;
            MeshSpec::Graded {
                radius: a[0],
                rings: count(a[1], "rings")?,
                boundary_rings: count(a[2], "boundary_rings")?,
                grading: a[3],
            }
        }
        _ => return Err(CliError::Usage(format!("unknown mesh generator `{name}`"))),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticField {
    /// `sin(x) cos(y) + 2`
    SinCos2,
    Constant(f64),
    /// `a x + b y + c`
    Linear(f64, f64, f64),
}

impl AnalyticField {
    pub fn parse(s: &str) -> Result<AnalyticField, CliError> {
        let (name, a) = parse_call(s)?;
        Ok(match name.as_str() {
            "sincos2" => {
                arity(&name, &a, 0)?;
                AnalyticField::SinCos2
            }
            "constant" => {
                arity(&name, &a, 1)?;
                AnalyticField::Constant(a[0])
            }
            "linear" => {
                arity(&name, &a, 3)?;
                AnalyticField::Linear(a[0], a[1], a[2])
            }
            _ => return Err(CliError::Usage(format!("unknown analytic field `{name}`"))),
        })
    }

    pub fn eval(&self, p: Point2) -> f64 {
        match *self {
            AnalyticField::SinCos2 => p.x.sin() * p.y.cos() + 2.0,
            AnalyticField::Constant(c) => c,
            AnalyticField::Linear(a, b, c) => a * p.x + b * p.y + c,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AnalyticField::SinCos2 => "sincos2",
            AnalyticField::Constant(_) => "constant",
            AnalyticField::Linear(..) => "linear",
        }
    }
}
