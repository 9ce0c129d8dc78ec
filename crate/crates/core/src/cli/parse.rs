use crate::fusion::{FiniteGroup, FusionRing, Label, ProbMeasure};

use super::CliError;

fn input<E: std::fmt::Display>(what: &str) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Input(format!("{what}: {e}"))
}

fn read_at(s: &str) -> Result<Option<String>, CliError> {
    match s.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path)
            .map(Some)
            .map_err(input(path)),
        None => Ok(None),
    }
}

pub fn parse_group(s: &str) -> Result<FiniteGroup, CliError> {
    let s = s.trim();
    if s.starts_with('[') {
        let table: Vec<Vec<usize>> = serde_json::from_str(s).map_err(input("group table"))?;
        return Ok(FiniteGroup::from_table(table)?);
    }
    let lower = s.to_ascii_lowercase();
    if lower == "s3" {
        return Ok(FiniteGroup::symmetric3());
    }
    if let Some(n) = lower.strip_prefix('z') {
        let n: usize = n.parse().map_err(input("cyclic group order"))?;
        return Ok(FiniteGroup::cyclic(n)?);
    }
    Err(CliError::Input(format!(
        "unknown group {s:?} (expected zN, s3 or a JSON table)"
    )))
}

/// `su2:T`, `su2q:Q`, `so3:DELTA2`, `group:zN|s3|[[…]]`, a JSON descriptor,
/// or `@path` to one.
pub fn parse_ring(s: &str) -> Result<FusionRing, CliError> {
    if let Some(text) = read_at(s)? {
        return serde_json::from_str(&text).map_err(input("ring descriptor"));
    }
    let s = s.trim();
    if s.starts_with('{') {
        return serde_json::from_str(s).map_err(input("ring descriptor"));
    }
    let (kind, arg) = s
        .split_once(':')
        .ok_or_else(|| CliError::Input(format!("malformed ring descriptor {s:?}")))?;
    let num = |a: &str| -> Result<f64, CliError> { a.trim().parse().map_err(input("ring parameter")) };
    Ok(match kind.trim().to_ascii_lowercase().as_str() {
        "su2" => FusionRing::su2(num(arg)?)?,
        "su2q" => FusionRing::su2_from_q(num(arg)?)?,
        "so3" => FusionRing::so3(num(arg)?)?,
        "group" => FusionRing::group_dual(parse_group(arg)?),
        other => {
            return Err(CliError::Input(format!("unknown ring kind {other:?}")));
        }
    })
}

/// Compact `label:weight,…`, `uniform`, JSON, or `@path`; checked against
/// the ring.
pub fn parse_measure(s: &str, ring: &FusionRing) -> Result<ProbMeasure, CliError> {
    let owned = read_at(s)?;
    let s = owned.as_deref().unwrap_or(s).trim();
    let mu = if s.starts_with('{') {
        serde_json::from_str(s).map_err(input("measure"))?
    } else if s.eq_ignore_ascii_case("uniform") {
        let labels = ring.all_labels().ok_or_else(|| {
            CliError::Input("\"uniform\" needs a finite ring".into())
        })?;
        ProbMeasure::uniform(&labels)?
    } else {
        ProbMeasure::parse_compact(s)?
    };
    mu.check_ring(ring)?;
    Ok(mu)
}

/// An integer, or a JSON label such as `[1,0]` for product rings.
pub fn parse_label(s: &str) -> Result<Label, CliError> {
    serde_json::from_str(s.trim()).map_err(input("label"))
}

fn parse_range(item: &str) -> Result<Vec<Label>, CliError> {
    let (range, step) = match item.split_once(':') {
        Some((r, s)) => (r, s.trim().parse::<usize>().map_err(input("range step"))?),
        None => (item, 1),
    };
    if step == 0 {
        return Err(CliError::Input("range step must be positive".into()));
    }
    let (lo, hi, inclusive) = if let Some((a, b)) = range.split_once("..=") {
        (a, b, true)
    } else if let Some((a, b)) = range.split_once("..") {
        (a, b, false)
    } else {
        unreachable!("caller checked for ..")
    };
    let lo: u32 = lo.trim().parse().map_err(input("range start"))?;
    let hi: u32 = hi.trim().parse().map_err(input("range end"))?;
    let v: Vec<u32> = if inclusive {
        (lo..=hi).step_by(step).collect()
    } else {
        (lo..hi).step_by(step).collect()
    };
    Ok(v.into_iter().map(Label::Index).collect())
}

/// `0,1,5`, `0..=10`, `20..=80:10` (step 10), or a JSON array of labels.
pub fn parse_label_list(s: &str) -> Result<Vec<Label>, CliError> {
    let s = s.trim();
    if s.starts_with('[') {
        return serde_json::from_str(s).map_err(input("label list"));
    }
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
        if item.contains("..") {
            out.extend(parse_range(item)?);
        } else {
            out.push(parse_label(item)?);
        }
    }
    if out.is_empty() {
        return Err(CliError::Input(format!("empty label list {s:?}")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rings() {
        assert_eq!(parse_ring("su2:2.5").unwrap().su2_parameter(), Some(2.5));
        assert_eq!(parse_ring("so3:4").unwrap().so3_parameter(), Some(4.0));
        assert_eq!(parse_ring("group:z3").unwrap().group().unwrap().order(), 3);
        assert_eq!(parse_ring("group:S3").unwrap().group().unwrap().order(), 6);
        let q = parse_ring("su2q:0.5").unwrap().su2_parameter().unwrap();
        assert!((q - 2.5).abs() < 1e-15);
        assert!(parse_ring(r#"{"kind":"so3","delta2":5}"#).is_ok());
        for bad in ["su2:1.9", "su2", "foo:1", "group:q7", "{", "su2:x"] {
            assert!(matches!(parse_ring(bad), Err(CliError::Input(_))), "{bad}");
        }
    }

    #[test]
    fn measures() {
        let z3 = parse_ring("group:z3").unwrap();
        assert_eq!(parse_measure("uniform", &z3).unwrap().len(), 3);
        let su2 = parse_ring("su2:2.5").unwrap();
        assert!(parse_measure("uniform", &su2).is_err());
        assert_eq!(parse_measure("1:0.5, 2:0.5", &su2).unwrap().len(), 2);
        assert!(parse_measure(r#"{"support":[{"label":1,"weight":1.0}]}"#, &su2).is_ok());
        assert!(parse_measure("5:1.0", &z3).is_err());
        assert!(parse_measure("1:0.4", &su2).is_err());
    }

    #[test]
    fn label_lists() {
        let l = parse_label_list("0..=3,7").unwrap();
        assert_eq!(l, [0, 1, 2, 3, 7].map(Label::Index));
        assert_eq!(parse_label_list("20..=80:20").unwrap(), [20, 40, 60, 80].map(Label::Index));
        assert_eq!(parse_label_list("0..2").unwrap(), [0, 1].map(Label::Index));
        assert_eq!(
            parse_label_list("[[0,1]]").unwrap(),
            vec![Label::pair(Label::Index(0), Label::Index(1))]
        );
        assert!(parse_label_list("").is_err());
        assert!(parse_label_list("1..=3:0").is_err());
        assert!(parse_label_list("a").is_err());
    }
}
