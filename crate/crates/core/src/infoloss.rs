//! Domain-to-range ratio and brute-force infection masking over a finite domain.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use num_rational::Ratio;
use serde::Deserialize;

use crate::corpus::{load_program, read_json, CorpusError};
use crate::minilang::{Interpreter, Program, Value};
use crate::SubjectError;

/// A single-parameter function over an explicit finite domain.
#[derive(Clone, Debug)]
pub struct FiniteFunctionSpec {
    pub name: String,
    pub program: Program,
    pub domain: Vec<i64>,
    pub infected: Vec<i64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    name: String,
    source: String,
    function: String,
    domain: Vec<i64>,
    infected: Vec<i64>,
}

impl FiniteFunctionSpec {
    /// Builds a spec whose program runs `function` as its entry.
    pub fn new(name: &str, mut program: Program, function: &str, domain: Vec<i64>, infected: Vec<i64>) -> Result<Self, String> {
        let idx = program
            .functions
            .iter()
            .position(|f| &*f.name == function)
            .ok_or_else(|| format!("function `{function}` not found"))?;
        if program.functions[idx].params.len() != 1 {
            return Err(format!("function `{function}` must take exactly one parameter"));
        }
        program.entry = idx;
        if domain.is_empty() {
            return Err("domain is empty".into());
        }
        let unique: BTreeSet<i64> = domain.iter().copied().collect();
        if unique.len() != domain.len() {
            return Err("domain has duplicates".into());
        }
        if let Some(v) = infected.iter().find(|v| !unique.contains(v)) {
            return Err(format!("infected value {v} is outside the domain"));
        }
        Ok(FiniteFunctionSpec { name: name.to_string(), program, domain, infected })
    }
}

pub fn load_spec(path: &Path) -> Result<FiniteFunctionSpec, CorpusError> {
    let file: SpecFile = read_json(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let program = load_program(&dir.join(&file.source))?;
    FiniteFunctionSpec::new(&file.name, program, &file.function, file.domain, file.infected)
        .map_err(|reason| CorpusError::Invalid { version: file.name.clone(), reason })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DrrResult {
    pub domain_size: usize,
    pub range_size: usize,
    pub drr: Ratio<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Masking {
    pub masked: bool,
    pub colliding_clean_inputs: Vec<i64>,
}

/// The function's output for every domain element, in domain order.
fn evaluate(spec: &FiniteFunctionSpec, interp: &Interpreter) -> Result<Vec<(i64, Vec<Value>)>, SubjectError> {
    spec.domain
        .iter()
        .map(|&x| {
            let trace = interp.run(&spec.program, &[Value::Int(x)]);
            match trace.error() {
                Some(e) => Err(SubjectError {
                    subject: spec.name.clone(),
                    case: x.to_string(),
                    side: "spec",
                    error: e.clone(),
                }),
                None => Ok((x, trace.output)),
            }
        })
        .collect()
}

pub fn drr(spec: &FiniteFunctionSpec, interp: &Interpreter) -> Result<DrrResult, SubjectError> {
    let outputs = evaluate(spec, interp)?;
    let image: BTreeSet<&Vec<Value>> = outputs.iter().map(|(_, y)| y).collect();
    let (domain_size, range_size) = (outputs.len(), image.len());
    Ok(DrrResult { domain_size, range_size, drr: Ratio::new(domain_size as u64, range_size as u64) })
}

fn masks_in(outputs: &[(i64, Vec<Value>)], v_star: i64) -> Masking {
    let target = outputs.iter().find(|(x, _)| *x == v_star).map(|(_, y)| y);
    let colliding_clean_inputs: Vec<i64> = outputs
        .iter()
        .filter(|(x, y)| *x != v_star && Some(y) == target)
        .map(|(x, _)| *x)
        .collect();
    Masking { masked: !colliding_clean_inputs.is_empty(), colliding_clean_inputs }
}

/// Whether an infected input is indistinguishable from some clean input.
/// Every domain element other than `v_star` counts as clean.
pub fn masks(spec: &FiniteFunctionSpec, v_star: i64, interp: &Interpreter) -> Result<Masking, SubjectError> {
    Ok(masks_in(&evaluate(spec, interp)?, v_star))
}

/// Fraction of the infected values that are masked; zero when none are infected.
pub fn masking_rate(spec: &FiniteFunctionSpec, interp: &Interpreter) -> Result<Ratio<u64>, SubjectError> {
    if spec.infected.is_empty() {
        return Ok(Ratio::from_integer(0));
    }
    let outputs = evaluate(spec, interp)?;
    let masked = spec.infected.iter().filter(|&&v| masks_in(&outputs, v).masked).count();
    Ok(Ratio::new(masked as u64, spec.infected.len() as u64))
}

/// Groups domain elements by output; handy for reports and debugging.
pub fn preimages(spec: &FiniteFunctionSpec, interp: &Interpreter) -> Result<BTreeMap<Vec<Value>, Vec<i64>>, SubjectError> {
    let mut out: BTreeMap<Vec<Value>, Vec<i64>> = BTreeMap::new();
    for (x, y) in evaluate(spec, interp)? {
        out.entry(y).or_default().push(x);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::parse;
    use proptest::prelude::*;

    fn spec(body: &str, domain: Vec<i64>, infected: Vec<i64>) -> FiniteFunctionSpec {
        let program = parse(&format!("fn f(x) {{ {body} }}")).unwrap();
        FiniteFunctionSpec::new("t", program, "f", domain, infected).unwrap()
    }

    fn one_to_five() -> Vec<i64> {
        (1..=5).collect()
    }

    #[test]
    fn three_snippets() {
        let i = Interpreter::default();
        let s1 = spec("let y = x * 3; return y;", one_to_five(), vec![4]);
        let s2 = spec("let y = x % 3; return y;", one_to_five(), vec![4]);
        let s3 = spec("let y = 0; if (x >= 3) { y = 1; } else { y = 0; } return y;", one_to_five(), vec![4]);
        assert_eq!(drr(&s1, &i).unwrap().drr, Ratio::from_integer(1));
        assert_eq!(drr(&s2, &i).unwrap().drr, Ratio::new(5, 3));
        assert_eq!(drr(&s3, &i).unwrap().drr, Ratio::new(5, 2));
        assert_eq!(masks(&s1, 4, &i).unwrap(), Masking { masked: false, colliding_clean_inputs: vec![] });
        assert_eq!(masks(&s2, 4, &i).unwrap(), Masking { masked: true, colliding_clean_inputs: vec![1] });
        assert_eq!(masks(&s3, 4, &i).unwrap(), Masking { masked: true, colliding_clean_inputs: vec![3, 5] });
        assert_eq!(masking_rate(&s2, &i).unwrap(), Ratio::from_integer(1));
    }

    #[test]
    fn identity_and_constant() {
        let i = Interpreter::default();
        let id = spec("return x;", one_to_five(), vec![1, 4, 5]);
        assert_eq!(masking_rate(&id, &i).unwrap(), Ratio::from_integer(0));
        let k = spec("return 7;", one_to_five(), vec![4]);
        assert_eq!(masking_rate(&k, &i).unwrap(), Ratio::from_integer(1));
        assert_eq!(drr(&k, &i).unwrap().range_size, 1);
    }

    #[test]
    fn erroring_function_is_a_subject_error() {
        let s = spec("return 10 / (x - 3);", one_to_five(), vec![4]);
        let err = drr(&s, &Interpreter::default()).unwrap_err();
        assert_eq!(err.case, "3");
    }

    #[test]
    fn spec_validation() {
        let p = parse("entry f; fn f(x) { return x; } fn g(a, b) { return a; }").unwrap();
        assert!(FiniteFunctionSpec::new("t", p.clone(), "g", vec![1], vec![]).is_err());
        assert!(FiniteFunctionSpec::new("t", p.clone(), "h", vec![1], vec![]).is_err());
        assert!(FiniteFunctionSpec::new("t", p.clone(), "f", vec![1, 1], vec![]).is_err());
        assert!(FiniteFunctionSpec::new("t", p.clone(), "f", vec![1], vec![2]).is_err());
        assert!(FiniteFunctionSpec::new("t", p, "f", vec![], vec![]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn masked_iff_output_in_clean_image(m in 1i64..6, c in -3i64..4, domain in prop::collection::btree_set(-20i64..20, 1..12)) {
            let domain: Vec<i64> = domain.into_iter().collect();
            let v_star = domain[0];
            let s = spec(&format!("return x % {m} + {c};"), domain.clone(), vec![v_star]);
            let i = Interpreter::default();
            let outputs = evaluate(&s, &i).unwrap();
            let target = &outputs[0].1;
            let clean_hit = outputs[1..].iter().any(|(_, y)| y == target);
            let r = masks(&s, v_star, &i).unwrap();
            prop_assert_eq!(r.masked, clean_hit);
            let d = drr(&s, &i).unwrap();
            prop_assert!(d.range_size >= 1);
            if d.drr == Ratio::from_integer(1) {
                prop_assert!(!r.masked);
            }
        }

        #[test]
        fn enlarging_the_clean_set_keeps_masking(extra in prop::collection::btree_set(6i64..30, 0..6)) {
            let i = Interpreter::default();
            let small = spec("return x % 3;", one_to_five(), vec![4]);
            let mut domain = one_to_five();
            domain.extend(extra);
            let big = spec("return x % 3;", domain, vec![4]);
            prop_assert!(masks(&small, 4, &i).unwrap().masked);
            prop_assert!(masks(&big, 4, &i).unwrap().masked);
        }
    }
}
