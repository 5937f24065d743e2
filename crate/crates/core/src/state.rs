//! Per-activation partial-state comparison of the defective function and
//! classification of where infections were nullified.

use std::collections::BTreeMap;
use std::fmt;

use crate::corpus::{run_pair, TestCase, TestRun, VersionPair};
use crate::minilang::{EventKind, Interpreter, Trace, Value};

/// Last value per `(scope, variable)` inside one activation, plus its return value.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartialState {
    pub assignments: BTreeMap<(String, String), Value>,
    pub return_value: Option<Value>,
}

impl PartialState {
    /// Sorted-key JSON, one file per activation.
    pub fn to_json(&self) -> serde_json::Value {
        let assignments: serde_json::Map<String, serde_json::Value> = self
            .assignments
            .iter()
            .map(|((scope, var), v)| (format!("{scope}.{var}"), serde_json::to_value(v).expect("value serializes")))
            .collect();
        serde_json::json!({ "assignments": assignments, "return": self.return_value })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum LowLabel {
    LowFailing,
    LowTruePassing,
    LowCC,
    Anomalous,
}

impl LowLabel {
    pub fn from_evidence(fired: bool, equal: bool) -> LowLabel {
        match (fired, equal) {
            (true, false) => LowLabel::LowFailing,
            (true, true) => LowLabel::LowCC,
            (false, true) => LowLabel::LowTruePassing,
            (false, false) => LowLabel::Anomalous,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LowLabel::LowFailing => "LowFailing",
            LowLabel::LowTruePassing => "LowTruePassing",
            LowLabel::LowCC => "LowCC",
            LowLabel::Anomalous => "Anomalous",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActivationRecord {
    /// 1-based invocation order of the defective function.
    pub index: usize,
    pub checker_bug_fired: bool,
    pub state_buggy: PartialState,
    pub state_fixed: PartialState,
    pub states_equal: bool,
    pub low_label: LowLabel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Category {
    In,
    Out,
    InOut,
    Anomalous,
    Misaligned,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::In => "IN",
            Category::Out => "OUT",
            Category::InOut => "IN_OUT",
            Category::Anomalous => "ANOMALOUS",
            Category::Misaligned => "MISALIGNED",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum StateError {
    #[error("`{0}` is activated recursively")]
    RecursiveDefectFunction(String),
    #[error("activation counts differ: buggy {buggy}, fixed {fixed}")]
    Misaligned { buggy: usize, fixed: usize },
    #[error("{0} run did not complete")]
    Incomplete(&'static str),
}

struct Window {
    state: PartialState,
    fired: bool,
}

/// Brackets every activation of `func` in `trace`.
pub fn activations(trace: &Trace, func: &str) -> Result<Vec<(PartialState, bool)>, StateError> {
    let mut out = Vec::new();
    let mut open: Option<(u32, Window)> = None;
    for e in &trace.events {
        match &e.kind {
            EventKind::Call { callee, activation } if &**callee == func => {
                if open.is_some() {
                    return Err(StateError::RecursiveDefectFunction(func.to_string()));
                }
                open = Some((*activation, Window { state: PartialState::default(), fired: false }));
            }
            EventKind::Return { activation, value } => {
                if matches!(&open, Some((a, _)) if a == activation) {
                    let (_, mut w) = open.take().expect("checked above");
                    w.state.return_value = *value;
                    out.push((w.state, w.fired));
                }
            }
            EventKind::Assign { scope, var, value } => {
                if let Some((_, w)) = &mut open {
                    w.state.assignments.insert((scope.to_string(), var.to_string()), *value);
                }
            }
            EventKind::CheckFired { .. } => {
                if let Some((_, w)) = &mut open {
                    w.fired = true;
                }
            }
            _ => {}
        }
    }
    Ok(out)
}

/// Pairs the i-th buggy activation with the i-th fixed one.
pub fn compare_runs(vp: &VersionPair, run: &TestRun) -> Result<Vec<ActivationRecord>, StateError> {
    if !run.buggy.terminated_ok {
        return Err(StateError::Incomplete("buggy"));
    }
    if !run.fixed.terminated_ok {
        return Err(StateError::Incomplete("fixed"));
    }
    let buggy = activations(&run.buggy, &vp.defect_fn)?;
    let fixed = activations(&run.fixed, &vp.defect_fn)?;
    if buggy.len() != fixed.len() {
        return Err(StateError::Misaligned { buggy: buggy.len(), fixed: fixed.len() });
    }
    Ok(buggy
        .into_iter()
        .zip(fixed)
        .enumerate()
        .map(|(i, ((state_buggy, fired), (state_fixed, _)))| {
            let states_equal = state_buggy == state_fixed;
            ActivationRecord {
                index: i + 1,
                checker_bug_fired: fired,
                state_buggy,
                state_fixed,
                states_equal,
                low_label: LowLabel::from_evidence(fired, states_equal),
            }
        })
        .collect())
}

pub fn capture_states(vp: &VersionPair, test: &TestCase, interp: &Interpreter) -> Result<Vec<ActivationRecord>, StateError> {
    compare_runs(vp, &run_pair(vp, test, interp))
}

/// Category of a strong-CC test from its activation labels.
///
/// A test with no fired activation at all has no infection to place and is
/// reported as anomalous.
pub fn categorize(labels: &[LowLabel]) -> Category {
    let has = |l| labels.contains(&l);
    match (has(LowLabel::Anomalous), has(LowLabel::LowCC), has(LowLabel::LowFailing)) {
        (true, _, _) => Category::Anomalous,
        (false, true, false) => Category::In,
        (false, false, true) => Category::Out,
        (false, true, true) => Category::InOut,
        (false, false, false) => Category::Anomalous,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NullificationRecord {
    pub version: String,
    pub test: String,
    /// Activation count; zero when misaligned.
    pub n: usize,
    pub category: Category,
    pub activations: Vec<ActivationRecord>,
}

/// Categorizes one strong-CC test. Recursion and incomplete runs are errors;
/// misalignment is a category of its own.
pub fn nullify_run(vp: &VersionPair, test: &str, run: &TestRun) -> Result<NullificationRecord, StateError> {
    let rec = |n, category, activations| NullificationRecord {
        version: vp.id.clone(),
        test: test.to_string(),
        n,
        category,
        activations,
    };
    match compare_runs(vp, run) {
        Ok(acts) => {
            let labels: Vec<LowLabel> = acts.iter().map(|a| a.low_label).collect();
            Ok(rec(acts.len(), categorize(&labels), acts))
        }
        Err(StateError::Misaligned { .. }) => Ok(rec(0, Category::Misaligned, Vec::new())),
        Err(e) => Err(e),
    }
}

/// One row of the per-version nullification summary.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NullificationSummary {
    pub version: String,
    pub t_cchigh: usize,
    /// Sum of N over aligned tests; the average divides by `aligned`.
    pub n_sum: usize,
    pub aligned: usize,
    pub in_: usize,
    pub out: usize,
    pub in_out: usize,
    pub anomalous: usize,
    pub misaligned: usize,
}

impl NullificationSummary {
    pub fn avg_n(&self) -> Option<num_rational::Ratio<u64>> {
        (self.aligned > 0).then(|| num_rational::Ratio::new(self.n_sum as u64, self.aligned as u64))
    }
}

/// Summarizes a version's strong-CC tests. `t_cchigh` counts every strong-CC
/// test, including any dropped with a [`StateError`].
pub fn nullification_table(version: &str, t_cchigh: usize, records: &[NullificationRecord]) -> NullificationSummary {
    let mut s = NullificationSummary { version: version.to_string(), t_cchigh, ..Default::default() };
    for r in records {
        match r.category {
            Category::In => s.in_ += 1,
            Category::Out => s.out += 1,
            Category::InOut => s.in_out += 1,
            Category::Anomalous => s.anomalous += 1,
            Category::Misaligned => s.misaligned += 1,
        }
        if r.category != Category::Misaligned {
            s.aligned += 1;
            s.n_sum += r.n;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::parse;
    use num_rational::Ratio;
    use proptest::prelude::*;

    use LowLabel::*;

    fn pair(buggy: &str, fixed: &str) -> VersionPair {
        VersionPair {
            id: "v".into(),
            buggy: parse(buggy).unwrap(),
            fixed: parse(fixed).unwrap(),
            defect_fn: "f".into(),
            defect_sites: vec!["L1".parse().unwrap()],
            weak_labels: vec![],
            strong_labels: vec!["S1".into()],
        }
    }

    fn test(args: &[i64]) -> TestCase {
        TestCase { name: "t".into(), args: args.iter().map(|&a| Value::Int(a)).collect(), expected_output: None }
    }

    const CALLER: &str = "fn main(a) { let r = f(a); let s = f(a + 1); output(0 * r + 0 * s); }";

    #[test]
    fn category_table() {
        assert_eq!(categorize(&[LowTruePassing, LowFailing, LowTruePassing]), Category::Out);
        assert_eq!(categorize(&[LowCC]), Category::In);
        assert_eq!(categorize(&[LowCC, LowFailing]), Category::InOut);
        assert_eq!(categorize(&[LowCC, Anomalous]), Category::Anomalous);
        assert_eq!(categorize(&[LowTruePassing]), Category::Anomalous);
    }

    #[test]
    fn out_when_the_caller_discards() {
        let vp = pair(
            &format!(r#"fn f(x) {{ let y = x * 2; check "S1" {{ let good = x * 3; }} when (good != y); return y; }} {CALLER}"#),
            &format!("fn f(x) {{ let y = x * 3; return y; }} {CALLER}"),
        );
        let acts = capture_states(&vp, &test(&[1]), &Interpreter::default()).unwrap();
        assert_eq!(acts.len(), 2);
        assert!(acts.iter().all(|a| a.low_label == LowFailing));
        assert_eq!(acts[0].state_buggy.return_value, Some(Value::Int(2)));
        assert_eq!(acts[0].state_fixed.return_value, Some(Value::Int(3)));
        let rec = nullify_run(&vp, "t", &run_pair(&vp, &test(&[1]), &Interpreter::default())).unwrap();
        assert_eq!((rec.n, rec.category), (2, Category::Out));
    }

    #[test]
    fn in_when_the_function_clamps() {
        let vp = pair(
            &format!(
                r#"fn f(x) {{ let t = x + 20; check "S1" {{ let good = x + 10; }} when (good != t); if (t > 10) {{ t = 10; }} return t; }} {CALLER}"#
            ),
            &format!("fn f(x) {{ let t = x + 10; if (t > 10) {{ t = 10; }} return t; }} {CALLER}"),
        );
        let acts = capture_states(&vp, &test(&[5]), &Interpreter::default()).unwrap();
        assert_eq!(acts.iter().map(|a| a.low_label).collect::<Vec<_>>(), vec![LowCC, LowCC]);
    }

    #[test]
    fn self_comparison_is_equal() {
        let src = format!(r#"fn f(x) {{ let y = x * 2; check "S1" {{ let g = x * 3; }} when (g != y); return y; }} {CALLER}"#);
        let vp = pair(&src, &src);
        let acts = capture_states(&vp, &test(&[4]), &Interpreter::default()).unwrap();
        assert!(acts.iter().all(|a| a.states_equal && a.low_label == LowCC));
    }

    #[test]
    fn callee_and_global_keys() {
        let src = "global g = 0; fn h(z) { let w = z + 1; return w; } fn f(x) { g = x; let y = h(x); return y; } fn main(a) { output(f(a)); }";
        let acts = activations(&crate::minilang::run(&parse(src).unwrap(), &[Value::Int(3)]), "f").unwrap();
        let keys: Vec<String> = acts[0].0.assignments.keys().map(|(s, v)| format!("{s}.{v}")).collect();
        assert_eq!(keys, vec!["f.y", "global.g", "h.w"]);
    }

    #[test]
    fn position_independence() {
        let a = "fn f(x) { let p = x + 1; let q = x * 2; return p + q; } fn main(a) { output(f(a)); }";
        let b = "fn f(x) { let q = x * 2; let p = x + 1; return p + q; } fn main(a) { output(f(a)); }";
        let run = |s: &str| activations(&crate::minilang::run(&parse(s).unwrap(), &[Value::Int(3)]), "f").unwrap();
        assert_eq!(run(a), run(b));
    }

    #[test]
    fn misaligned_and_recursive() {
        let vp = pair(
            r#"fn f(x) { let y = x; check "S1" {} when (true); return y; } fn main(a) { let r = f(a); output(f(r)); }"#,
            "fn f(x) { let y = x; return y; } fn main(a) { output(f(a)); }",
        );
        let run = run_pair(&vp, &test(&[1]), &Interpreter::default());
        assert_eq!(nullify_run(&vp, "t", &run).unwrap().category, Category::Misaligned);

        let rec = pair(
            "fn f(x) { if (x > 0) { return f(x - 1); } return 0; } fn main(a) { output(f(a)); }",
            "fn f(x) { return 0; } fn main(a) { output(f(a)); }",
        );
        let run = run_pair(&rec, &test(&[2]), &Interpreter::default());
        assert_eq!(compare_runs(&rec, &run), Err(StateError::RecursiveDefectFunction("f".into())));
    }

    #[test]
    fn summary_row() {
        let r = |n, category| NullificationRecord {
            version: "v".into(),
            test: "t".into(),
            n,
            category,
            activations: vec![],
        };
        let s = nullification_table("v", 3, &[r(2, Category::Out), r(3, Category::Out), r(4, Category::Out)]);
        assert_eq!((s.t_cchigh, s.out, s.in_, s.in_out), (3, 3, 0, 0));
        assert_eq!(s.avg_n(), Some(Ratio::from_integer(3)));
        let empty = nullification_table("w", 0, &[]);
        assert_eq!(empty.avg_n(), None);
    }

    #[test]
    fn state_json_is_sorted() {
        let mut s = PartialState::default();
        s.assignments.insert(("f".into(), "z".into()), Value::Int(1));
        s.assignments.insert(("f".into(), "a".into()), Value::Bool(true));
        s.return_value = Some(Value::Int(3));
        assert_eq!(
            serde_json::to_string(&s.to_json()).unwrap(),
            r#"{"assignments":{"f.a":true,"f.z":1},"return":3}"#
        );
    }

    proptest! {
        #[test]
        fn category_invariants(labels in prop::collection::vec(0usize..4, 1..8)) {
            let all = [LowFailing, LowTruePassing, LowCC, Anomalous];
            let labels: Vec<LowLabel> = labels.into_iter().map(|i| all[i]).collect();
            let c = categorize(&labels);
            let has = |l| labels.contains(&l);
            prop_assert_eq!(c == Category::In, has(LowCC) && !has(LowFailing) && !has(Anomalous));
            prop_assert_eq!(c == Category::Out, has(LowFailing) && !has(LowCC) && !has(Anomalous));
            prop_assert_eq!(c == Category::InOut, has(LowFailing) && has(LowCC) && !has(Anomalous));
        }

        #[test]
        fn self_comparison_never_fails(a in -50i64..50, k in 1i64..5) {
            let src = format!(
                r#"global acc = 0; fn f(x) {{ let y = x * {k}; acc = acc + y; check "S1" {{ let g = x; }} when (g != y); return y % 7; }} fn main(a) {{ let r = f(a); output(f(r) + acc); }}"#
            );
            let vp = pair(&src, &src);
            let acts = capture_states(&vp, &test(&[a]), &Interpreter::default()).unwrap();
            prop_assert!(acts.iter().all(|x| x.low_label != LowFailing && x.low_label != Anomalous));
        }
    }
}
