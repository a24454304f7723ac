//! One line per acceptance criterion; exits nonzero if any fails.

use std::time::{Duration, Instant};

use goi_core::suites::*;

struct Line {
    id: usize,
    title: &'static str,
    ok: bool,
    elapsed: Duration,
    budget: Option<Duration>,
    detail: String,
}

fn criterion(
    id: usize,
    title: &'static str,
    budget: Option<Duration>,
    run: impl FnOnce() -> Vec<CheckRecord>,
) -> Line {
    let start = Instant::now();
    let records = run();
    let elapsed = start.elapsed();
    let ok = records.iter().all(CheckRecord::passed);
    let detail = records.iter().map(|r| format!("{} [{:?}] {}", r.name, r.status, r.detail)).collect::<Vec<_>>().join("; ");
    Line { id, title, ok, elapsed, budget, detail }
}

fn main() {
    let cfg = SuiteConfig::default();
    let ms = Duration::from_millis;
    let lines = vec![
        criterion(1, "determinant regression values", Some(ms(1)), || vec![det_regression()]),
        criterion(2, "group arithmetic and freeness", Some(ms(1000)), || vec![group_arithmetic()]),
        criterion(3, "Fuglede-Kadison determinant suite", None, || vec![fk_determinant(&cfg)]),
        criterion(4, "block determinant identity", Some(ms(1000)), || vec![block_determinant(&cfg)]),
        criterion(5, "adjunction residuals", None, || vec![adjunction_hyp(&cfg), adjunction_mat(&cfg)]),
        criterion(6, "ldet rules", None, || vec![ldet_rules(&cfg)]),
        criterion(7, "MLL exact soundness", Some(ms(1000)), || vec![mll_exact_soundness()]),
        criterion(8, "MALL property soundness", None, || vec![basis_validity(), mall_property_soundness(&cfg)]),
        criterion(9, "coherence, compositionality and mutation", None, || {
            let mut r = vec![coherence(&cfg), compositionality(&cfg), with_distributivity(&cfg)];
            let mutated = SuiteConfig { mutate: true, ..cfg };
            let broken: Vec<String> = [Suite::Coherence, Suite::Soundness]
                .iter()
                .flat_map(|s| run_suite(*s, &mutated))
                .filter(|c| !c.passed())
                .map(|c| c.name)
                .collect();
            let mut m = r[0].clone();
            m.name = "mutation_detected".into();
            m.status = if broken.is_empty() { Status::Fail } else { Status::Pass };
            m.detail = format!("flipped fax sign breaks {broken:?}");
            m.values.clear();
            r.push(m);
            r
        }),
        criterion(10, "variant and tensor laws", None, || vec![variant_congruence(&cfg), tensor_variant(&cfg)]),
    ];
    let mut all = true;
    for l in &lines {
        let over = l.budget.is_some_and(|b| l.elapsed > b);
        let ok = l.ok && !over;
        all &= ok;
        let budget = l.budget.map(|b| format!(" (budget {b:?})")).unwrap_or_default();
        println!(
            "criterion {:>2} {}: {} in {:.3?}{}: {}",
            l.id,
            if ok { "PASS" } else { "FAIL" },
            l.title,
            l.elapsed,
            budget,
            l.detail
        );
    }
    let passed = lines.iter().filter(|l| l.ok).count();
    println!("acceptance: {passed}/{} criteria passed", lines.len());
    if !all {
        std::process::exit(1);
    }
}
