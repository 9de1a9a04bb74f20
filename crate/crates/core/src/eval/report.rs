//! Report files rendered from an aggregated [`Report`].
//!
//! | file | columns |
//! |------|---------|
//! | `accuracy.csv` | architecture, corpus, seed, benchmark, pairs, accuracy, mean_p_delta |
//! | `acc_delta.csv` | architecture, corpus, benchmark, targeted, seed, accuracy, full_mean, acc_delta (one row per seed, then a `mean` row) |
//! | `acc_delta_matrix.csv` | architecture, corpus, then one column per benchmark; cells are seed-averaged accΔ, `*` marks F = F(B), empty = missing |
//! | `p_delta.csv` | architecture, benchmark, filter, pairs, full_mean, filtered_mean, difference, pearson_r, increased |
//! | `perplexity.csv` | architecture, corpus, seed, tokens, perplexity |
//! | `missing.csv` | architecture, corpus, seed, benchmark |
//! | `summary.txt` | plain-text overview |
//!
//! Accuracies and accΔ are percentages. Numbers use fixed decimals so the
//! files are byte-stable.

use std::fmt::Write as _;

use super::aggregate::Report;

fn f(x: f64) -> String {
    let s = format!("{x:.4}");
    // Avoid "-0.0000".
    if s.trim_start_matches('-')
        .chars()
        .all(|c| c == '0' || c == '.')
    {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

fn csv(rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("utf-8 input")
}

fn s(x: impl ToString) -> String {
    x.to_string()
}

pub fn accuracy_csv(rep: &Report) -> String {
    let mut rows = vec![[
        "architecture",
        "corpus",
        "seed",
        "benchmark",
        "pairs",
        "accuracy",
        "mean_p_delta",
    ]
    .map(s)
    .to_vec()];
    for r in &rep.results {
        rows.push(vec![
            s(&r.model.architecture),
            s(&r.model.corpus),
            s(r.model.seed),
            s(&r.benchmark),
            s(r.p_deltas.len()),
            f(100.0 * r.accuracy),
            f(r.mean_p_delta),
        ]);
    }
    csv(rows)
}

pub fn acc_delta_csv(rep: &Report) -> String {
    let mut rows = vec![[
        "architecture",
        "corpus",
        "benchmark",
        "targeted",
        "seed",
        "accuracy",
        "full_mean",
        "acc_delta",
    ]
    .map(s)
    .to_vec()];
    for c in &rep.acc_deltas {
        let base = [&c.architecture, &c.corpus, &c.benchmark].map(s);
        for (seed, acc, d) in &c.per_seed {
            let mut r = base.to_vec();
            r.extend([s(c.targeted), s(seed), f(*acc), f(c.full_mean), f(*d)]);
            rows.push(r);
        }
        let accs: Vec<f64> = c.per_seed.iter().map(|x| x.1).collect();
        let mut r = base.to_vec();
        r.extend([
            s(c.targeted),
            s("mean"),
            f(super::stats::mean(&accs)),
            f(c.full_mean),
            f(c.mean_delta),
        ]);
        rows.push(r);
    }
    csv(rows)
}

pub fn acc_delta_matrix_csv(rep: &Report) -> String {
    let mut header = vec![s("architecture"), s("corpus")];
    header.extend(rep.benchmarks.iter().cloned());
    let mut rows = vec![header];
    let mut keys: Vec<(&str, &str)> = rep
        .acc_deltas
        .iter()
        .map(|c| (c.architecture.as_str(), c.corpus.as_str()))
        .collect();
    keys.dedup();
    for (arch, corpus) in keys {
        let mut r = vec![s(arch), s(corpus)];
        for b in &rep.benchmarks {
            let cell = rep
                .acc_deltas
                .iter()
                .find(|c| c.architecture == arch && c.corpus == corpus && &c.benchmark == b);
            r.push(match cell {
                Some(c) if c.targeted => format!("{}*", f(c.mean_delta)),
                Some(c) => f(c.mean_delta),
                None => String::new(),
            });
        }
        rows.push(r);
    }
    csv(rows)
}

pub fn p_delta_csv(rep: &Report) -> String {
    let mut rows = vec![[
        "architecture",
        "benchmark",
        "filter",
        "pairs",
        "full_mean",
        "filtered_mean",
        "difference",
        "pearson_r",
        "increased",
    ]
    .map(s)
    .to_vec()];
    for p in &rep.p_deltas {
        rows.push(vec![
            s(&p.architecture),
            s(&p.benchmark),
            s(&p.filter),
            s(p.pairs),
            f(p.full_mean),
            f(p.filtered_mean),
            f(p.difference),
            p.pearson.map(f).unwrap_or_else(|| s("NA")),
            s(p.increased),
        ]);
    }
    csv(rows)
}

pub fn perplexity_csv(rep: &Report) -> String {
    let mut rows = vec![["architecture", "corpus", "seed", "tokens", "perplexity"]
        .map(s)
        .to_vec()];
    for p in &rep.perplexities {
        rows.push(vec![
            s(&p.model.architecture),
            s(&p.model.corpus),
            s(p.model.seed),
            s(p.tokens),
            f(p.perplexity),
        ]);
    }
    csv(rows)
}

pub fn missing_csv(rep: &Report) -> String {
    let mut rows = vec![["architecture", "corpus", "seed", "benchmark"]
        .map(s)
        .to_vec()];
    for m in &rep.missing {
        rows.push(vec![
            s(&m.architecture),
            s(&m.corpus),
            m.seed.map(s).unwrap_or_else(|| s("all")),
            s(&m.benchmark),
        ]);
    }
    csv(rows)
}

pub fn summary_txt(rep: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "benchmarks: {}", rep.benchmarks.len());
    let _ = writeln!(out, "results: {}", rep.results.len());
    for a in &rep.summaries {
        let _ = writeln!(out, "\narchitecture {}", a.architecture);
        match a.full_accuracy {
            Some(x) => {
                let _ = writeln!(
                    out,
                    "  full-corpus accuracy (mean over benchmarks): {}",
                    f(x)
                );
            }
            None => {
                let _ = writeln!(out, "  full-corpus accuracy: NA");
            }
        }
        match a.mean_targeted_acc_delta {
            Some(x) => {
                let _ = writeln!(
                    out,
                    "  mean accDelta over F = F(B) cells: {} ({} cells)",
                    f(x),
                    a.targeted_cells
                );
            }
            None => {
                let _ = writeln!(out, "  mean accDelta over F = F(B) cells: NA (0 cells)");
            }
        }
        let rows: Vec<_> = rep
            .p_deltas
            .iter()
            .filter(|p| p.architecture == a.architecture)
            .collect();
        if !rows.is_empty() {
            let increased = rows.iter().filter(|p| p.increased).count();
            let _ = writeln!(
                out,
                "  PDelta after filtering: {} of {} targeted benchmarks increased",
                increased,
                rows.len()
            );
        }
    }
    for t in &rep.perplexity_tests {
        match &t.test {
            Some(tt) => {
                let _ = writeln!(
                    out,
                    "\nperplexity paired t-test {} vs {}: t = {}, df = {}, p = {:.6e} ({} matched models)",
                    t.first,
                    t.second,
                    f(tt.t),
                    tt.df,
                    tt.p,
                    t.matched
                );
            }
            None => {
                let _ = writeln!(
                    out,
                    "\nperplexity paired t-test {} vs {}: NA ({} matched models)",
                    t.first, t.second, t.matched
                );
            }
        }
    }
    let _ = writeln!(out, "\nmissing cells: {}", rep.missing.len());
    for m in &rep.missing {
        let seed = m
            .seed
            .map(|x| x.to_string())
            .unwrap_or_else(|| "all".into());
        let _ = writeln!(
            out,
            "  {} / {} / seed {} / {}",
            m.architecture, m.corpus, seed, m.benchmark
        );
    }
    out
}

/// Every report file as `(file name, contents)`, in a fixed order.
pub fn render(rep: &Report) -> Vec<(&'static str, String)> {
    vec![
        ("accuracy.csv", accuracy_csv(rep)),
        ("acc_delta.csv", acc_delta_csv(rep)),
        ("acc_delta_matrix.csv", acc_delta_matrix_csv(rep)),
        ("p_delta.csv", p_delta_csv(rep)),
        ("perplexity.csv", perplexity_csv(rep)),
        ("missing.csv", missing_csv(rep)),
        ("summary.txt", summary_txt(rep)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(f(-0.00001), "0.0000");
        assert_eq!(f(-3.0), "-3.0000");
        assert_eq!(f(2.99999), "3.0000");
    }
}
