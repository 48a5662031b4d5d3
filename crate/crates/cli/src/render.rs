//! Table, JSON and CSV emitters. Tables put one quantity per row and one
//! degree per column, with zeros left blank.

use polespec::certify::{CertSummary, Certificate, InfinityEntry};
use polespec::decompose::{CheckStatus, Decomposition};
use polespec::pages::Which;
use polespec::roots::Reason;
use polespec::series::LaurentPoly;

use crate::config::Format;
use crate::job::{ChiView, DecompView, Document, E1View, PagesView, RootsView};

/// `None` is a value nobody certified.
type Cell = Option<i64>;

enum Block {
    Grid { title: String, ks: Vec<i64>, rows: Vec<(String, Vec<Cell>)> },
    Lines { title: String, items: Vec<(String, String)> },
}

fn lines(title: &str) -> (String, Vec<(String, String)>) {
    (title.to_string(), Vec::new())
}

fn kv(items: &mut Vec<(String, String)>, k: impl Into<String>, v: impl Into<String>) {
    items.push((k.into(), v.into()));
}

fn set_text(v: &[i64]) -> String {
    format!("{{{}}}", v.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","))
}

fn row(s: &LaurentPoly, ks: &[i64]) -> Vec<Cell> {
    ks.iter().map(|&k| Some(s.coeff(k))).collect()
}

/// Degrees `lo..=hi`, dropping leading columns where every series vanishes.
fn columns(series: &[&LaurentPoly], hi: i64) -> Vec<i64> {
    let lo = series.iter().filter_map(|s| s.terms().find(|t| t.0 >= 0).map(|t| t.0)).min().unwrap_or(0).min(hi);
    (lo..=hi).collect()
}

fn page_label(sym: &str, r: usize) -> String {
    if r == 1 {
        format!("{sym}_k")
    } else {
        format!("{sym}^({r})_k")
    }
}

fn e1_block(e: &E1View) -> Block {
    let ks = columns(&[&e.gamma, &e.mu, &e.nu, &e.rho], e.k_max);
    let rows = vec![
        ("γ_k".into(), row(&e.gamma, &ks)),
        ("μ_k".into(), row(&e.mu, &ks)),
        ("ν_k".into(), row(&e.nu, &ks)),
        ("ρ_k".into(), row(&e.rho, &ks)),
    ];
    Block::Grid { title: "E1".into(), ks, rows }
}

fn pages_block(p: &PagesView, gamma: Option<&LaurentPoly>) -> Block {
    let mut all: Vec<&LaurentPoly> = p.mu.iter().chain(&p.nu).chain(&p.rho).collect();
    all.extend(gamma);
    let ks = columns(&all, p.k_max);
    let mut rows = Vec::new();
    if let Some(g) = gamma {
        rows.push(("γ_k".to_string(), row(g, &ks)));
    }
    for (sym, v) in [("μ", &p.mu), ("ν", &p.nu), ("ρ", &p.rho)] {
        for (i, s) in v.iter().enumerate() {
            rows.push((page_label(sym, i + 1), row(s, &ks)));
        }
    }
    Block::Grid { title: format!("pages 1..={}", p.r_max), ks, rows }
}

fn chi_block(c: &ChiView) -> Block {
    let (title, mut items) = lines("Euler series");
    let s = &c.spectrum;
    kv(&mut items, "χ_f", s.chi.to_string());
    kv(&mut items, "deg χ_f", s.degree.to_string());
    kv(&mut items, "known to", s.known_to.to_string());
    kv(&mut items, "Eu_1..Eu_d", s.eu.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "));
    kv(&mut items, "Eu constant", (s.eu.windows(2).all(|w| w[0] == w[1])).to_string());
    kv(&mut items, "χ_f - γ", c.minus_gamma.to_string());
    if let Some(sym) = &c.symmetry {
        for (name, ok) in sym.checks() {
            kv(&mut items, format!("symmetry {name}"), if ok { "holds" } else { "fails" });
        }
    }
    for n in &c.notes {
        kv(&mut items, "note", n.clone());
    }
    Block::Lines { title, items }
}

fn cert_text(c: &Certificate) -> String {
    let w = match c.which {
        Which::M => "μ",
        Which::N => "ν",
        Which::Q => "ρ",
    };
    let mut s = format!("{w}^(∞)_k = {w}^({})_k for k <= {}", c.page, c.k_hi);
    if let Some(z) = c.zero_above {
        s.push_str(&format!("; {w}^(∞)_k = 0 for k > {z}"));
    }
    s
}

fn certify_block(s: &CertSummary) -> Block {
    let (title, mut items) = lines("certification");
    match (s.chi_u, s.chi_u_source) {
        (Some(v), Some(src)) => kv(&mut items, "χ(U)", format!("{v} ({src})")),
        _ => kv(&mut items, "χ(U)", "unknown"),
    }
    for r in &s.reports {
        let mut head = r.criterion.to_string();
        if let Some(p) = r.r {
            head.push_str(&format!(" r={p}"));
        }
        if let Some(m) = r.m {
            head.push_str(&format!(" m={m}"));
        }
        if let Some(b) = r.beta {
            head.push_str(&format!(" β={b}"));
        }
        kv(&mut items, head.clone(), if r.certified { "certified" } else { "not certified" });
        for c in &r.conditions {
            kv(&mut items, format!("  {}", c.name), format!("{} {}", if c.holds { "holds" } else { "fails" }, c.detail));
        }
        if !r.euler.is_empty() {
            kv(&mut items, "  euler", r.euler.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "));
        }
        for c in &r.certificates {
            kv(&mut items, "  certificate", cert_text(c));
        }
        if let Some(p) = r.degenerates_at {
            kv(&mut items, "  degenerates", format!("E_{p} in all degrees"));
        }
        for a in &r.advisories {
            kv(&mut items, format!("  advisory {}", a.name), format!("{} {}", if a.holds { "holds" } else { "fails" }, a.detail));
        }
        for n in &r.notes {
            kv(&mut items, "  note", n.clone());
        }
    }
    for (c, class, msg) in &s.skipped {
        kv(&mut items, format!("{c}"), format!("skipped [{class}] {msg}"));
    }
    for a in &s.advisories {
        kv(&mut items, format!("advisory {}", a.name), format!("{} {}", if a.holds { "holds" } else { "fails" }, a.detail));
    }
    if let Some(p) = s.global_page() {
        kv(&mut items, "degeneration", format!("E_{p} in all degrees"));
    }
    Block::Lines { title, items }
}

fn infinity_block(row: &[InfinityEntry], lo: i64) -> Block {
    let ks: Vec<i64> = row.iter().map(|e| e.k).filter(|&k| k >= lo).collect();
    let cells = row.iter().filter(|e| e.k >= lo).map(|e| e.value).collect();
    Block::Grid { title: "E_∞".into(), ks, rows: vec![("μ^(∞)_k".into(), cells)] }
}

fn roots_block(r: &RootsView, d: u32) -> Block {
    let (title, mut items) = lines("roots supported at the origin");
    let rep = &r.report;
    kv(&mut items, "d", d.to_string());
    kv(&mut items, "method", format!("{:?}", rep.method).to_lowercase());
    kv(&mut items, "CS(f)", set_text(&rep.cs));
    kv(&mut items, "d·R_f^0", r.members.clone());
    kv(&mut items, "not in d·R_f^0", set_text(&rep.non_members));
    kv(&mut items, "d·R_Z ∩ Z", set_text(&rep.local));
    for u in &rep.undecided {
        let why = match u.reason {
            Reason::ShiftedLocalRoot => "undecidable: condition fails, k/d is a local root shifted by a negative integer",
            Reason::Uncertified => "undecided: μ^(∞) not certified here",
            Reason::HypothesisFails => "undecided: the determination hypotheses fail",
        };
        kv(&mut items, format!("k = {} ({}/{d})", u.k, u.k), why);
    }
    for h in &rep.hypotheses {
        kv(&mut items, format!("  {}", h.name), format!("{} {}", if h.holds { "holds" } else { "fails" }, h.detail));
    }
    for n in &rep.notes {
        kv(&mut items, "note", n.clone());
    }
    Block::Lines { title, items }
}

fn split_lines(items: &mut Vec<(String, String)>, sym: &str, m: &Decomposition) {
    kv(items, format!("{sym}′"), m.prime.to_string());
    kv(items, format!("{sym}″"), format!("({}) p^(1)", m.second_gen));
    kv(items, format!("{sym}‴"), m.third.to_string());
    if let Some(g) = &m.third_gen {
        kv(items, format!("{sym}‴_max"), format!("({g}) p^(2)"));
    }
    if let Some(def) = &m.third_def {
        kv(items, format!("{sym}‴_def"), def.to_string());
    }
    kv(items, format!("{sym} ranks r″, r‴"), format!("{} {}", m.rank2, m.rank3));
}

fn decompose_block(v: &DecompView) -> Block {
    let (title, mut items) = lines("decomposition");
    let r = &v.report;
    kv(&mut items, "k_max", r.k_max.to_string());
    split_lines(&mut items, "μ", &r.m);
    kv(&mut items, "ν′", r.nu_prime.to_string());
    kv(&mut items, "ν″", format!("({}) p^(1)", r.nu_second.diff_pow(1).truncate(r.k_max)));
    kv(&mut items, "ν‴", r.nu_third.to_string());
    kv(&mut items, "ν‴ determined", r.nu_unique.to_string());
    for (i, c) in r.nu_candidates.iter().enumerate() {
        kv(&mut items, format!("ν‴ candidate {}", i + 1), format!("max ({}) p^(2), def {}, s {}", c.gen, c.def, c.s));
    }
    kv(&mut items, "ν‴ choices tried", r.nu_choices_tried.to_string());
    kv(&mut items, "ρ", format!("({}) p^(2)", r.rho_gen));
    for c in &v.checks {
        let s = match &c.status {
            CheckStatus::Holds => "holds".to_string(),
            CheckStatus::Fails(w) => format!("fails {w}"),
            CheckStatus::NotApplicable(w) => format!("not applicable {w}"),
        };
        kv(&mut items, format!("check {}", c.name), s);
    }
    Block::Lines { title, items }
}

fn blocks(doc: &Document) -> Vec<Block> {
    let mut out = Vec::new();
    let (title, mut head) = lines("job");
    kv(&mut head, "f", doc.job.poly.clone());
    kv(&mut head, "n, d", format!("{}, {}", doc.n, doc.d));
    kv(&mut head, "command", doc.command.name());
    kv(&mut head, "config", doc.config_hash.clone());
    out.push(Block::Lines { title, items: head });
    match (&doc.pages, &doc.e1) {
        (Some(p), e) => out.push(pages_block(p, e.as_ref().map(|e| &e.gamma))),
        (None, Some(e)) => out.push(e1_block(e)),
        _ => {}
    }
    let mut bounds: Vec<String> = Vec::new();
    if let Some(e) = &doc.e1 {
        bounds.extend(e.lower_bound.iter().map(|k| format!("E1 degree {k}")));
    }
    if let Some(p) = &doc.pages {
        bounds.extend(p.lower_bound.iter().cloned());
    }
    if !bounds.is_empty() {
        out.push(Block::Lines { title: "rank bounds".into(), items: vec![("lower bounds only".into(), bounds.join(" "))] });
    }
    if let Some(c) = &doc.chi {
        out.push(chi_block(c));
    }
    if let Some(b) = &doc.betti {
        let (title, mut items) = lines("complement");
        kv(&mut items, "meaning", b.betti.label());
        kv(&mut items, "dims", b.betti.dims.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "));
        kv(&mut items, "-alternating sum", b.chi_u.to_string());
        out.push(Block::Lines { title, items });
    }
    if let Some(s) = &doc.certify {
        out.push(certify_block(s));
    }
    if let Some(row) = &doc.mu_infinity {
        out.push(infinity_block(row, doc.n as i64));
    }
    if let Some(r) = &doc.roots {
        out.push(roots_block(r, doc.d));
    }
    if let Some(v) = &doc.decomposition {
        out.push(decompose_block(v));
    }
    let (title, mut tail) = lines("status");
    kv(&mut tail, "status", serde_json::to_value(doc.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default());
    out.push(Block::Lines { title, items: tail });
    out
}

fn table(bs: &[Block]) -> String {
    let mut out = String::new();
    for b in bs {
        match b {
            Block::Grid { title, ks, rows } => {
                out.push_str(&format!("[{title}]\n"));
                let text = |c: &Cell| match c {
                    Some(0) => String::new(),
                    Some(v) => v.to_string(),
                    None => "?".into(),
                };
                let lw = rows.iter().map(|r| r.0.chars().count()).max().unwrap_or(1).max(1) + 1;
                let widths: Vec<usize> = (0..ks.len())
                    .map(|j| rows.iter().map(|r| text(&r.1[j]).len()).max().unwrap_or(0).max(ks[j].to_string().len()))
                    .collect();
                let line = |label: &str, cells: Vec<String>| {
                    let pad = lw - label.chars().count();
                    let mut l = format!("{label}:{}", " ".repeat(pad));
                    for (c, w) in cells.iter().zip(&widths) {
                        l.push_str(&format!(" {c:>w$}"));
                    }
                    l.trim_end().to_string() + "\n"
                };
                out.push_str(&line("k", ks.iter().map(|k| k.to_string()).collect()));
                for (label, cells) in rows {
                    out.push_str(&line(label, cells.iter().map(text).collect()));
                }
            }
            Block::Lines { title, items } => {
                out.push_str(&format!("[{title}]\n"));
                for (k, v) in items {
                    out.push_str(&format!("{k} = {v}\n"));
                }
            }
        }
        out.push('\n');
    }
    out
}

fn csv(bs: &[Block]) -> String {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    for b in bs {
        match b {
            Block::Grid { title, ks, rows } => {
                let mut head = vec![title.clone(), "k".into()];
                head.extend(ks.iter().map(|k| k.to_string()));
                w.write_record(&head).expect("in-memory write");
                for (label, cells) in rows {
                    let mut rec = vec![title.clone(), label.clone()];
                    rec.extend(cells.iter().map(|c| c.map(|v| v.to_string()).unwrap_or_default()));
                    w.write_record(&rec).expect("in-memory write");
                }
            }
            Block::Lines { title, items } => {
                for (k, v) in items {
                    w.write_record([title.as_str(), k.trim(), v.as_str()]).expect("in-memory write");
                }
            }
        }
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

pub fn render(doc: &Document, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(doc).expect("document serializes") + "\n",
        Format::Table => table(&blocks(doc)),
        Format::Csv => csv(&blocks(doc)),
    }
}

/// Error report in the requested format.
pub fn render_error(class: &str, message: &str, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(&serde_json::json!({
            "schema": crate::job::SCHEMA,
            "error": { "class": class, "message": message },
        }))
        .expect("error serializes")
            + "\n",
        _ => format!("error [{class}]: {message}\n"),
    }
}
