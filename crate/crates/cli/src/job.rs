//! Running one subcommand on one job, with the result cache.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use polespec::certify::{certify_all, infinity_row, row_values, CertSummary, InfinityEntry};
use polespec::decompose::{decompose_all, duality_check_suite, parse_generators, CheckStatus, DecompositionReport};
use polespec::error::{Error, Result};
use polespec::exactla::Certification;
use polespec::koszul::{complement_betti, e1_table, ComplementBetti, E1Table};
use polespec::pages::{page_tables_checked, PageOptions, PageTable, Which};
use polespec::polyring::{parse_polynomial, HomogPoly};
use polespec::roots::{determine_roots, RootReport};
use polespec::series::{chi_from_arrays, euler_numbers, gamma_series, sf_symmetry_report, ChiSpectrum, LaurentPoly, SymmetryReport};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{hex, Command, Job, JobConfig};

pub const SCHEMA: u32 = 1;

/// Counts real computations and cache hits.
#[derive(Debug, Default)]
pub struct Stats {
    pub computed: AtomicUsize,
    pub hits: AtomicUsize,
}

impl Stats {
    pub fn computed(&self) -> usize {
        self.computed.load(Ordering::SeqCst)
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    HypothesisFailed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct E1View {
    pub k_max: i64,
    pub gamma: LaurentPoly,
    pub mu: LaurentPoly,
    pub nu: LaurentPoly,
    pub rho: LaurentPoly,
    /// Degrees whose ranks are only lower bounds.
    pub lower_bound: Vec<i64>,
}

impl E1View {
    fn new(e1: &E1Table) -> Self {
        E1View {
            k_max: e1.k_max,
            gamma: LaurentPoly::from_slice(0, &e1.gamma),
            mu: e1.mu_series(),
            nu: e1.nu_series(),
            rho: e1.rho_series(),
            lower_bound: (0..=e1.k_max).filter(|&k| e1.tags.get(k as usize) == Some(&Certification::LowerBound)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PagesView {
    pub r_max: usize,
    pub k_max: i64,
    /// `mu[r-1]` is the page-r series.
    pub mu: Vec<LaurentPoly>,
    pub nu: Vec<LaurentPoly>,
    pub rho: Vec<LaurentPoly>,
    /// Entries such as `mu^(2)_7` that are only bounds.
    pub lower_bound: Vec<String>,
}

impl PagesView {
    fn new(t: &PageTable) -> Self {
        let rows = |v: &[Vec<i64>]| v.iter().map(|r| LaurentPoly::from_slice(0, r)).collect();
        let mut lower_bound = Vec::new();
        for (w, name) in [(Which::M, "mu"), (Which::N, "nu"), (Which::Q, "rho")] {
            for r in 1..=t.r_max {
                for k in 0..=t.k_max {
                    if t.tag(w, r, k) == Certification::LowerBound {
                        lower_bound.push(format!("{name}^({r})_{k}"));
                    }
                }
            }
        }
        PagesView { r_max: t.r_max, k_max: t.k_max, mu: rows(&t.mu), nu: rows(&t.nu), rho: rows(&t.rho), lower_bound }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChiView {
    pub spectrum: ChiSpectrum,
    /// χ_f minus γ, on the known range; zero exactly when ν and ρ cancel.
    pub minus_gamma: LaurentPoly,
    /// Strongly free symmetry checks, run when n = 4 and the divisor is flagged strongly free.
    pub symmetry: Option<SymmetryReport>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BettiView {
    pub betti: ComplementBetti,
    /// `-Σ(-1)^j dim H^j`, equal to χ(U) under the hypotheses.
    pub chi_u: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckView {
    pub name: String,
    pub status: CheckStatus,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompView {
    pub report: DecompositionReport,
    pub checks: Vec<CheckView>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootsView {
    pub report: RootReport,
    /// `{4,5,7,8,10}` rendering of `d R_f^0`.
    pub members: String,
}

/// One emitted result.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub schema: u32,
    pub command: Command,
    pub config_hash: String,
    pub job: Job,
    pub n: usize,
    pub d: u32,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e1: Option<E1View>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pages: Option<PagesView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<ChiView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub betti: Option<BettiView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certify: Option<CertSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_infinity: Option<Vec<InfinityEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roots: Option<RootsView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompView>,
}

impl Document {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Ok => 0,
            Status::HypothesisFailed => 2,
        }
    }
}

/// Process exit code for an engine error.
pub fn error_code(e: &Error) -> i32 {
    if e.is_config() {
        4
    } else if e.is_hypothesis() {
        2
    } else {
        3
    }
}

pub struct Outcome {
    pub document: Document,
    pub cache_hit: bool,
}

struct Pipeline<'a> {
    job: &'a Job,
    f: HomogPoly,
    e1: Option<E1Table>,
    pages: Option<PageTable>,
    chi: Option<std::result::Result<ChiSpectrum, Error>>,
    betti: Option<ComplementBetti>,
}

impl<'a> Pipeline<'a> {
    fn new(job: &'a Job) -> Result<Self> {
        let f = parse_polynomial(&job.poly, job.n)?;
        Ok(Pipeline { job, f, e1: None, pages: None, chi: None, betti: None })
    }

    fn d(&self) -> u32 {
        self.f.d
    }

    fn nd(&self) -> i64 {
        self.job.n as i64 * self.d() as i64
    }

    fn k_pages(&self) -> i64 {
        self.job.k_max.unwrap_or(self.nd() - 1)
    }

    fn k_e1(&self) -> i64 {
        let d = self.d() as i64;
        let dflt = if self.strongly_free() { 4 * d + 2 } else { (self.job.n as i64 + 1) * d };
        self.job.k_max_e1.unwrap_or(dflt).max(self.k_pages())
    }

    fn e1(&mut self) -> Result<&E1Table> {
        if self.e1.is_none() {
            self.e1 = Some(e1_table(&self.f, self.k_e1(), &self.job.rank)?);
        }
        Ok(self.e1.as_ref().unwrap())
    }

    fn pages(&mut self) -> Result<&PageTable> {
        if self.pages.is_none() {
            let k = self.k_pages();
            self.e1()?;
            let t = page_tables_checked(&self.f, self.e1.as_ref().unwrap(), self.job.r_max, k, &self.job.rank, &PageOptions::default())?;
            self.pages = Some(t);
        }
        Ok(self.pages.as_ref().unwrap())
    }

    fn strongly_free(&self) -> bool {
        self.job.n == 4 && self.job.geometry.flags.strongly_free
    }

    /// χ_f from the E1 table. Without an explicit E1 extent the table is
    /// lengthened by d until the tail cancels, up to `(n + 3)d - n`, which
    /// covers every series ending by `nd - n`. A strongly free divisor stops
    /// at `4d + 2` and reads χ_f off the second differences instead.
    fn chi(&mut self) -> Result<std::result::Result<ChiSpectrum, Error>> {
        if self.chi.is_none() {
            let d = self.d() as i64;
            let sf = self.strongly_free();
            let extend = self.job.k_max_e1.is_none();
            let cap = if sf { 4 * d + 2 } else { (self.job.n as i64 + 3) * d - self.job.n as i64 };
            loop {
                let e1 = self.e1()?;
                let mut c = chi_from_arrays(&e1.mu, &e1.nu, &e1.rho, e1.d);
                let k = e1.k_max;
                if matches!(c, Err(Error::TailNotCancelled(_))) && extend && k < cap {
                    let next = (k + d).min(cap);
                    self.e1 = Some(e1_table(&self.f, next, &self.job.rank)?);
                    continue;
                }
                if c.is_err() && sf {
                    if let Ok(s) = sf_symmetry_report(&e1.mu, &e1.nu, &e1.rho, e1.d) {
                        let degree = s.chi.degree().unwrap_or(0);
                        let eu = euler_numbers(&s.chi, e1.d, degree);
                        c = Ok(ChiSpectrum { d: e1.d, chi: s.chi, degree, eu, known_to: 2 * d });
                    }
                }
                self.chi = Some(c);
                break;
            }
        }
        Ok(self.chi.clone().unwrap())
    }

    fn betti(&mut self) -> Result<&ComplementBetti> {
        if self.betti.is_none() {
            let hyp = self.job.geometry.flags.complement_hypotheses(self.job.n);
            self.betti = Some(complement_betti(&self.f, hyp, &self.job.rank)?);
        }
        Ok(self.betti.as_ref().unwrap())
    }

    fn chi_view(&mut self) -> Result<ChiView> {
        let spectrum = self.chi()??;
        let gamma = gamma_series(self.job.n, self.d(), spectrum.known_to);
        let minus_gamma = spectrum.chi.sub(&gamma).truncate(spectrum.known_to);
        let mut notes = Vec::new();
        let symmetry = if self.strongly_free() {
            let e1 = self.e1()?;
            match sf_symmetry_report(&e1.mu, &e1.nu, &e1.rho, e1.d) {
                Ok(s) => Some(s),
                Err(e) => {
                    notes.push(format!("symmetry checks skipped: {e}"));
                    None
                }
            }
        } else {
            None
        };
        Ok(ChiView { spectrum, minus_gamma, symmetry, notes })
    }

    fn certify(&mut self) -> Result<(CertSummary, Vec<InfinityEntry>)> {
        let n = self.job.n;
        let chi = self.chi()?.ok();
        let betti = if self.job.geometry.flags.complement_hypotheses(n) { Some(self.betti()?.clone()) } else { None };
        self.pages()?;
        let t = self.pages.as_ref().unwrap();
        let s = certify_all(t, self.e1.as_ref(), chi.as_ref(), betti.as_ref(), &self.job.geometry, self.job.beta);
        let row = infinity_row(t, &s.certificates(), Which::M, self.nd() - 1)?;
        Ok((s, row))
    }
}

fn decompose(p: &mut Pipeline) -> Result<DecompView> {
    if p.job.ideal_e.is_empty() {
        return Err(Error::InvalidE("no generators given (--ideal-e)".into()));
    }
    let gens = parse_generators(&p.job.ideal_e, p.job.n)?;
    let k = p.k_pages();
    p.e1()?;
    let report = decompose_all(&p.f, p.e1.as_ref().unwrap(), &gens, k, &p.job.rank)?;
    let checks = duality_check_suite(&report).into_iter().map(|c| CheckView { name: c.name.to_string(), status: c.status }).collect();
    Ok(DecompView { report, checks })
}

/// Compute a document without touching the cache.
pub fn compute(cmd: Command, job: &Job) -> Result<Document> {
    job.validate()?;
    let mut p = Pipeline::new(job)?;
    let mut doc = Document {
        schema: SCHEMA,
        command: cmd,
        config_hash: job.hash(),
        job: job.clone(),
        n: job.n,
        d: p.d(),
        status: Status::Ok,
        e1: None,
        pages: None,
        chi: None,
        betti: None,
        certify: None,
        mu_infinity: None,
        roots: None,
        decomposition: None,
    };
    let want = |c: Command| cmd == c || cmd == Command::All;
    if matches!(cmd, Command::Chi | Command::Certify | Command::Roots | Command::All) {
        // settles the length of the E1 table before anything reads it
        let _ = p.chi()?;
    }
    if want(Command::E1) || cmd == Command::Pages {
        doc.e1 = Some(E1View::new(p.e1()?));
    }
    if want(Command::Pages) {
        doc.pages = Some(PagesView::new(p.pages()?));
    }
    if want(Command::Chi) {
        doc.chi = Some(p.chi_view()?);
    }
    if cmd == Command::Betti || (cmd == Command::All && job.geometry.flags.complement_hypotheses(job.n)) {
        let b = p.betti()?.clone();
        doc.betti = Some(BettiView { chi_u: -b.alternating_sum(), betti: b });
    }
    let roots_wanted = cmd == Command::Roots || (cmd == Command::All && !job.geometry.rz.is_empty());
    if want(Command::Certify) || roots_wanted {
        if roots_wanted && job.geometry.rz.is_empty() {
            return Err(Error::EmptyRz);
        }
        let (s, row) = p.certify()?;
        if !s.any_certified() {
            doc.status = Status::HypothesisFailed;
        }
        doc.certify = Some(s);
        if roots_wanted {
            let report = determine_roots(&row_values(&row), &job.geometry.rz, job.n, p.d())?;
            if !report.complete() {
                doc.status = Status::HypothesisFailed;
            }
            doc.roots = Some(RootsView { members: report.members_text(), report });
        }
        doc.mu_infinity = Some(row);
    }
    if cmd == Command::Decompose || (cmd == Command::All && !job.ideal_e.is_empty()) {
        doc.decomposition = Some(decompose(&mut p)?);
    }
    Ok(doc)
}

fn cache_path(dir: &Path, cmd: Command, job: &Job) -> PathBuf {
    let key = hex(&Sha256::digest(format!("{}:{}", cmd.name(), job.hash()).as_bytes()));
    dir.join(format!("{key}.json"))
}

fn load(path: &Path, cmd: Command, job: &Job) -> Option<Document> {
    let text = fs::read_to_string(path).ok()?;
    let doc: Document = serde_json::from_str(&text).ok()?;
    (doc.schema == SCHEMA && doc.command == cmd && doc.job == *job).then_some(doc)
}

fn store(path: &Path, doc: &Document) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, serde_json::to_string(doc).expect("document serializes"))?;
    fs::rename(tmp, path)
}

/// Run `cmd`, answering from the cache when the same job ran before.
pub fn run(cmd: Command, cfg: &JobConfig, stats: &Stats) -> Result<Outcome> {
    let path = cfg.cache.as_deref().map(|d| cache_path(d, cmd, &cfg.job));
    if let Some(doc) = path.as_deref().and_then(|p| load(p, cmd, &cfg.job)) {
        stats.hits.fetch_add(1, Ordering::SeqCst);
        return Ok(Outcome { document: doc, cache_hit: true });
    }
    let doc = compute(cmd, &cfg.job)?;
    stats.computed.fetch_add(1, Ordering::SeqCst);
    if let Some(p) = &path {
        // a cache that cannot be written only costs a recomputation later
        if let Err(e) = store(p, &doc) {
            eprintln!("warning: cache not written: {e}");
        }
    }
    Ok(Outcome { document: doc, cache_hit: false })
}
