//! Command-line front end.
//!
//! Exit codes: 0 success or certified, 1 usage, 2 outside the positive cone,
//! 3 evidence only, 4 data error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::Value;

use crate::choi::{choi_matrix, region_profile_with_tol, MapParams, RegionProfile};
use crate::error::{Error, Result};
use crate::faces::{classify, ClassifiedJson, ClassifiedPoint, DEFAULT_FACE_TOL};
use crate::json::{canonical_value_string, fmt_f64, parse_matrix, to_canonical_string};
use crate::linalg::{CMat, CVec, C64};
use crate::oracle::{
    is_ppt, positivity_cross_check, pptes_search, witness_expectation, DensityMatrix, DetectionReport, SearchConfig,
};
use crate::spanning::{certificate_for_params, det_m, det_m_closed_form, SpanningCertificate, VectorOrigin, Verdict};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_OUTSIDE: i32 = 2;
pub const EXIT_EVIDENCE_ONLY: i32 = 3;
pub const EXIT_DATA: i32 = 4;

/// Tolerance on trace and positivity of a state read from disk.
pub const STATE_FILE_TOL: f64 = 1e-8;

#[derive(Parser, Debug)]
#[command(name = "choi-witness", version, about = "Choi-type positive maps Phi[a,b,c] and their witnesses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Face of the parameter body and its (co-)optimality / (co-)spanning row
    Classify {
        #[command(flatten)]
        point: Point,
        #[arg(long, default_value_t = DEFAULT_FACE_TOL)]
        tol: f64,
        #[arg(long)]
        json: bool,
    },
    /// Dump W[a,b,c] or its partial transpose
    Choi {
        #[command(flatten)]
        point: Point,
        #[arg(long)]
        gamma: bool,
        #[arg(long, conflicts_with = "csv")]
        json: bool,
        #[arg(long)]
        csv: bool,
    },
    /// Spanning (or with --gamma co-spanning) certificate
    Span {
        #[command(flatten)]
        point: Point,
        #[arg(long)]
        gamma: bool,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Closed-form positivity against the product-vector minimum
    Positivity {
        #[command(flatten)]
        point: Point,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Region map over a parameter grid as CSV
    Sweep(SweepArgs),
    /// Witness expectation on a state file, or a search for a detected PPT state
    Detect {
        #[command(flatten)]
        point: Point,
        #[arg(long, value_name = "FILE", conflicts_with = "search", required_unless_present = "search")]
        state: Option<PathBuf>,
        #[arg(long)]
        search: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Debug, Clone, Copy)]
struct Point {
    #[arg(allow_negative_numbers = true)]
    a: f64,
    #[arg(allow_negative_numbers = true)]
    b: f64,
    #[arg(allow_negative_numbers = true)]
    c: f64,
}

impl Point {
    fn params(&self) -> Result<MapParams> {
        MapParams::new(self.a, self.b, self.c)
    }
}

/// `MIN:MAX:STEPS`, inclusive of both ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl GridRange {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        if steps < 2 {
            return Err(Error::InvalidArgument(format!("grid needs at least 2 steps, got {steps}")));
        }
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::InvalidArgument(format!("grid range needs min < max, got {min}..{max}")));
        }
        Ok(GridRange { min, max, steps })
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.steps {
            self.max
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64
        }
    }
}

impl FromStr for GridRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, steps] = parts.as_slice() else {
            return Err(format!("expected MIN:MAX:STEPS, got {s:?}"));
        };
        let min = min.parse::<f64>().map_err(|e| format!("bad min {min:?}: {e}"))?;
        let max = max.parse::<f64>().map_err(|e| format!("bad max {max:?}: {e}"))?;
        let steps = steps.parse::<usize>().map_err(|e| format!("bad steps {steps:?}: {e}"))?;
        GridRange::new(min, max, steps).map_err(|e| e.to_string())
    }
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, default_value = "0:3:7", allow_hyphen_values = true)]
    a: GridRange,
    #[arg(long, default_value = "0:3:7", allow_hyphen_values = true)]
    b: GridRange,
    #[arg(long, default_value = "0:3:7", allow_hyphen_values = true, conflicts_with = "section_sum")]
    c: GridRange,
    /// Restrict to the plane a + b + c = S (c is derived, negative c skipped)
    #[arg(long, value_name = "S")]
    section_sum: Option<f64>,
    /// Output file; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_FACE_TOL)]
    tol: f64,
}

/// Grid and tolerance of a region sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub a: GridRange,
    pub b: GridRange,
    pub grid_c: SweepThird,
    pub tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SweepThird {
    Range(GridRange),
    /// `c = sum - a - b`
    Section {
        sum: f64,
    },
}

pub const SWEEP_HEADER: &str =
    "a,b,c,face,t,positive,cp,ccp,decomposable,optimal,co_optimal,bi_optimal,spanning,co_spanning,bi_spanning";

impl SweepSpec {
    /// Grid points in output order: `a` slowest, the third coordinate fastest.
    pub fn points(&self) -> Result<Vec<MapParams>> {
        let mut pts = Vec::new();
        for i in 0..self.a.steps {
            let a = self.a.value(i);
            for j in 0..self.b.steps {
                let b = self.b.value(j);
                match self.grid_c {
                    SweepThird::Range(r) => {
                        for k in 0..r.steps {
                            pts.push(MapParams::new(a, b, r.value(k))?);
                        }
                    }
                    SweepThird::Section { sum } => {
                        let c = sum - a - b;
                        if c >= -self.tol {
                            pts.push(MapParams::new(a, b, c.max(0.0))?);
                        }
                    }
                }
            }
        }
        Ok(pts)
    }

    /// Full CSV text including the header line.
    pub fn csv(&self) -> Result<String> {
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("tolerance must be finite and >= 0, got {}", self.tol)));
        }
        let rows: Vec<Result<String>> =
            self.points()?.par_iter().map(|p| classify(p, self.tol).map(|cp| sweep_row(&cp))).collect();
        let mut text = String::from(SWEEP_HEADER);
        text.push('\n');
        for row in rows {
            text.push_str(&row?);
            text.push('\n');
        }
        Ok(text)
    }
}

fn sweep_row(cp: &ClassifiedPoint) -> String {
    let flag = |x: bool| if x { "1" } else { "0" };
    let [a, b, c] = cp.params.as_array();
    let t = cp.face.t().map(fmt_f64).unwrap_or_default();
    let r = &cp.region;
    let mut fields = vec![
        fmt_f64(a),
        fmt_f64(b),
        fmt_f64(c),
        cp.face.name().to_string(),
        t,
        flag(r.positive).into(),
        flag(r.completely_positive).into(),
        flag(r.completely_copositive).into(),
        flag(r.decomposable).into(),
    ];
    // A non-positive map has none of the witness properties.
    let pr = cp.profile.unwrap_or_default();
    for x in [pr.optimal, pr.co_optimal, pr.bi_optimal, pr.spanning, pr.co_spanning, pr.bi_spanning] {
        fields.push(flag(x).into());
    }
    fields.join(",")
}

/// Parse `args` (program name first), run the command, return the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParams(_) | Error::InvalidArgument(_) => EXIT_USAGE,
        Error::OutsideCone(_) | Error::NotPositive { .. } => EXIT_OUTSIDE,
        _ => EXIT_DATA,
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Classify { point, tol, json } => {
            if !(tol >= 0.0 && tol.is_finite()) {
                return Err(Error::InvalidArgument(format!("--tol must be finite and >= 0, got {tol}")));
            }
            let cp = classify(&point.params()?, tol)?;
            if json {
                writeln!(out, "{}", to_canonical_string(&ClassifiedJson::from(&cp))?)?;
            } else {
                write_classified(out, &cp)?;
            }
            Ok(if cp.region.positive { EXIT_OK } else { EXIT_OUTSIDE })
        }
        Command::Choi { point, gamma, json, csv } => {
            let p = point.params()?;
            let mut w = choi_matrix(&p);
            if gamma {
                w = w.partial_transpose();
            }
            if json {
                writeln!(out, "{}", to_canonical_string(&w.to_json())?)?;
            } else if csv {
                write_matrix_csv(out, w.matrix().as_cmat())?;
            } else {
                writeln!(out, "W{}{}", bracket(&p), if gamma { "^Gamma" } else { "" })?;
                write_matrix_text(out, w.matrix().as_cmat())?;
            }
            Ok(EXIT_OK)
        }
        Command::Span { point, gamma, restarts, seed, json } => {
            let p = point.params()?;
            require_positive(&p)?;
            let cfg = SearchConfig { restarts, seed, ..SearchConfig::default() };
            let cert = certificate_for_params(&p, gamma, &cfg)?;
            let det = if p.b() > 0.0 && p.c() > 0.0 { Some((det_m(&p)?, det_m_closed_form(&p))) } else { None };
            if json {
                let mut v = serde_json::to_value(cert.to_json())?;
                if let (Some((d, closed)), Value::Object(map)) = (det, &mut v) {
                    map.insert("det_m".into(), d.into());
                    map.insert("det_m_closed_form".into(), closed.into());
                }
                writeln!(out, "{}", canonical_value_string(&v)?)?;
            } else {
                write_certificate(out, &p, gamma, &cert, det)?;
            }
            Ok(match cert.verdict {
                Verdict::Certified => EXIT_OK,
                Verdict::EvidenceOnly => EXIT_EVIDENCE_ONLY,
            })
        }
        Command::Positivity { point, restarts, seed } => {
            let p = point.params()?;
            let cfg = SearchConfig { restarts, seed, ..SearchConfig::default() };
            let report = positivity_cross_check(&p, &cfg)?;
            writeln!(out, "seed         {seed}")?;
            writeln!(out, "map          Phi{}", bracket(&p))?;
            writeln!(out, "closed form  {}", if report.verdict_closed { "positive" } else { "not positive" })?;
            writeln!(out, "oracle min   {}", human(report.min_found))?;
            writeln!(out, "argmin xi    {}", vec_text(report.argmin.xi()))?;
            writeln!(out, "argmin eta   {}", vec_text(report.argmin.eta()))?;
            writeln!(out, "agree        {}", yes_no(report.agree))?;
            Ok(EXIT_OK)
        }
        Command::Sweep(args) => {
            let spec = SweepSpec {
                a: args.a,
                b: args.b,
                grid_c: match args.section_sum {
                    Some(sum) if sum.is_finite() => SweepThird::Section { sum },
                    Some(sum) => return Err(Error::InvalidArgument(format!("bad section sum {sum}"))),
                    None => SweepThird::Range(args.c),
                },
                tol: args.tol,
            };
            let text = spec.csv()?;
            match args.out {
                Some(path) => {
                    fs::write(&path, &text)?;
                    let rows = text.lines().count() - 1;
                    writeln!(out, "wrote {rows} rows to {}", path.display())?;
                }
                None => out.write_all(text.as_bytes())?,
            }
            Ok(EXIT_OK)
        }
        Command::Detect { point, state, search, seed } => {
            let p = point.params()?;
            require_positive(&p)?;
            let w = choi_matrix(&p);
            if search {
                let cfg = SearchConfig::with_seed(seed);
                let report = pptes_search(&w, &cfg)?;
                write_detection(out, &p, &report)?;
                return Ok(EXIT_OK);
            }
            let path = state.expect("clap enforces --state or --search");
            let rho = read_state(&path)?;
            let value = witness_expectation(w.matrix(), &rho)?;
            let (ppt, margin) = is_ppt(&rho, STATE_FILE_TOL);
            writeln!(out, "witness      W{}", bracket(&p))?;
            writeln!(out, "state        {}", path.display())?;
            writeln!(out, "expectation  {}", human(value))?;
            writeln!(out, "ppt margin   {}", human(margin))?;
            if value < 0.0 {
                writeln!(out, "DETECTED")?;
                if ppt {
                    writeln!(out, "PPTES DETECTED")?;
                }
            } else {
                writeln!(out, "not detected")?;
            }
            Ok(EXIT_OK)
        }
    }
}

/// Positivity within the face tolerance, so boundary points typed in decimal
/// (`1/3` as `0.3333333333333333`) are accepted.
fn require_positive(p: &MapParams) -> Result<()> {
    if region_profile_with_tol(p, DEFAULT_FACE_TOL).positive {
        Ok(())
    } else {
        Err(Error::OutsideCone(format!("Phi{}", bracket(p))))
    }
}

/// Matrix JSON, Hermitian, trace one and PSD, each within [`STATE_FILE_TOL`].
pub fn read_state(path: &std::path::Path) -> Result<DensityMatrix> {
    let text = fs::read_to_string(path)?;
    let m = parse_matrix(&text)?;
    if m.dim() != 9 {
        return Err(Error::DimensionMismatch { expected: 9, found: m.dim() });
    }
    let asym = m.max_asymmetry();
    if asym > STATE_FILE_TOL {
        return Err(Error::NotHermitian { max_asymmetry: asym });
    }
    DensityMatrix::new_with_tol(m.hermitian_part(), STATE_FILE_TOL)
}

fn bracket(p: &MapParams) -> String {
    format!("[{}, {}, {}]", human(p.a()), human(p.b()), human(p.c()))
}

fn yes_no(x: bool) -> &'static str {
    if x {
        "Y"
    } else {
        "N"
    }
}

/// Shortest round-trip digits, in exponent form outside `[1e-4, 1e7)`.
pub fn human(x: f64) -> String {
    let m = x.abs();
    if m == 0.0 || !m.is_finite() || (1e-4..1e7).contains(&m) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn complex_text(z: C64) -> String {
    if z.im == 0.0 {
        human(z.re)
    } else if z.im.is_sign_negative() {
        format!("{}-{}i", human(z.re), human(-z.im))
    } else {
        format!("{}+{}i", human(z.re), human(z.im))
    }
}

fn vec_text(v: &CVec) -> String {
    let cells: Vec<String> = v.entries().iter().map(|&z| complex_text(z)).collect();
    format!("({})", cells.join(", "))
}

fn write_matrix_text(out: &mut dyn Write, m: &CMat) -> io::Result<()> {
    let cells: Vec<String> = m.entries().iter().map(|&z| complex_text(z)).collect();
    let width = cells.iter().map(String::len).max().unwrap_or(0);
    for row in cells.chunks(m.dim()) {
        let line: Vec<String> = row.iter().map(|c| format!("{c:>width$}")).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

/// One line per row, cells `re+imj` at 17 significant digits.
fn write_matrix_csv(out: &mut dyn Write, m: &CMat) -> io::Result<()> {
    for row in m.entries().chunks(m.dim()) {
        let line: Vec<String> = row
            .iter()
            .map(|z| {
                let sign = if z.im.is_sign_negative() { "-" } else { "+" };
                format!("{}{sign}{}j", fmt_f64(z.re), fmt_f64(z.im.abs()))
            })
            .collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

fn write_classified(out: &mut dyn Write, cp: &ClassifiedPoint) -> io::Result<()> {
    writeln!(out, "map       Phi{}", bracket(&cp.params))?;
    match cp.face.t() {
        Some(t) => writeln!(out, "face      {} (t = {})", cp.face.name(), human(t))?,
        None => writeln!(out, "face      {}", cp.face.name())?,
    }
    write_region(out, &cp.region)?;
    match &cp.profile {
        Some(pr) => {
            writeln!(out, "          Span  Co-span  Bi-span  Opt  Co-opt  Bi-opt")?;
            writeln!(
                out,
                "profile   {:<6}{:<9}{:<9}{:<5}{:<8}{}",
                yes_no(pr.spanning),
                yes_no(pr.co_spanning),
                yes_no(pr.bi_spanning),
                yes_no(pr.optimal),
                yes_no(pr.co_optimal),
                yes_no(pr.bi_optimal)
            )?;
        }
        None => writeln!(out, "profile   none: not a positive map")?,
    }
    if let Some(note) = &cp.notes {
        writeln!(out, "note      {note}")?;
    }
    Ok(())
}

fn write_region(out: &mut dyn Write, r: &RegionProfile) -> io::Result<()> {
    writeln!(
        out,
        "region    positive={} cp={} ccp={} decomposable={}",
        yes_no(r.positive),
        yes_no(r.completely_positive),
        yes_no(r.completely_copositive),
        yes_no(r.decomposable)
    )?;
    let m = &r.margins;
    writeln!(
        out,
        "margins   sum={} curve={} cp={} ccp={} decomposable={}",
        human(m.sum),
        human(m.curve),
        human(m.cp),
        human(m.ccp),
        human(m.decomposable)
    )
}

fn write_certificate(
    out: &mut dyn Write,
    p: &MapParams,
    gamma: bool,
    cert: &SpanningCertificate,
    det: Option<(f64, f64)>,
) -> io::Result<()> {
    writeln!(out, "seed        {}", cert.cfg.seed)?;
    writeln!(out, "witness     W{}{}", bracket(p), if gamma { "^Gamma" } else { "" })?;
    writeln!(out, "target      {}", if gamma { "CO_SPANNING" } else { "SPANNING" })?;
    writeln!(out, "restarts    {}", cert.cfg.restarts)?;
    writeln!(out, "candidates  {}", cert.candidates)?;
    writeln!(out, "rank        {} (tol {}, zero tol {})", cert.rank, human(cert.tol), human(cert.zero_tol))?;
    writeln!(out, "min rel sv  {}", human(cert.smallest_relative_singular_value()))?;
    if let Some((d, closed)) = det {
        writeln!(out, "det_m       {}", human(d))?;
        writeln!(out, "closed form {}", human(closed))?;
    }
    for (n, v) in cert.vectors.iter().enumerate() {
        let origin = match v.origin {
            VectorOrigin::Family { k, theta, sigma } => {
                format!("family k={k} theta={} sigma={}", human(theta), human(sigma))
            }
            VectorOrigin::Search { restart } => format!("search restart {restart}"),
            VectorOrigin::BasisStart { i, j } => format!("basis start e{i} x e{j}"),
        };
        writeln!(out, "  [{n}] value {:e}  {origin}", v.value)?;
        writeln!(out, "      xi  {}", vec_text(v.vector.xi()))?;
        writeln!(out, "      eta {}", vec_text(v.vector.eta()))?;
    }
    let verdict = match cert.verdict {
        Verdict::Certified => "CERTIFIED",
        Verdict::EvidenceOnly => "EVIDENCE_ONLY",
    };
    writeln!(out, "verdict     {verdict}")
}

fn write_detection(out: &mut dyn Write, p: &MapParams, r: &DetectionReport) -> io::Result<()> {
    writeln!(out, "seed           {}", r.seed)?;
    writeln!(out, "witness        W{}", bracket(p))?;
    writeln!(
        out,
        "status         {}",
        match r.status {
            crate::oracle::DetectionStatus::Found => "FOUND",
            crate::oracle::DetectionStatus::NotFound => "NOT_FOUND",
        }
    )?;
    writeln!(out, "witness value  {}", human(r.witness_value))?;
    writeln!(out, "ppt margin     {}", human(r.ppt_margin))?;
    writeln!(out, "iterations     {} of {}", r.iterations, r.budget)?;
    if let Some(note) = &r.note {
        writeln!(out, "note           {note}")?;
    }
    Ok(())
}
