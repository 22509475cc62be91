//! Run reports and their file formats (JSON report, CSV iterates, SVG plot).

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{ShallowModel, SolverConfig};
use crate::problem::ProblemSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    #[serde(rename = "J")]
    pub energy: f64,
    pub e_n: Option<f64>,
    pub xi: Option<f64>,
    pub ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementRecord {
    pub n: usize,
    pub e_n: Option<f64>,
    pub xi: f64,
    pub r: Option<f64>,
    /// Inner solver iterations spent at this size.
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub alpha: f64,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl From<&ShallowModel> for ModelSnapshot {
    fn from(m: &ShallowModel) -> Self {
        Self {
            alpha: m.alpha(),
            b: m.breakpoints().to_vec(),
            c: m.coefficients().to_vec(),
        }
    }
}

impl ModelSnapshot {
    pub fn to_model(&self) -> Result<ShallowModel> {
        ShallowModel::new(self.alpha, self.b.clone(), self.c.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub problem: String,
    pub method: String,
    pub config: SolverConfig,
    pub iterations: Vec<IterationRecord>,
    pub refinements: Vec<RefinementRecord>,
    pub model: ModelSnapshot,
    pub seed: u64,
}

impl RunReport {
    pub fn new(problem: &str, method: &str, config: &SolverConfig, model: &ShallowModel) -> Self {
        Self {
            problem: problem.to_string(),
            method: method.to_string(),
            config: config.clone(),
            iterations: Vec::new(),
            refinements: Vec::new(),
            model: model.into(),
            seed: config.seed,
        }
    }

    pub fn final_error(&self) -> Option<f64> {
        self.refinements
            .last()
            .and_then(|r| r.e_n)
            .or_else(|| self.iterations.last().and_then(|r| r.e_n))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Iterates as CSV: `k,J,e_n,xi,ms`. Missing values are empty fields.
    pub fn iterations_csv(&self) -> String {
        let mut out = String::from("k,J,e_n,xi,ms\n");
        for r in &self.iterations {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.k,
                fmt_f64(r.energy),
                fmt_opt(r.e_n),
                fmt_opt(r.xi),
                fmt_f64(r.ms)
            );
        }
        out
    }
}

/// Round-trip float format with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Write via a temporary sibling file and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Static SVG of `u_n` against the exact solution (when known) with a rug
/// of breakpoint marks along the bottom axis.
pub fn render_svg(model: &ShallowModel, problem: &ProblemSpec, title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 40.0;
    let samples = 400;
    let xs: Vec<f64> = (0..=samples).map(|i| i as f64 / samples as f64).collect();
    let approx: Vec<f64> = xs.iter().map(|&x| model.evaluate(x)).collect();
    let exact: Option<Vec<f64>> = problem.exact().map(|e| {
        xs.iter()
            .map(|&x| (e.u)(x))
            .map(|v| if v.is_finite() { v } else { 0.0 })
            .collect()
    });
    let mut lo = approx.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = approx.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if let Some(ex) = &exact {
        lo = ex.iter().copied().fold(lo, f64::min);
        hi = ex.iter().copied().fold(hi, f64::max);
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let sx = |x: f64| PAD + x * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - lo) / (hi - lo) * (H - 2.0 * PAD);
    let polyline = |ys: &[f64]| {
        xs.iter()
            .zip(ys)
            .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{PAD}" y1="{y}" x2="{x2}" y2="{y}" stroke="black"/>"#,
        y = H - PAD,
        x2 = W - PAD
    );
    if let Some(ex) = &exact {
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#,
            polyline(ex)
        );
    }
    let _ = writeln!(
        svg,
        r#"<polyline fill="none" stroke="crimson" stroke-width="1.5" stroke-dasharray="5,3" points="{}"/>"#,
        polyline(&approx)
    );
    for &b in model.breakpoints() {
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{y1}" stroke="black"/>"#,
            x = sx(b),
            y0 = H - PAD,
            y1 = H - PAD + 8.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_problem, ProblemId};

    #[test]
    fn json_uses_flat_keys() {
        let m = ShallowModel::uniform(2, 0.0);
        let mut r = RunReport::new("exp_solution", "dbn", &SolverConfig::default(), &m);
        r.iterations.push(IterationRecord { k: 0, energy: -1.5, e_n: Some(0.2), xi: None, ms: 0.1 });
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        for key in ["problem", "method", "config", "iterations", "refinements", "model", "seed"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let it = &v["iterations"][0];
        for key in ["k", "J", "e_n", "xi", "ms"] {
            assert!(it.get(key).is_some(), "missing iteration key {key}");
        }
        for key in ["alpha", "b", "c"] {
            assert!(v["model"].get(key).is_some());
        }
    }

    #[test]
    fn csv_format_is_fixed_width_scientific() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn svg_contains_rug_marks() {
        let p = make_problem(&ProblemId::ExpSolution).unwrap();
        let m = ShallowModel::uniform(5, 0.0);
        let svg = render_svg(&m, &p, "u_n vs u");
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<line").count(), 1 + 5);
    }
}
