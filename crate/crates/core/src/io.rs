//! File formats: point-pattern CSV, plain-text rasters, chain CSV, and the
//! JSON/CSV report forms.
//!
//! All writers format floats with Rust's shortest round-trip representation
//! and fixed field order, so identical inputs produce byte-identical files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::covariate::Raster;
use crate::criteria::{DicResult, LpmlResult};
use crate::error::{Error, Result};
use crate::geom::{Point, PointPattern, Region};
use crate::mcmc::{Chain, PosteriorSummary};
use crate::selection::{SelectionReport, StudyReport};

/// Read a point pattern from CSV with header `x,y`; the region comes from
/// the caller.
pub fn read_pattern_csv(path: &Path, region: Region) -> Result<PointPattern> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(path, "empty file"))?
        .map_err(|e| Error::io(path, e))?;
    if header.trim() != "x,y" {
        return Err(Error::parse(
            path,
            format!("expected header 'x,y', got '{header}'"),
        ));
    }
    let mut points = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let x = parts
            .next()
            .and_then(|v| v.trim().parse::<f64>().ok())
            .ok_or_else(|| Error::parse(path, format!("bad x on line {}", lineno + 2)))?;
        let y = parts
            .next()
            .and_then(|v| v.trim().parse::<f64>().ok())
            .ok_or_else(|| Error::parse(path, format!("bad y on line {}", lineno + 2)))?;
        points.push(Point::new(x, y));
    }
    PointPattern::new(points, region)
}

pub fn write_pattern_csv(path: &Path, pattern: &PointPattern) -> Result<()> {
    let mut w = buf_writer(path)?;
    writeln!(w, "x,y").map_err(|e| Error::io(path, e))?;
    for p in pattern.points() {
        writeln!(w, "{},{}", p.x, p.y).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read a raster file: header `nx ny xmin xmax ymin ymax` then `nx * ny`
/// whitespace-separated values row-major from the minimum-y row upward.
pub fn read_raster(path: &Path) -> Result<Raster> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut tokens: Vec<String> = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        tokens.extend(line.split_whitespace().map(str::to_string));
    }
    if tokens.len() < 6 {
        return Err(Error::parse(path, "missing raster header"));
    }
    let nx: usize = tokens[0]
        .parse()
        .map_err(|_| Error::parse(path, "bad nx"))?;
    let ny: usize = tokens[1]
        .parse()
        .map_err(|_| Error::parse(path, "bad ny"))?;
    let mut bounds = [0.0f64; 4];
    for (i, b) in bounds.iter_mut().enumerate() {
        *b = tokens[2 + i]
            .parse()
            .map_err(|_| Error::parse(path, "bad region bound"))?;
    }
    let region = Region::new(bounds[0], bounds[1], bounds[2], bounds[3])?;
    let expected = nx * ny;
    if tokens.len() != 6 + expected {
        return Err(Error::parse(
            path,
            format!("expected {} values, found {}", expected, tokens.len() - 6),
        ));
    }
    let values = tokens[6..]
        .iter()
        .map(|t| t.parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::parse(path, "bad raster value"))?;
    Raster::new(nx, ny, region, values)
}

pub fn write_raster(path: &Path, raster: &Raster) -> Result<()> {
    let mut w = buf_writer(path)?;
    let r = raster.region();
    writeln!(
        w,
        "{} {} {} {} {} {}",
        raster.nx(),
        raster.ny(),
        r.xmin,
        r.xmax,
        r.ymin,
        r.ymax
    )
    .map_err(|e| Error::io(path, e))?;
    for row in raster.values().chunks(raster.nx()) {
        let line = row
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Chain CSV: header `iter,lambda0,beta_...` with original iteration numbers.
pub fn write_chain_csv(path: &Path, chain: &Chain) -> Result<()> {
    let mut w = buf_writer(path)?;
    writeln!(w, "iter,{}", chain.param_names().join(",")).map_err(|e| Error::io(path, e))?;
    for (i, t) in chain.samples().iter().enumerate() {
        let mut line = format!("{},{}", chain.iteration_of(i), t.lambda0);
        for b in &t.beta {
            line.push(',');
            line.push_str(&b.to_string());
        }
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_summary_json(path: &Path, summary: &PosteriorSummary) -> Result<()> {
    write_json(path, summary)
}

#[derive(Serialize)]
struct CriteriaJson<'a> {
    model: &'a str,
    dic: f64,
    p_d: f64,
    lpml: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    event_terms_file: Option<&'a str>,
}

/// Criteria report: `{model, dic, p_d, lpml, event_terms_file?}`.
pub fn write_criteria_json(
    path: &Path,
    model: &str,
    dic: &DicResult,
    lpml: &LpmlResult,
    event_terms_file: Option<&str>,
) -> Result<()> {
    write_json(
        path,
        &CriteriaJson {
            model,
            dic: dic.dic,
            p_d: dic.p_d,
            lpml: lpml.lpml,
            event_terms_file,
        },
    )
}

/// Per-event LPML terms, one `log lambda~(s_j)` per line, CSV with header.
pub fn write_event_terms_csv(path: &Path, lpml: &LpmlResult) -> Result<()> {
    let mut w = buf_writer(path)?;
    writeln!(w, "event,log_cpo_term").map_err(|e| Error::io(path, e))?;
    for (j, term) in lpml.event_terms.iter().enumerate() {
        writeln!(w, "{j},{term}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Selection table rows: `model,dic,p_d,lpml` with failed rows marked.
pub fn write_selection_csv(path: &Path, report: &SelectionReport) -> Result<()> {
    let mut w = buf_writer(path)?;
    writeln!(w, "model,dic,p_d,lpml,status").map_err(|e| Error::io(path, e))?;
    for row in &report.rows {
        match row.scored() {
            Some(s) => writeln!(
                w,
                "{},{},{},{},ok",
                row.label, s.dic.dic, s.dic.p_d, s.lpml.lpml
            )
            .map_err(|e| Error::io(path, e))?,
            None => writeln!(w, "{},,,,failed", row.label).map_err(|e| Error::io(path, e))?,
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_selection_json(path: &Path, report: &SelectionReport) -> Result<()> {
    write_json(path, report)
}

/// Study table: `model,avg_dic,avg_lpml,dic_sel_pct,lpml_sel_pct`.
pub fn write_study_csv(path: &Path, report: &StudyReport) -> Result<()> {
    let mut w = buf_writer(path)?;
    writeln!(w, "model,avg_dic,avg_lpml,dic_sel_pct,lpml_sel_pct")
        .map_err(|e| Error::io(path, e))?;
    for row in &report.rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            row.label, row.avg_dic, row.avg_lpml, row.dic_sel_pct, row.lpml_sel_pct
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Median/IQR differences against the reference model, one row per
/// non-reference candidate.
pub fn write_study_diffs_csv(path: &Path, report: &StudyReport) -> Result<()> {
    let mut w = buf_writer(path)?;
    writeln!(
        w,
        "model,dic_diff_median,dic_diff_q1,dic_diff_q3,lpml_diff_median,lpml_diff_q1,lpml_diff_q3"
    )
    .map_err(|e| Error::io(path, e))?;
    for (m, row) in report.rows.iter().enumerate() {
        if m == report.reference_index {
            continue;
        }
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            row.label,
            row.dic_diff_median,
            row.dic_diff_q1,
            row.dic_diff_q3,
            row.lpml_diff_median,
            row.lpml_diff_q1,
            row.lpml_diff_q3
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_study_json(path: &Path, report: &StudyReport) -> Result<()> {
    write_json(path, report)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| Error::parse(path, format!("serialization failed: {e}")))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn buf_writer(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::Theta;

    fn tmpdir() -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("nhpp-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn pattern_csv_round_trip() {
        let dir = tmpdir();
        let path = dir.join("pattern.csv");
        let region = Region::unit_square();
        let pattern =
            PointPattern::new(vec![Point::new(0.125, 0.5), Point::new(0.99, 0.01)], region)
                .unwrap();
        write_pattern_csv(&path, &pattern).unwrap();
        let back = read_pattern_csv(&path, region).unwrap();
        assert_eq!(pattern, back);
    }

    #[test]
    fn pattern_csv_rejects_bad_header() {
        let dir = tmpdir();
        let path = dir.join("bad.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(matches!(
            read_pattern_csv(&path, Region::unit_square()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn raster_round_trip() {
        let dir = tmpdir();
        let path = dir.join("raster.txt");
        let region = Region::new(0.0, 2.0, -1.0, 1.0).unwrap();
        let raster = Raster::new(3, 2, region, vec![1.0, 2.5, -3.0, 0.125, 4.0, 5.0]).unwrap();
        write_raster(&path, &raster).unwrap();
        let back = read_raster(&path).unwrap();
        assert_eq!(raster, back);
    }

    #[test]
    fn raster_value_count_checked() {
        let dir = tmpdir();
        let path = dir.join("short.txt");
        std::fs::write(&path, "2 2 0 1 0 1\n1 2 3\n").unwrap();
        assert!(matches!(read_raster(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn chain_csv_header_and_rows() {
        let dir = tmpdir();
        let path = dir.join("chain.csv");
        let chain = Chain::from_samples(vec![
            Theta::new(1.5, vec![0.25]).unwrap(),
            Theta::new(2.0, vec![-0.5]).unwrap(),
        ])
        .unwrap();
        write_chain_csv(&path, &chain).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "iter,lambda0,beta_1");
        assert_eq!(lines[1], "0,1.5,0.25");
        assert_eq!(lines[2], "1,2,-0.5");
    }

    #[test]
    fn writes_are_byte_identical() {
        let dir = tmpdir();
        let region = Region::unit_square();
        let pattern = PointPattern::new(vec![Point::new(1.0 / 3.0, 2.0 / 3.0)], region).unwrap();
        let p1 = dir.join("a.csv");
        let p2 = dir.join("b.csv");
        write_pattern_csv(&p1, &pattern).unwrap();
        write_pattern_csv(&p2, &pattern).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }
}
