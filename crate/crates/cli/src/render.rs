use std::io::Write;

use racah::OverlapMatrix;

use crate::commands::{CliError, Report};
use crate::config::{ConfigError, Format};

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn label(l: &[usize]) -> String {
    format!("({})", l.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";"))
}

fn matrix_rows(w: &mut csv::Writer<Vec<u8>>, name: &str, m: &nalgebra::DMatrix<f64>) -> csv::Result<()> {
    for r in 0..m.nrows() {
        let mut rec = vec![name.to_string(), r.to_string()];
        rec.extend(m.row(r).iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    Ok(())
}

/// Rows labelled by index tuples, row eigenvalues as extra columns, one column per column label.
fn overlap_csv(w: &mut csv::Writer<Vec<u8>>, o: &OverlapMatrix) -> csv::Result<()> {
    let mut header: Vec<String> = o.row_nodes.iter().map(|s| format!("label {s}")).collect();
    header.extend(o.row_nodes.iter().map(|s| format!("eigenvalue {s}")));
    header.extend(o.col_labels.iter().map(|l| label(l)));
    w.write_record(&header)?;
    for (r, labels) in o.row_labels.iter().enumerate() {
        let mut rec: Vec<String> = labels.iter().map(|x| x.to_string()).collect();
        rec.extend(o.row_eigenvalues[r].iter().map(|x| x.to_string()));
        rec.extend(o.b.row(r).iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    Ok(())
}

fn csv_bytes(report: &Report) -> csv::Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    match report {
        Report::Verify(rs) => {
            w.write_record(["relation", "indices", "residual", "passed", "skipped"])?;
            for r in rs {
                w.write_record([
                    r.relation.clone(),
                    join(&r.indices),
                    r.residual.to_string(),
                    r.passed.to_string(),
                    r.skipped.clone().unwrap_or_default(),
                ])?;
            }
        }
        Report::Trees(ts) => {
            w.write_record(["index", "tree"])?;
            for (i, t) in ts.iter().enumerate() {
                w.write_record([i.to_string(), t.clone()])?;
            }
        }
        Report::Graph(g) => {
            w.write_record(["from", "to", "removed", "added"])?;
            for e in &g.edges {
                w.write_record([e.from.clone(), e.to.clone(), e.removed.to_string(), e.added.to_string()])?;
            }
        }
        Report::Spectrum(s) => {
            w.write_record(["sector", "dim", "q_total", "tree", "labels", "eigenvalues"])?;
            for sec in &s.sectors {
                let head = [sec.index.to_string(), sec.dim.to_string(), sec.q_total.to_string()];
                match &sec.basis {
                    Some(b) => {
                        for (l, e) in b.labels.iter().zip(&b.eigenvalues) {
                            let mut rec = head.to_vec();
                            rec.extend([b.tree.clone(), label(l), join(e)]);
                            w.write_record(&rec)?;
                        }
                    }
                    None => {
                        let mut rec = head.to_vec();
                        rec.extend([String::new(), String::new(), String::new()]);
                        w.write_record(&rec)?;
                    }
                }
            }
        }
        Report::Overlap(o) => overlap_csv(&mut w, &o.overlap)?,
        Report::Ninej(n) => overlap_csv(&mut w, &n.nine_j.overlap)?,
        Report::Krawtchouk(k) => {
            w.write_record(["k", "x", "p", "N", "value"])?;
            for v in &k.values {
                w.write_record([v.k.to_string(), v.x.to_string(), k.p.to_string(), k.big_n.to_string(), v.value.to_string()])?;
            }
        }
        Report::Rotation(r) => {
            let dim = r.closed_form.as_ref().map(|m| m.dim()).or(r.numeric.as_ref().map(|c| c.u.dim())).unwrap_or(0);
            let mut header = vec!["source".to_string(), "row".to_string()];
            header.extend((0..dim).map(|c| format!("c{c}")));
            w.write_record(&header)?;
            if let Some(m) = &r.closed_form {
                matrix_rows(&mut w, "closed_form", &m.m)?;
            }
            if let Some(c) = &r.numeric {
                matrix_rows(&mut w, "numeric", &c.u.m)?;
            }
        }
    }
    w.into_inner().map_err(|e| csv::Error::from(e.into_error()))
}

pub fn render(report: &Report, format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(report).map_err(std::io::Error::from)?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => csv_bytes(report).map_err(|e| CliError::Io(std::io::Error::other(e))),
        Format::Dot => match report {
            Report::Graph(g) => Ok(g.dot.clone().into_bytes()),
            _ => Err(ConfigError::Invalid("--format dot is only available for the graph command".into()).into()),
        },
    }
}

pub fn write_out(bytes: &[u8], out: Option<&std::path::Path>) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, bytes)?,
        None => std::io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}
