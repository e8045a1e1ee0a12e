//! Self-describing two-column CSV: `# key=value` header lines, a `t,value`
//! row, then data rows with 17 significant digits.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use crate::config::{parse_range, CorrelationConfig, PsiMode, Scaling};
use crate::error::{Error, Result};
use crate::ring::FieldParams;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub header: Vec<(String, String)>,
    pub rows: Vec<(f64, f64)>,
}

impl CsvTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends or replaces a header entry.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.header.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.header.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_parsed<T: FromStr>(&self, key: &'static str) -> Result<T> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::param(key, "missing from CSV header"))?;
        raw.parse()
            .map_err(|_| Error::param(key, format!("unparsable header value `{raw}`")))
    }

    /// Records the configuration keys read back by [`CsvTable::config`].
    pub fn set_config(&mut self, cfg: &CorrelationConfig) {
        self.set("field", cfg.field.d_k());
        self.set("alpha", cfg.alpha);
        self.set("beta", cfg.scaling.beta);
        self.set("coef", cfg.scaling.coef);
        self.set("n", cfg.n_cap);
        self.set("psi", cfg.psi);
        self.set("bin_width", cfg.bin_width);
        self.set("range", format!("{}:{}", cfg.range.0, cfg.range.1));
    }

    /// Rebuilds the run configuration from the header.
    pub fn config(&self) -> Result<CorrelationConfig> {
        let field = FieldParams::new(self.get_parsed("field")?)?;
        let scaling = Scaling {
            coef: self.get_parsed("coef")?,
            beta: self.get_parsed("beta")?,
        };
        let psi: PsiMode = self
            .get("psi")
            .ok_or_else(|| Error::param("psi", "missing from CSV header"))?
            .parse()?;
        let (lo, hi) = parse_range(
            self.get("range")
                .ok_or_else(|| Error::param("range", "missing from CSV header"))?,
            "range",
        )?;
        Ok(
            CorrelationConfig::new(field, self.get_parsed("alpha")?, scaling, self.get_parsed("n")?)
                .with_psi(psi)
                .with_bins(self.get_parsed("bin_width")?, lo, hi),
        )
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.header {
            let _ = writeln!(s, "# {k}={v}");
        }
        s.push_str("t,value\n");
        for (t, v) in &self.rows {
            let _ = writeln!(s, "{t:.16e},{v:.16e}");
        }
        s
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.render().as_bytes())?;
        w.flush()
    }

    pub fn read_from<R: BufRead>(r: R) -> io::Result<Self> {
        let bad = |line: usize, msg: &str| {
            io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: {msg}"))
        };
        let mut table = CsvTable::new();
        let mut seen_columns = false;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest
                    .trim()
                    .split_once('=')
                    .ok_or_else(|| bad(i + 1, "header line without `=`"))?;
                table.header.push((k.trim().to_string(), v.trim().to_string()));
            } else if !seen_columns {
                if line != "t,value" {
                    return Err(bad(i + 1, "expected `t,value` column row"));
                }
                seen_columns = true;
            } else {
                let (a, b) = line
                    .split_once(',')
                    .ok_or_else(|| bad(i + 1, "expected two columns"))?;
                let t = a.trim().parse().map_err(|_| bad(i + 1, "bad number"))?;
                let v = b.trim().parse().map_err(|_| bad(i + 1, "bad number"))?;
                table.rows.push((t, v));
            }
        }
        if !seen_columns {
            return Err(bad(0, "no `t,value` column row"));
        }
        Ok(table)
    }

    pub fn ts(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.0).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.1).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let cfg = CorrelationConfig::new(
            FieldParams::new(-7).unwrap(),
            0.15,
            Scaling {
                coef: 1.5,
                beta: 0.85,
            },
            3000,
        )
        .with_psi(PsiMode::Power(2.3))
        .with_bins(0.1, -2.0, 2.0);
        let mut t = CsvTable::new();
        t.set_config(&cfg);
        t.set("case_id", "experimental");
        t.rows = vec![(0.1, 1.0 / 3.0), (-2.5e-300, f64::MAX), (1e-7, 0.0)];
        let text = t.render();
        let back = CsvTable::read_from(text.as_bytes()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.config().unwrap(), cfg);
        assert_eq!(back.render(), text);
    }

    #[test]
    fn rejects_malformed() {
        assert!(CsvTable::read_from("# a=1\n1,2\n".as_bytes()).is_err());
        assert!(CsvTable::read_from("t,value\n1;2\n".as_bytes()).is_err());
        assert!(CsvTable::read_from("# a\nt,value\n".as_bytes()).is_err());
    }
}
