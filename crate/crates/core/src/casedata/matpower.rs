use std::fmt::Write as _;

use super::{Branch, Bus, BusKind, CaseError, Generator, NetworkCase, Status};

const BUS_COLS: usize = 13;
const GEN_COLS: usize = 10;
const BRANCH_COLS: usize = 11;

struct Matrix {
    rows: Vec<Vec<f64>>,
    line: usize,
}

/// Character cursor that tracks line/column for diagnostics.
struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Cursor {
            chars: strip_comments(src).chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
            _src: src,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars()
            .enumerate()
            .all(|(k, c)| self.chars.get(self.pos + k) == Some(&c))
    }

    fn skip_inline_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t' | '\r')) {
            self.bump();
        }
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn error(&self, message: impl Into<String>) -> CaseError {
        CaseError::Syntax {
            line: self.line,
            column: self.col,
            message: message.into(),
        }
    }

    fn ident(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn number(&mut self) -> Result<f64, CaseError> {
        let (line, col) = (self.line, self.col);
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '+' | '-') {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        let parsed = match s.as_str() {
            "Inf" | "inf" | "+Inf" => Some(f64::INFINITY),
            "-Inf" | "-inf" => Some(f64::NEG_INFINITY),
            _ => s.parse::<f64>().ok(),
        };
        parsed.ok_or_else(|| CaseError::Syntax {
            line,
            column: col,
            message: format!("invalid number '{s}'"),
        })
    }

    fn matrix(&mut self) -> Result<Matrix, CaseError> {
        let line = self.line;
        self.bump(); // '['
        let mut rows = Vec::new();
        let mut row = Vec::new();
        loop {
            self.skip_inline_ws();
            match self.peek() {
                None => return Err(self.error("unterminated matrix, expected ']'")),
                Some(']') => {
                    self.bump();
                    break;
                }
                Some(';' | '\n') => {
                    self.bump();
                    if !row.is_empty() {
                        rows.push(std::mem::take(&mut row));
                    }
                }
                Some(',') => {
                    self.bump();
                }
                Some('.') if self.starts_with("...") => {
                    while !matches!(self.peek(), None | Some('\n')) {
                        self.bump();
                    }
                    self.bump();
                }
                Some(c) if c.is_ascii_digit() || matches!(c, '-' | '+' | '.' | 'I' | 'i') => {
                    row.push(self.number()?);
                }
                Some(c) => return Err(self.error(format!("unexpected character '{c}' in matrix"))),
            }
        }
        if !row.is_empty() {
            rows.push(row);
        }
        Ok(Matrix { rows, line })
    }

    /// Skip an unrecognised right-hand side up to its terminating `;` or
    /// newline, honouring bracket nesting and quoted strings.
    fn skip_value(&mut self) -> Result<(), CaseError> {
        let mut depth = 0i32;
        let mut quote = false;
        while let Some(c) = self.peek() {
            if quote {
                if c == '\'' {
                    quote = false;
                }
                self.bump();
                continue;
            }
            match c {
                '\'' => quote = true,
                '[' | '{' | '(' => depth += 1,
                ']' | '}' | ')' => depth -= 1,
                ';' | '\n' if depth <= 0 => {
                    self.bump();
                    return Ok(());
                }
                _ => {}
            }
            self.bump();
        }
        if depth > 0 {
            return Err(self.error("unterminated bracket"));
        }
        Ok(())
    }
}

fn strip_comments(src: &str) -> String {
    let mut out = String::with_capacity(src.len());
    for line in src.lines() {
        let mut quote = false;
        for c in line.chars() {
            if c == '\'' {
                quote = !quote;
            }
            if c == '%' && !quote {
                break;
            }
            out.push(c);
        }
        out.push('\n');
    }
    out
}

/// Parse the MATPOWER `mpc` case subset. Unknown fields are skipped.
pub fn case_from_matpower(text: &str) -> Result<NetworkCase, CaseError> {
    let mut cur = Cursor::new(text);
    let mut base_mva = None;
    let mut bus = None;
    let mut gen = None;
    let mut branch = None;

    while cur.peek().is_some() {
        cur.skip_ws();
        if !cur.starts_with("mpc.") {
            // Skip the rest of an unrelated statement, e.g. `function mpc = ...`.
            while !matches!(cur.peek(), None | Some('\n')) {
                cur.bump();
            }
            continue;
        }
        for _ in 0..4 {
            cur.bump();
        }
        let name = cur.ident();
        cur.skip_inline_ws();
        if cur.peek() != Some('=') {
            return Err(cur.error(format!("expected '=' after mpc.{name}")));
        }
        cur.bump();
        cur.skip_inline_ws();
        match name.as_str() {
            "baseMVA" => {
                base_mva = Some(cur.number()?);
                cur.skip_value()?;
            }
            "bus" | "gen" | "branch" => {
                if cur.peek() != Some('[') {
                    return Err(cur.error(format!("expected '[' to open mpc.{name}")));
                }
                let m = cur.matrix()?;
                cur.skip_value()?;
                match name.as_str() {
                    "bus" => bus = Some(m),
                    "gen" => gen = Some(m),
                    _ => branch = Some(m),
                }
            }
            _ => cur.skip_value()?,
        }
    }

    let base_mva = base_mva.ok_or_else(|| CaseError::semantic("missing mpc.baseMVA"))?;
    let bus = bus.ok_or_else(|| CaseError::semantic("missing mpc.bus"))?;
    let gen = gen.ok_or_else(|| CaseError::semantic("missing mpc.gen"))?;
    let branch = branch.ok_or_else(|| CaseError::semantic("missing mpc.branch"))?;

    check_width(&bus, "bus", BUS_COLS)?;
    check_width(&gen, "gen", GEN_COLS)?;
    check_width(&branch, "branch", BRANCH_COLS)?;

    let buses = bus
        .rows
        .iter()
        .map(|r| {
            let kind = match r[1] as i64 {
                1 => BusKind::PQ,
                2 => BusKind::PV,
                3 => BusKind::Slack,
                t => {
                    return Err(CaseError::semantic(format!(
                        "bus {}: unsupported bus type {t}",
                        r[0]
                    )))
                }
            };
            Ok(Bus {
                id: as_id(r[0], "bus")?,
                kind,
                pd: r[2],
                qd: r[3],
                gs: r[4],
                bs: r[5],
                vm0: r[7],
                va0: r[8].to_radians(),
                base_kv: r[9],
                vmax: r[11],
                vmin: r[12],
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let generators = gen
        .rows
        .iter()
        .map(|r| {
            Ok(Generator {
                bus: as_id(r[0], "gen")?,
                pg: r[1],
                qg: r[2],
                qmax: r[3],
                qmin: r[4],
                vset: r[5],
                status: status(r[7]),
            })
        })
        .collect::<Result<Vec<_>, CaseError>>()?;
    let branches = branch
        .rows
        .iter()
        .map(|r| {
            Ok(Branch {
                from: as_id(r[0], "branch")?,
                to: as_id(r[1], "branch")?,
                r: r[2],
                x: r[3],
                b: r[4],
                rate_a: r[5],
                tap: if r[8] == 0.0 { 1.0 } else { r[8] },
                shift: r[9].to_radians(),
                status: status(r[10]),
            })
        })
        .collect::<Result<Vec<_>, CaseError>>()?;
    NetworkCase::new(base_mva, buses, branches, generators)
}

fn check_width(m: &Matrix, name: &str, min: usize) -> Result<(), CaseError> {
    for (k, row) in m.rows.iter().enumerate() {
        if row.len() < min {
            return Err(CaseError::Syntax {
                line: m.line + 1 + k,
                column: 1,
                message: format!(
                    "mpc.{name} row {} has {} columns, expected at least {min}",
                    k + 1,
                    row.len()
                ),
            });
        }
    }
    Ok(())
}

fn as_id(v: f64, what: &str) -> Result<i64, CaseError> {
    if v.fract() == 0.0 && v.is_finite() {
        Ok(v as i64)
    } else {
        Err(CaseError::semantic(format!("{what}: non-integer bus id {v}")))
    }
}

fn status(v: f64) -> Status {
    if v > 0.0 {
        Status::On
    } else {
        Status::Off
    }
}

/// Write a case in MATPOWER format (version 2 column layout).
pub fn case_to_matpower(case: &NetworkCase, name: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "function mpc = {name}");
    let _ = writeln!(s, "mpc.version = '2';");
    let _ = writeln!(s, "mpc.baseMVA = {};", case.base_mva);
    let _ = writeln!(s, "\n%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin");
    s.push_str("mpc.bus = [\n");
    for b in &case.buses {
        let kind = match b.kind {
            BusKind::PQ => 1,
            BusKind::PV => 2,
            BusKind::Slack => 3,
        };
        let _ = writeln!(
            s,
            "\t{}\t{}\t{}\t{}\t{}\t{}\t1\t{}\t{}\t{}\t1\t{}\t{};",
            b.id,
            kind,
            b.pd,
            b.qd,
            b.gs,
            b.bs,
            b.vm0,
            b.va0.to_degrees(),
            b.base_kv,
            b.vmax,
            b.vmin
        );
    }
    s.push_str("];\n\n%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin\nmpc.gen = [\n");
    for g in &case.generators {
        let _ = writeln!(
            s,
            "\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t0\t0;",
            g.bus,
            g.pg,
            g.qg,
            g.qmax,
            g.qmin,
            g.vset,
            case.base_mva,
            u8::from(g.status.is_on())
        );
    }
    s.push_str(
        "];\n\n%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax\nmpc.branch = [\n",
    );
    for br in &case.branches {
        let _ = writeln!(
            s,
            "\t{}\t{}\t{}\t{}\t{}\t{}\t0\t0\t{}\t{}\t{}\t-360\t360;",
            br.from,
            br.to,
            br.r,
            br.x,
            br.b,
            br.rate_a,
            br.tap,
            br.shift.to_degrees(),
            u8::from(br.status.is_on())
        );
    }
    s.push_str("];\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::casedata::tests::TWO_BUS;

    #[test]
    fn ignores_unknown_fields_and_comments() {
        let text = format!(
            "% header comment\n{TWO_BUS}\nmpc.gencost = [\n 2 0 0 3 0.01 0.3 0.2; % cost\n];\nmpc.bus_name = {{'a'; 'b'}};\n"
        );
        let case = case_from_matpower(&text).unwrap();
        assert_eq!(case.buses.len(), 2);
    }

    #[test]
    fn syntax_error_reports_position() {
        let text = TWO_BUS.replace("2 1 50 20", "2 1 5x0 20");
        match case_from_matpower(&text) {
            Err(CaseError::Syntax { line, column, .. }) => {
                assert_eq!(line, 5);
                assert_eq!(column, 9);
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn short_row_is_syntax_error() {
        let text = TWO_BUS.replace("1 2 0 0.1 0 0 0 0 0 0 1 -360 360", "1 2 0 0.1");
        assert!(matches!(
            case_from_matpower(&text),
            Err(CaseError::Syntax { .. })
        ));
    }

    #[test]
    fn unterminated_matrix() {
        let text = TWO_BUS.replace("];\nmpc.gen", "\nmpc.gen");
        assert!(case_from_matpower(&text).is_err());
    }

    #[test]
    fn angles_are_radians_internally() {
        let text = TWO_BUS.replace("1 1 0 345 1 1.1 0.9;\n    2", "1 1 30 345 1 1.1 0.9;\n    2");
        let case = case_from_matpower(&text).unwrap();
        assert!((case.buses[0].va0 - std::f64::consts::PI / 6.0).abs() < 1e-15);
    }
}
