use std::fs;
use std::io::{self, Write};

use serde::Serialize;
use staircase::format_g12;

use crate::args::Cli;
use crate::CliError;

/// Renders a json value followed by a newline.
pub fn json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut buf = serde_json::to_vec_pretty(value)?;
    buf.push(b'\n');
    Ok(buf)
}

/// Builds csv text with a fixed header.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        let mut buf = String::from(header);
        buf.push('\n');
        Self { buf }
    }

    /// No header line.
    pub fn bare() -> Self {
        Self { buf: String::new() }
    }

    pub fn row(&mut self, fields: &[Field<'_>]) {
        let line: Vec<String> = fields.iter().map(Field::render).collect();
        self.buf.push_str(&line.join(","));
        self.buf.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf.into_bytes()
    }
}

pub enum Field<'a> {
    Num(f64),
    Int(i64),
    Text(&'a str),
    Opt(Option<f64>),
}

impl Field<'_> {
    fn render(&self) -> String {
        match self {
            Field::Num(x) => format_g12(*x),
            Field::Int(i) => i.to_string(),
            Field::Text(s) => quote(s),
            Field::Opt(Some(x)) => format_g12(*x),
            Field::Opt(None) => String::new(),
        }
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes to `--out` when given, standard output otherwise.
pub fn emit(cli: &Cli, bytes: &[u8]) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => fs::write(path, bytes)?,
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows() {
        let mut csv = Csv::new("a,b,c,d");
        csv.row(&[Field::Num(0.5), Field::Int(-3), Field::Text("x,y"), Field::Opt(None)]);
        assert_eq!(
            String::from_utf8(csv.into_bytes()).unwrap(),
            "a,b,c,d\n0.5,-3,\"x,y\",\n"
        );
    }
}
