//! Weight-matrix selection shared by several commands: named matrices,
//! random Bell matrices, inline row specs, and plain-text files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use bellgap::weights::{BellMatrix, WeightMatrix};
use bellgap::{Error, Result};
use clap::Args;

/// Mutually exclusive selectors for the weight matrix a command operates on.
#[derive(Debug, Clone, Default, Args)]
pub struct WeightArgs {
    /// The 2x2 weight [[1,1],[1,-1]] of the CHSH inequality.
    #[arg(long, conflicts_with_all = ["magic3", "bell", "file", "inline"])]
    pub chsh: bool,

    /// The 3x3 magic-square weight [[8,3,4],[1,5,9],[6,7,2]].
    #[arg(long, conflicts_with_all = ["bell", "file", "inline"])]
    pub magic3: bool,

    /// A random NxN Bell matrix, drawn with --bell-seed.
    #[arg(long, value_name = "N", conflicts_with_all = ["file", "inline"])]
    pub bell: Option<usize>,

    /// Seed for --bell.
    #[arg(long, value_name = "SEED", default_value_t = 1, requires = "bell")]
    pub bell_seed: u64,

    /// Weight file: first line "N_a N_b", then N_a whitespace-separated
    /// rows of N_b decimal reals.
    #[arg(long, value_name = "PATH", conflicts_with = "inline")]
    pub file: Option<String>,

    /// Inline rows: entries comma-separated, rows semicolon-separated,
    /// e.g. "1,1;1,-1".
    #[arg(long, value_name = "ROWS")]
    pub inline: Option<String>,
}

impl WeightArgs {
    /// Builds the selected weight matrix; exactly one selector must be set.
    pub fn resolve(&self) -> Result<WeightMatrix<f64>> {
        if self.chsh {
            Ok(WeightMatrix::chsh())
        } else if self.magic3 {
            Ok(WeightMatrix::magic_square())
        } else if let Some(n) = self.bell {
            Ok(BellMatrix::generate(n, self.bell_seed)?.into_weight())
        } else if let Some(path) = &self.file {
            parse_weight_file(Path::new(path))
        } else if let Some(spec) = &self.inline {
            parse_inline(spec)
        } else {
            Err(Error::InvalidInput(
                "select a weight with --chsh, --magic3, --bell, --file, or --inline".into(),
            ))
        }
    }

    /// Stable description of the selection, used for config hashing. File
    /// sources hash their contents, not the path, so moving a file does not
    /// change the hash.
    pub fn describe(&self) -> Result<String> {
        if self.chsh {
            Ok("chsh".into())
        } else if self.magic3 {
            Ok("magic3".into())
        } else if let Some(n) = self.bell {
            Ok(format!("bell:{n}:{}", self.bell_seed))
        } else if let Some(path) = &self.file {
            let w = parse_weight_file(Path::new(path))?;
            Ok(format!("matrix:{}", matrix_spec(&w)))
        } else if let Some(spec) = &self.inline {
            let w = parse_inline(spec)?;
            Ok(format!("matrix:{}", matrix_spec(&w)))
        } else {
            Err(Error::InvalidInput("no weight selected".into()))
        }
    }
}

/// Canonical inline form of a weight matrix (rows ';', entries ',').
pub fn matrix_spec(w: &WeightMatrix<f64>) -> String {
    let (n_a, n_b) = w.dims();
    let mut s = String::new();
    for j in 0..n_a {
        if j > 0 {
            s.push(';');
        }
        for k in 0..n_b {
            if k > 0 {
                s.push(',');
            }
            let _ = write!(s, "{}", w.entry(j, k));
        }
    }
    s
}

/// Rows of a weight matrix as nested vectors, for serialization.
pub fn matrix_rows(w: &WeightMatrix<f64>) -> Vec<Vec<f64>> {
    let (n_a, n_b) = w.dims();
    (0..n_a)
        .map(|j| (0..n_b).map(|k| w.entry(j, k)).collect())
        .collect()
}

/// Reads and parses a weight file, reporting failures as
/// `path:line:column: message` with 1-based positions.
pub fn parse_weight_file(path: &Path) -> Result<WeightMatrix<f64>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    parse_weight_text(&text, &path.display().to_string())
}

/// Tokens of one line with their 1-based starting columns.
fn line_tokens(line: &str) -> Vec<(usize, &str)> {
    let mut tokens = Vec::new();
    let mut rest = line;
    let mut base = 0usize;
    loop {
        let trimmed = rest.trim_start();
        let skipped = rest.len() - trimmed.len();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            break;
        }
        let end = trimmed
            .find(char::is_whitespace)
            .unwrap_or(trimmed.len());
        tokens.push((base + skipped + 1, &trimmed[..end]));
        base += skipped + end;
        rest = &trimmed[end..];
    }
    tokens
}

/// Parses the weight file format from text. `origin` names the source in
/// error messages (a path or a pseudo-name like `<inline>`).
pub fn parse_weight_text(text: &str, origin: &str) -> Result<WeightMatrix<f64>> {
    let fail = |line: usize, col: usize, msg: String| -> Error {
        Error::InvalidInput(format!("{origin}:{line}:{col}: {msg}"))
    };

    // Non-blank lines with their 1-based numbers; blanks and full-line
    // comments are skipped.
    let lines: Vec<(usize, Vec<(usize, &str)>)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, line_tokens(l)))
        .filter(|(_, toks)| !toks.is_empty())
        .collect();

    let Some((header_no, header)) = lines.first() else {
        return Err(fail(1, 1, "empty input, expected a header \"N_a N_b\"".into()));
    };
    if header.len() != 2 {
        return Err(fail(
            *header_no,
            header.first().map_or(1, |t| t.0),
            format!("header must be \"N_a N_b\", found {} token(s)", header.len()),
        ));
    }
    let parse_dim = |(col, tok): (usize, &str)| -> Result<usize> {
        let n: usize = tok
            .parse()
            .map_err(|_| fail(*header_no, col, format!("expected a positive integer, found {tok:?}")))?;
        if n == 0 {
            return Err(fail(*header_no, col, "dimension must be positive".into()));
        }
        Ok(n)
    };
    let n_a = parse_dim(header[0])?;
    let n_b = parse_dim(header[1])?;

    let data = &lines[1..];
    if data.len() != n_a {
        let (line, col) = data
            .get(n_a)
            .map(|(l, t)| (*l, t[0].0))
            .unwrap_or_else(|| (text.lines().count().max(1), 1));
        return Err(fail(
            line,
            col,
            format!("expected {} data row(s), found {}", n_a, data.len()),
        ));
    }
    let mut rows = Vec::with_capacity(n_a);
    for (line_no, tokens) in data {
        if tokens.len() != n_b {
            return Err(fail(
                *line_no,
                tokens.last().map_or(1, |t| t.0),
                format!("expected {} value(s) in this row, found {}", n_b, tokens.len()),
            ));
        }
        let mut row = Vec::with_capacity(n_b);
        for &(col, tok) in tokens {
            let v: f64 = tok
                .parse()
                .map_err(|_| fail(*line_no, col, format!("expected a real number, found {tok:?}")))?;
            row.push(v);
        }
        rows.push(row);
    }
    WeightMatrix::from_rows(&rows)
}

/// Parses the inline row spec: entries comma-separated, rows
/// semicolon-separated.
pub fn parse_inline(spec: &str) -> Result<WeightMatrix<f64>> {
    let mut rows = Vec::new();
    for (i, row_spec) in spec.split(';').enumerate() {
        let mut row = Vec::new();
        for (j, entry) in row_spec.split(',').enumerate() {
            let token = entry.trim();
            let v: f64 = token.parse().map_err(|_| {
                Error::InvalidInput(format!(
                    "inline weight, row {}, entry {}: expected a real number, found {token:?}",
                    i + 1,
                    j + 1
                ))
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    WeightMatrix::from_rows(&rows)
}
