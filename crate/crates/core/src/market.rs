//! Price ingestion and cyclic decomposition of return sequences.
//!
//! Prices arrive as wide CSV: a `date` label column followed by one column
//! per asset. Returns are the ratios of consecutive prices. A cyclic
//! decomposition splits a return sequence by period index modulo `k`, which
//! is the lens through which both the `k`-cyclic hindsight benchmarks and
//! the `k`-parallel universal portfolio view the data.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fmt;
use crate::returns::ReturnsSequence;

/// A validated table of strictly positive prices.
///
/// Invariants:
/// * at least one asset column and at least two rows;
/// * every price is finite and strictly positive;
/// * date labels are strictly increasing as byte strings (ISO-8601 dates
///   satisfy this; the labels are otherwise opaque — no calendar logic).
#[derive(Debug, Clone)]
pub struct PriceTable {
    symbols: Vec<String>,
    dates: Vec<String>,
    prices: Vec<f64>,
}

impl PriceTable {
    /// Validates and builds a table from parts; `prices` is row-major.
    pub fn new(symbols: Vec<String>, dates: Vec<String>, prices: Vec<f64>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::PriceHeader("need at least one asset column".into()));
        }
        if dates.len() < 2 {
            return Err(Error::InsufficientPeriods);
        }
        if prices.len() != symbols.len() * dates.len() {
            return Err(Error::LengthMismatch {
                left: prices.len(),
                right: symbols.len() * dates.len(),
            });
        }
        let m = symbols.len();
        for (idx, &p) in prices.iter().enumerate() {
            if !p.is_finite() || p <= 0.0 {
                return Err(Error::PriceTable {
                    row: idx / m + 1,
                    column: symbols[idx % m].clone(),
                    message: format!("nonpositive price {p}"),
                });
            }
        }
        for i in 1..dates.len() {
            if dates[i - 1] >= dates[i] {
                return Err(Error::DatesNotIncreasing {
                    row: i + 1,
                    previous: dates[i - 1].clone(),
                    current: dates[i].clone(),
                });
            }
        }
        Ok(Self {
            symbols,
            dates,
            prices,
        })
    }

    /// Parses the wide CSV format `date,SYM1,…,SYMm` (header required).
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut csv_reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = csv_reader.headers()?.clone();
        if headers.is_empty() || !headers[0].eq_ignore_ascii_case("date") {
            return Err(Error::PriceHeader(format!(
                "first column must be \"date\", got {:?}",
                headers.get(0).unwrap_or("")
            )));
        }
        let symbols: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();
        if symbols.is_empty() {
            return Err(Error::PriceHeader("need at least one asset column".into()));
        }
        let m = symbols.len();
        let mut dates = Vec::new();
        let mut prices = Vec::new();
        for (i, record) in csv_reader.records().enumerate() {
            let record = record?;
            let row = i + 1;
            if record.len() != m + 1 {
                return Err(Error::PriceTable {
                    row,
                    column: String::new(),
                    message: format!("expected {} fields, got {}", m + 1, record.len()),
                });
            }
            dates.push(record[0].to_owned());
            for (j, field) in record.iter().skip(1).enumerate() {
                let value: f64 = field.parse().map_err(|_| Error::PriceTable {
                    row,
                    column: symbols[j].clone(),
                    message: format!("cannot parse {field:?} as a price"),
                })?;
                prices.push(value);
            }
        }
        Self::new(symbols, dates, prices)
    }

    /// Asset symbols in column order.
    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    /// Date labels in row order.
    pub fn dates(&self) -> &[String] {
        &self.dates
    }

    /// Number of price rows.
    pub fn n(&self) -> usize {
        self.dates.len()
    }

    /// The price row for date `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.prices[i * self.symbols.len()..(i + 1) * self.symbols.len()]
    }

    /// Per-period gross returns `price[t+1]/price[t]`, labeled with the date
    /// each return realizes on (the later row's date).
    pub fn returns(&self) -> ReturnsSequence {
        let m = self.symbols.len();
        let mut values = Vec::with_capacity((self.n() - 1) * m);
        for t in 1..self.n() {
            let prev = self.row(t - 1);
            let cur = self.row(t);
            values.extend(cur.iter().zip(prev).map(|(c, p)| c / p));
        }
        ReturnsSequence::new(m, values)
            .expect("ratios of validated prices are positive")
            .with_labels(self.dates[1..].to_vec())
            .expect("one label per return row")
    }
}

/// Reads a wide-format price CSV and converts it to gross returns.
pub fn ingest_returns<R: Read>(reader: R) -> Result<ReturnsSequence> {
    Ok(PriceTable::from_csv_reader(reader)?.returns())
}

/// [`ingest_returns`] for a file path.
pub fn ingest_returns_path(path: &Path) -> Result<ReturnsSequence> {
    ingest_returns(std::fs::File::open(path)?)
}

/// Writes returns in the same wide format (`date,SYM1,…`), full precision.
pub fn write_returns_csv<W: Write>(
    out: &mut W,
    returns: &ReturnsSequence,
    symbols: &[String],
) -> Result<()> {
    if symbols.len() != returns.m() {
        return Err(Error::AssetCountMismatch {
            left: symbols.len(),
            right: returns.m(),
        });
    }
    write!(out, "date")?;
    for s in symbols {
        write!(out, ",{s}")?;
    }
    writeln!(out)?;
    for i in 0..returns.n() {
        write!(out, "{}", returns.label_or_index(i))?;
        for x in returns.row(i) {
            write!(out, ",{}", fmt::full(*x))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// One cyclic position of a decomposition: the original (0-based) period
/// indices and the corresponding rows, in their original order.
#[derive(Debug, Clone)]
pub struct Subsequence {
    indices: Vec<usize>,
    returns: ReturnsSequence,
}

impl Subsequence {
    /// Original 0-based period indices, strictly increasing.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// The rows of this position as a standalone sequence (possibly empty).
    pub fn returns(&self) -> &ReturnsSequence {
        &self.returns
    }

    /// Number of periods in this position.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    /// True when this position received no periods (`k` exceeds `n`).
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// A return sequence split into `k` interleaved subsequences: position `i`
/// (0-based) holds the periods with index `≡ i (mod k)`.
#[derive(Debug, Clone)]
pub struct CyclicDecomposition {
    k: usize,
    m: usize,
    subsequences: Vec<Subsequence>,
}

impl CyclicDecomposition {
    /// Cycle length.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of assets.
    pub fn m(&self) -> usize {
        self.m
    }

    /// The subsequence of cyclic position `i` (0-based, `i < k`).
    pub fn subsequence(&self, i: usize) -> &Subsequence {
        &self.subsequences[i]
    }

    /// Iterator over positions in order.
    pub fn iter(&self) -> impl Iterator<Item = &Subsequence> {
        self.subsequences.iter()
    }
}

/// Splits `returns` into `k >= 1` cyclic subsequences. Every period lands in
/// exactly one subsequence; positions beyond `n` stay empty.
pub fn decompose(returns: &ReturnsSequence, k: usize) -> Result<CyclicDecomposition> {
    if k == 0 {
        return Err(Error::InvalidCycleLength);
    }
    let m = returns.m();
    let mut indices: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); k];
    for p in 0..returns.n() {
        let i = p % k;
        indices[i].push(p);
        values[i].extend_from_slice(returns.row(p));
    }
    let subsequences = indices
        .into_iter()
        .zip(values)
        .map(|(indices, values)| {
            Ok(Subsequence {
                indices,
                returns: ReturnsSequence::new(m, values)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CyclicDecomposition { k, m, subsequences })
}
