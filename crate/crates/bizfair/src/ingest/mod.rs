//! Licence-CSV ingestion: name selection, label merging, dedupe, rare-label
//! dropping, and deterministic train/test splitting.

mod labels;

pub use labels::{map_high_level, HighLevelClass, LabelSpace, MergeOutcome};

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One row of the licence CSV, as parsed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawLicenceRow {
    pub business_name: String,
    pub business_trade_name: String,
    pub business_type: String,
}

/// A (business name, canonical label) pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Record {
    pub name: String,
    pub label: String,
}

impl Record {
    pub fn new(name: impl Into<String>, label: impl Into<String>) -> Record {
        Record {
            name: name.into(),
            label: label.into(),
        }
    }
}

/// Train/test split parameters.
#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    /// Fraction of records held out for testing, in (0, 1).
    pub test_fraction: f64,
    pub seed: u64,
}

/// Why `select_name` rejected a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Skip {
    /// Chosen name is empty or whitespace-only.
    Empty,
    /// Chosen name starts with "(" and ends with ")", typically a
    /// placeholder for a person's name.
    Parenthesized,
}

/// Counters accumulated while building a dataset.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub rows_read: usize,
    pub csv_parse_errors: usize,
    pub skipped_empty_name: usize,
    pub skipped_parenthesized: usize,
    pub skipped_empty_type: usize,
    /// Rows whose raw label is not covered by the merge map (warned, dropped).
    pub unknown_label_rows: usize,
    /// Rows dropped by an explicit drop rule (e.g. "Office").
    pub dropped_label_rows: usize,
    pub duplicate_rows: usize,
    /// Rows removed because their label fell under the sample threshold.
    pub rare_label_rows: usize,
    /// Labels removed by the sample threshold.
    pub rare_labels: usize,
}

impl fmt::Display for IngestStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rows read:            {}", self.rows_read)?;
        writeln!(f, "csv parse errors:     {}", self.csv_parse_errors)?;
        writeln!(f, "skipped empty name:   {}", self.skipped_empty_name)?;
        writeln!(f, "skipped (name):       {}", self.skipped_parenthesized)?;
        writeln!(f, "skipped empty type:   {}", self.skipped_empty_type)?;
        writeln!(f, "unknown labels:       {}", self.unknown_label_rows)?;
        writeln!(f, "dropped by rule:      {}", self.dropped_label_rows)?;
        writeln!(f, "duplicates dropped:   {}", self.duplicate_rows)?;
        write!(
            f,
            "rare-label rows:      {} ({} labels)",
            self.rare_label_rows, self.rare_labels
        )
    }
}

/// Pick the display name for a row: the trade name unless blank, else the
/// business name. Names that are fully parenthesized (a person's name) and
/// blank names are skipped.
pub fn select_name(row: &RawLicenceRow) -> std::result::Result<String, Skip> {
    let chosen = if row.business_trade_name.trim().is_empty() {
        row.business_name.trim()
    } else {
        row.business_trade_name.trim()
    };
    if chosen.is_empty() {
        return Err(Skip::Empty);
    }
    if chosen.starts_with('(') && chosen.ends_with(')') {
        return Err(Skip::Parenthesized);
    }
    // Tabs and line breaks would corrupt the TSV output; fold them to spaces.
    if chosen.contains(['\t', '\n', '\r']) {
        Ok(chosen.replace(['\t', '\n', '\r'], " "))
    } else {
        Ok(chosen.to_string())
    }
}

/// Apply the merge rules to one raw label.
pub fn merge_labels(raw_label: &str, space: &LabelSpace) -> MergeOutcome {
    space.merge(raw_label)
}

/// Run the full preprocessing pipeline over parsed rows: name selection,
/// label merging, exact-pair dedupe, then dropping labels with fewer than
/// `min_samples` records. Returns the surviving records, the label space with
/// its final label list, and the counters.
pub fn build_dataset(
    rows: &[RawLicenceRow],
    mut space: LabelSpace,
    min_samples: usize,
    stats: &mut IngestStats,
) -> Result<(Vec<Record>, LabelSpace)> {
    if min_samples < 1 {
        return Err(Error::Config("min_samples must be >= 1".into()));
    }

    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut records: Vec<Record> = Vec::new();
    for row in rows {
        stats.rows_read += 1;
        if row.business_type.trim().is_empty() {
            stats.skipped_empty_type += 1;
            continue;
        }
        let name = match select_name(row) {
            Ok(name) => name,
            Err(Skip::Empty) => {
                stats.skipped_empty_name += 1;
                continue;
            }
            Err(Skip::Parenthesized) => {
                stats.skipped_parenthesized += 1;
                continue;
            }
        };
        let label = match space.merge(&row.business_type) {
            MergeOutcome::Canonical(label) => label,
            MergeOutcome::Drop => {
                stats.dropped_label_rows += 1;
                continue;
            }
            MergeOutcome::Unknown => {
                stats.unknown_label_rows += 1;
                continue;
            }
        };
        if seen.insert((name.clone(), label.clone())) {
            records.push(Record { name, label });
        } else {
            stats.duplicate_rows += 1;
        }
    }

    let mut counts: HashMap<String, usize> = HashMap::new();
    for record in &records {
        *counts.entry(record.label.clone()).or_default() += 1;
    }
    let keep: HashSet<String> = counts
        .iter()
        .filter(|(_, &n)| n >= min_samples)
        .map(|(label, _)| label.clone())
        .collect();
    stats.rare_labels = counts.len() - keep.len();

    let before = records.len();
    records.retain(|r| keep.contains(&r.label));
    stats.rare_label_rows += before - records.len();

    if records.is_empty() {
        return Err(Error::Data("dataset empty after preprocessing".into()));
    }

    // Final label list ordered by descending count, ties by name.
    let mut final_counts: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|(label, _)| keep.contains(label))
        .collect();
    final_counts.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    space.set_labels(final_counts.into_iter().map(|(label, _)| label).collect());

    Ok((records, space))
}

/// Deterministic shuffled partition into (train, test). Test size is
/// `round(test_fraction * n)`; records keep their input order within each side.
pub fn split(records: &[Record], spec: &SplitSpec) -> Result<(Vec<Record>, Vec<Record>)> {
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test fraction must be in (0, 1), got {}",
            spec.test_fraction
        )));
    }
    if records.len() < 2 {
        return Err(Error::Data("need at least 2 records to split".into()));
    }

    let n_test = (spec.test_fraction * records.len() as f64).round() as usize;
    let mut indices: Vec<usize> = (0..records.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    indices.shuffle(&mut rng);

    let mut test_idx: Vec<usize> = indices[..n_test].to_vec();
    let mut train_idx: Vec<usize> = indices[n_test..].to_vec();
    test_idx.sort_unstable();
    train_idx.sort_unstable();

    let train = train_idx.iter().map(|&i| records[i].clone()).collect();
    let test = test_idx.iter().map(|&i| records[i].clone()).collect();
    Ok((train, test))
}

const COL_NAME: &str = "businessname";
const COL_TRADE: &str = "businesstradename";
const COL_TYPE: &str = "businesstype";

/// Read a licence CSV. Header columns are matched case-insensitively; extra
/// columns are ignored; rows that fail to parse are counted, not dropped
/// silently.
pub fn read_licence_csv(path: &Path, stats: &mut IngestStats) -> Result<Vec<RawLicenceRow>> {
    let file = File::open(path)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(BufReader::new(file));

    let headers = reader.headers()?.clone();
    let find = |want: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(want))
    };
    let name_col = find(COL_NAME)
        .ok_or_else(|| Error::Config("input CSV is missing required column BusinessName".into()))?;
    let trade_col = find(COL_TRADE).ok_or_else(|| {
        Error::Config("input CSV is missing required column BusinessTradeName".into())
    })?;
    let type_col = find(COL_TYPE)
        .ok_or_else(|| Error::Config("input CSV is missing required column BusinessType".into()))?;

    let mut rows = Vec::new();
    for result in reader.records() {
        let record = match result {
            Ok(record) => record,
            Err(_) => {
                stats.csv_parse_errors += 1;
                continue;
            }
        };
        let field = |i: usize| record.get(i).unwrap_or("").to_string();
        rows.push(RawLicenceRow {
            business_name: field(name_col),
            business_trade_name: field(trade_col),
            business_type: field(type_col),
        });
    }
    Ok(rows)
}

/// Write records as TSV: `<label>\t<name>` per line.
pub fn write_records_tsv(path: &Path, records: &[Record]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for record in records {
        writeln!(out, "{}\t{}", record.label, record.name)?;
    }
    out.flush()?;
    Ok(())
}

/// Read a TSV dataset written by [`write_records_tsv`].
pub fn read_records_tsv(path: &Path) -> Result<Vec<Record>> {
    let file = File::open(path)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    let mut records = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let (label, name) = line.split_once('\t').ok_or_else(|| {
            Error::Data(format!(
                "{}:{}: expected `<label>\\t<name>`",
                path.display(),
                lineno + 1
            ))
        })?;
        if name.is_empty() {
            return Err(Error::Data(format!(
                "{}:{}: empty business name",
                path.display(),
                lineno + 1
            )));
        }
        records.push(Record::new(name, label));
    }
    Ok(records)
}

/// Write the label list with high-level classes: `<label>\t<class>` per line.
pub fn write_labels_tsv(path: &Path, space: &LabelSpace) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for label in space.labels() {
        writeln!(out, "{}\t{}", label, space.high_level(label)?)?;
    }
    out.flush()?;
    Ok(())
}

/// Read a label list written by [`write_labels_tsv`] into a label space.
pub fn read_labels_tsv(path: &Path) -> Result<LabelSpace> {
    let file = File::open(path)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let (label, class) = line.split_once('\t').ok_or_else(|| {
            Error::Config(format!(
                "{}:{}: expected `<label>\\t<class>`",
                path.display(),
                lineno + 1
            ))
        })?;
        pairs.push((label.to_string(), HighLevelClass::parse(class.trim())?));
    }
    if pairs.is_empty() {
        return Err(Error::Config(format!(
            "label file {} is empty",
            path.display()
        )));
    }
    Ok(LabelSpace::from_label_classes(pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(name: &str, trade: &str, kind: &str) -> RawLicenceRow {
        RawLicenceRow {
            business_name: name.into(),
            business_trade_name: trade.into(),
            business_type: kind.into(),
        }
    }

    #[test]
    fn select_name_prefers_trade_name() {
        assert_eq!(
            select_name(&row("Acme Ltd", "Fotojo Studios", "Photographer")),
            Ok("Fotojo Studios".into())
        );
        assert_eq!(
            select_name(&row("Acme Ltd", "", "Photographer")),
            Ok("Acme Ltd".into())
        );
        assert_eq!(
            select_name(&row("Acme Ltd", "   ", "Photographer")),
            Ok("Acme Ltd".into())
        );
    }

    #[test]
    fn select_name_skips_parenthesized_and_blank() {
        assert_eq!(
            select_name(&row("(Gerald Gionco)", "", "Exhibitions/Shows/Concerts")),
            Err(Skip::Parenthesized)
        );
        assert_eq!(select_name(&row("", "", "Contractor")), Err(Skip::Empty));
        // The parenthesis rule applies to the chosen name only.
        assert_eq!(
            select_name(&row("(Gerald Gionco)", "Gionco Shows", "Contractor")),
            Ok("Gionco Shows".into())
        );
    }

    #[test]
    fn select_name_folds_tabs_and_newlines() {
        assert_eq!(
            select_name(&row("A\tB\nC", "", "Contractor")),
            Ok("A B C".into())
        );
    }

    #[test]
    fn build_dataset_dedupes_and_thresholds() {
        let rows = vec![
            row("Bolt Bros", "", "Contractor"),
            row("Bolt Bros", "", "Contractor"), // duplicate pair
            row("Nuts Unlimited", "", "Contractor"),
            row("One Off Shop", "", "Retail Dealer"), // below threshold of 2
            row("Desk Corp", "", "Office"),           // dropped by rule
            row("Weird Co", "", "Spaceport"),         // unknown label
        ];
        let mut stats = IngestStats::default();
        let (records, space) = build_dataset(&rows, LabelSpace::builtin(), 2, &mut stats).unwrap();
        assert_eq!(
            records,
            vec![
                Record::new("Bolt Bros", "Contractor"),
                Record::new("Nuts Unlimited", "Contractor"),
            ]
        );
        assert_eq!(space.labels(), ["Contractor".to_string()]);
        assert_eq!(stats.duplicate_rows, 1);
        assert_eq!(stats.dropped_label_rows, 1);
        assert_eq!(stats.unknown_label_rows, 1);
        assert_eq!(stats.rare_labels, 1);
        assert_eq!(stats.rare_label_rows, 1);
    }

    #[test]
    fn build_dataset_merges_labels() {
        let rows = vec![
            row("Noodle Bar", "", "Restaurant Class 1"),
            row("Dumpling Bar", "", "Restaurant Class 2"),
            row("Sea Motel", "", "Motel"),
            row("Stay Inn", "", "Short-Term Rental"),
        ];
        let mut stats = IngestStats::default();
        let (records, space) = build_dataset(&rows, LabelSpace::builtin(), 1, &mut stats).unwrap();
        assert!(records
            .iter()
            .all(|r| r.label == "Restaurant" || r.label == "Hotel"));
        // Equal counts: ties ordered by name.
        assert_eq!(
            space.labels(),
            ["Hotel".to_string(), "Restaurant".to_string()]
        );
    }

    #[test]
    fn build_dataset_empty_result_is_fatal() {
        let rows = vec![row("Desk Corp", "", "Office")];
        let mut stats = IngestStats::default();
        let err = build_dataset(&rows, LabelSpace::builtin(), 1, &mut stats).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn build_dataset_is_idempotent() {
        let rows = vec![
            row("Bolt Bros", "", "Contractor"),
            row("Nuts Unlimited", "", "Contractor"),
            row("Noodle Bar", "", "Restaurant Class 1"),
            row("Dumpling Bar", "", "Restaurant"),
        ];
        let mut stats = IngestStats::default();
        let (records, space) = build_dataset(&rows, LabelSpace::builtin(), 1, &mut stats).unwrap();

        // Feed the output back through as rows.
        let rows2: Vec<RawLicenceRow> =
            records.iter().map(|r| row(&r.name, "", &r.label)).collect();
        let mut stats2 = IngestStats::default();
        let (records2, space2) =
            build_dataset(&rows2, LabelSpace::builtin(), 1, &mut stats2).unwrap();
        assert_eq!(records, records2);
        assert_eq!(space.labels(), space2.labels());
        assert_eq!(stats2.duplicate_rows, 0);
    }

    #[test]
    fn split_examples() {
        let records: Vec<Record> = (0..10)
            .map(|i| Record::new(format!("Biz {i}"), "Contractor"))
            .collect();
        let spec = SplitSpec {
            test_fraction: 0.1,
            seed: 42,
        };
        let (train, test) = split(&records, &spec).unwrap();
        assert_eq!(train.len(), 9);
        assert_eq!(test.len(), 1);
        let (train2, test2) = split(&records, &spec).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let records: Vec<Record> = (0..4)
            .map(|i| Record::new(format!("Biz {i}"), "Contractor"))
            .collect();
        for bad in [0.0, 1.0, -0.5, 1.5] {
            let err = split(
                &records,
                &SplitSpec {
                    test_fraction: bad,
                    seed: 0,
                },
            )
            .unwrap_err();
            assert!(matches!(err, Error::Config(_)));
        }
    }

    proptest! {
        #[test]
        fn split_is_a_partition(n in 2usize..200, frac in 0.05f64..0.95, seed: u64) {
            let records: Vec<Record> = (0..n)
                .map(|i| Record::new(format!("Biz {i}"), "Contractor"))
                .collect();
            let spec = SplitSpec { test_fraction: frac, seed };
            let (train, test) = split(&records, &spec).unwrap();
            prop_assert_eq!(train.len() + test.len(), n);
            prop_assert_eq!(test.len(), (frac * n as f64).round() as usize);
            let train_set: HashSet<&Record> = train.iter().collect();
            for r in &test {
                prop_assert!(!train_set.contains(r));
            }
            let (train2, test2) = split(&records, &spec).unwrap();
            prop_assert_eq!(train, train2);
            prop_assert_eq!(test, test2);
        }
    }
}
