//! Temporal ranking data: one row per ranked item, one column per period.
//!
//! The CSV layout is `item,category,<period-1>,<period-2>,...`. Values are
//! non-negative metrics (bar lengths); ranks are derived from them later by
//! the compiler.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Category assigned to rows whose category cell is blank.
pub const DEFAULT_CATEGORY: &str = "uncategorized";

/// Errors raised while ingesting or editing a dataset.
///
/// `row` is the 0-based data row (the header is not counted) and `col` the
/// 0-based period column.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("csv: {0}")]
    Csv(String),
    #[error("header must start with `item,category` followed by period labels")]
    BadHeader,
    #[error("dataset has no data rows")]
    NoRows,
    #[error("at least two period columns are required")]
    TooFewPeriods,
    #[error("duplicate item `{0}`")]
    DuplicateItem(String),
    #[error("duplicate period label `{0}`")]
    DuplicatePeriod(String),
    #[error("empty period label at column {0}")]
    EmptyPeriod(usize),
    #[error("row {0}: empty item id")]
    EmptyItemId(usize),
    #[error("row {0}: expected one value per period")]
    RaggedRow(usize),
    #[error("row {row}, column {col}: missing value")]
    MissingValue { row: usize, col: usize },
    #[error("row {row}, column {col}: value is not a finite number")]
    NonNumericValue { row: usize, col: usize },
    #[error("row {row}, column {col}: value is negative")]
    NegativeValue { row: usize, col: usize },
    #[error("unknown item `{0}`")]
    UnknownItem(String),
    #[error("unknown period `{0}`")]
    UnknownPeriod(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub id: String,
    pub category: String,
}

impl ItemRecord {
    pub fn new(id: impl Into<String>, category: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            category: category.into(),
        }
    }
}

/// A dense, validated items × periods matrix of non-negative values.
///
/// Construction always goes through [`RankingDataset::new`] (serde included),
/// so every instance satisfies the rectangular / non-negative / unique-id
/// invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDataset")]
pub struct RankingDataset {
    items: Vec<ItemRecord>,
    periods: Vec<String>,
    values: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawDataset {
    items: Vec<ItemRecord>,
    periods: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl TryFrom<RawDataset> for RankingDataset {
    type Error = DataError;

    fn try_from(raw: RawDataset) -> Result<Self, Self::Error> {
        RankingDataset::new(raw.items, raw.periods, raw.values)
    }
}

impl RankingDataset {
    pub fn new(
        items: Vec<ItemRecord>,
        periods: Vec<String>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self, DataError> {
        if periods.len() < 2 {
            return Err(DataError::TooFewPeriods);
        }
        if items.is_empty() {
            return Err(DataError::NoRows);
        }
        let mut seen = HashSet::new();
        for (col, label) in periods.iter().enumerate() {
            if label.is_empty() {
                return Err(DataError::EmptyPeriod(col));
            }
            if !seen.insert(label.as_str()) {
                return Err(DataError::DuplicatePeriod(label.clone()));
            }
        }
        if values.len() != items.len() {
            return Err(DataError::RaggedRow(values.len().min(items.len())));
        }
        let mut seen = HashSet::new();
        for (row, item) in items.iter().enumerate() {
            if item.id.is_empty() {
                return Err(DataError::EmptyItemId(row));
            }
            if !seen.insert(item.id.as_str()) {
                return Err(DataError::DuplicateItem(item.id.clone()));
            }
            if values[row].len() != periods.len() {
                return Err(DataError::RaggedRow(row));
            }
            for (col, &v) in values[row].iter().enumerate() {
                check_value(v, row, col)?;
            }
        }
        let items = items
            .into_iter()
            .map(|mut it| {
                if it.category.is_empty() {
                    it.category = DEFAULT_CATEGORY.to_string();
                }
                it
            })
            .collect();
        Ok(Self {
            items,
            periods,
            values,
        })
    }

    pub fn items(&self) -> &[ItemRecord] {
        &self.items
    }

    pub fn periods(&self) -> &[String] {
        &self.periods
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    pub fn period_count(&self) -> usize {
        self.periods.len()
    }

    pub fn value(&self, item: usize, period: usize) -> f64 {
        self.values[item][period]
    }

    /// Row-major matrix, `values()[item][period]`.
    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// All item values for one period, in item order.
    pub fn column(&self, period: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[period]).collect()
    }

    pub fn item_index(&self, id: &str) -> Option<usize> {
        self.items.iter().position(|it| it.id == id)
    }

    pub fn period_index(&self, label: &str) -> Option<usize> {
        self.periods.iter().position(|p| p == label)
    }

    /// Returns a copy with one cell replaced; `self` is left untouched.
    pub fn edit_cell(
        &self,
        item_id: &str,
        period_label: &str,
        new_value: f64,
    ) -> Result<RankingDataset, DataError> {
        let row = self
            .item_index(item_id)
            .ok_or_else(|| DataError::UnknownItem(item_id.to_string()))?;
        let col = self
            .period_index(period_label)
            .ok_or_else(|| DataError::UnknownPeriod(period_label.to_string()))?;
        check_value(new_value, row, col)?;
        let mut next = self.clone();
        next.values[row][col] = new_value;
        Ok(next)
    }
}

fn check_value(v: f64, row: usize, col: usize) -> Result<(), DataError> {
    if !v.is_finite() {
        Err(DataError::NonNumericValue { row, col })
    } else if v < 0.0 {
        Err(DataError::NegativeValue { row, col })
    } else {
        Ok(())
    }
}

/// Parses the `item,category,<periods...>` CSV layout (RFC 4180 quoting).
///
/// Surrounding whitespace in every field is trimmed. Blank category cells
/// become [`DEFAULT_CATEGORY`]; blank value cells are rejected.
pub fn parse_dataset(raw: &str) -> Result<RankingDataset, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(raw.as_bytes());
    let mut records = reader.records();

    let header = match records.next() {
        Some(rec) => rec.map_err(|e| DataError::Csv(e.to_string()))?,
        None => return Err(DataError::BadHeader),
    };
    if header.len() < 2 || &header[0] != "item" || &header[1] != "category" {
        return Err(DataError::BadHeader);
    }
    let periods: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
    if periods.len() < 2 {
        return Err(DataError::TooFewPeriods);
    }

    let mut items = Vec::new();
    let mut values = Vec::new();
    for (row, rec) in records.enumerate() {
        let rec = rec.map_err(|e| DataError::Csv(e.to_string()))?;
        // A line holding only whitespace parses as a single empty field.
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != periods.len() + 2 {
            return Err(DataError::RaggedRow(row));
        }
        let id = &rec[0];
        if id.is_empty() {
            return Err(DataError::EmptyItemId(row));
        }
        let mut row_values = Vec::with_capacity(periods.len());
        for (col, cell) in rec.iter().skip(2).enumerate() {
            if cell.is_empty() {
                return Err(DataError::MissingValue { row, col });
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| DataError::NonNumericValue { row, col })?;
            check_value(v, row, col)?;
            row_values.push(v);
        }
        items.push(ItemRecord::new(id, &rec[1]));
        values.push(row_values);
    }
    RankingDataset::new(items, periods, values)
}

/// Writes the dataset back in the ingest layout. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn serialize_dataset(dataset: &RankingDataset) -> String {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let mut header = vec!["item".to_string(), "category".to_string()];
    header.extend(dataset.periods.iter().cloned());
    // Writing into a Vec cannot fail.
    writer.write_record(&header).expect("in-memory csv write");
    for (item, row) in dataset.items.iter().zip(&dataset.values) {
        let mut record = vec![item.id.clone(), item.category.clone()];
        record.extend(row.iter().map(|v| v.to_string()));
        writer.write_record(&record).expect("in-memory csv write");
    }
    let bytes = writer.into_inner().expect("in-memory csv flush");
    String::from_utf8(bytes).expect("csv output is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_minimal_table() {
        let ds = parse_dataset("item,category,2018,2019\nCoca-Cola,Beverages,1.0,2.0\n").unwrap();
        assert_eq!(ds.item_count(), 1);
        assert_eq!(ds.periods(), ["2018", "2019"]);
        assert_eq!(ds.values(), [vec![1.0, 2.0]]);
        assert_eq!(ds.items()[0], ItemRecord::new("Coca-Cola", "Beverages"));
    }

    #[test]
    fn rejects_negative_value() {
        let err = parse_dataset("item,category,a,b\nX,c,1,-3\n").unwrap_err();
        assert_eq!(err, DataError::NegativeValue { row: 0, col: 1 });
    }

    #[test]
    fn rejects_duplicate_item() {
        let err = parse_dataset("item,category,a,b\niSpy,s,1,2\niSpy,s,3,4\n").unwrap_err();
        assert_eq!(err, DataError::DuplicateItem("iSpy".into()));
    }

    #[test]
    fn rejects_malformed_tables() {
        assert_eq!(
            parse_dataset("item,category,a\nX,c,1\n").unwrap_err(),
            DataError::TooFewPeriods
        );
        assert_eq!(
            parse_dataset("item,category,a,b\nX,c,1\n").unwrap_err(),
            DataError::RaggedRow(0)
        );
        assert_eq!(
            parse_dataset("item,category,a,b\nX,c,1,z\n").unwrap_err(),
            DataError::NonNumericValue { row: 0, col: 1 }
        );
        assert_eq!(
            parse_dataset("item,category,a,b\nX,c,NaN,1\n").unwrap_err(),
            DataError::NonNumericValue { row: 0, col: 0 }
        );
        assert_eq!(
            parse_dataset("item,category,a,b\nX,c,,1\n").unwrap_err(),
            DataError::MissingValue { row: 0, col: 0 }
        );
        assert_eq!(
            parse_dataset("name,category,a,b\nX,c,1,1\n").unwrap_err(),
            DataError::BadHeader
        );
        assert_eq!(
            parse_dataset("item,category,a,b\n").unwrap_err(),
            DataError::NoRows
        );
        assert_eq!(
            parse_dataset("item,category,a,a\nX,c,1,1\n").unwrap_err(),
            DataError::DuplicatePeriod("a".into())
        );
    }

    #[test]
    fn blank_category_defaults() {
        let ds = parse_dataset("item,category,a,b\nX,,1,2\n").unwrap();
        assert_eq!(ds.items()[0].category, DEFAULT_CATEGORY);
    }

    #[test]
    fn quoted_fields_follow_rfc4180() {
        let ds = parse_dataset("item,category,\"Q1, 2019\",Q2\n\"Smith, \"\"J\"\"\",x,1,2\n").unwrap();
        assert_eq!(ds.periods()[0], "Q1, 2019");
        assert_eq!(ds.items()[0].id, "Smith, \"J\"");
        assert_eq!(parse_dataset(&serialize_dataset(&ds)).unwrap(), ds);
    }

    fn sample() -> RankingDataset {
        parse_dataset("item,category,2018,2019\nCoca-Cola,Beverages,1,2\nPepsi,Beverages,3,4\n").unwrap()
    }

    #[test]
    fn edit_cell_changes_one_cell_only() {
        let ds = sample();
        let edited = ds.edit_cell("Coca-Cola", "2019", 5.0).unwrap();
        assert_eq!(ds.value(0, 1), 2.0);
        assert_eq!(edited.value(0, 1), 5.0);
        for r in 0..2 {
            for c in 0..2 {
                if (r, c) != (0, 1) {
                    assert_eq!(edited.value(r, c), ds.value(r, c));
                }
            }
        }
        assert_eq!(ds.edit_cell("Coca-Cola", "2019", 2.0).unwrap(), ds);
    }

    #[test]
    fn edit_cell_errors() {
        let ds = sample();
        assert_eq!(
            ds.edit_cell("Unknown", "2019", 1.0).unwrap_err(),
            DataError::UnknownItem("Unknown".into())
        );
        assert_eq!(
            ds.edit_cell("Pepsi", "2020", 1.0).unwrap_err(),
            DataError::UnknownPeriod("2020".into())
        );
        assert!(matches!(
            ds.edit_cell("Pepsi", "2019", -1.0).unwrap_err(),
            DataError::NegativeValue { .. }
        ));
    }

    #[test]
    fn serde_enforces_invariants() {
        let bad = r#"{"items":[{"id":"a","category":"c"}],"periods":["x","y"],"values":[[1.0,-2.0]]}"#;
        assert!(serde_json::from_str::<RankingDataset>(bad).is_err());
        let ds = sample();
        let json = serde_json::to_string(&ds).unwrap();
        assert_eq!(serde_json::from_str::<RankingDataset>(&json).unwrap(), ds);
    }

    fn arb_dataset() -> impl Strategy<Value = RankingDataset> {
        (1usize..8, 2usize..6).prop_flat_map(|(n, p)| {
            (
                proptest::collection::btree_set("[A-Za-z][A-Za-z0-9 ,\"]{0,6}[A-Za-z0-9]", n),
                proptest::collection::vec("[a-z]{0,4}", n),
                proptest::collection::btree_set("[0-9]{4}", p),
                proptest::collection::vec(proptest::collection::vec(0.0f64..1e9, p), n),
            )
                .prop_filter("sizes", move |(ids, _, periods, _)| {
                    ids.len() == n && periods.len() == p
                })
                .prop_map(|(ids, cats, periods, values)| {
                    let items = ids
                        .into_iter()
                        .zip(cats)
                        .map(|(id, c)| ItemRecord::new(id, c))
                        .collect();
                    RankingDataset::new(items, periods.into_iter().collect(), values).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn csv_round_trip(ds in arb_dataset()) {
            let text = serialize_dataset(&ds);
            let back = parse_dataset(&text).unwrap();
            prop_assert_eq!(&back, &ds);
            prop_assert_eq!(serialize_dataset(&back), text);
        }

        #[test]
        fn parsed_tables_are_rectangular(ds in arb_dataset()) {
            let back = parse_dataset(&serialize_dataset(&ds)).unwrap();
            prop_assert!(back.values().iter().all(|r| r.len() == back.period_count()));
        }

        #[test]
        fn edit_then_revert_is_identity(ds in arb_dataset(), r in 0usize..8, c in 0usize..6, v in 0.0f64..100.0) {
            let r = r % ds.item_count();
            let c = c % ds.period_count();
            let id = ds.items()[r].id.clone();
            let label = ds.periods()[c].clone();
            let old = ds.value(r, c);
            let back = ds.edit_cell(&id, &label, v).unwrap().edit_cell(&id, &label, old).unwrap();
            prop_assert_eq!(back, ds);
        }
    }
}
