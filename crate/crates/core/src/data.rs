//! Datasets of (value, personal budget) records and elementwise clipping.

use crate::error::{Error, Result};

/// Neighboring model the dataset is analyzed under.
///
/// Bounded: neighbors replace one record; the budget multiset is public
/// metadata. Unbounded: neighbors add or remove one record; size and the
/// realized budget vector are themselves private.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Bounded,
    Unbounded,
}

/// One data value paired with its personal privacy budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub value: f64,
    pub budget: f64,
}

impl Record {
    pub fn new(value: f64, budget: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::EmptyInput("record value must be finite"));
        }
        if budget <= 0.0 || !budget.is_finite() {
            return Err(Error::NonPositiveBudget(budget));
        }
        Ok(Self { value, budget })
    }
}

/// Immutable collection of records under a declared neighboring model.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<Record>,
    model: Model,
}

impl Dataset {
    pub fn new(records: Vec<Record>, model: Model) -> Result<Self> {
        for r in &records {
            if !r.value.is_finite() {
                return Err(Error::EmptyInput("record value must be finite"));
            }
            if r.budget <= 0.0 || !r.budget.is_finite() {
                return Err(Error::NonPositiveBudget(r.budget));
            }
        }
        Ok(Self { records, model })
    }

    /// Pairs up aligned value and budget slices.
    pub fn from_parts(values: &[f64], budgets: &[f64], model: Model) -> Result<Self> {
        if values.len() != budgets.len() {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: budgets.len(),
                what: "values vs budgets",
            });
        }
        let records = values
            .iter()
            .zip(budgets)
            .map(|(&value, &budget)| Record::new(value, budget))
            .collect::<Result<Vec<_>>>()?;
        Self::new(records, model)
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.value).collect()
    }

    pub fn budgets(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.budget).collect()
    }

    /// Records reordered ascending by budget (stable), with the permutation
    /// mapping sorted position -> original index. The weight computed for a
    /// sorted slot must be attributed back through this permutation.
    pub fn sorted_by_budget(&self) -> (Vec<Record>, Vec<usize>) {
        let mut order: Vec<usize> = (0..self.records.len()).collect();
        order.sort_by(|&a, &b| {
            self.records[a]
                .budget
                .partial_cmp(&self.records[b].budget)
                .expect("budgets are finite")
        });
        let sorted = order.iter().map(|&i| self.records[i]).collect();
        (sorted, order)
    }
}

/// min(max(x, lo), hi).
pub fn clip(x: f64, lo: f64, hi: f64) -> Result<f64> {
    if lo > hi {
        return Err(Error::InvertedRange { lo, hi });
    }
    Ok(x.min(hi).max(lo))
}

/// Elementwise clipping of a value slice.
pub fn clip_all(xs: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>> {
    if lo > hi {
        return Err(Error::InvertedRange { lo, hi });
    }
    Ok(xs.iter().map(|&x| x.min(hi).max(lo)).collect())
}
