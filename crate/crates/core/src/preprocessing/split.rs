use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentRole {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub role: SegmentRole,
    pub fraction: f64,
}

/// Ordered chronological segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitLayout {
    /// 20% test: a third at the start, two thirds at the end
    OriginalShip,
    /// 20% test: a quarter at the start, half in the middle, a quarter at the end
    SisterShip,
    Custom(Vec<Segment>),
}

impl SplitLayout {
    pub fn segments(&self) -> Vec<Segment> {
        use SegmentRole::{Test, Train};
        let seg = |role, fraction| Segment { role, fraction };
        match self {
            SplitLayout::OriginalShip => vec![seg(Test, 0.2 / 3.0), seg(Train, 0.8), seg(Test, 0.4 / 3.0)],
            SplitLayout::SisterShip => vec![
                seg(Test, 0.05),
                seg(Train, 0.4),
                seg(Test, 0.1),
                seg(Train, 0.4),
                seg(Test, 0.05),
            ],
            SplitLayout::Custom(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitOptions {
    pub layout: SplitLayout,
    /// carve a contiguous validation slice (10% of training) from the middle of the training data
    pub with_validation: bool,
    pub min_train_per_side: usize,
}

impl Default for SplitOptions {
    fn default() -> Self {
        Self {
            layout: SplitLayout::OriginalShip,
            with_validation: true,
            min_train_per_side: 50,
        }
    }
}

/// Half-open row range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexRange {
    pub start: usize,
    pub end: usize,
}

impl IndexRange {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub n_rows: usize,
    pub train: Vec<IndexRange>,
    pub validation: Vec<IndexRange>,
    pub test: Vec<IndexRange>,
    pub warnings: Vec<String>,
}

fn expand(ranges: &[IndexRange]) -> Vec<usize> {
    ranges.iter().flat_map(|r| r.start..r.end).collect()
}

impl SplitPlan {
    pub fn train_rows(&self) -> Vec<usize> {
        expand(&self.train)
    }

    pub fn validation_rows(&self) -> Vec<usize> {
        expand(&self.validation)
    }

    pub fn test_rows(&self) -> Vec<usize> {
        expand(&self.test)
    }
}

const FRACTION_TOL: f64 = 1e-9;

/// Splits `m` time-ordered rows into contiguous train/validation/test ranges.
/// `event_rows` holds, for each cleaning event, the first row after it.
pub fn chronological_split(m: usize, event_rows: &[usize], options: &SplitOptions) -> Result<SplitPlan> {
    if m <= 50 {
        return Err(Error::InsufficientData {
            what: "chronological split".into(),
            needed: 51,
            got: m,
        });
    }
    let segments = options.layout.segments();
    if segments.iter().any(|s| !(s.fraction >= 0.0)) {
        return Err(Error::Config("split fractions must be non-negative".into()));
    }
    let total: f64 = segments.iter().map(|s| s.fraction).sum();
    if (total - 1.0).abs() > FRACTION_TOL {
        return Err(Error::Config(format!("split fractions sum to {total}, not 1")));
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut cumulative = 0.0;
    let mut start = 0;
    for (i, seg) in segments.iter().enumerate() {
        cumulative += seg.fraction;
        let end = if i + 1 == segments.len() {
            m
        } else {
            ((cumulative * m as f64).round() as usize).min(m)
        };
        if end > start {
            let r = IndexRange { start, end };
            match seg.role {
                SegmentRole::Train => train.push(r),
                SegmentRole::Test => test.push(r),
            }
        }
        start = end.max(start);
    }

    let mut validation = Vec::new();
    if options.with_validation && !train.is_empty() {
        let n_train: usize = train.iter().map(IndexRange::len).sum();
        let n_val = (0.1 * n_train as f64).round() as usize;
        let (pos, longest) = train
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(&a.0)))
            .map(|(i, r)| (i, *r))
            .expect("non-empty");
        if n_val > 0 && n_val < longest.len() {
            let vs = longest.start + (longest.len() - n_val) / 2;
            let val = IndexRange { start: vs, end: vs + n_val };
            validation.push(val);
            let mut pieces = Vec::new();
            if vs > longest.start {
                pieces.push(IndexRange { start: longest.start, end: vs });
            }
            if val.end < longest.end {
                pieces.push(IndexRange { start: val.end, end: longest.end });
            }
            train.splice(pos..=pos, pieces);
        }
    }

    let train_rows = expand(&train);
    let mut bounds: Vec<usize> = event_rows.iter().map(|&r| r.min(m)).collect();
    bounds.sort_unstable();
    let mut warnings = Vec::new();
    for (j, &row) in bounds.iter().enumerate() {
        let prev = if j == 0 { 0 } else { bounds[j - 1] };
        let next = bounds.get(j + 1).copied().unwrap_or(m);
        let before = train_rows.iter().filter(|&&r| r >= prev && r < row).count();
        let after = train_rows.iter().filter(|&&r| r >= row && r < next).count();
        if before < options.min_train_per_side || after < options.min_train_per_side {
            warnings.push(format!(
                "event {j} at row {row}: {before} training rows before and {after} after (minimum {})",
                options.min_train_per_side
            ));
        }
    }

    Ok(SplitPlan {
        n_rows: m,
        train,
        validation,
        test,
        warnings,
    })
}
