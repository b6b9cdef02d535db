use crate::error::{Error, Result};
use crate::features::Dataset;
use crate::neural::{ModelConfig, Tensor};

/// Model-ready inputs with class indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    /// `[n, sample_width]`.
    pub x: Tensor,
    pub y: Vec<usize>,
}

impl Samples {
    pub fn new(x: Tensor, y: Vec<usize>) -> Result<Self> {
        if x.shape.len() != 2 {
            return Err(Error::dimension("sample tensor rank", 2, x.shape.len()));
        }
        if x.rows() != y.len() {
            return Err(Error::dimension("labels", x.rows(), y.len()));
        }
        Ok(Samples { x, y })
    }

    pub fn from_rows(rows: &[Vec<f64>], y: Vec<usize>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Data("no samples".into()));
        }
        Self::new(Tensor::from_rows(rows)?, y)
    }

    /// Selects the model's columns from `dataset` and frames sequences.
    ///
    /// With `sequence_length` W > 1 each sample is W consecutive rows in
    /// dataset order, labelled by the last one.
    pub fn from_dataset(dataset: &Dataset, config: &ModelConfig) -> Result<Self> {
        let columns = dataset.feature_columns();
        let kept = config.select_columns(columns)?;
        let idx: Vec<usize> = kept
            .iter()
            .map(|k| columns.iter().position(|c| c == k).expect("selected from columns"))
            .collect();
        let rows: Vec<Vec<f64>> = dataset.rows.iter().map(|r| idx.iter().map(|&j| r.features[j]).collect()).collect();
        let y = dataset
            .rows
            .iter()
            .map(|r| r.label.class_index(config.output_classes))
            .collect::<Result<Vec<_>>>()?;
        let w = if config.architecture.is_recurrent() { config.sequence_length } else { 1 };
        if w <= 1 {
            return Self::from_rows(&rows, y);
        }
        let (rows, y) = frame_sequences(&rows, &y, w)?;
        Self::from_rows(&rows, y)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn width(&self) -> usize {
        self.x.shape[1]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.x.row(i)
    }

    /// The samples at `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Self {
        let w = self.width();
        let mut data = Vec::with_capacity(idx.len() * w);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Samples { x: Tensor { shape: vec![idx.len(), w], data }, y: idx.iter().map(|&i| self.y[i]).collect() }
    }
}

/// Sliding windows of `w` rows, flattened time-major, labelled by the last row.
pub fn frame_sequences(rows: &[Vec<f64>], labels: &[usize], w: usize) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    if w == 0 {
        return Err(Error::config("sequence_length", "must be at least 1"));
    }
    if rows.len() < w {
        return Err(Error::Data(format!("{} rows cannot form a sequence of {w}", rows.len())));
    }
    let mut x = Vec::with_capacity(rows.len() + 1 - w);
    let mut y = Vec::with_capacity(rows.len() + 1 - w);
    for end in w - 1..rows.len() {
        x.push(rows[end + 1 - w..=end].concat());
        y.push(labels[end]);
    }
    Ok((x, y))
}
