use super::{cost_of, DataError, TotalOrdering};
use crate::world::{LabelGrid, SENTINEL};

/// Per-pixel ground-truth cost with a validity mask.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetCostmap {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f32>,
    pub mask: Vec<bool>,
}

impl TargetCostmap {
    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Cost of each label under `ordering`; sentinel cells get value 0 and
/// mask false.
pub fn build_target(labels: &LabelGrid, ordering: &TotalOrdering) -> Result<TargetCostmap, DataError> {
    let table = (0..ordering.len() as u8)
        .map(|l| cost_of(ordering, l))
        .collect::<Result<Vec<_>, _>>()?;
    let mut values = Vec::with_capacity(labels.labels.len());
    let mut mask = Vec::with_capacity(labels.labels.len());
    for &l in &labels.labels {
        if l == SENTINEL {
            values.push(0.0);
            mask.push(false);
        } else {
            let c = *table
                .get(l as usize)
                .ok_or(DataError::UnknownLabel(l as u8))?;
            values.push(c);
            mask.push(true);
        }
    }
    Ok(TargetCostmap {
        height: labels.height,
        width: labels.width,
        values,
        mask,
    })
}
