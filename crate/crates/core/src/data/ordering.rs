use super::DataError;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Permutation of label ids, most preferred first. A label at 1-based rank
/// `r` costs `(r − 1)/(L − 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct TotalOrdering {
    order: Vec<u8>,
}

impl TotalOrdering {
    /// `order` must be a permutation of `0..order.len()`.
    pub fn new(order: Vec<u8>) -> Result<Self, DataError> {
        let mut seen = vec![false; order.len()];
        for &l in &order {
            match seen.get_mut(l as usize) {
                Some(s) if !*s => *s = true,
                _ => return Err(DataError::Ordering(format!("{order:?} is not a permutation"))),
            }
        }
        Ok(Self { order })
    }

    /// Label ids ascending.
    pub fn canonical(num_labels: usize) -> Self {
        Self {
            order: (0..num_labels as u8).collect(),
        }
    }

    pub fn random<R: Rng>(rng: &mut R, num_labels: usize) -> Self {
        let mut order: Vec<u8> = (0..num_labels as u8).collect();
        order.shuffle(rng);
        Self { order }
    }

    pub fn reversed(&self) -> Self {
        Self {
            order: self.order.iter().rev().copied().collect(),
        }
    }

    pub fn order(&self) -> &[u8] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// 1-based rank.
    pub fn rank(&self, label: u8) -> Option<usize> {
        self.order.iter().position(|&l| l == label).map(|p| p + 1)
    }

    pub fn cost(&self, label: u8) -> Result<f32, DataError> {
        cost_of(self, label)
    }

    /// Whether `a` is strictly preferred to `b`.
    pub fn prefers(&self, a: u8, b: u8) -> bool {
        matches!((self.rank(a), self.rank(b)), (Some(ra), Some(rb)) if ra < rb)
    }
}

impl TryFrom<Vec<u8>> for TotalOrdering {
    type Error = DataError;
    fn try_from(v: Vec<u8>) -> Result<Self, DataError> {
        Self::new(v)
    }
}

impl From<TotalOrdering> for Vec<u8> {
    fn from(o: TotalOrdering) -> Self {
        o.order
    }
}

/// `(rank − 1)/(L − 1)`; a one-label ordering costs 0.
pub fn cost_of(ordering: &TotalOrdering, label: u8) -> Result<f32, DataError> {
    let rank = ordering.rank(label).ok_or(DataError::UnknownLabel(label))?;
    let l = ordering.len();
    if l == 1 {
        return Ok(0.0);
    }
    Ok(((rank - 1) as f64 / (l - 1) as f64) as f32)
}
