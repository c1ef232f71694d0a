//! Drawing contingency tables from a mixture: pick a component by its
//! weight, then a row from its column factor and a column from its row
//! factor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::factor::MixtureRepresentation;
use crate::matrix::ContingencyTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub n: u64,
    pub seed: u64,
}

/// One draw: zero-based component, row and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Draw {
    pub component: usize,
    pub row: usize,
    pub col: usize,
}

/// Inverse-CDF sampler over a fixed probability vector.
struct Categorical {
    cumulative: Vec<f64>,
    last_positive: usize,
}

impl Categorical {
    fn new(weights: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        let last_positive = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
        Self {
            cumulative,
            last_positive,
        }
    }

    fn sample(&self, u: f64) -> usize {
        // first index whose cumulative weight exceeds u; zero-weight
        // categories never satisfy the strict inequality first
        let idx = self.cumulative.partition_point(|&c| c <= u);
        idx.min(self.last_positive)
    }
}

/// Streams the latent draws in order. Every draw consumes exactly three
/// uniforms from a ChaCha20 stream keyed by the seed.
pub fn draws(rep: &MixtureRepresentation, spec: SampleSpec) -> impl Iterator<Item = Draw> + '_ {
    let weights = Categorical::new(rep.weights());
    let rows: Vec<Categorical> = rep
        .col_factors()
        .iter()
        .map(|c| Categorical::new(c))
        .collect();
    let cols: Vec<Categorical> = rep
        .row_factors()
        .iter()
        .map(|r| Categorical::new(r))
        .collect();
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    (0..spec.n).map(move |_| {
        let component = weights.sample(rng.random());
        let row = rows[component].sample(rng.random());
        let col = cols[component].sample(rng.random());
        Draw {
            component,
            row,
            col,
        }
    })
}

/// The latent `(component, row, column)` trace behind [`sample_table`].
pub fn sample_component_path(rep: &MixtureRepresentation, spec: SampleSpec) -> Vec<Draw> {
    draws(rep, spec).collect()
}

pub fn sample_table(rep: &MixtureRepresentation, spec: SampleSpec) -> ContingencyTable {
    aggregate(rep, draws(rep, spec))
}

/// Counts of a draw trace, marginalized over components.
pub fn aggregate(
    rep: &MixtureRepresentation,
    trace: impl IntoIterator<Item = Draw>,
) -> ContingencyTable {
    let mut table = ContingencyTable::zeros(rep.shape());
    for d in trace {
        table.increment(d.row, d.col);
    }
    table
}
