//! Binomial null models for edge weights, one strategy per conditioning
//! choice, registered by name.
//!
//! Every model describes each cell `(i, j)` of the `N1 x N2` grid as a
//! binomial count and knows how to draw a full weight configuration from
//! itself. Cells sharing the same trial count and success probability form a
//! *family* that shares a threshold.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::hin::Hin;

/// Trial count and success probability of one binomial family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullParams {
    pub n: u64,
    pub rho: f64,
}

pub trait NullModel: Send + Sync {
    /// Registry key, also used on the command line.
    fn name(&self) -> &'static str;

    fn aliases(&self) -> &'static [&'static str] {
        &[]
    }

    fn description(&self) -> &'static str;

    /// Parameters of every family, indexed by family id.
    fn families(&self, hin: &Hin) -> Vec<NullParams>;

    /// Family id of cell `(i, j)`.
    fn family_of(&self, i: usize, j: usize) -> usize;

    /// Overwrites `cells` (row-major `N1 x N2`) with one draw from the model.
    fn sample(&self, hin: &Hin, rng: &mut dyn RngCore, cells: &mut [u64]);
}

/// All `W` unit weights land uniformly on the `N1 N2` cells.
pub struct Uniform;

impl NullModel for Uniform {
    fn name(&self) -> &'static str {
        "none"
    }

    fn aliases(&self) -> &'static [&'static str] {
        &["uniform"]
    }

    fn description(&self) -> &'static str {
        "no strengths fixed: n = W, rho = 1/(N1 N2)"
    }

    fn families(&self, hin: &Hin) -> Vec<NullParams> {
        vec![NullParams {
            n: hin.total_weight(),
            rho: 1.0 / (hin.n1() as f64 * hin.n2() as f64),
        }]
    }

    fn family_of(&self, _i: usize, _j: usize) -> usize {
        0
    }

    fn sample(&self, hin: &Hin, rng: &mut dyn RngCore, cells: &mut [u64]) {
        cells.fill(0);
        let len = cells.len();
        for _ in 0..hin.total_weight() {
            cells[rng.gen_range(0..len)] += 1;
        }
    }
}

/// Each Set1 node `i` spreads its strength `s_i` uniformly over Set2.
pub struct FixSet1;

impl NullModel for FixSet1 {
    fn name(&self) -> &'static str {
        "set1"
    }

    fn aliases(&self) -> &'static [&'static str] {
        &["fix_set1"]
    }

    fn description(&self) -> &'static str {
        "Set1 strengths fixed: n = s_i, rho = 1/N2"
    }

    fn families(&self, hin: &Hin) -> Vec<NullParams> {
        let rho = 1.0 / hin.n2() as f64;
        hin.set1_strengths()
            .iter()
            .map(|&n| NullParams { n, rho })
            .collect()
    }

    fn family_of(&self, i: usize, _j: usize) -> usize {
        i
    }

    fn sample(&self, hin: &Hin, rng: &mut dyn RngCore, cells: &mut [u64]) {
        cells.fill(0);
        let n2 = hin.n2();
        for (i, &s) in hin.set1_strengths().iter().enumerate() {
            let row = &mut cells[i * n2..(i + 1) * n2];
            for _ in 0..s {
                row[rng.gen_range(0..n2)] += 1;
            }
        }
    }
}

/// Each Set2 node `j` receives its strength `d_j` uniformly from Set1.
pub struct FixSet2;

impl NullModel for FixSet2 {
    fn name(&self) -> &'static str {
        "set2"
    }

    fn aliases(&self) -> &'static [&'static str] {
        &["fix_set2"]
    }

    fn description(&self) -> &'static str {
        "Set2 strengths fixed: n = d_j, rho = 1/N1"
    }

    fn families(&self, hin: &Hin) -> Vec<NullParams> {
        let rho = 1.0 / hin.n1() as f64;
        hin.set2_strengths()
            .iter()
            .map(|&n| NullParams { n, rho })
            .collect()
    }

    fn family_of(&self, _i: usize, j: usize) -> usize {
        j
    }

    fn sample(&self, hin: &Hin, rng: &mut dyn RngCore, cells: &mut [u64]) {
        cells.fill(0);
        let (n1, n2) = (hin.n1(), hin.n2());
        for (j, &d) in hin.set2_strengths().iter().enumerate() {
            for _ in 0..d {
                cells[rng.gen_range(0..n1) * n2 + j] += 1;
            }
        }
    }
}

static UNIFORM: Uniform = Uniform;
static FIX_SET1: FixSet1 = FixSet1;
static FIX_SET2: FixSet2 = FixSet2;

static REGISTRY: [&dyn NullModel; 3] = [&UNIFORM, &FIX_SET1, &FIX_SET2];

/// Lookup table of the available null models.
pub struct NullModelRegistry;

impl NullModelRegistry {
    pub fn all() -> &'static [&'static dyn NullModel] {
        &REGISTRY
    }

    pub fn get(name: &str) -> Option<&'static dyn NullModel> {
        let name = name.to_ascii_lowercase();
        REGISTRY
            .iter()
            .copied()
            .find(|m| m.name() == name || m.aliases().contains(&name.as_str()))
    }

    pub fn names() -> Vec<&'static str> {
        REGISTRY.iter().map(|m| m.name()).collect()
    }
}
