use nalgebra::DMatrix;

use super::SpectralError;
use crate::kernel::WalkKernel;
use crate::lattice::{LatticeBox, Point};
use crate::potential::PotentialSpec;
use crate::sparse::SparseMatrix;

/// Largest box volume accepted by [`TruncatedOperator::new`].
pub const DEFAULT_SITE_CAP: usize = 1 << 21;

/// Dirichlet truncation of `P_V = (1 + V)P` to `Q(0, L)`.
///
/// `sym = D^{1/2} P D^{1/2}` with `D = diag(1 + V)` is similar to `P_V`
/// (`D^{−1/2} P_V D^{1/2} = sym`), so both share eigenvalues, and
/// `φ = D^{1/2} ψ` maps unit vectors of `sym` to unit vectors of `ℓ²_V`.
#[derive(Clone, Debug)]
pub struct TruncatedOperator {
    bx: LatticeBox,
    range: i64,
    potential: Vec<f64>,
    weight_sqrt: Vec<f64>,
    walk: SparseMatrix,
    matrix: SparseMatrix,
    sym: SparseMatrix,
}

impl TruncatedOperator {
    pub fn new(k: &WalkKernel, v: &PotentialSpec, radius: i64) -> Result<Self, SpectralError> {
        TruncatedOperator::with_cap(k, v, radius, DEFAULT_SITE_CAP)
    }

    pub fn with_cap(
        k: &WalkKernel,
        v: &PotentialSpec,
        radius: i64,
        cap: usize,
    ) -> Result<Self, SpectralError> {
        if k.dim() != v.dim() {
            return Err(SpectralError::DimensionMismatch {
                kernel: k.dim(),
                potential: v.dim(),
            });
        }
        if radius < 4 * k.range() {
            return Err(SpectralError::BoxTooSmall {
                radius,
                min: 4 * k.range(),
            });
        }
        let sites = (2 * radius as u128 + 1).pow(k.dim() as u32);
        if sites > cap as u128 {
            return Err(SpectralError::BoxTooLarge {
                sites: sites.min(usize::MAX as u128) as usize,
                cap,
            });
        }
        let bx = LatticeBox::centered(k.dim(), radius);
        let walk = k.transition_matrix(&bx);
        let potential = v.values_on(&bx);
        let weight_sqrt: Vec<f64> = potential.iter().map(|x| (1.0 + x).sqrt()).collect();
        let scaled = |f: &dyn Fn(usize, usize) -> f64| {
            SparseMatrix::from_rows(
                (0..bx.len())
                    .map(|i| walk.row(i).map(|(j, p)| (j, p * f(i, j))).collect())
                    .collect(),
            )
        };
        let matrix = scaled(&|i, _| 1.0 + potential[i]);
        let sym = scaled(&|i, j| weight_sqrt[i] * weight_sqrt[j]);
        Ok(TruncatedOperator {
            bx,
            range: k.range(),
            potential,
            weight_sqrt,
            walk,
            matrix,
            sym,
        })
    }

    pub fn lattice_box(&self) -> &LatticeBox {
        &self.bx
    }

    pub fn radius(&self) -> i64 {
        self.bx.radius()
    }

    pub fn kernel_range(&self) -> i64 {
        self.range
    }

    pub fn len(&self) -> usize {
        self.bx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bx.is_empty()
    }

    pub fn sites(&self) -> impl Iterator<Item = Point> + '_ {
        self.bx.iter()
    }

    /// `V` on the box, in box index order.
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// `√(1 + V)` on the box.
    pub fn weight_sqrt(&self) -> &[f64] {
        &self.weight_sqrt
    }

    /// Truncated free walk `P`.
    pub fn walk(&self) -> &SparseMatrix {
        &self.walk
    }

    /// Truncated `P_V`.
    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Symmetrized `D^{1/2} P D^{1/2}`.
    pub fn sym(&self) -> &SparseMatrix {
        &self.sym
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.matrix.matvec(f)
    }

    pub fn dense_sym(&self) -> DMatrix<f64> {
        self.sym.to_dense()
    }

    /// `φ = D^{1/2} ψ`.
    pub fn to_phi(&self, psi: &[f64]) -> Vec<f64> {
        psi.iter().zip(&self.weight_sqrt).map(|(p, w)| p * w).collect()
    }

    /// `ψ = D^{−1/2} φ`.
    pub fn to_psi(&self, phi: &[f64]) -> Vec<f64> {
        phi.iter().zip(&self.weight_sqrt).map(|(p, w)| p / w).collect()
    }

    /// `⟨f, g⟩_V = Σ f g / (1 + V)`.
    pub fn inner_v(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter()
            .zip(g)
            .zip(&self.potential)
            .map(|((a, b), v)| a * b / (1.0 + v))
            .sum()
    }

    pub fn norm_v(&self, f: &[f64]) -> f64 {
        self.inner_v(f, f).sqrt()
    }

    /// `‖P_V φ − λ φ‖_V / ‖φ‖_V`.
    pub fn residual(&self, lambda: f64, phi: &[f64]) -> f64 {
        let pf = self.apply(phi);
        let diff: Vec<f64> = pf.iter().zip(phi).map(|(a, b)| a - lambda * b).collect();
        self.norm_v(&diff) / self.norm_v(phi)
    }

    /// `max_x (1 + V(x)) Σ_y p(y − x)`, an upper bound on `r(P_V)`.
    pub fn max_row_sum(&self) -> f64 {
        self.matrix.row_sums().into_iter().fold(0.0, f64::max)
    }

    /// Index of the origin in the box.
    pub fn origin_index(&self) -> usize {
        self.bx
            .index_of(&Point::origin(self.bx.dim()))
            .expect("box is centred at the origin")
    }
}
