//! The two-cell Markov kernel, its indicator-basis transfer matrix, and exact
//! finite-window checks of the intertwining, injectivity and density
//! properties of its infinite tensor power.
//!
//! Orientation: inputs are functions measurable with respect to
//! `ξ = {A, X∖A}` (`μ(A) = a`), outputs are measurable with respect to
//! `β = {B, X∖B}` (`μ(B) = 1/2`). Cell index 0 is `A` (resp. `B`). A cylinder
//! vector stores the values of a function on the `2^w` cells of a window of
//! `w` coordinates; coordinate 1 is the most significant bit of the index.

use num_traits::{One, Signed, Zero};

use crate::caps::Caps;
use crate::entropy::{partition_entropy, LogBase, ProbabilityVector};
use crate::error::{invalid, Error, Result};
use crate::linalg::RationalMatrix;
use crate::rational::{q, Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum XiCell {
    A,
    NotA,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BetaCell {
    B,
    NotB,
}

impl XiCell {
    pub const ALL: [XiCell; 2] = [XiCell::A, XiCell::NotA];

    fn index(self) -> usize {
        self as usize
    }
}

impl BetaCell {
    pub const ALL: [BetaCell; 2] = [BetaCell::B, BetaCell::NotB];

    fn index(self) -> usize {
        self as usize
    }
}

/// Kernel parameter `a`, strictly between 0 and 1/2.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KernelSpec {
    a: Q,
}

impl KernelSpec {
    pub fn new(a: Q) -> Result<Self> {
        if !a.is_positive() || a >= q(1, 2) {
            return Err(invalid(format!("kernel parameter must lie in (0, 1/2), got {}", crate::rational::fmt_q(&a))));
        }
        Ok(Self { a })
    }

    pub fn a(&self) -> &Q {
        &self.a
    }

    /// `(μ(A), μ(X∖A))`.
    pub fn xi_masses(&self) -> [Q; 2] {
        [self.a.clone(), Q::one() - &self.a]
    }

    pub fn beta_masses(&self) -> [Q; 2] {
        [q(1, 2), q(1, 2)]
    }

    pub fn xi_law(&self) -> ProbabilityVector {
        ProbabilityVector::new(self.xi_masses().to_vec()).expect("valid masses")
    }

    pub fn beta_law(&self) -> ProbabilityVector {
        ProbabilityVector::new(self.beta_masses().to_vec()).expect("valid masses")
    }
}

/// Value of the kernel on a product cell.
pub fn kernel_value(spec: &KernelSpec, x: XiCell, y: BetaCell) -> Q {
    let a = spec.a();
    match (x, y) {
        (XiCell::A, BetaCell::B) => Q::zero(),
        (XiCell::NotA, BetaCell::B) => Q::one() / (Q::one() - a),
        (XiCell::A, BetaCell::NotB) => Q::from_integer(2.into()),
        (XiCell::NotA, BetaCell::NotB) => (Q::one() - a * Q::from_integer(2.into())) / (Q::one() - a),
    }
}

/// Which Markov identities hold, each checked exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MarkovCheck {
    pub nonnegative: bool,
    /// `J 1 = 1`: `∫ K(x, y) dμ(x) = 1` on every output cell.
    pub fixes_constants: bool,
    /// `J* 1 = 1`: `∫ K(x, y) dμ(y) = 1` on every input cell.
    pub adjoint_fixes_constants: bool,
}

impl MarkovCheck {
    pub fn all(&self) -> bool {
        self.nonnegative && self.fixes_constants && self.adjoint_fixes_constants
    }
}

/// The operator `J f(y) = ∫ K(x, y) f(x) dμ(x)` on indicator bases.
///
/// `entry(d, c) = μ(c) · K(c, d)` is the coefficient of `1_d` in `J 1_c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferMatrix {
    kernel: [[Q; 2]; 2],
    xi_masses: [Q; 2],
    beta_masses: [Q; 2],
    entries: [[Q; 2]; 2],
}

impl TransferMatrix {
    pub fn entry(&self, out: BetaCell, input: XiCell) -> &Q {
        &self.entries[out.index()][input.index()]
    }

    pub fn as_matrix(&self) -> RationalMatrix {
        RationalMatrix::from_rows(self.entries.iter().map(|r| r.to_vec()).collect())
    }

    /// Image of `f = f_A 1_A + f_{X∖A} 1_{X∖A}` as `(value on B, value on X∖B)`.
    pub fn apply(&self, f: &[Q; 2]) -> [Q; 2] {
        let e = &self.entries;
        [&e[0][0] * &f[0] + &e[0][1] * &f[1], &e[1][0] * &f[0] + &e[1][1] * &f[1]]
    }

    /// `J* g(x) = ∫ K(x, y) g(y) dμ(y)`, from the kernel and the output masses.
    pub fn adjoint_apply(&self, g: &[Q; 2]) -> [Q; 2] {
        let k = &self.kernel;
        let m = &self.beta_masses;
        [0, 1].map(|c| &k[c][0] * &m[0] * &g[0] + &k[c][1] * &m[1] * &g[1])
    }

    pub fn determinant(&self) -> Q {
        let e = &self.entries;
        &e[0][0] * &e[1][1] - &e[0][1] * &e[1][0]
    }

    /// The three Markov identities, evaluated from the kernel values and cell masses.
    pub fn markov_check(&self) -> MarkovCheck {
        let k = &self.kernel;
        let nonnegative = self.entries.iter().flatten().all(|x| !x.is_negative())
            && k.iter().flatten().all(|x| !x.is_negative());
        let fixes_constants = (0..2).all(|d| (0..2).map(|c| &self.xi_masses[c] * &k[c][d]).sum::<Q>().is_one());
        let adjoint_fixes_constants =
            (0..2).all(|c| (0..2).map(|d| &self.beta_masses[d] * &k[c][d]).sum::<Q>().is_one());
        MarkovCheck { nonnegative, fixes_constants, adjoint_fixes_constants }
    }
}

pub fn transfer_matrix(spec: &KernelSpec) -> TransferMatrix {
    let kernel = XiCell::ALL.map(|x| BetaCell::ALL.map(|y| kernel_value(spec, x, y)));
    let xi_masses = spec.xi_masses();
    let beta_masses = spec.beta_masses();
    let entries = BetaCell::ALL.map(|d| XiCell::ALL.map(|c| &xi_masses[c.index()] * &kernel[c.index()][d.index()]));
    TransferMatrix { kernel, xi_masses, beta_masses, entries }
}

/// Values of a function on the cells of a `w`-coordinate window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CylinderVector {
    window: usize,
    coeffs: Vec<Q>,
}

impl CylinderVector {
    pub fn new(window: usize, coeffs: Vec<Q>) -> Result<Self> {
        if window == 0 {
            return Err(Error::WindowTooSmall { got: 0, min: 1 });
        }
        if window >= usize::BITS as usize || coeffs.len() != 1 << window {
            return Err(invalid(format!("window {window} needs {} coefficients", 1u128 << window.min(127))));
        }
        Ok(Self { window, coeffs })
    }

    pub fn constant(window: usize, value: Q) -> Result<Self> {
        if window == 0 {
            return Err(Error::WindowTooSmall { got: 0, min: 1 });
        }
        Self::new(window, vec![value; 1 << window])
    }

    /// Indicator of the single cell `cells[0] × … × cells[w-1]`.
    pub fn indicator(cells: &[usize]) -> Result<Self> {
        if cells.iter().any(|&c| c > 1) {
            return Err(invalid("cell index must be 0 or 1"));
        }
        let w = cells.len();
        let idx = cells.iter().fold(0usize, |acc, &c| (acc << 1) | c);
        let mut coeffs = vec![Q::zero(); 1 << w];
        if w > 0 {
            coeffs[idx] = Q::one();
        }
        Self::new(w, coeffs)
    }

    /// `f_1 ⊗ f_2 ⊗ … ⊗ f_w` for per-coordinate two-cell functions.
    pub fn product(factors: &[[Q; 2]]) -> Result<Self> {
        let w = factors.len();
        if w == 0 {
            return Err(Error::WindowTooSmall { got: 0, min: 1 });
        }
        let coeffs = (0..1usize << w)
            .map(|idx| {
                factors
                    .iter()
                    .enumerate()
                    .map(|(k, f)| &f[(idx >> (w - 1 - k)) & 1])
                    .fold(Q::one(), |acc, v| acc * v)
            })
            .collect();
        Self::new(w, coeffs)
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    fn half(&self) -> usize {
        1 << (self.window - 1)
    }

    /// True when the function does not depend on coordinate 1.
    pub fn ignores_first(&self) -> bool {
        let h = self.half();
        self.coeffs[..h] == self.coeffs[h..]
    }

    /// `g(x_1, …, x_w) = f(·, x_1, …, x_{w-1})`: moves a function that ignores
    /// coordinate 1 one step toward the start of the window. `None` when the
    /// function depends on coordinate 1 (its shift would leave the window).
    pub fn shift(&self) -> Option<Self> {
        if !self.ignores_first() {
            return None;
        }
        let h = self.half();
        let coeffs = (0..self.coeffs.len()).map(|i| self.coeffs[h + (i >> 1)].clone()).collect();
        Some(Self { window: self.window, coeffs })
    }

    pub fn is_nonnegative(&self) -> bool {
        self.coeffs.iter().all(|c| !c.is_negative())
    }
}

/// Applies the `w`-fold tensor power of the transfer matrix, coordinate by coordinate.
pub fn tensor_apply(spec: &KernelSpec, input: &CylinderVector) -> Result<CylinderVector> {
    Ok(apply_axiswise(&transfer_matrix(spec), input))
}

fn apply_axiswise(t: &TransferMatrix, input: &CylinderVector) -> CylinderVector {
    let e = &t.entries;
    let mut v = input.coeffs.clone();
    let w = input.window;
    for axis in 0..w {
        let stride = 1 << (w - 1 - axis);
        for base in 0..v.len() {
            if base & stride != 0 {
                continue;
            }
            let (x0, x1) = (&v[base], &v[base | stride]);
            let y0 = &e[0][0] * x0 + &e[0][1] * x1;
            let y1 = &e[1][0] * x0 + &e[1][1] * x1;
            v[base] = y0;
            v[base | stride] = y1;
        }
    }
    CylinderVector { window: w, coeffs: v }
}

/// Outcome of the finite-window intertwining check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntertwiningReport {
    pub a: Q,
    pub window: usize,
    /// Inner-window cells `(c_2, …, c_w)` of each basis function and whether
    /// `shift(J f) = J(shift f)` held exactly.
    pub checks: Vec<(Vec<usize>, bool)>,
    pub constant_ok: bool,
}

impl IntertwiningReport {
    pub fn all_pass(&self) -> bool {
        self.constant_ok && self.checks.iter().all(|(_, ok)| *ok)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|(_, ok)| !ok).count() + usize::from(!self.constant_ok)
    }
}

fn intertwines(t: &TransferMatrix, f: &CylinderVector) -> bool {
    let lhs = apply_axiswise(t, f).shift();
    let rhs = f.shift().map(|s| apply_axiswise(t, &s));
    matches!((lhs, rhs), (Some(l), Some(r)) if l == r)
}

/// Checks `shift ∘ J^{⊗w} = J^{⊗w} ∘ shift` on every basis function supported
/// on coordinates `2..=w`.
pub fn verify_intertwining(spec: &KernelSpec, window: usize) -> Result<IntertwiningReport> {
    if window < 2 {
        return Err(Error::WindowTooSmall { got: window, min: 2 });
    }
    if window >= 24 {
        return Err(Error::DimensionCap { dim: usize::MAX, cap: 1 << 23 });
    }
    let t = transfer_matrix(spec);
    let inner = window - 1;
    let checks = (0..1usize << inner)
        .map(|bits| {
            let cells: Vec<usize> = (0..inner).map(|k| (bits >> (inner - 1 - k)) & 1).collect();
            let mut factors = vec![[Q::one(), Q::one()]];
            factors.extend(cells.iter().map(|&c| if c == 0 { [Q::one(), Q::zero()] } else { [Q::zero(), Q::one()] }));
            let f = CylinderVector::product(&factors).expect("window ≥ 2");
            (cells, intertwines(&t, &f))
        })
        .collect();
    let constant_ok = intertwines(&t, &CylinderVector::constant(window, Q::one())?);
    Ok(IntertwiningReport { a: spec.a().clone(), window, checks, constant_ok })
}

/// Rank of the tensor power and the determinant identities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankReport {
    pub a: Q,
    pub window: usize,
    pub dimension: usize,
    pub rank: usize,
    /// Determinant of the single-coordinate matrix.
    pub determinant: Q,
    /// `det = -2a`.
    pub determinant_matches: bool,
    /// `|det|^w = (2a)^w`, the product of per-coordinate determinant magnitudes.
    pub det_magnitude_power: Q,
    /// Determinant of the full tensor power from elimination equals
    /// `det^{w·2^{w-1}}`.
    pub kron_determinant_matches: bool,
}

impl RankReport {
    /// Full rank: injective and, in finite dimension, onto (dense image).
    pub fn full_rank(&self) -> bool {
        self.rank == self.dimension
    }
}

pub fn verify_injective_dense(spec: &KernelSpec, window: usize, caps: &Caps) -> Result<RankReport> {
    if window == 0 {
        return Err(Error::WindowTooSmall { got: 0, min: 1 });
    }
    let dimension = 1usize.checked_shl(window as u32).filter(|d| *d <= caps.max_dimension).ok_or(
        Error::DimensionCap { dim: 1usize.checked_shl(window as u32).unwrap_or(usize::MAX), cap: caps.max_dimension },
    )?;
    let t = transfer_matrix(spec);
    let det = t.determinant();
    let two_a = spec.a() * Q::from_integer(2.into());
    let power = t.as_matrix().kron_power(window);
    let (rank, kron_det) = power.rank_and_determinant();
    let exponent = window * (dimension / 2);
    Ok(RankReport {
        a: spec.a().clone(),
        window,
        dimension,
        rank,
        determinant_matches: det == -two_a.clone(),
        det_magnitude_power: num_traits::pow(two_a, window),
        kron_determinant_matches: kron_det == num_traits::pow(det.clone(), exponent),
        determinant: det,
    })
}

/// `a, a², …, aⁿ` as kernel specs.
pub fn chain_specs(a: &Q, blocks: usize) -> Result<Vec<KernelSpec>> {
    if blocks == 0 {
        return Err(Error::Empty("chain"));
    }
    let mut out = Vec::with_capacity(blocks);
    let mut power = a.clone();
    for _ in 0..blocks {
        out.push(KernelSpec::new(power.clone())?);
        power *= a;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainBlock {
    pub a: Q,
    pub intertwining: bool,
    pub full_rank: bool,
    pub xi_entropy: f64,
}

/// Finite truncation of the chained operator `J_a ⊗ J_{a²} ⊗ …`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainReport {
    pub window: usize,
    pub blocks: Vec<ChainBlock>,
    /// `Σ_k H(a^k, 1 - a^k)`, the entropy of the input side.
    pub finite_entropy: f64,
    /// `blocks · w` bits, the entropy of the output side over the truncated windows.
    pub output_entropy: f64,
    /// Rank of the block tensor product equals the product of block ranks.
    pub product_full_rank: bool,
}

impl ChainReport {
    pub fn all_pass(&self) -> bool {
        self.product_full_rank && self.blocks.iter().all(|b| b.intertwining && b.full_rank)
    }
}

/// Verifies every block and the combined rank of their tensor product.
pub fn chain_blocks(specs: &[KernelSpec], window: usize, caps: &Caps, base: LogBase) -> Result<ChainReport> {
    if specs.is_empty() {
        return Err(Error::Empty("chain"));
    }
    let mut blocks = Vec::with_capacity(specs.len());
    let mut rank_product: usize = 1;
    let mut dim_product: usize = 1;
    for spec in specs {
        let tw = verify_intertwining(spec, window.max(2))?;
        let rk = verify_injective_dense(spec, window, caps)?;
        rank_product = rank_product.saturating_mul(rk.rank);
        dim_product = dim_product.saturating_mul(rk.dimension);
        blocks.push(ChainBlock {
            a: spec.a().clone(),
            intertwining: tw.all_pass(),
            full_rank: rk.full_rank(),
            xi_entropy: partition_entropy(&spec.xi_law(), base),
        });
    }
    // the truncated chain is the Kronecker product of the block powers; its
    // rank is the product of block ranks, confirmed directly when small
    let product_full_rank = if dim_product <= caps.max_dimension.min(1024) {
        let m = specs
            .iter()
            .map(|s| transfer_matrix(s).as_matrix().kron_power(window))
            .reduce(|acc, m| acc.kron(&m))
            .expect("nonempty");
        m.rank() == dim_product
    } else {
        rank_product == dim_product
    };
    let finite_entropy = blocks.iter().map(|b| b.xi_entropy).sum();
    let output_entropy = base.from_nats((specs.len() * window) as f64 * std::f64::consts::LN_2);
    Ok(ChainReport { window, blocks, finite_entropy, output_entropy, product_full_rank })
}

/// `(H(ξ), H(β))` for the kernel's two partitions.
pub fn entropy_pair(spec: &KernelSpec, base: LogBase) -> (f64, f64) {
    (partition_entropy(&spec.xi_law(), base), partition_entropy(&spec.beta_law(), base))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qi;

    fn spec(n: i64, d: i64) -> KernelSpec {
        KernelSpec::new(q(n, d)).unwrap()
    }

    #[test]
    fn kernel_values() {
        let s = spec(1, 4);
        assert_eq!(kernel_value(&s, XiCell::A, BetaCell::B), qi(0));
        assert_eq!(kernel_value(&s, XiCell::A, BetaCell::NotB), qi(2));
        assert_eq!(kernel_value(&s, XiCell::NotA, BetaCell::NotB), q(2, 3));
        assert_eq!(kernel_value(&s, XiCell::NotA, BetaCell::B), q(4, 3));
    }

    #[test]
    fn parameter_bounds() {
        for (n, d) in [(0, 1), (1, 2), (3, 4), (-1, 8)] {
            assert!(KernelSpec::new(q(n, d)).is_err(), "{n}/{d}");
        }
    }

    #[test]
    fn action_table_quarter() {
        let t = transfer_matrix(&spec(1, 4));
        assert_eq!(t.apply(&[qi(1), qi(0)]), [qi(0), q(1, 2)]);
        assert_eq!(t.apply(&[qi(0), qi(1)]), [qi(1), q(1, 2)]);
        assert_eq!(t.apply(&[qi(1), qi(1)]), [qi(1), qi(1)]);
        assert_eq!(t.adjoint_apply(&[qi(1), qi(1)]), [qi(1), qi(1)]);
        assert_eq!(t.determinant(), q(-1, 2));
        assert!(t.markov_check().all());
    }

    #[test]
    fn tensor_apply_examples() {
        let s = spec(1, 4);
        for w in 1..5 {
            let c = CylinderVector::constant(w, qi(1)).unwrap();
            assert_eq!(tensor_apply(&s, &c).unwrap(), c);
        }
        let f = CylinderVector::indicator(&[0]).unwrap();
        assert_eq!(tensor_apply(&s, &f).unwrap().coeffs(), &[qi(0), q(1, 2)]);
        // 1_A ⊗ 1_{X∖A} ↦ (2a 1_{X∖B}) ⊗ (1_B + (1-2a) 1_{X∖B})
        let f = CylinderVector::indicator(&[0, 1]).unwrap();
        let expected = CylinderVector::product(&[[qi(0), q(1, 2)], [qi(1), q(1, 2)]]).unwrap();
        assert_eq!(tensor_apply(&s, &f).unwrap(), expected);
        assert!(CylinderVector::constant(0, qi(1)).is_err());
        assert!(CylinderVector::new(2, vec![qi(1); 3]).is_err());
    }

    #[test]
    fn shift_moves_support() {
        // f(x1, x2, x3) = 1_{x2 = B} 1_{x3 = X∖B}
        let f = CylinderVector::product(&[[qi(1), qi(1)], [qi(1), qi(0)], [qi(0), qi(1)]]).unwrap();
        let g = f.shift().unwrap();
        let expected = CylinderVector::product(&[[qi(1), qi(0)], [qi(0), qi(1)], [qi(1), qi(1)]]).unwrap();
        assert_eq!(g, expected);
        assert!(CylinderVector::indicator(&[0, 1]).unwrap().shift().is_none());
    }

    #[test]
    fn intertwining_examples() {
        let r = verify_intertwining(&spec(1, 3), 3).unwrap();
        assert_eq!(r.checks.len(), 4);
        assert!(r.all_pass());
        let r = verify_intertwining(&spec(2, 5), 5).unwrap();
        assert_eq!(r.checks.len(), 16);
        assert!(r.all_pass());
        assert_eq!(
            verify_intertwining(&spec(1, 3), 1).unwrap_err(),
            Error::WindowTooSmall { got: 1, min: 2 }
        );
    }

    #[test]
    fn intertwining_fails_without_markov_property() {
        // a matrix that does not fix constants breaks the identity
        let mut t = transfer_matrix(&spec(1, 4));
        t.entries[0][1] = q(1, 2);
        let f = CylinderVector::product(&[[qi(1), qi(1)], [qi(1), qi(0)]]).unwrap();
        assert!(!intertwines(&t, &f));
    }

    #[test]
    fn rank_examples() {
        let caps = Caps::default();
        let r = verify_injective_dense(&spec(1, 4), 4, &caps).unwrap();
        assert_eq!((r.rank, r.dimension), (16, 16));
        assert!(r.determinant_matches && r.kron_determinant_matches);
        for a in [spec(1, 3), spec(1, 7), spec(49, 100)] {
            let r = verify_injective_dense(&a, 1, &caps).unwrap();
            assert_eq!(r.rank, 2);
        }
        let r = verify_injective_dense(&spec(1, 100), 8, &caps).unwrap();
        assert_eq!(r.rank, 256);
        assert_eq!(r.det_magnitude_power, num_traits::pow(q(1, 50), 8));
        let small = Caps { max_dimension: 8, ..Caps::default() };
        assert!(matches!(verify_injective_dense(&spec(1, 4), 4, &small), Err(Error::DimensionCap { .. })));
        assert!(verify_injective_dense(&spec(1, 4), 0, &caps).is_err());
    }

    #[test]
    fn chain_examples() {
        let caps = Caps::default();
        let specs = chain_specs(&q(1, 3), 2).unwrap();
        let r = chain_blocks(&specs, 2, &caps, LogBase::Binary).unwrap();
        assert!(r.all_pass());
        assert_eq!(r.output_entropy, 4.0);
        let single = chain_blocks(&specs[..1], 3, &caps, LogBase::Binary).unwrap();
        assert_eq!(single.all_pass(), verify_intertwining(&specs[0], 3).unwrap().all_pass());
        // near the upper end the powers still decay into (0, 1/2)
        let specs = chain_specs(&q(499, 1000), 6).unwrap();
        let r = chain_blocks(&specs, 1, &caps, LogBase::Binary).unwrap();
        assert!(r.finite_entropy.is_finite() && r.finite_entropy < 6.0);
        assert!(chain_specs(&q(1, 2), 2).is_err());
        assert!(chain_blocks(&[], 1, &caps, LogBase::Binary).is_err());
    }
}
