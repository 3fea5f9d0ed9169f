//! Dense coordinate tensors with per-slot variance.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{Error, ExprError, Result};
use crate::expr::{parse_expr, RationalExpr, MAX_VARS};
use crate::linalg;

/// A coordinate chart: an ordered list of coordinate names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chart {
    coords: Vec<String>,
}

impl Chart {
    pub fn new<S: Into<String>>(coords: impl IntoIterator<Item = S>) -> Result<Self> {
        let coords: Vec<String> = coords.into_iter().map(Into::into).collect();
        let dim = coords.len();
        if dim < 4 || !dim.is_multiple_of(2) || dim > MAX_VARS {
            return Err(Error::Dimension(dim));
        }
        Ok(Self { coords })
    }

    /// Chart with coordinates `x1, ..., x<dim>`.
    pub fn standard(dim: usize) -> Result<Self> {
        Self::new((1..=dim).map(|i| format!("x{i}")))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Half the dimension.
    pub fn n(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn names(&self) -> Vec<&str> {
        self.coords.iter().map(String::as_str).collect()
    }

    pub fn parse(&self, text: &str) -> std::result::Result<RationalExpr, ExprError> {
        parse_expr(text, &self.names())
    }

    pub fn coord_index(&self, name: &str) -> std::result::Result<usize, ExprError> {
        self.coords.iter().position(|c| c == name).ok_or_else(|| ExprError::UnknownCoordinate(name.to_string()))
    }

    pub fn differentiate(&self, e: &RationalExpr, coord: &str) -> std::result::Result<RationalExpr, ExprError> {
        Ok(e.derivative(self.coord_index(coord)?))
    }

    pub fn display(&self, e: &RationalExpr) -> String {
        e.display_with(&self.names())
    }

    pub fn zero(&self) -> RationalExpr {
        RationalExpr::zero(self.dim())
    }

    pub fn one(&self) -> RationalExpr {
        RationalExpr::one(self.dim())
    }

    pub fn int(&self, k: i64) -> RationalExpr {
        RationalExpr::from_integer(self.dim(), k)
    }

    pub fn ratio(&self, p: i64, q: i64) -> RationalExpr {
        RationalExpr::from_ratio(self.dim(), p, q)
    }

    pub fn coord(&self, i: usize) -> RationalExpr {
        RationalExpr::var(self.dim(), i)
    }

    /// Sum of squares of the coordinates.
    pub fn norm_squared(&self) -> RationalExpr {
        let squares: Vec<RationalExpr> = (0..self.dim()).map(|i| self.coord(i).pow(2)).collect();
        RationalExpr::sum(self.dim(), squares.iter())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variance {
    Up,
    Down,
}

use Variance::{Down, Up};

/// Dense tensor with components stored row-major over its slots.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Tensor {
    dim: usize,
    variance: Vec<Variance>,
    comps: Vec<RationalExpr>,
}

/// Iterates all multi-indices of the given rank in row-major order.
pub fn multi_indices(dim: usize, rank: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = dim.pow(rank as u32);
    (0..total).map(move |mut flat| {
        let mut idx = vec![0; rank];
        for slot in (0..rank).rev() {
            idx[slot] = flat % dim;
            flat /= dim;
        }
        idx
    })
}

/// All permutations of `0..k` together with their signs.
fn permutations(k: usize) -> Vec<(Vec<usize>, i64)> {
    if k == 0 {
        return vec![(Vec::new(), 1)];
    }
    let mut out = Vec::new();
    for (p, s) in permutations(k - 1) {
        for pos in 0..k {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            // Inserting the largest element at `pos` passes it over k-1-pos others.
            let sign = if (k - 1 - pos).is_multiple_of(2) { s } else { -s };
            out.push((q, sign));
        }
    }
    out
}

fn factorial(k: usize) -> i64 {
    (1..=k as i64).product()
}

impl Tensor {
    pub fn zeros(dim: usize, variance: &[Variance]) -> Self {
        let count = dim.pow(variance.len() as u32);
        Self { dim, variance: variance.to_vec(), comps: vec![RationalExpr::zero(dim); count] }
    }

    pub fn from_fn(dim: usize, variance: &[Variance], mut f: impl FnMut(&[usize]) -> RationalExpr) -> Self {
        let comps = multi_indices(dim, variance.len()).map(|i| f(&i)).collect();
        Self { dim, variance: variance.to_vec(), comps }
    }

    pub fn try_from_fn(
        dim: usize,
        variance: &[Variance],
        mut f: impl FnMut(&[usize]) -> Result<RationalExpr>,
    ) -> Result<Self> {
        let comps = multi_indices(dim, variance.len()).map(|i| f(&i)).collect::<Result<_>>()?;
        Ok(Self { dim, variance: variance.to_vec(), comps })
    }

    pub fn scalar(e: RationalExpr) -> Self {
        Self { dim: e.nvars(), variance: Vec::new(), comps: vec![e] }
    }

    /// Builds a rank-2 tensor from a matrix.
    pub fn from_matrix(m: &linalg::Matrix, variance: [Variance; 2]) -> Self {
        let dim = m.len();
        Self::from_fn(dim, &variance, |i| m[i[0]][i[1]].clone())
    }

    pub fn to_matrix(&self) -> linalg::Matrix {
        assert_eq!(self.rank(), 2);
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.get(&[i, j]).clone()).collect()).collect()
    }

    /// Kronecker delta with variance (down, up).
    pub fn delta(dim: usize) -> Self {
        Self::from_fn(dim, &[Down, Up], |i| if i[0] == i[1] { RationalExpr::one(dim) } else { RationalExpr::zero(dim) })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn variance(&self) -> &[Variance] {
        &self.variance
    }

    pub fn components(&self) -> &[RationalExpr] {
        &self.comps
    }

    fn flat(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    #[inline]
    pub fn get(&self, idx: &[usize]) -> &RationalExpr {
        &self.comps[self.flat(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: RationalExpr) {
        let k = self.flat(idx);
        self.comps[k] = value;
    }

    /// The single component of a rank-0 tensor.
    pub fn value(&self) -> &RationalExpr {
        assert_eq!(self.rank(), 0);
        &self.comps[0]
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(RationalExpr::is_zero)
    }

    /// First nonzero component in row-major order.
    pub fn first_nonzero(&self) -> Option<(Vec<usize>, &RationalExpr)> {
        multi_indices(self.dim, self.rank()).zip(self.comps.iter()).find(|(_, c)| !c.is_zero())
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || self.variance != other.variance {
            return Err(Error::Shape(format!(
                "{:?} (dim {}) vs {:?} (dim {})",
                self.variance, self.dim, other.variance, other.dim
            )));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(&RationalExpr) -> RationalExpr) -> Self {
        Self { dim: self.dim, variance: self.variance.clone(), comps: self.comps.iter().map(f).collect() }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            dim: self.dim,
            variance: self.variance.clone(),
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            dim: self.dim,
            variance: self.variance.clone(),
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a - b).collect(),
        })
    }

    /// Sum of two tensors of identical shape; panics on mismatch.
    pub fn add(&self, other: &Self) -> Self {
        self.try_add(other).expect("tensor shapes agree")
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.try_sub(other).expect("tensor shapes agree")
    }

    pub fn neg(&self) -> Self {
        self.map(|c| -c)
    }

    pub fn scale(&self, k: &RationalExpr) -> Self {
        self.map(|c| c * k)
    }

    pub fn scale_ratio(&self, p: i64, q: i64) -> Self {
        let k = BigRational::new(BigInt::from(p), BigInt::from(q));
        self.map(|c| c.scale(&k))
    }

    pub fn outer(&self, other: &Self) -> Self {
        let mut variance = self.variance.clone();
        variance.extend_from_slice(&other.variance);
        let split = self.rank();
        Self::from_fn(self.dim, &variance, |i| {
            let a = self.get(&i[..split]);
            if a.is_zero() {
                return RationalExpr::zero(self.dim);
            }
            a * other.get(&i[split..])
        })
    }

    /// Reorders slots: slot `k` of the result is slot `perm[k]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.rank());
        let variance: Vec<Variance> = perm.iter().map(|&p| self.variance[p]).collect();
        let mut src = vec![0; self.rank()];
        Self::from_fn(self.dim, &variance, |i| {
            for (k, &p) in perm.iter().enumerate() {
                src[p] = i[k];
            }
            self.get(&src).clone()
        })
    }

    fn check_positions(&self, positions: &[usize]) -> Result<()> {
        if positions.iter().any(|&p| p >= self.rank()) {
            return Err(Error::Shape(format!("slot out of range in {positions:?}")));
        }
        let mut sorted = positions.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != positions.len() {
            return Err(Error::Shape(format!("repeated slot in {positions:?}")));
        }
        if let Some(&first) = positions.first() {
            if positions.iter().any(|&p| self.variance[p] != self.variance[first]) {
                return Err(Error::Variance(format!("mixed variance at slots {positions:?}")));
            }
        }
        Ok(())
    }

    fn average_over(&self, positions: &[usize], signed: bool) -> Result<Self> {
        self.check_positions(positions)?;
        let perms = permutations(positions.len());
        let norm = BigRational::new(BigInt::from(1), BigInt::from(factorial(positions.len())));
        let mut src = vec![0; self.rank()];
        Ok(Self::from_fn(self.dim, &self.variance, |i| {
            let mut terms = Vec::with_capacity(perms.len());
            for (p, s) in &perms {
                src.copy_from_slice(i);
                for (k, &pk) in p.iter().enumerate() {
                    src[positions[k]] = i[positions[pk]];
                }
                let c = self.get(&src);
                if c.is_zero() {
                    continue;
                }
                terms.push(if signed && *s < 0 { -c } else { c.clone() });
            }
            RationalExpr::sum(self.dim, terms.iter()).scale(&norm)
        }))
    }

    pub fn symmetrize(&self, positions: &[usize]) -> Result<Self> {
        self.average_over(positions, false)
    }

    pub fn antisymmetrize(&self, positions: &[usize]) -> Result<Self> {
        self.average_over(positions, true)
    }

    /// Whether swapping slots `i` and `j` multiplies the tensor by `sign`.
    pub fn has_swap_symmetry(&self, i: usize, j: usize, sign: i64) -> bool {
        let mut perm: Vec<usize> = (0..self.rank()).collect();
        perm.swap(i, j);
        let swapped = self.permute(&perm);
        if sign > 0 {
            swapped == *self
        } else {
            swapped.add(self).is_zero()
        }
    }

    pub fn is_totally_antisymmetric(&self) -> bool {
        (1..self.rank()).all(|k| self.has_swap_symmetry(k - 1, k, -1))
    }

    /// Sums over one upper and one lower slot.
    pub fn contract(&self, up: usize, down: usize) -> Result<Self> {
        if up >= self.rank() || down >= self.rank() || up == down {
            return Err(Error::Shape(format!("cannot contract slots {up} and {down}")));
        }
        if self.variance[up] != Up || self.variance[down] != Down {
            return Err(Error::Variance(format!("contraction needs an upper slot {up} and a lower slot {down}")));
        }
        let keep: Vec<usize> = (0..self.rank()).filter(|&k| k != up && k != down).collect();
        let variance: Vec<Variance> = keep.iter().map(|&k| self.variance[k]).collect();
        let mut src = vec![0; self.rank()];
        Ok(Self::from_fn(self.dim, &variance, |i| {
            for (k, &slot) in keep.iter().enumerate() {
                src[slot] = i[k];
            }
            let terms: Vec<RationalExpr> = (0..self.dim)
                .map(|d| {
                    src[up] = d;
                    src[down] = d;
                    self.get(&src).clone()
                })
                .collect();
            RationalExpr::sum(self.dim, terms.iter())
        }))
    }

    /// Coordinate partial derivative; the new lower slot comes first.
    pub fn partial(&self) -> Self {
        let mut variance = vec![Down];
        variance.extend_from_slice(&self.variance);
        Self::from_fn(self.dim, &variance, |i| self.get(&i[1..]).derivative(i[0]))
    }

    /// Replaces slot `pos` by its contraction with a matrix:
    /// `out[.., a, ..] = sum_b m(a, b) * self[.., b, ..]`.
    fn transform_slot(&self, pos: usize, new: Variance, m: impl Fn(usize, usize) -> RationalExpr) -> Self {
        let mut variance = self.variance.clone();
        variance[pos] = new;
        let mut src = vec![0; self.rank()];
        Self::from_fn(self.dim, &variance, |i| {
            src.copy_from_slice(i);
            let mut terms = Vec::new();
            for b in 0..self.dim {
                src[pos] = b;
                let c = self.get(&src);
                if c.is_zero() {
                    continue;
                }
                let k = m(i[pos], b);
                if !k.is_zero() {
                    terms.push(&k * c);
                }
            }
            RationalExpr::sum(self.dim, terms.iter())
        })
    }

    /// `phi^a = J^{ab} phi_b` at slot `pos`.
    pub fn raise(&self, pos: usize, j_inv: &Tensor) -> Result<Self> {
        if pos >= self.rank() || self.variance[pos] != Down {
            return Err(Error::Variance(format!("slot {pos} is not a lower index")));
        }
        Ok(self.transform_slot(pos, Up, |a, b| j_inv.get(&[a, b]).clone()))
    }

    /// `psi_b = psi^a J_{ab}` at slot `pos`.
    pub fn lower(&self, pos: usize, j: &Tensor) -> Result<Self> {
        if pos >= self.rank() || self.variance[pos] != Up {
            return Err(Error::Variance(format!("slot {pos} is not an upper index")));
        }
        Ok(self.transform_slot(pos, Down, |b, a| j.get(&[a, b]).clone()))
    }

    /// Exterior derivative with `(d w) = (p+1) * antisymmetrized partial`.
    pub fn exterior_derivative(&self) -> Result<Self> {
        if self.variance.contains(&Up) {
            return Err(Error::Variance("forms must have lower indices only".into()));
        }
        if !self.is_totally_antisymmetric() {
            return Err(Error::NotSkew("form".into()));
        }
        let d = self.partial();
        if self.rank() == 0 {
            return Ok(d);
        }
        let all: Vec<usize> = (0..d.rank()).collect();
        Ok(d.antisymmetrize(&all)?.scale_ratio(d.rank() as i64, 1))
    }

    /// Wedge product normalized so that `(a ^ b) = (p+q)!/(p! q!) Alt(a (x) b)`.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        let p = self.rank();
        let q = other.rank();
        let prod = self.outer(other);
        let all: Vec<usize> = (0..p + q).collect();
        let k = factorial(p + q) / (factorial(p) * factorial(q));
        Ok(prod.antisymmetrize(&all)?.scale_ratio(k, 1))
    }

    /// Index-notation product and contraction, e.g. `"ab,bc->ac"`.
    ///
    /// Every index letter that is not in the output must occur exactly twice
    /// among the operands, once upper and once lower; output letters occur
    /// exactly once.
    pub fn einsum(spec: &str, operands: &[&Tensor]) -> Result<Self> {
        let (lhs, out) =
            spec.split_once("->").ok_or_else(|| Error::Shape(format!("einsum spec `{spec}` lacks `->`")))?;
        let inputs: Vec<Vec<char>> = lhs.split(',').map(|s| s.trim().chars().collect()).collect();
        let output: Vec<char> = out.trim().chars().collect();
        if inputs.len() != operands.len() {
            return Err(Error::Shape(format!("einsum `{spec}` expects {} operands", inputs.len())));
        }
        let dim = operands.first().map(|t| t.dim).unwrap_or(0);
        for (letters, t) in inputs.iter().zip(operands) {
            if letters.len() != t.rank() || t.dim != dim {
                return Err(Error::Shape(format!("operand does not match `{spec}`")));
            }
        }
        let mut occurrences: Vec<(char, Vec<Variance>)> = Vec::new();
        for (letters, t) in inputs.iter().zip(operands) {
            for (k, &c) in letters.iter().enumerate() {
                match occurrences.iter_mut().find(|(l, _)| *l == c) {
                    Some((_, v)) => v.push(t.variance[k]),
                    None => occurrences.push((c, vec![t.variance[k]])),
                }
            }
        }
        let mut out_variance = Vec::new();
        for c in &output {
            match occurrences.iter().find(|(l, _)| l == c) {
                Some((_, v)) if v.len() == 1 => out_variance.push(v[0]),
                _ => return Err(Error::Shape(format!("output index `{c}` must occur once"))),
            }
        }
        let mut summed = Vec::new();
        for (c, v) in &occurrences {
            if output.contains(c) {
                continue;
            }
            if v.len() != 2 || v[0] == v[1] {
                return Err(Error::Variance(format!("summed index `{c}` must appear once upper and once lower")));
            }
            summed.push(*c);
        }
        let letters: Vec<char> = output.iter().chain(summed.iter()).copied().collect();
        let slot_of: Vec<Vec<usize>> =
            inputs.iter().map(|ls| ls.iter().map(|c| letters.iter().position(|l| l == c).unwrap()).collect()).collect();
        let nfree = output.len();
        let sums: Vec<Vec<usize>> = multi_indices(dim, summed.len()).collect();
        let mut assignment = vec![0; letters.len()];
        let mut idx_buf: Vec<Vec<usize>> = inputs.iter().map(|l| vec![0; l.len()]).collect();
        Ok(Self::from_fn(dim, &out_variance, |free| {
            assignment[..nfree].copy_from_slice(free);
            let mut terms = Vec::new();
            'outer: for s in &sums {
                assignment[nfree..].copy_from_slice(s);
                let mut prod: Option<RationalExpr> = None;
                for (k, t) in operands.iter().enumerate() {
                    for (slot, &l) in slot_of[k].iter().enumerate() {
                        idx_buf[k][slot] = assignment[l];
                    }
                    let c = t.get(&idx_buf[k]);
                    if c.is_zero() {
                        continue 'outer;
                    }
                    prod = Some(match prod {
                        None => c.clone(),
                        Some(p) => &p * c,
                    });
                }
                if let Some(p) = prod {
                    terms.push(p);
                }
            }
            RationalExpr::sum(dim, terms.iter())
        }))
    }

    /// Canonical multi-line rendering of the nonzero components.
    pub fn display_with(&self, chart: &Chart) -> String {
        let mut out = String::new();
        for (idx, c) in multi_indices(self.dim, self.rank()).zip(&self.comps) {
            if c.is_zero() {
                continue;
            }
            let label: Vec<String> = idx.iter().map(|i| (i + 1).to_string()).collect();
            out.push_str(&format!("[{}] {}\n", label.join(","), chart.display(c)));
        }
        if out.is_empty() {
            out.push_str("0\n");
        }
        out
    }
}

impl fmt::Display for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (idx, c) in multi_indices(self.dim, self.rank()).zip(&self.comps) {
            if !c.is_zero() {
                writeln!(f, "{idx:?} {c}")?;
            }
        }
        Ok(())
    }
}

/// Inverse of a non-degenerate 2-form, with `J_ac J^bc = delta_a^b`.
pub fn inverse_two_form(j: &Tensor) -> Result<Tensor> {
    if j.variance() != [Down, Down] {
        return Err(Error::Variance("a 2-form has two lower indices".into()));
    }
    if !j.has_swap_symmetry(0, 1, -1) {
        return Err(Error::NotSkew("J".into()));
    }
    let inv = linalg::inverse(&j.to_matrix()).ok_or_else(|| Error::Singular("J".into()))?;
    // J K^T = 1, so K is the transpose of the matrix inverse.
    Ok(Tensor::from_fn(j.dim(), &[Up, Up], |i| inv[i[1]][i[0]].clone()))
}
