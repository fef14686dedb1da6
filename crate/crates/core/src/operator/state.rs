use crate::basis::legendre_table;
use crate::mesh::Mesh1D;

/// Global ordering of modal coefficients: all displacement blocks in
/// element order, then all velocity blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StateLayout {
    pub n: usize,
    pub q: usize,
    pub s: usize,
}

impl StateLayout {
    pub fn new(n: usize, q: usize, s: usize) -> Self {
        Self { n, q, s }
    }

    pub fn len(&self) -> usize {
        self.n * (self.q + 1) + self.n * (self.s + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn v_offset(&self) -> usize {
        self.n * (self.q + 1)
    }

    pub fn u_index(&self, j: usize, k: usize) -> usize {
        j * (self.q + 1) + k
    }

    pub fn v_index(&self, j: usize, k: usize) -> usize {
        self.v_offset() + j * (self.s + 1) + k
    }

    pub fn u_range(&self, j: usize) -> std::ops::Range<usize> {
        let start = self.u_index(j, 0);
        start..start + self.q + 1
    }

    pub fn v_range(&self, j: usize) -> std::ops::Range<usize> {
        let start = self.v_index(j, 0);
        start..start + self.s + 1
    }
}

/// Modal coefficients of `(u^h, v^h)` laid out per [`StateLayout`].
#[derive(Debug, Clone, PartialEq)]
pub struct DGState {
    layout: StateLayout,
    coeffs: Vec<f64>,
}

impl DGState {
    pub fn zeros(layout: StateLayout) -> Self {
        Self {
            layout,
            coeffs: vec![0.0; layout.len()],
        }
    }

    /// Panics if `coeffs` does not match the layout length.
    pub fn from_vec(layout: StateLayout, coeffs: Vec<f64>) -> Self {
        assert_eq!(
            coeffs.len(),
            layout.len(),
            "state length does not match layout"
        );
        Self { layout, coeffs }
    }

    pub fn layout(&self) -> StateLayout {
        self.layout
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn u_block(&self, j: usize) -> &[f64] {
        &self.coeffs[self.layout.u_range(j)]
    }

    pub fn v_block(&self, j: usize) -> &[f64] {
        &self.coeffs[self.layout.v_range(j)]
    }

    pub fn u_block_mut(&mut self, j: usize) -> &mut [f64] {
        let r = self.layout.u_range(j);
        &mut self.coeffs[r]
    }

    pub fn v_block_mut(&mut self, j: usize) -> &mut [f64] {
        let r = self.layout.v_range(j);
        &mut self.coeffs[r]
    }

    /// `[u, u_x, u_xx, u_xxx]` at reference point `xi` of element `j`.
    pub fn eval_u(&self, mesh: &Mesh1D, j: usize, xi: f64) -> [f64; 4] {
        eval_modal(self.u_block(j), 2.0 / mesh.width(j), xi)
    }

    /// `[v, v_x, v_xx, v_xxx]` at reference point `xi` of element `j`.
    pub fn eval_v(&self, mesh: &Mesh1D, j: usize, xi: f64) -> [f64; 4] {
        eval_modal(self.v_block(j), 2.0 / mesh.width(j), xi)
    }

    /// Displacement at physical `x`; `None` outside the mesh.
    pub fn u_at(&self, mesh: &Mesh1D, x: f64) -> Option<f64> {
        let j = mesh.locate(x)?;
        let (xi, _) = mesh.to_reference(j, x);
        Some(self.eval_u(mesh, j, xi)[0])
    }
}

/// Modal expansion and physical derivatives; `jac = dξ/dx`.
pub(crate) fn eval_modal(coeffs: &[f64], jac: f64, xi: f64) -> [f64; 4] {
    let deg = coeffs.len() - 1;
    let mut table = vec![[0.0; 4]; deg + 1];
    legendre_table(deg, xi, &mut table);
    let mut out = [0.0; 4];
    for (c, row) in coeffs.iter().zip(&table) {
        for r in 0..4 {
            out[r] += c * row[r];
        }
    }
    let mut scale = 1.0;
    for o in out.iter_mut() {
        *o *= scale;
        scale *= jac;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_indices() {
        let l = StateLayout::new(3, 4, 2);
        assert_eq!(l.len(), 3 * 5 + 3 * 3);
        assert_eq!(l.u_index(1, 0), 5);
        assert_eq!(l.v_index(0, 0), 15);
        assert_eq!(l.v_range(2), 21..24);
    }

    #[test]
    fn modal_evaluation_scales_derivatives() {
        let mesh = Mesh1D::uniform(0.0, 4.0, 2).unwrap();
        let mut st = DGState::zeros(StateLayout::new(2, 3, 1));
        // u = P_1(ξ) on element 1 → u = x - 3, u_x = 1
        st.u_block_mut(1)[1] = 1.0;
        let e = st.eval_u(&mesh, 1, 0.5);
        assert!((e[0] - 0.5).abs() < 1e-15 && (e[1] - 1.0).abs() < 1e-15);
        assert_eq!(st.u_at(&mesh, 3.5), Some(0.5));
    }
}
