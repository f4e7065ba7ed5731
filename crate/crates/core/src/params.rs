//! Uniform access to the learnable tensors of a model, used by the optimizer,
//! the gradient auditor and checkpointing.

/// A structure of named parameter tensors visited in a fixed order.
///
/// The visit order defines the flat layout used by [`ParamSet::flatten`], so
/// a parameter set and its gradient (same structure) line up element by element.
pub trait ParamSet {
    fn visit(&self, f: &mut dyn FnMut(&str, [usize; 4], &[f64]));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64]));

    fn num_params(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, _, v| n += v.len());
        n
    }

    fn group_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        self.visit(&mut |name, _, _| names.push(name.to_string()));
        names
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        self.visit(&mut |_, _, v| out.extend_from_slice(v));
        out
    }

    /// Overwrites every parameter from `flat`; panics when the length differs.
    fn assign_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params(), "flat parameter length mismatch");
        let mut offset = 0;
        self.visit_mut(&mut |_, v| {
            v.copy_from_slice(&flat[offset..offset + v.len()]);
            offset += v.len();
        });
    }

    fn fill(&mut self, value: f64) {
        self.visit_mut(&mut |_, v| v.fill(value));
    }

    fn all_finite(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |_, _, v| ok &= v.iter().all(|x| x.is_finite()));
        ok
    }
}
