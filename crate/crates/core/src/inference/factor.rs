use crate::model::VarId;

/// Dense table over a sorted set of variables, row-major with the last
/// variable varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Factor {
    vars: Vec<VarId>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

impl Factor {
    /// A factor of ones. `scope` must be sorted and duplicate free.
    pub fn ones(scope: Vec<(VarId, usize)>) -> Self {
        debug_assert!(scope.windows(2).all(|w| w[0].0 < w[1].0));
        let (vars, cards): (Vec<_>, Vec<_>) = scope.into_iter().unzip();
        let size = cards.iter().product();
        Self {
            vars,
            cards,
            values: vec![1.0; size],
        }
    }

    #[cfg(test)]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Multiplies in a table laid out over `order` (any order, subset of
    /// this factor's scope).
    pub fn multiply_table(&mut self, order: &[VarId], table: &[f64]) {
        let strides = self.strides_of(order);
        let mut odometer = Odometer::new(&self.cards, &strides);
        for v in self.values.iter_mut() {
            *v *= table[odometer.target];
            odometer.step();
        }
    }

    /// Zeroes every entry inconsistent with `var = value`.
    pub fn observe(&mut self, var: VarId, value: usize) {
        let card = self.card(var);
        let mut indicator = vec![0.0; card];
        indicator[value] = 1.0;
        self.multiply_table(&[var], &indicator);
    }

    /// Multiplies in a factor whose scope is a subset of this one.
    pub fn multiply_subset(&mut self, other: &Factor) {
        self.multiply_table(&other.vars, &other.values);
    }

    /// Divides by a factor whose scope is a subset of this one, with 0/0 = 0.
    pub fn divide_subset(&mut self, other: &Factor) {
        let strides = self.strides_of(&other.vars);
        let mut odometer = Odometer::new(&self.cards, &strides);
        for v in self.values.iter_mut() {
            let d = other.values[odometer.target];
            *v = if d == 0.0 { 0.0 } else { *v / d };
            odometer.step();
        }
    }

    /// Sums out everything outside `keep`, returning a table laid out over
    /// `keep` in the given order.
    pub fn project(&self, keep: &[VarId]) -> Vec<f64> {
        let keep_cards: Vec<usize> = keep.iter().map(|&v| self.card(v)).collect();
        let mut out = vec![0.0; keep_cards.iter().product()];
        // strides of `keep` layout, expressed per variable of this factor
        let mut target_strides = vec![0usize; self.vars.len()];
        let mut stride = 1;
        for (k, &v) in keep.iter().enumerate().rev() {
            let pos = self.position(v);
            target_strides[pos] = stride;
            stride *= keep_cards[k];
        }
        let mut odometer = Odometer::new(&self.cards, &target_strides);
        for &v in &self.values {
            out[odometer.target] += v;
            odometer.step();
        }
        out
    }

    /// Marginal as a factor over the sorted set `keep`.
    pub fn marginal(&self, keep: &[VarId]) -> Factor {
        let values = self.project(keep);
        Factor {
            vars: keep.to_vec(),
            cards: keep.iter().map(|&v| self.card(v)).collect(),
            values,
        }
    }

    fn position(&self, var: VarId) -> usize {
        self.vars
            .binary_search(&var)
            .expect("variable belongs to the factor scope")
    }

    fn card(&self, var: VarId) -> usize {
        self.cards[self.position(var)]
    }

    /// For each variable of this factor, its stride in a table laid out over
    /// `order` (zero when absent).
    fn strides_of(&self, order: &[VarId]) -> Vec<usize> {
        let mut strides = vec![0usize; self.vars.len()];
        let mut stride = 1;
        for &v in order.iter().rev() {
            let pos = self.position(v);
            strides[pos] = stride;
            stride *= self.cards[pos];
        }
        strides
    }
}

/// Walks a row-major index space while tracking a linear index into a
/// second table with its own strides.
struct Odometer<'a> {
    cards: &'a [usize],
    strides: &'a [usize],
    digits: Vec<usize>,
    target: usize,
}

impl<'a> Odometer<'a> {
    fn new(cards: &'a [usize], strides: &'a [usize]) -> Self {
        Self {
            cards,
            strides,
            digits: vec![0; cards.len()],
            target: 0,
        }
    }

    fn step(&mut self) {
        for i in (0..self.cards.len()).rev() {
            self.digits[i] += 1;
            self.target += self.strides[i];
            if self.digits[i] < self.cards[i] {
                return;
            }
            self.target -= self.strides[i] * self.cards[i];
            self.digits[i] = 0;
        }
    }
}
