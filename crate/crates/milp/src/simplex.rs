//! Dense bounded-variable simplex.
//!
//! Every row `a·x (sense) b` gets a slack `s = a·x` whose bounds encode the
//! sense, so the working system is `A x - s = 0` with all variables boxed or
//! half-bounded. The tableau `B^-1 [A | -I]` is kept explicitly. Phase 1
//! minimizes the sum of infeasibilities from any basis, phase 2 is Dantzig
//! pricing with a Bland fallback on degenerate streaks, and a dual simplex is
//! used when only bounds change (branch-and-bound children).

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpOptions {
    pub primal_tol: f64,
    pub dual_tol: f64,
    pub pivot_tol: f64,
    pub max_iterations: usize,
    pub refactor_every: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            primal_tol: 1e-9,
            dual_tol: 1e-9,
            pivot_tol: 1e-9,
            max_iterations: 200_000,
            refactor_every: 150,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
    Free,
}

enum Ratio {
    Flip(f64),
    Pivot { row: usize, theta: f64, to_upper: bool },
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct DenseSimplex {
    m: usize,
    n: usize,
    nt: usize,
    a: Vec<f64>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    cost_scale: f64,
    obj_const: f64,
    t: Vec<f64>,
    d: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<State>,
    x: Vec<f64>,
    since_refactor: usize,
    iterations: usize,
    /// Iteration count when the current `solve` call began.
    solve_start: usize,
    opts: LpOptions,
    nz: Vec<usize>,
}

fn pow2_scale(max_abs: f64) -> f64 {
    if max_abs > 0.0 && max_abs.is_finite() {
        (-(max_abs.log2().round())).exp2()
    } else {
        1.0
    }
}

impl DenseSimplex {
    /// Builds the LP relaxation of `model` (integrality is ignored).
    pub fn new(model: &crate::model::MixedIntegerModel, opts: LpOptions) -> Self {
        use crate::model::Sense;
        let m = model.num_rows();
        let n = model.num_vars();
        let nt = n + m;
        let mut a = vec![0.0; m * nt];
        for (i, row) in model.rows().iter().enumerate() {
            for &(v, c) in &row.terms {
                a[i * nt + v.0] += c;
            }
        }
        let mut row_scale = vec![1.0; m];
        for i in 0..m {
            let mx = a[i * nt..i * nt + n].iter().fold(0.0_f64, |s, v| s.max(v.abs()));
            row_scale[i] = pow2_scale(mx);
            for v in &mut a[i * nt..i * nt + n] {
                *v *= row_scale[i];
            }
        }
        let mut col_scale = vec![1.0; n];
        for j in 0..n {
            let mut mx = 0.0_f64;
            for i in 0..m {
                mx = mx.max(a[i * nt + j].abs());
            }
            col_scale[j] = pow2_scale(mx);
            for i in 0..m {
                a[i * nt + j] *= col_scale[j];
            }
        }
        for i in 0..m {
            a[i * nt + n + i] = -1.0;
        }
        let obj = model.objective();
        let cmax = (0..n).fold(0.0_f64, |s, j| s.max((obj[j] * col_scale[j]).abs()));
        let cost_scale = if cmax > 0.0 { 1.0 / pow2_scale(cmax) } else { 1.0 };
        let mut cost = vec![0.0; nt];
        for j in 0..n {
            cost[j] = obj[j] * col_scale[j] / cost_scale;
        }
        let mut lo = vec![0.0; nt];
        let mut up = vec![0.0; nt];
        for (j, v) in model.vars().iter().enumerate() {
            lo[j] = v.lower / col_scale[j];
            up[j] = v.upper / col_scale[j];
        }
        for (i, row) in model.rows().iter().enumerate() {
            let b = row.rhs * row_scale[i];
            let (l, u) = match row.sense {
                Sense::Le => (f64::NEG_INFINITY, b),
                Sense::Ge => (b, f64::INFINITY),
                Sense::Eq => (b, b),
            };
            lo[n + i] = l;
            up[n + i] = u;
        }
        let mut s = DenseSimplex {
            m,
            n,
            nt,
            a,
            cost,
            lo,
            up,
            row_scale,
            col_scale,
            cost_scale,
            obj_const: model.objective_constant(),
            t: vec![0.0; m * nt],
            d: vec![0.0; nt],
            basis: (n..nt).collect(),
            state: vec![State::Lower; nt],
            x: vec![0.0; nt],
            since_refactor: 0,
            iterations: 0,
            solve_start: 0,
            opts,
            nz: Vec::with_capacity(nt),
        };
        for j in 0..n {
            s.place_nonbasic(j, State::Lower);
        }
        for i in 0..m {
            s.state[n + i] = State::Basic;
        }
        s.refactor();
        s
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    fn budget_spent(&self) -> bool {
        self.iterations - self.solve_start >= self.opts.max_iterations
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    fn place_nonbasic(&mut self, j: usize, prefer: State) {
        let (l, u) = (self.lo[j], self.up[j]);
        let st = match prefer {
            State::Upper if u.is_finite() => State::Upper,
            _ if l.is_finite() => State::Lower,
            _ if u.is_finite() => State::Upper,
            _ => State::Free,
        };
        self.state[j] = st;
        self.x[j] = match st {
            State::Lower => l,
            State::Upper => u,
            _ => 0.0,
        };
    }

    /// Changes the bounds of structural variable `j` (original units).
    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        let l = lower / self.col_scale[j];
        let u = upper / self.col_scale[j];
        if self.lo[j] == l && self.up[j] == u {
            return;
        }
        self.lo[j] = l;
        self.up[j] = u;
        if self.state[j] != State::Basic {
            let old = self.x[j];
            let prefer = self.state[j];
            self.place_nonbasic(j, prefer);
            let delta = self.x[j] - old;
            if delta != 0.0 {
                let nt = self.nt;
                for i in 0..self.m {
                    let tij = self.t[i * nt + j];
                    if tij != 0.0 {
                        self.x[self.basis[i]] -= tij * delta;
                    }
                }
            }
        }
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lo[j] * self.col_scale[j], self.up[j] * self.col_scale[j])
    }

    /// Structural variable values in original units.
    pub fn values(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| self.x[j] * self.col_scale[j])
            .collect()
    }

    pub fn objective(&self) -> f64 {
        let mut s = 0.0;
        for j in 0..self.n {
            s += self.cost[j] * self.x[j];
        }
        s * self.cost_scale + self.obj_const
    }

    /// Row duals: sensitivity of the optimal objective to each row right-hand side.
    pub fn row_duals(&self) -> Vec<f64> {
        (0..self.m)
            .map(|i| {
                let j = self.n + i;
                if self.state[j] == State::Basic {
                    0.0
                } else {
                    self.d[j] * self.cost_scale * self.row_scale[i]
                }
            })
            .collect()
    }

    fn primal_infeasibility(&self) -> f64 {
        let mut worst = 0.0_f64;
        for &b in &self.basis {
            let x = self.x[b];
            worst = worst.max(self.lo[b] - x).max(x - self.up[b]);
        }
        worst
    }

    fn dual_feasible(&self) -> bool {
        let tol = self.opts.dual_tol * 10.0;
        (0..self.nt).all(|j| match self.state[j] {
            State::Basic => true,
            State::Lower => self.lo[j] == self.up[j] || self.d[j] >= -tol,
            State::Upper => self.lo[j] == self.up[j] || self.d[j] <= tol,
            State::Free => self.d[j].abs() <= tol,
        })
    }

    fn recompute_duals(&mut self) {
        let nt = self.nt;
        self.d.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * nt..(i + 1) * nt];
                for (dj, &tij) in self.d.iter_mut().zip(row) {
                    *dj -= cb * tij;
                }
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    fn recompute_basics(&mut self) {
        let nt = self.nt;
        for i in 0..self.m {
            let row = &self.t[i * nt..(i + 1) * nt];
            let mut s = 0.0;
            for j in 0..nt {
                if self.state[j] != State::Basic && self.x[j] != 0.0 {
                    s -= row[j] * self.x[j];
                }
            }
            self.x[self.basis[i]] = s;
        }
    }

    /// Pivots column `q` into row `r`. Updates tableau and reduced costs only.
    fn pivot(&mut self, r: usize, q: usize) {
        let nt = self.nt;
        let piv = self.t[r * nt + q];
        {
            let row = &mut self.t[r * nt..(r + 1) * nt];
            let inv = 1.0 / piv;
            self.nz.clear();
            for (j, v) in row.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v *= inv;
                    if v.abs() < 1e-14 {
                        *v = 0.0;
                    } else {
                        self.nz.push(j);
                    }
                }
            }
            row[q] = 1.0;
        }
        let (before, rest) = self.t.split_at_mut(r * nt);
        let (prow, after) = rest.split_at_mut(nt);
        let nz = &self.nz;
        let update = |row: &mut [f64]| {
            let f = row[q];
            if f != 0.0 {
                for &j in nz {
                    row[j] -= f * prow[j];
                }
                row[q] = 0.0;
            }
        };
        before.chunks_exact_mut(nt).for_each(update);
        after.chunks_exact_mut(nt).for_each(update);
        let dq = self.d[q];
        if dq != 0.0 {
            for &j in nz {
                self.d[j] -= dq * prow[j];
            }
            self.d[q] = 0.0;
        }
        let leaving = self.basis[r];
        self.basis[r] = q;
        self.state[q] = State::Basic;
        if self.state[leaving] == State::Basic {
            self.state[leaving] = State::Lower;
        }
        self.since_refactor += 1;
    }

    /// Rebuilds the tableau for the current basis from the original matrix.
    fn refactor(&mut self) {
        let (m, n, nt) = (self.m, self.n, self.nt);
        for i in 0..m {
            for j in 0..nt {
                self.t[i * nt + j] = -self.a[i * nt + j];
            }
        }
        let wanted: Vec<usize> = self.basis.iter().copied().filter(|&b| b < n).collect();
        let mut locked = vec![false; m];
        for &b in &self.basis {
            if b >= n {
                locked[b - n] = true;
            }
        }
        let mut new_basis: Vec<usize> = (n..nt).collect();
        for j in 0..nt {
            if self.state[j] == State::Basic {
                self.state[j] = State::Lower;
            }
        }
        for i in 0..m {
            self.state[n + i] = State::Basic;
        }
        for j in wanted {
            let mut best = None;
            let mut best_abs = 1e-9;
            for r in 0..m {
                if locked[r] {
                    continue;
                }
                let v = self.t[r * nt + j].abs();
                if v > best_abs {
                    best_abs = v;
                    best = Some(r);
                }
            }
            match best {
                Some(r) => {
                    self.basis = new_basis.clone();
                    self.pivot(r, j);
                    new_basis[r] = j;
                    locked[r] = true;
                    // the displaced slack becomes nonbasic
                    let s = n + r;
                    let v = self.x[s];
                    self.place_nearest(s, v);
                }
                None => {
                    let v = self.x[j];
                    self.place_nearest(j, v);
                }
            }
        }
        self.basis = new_basis;
        for &b in &self.basis.clone() {
            self.state[b] = State::Basic;
        }
        self.recompute_basics();
        self.recompute_duals();
        self.since_refactor = 0;
    }

    fn place_nearest(&mut self, j: usize, v: f64) {
        let (l, u) = (self.lo[j], self.up[j]);
        let prefer = if l.is_finite() && u.is_finite() {
            if (v - l).abs() <= (u - v).abs() {
                State::Lower
            } else {
                State::Upper
            }
        } else if u.is_finite() && !l.is_finite() {
            State::Upper
        } else {
            State::Lower
        };
        self.place_nonbasic(j, prefer);
    }

    fn choose_entering(&self, d: &[f64], bland: bool) -> Option<(usize, f64)> {
        let tol = self.opts.dual_tol;
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.nt {
            let dir = match self.state[j] {
                State::Basic => continue,
                State::Lower => {
                    if d[j] < -tol && self.up[j] > self.lo[j] {
                        1.0
                    } else {
                        continue;
                    }
                }
                State::Upper => {
                    if d[j] > tol && self.up[j] > self.lo[j] {
                        -1.0
                    } else {
                        continue;
                    }
                }
                State::Free => {
                    if d[j].abs() > tol {
                        -d[j].signum()
                    } else {
                        continue;
                    }
                }
            };
            if bland {
                return Some((j, dir));
            }
            let score = d[j].abs();
            if score > best_score {
                best_score = score;
                best = Some((j, dir));
            }
        }
        best
    }

    fn ratio_test(&self, q: usize, dir: f64, phase1: bool) -> Ratio {
        let nt = self.nt;
        let ptol = self.opts.pivot_tol;
        let ftol = self.opts.primal_tol;
        // (row, exact theta, relaxed theta, |alpha|, to_upper)
        let mut cands: Vec<(usize, f64, f64, f64, bool)> = Vec::new();
        for i in 0..self.m {
            let a = self.t[i * nt + q];
            if a.abs() < ptol {
                continue;
            }
            let alpha = -a * dir;
            let b = self.basis[i];
            let (x, l, u) = (self.x[b], self.lo[b], self.up[b]);
            if phase1 && x < l - ftol {
                if alpha > 0.0 {
                    let th = (l - x) / alpha;
                    cands.push((i, th, th, alpha.abs(), false));
                }
            } else if phase1 && x > u + ftol {
                if alpha < 0.0 {
                    let th = (x - u) / -alpha;
                    cands.push((i, th, th, alpha.abs(), true));
                }
            } else if alpha < 0.0 {
                if l.is_finite() {
                    let th = ((x - l) / -alpha).max(0.0);
                    let rel = (x - l + ftol) / -alpha;
                    cands.push((i, th, rel, alpha.abs(), false));
                }
            } else if u.is_finite() {
                let th = ((u - x) / alpha).max(0.0);
                let rel = (u - x + ftol) / alpha;
                cands.push((i, th, rel, alpha.abs(), true));
            }
        }
        let flip = self.up[q] - self.lo[q];
        let theta_max = cands.iter().fold(f64::INFINITY, |s, c| s.min(c.2));
        if flip.is_finite() && flip <= theta_max {
            return Ratio::Flip(flip);
        }
        if cands.is_empty() {
            return Ratio::Unbounded;
        }
        let mut pick: Option<(usize, f64, f64, f64, bool)> = None;
        for c in &cands {
            if c.1 <= theta_max {
                match pick {
                    None => pick = Some(*c),
                    Some(p) if c.3 > p.3 => pick = Some(*c),
                    _ => {}
                }
            }
        }
        let (row, theta, _, _, to_upper) = pick.expect("non-empty candidate set");
        if flip.is_finite() && flip <= theta {
            return Ratio::Flip(flip);
        }
        Ratio::Pivot {
            row,
            theta,
            to_upper,
        }
    }

    fn step(&mut self, q: usize, dir: f64, theta: f64) {
        let nt = self.nt;
        if theta != 0.0 {
            for i in 0..self.m {
                let a = self.t[i * nt + q];
                if a != 0.0 {
                    self.x[self.basis[i]] -= a * dir * theta;
                }
            }
            self.x[q] += dir * theta;
        }
    }

    fn phase1_costs(&self) -> Option<Vec<f64>> {
        let tol = self.opts.primal_tol;
        let mut g = vec![0.0; self.m];
        let mut any = false;
        for (i, &b) in self.basis.iter().enumerate() {
            if self.x[b] < self.lo[b] - tol {
                g[i] = -1.0;
                any = true;
            } else if self.x[b] > self.up[b] + tol {
                g[i] = 1.0;
                any = true;
            }
        }
        if !any {
            return None;
        }
        let nt = self.nt;
        let mut d = vec![0.0; nt];
        for i in 0..self.m {
            if g[i] != 0.0 {
                let row = &self.t[i * nt..(i + 1) * nt];
                for (dj, &tij) in d.iter_mut().zip(row) {
                    *dj -= g[i] * tij;
                }
            }
        }
        for &b in &self.basis {
            d[b] = 0.0;
        }
        Some(d)
    }

    fn primal(&mut self, phase1: bool) -> LpStatus {
        let mut degenerate = 0usize;
        loop {
            if self.budget_spent() {
                return LpStatus::IterationLimit;
            }
            if self.since_refactor >= self.opts.refactor_every {
                self.refactor();
            }
            let d1;
            let d: &[f64] = if phase1 {
                match self.phase1_costs() {
                    None => return LpStatus::Optimal,
                    Some(v) => {
                        d1 = v;
                        &d1
                    }
                }
            } else {
                &self.d
            };
            let Some((q, dir)) = self.choose_entering(d, degenerate > 50) else {
                return if phase1 {
                    LpStatus::Infeasible
                } else {
                    LpStatus::Optimal
                };
            };
            self.iterations += 1;
            match self.ratio_test(q, dir, phase1) {
                Ratio::Unbounded => {
                    if phase1 {
                        // cannot happen for a bounded infeasibility sum; refresh and retry
                        self.refactor();
                        degenerate += 1;
                        continue;
                    }
                    return LpStatus::Unbounded;
                }
                Ratio::Flip(theta) => {
                    self.step(q, dir, theta);
                    self.state[q] = if dir > 0.0 { State::Upper } else { State::Lower };
                    self.x[q] = if dir > 0.0 { self.up[q] } else { self.lo[q] };
                    degenerate = 0;
                }
                Ratio::Pivot {
                    row,
                    theta,
                    to_upper,
                } => {
                    self.step(q, dir, theta);
                    let leaving = self.basis[row];
                    self.pivot(row, q);
                    if to_upper {
                        self.state[leaving] = State::Upper;
                        self.x[leaving] = self.up[leaving];
                    } else {
                        self.state[leaving] = State::Lower;
                        self.x[leaving] = self.lo[leaving];
                    }
                    if theta <= 1e-12 {
                        degenerate += 1;
                    } else {
                        degenerate = 0;
                    }
                }
            }
        }
    }

    fn dual(&mut self) -> LpStatus {
        let nt = self.nt;
        let ftol = self.opts.primal_tol;
        let ptol = self.opts.pivot_tol;
        let dtol = self.opts.dual_tol;
        loop {
            if self.budget_spent() {
                return LpStatus::IterationLimit;
            }
            if self.since_refactor >= self.opts.refactor_every {
                self.refactor();
                if !self.dual_feasible() {
                    return LpStatus::IterationLimit;
                }
            }
            let mut r = None;
            let mut worst = ftol;
            for (i, &b) in self.basis.iter().enumerate() {
                let v = (self.lo[b] - self.x[b]).max(self.x[b] - self.up[b]);
                if v > worst {
                    worst = v;
                    r = Some(i);
                }
            }
            let Some(r) = r else {
                return LpStatus::Optimal;
            };
            self.iterations += 1;
            let b = self.basis[r];
            let increase = self.x[b] < self.lo[b];
            let target = if increase { self.lo[b] } else { self.up[b] };
            let row = &self.t[r * nt..(r + 1) * nt];
            let mut cands: Vec<(usize, f64, f64)> = Vec::new();
            let mut theta_max = f64::INFINITY;
            for j in 0..nt {
                let a = row[j];
                if a.abs() < ptol {
                    continue;
                }
                let ok = match self.state[j] {
                    State::Basic => false,
                    State::Lower => self.up[j] > self.lo[j] && (if increase { a < 0.0 } else { a > 0.0 }),
                    State::Upper => self.up[j] > self.lo[j] && (if increase { a > 0.0 } else { a < 0.0 }),
                    State::Free => true,
                };
                if !ok {
                    continue;
                }
                let ratio = self.d[j].abs() / a.abs();
                theta_max = theta_max.min((self.d[j].abs() + dtol) / a.abs());
                cands.push((j, ratio, a.abs()));
            }
            if cands.is_empty() {
                return LpStatus::Infeasible;
            }
            let mut q = None;
            let mut best = 0.0;
            for &(j, ratio, aa) in &cands {
                if ratio <= theta_max && aa > best {
                    best = aa;
                    q = Some(j);
                }
            }
            let q = q.expect("candidate within ratio bound");
            let delta = (self.x[b] - target) / self.t[r * nt + q];
            for i in 0..self.m {
                let a = self.t[i * nt + q];
                if a != 0.0 {
                    self.x[self.basis[i]] -= a * delta;
                }
            }
            self.x[q] += delta;
            self.pivot(r, q);
            self.state[b] = if increase { State::Lower } else { State::Upper };
            self.x[b] = target;
        }
    }

    /// Solves from the current basis. Bounds may have changed since the last call.
    pub fn solve(&mut self) -> LpStatus {
        self.solve_start = self.iterations;
        for _ in 0..6 {
            if self.primal_infeasibility() > self.opts.primal_tol {
                if self.dual_feasible() {
                    match self.dual() {
                        LpStatus::Infeasible => {
                            self.refactor();
                            if self.primal(true) == LpStatus::Infeasible {
                                return LpStatus::Infeasible;
                            }
                        }
                        LpStatus::IterationLimit if self.budget_spent() => {
                            return LpStatus::IterationLimit
                        }
                        _ => {}
                    }
                }
                if self.primal_infeasibility() > self.opts.primal_tol {
                    match self.primal(true) {
                        LpStatus::Optimal => {}
                        other => return other,
                    }
                }
            }
            match self.primal(false) {
                LpStatus::Optimal => {}
                other => return other,
            }
            self.refactor();
            if self.primal_infeasibility() <= self.opts.primal_tol * 10.0 && self.dual_feasible() {
                return LpStatus::Optimal;
            }
        }
        if self.primal_infeasibility() <= self.opts.primal_tol * 100.0 {
            LpStatus::Optimal
        } else {
            LpStatus::IterationLimit
        }
    }
}
