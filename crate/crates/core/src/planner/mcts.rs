//! Domain-agnostic Monte Carlo tree search with UCB selection, random
//! rollouts and incremental-mean value updates.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Result of applying one action.
#[derive(Debug, Clone)]
pub enum Step<S> {
    Next {
        state: S,
        reward: f64,
    },
    /// The action cannot be executed from this state.
    Failed,
}

pub trait SearchDomain {
    type State: Clone;

    fn num_actions(&self) -> usize;

    fn transition(&self, state: &Self::State, action: usize, rng: &mut ChaCha8Rng) -> Step<Self::State>;

    /// Transition used below the tree frontier. Defaults to [`Self::transition`].
    fn rollout_transition(&self, state: &Self::State, action: usize, rng: &mut ChaCha8Rng) -> Step<Self::State> {
        self.transition(state, action, rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchParams {
    pub iterations: usize,
    pub max_depth: usize,
    pub exploration_c: f64,
    pub discount: f64,
    /// Cap on rollout length below a newly expanded node.
    pub rollout_depth: usize,
    /// Return assigned to an action whose transition failed.
    pub failure_penalty: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Edge {
    Child { node: usize, reward: f64 },
    Failed,
}

#[derive(Debug, Clone)]
pub struct Node<S> {
    pub state: S,
    pub depth: usize,
    /// N(s).
    pub visits: u64,
    /// Q(s, a).
    pub q: Vec<f64>,
    /// N(s, a).
    pub n: Vec<u64>,
    pub edges: Vec<Option<Edge>>,
}

impl<S> Node<S> {
    fn new(state: S, depth: usize, num_actions: usize) -> Self {
        Self {
            state,
            depth,
            visits: 0,
            q: vec![0.0; num_actions],
            n: vec![0; num_actions],
            edges: vec![None; num_actions],
        }
    }
}

/// Index of the action UCB picks at `node`. Untried actions come first,
/// lowest index first; otherwise ties go to the lowest index.
pub fn ucb_select(q: &[f64], n: &[u64], visits: u64, c: f64) -> usize {
    if let Some(a) = n.iter().position(|&k| k == 0) {
        return a;
    }
    let ln_n = (visits as f64).ln();
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for a in 0..q.len() {
        let score = q[a] + c * (ln_n / n[a] as f64).sqrt();
        if score > best_score {
            best = a;
            best_score = score;
        }
    }
    best
}

/// `Q += (q - Q) / N` after incrementing `N`.
pub fn incremental_mean(q_old: f64, n_new: u64, sample: f64) -> f64 {
    q_old + (sample - q_old) / n_new as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeViolation {
    pub node: usize,
    pub reason: String,
}

/// Search tree stored in an arena; node 0 is the root.
#[derive(Debug, Clone)]
pub struct SearchTree<S> {
    nodes: Vec<Node<S>>,
    untried_first_violations: u64,
    iterations: u64,
}

impl<S: Clone> SearchTree<S> {
    pub fn new(root: S, num_actions: usize) -> Self {
        Self {
            nodes: vec![Node::new(root, 0, num_actions)],
            untried_first_violations: 0,
            iterations: 0,
        }
    }

    pub fn root(&self) -> &Node<S> {
        &self.nodes[0]
    }

    pub fn node(&self, idx: usize) -> &Node<S> {
        &self.nodes[idx]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Iterations run on this tree since it was created or re-rooted.
    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    /// Times an action got a second visit while a sibling had none.
    pub fn untried_first_violations(&self) -> u64 {
        self.untried_first_violations
    }

    /// Checks visit bookkeeping at every node.
    pub fn check_invariants(&self) -> Result<(), TreeViolation> {
        for (idx, node) in self.nodes.iter().enumerate() {
            let sum: u64 = node.n.iter().sum();
            if sum != node.visits {
                return Err(TreeViolation {
                    node: idx,
                    reason: format!("N(s) = {} but sum of N(s,a) = {sum}", node.visits),
                });
            }
            for a in 0..node.n.len() {
                if node.n[a] > 0 && !node.q[a].is_finite() {
                    return Err(TreeViolation {
                        node: idx,
                        reason: format!("Q(s,{a}) is not finite"),
                    });
                }
                if node.n[a] == 0 && node.edges[a].is_some() {
                    return Err(TreeViolation {
                        node: idx,
                        reason: format!("edge for unvisited action {a}"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Root action with the highest Q among visited ones, ties to the lowest
    /// index. `None` when nothing was visited or every visited action failed.
    pub fn best_root_action(&self) -> Option<usize> {
        best_action(self.root())
    }

    /// Greedy chain of (action, child node) from the root.
    pub fn best_chain(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut cur = 0;
        while let Some(a) = best_action(&self.nodes[cur]) {
            match self.nodes[cur].edges[a] {
                Some(Edge::Child { node, .. }) => {
                    out.push((a, node));
                    cur = node;
                }
                _ => break,
            }
        }
        out
    }

    /// Runs `params.iterations` simulations from the root, calling
    /// `observer` after each one.
    pub fn search<D, F>(&mut self, domain: &D, params: &SearchParams, rng: &mut ChaCha8Rng, mut observer: F)
    where
        D: SearchDomain<State = S>,
        F: FnMut(&Self),
    {
        for _ in 0..params.iterations {
            self.simulate(domain, params, 0, params.max_depth, rng);
            self.iterations += 1;
            observer(self);
        }
    }

    fn simulate<D: SearchDomain<State = S>>(
        &mut self,
        domain: &D,
        params: &SearchParams,
        idx: usize,
        depth: usize,
        rng: &mut ChaCha8Rng,
    ) -> f64 {
        if depth == 0 {
            return 0.0;
        }
        let a = {
            let node = &self.nodes[idx];
            let a = ucb_select(&node.q, &node.n, node.visits, params.exploration_c);
            if node.n[a] > 0 && node.n.contains(&0) {
                self.untried_first_violations += 1;
            }
            a
        };
        let q = match self.nodes[idx].edges[a] {
            Some(Edge::Failed) => params.failure_penalty,
            Some(Edge::Child { node, reward }) => {
                reward + params.discount * self.simulate(domain, params, node, depth - 1, rng)
            }
            None => match domain.transition(&self.nodes[idx].state, a, rng) {
                Step::Failed => {
                    self.nodes[idx].edges[a] = Some(Edge::Failed);
                    params.failure_penalty
                }
                Step::Next { state, reward } => {
                    let child = self.nodes.len();
                    let child_depth = self.nodes[idx].depth + 1;
                    let value = rollout(domain, params, &state, (depth - 1).min(params.rollout_depth), rng);
                    self.nodes.push(Node::new(state, child_depth, domain.num_actions()));
                    self.nodes[idx].edges[a] = Some(Edge::Child { node: child, reward });
                    reward + params.discount * value
                }
            },
        };
        let node = &mut self.nodes[idx];
        node.visits += 1;
        node.n[a] += 1;
        node.q[a] = incremental_mean(node.q[a], node.n[a], q);
        q
    }

    /// Subtree below `child` as a fresh tree (statistics kept).
    pub fn reroot(&self, child: usize) -> Self {
        let mut map = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        let mut queue = std::collections::VecDeque::from([child]);
        let base = self.nodes[child].depth;
        while let Some(old) = queue.pop_front() {
            let mut node = self.nodes[old].clone();
            node.depth -= base;
            for e in node.edges.iter().flatten() {
                if let Edge::Child { node: c, .. } = *e {
                    queue.push_back(c);
                }
            }
            map[old] = nodes.len();
            nodes.push(node);
        }
        for node in &mut nodes {
            for e in node.edges.iter_mut().flatten() {
                if let Edge::Child { node: c, .. } = e {
                    *c = map[*c];
                }
            }
        }
        Self {
            nodes,
            untried_first_violations: 0,
            iterations: 0,
        }
    }
}

fn best_action<S>(node: &Node<S>) -> Option<usize> {
    let mut best: Option<usize> = None;
    for a in 0..node.n.len() {
        if node.n[a] == 0 || matches!(node.edges[a], Some(Edge::Failed)) {
            continue;
        }
        if best.is_none_or(|b| node.q[a] > node.q[b]) {
            best = Some(a);
        }
    }
    best
}

/// Uniformly random policy for `depth` steps, discounted.
pub fn rollout<D: SearchDomain>(
    domain: &D,
    params: &SearchParams,
    state: &D::State,
    depth: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let mut total = 0.0;
    let mut scale = 1.0;
    let mut cur = state.clone();
    for _ in 0..depth {
        let a = rng.random_range(0..domain.num_actions());
        match domain.rollout_transition(&cur, a, rng) {
            Step::Failed => {
                total += scale * params.failure_penalty;
                break;
            }
            Step::Next { state, reward } => {
                total += scale * reward;
                scale *= params.discount;
                cur = state;
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn incremental_mean_examples() {
        assert_eq!(incremental_mean(0.0, 1, 5.0), 5.0);
        assert_eq!(incremental_mean(2.0, 2, 4.0), 3.0);
    }

    #[test]
    fn ucb_tie_goes_low() {
        assert_eq!(ucb_select(&[0.0, 0.0], &[1, 1], 2, 1.0), 0);
        assert_eq!(ucb_select(&[5.0, 0.0, 0.0], &[3, 0, 0], 3, 1.0), 1);
        let score = 0.0 + (2f64.ln() / 1.0).sqrt();
        assert!((score - 0.8326).abs() < 1e-4);
    }

    /// Chain world: state is the step count, reward is a constant.
    struct Constant(f64, usize);

    impl SearchDomain for Constant {
        type State = usize;
        fn num_actions(&self) -> usize {
            self.1
        }
        fn transition(&self, s: &usize, _a: usize, _rng: &mut ChaCha8Rng) -> Step<usize> {
            Step::Next {
                state: s + 1,
                reward: self.0,
            }
        }
    }

    fn params(depth: usize, discount: f64) -> SearchParams {
        SearchParams {
            iterations: 10,
            max_depth: depth,
            exploration_c: 1.0,
            discount,
            rollout_depth: depth,
            failure_penalty: -100.0,
        }
    }

    #[test]
    fn rollout_geometric_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(rollout(&Constant(1.0, 2), &params(3, 0.5), &0, 0, &mut rng), 0.0);
        assert_eq!(rollout(&Constant(-2.0, 2), &params(3, 0.5), &0, 1, &mut rng), -2.0);
        assert_eq!(rollout(&Constant(1.0, 2), &params(3, 0.5), &0, 3, &mut rng), 1.75);
    }

    #[test]
    fn single_action_and_visit_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut tree = SearchTree::new(0usize, 1);
        tree.search(&Constant(1.0, 1), &params(3, 0.9), &mut rng, |t| {
            t.check_invariants().unwrap()
        });
        assert_eq!(tree.best_root_action(), Some(0));
        assert_eq!(tree.root().visits, 10);
    }

    #[test]
    fn reroot_keeps_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut tree = SearchTree::new(0usize, 2);
        let mut p = params(3, 0.9);
        p.iterations = 50;
        tree.search(&Constant(1.0, 2), &p, &mut rng, |_| {});
        let Some(Edge::Child { node, .. }) = tree.root().edges[0] else {
            panic!("root child missing")
        };
        let sub = tree.reroot(node);
        assert_eq!(sub.root().visits, tree.node(node).visits);
        assert_eq!(sub.root().depth, 0);
        sub.check_invariants().unwrap();
    }
}
