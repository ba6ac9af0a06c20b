//! Slow, direct reference computations for tests. Nothing here shares code
//! with the model crate: graphs are plain edge lists, chains are enumerated
//! state by state and solved as linear systems.

use std::collections::HashMap;
use std::hash::Hash;

use nalgebra::{DMatrix, DVector};

/// All-pairs shortest paths over a directed edge list. Unreachable pairs are
/// infinite.
pub fn floyd_warshall(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(u, v, w) in edges {
        if w < d[u][v] {
            d[u][v] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// reach[u][v] is true when v can be reached from u.
pub fn reachability(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<bool>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v, _) in edges {
        adj[u].push(v);
    }
    (0..n)
        .map(|s| {
            let mut seen = vec![false; n];
            let mut queue = std::collections::VecDeque::from([s]);
            seen[s] = true;
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            seen
        })
        .collect()
}

/// A finite continuous-time Markov chain discovered from an initial state.
pub struct Ctmc<S> {
    pub states: Vec<S>,
    /// Outgoing (target, rate) per state.
    pub out: Vec<Vec<(usize, f64)>>,
}

impl<S: Clone + Eq + Hash> Ctmc<S> {
    pub fn explore(initial: S, mut next: impl FnMut(&S) -> Vec<(S, f64)>) -> Self {
        let mut index = HashMap::new();
        let mut states = vec![initial.clone()];
        index.insert(initial, 0usize);
        let mut out = Vec::new();
        let mut k = 0;
        while k < states.len() {
            let mut row: Vec<(usize, f64)> = Vec::new();
            for (t, rate) in next(&states[k].clone()) {
                if rate <= 0.0 {
                    continue;
                }
                let j = *index.entry(t.clone()).or_insert_with(|| {
                    states.push(t);
                    states.len() - 1
                });
                if j != k {
                    row.push((j, rate));
                }
            }
            out.push(row);
            k += 1;
        }
        Ctmc { states, out }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Stationary distribution. Small chains use a dense LU solve, larger
    /// ones Gauss-Seidel sweeps on the balance equations.
    pub fn stationary(&self) -> Vec<f64> {
        if self.len() <= 600 {
            self.stationary_dense()
        } else {
            self.stationary_gauss_seidel(1e-15, 200_000)
        }
    }

    pub fn stationary_dense(&self) -> Vec<f64> {
        let n = self.len();
        // Rows of A are the balance equations (Q^T), the last one replaced by
        // the normalization.
        let mut a = DMatrix::<f64>::zeros(n, n);
        for (i, row) in self.out.iter().enumerate() {
            for &(j, r) in row {
                a[(j, i)] += r;
                a[(i, i)] -= r;
            }
        }
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(n);
        b[n - 1] = 1.0;
        let x = a
            .lu()
            .solve(&b)
            .expect("irreducible chain has a unique stationary law");
        x.iter().copied().collect()
    }

    pub fn stationary_gauss_seidel(&self, tol: f64, max_sweeps: usize) -> Vec<f64> {
        let n = self.len();
        let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut exit = vec![0.0; n];
        for (i, row) in self.out.iter().enumerate() {
            for &(j, r) in row {
                incoming[j].push((i, r));
                exit[i] += r;
            }
        }
        let mut pi = vec![1.0 / n as f64; n];
        for _ in 0..max_sweeps {
            let mut change: f64 = 0.0;
            for j in 0..n {
                let inflow: f64 = incoming[j].iter().map(|&(i, r)| pi[i] * r).sum();
                let v = inflow / exit[j];
                change = change.max((v - pi[j]).abs());
                pi[j] = v;
            }
            let total: f64 = pi.iter().sum();
            pi.iter_mut().for_each(|p| *p /= total);
            if change < tol {
                break;
            }
        }
        pi
    }
}

/// Stationary law of a finite birth-death chain on 0..=n, where `birth[i]` is
/// the rate i -> i+1 and `death[i]` the rate i+1 -> i. Solved as a linear
/// system.
pub fn birth_death(birth: &[f64], death: &[f64]) -> Vec<f64> {
    assert_eq!(birth.len(), death.len());
    let n = birth.len() + 1;
    let chain = Ctmc::explore(0usize, |&i| {
        let mut t = Vec::new();
        if i + 1 < n {
            t.push((i + 1, birth[i]));
        }
        if i > 0 {
            t.push((i - 1, death[i - 1]));
        }
        t
    });
    let pi = chain.stationary_dense();
    let mut ordered = vec![0.0; n];
    for (k, &s) in chain.states.iter().enumerate() {
        ordered[s] = pi[k];
    }
    ordered
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Server {
    /// FCFS with `servers` identical exponential servers of rate `rate`.
    Queue { servers: u32, rate: f64 },
    /// Infinite server, each customer served at `rate`.
    Delay { rate: f64 },
}

#[derive(Debug, Clone)]
pub struct ClosedSolution {
    /// Completions per second at each station.
    pub throughput: Vec<f64>,
    /// Mean number of customers at each station.
    pub queue: Vec<f64>,
    /// Marginal distribution of the number at each station.
    pub marginals: Vec<Vec<f64>>,
}

/// Closed exponential network with Markovian routing, solved over the full
/// state space of customer counts.
pub fn closed_network(
    stations: &[Server],
    routing: &[Vec<f64>],
    population: u32,
) -> ClosedSolution {
    let k = stations.len();
    let rate = |s: &Server, n: u32| -> f64 {
        match *s {
            Server::Queue { servers, rate } => rate * n.min(servers) as f64,
            Server::Delay { rate } => rate * n as f64,
        }
    };
    let mut initial = vec![0u32; k];
    initial[0] = population;
    let chain = Ctmc::explore(initial, |s| {
        let mut t = Vec::new();
        for i in 0..k {
            if s[i] == 0 {
                continue;
            }
            let mu = rate(&stations[i], s[i]);
            for j in 0..k {
                let p = routing[i][j];
                if p > 0.0 && i != j {
                    let mut n = s.clone();
                    n[i] -= 1;
                    n[j] += 1;
                    t.push((n, mu * p));
                }
            }
        }
        t
    });
    let pi = chain.stationary();
    let mut throughput = vec![0.0; k];
    let mut queue = vec![0.0; k];
    let mut marginals = vec![vec![0.0; population as usize + 1]; k];
    for (s, p) in chain.states.iter().zip(&pi) {
        for i in 0..k {
            // Self-loops count as completions too.
            throughput[i] += p * rate(&stations[i], s[i]);
            queue[i] += p * s[i] as f64;
            marginals[i][s[i] as usize] += p;
        }
    }
    ClosedSolution {
        throughput,
        queue,
        marginals,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyClass {
    pub prob: f64,
    pub trips: u8,
    /// Exponential rates of the retrieval and storage legs.
    pub retrieval_rate: f64,
    pub storage_rate: f64,
}

/// Semi-open toy system: Poisson orders wait for one of `robots` robots; a
/// robot repeats retrieval (infinite server), handling at a single FCFS
/// exponential workstation, and storage (infinite server) once per trip.
#[derive(Debug, Clone)]
pub struct ToySoqn {
    pub lambda: f64,
    pub robots: u8,
    pub handling_rate: f64,
    pub classes: Vec<ToyClass>,
    /// Orders allowed to wait before arrivals are dropped.
    pub queue_cap: u16,
}

#[derive(Debug, Clone)]
pub struct ToySolution {
    pub nr_sync: f64,
    pub no_sync: f64,
    pub tht: f64,
    /// Distribution of the number of robots at the workstation.
    pub pn_w: Vec<f64>,
    /// Probability of sitting at the queue cap.
    pub cap_mass: f64,
    pub states: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct ToyState {
    waiting: u16,
    /// (class, trips left) per robot at each stage; the workstation keeps
    /// arrival order.
    retrieving: Vec<(u8, u8)>,
    handling: Vec<(u8, u8)>,
    storing: Vec<(u8, u8)>,
}

pub fn toy_soqn(sys: &ToySoqn) -> ToySolution {
    let start = ToyState {
        waiting: 0,
        retrieving: vec![],
        handling: vec![],
        storing: vec![],
    };
    let busy = |s: &ToyState| s.retrieving.len() + s.handling.len() + s.storing.len();
    let with_new_order = |s: &ToyState, rate: f64, t: &mut Vec<(ToyState, f64)>| {
        for (o, c) in sys.classes.iter().enumerate() {
            let mut n = s.clone();
            n.retrieving.push((o as u8, c.trips));
            n.retrieving.sort();
            t.push((n, rate * c.prob));
        }
    };
    let chain = Ctmc::explore(start, |s| {
        let mut t = Vec::new();
        if busy(s) < sys.robots as usize {
            with_new_order(s, sys.lambda, &mut t);
        } else if s.waiting < sys.queue_cap {
            let mut n = s.clone();
            n.waiting += 1;
            t.push((n, sys.lambda));
        }
        for k in 0..s.retrieving.len() {
            let tok = s.retrieving[k];
            let mut n = s.clone();
            n.retrieving.remove(k);
            n.handling.push(tok);
            t.push((n, sys.classes[tok.0 as usize].retrieval_rate));
        }
        if let Some(&tok) = s.handling.first() {
            let mut n = s.clone();
            n.handling.remove(0);
            n.storing.push(tok);
            n.storing.sort();
            t.push((n, sys.handling_rate));
        }
        for k in 0..s.storing.len() {
            let (o, left) = s.storing[k];
            let rate = sys.classes[o as usize].storage_rate;
            let mut n = s.clone();
            n.storing.remove(k);
            if left > 1 {
                n.retrieving.push((o, left - 1));
                n.retrieving.sort();
                t.push((n, rate));
            } else if n.waiting > 0 {
                n.waiting -= 1;
                with_new_order(&n, rate, &mut t);
            } else {
                t.push((n, rate));
            }
        }
        t
    });
    let pi = chain.stationary();
    let mut sol = ToySolution {
        nr_sync: 0.0,
        no_sync: 0.0,
        tht: 0.0,
        pn_w: vec![0.0; sys.robots as usize + 1],
        cap_mass: 0.0,
        states: chain.len(),
    };
    let mut accepted = 0.0;
    let mut in_system = 0.0;
    for (s, p) in chain.states.iter().zip(&pi) {
        let b = busy(s);
        sol.nr_sync += p * (sys.robots as usize - b) as f64;
        sol.no_sync += p * s.waiting as f64;
        sol.pn_w[s.handling.len()] += p;
        in_system += p * (b + s.waiting as usize) as f64;
        if s.waiting == sys.queue_cap {
            sol.cap_mass += p;
        } else {
            accepted += p * sys.lambda;
        }
    }
    // Little's law over accepted orders.
    sol.tht = in_system / accepted;
    sol
}

/// Visits `totes` from `start`, always moving to the nearest remaining tote
/// (ties to the lowest shelf index). `d` is indexed by shelf.
pub fn nearest_neighbor_walk(d: &[Vec<f64>], start: usize, totes: &[usize]) -> (f64, usize) {
    let mut left: Vec<usize> = totes.to_vec();
    let mut at = start;
    let mut walked = 0.0;
    while !left.is_empty() {
        let mut best = 0;
        for k in 1..left.len() {
            let (a, b) = (d[at][left[k]], d[at][left[best]]);
            if a < b || (a == b && left[k] < left[best]) {
                best = k;
            }
        }
        walked += d[at][left[best]];
        at = left.remove(best);
    }
    (walked, at)
}

/// Expected closest-retrieval time with a uniform start shelf and `nc` totes
/// each on an independent uniform shelf, averaged over every case.
pub fn exhaustive_cr_retrieval(
    d: &[Vec<f64>],
    to_ws: &[f64],
    nc: usize,
    speed: f64,
    pick: f64,
) -> f64 {
    let n = d.len();
    let cases = n.pow(nc as u32);
    let mut total = 0.0;
    for start in 0..n {
        for c in 0..cases {
            let mut code = c;
            let totes: Vec<usize> = (0..nc)
                .map(|_| {
                    let m = code % n;
                    code /= n;
                    m
                })
                .collect();
            let (walked, last) = nearest_neighbor_walk(d, start, &totes);
            total += (walked + to_ws[last]) / speed + nc as f64 * pick;
        }
    }
    total / (n * cases) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mm1_birth_death_is_geometric() {
        let pi = birth_death(&[0.5; 30], &[1.0; 30]);
        for (k, p) in pi.iter().take(5).enumerate() {
            let exact = 0.5f64.powi(k as i32) * 0.5 / (1.0 - 0.5f64.powi(31));
            assert!((p - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_and_iterative_agree() {
        let chain = Ctmc::explore(0usize, |&i| {
            vec![((i + 1) % 7, 1.0 + i as f64), ((i + 3) % 7, 0.5)]
        });
        let a = chain.stationary_dense();
        let b = chain.stationary_gauss_seidel(1e-15, 100_000);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn two_station_cycle() {
        // Single server (rate 1) and delay (rate 1), two customers: the
        // queue-plus-delay pair has throughput 0.8.
        let s = [
            Server::Queue {
                servers: 1,
                rate: 1.0,
            },
            Server::Delay { rate: 1.0 },
        ];
        let r = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let sol = closed_network(&s, &r, 2);
        assert!((sol.throughput[0] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn floyd_warshall_ring() {
        let edges: Vec<_> = (0..4).map(|i| (i, (i + 1) % 4, 1.0)).collect();
        let d = floyd_warshall(4, &edges);
        assert_eq!(d[0][1], 1.0);
        assert_eq!(d[1][0], 3.0);
        assert!(reachability(4, &edges).iter().flatten().all(|&r| r));
    }

    #[test]
    fn toy_with_one_robot_and_one_trip_is_mm1_like() {
        // One robot, one stage effectively: retrieval and storage very fast,
        // so the order queue is close to an M/M/1 with the handling rate.
        let sys = ToySoqn {
            lambda: 0.5,
            robots: 1,
            handling_rate: 1.0,
            classes: vec![ToyClass {
                prob: 1.0,
                trips: 1,
                retrieval_rate: 1e6,
                storage_rate: 1e6,
            }],
            queue_cap: 80,
        };
        let s = toy_soqn(&sys);
        assert!((s.no_sync - 0.5).abs() < 1e-3, "{}", s.no_sync);
        assert!(s.cap_mass < 1e-20);
    }
}
