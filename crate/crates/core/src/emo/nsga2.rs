use rand::Rng;

use super::{
    breed, crowding_distance, fast_nondominated_sort, initial_population, Engine, EmoError, GpParams,
    SemanticHooks,
};
use crate::problem::{Individual, Problem};

/// Outcome of NSGA-II environmental selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Survivors {
    /// Chosen candidate indices, best front first.
    pub indices: Vec<usize>,
    /// Front number of each survivor.
    pub rank: Vec<usize>,
    /// Crowding distance (or its replacement) of each survivor.
    pub density: Vec<f64>,
}

/// Fills `n` slots front by front; the front that does not fit is cut by
/// descending density, lower index first on ties. `density_override`
/// replaces the per-front crowding distance when given.
pub fn nsga2_select<V: AsRef<[f64]>>(
    objs: &[V],
    n: usize,
    density_override: Option<&[f64]>,
) -> Result<Survivors, EmoError> {
    let partition = fast_nondominated_sort(objs)?;
    let mut out = Survivors {
        indices: Vec::with_capacity(n),
        rank: Vec::with_capacity(n),
        density: Vec::with_capacity(n),
    };
    for (r, front) in partition.fronts.iter().enumerate() {
        if out.indices.len() >= n {
            break;
        }
        let density: Vec<f64> = match density_override {
            Some(d) => front.iter().map(|&i| d[i]).collect(),
            None => {
                let members: Vec<&[f64]> = front.iter().map(|&i| objs[i].as_ref()).collect();
                crowding_distance(&members)
            }
        };
        let mut order: Vec<usize> = (0..front.len()).collect();
        let room = n - out.indices.len();
        if front.len() > room {
            order.sort_by(|&a, &b| density[b].total_cmp(&density[a]).then(a.cmp(&b)));
            order.truncate(room);
        }
        for k in order {
            out.indices.push(front[k]);
            out.rank.push(r);
            out.density.push(density[k]);
        }
    }
    Ok(out)
}

/// Elitist NSGA-II over GP individuals.
pub struct Nsga2<'p, H> {
    problem: &'p Problem,
    gp: GpParams,
    hooks: H,
    population: Vec<Individual>,
    rank: Vec<usize>,
    density: Vec<f64>,
}

impl<'p, H: SemanticHooks> Nsga2<'p, H> {
    pub fn new<R: Rng + ?Sized>(
        problem: &'p Problem,
        gp: &GpParams,
        hooks: H,
        rng: &mut R,
    ) -> Result<Self, EmoError> {
        let initial = initial_population(problem, gp, gp.pop_size, rng)?;
        let mut engine = Nsga2 {
            problem,
            gp: gp.clone(),
            hooks,
            population: Vec::new(),
            rank: Vec::new(),
            density: Vec::new(),
        };
        engine.survive(initial, rng);
        Ok(engine)
    }

    pub fn population(&self) -> &[Individual] {
        &self.population
    }

    pub fn ranks(&self) -> &[usize] {
        &self.rank
    }

    pub fn hooks(&self) -> &H {
        &self.hooks
    }

    fn survive<R: Rng + ?Sized>(&mut self, mut candidates: Vec<Individual>, rng: &mut R) {
        let surrogate = self.hooks.prepare(&mut candidates, rng);
        let objs: Vec<&[f64]> = candidates.iter().map(|m| &m.objectives[..]).collect();
        let chosen = nsga2_select(&objs, self.gp.pop_size, surrogate.as_deref())
            .expect("engine objective vectors share one length");
        let mut slots: Vec<Option<Individual>> = candidates.into_iter().map(Some).collect();
        self.population = chosen
            .indices
            .iter()
            .map(|&i| slots[i].take().expect("selected once"))
            .collect();
        self.rank = chosen.rank;
        self.density = chosen.density;
    }

    /// Binary tournament on (rank, density).
    fn tournament<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let n = self.population.len();
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        let better_b = self.rank[b] < self.rank[a]
            || (self.rank[b] == self.rank[a] && self.density[b] > self.density[a]);
        if better_b {
            b
        } else {
            a
        }
    }
}

impl<H: SemanticHooks> Engine for Nsga2<'_, H> {
    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let n = self.gp.pop_size;
        let mut trees = Vec::with_capacity(n + 1);
        while trees.len() < n {
            let p1 = self.tournament(rng);
            let p2 = self.tournament(rng);
            let children = breed(
                &self.population[p1],
                &self.population[p2],
                self.problem,
                &self.gp,
                &mut self.hooks,
                rng,
            );
            trees.extend(children);
        }
        trees.truncate(n);
        let offspring = self.problem.evaluate_all(trees);
        let mut merged = std::mem::take(&mut self.population);
        merged.extend(offspring);
        self.survive(merged, rng);
    }

    fn members(&self) -> &[Individual] {
        &self.population
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overfull_first_front_keeps_most_crowded() {
        // Crowding: (∞, 0.6, 0.6, 1.0, 1.2, ∞).
        let front = [[0.0, 1.0], [0.1, 0.9], [0.3, 0.7], [0.4, 0.6], [0.8, 0.2], [1.0, 0.0]];
        let s = nsga2_select(&front, 4, None).unwrap();
        assert_eq!(s.indices, vec![0, 5, 4, 3]);
        assert_eq!(s.rank, vec![0; 4]);
        assert!((s.density[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fronts_fill_in_order() {
        let objs = [[0.5, 0.5], [0.1, 0.9], [0.9, 0.1], [0.6, 0.6], [0.2, 0.95]];
        let s = nsga2_select(&objs, 4, None).unwrap();
        assert_eq!(&s.indices[..3], &[0, 1, 2]);
        assert_eq!(s.rank, vec![0, 0, 0, 1]);
        assert_eq!(s.indices.len(), 4);
    }

    #[test]
    fn override_replaces_crowding() {
        let front = [[0.0, 1.0], [0.5, 0.5], [1.0, 0.0]];
        let s = nsga2_select(&front, 1, Some(&[1.0, 3.0, 2.0])).unwrap();
        assert_eq!(s.indices, vec![1]);
        assert_eq!(s.density, vec![3.0]);
    }
}
