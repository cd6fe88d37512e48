//! Individuals and the classification problem that evaluates them.

use rayon::prelude::*;

use crate::dataset::{Dataset, Label};
use crate::gp::{Inputs, PrimitiveSet, ProgramTree, SemanticsVector};
use crate::objectives::{classify, confusion, objective_vector, ObjectiveVector, DEFAULT_THRESHOLD};

/// A program together with its cached evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub tree: ProgramTree,
    pub semantics: SemanticsVector,
    /// `(1 − TPR, 1 − TNR)` on the training cases.
    pub base: ObjectiveVector,
    /// The vector the engines optimise: `base`, possibly with extra criteria appended.
    pub objectives: ObjectiveVector,
}

impl Individual {
    pub fn node_count(&self) -> usize {
        self.tree.node_count()
    }
}

/// Binary classification over a fixed set of fitness cases.
#[derive(Debug, Clone)]
pub struct Problem {
    inputs: Inputs,
    labels: Vec<Label>,
    primitives: PrimitiveSet,
    threshold: f64,
    parallel: bool,
}

impl Problem {
    pub fn new(dataset: &Dataset, primitives: PrimitiveSet) -> Self {
        Problem {
            inputs: Inputs::from(dataset),
            labels: dataset.labels(),
            primitives,
            threshold: DEFAULT_THRESHOLD,
            parallel: false,
        }
    }

    /// Evaluate batches on the current rayon pool. Results are identical
    /// either way.
    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn primitives(&self) -> &PrimitiveSet {
        &self.primitives
    }

    pub fn inputs(&self) -> &Inputs {
        &self.inputs
    }

    /// Number of fitness cases.
    pub fn n_cases(&self) -> usize {
        self.labels.len()
    }

    pub fn objectives_of(&self, semantics: &[f64]) -> ObjectiveVector {
        let predictions = classify(semantics, self.threshold);
        let counts = confusion(&predictions, &self.labels).expect("dataset holds both classes");
        objective_vector(&counts)
    }

    pub fn evaluate(&self, tree: ProgramTree) -> Individual {
        let semantics = tree.evaluate(&self.inputs);
        let base = self.objectives_of(&semantics);
        Individual {
            tree,
            semantics,
            objectives: base.clone(),
            base,
        }
    }

    pub fn evaluate_all(&self, trees: Vec<ProgramTree>) -> Vec<Individual> {
        if self.parallel {
            trees.into_par_iter().map(|t| self.evaluate(t)).collect()
        } else {
            trees.into_iter().map(|t| self.evaluate(t)).collect()
        }
    }
}
