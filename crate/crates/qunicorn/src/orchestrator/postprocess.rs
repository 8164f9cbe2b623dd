// SPDX-License-Identifier: Apache-2.0

//! Folds provider results into per-circuit results: middleware mitigation
//! and cut reconstruction.

use qunicorn_core::catalog::Catalog;
use qunicorn_core::cutting::{generate_subcircuits, reconstruct_fragments, Fragment};
use qunicorn_core::formats::parse;
use qunicorn_core::mitigation::{mitigate, ConfusionModel, MitigationLocus, MitigationMetadata, QuasiDistribution};

use super::model::{CuttingMetadata, ExecutionPlan, ExpectationValue, ItemPlan, ItemResult, JobRequest};
use crate::provider::ExecutionResult;

struct Ctx<'a> {
    req: &'a JobRequest,
    plan: &'a ExecutionPlan,
    catalog: &'a Catalog,
    results: Vec<Option<&'a ExecutionResult>>,
}

/// A task's mitigated distribution plus its clip mass, or `None` when
/// mitigation is off.
type Mitigated = Option<(QuasiDistribution, ConfusionModel)>;

impl Ctx<'_> {
    fn result(&self, task: usize) -> Result<&ExecutionResult, String> {
        self.results[task].ok_or_else(|| format!("task {task} has no result"))
    }

    fn model(&self, task: usize) -> Result<ConfusionModel, String> {
        let t = &self.plan.tasks[task];
        let (_, device) = self.catalog.device(&t.device_id).ok_or_else(|| format!("unknown device {}", t.device_id))?;
        let circuit = parse(&t.doc).map_err(|e| e.to_string())?;
        Ok(ConfusionModel::for_measurements(&circuit, &device.readout_errors))
    }

    fn mitigated(&self, task: usize) -> Result<Mitigated, String> {
        let m = self.req.options.mitigation;
        if !m.enabled {
            return Ok(None);
        }
        let r = self.result(task)?;
        let model = self.model(task)?;
        let q = match (m.locus, &r.quasi) {
            (MitigationLocus::Provider, Some(q)) => q.clone(),
            (MitigationLocus::Provider, None) => {
                return Err(format!("provider returned no mitigated result for task {task}"))
            }
            (MitigationLocus::Middleware, _) => mitigate(&r.counts, &model).map_err(|e| e.to_string())?,
        };
        Ok(Some((q, model)))
    }

    fn fragment(&self, task: usize, negative_mass: &mut f64) -> Result<Fragment, String> {
        match self.mitigated(task)? {
            None => Ok(Fragment::from_counts(&self.result(task)?.counts)),
            Some((q, model)) => {
                *negative_mass = negative_mass.max(q.negative_mass);
                let gains = (0..model.num_bits()).map(|b| model.matrix(b)[0][0] - model.matrix(b)[0][1]).collect();
                Ok(Fragment { probs: q.probs, shots: q.shots, gains })
            }
        }
    }

    fn metadata(&self, negative_mass: f64) -> Option<MitigationMetadata> {
        let m = self.req.options.mitigation;
        m.enabled.then_some(MitigationMetadata { applied: true, locus: m.locus, negative_mass })
    }

    fn item(&self, index: usize, plan: &ItemPlan) -> Result<ItemResult, String> {
        let mut out =
            ItemResult { index, counts: None, quasi: None, expectations: None, mitigation: None, cutting: None };
        let observables = &self.req.options.cutting.observables;
        let mut negative_mass = 0.0f64;
        match plan {
            ItemPlan::Direct { task } => {
                out.counts = Some(self.result(*task)?.counts.clone());
                if let Some((q, _)) = self.mitigated(*task)? {
                    negative_mass = q.negative_mass;
                    out.quasi = Some(q);
                }
            }
            ItemPlan::Cut { plan: cut, groups } => {
                let logical = parse(&self.req.circuits[index]).map_err(|e| e.to_string())?.gates_only();
                let set = generate_subcircuits(&logical, cut);
                let mut values = vec![None; observables.len()];
                for g in groups {
                    let fragments = (g.first_task..g.first_task + 7)
                        .map(|t| self.fragment(t, &mut negative_mass))
                        .collect::<Result<Vec<_>, _>>()?;
                    for &m in &g.members {
                        let est =
                            reconstruct_fragments(cut, &set, &observables[m], &fragments).map_err(|e| e.to_string())?;
                        values[m] = Some(ExpectationValue::new(observables[m].clone(), est));
                    }
                }
                out.expectations = Some(values.into_iter().map(|v| v.expect("every observable is grouped")).collect());
                out.cutting = Some(CuttingMetadata {
                    applied: true,
                    subcircuits: 7 * groups.len(),
                    cut_qubit: Some(cut.cut_qubit),
                    cut_position: Some(cut.cut_position),
                    reason: None,
                });
            }
            ItemPlan::Uncut { reason, groups } => {
                let mut values = vec![None; observables.len()];
                for g in groups {
                    let fragment = self.fragment(g.first_task, &mut negative_mass)?;
                    for &m in &g.members {
                        values[m] =
                            Some(ExpectationValue::new(observables[m].clone(), fragment.expectation(&observables[m])));
                    }
                }
                out.expectations = Some(values.into_iter().map(|v| v.expect("every observable is grouped")).collect());
                out.cutting = Some(CuttingMetadata {
                    applied: false,
                    subcircuits: 0,
                    cut_qubit: None,
                    cut_position: None,
                    reason: Some(reason.clone()),
                });
            }
        }
        out.mitigation = self.metadata(negative_mass);
        Ok(out)
    }
}

/// One result per requested circuit, in request order. For cut circuits
/// the reported clip mass is the largest over their fragments.
pub fn item_results(req: &JobRequest, plan: &ExecutionPlan, catalog: &Catalog) -> Result<Vec<ItemResult>, String> {
    let ctx = Ctx { req, plan, catalog, results: plan.task_results() };
    plan.items.iter().enumerate().map(|(i, p)| ctx.item(i, p)).collect()
}
