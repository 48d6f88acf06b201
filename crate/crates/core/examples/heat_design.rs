//! Selects 20 heat sensors three ways and reconstructs the full data from each.

use nalgebra::DVector;
use oedcss::completion::{complete_data, relative_error, DataSpaceMap};
use oedcss::criteria::evaluate_design;
use oedcss::models::{heat_instance, HeatSpec, PriorSpec};
use oedcss::operator::densify;
use oedcss::rsvd::exact_svd_dense;
use oedcss::selection::{gks_select, greedy_select, raf_select, PivotRule, SvdBackend};
use oedcss::SketchConfig;

fn main() -> oedcss::Result<()> {
    let inst = heat_instance(&HeatSpec::default(), &PriorSpec::default())?;
    let (model, data) = inst.bayes_model(0.02, 0)?;
    let a = model.preconditioned()?.op;
    let k = 20;

    let svd = SvdBackend::Randomized(SketchConfig::new(k).with_p(20).with_q(1).with_seed(0));
    let designs = [
        gks_select(&a, k, &svd, PivotRule::Qrcp)?,
        raf_select(&a, k, 20, 0, PivotRule::Qrcp)?,
        greedy_select(&a, k)?,
    ];

    let dense = densify(&a)?;
    let basis = exact_svd_dense(&dense, k)?.v_k;
    let map = DataSpaceMap::new(&model)?;
    for sel in &designs {
        let observed = DVector::from_iterator(k, sel.indices.iter().map(|&i| data.data[i]));
        let estimate = map.estimate_subset(&sel.indices, &observed)?;
        let completed = complete_data(&basis, &sel.indices, &data.data)?;
        println!(
            "{:<6} phi_D = {:7.3}  applies = {:?}  MAP error = {:.4}  completion error = {:.4}",
            sel.method.as_str(),
            evaluate_design(&dense, &sel.indices)?,
            sel.diagnostics.applies,
            relative_error(&estimate, &inst.truth)?,
            completed.rel_error.unwrap_or(f64::NAN),
        );
    }
    Ok(())
}
