use crate::budget::{ParameterBinding, ToleranceVector};

use super::AnnealError;

/// Lift a solution of a coarse binding to a finer one: every fine group takes
/// the value of the coarse group that contains all of its slots.
pub fn warm_start(
    coarse: &ParameterBinding,
    coarse_theta: &ToleranceVector,
    fine: &ParameterBinding,
) -> Result<ToleranceVector, AnnealError> {
    if coarse_theta.len() != coarse.dimension() {
        return Err(AnnealError::Structure(format!(
            "coarse solution has {} entries for {} groups",
            coarse_theta.len(),
            coarse.dimension()
        )));
    }
    let mut values = Vec::with_capacity(fine.dimension());
    for (group, slots) in &fine.groups {
        let mut owner = None;
        for slot in slots {
            let g = coarse
                .group_of_slot(slot)
                .ok_or_else(|| AnnealError::Structure(format!("slot `{slot}` is not in the coarse binding")))?;
            match owner {
                None => owner = Some(g),
                Some(o) if o != g => {
                    return Err(AnnealError::Structure(format!(
                        "fine group `{group}` spans coarse groups"
                    )))
                }
                Some(_) => {}
            }
        }
        let g = owner.ok_or_else(|| AnnealError::Structure(format!("fine group `{group}` is empty")))?;
        values.push(coarse_theta.get(g));
    }
    Ok(ToleranceVector::new(values)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tfim::{build_tfim_model, Preset, TfimConfig};

    fn binding(preset: Preset) -> ParameterBinding {
        build_tfim_model(&TfimConfig::default(), preset).unwrap().1
    }

    #[test]
    fn two_to_three() {
        let theta = ToleranceVector::new(vec![0.04, 1e-6]).unwrap();
        let fine = warm_start(&binding(Preset::TwoParam), &theta, &binding(Preset::ThreeParam)).unwrap();
        assert_eq!(fine.values(), [0.04, 1e-6, 1e-6]);
    }

    #[test]
    fn three_to_redundant() {
        let theta = ToleranceVector::new(vec![0.04, 1e-6, 1e-10]).unwrap();
        let coarse = crate::tfim::merged_rotation_binding(5);
        assert_eq!(coarse.group_names().collect::<Vec<_>>(), binding(Preset::ThreeParam).group_names().collect::<Vec<_>>());
        let fine = warm_start(&coarse, &theta, &binding(Preset::Redundancy(5))).unwrap();
        assert_eq!(fine.values()[..2], [0.04, 1e-6]);
        assert!(fine.values()[2..].iter().all(|&v| v == 1e-10));
        assert_eq!(fine.len(), 8);
    }

    #[test]
    fn identity() {
        let b = binding(Preset::ThreeParam);
        let theta = ToleranceVector::new(vec![0.04, 1e-6, 1e-10]).unwrap();
        assert_eq!(warm_start(&b, &theta, &b).unwrap(), theta);
    }

    #[test]
    fn non_refining_pair() {
        let theta = ToleranceVector::new(vec![0.04, 1e-6, 1e-10]).unwrap();
        let err = warm_start(&binding(Preset::ThreeParam), &theta, &binding(Preset::TwoParam)).unwrap_err();
        assert!(matches!(err, AnnealError::Structure(_)));
    }
}
