//! Named registry of the built-in family instances used by the
//! command-line tools and the verification suites.

use super::orthotoric::quartic;
use super::{calabi, hirzebruch, lebrun, orthotoric, product, toric};
use super::{Box4, FamilyError, FamilyInstance};
use calabi::CalabiParams;

/// Names of every built-in instance, grouped by family.
pub fn names() -> Vec<&'static str> {
    vec![
        "orthotoric_biextremal",
        "orthotoric_selfdual",
        "orthotoric_extremal_asymmetric",
        "orthotoric_bach_flat",
        "orthotoric_quintic",
        "orthotoric_einstein",
        "orthotoric_flat",
        "toric_biextremal",
        "toric_non_hessian",
        "product_scalar_flat",
        "product_generic",
        "product_einstein",
        "calabi_biextremal",
        "calabi_extremal",
        "calabi_bach_flat",
        "calabi_wsd_pencil",
        "hirzebruch_momentum",
        "hirzebruch_potential",
        "hirzebruch_potential_ode",
        "hirzebruch_potential_generic",
        "lebrun_gibbons_hawking",
        "lebrun_gibbons_hawking_quadrature",
        "lebrun_constant_h",
        "lebrun_flat_sigma",
    ]
}

fn ortho_box(xi: [f64; 2], eta: [f64; 2]) -> Box4 {
    Box4::new([xi[0], eta[0], 0.0, 0.0], [xi[1], eta[1], 1.0, 1.0])
}

/// Builds a built-in instance by name.
pub fn builtin(name: &str) -> Result<FamilyInstance, FamilyError> {
    let inst = match name {
        // Shared-coefficient quartics with distinct constant terms: the
        // generic member with a hamiltonian Ricci source (not selfdual,
        // not Bach-flat).
        "orthotoric_biextremal" => orthotoric::instance(
            name,
            &quartic(1.0, 0.0, 0.0, 0.0, 1.0),
            &quartic(1.0, 0.0, 0.0, 0.0, -1.0),
            ortho_box([1.2, 1.8], [0.2, 0.8]),
            0.1,
        ),
        // Equal profiles: the distinguished Weyl half vanishes.
        "orthotoric_selfdual" => orthotoric::instance(
            name,
            &quartic(1.0, 0.0, 0.0, 0.0, -0.5),
            &quartic(1.0, 0.0, 0.0, 0.0, -0.5),
            ortho_box([1.2, 1.8], [0.2, 0.6]),
            0.1,
        ),
        // Linear coefficients differ: extremal but not biextremal, the
        // designated negative control for the weak-selfduality checks.
        "orthotoric_extremal_asymmetric" => orthotoric::instance(
            name,
            &quartic(1.0, 0.0, 0.0, 1.0, 1.0),
            &quartic(1.0, 0.0, 0.0, 0.0, -1.0),
            ortho_box([1.2, 1.8], [0.2, 0.8]),
            0.1,
        ),
        // Linear/constant offsets balanced so the Bach tensor vanishes
        // without weak selfduality.
        "orthotoric_bach_flat" => orthotoric::instance(
            name,
            &quartic(1.0, 2.0, 0.0, 1.0, -0.5),
            &quartic(1.0, 2.0, 0.0, 0.0, -1.0),
            ortho_box([1.2, 1.8], [0.1, 0.6]),
            0.1,
        ),
        // Degree-five profile: outside the extremal class entirely while
        // the closed-form scalar references still apply.
        "orthotoric_quintic" => orthotoric::instance(
            name,
            &[1.0, 0.0, 0.0, 0.0, 1.0, 0.3],
            &quartic(1.0, 0.0, 0.0, 0.0, -1.0),
            ortho_box([1.2, 1.8], [0.2, 0.8]),
            0.1,
        ),
        // Cubic shared profile: Einstein with nonzero scalar curvature.
        "orthotoric_einstein" => orthotoric::instance(
            name,
            &quartic(0.0, 1.0, 0.0, 0.0, 1.0),
            &quartic(0.0, 1.0, 0.0, 0.0, -1.0),
            ortho_box([1.2, 1.8], [0.2, 0.8]),
            0.1,
        ),
        // Linear profiles: the flat metric in disguise.
        "orthotoric_flat" => orthotoric::instance(
            name,
            &[0.0, 1.0],
            &[0.0, 1.0],
            ortho_box([0.5, 1.5], [-1.5, -0.5]),
            0.1,
        ),
        // The biextremal quartic pair pushed through the momentum chart.
        "toric_biextremal" => toric::from_orthotoric_profiles(
            name,
            &quartic(1.0, 0.0, 0.0, 0.0, 1.0),
            &quartic(1.0, 0.0, 0.0, 0.0, -1.0),
            Box4::new([1.9, 0.5, 0.0, 0.0], [2.4, 0.85, 1.0, 1.0]),
            0.1,
        ),
        "toric_non_hessian" => toric::non_hessian_instance(
            name,
            Box4::new([-0.5, -0.5, 0.0, 0.0], [0.5, 0.5, 1.0, 1.0]),
            0.1,
        ),
        "product_scalar_flat" => {
            product::instance(name, 2.0, -2.0, product::standard_domain(), 0.1)
        }
        "product_generic" => product::instance(name, 1.0, -2.0, product::standard_domain(), 0.1),
        "product_einstein" => product::instance(name, 1.0, 1.0, product::standard_domain(), 0.1),
        "calabi_biextremal" => calabi::instance(
            name,
            CalabiParams::new(1.0, 1.0, 0.0, 0.0, -1.0),
            calabi::standard_domain(0.9, 1.5),
            0.1,
        ),
        // Nonzero linear coefficient: extremal but no hamiltonian Ricci
        // source (negative control in the fibered family).
        "calabi_extremal" => calabi::instance(
            name,
            CalabiParams::new(1.0, 1.0, 0.0, 0.3, -1.0),
            calabi::standard_domain(0.9, 1.5),
            0.1,
        ),
        "calabi_bach_flat" => calabi::instance(
            name,
            CalabiParams::new(1.0, 1.0, 2.0, 2.0, 1.0),
            calabi::standard_domain(0.9, 1.5),
            0.1,
        ),
        // The profile that closes up on the ruled surface with the
        // degenerate pencil: constant kappa lambda^3 = 3/128.
        "calabi_wsd_pencil" => calabi::instance(
            name,
            CalabiParams::new(1.0, -0.25, 0.0, 0.0, -0.75),
            calabi::standard_domain(1.1, 1.6),
            0.1,
        ),
        "hirzebruch_momentum" => hirzebruch::momentum_instance(name, 1.0, 2.0, 0.1)?,
        "hirzebruch_potential" => hirzebruch::potential_instance(
            name,
            1.0,
            3f64.sqrt(),
            (0.0, 2f64.sqrt()),
            (-1.0, 1.0),
            0.1,
            1.0,
            false,
        )?,
        "hirzebruch_potential_ode" => hirzebruch::potential_instance(
            name,
            1.0,
            3f64.sqrt(),
            (0.0, 2f64.sqrt()),
            (-1.0, 1.0),
            0.1,
            1.0,
            true,
        )?,
        "hirzebruch_potential_generic" => hirzebruch::potential_instance(
            name,
            1.0,
            2.0,
            (0.0, 1.5),
            (-1.0, 1.0),
            0.1,
            2.0,
            false,
        )?,
        "lebrun_gibbons_hawking" => lebrun::gibbons_hawking(),
        "lebrun_gibbons_hawking_quadrature" => lebrun::gibbons_hawking_quadrature(),
        "lebrun_constant_h" => lebrun::constant_h(),
        "lebrun_flat_sigma" => lebrun::flat_sigma(),
        other => {
            return Err(FamilyError::BadParameter {
                what: format!("unknown instance name '{other}'"),
            })
        }
    };
    Ok(inst)
}

/// Builds every built-in instance.
pub fn all() -> Result<Vec<FamilyInstance>, FamilyError> {
    names().into_iter().map(builtin).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_builds_and_keeps_its_name() {
        for name in names() {
            let inst = builtin(name).unwrap();
            assert_eq!(inst.name, name);
            // Chart data must be constructible at the box center.
            let center = inst.sampling_box().center();
            inst.frame_data_at(&center, 2).unwrap();
        }
    }

    #[test]
    fn unknown_name_is_rejected() {
        assert!(builtin("no_such_instance").is_err());
    }

    #[test]
    fn preset_names_match_instance_constructors() {
        assert_eq!(
            builtin("lebrun_gibbons_hawking").unwrap().name,
            "lebrun_gibbons_hawking"
        );
    }
}
