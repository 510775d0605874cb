//! Scenario files: a flat TOML document with one nesting level that picks a
//! metric family, a sampling box, the suites to run, and tolerance
//! overrides. Unknown keys are rejected so a typo points at itself.

use kahlerlab::families::calabi::{self, CalabiParams};
use kahlerlab::families::orthotoric::{self, quartic};
use kahlerlab::families::{
    hirzebruch, lebrun, product, toric, Box4, FamilyInstance, Predictions,
};
use kahlerlab::verify::{SuiteKind, ToleranceConfig};
use serde::Deserialize;
use std::path::Path;

/// Configuration failure: carries the offending key (or flag) by name.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(key: &str, what: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("{key}: {what}"))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Instance name used in reports; defaults to the file stem.
    pub name: Option<String>,
    pub family: FamilyBlock,
    pub domain: Option<DomainBlock>,
    pub suites: Option<SuitesBlock>,
    pub tolerance: Option<ToleranceBlock>,
    pub output: Option<OutputBlock>,
    pub scan: Option<ScanBlock>,
    /// Structure claims overriding the constructor's own flags; the suites
    /// then test the claims, so a wrong assert is a reproducible failure.
    pub asserts: Option<AssertsBlock>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssertsBlock {
    pub kahler: Option<bool>,
    pub symplectic: Option<bool>,
    pub constant_scalar: Option<bool>,
    pub extremal: Option<bool>,
    pub biextremal: Option<bool>,
    pub weakly_selfdual: Option<bool>,
    pub selfdual: Option<bool>,
    pub bach_flat: Option<bool>,
    pub einstein: Option<bool>,
    pub ricci_flat: Option<bool>,
    pub ricci_j_invariant: Option<bool>,
    pub rho0_nonvanishing: Option<bool>,
    pub wminus_nonvanishing: Option<bool>,
}

impl AssertsBlock {
    fn apply(&self, p: &mut Predictions) {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { p.$field = v; })*
            };
        }
        set!(
            kahler,
            symplectic,
            constant_scalar,
            extremal,
            biextremal,
            weakly_selfdual,
            selfdual,
            bach_flat,
            einstein,
            ricci_flat,
            ricci_j_invariant,
            rho0_nonvanishing,
            wminus_nonvanishing
        );
    }
}

/// Family selector plus the union of per-family parameter keys; which keys
/// are consumed (and which are required) depends on `kind`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyBlock {
    pub kind: String,
    // ortho-toric / toric quartic pair (shared k, l, A).
    pub k: Option<f64>,
    pub l: Option<f64>,
    #[serde(rename = "A")]
    pub a_quad: Option<f64>,
    #[serde(rename = "B1")]
    pub b1: Option<f64>,
    #[serde(rename = "B2")]
    pub b2: Option<f64>,
    #[serde(rename = "C1")]
    pub c1: Option<f64>,
    #[serde(rename = "C2")]
    pub c2: Option<f64>,
    /// Optional degree-five extension of the first / second profile.
    #[serde(rename = "F5")]
    pub f5: Option<f64>,
    #[serde(rename = "G5")]
    pub g5: Option<f64>,
    // Calabi-type vertical profile.
    #[serde(rename = "A1")]
    pub a1: Option<f64>,
    #[serde(rename = "A2")]
    pub a2: Option<f64>,
    #[serde(rename = "A3")]
    pub a3: Option<f64>,
    #[serde(rename = "A4")]
    pub a4: Option<f64>,
    pub eps: Option<f64>,
    pub gauge_x: Option<f64>,
    pub gauge_y: Option<f64>,
    // Ruled-surface pencil.
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// Twist degree of the pencil member (integer >= 1).
    pub hk: Option<f64>,
    /// "momentum" (fiber coordinate is the momentum) or "potential"
    /// (fiber coordinate u with z = psi(u)).
    pub chart: Option<String>,
    pub anchor_u: Option<f64>,
    pub anchor_psi: Option<f64>,
    pub u_lo: Option<f64>,
    pub u_hi: Option<f64>,
    pub force_ode: Option<bool>,
    // Almost-Kahler fibered presets / toric preset.
    pub preset: Option<String>,
    // Product of two constant-curvature surfaces.
    pub k1: Option<f64>,
    pub k2: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainBlock {
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
    pub margin: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuitesBlock {
    pub run: Vec<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceBlock {
    pub identity: Option<f64>,
    pub zero: Option<f64>,
    pub floor: Option<f64>,
    pub constancy: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub report: Option<String>,
    pub scan: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanBlock {
    pub fields: Vec<String>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(&path.display().to_string(), e))?;
        let mut sc: Scenario =
            toml::from_str(&text).map_err(|e| bad(&path.display().to_string(), e))?;
        if sc.name.is_none() {
            sc.name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned());
        }
        Ok(sc)
    }

    /// Suites requested by the scenario (None = all).
    pub fn suites(&self) -> Result<Option<Vec<SuiteKind>>, ConfigError> {
        match &self.suites {
            None => Ok(None),
            Some(b) => {
                let mut out = Vec::with_capacity(b.run.len());
                for name in &b.run {
                    out.push(SuiteKind::from_name(name).ok_or_else(|| {
                        bad("suites.run", format!("unknown suite '{name}'"))
                    })?);
                }
                Ok(Some(out))
            }
        }
    }

    /// Tolerance configuration after applying scenario overrides on top of
    /// the given base (flag/env-resolved defaults).
    pub fn tolerances(&self, base: ToleranceConfig) -> Result<ToleranceConfig, ConfigError> {
        let mut cfg = base;
        if let Some(t) = &self.tolerance {
            if let Some(v) = t.identity {
                cfg.identity_tol = v;
            }
            if let Some(v) = t.zero {
                cfg.zero_tol = v;
            }
            if let Some(v) = t.floor {
                cfg.nonzero_floor = v;
            }
            if let Some(v) = t.constancy {
                cfg.constancy_tol = v;
            }
            if let Some(v) = t.samples {
                cfg.samples_per_box = v;
            }
            if let Some(v) = t.seed {
                cfg.rng_seed = v;
            }
        }
        cfg.validate()
            .map_err(|e| bad("tolerance", e))?;
        Ok(cfg)
    }

    /// Builds the family instance the scenario describes, with any
    /// structure claims from `[asserts]` applied on top.
    pub fn build(&self) -> Result<FamilyInstance, ConfigError> {
        let mut inst = self.build_base()?;
        if let Some(asserts) = &self.asserts {
            asserts.apply(&mut inst.predictions);
        }
        Ok(inst)
    }

    fn build_base(&self) -> Result<FamilyInstance, ConfigError> {
        let name = self.name.as_deref().unwrap_or("scenario");
        let fam = &self.family;
        let dom = self.domain.as_ref();
        let margin = dom.and_then(|d| d.margin).unwrap_or(0.1);

        // Keys that belong to another family are rejected outright so a
        // misplaced parameter cannot be silently ignored.
        let reject = |keys: &[(&str, bool)]| -> Result<(), ConfigError> {
            for (key, set) in keys {
                if *set {
                    return Err(bad(
                        &format!("family.{key}"),
                        format!("not a parameter of family kind '{}'", fam.kind),
                    ));
                }
            }
            Ok(())
        };
        let quartic_set = [
            ("k", fam.k.is_some()),
            ("l", fam.l.is_some()),
            ("A", fam.a_quad.is_some()),
            ("B1", fam.b1.is_some()),
            ("B2", fam.b2.is_some()),
            ("C1", fam.c1.is_some()),
            ("C2", fam.c2.is_some()),
            ("F5", fam.f5.is_some()),
            ("G5", fam.g5.is_some()),
        ];
        let calabi_set = [
            ("A1", fam.a1.is_some()),
            ("A2", fam.a2.is_some()),
            ("A3", fam.a3.is_some()),
            ("A4", fam.a4.is_some()),
            ("eps", fam.eps.is_some()),
            ("gauge_x", fam.gauge_x.is_some()),
            ("gauge_y", fam.gauge_y.is_some()),
        ];
        let pencil_set = [
            ("a", fam.a.is_some()),
            ("b", fam.b.is_some()),
            ("hk", fam.hk.is_some()),
            ("chart", fam.chart.is_some()),
            ("anchor_u", fam.anchor_u.is_some()),
            ("anchor_psi", fam.anchor_psi.is_some()),
            ("u_lo", fam.u_lo.is_some()),
            ("u_hi", fam.u_hi.is_some()),
            ("force_ode", fam.force_ode.is_some()),
        ];
        let preset_set = [("preset", fam.preset.is_some())];
        let product_set = [("k1", fam.k1.is_some()), ("k2", fam.k2.is_some())];

        let need = |v: Option<f64>, key: &str| -> Result<f64, ConfigError> {
            v.ok_or_else(|| bad(&format!("family.{key}"), "missing required key"))
        };

        match fam.kind.as_str() {
            "orthotoric" => {
                reject(&calabi_set)?;
                reject(&pencil_set)?;
                reject(&preset_set)?;
                reject(&product_set)?;
                let (k, l, aq) = (
                    need(fam.k, "k")?,
                    need(fam.l, "l")?,
                    need(fam.a_quad, "A")?,
                );
                let mut fc = quartic(k, l, aq, need(fam.b1, "B1")?, need(fam.c1, "C1")?);
                let mut gc = quartic(k, l, aq, need(fam.b2, "B2")?, need(fam.c2, "C2")?);
                if let Some(f5) = fam.f5 {
                    fc.push(f5);
                }
                if let Some(g5) = fam.g5 {
                    gc.push(g5);
                }
                let domain = self.domain_box(
                    Box4::new([1.2, 0.2, 0.0, 0.0], [1.8, 0.8, 1.0, 1.0]),
                )?;
                Ok(orthotoric::instance(name, &fc, &gc, domain, margin))
            }
            "toric" => {
                reject(&calabi_set)?;
                reject(&pencil_set)?;
                reject(&product_set)?;
                if let Some(preset) = &fam.preset {
                    if preset != "non_hessian" {
                        return Err(bad(
                            "family.preset",
                            format!("unknown toric preset '{preset}'"),
                        ));
                    }
                    reject(&quartic_set)?;
                    let domain = self.domain_box(Box4::new(
                        [-0.5, -0.5, 0.0, 0.0],
                        [0.5, 0.5, 1.0, 1.0],
                    ))?;
                    return Ok(toric::non_hessian_instance(name, domain, margin));
                }
                let (k, l, aq) = (
                    need(fam.k, "k")?,
                    need(fam.l, "l")?,
                    need(fam.a_quad, "A")?,
                );
                let mut fc = quartic(k, l, aq, need(fam.b1, "B1")?, need(fam.c1, "C1")?);
                let mut gc = quartic(k, l, aq, need(fam.b2, "B2")?, need(fam.c2, "C2")?);
                if let Some(f5) = fam.f5 {
                    fc.push(f5);
                }
                if let Some(g5) = fam.g5 {
                    gc.push(g5);
                }
                let domain = self.domain_box(
                    Box4::new([1.9, 0.5, 0.0, 0.0], [2.4, 0.85, 1.0, 1.0]),
                )?;
                Ok(toric::from_orthotoric_profiles(name, &fc, &gc, domain, margin))
            }
            "calabi_type" => {
                reject(&quartic_set)?;
                reject(&pencil_set)?;
                reject(&preset_set)?;
                reject(&product_set)?;
                let params = CalabiParams::new(
                    fam.eps.unwrap_or(1.0),
                    need(fam.a1, "A1")?,
                    need(fam.a2, "A2")?,
                    need(fam.a3, "A3")?,
                    need(fam.a4, "A4")?,
                )
                .with_gauge([fam.gauge_x.unwrap_or(0.0), fam.gauge_y.unwrap_or(0.0)]);
                let domain = self.domain_box(calabi::standard_domain(0.9, 1.5))?;
                Ok(calabi::instance(name, params, domain, margin))
            }
            "hirzebruch" => {
                reject(&quartic_set)?;
                reject(&calabi_set)?;
                reject(&preset_set)?;
                reject(&product_set)?;
                if dom.is_some_and(|d| d.lo.is_some() || d.hi.is_some()) {
                    return Err(bad(
                        "domain.lo",
                        "the fiber band is derived from the momentum endpoints; only domain.margin applies",
                    ));
                }
                let (a, b) = (need(fam.a, "a")?, need(fam.b, "b")?);
                let twist = fam.hk.unwrap_or(1.0);
                match fam.chart.as_deref().unwrap_or("momentum") {
                    "momentum" => {
                        if twist != 1.0 {
                            return Err(bad(
                                "family.hk",
                                "the momentum chart ships only the twist-1 member",
                            ));
                        }
                        hirzebruch::momentum_instance(name, a, b, margin)
                            .map_err(|e| bad("family", e))
                    }
                    "potential" => {
                        let anchor = (
                            fam.anchor_u.unwrap_or(0.0),
                            fam.anchor_psi.unwrap_or(0.5 * (a + b)),
                        );
                        let u_range = (fam.u_lo.unwrap_or(-1.0), fam.u_hi.unwrap_or(1.0));
                        hirzebruch::potential_instance(
                            name,
                            a,
                            b,
                            anchor,
                            u_range,
                            margin,
                            twist,
                            fam.force_ode.unwrap_or(false),
                        )
                        .map_err(|e| bad("family", e))
                    }
                    other => Err(bad("family.chart", format!("unknown chart '{other}'"))),
                }
            }
            "ak_lebrun" => {
                reject(&quartic_set)?;
                reject(&calabi_set)?;
                reject(&pencil_set)?;
                reject(&product_set)?;
                if dom.is_some() {
                    return Err(bad("domain", "fixed for the fibered presets; remove the block"));
                }
                let preset = fam
                    .preset
                    .as_deref()
                    .ok_or_else(|| bad("family.preset", "missing required key"))?;
                let mut inst = match preset {
                    "gibbons_hawking" => lebrun::gibbons_hawking(),
                    "gibbons_hawking_quadrature" => lebrun::gibbons_hawking_quadrature(),
                    "constant_h" => lebrun::constant_h(),
                    "flat_sigma" => lebrun::flat_sigma(),
                    other => {
                        return Err(bad(
                            "family.preset",
                            format!("unknown fibered preset '{other}'"),
                        ))
                    }
                };
                inst.name = name.to_string();
                Ok(inst)
            }
            "kahler_product" => {
                reject(&quartic_set)?;
                reject(&calabi_set)?;
                reject(&pencil_set)?;
                reject(&preset_set)?;
                let (k1, k2) = (need(fam.k1, "k1")?, need(fam.k2, "k2")?);
                let domain = self.domain_box(product::standard_domain())?;
                Ok(product::instance(name, k1, k2, domain, margin))
            }
            other => Err(bad("family.kind", format!("unknown family '{other}'"))),
        }
    }

    fn domain_box(&self, default: Box4) -> Result<Box4, ConfigError> {
        let Some(d) = &self.domain else {
            return Ok(default);
        };
        let lo = match &d.lo {
            None => default.lo,
            Some(v) => as4(v, "domain.lo")?,
        };
        let hi = match &d.hi {
            None => default.hi,
            Some(v) => as4(v, "domain.hi")?,
        };
        for i in 0..4 {
            if !(lo[i] < hi[i]) {
                return Err(bad(
                    "domain",
                    format!("lo[{i}] = {} must be below hi[{i}] = {}", lo[i], hi[i]),
                ));
            }
        }
        Ok(Box4::new(lo, hi))
    }
}

fn as4(v: &[f64], key: &str) -> Result<[f64; 4], ConfigError> {
    v.try_into()
        .map_err(|_| bad(key, format!("expected 4 entries, got {}", v.len())))
}
