use chaos_bounds::bounds::latala_linear_moment;
use chaos_bounds::oracle::{grid_bilinear_oracle, grid_norm_oracle, rademacher_exact_moment};
use chaos_bounds::{bilinear_norm, linear_norm, CoeffMatrix, ConstraintBudget, DistributionModel, Result};

pub struct Check {
    pub name: String,
    pub low: f64,
    pub high: f64,
    pub got: f64,
}

impl Check {
    pub fn pass(&self) -> bool {
        self.got >= self.low && self.got <= self.high
    }
}

const REL: f64 = 0.01;

fn models() -> Result<Vec<DistributionModel>> {
    Ok(vec![
        DistributionModel::square_tail(),
        DistributionModel::gaussian(),
        DistributionModel::rademacher(),
        DistributionModel::weibull(1.0)?,
        DistributionModel::weibull(0.5)?,
        DistributionModel::trunc_weibull(0.5, 4.0)?,
    ])
}

/// Oracle-versus-solver comparisons on fixed small instances.
pub fn small_suite() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let vectors: [&[f64]; 3] = [&[3.0, 4.0], &[1.0, 1.0, 1.0], &[2.0, -0.5, 1.0]];
    for model in models()? {
        for a in vectors {
            for p in [1.0, 4.0] {
                let s = linear_norm(a, &ConstraintBudget::new(p, model.clone())?)?;
                let o = grid_norm_oracle(a, &model, p, 0.01)?;
                out.push(Check {
                    name: format!("linear {} a={:?} p={}", model.label(), a, p),
                    low: o.value * (1.0 - REL),
                    high: o.upper * (1.0 + REL),
                    got: s.value,
                });
            }
        }
    }
    let a = CoeffMatrix::dense(vec![vec![1.0, -0.5], vec![0.25, 2.0]])?;
    for model in [DistributionModel::square_tail(), DistributionModel::rademacher(), DistributionModel::weibull(1.0)?] {
        let p = 2.0;
        let b = ConstraintBudget::new(p, model.clone())?;
        let s = bilinear_norm(&a, &b, &b)?;
        let o = grid_bilinear_oracle(&a, &model, p, &model, p, 0.01)?;
        out.push(Check {
            name: format!("bilinear {} 2x2 p={}", model.label(), p),
            low: o.value * (1.0 - REL),
            high: o.upper * (1.0 + REL),
            got: s.value,
        });
    }
    let two = CoeffMatrix::chaos(vec![vec![0.0, 1.0], vec![1.0, 0.0]])?;
    for p in [1.0, 2.0, 4.0, 8.0] {
        let r = rademacher_exact_moment(&two, p, false)?;
        out.push(Check {
            name: format!("enumeration two-point p={p}"),
            low: 2.0 - 1e-12,
            high: 2.0 + 1e-12,
            got: r.value,
        });
    }
    let one = CoeffMatrix::dense(vec![vec![1.0]])?;
    let r = rademacher_exact_moment(&one, 3.0, true)?;
    out.push(Check { name: "enumeration decoupled 1x1".into(), low: 1.0 - 1e-12, high: 1.0 + 1e-12, got: r.value });
    let t = latala_linear_moment(&DistributionModel::rademacher(), &[1.0], 2.0)?;
    let expect = 1.0 / (std::f64::consts::E.powi(2) - 1.0).sqrt();
    out.push(Check { name: "latala rademacher scalar p=2".into(), low: expect - 1e-6, high: expect + 1e-6, got: t });
    Ok(out)
}
