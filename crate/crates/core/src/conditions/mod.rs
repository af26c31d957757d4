//! The D2Q9 isotropy conditions order by order, their verification against
//! the engine, and readout of sound speed and viscosity coefficients.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expansion::{CoeffTensor, ExpansionResult};
use crate::isotropy::{
    apply_phi, extract_conditions_chained, is_isotropic, lack_of_isotropy, ConditionSet, ConditionSetDump, OrthoTransform,
};
use crate::scheme::SchemeSpec;
use crate::symkernel::{parse_with, Poly, RatFun, SymError, Symbol};

pub mod solve;

pub use solve::{solve_system, Solution};

#[derive(Debug, Error)]
pub enum ConditionError {
    #[error("unknown parameter {0}")]
    UnknownParameter(String),
    #[error("cannot solve {0} for {1}")]
    NotSolvable(String, String),
    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error("assignment file: {0}")]
    Io(String),
}

/// `poly = 0`, solved for `solve_for` when turned into a binding.
#[derive(Debug, Clone)]
pub struct NamedCondition {
    pub name: String,
    pub poly: Poly,
    pub solve_for: Symbol,
}

/// Conditions that must hold together.
pub type Conjunction = Vec<NamedCondition>;

/// One bullet: all of `common`, and one arm of each disjunction.
#[derive(Debug, Clone)]
pub struct Bullet {
    pub order: usize,
    pub common: Conjunction,
    /// Arms of the "either ... or" clause, with labels.
    pub alternatives: Vec<(String, Conjunction)>,
    pub note: Option<String>,
}

impl Bullet {
    pub fn arms(&self) -> Vec<Option<usize>> {
        if self.alternatives.is_empty() {
            vec![None]
        } else {
            (0..self.alternatives.len()).map(Some).collect()
        }
    }

    /// Conditions with the chosen arm.
    pub fn conditions(&self, arm: Option<usize>) -> Conjunction {
        let mut out = self.common.clone();
        if let Some(k) = arm {
            out.extend(self.alternatives[k].1.iter().cloned());
        }
        out
    }

    pub fn arm_label(&self, arm: Option<usize>) -> String {
        arm.map_or_else(|| "-".to_string(), |k| self.alternatives[k].0.clone())
    }
}

fn cond(spec: &SchemeSpec, name: &str, text: &str, solve_for: &str) -> NamedCondition {
    let f = parse_with(text, &|n| spec.resolve(n)).expect("condition text parses");
    NamedCondition {
        name: name.to_string(),
        poly: f.num().clone(),
        solve_for: spec.parameter(solve_for).expect("known parameter"),
    }
}

fn zero(spec: &SchemeSpec, p: &str) -> NamedCondition {
    cond(spec, &format!("{p} = 0"), p, p)
}

/// The four D2Q9 bullets. Bullet `k` characterizes isotropy of `A_1..A_k`
/// given bullets `1..k-1`.
pub fn proposition_bullets(spec: &SchemeSpec) -> Vec<Bullet> {
    let b1 = ["E_eps_qx", "E_eps_qy", "E_xx_rho", "E_xx_qx", "E_xx_qy", "E_xy_rho", "E_xy_qx", "E_xy_qy"];
    let branch_energy = || {
        vec![cond(
            spec,
            "2 E_eps2_rho + 4 + 3 E_eps_rho = 0",
            "2*E_eps2_rho + 4 + 3*E_eps_rho",
            "E_eps2_rho",
        )]
    };
    vec![
        Bullet {
            order: 1,
            common: b1.iter().map(|p| zero(spec, p)).collect(),
            alternatives: vec![],
            note: None,
        },
        Bullet {
            order: 2,
            common: vec![
                zero(spec, "E_phix_rho"),
                zero(spec, "E_phix_qy"),
                zero(spec, "E_phiy_rho"),
                zero(spec, "E_phiy_qx"),
                cond(spec, "E_phix_qx = E_phiy_qy", "E_phiy_qy - E_phix_qx", "E_phiy_qy"),
            ],
            alternatives: vec![],
            note: None,
        },
        Bullet {
            order: 3,
            common: vec![
                zero(spec, "E_eps2_qx"),
                zero(spec, "E_eps2_qy"),
                cond(spec, "sigma_xx = sigma_xy", "sigma_xy - sigma_xx", "sigma_xy"),
                cond(spec, "E_phix_qx = -1", "E_phix_qx + 1", "E_phix_qx"),
            ],
            alternatives: vec![
                ("2 E_eps2_rho + 4 + 3 E_eps_rho = 0".into(), branch_energy()),
                (
                    "sigma_phix = sigma_phiy = 1/(12 sigma_xx)".into(),
                    vec![
                        cond(spec, "sigma_phix = 1/(12 sigma_xx)", "12*sigma_phix*sigma_xx - 1", "sigma_phix"),
                        cond(spec, "sigma_phiy = 1/(12 sigma_xx)", "12*sigma_phiy*sigma_xx - 1", "sigma_phiy"),
                    ],
                ),
            ],
            note: None,
        },
        Bullet {
            order: 4,
            common: {
                let mut c = branch_energy();
                c.push(cond(spec, "sigma_eps = sigma_xx", "sigma_eps - sigma_xx", "sigma_eps"));
                c.push(cond(spec, "sigma_phix = 1/(6 sigma_xx)", "6*sigma_phix*sigma_xx - 1", "sigma_phix"));
                c.push(cond(spec, "sigma_phiy = 1/(6 sigma_xx)", "6*sigma_phiy*sigma_xx - 1", "sigma_phiy"));
                c
            },
            alternatives: vec![
                (
                    "2 + 3 E_eps_rho = 0".into(),
                    vec![cond(spec, "2 + 3 E_eps_rho = 0", "2 + 3*E_eps_rho", "E_eps_rho")],
                ),
                (
                    "sigma_eps2 = sigma_xx".into(),
                    vec![cond(spec, "sigma_eps2 = sigma_xx", "sigma_eps2 - sigma_xx", "sigma_eps2")],
                ),
            ],
            note: Some("the arm sigma_eps2 = sigma_xx is stated to give zeta = 6 mu".into()),
        },
    ]
}

/// Bullet conditions as condition sets (each disjunction as the product of
/// its arms, one product per choice of equations).
pub fn proposition_condition_sets(spec: &SchemeSpec) -> BTreeMap<usize, ConditionSet> {
    let mut out = BTreeMap::new();
    for b in proposition_bullets(spec) {
        let mut polys: Vec<Poly> = b.common.iter().map(|c| c.poly.clone()).collect();
        let arms: Vec<&Conjunction> = b.alternatives.iter().map(|(_, c)| c).collect();
        if let [first, second] = arms.as_slice() {
            for x in first.iter() {
                for y in second.iter() {
                    polys.push(&x.poly * &y.poly);
                }
            }
        }
        let mut set = ConditionSet::from_polys(b.order, polys);
        set.apply_names(&naming_table(spec));
        out.insert(b.order, set);
    }
    out
}

/// Readable names for the polynomials that appear in the bullets.
pub fn naming_table(spec: &SchemeSpec) -> Vec<(String, Poly)> {
    let mut seen = BTreeMap::new();
    for b in proposition_bullets(spec) {
        for c in b.common.iter().chain(b.alternatives.iter().flat_map(|(_, c)| c.iter())) {
            seen.entry(c.poly.primitive().to_canonical_string())
                .or_insert_with(|| (c.name.clone(), c.poly.clone()));
        }
    }
    seen.into_values().collect()
}

/// Arm choice for bullets 3 and 4; `None` entries for bullets without a
/// disjunction.
pub type Branch = Vec<Option<usize>>;

/// Every branch through `order` that is consistent: bullet 4 requires the
/// energy arm of bullet 3, since its `sigma_phi` value contradicts the other.
pub fn branches(bullets: &[Bullet], order: usize) -> Vec<Branch> {
    let mut out: Vec<Branch> = vec![vec![]];
    for b in &bullets[..order] {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                b.arms().into_iter().map(move |a| {
                    let mut p = prefix.clone();
                    p.push(a);
                    p
                })
            })
            .collect();
    }
    if order >= 4 {
        out.retain(|br| br[2] == Some(0));
    }
    out
}

pub fn branch_label(bullets: &[Bullet], branch: &Branch) -> String {
    let labels: Vec<String> = bullets
        .iter()
        .zip(branch)
        .filter(|(b, _)| !b.alternatives.is_empty())
        .map(|(b, a)| b.arm_label(*a))
        .collect();
    if labels.is_empty() {
        "-".into()
    } else {
        labels.join(" / ")
    }
}

/// Cumulative conditions of `branch`.
pub fn cumulative_conditions(bullets: &[Bullet], branch: &Branch) -> Conjunction {
    bullets
        .iter()
        .zip(branch)
        .flat_map(|(b, a)| b.conditions(*a))
        .collect()
}

/// Solves each condition for its designated symbol after substituting the
/// previous ones; conditions that become trivial are skipped.
pub fn solve_bindings(conds: &[NamedCondition]) -> Result<HashMap<Symbol, RatFun>, ConditionError> {
    let mut map: HashMap<Symbol, RatFun> = HashMap::new();
    for c in conds {
        let p = RatFun::from_poly(c.poly.clone()).substitute(&map)?;
        if p.is_zero() {
            continue;
        }
        let num = p.num();
        let coeffs = num.as_univariate(c.solve_for);
        let x = c.solve_for;
        let value = match coeffs.len() {
            2 => {
                let b = RatFun::from_poly(coeffs[0].clone());
                let a = RatFun::from_poly(coeffs[1].clone());
                (-&b).div_ref(&a)?
            }
            _ => {
                return Err(ConditionError::NotSolvable(c.name.clone(), x.name()));
            }
        };
        let single: HashMap<Symbol, RatFun> = [(x, value.clone())].into_iter().collect();
        for v in map.values_mut() {
            *v = v.substitute(&single)?;
        }
        map.insert(x, value);
    }
    Ok(map)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SufficiencyResult {
    pub order: usize,
    pub branch: String,
    pub sufficient: bool,
    /// A nonzero residual entry when not sufficient.
    pub offending: Option<String>,
}

/// Substitutes the cumulative conditions of `branch` into `full` and checks
/// that `A_1..A_order` are isotropic.
pub fn verify_sufficiency(
    full: &ExpansionResult,
    bullets: &[Bullet],
    order: usize,
    branch: &Branch,
) -> Result<SufficiencyResult, ConditionError> {
    let bindings = solve_bindings(&cumulative_conditions(bullets, branch))?;
    verify_bindings(full, order, &bindings, branch_label(bullets, branch))
}

/// Sufficiency check for explicit bindings.
pub fn verify_bindings(
    full: &ExpansionResult,
    order: usize,
    bindings: &HashMap<Symbol, RatFun>,
    label: String,
) -> Result<SufficiencyResult, ConditionError> {
    let sub = full.truncated(order).substitute(bindings)?;
    let sufficient = is_isotropic(&sub, order);
    let offending = if sufficient { None } else { first_offending(&sub, order) };
    Ok(SufficiencyResult {
        order,
        branch: label,
        sufficient,
        offending,
    })
}

fn first_offending(res: &ExpansionResult, order: usize) -> Option<String> {
    for r in [OrthoTransform::symbolic_rotation(), OrthoTransform::reflection()] {
        for resid in lack_of_isotropy(res, &r, order) {
            for (e, m) in resid.residual.entries() {
                for i in 0..m.rows() {
                    for j in 0..m.cols() {
                        if !m[(i, j)].is_zero() {
                            return Some(format!(
                                "order {} {:?} [{}][{}][{}]: {}",
                                resid.order,
                                r.flavor,
                                res.conserved[i],
                                res.conserved[j],
                                crate::expansion::index_label(e),
                                m[(i, j)]
                            ));
                        }
                    }
                }
            }
        }
    }
    None
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeResult {
    pub order: usize,
    pub violated: String,
    pub seed: u64,
    /// Lowest order with a nonzero residual at the witness point.
    pub detected_at: Option<usize>,
    /// The witness point, parameter name to value.
    pub witness: BTreeMap<String, String>,
}

impl ProbeResult {
    pub fn detected(&self) -> bool {
        self.detected_at.is_some()
    }
}

/// A unit of bullet `k` that a probe violates: one condition, or a whole
/// disjunction (one equation per arm).
#[derive(Debug, Clone)]
pub struct ProbeUnit {
    pub label: String,
    pub violated: Vec<NamedCondition>,
}

/// Violation units of a bullet: each common condition alone, and for the
/// disjunction every pair of one equation from each arm.
pub fn probe_units(bullet: &Bullet) -> Vec<ProbeUnit> {
    let mut out: Vec<ProbeUnit> = bullet
        .common
        .iter()
        .map(|c| ProbeUnit {
            label: c.name.clone(),
            violated: vec![c.clone()],
        })
        .collect();
    if let [(_, a), (_, b)] = bullet.alternatives.as_slice() {
        for x in a {
            for y in b {
                out.push(ProbeUnit {
                    label: format!("neither {} nor {}", x.name, y.name),
                    violated: vec![x.clone(), y.clone()],
                });
            }
        }
    }
    out
}

fn random_rational<R: Rng>(rng: &mut R, positive: bool) -> BigRational {
    let den: i64 = rng.gen_range(1..=29);
    let num: i64 = if positive { rng.gen_range(1..=59) } else { rng.gen_range(-59..=59) };
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn seed_for(seed: u64, order: usize, unit: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((order as u64) << 32) ^ unit as u64
}

/// Evaluates every tensor entry at `point`.
fn eval_result(res: &ExpansionResult, point: &HashMap<Symbol, BigRational>) -> Result<ExpansionResult, SymError> {
    let eval = |t: &CoeffTensor| t.try_map(|e| e.eval(point).map(RatFun::constant));
    Ok(ExpansionResult {
        a: res.a.iter().map(eval).collect::<Result<_, _>>()?,
        b: Vec::new(),
        ..res.clone()
    })
}

fn lowest_nonzero_order(res: &ExpansionResult, order: usize) -> Option<usize> {
    (1..=order).find(|&n| {
        let a = res.a(n);
        [OrthoTransform::symbolic_rotation(), OrthoTransform::reflection()]
            .iter()
            .any(|r| !apply_phi(r, a, &res.kinds).sub(a).is_zero())
    })
}

/// Random point with the given bindings and every free symbol drawn at
/// random (relaxation parameters and scales positive). Retries on poles and
/// when `violated` vanishes at the point.
pub fn random_point(
    spec: &SchemeSpec,
    bindings: &HashMap<Symbol, RatFun>,
    violated: &[NamedCondition],
    rng: &mut ChaCha8Rng,
) -> Result<HashMap<Symbol, BigRational>, ConditionError> {
    'retry: for _ in 0..200 {
        let mut point: HashMap<Symbol, BigRational> = HashMap::new();
        point.insert(spec.lambda, random_rational(rng, true));
        let free: Vec<Symbol> = spec.parameters.iter().copied().filter(|p| !bindings.contains_key(p)).collect();
        for p in free {
            let positive = p.name().starts_with("sigma_");
            point.insert(p, random_rational(rng, positive));
        }
        for p in &spec.parameters {
            if let Some(v) = bindings.get(p) {
                match v.eval(&point) {
                    Ok(x) => {
                        if p.name().starts_with("sigma_") && !x.is_positive() {
                            continue 'retry;
                        }
                        point.insert(*p, x);
                    }
                    Err(_) => continue 'retry,
                }
            }
        }
        for c in violated {
            if c.poly.eval(&point)?.is_zero() {
                continue 'retry;
            }
        }
        return Ok(point);
    }
    Err(ConditionError::InvalidAssignment("no admissible random point found".into()))
}

/// Necessity probes for bullet `order`: each unit is violated alone while the
/// other conditions of the bullet and all lower bullets hold. A probe detects
/// the violation when some residual through `order` is nonzero.
pub fn verify_necessity(
    spec: &SchemeSpec,
    full: &ExpansionResult,
    bullets: &[Bullet],
    order: usize,
    seeds: &[u64],
) -> Result<Vec<ProbeResult>, ConditionError> {
    let bullet = &bullets[order - 1];
    // lower bullets on a branch compatible with this one
    let lower_branch: Branch = branches(bullets, order)
        .into_iter()
        .next()
        .expect("at least one branch")[..order - 1]
        .to_vec();
    let lower: Conjunction = cumulative_conditions(&bullets[..order - 1], &lower_branch);
    let units = probe_units(bullet);
    let mut out = Vec::new();
    for (u, unit) in units.iter().enumerate() {
        let violated_names: Vec<&str> = unit.violated.iter().map(|c| c.name.as_str()).collect();
        // a condition repeated from a lower bullet is violated there too
        let mut held: Conjunction = lower
            .iter()
            .filter(|c| !violated_names.contains(&c.name.as_str()))
            .cloned()
            .collect();
        held.extend(bullet.common.iter().filter(|c| !violated_names.contains(&c.name.as_str())).cloned());
        // the arms of a disjunction keep their remaining equations
        for (_, arm) in &bullet.alternatives {
            if unit.violated.iter().any(|v| arm.iter().any(|c| c.name == v.name)) {
                held.extend(arm.iter().filter(|c| !violated_names.contains(&c.name.as_str())).cloned());
            } else if let Some(first) = bullet.alternatives.first() {
                // a common condition is violated: keep the disjunction satisfied by its first arm
                if std::ptr::eq(arm, &first.1) {
                    held.extend(arm.iter().cloned());
                }
            }
        }
        let bindings = solve_bindings(&held)?;
        for &seed in seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed_for(seed, order, u));
            let point = random_point(spec, &bindings, &unit.violated, &mut rng)?;
            let numeric = eval_result(&full.truncated(order), &point)?;
            out.push(ProbeResult {
                order,
                violated: unit.label.clone(),
                seed,
                detected_at: lowest_nonzero_order(&numeric, order),
                witness: point.iter().map(|(k, v)| (k.name(), v.to_string())).collect(),
            });
        }
    }
    Ok(out)
}

/// Control: every condition through `order` holds, so no residual appears.
pub fn control_probe(
    spec: &SchemeSpec,
    full: &ExpansionResult,
    bullets: &[Bullet],
    order: usize,
    branch: &Branch,
    seed: u64,
) -> Result<ProbeResult, ConditionError> {
    let bindings = solve_bindings(&cumulative_conditions(bullets, branch))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed_for(seed, order, usize::MAX >> 1));
    let point = random_point(spec, &bindings, &[], &mut rng)?;
    let numeric = eval_result(&full.truncated(order), &point)?;
    Ok(ProbeResult {
        order,
        violated: "nothing".into(),
        seed,
        detected_at: lowest_nonzero_order(&numeric, order),
        witness: point.iter().map(|(k, v)| (k.name(), v.to_string())).collect(),
    })
}

/// Sound speed and second-order momentum coefficients.
#[derive(Debug, Clone)]
pub struct PhysicalReadout {
    pub sound_speed_sq: RatFun,
    /// `-A_2[qx][qx][yy]`.
    pub shear: RatFun,
    /// `-A_2[qx][qx][xx]`.
    pub bulk: RatFun,
    /// `bulk / shear`.
    pub ratio: RatFun,
    /// `-A_2[qx][qx][xx] - (-A_2[qx][qx][yy])`, the part acting through `grad div`.
    pub compressive: RatFun,
}

#[derive(Debug, Error)]
pub enum ReadoutError {
    #[error("the first- or second-order tensors are not isotropic; the readout depends on direction")]
    DirectionDependent,
    #[error("tensors must include order 2 and moments rho, qx, qy")]
    Shape,
    #[error(transparent)]
    Sym(#[from] SymError),
}

pub fn physical_readout(
    full: &ExpansionResult,
    bindings: &HashMap<Symbol, RatFun>,
) -> Result<PhysicalReadout, ReadoutError> {
    if full.order() < 2 {
        return Err(ReadoutError::Shape);
    }
    let res = full.truncated(2).substitute(bindings)?;
    let (Some(rho), Some(qx)) = (res.conserved_index("rho"), res.conserved_index("qx")) else {
        return Err(ReadoutError::Shape);
    };
    if !is_isotropic(&res, 2) {
        return Err(ReadoutError::DirectionDependent);
    }
    let sound = res.a(1).get(qx, rho, &[0]).clone();
    let shear = -res.a(2).get(qx, qx, &[1, 1]);
    let bulk = -res.a(2).get(qx, qx, &[0, 0]);
    let ratio = if shear.is_zero() { RatFun::zero() } else { bulk.div_ref(&shear)? };
    let compressive = &bulk - &shear;
    Ok(PhysicalReadout {
        sound_speed_sq: sound,
        shear,
        bulk,
        ratio,
        compressive,
    })
}

/// Numeric values for the scheme parameters, by name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterAssignment {
    pub values: BTreeMap<String, String>,
}

impl ParameterAssignment {
    pub fn from_pairs(pairs: &[(&str, &str)]) -> Self {
        ParameterAssignment {
            values: pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }

    pub fn set(&mut self, name: &str, value: &str) {
        self.values.insert(name.to_string(), value.to_string());
    }

    pub fn from_json(text: &str) -> Result<Self, ConditionError> {
        serde_json::from_str(text).map_err(|e| ConditionError::Io(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("assignment serializes")
    }

    pub fn load(path: &Path) -> Result<Self, ConditionError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConditionError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Values may be expressions in other parameters, e.g.
    /// `"1/(12*sigma_xx)"`; they are resolved in order of dependency.
    pub fn bindings(&self, spec: &SchemeSpec) -> Result<HashMap<Symbol, RatFun>, ConditionError> {
        let mut parsed: Vec<(Symbol, RatFun)> = Vec::new();
        for (k, v) in &self.values {
            let sym = spec.parameter(k).ok_or_else(|| ConditionError::UnknownParameter(k.clone()))?;
            parsed.push((sym, parse_with(v, &|n| spec.resolve(n))?));
        }
        let mut map: HashMap<Symbol, RatFun> = parsed.iter().cloned().collect();
        for _ in 0..parsed.len() {
            let next: HashMap<Symbol, RatFun> = map
                .iter()
                .map(|(k, v)| Ok((*k, v.substitute(&map)?)))
                .collect::<Result<_, SymError>>()?;
            if next == map {
                break;
            }
            map = next;
        }
        for (k, v) in &map {
            if v.symbols().contains(k) {
                return Err(ConditionError::InvalidAssignment(format!("{} depends on itself", k.name())));
            }
            if k.name().starts_with("sigma_") {
                if let Some(c) = v.constant_value() {
                    if !c.is_positive() {
                        return Err(ConditionError::InvalidAssignment(format!("{} must be positive", k.name())));
                    }
                }
            }
        }
        Ok(map)
    }

    /// All parameters as exact rationals.
    pub fn numeric(&self, spec: &SchemeSpec) -> Result<HashMap<Symbol, BigRational>, ConditionError> {
        let b = self.bindings(spec)?;
        let mut out = HashMap::new();
        for p in &spec.parameters {
            let v = b.get(p).ok_or_else(|| ConditionError::InvalidAssignment(format!("{} is not assigned", p.name())))?;
            let c = v
                .constant_value()
                .ok_or_else(|| ConditionError::InvalidAssignment(format!("{} is not numeric", p.name())))?;
            out.insert(*p, c);
        }
        Ok(out)
    }
}

const D2Q9_E_NAMES: [&str; 18] = [
    "E_eps_rho", "E_eps_qx", "E_eps_qy", "E_eps2_rho", "E_eps2_qx", "E_eps2_qy", "E_phix_rho", "E_phix_qx",
    "E_phix_qy", "E_phiy_rho", "E_phiy_qx", "E_phiy_qy", "E_xx_rho", "E_xx_qx", "E_xx_qy", "E_xy_rho", "E_xy_qx",
    "E_xy_qy",
];

fn d2q9_with(sigma_xx: &str, sigma_xy: &str, sigma_phi: &str) -> ParameterAssignment {
    let mut a = ParameterAssignment::default();
    for n in D2Q9_E_NAMES {
        a.set(n, "0");
    }
    a.set("E_eps_rho", "-2");
    a.set("E_eps2_rho", "1");
    a.set("E_phix_qx", "-1");
    a.set("E_phiy_qy", "-1");
    a.set("sigma_xx", sigma_xx);
    a.set("sigma_xy", sigma_xy);
    a.set("sigma_eps", "sigma_xx");
    a.set("sigma_eps2", "sigma_xx");
    a.set("sigma_phix", sigma_phi);
    a.set("sigma_phiy", sigma_phi);
    a
}

/// Classical D2Q9 equilibrium with `sigma_xx = sigma_xy = 1/4`,
/// `sigma_phi = 1/(12 sigma_xx)` and `sigma_eps = sigma_eps2 = sigma_xx`.
pub fn classical_assignment() -> ParameterAssignment {
    d2q9_with("1/4", "sigma_xx", "1/(12*sigma_xx)")
}

/// The classical equilibrium with every order-4 condition: `sigma_phi =
/// 1/(6 sigma_xx)`.
pub fn order4_assignment() -> ParameterAssignment {
    d2q9_with("1/4", "sigma_xx", "1/(6*sigma_xx)")
}

/// `order4_assignment` with `sigma_xy = sigma_xx / 2`.
pub fn order3_violating_assignment() -> ParameterAssignment {
    d2q9_with("1/4", "sigma_xx/2", "1/(6*sigma_xx)")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderReport {
    pub order: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub sufficiency: Vec<SufficiencyResult>,
    pub probes: Vec<ProbeResult>,
    pub control: Vec<ProbeResult>,
}

impl OrderReport {
    pub fn sufficient(&self) -> bool {
        self.sufficiency.iter().all(|s| s.sufficient)
    }

    pub fn necessary(&self) -> bool {
        self.probes.iter().all(ProbeResult::detected) && self.control.iter().all(|c| !c.detected())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropositionReport {
    pub seeds: Vec<u64>,
    pub orders: Vec<OrderReport>,
    /// One readout per branch of the highest bullet checked.
    pub readouts: Vec<ReadoutDump>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReadoutDump {
    pub branch: String,
    /// `None` when the second-order tensors stay direction dependent.
    pub sound_speed_sq: Option<String>,
    pub shear: Option<String>,
    pub bulk: Option<String>,
    pub compressive: Option<String>,
    pub bulk_over_shear: Option<String>,
    pub compressive_over_shear: Option<String>,
}

impl PropositionReport {
    pub fn all_sufficient(&self) -> bool {
        self.orders.iter().all(OrderReport::sufficient)
    }

    pub fn all_necessary(&self) -> bool {
        self.orders.iter().all(OrderReport::necessary)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for o in &self.orders {
            let verdict = if o.sufficient() && o.necessary() { "reproduced" } else { "NOT reproduced" };
            out.push_str(&format!("bullet {}: {verdict}\n", o.order));
            if let Some(n) = &o.note {
                out.push_str(&format!("  note: {n} (not checked)\n"));
            }
            for s in &o.sufficiency {
                out.push_str(&format!(
                    "  sufficiency [{}]: {}\n",
                    s.branch,
                    if s.sufficient { "ok" } else { "FAILED" }
                ));
                if let Some(off) = &s.offending {
                    out.push_str(&format!("    residual {off}\n"));
                }
            }
            let mut by_unit: BTreeMap<&str, Vec<&ProbeResult>> = BTreeMap::new();
            for p in &o.probes {
                by_unit.entry(p.violated.as_str()).or_default().push(p);
            }
            for (unit, ps) in by_unit {
                let hits = ps.iter().filter(|p| p.detected()).count();
                out.push_str(&format!("  necessity [{unit}]: {hits}/{} seeds detect\n", ps.len()));
            }
            for c in &o.control {
                out.push_str(&format!(
                    "  control (seed {}): {}\n",
                    c.seed,
                    if c.detected() { "spurious residual" } else { "clean" }
                ));
            }
        }
        for r in &self.readouts {
            match (&r.sound_speed_sq, &r.shear, &r.bulk, &r.bulk_over_shear, &r.compressive_over_shear) {
                (Some(c2), Some(shear), Some(bulk), Some(b), Some(c)) => out.push_str(&format!(
                    "readout [{}]: c_s^2 = {c2}, shear = {shear}, bulk = {bulk}, bulk/shear = {b}, compressive/shear = {c}\n",
                    r.branch
                )),
                _ => out.push_str(&format!("readout [{}]: direction dependent\n", r.branch)),
            }
        }
        out
    }
}

fn readout_dump(full: &ExpansionResult, bindings: &HashMap<Symbol, RatFun>, branch: String) -> ReadoutDump {
    let r = physical_readout(full, bindings).ok();
    let show = |f: fn(&PhysicalReadout) -> Option<RatFun>| r.as_ref().and_then(f).map(|v| v.to_canonical_string());
    ReadoutDump {
        branch,
        sound_speed_sq: show(|r| Some(r.sound_speed_sq.clone())),
        shear: show(|r| Some(r.shear.clone())),
        bulk: show(|r| Some(r.bulk.clone())),
        compressive: show(|r| Some(r.compressive.clone())),
        bulk_over_shear: show(|r| Some(r.ratio.clone())),
        compressive_over_shear: show(|r| r.compressive.div_ref(&r.shear).ok()),
    }
}

/// Sufficiency on every branch, necessity probes and a control probe per
/// bullet through `order`.
pub fn proposition_report(
    spec: &SchemeSpec,
    full: &ExpansionResult,
    order: usize,
    seeds: &[u64],
) -> Result<PropositionReport, ConditionError> {
    let bullets = proposition_bullets(spec);
    let mut orders = Vec::new();
    for k in 1..=order {
        let start = std::time::Instant::now();
        let mut sufficiency = Vec::new();
        let mut control = Vec::new();
        for br in branches(&bullets, k) {
            sufficiency.push(verify_sufficiency(full, &bullets, k, &br)?);
            control.push(control_probe(spec, full, &bullets, k, &br, seeds[0])?);
        }
        let probes = verify_necessity(spec, full, &bullets, k, seeds)?;
        log::info!("checked bullet {k} in {:.2?}", start.elapsed());
        orders.push(OrderReport {
            order: k,
            note: bullets[k - 1].note.clone(),
            sufficiency,
            probes,
            control,
        });
    }
    let mut readouts = Vec::new();
    if order >= 2 {
        for br in branches(&bullets, order) {
            let bindings = solve_bindings(&cumulative_conditions(&bullets, &br))?;
            readouts.push(readout_dump(full, &bindings, branch_label(&bullets, &br)));
        }
    }
    Ok(PropositionReport {
        seeds: seeds.to_vec(),
        orders,
        readouts,
    })
}

/// Extracted versus stated conditions at one order, for one branch of the
/// lower bullets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub order: usize,
    pub lower_branch: String,
    pub extracted: usize,
    /// Solution components of the extracted system with positive relaxation
    /// parameters.
    pub components: usize,
    /// Every extracted condition vanishes on every stated arm.
    pub stated_implies_extracted: bool,
    /// Every stated condition vanishes on every extracted component.
    pub extracted_implies_stated: bool,
    pub details: Vec<String>,
}

impl EquivalenceReport {
    pub fn equivalent(&self) -> bool {
        self.stated_implies_extracted && self.extracted_implies_stated
    }
}

fn preferred_symbols(bullets: &[Bullet]) -> Vec<Symbol> {
    let mut out: Vec<Symbol> = Vec::new();
    for b in bullets {
        for c in b.common.iter().chain(b.alternatives.iter().flat_map(|(_, c)| c.iter())) {
            if !out.contains(&c.solve_for) {
                out.push(c.solve_for);
            }
        }
    }
    out
}

/// Points on `bindings` (composed over `lower`) with positive relaxation
/// parameters; fewer than `count` if the component has none.
fn sample_points(
    spec: &SchemeSpec,
    lower: &HashMap<Symbol, RatFun>,
    bindings: &HashMap<Symbol, RatFun>,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<HashMap<Symbol, BigRational>>, ConditionError> {
    let mut full: HashMap<Symbol, RatFun> = HashMap::new();
    for (k, v) in lower {
        full.insert(*k, v.substitute(bindings)?);
    }
    full.extend(bindings.iter().map(|(k, v)| (*k, v.clone())));
    let mut out = Vec::new();
    for _ in 0..count {
        match random_point(spec, &full, &[], rng) {
            Ok(p) => out.push(p),
            Err(ConditionError::InvalidAssignment(_)) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Compares `extract_conditions` at `order`, chained on each branch of the
/// lower bullets, with bullet `order`: each side must vanish on the
/// solutions of the other, tested at `points` random rational points.
pub fn extraction_equivalence(
    spec: &SchemeSpec,
    full: &ExpansionResult,
    order: usize,
    points: usize,
    seed: u64,
) -> Result<Vec<EquivalenceReport>, ConditionError> {
    let bullets = proposition_bullets(spec);
    let stated: Vec<Poly> = proposition_condition_sets(spec)[&order].polys().cloned().collect();
    let preferred = preferred_symbols(&bullets);
    let mut reports = Vec::new();
    for (bi, lower_branch) in branches(&bullets, order - 1).into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed_for(seed, order, bi));
        let lower_conds = cumulative_conditions(&bullets, &lower_branch);
        let lower = solve_bindings(&lower_conds)?;
        let extracted: Vec<Poly> = extract_conditions_chained(full, order, &lower)?.polys().cloned().collect();
        let mut details = Vec::new();

        let mut forward = true;
        for arm in bullets[order - 1].arms() {
            let mut conds = lower_conds.clone();
            conds.extend(bullets[order - 1].conditions(arm));
            let Ok(golden) = solve_bindings(&conds) else {
                details.push(format!("arm [{}] is inconsistent with the lower branch", bullets[order - 1].arm_label(arm)));
                continue;
            };
            for p in sample_points(spec, &HashMap::new(), &golden, points, &mut rng)? {
                if !solve::all_vanish(&extracted, &p)? {
                    forward = false;
                    details.push(format!(
                        "an extracted condition is nonzero on arm [{}]",
                        bullets[order - 1].arm_label(arm)
                    ));
                    break;
                }
            }
        }

        let components = solve_system(&extracted, &preferred)?;
        let mut realizable = 0;
        let mut backward = true;
        for c in &components {
            let pts = sample_points(spec, &lower, c, points, &mut rng)?;
            if pts.is_empty() {
                continue;
            }
            realizable += 1;
            for p in &pts {
                if !solve::all_vanish(&stated, p)? {
                    backward = false;
                    let mut desc: Vec<String> =
                        c.iter().map(|(k, v)| format!("{} = {}", k.name(), v.to_canonical_string())).collect();
                    desc.sort();
                    details.push(format!("stated conditions fail on extracted component {{{}}}", desc.join(", ")));
                    break;
                }
            }
        }
        reports.push(EquivalenceReport {
            order,
            lower_branch: branch_label(&bullets, &lower_branch),
            extracted: extracted.len(),
            components: realizable,
            stated_implies_extracted: forward,
            extracted_implies_stated: backward,
            details,
        });
    }
    Ok(reports)
}

/// Extracted conditions at one order given one branch of the lower bullets,
/// with the realizable solution components.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractedConditions {
    pub order: usize,
    pub lower_branch: String,
    pub conditions: ConditionSetDump,
    /// Each component as parameter name to value.
    pub components: Vec<BTreeMap<String, String>>,
}

/// `extract_conditions` at `order` chained on each branch of the stated lower
/// bullets, solved into components with positive relaxation parameters.
pub fn extracted_conditions(
    spec: &SchemeSpec,
    full: &ExpansionResult,
    order: usize,
    seed: u64,
) -> Result<Vec<ExtractedConditions>, ConditionError> {
    let bullets = proposition_bullets(spec);
    let preferred = preferred_symbols(&bullets);
    let names = naming_table(spec);
    let mut out = Vec::new();
    for (bi, lower_branch) in branches(&bullets, order - 1).into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed_for(seed, order, bi));
        let lower = solve_bindings(&cumulative_conditions(&bullets, &lower_branch))?;
        let mut set = extract_conditions_chained(full, order, &lower)?;
        let polys: Vec<Poly> = set.polys().cloned().collect();
        set.apply_names(&names);
        let mut components = Vec::new();
        for c in solve_system(&polys, &preferred)? {
            if sample_points(spec, &lower, &c, 1, &mut rng)?.is_empty() {
                continue;
            }
            components.push(c.iter().map(|(k, v)| (k.name(), v.to_canonical_string())).collect());
        }
        out.push(ExtractedConditions {
            order,
            lower_branch: branch_label(&bullets, &lower_branch),
            conditions: set.to_dump(),
            components,
        });
    }
    Ok(out)
}
