//! The violent-movie example: a four-variable BN with structural zeros,
//! three partial experiments and two controls.

use serde_json::json;

use super::{identify_effect, EffectSpec, IdentificationResult, IdentifyError, IdentifyOptions, ManifestSpec, Verdict};
use crate::calculus::ManipulationSpec;
use crate::models::{apply_constraints, parse_constraint_lines, parse_model_file, CompiledModel};

/// Bundled input files, by name.
pub struct MovieData {
    pub model: &'static str,
    pub table: &'static str,
    pub box_constraints: &'static str,
    pub experiments: [&'static str; 3],
    pub ban: &'static str,
    pub low_testosterone: &'static str,
    pub effect: &'static str,
    pub effect_prime: &'static str,
}

pub const MOVIE_DATA: MovieData = MovieData {
    model: include_str!("../../data/movie.bn"),
    table: include_str!("../../data/movietable.con"),
    box_constraints: include_str!("../../data/movieineq.con"),
    experiments: [
        include_str!("../../data/exp1.man"),
        include_str!("../../data/exp2.man"),
        include_str!("../../data/exp3.man"),
    ],
    ban: include_str!("../../data/ban.do"),
    low_testosterone: include_str!("../../data/testosterone_low.do"),
    effect: include_str!("../../data/e.eff"),
    effect_prime: include_str!("../../data/e_prime.eff"),
};

/// The movie BN with the no-movie pins and the monotone table zeros.
pub fn movie_model() -> Result<CompiledModel, IdentifyError> {
    let m = parse_model_file(MOVIE_DATA.model)?.compile()?;
    Ok(apply_constraints(m, &parse_constraint_lines(MOVIE_DATA.table)?)?)
}

pub fn movie_manifests(model: &CompiledModel) -> Result<[ManifestSpec; 3], IdentifyError> {
    let [a, b, c] = MOVIE_DATA.experiments.map(|t| ManifestSpec::parse(model, t));
    Ok([a?, b?, c?])
}

/// `e` under the ban and `e′` under fixed low testosterone.
pub fn movie_effects(model: &CompiledModel) -> Result<(EffectSpec, EffectSpec), IdentifyError> {
    let ban = ManipulationSpec::parse_file(model, MOVIE_DATA.ban)?;
    let low = ManipulationSpec::parse_file(model, MOVIE_DATA.low_testosterone)?;
    Ok((
        EffectSpec::parse(model, &ban, MOVIE_DATA.effect)?,
        EffectSpec::parse(model, &low, MOVIE_DATA.effect_prime)?,
    ))
}

#[derive(Debug, Clone)]
pub struct MovieCase {
    /// Experiment numbers, 1-based.
    pub experiments: Vec<usize>,
    pub effect: String,
    pub result: IdentificationResult,
    pub expected_identifiable: bool,
}

impl MovieCase {
    /// Identifiable where expected, and an exact witness everywhere else.
    pub fn agrees(&self) -> bool {
        match &self.result.verdict {
            Verdict::Identifiable { .. } => self.expected_identifiable,
            Verdict::NonIdentifiable(_) => !self.expected_identifiable,
            Verdict::Undetermined(_) => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MovieReport {
    pub model: CompiledModel,
    pub cases: Vec<MovieCase>,
}

impl MovieReport {
    pub fn claims_hold(&self) -> bool {
        self.cases.iter().all(MovieCase::agrees)
    }

    pub fn case(&self, effect: &str, experiments: &[usize]) -> Option<&MovieCase> {
        self.cases.iter().find(|c| c.effect == effect && c.experiments == experiments)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let cases: Vec<_> = self
            .cases
            .iter()
            .map(|c| {
                let mut v = c.result.to_json(&self.model);
                v["experiments"] = json!(c.experiments);
                v["expected"] = json!(if c.expected_identifiable { "identifiable" } else { "non-identifiable" });
                v["agrees"] = json!(c.agrees());
                v
            })
            .collect();
        json!({
            "model": self.model.name,
            "atoms": self.model.live_atoms().count(),
            "claims_hold": self.claims_hold(),
            "cases": cases,
        })
    }
}

/// Identifies `e` and `e′` from each of the seven nonempty combinations
/// of the three experiments.
pub fn reproduce_movie_example(opts: &IdentifyOptions) -> Result<MovieReport, IdentifyError> {
    let model = movie_model()?;
    let exps = movie_manifests(&model)?;
    let (e, e_prime) = movie_effects(&model)?;
    let mut cases = Vec::new();
    for (effect, needed) in [(&e, [1, 2]), (&e_prime, [0, 1])] {
        for mask in 1u8..8 {
            let chosen: Vec<usize> = (0..3).filter(|i| mask & (1 << i) != 0).collect();
            let parts: Vec<ManifestSpec> = chosen.iter().map(|&i| exps[i].clone()).collect();
            let manifest = ManifestSpec::union(&parts)?;
            let result = identify_effect(&model, &manifest, effect, opts)?;
            cases.push(MovieCase {
                experiments: chosen.iter().map(|i| i + 1).collect(),
                effect: effect.name.clone(),
                result,
                expected_identifiable: needed.iter().all(|n| chosen.contains(n)),
            });
        }
    }
    Ok(MovieReport { model, cases })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_files_parse() {
        let m = movie_model().unwrap();
        assert_eq!(m.atoms.len(), 36);
        assert_eq!(m.live_atoms().count(), 18);
        let [a, b, c] = movie_manifests(&m).unwrap();
        assert_eq!((a.observables.len(), b.observables.len(), c.observables.len()), (9, 7, 2));
        let (e, ep) = movie_effects(&m).unwrap();
        let want = m
            .parse_expr("pi(X1=1)*pi(X4=1|X2=2,X3=1) + pi(X1=2)*pi(X4=1|X2=2,X3=2) + pi(X1=3)*pi(X4=1|X2=2,X3=3)")
            .unwrap();
        assert_eq!(e.poly, want);
        assert_eq!(ep.poly, m.parse_expr("pi(X2=1)*pi(X4=1|X2=1,X3=1)").unwrap());
    }
}
