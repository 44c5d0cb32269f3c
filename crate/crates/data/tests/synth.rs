use msef_core::stats::{ols_fit, poly_fit_r2};
use msef_data::likert::normalize_ratings;
use msef_data::phash::{dedup, DedupConfig};
use msef_data::records::FEATURES;
use msef_data::synth::effects::CONNECTIVITY;
use msef_data::synth::render::LAYOUT;
use msef_data::synth::*;
use msef_data::tiers::quintile_bin;
use proptest::prelude::*;
use std::collections::BTreeMap;

fn table1_design(corpus: &Corpus) -> (Vec<(String, Vec<f64>)>, Vec<f64>) {
    let cols = TABLE1_BETAS
        .iter()
        .map(|(k, _)| (k.to_string(), corpus.images.iter().map(|i| i.feature(k)).collect()))
        .collect();
    let y = corpus.images.iter().map(|i| i.satisfaction.unwrap()).collect();
    (cols, y)
}

#[test]
fn noiseless_corpus_recovers_betas_exactly() {
    let effects = EffectModel { noise_sd: 0.0, quad_gamma: 0.0, openness_beta_commercial: 0.0, ..EffectModel::default() };
    let cfg = GenConfig { communities: 10, images_per_community: 30, feature_sd: 0.5, effects, seed: 3, ..GenConfig::default() };
    let corpus = gen_corpus(&cfg).unwrap();
    assert!(corpus.images.iter().all(|i| (1.0..7.0).contains(&i.satisfaction.unwrap()) && i.satisfaction.unwrap() > 1.0));
    let (cols, y) = table1_design(&corpus);
    let fit = ols_fit(&cols, &y, true).unwrap();
    for (k, beta) in TABLE1_BETAS {
        assert!((fit.get(k).unwrap().beta - beta).abs() < 1e-8, "{k}");
    }
    let offset: f64 = TABLE1_BETAS.iter().map(|(_, b)| b * 4.0).sum();
    assert!((fit.get("const").unwrap().beta - (4.0 - offset)).abs() < 1e-8);
}

#[test]
fn noisy_corpus_recovers_betas_within_tolerance() {
    let cfg = GenConfig { communities: 50, images_per_community: 200, respondents: 20, seed: 7, ..GenConfig::default() };
    let corpus = gen_corpus(&cfg).unwrap();
    let (cols, y) = table1_design(&corpus);
    let fit = ols_fit(&cols, &y, true).unwrap();
    for (k, beta) in TABLE1_BETAS {
        let c = fit.get(k).unwrap();
        assert!((c.beta - beta).abs() < 0.05, "{k}: {} vs {beta}", c.beta);
        assert!(c.p < 1e-3);
    }
}

#[test]
fn calibrated_quadratic_corpus_shows_inverted_u() {
    let base = GenConfig {
        communities: 20,
        images_per_community: 100,
        connectivity: ConnectivityDesign::Uniform,
        feature_sd: 0.3,
        seed: 5,
        ..GenConfig::default()
    };
    let cal = calibrate_noise(&base, 0.49, 20_000).unwrap();
    let mut cfg = base.clone();
    cfg.effects.noise_sd = cal.noise_sd;
    let corpus = gen_corpus(&cfg).unwrap();
    let x: Vec<f64> = corpus.images.iter().map(|i| i.feature("connectivity")).collect();
    let y: Vec<f64> = corpus.images.iter().map(|i| i.satisfaction.unwrap()).collect();
    let lin = poly_fit_r2(&x, &y, 1).unwrap();
    let quad = poly_fit_r2(&x, &y, 2).unwrap();
    assert!((quad.vertex().unwrap() - 5.0).abs() < 0.5, "vertex {:?}", quad.vertex());
    assert!(quad.r2 - lin.r2 >= 0.1, "{} vs {}", quad.r2, lin.r2);
    assert!((quad.r2 - 0.49).abs() < 0.1, "{}", quad.r2);
}

#[test]
fn unbiased_respondents_track_planted_satisfaction() {
    let cfg = GenConfig {
        communities: 5,
        images_per_community: 4,
        respondents: 3,
        raters_per_image: 3,
        bias_max: 0.0,
        spread_lo: 1.0,
        spread_hi: 1.0,
        skip_prob: 0.0,
        rating_noise_sd: 0.0,
        seed: 2,
        ..GenConfig::default()
    };
    let corpus = gen_corpus(&cfg).unwrap();
    for image in &corpus.images {
        let truth = to_likert(image.satisfaction.unwrap());
        let scores: Vec<f64> = corpus
            .ratings
            .iter()
            .filter(|r| r.image_id == image.image_id && r.dimension == "overall_satisfaction")
            .map(|r| f64::from(r.score.unwrap()))
            .collect();
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        assert!((mean - truth).abs() <= 0.5, "{mean} vs {truth}");
    }
}

#[test]
fn normalization_removes_respondent_bias() {
    let cfg = GenConfig {
        communities: 10,
        images_per_community: 20,
        respondents: 20,
        raters_per_image: 4,
        rating_noise_sd: 0.3,
        seed: 9,
        ..GenConfig::default()
    };
    let corpus = gen_corpus(&cfg).unwrap();
    let truth: BTreeMap<&str, BTreeMap<String, f64>> =
        corpus.images.iter().map(|i| (i.image_id.as_str(), truth_scores(i))).collect();
    let (normalized, _) = normalize_ratings(&corpus.ratings);
    let mut raw_bias: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut norm_bias: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in &normalized {
        let t = truth[r.image_id.as_str()][&r.dimension];
        raw_bias.entry(r.respondent_id.as_str()).or_default().push(r.raw - t);
        norm_bias.entry(r.respondent_id.as_str()).or_default().push(r.normalized - t);
    }
    let mab = |m: &BTreeMap<&str, Vec<f64>>| {
        m.values().map(|v| (v.iter().sum::<f64>() / v.len() as f64).abs()).sum::<f64>() / m.len() as f64
    };
    let (raw, norm) = (mab(&raw_bias), mab(&norm_bias));
    assert!(norm <= 0.5 * raw, "raw {raw} normalized {norm}");
}

#[test]
fn tiers_are_recovered_by_quintiles() {
    let cfg = GenConfig { communities: 25, images_per_community: 1, seed: 4, ..GenConfig::default() };
    let corpus = gen_corpus(&cfg).unwrap();
    let items: Vec<(String, f64)> =
        corpus.communities.iter().map(|c| (c.community_id.clone(), c.price_per_sqm)).collect();
    let tiering = quintile_bin(&items).unwrap();
    let planted: Vec<u8> = corpus.communities.iter().map(|c| corpus.images.iter().find(|i| i.community_id == c.community_id).unwrap().tier).collect();
    assert_eq!(tiering.tiers, planted);
}

#[test]
fn generated_corpus_has_no_duplicates() {
    let cfg = GenConfig { communities: 10, images_per_community: 50, seed: 1, ..GenConfig::default() };
    let corpus = gen_corpus(&cfg).unwrap();
    let (kept, log) = dedup(&corpus.images, DedupConfig::default()).unwrap();
    assert!(log.is_empty(), "{:?}", &log[..log.len().min(3)]);
    assert_eq!(kept.len(), corpus.images.len());
}

#[test]
fn files_are_identical_across_runs_and_thread_counts() {
    let cfg = GenConfig { communities: 6, images_per_community: 5, seed: 21, ..GenConfig::default() };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ha = write_corpus(a.path(), &gen_corpus(&cfg).unwrap()).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let hb = pool.install(|| write_corpus(b.path(), &gen_corpus(&cfg).unwrap())).unwrap();
    assert_eq!(ha, hb);
    for name in ["communities.csv", "images.jsonl", "ratings.csv", "triplets.jsonl", "manifest.json"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let m = read_manifest(&a.path().join("manifest.json")).unwrap();
    assert_eq!(m.files.len(), 4);
    assert_eq!(m.quad_vertex, 5.0);
}

#[test]
fn connectivity_index_matches_feature_list() {
    assert_eq!(FEATURES[CONNECTIVITY], "connectivity");
}

proptest! {
    #[test]
    fn every_band_is_monotone(slot in 0usize..10, lo in 1.0f64..6.5, step in 0.2f64..3.0, base in 1.0f64..7.0, seed in any::<u64>()) {
        let hi = (lo + step).min(7.0);
        prop_assume!(hi - lo >= 0.2);
        let (name, index) = LAYOUT[slot];
        let mut spec = SceneSpec::uniform(base, seed);
        let mut stat = |v: f64| {
            if index == 9 { spec.openness = v } else { spec.features[index] = v }
            band_mean(&render_scene(&spec).unwrap(), name).unwrap()
        };
        let (a, b) = (stat(lo), stat(hi));
        prop_assert!(b > a, "{name}: {a} !< {b}");
    }
}
