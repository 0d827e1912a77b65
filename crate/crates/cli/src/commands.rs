use std::collections::BTreeMap;

use adiv_core::analysis::{
    ablate_heads, ablate_layer_group, ablation_suite, answer_token_divergence, class_means, classify_words,
    delta_divergence_map, example_percentile, head_overlap, rank_on_full_data, region_distribution, survival_diff_ci, tail_composition,
    threshold_grid, word_aggregate, AblationRow, BootstrapConfig, HeadIndex, HeadSelection, LayerGroup, WordPooling,
};
use adiv_core::cv::{cross_validate, Dataset, MetricReport};
use adiv_core::divergence::{compute_divergence_tensor, Pooling, Scope};
use adiv_core::dump::{generate_synthetic, open_dump, read_features, write_dump, write_features, DumpMetadata, ReadOptions, SyntheticSpec, WordClass};
use adiv_core::pipeline::extract_features;
use adiv_core::probe::{train, ProbeModel};
use adiv_core::sanity::{run_sanity_suite, SanityConfig};
use adiv_core::{Error, FeatureRecord, Result};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{f4, table, OutputDir};

const EXTRACT_BATCH: usize = 256;

pub fn synth(cfg: &RunConfig) -> Result<()> {
    let base = SyntheticSpec::default();
    let spec = SyntheticSpec {
        n_examples: cfg.n_examples.unwrap_or(base.n_examples),
        num_layers: cfg.layers.unwrap_or(base.num_layers),
        num_heads: cfg.heads.unwrap_or(base.num_heads),
        prompt_len: cfg.prompt_len.unwrap_or(base.prompt_len),
        gen_len: cfg.gen_len.unwrap_or(base.gen_len),
        alpha_correct: cfg.alpha_correct.unwrap_or(base.alpha_correct),
        alpha_incorrect: cfg.alpha_incorrect.unwrap_or(base.alpha_incorrect),
        base_rate: cfg.base_rate.unwrap_or(base.base_rate),
        seed: cfg.seed.unwrap_or(base.seed),
        with_prefill: !cfg.no_prefill.unwrap_or(false),
    };
    let out = OutputDir::create(cfg.out_dir()?)?;
    let dump = generate_synthetic(&spec)?;
    write_dump(&dump, out.path("dump.adv"))?;
    out.json("synth.json", &spec)?;
    log::info!("generated {} synthetic examples", dump.len());
    Ok(())
}

/// Streams the dump and pools one record per example, in file order.
fn extract(cfg: &RunConfig, scope: Scope, pooling: Pooling) -> Result<(Vec<DumpMetadata>, Vec<FeatureRecord>)> {
    let div = cfg.divergence()?;
    let mut reader = open_dump(cfg.dump_path()?, ReadOptions::default())?;
    let mut metas = Vec::new();
    let mut records = Vec::new();
    loop {
        let batch: Vec<_> = reader.by_ref().take(EXTRACT_BATCH).collect::<Result<_>>()?;
        if batch.is_empty() {
            break;
        }
        records.extend(extract_features(&batch, scope, pooling, &div)?);
        metas.extend(batch.into_iter().map(|e| e.meta));
    }
    Ok((metas, records))
}

pub fn extract_cmd(cfg: &RunConfig) -> Result<()> {
    let (_, records) = extract(cfg, cfg.scope()?, cfg.pooling()?)?;
    let out = OutputDir::create(cfg.out_dir()?)?;
    write_features(&records, out.path("features.jsonl"))?;
    log::info!("extracted {} feature records", records.len());
    Ok(())
}

fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    Dataset::from_records(&read_features(cfg.features_path()?)?)
}

fn write_report(out: &OutputDir, report: &MetricReport) -> Result<()> {
    out.json("report.json", report)?;
    out.text("report.txt", &report.to_text())?;
    out.text("cells.csv", &report.cells_csv())
}

pub fn train_cmd(cfg: &RunConfig) -> Result<()> {
    let data = load_dataset(cfg)?;
    let cv = cfg.cv()?;
    let report = cross_validate(&data, &cv)?;
    let model = train(data.x.view(), &data.y, &cv.probe)?;
    let out = OutputDir::create(cfg.out_dir()?)?;
    write_report(&out, &report)?;
    out.text("model.json", &(model.to_json()? + "\n"))?;
    log::info!("cv auroc {:.4} over {} cells", report.auroc.mean, report.cells.len());
    Ok(())
}

fn rows_output(out: &OutputDir, stem: &str, rows: &[AblationRow]) -> Result<()> {
    out.json(&format!("{stem}.json"), rows)?;
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.name.clone(), f4(r.report.auroc.mean), f4(r.report.auroc.std), f4(r.report.accuracy.mean), f4(r.report.ece.mean)])
        .collect();
    out.text(&format!("{stem}.txt"), &table(&["setting", "auroc", "std", "accuracy", "ece"], &body))?;
    let mut csv = String::from("setting,auroc,auroc_std,accuracy,accuracy_std,ece,ece_std\n");
    for r in rows {
        let m = &r.report;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.name, m.auroc.mean, m.auroc.std, m.accuracy.mean, m.accuracy.std, m.ece.mean, m.ece.std
        ));
    }
    out.text(&format!("{stem}.csv"), &csv)
}

pub fn ablate(cfg: &RunConfig) -> Result<()> {
    let cv = cfg.cv()?;
    let out_dir = cfg.out_dir()?;
    match cfg.mode()? {
        "heads-topk" => {
            let data = load_dataset(cfg)?;
            let k = *RunConfig::require(&cfg.k, "k")?;
            let heads = *RunConfig::require(&cfg.heads, "heads")?;
            let ranked = rank_on_full_data(&data, heads, &cv)?;
            let report = ablate_heads(&data, &ranked, k, heads, &cv)?;
            let out = OutputDir::create(out_dir)?;
            write_report(&out, &report)?;
            let mut csv = String::from("rank,layer,head,weight\n");
            for (i, r) in ranked.iter().enumerate() {
                csv.push_str(&format!("{},{},{},{}\n", i + 1, r.head.layer, r.head.head, r.weight));
            }
            out.text("ranked_heads.csv", &csv)
        }
        mode @ ("layers-early" | "layers-middle" | "layers-late") => {
            let data = load_dataset(cfg)?;
            let group: LayerGroup = mode.trim_start_matches("layers-").parse()?;
            let (layers, heads) = cfg.grid()?;
            let report = ablate_layer_group(&data, group, layers, heads, &cv)?;
            write_report(&OutputDir::create(out_dir)?, &report)
        }
        "max-pooling" => {
            let (_, records) = extract(cfg, cfg.scope()?, Pooling::Max)?;
            let report = cross_validate(&Dataset::from_records(&records)?, &cv)?;
            write_report(&OutputDir::create(out_dir)?, &report)
        }
        "scope" => {
            let pooling = cfg.pooling()?;
            let mut rows = Vec::new();
            for (scope, name) in [(Scope::Prompt, "prompt tokens"), (Scope::Answer, "answer tokens"), (Scope::Full, "prompt and answer tokens")] {
                let (_, records) = extract(cfg, scope, pooling)?;
                rows.push(AblationRow {
                    name: name.into(),
                    report: cross_validate(&Dataset::from_records(&records)?, &cv)?,
                });
            }
            rows_output(&OutputDir::create(out_dir)?, "scopes", &rows)
        }
        "suite" => {
            let data = load_dataset(cfg)?;
            let (layers, heads) = cfg.grid()?;
            let ks = match cfg.k {
                Some(k) => vec![k],
                None => vec![5, 10, 20, 50],
            };
            let rows = ablation_suite(&data, layers, heads, &ks, &cv)?;
            rows_output(&OutputDir::create(out_dir)?, "ablation", &rows)
        }
        other => Err(Error::Config(format!(
            "unknown ablate mode `{other}` (heads-topk, layers-early, layers-middle, layers-late, max-pooling, scope, suite)"
        ))),
    }
}

pub fn analyze(cfg: &RunConfig) -> Result<()> {
    match cfg.mode()? {
        "delta-map" => delta_map(cfg),
        "ecdf" => ecdf(cfg),
        "words" => words(cfg),
        "heads" | "overlap" => heads(cfg),
        other => Err(Error::Config(format!("unknown analyze mode `{other}` (delta-map, ecdf, words, heads)"))),
    }
}

fn delta_map(cfg: &RunConfig) -> Result<()> {
    let data = load_dataset(cfg)?;
    let (layers, heads) = cfg.grid()?;
    let map = delta_divergence_map(&data, layers, heads)?;
    let out = OutputDir::create(cfg.out_dir()?)?;
    out.json("delta_map.json", &map)?;
    out.text("delta_map.csv", &map.to_csv())?;
    let header: Vec<String> = std::iter::once("layer".to_string()).chain((0..heads).map(|h| format!("h{h}"))).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let body: Vec<Vec<String>> = (0..layers)
        .map(|l| std::iter::once(l.to_string()).chain((0..heads).map(|h| format!("{:+.4}", map.get(l, h)))).collect())
        .collect();
    out.text("delta_map.txt", &table(&header, &body))
}

#[derive(Serialize)]
struct EcdfReport {
    percentile: f64,
    n_correct: usize,
    n_incorrect: usize,
    curve: adiv_core::analysis::SurvivalCurve,
}

fn labelled(meta: &DumpMetadata) -> Result<u8> {
    meta.label
        .ok_or_else(|| Error::Metadata(format!("example {} has no label", meta.example_id)))
}

fn ecdf(cfg: &RunConfig) -> Result<()> {
    let p = cfg.percentile.unwrap_or(99.0);
    let div = cfg.divergence()?;
    let (mut correct, mut incorrect) = (Vec::new(), Vec::new());
    for ex in open_dump(cfg.dump_path()?, ReadOptions::default())? {
        let ex = ex?;
        let tensor = compute_divergence_tensor(&ex, &div)?;
        let v = example_percentile(&answer_token_divergence(&tensor), p)?;
        if labelled(&ex.meta)? == 1 {
            correct.push(v);
        } else {
            incorrect.push(v);
        }
    }
    let grid = threshold_grid(&[&correct, &incorrect], cfg.points.unwrap_or(100));
    let boot = BootstrapConfig {
        resamples: cfg.resamples.unwrap_or(1000),
        level: cfg.level.unwrap_or(0.95),
        seed: cfg.seed.unwrap_or(0),
    };
    let curve = survival_diff_ci(&correct, &incorrect, &grid, &boot)?;
    let out = OutputDir::create(cfg.out_dir()?)?;
    out.text("ecdf.csv", &curve.to_csv())?;
    let band = curve.band.as_ref().expect("bootstrap band");
    let body: Vec<Vec<String>> = (0..grid.len())
        .map(|i| vec![f4(grid[i]), f4(curve.correct[i]), f4(curve.incorrect[i]), f4(curve.difference[i]), f4(band.lower[i]), f4(band.upper[i])])
        .collect();
    out.text("ecdf.txt", &table(&["threshold", "correct", "incorrect", "difference", "lower", "upper"], &body))?;
    out.json(
        "ecdf.json",
        &EcdfReport {
            percentile: p,
            n_correct: correct.len(),
            n_incorrect: incorrect.len(),
            curve,
        },
    )
}

#[derive(Serialize)]
struct WordReport {
    pooling: WordPooling,
    tail: adiv_core::analysis::TailComposition,
    class_means: BTreeMap<WordClass, f64>,
}

fn words(cfg: &RunConfig) -> Result<()> {
    let p = cfg.percentile.unwrap_or(99.0);
    let pooling = match cfg.pooling.as_deref().unwrap_or("mean") {
        "mean" => WordPooling::Mean,
        "max" => WordPooling::Max,
        other => return Err(Error::Config(format!("unknown pooling `{other}`"))),
    };
    let div = cfg.divergence()?;
    let mut all = Vec::new();
    for ex in open_dump(cfg.dump_path()?, ReadOptions::default())? {
        let ex = ex?;
        let missing = |what: &str| Error::Annotation(format!("example {} has no {what}", ex.meta.example_id));
        let ids = ex.meta.word_ids.as_ref().ok_or_else(|| missing("word_ids"))?;
        let classes = ex.meta.word_classes.as_ref().ok_or_else(|| missing("word_classes"))?;
        let tensor = compute_divergence_tensor(&ex, &div)?;
        all.extend(classify_words(&word_aggregate(&tensor, ids, pooling)?, classes)?);
    }
    let tail = tail_composition(&all, p)?;
    let report = WordReport {
        pooling,
        class_means: class_means(&all),
        tail,
    };
    let out = OutputDir::create(cfg.out_dir()?)?;
    out.text("words.csv", &report.tail.to_csv())?;
    let body: Vec<Vec<String>> = WordClass::ALL
        .iter()
        .map(|c| {
            vec![
                c.as_str().to_string(),
                report.tail.counts[c].to_string(),
                f4(report.tail.proportions[c]),
                report.class_means.get(c).map_or_else(|| "-".to_string(), |&m| f4(m)),
            ]
        })
        .collect();
    let mut text = format!(
        "{} of {} words at or above the {p}th percentile ({:.4})\n",
        report.tail.tail_size, report.tail.total_words, report.tail.threshold
    );
    text.push_str(&table(&["class", "tail", "share", "mean"], &body));
    out.text("words.txt", &text)?;
    out.json("words.json", &report)
}

#[derive(Serialize)]
struct HeadsReport {
    selections: Vec<(String, HeadSelection)>,
    overlap: Vec<adiv_core::analysis::OverlapRow>,
    regions: Vec<(String, adiv_core::analysis::RegionDistribution)>,
}

fn heads(cfg: &RunConfig) -> Result<()> {
    let (layers, heads) = cfg.grid()?;
    if cfg.models.is_empty() {
        return Err(Error::Config("--model NAME=PATH is required at least once".into()));
    }
    let mut grouped: BTreeMap<String, Vec<ProbeModel>> = BTreeMap::new();
    for spec in &cfg.models {
        let (name, path) = spec
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--model expects NAME=PATH, got `{spec}`")))?;
        let model = ProbeModel::from_json(&std::fs::read_to_string(path)?)?;
        grouped.entry(name.to_string()).or_default().push(model);
    }
    let mut selections = Vec::new();
    for (name, models) in &grouped {
        selections.push((name.clone(), HeadSelection::from_models(models, layers, heads)?));
    }
    let overlap = head_overlap(&selections)?;
    let regions = selections
        .iter()
        .map(|(n, s)| Ok((n.clone(), region_distribution(&s.heads().collect::<Vec<HeadIndex>>(), layers)?)))
        .collect::<Result<Vec<_>>>()?;

    let out = OutputDir::create(cfg.out_dir()?)?;
    let mut csv = String::from("layer,head,sources\n");
    for row in &overlap {
        csv.push_str(&format!("{},{},{}\n", row.layer, row.head, row.sources.join(";")));
    }
    out.text("overlap.csv", &csv)?;
    let mut rcsv = String::from("selection,early,middle,late,n_early,n_middle,n_late\n");
    for (n, r) in &regions {
        rcsv.push_str(&format!("{n},{},{},{},{},{},{}\n", r.early, r.middle, r.late, r.counts[0], r.counts[1], r.counts[2]));
    }
    out.text("regions.csv", &rcsv)?;
    let body: Vec<Vec<String>> = regions
        .iter()
        .map(|(n, r)| {
            let sel = selections.iter().find(|(m, _)| m == n).map_or(0, |(_, s)| s.len());
            vec![n.clone(), sel.to_string(), format!("{:.1}", r.early), format!("{:.1}", r.middle), format!("{:.1}", r.late)]
        })
        .collect();
    let mut text = table(&["selection", "heads", "early %", "middle %", "late %"], &body);
    text.push_str(&format!("heads shared by two or more selections: {}\n", overlap.len()));
    out.text("heads.txt", &text)?;
    out.json(
        "heads.json",
        &HeadsReport {
            selections,
            overlap,
            regions,
        },
    )
}

pub fn sanity(cfg: &RunConfig) -> Result<()> {
    let (metas, records) = extract(cfg, cfg.scope()?, cfg.pooling()?)?;
    let data = Dataset::from_records(&records)?;
    let sanity_cfg = SanityConfig {
        n_permutations: cfg.permutations.unwrap_or(20),
        seed: cfg.seed.unwrap_or(0),
        cv: cfg.cv()?,
    };
    let report = run_sanity_suite(&metas, &data, &sanity_cfg)?;
    let out = OutputDir::create(cfg.out_dir()?)?;
    out.json("sanity.json", &report)?;
    out.text("sanity.txt", &report.to_text())?;
    out.text("sanity.csv", &report.to_csv())
}
