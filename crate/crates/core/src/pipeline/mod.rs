//! End-to-end runs behind the command-line tool.

mod config;
mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

pub use config::{PipelineKind, Resampling, RunConfig, DEFAULT_SEED};
pub use report::{render_report, FusionReport, RegionReport, RunReport, REPORT_SCHEMA_VERSION};

use crate::error::{Error, Result};
use crate::eval::{
    and_fuse, cohort_graph_report, false_positives, fuse_scores, grid_search_plan, metrics,
    permutation_importance, stratified_kfold, write_cohort_csv, write_importance_csv,
    FeatureSelector, Importance, ReduceThenImportance,
};
use crate::graph::{build_graph, graph_summary, GraphParams, GraphSummary, LogBase};
use crate::learn::{split_importance, write_drop_log, FeatureTable, ModelKind, TrainedModel};
use crate::par;
use crate::radiomics::{extract_all, RadiomicsConfig};
use crate::rng::derive_seed;
use crate::spectral::{adjacency, cohort_spectral_features, SpectralFeatureVector};
use crate::volume::{
    extract_roi, generate_phantom, load_manifest, load_volume, normalize_max, resample,
    zscore_normalize, ManifestRow, Region, RoiPatch, Volume3D,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Adds `generated_at` (unix seconds) to the report.
    pub timestamp: bool,
}

/// Runs `f` on a dedicated pool of `threads` workers (0 = global pool).
#[cfg(feature = "parallel")]
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
pub fn with_threads<R: Send>(_threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    Ok(f())
}

fn create_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

fn write_text(p: &Path, s: &str) -> Result<()> {
    fs::write(p, s).map_err(|e| Error::io(p, e))
}

/// Writes a seeded phantom cohort under `out` and returns the manifest path.
pub fn run_phantom(cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    let mut phantom_cfg = cfg.phantom.clone();
    phantom_cfg.seed = cfg.seed;
    let phantom = generate_phantom(&phantom_cfg)?;
    create_dir(out)?;
    phantom.write(out)
}

/// Region -> ROI patches sorted by subject id.
fn load_cohort(
    manifest: &Path,
    cfg: &RunConfig,
) -> Result<(usize, BTreeMap<Region, Vec<RoiPatch>>)> {
    let rows = load_manifest(manifest)?;
    let n_rows = rows.len();
    let wanted: BTreeSet<Region> = cfg.regions.iter().copied().collect();
    let rows: Vec<ManifestRow> = rows
        .into_iter()
        .filter(|r| wanted.contains(&r.region))
        .collect();
    let paths: Vec<PathBuf> = rows
        .iter()
        .map(|r| r.volume_path.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let volumes = par::try_collect(par::map_indexed(&paths, |_, p| load_volume(p)))?;
    let volumes: BTreeMap<&PathBuf, Volume3D> = paths.iter().zip(volumes).collect();

    let mut by_region: BTreeMap<Region, Vec<RoiPatch>> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for row in &rows {
        if !seen.insert((row.region, row.subject_id.clone())) {
            return Err(Error::format(
                manifest,
                format!("duplicate row for {} / {}", row.subject_id, row.region),
            ));
        }
        let vol = &volumes[&row.volume_path];
        let patch = extract_roi(vol, &row.roi())
            .map_err(|e| Error::format(&row.volume_path, e.to_string()))?
            .labeled(row.subject_id.clone(), row.label);
        let patch = match &cfg.resampling {
            Some(r) => resample_patch(&patch, r)?,
            None => patch,
        };
        by_region.entry(row.region).or_default().push(patch);
    }
    for region in &cfg.regions {
        if !by_region.contains_key(region) {
            return Err(Error::format(
                manifest,
                format!("no rows for region {region}"),
            ));
        }
    }
    for patches in by_region.values_mut() {
        patches.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));
    }
    Ok((n_rows, by_region))
}

fn resample_patch(patch: &RoiPatch, r: &Resampling) -> Result<RoiPatch> {
    let vol = resample(&patch.to_volume()?, r.spacing, r.interpolation)?;
    let mut out = patch.with_voxels(vol.dims(), vol.voxels().iter().map(|&v| v as f64).collect());
    out.spacing = vol.spacing();
    Ok(out)
}

fn timestamp(opts: RunOptions) -> Option<u64> {
    opts.timestamp.then(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    })
}

fn write_predictions(
    path: &Path,
    rows: &[(String, &[String], &[u8], &[u8], &[f64])],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["region", "subject_id", "label", "pred", "score"])?;
    for (region, ids, labels, preds, scores) in rows {
        for i in 0..ids.len() {
            w.write_record([
                region.as_str(),
                ids[i].as_str(),
                &labels[i].to_string(),
                &preds[i].to_string(),
                &scores[i].to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

struct RegionRun {
    table: FeatureTable,
    report: RegionReport,
    oof_labels: Vec<u8>,
    oof_scores: Vec<f64>,
}

/// Single-region evaluation shared by both pipelines: grid search on
/// stratified folds, then a final model on all `table` rows.
fn evaluate_region(
    region: Region,
    table: &FeatureTable,
    kind: ModelKind,
    cfg: &RunConfig,
    selector: Option<&dyn FeatureSelector>,
) -> Result<(
    RegionReport,
    Vec<u8>,
    Vec<f64>,
    TrainedModel,
    Option<crate::eval::Selection>,
)> {
    let grid = cfg.grid_for(kind)?;
    let plan = stratified_kfold(&table.labels, cfg.cv_k, cfg.seed)?;
    let gs = grid_search_plan(table, &grid, &plan, cfg.seed, selector)?;
    let final_seed = derive_seed(cfg.seed, &[2]);
    let (final_table, selection) = match selector {
        Some(s) => {
            let sel = s.select(table, final_seed)?;
            (table.select_features(&sel.features)?, Some(sel))
        }
        None => (table.clone(), None),
    };
    let model = gs.best_spec.train(&final_table, final_seed)?;
    let [n_neg, n_pos] = table.class_counts();
    let report = RegionReport {
        region,
        n_subjects: table.n_rows(),
        n_positive: n_pos,
        n_negative: n_neg,
        n_features: table.n_features(),
        model: kind,
        grid: gs.evaluated.clone(),
        best_params: gs.best_point.clone(),
        best_spec: gs.best_spec.clone(),
        folds: gs.best_report.folds.clone(),
        mean_accuracy: gs.best_report.mean_accuracy,
        mean_f1: gs.best_report.mean_f1,
        mean_auroc: gs.best_report.mean_auroc,
        oof_false_positives: false_positives(&table.labels, &gs.best_report.oof_labels)?,
        graph_summary: None,
        holdout: None,
        final_selection: None,
    };
    Ok((
        report,
        gs.best_report.oof_labels,
        gs.best_report.oof_scores,
        model,
        selection,
    ))
}

fn spectral_table(
    patches: &[RoiPatch],
    cfg: &RunConfig,
) -> Result<(
    FeatureTable,
    Vec<GraphSummary>,
    Vec<crate::graph::PixelArrayGraph>,
)> {
    let params = GraphParams {
        bins: cfg.mi_bins,
        threshold: cfg.edge_threshold,
        log_base: LogBase::Natural,
    };
    let graphs = par::try_collect(par::map_indexed(patches, |_, p| {
        build_graph(&normalize_max(p)?, &params)
    }))?;
    let adj: Vec<(String, _)> = patches
        .iter()
        .zip(&graphs)
        .map(|(p, g)| (p.subject_id.clone(), adjacency(g)))
        .collect();
    let feats = cohort_spectral_features(&adj, cfg.k_eigen)?;
    let n = feats.first().map_or(0, |f| f.n);
    let table = FeatureTable::new(
        SpectralFeatureVector::feature_names(cfg.k_eigen, n),
        patches.iter().map(|p| p.subject_id.clone()).collect(),
        patches.iter().map(|p| p.label).collect(),
        feats.into_iter().map(|f| f.features).collect(),
    )?;
    let summaries = graphs.iter().map(graph_summary).collect();
    Ok((table, summaries, graphs))
}

fn write_summaries(path: &Path, ids: &[String], labels: &[u8], s: &[GraphSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "subject_id",
        "label",
        "num_edges",
        "num_active_nodes",
        "avg_edge_weight",
    ])?;
    for ((id, l), s) in ids.iter().zip(labels).zip(s) {
        w.write_record([
            id.clone(),
            l.to_string(),
            s.num_edges.to_string(),
            s.num_active_nodes.to_string(),
            s.avg_edge_weight.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Pixel-array-graph pipeline. Writes features, graphs, models, predictions
/// and `report.json` under `out`.
pub fn run_pag(
    manifest: &Path,
    cfg: &RunConfig,
    out: &Path,
    opts: RunOptions,
) -> Result<RunReport> {
    let (n_rows, cohort) = load_cohort(manifest, cfg)?;
    let kind = cfg.model_for(PipelineKind::Pag);
    for d in ["features", "graphs", "models"] {
        create_dir(&out.join(d))?;
    }
    let mut runs: BTreeMap<Region, RegionRun> = BTreeMap::new();
    let mut cohort_rows = Vec::new();
    for region in &cfg.regions {
        let patches = &cohort[region];
        let (table, summaries, graphs) = spectral_table(patches, cfg)?;
        table.write_csv(out.join("features").join(format!("{region}.csv")))?;
        let gdir = out.join("graphs").join(region.as_str());
        create_dir(&gdir)?;
        for (p, g) in patches.iter().zip(&graphs) {
            g.write_edges_csv(gdir.join(format!("{}_edges.csv", p.subject_id)))?;
        }
        write_summaries(
            &gdir.join("summaries.csv"),
            &table.subject_ids,
            &table.labels,
            &summaries,
        )?;
        let labelled: Vec<(GraphSummary, u8)> = summaries
            .iter()
            .copied()
            .zip(table.labels.iter().copied())
            .collect();
        let dist = cohort_graph_report(&labelled)?;
        cohort_rows.push((region.to_string(), dist.clone()));

        let (mut report, oof_labels, oof_scores, model, _) =
            evaluate_region(*region, &table, kind, cfg, None)?;
        model.save(out.join("models").join(format!("{region}.json")))?;
        report.graph_summary = Some(dist);
        log::info!("pag {region}: mean F1 {:.4}", report.mean_f1);
        runs.insert(
            *region,
            RegionRun {
                table,
                report,
                oof_labels,
                oof_scores,
            },
        );
    }
    let mut buf = Vec::new();
    write_cohort_csv(&cohort_rows, &mut buf)?;
    write_text(
        &out.join("cohort_graph_report.csv"),
        &String::from_utf8_lossy(&buf),
    )?;

    let fusion = fuse_cisterns(&runs)?;
    let mut pred_rows: Vec<(String, &[String], &[u8], &[u8], &[f64])> = runs
        .iter()
        .map(|(r, run)| {
            (
                r.to_string(),
                run.table.subject_ids.as_slice(),
                run.table.labels.as_slice(),
                run.oof_labels.as_slice(),
                run.oof_scores.as_slice(),
            )
        })
        .collect();
    if let Some((_, ids, labels, preds, scores)) = &fusion {
        pred_rows.push(("fused".into(), ids, labels, preds, scores));
    }
    write_predictions(&out.join("predictions.csv"), &pred_rows)?;

    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        pipeline: PipelineKind::Pag,
        generated_at: timestamp(opts),
        seed: cfg.seed,
        config: cfg.clone(),
        n_manifest_rows: n_rows,
        feature_selection_scope: None,
        radiomics: None,
        regions: runs.into_values().map(|r| r.report).collect(),
        fusion: fusion.map(|f| f.0),
    };
    report.write(&out.join("report.json"))?;
    Ok(report)
}

type Fused = (FusionReport, Vec<String>, Vec<u8>, Vec<u8>, Vec<f64>);

/// AND-fusion of the out-of-fold cistern predictions over subjects present
/// in both regions.
fn fuse_cisterns(runs: &BTreeMap<Region, RegionRun>) -> Result<Option<Fused>> {
    let (Some(left), Some(right)) = (
        runs.get(&Region::LeftCistern),
        runs.get(&Region::RightCistern),
    ) else {
        return Ok(None);
    };
    let pos = |t: &FeatureTable| -> BTreeMap<String, usize> {
        t.subject_ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect()
    };
    let (lp, rp) = (pos(&left.table), pos(&right.table));
    let ids: Vec<String> = lp.keys().filter(|k| rp.contains_key(*k)).cloned().collect();
    let (mut labels, mut lpred, mut rpred, mut lscore, mut rscore) =
        (vec![], vec![], vec![], vec![], vec![]);
    for id in &ids {
        let (i, j) = (lp[id], rp[id]);
        if left.table.labels[i] != right.table.labels[j] {
            return Err(Error::SchemaMismatch(format!(
                "subject {id} has different labels per region"
            )));
        }
        labels.push(left.table.labels[i]);
        lpred.push(left.oof_labels[i]);
        rpred.push(right.oof_labels[j]);
        lscore.push(left.oof_scores[i]);
        rscore.push(right.oof_scores[j]);
    }
    if ids.is_empty() {
        return Ok(None);
    }
    let fused = and_fuse(&lpred, &rpred)?;
    let scores = fuse_scores(&lscore, &rscore)?;
    let report = FusionReport {
        regions: [Region::LeftCistern, Region::RightCistern],
        n_subjects: ids.len(),
        scores: metrics(&labels, &fused, &scores)?,
        false_positives_left: false_positives(&labels, &lpred)?,
        false_positives_right: false_positives(&labels, &rpred)?,
        false_positives_fused: false_positives(&labels, &fused)?,
    };
    Ok(Some((report, ids, labels, fused, scores)))
}

fn radiomics_config(cfg: &RunConfig) -> RadiomicsConfig {
    RadiomicsConfig {
        filters: cfg.filters.clone(),
        families: cfg.families,
        n_bins: cfg.discretization_bins,
    }
}

/// Radiomics pipeline: z-scored ROIs, filtered-image features, a stratified
/// holdout, and cross-validation on the training part with reduction and
/// split-importance selection fitted inside each training fold.
pub fn run_radiomics(
    manifest: &Path,
    cfg: &RunConfig,
    out: &Path,
    opts: RunOptions,
) -> Result<RunReport> {
    let (n_rows, cohort) = load_cohort(manifest, cfg)?;
    let kind = cfg.model_for(PipelineKind::Radiomics);
    let rcfg = radiomics_config(cfg);
    for d in ["features", "models", "drops", "importance"] {
        create_dir(&out.join(d))?;
    }
    write_text(
        &out.join("radiomics_manifest.json"),
        &serde_json::to_string_pretty(&rcfg.manifest_json())?,
    )?;
    let selector = ReduceThenImportance::default();
    let mut reports = Vec::new();
    let mut pred_store = Vec::new();
    for region in &cfg.regions {
        let rows = par::try_collect(par::map_indexed(&cohort[region], |_, p| {
            extract_all(&zscore_normalize(p)?, &rcfg)
        }))?;
        let table = FeatureTable::from_feature_rows(&rows)?;
        table.write_csv(out.join("features").join(format!("{region}.csv")))?;

        let (train_idx, test_idx) = crate::eval::holdout_indices(
            &table.labels,
            cfg.test_fraction,
            derive_seed(cfg.seed, &[1]),
        )?;
        let (train, test) = (table.subset_rows(&train_idx), table.subset_rows(&test_idx));
        let (mut report, oof_labels, oof_scores, model, selection) =
            evaluate_region(*region, &train, kind, cfg, Some(&selector))?;
        let selection = selection.expect("selector was given");
        let test_sel = test.select_features(&selection.features)?;
        let pred = model.predict(&test_sel)?;
        report.holdout = Some(metrics(&test.labels, &pred.labels, &pred.scores)?);
        report.n_features = table.n_features();
        write_drop_log(
            &selection.drops,
            out.join("drops").join(format!("{region}.csv")),
        )?;
        write_split_counts(
            &out.join("importance").join(format!("{region}_splits.csv")),
            &selection.split_counts,
        )?;
        model.save(out.join("models").join(format!("{region}.json")))?;
        report.final_selection = Some(selection);
        log::info!("radiomics {region}: mean F1 {:.4}", report.mean_f1);
        reports.push(report);
        pred_store.push((region.to_string(), train, oof_labels, oof_scores));
    }
    let pred_rows: Vec<(String, &[String], &[u8], &[u8], &[f64])> = pred_store
        .iter()
        .map(|(r, t, l, s)| {
            (
                r.clone(),
                t.subject_ids.as_slice(),
                t.labels.as_slice(),
                l.as_slice(),
                s.as_slice(),
            )
        })
        .collect();
    write_predictions(&out.join("predictions.csv"), &pred_rows)?;

    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        pipeline: PipelineKind::Radiomics,
        generated_at: timestamp(opts),
        seed: cfg.seed,
        config: cfg.clone(),
        n_manifest_rows: n_rows,
        feature_selection_scope: Some("per_training_fold".into()),
        radiomics: Some(rcfg.manifest_json()),
        regions: reports,
        fusion: None,
    };
    report.write(&out.join("report.json"))?;
    Ok(report)
}

fn write_split_counts(path: &Path, counts: &BTreeMap<String, usize>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["feature", "split_count"])?;
    for (k, v) in counts {
        w.write_record([k.clone(), v.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Permutation importance of a saved model on a saved feature table. The
/// table is projected onto the model's bound features first.
pub fn run_explain(
    model_path: &Path,
    table_path: &Path,
    out: &Path,
    n_repeats: usize,
    seed: u64,
) -> Result<Vec<Importance>> {
    let model = TrainedModel::load(model_path)?;
    let table = FeatureTable::read_csv(table_path)?.select_features(&model.feature_names)?;
    let imp = permutation_importance(&model, &table, n_repeats, seed)?;
    create_dir(out)?;
    write_importance_csv(&imp, out.join("importance.csv"))?;
    if model.kind() == ModelKind::Gbdt {
        write_split_counts(
            &out.join("split_importance.csv"),
            &split_importance(&model)?,
        )?;
    }
    Ok(imp)
}
