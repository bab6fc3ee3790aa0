//! Parameter-study sweep: the four one-parameter-at-a-time families around
//! the standard operating point, the best-parameter run, reference
//! baselines, and the gain comparison report.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thibeam::metrics::QualityReport;
use thibeam::model::{BeamformerParams, WindowKind};
use thibeam::{Image, Params};

use crate::config::{PhantomChoice, RunConfig};
use crate::pipeline::{
    build_phantom, combined_frames, measure, write_metrics_csv, MetricsRow,
};
use crate::render::write_pgm;
use crate::rfio::write_dbmap;
use crate::{CliError, CliResult};

/// Which sweep families to execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyFilter {
    K,
    L,
    Loading,
    Delta,
    All,
}

impl FamilyFilter {
    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyFilter::K => "K",
            FamilyFilter::L => "L",
            FamilyFilter::Loading => "loading",
            FamilyFilter::Delta => "delta",
            FamilyFilter::All => "all",
        }
    }

    fn keeps(&self, family: &str) -> bool {
        matches!(self, FamilyFilter::All) || self.as_str() == family
    }
}

/// One planned sweep case.
#[derive(Debug, Clone)]
pub struct SweepCase {
    pub family: &'static str,
    /// 1-based position within the family.
    pub case_index: usize,
    pub params: Params,
}

/// The full parameter study: four families of five cases each, varying one
/// parameter per family around the standard point, plus the best-parameter
/// set used for comparisons.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub cases: Vec<SweepCase>,
    pub standard: Params,
    pub best: Params,
}

/// Round to the nearest integer, halves away from zero.
fn round_half_away(x: f64) -> usize {
    x.round() as usize
}

/// Loading factor tied to the subarray length of the case it applies to.
fn delta_for(l: usize) -> f64 {
    1.0 / (100.0 * l as f64)
}

impl SweepPlan {
    /// Build the plan from the configured acquisition. With the reference
    /// aperture (M = 66, two-cycle pulse at 50 MHz sampling) this yields
    /// K in {0, 8, 13, 25, 50}, L in {1, 11, 22, 33, 66}, loading factors
    /// {0, s/100, s/10, s, 10s} with s = 1/3300, and thresholds
    /// {0, 0.1, 0.5, 0.8, 1}; exactly one case per family coincides with the
    /// all-standard point, leaving 17 unique parameter sets in 20 rows.
    pub fn from_config(config: &RunConfig) -> Self {
        let m = config.rx_aperture;
        let k_stan = config.k_standard();
        let l_stan = config.l_standard();
        let sub_stan = 0.5;
        let d_stan = delta_for(l_stan);

        let k_values = [
            0,
            round_half_away(k_stan as f64 / 3.0),
            round_half_away(k_stan as f64 / 2.0),
            k_stan,
            2 * k_stan,
        ];
        let l_values = [
            1,
            round_half_away(m as f64 / 6.0),
            round_half_away(m as f64 / 3.0),
            l_stan,
            m,
        ];
        let d_values = [0.0, d_stan / 100.0, d_stan / 10.0, d_stan, 10.0 * d_stan];
        let sub_values = [0.0, 0.1, 0.5, 0.8, 1.0];

        let mut cases = Vec::with_capacity(20);
        for (i, &k) in k_values.iter().enumerate() {
            cases.push(SweepCase {
                family: "K",
                case_index: i + 1,
                params: BeamformerParams::eibmv(k, l_stan, d_stan, sub_stan),
            });
        }
        for (i, &l) in l_values.iter().enumerate() {
            cases.push(SweepCase {
                family: "L",
                case_index: i + 1,
                params: BeamformerParams::eibmv(k_stan, l, delta_for(l), sub_stan),
            });
        }
        for (i, &d) in d_values.iter().enumerate() {
            cases.push(SweepCase {
                family: "loading",
                case_index: i + 1,
                params: BeamformerParams::eibmv(k_stan, l_stan, d, sub_stan),
            });
        }
        for (i, &s) in sub_values.iter().enumerate() {
            cases.push(SweepCase {
                family: "delta",
                case_index: i + 1,
                params: BeamformerParams::eibmv(k_stan, l_stan, d_stan, s),
            });
        }

        let standard = BeamformerParams::eibmv(k_stan, l_stan, d_stan, sub_stan);
        let l_best = round_half_away(m as f64 / 3.0);
        let best = BeamformerParams::eibmv(
            round_half_away(1.5 * k_stan as f64),
            l_best,
            delta_for(l_best),
            sub_stan,
        );
        SweepPlan {
            cases,
            standard,
            best,
        }
    }

    /// The cases selected by a family filter, in plan order.
    pub fn filtered(&self, family: FamilyFilter) -> Vec<SweepCase> {
        self.cases
            .iter()
            .filter(|c| family.keeps(c.family))
            .cloned()
            .collect()
    }
}

/// Hashable identity of an adaptive parameter set.
fn case_key(p: &Params) -> (usize, usize, u64, u64) {
    (p.k, p.l, p.delta_load.to_bits(), p.delta_sub.to_bits())
}

/// One unique execution: a parameter set measured on both phantoms.
struct RunSlot {
    params: Params,
    /// Keep the beamformed images for artifact output (baselines only).
    keep_images: bool,
    wall_s: f64,
    points_report: Option<QualityReport<f64>>,
    cysts_report: Option<QualityReport<f64>>,
    points_image: Option<Image>,
    cysts_image: Option<Image>,
}

impl RunSlot {
    fn new(params: Params, keep_images: bool) -> Self {
        RunSlot {
            params,
            keep_images,
            wall_s: 0.0,
            points_report: None,
            cysts_report: None,
            points_image: None,
            cysts_image: None,
        }
    }

    fn row(&self, family: impl Into<String>, case_index: usize) -> MetricsRow {
        let mut row = MetricsRow::for_params(family, case_index, &self.params);
        if let Some(r) = &self.points_report {
            row.absorb(r);
        }
        if let Some(r) = &self.cysts_report {
            row.absorb(r);
        }
        row.wall_time_s = self.wall_s;
        row
    }
}

/// Gain of the best-parameter run over one baseline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareRow {
    pub baseline: String,
    pub cr_gain_db: f64,
    pub cnr_gain_pct: f64,
}

/// Contrast and CNR gains of the best-parameter run over each baseline. The
/// input rows must contain all four baselines with cyst metrics; the
/// best-over-itself row is zero by construction.
pub fn compare_report(baseline_rows: &[MetricsRow]) -> CliResult<Vec<CompareRow>> {
    let find = |name: &str| -> CliResult<(f64, f64)> {
        let row = baseline_rows
            .iter()
            .find(|r| r.family == name)
            .ok_or_else(|| CliError::invalid(format!("missing baseline row \"{name}\"")))?;
        match (row.mean_cr_db, row.mean_cnr) {
            (Some(cr), Some(cnr)) => Ok((cr, cnr)),
            _ => Err(CliError::invalid(format!(
                "baseline row \"{name}\" lacks contrast metrics"
            ))),
        }
    };
    let (best_cr, best_cnr) = find("eibmv_best")?;
    ["das", "mv", "eibmv_stan", "eibmv_best"]
        .iter()
        .map(|&name| {
            let (cr, cnr) = find(name)?;
            Ok(CompareRow {
                baseline: name.to_string(),
                cr_gain_db: best_cr - cr,
                cnr_gain_pct: 100.0 * (best_cnr - cnr) / cnr,
            })
        })
        .collect()
}

/// Write the comparison CSV.
pub fn write_compare_csv(path: &Path, rows: &[CompareRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| CliError::io(e.to_string()))?;
    Ok(())
}

/// `compare` subcommand: derive `compare.csv` from a sweep's `baselines.csv`.
pub fn run_compare(out_dir: &Path) -> CliResult<Vec<CompareRow>> {
    let baselines = crate::pipeline::read_metrics_csv(&out_dir.join("baselines.csv"))?;
    let rows = compare_report(&baselines)?;
    write_compare_csv(&out_dir.join("compare.csv"), &rows)?;
    Ok(rows)
}

/// Completed sweep: planned rows, baseline rows, and the comparison.
pub struct SweepOutcome {
    pub rows: Vec<MetricsRow>,
    pub baseline_rows: Vec<MetricsRow>,
    pub compare_rows: Vec<CompareRow>,
    /// Unique parameter sets among the planned rows.
    pub unique_runs: usize,
    pub wall_time_s: f64,
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    family: &'a str,
    planned_rows: usize,
    unique_runs: usize,
    baseline_runs: usize,
    wall_time_s: f64,
    threads: usize,
}

const BASELINE_NAMES: [&str; 4] = ["das", "mv", "eibmv_stan", "eibmv_best"];

/// Execute a sweep: each planned case and each baseline is beamformed on
/// both the wire-target and cyst phantoms from one shared set of simulated
/// acquisitions per phantom. Rows sharing a parameter set are computed once
/// and the cached row is reused verbatim, so coincident rows are
/// byte-identical in the CSV. Outputs under `out_dir`: shared RF under
/// `rf_points/` and `rf_cysts/`, `sweep.csv`, `baselines.csv`,
/// `compare.csv`, baseline images under `baselines/<name>/`,
/// `sweep_summary.json`, and `config.resolved.json`.
pub fn run_sweep(
    config: &RunConfig,
    out_dir: &Path,
    family: FamilyFilter,
    threads: usize,
) -> CliResult<SweepOutcome> {
    let start = Instant::now();
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(format!("{}: {e}", out_dir.display())))?;
    let geometry = config.geometry()?;
    let pulse_plus = config.pulse(1)?;
    let pulse_minus = config.pulse(-1)?;

    let plan = SweepPlan::from_config(config);
    let cases = plan.filtered(family);
    if cases.is_empty() {
        return Err(CliError::invalid(format!(
            "family filter \"{}\" selects no cases",
            family.as_str()
        )));
    }

    // The reference delay-and-sum baseline always uses the rectangular
    // window; the adaptive baselines are the standard and best points.
    let das_params = BeamformerParams::das(WindowKind::Rectangular);
    let mv_params = BeamformerParams::mv(
        plan.standard.k,
        plan.standard.l,
        plan.standard.delta_load,
    );
    for case in &cases {
        case.params.validate(&geometry)?;
    }
    das_params.validate(&geometry)?;
    mv_params.validate(&geometry)?;
    plan.standard.validate(&geometry)?;
    plan.best.validate(&geometry)?;

    // Adaptive runs are keyed by parameter set so coincident sweep rows and
    // the matching adaptive baselines execute exactly once.
    let mut slots: Vec<RunSlot> = Vec::new();
    let mut key_to_slot: HashMap<(usize, usize, u64, u64), usize> = HashMap::new();
    let mut slot_for = |params: &Params, keep: bool, slots: &mut Vec<RunSlot>| -> usize {
        let key = case_key(params);
        if let Some(&i) = key_to_slot.get(&key) {
            slots[i].keep_images |= keep;
            i
        } else {
            slots.push(RunSlot::new(params.clone(), keep));
            key_to_slot.insert(key, slots.len() - 1);
            slots.len() - 1
        }
    };

    let case_slots: Vec<usize> = cases
        .iter()
        .map(|c| slot_for(&c.params, false, &mut slots))
        .collect();
    let unique_runs = slots.len();
    let stan_slot = slot_for(&plan.standard, true, &mut slots);
    let best_slot = slot_for(&plan.best, true, &mut slots);
    // The non-adaptive baselines get dedicated slots (never deduplicated
    // against the adaptive cases).
    let das_slot = slots.len();
    slots.push(RunSlot::new(das_params, true));
    let mv_slot = slots.len();
    slots.push(RunSlot::new(mv_params, true));

    // One simulated acquisition per phantom, shared by every run.
    for phantom_choice in [PhantomChoice::Points, PhantomChoice::Cysts] {
        let mut cfg = config.clone();
        cfg.phantom = phantom_choice;
        let rf_dir = match phantom_choice {
            PhantomChoice::Points => out_dir.join("rf_points"),
            PhantomChoice::Cysts => out_dir.join("rf_cysts"),
        };
        let phantom = build_phantom(&cfg, &geometry)?;
        let frames = combined_frames(
            &cfg,
            &geometry,
            &phantom,
            &pulse_plus,
            &pulse_minus,
            Some(&rf_dir),
        )?;
        for slot in slots.iter_mut() {
            let t = Instant::now();
            let (image, _) = thibeam::beamform::beamform_image(
                &frames,
                &geometry,
                &pulse_plus,
                &slot.params,
                cfg.decimation,
                cfg.dynamic_range_db,
            )?;
            let report = measure(&cfg, &image)?;
            slot.wall_s += t.elapsed().as_secs_f64();
            match phantom_choice {
                PhantomChoice::Points => {
                    slot.points_report = Some(report);
                    if slot.keep_images {
                        slot.points_image = Some(image);
                    }
                }
                PhantomChoice::Cysts => {
                    slot.cysts_report = Some(report);
                    if slot.keep_images {
                        slot.cysts_image = Some(image);
                    }
                }
            }
        }
    }

    // Planned rows in plan order; duplicates reuse the cached slot verbatim.
    let rows: Vec<MetricsRow> = cases
        .iter()
        .zip(case_slots.iter())
        .map(|(c, &i)| slots[i].row(c.family, c.case_index))
        .collect();
    write_metrics_csv(&out_dir.join("sweep.csv"), &rows)?;

    let baseline_slots = [das_slot, mv_slot, stan_slot, best_slot];
    let mut baseline_rows = Vec::with_capacity(4);
    for (i, (&slot, name)) in baseline_slots.iter().zip(BASELINE_NAMES).enumerate() {
        baseline_rows.push(slots[slot].row(name, i + 1));
        let dir = out_dir.join("baselines").join(name);
        fs::create_dir_all(&dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
        let s = &slots[slot];
        let points = s.points_image.as_ref().expect("baseline keeps images");
        let cysts = s.cysts_image.as_ref().expect("baseline keeps images");
        write_pgm(&dir.join("points.pgm"), points)?;
        write_dbmap(&dir.join("points.dbmap"), points)?;
        write_pgm(&dir.join("cysts.pgm"), cysts)?;
        write_dbmap(&dir.join("cysts.dbmap"), cysts)?;
    }
    write_metrics_csv(&out_dir.join("baselines.csv"), &baseline_rows)?;

    let compare_rows = compare_report(&baseline_rows)?;
    write_compare_csv(&out_dir.join("compare.csv"), &compare_rows)?;

    let wall_time_s = start.elapsed().as_secs_f64();
    let summary = SweepSummary {
        family: family.as_str(),
        planned_rows: rows.len(),
        unique_runs,
        baseline_runs: 4,
        wall_time_s,
        threads,
    };
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    fs::write(out_dir.join("sweep_summary.json"), text)
        .map_err(|e| CliError::io(e.to_string()))?;
    config.write_resolved(out_dir, "sweep", Some(family.as_str()), threads)?;

    Ok(SweepOutcome {
        rows,
        baseline_rows,
        compare_rows,
        unique_runs,
        wall_time_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_plan() -> SweepPlan {
        SweepPlan::from_config(&RunConfig::default())
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        assert_eq!(round_half_away(8.333), 8);
        assert_eq!(round_half_away(12.5), 13);
        assert_eq!(round_half_away(37.5), 38);
        assert_eq!(round_half_away(10.666), 11);
    }

    #[test]
    fn reference_plan_has_the_documented_values() {
        let plan = reference_plan();
        assert_eq!(plan.cases.len(), 20);
        let of = |fam: &str| -> Vec<&SweepCase> {
            plan.cases.iter().filter(|c| c.family == fam).collect()
        };
        let ks: Vec<usize> = of("K").iter().map(|c| c.params.k).collect();
        assert_eq!(ks, vec![0, 8, 13, 25, 50]);
        let ls: Vec<usize> = of("L").iter().map(|c| c.params.l).collect();
        assert_eq!(ls, vec![1, 11, 22, 33, 66]);
        let ds: Vec<f64> = of("loading").iter().map(|c| c.params.delta_load).collect();
        let s = 1.0 / 3300.0;
        assert_eq!(ds, vec![0.0, s / 100.0, s / 10.0, s, 10.0 * s]);
        let subs: Vec<f64> = of("delta").iter().map(|c| c.params.delta_sub).collect();
        assert_eq!(subs, vec![0.0, 0.1, 0.5, 0.8, 1.0]);
        // All non-varying parameters sit at the standard point.
        for c in of("delta") {
            assert_eq!(c.params.k, 25);
            assert_eq!(c.params.l, 33);
            assert_eq!(c.params.delta_load, s);
        }
        assert_eq!(plan.best.k, 38);
        assert_eq!(plan.best.l, 22);
        assert_eq!(plan.best.delta_load, 1.0 / 2200.0);
        assert_eq!(plan.best.delta_sub, 0.5);
    }

    #[test]
    fn loading_follows_the_case_subarray_length() {
        let plan = reference_plan();
        for c in plan.cases.iter().filter(|c| c.family == "L") {
            assert_eq!(c.params.delta_load, 1.0 / (100.0 * c.params.l as f64));
        }
    }

    #[test]
    fn exactly_one_case_per_family_is_the_standard_point() {
        let plan = reference_plan();
        let std_key = case_key(&plan.standard);
        let mut coincident: Vec<(&str, usize)> = Vec::new();
        for c in &plan.cases {
            if case_key(&c.params) == std_key {
                coincident.push((c.family, c.case_index));
            }
        }
        assert_eq!(
            coincident,
            vec![("K", 4), ("L", 4), ("loading", 4), ("delta", 3)]
        );
        let unique: std::collections::HashSet<_> =
            plan.cases.iter().map(|c| case_key(&c.params)).collect();
        assert_eq!(unique.len(), 17);
    }

    #[test]
    fn family_filter_selects_subsets_in_order() {
        let plan = reference_plan();
        let delta = plan.filtered(FamilyFilter::Delta);
        assert_eq!(delta.len(), 5);
        assert!(delta.iter().all(|c| c.family == "delta"));
        assert_eq!(
            delta.iter().map(|c| c.case_index).collect::<Vec<_>>(),
            vec![1, 2, 3, 4, 5]
        );
        assert_eq!(plan.filtered(FamilyFilter::All).len(), 20);
        assert_eq!(plan.filtered(FamilyFilter::K).len(), 5);
    }

    #[test]
    fn smaller_aperture_rescales_the_plan() {
        let mut cfg = RunConfig::default();
        cfg.n_elements = 64;
        cfg.rx_aperture = 32;
        let plan = SweepPlan::from_config(&cfg);
        let ls: Vec<usize> = plan
            .cases
            .iter()
            .filter(|c| c.family == "L")
            .map(|c| c.params.l)
            .collect();
        assert_eq!(ls, vec![1, 5, 11, 16, 32]);
        assert_eq!(plan.best.l, 11);
        assert_eq!(plan.best.k, 38);
    }

    fn row(name: &str, cr: f64, cnr: f64) -> MetricsRow {
        MetricsRow {
            family: name.to_string(),
            case_index: 1,
            k: None,
            l: None,
            delta_load: None,
            delta_sub: None,
            mean_fwhm_mm: None,
            mean_cr_db: Some(cr),
            mean_cnr: Some(cnr),
            mean_radius_err_mm: None,
            wall_time_s: 0.0,
        }
    }

    #[test]
    fn compare_report_gains_match_hand_arithmetic() {
        let rows = vec![
            row("das", 10.0, 2.0),
            row("mv", 12.5, 2.5),
            row("eibmv_stan", 14.0, 4.0),
            row("eibmv_best", 16.0, 5.0),
        ];
        let out = compare_report(&rows).unwrap();
        assert_eq!(out.len(), 4);
        assert!((out[0].cr_gain_db - 6.0).abs() < 1e-12);
        assert!((out[0].cnr_gain_pct - 150.0).abs() < 1e-12);
        assert!((out[1].cr_gain_db - 3.5).abs() < 1e-12);
        assert!((out[1].cnr_gain_pct - 100.0).abs() < 1e-12);
        assert!((out[2].cr_gain_db - 2.0).abs() < 1e-12);
        assert!((out[2].cnr_gain_pct - 25.0).abs() < 1e-12);
        assert_eq!(out[3].cr_gain_db, 0.0);
        assert_eq!(out[3].cnr_gain_pct, 0.0);
    }

    #[test]
    fn compare_report_requires_every_baseline() {
        let rows = vec![
            row("das", 10.0, 2.0),
            row("eibmv_best", 16.0, 5.0),
        ];
        match compare_report(&rows) {
            Err(CliError::Invalid(_)) => {}
            other => panic!("expected invalid-argument, got {other:?}"),
        }
        let mut incomplete = vec![
            row("das", 10.0, 2.0),
            row("mv", 12.0, 2.2),
            row("eibmv_stan", 14.0, 4.0),
            row("eibmv_best", 16.0, 5.0),
        ];
        incomplete[1].mean_cnr = None;
        match compare_report(&incomplete) {
            Err(CliError::Invalid(_)) => {}
            other => panic!("expected invalid-argument, got {other:?}"),
        }
    }
}
