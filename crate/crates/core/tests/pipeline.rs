//! End-to-end runs over the fixture files: parse, normalize, place on the
//! roofline, classify and tabulate.

use std::path::PathBuf;

use roofline_core::{
    aggregate, build_model, ceilings, classify, compare, normalize, parse_babelstream_log,
    parse_nvprof_csv, parse_profile_json, parse_rocprof_csv, render_table, Aggregate, Bound,
    CompareEntry, IntensityMode, KernelProfile, MemoryLevel, NormalizeOptions, Registry,
    StreamFunction, TableCell, TableFormat, TableMetric,
};

fn fixture(name: &str) -> Vec<u8> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name);
    std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn json_profile(name: &str) -> KernelProfile {
    let text = String::from_utf8(fixture(name)).unwrap();
    let mut v = parse_profile_json(&text).unwrap();
    assert_eq!(v.len(), 1);
    v.remove(0)
}

fn rel_err(actual: f64, expected: f64) -> f64 {
    ((actual - expected) / expected).abs()
}

#[test]
fn mi60_rocprof_to_model() {
    let records = parse_rocprof_csv(&fixture("mi60_lwfa_rocprof.csv")).unwrap();
    assert_eq!(records.len(), 1);
    let profile = normalize(&records[0], &NormalizeOptions::default()).unwrap();
    assert_eq!(profile.runtime_s, 0.0127);
    assert_eq!(profile.bytes_read / 1024.0, 1_099_058.59);

    let bw = parse_babelstream_log(&fixture("mi60_babelstream.log")).unwrap();
    let copy = bw.iter().find(|m| m.function == StreamFunction::Copy).unwrap();
    assert_eq!(copy.value_gbps, 808.975476);

    let reg = Registry::builtin();
    let mi60 = reg.lookup("mi60").unwrap();
    let c = ceilings(mi60, Some(copy), false);
    let model = build_model(mi60, &c, &[profile], IntensityMode::IntensityPerformance).unwrap();
    let p = &model.points[0];
    assert!(rel_err(p.gips, 0.620) <= 0.03, "{}", p.gips);
    assert!(rel_err(p.intensity, 0.398) <= 0.03, "{}", p.intensity);
    assert_eq!(p.memory_level, MemoryLevel::Hbm);
}

#[test]
fn v100_nvprof_per_transaction() {
    let records = parse_nvprof_csv(&fixture("v100_lwfa_nvprof.csv")).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].metric_values["inst_executed"], "279498240");
    let profile = normalize(&records[0], &NormalizeOptions::default()).unwrap();
    assert_eq!(profile.runtime_s, 0.004);
    assert_eq!(profile.transactions, Some(49_069_213));

    let reg = Registry::builtin();
    let v100 = reg.lookup("v100").unwrap();
    let c = ceilings(v100, None, true);
    assert_eq!(c.bandwidth_gtxns, Some(28.125));
    let model = build_model(v100, &c, &[profile], IntensityMode::PerTransaction).unwrap();
    assert_eq!(model.points.len(), 3);
    let hbm = model
        .points
        .iter()
        .find(|p| p.memory_level == MemoryLevel::Hbm)
        .unwrap();
    assert!((hbm.intensity - 0.178).abs() <= 0.001, "{}", hbm.intensity);
    assert_eq!(classify(hbm, &model), Some(Bound::MemoryBound));
    // cache-level points are plotted but not classified without ceilings
    for p in model.points.iter().filter(|p| p.memory_level != MemoryLevel::Hbm) {
        assert_eq!(classify(p, &model), None);
    }
    // L1 has the most traffic, so the lowest intensity
    assert_eq!(model.points[0].memory_level, MemoryLevel::L1);
}

#[test]
fn repeated_invocations_and_aggregation() {
    let records = parse_rocprof_csv(&fixture("mi100_multi_rocprof.csv")).unwrap();
    let profiles: Vec<_> = records
        .iter()
        .map(|r| normalize(r, &NormalizeOptions::default()).unwrap())
        .collect();
    assert_eq!(profiles.len(), 3);
    assert_eq!(profiles[0].runtime_s, 0.0025);
    assert_eq!(profiles[0].bytes_read, 1_098_350.59 * 1024.0);

    let summed = aggregate(profiles.clone(), Aggregate::Sum).unwrap();
    assert_eq!(summed.len(), 2);
    assert_eq!(summed[0].kernel_name, "ComputeCurrent");
    assert_eq!(summed[0].runtime_s, 0.005);
    assert_eq!(summed[0].valu_instructions, Some(2 * 112_449_120));

    let mean = aggregate(profiles.clone(), Aggregate::Mean).unwrap();
    assert_eq!(mean[0].runtime_s, 0.0025);
    assert_eq!(mean[0].valu_instructions, Some(112_449_120));

    // Summing doubles both instructions and runtime, so GIPS is unchanged.
    let reg = Registry::builtin();
    let mi100 = reg.lookup("mi100").unwrap();
    let c = ceilings(mi100, None, false);
    let single = build_model(mi100, &c, &profiles[..1], IntensityMode::ClassicPerByte).unwrap();
    let merged = build_model(mi100, &c, &summed[..1], IntensityMode::ClassicPerByte).unwrap();
    assert!(rel_err(merged.points[0].gips, single.points[0].gips) < 1e-12);
}

struct TableCase {
    file: &'static str,
    gpu: &'static str,
    gips: f64,
    intensity: f64,
}

fn check_table(cases: &[TableCase]) {
    let reg = Registry::builtin();
    let profiles: Vec<_> = cases.iter().map(|c| json_profile(c.file)).collect();
    let models: Vec<_> = cases
        .iter()
        .zip(&profiles)
        .map(|(c, p)| {
            let spec = reg.lookup(c.gpu).unwrap();
            build_model(
                spec,
                &ceilings(spec, None, false),
                std::slice::from_ref(p),
                IntensityMode::IntensityPerformance,
            )
            .unwrap()
        })
        .collect();
    let entries: Vec<_> = cases
        .iter()
        .zip(&models)
        .zip(&profiles)
        .map(|((c, m), p)| CompareEntry {
            label: c.gpu,
            model: m,
            profile: Some(p),
        })
        .collect();
    let table = compare(&entries);
    let row = |metric| &table.rows.iter().find(|r| r.metric == metric).unwrap().cells;
    for (i, c) in cases.iter().enumerate() {
        let TableCell::Real(g) = row(TableMetric::AchievedGips)[i] else {
            panic!("no GIPS for {}", c.gpu)
        };
        let TableCell::Real(ii) = row(TableMetric::InstructionIntensity)[i] else {
            panic!("no intensity for {}", c.gpu)
        };
        assert!(rel_err(g, c.gips) <= 0.03, "{} GIPS {g} vs {}", c.gpu, c.gips);
        assert!(
            rel_err(ii, c.intensity) <= 0.03,
            "{} intensity {ii} vs {}",
            c.gpu,
            c.intensity
        );
        assert_eq!(models[i].points[0].gips, g);
    }
    let md = render_table(&table, TableFormat::Markdown);
    assert_eq!(md.lines().count(), 2 + 11);
}

#[test]
fn lwfa_table_reproduction() {
    check_table(&[
        TableCase { file: "table1_lwfa_v100.json", gpu: "V100", gips: 2.178, intensity: 0.006 },
        TableCase { file: "table1_lwfa_mi60.json", gpu: "MI60", gips: 0.620, intensity: 0.398 },
        TableCase { file: "table1_lwfa_mi100.json", gpu: "MI100", gips: 2.856, intensity: 1.863 },
    ]);
}

#[test]
fn tweac_table_reproduction() {
    check_table(&[
        TableCase { file: "table2_tweac_v100.json", gpu: "V100", gips: 6.634, intensity: 0.155 },
        TableCase { file: "table2_tweac_mi60.json", gpu: "MI60", gips: 3.586, intensity: 0.293 },
        TableCase { file: "table2_tweac_mi100.json", gpu: "MI100", gips: 4.993, intensity: 0.408 },
    ]);
}

#[test]
fn table_one_markdown_layout() {
    let reg = Registry::builtin();
    let files = [
        ("V100", "table1_lwfa_v100.json"),
        ("MI60", "table1_lwfa_mi60.json"),
        ("MI100", "table1_lwfa_mi100.json"),
    ];
    let profiles: Vec<_> = files.iter().map(|(_, f)| json_profile(f)).collect();
    let models: Vec<_> = files
        .iter()
        .map(|(g, _)| {
            let s = reg.lookup(g).unwrap();
            build_model(s, &ceilings(s, None, false), &[], IntensityMode::IntensityPerformance)
                .unwrap()
        })
        .collect();
    let entries: Vec<_> = files
        .iter()
        .zip(&models)
        .zip(&profiles)
        .map(|(((g, _), m), p)| CompareEntry { label: g, model: m, profile: Some(p) })
        .collect();
    let md = render_table(&compare(&entries), TableFormat::Markdown);
    let lines: Vec<&str> = md.lines().collect();
    assert_eq!(lines[0], "| Metric | V100 | MI60 | MI100 |");
    assert_eq!(lines[3], "| Compute Units, Streaming Multiprocessors | 80 | 64 | 120 |");
    assert_eq!(lines[5], "| Frequency (GHz) | 1.530 | 1.800 | 1.502 |");
    assert_eq!(lines[6], "| Wavefront, Warp Schedulers | 4 | 1 | 1 |");
    assert_eq!(lines[7], "| Peak GIPS | 489.600 | 115.200 | 180.240 |");
    assert_eq!(lines[9], "| Instructions | 279,498,240 | 502,440,960 | 449,796,480 |");
    assert_eq!(
        lines[10],
        "| Bytes Read | 267,280,000,000 | 1,125,436,000 | 1,124,711,000 |"
    );
}
