//! End-to-end tests against the compiled binary: exit codes, report files,
//! determinism, and the documented validation behaviors.

use std::path::Path;
use std::process::{Command, Output};

fn adparity(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adparity"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, content: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path.to_str().unwrap().to_string()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const HEADER: &str = "date,campaign_id,targeting,label,impressions,clicks,conversions,spend\n";

/// A ledger with exact weekly per-label counts, one row per (day, label).
fn weekly_ledger(weeks: usize, male_per_week: u64, female_per_week: u64) -> String {
    let mut out = String::from(HEADER);
    for week in 0..weeks {
        // Put the whole week's counts on its first day; other days empty.
        let day = 1 + 7 * week;
        let date = format!("2024-01-{:02}", day.min(28));
        out.push_str(&format!("{date},c1,all,male,{male_per_week},0,0,0.00\n"));
        out.push_str(&format!(
            "{date},c1,all,female,{female_per_week},0,0,0.00\n"
        ));
    }
    out
}

const SCENARIO: &str = r#"
[market]
daily_opportunities = 400
cpc_base_usd = 0.50

[market.latent_mix]
male = 0.5
female = 0.5

[market.unknown_rate]
male = 0.15
female = 0.25

[market.cpc_premium]
male = 1.0
unknown = 1.5
female = 2.2

[market.ctr]
male = 0.05
unknown = 0.042
female = 0.04

[[campaign]]
id = "c1"
targeting = "all"
strategy = "max_clicks"
daily_budget_usd = 8.00

[run]
horizon_days = 6
seed = 11
"#;

// ---------------------------------------------------------------------------
// audit
// ---------------------------------------------------------------------------

#[test]
fn audit_flags_persistent_skew_and_passes_balance() {
    let dir = tempfile::tempdir().unwrap();
    // 55:45 split, n=10,000/week: the 99% CI sits well above 0.5.
    let skewed = write(dir.path(), "skewed.csv", &weekly_ledger(4, 5_500, 4_500));
    let out = adparity(
        &["audit", "--input", &skewed, "--out", "skewed"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let series = std::fs::read_to_string(dir.path().join("skewed/skew_impressions.csv")).unwrap();
    let verdicts: Vec<&str> = series
        .lines()
        .skip(1)
        .map(|line| line.rsplit(',').next().unwrap())
        .collect();
    assert_eq!(verdicts, vec!["false"; 4]);

    // Balanced ledger: every weekly verdict is true.
    let balanced = write(dir.path(), "balanced.csv", &weekly_ledger(4, 5_000, 5_000));
    let out = adparity(
        &["audit", "--input", &balanced, "--out", "balanced"],
        dir.path(),
    );
    assert!(out.status.success());
    let series = std::fs::read_to_string(dir.path().join("balanced/skew_impressions.csv")).unwrap();
    assert!(series.lines().skip(1).all(|line| line.ends_with("true")));
}

#[test]
fn audit_marks_undefined_windows_instead_of_failing() {
    let dir = tempfile::tempdir().unwrap();
    // Unknown-only traffic in the middle week leaves its skew undefined.
    let ledger = write(
        dir.path(),
        "gap.csv",
        &format!(
            "{HEADER}2024-01-01,c1,all,male,100,0,0,0.00\n\
             2024-01-08,c1,all,unknown,50,0,0,0.00\n\
             2024-01-15,c1,all,male,100,0,0,0.00\n"
        ),
    );
    let out = adparity(&["audit", "--input", &ledger, "--out", "gap"], dir.path());
    assert!(out.status.success());
    let series = std::fs::read_to_string(dir.path().join("gap/skew_impressions.csv")).unwrap();
    let undefined: Vec<&str> = series
        .lines()
        .filter(|line| line.ends_with("undefined"))
        .collect();
    assert_eq!(undefined.len(), 1, "{series}");
    let summary = read_json(&dir.path().join("gap/audit_summary.json"));
    assert_eq!(summary["windows"]["undefined_impressions"], 1);
}

#[test]
fn audit_warns_on_funnel_violations_but_keeps_rows() {
    let dir = tempfile::tempdir().unwrap();
    let ledger = write(
        dir.path(),
        "bad.csv",
        &format!("{HEADER}2024-01-01,c1,all,male,5,7,0,1.00\n"),
    );
    let out = adparity(&["audit", "--input", &ledger, "--out", "bad"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("clicks exceed impressions"));
    let summary = read_json(&dir.path().join("bad/audit_summary.json"));
    assert_eq!(summary["ingest_warnings"].as_array().unwrap().len(), 1);
    // The row was kept: the whole-range estimate saw its impressions.
    assert_eq!(summary["whole_range"]["impressions"]["n_total"], 5);
}

#[test]
fn audit_reports_provenance_and_spend_units() {
    let dir = tempfile::tempdir().unwrap();
    let ledger = write(dir.path(), "l.csv", &weekly_ledger(1, 60, 40));
    let out = adparity(
        &[
            "audit",
            "--input",
            &ledger,
            "--out",
            "r",
            "--baseline-skew",
            "0.60",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let summary = read_json(&dir.path().join("r/audit_summary.json"));
    assert_eq!(summary["tool"], "adparity");
    assert_eq!(summary["params"]["spend_ci_units"], "cents (heuristic)");
    assert_eq!(summary["input_sha256"].as_str().unwrap().len(), 64);
    // baseline 0.60 on skew 0.60 with 100 labeled units: zero units gained.
    assert_eq!(
        summary["scaled_reach_delta"]["complement_impressions_gained"],
        0
    );
}

#[test]
fn audit_missing_column_exits_1_and_missing_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let truncated = write(
        dir.path(),
        "no_spend.csv",
        "date,campaign_id,targeting,label,impressions,clicks,conversions\n\
         2024-01-01,c1,all,male,5,1,0\n",
    );
    let out = adparity(&["audit", "--input", &truncated], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("header"));

    let out = adparity(&["audit", "--input", "absent.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[test]
fn simulate_is_deterministic_and_emits_all_reports() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "scenario.toml", SCENARIO);
    for run_dir in ["first", "second"] {
        let out = adparity(
            &["simulate", "--config", &config, "--out", run_dir],
            dir.path(),
        );
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for file in [
        "ledger_all_users.csv",
        "ledger_direct_split.csv",
        "ledger_unknown_aware_split.csv",
        "skew_all_users.csv",
        "cpm_table.csv",
        "simulate_summary.json",
    ] {
        let first = std::fs::read(dir.path().join("first").join(file)).unwrap();
        let second = std::fs::read(dir.path().join("second").join(file)).unwrap();
        assert_eq!(first, second, "{file} differs between identical runs");
        assert!(!first.is_empty());
    }
}

#[test]
fn simulate_seed_flag_changes_the_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "scenario.toml", SCENARIO);
    for (run_dir, seed) in [("a", "1"), ("b", "2")] {
        let out = adparity(
            &[
                "simulate", "--config", &config, "--seed", seed, "--out", run_dir,
            ],
            dir.path(),
        );
        assert!(out.status.success());
    }
    let a = std::fs::read(dir.path().join("a/ledger_all_users.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/ledger_all_users.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn simulate_ledgers_round_trip_through_audit() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "scenario.toml", SCENARIO);
    assert!(adparity(
        &["simulate", "--config", &config, "--out", "sim"],
        dir.path()
    )
    .status
    .success());
    let ledger = dir.path().join("sim/ledger_unknown_aware_split.csv");
    let out = adparity(
        &[
            "audit",
            "--input",
            ledger.to_str().unwrap(),
            "--out",
            "audit",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = read_json(&dir.path().join("audit/audit_summary.json"));
    assert!(summary["ingest_warnings"].as_array().unwrap().is_empty());
}

#[test]
fn simulate_zero_horizon_fails_validation_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "bad.toml",
        &SCENARIO.replace("horizon_days = 6", "horizon_days = 0"),
    );
    let out = adparity(&["simulate", "--config", &config], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("run.horizon_days"));
}

#[test]
fn simulate_rejects_unknown_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "typo.toml",
        &SCENARIO.replace("daily_budget_usd", "daily_budget"),
    );
    let out = adparity(&["simulate", "--config", &config], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("daily_budget"));
}

#[test]
fn unknown_aware_split_requires_exclude_targeting() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "no_exclude.toml",
        &format!("{SCENARIO}\n[intervention]\nplatform_supports_exclude_targeting = false\n"),
    );
    let out = adparity(&["simulate", "--config", &config], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exclude"));

    // The direct split needs no exclusion support and still plans fine.
    let out = adparity(
        &[
            "plan",
            "--config",
            &config,
            "--variant",
            "direct_split",
            "--out",
            "p",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = adparity(
        &[
            "plan",
            "--config",
            &config,
            "--variant",
            "unknown_aware_split",
            "--out",
            "p",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

// ---------------------------------------------------------------------------
// montecarlo
// ---------------------------------------------------------------------------

#[test]
fn montecarlo_informative_prior_matches_analytic_mean() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "mc.toml",
        r#"
        [montecarlo]
        draws = 1000
        seed = 5
        priors = ["binomial_informative", "binomial_symmetric"]
        [montecarlo.observed]
        male = 5512
        female = 4488
        unknown = 10000
        "#,
    );
    let out = adparity(
        &["montecarlo", "--config", &config, "--out", "mc"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = read_json(&dir.path().join("mc/montecarlo_summary.json"));
    let priors = summary["priors"].as_array().unwrap();
    let informative = priors
        .iter()
        .find(|p| p["prior"] == "binomial_informative")
        .unwrap();
    // Analytic expectation: (5512 + 10000 * 0.5512) / 20000 = 0.5512.
    assert!((informative["mean"].as_f64().unwrap() - 0.5512).abs() < 1e-3);
    assert_eq!(
        summary["reference"]["known_only_skew"].as_f64().unwrap(),
        0.5512
    );
    assert!(dir
        .path()
        .join("mc/montecarlo_binomial_informative.csv")
        .exists());
    assert!(dir
        .path()
        .join("mc/montecarlo_binomial_symmetric.csv")
        .exists());
}

#[test]
fn montecarlo_zero_unknowns_is_a_point_mass_for_every_prior() {
    let dir = tempfile::tempdir().unwrap();
    let ledger = write(dir.path(), "l.csv", &weekly_ledger(1, 55, 45));
    let out = adparity(
        &[
            "montecarlo",
            "--input",
            &ledger,
            "--out",
            "mc",
            "--draws",
            "200",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = read_json(&dir.path().join("mc/montecarlo_summary.json"));
    for prior in summary["priors"].as_array().unwrap() {
        assert!(prior["error"].is_null(), "{prior}");
        assert!(
            (prior["mean"].as_f64().unwrap() - 0.55).abs() < 1e-12,
            "{prior}"
        );
        assert_eq!(prior["q01"], prior["q99"], "{prior}");
    }
}

#[test]
fn montecarlo_reports_per_prior_errors_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "mc.toml",
        r#"
        [montecarlo]
        priors = ["binomial_informative", "binomial_symmetric"]
        [montecarlo.observed]
        male = 0
        female = 0
        unknown = 50
        "#,
    );
    let out = adparity(
        &["montecarlo", "--config", &config, "--out", "mc"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = read_json(&dir.path().join("mc/montecarlo_summary.json"));
    let priors = summary["priors"].as_array().unwrap();
    let informative = priors
        .iter()
        .find(|p| p["prior"] == "binomial_informative")
        .unwrap();
    assert!(informative["error"]
        .as_str()
        .unwrap()
        .contains("known-labeled"));
    // All 50 units are unknown: skew = U_M / 50 with U_M ~ Binomial(50, 0.5).
    let symmetric = priors
        .iter()
        .find(|p| p["prior"] == "binomial_symmetric")
        .unwrap();
    assert!(symmetric["error"].is_null());
    assert!((symmetric["mean"].as_f64().unwrap() - 0.5).abs() < 0.05);
}

#[test]
fn montecarlo_without_counts_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let out = adparity(&["montecarlo"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("observed counts"));
}

// ---------------------------------------------------------------------------
// plan
// ---------------------------------------------------------------------------

#[test]
fn plan_unknown_aware_split_sums_to_the_original_budget() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "scenario.toml", SCENARIO);
    let out = adparity(
        &[
            "plan",
            "--config",
            &config,
            "--variant",
            "unknown_aware_split",
            "--out",
            "p",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let plan = read_json(&dir.path().join("p/plan.json"));
    let campaigns = plan["campaigns"].as_array().unwrap();
    assert_eq!(campaigns.len(), 4);
    let total: f64 = campaigns
        .iter()
        .map(|c| c["daily_budget_usd"].as_f64().unwrap())
        .sum();
    assert_eq!(total, 8.00);
    assert_eq!(plan["total_budget_usd"], 8.00);
    assert_eq!(plan["schedule"]["a_slots"], 3);
    assert_eq!(plan["schedule"]["b_slots"], 3);
}

#[test]
fn plan_uses_observed_cpms_for_side_budgets() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "scenario.toml",
        &format!(
            "{}\n[intervention]\nvariants = [\"direct_split\"]\n\
             [intervention.observed_cpms]\nmale_usd = 4.00\nfemale_usd = 6.00\n",
            SCENARIO.replace("daily_budget_usd = 8.00", "daily_budget_usd = 65.00")
        ),
    );
    let out = adparity(&["plan", "--config", &config, "--out", "p"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let plan = read_json(&dir.path().join("p/plan.json"));
    let budget_of = |id: &str| -> f64 {
        plan["campaigns"]
            .as_array()
            .unwrap()
            .iter()
            .find(|c| c["campaign_id"] == id)
            .unwrap()["daily_budget_usd"]
            .as_f64()
            .unwrap()
    };
    // Impression-proportional: female side 65 * 3/(2+3) = 39, male side 26.
    assert_eq!(budget_of("c1-male"), 26.00);
    assert_eq!(budget_of("c1-female"), 39.00);
}

// ---------------------------------------------------------------------------
// lint
// ---------------------------------------------------------------------------

#[test]
fn lint_clean_scenario_prints_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "scenario.toml", SCENARIO);
    let out = adparity(&["lint", "--config", &config], dir.path());
    assert!(out.status.success());
    assert!(
        out.stdout.is_empty(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
}

#[test]
fn lint_flags_low_cpa_cold_start_and_self_competition() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "noisy.toml",
        &format!(
            "{}\n\
             [[campaign]]\n\
             id = \"c2\"\n\
             targeting = \"male_unknown\"\n\
             strategy = \"max_conversions\"\n\
             target_cpa_usd = 0.10\n\
             daily_budget_usd = 5.00\n\
             [market.cvr_given_click]\n\
             male = 1.0\n",
            SCENARIO.replace(
                "horizon_days = 6\nseed = 11",
                "horizon_days = 3\nwarm_up_days = 7\nseed = 11"
            )
        ),
    );
    let out = adparity(&["lint", "--config", &config], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    // c2 targets male+unknown; only male converts: implied minimum is
    // 0.50 * 1.0 / 1.0 = 0.50 > 0.10.
    assert!(stdout.contains("advisory[low_target_cpa]"), "{stdout}");
    assert!(stdout.contains("advisory[cold_start]"), "{stdout}");
    assert!(stdout.contains("advisory[self_competition]"), "{stdout}");
}

#[test]
fn lint_flags_uneven_cycles() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "uneven.toml",
        &SCENARIO.replace("horizon_days = 6", "horizon_days = 7"),
    );
    let out = adparity(&["lint", "--config", &config], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("advisory[uneven_cycle]"));
}

// ---------------------------------------------------------------------------
// global behaviors
// ---------------------------------------------------------------------------

#[test]
fn bad_usage_exits_1_and_help_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    let out = adparity(&["audit"], dir.path()); // missing --input
    assert_eq!(out.status.code(), Some(1));
    let out = adparity(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let out = adparity(&["simulate", "--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}
