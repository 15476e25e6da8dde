//! Calibration explorer for the synthetic suite. Prints the negative-S
//! distribution, mean trials per policy across prior-noise levels, and
//! the noise-tier degradation of the feedback policy. Used to pick the
//! default prior noise and sanity-check the policy orderings.

use hypobench::benchgen::{generate_suite, GenParams};
use hypobench::config::RunConfig;
use hypobench::harness::run_suite;
use hypobench::landscape::{pool_scores, LinkFunction, NoiseSpec, NoiseTier};
use hypobench::policies::PolicyKind;
use hypobench::similarity::CosineScorer;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mode = args.get(1).map(String::as_str).unwrap_or("all");

    let params = GenParams::default();
    let dataset = generate_suite(51, &params, 2024).unwrap();

    if mode == "all" || mode == "sdist" {
        let mut s_values = Vec::new();
        for problem in &dataset.problems {
            let gt = &problem.ground_truth.hypothesis_id;
            for (id, s) in pool_scores(&CosineScorer, problem).unwrap() {
                if &id != gt {
                    s_values.push(s);
                }
            }
        }
        s_values.sort_by(|a, b| a.total_cmp(b));
        let n = s_values.len();
        let frac_above = |t: f64| s_values.iter().filter(|s| **s > t).count() as f64 / n as f64;
        println!("negatives: {n}");
        println!(
            "S quantiles: p10={:.4} p50={:.4} p90={:.4} max={:.6}",
            s_values[n / 10],
            s_values[n / 2],
            s_values[9 * n / 10],
            s_values[n - 1]
        );
        println!(
            "frac S>0.90 = {:.4}, S>0.95 = {:.4}, S>0.99 = {:.4}, S==0 = {:.4}",
            frac_above(0.90),
            frac_above(0.95),
            frac_above(0.99),
            s_values.iter().filter(|s| **s == 0.0).count() as f64 / n as f64
        );
    }

    if mode == "all" || mode == "eta" {
        for eta in [1.5, 1.55, 1.6, 1.65, 1.7] {
            let config = RunConfig {
                link: LinkFunction::default_gaussian(),
                noise: NoiseSpec::none(0),
                policies: vec![PolicyKind::Preexperiment],
                prior_eta: eta,
                reps: 30,
                base_seed: 42,
                ..RunConfig::default()
            };
            let (report, _) = run_suite(&dataset, &config).unwrap();
            println!(
                "eta={eta:>5}: preexperiment mean = {:.3}",
                report.policy_mean("preexperiment").unwrap()
            );
        }
    }

    if mode == "all" || mode == "policies" {
        let config = RunConfig {
            link: LinkFunction::default_gaussian(),
            noise: NoiseSpec::none(0),
            policies: PolicyKind::all().to_vec(),
            prior_eta: 1.55,
            reps: 30,
            base_seed: 42,
            ..RunConfig::default()
        };
        let (report, _) = run_suite(&dataset, &config).unwrap();
        for policy in &report.policies {
            println!(
                "noise none  {:<32} mean = {:.3}",
                policy.policy, policy.mean_trials
            );
        }
    }

    if mode == "all" || mode == "csweep" {
        for (c, v0) in [(0.5, 0.5), (0.2, 0.5), (0.1, 0.5), (0.05, 0.5), (0.0, 0.5), (0.1, 0.4), (0.1, 0.3)] {
            let mut params = hypobench::policies::PolicyParams::default();
            params.c = c;
            params.v0 = v0;
            let config = RunConfig {
                link: LinkFunction::default_gaussian(),
                noise: NoiseSpec::none(0),
                policies: vec![PolicyKind::Csx, PolicyKind::CsxWoClustering],
                policy_params: params,
                prior_eta: 1.55,
                reps: 30,
                base_seed: 42,
                ..RunConfig::default()
            };
            let (report, _) = run_suite(&dataset, &config).unwrap();
            println!(
                "c={c:<5} v0={v0:<4}: csx = {:.3}, wo_clustering = {:.3}",
                report.policy_mean("csx").unwrap(),
                report.policy_mean("csx_wo_clustering").unwrap()
            );
        }
    }

    if mode == "all" || mode == "scale" {
        let reps: usize = std::env::var("REPS").ok().and_then(|v| v.parse().ok()).unwrap_or(50);
        let seed: u64 = std::env::var("SEED").ok().and_then(|v| v.parse().ok()).unwrap_or(42);
        let big = GenParams {
            n_candidates: 128,
            ..GenParams::default()
        };
        let ds128 = generate_suite(51, &big, 2024).unwrap();
        for (label, ds) in [("N=64", &dataset), ("N=128", &ds128)] {
            let config = RunConfig {
                link: LinkFunction::default_gaussian(),
                noise: NoiseSpec::none(0),
                policies: vec![PolicyKind::Uninformed, PolicyKind::Preexperiment, PolicyKind::Csx],
                prior_eta: 1.55,
                reps,
                base_seed: 42,
                ..RunConfig::default()
            };
            let (report, _) = run_suite(ds, &config).unwrap();
            let un = report.policy_mean("uninformed").unwrap();
            let csx = report.policy_mean("csx").unwrap();
            println!(
                "{label}: uninformed={un:.3} preexperiment={:.3} csx={csx:.3} ratio={:.3}",
                report.policy_mean("preexperiment").unwrap(),
                csx / un
            );
        }
    }

    if mode == "all" || mode == "grid" {
        use hypobench::policies::PolicyParams;
        for (mix, rho, tau) in [
            ((1.0, 1.0, 1.0), 0.3, 0.8),
            ((1.0, 1.0, 4.0), 0.3, 0.8),
            ((1.0, 1.0, 4.0), 0.5, 0.8),
            ((1.0, 1.0, 4.0), 0.5, 0.95),
            ((1.0, 1.0, 6.0), 0.5, 0.95),
            ((1.0, 1.0, 4.0), 0.6, 0.95),
            ((0.5, 0.5, 5.0), 0.5, 0.95),
        ] {
            let gp = GenParams {
                mutation_mix: mix,
                mutation_rate: rho,
                ..GenParams::default()
            };
            let ds = generate_suite(51, &gp, 2024).unwrap();
            let mut params = PolicyParams::default();
            params.tau = tau;
            let config = RunConfig {
                link: LinkFunction::default_gaussian(),
                noise: NoiseSpec::none(0),
                policies: vec![
                    PolicyKind::Csx,
                    PolicyKind::CsxWoClustering,
                    PolicyKind::CsxWoClusteringAnalysis,
                    PolicyKind::Preexperiment,
                ],
                policy_params: params,
                prior_eta: 1.55,
                reps: 20,
                base_seed: 42,
                ..RunConfig::default()
            };
            let (report, _) = run_suite(&ds, &config).unwrap();
            println!(
                "mix={mix:?} rho={rho} tau={tau}: csx={:.2} wo={:.2} woCA={:.2} pre={:.2}",
                report.policy_mean("csx").unwrap(),
                report.policy_mean("csx_wo_clustering").unwrap(),
                report.policy_mean("csx_wo_clustering_analysis").unwrap(),
                report.policy_mean("preexperiment").unwrap()
            );
        }
    }

    if mode == "all" || mode == "hist" {
        let config = RunConfig {
            link: LinkFunction::default_gaussian(),
            noise: NoiseSpec::none(0),
            policies: vec![PolicyKind::Csx, PolicyKind::CsxWoClustering],
            prior_eta: 1.55,
            reps: 1,
            base_seed: 42,
            ..RunConfig::default()
        };
        let (_, episodes) = run_suite(&dataset, &config).unwrap();
        for kind in ["csx", "csx_wo_clustering"] {
            let mut trials: Vec<usize> = episodes
                .episodes
                .iter()
                .filter(|e| e.policy_name == kind)
                .map(|e| e.n_trials)
                .collect();
            trials.sort_unstable();
            println!(
                "{kind}: min={} p25={} p50={} p75={} p90={} max={}",
                trials[0],
                trials[trials.len() / 4],
                trials[trials.len() / 2],
                trials[3 * trials.len() / 4],
                trials[9 * trials.len() / 10],
                trials[trials.len() - 1]
            );
        }
        // per-trial trace of one problem under csx
        let problem = &dataset.problems[0];
        let sim_cfg = config.simulator_config();
        let ep = hypobench::harness::run_episode(problem, PolicyKind::Csx, &config, &sim_cfg, 99).unwrap();
        println!("csx trace on problem 0 ({} trials):", ep.n_trials);
        for (i, (id, r)) in ep.trajectory.iter().enumerate() {
            println!("  t={:<3} {id} r={r:.4}", i + 1);
        }
        let ep = hypobench::harness::run_episode(problem, PolicyKind::CsxWoClustering, &config, &sim_cfg, 99).unwrap();
        println!("wo_clustering trace on problem 0 ({} trials):", ep.n_trials);
        for (i, (id, r)) in ep.trajectory.iter().enumerate() {
            println!("  t={:<3} {id} r={r:.4}", i + 1);
        }
    }

    if mode == "all" || mode == "tiers" {
        let reps: usize = std::env::var("REPS").ok().and_then(|v| v.parse().ok()).unwrap_or(30);
        for tier in [NoiseTier::Simple, NoiseTier::Medium, NoiseTier::Complex] {
            let config = RunConfig {
                link: LinkFunction::default_gaussian(),
                noise: NoiseSpec::preset(tier, 7),
                policies: vec![
                    PolicyKind::Csx,
                    PolicyKind::CsxWoClustering,
                    PolicyKind::CsxWoClusteringAnalysis,
                ],
                prior_eta: 1.55,
                reps,
                base_seed: 42,
                ..RunConfig::default()
            };
            let (report, _) = run_suite(&dataset, &config).unwrap();
            for policy in &report.policies {
                println!(
                    "noise {:<8} {:<32} mean = {:.3}",
                    tier.name(),
                    policy.policy,
                    policy.mean_trials
                );
            }
        }
    }
}
