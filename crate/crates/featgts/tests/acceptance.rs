//! Acceptance suite: one test per release criterion, each printing a
//! PASS line (run with `--nocapture` to see them). Criteria cover the
//! conservativity verdicts on the bundled model family, configuration
//! enumeration, derive/merge equivalence, matching-oracle agreement,
//! simulation invariants at population scale, projection soundness, the
//! statistical relevance test, and the command-line contract.

mod common;

use common::{iterated_merge, oracle_find_matches, random_instance};
use featgts::cli::{
    events_csv, run_cli, EXIT_BAD_CONFIG, EXIT_CONSISTENCY, EXIT_NOT_CONSERVATIVE, EXIT_OK,
    EXIT_RELEVANT, EXIT_RUNTIME, EXIT_USAGE_OR_PARSE,
};
use featgts::compose::{check_extension, gts_isomorphic, is_conservative};
use featgts::dsl::{parse_model, print_model};
use featgts::feature::{derive_variant, is_valid, valid_configurations, Configuration};
use featgts::graph::AttrValue;
use featgts::init::{generate_init, InitSpec, NetworkGen};
use featgts::models;
use featgts::rewrite::{find_matches, validate_match, Gts};
use featgts::rng::SplitMix64;
use featgts::sim::{
    compare_variants, observe, project_trajectory, simulate, validate_trajectory, Predicate,
    SimConfig, Trajectory,
};

fn pass(n: u32, what: &str) {
    println!("criterion {n} ({what}): PASS");
}

fn variant(config: &Configuration) -> Gts {
    derive_variant(&models::sir_feature_model(), config).unwrap()
}

fn sym(s: &str) -> AttrValue {
    AttrValue::Symbol(s.into())
}

fn init_spec(population: usize, infected: usize, network: NetworkGen, seed: u64) -> InitSpec {
    InitSpec {
        population,
        infected,
        grid: None,
        network,
        seed,
    }
}

#[test]
fn criterion_1_conservativity_verdicts() {
    let basic = variant(&models::basic_config());
    let location = variant(&models::location_config());
    let network = variant(&models::network_config());
    let dynamics = variant(&models::dynamics_config());

    let verdict = |base: &Gts, ext: &Gts| is_conservative(&check_extension(base, ext).unwrap());

    assert!(verdict(&basic, &location).conservative, "SIR into location");
    assert!(verdict(&basic, &network).conservative, "SIR into network");
    assert!(verdict(&basic, &dynamics).conservative, "SIR into dynamics");

    let report = verdict(&network, &dynamics);
    assert!(!report.conservative, "network into dynamics");
    let offenders: Vec<&str> = report
        .offending_rules
        .iter()
        .map(|(name, _)| name.as_str())
        .collect();
    assert_eq!(offenders, vec!["desert"], "desert is the sole offender");
    let (_, effect) = &report.offending_rules[0];
    assert_eq!(effect.deleted_edge_types.get("link"), Some(&1));
    assert_eq!(effect.created_edge_types.get("link"), Some(&1));
    assert!(effect.attr_changes.is_empty());

    pass(1, "conservativity verdicts");
}

#[test]
fn criterion_2_configuration_enumeration() {
    let fd = models::sir_diagram();
    let configs = valid_configurations(&fd).unwrap();
    let mut expected = vec![
        Configuration::new(["SIR"]),
        Configuration::new(["SIR", "location"]),
        Configuration::new(["SIR", "network"]),
        Configuration::new(["SIR", "network", "dynamics"]),
        Configuration::new(["SIR", "location", "network"]),
        Configuration::new(["SIR", "location", "network", "dynamics"]),
    ];
    expected.sort();
    assert_eq!(configs, expected, "exactly the six valid configurations");
    assert!(
        !is_valid(&fd, &Configuration::new(["SIR", "dynamics"])),
        "dynamics without network must be rejected"
    );
    pass(2, "configuration enumeration");
}

#[test]
fn criterion_3_derive_merge_equivalence() {
    let fm = models::sir_feature_model();
    for config in valid_configurations(fm.diagram()).unwrap() {
        let derived = derive_variant(&fm, &config).unwrap();
        let merged = iterated_merge(&fm, &config);
        assert!(
            gts_isomorphic(&derived, &merged),
            "derive and iterated merge disagree on {config}"
        );
    }
    pass(3, "derive/merge equivalence on all six configurations");
}

#[test]
fn criterion_4_matching_oracle_equivalence() {
    let gts = variant(&models::full_config());
    let tg = gts.type_graph();
    let mut rng = SplitMix64::new(0xacce97);
    let mut total = 0usize;
    for _ in 0..1000 {
        let host = random_instance(&mut rng, tg, 6, 6);
        for rule in gts.rules() {
            let found = find_matches(tg, rule, &host);
            let expected = oracle_find_matches(rule, &host);
            assert_eq!(found, expected, "rule {} disagrees with oracle", rule.name());
            total += found.len();
            for m in &found {
                validate_match(rule, &host, m).expect("returned match validates");
            }
        }
    }
    assert!(total > 1000, "suspiciously few matches: {total}");
    pass(4, "matching equals brute force on 1000 random instances");
}

/// Shared invariant block for criterion 5: agent conservation, S/I/R
/// partition, monotone S and R.
fn check_epidemic_invariants(gts: &Gts, trajectories: &[Trajectory], population: u64) {
    for trajectory in trajectories {
        validate_trajectory(gts, trajectory).unwrap();
        let s = observe(gts, trajectory, &Predicate::new("Agent", "s", sym("S"))).unwrap();
        let i = observe(gts, trajectory, &Predicate::new("Agent", "s", sym("I"))).unwrap();
        let r = observe(gts, trajectory, &Predicate::new("Agent", "s", sym("R"))).unwrap();
        let n = s.samples.len();
        assert_eq!(trajectory.events.len() + 1, n);
        for k in 0..n {
            assert_eq!(
                s.samples[k].1 + i.samples[k].1 + r.samples[k].1,
                population,
                "S+I+R must partition the population"
            );
        }
        for k in 1..n {
            assert!(s.samples[k].1 <= s.samples[k - 1].1, "S must not increase");
            assert!(r.samples[k].1 >= r.samples[k - 1].1, "R must not decrease");
        }
    }
}

#[test]
fn criterion_5_simulation_invariants() {
    let n = 200usize;
    let runs = 50usize;
    let fm = models::sir_feature_model();

    // Variants whose propensity dies out once the infection is gone: every
    // run must reach zero total propensity before the horizon.
    let absorbing: [(&Configuration, NetworkGen); 3] = [
        (&models::basic_config(), NetworkGen::None),
        (&models::network_config(), NetworkGen::Ring { d: 2 }),
        (&models::dynamics_config(), NetworkGen::Ring { d: 2 }),
    ];
    for (config, network) in absorbing {
        let gts = derive_variant(&fm, config).unwrap();
        let init = generate_init(&init_spec(n, 5, network, 42), gts.type_graph()).unwrap();
        let cfg = SimConfig::new(1e4, 1_000_000, 1234, runs).unwrap();
        let trajectories = simulate(&gts, &init, &cfg).unwrap();
        assert_eq!(trajectories.len(), runs);
        for t in &trajectories {
            assert_eq!(t.final_state.node_count(), n, "agent count constant");
            assert_eq!(
                t.final_state.count_where("Agent", "s", &sym("I")),
                0,
                "{config}: zero propensity requires the infection to die out \
                 (events: {}, ended below horizon)",
                t.events.len()
            );
            assert!(t.events.len() < 1_000_000);
            assert!(t.events.last().is_none_or(|e| e.time <= 1e4));
        }
        check_epidemic_invariants(&gts, &trajectories, n as u64);
    }

    // Movement variants never run out of propensity; their runs are capped
    // and checked for the same conservation and monotonicity invariants.
    for config in [models::location_config(), models::full_config()] {
        let gts = derive_variant(&fm, &config).unwrap();
        let network = if gts.type_graph().edge_signature("link").is_some() {
            NetworkGen::Ring { d: 2 }
        } else {
            NetworkGen::None
        };
        let init = generate_init(&init_spec(n, 5, network, 43), gts.type_graph()).unwrap();
        let cfg = SimConfig::new(1e4, 300, 77, runs).unwrap();
        let trajectories = simulate(&gts, &init, &cfg).unwrap();
        for t in &trajectories {
            assert_eq!(t.final_state.node_count(), n);
        }
        check_epidemic_invariants(&gts, &trajectories, n as u64);
    }

    // Identical seeds reproduce byte-identical event CSVs.
    let gts = derive_variant(&fm, &models::network_config()).unwrap();
    let init = generate_init(
        &init_spec(n, 5, NetworkGen::Ring { d: 2 }, 42),
        gts.type_graph(),
    )
    .unwrap();
    let cfg = SimConfig::new(1e4, 1_000_000, 555, runs).unwrap();
    let first = events_csv(&simulate(&gts, &init, &cfg).unwrap());
    let second = events_csv(&simulate(&gts, &init, &cfg).unwrap());
    assert_eq!(first, second, "event CSVs must be byte-identical");

    pass(5, "simulation invariants at N=200 over 50 runs");
}

#[test]
fn criterion_6_zero_edge_network_endpoint() {
    let k = 5usize;
    let gts = variant(&models::network_config());
    let init = generate_init(
        &init_spec(100, k, NetworkGen::UniformRandom { p: 0.0 }, 7),
        gts.type_graph(),
    )
    .unwrap();
    assert_eq!(init.edge_count(), 0);
    let cfg = SimConfig::new(1e4, 1_000_000, 99, 50).unwrap();
    let trajectories = simulate(&gts, &init, &cfg).unwrap();
    for (run, t) in trajectories.iter().enumerate() {
        assert!(
            t.events.iter().all(|e| e.rule == "recover"),
            "run {run}: infections without links"
        );
        assert_eq!(
            t.final_state.count_where("Agent", "s", &sym("R")),
            k,
            "run {run}: final R must equal the seeded k"
        );
        assert_eq!(t.final_state.count_where("Agent", "s", &sym("S")), 100 - k);
    }
    pass(6, "zero-edge network confines the epidemic in 100% of runs");
}

#[test]
fn criterion_7_projection_soundness() {
    let fm = models::sir_feature_model();
    let base = derive_variant(&fm, &models::basic_config()).unwrap();
    let full = derive_variant(&fm, &models::full_config()).unwrap();
    let witness = check_extension(&base, &full).unwrap();
    assert!(is_conservative(&witness).conservative);

    let init = generate_init(
        &init_spec(60, 3, NetworkGen::Ring { d: 2 }, 11),
        full.type_graph(),
    )
    .unwrap();
    let cfg = SimConfig::new(1e4, 300, 2024, 50).unwrap();
    let trajectories = simulate(&full, &init, &cfg).unwrap();
    assert_eq!(trajectories.len(), 50);

    let mut movement_seen = false;
    let mut epidemic_seen = false;
    for t in &trajectories {
        let projected = project_trajectory(t, &witness).unwrap();
        // projecting away desert and movement, keeping infect and recover
        let kept = t
            .events
            .iter()
            .filter(|e| matches!(e.rule.as_str(), "infect" | "recover"))
            .count();
        movement_seen |= t.events.len() > kept;
        epidemic_seen |= kept > 0;
        assert_eq!(projected.events.len(), kept);
        assert!(projected
            .events
            .iter()
            .all(|e| matches!(e.rule.as_str(), "infect" | "recover")));
        // the projected trajectory replays as a valid base trajectory, every
        // kept event with a valid match at its point in the replay
        validate_trajectory(&base, &projected).unwrap();
        let mut state = projected.initial.clone();
        for event in &projected.events {
            let rule = base.rule(&event.rule).unwrap();
            validate_match(rule, &state, &event.matched).unwrap();
            state =
                featgts::rewrite::apply(base.type_graph(), rule, &state, &event.matched).unwrap();
        }
        assert_eq!(state, projected.final_state);
    }
    assert!(movement_seen, "no movement or desert events fired at all");
    assert!(epidemic_seen, "no epidemic events fired at all");
    pass(7, "50 projected trajectories replay as valid base behaviour");
}

/// Same system with one rule's rate replaced.
fn with_rate(gts: &Gts, rule_name: &str, rate: f64) -> Gts {
    let rules = gts
        .rules()
        .map(|r| {
            if r.name() == rule_name {
                r.with_rate(rate).unwrap()
            } else {
                r.clone()
            }
        })
        .collect();
    Gts::new(gts.name(), gts.type_graph().clone(), rules).unwrap()
}

#[test]
fn criterion_8_relevance_self_test_and_positive_control() {
    let fm = models::sir_feature_model();
    // A per-pair infection rate near criticality keeps the final epidemic
    // size genuinely random, so the self-test exercises the statistic on a
    // spread distribution instead of a near-point mass.
    let basic = with_rate(
        &derive_variant(&fm, &models::basic_config()).unwrap(),
        "infect",
        0.03,
    );
    let network = with_rate(
        &derive_variant(&fm, &models::network_config()).unwrap(),
        "infect",
        0.03,
    );
    let w_basic = check_extension(&basic, &basic).unwrap();
    let w_network = check_extension(&basic, &network).unwrap();
    let predicate = Predicate::new("Agent", "s", sym("R"));
    let runs = 25usize;
    let alpha = 0.01;

    // Self test: the same variant against an independently seeded copy of
    // itself must come out not-relevant in at least 95% of 50 repetitions.
    let mut not_relevant = 0usize;
    for rep in 0..50u64 {
        let init = generate_init(
            &init_spec(60, 3, NetworkGen::None, 900 + rep),
            basic.type_graph(),
        )
        .unwrap();
        let seed_a = 10_000 + rep * 1_000;
        let seed_b = seed_a + 500;
        let a = simulate(
            &basic,
            &init,
            &SimConfig::new(1e4, 1_000_000, seed_a, runs).unwrap(),
        )
        .unwrap();
        let b = simulate(
            &basic,
            &init,
            &SimConfig::new(1e4, 1_000_000, seed_b, runs).unwrap(),
        )
        .unwrap();
        let report = compare_variants(&a, &b, &w_basic, &w_basic, &predicate, alpha).unwrap();
        if !report.relevant {
            not_relevant += 1;
        }
    }
    assert!(
        not_relevant >= 48,
        "self-comparison flagged relevant too often: {}/50 not-relevant",
        not_relevant
    );

    // Positive control: complete mixing against a zero-edge network variant
    // must come out relevant.
    let init_basic =
        generate_init(&init_spec(60, 3, NetworkGen::None, 5), basic.type_graph()).unwrap();
    let init_net = generate_init(
        &init_spec(60, 3, NetworkGen::UniformRandom { p: 0.0 }, 5),
        network.type_graph(),
    )
    .unwrap();
    let a = simulate(
        &basic,
        &init_basic,
        &SimConfig::new(1e4, 1_000_000, 1, runs).unwrap(),
    )
    .unwrap();
    let b = simulate(
        &network,
        &init_net,
        &SimConfig::new(1e4, 1_000_000, 2, runs).unwrap(),
    )
    .unwrap();
    let report = compare_variants(&a, &b, &w_basic, &w_network, &predicate, alpha).unwrap();
    assert!(report.relevant, "{report}");
    assert_eq!(report.side_b.max, 3.0, "zero-edge side is pinned at R = k");

    pass(8, "relevance self-test >= 48/50 and positive control relevant");
}

#[test]
fn criterion_9_cli_contract() {
    let run = |args: &[&str]| -> (i32, String, String) {
        let args: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        let mut stdout = Vec::new();
        let mut stderr = Vec::new();
        let code = run_cli(&args, &mut stdout, &mut stderr);
        (
            code,
            String::from_utf8(stdout).unwrap(),
            String::from_utf8(stderr).unwrap(),
        )
    };

    // Round-trip parsing on the bundled fixture.
    let text = std::fs::read_to_string("fixtures/sir.fgts").unwrap();
    let doc = parse_model(&text).unwrap();
    let reparsed = parse_model(&print_model(&doc)).unwrap();
    assert_eq!(doc, reparsed, "print/parse round-trip");
    assert_eq!(
        doc.to_feature_model().unwrap(),
        models::sir_feature_model(),
        "fixture and programmatic model agree"
    );

    // Documented exit codes on the malformed-input suite.
    assert_eq!(run(&["validate", "fixtures/sir.fgts"]).0, EXIT_OK);
    assert_eq!(
        run(&["validate", "fixtures/bad/syntax.fgts"]).0,
        EXIT_USAGE_OR_PARSE
    );
    assert_eq!(
        run(&["validate", "fixtures/bad/undeclared_type.fgts"]).0,
        EXIT_CONSISTENCY
    );
    assert_eq!(
        run(&["validate", "fixtures/bad/inconsistent.fgts"]).0,
        EXIT_CONSISTENCY
    );
    assert_eq!(run(&["validate", "missing.fgts"]).0, EXIT_RUNTIME);
    assert_eq!(
        run(&["derive", "fixtures/sir.fgts", "--features", "SIR,dynamics"]).0,
        EXIT_BAD_CONFIG
    );

    // The desert diagnosis, verbatim.
    let (code, out, _) = run(&[
        "check-conservative",
        "fixtures/sir.fgts",
        "--base",
        "SIR,network",
        "--ext",
        "SIR,network,dynamics",
    ]);
    assert_eq!(code, EXIT_NOT_CONSERVATIVE);
    assert_eq!(out, "NOT conservative: desert (deletes link, creates link)\n");

    // Determinism of the simulate path, byte for byte, through the CLI.
    let sim_args = [
        "simulate",
        "fixtures/sir.fgts",
        "--features",
        "SIR",
        "--init",
        "30,3",
        "--runs",
        "1",
        "--seed",
        "7",
        "--out",
        "-",
    ];
    let (code_a, out_a, _) = run(&sim_args);
    let (code_b, out_b, _) = run(&sim_args);
    assert_eq!(code_a, EXIT_OK);
    assert_eq!(code_b, EXIT_OK);
    assert_eq!(out_a, out_b, "identical seeds give identical CSV bytes");

    // A relevant comparison exits with code 2.
    let (code, out, err) = run(&[
        "compare",
        "fixtures/sir.fgts",
        "--features-a",
        "SIR",
        "--features-b",
        "SIR,network",
        "--base",
        "SIR",
        "--init-a",
        "30,3",
        "--init-b",
        "30,3,0.0",
        "--runs",
        "8",
        "--seed",
        "21",
        "--predicate",
        "Agent.s=R",
    ]);
    assert_eq!(code, EXIT_RELEVANT, "stdout: {out}\nstderr: {err}");

    pass(9, "command-line contract");
}
