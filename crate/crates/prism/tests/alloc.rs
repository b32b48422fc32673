//! Flow-allocation tests against hand-derived traces of the three diagrams
//! with non-trivial module structure: the two-robot delivery activity (two
//! concurrent flows, three loop merges), the digital camera (fork/join with a
//! tuning loop), and the meeting scheduler (retry loop before a fork).

use admc_core::parse_activity_file;
use admc_prism::alloc::preprocess;

fn load(path: &str) -> admc_core::Activity {
    let text = std::fs::read_to_string(format!("{}/../../{}", env!("CARGO_MANIFEST_DIR"), path))
        .expect("fixture readable");
    let file = parse_activity_file(path, &text).expect("fixture parses");
    file.activities.into_iter().next().expect("one activity")
}

#[test]
fn pal_visit_order_is_breadth_first_with_deferred_merges() {
    let act = load("fixtures/pal.adl");
    let mm = preprocess(&act);
    let expected = [
        "I0",
        "Prepare",
        "F1",
        "R1ToCorA",
        "R2ToCorC",
        "R1ToDoorAB",
        "R2ToDoorCD",
        "D1",
        "D6",
        "R2DeliveredRoomD",
        "R2Stuck",
        "M5",
        "J1",
        "AF",
        "M3",
        "R1Stuck",
        "M4",
        "M1",
        "D2",
        "R1ToCorBThrDoor1",
        "R1ToCorBThrDoor2",
        "D3",
        "D4",
        "M2",
        "R1ToRoomD",
        "D5",
        "R1DeliveredRoomD",
    ];
    assert_eq!(mm.visit_order, expected);
}

#[test]
fn pal_allocates_two_modules_with_expected_nodes() {
    let act = load("fixtures/pal.adl");
    let mm = preprocess(&act);
    let live = mm.live_modules();
    assert_eq!(live.len(), 2);
    assert_eq!(mm.modules[live[0]].name, "PAL::I0::E1");
    assert_eq!(mm.modules[live[1]].name, "PAL::F1::E25");
    assert_eq!(mm.entry_count(), 34);

    // Node order doubles as the numbering of the program-counter constants.
    let mod1 = mm.module_nodes(live[0]);
    assert_eq!(
        mod1,
        vec![
            "I0",
            "Prepare",
            "F1",
            "R1ToCorA",
            "R1ToDoorAB",
            "D1",
            "M1",
            "M3",
            "D2",
            "R1ToCorBThrDoor1",
            "R1ToCorBThrDoor2",
            "D3",
            "D4",
            "M2",
            "R1ToRoomD",
            "D5",
            "R1DeliveredRoomD",
            "M4",
            "R1Stuck",
            "J1",
        ]
    );
    let mod2 = mm.module_nodes(live[1]);
    assert_eq!(
        mod2,
        vec![
            "R2ToCorC",
            "R2ToDoorCD",
            "D6",
            "R2DeliveredRoomD",
            "R2Stuck",
            "M5",
            "J1",
            "AF",
        ]
    );
}

#[test]
fn pal_entry_table_matches_hand_derivation() {
    let act = load("fixtures/pal.adl");
    let mm = preprocess(&act);
    let m1 = "PAL::I0::E1";
    let m2 = "PAL::F1::E25";
    let expected: Vec<(&str, &str, &str)> = vec![
        ("AF", "E33", m2),
        ("D1", "E5", m1),
        ("D2", "E8", m1),
        ("D3", "E13", m1),
        ("D4", "E15", m1),
        ("D5", "E20", m1),
        ("D6", "E27", m2),
        ("F1", "E2", m1),
        ("I0", "E1", m1),
        ("J1", "E24", m1),
        ("J1", "E32", m2),
        ("M1", "E14", m1),
        ("M1", "E16", m1),
        ("M1", "E6", m1),
        ("M2", "E17", m1),
        ("M2", "E18", m1),
        ("M3", "E21", m1),
        ("M3", "E7", m1),
        ("M4", "E10", m1),
        ("M4", "E23", m1),
        ("M5", "E29", m2),
        ("M5", "E31", m2),
        ("Prepare", "E1", m1),
        ("R1DeliveredRoomD", "E22", m1),
        ("R1Stuck", "E9", m1),
        ("R1ToCorA", "E3", m1),
        ("R1ToCorBThrDoor1", "E11", m1),
        ("R1ToCorBThrDoor2", "E12", m1),
        ("R1ToDoorAB", "E4", m1),
        ("R1ToRoomD", "E19", m1),
        ("R2DeliveredRoomD", "E28", m2),
        ("R2Stuck", "E30", m2),
        ("R2ToCorC", "E25", m2),
        ("R2ToDoorCD", "E26", m2),
    ];
    let got = mm.sorted_entries();
    let got_view: Vec<(&str, &str, &str)> = got
        .iter()
        .map(|(n, e, m)| (n.as_str(), e.as_str(), m.as_str()))
        .collect();
    assert_eq!(got_view, expected);

    let dump = mm.dump();
    assert!(dump.starts_with("(AF, E33) -> PAL::F1::E25\n"));
    assert_eq!(dump.lines().count(), 34);
}

#[test]
fn pal_join_advances_in_second_flow() {
    let act = load("fixtures/pal.adl");
    let mm = preprocess(&act);
    let live = mm.live_modules();
    // The join's continuation entry (AF, E33) belongs to the second flow, so
    // it is the module that moves on while the first one deactivates.
    assert_eq!(mm.owner_of_entry("AF", "E33"), Some(live[1]));
    assert_eq!(mm.owner_of_entry("J1", "E24"), Some(live[0]));
    assert_eq!(mm.owner_of_entry("J1", "E32"), Some(live[1]));
    // Loop merges dissolve into the first flow's module.
    for node in ["M1", "M2", "M3", "M4"] {
        assert_eq!(mm.modules_defining(node), vec![live[0]], "merge {}", node);
    }
    assert_eq!(mm.modules_defining("M5"), vec![live[1]]);
    // J1 sits in both flows.
    assert_eq!(mm.modules_defining("J1"), vec![live[0], live[1]]);
}

#[test]
fn dc_allocation_matches_hand_derivation() {
    let act = load("fixtures/dc.adl");
    let mm = preprocess(&act);
    assert_eq!(
        mm.visit_order,
        vec![
            "I0",
            "PowerOn",
            "F1",
            "AutoFocus",
            "TakePicture",
            "J1",
            "SavePhoto",
            "AF",
            "M1",
            "SetExposure",
            "D1",
        ]
    );
    let live = mm.live_modules();
    assert_eq!(live.len(), 2);
    assert_eq!(mm.modules[live[0]].name, "dc::I0::E1");
    assert_eq!(mm.modules[live[1]].name, "dc::F1::E9");
    assert_eq!(
        mm.module_nodes(live[0]),
        vec![
            "I0",
            "PowerOn",
            "F1",
            "AutoFocus",
            "M1",
            "SetExposure",
            "D1",
            "J1",
        ]
    );
    assert_eq!(
        mm.module_nodes(live[1]),
        vec!["TakePicture", "J1", "SavePhoto", "AF"]
    );
    // The tuning loop's merge resolved into the first module.
    assert_eq!(mm.owner_of_entry("SetExposure", "E5"), Some(live[0]));
    // The join advances via the shutter flow.
    assert_eq!(mm.owner_of_entry("SavePhoto", "E11"), Some(live[1]));
}

#[test]
fn tm_allocation_matches_hand_derivation() {
    let act = load("fixtures/tm.adl");
    let mm = preprocess(&act);
    let live = mm.live_modules();
    assert_eq!(live.len(), 2);
    assert_eq!(mm.modules[live[0]].name, "TM::I0::E1");
    assert_eq!(mm.modules[live[1]].name, "TM::F1::E12");
    assert_eq!(
        mm.module_nodes(live[0]),
        vec![
            "I0",
            "receiveRequest",
            "M1",
            "checkSchedule",
            "D1",
            "makeCall",
            "requestMeeting",
            "F1",
            "notifyAttendees",
            "logOutcome",
            "FF1",
        ]
    );
    assert_eq!(mm.module_nodes(live[1]), vec!["confirmBooking", "AF"]);
    // The retry merge dissolved into the main module; the fork is owned by
    // the main module, so the confirmation flow is fork-activated.
    assert_eq!(mm.modules_defining("M1"), vec![live[0]]);
    assert_eq!(mm.module_of("F1"), Some(live[0]));
}

/// Two merges feeding each other through a decision loop can never dissolve
/// into a single module; both stay as modules of their own and the merge
/// traffic crosses module boundaries.
#[test]
fn mutually_waiting_merges_are_promoted() {
    let text = r#"
activity PR(p: real = 0.5) {
    initial I0;
    action A { duration = 1.0; };
    merge M1;
    action B { duration = 1.0; };
    merge M2;
    action C { duration = 1.0; };
    decision D1;
    edge E1: I0 -> A;
    edge E2: A -> M1;
    edge E3: M1 -> B;
    edge E4: B -> M2;
    edge E5: M2 -> C;
    edge E6: C -> D1;
    edge E7: D1 -> M1 { prob = p; };
    edge E8: D1 -> M2 { prob = 1 - p; };
}
"#;
    let file = parse_activity_file("inline.adl", text).expect("inline activity parses");
    let act = &file.activities[0];
    let mm = preprocess(act);
    assert_eq!(
        mm.visit_order,
        vec!["I0", "A", "M1", "B", "M2", "C", "D1"]
    );
    let live = mm.live_modules();
    assert_eq!(live.len(), 3, "both provisional modules survive");
    assert_eq!(mm.modules[live[0]].name, "PR::I0::E1");
    assert_eq!(mm.modules[live[1]].name, "PR::M1::E3");
    assert_eq!(mm.modules[live[2]].name, "PR::M2::E5");
    assert_eq!(mm.module_nodes(live[0]), vec!["I0", "A", "M1"]);
    assert_eq!(mm.module_nodes(live[1]), vec!["B", "M2"]);
    assert_eq!(mm.module_nodes(live[2]), vec!["C", "D1", "M1", "M2"]);
    // Merge entries land with their feeders; continuations live elsewhere.
    assert_eq!(mm.owner_of_entry("M1", "E2"), Some(live[0]));
    assert_eq!(mm.owner_of_entry("M1", "E7"), Some(live[2]));
    assert_eq!(mm.owner_of_entry("B", "E3"), Some(live[1]));
    assert_eq!(mm.owner_of_entry("M2", "E4"), Some(live[1]));
    assert_eq!(mm.owner_of_entry("M2", "E8"), Some(live[2]));
    assert_eq!(mm.owner_of_entry("C", "E5"), Some(live[2]));
}

/// Every (node, edge) pair of the diagram appears in the mapping exactly
/// once, plus the anchoring entry of each initial node.
#[test]
fn entry_tables_cover_every_edge_once() {
    for path in [
        "fixtures/pal.adl",
        "fixtures/dc.adl",
        "fixtures/tm.adl",
        "fixtures/sd.adl",
        "fixtures/fp.adl",
        "fixtures/tw.adl",
        "fixtures/is.adl",
    ] {
        let act = load(path);
        let mm = preprocess(&act);
        let entries = mm.sorted_entries();
        assert_eq!(
            entries.len(),
            act.edges.len() + act.initial_nodes().len(),
            "{}",
            path
        );
        for edge in &act.edges {
            let hits = entries
                .iter()
                .filter(|(node, e, _)| e == &edge.name && node == &edge.target)
                .count();
            assert_eq!(hits, 1, "{}: edge {} target entry", path, edge.name);
        }
    }
}
