//! Bundled synthetic scenarios used by the test suite and handy as demo
//! inputs. Every fixture is built from explicit coordinates (no randomness)
//! so expected outcomes can be stated exactly.

use crowdplan_core::{
    BackgroundInfrastructure, Batches, ConstraintConfig, ConvexRegion, Facility, LineOpinionBatch,
    Point, PointOpinion, PointOpinionBatch, RelaxationPolicy, Segment,
};

/// A complete scenario: opinions, infrastructure and thresholds.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub batches: Batches,
    pub background: BackgroundInfrastructure,
    pub config: ConstraintConfig,
}

fn pt(x: f64, y: f64) -> Point {
    Point::new(x, y).unwrap()
}

fn seg(x1: f64, y1: f64, x2: f64, y2: f64) -> Segment {
    Segment::new(pt(x1, y1), pt(x2, y2)).unwrap()
}

fn rect_region(x0: f64, y0: f64, x1: f64, y1: f64) -> ConvexRegion {
    ConvexRegion::new(vec![pt(x0, y0), pt(x1, y0), pt(x1, y1), pt(x0, y1)]).unwrap()
}

fn line_batch(annotator: &str, opinions: Vec<Segment>) -> LineOpinionBatch {
    LineOpinionBatch {
        annotator: annotator.to_string(),
        opinions,
    }
}

/// Six workers, two line opinions each, three canals. Workers w4-w6 are
/// fully valid and form two clean groups; all opinions of w1-w3 fail
/// pre-processing:
/// - w1 proposes two over-length near-duplicates of the lower canal (their
///   mutual spacing also violates the intra threshold); both fall to
///   inter-separability.
/// - w2 proposes lines that touch no canal and cannot be extended onto one;
///   one is over-length; both fall to the intersection constraint.
/// - w3 proposes a too-close pair that equally touches no canal; both fall
///   to the intersection constraint.
pub fn figure_scene() -> Fixture {
    let region = rect_region(0.0, 0.0, 42.0, 18.0);
    let canals = vec![
        seg(4.0, 3.0, 38.0, 3.0),
        seg(21.0, 3.0, 21.0, 15.0),
        seg(4.0, 15.0, 38.0, 15.0),
    ];
    let background = BackgroundInfrastructure::new(canals, vec![], region, 1e-9).unwrap();

    let batches = vec![
        // Shadows the lower canal: lengths 33 and 31, H to the canal 0.5
        // and 2, mutual H 1.5.
        line_batch(
            "w1",
            vec![seg(4.5, 3.0, 37.5, 3.0), seg(5.0, 3.0, 36.0, 3.0)],
        ),
        // Floating above the upper canal, horizontal: no extension can meet
        // a canal. First one has length 11 > max_length.
        line_batch(
            "w2",
            vec![seg(6.0, 16.5, 17.0, 16.5), seg(25.0, 16.5, 33.0, 16.5)],
        ),
        // Same, but a mutually close pair (H ≈ 0.71 < 3).
        line_batch(
            "w3",
            vec![seg(10.0, 17.0, 14.0, 17.0), seg(10.5, 17.5, 14.5, 17.5)],
        ),
        // Valid: one spoke on the lower canal, one on the upper.
        line_batch(
            "w4",
            vec![seg(8.0, 3.0, 8.0, 9.0), seg(26.0, 15.0, 26.0, 10.0)],
        ),
        line_batch(
            "w5",
            vec![seg(10.0, 3.0, 10.0, 8.0), seg(29.0, 15.0, 29.0, 9.0)],
        ),
        line_batch(
            "w6",
            vec![seg(12.0, 3.0, 12.0, 9.0), seg(32.0, 15.0, 32.0, 10.0)],
        ),
    ];

    let mut config = ConstraintConfig::new(3.0, 3.0, 10.0, 2);
    config.seed = 7;
    config.max_iter = 50;
    Fixture {
        batches: Batches::Lines(batches),
        background,
        config,
    }
}

/// Eight line workers around two canals; two of w2's opinions need an
/// extension to meet a canal, everything else already touches one. Fully
/// feasible at the configured thresholds.
pub fn lines_standard() -> Fixture {
    let region = rect_region(0.0, 0.0, 42.0, 18.0);
    let canals = vec![seg(4.0, 4.0, 38.0, 4.0), seg(4.0, 12.0, 38.0, 12.0)];
    let background = BackgroundInfrastructure::new(canals, vec![], region, 1e-9).unwrap();

    let batches = vec![
        line_batch(
            "w1",
            vec![seg(8.0, 4.0, 8.0, 9.0), seg(30.0, 12.0, 30.0, 8.0)],
        ),
        // Both float 1 unit off a canal; the shorter extension connects them.
        line_batch(
            "w2",
            vec![seg(10.0, 5.0, 10.0, 9.0), seg(32.0, 11.0, 32.0, 8.0)],
        ),
        line_batch(
            "w3",
            vec![seg(12.0, 4.0, 12.0, 8.5), seg(28.0, 12.0, 28.0, 7.5)],
        ),
        line_batch(
            "w4",
            vec![seg(14.0, 4.0, 14.0, 9.0), seg(26.0, 12.0, 26.0, 8.0)],
        ),
    ];

    let mut config = ConstraintConfig::new(2.0, 2.0, 9.0, 2);
    config.seed = 3;
    config.max_iter = 50;
    Fixture {
        batches: Batches::Lines(batches),
        background,
        config,
    }
}

/// Three workers whose two opinion groups sit only 0.8 apart while the
/// congestion threshold is 2.0: the selection must relax the threshold
/// geometrically before both representatives fit.
pub fn lines_decay() -> Fixture {
    let region = rect_region(0.0, 0.0, 42.0, 18.0);
    let canals = vec![seg(4.0, 4.0, 38.0, 4.0)];
    let background = BackgroundInfrastructure::new(canals, vec![], region, 1e-9).unwrap();

    let mut batches = Vec::new();
    for i in 0..3 {
        let jitter = 0.05 * i as f64;
        batches.push(line_batch(
            &format!("w{}", i + 1),
            vec![
                seg(10.0 + jitter, 4.0, 10.0 + jitter, 7.0),
                seg(10.8 + jitter, 4.0, 10.8 + jitter, 7.0),
            ],
        ));
    }

    let mut config = ConstraintConfig::new(0.5, 2.0, 9.0, 2);
    config.seed = 1;
    config.max_iter = 50;
    Fixture {
        batches: Batches::Lines(batches),
        background,
        config,
    }
}

/// The decay scenario with relaxation disabled: post-processing must report
/// the blocking cluster instead.
pub fn lines_strict_infeasible() -> Fixture {
    let mut fixture = lines_decay();
    fixture.config.relaxation = RelaxationPolicy::Strict;
    fixture
}

/// Every opinion in one cluster exceeds the length cap: no amount of
/// threshold decay can help.
pub fn lines_unsatisfiable_length() -> Fixture {
    let region = rect_region(0.0, 0.0, 42.0, 18.0);
    let canals = vec![seg(4.0, 4.0, 38.0, 4.0)];
    let background = BackgroundInfrastructure::new(canals, vec![], region, 1e-9).unwrap();
    let batches = vec![
        line_batch("w1", vec![seg(10.0, 4.0, 10.0, 16.0)]),
        line_batch("w2", vec![seg(12.0, 4.0, 12.0, 16.0)]),
        line_batch("w3", vec![seg(14.0, 4.0, 14.0, 16.0)]),
    ];
    let mut config = ConstraintConfig::new(1.5, 1.5, 9.0, 1);
    config.seed = 2;
    Fixture {
        batches: Batches::Lines(batches),
        background,
        config,
    }
}

/// All opinions outside the region: pre-processing leaves nothing.
pub fn lines_out_of_region() -> Fixture {
    let region = rect_region(0.0, 0.0, 42.0, 18.0);
    let canals = vec![seg(4.0, 4.0, 38.0, 4.0)];
    let background = BackgroundInfrastructure::new(canals, vec![], region, 1e-9).unwrap();
    let batches = vec![
        line_batch(
            "w1",
            vec![seg(50.0, 4.0, 50.0, 9.0), seg(55.0, 4.0, 55.0, 9.0)],
        ),
        line_batch(
            "w2",
            vec![seg(60.0, 4.0, 60.0, 9.0), seg(65.0, 4.0, 65.0, 9.0)],
        ),
    ];
    let mut config = ConstraintConfig::new(2.0, 2.0, 9.0, 2);
    config.seed = 4;
    Fixture {
        batches: Batches::Lines(batches),
        background,
        config,
    }
}

const BANKS: [(&str, usize); 6] = [
    ("SBI", 51),
    ("AXIS", 24),
    ("ICICI", 21),
    ("BOB", 6),
    ("HDFC", 6),
    ("IDBI", 3),
];

fn existing_atms() -> Vec<Facility> {
    let place = |tag: &str, x: f64, y: f64| Facility {
        tag: tag.to_string(),
        point: pt(x, y),
        exempt: false,
    };
    vec![
        place("SBI", 30.0, 30.0),
        place("AXIS", 40.0, 35.0),
        place("AXIS", 60.0, 35.0),
        place("AXIS", 40.0, 65.0),
        place("AXIS", 60.0, 65.0),
        place("AXIS", 35.0, 50.0),
        place("AXIS", 65.0, 50.0),
        place("ICICI", 60.0, 40.0),
        place("ICICI", 40.0, 60.0),
        place("BOB", 45.0, 55.0),
        place("HDFC", 55.0, 45.0),
        place("HDFC", 45.0, 45.0),
        place("HDFC", 55.0, 55.0),
        place("HDFC", 48.0, 40.0),
        place("HDFC", 52.0, 60.0),
        place("HDFC", 44.0, 52.0),
        place("IDBI", 56.0, 48.0),
        place("IDBI", 44.0, 48.0),
    ]
}

/// 37 workers x 3 point opinions (111 total) with bank proposal counts
/// 51:24:21:6:6:3 and existing facilities 1:6:2:1:6:2 within the allocation
/// radius.
///
/// `with_background_knowledge = false` models workers who could not see the
/// existing facilities: exactly six opinions (two per large bank) land
/// within the separation threshold of an existing same-bank facility. With
/// background knowledge the same six opinions sit at clear positions and
/// nothing violates anything.
pub fn atm_dataset(with_background_knowledge: bool) -> Fixture {
    let region = rect_region(0.0, 0.0, 100.0, 100.0);
    let background = BackgroundInfrastructure::new(vec![], existing_atms(), region, 1e-9).unwrap();

    // Tag blocks align with whole workers: 17 SBI, 8 AXIS, 7 ICICI, 2 BOB,
    // 2 HDFC, 1 IDBI.
    let mut tags = Vec::new();
    for (tag, count) in BANKS {
        for _ in 0..count / 3 {
            tags.push(tag);
        }
    }
    debug_assert_eq!(tags.len(), 37);

    let mut batches = Vec::new();
    let mut per_tag_worker: std::collections::BTreeMap<&str, usize> =
        std::collections::BTreeMap::new();
    for (w, tag) in tags.iter().enumerate() {
        let nth = {
            let counter = per_tag_worker.entry(tag).or_insert(0);
            let nth = *counter;
            *counter += 1;
            nth
        };
        // Per-bank neighbourhood grids; 6-unit column spacing keeps
        // same-worker opinions d1-separated, 2-unit rows keep workers apart.
        let (base_x, base_y, row) = match *tag {
            // Two separated SBI blobs: workers 0-8 low, 9-16 high.
            "SBI" => {
                if nth < 9 {
                    (8.0, 6.0, nth as f64)
                } else {
                    (80.0, 75.0, (nth - 9) as f64)
                }
            }
            "AXIS" => (12.0, 58.0, nth as f64),
            "ICICI" => (66.0, 12.0, nth as f64),
            "BOB" => (8.0, 40.0, nth as f64),
            "HDFC" => (74.0, 30.0, nth as f64),
            "IDBI" => (20.0, 88.0, nth as f64),
            _ => unreachable!(),
        };
        let opinions: Vec<PointOpinion> = (0..3)
            .map(|j| PointOpinion {
                tag: tag.to_string(),
                point: pt(base_x + 6.0 * j as f64, base_y + 2.0 * row),
            })
            .collect();
        batches.push(PointOpinionBatch {
            annotator: format!("w{:02}", w + 1),
            opinions,
        });
    }

    if !with_background_knowledge {
        // First worker of each large bank drops its first two opinions next
        // to an existing same-bank facility (2.0 and 2.5 away, both < d1=4;
        // 4.5 apart from each other so no intra violation).
        let near = |index: usize, (cx, cy): (f64, f64), batches: &mut Vec<PointOpinionBatch>| {
            batches[index].opinions[0].point = pt(cx - 2.0, cy);
            batches[index].opinions[1].point = pt(cx + 2.5, cy);
        };
        near(0, (30.0, 30.0), &mut batches); // w01, SBI
        near(17, (40.0, 35.0), &mut batches); // w18, AXIS
        near(25, (60.0, 40.0), &mut batches); // w26, ICICI
    }

    let mut config = ConstraintConfig::new(4.0, 4.0, 10.0, 3);
    config.seed = 11;
    config.max_iter = 50;
    config.allocation_radius = 60.0;
    Fixture {
        batches: Batches::Points(batches),
        background,
        config,
    }
}

/// Radial synthetic line scenario for scaling measurements: every proposal
/// is a spoke out of one shared junction on the central canal. Each worker's
/// five spokes fan out 72 degrees apart (so same-worker spacing holds) and
/// any two spokes meet at the junction, which keeps every pairwise grouping
/// distance at zero.
pub fn perf_lines(n_workers: usize) -> Fixture {
    let region = rect_region(0.0, 0.0, 1000.0, 500.0);
    let junction = (500.0, 250.0);
    let canal = seg(junction.0 - 30.0, junction.1, junction.0 + 30.0, junction.1);
    let background = BackgroundInfrastructure::new(vec![canal], vec![], region, 1e-9).unwrap();

    let mut batches = Vec::with_capacity(n_workers);
    for w in 0..n_workers {
        let golden = (w as f64 * 0.618_033_988_749_894_9).fract();
        let base_angle = std::f64::consts::TAU * golden;
        let radius = 6.0 + 3.0 * (w as f64 * 0.414_213_562_373_095).fract();
        let opinions: Vec<Segment> = (0..5)
            .map(|j| {
                let angle = base_angle + std::f64::consts::TAU * j as f64 / 5.0;
                seg(
                    junction.0,
                    junction.1,
                    junction.0 + radius * angle.cos(),
                    junction.1 + radius * angle.sin(),
                )
            })
            .collect();
        batches.push(line_batch(&format!("w{w}"), opinions));
    }

    let mut config = ConstraintConfig::new(2.0, 2.0, 10.0, 5);
    config.seed = 9;
    config.max_iter = 50;
    Fixture {
        batches: Batches::Lines(batches),
        background,
        config,
    }
}
