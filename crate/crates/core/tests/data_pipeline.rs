use std::collections::{BTreeMap, BTreeSet};

use ecghan::data::*;
use ecghan::signal::{BeatWindow, Record};
use ecghan::Error;
use proptest::prelude::*;

fn tagged_dataset(labels: &[usize], num_classes: usize) -> Dataset {
    let windows = labels
        .iter()
        .enumerate()
        .map(|(i, &label)| BeatWindow {
            samples: vec![i as f64, (i * i) as f64 * 0.01, -(i as f64)],
            r_peak_offset: 1,
            label,
            source_record: format!("w{i}"),
        })
        .collect();
    Dataset::new(windows, (0..num_classes).map(|c| format!("c{c}")).collect()).unwrap()
}

fn ids(d: &Dataset) -> Vec<String> {
    d.windows.iter().map(|w| w.source_record.clone()).collect()
}

#[test]
fn split_of_one_hundred_is_sixty_twenty_twenty() {
    let d = tagged_dataset(&vec![0; 100], 1);
    let (a, b, c) = split(&d, (0.6, 0.2, 0.2), 3).unwrap();
    assert_eq!((a.len(), b.len(), c.len()), (60, 20, 20));
    let (a2, _, _) = split(&d, (0.6, 0.2, 0.2), 3).unwrap();
    assert_eq!(ids(&a), ids(&a2));
    assert!(matches!(split(&d, (0.6, 0.2, 0.3), 3), Err(Error::Config(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_is_a_partition(n in 1usize..1000, seed in any::<u64>()) {
        let d = tagged_dataset(&vec![0; n], 1);
        let (a, b, c) = split(&d, (0.6, 0.2, 0.2), seed).unwrap();
        prop_assert_eq!(a.len() + b.len() + c.len(), n);
        let mut all: Vec<String> = ids(&a);
        all.extend(ids(&b));
        all.extend(ids(&c));
        let unique: BTreeSet<&String> = all.iter().collect();
        prop_assert_eq!(unique.len(), n);
    }

    #[test]
    fn smote_children_lie_between_parent_and_neighbor(
        counts in prop::collection::vec(2usize..12, 2..4),
        factor in 1.0f64..4.0,
        k in 1usize..6,
        seed in any::<u64>(),
    ) {
        let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(c, n)).collect();
        let d = tagged_dataset(&labels, counts.len());
        let factors: BTreeMap<usize, f64> = (1..counts.len()).map(|c| (c, factor)).collect();
        let out = smote_with_origins(&d, k, &factors, seed).unwrap();
        let new_counts = out.dataset.class_counts();
        prop_assert_eq!(new_counts[0], counts[0]);
        for c in 1..counts.len() {
            prop_assert_eq!(new_counts[c], (counts[c] as f64 * factor).round() as usize);
        }
        prop_assert_eq!(&out.dataset.windows[..d.len()], &d.windows[..]);
        for (w, o) in out.dataset.windows[d.len()..].iter().zip(&out.origins) {
            let (p, q) = (&d.windows[o.parent], &d.windows[o.neighbor]);
            prop_assert_eq!(w.label, p.label);
            prop_assert_eq!(q.label, p.label);
            prop_assert!(o.parent != o.neighbor);
            prop_assert!((0.0..1.0).contains(&o.lambda));
            for ((s, a), b) in w.samples.iter().zip(&p.samples).zip(&q.samples) {
                prop_assert!(a.min(*b) <= *s && *s <= a.max(*b));
            }
            // The neighbor is among the parent's k nearest same-class windows.
            let dist = |x: &BeatWindow| x.samples.iter().zip(&p.samples).map(|(u, v)| (u - v) * (u - v)).sum::<f64>();
            let closer = d.windows.iter().enumerate()
                .filter(|&(i, x)| i != o.parent && x.label == p.label && dist(x) < dist(q))
                .count();
            prop_assert!(closer < k);
        }
    }
}

#[test]
fn undersample_keeps_contents_and_is_seeded() {
    let mut labels = vec![0; 72_000];
    labels.extend(std::iter::repeat_n(1, 500));
    let d = tagged_dataset(&labels, 2);
    let out = undersample(&d, 0, 50_000, 9).unwrap();
    assert_eq!(out.class_counts(), vec![50_000, 500]);
    let originals: BTreeMap<String, &BeatWindow> = d.windows.iter().map(|w| (w.source_record.clone(), w)).collect();
    let mut seen = BTreeSet::new();
    for w in &out.windows {
        assert_eq!(originals[&w.source_record], w);
        assert!(seen.insert(w.source_record.clone()));
    }
    assert_eq!(ids(&undersample(&d, 0, 50_000, 9).unwrap()), ids(&out));
    assert_ne!(ids(&undersample(&d, 0, 50_000, 10).unwrap()), ids(&out));
    assert_eq!(undersample(&d, 1, 600, 0).unwrap().class_counts(), vec![72_000, 500]);
}

#[test]
fn balancing_preserves_minority_ratios() {
    // Roughly the shape of an arrhythmia training split.
    let counts = [7_200usize, 220, 580, 64, 640];
    let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(c, n)).collect();
    let d = tagged_dataset(&labels, 5);
    let cfg = BalanceConfig { majority_target: 5_000, k: 3, seed: 2, ..BalanceConfig::default() };
    let out = balance(&d, &cfg).unwrap();
    let after = out.class_counts();
    assert_eq!(after[0], 5_000);
    let before_total: usize = counts[1..].iter().sum();
    let after_total: usize = after[1..].iter().sum();
    assert!((after_total as f64 - 5_000.0).abs() <= 4.0, "{after:?}");
    for c in 1..5 {
        let r0 = counts[c] as f64 / before_total as f64;
        let r1 = after[c] as f64 / after_total as f64;
        assert!(((r1 - r0) / r0).abs() <= 0.01, "class {c}: {r0} → {r1}");
    }
}

fn sample_record(n: usize) -> Record {
    let samples = (0..n).map(|i| ((i as f64) * 0.013).sin() * 1.3 + 0.1).collect();
    Record::new("rec 7", "MLII", 360.0, samples).unwrap()
}

#[test]
fn f32le_records_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let rec = sample_record(5_000);
    let (sig, hdr) = write_record(&rec, dir.path(), SampleFormat::F32Le, &BTreeMap::new()).unwrap();
    let back = load_record(&sig, &hdr).unwrap();
    // The payload is 32-bit, so the round trip is exact at f32 precision.
    let expected: Vec<f64> = rec.samples.iter().map(|&v| v as f32 as f64).collect();
    assert_eq!(back.samples, expected);
    let again_dir = dir.path().join("again");
    let (sig2, hdr2) = write_record(&back, &again_dir, SampleFormat::F32Le, &BTreeMap::new()).unwrap();
    assert_eq!(std::fs::read(&sig).unwrap(), std::fs::read(&sig2).unwrap());
    assert_eq!(load_record(&sig2, &hdr2).unwrap(), back);
    assert_eq!((back.sampling_rate, back.lead_name.as_str(), back.record_id.as_str()), (360.0, "MLII", "rec 7"));
}

#[test]
fn thirty_minute_csv_record_loads() {
    let dir = tempfile::tempdir().unwrap();
    let rec = sample_record(648_000);
    let (sig, hdr) = write_record(&rec, dir.path(), SampleFormat::Csv, &BTreeMap::new()).unwrap();
    let back = load_record(&sig, &hdr).unwrap();
    assert_eq!(back.len(), 648_000);
    assert_eq!(back.sampling_rate, 360.0);
    assert_eq!(back.samples, rec.samples);
}

#[test]
fn empty_signal_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let hdr = dir.path().join("e.hdr");
    let sig = dir.path().join("e.csv");
    std::fs::write(&hdr, "record_id=e\nlead_name=MLII\nsampling_rate=360\nsample_format=csv\nnum_samples=0\n").unwrap();
    std::fs::write(&sig, "").unwrap();
    assert!(load_record(&sig, &hdr).is_err());
}

#[test]
fn annotation_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("a.csv");
    std::fs::write(&p, "77,N\n370,V\n").unwrap();
    let a = load_annotations(&p).unwrap();
    assert_eq!(a.iter().map(|x| (x.sample_index, x.symbol)).collect::<Vec<_>>(), vec![(77, 'N'), (370, 'V')]);
    std::fs::write(&p, "").unwrap();
    assert!(load_annotations(&p).unwrap().is_empty());
    std::fs::write(&p, "1,N\nabc,N\n").unwrap();
    let err = load_annotations(&p).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    std::fs::write(&p, "5,N\n5,V\n").unwrap();
    assert!(load_annotations(&p).is_err());

    let written = dir.path().join("b.csv");
    write_annotations(&a, &written).unwrap();
    assert_eq!(load_annotations(&written).unwrap(), a);
}

#[test]
fn dataset_directory_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = synth_beat_dataset(5, 4, Some(15.0), 3).unwrap();
    d.save(dir.path()).unwrap();
    let back = Dataset::load(dir.path()).unwrap();
    assert_eq!(back.class_names, d.class_names);
    assert_eq!(back.len(), 20);
    for (a, b) in back.windows.iter().zip(&d.windows) {
        assert_eq!((a.label, a.r_peak_offset, &a.source_record), (b.label, b.r_peak_offset, &b.source_record));
        let narrowed: Vec<f64> = b.samples.iter().map(|&v| v as f32 as f64).collect();
        assert_eq!(a.samples, narrowed);
    }
}

#[test]
fn synthetic_dataset_windows_follow_the_mitbih_recipe() {
    let d = synth_beat_dataset(5, 10, None, 1).unwrap();
    assert_eq!(d.class_counts(), vec![10; 5]);
    for w in &d.windows {
        assert_eq!(w.samples.len(), 300);
        assert_eq!(w.r_peak_offset, 99);
    }
    // Clean normal beats peak exactly at the R-peak offset.
    let n = &d.windows[0].samples;
    let argmax = (0..300).max_by(|&a, &b| n[a].total_cmp(&n[b])).unwrap();
    assert_eq!(argmax, 99);
}

fn write_synth_dir(dir: &std::path::Path, classes: usize, beats: usize, label_in_header: bool) {
    for (class, name) in AAMI_CLASSES.iter().enumerate().take(classes) {
        let (record, ann) = synth_class_record(class, beats, Some(20.0), 5).unwrap();
        let mut extra = BTreeMap::new();
        if label_in_header {
            extra.insert("label".to_string(), name.to_string());
        } else {
            write_annotations(&ann, &dir.join(ANNOTATIONS_DIR).join(format!("{}.csv", record.record_id))).unwrap();
        }
        write_record(&record, &dir.join(RECORDS_DIR), SampleFormat::F32Le, &extra).unwrap();
    }
}

#[test]
fn preprocess_dir_labels_detected_beats_from_annotations() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(tmp.path().join(ANNOTATIONS_DIR)).unwrap();
    write_synth_dir(tmp.path(), 3, 40, false);
    let (ds, summaries) = preprocess_dir(tmp.path(), &PreprocessConfig::default()).unwrap();
    assert_eq!(summaries.len(), 3);
    for (class, s) in summaries.iter().enumerate() {
        assert_eq!(s.record_id, format!("synth_{}", AAMI_CLASSES[class]));
        assert!(s.windows >= 38, "{s:?}");
        assert_eq!(s.unlabeled, 0, "{s:?}");
        assert_eq!(s.peaks, s.windows + s.boundary_skipped + s.unlabeled);
    }
    for w in &ds.windows {
        assert_eq!(w.samples.len(), 300);
        assert_eq!(w.source_record, format!("synth_{}", AAMI_CLASSES[w.label]));
    }

    let cfg = PreprocessConfig { use_annotations: true, denoise: None, ..PreprocessConfig::default() };
    let (by_ann, _) = preprocess_dir(tmp.path(), &cfg).unwrap();
    assert!(by_ann.windows.iter().all(|w| w.source_record == format!("synth_{}", AAMI_CLASSES[w.label])));
}

#[test]
fn preprocess_dir_uses_header_label_and_lead_filter() {
    let tmp = tempfile::tempdir().unwrap();
    write_synth_dir(tmp.path(), 2, 20, true);
    let (ds, _) = preprocess_dir(tmp.path(), &PreprocessConfig::default()).unwrap();
    assert_eq!(ds.class_counts()[..2].iter().filter(|&&c| c >= 18).count(), 2);

    let other_lead = PreprocessConfig { lead: Some("V5".into()), ..PreprocessConfig::default() };
    assert!(matches!(preprocess_dir(tmp.path(), &other_lead), Err(Error::Empty(_))));
    let needs_ann = PreprocessConfig { use_annotations: true, ..PreprocessConfig::default() };
    assert!(matches!(preprocess_dir(tmp.path(), &needs_ann), Err(Error::Config(_))));
}
