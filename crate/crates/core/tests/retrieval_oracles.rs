mod common;

use common::*;
use dlfh::data::{synth_labels, LabelMatrix};
use dlfh::pipeline::evaluate_codes;
use dlfh::retrieval::{average_precision, pack, precision_at, rank_database, unpack};
use dlfh::{mean_average_precision, GroundTruth};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn map_agrees_with_naive_reimplementation() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..100 {
        let q = rng.random_range(1..30);
        let n = rng.random_range(1..=100);
        let c = rng.random_range(1..70);
        let queries = random_codes(&mut rng, q, c);
        let db = random_codes(&mut rng, n, c);
        let p = rng.random_range(0.05..0.6);
        let bits: Vec<bool> = (0..q * n).map(|_| rng.random_bool(p)).collect();
        let rel = |a: usize, b: usize| bits[a * n + b];
        let truth = GroundTruth::from_fn(q, n, rel);
        let expected = naive_map(&unpack(&queries), &unpack(&db), &rel);
        match (mean_average_precision(&queries, &db, &truth, None), expected) {
            (Ok(r), Some(e)) => assert!((r.map - e).abs() <= 1e-12, "{} vs {e}", r.map),
            (Err(_), None) => {}
            (got, want) => panic!("disagreement: {got:?} vs {want:?}"),
        }
    }
}

#[test]
fn hand_cases_hold_exactly() {
    // relevant items at ranks 1 and 3
    let ranking = [7, 2, 4, 0];
    let ap = average_precision(&ranking, |i| i == 7 || i == 4).unwrap();
    assert_eq!(ap, (1.0 + 2.0 / 3.0) / 2.0);
    assert!((ap - 5.0 / 6.0).abs() <= f64::EPSILON);
    assert_eq!(average_precision(&ranking, |i| i == 7 || i == 2), Some(1.0));
    assert_eq!(average_precision(&ranking, |_| false), None);
    assert_eq!(precision_at(&ranking, |i| i == 7 || i == 4, 2), 0.5);
}

#[test]
fn ranking_orders_by_distance_then_index() {
    let db = pack(&[vec![1, 1, 1], vec![-1, 1, 1], vec![1, 1, 1], vec![-1, -1, -1]]).unwrap();
    let q = pack(&[vec![1, 1, 1]]).unwrap();
    assert_eq!(rank_database(q.row_words(0), &db).unwrap(), vec![0, 2, 1, 3]);
}

#[test]
fn swapped_roles_on_symmetric_data_give_equal_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let labels = synth_labels(80, 4, 3).unwrap();
    let qlabels = synth_labels(25, 4, 4).unwrap();
    let codes = random_codes(&mut rng, 80, 24);
    let queries = random_codes(&mut rng, 25, 24);
    let both = evaluate_codes(&queries, &queries, &codes, &codes, &qlabels, &labels, None).unwrap();
    assert!((both.image_to_text.map - both.text_to_image.map).abs() <= 1e-12);
    assert_eq!(both.image_to_text.scored, both.text_to_image.scored);
}

#[test]
fn identical_codes_fall_back_to_index_order() {
    // every item ties, so the ranking is 0..n
    let n = 10;
    let codes = random_codes(&mut ChaCha8Rng::seed_from_u64(1), 1, 8);
    let db_rows = vec![unpack(&codes)[0].clone(); n];
    let db = pack(&db_rows).unwrap();
    let labels = LabelMatrix::one_hot(&[0, 1, 0, 1, 1, 0, 0, 1, 0, 1], 2).unwrap();
    let qlabels = LabelMatrix::one_hot(&[1], 2).unwrap();
    let truth = GroundTruth::from_labels(&qlabels, &labels).unwrap();
    let r = mean_average_precision(&codes, &db, &truth, None).unwrap();
    // relevant at 1-based ranks 2, 4, 5, 8, 10
    let want = (1.0 / 2.0 + 2.0 / 4.0 + 3.0 / 5.0 + 4.0 / 8.0 + 5.0 / 10.0) / 5.0;
    assert!((r.map - want).abs() <= 1e-12);
}

#[test]
fn cutoff_counts_relevant_items_in_the_top_k() {
    let db = pack(&[vec![1, 1], vec![1, -1], vec![-1, -1]]).unwrap();
    let q = pack(&[vec![1, 1], vec![-1, -1]]).unwrap();
    // query 0 ranks 0,1,2; query 1 ranks 2,1,0
    let truth = GroundTruth::from_fn(2, 3, |q, i| (q, i) == (0, 1) || (q, i) == (1, 0));
    let r = mean_average_precision(&q, &db, &truth, Some(2)).unwrap();
    assert_eq!(r.scored, 2);
    assert!((r.map - 0.25).abs() <= 1e-15, "{r:?}");
}
