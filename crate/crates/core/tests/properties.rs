//! Metric and memory invariants over many generated inputs.

mod support;

use support::props;

#[test]
fn kappa_is_symmetric() {
    props::kappa_symmetry().unwrap();
}

#[test]
fn kappa_ignores_relabeling() {
    props::kappa_relabeling().unwrap();
}

#[test]
fn spearman_ignores_monotone_transforms() {
    props::spearman_monotone_invariance().unwrap();
}

#[test]
fn majority_comes_from_the_panel() {
    props::majority_is_an_input().unwrap();
}

#[test]
fn polarity_covers_every_byte() {
    props::polarity_is_total().unwrap();
}

#[test]
fn forgetting_keeps_the_top_sixty_percent() {
    props::forgetting_drops_lowest_forty_percent().unwrap();
}

#[test]
fn recall_is_an_exact_top_k() {
    props::recall_matches_brute_force().unwrap();
}
