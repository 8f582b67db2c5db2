import numpy as np
import pytest

from pathograph.errors import EmptyPathoGraph, InvalidInput
from pathograph.pathofilter import (
    FilterConfig,
    PathoGraphCohort,
    PathoScoreReport,
    build_pathograph_cohort,
    cohort_vectors,
    graph_to_svm_vector,
    patho_scores,
    train_svm,
)
from pathograph.synth import SynthSpec, generate, spec_partition
from pathograph.types import BrainGraph


def toy_graph(n=3, seed=0, label=0):
    rng = np.random.default_rng(seed)
    a = np.clip(rng.uniform(-0.8, 0.8, size=(n, n)), -1, 1)
    a = (a + a.T) / 2
    np.fill_diagonal(a, 1.0)
    return BrainGraph(subject_id=f"t{seed}", adjacency=a, label=label, group=label)


class TestVectorization:
    def test_full_upper_triangle(self):
        g = toy_graph(3)
        vec = graph_to_svm_vector(g)
        a = g.adjacency
        np.testing.assert_allclose(vec, [a[0, 1], a[0, 2], a[1, 2]])

    def test_masked_keeps_dimension(self):
        g = toy_graph(3)
        vec = graph_to_svm_vector(g, keep_nodes={0, 1})
        a = g.adjacency
        np.testing.assert_allclose(vec, [a[0, 1], 0.0, 0.0])

    def test_length_for_90_nodes(self):
        g = toy_graph(90, seed=1)
        assert graph_to_svm_vector(g).size == 4005

    def test_keep_nodes_out_of_range(self):
        with pytest.raises(InvalidInput):
            graph_to_svm_vector(toy_graph(3), keep_nodes={5})


class TestTrainSvm:
    def test_separable_clouds(self):
        rng = np.random.default_rng(0)
        x = np.concatenate([rng.normal(-3, 0.3, (20, 2)), rng.normal(3, 0.3, (20, 2))])
        y = np.repeat([0, 1], 20)
        model = train_svm(x, y, C=1.0)
        assert np.mean(model.predict(x) == y) == 1.0

    def test_xor_with_brute_force_kernel_oracle(self):
        x = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
        y = np.array([0, 0, 1, 1])
        model = train_svm(x, y, C=10.0, gamma=1.0)
        assert np.mean(model.predict(x) == y) == 1.0
        duals, svs, bias = model.binary_duals()
        # Decision values recomputed from the dual solution.
        for xi, expected in zip(x, model.decision_function(x)):
            k = np.exp(-1.0 * np.sum((svs - xi) ** 2, axis=1))
            assert duals @ k + bias == pytest.approx(expected, abs=1e-8)

    def test_single_class_rejected(self):
        with pytest.raises(InvalidInput):
            train_svm(np.zeros((4, 2)), np.zeros(4, dtype=int))

    def test_dual_feasibility(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(30, 3))
        y = (x[:, 0] + 0.3 * rng.normal(size=30) > 0).astype(int)
        c = 2.0
        model = train_svm(x, y, C=c)
        duals, _, _ = model.binary_duals()
        assert np.all(np.abs(duals) <= c + 1e-8)
        assert abs(duals.sum()) < 1e-8
        assert duals.size >= 1


def make_planted(seed, subjects_per_class=30, planted=(1, 3)):
    spec = SynthSpec(
        subgraph_sizes=[6] * 5,
        planted=list(planted),
        subjects_per_class=subjects_per_class,
        signal_strength=0.4,
        noise_sigma=0.05,
        seed=seed,
    )
    cohort, gt = generate(spec)
    return cohort, spec_partition(spec), gt


class TestPathoScores:
    def test_recovers_planted_subgraphs(self):
        cohort, part, gt = make_planted(0)
        report = patho_scores(cohort, part, FilterConfig(seed=0))
        assert report.retained == gt["planted"]

    def test_retained_matches_threshold_rule(self):
        cohort, part, _ = make_planted(1)
        report = patho_scores(cohort, part, FilterConfig(seed=1))
        expected = [i for i, b in enumerate(report.betas) if b >= report.alpha]
        assert report.retained == expected

    def test_shuffled_labels_alpha_in_range(self):
        cohort, part, _ = make_planted(2, subjects_per_class=15)
        rng = np.random.default_rng(0)
        labels = rng.permutation(cohort.labels)
        for g, lab in zip(cohort.graphs, labels):
            g.label = int(lab)
        report = patho_scores(cohort, part, FilterConfig(seed=2))
        assert 0.0 <= report.alpha <= 1.0
        assert np.all((report.betas >= 0.0) & (report.betas <= 1.0))

    def test_deterministic(self):
        cohort, part, _ = make_planted(3, subjects_per_class=10)
        a = patho_scores(cohort, part, FilterConfig(seed=5))
        b = patho_scores(cohort, part, FilterConfig(seed=5))
        assert a.alpha == b.alpha
        np.testing.assert_array_equal(a.betas, b.betas)

    def test_report_json_schema(self):
        cohort, part, _ = make_planted(4, subjects_per_class=10)
        payload = patho_scores(cohort, part, FilterConfig(seed=4)).to_json()
        assert set(payload) == {"alpha", "betas", "retained", "scope", "seed"}
        assert all(set(b) == {"name", "beta"} for b in payload["betas"])


class TestBuildPathoGraph:
    def test_retain_all_is_identity(self):
        cohort, part, _ = make_planted(5, subjects_per_class=5)
        report = PathoScoreReport(
            alpha=0.0,
            betas=np.ones(part.m),
            subgraph_names=part.subgraph_names,
            scope="full_cohort",
            seed=0,
        )
        patho = build_pathograph_cohort(cohort, part, report)
        assert patho.node_count == cohort.node_count
        np.testing.assert_array_equal(patho.adjacencies[0], cohort.graphs[0].adjacency)

    def test_induced_submatrix_exact(self):
        cohort, part, _ = make_planted(6, subjects_per_class=5)
        report = PathoScoreReport(
            alpha=0.9,
            betas=np.array([0.0, 1.0, 0.0, 1.0, 0.0]),
            subgraph_names=part.subgraph_names,
            scope="full_cohort",
            seed=0,
        )
        patho = build_pathograph_cohort(cohort, part, report)
        assert patho.node_count == 12
        for s, a in enumerate(patho.adjacencies):
            full = cohort.graphs[s].adjacency
            for p, orig_p in enumerate(patho.node_index_map):
                for q, orig_q in enumerate(patho.node_index_map):
                    assert a[p, q] == full[orig_p, orig_q]

    def test_two_node_subgraph(self):
        g = toy_graph(4, seed=7)
        from pathograph.types import Cohort
        from pathograph.partition import Partition

        cohort = Cohort(graphs=[g], class_names=["x"], group_count=1)
        part = Partition(
            subgraph_names=["a", "b"],
            assignment=np.array([1, 0, 1, 0]),
        )
        report = PathoScoreReport(
            alpha=0.5,
            betas=np.array([1.0, 0.0]),
            subgraph_names=["a", "b"],
            scope="full_cohort",
            seed=0,
        )
        patho = build_pathograph_cohort(cohort, part, report)
        np.testing.assert_array_equal(patho.node_index_map, [1, 3])
        np.testing.assert_array_equal(
            patho.adjacencies[0], g.adjacency[np.ix_([1, 3], [1, 3])]
        )

    def test_empty_retained(self):
        cohort, part, _ = make_planted(8, subjects_per_class=5)
        report = PathoScoreReport(
            alpha=1.0,
            betas=np.zeros(part.m),
            subgraph_names=part.subgraph_names,
            scope="full_cohort",
            seed=0,
        )
        with pytest.raises(EmptyPathoGraph):
            build_pathograph_cohort(cohort, part, report)

    def test_from_full_matches_cohort_vectors(self):
        cohort, _, _ = make_planted(9, subjects_per_class=5)
        patho = PathoGraphCohort.from_full(cohort)
        assert patho.node_count == cohort.node_count
        assert cohort_vectors(cohort).shape[0] == patho.size
