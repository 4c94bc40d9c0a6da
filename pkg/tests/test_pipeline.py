"""Extraction engines, random hypergraph, matching, and the end-to-end runner."""

import math

import numpy as np
import pytest

from cfl import (
    FactorBundle,
    HypothesisRejected,
    InputError,
    InvariantError,
    PipelineConfig,
    RandomHypergraph,
    build_Hf,
    concentration_audit,
    default_alpha,
    default_ell,
    dense_extract,
    enumerate_cliques,
    from_edge_list,
    gen_complete,
    gen_random_regular,
    greedy_completion,
    nibble_matching,
    run_end_to_end,
    sparse_extract,
    sparse_split,
)
from cfl.pipeline import hf_codegrees, hf_degrees


def _vertex_drops(g, bundle):
    drop = np.zeros(g.n)
    for (u, v), x in bundle.per_edge_load.items():
        drop[u] += x
        drop[v] += x
    return drop


class TestDenseExtraction:
    def test_k6_one_round_spends_two_halfedges_per_vertex(self, k6):
        bundle = dense_extract(k6, 3, 1)
        assert bundle.ell == 1 and bundle.mode == "dense"
        assert _vertex_drops(k6, bundle) == pytest.approx(np.full(6, 2.0), abs=1e-6)

    def test_k6_two_rounds(self, k6):
        bundle = dense_extract(k6, 3, 2)
        assert bundle.ell == 2
        assert bundle.audits["achieved"] == 2
        assert _vertex_drops(k6, bundle) == pytest.approx(np.full(6, 4.0), abs=1e-6)
        assert bundle.max_edge_load() <= 1 + 1e-7
        for it in bundle.audits["iterations"]:
            assert it["extracted"] is True
            assert it["degree_residual"] <= 1e-6

    def test_k6_third_round_runs_dry(self, k6):
        # after two factors the residual weights admit t_star = 1 < 2
        bundle = dense_extract(k6, 3, 3)
        assert bundle.ell == 2
        assert "no fractional factor at iteration 2" in bundle.audits["note"]
        last = bundle.audits["iterations"][2]
        assert last["extracted"] is False
        assert last["t_star"] == pytest.approx(1.0, abs=1e-6)

    def test_k12_loads_stay_capped(self):
        bundle = dense_extract(gen_complete(12), 3, 2)
        assert bundle.ell == 2
        assert bundle.max_edge_load() <= 1 + 1e-7

    def test_factors_are_keyed_by_source_clique_ids(self, k6):
        cliques = enumerate_cliques(k6, 3)
        bundle = dense_extract(k6, 3, 2, cliques=cliques)
        for fac in bundle.factors:
            for cid, val in fac.items():
                assert 0 <= cid < len(cliques)
                assert val > 0

    def test_default_alpha_formula(self):
        assert default_alpha(60, 59, 3) == pytest.approx((59 / 240) / 60)
        assert default_alpha(100, 50, 4) == pytest.approx(0.125**2 / 80)

    def test_parameter_validation(self, k6):
        with pytest.raises(InputError):
            dense_extract(k6, 2, 1)
        with pytest.raises(InputError):
            dense_extract(k6, 3, 0)
        with pytest.raises(InputError, match="regular"):
            dense_extract(from_edge_list(3, [(0, 1), (1, 2)]), 3, 1)


class TestSparseSplit:
    def test_single_part_is_the_graph_itself(self, k6):
        assert sparse_split(k6, 1, 7) == [k6]

    def test_parts_partition_the_edges(self, k6):
        parts = sparse_split(k6, 4, seed=3)
        assert len(parts) == 4
        seen = []
        for p in parts:
            assert p.n == 6
            seen.extend(p.edges)
        assert sorted(seen) == list(k6.edges)

    def test_same_seed_same_split(self, rr_20_6):
        a = sparse_split(rr_20_6, 3, seed=5)
        b = sparse_split(rr_20_6, 3, seed=5)
        assert [p.edges for p in a] == [p.edges for p in b]

    def test_different_seed_different_split(self, rr_20_6):
        a = sparse_split(rr_20_6, 3, seed=5)
        b = sparse_split(rr_20_6, 3, seed=6)
        assert [p.edges for p in a] != [p.edges for p in b]

    def test_part_sizes_concentrate(self):
        g = gen_random_regular(100, 50, 2025)
        sigma = math.sqrt(g.m * (1 / 5) * (4 / 5))
        for seed in range(5):
            for p in sparse_split(g, 5, seed):
                assert abs(p.m - g.m / 5) <= 5 * sigma

    def test_zero_parts_rejected(self, k6):
        with pytest.raises(InputError):
            sparse_split(k6, 0, 0)


class TestSparseExtraction:
    def test_whole_graph_as_one_part(self, k6):
        bundle = sparse_extract(k6, 3, 1, seed=0)
        assert bundle.mode == "sparse"
        assert bundle.ell == 1
        assert bundle.audits["failed_parts"] == []
        assert bundle.max_edge_load() <= 1 + 1e-7

    def test_overshredded_graph_fails_every_part(self, k6):
        # 15 parts of a 15-edge graph: no part can hold a triangle factor
        bundle = sparse_extract(k6, 3, 15, seed=0)
        assert bundle.ell == 0
        assert len(bundle.audits["failed_parts"]) == 15
        assert bundle.factors == ()

    def test_k30_two_parts_both_extract(self):
        bundle = sparse_extract(gen_complete(30), 3, 2, seed=0)
        assert bundle.ell == 2
        assert bundle.audits["failed_parts"] == []
        assert sum(bundle.audits["split_sizes"]) == 435  # every edge lands in a part

    def test_each_clique_funds_at_most_one_factor(self):
        bundle = sparse_extract(gen_complete(30), 3, 2, seed=0)
        seen = set()
        for fac in bundle.factors:
            ids = {cid for cid, val in fac.items() if val > 1e-9}
            assert not (ids & seen)
            seen |= ids

    def test_small_t_rejected(self, k6):
        with pytest.raises(InputError):
            sparse_extract(k6, 2, 2, seed=0)


class TestRandomHypergraph:
    def _bundle(self, ids):
        return FactorBundle(
            factors=({cid: 1.0 for cid in ids},), ell=1, mode="dense", per_edge_load={}
        )

    def test_unit_probabilities_are_kept_surely(self, k6):
        cliques = enumerate_cliques(k6, 3)
        hf = build_Hf(k6, 3, self._bundle([0, 19]), seed=123, cliques=cliques)
        assert hf.hyperedges == (cliques.cliques[0], cliques.cliques[19])
        assert hf.inclusion_prob == {0: 1.0, 19: 1.0}

    def test_zero_mass_bundle_gives_empty_hypergraph(self, k6):
        bundle = FactorBundle(factors=(), ell=0, mode="dense", per_edge_load={})
        hf = build_Hf(k6, 3, bundle, seed=0)
        assert hf.hyperedges == ()
        assert hf.inclusion_prob == {}

    def test_aggregate_mass_above_tolerance_raises(self, k6):
        bundle = FactorBundle(
            factors=({0: 0.5}, {0: 0.5 + 1e-5}), ell=2, mode="dense", per_edge_load={}
        )
        with pytest.raises(InvariantError, match="exceeds"):
            build_Hf(k6, 3, bundle, seed=0)

    def test_solver_noise_above_one_clamps(self, k6):
        bundle = FactorBundle(
            factors=({0: 0.5}, {0: 0.5 + 5e-7}), ell=2, mode="dense", per_edge_load={}
        )
        hf = build_Hf(k6, 3, bundle, seed=0)
        assert hf.inclusion_prob[0] == 1.0

    def test_same_seed_reproduces_sample(self, k6):
        bundle = dense_extract(k6, 3, 2)
        a = build_Hf(k6, 3, bundle, seed=0)
        b = build_Hf(k6, 3, bundle, seed=0)
        assert a.hyperedges == b.hyperedges
        assert a.to_dict() == b.to_dict()

    def test_different_seed_changes_sample(self, k6):
        bundle = dense_extract(k6, 3, 2)
        a = build_Hf(k6, 3, bundle, seed=0)
        b = build_Hf(k6, 3, bundle, seed=1)
        assert a.hyperedges != b.hyperedges

    def test_candidates_recorded_in_id_order(self, k6):
        bundle = dense_extract(k6, 3, 2)
        hf = build_Hf(k6, 3, bundle, seed=0)
        assert list(hf.inclusion_prob) == sorted(hf.inclusion_prob)
        assert all(0 < p <= 1 for p in hf.inclusion_prob.values())


class TestConcentrationAudit:
    def test_single_factor_band_not_applicable(self):
        hf = RandomHypergraph(t=3, vertices=6, hyperedges=(), inclusion_prob={})
        rep = concentration_audit(hf, 1, 6)
        assert rep.applicable is False
        assert rep.empty is True

    def test_empty_hypergraph_sits_inside_the_wide_band(self):
        # at ell=2 the half-width (k/2)sqrt(2 ln 2) with k = 8/sqrt(beta)
        # exceeds 2, so degree 0 is inside the band; emptiness is its own flag
        hf = RandomHypergraph(t=3, vertices=10, hyperedges=(), inclusion_prob={})
        rep = concentration_audit(hf, 2, 10)
        assert rep.applicable is True
        assert rep.empty is True
        assert rep.band_low < 0
        assert rep.degrees_outside == 0

    def test_disjoint_hyperedges_keep_codegree_at_one(self):
        hf = RandomHypergraph(
            t=3, vertices=6, hyperedges=((0, 1, 2), (3, 4, 5)), inclusion_prob={}
        )
        rep = concentration_audit(hf, 2, 6)
        assert rep.max_codegree == 1
        assert rep.codegrees_outside == 0
        assert rep.empty is False

    def test_degree_statistics(self):
        hf = RandomHypergraph(
            t=3, vertices=6, hyperedges=((0, 1, 2), (0, 1, 3)), inclusion_prob={}
        )
        deg = hf_degrees(hf)
        assert list(deg) == [2, 2, 1, 1, 0, 0]
        assert hf_codegrees(hf)[(0, 1)] == 2
        rep = concentration_audit(hf, 2, 6)
        assert rep.mean_degree == pytest.approx(1.0)
        assert rep.max_degree == 2 and rep.min_degree == 0
        assert rep.max_codegree == 2
        assert rep.codegree_bound == pytest.approx(1 + 3 * math.log(6))

    def test_to_dict_is_json_ready(self):
        hf = RandomHypergraph(t=3, vertices=6, hyperedges=(), inclusion_prob={})
        d = concentration_audit(hf, 2, 6).to_dict()
        assert d["applicable"] is True and d["empty"] is True


def _full_k6_hypergraph(k6):
    cliques = enumerate_cliques(k6, 3)
    return RandomHypergraph(
        t=3,
        vertices=6,
        hyperedges=cliques.cliques,
        inclusion_prob={j: 1.0 for j in range(len(cliques))},
    )


class TestMatching:
    @pytest.mark.parametrize("mode", ["greedy", "nibble"])
    def test_full_triangle_hypergraph_is_perfectly_matched(self, k6, mode):
        hf = _full_k6_hypergraph(k6)
        res = nibble_matching(hf, mode, 0.1, seed=0)
        assert res.uncovered_count == 0
        assert res.uncovered == ()
        used = [v for e in res.matched for v in e]
        assert sorted(used) == list(range(6))

    @pytest.mark.parametrize("mode", ["greedy", "nibble"])
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_cover_identity_and_disjointness(self, k6, mode, seed):
        bundle = dense_extract(k6, 3, 2)
        hf = build_Hf(k6, 3, bundle, seed=seed)
        res = nibble_matching(hf, mode, 0.1, seed=seed)
        assert 3 * len(res.matched) + res.uncovered_count == 6
        used = [v for e in res.matched for v in e]
        assert len(used) == len(set(used))
        assert all(e in hf.hyperedges for e in res.matched)

    def test_single_hyperedge(self):
        hf = RandomHypergraph(
            t=3, vertices=6, hyperedges=((1, 3, 5),), inclusion_prob={0: 1.0}
        )
        res = nibble_matching(hf, "nibble", 0.1, seed=0)
        assert res.matched == ((1, 3, 5),)
        assert res.uncovered == (0, 2, 4)

    def test_empty_hypergraph_leaves_everything(self):
        hf = RandomHypergraph(t=3, vertices=7, hyperedges=(), inclusion_prob={})
        for mode in ("greedy", "nibble"):
            assert nibble_matching(hf, mode, 0.1, seed=0).uncovered_count == 7

    def test_same_seed_same_matching(self, k6):
        hf = _full_k6_hypergraph(k6)
        a = nibble_matching(hf, "nibble", 0.1, seed=4)
        b = nibble_matching(hf, "nibble", 0.1, seed=4)
        assert a.matched == b.matched

    def test_epsilon_outside_open_interval_rejected(self, k6):
        hf = _full_k6_hypergraph(k6)
        for eps in (0.0, 1.0, -0.5, 2.0):
            with pytest.raises(InputError, match="epsilon"):
                nibble_matching(hf, "nibble", eps, seed=0)

    def test_unknown_mode_rejected(self, k6):
        with pytest.raises(InputError, match="mode"):
            nibble_matching(_full_k6_hypergraph(k6), "exhaustive", 0.1, seed=0)


class TestCompletion:
    def test_complete_graph_leftovers_are_fully_packed(self):
        g = gen_complete(60)
        added, remaining = greedy_completion(g, 3, range(60), seed=0)
        assert remaining == ()
        assert len(added) == 20
        used = [v for e in added for v in e]
        assert sorted(used) == list(range(60))

    def test_triangle_free_graph_adds_nothing(self, petersen):
        added, remaining = greedy_completion(petersen, 3, range(10), seed=0)
        assert added == []
        assert remaining == tuple(range(10))

    def test_short_leftover_is_untouched(self, k6):
        added, remaining = greedy_completion(k6, 3, (0, 1), seed=0)
        assert added == []
        assert remaining == (0, 1)

    def test_added_cliques_live_inside_the_uncovered_set(self, k6):
        added, remaining = greedy_completion(k6, 3, (0, 2, 3, 5), seed=1)
        for tup in added:
            assert set(tup) <= {0, 2, 3, 5}
        assert set(remaining) == {0, 2, 3, 5} - {v for e in added for v in e}


class TestEndToEnd:
    def test_complete_k60_covers_everything(self):
        rep = run_end_to_end(
            gen_complete(60), 3, PipelineConfig(seed=0, mode="dense", ell=2, force=True)
        )
        assert rep.result.uncovered_count == 0
        assert rep.uncovered_fraction == 0.0
        assert rep.parameters["ell_achieved"] == 2

    def test_triangle_free_run_reports_total_leftover(self, petersen):
        rep = run_end_to_end(petersen, 3, PipelineConfig(seed=0, force=True))
        assert rep.result.uncovered_count == 10
        assert rep.uncovered_fraction == 1.0
        assert rep.stage_audits["hypothesis_failed"] is True
        assert rep.parameters["mode_effective"] == "sparse"
        assert rep.parameters["ell_achieved"] == 0
        assert rep.stage_audits["hf"]["hyperedges"] == 0

    def test_hypothesis_gate_without_force(self, petersen):
        with pytest.raises(HypothesisRejected) as exc:
            run_end_to_end(petersen, 3, PipelineConfig(seed=0))
        assert exc.value.report.branch == "fails"

    def test_identical_configs_reproduce_the_report(self):
        g = gen_complete(12)
        cfg = PipelineConfig(seed=9, mode="dense", ell=2, force=True)
        a = run_end_to_end(g, 3, cfg)
        b = run_end_to_end(g, 3, cfg)
        assert a.to_dict() == b.to_dict()

    def test_auto_mode_picks_dense_on_dense_graphs(self):
        rep = run_end_to_end(
            gen_complete(12), 3, PipelineConfig(seed=1, ell=2, force=True)
        )
        assert rep.parameters["mode_requested"] == "auto"
        assert rep.parameters["mode_effective"] == "dense"

    def test_default_ell_is_two_at_desk_scale(self):
        assert default_ell(12, 3) == 2
        assert default_ell(100, 3) == 2
        rep = run_end_to_end(gen_complete(12), 3, PipelineConfig(seed=1, force=True))
        assert rep.parameters["ell_requested"] == 2

    def test_completion_only_reduces_leftover(self):
        rep = run_end_to_end(
            gen_complete(12), 3, PipelineConfig(seed=3, mode="dense", ell=2, force=True)
        )
        assert rep.stage_audits["matching"]["hf_uncovered_count"] >= rep.result.uncovered_count

    def test_completion_can_be_disabled(self):
        cfg = PipelineConfig(seed=3, mode="dense", ell=2, force=True, completion=False)
        rep = run_end_to_end(gen_complete(12), 3, cfg)
        assert rep.stage_audits["completion"] == {"enabled": False, "added": 0}
        assert rep.result.uncovered_count == rep.stage_audits["matching"]["hf_uncovered_count"]

    def test_stage_failures_carry_the_stage_tag(self):
        cfg = PipelineConfig(seed=0, mode="dense", ell=2, force=True, matcher="bogus")
        with pytest.raises(InputError, match=r"\[stage:matching\]"):
            run_end_to_end(gen_complete(6), 3, cfg)

    def test_unknown_mode_rejected(self, k6):
        with pytest.raises(InputError, match="mode"):
            run_end_to_end(k6, 3, PipelineConfig(seed=0, mode="both"))

    def test_irregular_graph_rejected(self):
        with pytest.raises(InputError, match="regular"):
            run_end_to_end(from_edge_list(3, [(0, 1), (1, 2)]), 3, PipelineConfig(seed=0))

    def test_stage_seeds_are_deterministic_and_distinct(self):
        g = gen_complete(12)
        a = run_end_to_end(g, 3, PipelineConfig(seed=11, ell=2, force=True))
        b = run_end_to_end(g, 3, PipelineConfig(seed=11, ell=2, force=True))
        seeds = a.parameters["stage_seeds"]
        assert seeds == b.parameters["stage_seeds"]
        assert len({*seeds.values()}) == 4

    def test_leftover_bound_is_vacuous_at_desk_scale(self):
        rep = run_end_to_end(gen_complete(12), 3, PipelineConfig(seed=2, ell=2, force=True))
        bound = rep.stage_audits["leftover_bound"]
        assert bound["value"] == pytest.approx(12 ** (1 - 1 / 648))
        assert bound["vacuous"] is True
        assert rep.stage_audits["matcher_params"] == {
            "delta_prime": pytest.approx(1 / 3),
            "gamma": 0.9,
        }

    @pytest.mark.parametrize("matcher", ["greedy", "nibble"])
    def test_both_matchers_run(self, matcher):
        cfg = PipelineConfig(seed=5, mode="dense", ell=2, force=True, matcher=matcher)
        rep = run_end_to_end(gen_complete(12), 3, cfg)
        assert rep.stage_audits["matching"]["matcher"] == matcher
        assert 0 <= rep.result.uncovered_count <= 12
