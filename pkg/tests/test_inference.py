"""Exact inference against brute-force oracles.

The oracle here is a from-scratch dict-based evaluation of the noisy-OR
likelihood and Bayes rule, sharing no code with the package internals.
"""

import itertools

import numpy as np
import pytest

from causalab.exceptions import DegenerateContextError, DegenerateEvidenceError
from causalab.graphs import (
    CausalGraph,
    Intervention,
    Outcome,
    Trial,
    enumerate_dags,
    enumerate_interventions,
    hypothesis_space,
    outcome_space,
)
from causalab.inference import (
    BeliefDistribution,
    GridBelief,
    edge_conditional,
    edge_marginals,
    expected_info_gain,
    greedy_intervention,
    posterior_known,
    posterior_marginal,
    predictive_distribution,
    shannon_entropy,
)
from causalab.noisyor import ParamGrid, Params, draw_param_grid, ParamPrior, sample_outcome


# -- independent oracle --------------------------------------------------------

def oracle_parents(g: CausalGraph, x: int) -> list:
    out = []
    for (i, j), s in zip([(0, 1), (0, 2), (1, 2)], g.edges):
        if s == 1 and j == x:
            out.append(i)
        if s == -1 and i == x:
            out.append(j)
    return out


def oracle_trial_likelihood(g, w_s, w_b, settings, values):
    lik = 1.0
    for x in range(3):
        if settings[x] != 0:
            continue
        active = sum(values[p] for p in oracle_parents(g, x))
        p1 = 1 - (1 - w_b) * (1 - w_s) ** active
        lik *= p1 if values[x] == 1 else 1 - p1
    return lik


def oracle_posterior(graphs, prior, trials, w_s, w_b):
    post = list(prior)
    for settings, values in trials:
        post = [
            p * oracle_trial_likelihood(g, w_s, w_b, settings, values)
            for p, g in zip(post, graphs)
        ]
    total = sum(post)
    return [p / total for p in post]


FIXTURE_TRIAL = (Intervention.from_text("+.."), Outcome((1, 1, 0)))


class TestPosteriorKnown:
    def test_empty_evidence_returns_prior(self):
        space = hypothesis_space(3)
        prior = BeliefDistribution.uniform(space)
        assert posterior_known(prior, [], Params(0.8, 0.1)) is prior

    def test_brute_force_oracle(self):
        space = hypothesis_space(3)
        prior = BeliefDistribution.uniform(space)
        c, d = FIXTURE_TRIAL
        post = posterior_known(prior, [Trial(c, d)], Params(0.8, 0.1))
        expected = oracle_posterior(
            space.graphs, [1 / 25] * 25, [(c.settings, d.values)], 0.8, 0.1
        )
        assert np.allclose(post.probs, expected, atol=1e-12)
        # marginal P(x->y forward) from the oracle numbers
        fwd = sum(p for p, g in zip(expected, space.graphs) if g.edges[0] == 1)
        marg = edge_marginals(post)[0, 2]
        assert marg == pytest.approx(fwd, abs=1e-12)

    def test_point_mass_stays(self):
        space = hypothesis_space(3)
        g = CausalGraph.from_text(3, "x->y")
        prior = BeliefDistribution.point_mass(space, g)
        c, d = FIXTURE_TRIAL
        post = posterior_known(prior, [Trial(c, d)], Params(0.8, 0.1))
        assert post.probs[space.index_of(g)] == pytest.approx(1.0)

    def test_batch_equals_sequential_permutations(self):
        space = hypothesis_space(3)
        prior = BeliefDistribution.uniform(space)
        w = Params(0.75, 0.25)
        rng = np.random.default_rng(3)
        cands = enumerate_interventions(3)
        trials = []
        g_true = CausalGraph.from_text(3, "x->y;y->z")
        for _ in range(12):
            c = cands[rng.integers(27)]
            trials.append(Trial(c, sample_outcome(g_true, w, c, rng)))
        batch = posterior_known(prior, trials, w)
        for perm in (trials, trials[::-1], [trials[i] for i in rng.permutation(12)]):
            seq = prior
            for t in perm:
                seq = posterior_known(seq, [t], w)
            assert np.abs(seq.probs - batch.probs).max() < 1e-9

    def test_degenerate_evidence_raises(self):
        space = hypothesis_space(3)
        g = CausalGraph.from_text(3, "x->y")
        prior = BeliefDistribution.point_mass(space, g)
        c = Intervention.from_text("+..")
        # y cannot stay off under x->y with w_S=1, w_B=0
        with pytest.raises(DegenerateEvidenceError):
            posterior_known(prior, [Trial(c, Outcome((1, 0, 0)))], Params(1.0, 0.0))


class TestPosteriorMarginal:
    def test_single_point_grid_equals_known(self):
        space = hypothesis_space(3)
        prior = BeliefDistribution.uniform(space)
        c, d = FIXTURE_TRIAL
        w = Params(0.67, 0.21)
        grid = ParamGrid(np.array([[0.67, 0.21]]))
        a = posterior_marginal(prior, [Trial(c, d)], grid)
        b = posterior_known(prior, [Trial(c, d)], w)
        assert np.allclose(a.probs, b.probs, atol=1e-12)

    def test_empty_evidence_returns_prior(self):
        space = hypothesis_space(3)
        prior = BeliefDistribution.uniform(space)
        grid = draw_param_grid(ParamPrior("UU"), 10, np.random.default_rng(0))
        assert posterior_marginal(prior, [], grid) is prior

    def test_quadrature_oracle(self):
        # deterministic 101x101 midpoint lattice as the integration oracle
        space = hypothesis_space(3)
        prior = BeliefDistribution.uniform(space)
        trials = [
            Trial(Intervention.from_text("+.."), Outcome((1, 1, 0))),
            Trial(Intervention.from_text(".+."), Outcome((0, 1, 1))),
        ]
        ticks = (np.arange(101) + 0.5) / 101
        lattice = ParamGrid(
            np.array([(ws, wb) for ws in ticks for wb in ticks])
        )
        mc_grid = draw_param_grid(ParamPrior("UU"), 1000, np.random.default_rng(42))
        a = posterior_marginal(prior, trials, lattice)
        b = posterior_marginal(prior, trials, mc_grid)
        assert 0.5 * np.abs(a.probs - b.probs).sum() < 0.02

    def test_grid_doubling_stability(self):
        space = hypothesis_space(3)
        prior = BeliefDistribution.uniform(space)
        trials = [Trial(*FIXTURE_TRIAL)]
        a = posterior_marginal(
            prior, trials, draw_param_grid(ParamPrior("UU"), 1000, np.random.default_rng(1))
        )
        b = posterior_marginal(
            prior, trials, draw_param_grid(ParamPrior("UU"), 2000, np.random.default_rng(2))
        )
        assert 0.5 * np.abs(a.probs - b.probs).sum() < 0.01


class TestEntropy:
    def test_uniform_25(self):
        assert shannon_entropy(np.full(25, 1 / 25)) == pytest.approx(np.log2(25))

    def test_point_mass(self):
        assert shannon_entropy([1.0, 0.0, 0.0]) == 0.0

    def test_uniform_three(self):
        assert shannon_entropy([1 / 3] * 3) == pytest.approx(np.log2(3))


class TestExpectedInfoGain:
    def test_point_mass_prior_zero(self):
        space = hypothesis_space(3)
        prior = BeliefDistribution.point_mass(space, CausalGraph.from_text(3, "x->y"))
        w = Params(0.8, 0.1)
        for c in enumerate_interventions(3):
            assert abs(expected_info_gain(prior, c, w)) < 1e-9

    def test_all_fixed_zero(self):
        space = hypothesis_space(3)
        prior = BeliefDistribution.uniform(space)
        assert expected_info_gain(prior, Intervention.from_text("+-+"), Params(0.8, 0.1)) == pytest.approx(0.0, abs=1e-12)

    def test_brute_force_oracle(self):
        space = hypothesis_space(3)
        prior = BeliefDistribution.uniform(space)
        w_s, w_b = 0.8, 0.1
        c = Intervention.from_text("+..")
        h0 = np.log2(25)
        gain = 0.0
        for values in itertools.product((0, 1), repeat=2):
            d = (1, values[0], values[1])
            liks = [
                oracle_trial_likelihood(g, w_s, w_b, c.settings, d)
                for g in space.graphs
            ]
            p_d = sum(l / 25 for l in liks)
            post = [l / 25 / p_d for l in liks]
            h_post = -sum(p * np.log2(p) for p in post if p > 0)
            gain += p_d * (h0 - h_post)
        assert expected_info_gain(prior, c, Params(w_s, w_b)) == pytest.approx(gain, abs=1e-12)

    def test_nonnegative_everywhere(self):
        space = hypothesis_space(3)
        w = Params(0.8, 0.1)
        rng = np.random.default_rng(0)
        probs = rng.dirichlet(np.ones(25))
        prior = BeliefDistribution(space, probs)
        for c in enumerate_interventions(3):
            assert expected_info_gain(prior, c, w) >= -1e-9


class TestGreedy:
    def test_uniform_prior_selects_one_on(self):
        space = hypothesis_space(3)
        prior = BeliefDistribution.uniform(space)
        w = Params(0.8, 0.1)
        from causalab.graphs import classify_intervention

        best = greedy_intervention(prior, w, enumerate_interventions(3),
                                   np.random.default_rng(0))
        assert classify_intervention(best) == "1 on"

    def test_point_mass_uniform_tiebreak(self):
        space = hypothesis_space(3)
        prior = BeliefDistribution.point_mass(space, CausalGraph.empty(3))
        w = Params(0.8, 0.1)
        rng = np.random.default_rng(0)
        cands = enumerate_interventions(3)
        picks = {greedy_intervention(prior, w, cands, rng) for _ in range(250)}
        assert len(picks) > 20  # all 27 tie; nearly all should appear

    def test_two_candidate_argmax(self):
        space = hypothesis_space(3)
        prior = BeliefDistribution.uniform(space)
        w = Params(0.8, 0.1)
        cands = [Intervention.from_text("+-+"), Intervention.from_text("+..")]
        for seed in range(5):
            pick = greedy_intervention(prior, w, cands, np.random.default_rng(seed))
            assert pick == cands[1]


class TestPredictive:
    def test_chain_do_y(self):
        chain = CausalGraph.from_text(3, "x->y;y->z")
        pred = predictive_distribution(chain, Intervention.from_text(".+."), Params(0.8, 0.1))
        assert pred[0] == pytest.approx(0.1)
        assert pred[2] == pytest.approx(0.82)

    def test_empty_graph_background(self):
        pred = predictive_distribution(
            CausalGraph.empty(3), Intervention.observation(3), Params(0.8, 0.15)
        )
        assert all(v == pytest.approx(0.15) for v in pred.values())

    def test_belief_averaged_brute_force(self):
        space = hypothesis_space(3)
        prior = BeliefDistribution.uniform(space)
        c = Intervention.from_text("+..")
        w_s, w_b = 0.8, 0.1
        expected = 0.0
        for g in space.graphs:
            for values in itertools.product((0, 1), repeat=2):
                d = (1, values[0], values[1])
                if d[1] == 1:
                    expected += oracle_trial_likelihood(g, w_s, w_b, c.settings, d) / 25
        pred = predictive_distribution(prior, c, Params(w_s, w_b))
        assert pred[1] == pytest.approx(expected, abs=1e-12)

    def test_monte_carlo_agreement(self):
        g = CausalGraph.from_text(3, "x->y;x->z;y->z")
        c = Intervention.from_text("+..")
        w = Params(0.75, 0.25)
        pred = predictive_distribution(g, c, w)
        rng = np.random.default_rng(17)
        n = 100_000
        counts = np.zeros(3)
        for _ in range(n):
            counts += sample_outcome(g, w, c, rng).values
        for x in (1, 2):
            assert counts[x] / n == pytest.approx(pred[x], abs=0.01)


class TestEdgeMarginals:
    def test_uniform_counts_by_enumeration(self):
        # oracle: count graphs per state of each pair over the whole space
        space = hypothesis_space(3)
        marg = edge_marginals(BeliefDistribution.uniform(space))
        for p in range(3):
            for s, state in enumerate((-1, 0, 1)):
                count = sum(1 for g in space.graphs if g.edges[p] == state)
                assert marg[p, s] == pytest.approx(count / 25)
        # frozen oracle values: 8 backward / 9 absent / 8 forward per pair
        assert np.allclose(marg, np.array([[8, 9, 8]] * 3) / 25)

    def test_point_mass_chain(self):
        space = hypothesis_space(3)
        belief = BeliefDistribution.point_mass(space, CausalGraph.from_text(3, "x->y;y->z"))
        marg = edge_marginals(belief)
        assert marg[0, 2] == 1.0  # x->y forward

    def test_rows_sum_to_one(self):
        space = hypothesis_space(3)
        rng = np.random.default_rng(5)
        belief = BeliefDistribution(space, rng.dirichlet(np.ones(25)))
        assert np.allclose(edge_marginals(belief).sum(axis=1), 1.0)

    def test_posterior_reaggregation(self):
        space = hypothesis_space(3)
        prior = BeliefDistribution.uniform(space)
        c, d = FIXTURE_TRIAL
        post = posterior_known(prior, [Trial(c, d)], Params(0.8, 0.1))
        marg = edge_marginals(post)
        for p in range(3):
            for s, state in enumerate((-1, 0, 1)):
                direct = post.probs[space.edge_states[:, p] == state].sum()
                assert marg[p, s] == pytest.approx(direct, abs=1e-12)


class TestEdgeConditional:
    def test_no_evidence_uniform(self):
        space = hypothesis_space(3)
        probs = edge_conditional(space, (0, 1), CausalGraph.empty(3), [], Params(0.8, 0.1))
        assert np.allclose(probs, 1 / 3)

    def test_cycle_state_zero(self):
        space = hypothesis_space(3)
        others = CausalGraph.from_text(3, "x->y;y->z")
        probs = edge_conditional(space, (0, 2), others, [], Params(0.8, 0.1))
        assert probs[0] == 0.0  # backward z->x closes the loop
        assert probs[1:].sum() == pytest.approx(1.0)

    def test_brute_force_over_completions(self):
        space = hypothesis_space(3)
        c, d = FIXTURE_TRIAL
        w_s, w_b = 0.8, 0.1
        liks = []
        for state in (-1, 0, 1):
            g = CausalGraph(3, (state, 0, 0))
            liks.append(oracle_trial_likelihood(g, w_s, w_b, c.settings, d.values))
        expected = np.array(liks) / sum(liks)
        probs = edge_conditional(space, (0, 1), CausalGraph.empty(3),
                                 [Trial(c, d)], Params(w_s, w_b))
        assert np.allclose(probs, expected, atol=1e-12)

    def test_degenerate_context(self):
        space = hypothesis_space(3)
        # others already contain a 2-cycle? impossible; instead use a 3-cycle
        # context on the two other pairs plus any state at the target: the
        # pair (0,1) context below leaves no acyclic completion only if the
        # others alone are cyclic, which two edges cannot be; so check the
        # error path via an explicitly cyclic completion set instead
        with pytest.raises(DegenerateContextError):
            from causalab.inference import completion_indices

            # craft an impossible context by monkeying the edge list: a
            # 4-node space where the other three edges form a directed cycle
            space4 = hypothesis_space(4)
            others = [0] * 6
            # pairs: (0,1),(0,2),(0,3),(1,2),(1,3),(2,3); cycle 1->2->3->1
            others[3] = 1   # 1->2
            others[5] = 1   # 2->3
            others[4] = -1  # 3->1
            completion_indices(space4, 0, others)


class TestGridBelief:
    def test_marginal_matches_posterior_marginal(self):
        space = hypothesis_space(3)
        grid = draw_param_grid(ParamPrior("UU"), 50, np.random.default_rng(0))
        trials = [Trial(*FIXTURE_TRIAL)]
        gb = GridBelief(space, grid).updated(trials)
        direct = posterior_marginal(BeliefDistribution.uniform(space), trials, grid)
        assert np.allclose(gb.marginal().probs, direct.probs, atol=1e-12)

    def test_eig_nonnegative_with_grid(self):
        space = hypothesis_space(3)
        grid = draw_param_grid(ParamPrior("UU"), 30, np.random.default_rng(0))
        gb = GridBelief(space, grid).updated([Trial(*FIXTURE_TRIAL)])
        for c in enumerate_interventions(3)[:9]:
            assert expected_info_gain(gb, c, grid) >= -1e-9
