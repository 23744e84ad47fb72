"""Generative model: activation probabilities, likelihoods, sampling, priors."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare, kstest

from causalab.graphs import (
    CausalGraph,
    Intervention,
    Outcome,
    Trial,
    enumerate_dags,
    enumerate_interventions,
    outcome_space,
)
from causalab.noisyor import (
    ParamGrid,
    ParamPrior,
    Params,
    draw_param_grid,
    node_activation_prob,
    sample_outcome,
    space_trial_likelihoods,
    trial_likelihood,
)


def g3(text):
    return CausalGraph.from_text(3, text)


class TestActivationProb:
    def test_printed_spot_value(self):
        # one active parent at w_S=.75, w_B=.25
        assert node_activation_prob(1, Params(0.75, 0.25)) == pytest.approx(0.8125, abs=0)

    def test_no_parents_is_background(self):
        assert node_activation_prob(0, Params(0.42, 0.17)) == pytest.approx(0.17)

    def test_zero_parameters(self):
        assert node_activation_prob(1, Params(0.0, 0.0)) == 0.0

    def test_monotonicity(self):
        grid = np.linspace(0, 1, 6)
        for ws in grid:
            for wb in grid:
                vals = [node_activation_prob(k, Params(ws, wb)) for k in range(4)]
                assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
        for k in (0, 1, 2):
            vs = [node_activation_prob(k, Params(ws, 0.3)) for ws in grid]
            assert all(b >= a - 1e-12 for a, b in zip(vs, vs[1:]))
            vb = [node_activation_prob(k, Params(0.3, wb)) for wb in grid]
            assert all(b >= a - 1e-12 for a, b in zip(vb, vb[1:]))


class TestTrialLikelihood:
    def test_chain_do_y_factor_for_z(self):
        # under x->y->z with y fixed on, z activates at 1-(1-w_B)(1-w_S)
        w = Params(0.8, 0.1)
        chain = g3("x->y;y->z")
        c = Intervention.from_text(".+.")
        p_z1 = sum(
            trial_likelihood(chain, w, Trial(c, d))
            for d in outcome_space(c)
            if d.values[2] == 1
        )
        assert p_z1 == pytest.approx(1 - (1 - 0.1) * (1 - 0.8))

    def test_all_fixed_is_one(self):
        c = Intervention.from_text("+-+")
        (d,) = outcome_space(c)
        assert trial_likelihood(g3("x->y;y->z"), Params(0.8, 0.1), Trial(c, d)) == 1.0

    def test_empty_graph_independent_background(self):
        c = Intervention.observation(3)
        d = Outcome((0, 0, 0))
        assert trial_likelihood(g3(""), Params(0.5, 0.1), Trial(c, d)) == pytest.approx(0.9**3)

    def test_normalization_exhaustive(self):
        space = enumerate_dags(3)
        for w in (Params(0.9, 0.1), Params(0.75, 0.25), Params(0.8, 0.1)):
            for c in enumerate_interventions(3):
                liks = np.zeros(len(space))
                for d in outcome_space(c):
                    liks += space_trial_likelihoods(space, Trial(c, d), w)
                assert np.abs(liks - 1.0).max() < 1e-9

    def test_vectorized_matches_scalar(self):
        space = enumerate_dags(3)
        w = Params(0.8, 0.1)
        c = Intervention.from_text("+.-")
        for d in outcome_space(c):
            vec = space_trial_likelihoods(space, Trial(c, d), w)
            ref = [trial_likelihood(g, w, Trial(c, d)) for g in space.graphs]
            assert np.allclose(vec, ref, atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 542), st.integers(0, 80))
    def test_normalization_property_four_var(self, gi, ci):
        space = enumerate_dags(4)
        g = space.graphs[gi]
        c = enumerate_interventions(4)[ci]
        w = Params(0.85, 0.15)
        total = sum(trial_likelihood(g, w, Trial(c, d)) for d in outcome_space(c))
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_interventions_distinguish_chain_from_fork(self):
        # observationally Markov-equivalent structures must separate under do()
        chain, fork = g3("x->y;y->z"), g3("y->x;y->z")
        w = Params(0.8, 0.1)
        found = False
        for c in enumerate_interventions(3):
            for d in outcome_space(c):
                if abs(
                    trial_likelihood(chain, w, Trial(c, d))
                    - trial_likelihood(fork, w, Trial(c, d))
                ) > 1e-9:
                    found = True
        assert found


class TestSampling:
    def test_deterministic_regime(self):
        rng = np.random.default_rng(0)
        chain = g3("x->y;y->z")
        c = Intervention.from_text("+..")
        for _ in range(20):
            assert sample_outcome(chain, Params(1.0, 0.0), c, rng).values == (1, 1, 1)

    def test_no_noise_observation(self):
        rng = np.random.default_rng(0)
        d = sample_outcome(g3(""), Params(0.5, 0.0), Intervention.observation(3), rng)
        assert d.values == (0, 0, 0)

    def test_chain_child_frequency_matches_analytic(self):
        # P(y=1 | do x=1) = 1-(1-.1)(1-.8) = 0.82, Monte-Carlo cross-check
        rng = np.random.default_rng(7)
        chain = g3("x->y;y->z")
        c = Intervention.from_text("+..")
        w = Params(0.8, 0.1)
        hits = sum(
            sample_outcome(chain, w, c, rng).values[1] for _ in range(100_000)
        )
        assert hits / 100_000 == pytest.approx(0.82, abs=0.01)

    def test_goodness_of_fit_spot_pairs(self):
        # empirical outcome frequencies match trial_likelihood (chi-square)
        rng = np.random.default_rng(11)
        cases = [
            (g3("x->y;y->z"), "+.."),
            (g3("x->y;x->z"), ".+."),
            (g3("x->z;y->z"), "..."),
            (g3(""), "+-."),
            (g3("x->y;x->z;y->z"), "+.."),
        ]
        w = Params(0.75, 0.25)
        for g, ctext in cases:
            c = Intervention.from_text(ctext)
            outs = outcome_space(c)
            index = {d: k for k, d in enumerate(outs)}
            counts = np.zeros(len(outs))
            n = 100_000
            for _ in range(n):
                counts[index[sample_outcome(g, w, c, rng)]] += 1
            expected = np.array(
                [n * trial_likelihood(g, w, Trial(c, d)) for d in outs]
            )
            stat, p = chisquare(counts, expected)
            assert p > 0.001, (g.to_text(), ctext, p)


class TestParamGrids:
    def test_uu_draws_uniform(self):
        grid = draw_param_grid(ParamPrior("UU"), 1000, np.random.default_rng(123))
        assert grid.size == 1000
        assert kstest(grid.w_s, "uniform").statistic < 0.05
        assert kstest(grid.w_b, "uniform").statistic < 0.05

    def test_single_sample_grid(self):
        grid = draw_param_grid(ParamPrior("UU"), 1, np.random.default_rng(0))
        assert grid.size == 1

    def test_ss_means_match_beta(self):
        # printed shapes: w_S ~ Beta(2,10) (mean 1/6), w_B ~ Beta(10,2) (mean 5/6)
        grid = draw_param_grid(ParamPrior("SS"), 100_000, np.random.default_rng(5))
        assert grid.w_s.mean() == pytest.approx(2 / 12, abs=0.02)
        assert grid.w_b.mean() == pytest.approx(10 / 12, abs=0.02)

    def test_su_prior(self):
        grid = draw_param_grid(ParamPrior("SU"), 50_000, np.random.default_rng(5))
        assert grid.w_s.mean() == pytest.approx(2 / 12, abs=0.02)
        assert abs(grid.w_b.mean() - 0.5) < 0.02

    def test_swapped_orientation(self):
        grid = draw_param_grid(ParamPrior("SS", swapped=True), 50_000,
                               np.random.default_rng(5))
        assert grid.w_s.mean() == pytest.approx(10 / 12, abs=0.02)
        assert grid.w_b.mean() == pytest.approx(2 / 12, abs=0.02)

    def test_deterministic_given_seed(self):
        a = draw_param_grid(ParamPrior("UU"), 100, np.random.default_rng(9))
        b = draw_param_grid(ParamPrior("UU"), 100, np.random.default_rng(9))
        assert np.array_equal(a.samples, b.samples)

    def test_config_forms(self):
        p = ParamPrior.from_config({"kind": "beta-uniform", "wS": [2, 10]})
        ws, wb = p.resolved()
        assert ws == ("beta", (2, 10)) and wb == ("uniform", None)
        with pytest.raises(ValueError):
            ParamPrior.from_config({"kind": "nope"})

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            ParamGrid(np.array([[1.5, 0.2]]))
        with pytest.raises(ValueError):
            draw_param_grid(ParamPrior("UU"), 0)
