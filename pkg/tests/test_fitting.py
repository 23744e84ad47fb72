"""Fitting pipeline: NLL forms, MLE optimization, information criteria,
generate-then-score round trips, and a small recovery study."""

import math

import numpy as np
import pytest

from causalab.devices import Condition
from causalab.exceptions import DataFormatError
from causalab.fitting import (
    FitResult,
    ParticipantData,
    ProblemData,
    best_by_bic,
    compare_models,
    fit_all_judgment_models,
    fit_mle,
    intervention_nll,
    judgment_nll,
    recovery_study,
    simulate_judgments,
    w_mode_for,
)
from causalab.graphs import (
    CausalGraph,
    Intervention,
    Trial,
    enumerate_interventions,
    hypothesis_space,
)
from causalab.learners import JudgmentModelSpec, se_update
from causalab.localfocus import InterventionModelSpec, LocalGainCache, intervention_choice_probs
from causalab.noisyor import Params, sample_outcome

W = Params(0.9, 0.1)
COND = Condition(0.9, 0.1, True, "remain")
DEVICES = ["x->y", "x->y;x->z", "x->y;y->z", "x->z;y->z", "x->y;x->z;y->z"]


def make_trials(device_text, n_tests, rng, chooser=None):
    g = CausalGraph.from_text(3, device_text)
    cands = enumerate_interventions(3)
    trials = []
    for _ in range(n_tests):
        c = cands[rng.integers(27)] if chooser is None else chooser(rng)
        trials.append(Trial(c, sample_outcome(g, W, c, rng)))
    return tuple(trials)


def synth_participant(pid, judge, rng, n_problems=5, n_tests=6):
    problems = []
    for k in range(n_problems):
        trials = make_trials(DEVICES[k % 5], n_tests, rng)
        b = CausalGraph.empty(3)
        judgments = []
        for tr in trials:
            b = judge(b, tr, rng)
            judgments.append(b)
        problems.append(ProblemData(f"d{k+1}", 3, trials, tuple(judgments)))
    return ParticipantData(pid, "synthetic", COND, tuple(problems))


def se_judge(rho):
    def judge(b, tr, rng):
        return se_update(b, tr) if rng.random() < rho else b

    return judge


def baseline_judge(space):
    def judge(b, tr, rng):
        return space.graphs[rng.integers(len(space))]

    return judge


class TestJudgmentNll:
    def test_baseline_closed_form(self):
        rng = np.random.default_rng(0)
        data = synth_participant("p", se_judge(1.0), rng)
        nll = judgment_nll(JudgmentModelSpec(kind="Baseline"), data, W)
        assert nll == pytest.approx(30 * math.log(25))

    def test_ns_epsilon_one_is_baseline(self):
        rng = np.random.default_rng(0)
        data = synth_participant("p", se_judge(1.0), rng)
        spec = JudgmentModelSpec.from_config(
            {"kind": "NS", "lambda": 1.5, "omega": 5, "epsilon": 1.0}
        )
        assert judgment_nll(spec, data, W) == pytest.approx(30 * math.log(25))

    def test_se_round_trip_zero_nll(self):
        rng = np.random.default_rng(1)
        data = synth_participant("p", se_judge(1.0), rng)
        spec = JudgmentModelSpec.from_config({"kind": "SE", "rho": 1.0, "epsilon": 0.0})
        assert judgment_nll(spec, data, W) == pytest.approx(0.0, abs=1e-9)

    def test_problem_order_permutation_invariance(self):
        rng = np.random.default_rng(2)
        data = synth_participant("p", se_judge(0.8), rng)
        spec = JudgmentModelSpec.from_config(
            {"kind": "NS", "lambda": 1.0, "omega": 3, "epsilon": 0.1}
        )
        a = judgment_nll(spec, data, W)
        reordered = ParticipantData(
            data.participant_id, data.experiment, data.condition,
            data.problems[::-1],
        )
        assert judgment_nll(spec, reordered, W) == pytest.approx(a, abs=1e-9)

    def test_skipped_judgments_excluded(self):
        rng = np.random.default_rng(3)
        data = synth_participant("p", se_judge(1.0), rng, n_problems=1)
        problem = data.problems[0]
        judgments = list(problem.judgments)
        judgments[2] = None
        skipped = ParticipantData(
            "p", "synthetic", COND,
            (ProblemData("d1", 3, problem.trials, tuple(judgments)),),
        )
        nll = judgment_nll(JudgmentModelSpec(kind="Baseline"), skipped, W)
        assert nll == pytest.approx(5 * math.log(25))

    def test_floor_prevents_infinite_nll(self):
        rng = np.random.default_rng(4)
        data = synth_participant("p", baseline_judge(hypothesis_space(3)), rng,
                                 n_problems=1, n_tests=1)
        spec = JudgmentModelSpec.from_config({"kind": "SE", "rho": 1.0, "epsilon": 0.0})
        nll = judgment_nll(spec, data, W)
        assert math.isfinite(nll)
        assert nll <= -math.log(1e-12) + 1e-9


class TestInterventionNll:
    def test_baseline_closed_form(self):
        rng = np.random.default_rng(5)
        data = synth_participant("p", se_judge(1.0), rng, n_problems=2)
        spec = InterventionModelSpec("baseline")
        assert intervention_nll(spec, data, W) == pytest.approx(12 * math.log(27))

    def test_global_theta_zero(self):
        rng = np.random.default_rng(5)
        data = synth_participant("p", se_judge(1.0), rng, n_problems=2)
        spec = InterventionModelSpec("global", theta=0.0)
        assert intervention_nll(spec, data, W) == pytest.approx(12 * math.log(27))

    def test_effects_chooser_recovered_over_global(self):
        # generate choices from an effects-focused chooser with large eta
        space = hypothesis_space(3)
        cache = LocalGainCache(space, W)
        gen = InterventionModelSpec("effects", eta=25.0, rho=0.0)
        rng = np.random.default_rng(6)
        problems = []
        for k in range(4):
            g = CausalGraph.from_text(3, DEVICES[k])
            b = CausalGraph.empty(3)
            trials, judgments = [], []
            recent, full = [], []
            for _ in range(6):
                probs = intervention_choice_probs(gen, b, recent, full, W, space, cache)
                c = cache.candidates[rng.choice(27, p=probs)]
                tr = Trial(c, sample_outcome(g, W, c, rng))
                trials.append(tr)
                full.append(tr)
                recent.append(tr)
                b2 = se_update(b, tr)
                judgments.append(b2)
                if b2 != b:
                    recent = []
                    b = b2
            problems.append(ProblemData(f"d{k+1}", 3, tuple(trials), tuple(judgments)))
        data = ParticipantData("p", "synthetic", COND, tuple(problems))
        nll_effects = intervention_nll(gen, data, W)
        nll_global = intervention_nll(InterventionModelSpec("global", theta=25.0), data, W)
        assert nll_effects < nll_global

    def test_fit_intervention_model(self):
        rng = np.random.default_rng(7)
        data = synth_participant("p", se_judge(0.9), rng, n_problems=2)
        result = fit_mle("baseline", data, W, restarts=1,
                         rng=np.random.default_rng(0), target="intervention")
        assert result.nll == pytest.approx(12 * math.log(27))
        assert result.n_params == 0


class TestFitMle:
    def test_determinism(self):
        rng = np.random.default_rng(8)
        data = synth_participant("p", se_judge(0.85), rng)
        a = fit_mle("SE", data, W, restarts=4, rng=np.random.default_rng(42))
        b = fit_mle("SE", data, W, restarts=4, rng=np.random.default_rng(42))
        assert a == b

    def test_fitted_nll_at_most_epsilon_one(self):
        rng = np.random.default_rng(9)
        data = synth_participant("p", se_judge(0.85), rng)
        baseline = judgment_nll(JudgmentModelSpec(kind="Baseline"), data, W)
        for kind in ("SE", "WSLS", "NS-RE"):
            fit = fit_mle(kind, data, W, restarts=3, rng=np.random.default_rng(0))
            assert fit.nll <= baseline + 1e-6

    def test_bic_arithmetic(self):
        rng = np.random.default_rng(10)
        data = synth_participant("p", se_judge(0.85), rng)
        fit = fit_mle("SE", data, W, restarts=2, rng=np.random.default_rng(0))
        assert fit.bic == pytest.approx(2 * fit.nll + fit.n_params * math.log(fit.n_obs))
        baseline = fit_mle("Baseline", data, W, restarts=1, rng=np.random.default_rng(0))
        assert baseline.pseudo_r2 == 0.0
        assert fit.pseudo_r2 == pytest.approx(1 - fit.nll / baseline.nll)

    def test_baseline_generated_data_prefers_baseline(self):
        rng = np.random.default_rng(11)
        data = synth_participant("p", baseline_judge(hypothesis_space(3)), rng,
                                 n_problems=6)
        fits = fit_all_judgment_models(
            data, W, models=("Baseline", "SE", "WSLS", "Rational"),
            restarts=3, rng=np.random.default_rng(1),
        )
        assert best_by_bic(fits) == "Baseline"
        for kind in ("SE", "WSLS", "Rational"):
            assert fits[kind].params["epsilon"] >= 0.9

    def test_single_observation_finite(self):
        rng = np.random.default_rng(12)
        data = synth_participant("p", baseline_judge(hypothesis_space(3)), rng,
                                 n_problems=1, n_tests=1)
        fit = fit_mle("SE", data, W, restarts=2, rng=np.random.default_rng(0))
        assert math.isfinite(fit.nll)

    def test_restart_validation(self):
        rng = np.random.default_rng(13)
        data = synth_participant("p", se_judge(1.0), rng, n_problems=1)
        with pytest.raises(ValueError):
            fit_mle("SE", data, W, restarts=0)

    def test_no_scorable_judgments_raises(self):
        trials = make_trials("x->y", 3, np.random.default_rng(0))
        problem = ProblemData("d1", 3, trials, (None, None, None))
        data = ParticipantData("p", "x", COND, (problem,))
        with pytest.raises(DataFormatError):
            judgment_nll(JudgmentModelSpec(kind="Baseline"), data, W)


class TestCompareModels:
    def test_fewer_params_wins_ties(self):
        a = FitResult("WSLS", "judgment", "p", {"epsilon": 0.1}, 100.0, 1, 30,
                      2 * 100 + 1 * math.log(30), 0.2)
        b = FitResult("SE", "judgment", "p", {"rho": 0.5, "epsilon": 0.1}, 100.0,
                      2, 30, 2 * 100 + 2 * math.log(30), 0.2)
        assert best_by_bic({"WSLS": a, "SE": b}) == "WSLS"

    def test_summary_rows(self):
        a = FitResult("WSLS", "judgment", "p1", {"epsilon": 0.1}, 100.0, 1, 30, 203.4, 0.2)
        b = FitResult("Baseline", "judgment", "p1", {}, 120.0, 0, 30, 240.0, 0.0)
        rows = compare_models({"WSLS": [a], "Baseline": [b]})
        assert rows[0]["model"] == "WSLS"
        assert rows[0]["n_best_fit"] == 1
        assert rows[1]["median_pseudo_r2"] == 0.0


class TestUnknownNoiseFitting:
    def test_grid_mode_exercises_marginal_paths(self):
        from causalab.noisyor import ParamPrior, draw_param_grid

        rng = np.random.default_rng(21)
        data = synth_participant("p", se_judge(0.9), rng, n_problems=3)
        unknown = ParticipantData(
            "p", "synthetic", Condition(0.9, 0.1, w_known=False, reporting="remain"),
            data.problems,
        )
        grid = draw_param_grid(ParamPrior("UU"), 60, np.random.default_rng(0))
        assert isinstance(w_mode_for(unknown, grid), type(grid))
        fits = fit_all_judgment_models(
            unknown, grid, models=("Baseline", "SE", "WSLS", "NS-RE"),
            restarts=2, rng=np.random.default_rng(1),
        )
        assert all(math.isfinite(f.nll) for f in fits.values())
        assert best_by_bic(fits) == "SE"
        ispec = InterventionModelSpec("mixed", eta=2.0, rho=0.5)
        assert math.isfinite(intervention_nll(ispec, unknown, grid))

    def test_ns_corpus_beats_baseline_bic(self):
        spec = JudgmentModelSpec.from_config(
            {"kind": "NS", "lambda": 2.0, "omega": 5.0, "epsilon": 0.05}
        )
        total_ns, total_baseline = 0.0, 0.0
        for k in range(3):
            rng = np.random.default_rng(300 + k)
            base = synth_participant(f"p{k}", se_judge(0.5), rng, n_problems=4)
            corpus = simulate_judgments(spec, base, W, np.random.default_rng(400 + k))
            fit = fit_mle("NS", corpus, W, restarts=2, rng=np.random.default_rng(5))
            baseline = fit_mle("Baseline", corpus, W, restarts=1,
                               rng=np.random.default_rng(5))
            total_ns += fit.bic
            total_baseline += baseline.bic
        assert total_ns < total_baseline


class TestGenerateThenScore:
    def test_simulated_se_stream_scores_zero(self):
        rng = np.random.default_rng(14)
        base = synth_participant("p", se_judge(1.0), rng, n_problems=2)
        spec = JudgmentModelSpec.from_config({"kind": "SE", "rho": 1.0, "epsilon": 0.0})
        synthetic = simulate_judgments(spec, base, W, np.random.default_rng(0))
        assert judgment_nll(spec, synthetic, W) == pytest.approx(0.0, abs=1e-9)

    def test_recovery_study_small(self):
        rng = np.random.default_rng(15)
        participants = [
            synth_participant(f"p{k}", se_judge(0.9), np.random.default_rng(100 + k),
                              n_problems=4)
            for k in range(2)
        ]
        models = ("Baseline", "SE", "WSLS")
        fitted = {
            p.participant_id: fit_all_judgment_models(
                p, w_mode_for(p), models, restarts=2, rng=np.random.default_rng(5)
            )
            for p in participants
        }
        confusion = recovery_study(participants, fitted, np.random.default_rng(6),
                                   models, restarts=2)
        total = sum(confusion.values())
        assert total == len(participants) * len(models)
        # the strongly identifiable generators recover as themselves
        assert confusion[("Baseline", "Baseline")] == 2
        assert confusion[("SE", "SE")] == 2
