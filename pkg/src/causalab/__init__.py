"""Active causal structure learning over noisy-OR networks.

Exact Bayesian inference and information-optimal intervention choice as
oracles, boundedly-rational judgment models (single-hypothesis local
search and friends) with local-focus intervention models, a simulation
harness, an MLE fitting/recovery pipeline, and a live session service.
"""

from .devices import Condition, Device
from .exceptions import CausalabError
from .graphs import (
    CausalGraph,
    HypothesisSpace,
    Intervention,
    Outcome,
    Trial,
    classify_intervention,
    count_dags,
    descendants,
    edit_distance,
    enumerate_dags,
    enumerate_interventions,
    hypothesis_space,
    is_acyclic,
    outcome_space,
)
from .inference import (
    BeliefDistribution,
    EvidenceLog,
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
from .learners import (
    JudgmentModelSpec,
    LearnerState,
    TransitionMatrix,
    baseline_likelihood,
    build_transition_matrix,
    gibbs_conditional,
    judgment_distribution,
    ns_predictive,
    ns_step,
    rational_likelihood,
    se_likelihood,
    se_update,
    wsls_likelihood,
)
from .localfocus import (
    Focus,
    InterventionModelSpec,
    focus_entropy,
    focus_selection_probs,
    intervention_model_likelihood,
    intervention_probs_given_focus,
    local_expected_gain,
)
from .noisyor import (
    ParamGrid,
    ParamPrior,
    Params,
    draw_param_grid,
    node_activation_prob,
    sample_outcome,
    trial_likelihood,
)

__version__ = "0.1.0"
