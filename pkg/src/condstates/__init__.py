"""Quantum conditional states: joint, marginal and conditional rules, Bayesian
inversion, belief propagation, channel states and hybrid measurement states."""

from condstates.channels import (
    ChoiState,
    CptpReport,
    KrausChannel,
    apply,
    channel_action_from_state,
    compose_states,
    jamiolkowski,
    kraus_from_choi,
    random_cptp,
    verify_cptp,
)
from condstates.errors import CondStatesError
from condstates.measurement import (
    HybridState,
    Povm,
    condition_on_outcome,
    hybrid_state,
    measurement_channel,
    outcome_distribution,
)
from condstates.regions import (
    CompositeRegion,
    LabeledOperator,
    RegionSpec,
    composite,
    identity,
    lift,
    permute_factors,
    tensor,
)
from condstates.scenario import Scenario, build_cat_scenario, run
from condstates.states import (
    ConditionalState,
    DensityOperator,
    JointState,
    bayes_invert,
    conditional_from_joint,
    joint_from_conditional,
    marginalize,
    propagate,
    star,
)
from condstates.tolerances import Tolerances, use_tolerances

__version__ = "0.1.0"
