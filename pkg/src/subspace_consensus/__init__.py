"""Averaging algorithms on dynamic networks under oblivious message adversaries.

Simulate executions, measure how the outputs collapse onto lower-dimensional
affine subspaces, and check the contraction bounds round by round.
"""

__version__ = "0.1.0"

from .graph import (  # noqa: E402
    CommGraph,
    broadcast_report,
    compose,
    compose_all,
    is_k_broadcastable,
    is_k_rooted,
    make_graph,
    root_report,
)
from .adversary import (  # noqa: E402
    AdversarySpec,
    default_relay_rounds,
    ScheduledRound,
    imposs_graph,
    next_round,
    relay_schedule,
    sample_k_broadcastable,
    sample_k_rooted,
)
from .dynamics import (  # noqa: E402
    ExecutionTrace,
    WeightRule,
    decompose_update,
    min_broadcast_weight,
    run,
    step,
    weights_for,
)
from .geometry import (  # noqa: E402
    HalfSpace,
    OrthoProjection,
    affine_dim,
    direction_projection,
    hull_volume,
    thickness,
)
