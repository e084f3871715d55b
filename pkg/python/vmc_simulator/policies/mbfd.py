"""Modified best-fit decreasing (power-aware BFD with static thresholds)"""
from ..engine import MigrationPlan, Snapshot
from .base import ConsolidationPolicy


class MbfdPolicy(ConsolidationPolicy):
    """
    Overloaded hosts shed min-RAM VMs until u <= t_high; underloaded hosts
    are evacuated whole. Every destination is the feasible host with the
    least power increase.
    """

    policy_id = "mbfd"


def mbfd_consolidate(snapshot: Snapshot) -> MigrationPlan:
    """One consolidation pass with default parameters and the snapshot's thresholds."""
    return MbfdPolicy(snapshot.thresholds, cooling=snapshot.cooling).consolidate(snapshot)
