"""
Consolidation policies selectable by id.
"""

from dataclasses import fields
from typing import Any, Dict, List, Mapping, Optional, Type

from ..exceptions import ConfigError
from ..model import ThresholdConfig
from ..power import CoolingModel
from .base import (
    ConsolidationPolicy,
    PlanningState,
    PolicyParams,
    VM_SELECTIONS,
    bfd_order,
    mbfd_place,
    select_vms,
)
from .mbfd import MbfdPolicy, mbfd_consolidate
from .ecocloud import (
    EcoCloudParams,
    EcoCloudPolicy,
    ecocloud_assign_probability,
    ecocloud_consolidate,
    overload_migration_probability,
    underload_migration_probability,
)
from .granite import GranitePolicy, granite_consolidate
from .load import LoadParams, LoadPolicy, load_automaton_update, load_consolidate
from .acs import AcsParams, AcsPolicy, AntSolution, ParetoArchive, acs_consolidate, dominates
from .iqr import IqrParams, IqrPolicy, iqr_threshold

POLICIES: Dict[str, Type[ConsolidationPolicy]] = {
    cls.policy_id: cls
    for cls in (MbfdPolicy, EcoCloudPolicy, GranitePolicy, LoadPolicy, AcsPolicy, IqrPolicy)
}

PARAMS_BY_POLICY: Dict[str, Type[PolicyParams]] = {
    policy_id: cls.params_cls for policy_id, cls in POLICIES.items()
}


def params_violations(policy_id: str, params: Optional[Mapping[str, Any]],
                      path: str = "policy_params") -> List[str]:
    """Unknown keys and out-of-range values of a policy_params block."""
    params_cls = PARAMS_BY_POLICY[policy_id]
    doc = dict(params or {})
    known = {f.name for f in fields(params_cls)}
    out = [f"{path}.{k}: unknown parameter for policy {policy_id!r}" for k in sorted(set(doc) - known)]
    if out:
        return out
    try:
        return params_cls(**doc).violations(path)
    except TypeError as e:
        return [f"{path}: {e}"]


def make_policy(policy_id: str, params: Optional[Mapping[str, Any]] = None,
                thresholds: ThresholdConfig = ThresholdConfig(), seed: int = 0,
                cooling: Optional[CoolingModel] = None) -> ConsolidationPolicy:
    """
    Instantiate a policy with its own RNG stream derived from seed.

    Raises:
        ConfigError: On an unknown policy id or invalid parameters
    """
    try:
        cls = POLICIES[policy_id]
    except KeyError:
        raise ConfigError(f"unknown policy {policy_id!r}; known: {sorted(POLICIES)}") from None
    return cls(thresholds, params, seed, cooling)


__all__ = [
    "POLICIES",
    "PARAMS_BY_POLICY",
    "make_policy",
    "params_violations",
    "ConsolidationPolicy",
    "PlanningState",
    "PolicyParams",
    "VM_SELECTIONS",
    "bfd_order",
    "mbfd_place",
    "select_vms",
    "MbfdPolicy",
    "mbfd_consolidate",
    "EcoCloudParams",
    "EcoCloudPolicy",
    "ecocloud_assign_probability",
    "ecocloud_consolidate",
    "overload_migration_probability",
    "underload_migration_probability",
    "GranitePolicy",
    "granite_consolidate",
    "LoadParams",
    "LoadPolicy",
    "load_automaton_update",
    "load_consolidate",
    "AcsParams",
    "AcsPolicy",
    "AntSolution",
    "ParetoArchive",
    "acs_consolidate",
    "dominates",
    "IqrParams",
    "IqrPolicy",
    "iqr_threshold",
]
