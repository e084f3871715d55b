"""Tests for the six consolidation policies and their shared planning machinery."""

import pytest
import sys
import os

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..', 'python'))

from vmc_simulator.engine import MigrationPlan, Move, Snapshot
from vmc_simulator.exceptions import ConfigError
from vmc_simulator.model import VM_TYPES, HostState, ThresholdConfig, VmSpec, VmState, make_host
from vmc_simulator.policies import (
    POLICIES,
    AcsParams,
    AcsPolicy,
    AntSolution,
    EcoCloudParams,
    EcoCloudPolicy,
    GranitePolicy,
    IqrParams,
    IqrPolicy,
    LoadParams,
    LoadPolicy,
    MbfdPolicy,
    ParetoArchive,
    PlanningState,
    acs_consolidate,
    dominates,
    ecocloud_assign_probability,
    ecocloud_consolidate,
    granite_consolidate,
    iqr_threshold,
    load_automaton_update,
    make_policy,
    mbfd_consolidate,
    mbfd_place,
    overload_migration_probability,
    underload_migration_probability,
)
from vmc_simulator.policies.base import bfd_order
from vmc_simulator.policies.load import NO_CHANGE
from vmc_simulator.power import TabulatedPowerModel


def build_snapshot(host_types, vms, thresholds=ThresholdConfig(0.5, 0.9), histories=None):
    """
    host_types: {host id: host type}
    vms: [(vm id, mips, ram, demanded MIPS, host id or None)]
    Hosts with residents are powered on.
    """
    hosts = {h: HostState(make_host(h, kind)) for h, kind in host_types.items()}
    states = []
    for vm_id, mips, ram, demand, h in vms:
        states.append(VmState(VmSpec(vm_id, mips, ram), host_id=h, demanded_mips=demand))
        if h is not None:
            host = hosts[h]
            host.powered_on = True
            host.resident_vms.add(vm_id)
            host.ram_used += ram
            host.demand += demand
    for host in hosts.values():
        host.utilization = host.demand / host.capacity
        if histories and host.id in histories:
            host.utilization_history.extend(histories[host.id])
    return Snapshot.of(hosts.values(), states, thresholds)


def random_snapshot(rng, thresholds=ThresholdConfig(0.3, 0.8), n_hosts=None, n_vms=None,
                    extra_vm=False):
    n_hosts = n_hosts or int(rng.integers(4, 7))
    n_vms = n_vms or int(rng.integers(1, 9))
    host_types = {h: ("hp-g4", "hp-g5")[int(rng.integers(2))] for h in range(n_hosts)}
    ram_used = {h: 0 for h in host_types}
    type_names = list(VM_TYPES)
    vms = []
    for vm_id in range(n_vms):
        mips, ram, _, _ = VM_TYPES[type_names[int(rng.integers(len(type_names)))]]
        order = [int(h) for h in rng.permutation(n_hosts)]
        h = next(h for h in order if ram_used[h] + ram <= 4096)
        ram_used[h] += ram
        vms.append((vm_id, mips, ram, mips * float(rng.random()), h))
    if extra_vm:
        mips, ram, _, _ = VM_TYPES[type_names[int(rng.integers(len(type_names)))]]
        vms.append((n_vms, mips, ram, mips * float(rng.random()), None))
    histories = {h: list(rng.random(int(rng.integers(0, 13)))) for h in host_types}
    return build_snapshot(host_types, vms, thresholds, histories)


def two_g4_hosts_and_a_newcomer(thresholds=ThresholdConfig(0.5, 0.9)):
    """G4 hosts at u = 0.2 and u = 0.8 plus an unplaced 500-MIPS VM (id 12)."""
    return build_snapshot(
        {0: "hp-g4", 1: "hp-g4"},
        [(10, 744.0, 613, 744.0, 0), (11, 2976.0, 613, 2976.0, 1), (12, 500.0, 613, 500.0, None)],
        thresholds,
    )


class TestPolicyRegistry:

    def test_all_six_policies(self):
        assert sorted(POLICIES) == ["acs", "ecocloud", "granite", "iqr", "load", "mbfd"]

    def test_make_policy_unknown(self):
        with pytest.raises(ConfigError):
            make_policy("random")

    def test_make_policy_rejects_unknown_params(self):
        with pytest.raises(ConfigError, match="policy_params.gamma"):
            make_policy("ecocloud", {"gamma": 1.0})

    def test_make_policy_applies_params(self):
        policy = make_policy("iqr", {"safety": 2.0})
        assert policy.params == IqrParams(safety=2.0)

    def test_independent_streams_per_policy(self):
        a = make_policy("ecocloud", seed=1).rng.random()
        b = make_policy("acs", seed=1).rng.random()
        assert a != b


class TestMbfdPlace:
    """Feasible host with the least power increase."""

    def test_prefers_busier_host_without_cap(self):
        """dP 3.032 W on the u=0.8 host against 4.604 W on the u=0.2 host."""
        state = PlanningState(two_g4_hosts_and_a_newcomer())
        assert abs(state.delta_power(1, 12) - 3.032) < 1e-3
        assert abs(state.delta_power(0, 12) - 4.604) < 1e-3
        assert mbfd_place(state, 12, cap=1.0) == 1

    def test_threshold_filter(self):
        """0.8 + 0.134 > 0.9 leaves the u=0.2 host as the only candidate."""
        state = PlanningState(two_g4_hosts_and_a_newcomer())
        assert mbfd_place(state, 12) == 0

    def test_single_empty_host(self):
        snapshot = build_snapshot({0: "hp-g4"}, [(0, 500.0, 613, 250.0, None)])
        assert mbfd_place(PlanningState(snapshot), 0) == 0

    def test_nothing_fits(self):
        snapshot = build_snapshot({0: "hp-g4"}, [(0, 500.0, 5000, 250.0, None)])
        assert mbfd_place(PlanningState(snapshot), 0) is None

    def test_ties_go_to_lowest_id(self):
        snapshot = build_snapshot({0: "hp-g5", 1: "hp-g4", 2: "hp-g4"},
                                  [(0, 500.0, 613, 250.0, None)])
        assert mbfd_place(PlanningState(snapshot), 0, exclude=[0]) == 1

    def test_matches_exhaustive_search(self):
        """1000 random instances against a brute-force min-dP search."""
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            snapshot = random_snapshot(rng, extra_vm=True)
            state = PlanningState(snapshot)
            vm_id = max(snapshot.vms)
            vm = snapshot.vms[vm_id]
            d = vm.demanded_mips
            cap = snapshot.thresholds.t_high
            best = None
            for h in sorted(snapshot.hosts):
                host = snapshot.hosts[h]
                residents = sorted(v for v in snapshot.vms if snapshot.vms[v].host_id == h)
                demand = 0.0
                for v in residents:
                    demand += snapshot.vms[v].demanded_mips
                ram = sum(snapshot.vms[v].spec.ram for v in residents)
                if ram + vm.spec.ram > host.spec.ram or (demand + d) / host.capacity > cap:
                    continue
                model = snapshot.power_models[h]
                dp = model.power(min(1.0, (demand + d) / host.capacity))
                if residents:
                    dp -= model.power(min(1.0, demand / host.capacity))
                if best is None or (dp, h) < best:
                    best = (dp, h)
            expected = best[1] if best else None
            assert mbfd_place(state, vm_id) == expected

    def test_scale_invariance(self):
        """Multiplying every power table by a constant never changes the choice."""
        rng = np.random.default_rng(11)
        for _ in range(200):
            snapshot = random_snapshot(rng, extra_vm=True)
            vm_id = max(snapshot.vms)
            state = PlanningState(snapshot)
            chosen = mbfd_place(state, vm_id)
            state.models = {
                h: TabulatedPowerModel(tuple(w * 3.7 for w in m.watts_at), m.model_id)
                for h, m in snapshot.power_models.items()
            }
            assert mbfd_place(state, vm_id) == chosen


class TestMbfdConsolidate:

    def test_balanced_hosts_give_empty_plan(self):
        snapshot = build_snapshot(
            {0: "hp-g4", 1: "hp-g4"},
            [(0, 2500.0, 870, 2232.0, 0), (1, 2500.0, 870, 2604.0, 1)],
        )
        assert len(mbfd_consolidate(snapshot)) == 0

    def test_overload_sheds_min_ram_vm(self):
        """u = 0.95 with residents of 1740 and 613 MB: the 613 MB VM leaves."""
        snapshot = build_snapshot(
            {0: "hp-g4", 1: "hp-g4"},
            [(0, 2500.0, 1740, 2000.0, 0), (1, 2500.0, 613, 1534.0, 0)],
        )
        assert mbfd_consolidate(snapshot).moves == (Move(1, 0, 1),)

    def test_overload_max_demand_selection(self):
        snapshot = build_snapshot(
            {0: "hp-g4", 1: "hp-g4"},
            [(0, 2500.0, 1740, 2000.0, 0), (1, 2500.0, 613, 1534.0, 0)],
        )
        policy = MbfdPolicy(snapshot.thresholds, {"vm_selection": "max-demand"})
        assert policy.consolidate(snapshot).moves == (Move(0, 0, 1),)

    def test_underloaded_host_evacuated(self):
        """u = 0.1 under t_low = 0.3, one feasible destination."""
        snapshot = build_snapshot(
            {0: "hp-g4", 1: "hp-g4"},
            [(0, 2500.0, 870, 372.0, 0), (1, 2500.0, 870, 1860.0, 1)],
            ThresholdConfig(0.3, 0.7),
        )
        assert mbfd_consolidate(snapshot).moves == (Move(0, 0, 1),)

    def test_partial_evacuation_rolled_back(self):
        """Only one of two residents fits elsewhere: nothing moves."""
        snapshot = build_snapshot(
            {0: "hp-g4", 1: "hp-g4", 2: "hp-g4"},
            [(0, 500.0, 613, 300.0, 0), (1, 500.0, 613, 300.0, 0), (2, 2500.0, 3000, 2400.0, 1)],
            ThresholdConfig(0.3, 0.9),
        )
        assert len(mbfd_consolidate(snapshot)) == 0

    def test_powered_off_hosts_never_receive_evacuees(self):
        snapshot = build_snapshot(
            {0: "hp-g4", 1: "hp-g4"},
            [(0, 500.0, 613, 300.0, 0)],
            ThresholdConfig(0.3, 0.9),
        )
        assert len(mbfd_consolidate(snapshot)) == 0


class TestPlanOrdering:
    """RAM-ordered plans out of a planning state."""

    def swap_snapshot(self):
        """Hosts 0 and 1 are RAM-full (4093 MB); host 2 is empty."""
        return build_snapshot(
            {0: "hp-g4", 1: "hp-g4", 2: "hp-g4"},
            [
                (0, 2500.0, 1740, 500.0, 0), (1, 2500.0, 1740, 500.0, 0), (2, 500.0, 613, 100.0, 0),
                (3, 2500.0, 1740, 500.0, 1), (4, 2500.0, 1740, 500.0, 1), (5, 500.0, 613, 100.0, 1),
            ],
        )

    def test_departures_make_room(self):
        snapshot = self.swap_snapshot()
        state = PlanningState(snapshot)
        state.move(3, 2)
        state.move(0, 1)
        plan = state.plan()
        assert plan.moves == (Move(3, 1, 2), Move(0, 0, 1))
        assert plan.violations(snapshot) == []

    def test_cycle_withdraws_the_whole_evacuation(self):
        """Host 0 would be emptied but two of its moves wait on host 1, which waits on host 0."""
        snapshot = self.swap_snapshot()
        state = PlanningState(snapshot)
        state.move(2, 2)
        state.move(0, 1)
        state.move(1, 1)
        state.move(3, 0)
        state.move(4, 0)
        assert state.plan().moves == ()

    def test_partial_relief_keeps_its_feasible_moves(self):
        """Host 0 is not being emptied, so its feasible move survives the dropped cycle."""
        snapshot = self.swap_snapshot()
        state = PlanningState(snapshot)
        state.move(2, 2)
        state.move(0, 1)
        state.move(3, 0)
        state.move(4, 0)
        assert state.plan().moves == (Move(2, 0, 2),)


class TestIqr:
    """T = clamp(1 - s * IQR, 0.5, 1.0)."""

    def test_constant_history(self):
        assert iqr_threshold([0.4] * 12) == 1.0

    def test_iqr_point_two(self):
        """Q1 0.2, Q3 0.4 with s = 1.5 gives 0.7."""
        assert abs(iqr_threshold([0.1, 0.2, 0.3, 0.4, 0.5]) - 0.7) < 1e-12

    def test_three_samples_fall_back(self):
        assert iqr_threshold([0.1, 0.5, 0.9], fallback=0.85) == 0.85

    def test_floor(self):
        assert iqr_threshold([0.0, 0.0, 1.0, 1.0]) == 0.5

    def test_window_uses_latest_samples(self):
        history = [0.0, 1.0] * 10 + [0.3] * 4
        assert iqr_threshold(history, IqrParams(window=4)) == 1.0

    def test_bad_window(self):
        with pytest.raises(ConfigError):
            IqrParams.from_dict({"window": 2})

    def test_dynamic_threshold_flags_earlier(self):
        """A volatile host at u = 0.8 is overloaded for IQR but not for MBFD."""
        snapshot = build_snapshot(
            {0: "hp-g4", 1: "hp-g4"},
            [(0, 2500.0, 870, 2000.0, 0), (1, 2500.0, 870, 976.0, 0)],
            histories={0: [0.1, 0.2, 0.3, 0.4, 0.5]},
        )
        state = PlanningState(snapshot)
        assert IqrPolicy(snapshot.thresholds).is_overloaded(state, 0)
        assert not MbfdPolicy(snapshot.thresholds).is_overloaded(state, 0)

    def test_short_history_uses_static_threshold(self):
        snapshot = build_snapshot(
            {0: "hp-g4"},
            [(0, 2500.0, 870, 2000.0, 0), (1, 2500.0, 870, 976.0, 0)],
            histories={0: [0.1, 0.9]},
        )
        assert not IqrPolicy(snapshot.thresholds).is_overloaded(PlanningState(snapshot), 0)


class TestEcoCloudFunctions:
    """Assignment and migration probabilities."""

    params = EcoCloudParams()

    def test_empty_host_never_volunteers(self):
        assert ecocloud_assign_probability(0.0, self.params, 0.9) == 0.0

    def test_zero_at_threshold(self):
        assert ecocloud_assign_probability(0.9, self.params, 0.9) == 0.0

    def test_peak_is_one(self):
        """Maximum at u = p T / (p + 1) = 0.675."""
        assert abs(ecocloud_assign_probability(0.675, self.params, 0.9) - 1.0) < 1e-12

    def test_value_at_point_three(self):
        assert abs(ecocloud_assign_probability(0.3, self.params, 0.9) - 0.2341) < 1e-4

    def test_bounded_and_unimodal(self):
        us = np.linspace(0.0, 1.0, 2001)
        f = np.array([ecocloud_assign_probability(float(u), self.params, 0.9) for u in us])
        assert f.min() >= 0.0 and f.max() <= 1.0
        peak = int(np.argmax(f))
        assert np.all(np.diff(f[:peak + 1]) >= 0)
        assert np.all(np.diff(f[peak:]) <= 0)
        assert abs(us[peak] - 0.675) < 1e-3

    def test_underload_probability(self):
        """0.25 * (1 - 0.15 / 0.3) = 0.125."""
        assert abs(underload_migration_probability(0.15, 0.3, 0.25) - 0.125) < 1e-12

    def test_underload_boundary(self):
        assert underload_migration_probability(0.3, 0.3, 0.25) == 0.0

    def test_overload_probability(self):
        assert abs(overload_migration_probability(1.0, 0.9, 0.25) - 0.25) < 1e-12
        assert overload_migration_probability(0.9, 0.9, 0.25) == 0.0

    def test_overload_probability_at_full_threshold(self):
        """t_high = 1.0 is a valid threshold; demand above capacity still migrates."""
        assert overload_migration_probability(1.0, 1.0, 0.25) == 0.0
        assert overload_migration_probability(0.7, 1.0, 0.25) == 0.0
        assert overload_migration_probability(1.3, 1.0, 0.25) == 0.25

    def test_bernoulli_frequency(self):
        """10^5 trials at u = 0.3 accept about 23.41% of the time."""
        policy = EcoCloudPolicy(seed=5)
        f = ecocloud_assign_probability(0.3, self.params, 0.9)
        hits = sum(policy._trial(f) for _ in range(100_000))
        assert abs(hits / 100_000 - 0.2341) < 0.01

    def test_param_ranges(self):
        with pytest.raises(ConfigError):
            EcoCloudParams.from_dict({"alpha": 0.0})


class TestEcoCloudPolicy:

    def test_balanced_hosts_give_empty_plan(self):
        snapshot = build_snapshot(
            {0: "hp-g4", 1: "hp-g4"},
            [(0, 2500.0, 870, 2232.0, 0), (1, 2500.0, 870, 2604.0, 1)],
        )
        assert len(ecocloud_consolidate(snapshot, seed=3)) == 0

    def test_same_seed_same_plan(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            snapshot = random_snapshot(rng)
            assert ecocloud_consolidate(snapshot, seed=4) == ecocloud_consolidate(snapshot, seed=4)

    def test_full_threshold_consolidates(self):
        """t_low 0.6 with the default gap gives t_high = 1.0."""
        snapshot = build_snapshot(
            {0: "hp-g4", 1: "hp-g4", 2: "hp-g4"},
            [
                (0, 2500.0, 870, 2500.0, 0),
                (1, 2500.0, 870, 2000.0, 0),
                (2, 500.0, 613, 100.0, 1),
                (3, 500.0, 613, 300.0, 2),
            ],
            ThresholdConfig.preset(0.6),
        )
        assert snapshot.thresholds.t_high == 1.0
        for seed in range(20):
            plan = ecocloud_consolidate(snapshot, seed=seed)
            assert plan.violations(snapshot) == []

    def test_initial_placement_respects_ram(self):
        hosts = {h: "hp-g4" for h in range(10)}
        vms = [(i, 2000.0, 1740, 1000.0, None) for i in range(12)]
        snapshot = build_snapshot(hosts, vms)
        policy = EcoCloudPolicy(snapshot.thresholds, seed=0)
        assignment = policy.initial_placement(list(snapshot.vms.values()), snapshot)
        assert sorted(assignment) == list(range(12))
        for h in hosts:
            assert sum(1740 for v, x in assignment.items() if x == h) <= 4096


class TestGranite:
    """Temperature-driven overload and cooling-weighted placement."""

    def test_g5_at_full_load_is_hot(self):
        """135 W gives 70.9 C over a 70 C threshold."""
        snapshot = build_snapshot({0: "hp-g5"}, [(0, 5320.0, 870, 5320.0, 0)])
        policy = GranitePolicy(snapshot.thresholds)
        state = PlanningState(snapshot)
        assert abs(policy.temperature(state, 0) - 70.9) < 1e-9
        assert policy.is_hot(state, 0)

    def test_g4_at_full_load_is_not_hot(self):
        snapshot = build_snapshot({0: "hp-g4"}, [(0, 3720.0, 870, 3720.0, 0)])
        assert not GranitePolicy(snapshot.thresholds).is_hot(PlanningState(snapshot), 0)

    def test_hot_host_sheds_until_cool(self):
        snapshot = build_snapshot(
            {0: "hp-g5", 1: "hp-g4"},
            [(0, 1000.0, 613, 1000.0, 0), (1, 4320.0, 1740, 4320.0, 0)],
        )
        assert granite_consolidate(snapshot).moves == (Move(0, 0, 1),)

    def test_cpu_overload_without_heat(self):
        """A G4 host never runs hot; above t_high it still sheds load."""
        snapshot = build_snapshot(
            {0: "hp-g4", 1: "hp-g4"},
            [(0, 2500.0, 870, 2500.0, 0), (1, 1000.0, 613, 1000.0, 0), (2, 2500.0, 870, 2000.0, 1)],
        )
        policy = GranitePolicy(snapshot.thresholds)
        state = PlanningState(snapshot)
        assert not policy.is_hot(state, 0)
        assert policy.is_overloaded(state, 0)
        assert granite_consolidate(snapshot).moves == (Move(1, 0, 1),)

    def test_cost_scales_power_increase(self):
        """At CoP 2 the cost is 1.5 dP; the cheaper dP host still wins."""
        snapshot = two_g4_hosts_and_a_newcomer(ThresholdConfig(0.5, 1.0))
        policy = GranitePolicy(snapshot.thresholds)
        state = PlanningState(snapshot)
        assert abs(policy.placement_cost(state, 1, 12) - 1.5 * state.delta_power(1, 12)) < 1e-9
        assert policy.find_host(state, 12) == 1

    def test_cool_balanced_hosts_give_empty_plan(self):
        snapshot = build_snapshot(
            {0: "hp-g4", 1: "hp-g4"},
            [(0, 2500.0, 870, 2232.0, 0), (1, 2500.0, 870, 2604.0, 1)],
        )
        assert len(granite_consolidate(snapshot)) == 0


class TestLoadAutomaton:
    """Linear reward-penalty updates."""

    uniform = np.full(3, 1.0 / 3.0)

    def test_reward(self):
        out = load_automaton_update(self.uniform, 0, True, LoadParams(a=0.1))
        assert np.allclose(out, [0.4, 0.3, 0.3], atol=1e-12)

    def test_penalty(self):
        out = load_automaton_update(self.uniform, 0, False, LoadParams(b=0.1))
        assert np.allclose(out, [0.3, 0.35, 0.35], atol=1e-12)

    def test_small_reward_step(self):
        probs = np.array([0.2, 0.5, 0.3])
        out = load_automaton_update(probs, 1, True, LoadParams(a=1e-9))
        assert np.allclose(out, probs, atol=1e-8)

    @pytest.mark.parametrize("rates", [{"a": 0.0}, {"b": 0.0}, {"a": 1.0}, {"b": -0.1}])
    def test_rates_outside_open_interval_rejected(self, rates):
        with pytest.raises(ConfigError):
            LoadParams.from_dict(rates)

    def test_simplex_closure(self):
        """10^5 random updates stay on the simplex."""
        rng = np.random.default_rng(99)
        params = [LoadParams(a=float(a), b=float(b)) for a, b in rng.random((16, 2)) * 0.99]
        probs = self.uniform.copy()
        for i in range(100_000):
            probs = load_automaton_update(probs, int(rng.integers(3)), bool(rng.random() < 0.5),
                                          params[i % len(params)])
            assert abs(probs.sum() - 1.0) < 1e-9
        assert probs.min() >= 0.0 and probs.max() <= 1.0


class TestLoadPolicy:

    def test_flat_trace_learns_no_change(self):
        snapshot = build_snapshot({0: "hp-g4"}, [(0, 2500.0, 870, 1000.0, 0)])
        policy = LoadPolicy(snapshot.thresholds)
        for _ in range(50):
            policy.learn(snapshot)
        assert policy.automata[0].probs[NO_CHANGE] > 0.9

    def test_predicted_overload_flagged_early(self):
        """Actual u = 0.85; predicted increases push the host over 0.9."""
        snapshot = build_snapshot(
            {0: "hp-g4", 1: "hp-g4"},
            [(0, 2500.0, 870, 2000.0, 0), (1, 2000.0, 613, 1162.0, 0)],
        )
        policy = LoadPolicy(snapshot.thresholds)
        policy._predicted = policy.learn(snapshot)
        state = PlanningState(snapshot)
        assert policy.is_overloaded(state, 0)
        assert not MbfdPolicy(snapshot.thresholds).is_overloaded(state, 0)

    def test_predicted_overload_relieved(self):
        """The min-RAM VM leaves before MBFD would see any overload."""
        snapshot = build_snapshot(
            {0: "hp-g4", 1: "hp-g4"},
            [(0, 2500.0, 870, 2000.0, 0), (1, 2000.0, 613, 1162.0, 0)],
        )
        assert LoadPolicy(snapshot.thresholds).consolidate(snapshot).moves == (Move(1, 0, 1),)
        assert len(mbfd_consolidate(snapshot)) == 0

    def underloaded_snapshot(self):
        return build_snapshot(
            {0: "hp-g4", 1: "hp-g4"},
            [(0, 2500.0, 870, 372.0, 0), (1, 2500.0, 870, 1860.0, 1)],
            ThresholdConfig(0.3, 0.7),
        )

    def test_underload_handled_by_default(self):
        snapshot = self.underloaded_snapshot()
        assert LoadPolicy(snapshot.thresholds).consolidate(snapshot).moves == (Move(0, 0, 1),)

    def test_underload_can_be_disabled(self):
        snapshot = self.underloaded_snapshot()
        policy = LoadPolicy(snapshot.thresholds, {"underload": False})
        assert len(policy.consolidate(snapshot)) == 0

    def test_bad_action_selection(self):
        with pytest.raises(ConfigError):
            LoadParams.from_dict({"action_selection": "softmax"})


class TestParetoArchive:

    def solution(self, objectives):
        return AntSolution((), (), objectives)

    def test_dominance(self):
        assert dominates((10.0, 5, 8), (12.0, 6, 9))
        assert not dominates((10.0, 5, 8), (10.0, 5, 8))
        assert not dominates((10.0, 7, 8), (12.0, 6, 9))

    def test_dominated_candidate_rejected(self):
        archive = ParetoArchive()
        assert archive.insert(self.solution((10.0, 5, 8)))
        assert not archive.insert(self.solution((12.0, 6, 9)))
        assert len(archive) == 1

    def test_dominated_member_evicted(self):
        archive = ParetoArchive()
        archive.insert(self.solution((12.0, 6, 9)))
        archive.insert(self.solution((10.0, 5, 8)))
        assert [m.objectives for m in archive.members] == [(10.0, 5, 8)]

    def test_members_never_dominate_each_other(self):
        rng = np.random.default_rng(1)
        archive = ParetoArchive()
        for _ in range(500):
            archive.insert(self.solution(
                (float(rng.integers(0, 20)), int(rng.integers(0, 10)), int(rng.integers(0, 10)))
            ))
            for a in archive.members:
                for b in archive.members:
                    assert not dominates(a.objectives, b.objectives)

    def test_best_prefers_power_then_moves(self):
        archive = ParetoArchive()
        archive.insert(AntSolution((3,), (0,), (5.0, 2, 9)))
        archive.insert(AntSolution((1,), (0,), (5.0, 1, 10)))
        archive.insert(AntSolution((2,), (0,), (7.0, 0, 4)))
        assert archive.best().hosts == (1,)


class TestAcs:

    def overload_only_snapshot(self):
        return build_snapshot(
            {0: "hp-g4", 1: "hp-g4", 2: "hp-g4", 3: "hp-g4"},
            [
                (0, 2500.0, 613, 800.0, 0),
                (1, 2700.0, 870, 2700.0, 0),
                (2, 2500.0, 1740, 1500.0, 1),
                (3, 2500.0, 1740, 2000.0, 2),
            ],
            ThresholdConfig(0.3, 0.9),
        )

    def test_greedy_setting_matches_mbfd(self):
        """One ant, one iteration, q0 = 1: the min-dP placement."""
        snapshot = self.overload_only_snapshot()
        params = AcsParams(ants=1, iterations=1, q0=1.0)
        acs = acs_consolidate(snapshot, params, seed=0)
        assert acs == mbfd_consolidate(snapshot)
        assert acs.moves == (Move(0, 0, 2),)

    def test_empty_selection(self):
        snapshot = build_snapshot(
            {0: "hp-g4", 1: "hp-g4"},
            [(0, 2500.0, 870, 2232.0, 0), (1, 2500.0, 870, 2604.0, 1)],
        )
        assert acs_consolidate(snapshot, AcsParams(iterations=50), seed=1) == MigrationPlan()

    def test_search_keeps_pheromone_positive_and_archive_non_dominated(self):
        rng = np.random.default_rng(5)
        searched = 0
        for k in range(100):
            snapshot = random_snapshot(rng)
            params = AcsParams(q0=0.5, iterations=4)
            plan = acs_consolidate(snapshot, params, seed=k)
            assert plan.violations(snapshot) == []

            policy = AcsPolicy(snapshot.thresholds, params, seed=k)
            state = PlanningState(snapshot)
            selected, overloaded, n_underloaded = policy.select(state)
            if not selected:
                continue
            vms = bfd_order(state, selected)
            for vm_id in vms:
                state.lift(vm_id)
            colony = policy.colony(state, vms, overloaded)
            archive = policy.search(colony, n_underloaded)
            searched += 1
            assert np.all(colony.tau > 0)
            assert len(archive) >= 1
            for a in archive.members:
                for b in archive.members:
                    assert not dominates(a.objectives, b.objectives)
        assert searched > 20

    def test_emptied_host_is_credited(self):
        """Two underloaded hosts, and only one of their VMs fits on the busy host."""
        snapshot = build_snapshot(
            {0: "hp-g4", 1: "hp-g4", 2: "hp-g4"},
            [(0, 2500.0, 870, 1000.0, 0), (1, 2500.0, 870, 800.0, 1), (2, 2500.0, 870, 2000.0, 2)],
        )
        policy = AcsPolicy(snapshot.thresholds, seed=3)
        state = PlanningState(snapshot)
        selected, overloaded, n_underloaded = policy.select(state)
        assert sorted(selected) == [0, 1]
        vms = bfd_order(state, selected)
        for vm_id in vms:
            state.lift(vm_id)
        best = policy.search(policy.colony(state, vms, overloaded), n_underloaded).best()
        assert best.delta_power < 0
        assert best.active_hosts == 2
        plan = acs_consolidate(snapshot, seed=3)
        assert plan.violations(snapshot) == []
        assert len({m.source for m in plan} - {m.destination for m in plan}) == 1

    def test_ant_cap_defaults_to_ten(self):
        assert AcsParams().ant_count(40) == 10
        assert AcsParams().ant_count(4) == 4
        assert AcsParams(max_ants=None).ant_count(40) == 40
        assert AcsParams(ants=3).ant_count(40) == 3

    def test_same_seed_same_plan(self):
        rng = np.random.default_rng(12)
        for _ in range(10):
            snapshot = random_snapshot(rng)
            a = acs_consolidate(snapshot, AcsParams(iterations=3), seed=9)
            b = acs_consolidate(snapshot, AcsParams(iterations=3), seed=9)
            assert a == b

    def test_invalid_rho(self):
        with pytest.raises(ConfigError):
            AcsParams.from_dict({"rho": 1.0})


class TestPlanInvariants:
    """Every policy emits plans the engine accepts."""

    @pytest.mark.parametrize("policy_id", sorted(POLICIES))
    def test_random_snapshots(self, policy_id):
        rng = np.random.default_rng(sorted(POLICIES).index(policy_id))
        params = {"iterations": 3} if policy_id == "acs" else {}
        for seed in range(60):
            snapshot = random_snapshot(rng)
            policy = make_policy(policy_id, params, snapshot.thresholds, seed)
            plan = policy.consolidate(snapshot)
            assert plan.violations(snapshot) == []
            for move in plan:
                assert snapshot.vms[move.vm_id].host_id == move.source

    @pytest.mark.parametrize("policy_id", sorted(POLICIES))
    def test_initial_placement_covers_every_vm(self, policy_id):
        hosts = {h: ("hp-g4", "hp-g5")[h % 2] for h in range(8)}
        vms = [(i, 2500.0, 870, 1250.0, None) for i in range(10)]
        snapshot = build_snapshot(hosts, vms)
        policy = make_policy(policy_id, None, snapshot.thresholds, 0)
        assignment = policy.initial_placement(list(snapshot.vms.values()), snapshot)
        assert sorted(assignment) == list(range(10))
