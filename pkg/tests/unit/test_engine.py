"""Tests for CPU allocation, migration plans and the interval loop."""

import pytest
import sys
import os

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..', 'python'))

from vmc_simulator.data import TraceSet
from vmc_simulator.engine import (
    Event,
    MigrationPlan,
    Move,
    Simulation,
    allocate_cpu,
    read_event_log,
    run,
    write_event_log,
)
from vmc_simulator.exceptions import ConfigError, ContractViolation, PlacementError, PlanRejectedError
from vmc_simulator.model import HostState, SimConfig, ThresholdConfig, VmSpec, make_host
from vmc_simulator.power import HP_PROLIANT_G4, JOULES_PER_KWH


class FixedPolicy:
    """Places VMs where told and never migrates."""

    def __init__(self, assignment):
        self.assignment = dict(assignment)

    def initial_placement(self, vms, snapshot):
        return dict(self.assignment)

    def consolidate(self, snapshot):
        return MigrationPlan()


def flat_traces(vm_ids, value, horizon):
    return TraceSet({v: [value] * horizon for v in vm_ids}, 300, horizon)


def fixed_sim(hosts, vms, assignment, horizon=4, value=0.5, **config):
    config = SimConfig(hosts=hosts, vms=vms, horizon=horizon, **config)
    sim = Simulation(config, flat_traces([v.id for v in vms], value, horizon),
                     policy=FixedPolicy(assignment))
    sim.place_initial()
    return sim


class TestAllocateCpu:
    """Proportional clamp of host MIPS."""

    def g4(self):
        return HostState(make_host(0, "hp-g4"), powered_on=True)

    def test_under_capacity(self):
        alloc = allocate_cpu(self.g4(), [1000.0, 2000.0])
        assert alloc.allocated == (1000.0, 2000.0)
        assert not alloc.violated

    def test_over_capacity_scales_every_demand(self):
        """3720 / 5580 = 2/3 applied to [3000, 2580]."""
        alloc = allocate_cpu(self.g4(), [3000.0, 2580.0])
        assert abs(alloc.allocated[0] - 2000.0) < 1e-9
        assert abs(alloc.allocated[1] - 1720.0) < 1e-9
        assert alloc.violated
        assert abs(alloc.shortfalls[0] - 1.0 / 3.0) < 1e-12
        assert abs(alloc.shortfalls[0] - alloc.shortfalls[1]) < 1e-12

    def test_no_residents(self):
        alloc = allocate_cpu(self.g4(), [])
        assert alloc.allocated == ()
        assert not alloc.violated

    def test_exactly_at_capacity_is_not_a_violation(self):
        assert not allocate_cpu(self.g4(), [1860.0, 1860.0]).violated

    def test_powered_off_host(self):
        with pytest.raises(ContractViolation):
            allocate_cpu(HostState(make_host(0, "hp-g4")), [10.0])


class TestApplyPlan:
    """Plans are validated whole, then applied atomically."""

    def setup_three_hosts(self):
        hosts = tuple(make_host(i, "hp-g4") for i in range(3))
        vms = (VmSpec(0, 2500.0, 870), VmSpec(1, 2000.0, 1740), VmSpec(2, 500.0, 2096))
        return fixed_sim(hosts, vms, {0: 0, 1: 1, 2: 2})

    def test_empty_plan(self):
        sim = self.setup_three_hosts()
        events = len(sim.events)
        sim.apply_plan(MigrationPlan())
        assert sim.migrations == 0
        assert len(sim.events) == events
        assert sim.vms[0].host_id == 0

    def test_ram_overflow_rejects_whole_plan(self):
        """870 + 1740 MB onto a host with 2000 MB free: the move of B is named."""
        sim = self.setup_three_hosts()
        plan = MigrationPlan((Move(0, 0, 2), Move(1, 1, 2)))
        with pytest.raises(PlanRejectedError) as exc:
            sim.apply_plan(plan)
        assert exc.value.move.vm_id == 1
        assert "RAM overflow" in exc.value.reason
        assert sim.vms[0].host_id == 0
        assert sim.hosts[2].ram_used == 2096
        assert sim.migrations == 0

    def test_plan_violations_listed(self):
        sim = self.setup_three_hosts()
        plan = MigrationPlan((Move(0, 0, 2), Move(1, 1, 2)))
        problems = plan.violations(sim.snapshot())
        assert len(problems) == 1
        assert "vm_id=1" in problems[0]

    def test_move_to_powered_off_host(self):
        hosts = (make_host(0, "hp-g4"), make_host(1, "hp-g4"))
        sim = fixed_sim(hosts, (VmSpec(0, 1000.0, 870),), {0: 0})
        assert not sim.hosts[1].powered_on
        sim.apply_plan(MigrationPlan((Move(0, 0, 1),)))
        assert sim.hosts[1].powered_on
        assert sim.migrations == 1
        assert not sim.hosts[0].powered_on
        kinds = [e.kind for e in sim.events if e.time == 1]
        assert kinds == ["power-on", "migration", "power-off"]

    def test_wrong_source_rejected(self):
        sim = self.setup_three_hosts()
        with pytest.raises(PlanRejectedError, match="VM is on host 0"):
            sim.apply_plan(MigrationPlan((Move(0, 1, 2),)))

    def test_duplicate_vm_rejected(self):
        sim = self.setup_three_hosts()
        with pytest.raises(PlanRejectedError, match="twice"):
            sim.apply_plan(MigrationPlan((Move(0, 0, 1), Move(0, 1, 0))))


class TestInitialPlacement:

    def test_unassigned_vm_aborts_with_its_id(self):
        hosts = (make_host(0, "hp-g4"),)
        vms = (VmSpec(0, 500.0, 613), VmSpec(7, 500.0, 613))
        with pytest.raises(PlacementError) as exc:
            fixed_sim(hosts, vms, {0: 0})
        assert exc.value.vm_id == 7

    def test_ram_overflow_aborts(self):
        hosts = (make_host(0, "hp-g4"),)
        vms = (VmSpec(0, 500.0, 3000), VmSpec(1, 500.0, 3000))
        with pytest.raises(PlacementError) as exc:
            fixed_sim(hosts, vms, {0: 0, 1: 0})
        assert exc.value.vm_id == 1

    def test_infeasible_mbfd_placement(self):
        """A VM larger than every host's RAM cannot be placed."""
        config = SimConfig(hosts=(make_host(0, "hp-g4"),), vms=(VmSpec(0, 500.0, 5000),),
                           horizon=2)
        with pytest.raises(PlacementError):
            run(config, flat_traces([0], 0.5, 2))


class TestSimulation:
    """The interval loop end to end on tiny data centers."""

    def test_single_host_single_vm(self):
        """Flat 0.5 trace, MBFD, one day: nothing to consolidate."""
        config = SimConfig(hosts=(make_host(0, "hp-g4"),), vms=(VmSpec(0, 1000.0, 613),),
                           policy_id="mbfd")
        sim = Simulation(config, flat_traces([0], 0.5, 288))
        report = sim.run()
        assert report.migrations == 0
        assert report.mean_active_hosts == 1.0
        expected = HP_PROLIANT_G4.power(500.0 / 3720.0) * 300 * 288 / JOULES_PER_KWH
        assert abs(report.energy_computing - expected) < 1e-9
        assert report.slav == 0.0
        assert all(s.active_hosts == 1 for s in report.per_interval)

    def test_colocated_overload_violates_every_interval(self):
        """Two 3720-MIPS demands on one G4 host: 7440 > 3720 every interval."""
        hosts = (make_host(0, "hp-g4"), make_host(1, "hp-g4"))
        vms = (VmSpec(0, 3720.0, 870), VmSpec(1, 3720.0, 870))
        sim = fixed_sim(hosts, vms, {0: 0, 1: 0}, horizon=10, value=1.0)
        for t in range(10):
            sim.step(t)
        report = sim.recorder.finish()
        assert report.violation_events == 10
        assert report.slav == 1.0
        assert abs(report.avg_slv - 0.5) < 1e-12
        assert abs(sim.vms[0].allocated_mips - 1860.0) < 1e-9
        violations = [e for e in sim.events if e.kind == "sla-violation"]
        assert len(violations) == 10
        assert violations[0].requested == 7440.0

    def test_invalid_config_rejected(self):
        config = SimConfig(hosts=(make_host(0, "hp-g4"),), vms=(VmSpec(0, 500.0, 613),),
                           thresholds=ThresholdConfig(0.9, 0.5), horizon=2)
        with pytest.raises(ConfigError):
            Simulation(config, flat_traces([0], 0.5, 2))

    def test_short_traces_rejected(self):
        config = SimConfig(hosts=(make_host(0, "hp-g4"),), vms=(VmSpec(0, 500.0, 613),),
                           horizon=10)
        with pytest.raises(ContractViolation):
            Simulation(config, flat_traces([0], 0.5, 5))

    def test_idle_host_powered_off_after_evacuation(self):
        """Two light VMs on separate hosts are merged and the emptied host switched off."""
        hosts = (make_host(0, "hp-g4"), make_host(1, "hp-g4"))
        vms = (VmSpec(0, 1000.0, 870), VmSpec(1, 1000.0, 870))
        config = SimConfig(hosts=hosts, vms=vms, horizon=3)
        from vmc_simulator.policies import MbfdPolicy

        class SpreadThenMbfd(MbfdPolicy):
            def initial_placement(self, vm_states, snapshot):
                return {0: 0, 1: 1}

        sim = Simulation(config, flat_traces([0, 1], 0.3, 3),
                         policy=SpreadThenMbfd(config.thresholds))
        report = sim.run()
        assert report.migrations == 1
        assert sum(h.powered_on for h in sim.hosts.values()) == 1
        assert report.per_interval[0].active_hosts == 2
        assert report.per_interval[1].active_hosts == 1
        assert any(e.kind == "power-off" and e.time == 1 for e in sim.events)


class TestEventLog:

    def test_write_and_read(self, tmp_path):
        events = [
            Event(0, "power-on", host=1),
            Event(0, "placement", vm=3, host=1),
            Event(4, "sla-violation", host=1, requested=4000.0, allocated=3720.0),
        ]
        path = tmp_path / "log" / "run.jsonl"
        write_event_log(events, path)
        assert read_event_log(path) == events
        first = path.read_text().splitlines()[0]
        assert first == '{"host": 1, "kind": "power-on", "time": 0}'

    def test_missing_log(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_event_log(tmp_path / "absent.jsonl")
