"""Exception hierarchy for the simulator."""


class SimulatorError(Exception):
    """Base class for every error raised by vmc_simulator."""


class ConfigError(SimulatorError, ValueError):
    """Configuration document or parameter block is malformed."""


class TraceFormatError(SimulatorError, ValueError):
    """A trace file could not be parsed."""

    def __init__(self, message: str, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(f"{where}{message}")


class PlacementError(SimulatorError, RuntimeError):
    """Initial placement could not find a host for a VM."""

    def __init__(self, vm_id: int, message: str = ""):
        self.vm_id = vm_id
        super().__init__(message or f"no host with RAM headroom for VM {vm_id}")


class PlanRejectedError(SimulatorError, ValueError):
    """A migration plan violates its invariants against the current state."""

    def __init__(self, move, reason: str):
        self.move = move
        self.reason = reason
        super().__init__(f"plan rejected at move {move}: {reason}")


class ContractViolation(SimulatorError, AssertionError):
    """A precondition of an operation does not hold."""


class PlotDataError(SimulatorError, ValueError):
    """The result table does not cover a figure's axes."""

    def __init__(self, message: str, missing=()):
        self.missing = list(missing)
        if self.missing:
            listed = ", ".join(str(m) for m in self.missing[:20])
            more = "" if len(self.missing) <= 20 else f" (+{len(self.missing) - 20} more)"
            message = f"{message}: {listed}{more}"
        super().__init__(message)
