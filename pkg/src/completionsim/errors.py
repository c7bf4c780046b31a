"""Exception hierarchy shared by every layer of the simulator."""


class SimError(Exception):
    """Base class for all simulator errors."""


# engine
class PastEvent(SimError):
    pass


class StageRegression(SimError):
    pass


class DuplicateStage(SimError):
    pass


# verbs
class UnregisteredRegion(SimError):
    pass


class NotEightBytes(SimError):
    pass


class MisalignedAtomic(SimError):
    pass


class ReceiverNotReady(SimError):
    pass


# faults
class OutOfRange(SimError):
    pass


class TooLarge(SimError):
    pass


# farm
class CasConflict(SimError):
    pass


class TornReadUnresolved(SimError):
    def __init__(self, attempts: int):
        super().__init__(f"versions still inconsistent after {attempts} attempt(s)")
        self.attempts = attempts


# sdr
class NothingMissing(SimError):
    pass


# oae
class LinkBusy(SimError):
    pass


class NotYetVisible(SimError):
    pass


class WrongState(SimError):
    pass


# profiles / harness
class ScenarioSuiteIncomplete(SimError):
    pass


class MatrixMismatch(SimError):
    def __init__(self, mismatches):
        cells = ", ".join(f"({p}, {row})" for p, row in mismatches)
        super().__init__(f"simulated matrix differs from built-in table at {cells}")
        self.mismatches = list(mismatches)


class ConfigError(SimError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.key = key


class InvariantViolation(SimError):
    """A module invariant failed during a scenario run."""
