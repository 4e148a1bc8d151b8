"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An operation was called with arguments outside its stated domain."""


class SingularityError(ValueError):
    """Two points coincide where a distance gradient is required."""

    def __init__(self, message, ids=None):
        super().__init__(message)
        self.ids = ids


class AlreadyUnsafeError(ValueError):
    """A critical-time formula was evaluated on an already-violated pair."""


class DegenerateWeightsError(ValueError):
    """All confidence/consensus weights are zero; the weighted mean is undefined."""


class ScenarioError(ValueError):
    """A scenario file failed validation; carries every violation found."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(f"{path}: {msg}" for path, msg in self.violations))
