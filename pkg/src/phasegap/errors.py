"""Exception hierarchy shared by every module."""


class PhaseGapError(Exception):
    """Base class; the CLI turns these into JSON on stderr."""

    kind = "error"

    def to_dict(self):
        return {"error": self.kind, "message": str(self)}


class ValidationError(PhaseGapError, ValueError):
    kind = "validation"


class ResourceError(PhaseGapError):
    """A dimension or basis budget would be exceeded."""

    kind = "resource"

    def __init__(self, message, requested=None, budget=None):
        super().__init__(message)
        self.requested = requested
        self.budget = budget

    def to_dict(self):
        d = super().to_dict()
        d.update(requested=self.requested, budget=self.budget)
        return d


class ConvergenceError(PhaseGapError):
    kind = "convergence"

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual

    def to_dict(self):
        d = super().to_dict()
        d["residual"] = self.residual
        return d


class BudgetExhausted(PhaseGapError):
    """Search stopped at the node budget; ``partial`` holds what was found."""

    kind = "budget"

    def __init__(self, message, partial=None, nodes=None):
        super().__init__(message)
        self.partial = partial
        self.nodes = nodes

    def to_dict(self):
        d = super().to_dict()
        d["nodes"] = self.nodes
        return d


class SynthesisError(PhaseGapError):
    """Gate synthesis could not reach the requested accuracy."""

    kind = "synthesis"

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best

    def to_dict(self):
        d = super().to_dict()
        if self.best is not None:
            d["best_error"] = self.best.achieved_error
        return d
