"""Exception types shared across the simulator."""


class InputError(ValueError):
    """Malformed or out-of-contract input supplied by a caller."""


class ConsistencyError(RuntimeError):
    """An internal cross-check between two computation routes failed."""
