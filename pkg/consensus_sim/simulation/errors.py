"""Exceptions raised while simulating a scenario."""


class SimulationError(Exception):
    """Base exception for simulation failures."""
    pass


class ReceptionError(SimulationError):
    """Raised when a topology reports a reception over a missing edge."""
    pass


class HorizonError(SimulationError):
    """Raised when a trajectory is evaluated beyond its simulated end."""
    pass
