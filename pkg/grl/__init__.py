"""Semi-gradient solvers for MDPs whose reward is a set function of the trajectory."""

__version__ = "0.1.0"
