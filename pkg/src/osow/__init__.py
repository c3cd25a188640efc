"""Online welfare maximization with configurations and post-allocation stochasticity."""

from .model import Allocation, Arrival, Configuration, Instance, InstanceError, Resource, build_instance

__all__ = ["Allocation", "Arrival", "Configuration", "Instance", "InstanceError", "Resource", "build_instance"]
