"""
Async Consensus Sim - event-driven simulation of asynchronous consensus.

Simulates continuous-time agents that sample their neighbors at discrete,
asynchronous update times over switching directed topologies with bounded
communication delays, and verifies convergence through the equivalent
stochastic-matrix products.
"""

__version__ = "0.1.0"
__author__ = "Async Consensus Sim Team"
