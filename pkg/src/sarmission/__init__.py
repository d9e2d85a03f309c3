"""Deterministic search-and-rescue mission engine.

A Bayesian strategy-belief model steers a simulated sUAS swarm over gridded
terrain; detected clues run through a staged reasoning pipeline; cognitive
guardrails (entropy gating, cost-benefit, advocate personas, a safety
envelope) decide what may happen autonomously and what a human operator must
approve. Every mission writes an append-only event log that replays
bit-identically.
"""

from .strategies import STRATEGIES, StrategyBelief

__version__ = "0.1.0"

__all__ = ["STRATEGIES", "StrategyBelief", "__version__"]
