"""Phased exploration/exploitation bandits (E3 family), decentralized matching and regret accounting."""
from .env import ArmModel, BanditInstance, GapSummary, RngStream, gap_summary, resolve_collisions, sample_reward
from .matching import Matching, auction_run, brute_force

__version__ = "0.1.0"

__all__ = ["ArmModel", "BanditInstance", "GapSummary", "Matching", "RngStream", "auction_run", "brute_force",
           "gap_summary", "resolve_collisions", "sample_reward"]
