"""Synthetic measurement campaign: scenarios, trajectories, channel model, sessions."""

from .channel import beam_amplitudes, beam_field, beam_directions
from .scenario import Blocker, GnssModel, Reflector, Scenario, Shadowing, nlos_scenario
from .session import GnssFix, read_gnss_csv, simulate_session, write_gnss_csv
from .trajectory import Trajectory, dense_walk, path_back_and_forth, sample_trajectory

__all__ = [
    "Blocker",
    "GnssFix",
    "GnssModel",
    "Reflector",
    "Scenario",
    "Shadowing",
    "Trajectory",
    "beam_amplitudes",
    "beam_directions",
    "beam_field",
    "dense_walk",
    "nlos_scenario",
    "path_back_and_forth",
    "read_gnss_csv",
    "sample_trajectory",
    "simulate_session",
    "write_gnss_csv",
]
