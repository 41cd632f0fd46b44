"""Geometric beam-domain channel: direct path plus point reflectors seen by an 8x8 array.

Beam (i, j) steers to direction cosines (psi_i, psi_j), psi_k = -1 + k/4, along
the array's horizontal and vertical axes; index 4 is boresight. The beam
transform is the unitary 2-D DFT of the element responses, fftshifted so the
beam index increases with psi.
"""

from __future__ import annotations

import numpy as np

from ..errors import GeometryError
from .scenario import SPEED_OF_LIGHT, Scenario

N_BEAMS = 8
MIN_DISTANCE_M = 1e-3


def beam_directions() -> np.ndarray:
    return -1.0 + np.arange(N_BEAMS) / 4.0


def _ue_points(scenario: Scenario, ue_xy: np.ndarray) -> np.ndarray:
    ue_xy = np.atleast_2d(np.asarray(ue_xy, dtype=float))
    if ue_xy.shape[1] == 3:
        return ue_xy
    return np.column_stack([ue_xy, np.full(len(ue_xy), scenario.ue_height_m)])


def propagation_paths(scenario: Scenario, ue_xy, frequency_hz: float, antenna: int):
    """Per-path complex gains and BS arrival direction cosines.

    Returns ``gains`` (N, P) complex and ``u``, ``v`` (N, P): direction cosines
    of each path's arrival along the array's horizontal and vertical axes.
    Path 0 is the direct path; paths 1.. follow ``scenario.reflectors``.
    """
    ue = _ue_points(scenario, ue_xy)
    bs = np.asarray(scenario.bs_position, dtype=float)
    _, h_axis, v_axis = scenario.array_axes
    k = 2 * np.pi * frequency_hz / SPEED_OF_LIGHT

    # every path is (total length, amplitude factor, BS-side point it arrives from, UE-side point it leaves toward)
    d_direct = np.linalg.norm(ue - bs, axis=1)
    if np.any(d_direct < MIN_DISTANCE_M):
        raise GeometryError("UE position coincides with the base station")
    lengths = [d_direct]
    amps = [np.ones(len(ue))]
    arrive_from = [ue]
    leave_toward = [np.broadcast_to(bs, ue.shape)]
    if scenario.blockers:
        blocked = np.zeros(len(ue), dtype=bool)
        for box in scenario.blockers:
            blocked |= box.blocks(ue, bs)
        amps[0] = np.where(blocked, 0.0, 1.0)
    for refl in scenario.reflectors:
        r = np.asarray(refl.position, dtype=float)
        d1 = np.linalg.norm(ue - r, axis=1)
        if np.any(d1 < MIN_DISTANCE_M):
            raise GeometryError(f"UE position coincides with reflector at {refl.position}")
        d2 = np.linalg.norm(r - bs)
        if d2 < MIN_DISTANCE_M:
            raise GeometryError(f"reflector at {refl.position} coincides with the base station")
        lengths.append(d1 + d2)
        amps.append(np.full(len(ue), refl.loss))
        arrive_from.append(np.broadcast_to(r, ue.shape))
        leave_toward.append(np.broadcast_to(r, ue.shape))

    lengths = np.stack(lengths, axis=1)
    amps = np.stack(amps, axis=1)
    src = np.stack(arrive_from, axis=1)  # (N, P, 3)
    dst = np.stack(leave_toward, axis=1)
    arrival = src - bs
    arrival /= np.linalg.norm(arrival, axis=-1, keepdims=True)
    u = arrival @ h_axis
    v = arrival @ v_axis
    departure = dst - ue[:, None, :]
    departure_z = departure[..., 2] / np.linalg.norm(departure, axis=-1)

    # UE antenna perturbation: gain step plus a vertical displacement seen as a path-dependent phase
    ant_gain = 1.0 - scenario.antenna_gain_step * antenna
    ant_phase = k * antenna * scenario.antenna_offset_m * departure_z
    gains = (
        scenario.path_gain_scale
        * amps
        / lengths
        * ant_gain
        * np.exp(-1j * (k * lengths - ant_phase))
    )
    return gains, u, v


def element_response(u, v, frequency_hz: float, spacing_m: float) -> np.ndarray:
    """Planar-array steering vectors, shape ``u.shape + (8, 8)`` indexed [m, n]."""
    k = 2 * np.pi * frequency_hz / SPEED_OF_LIGHT
    m = np.arange(N_BEAMS)
    phase_h = np.exp(1j * k * spacing_m * np.multiply.outer(u, m))
    phase_v = np.exp(1j * k * spacing_m * np.multiply.outer(v, m))
    return phase_h[..., :, None] * phase_v[..., None, :]


def beam_transform(elements: np.ndarray) -> np.ndarray:
    """Unitary 2-D DFT over the last two axes, reordered so beam index increases with psi."""
    beams = np.fft.fft2(elements, axes=(-2, -1)) / N_BEAMS
    return np.fft.fftshift(beams, axes=(-2, -1))


def beam_field(scenario: Scenario, ue_xy, channel_index: int, ue_antenna_index: int) -> np.ndarray:
    """Complex beam-domain response, shape (N, 8, 8), before shadowing."""
    f = scenario.channel_frequencies_hz[channel_index]
    gains, u, v = propagation_paths(scenario, ue_xy, f, ue_antenna_index)
    a = element_response(u, v, f, scenario.element_spacing_m)  # (N, P, 8, 8)
    elements = np.einsum("np,npij->nij", gains, a)
    return beam_transform(elements)


def beam_amplitudes(scenario: Scenario, ue_position, channel_index: int, ue_antenna_index: int) -> np.ndarray:
    """Nonnegative 8x8 beam magnitudes at one UE position (or (N, 8, 8) for N positions)."""
    pos = np.asarray(ue_position, dtype=float)
    single = pos.ndim == 1
    pts = np.atleast_2d(pos)
    inside = scenario.contains(pts[:, :2])
    if not inside.all():
        raise GeometryError(f"UE position {pts[~inside][0]} outside scenario bounds {scenario.bounds}")
    if not 0 <= channel_index < 3 or not 0 <= ue_antenna_index < 4:
        raise GeometryError("channel_index must be in [0, 2] and ue_antenna_index in [0, 3]")
    amp = np.abs(beam_field(scenario, pts, channel_index, ue_antenna_index))
    shadow = scenario.shadowing_field
    if shadow is not None:
        amp = amp * shadow.linear(pts[:, :2])[:, None, None]
    return amp[0] if single else amp
