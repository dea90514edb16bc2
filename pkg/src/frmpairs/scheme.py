"""Structural model of the FRM-compensated source.

The pump enters a PBS at 45 degrees. The H part goes straight into the
nonlinear fiber ("early"); the V part takes the PMF loop first ("late").
Both reflect off the FRM, come back through the fiber with their
polarization turned by 90 degrees, and the PBS routes each one through
the path the other took on the way in. Pairs are born co-polarized with
the local pump anywhere along the fiber, on either pass.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from typing import List

import numpy as np

from . import quantum
from .errors import InvalidArgument
from .jones import (
    H, V, backward_matrix, check_fiber, element_matrix, frm_matrix,
    haar_random_su2, PbsPort,
)
from .rng import substream

_FRM = frm_matrix()


@dataclass(frozen=True)
class SchemeConfig:
    pmf_delay_ns: float = 10.0
    pmf_length_m: float = 2.0
    fiber_length_km: float = 1.0
    gamma_per_w_km: float = 20.0
    launch_angle_deg: float = 45.0
    pump_phase_rad: float = 0.0
    fiber_group_delay_ns_per_km: float = 4900.0

    def __post_init__(self):
        for name in ("pmf_delay_ns", "pmf_length_m", "fiber_length_km",
                     "gamma_per_w_km", "fiber_group_delay_ns_per_km"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0.0):
                raise InvalidArgument(f"{name}: must be finite and non-negative, got {value}")
        for name in ("launch_angle_deg", "pump_phase_rad"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidArgument(f"{name}: must be finite")

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class TraceStep:
    label: str
    delay_ns: float
    matrix: np.ndarray


PathTrace = List[TraceStep]


def split_pump(launch_angle_deg, pump_phase_rad=0.0):
    """Amplitudes of the H (early) and V (late) pump components."""
    theta = math.radians(launch_angle_deg)
    early = complex(math.cos(theta))
    late = math.sin(theta) * complex(math.cos(pump_phase_rad), math.sin(pump_phase_rad))
    return early, late


def _partition(u1, u2, p0):
    u1 = check_fiber(u1, "U1")
    u2 = check_fiber(u2, "U2")
    p0 = np.asarray(p0, dtype=complex)
    if p0.shape != (2,):
        raise InvalidArgument("launch polarization must be a Jones vector")
    return u1, u2, p0


def birth_roundtrip_forward(u1, u2, p0):
    """Exit polarization of a photon born on the outbound pass.

    ``u1`` runs from the fiber input to the birth point, ``u2`` from the
    birth point to the FRM.
    """
    u1, u2, p0 = _partition(u1, u2, p0)
    photon = u1 @ p0  # co-polarized with the local pump
    photon = u2 @ photon
    photon = _FRM @ photon
    # u2 @ u1 is a fiber whenever both factors are, no need to re-check
    return (u2 @ u1).T @ photon


def birth_roundtrip_backward(u1, u2, p0):
    """Exit polarization of a photon born on the return pass at the same point."""
    u1, u2, p0 = _partition(u1, u2, p0)
    pump = u2.T @ (_FRM @ (u2 @ (u1 @ p0)))
    return u1.T @ pump


class _Tracer:
    def __init__(self):
        self.segments = []
        self.matrix = np.eye(2, dtype=complex)
        self.steps = []

    def add(self, label, delay_ns, matrix):
        self.segments.append(float(delay_ns))
        self.matrix = matrix @ self.matrix
        # fsum over the segment multiset is order independent, so two paths
        # visiting the same segments end on bit-identical totals
        self.steps.append(TraceStep(label, math.fsum(self.segments), self.matrix.copy()))


def trace_paths(config, fiber=None):
    """Follow the early (H-launched) and late (V-launched) pump paths.

    ``fiber`` is the end-to-end fiber Jones matrix (identity by default).
    The PMF is taken as aligned to the polarization it carries.
    """
    u = np.eye(2, dtype=complex) if fiber is None else check_fiber(fiber, "fiber")
    fiber_delay = config.fiber_length_km * config.fiber_group_delay_ns_per_km
    pbs_h = element_matrix(PbsPort("H"))
    pbs_v = element_matrix(PbsPort("V"))
    eye = np.eye(2, dtype=complex)

    early = _Tracer()
    early.add("PBS H-pass", 0.0, pbs_h)
    early.add("fiber forward", fiber_delay, u)
    early.add("FRM", 0.0, frm_matrix())
    early.add("fiber backward", fiber_delay, backward_matrix(u))
    early.add("PBS V-reflect", 0.0, pbs_v)
    early.add("PMF", config.pmf_delay_ns, eye)
    early.add("exit", 0.0, eye)

    late = _Tracer()
    late.add("PBS V-reflect", 0.0, pbs_v)
    late.add("PMF", config.pmf_delay_ns, eye)
    late.add("fiber forward", fiber_delay, u)
    late.add("FRM", 0.0, frm_matrix())
    late.add("fiber backward", fiber_delay, backward_matrix(u))
    late.add("PBS H-pass", 0.0, pbs_h)
    late.add("exit", 0.0, eye)
    return early.steps, late.steps


def output_delay_difference(config):
    early, late = trace_paths(config)
    return late[-1].delay_ns - early[-1].delay_ns


def _pair_amplitudes(config):
    early, _ = split_pump(config.launch_angle_deg)
    late = math.sin(math.radians(config.launch_angle_deg)) * np.exp(2j * config.pump_phase_rad)
    return early, late


def build_output_state(config, u1=None, u2=None):
    """Two-photon state leaving the source.

    Signal and idler are both co-polarized with the pump at birth; each
    then makes the compensated round trip. ``u1``/``u2`` partition the
    fiber at the birth point (identity by default); the result does not
    depend on them beyond rounding. The pair amplitude follows the pump
    field amplitude and picks up twice the pump relative phase.
    """
    eye = np.eye(2, dtype=complex)
    u1 = eye if u1 is None else u1
    u2 = eye if u2 is None else u2
    amp_early, amp_late = _pair_amplitudes(config)
    out_early = birth_roundtrip_forward(u1, u2, H)
    out_late = birth_roundtrip_forward(u1, u2, V)
    psi = amp_early * np.kron(out_early, out_early) + amp_late * np.kron(out_late, out_late)
    return quantum.pure(psi)


def birth_state(config):
    """State right at the birth point, before any propagation."""
    amp_early, amp_late = _pair_amplitudes(config)
    return quantum.pure(amp_early * np.kron(H, H) + amp_late * np.kron(V, V))


def _drift_trial(seed, trial, with_frm, config, fixed_deg):
    rng = substream(seed, trial)
    if with_frm:
        u1 = haar_random_su2(rng)
        u2 = haar_random_su2(rng)
        rho = build_output_state(config, u1, u2)
    else:
        u = haar_random_su2(rng)
        rho = quantum.apply_local(u, u, birth_state(config))
    return quantum.fringe_visibility(rho, fixed_deg)


def drift_experiment(n_trials, with_frm, seed, config=None, fixed_deg=0.0, workers=1):
    """Fringe visibility (H/V analyzer basis) per random-birefringence trial.

    With the FRM the photons make the compensated round trip; without it
    they leave through a single pass of the drifted fiber while the
    analyzers stay fixed. Trial ``k`` draws from substream ``(seed, k)``.
    """
    if n_trials < 1:
        raise InvalidArgument("n_trials must be at least 1")
    config = config or SchemeConfig()

    def one(k):
        return _drift_trial(seed, k, with_frm, config, fixed_deg)

    if workers <= 1:
        return [one(k) for k in range(n_trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(n_trials)))
