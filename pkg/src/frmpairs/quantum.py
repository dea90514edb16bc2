"""Two-photon polarization states, analyzer projections and Bell tests.

States are 4x4 complex density matrices over the ordered basis
{HH, HV, VH, VV}; the first factor is the signal photon, the second the
idler. Analyzer angles are in degrees.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMeasurement, InvalidArgument
from .jones import is_unitary, polarizer_stack

CANONICAL_QUADRUPLE = (0.0, 45.0, 22.5, 67.5)

_SY2 = np.kron([[0, -1j], [1j, 0]], [[0, -1j], [1j, 0]])


@dataclass(frozen=True)
class MeasurementSetting:
    signal_deg: float
    idler_deg: float

    def __post_init__(self):
        if not (np.isfinite(self.signal_deg) and np.isfinite(self.idler_deg)):
            raise InvalidArgument("analyzer angles must be finite")


def ket(hh=0.0, hv=0.0, vh=0.0, vv=0.0):
    return np.array([hh, hv, vh, vv], dtype=complex)


def pure(psi):
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def check_state(rho):
    """Validate a density matrix and return it as a complex array."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4) or not np.all(np.isfinite(rho)):
        raise InvalidArgument("two-photon state must be a finite 4x4 matrix")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
        raise InvalidArgument("state is not Hermitian")
    if abs(np.trace(rho) - 1.0) > 1e-12:
        raise InvalidArgument("state trace is not 1")
    if np.linalg.eigvalsh(rho)[0] < -1e-10:
        raise InvalidArgument("state is not positive semidefinite")
    return rho


def bell_state(phase_rad=0.0, imbalance=np.sqrt(0.5)):
    """imbalance * e^{i phase}|HH> + sqrt(1 - imbalance^2)|VV>."""
    if not 0.0 <= imbalance <= 1.0:
        raise InvalidArgument(f"imbalance must lie in [0, 1], got {imbalance}")
    return pure(ket(hh=imbalance * np.exp(1j * phase_rad), vv=np.sqrt(1.0 - imbalance**2)))


PHI_PLUS = bell_state()
MAXIMALLY_MIXED = np.eye(4, dtype=complex) / 4


def werner_mix(rho, visibility):
    if not 0.0 <= visibility <= 1.0:
        raise InvalidArgument(f"visibility must lie in [0, 1], got {visibility}")
    return visibility * np.asarray(rho, dtype=complex) + (1.0 - visibility) / 4 * np.eye(4)


def apply_local(u_s, u_i, rho):
    """(U_s x U_i) rho (U_s x U_i)^dagger."""
    if not (is_unitary(u_s) and is_unitary(u_i)):
        raise InvalidArgument("local operations must be unitary")
    u = np.kron(u_s, u_i)
    return u @ np.asarray(rho, dtype=complex) @ u.conj().T


def concurrence(rho):
    """Wootters concurrence, via singular values of sqrt(rho) sqrt(rho~)."""
    rho = check_state(rho)
    w, v = np.linalg.eigh(rho)
    w = np.where(w < 1e-13, 0.0, w)
    root = (v * np.sqrt(w)) @ v.conj().T
    root_tilde = _SY2 @ root.conj() @ _SY2
    lam = np.linalg.svd(root @ root_tilde, compute_uv=False)
    return max(0.0, lam[0] - lam[1] - lam[2] - lam[3])


def _joint_probs(rho, a_deg, b_deg):
    # Tr[(P_a x P_b) rho], broadcast over angle arrays
    pa = polarizer_stack(a_deg)
    pb = polarizer_stack(b_deg)
    r = rho.reshape(2, 2, 2, 2)
    return np.einsum("...jl,...km,lmjk->...", pa, pb, r).real


def coincidence_prob(rho, setting):
    """Probability that both photons pass their analyzers."""
    rho = check_state(rho)
    p = float(_joint_probs(rho, setting.signal_deg, setting.idler_deg))
    return min(max(p, 0.0), 1.0)


def _correlation(rho, a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    pp = _joint_probs(rho, a, b)
    mm = _joint_probs(rho, a + 90.0, b + 90.0)
    mp = _joint_probs(rho, a + 90.0, b)
    pm = _joint_probs(rho, a, b + 90.0)
    total = pp + mm + mp + pm
    if np.any(np.abs(total) < 1e-15):
        raise DegenerateMeasurement("all four coincidence probabilities vanish")
    return (pp + mm - mp - pm) / total


def correlation(rho, a_deg, b_deg):
    """Polarization correlation E(a, b) from the four-outcome ratio.

    Accepts scalar or array angles (broadcast together).
    """
    e = _correlation(check_state(rho), a_deg, b_deg)
    return float(e) if np.ndim(e) == 0 else e


def chsh(rho, a, a2, b, b2):
    """|E(a,b) - E(a,b') + E(a',b) + E(a',b')|; array angles are broadcast."""
    rho = check_state(rho)
    s = np.abs(_correlation(rho, a, b) - _correlation(rho, a, b2)
               + _correlation(rho, a2, b) + _correlation(rho, a2, b2))
    return float(s) if np.ndim(s) == 0 else s


def fringe_visibility(rho, fixed_deg, n_points=3600):
    """Visibility of the coincidence fringe with the signal analyzer fixed.

    The idler analyzer is swept over [0, 180) on an even grid of
    ``n_points`` angles.
    """
    rho = check_state(rho)
    sweep = np.arange(n_points) * (180.0 / n_points)
    p = _joint_probs(rho, np.full_like(sweep, float(fixed_deg)), sweep)
    hi, lo = p.max(), max(p.min(), 0.0)
    if hi + lo <= 0.0:
        raise DegenerateMeasurement("coincidence fringe is identically zero")
    return float((hi - lo) / (hi + lo))


def hwp_to_analyzer(hwp_deg, polarizer_deg):
    """Effective analyzer angle of a HWP followed by a fixed polarizer."""
    return 2.0 * hwp_deg - polarizer_deg
