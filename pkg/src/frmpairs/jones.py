"""Jones calculus for the fiber source.

Conventions: H = (1, 0), V = (0, 1); angles in degrees, measured from the
H axis. Every matrix lives in one fixed forward frame, so a reciprocal
element traversed backward acts as its transpose.

Vectors are complex arrays of shape (2,), matrices of shape (2, 2).
Global phases are kept.
"""

import math
from dataclasses import dataclass
from functools import reduce
from typing import Literal, Sequence, Union

import numpy as np

from .errors import InvalidArgument

UNITARY_TOL = 1e-10

H = np.array([1.0, 0.0], dtype=complex)
V = np.array([0.0, 1.0], dtype=complex)


def _finite_angle(deg, name="angle"):
    deg = float(deg)
    if not np.isfinite(deg):
        raise InvalidArgument(f"{name} must be finite, got {deg}")
    return deg


_QUARTER_TURNS = ((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0))


def _cos_sin(deg):
    deg = float(np.mod(deg, 360.0))
    if deg % 90.0 == 0.0:
        return _QUARTER_TURNS[int(deg // 90.0)]
    rad = np.deg2rad(deg)
    return np.cos(rad), np.sin(rad)


def jones_vector(h, v, normalized=False):
    vec = np.array([h, v], dtype=complex)
    if not np.all(np.isfinite(vec)):
        raise InvalidArgument("Jones vector components must be finite")
    if normalized and abs(np.vdot(vec, vec).real - 1.0) > 1e-12:
        raise InvalidArgument("Jones vector labeled normalized has |h|^2+|v|^2 != 1")
    return vec


def linear(alpha_deg):
    """Normalized linear polarization at ``alpha_deg`` from H."""
    c, s = _cos_sin(_finite_angle(alpha_deg))
    return np.array([c, s], dtype=complex)


def _entries(m):
    m = np.asarray(m)
    if m.shape != (2, 2):
        return None
    a, b, c, d = m.reshape(4).tolist()
    return a, b, c, d


def _unitarity_defect(a, b, c, d):
    # Frobenius norm of M^dagger M - I, written out for 2x2
    p = abs(a) ** 2 + abs(c) ** 2 - 1.0
    q = abs(b) ** 2 + abs(d) ** 2 - 1.0
    r = a.conjugate() * b + c.conjugate() * d
    return (p * p + q * q + 2 * abs(r) ** 2) ** 0.5


def is_unitary(m, tol=UNITARY_TOL):
    e = _entries(m)
    return e is not None and _unitarity_defect(*e) < tol  # nan compares False


def is_fiber(m, tol=UNITARY_TOL):
    """Lossless reciprocal birefringence: unitary with unit determinant."""
    e = _entries(m)
    if e is None:
        return False
    a, b, c, d = e
    return _unitarity_defect(a, b, c, d) < tol and abs(a * d - b * c - 1.0) < tol


def check_fiber(m, name="U"):
    m = np.asarray(m, dtype=complex)
    if not is_fiber(m):
        raise InvalidArgument(f"{name} is not a unit-determinant unitary")
    return m


def rotation(rho_deg):
    """Counter-clockwise rotation of the field by ``rho_deg``."""
    c, s = _cos_sin(_finite_angle(rho_deg))
    return np.array([[c, -s], [s, c]], dtype=complex)


def hwp_matrix(theta_deg):
    """Half-wave plate with fast axis at ``theta_deg``.

    Maps linear polarization at alpha to 2*theta - alpha; det = -1.
    """
    theta = _finite_angle(theta_deg, "HWP angle")
    c, s = _cos_sin(2.0 * np.mod(theta, 180.0))
    return np.array([[c, s], [s, -c]], dtype=complex)


def polarizer_matrix(theta_deg):
    """Ideal linear polarizer (projector) transmitting ``theta_deg``."""
    theta = _finite_angle(theta_deg, "polarizer angle")
    c, s = _cos_sin(np.mod(theta, 180.0))
    return np.array([[c * c, s * c], [s * c, s * s]], dtype=complex)


def polarizer_stack(angles_deg):
    """Projectors for an array of angles, shape ``angles.shape + (2, 2)``."""
    a = np.asarray(angles_deg, dtype=float)
    if not np.all(np.isfinite(a)):
        raise InvalidArgument("polarizer angles must be finite")
    rad = np.deg2rad(np.mod(a, 180.0))
    c, s = np.cos(rad), np.sin(rad)
    out = np.empty(a.shape + (2, 2))
    out[..., 0, 0] = c * c
    out[..., 0, 1] = s * c
    out[..., 1, 0] = s * c
    out[..., 1, 1] = s * s
    return out


def frm_matrix():
    """Faraday rotator mirror (45 deg rotator, mirror, 45 deg rotator)."""
    return np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=complex)


def compose(elements):
    """Product of ``elements`` with the first one acting first on the state."""
    mats = [np.asarray(m, dtype=complex) for m in elements]
    if not mats:
        raise InvalidArgument("compose needs at least one element")
    return reduce(lambda acc, m: m @ acc, mats[1:], mats[0])


def backward_matrix(u):
    """Matrix for traversing reciprocal fiber ``u`` in the reverse direction."""
    return check_fiber(u).T.copy()


def frm_roundtrip(u):
    """Fiber forward, FRM, fiber backward. Equals ``frm_matrix()`` for any fiber."""
    u = check_fiber(u)
    return backward_matrix(u) @ frm_matrix() @ u


def _su2_from_quaternion(q):
    a, b, c, d = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    out = np.empty(q.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0] = a + 1j * b
    out[..., 0, 1] = c + 1j * d
    out[..., 1, 0] = -c + 1j * d
    out[..., 1, 1] = a - 1j * b
    return out


def haar_random_su2(rng):
    """Haar-distributed SU(2) element (uniform point on the unit 3-sphere)."""
    a, b, c, d = rng.standard_normal(4).tolist()
    n = math.sqrt(a * a + b * b + c * c + d * d)
    a, b, c, d = a / n, b / n, c / n, d / n
    return np.array([[complex(a, b), complex(c, d)], [complex(-c, d), complex(a, -b)]])


def haar_random_su2_batch(rng, n):
    """``n`` independent Haar SU(2) draws, shape (n, 2, 2)."""
    q = rng.standard_normal((n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    return _su2_from_quaternion(q)


# Element descriptions for building paths from named parts.

@dataclass(frozen=True)
class HalfWavePlate:
    theta_deg: float


@dataclass(frozen=True)
class Polarizer:
    theta_deg: float


@dataclass(frozen=True)
class FaradayRotator:
    rho_deg: float


@dataclass(frozen=True)
class Mirror:
    pass


@dataclass(frozen=True, eq=False)
class Fiber:
    u: np.ndarray


@dataclass(frozen=True)
class PbsPort:
    passes: Literal["H", "V"]


ElementSpec = Union[HalfWavePlate, Polarizer, FaradayRotator, Mirror, Fiber, PbsPort]


def element_matrix(spec):
    """Jones matrix of a single element in the fixed forward frame.

    The Faraday rotator turns the field the same way in both directions
    (non-reciprocal) and the mirror contributes a pi phase on both axes,
    so rotator + mirror + rotator at 45 deg gives ``frm_matrix()``.
    """
    if isinstance(spec, HalfWavePlate):
        return hwp_matrix(spec.theta_deg)
    if isinstance(spec, Polarizer):
        return polarizer_matrix(spec.theta_deg)
    if isinstance(spec, FaradayRotator):
        return rotation(spec.rho_deg)
    if isinstance(spec, Mirror):
        return -np.eye(2, dtype=complex)
    if isinstance(spec, Fiber):
        return check_fiber(spec.u, "fiber")
    if isinstance(spec, PbsPort):
        if spec.passes == "H":
            return np.diag([1.0, 0.0]).astype(complex)
        if spec.passes == "V":
            return np.diag([0.0, 1.0]).astype(complex)
        raise InvalidArgument(f"PBS port must be 'H' or 'V', got {spec.passes!r}")
    raise InvalidArgument(f"unknown element {spec!r}")


def compose_elements(specs: Sequence[ElementSpec]):
    return compose([element_matrix(s) for s in specs])
