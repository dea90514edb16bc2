import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frmpairs import InvalidArgument
from frmpairs.jones import H, V, frm_matrix, haar_random_su2, polarizer_matrix, rotation
from frmpairs.quantum import PHI_PLUS, bell_state, concurrence, fringe_visibility, ket, pure
from frmpairs.scheme import (
    SchemeConfig, birth_roundtrip_backward, birth_roundtrip_forward, build_output_state,
    drift_experiment, output_delay_difference, split_pump, trace_paths,
)

import oracles

R2 = math.sqrt(2) / 2
F = [[0, 1], [-1, 0]]

positive = st.floats(1e-3, 1e5, allow_nan=False)
configs = st.builds(
    SchemeConfig,
    pmf_delay_ns=positive, pmf_length_m=positive, fiber_length_km=positive,
    fiber_group_delay_ns_per_km=positive,
    launch_angle_deg=st.floats(-180, 180), pump_phase_rad=st.floats(-10, 10),
)


def chain_oracle(mats, v):
    """Apply mats in order using plain-Python 2x2 algebra."""
    out = [complex(v[0]), complex(v[1])]
    for m in mats:
        out = oracles.matvec2(oracles.to_lists(m), out)
    return out


@pytest.mark.parametrize("launch, phase, expected", [
    (45, 0, (R2, R2)),
    (0, 1.234, (1, 0)),
    (45, math.pi, (R2, -R2)),
])
def test_split_pump(launch, phase, expected):
    early, late = split_pump(launch, phase)
    assert early == pytest.approx(expected[0], abs=1e-15)
    assert late == pytest.approx(expected[1], abs=1e-15)
    assert abs(early) ** 2 + abs(late) ** 2 == pytest.approx(1.0, abs=1e-15)


def test_roundtrip_identity_examples():
    eye = np.eye(2)
    np.testing.assert_allclose(birth_roundtrip_forward(eye, eye, H), [0, -1], atol=0)
    np.testing.assert_allclose(birth_roundtrip_backward(eye, eye, V), [1, 0], atol=0)


@pytest.mark.parametrize("p0", [H, V], ids=["H", "V"])
def test_roundtrip_rotation_partition(p0):
    u1, u2 = rotation(17), rotation(59)
    t = lambda m: np.asarray(m).T  # noqa: E731
    fwd = chain_oracle([u1, u2, F, t(u2), t(u1)], p0)
    bwd = chain_oracle([u1, u2, F, t(u2), t(u1)], p0)
    target = chain_oracle([F], p0)
    assert np.allclose(fwd, target, atol=1e-12) and np.allclose(bwd, target, atol=1e-12)
    np.testing.assert_allclose(birth_roundtrip_forward(u1, u2, p0), target, atol=1e-12)
    np.testing.assert_allclose(birth_roundtrip_backward(u1, u2, p0), target, atol=1e-12)


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1))
def test_roundtrip_haar_partition(seed):
    rng = np.random.default_rng(seed)
    u1, u2 = haar_random_su2(rng), haar_random_su2(rng)
    p0 = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    p0 /= np.linalg.norm(p0)
    target = frm_matrix() @ p0
    np.testing.assert_allclose(birth_roundtrip_forward(u1, u2, p0), target, atol=1e-12)
    np.testing.assert_allclose(birth_roundtrip_backward(u1, u2, p0), target, atol=1e-12)


def test_roundtrip_rejects_lossy_partition():
    with pytest.raises(InvalidArgument):
        birth_roundtrip_forward(polarizer_matrix(0), np.eye(2), H)
    with pytest.raises(InvalidArgument):
        birth_roundtrip_backward(np.eye(2), 2 * np.eye(2), H)


def test_trace_default_delays():
    early, late = trace_paths(SchemeConfig())
    assert early[-1].delay_ns == late[-1].delay_ns == 2 * 4900 + 10
    for trace in (early, late):
        delays = [s.delay_ns for s in trace]
        assert delays == sorted(delays)


def test_trace_matrices_route_through_frm():
    u = haar_random_su2(np.random.default_rng(1))
    early, late = trace_paths(SchemeConfig(), fiber=u)
    # H in leaves as V (via the PMF); V in leaves as H
    np.testing.assert_allclose(early[-1].matrix @ H, [0, -1], atol=1e-12)
    np.testing.assert_allclose(late[-1].matrix @ V, [1, 0], atol=1e-12)
    np.testing.assert_allclose(early[-1].matrix @ V, 0, atol=1e-12)


@pytest.mark.parametrize("kwargs", [{}, {"pmf_delay_ns": 123.4}, {"fiber_group_delay_ns_per_km": 4871.3},
                                    {"pmf_delay_ns": 0.0}])
def test_delay_difference_examples(kwargs):
    assert output_delay_difference(SchemeConfig(**kwargs)) == 0.0


@given(configs)
def test_delay_removal_exact(cfg):
    assert output_delay_difference(cfg) == 0.0


def test_config_validation():
    with pytest.raises(InvalidArgument):
        SchemeConfig(pmf_delay_ns=-1)
    with pytest.raises(InvalidArgument):
        SchemeConfig(launch_angle_deg=math.nan)


def test_output_state_examples():
    np.testing.assert_allclose(build_output_state(SchemeConfig()), PHI_PLUS, atol=1e-15)
    np.testing.assert_allclose(build_output_state(SchemeConfig(launch_angle_deg=0)),
                               pure(ket(vv=1)), atol=1e-15)
    minus = build_output_state(SchemeConfig(pump_phase_rad=math.pi / 2))
    np.testing.assert_allclose(minus, pure(ket(hh=-1, vv=1)), atol=1e-15)
    np.testing.assert_allclose(minus, bell_state(math.pi, R2), atol=1e-15)


@given(configs)
def test_output_state_is_pure(cfg):
    rho = build_output_state(cfg)
    np.testing.assert_allclose(rho, rho.conj().T, atol=1e-12)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
    w = np.linalg.eigvalsh(rho)
    assert w[-1] == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=50)
@given(configs, st.integers(0, 2**32 - 1))
def test_output_state_independent_of_fiber(cfg, seed):
    rng = np.random.default_rng(seed)
    np.testing.assert_allclose(build_output_state(cfg, haar_random_su2(rng), haar_random_su2(rng)),
                               build_output_state(cfg), atol=1e-12)


@pytest.mark.parametrize("launch", np.linspace(0, 90, 19))
def test_concurrence_vs_launch(launch):
    c = concurrence(build_output_state(SchemeConfig(launch_angle_deg=launch)))
    assert c == pytest.approx(abs(math.sin(math.radians(2 * launch))), abs=1e-10)


def test_drift_with_frm_is_flat():
    vis = drift_experiment(100, True, seed=4)
    ideal = fringe_visibility(build_output_state(SchemeConfig()), 0.0)
    assert max(abs(v - ideal) for v in vis) < 1e-12


def test_drift_reference_without_drift_matches_compensated():
    from frmpairs.quantum import apply_local
    from frmpairs.scheme import birth_state
    cfg = SchemeConfig()
    ref = fringe_visibility(apply_local(np.eye(2), np.eye(2), birth_state(cfg)), 0.0)
    assert ref == pytest.approx(fringe_visibility(build_output_state(cfg), 0.0), abs=1e-15)


def test_drift_reference_spreads():
    vis = drift_experiment(100, False, seed=4)
    assert np.std(vis, ddof=1) > 0.1


def test_drift_deterministic_and_worker_independent():
    a = drift_experiment(20, False, seed=9)
    assert a == drift_experiment(20, False, seed=9)
    assert a == drift_experiment(20, False, seed=9, workers=4)


def test_drift_rejects_zero_trials():
    with pytest.raises(InvalidArgument):
        drift_experiment(0, True, seed=1)
