import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aswme.model import (
    ClosedFormUnavailable,
    Layout,
    ModelConfig,
    Variant,
    flux_jacobian,
    flux_radial,
    forcing,
    haswme_closed_form,
    nonconservative_matrix,
    primitives,
    source_friction,
    state_from_primitives,
    system_matrix,
    truncate,
)

JACOBIAN_ORDERS = [(1, 0), (2, 0), (3, 0), (1, 1), (2, 2), (3, 3)]


def random_state(rng, cfg, scale=1.0):
    return state_from_primitives(
        cfg,
        rng.uniform(0.5, 3.0),
        rng.uniform(-1, 1) * scale,
        rng.uniform(-1, 1, cfg.n_r) * scale,
        rng.uniform(-1, 1) * scale,
        rng.uniform(-1, 1, cfg.n_theta) * scale,
    )


def fd_jacobian(U, cfg, eps=1e-6):
    J = np.empty((cfg.size, cfg.size))
    for k in range(cfg.size):
        step = eps * max(1.0, abs(U[k]))
        Up, Um = U.copy(), U.copy()
        Up[k] += step
        Um[k] -= step
        J[:, k] = (flux_radial(Up, cfg) - flux_radial(Um, cfg)) / (2 * step)
    return J


def a22(h, g, v, a1, a2, w, c1, c2):
    """Hand-derived (2,2) system matrix, first column included.

    The v-term of d2 is -2 v a1, the same coupling as in the first-order system.
    """
    d1 = g * h - v**2 - a1**2 / 3 - a2**2 / 5
    d2 = -2 * v * a1 - 4 / 5 * a1 * a2
    d3 = -2 / 21 * (3 * a2 * (7 * v + a2) + 7 * a1**2)
    e1 = -v * w - a1 * c1 / 3 - a2 * c2 / 5
    e2 = (-c1 * (5 * v + 2 * a2) - a1 * (5 * w + 2 * c2)) / 5
    e3 = -c2 * v - a2 * (7 * w + 2 * c2) / 7 - 2 / 3 * a1 * c1
    return np.array(
        [
            [0, 1, 0, 0, 0, 0, 0],
            [d1, 2 * v, 2 * a1 / 3, 2 * a2 / 5, 0, 0, 0],
            [d2, 2 * a1, v + a2, 3 * a1 / 5, 0, 0, 0],
            [d3, 2 * a2, a1 / 3, v + 3 * a2 / 7, 0, 0, 0],
            [e1, w, c1 / 3, c2 / 5, v, a1 / 3, a2 / 5],
            [e2, c1, 3 * c2 / 5, c1 / 5, a1, v + 2 * a2 / 5, 2 * a1 / 5],
            [e3, c2, -c1 / 3, c2 / 7, a2, 2 * a1 / 3, v + 2 * a2 / 7],
        ]
    )


# -- configuration and layout -------------------------------------------------


@pytest.mark.parametrize(
    "kwargs",
    [dict(n_r=-1), dict(n_theta=-2), dict(g=0.0), dict(nu=-0.1), dict(slip=0.0), dict(variant="other")],
)
def test_config_rejects_invalid(kwargs):
    with pytest.raises(ValueError):
        ModelConfig(**kwargs)


@pytest.mark.parametrize("nr, nt", [(0, 0), (2, 0), (3, 1), (2, 5)])
def test_layout(nr, nt):
    cfg = ModelConfig(nr, nt)
    lay = cfg.layout
    assert cfg.size == 3 + nr + nt
    names = lay.names()
    assert len(names) == cfg.size
    assert names[lay.vt] == "v_thm"
    assert names[lay.alpha] == [f"alpha_{i}" for i in range(1, nr + 1)]
    assert names[lay.gamma] == [f"gamma_{i}" for i in range(1, nt + 1)]
    assert Layout(nr, nt).size == cfg.size


def test_primitive_round_trip():
    cfg = ModelConfig(3, 2)
    U = state_from_primitives(cfg, 2.0, 0.3, [0.1, -0.2, 0.3], -0.4, [0.5, 0.6])
    p = primitives(U, cfg)
    assert (p.h, p.vr, p.vt) == pytest.approx((2.0, 0.3, -0.4))
    np.testing.assert_allclose(p.alpha, [0.1, -0.2, 0.3])
    np.testing.assert_allclose(p.gamma, [0.5, 0.6, 0.0])  # padded


@pytest.mark.parametrize("h", [0.0, -1.0, np.nan])
def test_nonpositive_height_rejected(h):
    cfg = ModelConfig(1, 1)
    U = np.array([h, 0, 0, 0, 0.0])
    for fn in (flux_radial, flux_jacobian, nonconservative_matrix, system_matrix):
        with pytest.raises(ValueError):
            fn(U, cfg)


def test_wrong_size_rejected():
    with pytest.raises(ValueError):
        flux_radial(np.ones(4), ModelConfig(2, 0))
    with pytest.raises(ValueError):
        state_from_primitives(ModelConfig(1, 0), 1.0, alpha=[1, 2])


def test_truncate_keeps_first_moments():
    cfg = ModelConfig(3, 3)
    U = state_from_primitives(cfg, 2.0, 1.0, [1, 2, 3], 4.0, [5, 6, 7])
    p = primitives(truncate(U, cfg), cfg)
    np.testing.assert_array_equal(p.alpha, [1, 0, 0])
    np.testing.assert_array_equal(p.gamma, [5, 0, 0])
    assert p.vr == 1.0 and p.vt == 4.0


# -- flux -----------------------------------------------------------------------


def test_flux_rest_state():
    cfg = ModelConfig(2, 2)
    np.testing.assert_allclose(flux_radial(state_from_primitives(cfg, 1.0), cfg), [0, 0.5, 0, 0, 0, 0, 0])


def test_flux_20_example():
    cfg = ModelConfig(2, 0)
    F = flux_radial(state_from_primitives(cfg, 1.0, 1.0, [1.0, 1.0]), cfg)
    np.testing.assert_allclose(F, [1, 1 + 1 / 3 + 1 / 5 + 1 / 2, 4 / 5 + 2, 2 / 3 + 2 / 7 + 2, 0], atol=1e-14)


def test_flux_angular_mean_example():
    cfg = ModelConfig(1, 1)
    F = flux_radial(state_from_primitives(cfg, 1.0, 1.0, [1.0], 2.0, [1.0]), cfg)
    assert F[cfg.layout.vt] == pytest.approx(2 + 1 / 3, abs=1e-14)


def test_flux_batched_matches_single():
    rng = np.random.default_rng(3)
    cfg = ModelConfig(2, 3)
    U = np.array([random_state(rng, cfg) for _ in range(5)])
    np.testing.assert_allclose(flux_radial(U, cfg), [flux_radial(u, cfg) for u in U], atol=1e-15)


# -- jacobian -------------------------------------------------------------------


@pytest.mark.parametrize("nr, nt", JACOBIAN_ORDERS)
def test_jacobian_matches_finite_differences(nr, nt):
    rng = np.random.default_rng(nr * 10 + nt)
    cfg = ModelConfig(nr, nt)
    for _ in range(20):
        U = random_state(rng, cfg)
        J = flux_jacobian(U, cfg)
        Jfd = fd_jacobian(U, cfg)
        assert np.max(np.abs(J - Jfd)) <= 1e-6 * max(1.0, np.max(np.abs(J)))


@pytest.mark.parametrize("nr, nt", [(0, 0), (2, 0), (3, 3)])
def test_jacobian_rest_state(nr, nt):
    cfg = ModelConfig(nr, nt, g=9.81)
    J = flux_jacobian(state_from_primitives(cfg, 2.0), cfg)
    expected = np.zeros((cfg.size, cfg.size))
    expected[0, 1] = 1.0
    expected[1, 0] = 9.81 * 2.0
    np.testing.assert_allclose(J, expected, atol=1e-14)


# -- non-conservative matrix ------------------------------------------------------


def test_q_matrix_20_example():
    cfg = ModelConfig(2, 0)
    a1, a2, v = 1.0, 1.0, 2.0
    Q = nonconservative_matrix(state_from_primitives(cfg, 1.0, v, [a1, a2]), cfg)
    np.testing.assert_allclose(Q[2:4, 2:4], [[v - a2 / 5, a1 / 5], [a1, v + a2 / 7]], atol=1e-14)
    assert not np.any(Q[[0, 1, cfg.layout.vt]])
    assert not np.any(Q[:, [0, 1]])


@pytest.mark.parametrize("nr, nt", [(1, 1), (3, 2), (2, 4)])
def test_q_matrix_without_moments(nr, nt):
    cfg = ModelConfig(nr, nt)
    v, w = 0.7, -0.3
    Q = nonconservative_matrix(state_from_primitives(cfg, 1.5, v, vt=w), cfg)
    lay = cfg.layout
    expected = np.zeros_like(Q)
    for i in range(nr):
        expected[lay.alpha.start + i, lay.alpha.start + i] = v
    for i in range(min(nr, nt)):
        expected[lay.gamma.start + i, lay.alpha.start + i] = w
    np.testing.assert_allclose(Q, expected, atol=1e-15)


def test_q_matrix_11_angular_row():
    cfg = ModelConfig(1, 1)
    Q = nonconservative_matrix(state_from_primitives(cfg, 1.0, 0.2, [0.4], 0.9, [0.6]), cfg)
    lay = cfg.layout
    assert Q[lay.gamma.start, lay.alpha.start] == pytest.approx(0.9)


# -- system matrix ---------------------------------------------------------------


def test_rest_state_linearization():
    cfg = ModelConfig(2, 2)
    A = system_matrix(state_from_primitives(cfg, 1.0), cfg)
    expected = np.zeros((7, 7))
    expected[0, 1] = 1.0
    expected[1, 0] = 1.0
    np.testing.assert_array_equal(A, expected)
    ev = np.sort(np.linalg.eigvals(A).real)
    np.testing.assert_allclose(ev, [-1, 0, 0, 0, 0, 0, 1], atol=1e-14)


def test_a22_reproduction():
    rng = np.random.default_rng(22)
    cfg = ModelConfig(2, 2, g=rng.uniform(0.5, 10))
    for _ in range(50):
        h, v, a1, a2, w, c1, c2 = rng.uniform(0.2, 3), *rng.uniform(-2, 2, 6)
        U = state_from_primitives(cfg, h, v, [a1, a2], w, [c1, c2])
        np.testing.assert_allclose(system_matrix(U, cfg), a22(h, cfg.g, v, a1, a2, w, c1, c2), rtol=0, atol=1e-13)


def test_haswme_20_closed_entry():
    cfg = ModelConfig(2, 0, variant=Variant.HASWME)
    A = system_matrix(state_from_primitives(cfg, 1.0, 0.0, [1.0, 0.5]), cfg)
    assert A[1, 0] == pytest.approx(2 / 3)
    assert A[3, 0] == pytest.approx(-2 / 3)  # -2/3 alpha_1^2 from the truncation


@pytest.mark.parametrize("nr, nt", [(2, 0), (3, 3), (4, 1)])
def test_variants_agree_without_higher_moments(nr, nt):
    rng = np.random.default_rng(7)
    a = ModelConfig(nr, nt)
    alpha, gamma = np.zeros(nr), np.zeros(nt)
    alpha[0] = rng.normal()
    gamma[:1] = rng.normal()
    U = state_from_primitives(a, 1.3, 0.2, alpha, -0.5, gamma)
    np.testing.assert_array_equal(system_matrix(U, a), system_matrix(U, a.with_(variant="haswme")))


@pytest.mark.parametrize("n", range(1, 7))
@pytest.mark.parametrize("nt_equals_nr", [False, True])
def test_closed_form_matches_assembly(n, nt_equals_nr):
    rng = np.random.default_rng(100 + n)
    cfg = ModelConfig(n, n if nt_equals_nr else 0, g=rng.uniform(0.5, 10), variant=Variant.HASWME)
    for _ in range(10):
        U = random_state(rng, cfg, scale=2.0)
        p = primitives(U, cfg)
        M = haswme_closed_form(cfg, p.h, p.vr, p.alpha[0], p.vt, p.gamma[0] if cfg.n_theta else 0.0)
        np.testing.assert_allclose(M, system_matrix(U, cfg), rtol=0, atol=1e-13)


@pytest.mark.parametrize("n", range(1, 7))
def test_zero_block_exact(n):
    rng = np.random.default_rng(n)
    cfg = ModelConfig(n, n, variant=Variant.HASWME)
    A = system_matrix(random_state(rng, cfg), cfg)
    assert np.all(A[: n + 2, n + 2 :] == 0.0)


def test_closed_form_constant_profile():
    cfg = ModelConfig(3, 3, variant=Variant.HASWME)
    U = state_from_primitives(cfg, 1.7, 0.4, vt=-0.2)
    np.testing.assert_allclose(haswme_closed_form(cfg, 1.7, 0.4, 0.0, -0.2, 0.0), system_matrix(U, cfg), atol=1e-15)


def test_closed_form_unavailable():
    with pytest.raises(ClosedFormUnavailable):
        haswme_closed_form(ModelConfig(3, 1, variant="haswme"), 1.0, 0.0, 1.0)


def test_gamma_independence_of_22_spectrum():
    rng = np.random.default_rng(5)
    cfg = ModelConfig(2, 2)
    base = dict(h=1.2, vr=0.3, alpha=[0.4, -0.6], vt=0.8)
    ref = np.sort_complex(np.linalg.eigvals(system_matrix(state_from_primitives(cfg, gamma=[0, 0], **base), cfg)))
    for _ in range(10):
        gam = rng.uniform(-2, 2, 2)
        ev = np.sort_complex(np.linalg.eigvals(system_matrix(state_from_primitives(cfg, gamma=gam, **base), cfg)))
        np.testing.assert_allclose(ev, ref, atol=1e-9)


# -- forcing and friction -----------------------------------------------------------


def test_forcing_rest_state_zero():
    cfg = ModelConfig(2, 2)
    assert not np.any(forcing(state_from_primitives(cfg, 3.0), 12.0, cfg))


def test_forcing_swirl_example():
    cfg = ModelConfig(2, 2)
    G = forcing(state_from_primitives(cfg, 1.0, 0.0, vt=2.0), 10.0, cfg)
    assert G[1] == pytest.approx(0.4)
    assert G[cfg.layout.vt] == 0.0


def test_forcing_angular_example():
    cfg = ModelConfig(1, 1)
    G = forcing(state_from_primitives(cfg, 1.0, 1.0, vt=1.0), 2.0, cfg)
    assert G[cfg.layout.vt] == pytest.approx(-1.0)
    assert G[0] == pytest.approx(-0.5)  # mass: -h v / r


@pytest.mark.parametrize("r", [0.0, -1.0])
def test_forcing_rejects_nonpositive_radius(r):
    cfg = ModelConfig(1, 0)
    with pytest.raises(ValueError):
        forcing(state_from_primitives(cfg, 1.0), r, cfg)


def test_friction_zero_viscosity():
    cfg = ModelConfig(3, 3, nu=0.0)
    U = state_from_primitives(cfg, 1.0, 1.0, [1, 2, 3], 1.0, [1, 2, 3])
    assert not np.any(source_friction(U, cfg))


def test_friction_example():
    cfg = ModelConfig(3, 0, nu=0.1, slip=0.1)
    S = source_friction(state_from_primitives(cfg, 1.0, 1.0), cfg)
    np.testing.assert_allclose(S, [0, -1, -3, -5, -7, 0], atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(1, 4),
    h=st.floats(0.1, 5),
    v=st.floats(-2, 2),
    w=st.floats(-2, 2),
    seed=st.integers(0, 2**16),
)
def test_friction_symmetric_roles(n, h, v, w, seed):
    rng = np.random.default_rng(seed)
    a, c = rng.uniform(-1, 1, n), rng.uniform(-1, 1, n)
    cfg = ModelConfig(n, n, nu=0.3, slip=0.2)
    lay = cfg.layout
    S = source_friction(state_from_primitives(cfg, h, v, a, w, c), cfg)
    T = source_friction(state_from_primitives(cfg, h, w, c, v, a), cfg)
    np.testing.assert_allclose(S[1], T[lay.vt], rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(S[lay.alpha], T[lay.gamma], rtol=1e-13, atol=1e-13)
    assert S[0] == 0.0


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**16), u=st.floats(-3, 3))
def test_galilean_shift(seed, u):
    rng = np.random.default_rng(seed)
    cfg = ModelConfig(2, 2)
    p = dict(h=rng.uniform(0.5, 2), alpha=rng.uniform(-1, 1, 2), vt=rng.uniform(-1, 1), gamma=rng.uniform(-1, 1, 2))
    v = rng.uniform(-1, 1)
    ev0 = np.sort_complex(np.linalg.eigvals(system_matrix(state_from_primitives(cfg, vr=v, **p), cfg)))
    ev1 = np.sort_complex(np.linalg.eigvals(system_matrix(state_from_primitives(cfg, vr=v + u, **p), cfg)))
    np.testing.assert_allclose(np.sort_complex(ev0 + u), ev1, atol=1e-9)
