import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import legendre

from aswme.basis import (
    build_coupling_tables,
    eval_dphi,
    eval_phi,
    gauss_unit,
    phi_coeffs,
    project_velocity_profile,
    reconstruct_profile,
)


def legendre_shifted(j, z):
    """Independent oracle: P_j(1 - 2 z) from numpy's Legendre class."""
    c = np.zeros(j + 1)
    c[j] = 1.0
    return legendre.legval(1.0 - 2.0 * np.asarray(z), c)


@pytest.mark.parametrize(
    "j, z, expected",
    [(0, 0.37, 1.0), (1, 0.25, 0.5), (2, 0.0, 1.0), (2, 0.5, -0.5)],
)
def test_eval_phi_examples(j, z, expected):
    assert eval_phi(j, z) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("j, z, expected", [(0, 0.5, 0.0), (1, 0.1, -2.0), (1, 0.9, -2.0), (2, 0.5, 0.0)])
def test_eval_dphi_examples(j, z, expected):
    assert eval_dphi(j, z) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("bad", [-0.1, 1.0000001, np.nan])
def test_zeta_outside_unit_interval_rejected(bad):
    with pytest.raises(ValueError):
        eval_phi(1, bad)
    with pytest.raises(ValueError):
        eval_dphi(1, bad)


def test_negative_index_rejected():
    with pytest.raises(ValueError):
        phi_coeffs(-1)


@pytest.mark.parametrize("j", range(9))
def test_phi_matches_shifted_legendre(j):
    z = np.linspace(0, 1, 41)
    np.testing.assert_allclose(eval_phi(j, z), legendre_shifted(j, z), atol=1e-10)
    assert eval_phi(j, 0.0) == pytest.approx(1.0, abs=1e-15)


def test_orthogonality():
    z, w = gauss_unit(12)
    P = np.array([eval_phi(j, z) for j in range(9)])
    gram = (P * w) @ P.T
    np.testing.assert_allclose(gram, np.diag(1.0 / (2 * np.arange(9) + 1)), atol=1e-14)


def test_coupling_examples():
    t = build_coupling_tables(3)
    assert t.A[1, 1, 2] == pytest.approx(2 / 5, abs=1e-14)
    # integral definition gives -1 here; the sign is what makes Q contribute +alpha_1
    assert t.B[2, 1, 1] == pytest.approx(-1.0, abs=1e-14)
    assert t.C[1, 1] == pytest.approx(4.0, abs=1e-14)


def test_tables_read_only_and_cached():
    t = build_coupling_tables(4)
    assert build_coupling_tables(4) is t
    with pytest.raises(ValueError):
        t.A[1, 1, 1] = 3.0


def test_table_invariants():
    n = 8
    t = build_coupling_tables(n)
    A, B, C = t.A, t.B, t.C
    np.testing.assert_allclose(A, A.transpose(0, 2, 1), atol=1e-14)
    np.testing.assert_allclose(C, C.T, atol=1e-14)
    idx = np.arange(n + 1)
    I, J, K = np.meshgrid(idx, idx, idx, indexing="ij")
    assert np.all(A[(I + J + K) % 2 == 1] == 0)
    for i in range(1, n + 1):
        for k in range(1, n + 1):
            if abs(i - k) != 1:
                assert A[i, 1, k] == 0
                assert B[i, k, 1] == 0


@pytest.mark.parametrize("i", range(2, 8))
def test_table_identities(i):
    A = build_coupling_tables(8).A
    assert 2 * A[i, 1, i + 1] == pytest.approx((2 * i + 2) / (2 * i + 3), abs=1e-14)
    assert 2 * A[i, 1, i - 1] == pytest.approx(2 * i / (2 * i - 1), abs=1e-14)


def test_tables_against_fine_quadrature():
    """Oracle: brute-force integrals with many more nodes than needed."""
    n = 4
    t = build_coupling_tables(n)
    z, w = gauss_unit(40)
    phi = np.array([legendre_shifted(j, z) for j in range(n + 1)])
    dphi = np.array([np.polynomial.polynomial.polyval(z, np.polynomial.polynomial.polyder(phi_coeffs(j))) for j in range(n + 1)])
    # int_0^zeta phi_j via the Legendre antiderivative identity on x = 1 - 2 zeta
    iphi = np.empty_like(phi)
    for j in range(n + 1):
        c = np.zeros(j + 1)
        c[j] = 1.0
        anti = legendre.legint(c, lbnd=1.0)
        iphi[j] = -0.5 * legendre.legval(1.0 - 2.0 * z, anti)
    s = (2 * np.arange(n + 1) + 1.0)[:, None, None]
    np.testing.assert_allclose(t.A, s * np.einsum("iq,jq,kq,q->ijk", phi, phi, phi, w), atol=1e-12)
    np.testing.assert_allclose(t.B, s * np.einsum("iq,jq,kq,q->ijk", dphi, iphi, phi, w), atol=1e-12)
    np.testing.assert_allclose(t.C, np.einsum("iq,jq,q->ij", dphi, dphi, w), atol=1e-11)


def test_projection_examples():
    mean, c = project_velocity_profile(lambda z: np.full_like(z, 0.5), 3)
    assert mean == pytest.approx(0.5)
    np.testing.assert_allclose(c, 0.0, atol=1e-15)

    mean, c = project_velocity_profile(lambda z: eval_phi(1, z), 2)
    assert mean == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(c, [1.0, 0.0], atol=1e-14)

    cubic = lambda z: 0.25 - 2.5 * z + 7.5 * z**2 - 5 * z**3  # noqa: E731
    mean, c = project_velocity_profile(cubic, 4)
    assert mean == pytest.approx(0.25, abs=1e-15)
    np.testing.assert_allclose(c, [-0.25, 0.0, 0.25, 0.0], atol=1e-14)


def test_projection_order_zero():
    mean, c = project_velocity_profile(lambda z: z, 0)
    assert mean == pytest.approx(0.5)
    assert c.shape == (0,)


@settings(max_examples=50, deadline=None)
@given(
    n=st.integers(0, 6),
    mean=st.floats(-3, 3),
    raw=st.lists(st.floats(-3, 3), min_size=6, max_size=6),
)
def test_projection_round_trip(n, mean, raw):
    coeffs = np.array(raw[:n])
    m2, c2 = project_velocity_profile(lambda z: reconstruct_profile(mean, coeffs, z), n)
    assert m2 == pytest.approx(mean, abs=1e-12)
    np.testing.assert_allclose(c2, coeffs, atol=1e-12)
