import itertools

import numpy as np
import pytest
from hypothesis import given

from conftest import fd_directional, orientation_tensors, rotation
from fiberorient.tensors import (BASIS, basis, contracted_index, ddot42, ddot44,
                                 exact_isotropic_a4, fourth_order_normalization_error,
                                 invariants, is_physical, jacobian_columns, outer,
                                 pack, packed_index, rotate4, sym24, unpack)


@given(orientation_tensors())
def test_pack_unpack_roundtrip(a):
    v = pack(a)
    assert v.shape == (5,)
    assert np.allclose(unpack(v), a, atol=1e-14)
    assert np.isclose(np.trace(unpack(v)), 1.0)


def test_unpack_rejects_wrong_shape():
    with pytest.raises(ValueError):
        unpack(np.zeros(6))


def test_basis_is_symmetric_traceless_and_dual_to_pack():
    for r in range(5):
        E = BASIS[r]
        assert np.allclose(E, E.T)
        assert np.trace(E) == 0.0
        assert np.array_equal(pack(E), np.eye(5)[r])
        assert np.array_equal(basis(r + 1), E)
    assert not BASIS.flags.writeable


def test_basis_moves_states_along_components():
    a = unpack([0.3, 0.1, 0.0, 0.4, 0.05])
    for r in range(5):
        v = pack(a + 0.01 * BASIS[r])
        assert np.allclose(v - pack(a), 0.01 * np.eye(5)[r])


def test_contracted_and_packed_indices():
    assert contracted_index(1, 1) == 1 and contracted_index(3, 3) == 3
    assert contracted_index(2, 3) == contracted_index(3, 2) == 4
    assert contracted_index(1, 3) == 5 and contracted_index(1, 2) == 6
    assert [packed_index(*mn) for mn in [(1, 1), (1, 2), (1, 3), (2, 2), (2, 3)]] == [1, 2, 3, 4, 5]
    with pytest.raises(ValueError):
        packed_index(3, 3)


def test_sym24_is_idempotent_and_fully_symmetric():
    rng = np.random.default_rng(0)
    S = sym24(rng.normal(size=(3, 3, 3, 3)))
    assert np.allclose(sym24(S), S)
    for p in itertools.permutations(range(4)):
        assert np.allclose(np.transpose(S, p), S)


def test_isotropic_fourth_moment_contracts_to_isotropic_second_moment():
    A = exact_isotropic_a4()
    assert np.isclose(A[0, 0, 0, 0], 1 / 5) and np.isclose(A[0, 0, 1, 1], 1 / 15)
    assert fourth_order_normalization_error(A, np.eye(3) / 3) < 1e-15


def test_contractions_match_einsum():
    rng = np.random.default_rng(1)
    A, B, b = rng.normal(size=(3, 3, 3, 3)), rng.normal(size=(3, 3, 3, 3)), rng.normal(size=(3, 3))
    assert np.allclose(ddot42(A, b), np.einsum("ijkl,kl->ij", A, b))
    assert np.allclose(ddot44(A, B), np.einsum("ijmn,mnkl->ijkl", A, B))
    assert np.allclose(outer(b, b), np.einsum("ij,kl->ijkl", b, b))


@given(orientation_tensors())
def test_rotate4_matches_index_form(a):
    Q = rotation([0.3, -0.2, 0.5, 0.7])
    A = outer(a, a)
    assert np.allclose(rotate4(A, Q), np.einsum("ip,jq,kr,ls,pqrs->ijkl", Q, Q, Q, Q, A))


def test_jacobian_columns_packs_each_direction():
    dX = np.stack([BASIS[r] * (r + 1) for r in range(5)])
    J = jacobian_columns(dX)
    assert np.allclose(J, np.diag(np.arange(1.0, 6.0)))


def test_is_physical():
    assert is_physical(np.diag([0.5, 0.3, 0.2]))
    assert not is_physical(np.diag([1.1, 0.0, -0.1]))


@given(orientation_tensors(min_gap=0.02))
def test_invariant_derivatives_match_finite_differences(a):
    inv = invariants(a)
    lam = np.linalg.eigvalsh(a)
    assert np.isclose(inv.II, lam[0] * lam[1] + lam[1] * lam[2] + lam[0] * lam[2])
    assert np.isclose(inv.III, np.prod(lam))
    for r in range(5):
        assert np.isclose(inv.dII[r], fd_directional(lambda x: invariants(x).II, a, r), atol=1e-8)
        assert np.isclose(inv.dIII[r], fd_directional(lambda x: invariants(x).III, a, r), atol=1e-8)
