import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from oracles import lindblad_dense_expm
from randqfi import dynamics as dy
from randqfi import qstate as qs
from randqfi.metrics import exact_qfi_unitary
from randqfi.qstate import DensityMatrix

DELTA = 2 * np.pi * 1.459
T2 = 2.58


def test_ramsey_examples():
    rho = dy.ramsey_state(dy.RamseyParams(np.pi / 2, DELTA, 0.0, T2)).entries
    assert np.allclose(rho, 0.5 * np.ones((2, 2)))
    rho = dy.ramsey_state(dy.RamseyParams(0.0, DELTA, 1.7, T2)).entries
    assert np.allclose(rho, np.diag([1, 0]))
    t = 3 * np.pi / (2 * DELTA)
    rho = dy.ramsey_state(dy.RamseyParams(np.pi / 2, DELTA, t, T2)).entries
    assert np.isclose(abs(rho[0, 1]), 0.5 * np.exp(-((t / T2) ** 2)))
    assert np.isclose(abs(rho[0, 1]), 0.4805, atol=1e-4)


def test_ramsey_params_validate():
    with pytest.raises(ValueError):
        dy.RamseyParams(0.1, 1.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        dy.RamseyParams(0.1, 1.0, 1.0, 0.0)


@given(st.floats(0, np.pi), st.floats(0, 10), st.floats(0.1, 5))
def test_ramsey_purity_two_ways(phi, t, t2):
    rho = dy.ramsey_state(dy.RamseyParams(phi, 1.0, t, t2))
    closed = 0.5 * (1 + np.sin(phi) ** 2 * np.exp(-2 * (t / t2) ** 2) + np.cos(phi) ** 2)
    assert abs(qs.purity(rho) - closed) <= 1e-12


def test_ramsey_family_matches_state():
    fam = dy.ramsey_family(np.pi / 3, 1.1, T2)
    ref = dy.ramsey_state(dy.RamseyParams(np.pi / 3, DELTA, 1.1, T2))
    assert np.allclose(fam(DELTA * 1.1).entries, ref.entries)


def test_encode_phase_examples():
    rho = qs.random_density_matrix(2, np.random.default_rng(1))
    assert np.allclose(dy.encode_phase(rho, 0.0, 2).entries, rho.entries)
    for n in (1, 3, 4):
        ghz = dy.ghz_circuit(n).density_matrix()
        out = dy.encode_phase(ghz, 0.37, n).entries
        assert np.isclose(out[0, -1], ghz.entries[0, -1] * np.exp(-0.37j * n))
        full = dy.encode_phase(ghz, 2 * np.pi, n).entries
        assert np.isclose(full[0, -1], ghz.entries[0, -1] * np.exp(-2j * np.pi * n))
    with pytest.raises(ValueError):
        dy.encode_phase(rho, 0.1, 3)


def test_encode_phase_matches_dense_generator(rng):
    n = 3
    rho = qs.random_density_matrix(n, rng)
    jz = qs.collective_spin("z", n)
    u = expm(-0.81j * jz)
    assert np.allclose(dy.encode_phase(rho, 0.81, n).entries, u @ rho.entries @ u.conj().T)


@given(st.floats(-4, 4), st.floats(-4, 4), st.integers(0, 2**32 - 1))
def test_encode_phase_composes(a, b, seed):
    rho = qs.random_density_matrix(2, np.random.default_rng(seed))
    lhs = dy.encode_phase(dy.encode_phase(rho, a, 2), b, 2).entries
    assert np.max(np.abs(lhs - dy.encode_phase(rho, a + b, 2).entries)) <= 1e-10


@pytest.mark.parametrize("n", range(1, 10))
def test_ghz_prepare_populations(n):
    pops = np.abs(dy.ghz_prepare(n).amplitudes) ** 2
    expected = np.zeros(2**n)
    expected[0] = expected[-1] = 0.5
    assert np.max(np.abs(pops - expected)) <= 1e-10


@pytest.mark.parametrize("n", range(1, 9))
def test_ghz_prepare_matches_circuit_up_to_phase(n):
    a = dy.ghz_prepare(n).amplitudes
    b = dy.ghz_circuit(n).amplitudes
    # the operator product leaves a relative phase between |0..0> and |1..1>,
    # which a J_z rotation by theta removes: the ratio gains exp(i theta N)
    theta = np.angle((a[-1] / a[0]) / (b[-1] / b[0])) / n
    rotated = b * dy.phase_factors(theta, n)
    assert np.isclose(abs(np.vdot(rotated, a)), 1, atol=1e-10)


def test_ghz_prepare_eight_qubit_qfi():
    rho = dy.ghz_prepare(8).density_matrix()
    assert np.isclose(exact_qfi_unitary(rho, qs.collective_spin("z", 8)).value, 64)


def test_ghz_prepare_range():
    with pytest.raises(ValueError):
        dy.ghz_prepare(0)
    with pytest.raises(ValueError):
        dy.ghz_prepare(13)


def test_dephase_examples():
    rho = dy.ghz_circuit(3).density_matrix()
    assert np.allclose(dy.dephase(rho, dy.DephasingParams(0.0, 5.0)).entries, rho.entries)
    out = dy.dephase(rho, dy.DephasingParams(0.2, 0.7)).entries
    assert np.isclose(out[0, -1], rho.entries[0, -1] * np.exp(-2 * 0.2 * 0.7 * 3))
    assert np.allclose(np.diag(out), np.diag(rho.entries))
    q = dy.ramsey_state(dy.RamseyParams(np.pi / 2, 0, 0, 1))
    half = dy.dephase(q, dy.DephasingParams(np.log(2) / 2, 1.0)).entries
    assert np.isclose(half[0, 1], q.entries[0, 1] / 2)


@given(st.floats(0, 2), st.floats(0, 2), st.floats(0, 1), st.integers(0, 2**32 - 1))
def test_dephase_semigroup(t1, t2, gamma, seed):
    rho = qs.random_density_matrix(2, np.random.default_rng(seed))
    two = dy.dephase(dy.dephase(rho, dy.DephasingParams(gamma, t1)), dy.DephasingParams(gamma, t2))
    one = dy.dephase(rho, dy.DephasingParams(gamma, t1 + t2))
    assert np.max(np.abs(two.entries - one.entries)) <= 1e-10
    qs.validate_density_matrix(one.entries)


def test_dephase_matches_vectorised_lindbladian(rng):
    rho = qs.random_density_matrix(2, rng).entries
    ref = lindblad_dense_expm(rho, 0.3, 1.4)
    assert np.allclose(dy.dephase(rho, dy.DephasingParams(0.3, 1.4)).entries, ref, atol=1e-12)


def test_lindblad_examples():
    rho = dy.ghz_circuit(2).density_matrix()
    same = dy.lindblad_evolve(rho, dy.DephasingParams(0.0, 1.0), 10)
    assert np.allclose(same.entries, rho.entries)
    p = dy.DephasingParams(1.0, 0.1)
    rk = dy.lindblad_evolve(rho, p, 10)
    assert np.max(np.abs(rk.entries - dy.dephase(rho, p).entries)) <= 1e-6
    with pytest.raises(ValueError):
        dy.lindblad_evolve(rho, dy.DephasingParams(1.0, 1.0), 10)


@pytest.mark.parametrize("n", [1, 2, 4])
def test_lindblad_grid_agreement(n):
    rho = qs.random_density_matrix(n, np.random.default_rng(n))
    gamma = 0.5
    for gt in np.linspace(0, 1, 10):
        p = dy.DephasingParams(gamma, gt / gamma)
        steps = max(1, int(np.ceil(gt / 0.01)))
        rk = dy.lindblad_evolve(rho, p, steps)
        assert np.max(np.abs(rk.entries - dy.dephase(rho, p).entries)) <= 1e-6
        qs.validate_density_matrix(rk.entries)


def test_ising_examples():
    p2 = dy.IsingParams(2, 0.7, 1.5, 0.0)
    h = dy.ising_hamiltonian(p2)
    assert np.allclose(h, 0.7 * qs.kron(qs.PAULI_X, qs.PAULI_X))
    p3 = dy.IsingParams(3, 1.0, 1.5, 0.0)
    assert np.isclose(p3.couplings()[0, 2], 2**-1.5)
    assert np.isclose(p3.couplings()[0, 2], 0.3536, atol=1e-4)
    assert np.allclose(dy.ising_hamiltonian(dy.IsingParams(3, 0.0, 1.5, 0.0)), 0)
    h3 = dy.ising_hamiltonian(dy.IsingParams(3, 1.0, 1.5, 0.4))
    assert np.allclose(h3, h3.conj().T)


def test_ising_params_validate():
    with pytest.raises(ValueError):
        dy.IsingParams(1, 1.0, 1.5, 1.0)
    with pytest.raises(ValueError):
        dy.IsingParams(3, 1.0, 3.0, 1.0)
    with pytest.raises(ValueError):
        dy.IsingParams(3, 1.0, 0.0, 1.0)


def test_dephased_ghz_matches_channel():
    n, gamma, t = 4, 0.05, 2.0
    ghz = dy.ghz_circuit(n).density_matrix()
    a = dy.dephase(ghz, dy.DephasingParams(gamma, t)).entries
    b = dy.dephased_ghz(n, np.exp(-2 * gamma * t * n)).entries
    assert np.allclose(a, b)
    assert isinstance(dy.dephased_ghz(2, 0.5), DensityMatrix)
