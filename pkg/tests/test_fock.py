"""Truncated Fock-space container and channel-free state operations."""

import math

import numpy as np
import pytest

from scissorlab import (
    DEFAULT_POLICY,
    CapacityError,
    DensityOperator,
    FockVector,
    TruncationError,
    coherent_state,
    fidelity,
    fock_state,
    mean_photon_number,
    number_distribution,
    partial_trace,
    resize_mode,
    tensor_product,
    trace_distance,
    vacuum_state,
)


def poisson_amplitudes(alpha, n_max):
    # independent series: c_n = e^{-|a|^2/2} a^n / sqrt(n!)
    out = np.array([alpha ** n / math.sqrt(math.factorial(n))
                    for n in range(n_max + 1)], dtype=complex)
    return out * math.exp(-abs(alpha) ** 2 / 2.0)


def random_density(dim, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return DensityOperator(rho / np.trace(rho).real, (dim,))


def test_fock_state_basis_vector():
    psi = fock_state(3, 6)
    assert psi.amplitudes[3] == 1.0
    assert psi.norm_sq() == pytest.approx(1.0)
    assert psi.mode_dims == (7,)
    assert vacuum_state(6).amplitudes[0] == 1.0


def test_fock_state_out_of_range():
    with pytest.raises(ValueError):
        fock_state(7, 6)
    with pytest.raises(ValueError):
        fock_state(-1, 6)


def test_coherent_state_matches_poisson_series():
    alpha = 0.7 - 0.3j
    psi = coherent_state(alpha, 25)
    expect = poisson_amplitudes(alpha, 25)
    expect = expect / np.linalg.norm(expect)
    np.testing.assert_allclose(psi.amplitudes, expect, atol=1e-14)
    assert psi.norm_sq() == pytest.approx(1.0, abs=1e-13)


def test_coherent_state_truncation_guard():
    # |alpha|^2 = 16 needs far more than 5 levels
    with pytest.raises(TruncationError):
        coherent_state(4.0, 5)
    # and a generous cutoff is accepted
    coherent_state(4.0, 60)


def test_coherent_mean_photon_number():
    for alpha in (0.3, 0.9, 1.4 + 0.5j):
        psi = coherent_state(alpha, 40)
        assert mean_photon_number(psi) == pytest.approx(abs(alpha) ** 2,
                                                        abs=1e-9)


def test_number_distribution_poisson():
    alpha = 0.8
    p = number_distribution(coherent_state(alpha, 30))
    nbar = alpha ** 2
    expect = np.array([math.exp(-nbar) * nbar ** n / math.factorial(n)
                       for n in range(31)])
    np.testing.assert_allclose(p, expect, atol=1e-12)


def test_tensor_product_kron_order():
    a = fock_state(1, 2)   # dim 3
    b = fock_state(2, 3)   # dim 4
    joint = tensor_product(a, b)
    assert joint.mode_dims == (3, 4)
    # flat index = n_a * 4 + n_b
    assert joint.amplitudes[1 * 4 + 2] == pytest.approx(1.0)
    assert np.count_nonzero(joint.amplitudes) == 1


def test_tensor_product_promotes_mixed_with_pure():
    rho = random_density(3, seed=0)
    psi = fock_state(0, 2)
    joint = tensor_product(rho, psi)
    assert isinstance(joint, DensityOperator)
    assert joint.mode_dims == (3, 3)
    assert joint.trace() == pytest.approx(1.0)


def test_tensor_product_capacity_guard():
    big = vacuum_state(10 ** 4)
    with pytest.raises(CapacityError):
        tensor_product(big, vacuum_state(10 ** 4))


def test_partial_trace_resource_weights():
    # t|1,0> + r|0,1> with r = 0.6: the kept first mode carries
    # weight r^2 at n=0 and t^2 at n=1
    r, t = 0.6, 0.8
    amps = np.zeros(4, dtype=complex)
    amps[1 * 2 + 0] = t
    amps[0 * 2 + 1] = r
    rho = FockVector(amps, (2, 2)).to_density()
    kept = partial_trace(rho, keep=(0,))
    assert kept.mode_dims == (2,)
    assert kept.matrix[0, 0].real == pytest.approx(0.36, abs=1e-14)
    assert kept.matrix[1, 1].real == pytest.approx(0.64, abs=1e-14)
    assert abs(kept.matrix[0, 1]) < 1e-14


def test_partial_trace_schmidt_symmetry():
    # both reductions of a pure bipartite state share their spectrum
    rng = np.random.default_rng(11)
    amps = rng.normal(size=12) + 1j * rng.normal(size=12)
    psi = FockVector(amps / np.linalg.norm(amps), (3, 4))
    rho = psi.to_density()
    left = partial_trace(rho, keep=(0,)).eigenvalues()
    right = partial_trace(rho, keep=(1,)).eigenvalues()
    np.testing.assert_allclose(np.sort(left), np.sort(right)[-3:], atol=1e-12)


def test_partial_trace_preserves_trace():
    rho = random_density(6, seed=3)
    joint = tensor_product(rho, random_density(2, seed=4))
    for keep in ((0,), (1,), (0, 1)):
        red = partial_trace(joint, keep=keep)
        assert red.trace() == pytest.approx(1.0, abs=1e-12)


def test_partial_trace_recovers_product_factors():
    for seed in range(3):
        a = random_density(4, seed=20 + seed)
        b = random_density(3, seed=30 + seed)
        joint = tensor_product(a, b)
        assert trace_distance(partial_trace(joint, keep=(0,)), a) < 1e-12
        assert trace_distance(partial_trace(joint, keep=(1,)), b) < 1e-12


def test_resize_mode_pad_and_truncate():
    psi = coherent_state(0.4, 8)
    padded = resize_mode(psi, 0, 15)
    assert padded.mode_dims == (15,)
    np.testing.assert_allclose(padded.amplitudes[:9], psi.amplitudes)
    back = resize_mode(padded, 0, 9)
    np.testing.assert_allclose(back.amplitudes, psi.amplitudes)


def test_resize_mode_truncation_guard():
    psi = coherent_state(2.0, 30)
    with pytest.raises(TruncationError):
        resize_mode(psi, 0, 3)


def test_density_rejects_non_hermitian():
    m = np.array([[0.5, 0.3], [0.1, 0.5]], dtype=complex)
    with pytest.raises(ValueError):
        DensityOperator(m, (2,))


def test_validate_catches_negative_eigenvalue():
    m = np.diag([1.2, -0.2]).astype(complex)
    rho = DensityOperator(m, (2,))
    with pytest.raises(ValueError):
        rho.validate(DEFAULT_POLICY)


def test_validate_catches_bad_trace():
    rho = DensityOperator(np.diag([0.4, 0.4]).astype(complex), (2,))
    with pytest.raises(ValueError):
        rho.validate(DEFAULT_POLICY, unit_trace=True)
    rho.validate(DEFAULT_POLICY, unit_trace=False)


def test_fidelity_vacuum_vs_coherent():
    # |<0|alpha>|^2 = e^{-|alpha|^2}
    rho = vacuum_state(15).to_density()
    sigma = coherent_state(0.5, 15).to_density()
    assert fidelity(rho, sigma) == pytest.approx(math.exp(-0.25), abs=1e-10)


def test_fidelity_pure_overlap_and_self():
    rng = np.random.default_rng(5)
    a = rng.normal(size=6) + 1j * rng.normal(size=6)
    b = rng.normal(size=6) + 1j * rng.normal(size=6)
    pa = FockVector(a / np.linalg.norm(a), (6,))
    pb = FockVector(b / np.linalg.norm(b), (6,))
    overlap = abs(np.vdot(pa.amplitudes, pb.amplitudes)) ** 2
    # the Uhlmann route takes operator square roots of rank-1 matrices,
    # whose zero eigenvalues round to ~eps and surface as ~sqrt(eps) noise
    assert fidelity(pa.to_density(), pb.to_density()) == pytest.approx(
        overlap, abs=1e-7)
    rho = random_density(6, seed=6)
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-10)


def test_trace_distance_limits():
    zero = fock_state(0, 4).to_density()
    one = fock_state(1, 4).to_density()
    assert trace_distance(zero, one) == pytest.approx(1.0, abs=1e-12)
    assert trace_distance(zero, zero) == pytest.approx(0.0, abs=1e-14)


def test_trace_distance_fidelity_bounds():
    # 1 - sqrt(F) <= T <= sqrt(1 - F)
    for seed in range(4):
        rho = random_density(5, seed=100 + seed)
        sigma = random_density(5, seed=200 + seed)
        f = fidelity(rho, sigma)
        t = trace_distance(rho, sigma)
        assert 1.0 - math.sqrt(f) <= t + 1e-10
        assert t <= math.sqrt(1.0 - f) + 1e-10


def test_normalized_density():
    rho = DensityOperator(np.diag([0.2, 0.6]).astype(complex), (2,))
    assert rho.normalized().trace() == pytest.approx(1.0)
