"""Binned-homodyne POVMs and the iterative likelihood climb."""

import math

import numpy as np
import pytest
from scipy import stats
from scipy.special import erf

from scissorlab import (
    DensityOperator,
    LossChannel,
    QuadratureHistogram,
    TomographyProblem,
    apply_loss,
    bin_povm,
    bin_samples,
    default_phase_grid,
    fidelity,
    ideal_output,
    maxlik_reconstruct,
    phase_povm_elements,
    read_density_json,
    resize_mode,
    sample_homodyne,
    vacuum_state,
    wavefunctions,
    write_density_json,
)


def test_histogram_validation():
    edges = np.linspace(-6, 6, 11)
    QuadratureHistogram(0.0, edges, np.zeros(10, dtype=int))
    with pytest.raises(ValueError):
        QuadratureHistogram(0.0, edges[::-1], np.zeros(10, dtype=int))
    with pytest.raises(ValueError):
        QuadratureHistogram(0.0, edges, np.zeros(9, dtype=int))
    with pytest.raises(ValueError):
        QuadratureHistogram(0.0, edges, np.full(10, -1))


def test_bin_samples_conserves_counts():
    rho = ideal_output(0.5, 2.0).state
    phases = default_phase_grid(4)
    samples = sample_homodyne(rho, phases, 2000, seed=2)
    hists = bin_samples(samples, phases, bin_count=40, value_range=(-2, 2))
    assert len(hists) == 4
    assert sum(h.total for h in hists) == 2000
    assert any(h.has_out_of_range for h in hists)  # +-2 clips real mass


def test_bin_samples_rejects_unknown_phase():
    rho = ideal_output(0.3, 2.0).state
    samples = sample_homodyne(rho, [0.0, 0.5], 10, seed=0)
    with pytest.raises(ValueError):
        bin_samples(samples, [0.0], bin_count=10)


def test_bin_povm_against_dense_quadrature():
    # independent oracle: trapezoid integral of psi_m psi_n over the bin,
    # rotated by e^{i theta (m - n)}
    theta, lo, hi, n_max = 0.7, -0.4, 0.25, 6
    x = np.linspace(lo, hi, 20001)
    psi = wavefunctions(x, n_max)
    overlap = np.trapezoid(psi[:, :, None] * psi[:, None, :], x, axis=0)
    m = np.arange(n_max + 1)
    oracle = overlap * np.exp(1j * theta * (m[:, None] - m[None, :]))
    ours = bin_povm(theta, lo, hi, n_max)
    np.testing.assert_allclose(ours, oracle, atol=1e-9)


def test_phase_povm_completeness():
    edges = np.linspace(-6.0, 6.0, 101)
    for theta in (0.0, 0.9, math.pi / 2):
        block = phase_povm_elements(theta, edges, 10)
        assert block.shape == (102, 11, 11)
        miss = np.abs(block.sum(axis=0) - np.eye(11)).max()
        assert miss < 1e-6


def test_problem_requires_two_phases():
    edges = np.linspace(-6, 6, 11)
    h = QuadratureHistogram(0.0, edges, np.full(10, 5))
    with pytest.raises(ValueError):
        TomographyProblem([h])
    TomographyProblem([h, QuadratureHistogram(1.0, edges, np.full(10, 5))])


def make_problem_from_probabilities(rho, phases, n_max, scale=1e9):
    """Histograms whose counts are the rounded expected values."""
    edges = np.linspace(-6.0, 6.0, 101)
    hists = []
    for theta in phases:
        block = phase_povm_elements(theta, edges, rho.matrix.shape[0] - 1)
        probs = np.einsum("jmn,nm->j", block, rho.matrix).real
        hists.append(QuadratureHistogram(
            theta, edges, np.round(probs[1:-1] * scale).astype(np.int64),
            underflow=int(round(probs[0] * scale)),
            overflow=int(round(probs[-1] * scale))))
    return TomographyProblem(hists, n_max=n_max)


def full_rank_truth():
    # loss keeps the amplified state rank 2; fold in a faint geometric
    # diagonal so the likelihood optimum sits off the positivity boundary
    lossy = apply_loss(ideal_output(0.25, 2.0).state, LossChannel(0.68))
    lossy = resize_mode(lossy, 0, 11)
    diag = 0.5 ** np.arange(11)
    diag /= diag.sum()
    m = 0.98 * lossy.matrix + 0.02 * np.diag(diag).astype(complex)
    return DensityOperator(m, (11,))


def test_maxlik_recovers_generating_state():
    truth = full_rank_truth()
    problem = make_problem_from_probabilities(truth, default_phase_grid(6),
                                              n_max=10)
    result = maxlik_reconstruct(problem, max_iter=8000, tol=1e-13)
    assert result.converged
    assert result.floored_bins == 0
    assert fidelity(result.rho, truth) > 0.99999
    assert result.rho.matrix[1, 1].real == pytest.approx(
        truth.matrix[1, 1].real, abs=1e-4)


def test_loglik_never_decreases():
    truth = ideal_output(0.4, 2.0).state
    phases = default_phase_grid(6)
    samples = sample_homodyne(truth, phases, 30000, eta_hd=0.68, seed=8)
    problem = TomographyProblem(bin_samples(samples, phases), n_max=10)
    result = maxlik_reconstruct(problem)
    gains = np.diff(result.loglik)
    assert gains.min() > -1e-10
    assert result.iterations == len(result.loglik)


def test_reconstruction_sharpens_with_more_data():
    # median fidelity over five fixed datasets climbs along the whole
    # N schedule (weakest step has ~5e-4 of margin with these seeds)
    truth = apply_loss(ideal_output(0.25, 2.0).state, LossChannel(0.68))
    target = resize_mode(truth, 0, 11)
    phases = default_phase_grid(12)
    medians = []
    for n in (1000, 10000, 100000, 200000):
        fids = []
        for seed in (3, 4, 5, 6, 7):
            samples = sample_homodyne(truth, phases, n, seed=seed)
            problem = TomographyProblem(bin_samples(samples, phases),
                                        n_max=10)
            rho = maxlik_reconstruct(problem).rho
            fids.append(fidelity(rho, target))
        medians.append(float(np.median(fids)))
    assert all(b > a for a, b in zip(medians, medians[1:]))
    assert medians[-1] > 0.999


def test_vacuum_reconstruction_stays_empty():
    phases = default_phase_grid(12)
    samples = sample_homodyne(vacuum_state(8).to_density(), phases, 100000,
                              seed=21)
    problem = TomographyProblem(bin_samples(samples, phases), n_max=6)
    result = maxlik_reconstruct(problem)
    occupations = np.diag(result.rho.matrix).real
    assert float(occupations[1:] @ np.arange(1, 7)) < 0.01


def test_binned_vacuum_counts_pass_chi_squared():
    # one-phase histogram against the analytic Gaussian bin masses;
    # cells are pooled outward until every expectation reaches 5 counts
    n = 100000
    samples = sample_homodyne(vacuum_state(4).to_density(), [0.0], n, seed=13)
    hist = bin_samples(samples, [0.0], bin_count=100, value_range=(-5, 5))[0]
    root2 = math.sqrt(2.0)
    edges = hist.edges
    mass = 0.5 * (erf(edges[1:] / root2) - erf(edges[:-1] / root2))
    counts = hist.counts.astype(float)
    counts[0] += hist.underflow
    counts[-1] += hist.overflow
    mass[0] += 0.5 * (erf(edges[0] / root2) + 1.0)
    mass[-1] += 0.5 * (1.0 - erf(edges[-1] / root2))
    expected = n * mass
    while expected[0] < 5:
        expected[1] += expected[0]
        counts[1] += counts[0]
        expected, counts = expected[1:], counts[1:]
    while expected[-1] < 5:
        expected[-2] += expected[-1]
        counts[-2] += counts[-1]
        expected, counts = expected[:-1], counts[:-1]
    stat = float(((counts - expected) ** 2 / expected).sum())
    p = float(stats.chi2.sf(stat, len(expected) - 1))
    assert p > 0.001


def test_density_json_roundtrip(tmp_path):
    rho = apply_loss(ideal_output(0.3, 2.0).state, LossChannel(0.9))
    path = tmp_path / "rho.json"
    write_density_json(rho, path)
    back = read_density_json(path)
    assert back.mode_dims == rho.mode_dims
    np.testing.assert_array_equal(back.matrix, rho.matrix)
