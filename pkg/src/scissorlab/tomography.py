"""Iterative maximum-likelihood homodyne tomography.

Binned quadrature samples at several phases define projector-like POVM
elements Pi_j = integral over the bin of |x;theta><x;theta| dx.  The
reconstruction iterates

    R(rho) = sum_j (f_j / Tr(Pi_j rho)) Pi_j,     rho <- R rho R / Tr(...)

with f_j the observed frequencies, which monotonically climbs the
likelihood for this measurement class and converges to the maximum-
likelihood state on the truncated basis.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .fock import DensityOperator
from .measurement import QuadratureSample, wavefunctions
from .numerics import DEFAULT_POLICY, NumericalPolicy

#: integration support: eigenfunctions up to the default reconstruction
#: cutoff are negligible beyond this quadrature magnitude
_FAR_EDGE = 12.0
_GAUSS_ORDER = 24
_PANEL_WIDTH = 0.15


@dataclass(frozen=True)
class QuadratureHistogram:
    """Counts of one phase's samples on strictly increasing bin edges.

    Samples outside [edges[0], edges[-1]] land in the underflow/overflow
    slots so that no event is ever dropped.
    """

    theta: float
    edges: np.ndarray
    counts: np.ndarray
    underflow: int = 0
    overflow: int = 0

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        counts = np.asarray(self.counts, dtype=np.int64)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("edges must be a strictly increasing 1-D array")
        if counts.shape != (edges.size - 1,):
            raise ValueError("counts length must be len(edges) - 1")
        if counts.min(initial=0) < 0 or self.underflow < 0 or self.overflow < 0:
            raise ValueError("counts cannot be negative")
        edges.setflags(write=False)
        counts.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum()) + self.underflow + self.overflow

    @property
    def has_out_of_range(self) -> bool:
        return (self.underflow + self.overflow) > 0


def bin_samples(samples, phases, bin_count: int = 100,
                value_range: tuple[float, float] = (-6.0, 6.0)
                ) -> list[QuadratureHistogram]:
    """Histogram samples per phase on a shared uniform grid.

    Every sample's phase must appear in ``phases`` (exact match: samples
    produced by this package reuse the list's float values verbatim).
    Total counts including under/overflow equal the sample count.
    """
    phases = [float(t) for t in phases]
    if bin_count < 1:
        raise ValueError("bin_count must be >= 1")
    lo, hi = value_range
    if not lo < hi:
        raise ValueError(f"empty value range {value_range}")
    known = set(phases)
    buckets: dict[float, list[float]] = {t: [] for t in phases}
    for s in samples:
        if s.theta not in known:
            raise ValueError(f"sample phase {s.theta} not in the phase list")
        buckets[s.theta].append(s.value)
    edges = np.linspace(lo, hi, bin_count + 1)
    out = []
    for theta in phases:
        vals = np.asarray(buckets[theta], dtype=float)
        counts, _ = np.histogram(vals, bins=edges)
        under = int((vals < lo).sum())
        over = int((vals > hi).sum())
        # np.histogram treats the top edge as inclusive; values above go out
        out.append(QuadratureHistogram(theta, edges, counts, under, over))
    return out


def _gauss_panels(a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights tiling [a, b] in sub-panels."""
    base_x, base_w = np.polynomial.legendre.leggauss(_GAUSS_ORDER)
    n_panels = max(1, int(math.ceil((b - a) / _PANEL_WIDTH)))
    cuts = np.linspace(a, b, n_panels + 1)
    xs, ws = [], []
    for left, right in zip(cuts[:-1], cuts[1:]):
        half = 0.5 * (right - left)
        mid = 0.5 * (right + left)
        xs.append(mid + half * base_x)
        ws.append(half * base_w)
    return np.concatenate(xs), np.concatenate(ws)


def bin_povm(theta: float, lo: float, hi: float, n_max: int) -> np.ndarray:
    """POVM element of one quadrature bin at one phase.

    Pi[m, n] = e^{i (m - n) theta} * integral_lo^hi psi_m(x) psi_n(x) dx,
    evaluated with panel Gauss-Legendre quadrature.
    """
    if not lo < hi:
        raise ValueError(f"empty bin [{lo}, {hi}]")
    xs, ws = _gauss_panels(lo, hi)
    psi = wavefunctions(xs, n_max)
    overlap = np.einsum("k,km,kn->mn", ws, psi, psi)
    n = np.arange(n_max + 1)
    return overlap * np.exp(1j * theta * (n[:, None] - n[None, :]))


def phase_povm_elements(theta: float, edges: np.ndarray, n_max: int
                        ) -> np.ndarray:
    """All elements of one phase: underflow, the bins, overflow.

    The two unbounded tails are integrated out to +-_FAR_EDGE, beyond
    which every retained eigenfunction is negligible; the stack then sums
    to the identity up to quadrature error.
    """
    edges = np.asarray(edges, dtype=float)
    far = max(_FAR_EDGE, abs(edges[0]) + 6.0, abs(edges[-1]) + 6.0)
    bounds = np.concatenate([[-far], edges, [far]])
    return np.stack([
        bin_povm(theta, a, b, n_max)
        for a, b in zip(bounds[:-1], bounds[1:])
    ])


@dataclass
class TomographyProblem:
    """Histograms plus the POVM cache for a chosen reconstruction cutoff."""

    histograms: list[QuadratureHistogram]
    n_max: int = 10
    policy: NumericalPolicy = DEFAULT_POLICY
    elements: np.ndarray = field(init=False, repr=False)
    counts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("reconstruction n_max must be >= 1")
        thetas = {h.theta for h in self.histograms}
        if len(thetas) < 2:
            raise ValueError(
                "tomography needs at least two distinct phases to be "
                "informationally complete"
            )
        element_blocks = []
        count_blocks = []
        for h in self.histograms:
            block = phase_povm_elements(h.theta, h.edges, self.n_max)
            element_blocks.append(block)
            count_blocks.append(np.concatenate(
                [[h.underflow], h.counts, [h.overflow]]
            ))
            ident = block.sum(axis=0)
            miss = np.abs(ident - np.eye(self.n_max + 1)).max()
            if miss > self.policy.povm_completeness_tol:
                raise ValueError(
                    f"POVM for phase {h.theta} deviates from completeness "
                    f"by {miss:.3e}"
                )
        self.elements = np.concatenate(element_blocks)
        self.counts = np.concatenate(count_blocks).astype(float)

    @property
    def total_counts(self) -> float:
        return float(self.counts.sum())


@dataclass(frozen=True)
class ReconstructionResult:
    rho: DensityOperator
    loglik: np.ndarray          # per-count log-likelihood at each iterate
    iterations: int
    converged: bool
    floored_bins: int           # data bins whose model probability was clamped


def maxlik_reconstruct(problem: TomographyProblem, max_iter: int = 2000,
                       tol: float = 1e-10) -> ReconstructionResult:
    """Iterate R rho R from the maximally mixed seed until the likelihood
    gain per count drops below ``tol`` or ``max_iter`` is reached.

    Parameters
    ----------
    problem : binned data and POVM cache.
    max_iter : iteration cap; hitting it sets converged=False.
    tol : stopping threshold on the per-count log-likelihood gain.

    Returns
    -------
    ReconstructionResult with the normalized reconstruction, the
    log-likelihood trace, and convergence diagnostics.  Every iterate is
    checked Hermitian, positive, and unit trace against the policy.
    """
    policy = problem.policy
    total = problem.total_counts
    if total <= 0:
        raise ValueError("cannot reconstruct from empty histograms")
    occupied = problem.counts > 0
    pi_occ = problem.elements[occupied]
    counts_occ = problem.counts[occupied]
    freq = counts_occ / total
    d = problem.n_max + 1
    rho = np.eye(d, dtype=complex) / d
    floor = policy.probability_floor
    loglik = []
    converged = False
    floored = 0
    iterations = 0
    for iterations in range(1, max_iter + 1):
        probs = np.einsum("jab,ba->j", pi_occ, rho).real
        n_floored = int((probs < floor).sum())
        floored = max(floored, n_floored)
        probs = np.maximum(probs, floor)
        loglik.append(float(counts_occ @ np.log(probs)) / total)
        if len(loglik) > 1 and loglik[-1] - loglik[-2] < tol:
            converged = True
            break
        r_op = np.einsum("j,jab->ab", freq / probs, pi_occ)
        rho = r_op @ rho @ r_op
        rho = 0.5 * (rho + rho.conj().T)
        rho /= np.trace(rho).real
        low = np.linalg.eigvalsh(rho).min()
        if low < -policy.positivity_tol:
            raise ValueError(
                f"reconstruction iterate lost positivity (min eig {low:.3e})"
            )
    result_rho = DensityOperator(rho, (d,)).validate(policy)
    return ReconstructionResult(result_rho, np.asarray(loglik), iterations,
                                converged, floored)


# ---------------------------------------------------------------------------
# density-matrix JSON interchange

def write_density_json(rho: DensityOperator, path) -> None:
    """Serialize a single-mode density matrix as n_max plus re/im parts."""
    if rho.n_modes != 1:
        raise ValueError("JSON interchange covers single-mode states only")
    payload = {
        "n_max": rho.n_max,
        "re": rho.matrix.real.tolist(),
        "im": rho.matrix.imag.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_density_json(path) -> DensityOperator:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    n_max = int(payload["n_max"])
    mat = np.asarray(payload["re"], dtype=float) \
        + 1j * np.asarray(payload["im"], dtype=float)
    if mat.shape != (n_max + 1, n_max + 1):
        raise ValueError(
            f"matrix shape {mat.shape} inconsistent with n_max {n_max}"
        )
    return DensityOperator(mat, (n_max + 1,))
