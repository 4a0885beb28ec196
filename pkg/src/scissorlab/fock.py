"""Truncated Fock-space states and the linear algebra on them.

States are dense complex arrays tagged with per-mode dimensions.  A mode
truncated at ``n_max`` photons is represented on the ``n_max + 1``
amplitudes for photon numbers ``0..n_max``.  Multimode objects flatten the
tensor product in row-major (C) order, first mode slowest.  Instances are
value-like: arrays are copied in and frozen on construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import (
    DEFAULT_POLICY,
    CapacityError,
    NumericalPolicy,
    TruncationError,
)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _check_dims(mode_dims) -> tuple[int, ...]:
    dims = tuple(int(d) for d in mode_dims)
    if not dims or any(d < 1 for d in dims):
        raise ValueError(f"mode_dims must be positive integers, got {mode_dims}")
    return dims


@dataclass(frozen=True)
class FockVector:
    """Pure state on one or more truncated modes.

    amplitudes : flattened complex vector of length prod(mode_dims)
    mode_dims  : per-mode dimension (n_max + 1 for each mode)
    """

    amplitudes: np.ndarray
    mode_dims: tuple[int, ...]

    def __post_init__(self):
        dims = _check_dims(self.mode_dims)
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != math.prod(dims):
            raise ValueError(
                f"amplitude length {amps.size} does not match mode_dims {dims}"
            )
        object.__setattr__(self, "amplitudes", _frozen(amps))
        object.__setattr__(self, "mode_dims", dims)

    @property
    def n_modes(self) -> int:
        return len(self.mode_dims)

    @property
    def n_max(self) -> int:
        """Photon-number cutoff; defined for single-mode vectors only."""
        if self.n_modes != 1:
            raise ValueError("n_max is only defined for single-mode vectors")
        return self.mode_dims[0] - 1

    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def normalized(self) -> "FockVector":
        n2 = self.norm_sq()
        if n2 <= 0.0:
            raise ValueError("cannot normalize a zero vector")
        return FockVector(self.amplitudes / math.sqrt(n2), self.mode_dims)

    def to_density(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()),
                               self.mode_dims)


@dataclass(frozen=True)
class DensityOperator:
    """Mixed state on one or more truncated modes.

    The matrix must be Hermitian; trace and positivity are checked on
    demand via :meth:`validate` (they are O(d^3) and some intermediates are
    deliberately sub-normalized, e.g. heralded branches before conditioning).
    """

    matrix: np.ndarray
    mode_dims: tuple[int, ...]

    def __post_init__(self):
        dims = _check_dims(self.mode_dims)
        d = math.prod(dims)
        mat = np.array(self.matrix, dtype=complex)
        if mat.shape != (d, d):
            raise ValueError(f"matrix shape {mat.shape} does not match mode_dims {dims}")
        herm = np.abs(mat - mat.conj().T).max()
        if herm > DEFAULT_POLICY.hermiticity_tol:
            raise ValueError(f"matrix is not Hermitian (max asymmetry {herm:.3e})")
        object.__setattr__(self, "matrix", _frozen(mat))
        object.__setattr__(self, "mode_dims", dims)

    @property
    def n_modes(self) -> int:
        return len(self.mode_dims)

    @property
    def n_max(self) -> int:
        if self.n_modes != 1:
            raise ValueError("n_max is only defined for single-mode operators")
        return self.mode_dims[0] - 1

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def normalized(self) -> "DensityOperator":
        tr = self.trace()
        if tr <= 0.0:
            raise ValueError("cannot normalize an operator with non-positive trace")
        return DensityOperator(self.matrix / tr, self.mode_dims)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def validate(self, policy: NumericalPolicy = DEFAULT_POLICY,
                 unit_trace: bool = True) -> "DensityOperator":
        """Check Hermiticity, positivity, and (optionally) unit trace.

        Returns self so calls can be chained; raises ValueError on failure.
        """
        lo = self.eigenvalues().min()
        if lo < -policy.positivity_tol:
            raise ValueError(f"operator has negative eigenvalue {lo:.3e}")
        tr = self.trace()
        if unit_trace:
            if abs(tr - 1.0) > policy.unit_trace_tol:
                raise ValueError(f"operator trace {tr} is not 1")
        elif not (0.0 < tr <= 1.0 + policy.trace_tol):
            raise ValueError(f"operator trace {tr} outside (0, 1]")
        return self


State = FockVector | DensityOperator


def fock_state(n: int, n_max: int) -> FockVector:
    """Number state |n> on a mode truncated at n_max photons."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if not 0 <= n <= n_max:
        raise ValueError(f"photon number {n} outside 0..{n_max}")
    amps = np.zeros(n_max + 1, dtype=complex)
    amps[n] = 1.0
    return FockVector(amps, (n_max + 1,))


def vacuum_state(n_max: int) -> FockVector:
    return fock_state(0, n_max)


def coherent_state(alpha: complex, n_max: int,
                   policy: NumericalPolicy = DEFAULT_POLICY,
                   truncation_tol: float | None = None) -> FockVector:
    """Truncated coherent state, renormalized on the kept amplitudes.

    Parameters
    ----------
    alpha : complex displacement amplitude.
    n_max : photon-number cutoff (>= 1).
    truncation_tol : maximum acceptable weight beyond the cutoff before
        renormalization; defaults to ``policy.truncation_tol``.

    Raises
    ------
    TruncationError
        If the discarded Poisson tail exceeds the tolerance.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    tol = policy.truncation_tol if truncation_tol is None else truncation_tol
    n = np.arange(n_max + 1)
    # c_n = e^{-|a|^2/2} a^n / sqrt(n!), evaluated stably through logs
    log_fact = np.cumsum(np.log(np.maximum(n, 1)))
    mag = np.exp(-0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha)) - 0.5 * log_fact) \
        if alpha != 0 else np.where(n == 0, 1.0, 0.0)
    phase = np.exp(1j * n * np.angle(alpha)) if alpha != 0 else 1.0
    amps = mag * phase
    kept = float(np.vdot(amps, amps).real)
    deficit = 1.0 - kept
    if deficit > tol:
        raise TruncationError(
            f"coherent state |alpha|={abs(alpha):.4g} loses {deficit:.3e} "
            f"probability at n_max={n_max} (tolerance {tol:.1e})"
        )
    return FockVector(amps / math.sqrt(kept), (n_max + 1,))


def tensor_product(a: State, b: State,
                   policy: NumericalPolicy = DEFAULT_POLICY) -> State:
    """Kronecker product of two states; mode_dims concatenate.

    Mixing a pure and a mixed input promotes the pure side to a density
    operator.  Raises CapacityError if the joint dimension exceeds the cap.
    """
    dims = a.mode_dims + b.mode_dims
    if math.prod(dims) > policy.dimension_cap:
        raise CapacityError(
            f"joint dimension {math.prod(dims)} exceeds cap {policy.dimension_cap}"
        )
    if isinstance(a, FockVector) and isinstance(b, FockVector):
        return FockVector(np.kron(a.amplitudes, b.amplitudes), dims)
    am = a.to_density().matrix if isinstance(a, FockVector) else a.matrix
    bm = b.to_density().matrix if isinstance(b, FockVector) else b.matrix
    return DensityOperator(np.kron(am, bm), dims)


def partial_trace(rho: DensityOperator, keep) -> DensityOperator:
    """Trace out all modes not listed in ``keep``.

    ``keep`` is an iterable of mode indices; the kept modes stay in their
    original relative order.  The total trace is preserved exactly.
    """
    keep = sorted(set(int(k) for k in keep))
    n = rho.n_modes
    if any(k < 0 or k >= n for k in keep):
        raise ValueError(f"keep indices {keep} outside 0..{n - 1}")
    if not keep:
        raise ValueError("must keep at least one mode")
    dims = rho.mode_dims
    if len(keep) == n:
        return rho
    tensor = rho.matrix.reshape(dims + dims)
    # contract bra/ket axis pairs of every traced mode, highest index first
    traced = [m for m in range(n) if m not in keep]
    for m in sorted(traced, reverse=True):
        k = tensor.ndim // 2
        tensor = np.trace(tensor, axis1=m, axis2=k + m)
    new_dims = tuple(dims[m] for m in keep)
    d = math.prod(new_dims)
    return DensityOperator(tensor.reshape(d, d), new_dims)


def resize_mode(state: State, mode: int, new_dim: int,
                policy: NumericalPolicy = DEFAULT_POLICY) -> State:
    """Pad (with zero amplitudes) or truncate one mode's dimension.

    Truncation that would discard more than ``policy.truncation_tol`` of
    norm/trace raises TruncationError.
    """
    dims = state.mode_dims
    if not 0 <= mode < len(dims):
        raise ValueError(f"mode {mode} outside 0..{len(dims) - 1}")
    if new_dim < 1:
        raise ValueError("new_dim must be >= 1")
    old = dims[mode]
    if new_dim == old:
        return state
    new_dims = dims[:mode] + (new_dim,) + dims[mode + 1:]
    if isinstance(state, FockVector):
        t = state.amplitudes.reshape(dims)
        if new_dim > old:
            pad = [(0, 0)] * len(dims)
            pad[mode] = (0, new_dim - old)
            t = np.pad(t, pad)
        else:
            sl = [slice(None)] * len(dims)
            sl[mode] = slice(0, new_dim)
            kept = t[tuple(sl)]
            lost = state.norm_sq() - float(np.vdot(kept, kept).real)
            if lost > policy.truncation_tol:
                raise TruncationError(
                    f"truncating mode {mode} to dim {new_dim} discards {lost:.3e}"
                )
            t = kept
        return FockVector(t.reshape(-1), new_dims)
    t = state.matrix.reshape(dims + dims)
    k = len(dims)
    if new_dim > old:
        pad = [(0, 0)] * (2 * k)
        pad[mode] = pad[k + mode] = (0, new_dim - old)
        t = np.pad(t, pad)
    else:
        sl = [slice(None)] * (2 * k)
        sl[mode] = sl[k + mode] = slice(0, new_dim)
        kept = t[tuple(sl)]
        lost = state.trace() - float(
            np.trace(kept.reshape(math.prod(new_dims), -1)).real
        )
        if lost > policy.truncation_tol:
            raise TruncationError(
                f"truncating mode {mode} to dim {new_dim} discards {lost:.3e}"
            )
        t = kept
    d = math.prod(new_dims)
    return DensityOperator(t.reshape(d, d), new_dims)


def mean_photon_number(state: State) -> float:
    """Total mean photon number summed over all modes."""
    dims = state.mode_dims
    if isinstance(state, FockVector):
        probs = np.abs(state.amplitudes) ** 2
    else:
        probs = np.diag(state.matrix).real
    probs = probs.reshape(dims)
    total = 0.0
    for m, d in enumerate(dims):
        marg = probs.sum(axis=tuple(i for i in range(len(dims)) if i != m))
        total += float(np.arange(d) @ marg)
    return total


def number_distribution(state: State) -> np.ndarray:
    """Distribution of the total photon number across all modes."""
    dims = state.mode_dims
    if isinstance(state, FockVector):
        probs = np.abs(state.amplitudes) ** 2
    else:
        probs = np.diag(state.matrix).real
    probs = probs.reshape(dims)
    out = np.zeros(sum(d - 1 for d in dims) + 1)
    for idx, p in np.ndenumerate(probs):
        out[sum(idx)] += p
    return out


def _sqrt_psd(mat: np.ndarray, policy: NumericalPolicy) -> np.ndarray:
    """Principal square root of a PSD matrix via eigendecomposition."""
    herm = 0.5 * (mat + mat.conj().T)
    vals, vecs = np.linalg.eigh(herm)
    if vals.min() < -policy.positivity_tol:
        raise ValueError(f"matrix is not positive semidefinite (min eig {vals.min():.3e})")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def fidelity(rho: DensityOperator, sigma: DensityOperator,
             policy: NumericalPolicy = DEFAULT_POLICY) -> float:
    """Uhlmann fidelity F = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.

    Inputs are normalized by their traces first.  For pure states this
    reduces to |<psi|phi>|^2.
    """
    if rho.mode_dims != sigma.mode_dims:
        raise ValueError(f"mode_dims differ: {rho.mode_dims} vs {sigma.mode_dims}")
    a = rho.matrix / rho.trace()
    b = sigma.matrix / sigma.trace()
    sa = _sqrt_psd(a, policy)
    inner = _sqrt_psd(sa @ b @ sa, policy)
    f = float(np.trace(inner).real) ** 2
    return min(max(f, 0.0), 1.0)


def trace_distance(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Half the trace norm of (rho - sigma), each normalized first."""
    if rho.mode_dims != sigma.mode_dims:
        raise ValueError(f"mode_dims differ: {rho.mode_dims} vs {sigma.mode_dims}")
    delta = rho.matrix / rho.trace() - sigma.matrix / sigma.trace()
    vals = np.linalg.eigvalsh(0.5 * (delta + delta.conj().T))
    return min(max(0.5 * float(np.abs(vals).sum()), 0.0), 1.0)
