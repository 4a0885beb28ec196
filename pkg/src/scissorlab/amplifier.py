"""Heralded single-photon ("quantum scissors") noiseless amplifier.

Circuit layout.  An ancilla photon hits an asymmetric beamsplitter A-BS of
reflectivity r, producing the entangled resource

    t |1>_T |0>_R + r |0>_T |1>_R,          t = sqrt(1 - r^2),

between a kept mode T and a mixing mode R.  The coherent input |alpha>
meets R on a balanced beamsplitter S-BS; detector D1 watches the reflected
arm and D2 the transmitted arm.  A success is heralded by a single-photon
event on D1 with (optionally) no click on D2, upon which mode T carries

    |0> + g alpha |1>   (up to normalization),     g = t / r.

Detector model: each detector is an efficiency-mu avalanche diode, i.e.
loss mu followed by an ideal counter.  The heralding element on D1 is the
exactly-one-photon outcome, Pi_1 = sum_n n mu (1-mu)^{n-1} |n><n|; the D2
veto is the no-click element, Pi_0 = sum_n (1-mu)^n |n><n|.  Both are
diagonal in photon number, so heralding reduces to reweighting joint
photon-number amplitudes.

Source imperfections: the ancilla may arrive as vacuum (weight xi0) or as
a photon pair (weight xi2), and may overlap the signal's spatio-temporal
mode only partially (amplitude m); the orthogonal remainder travels
through an identical companion circuit and reaches the same detectors, but
never interferes with the signal.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .fock import (
    DensityOperator,
    FockVector,
    coherent_state,
    resize_mode,
    tensor_product,
)
from .numerics import (
    DEFAULT_POLICY,
    CapacityError,
    NumericalPolicy,
    TruncationError,
)
from .optics import BeamsplitterSpec, apply_beamsplitter, apply_phase

#: companion/ancilla modes never hold more than two photons
_ANCILLA_DIM = 3


def gain_to_reflectivity(g: float) -> float:
    """r such that t/r = g; the amplifier works harder as r shrinks."""
    if g <= 0.0:
        raise ValueError(f"gain must be positive, got {g}")
    return 1.0 / math.sqrt(1.0 + g * g)


def reflectivity_to_gain(r: float) -> float:
    if not 0.0 < r < 1.0:
        raise ValueError(f"reflectivity must lie in (0, 1), got {r}")
    return math.sqrt(1.0 - r * r) / r


@dataclass(frozen=True)
class SourceModel:
    """Ancilla photon-number and mode-match imperfections.

    weight_vacuum     : probability the source fires nothing (xi_0)
    weight_two_photon : probability of a double emission (xi_2)
    mode_overlap      : amplitude overlap m with the signal mode, in [0, 1]
    """

    weight_vacuum: float = 0.0
    weight_two_photon: float = 0.0
    mode_overlap: float = 1.0

    def __post_init__(self):
        x0, x2, m = self.weight_vacuum, self.weight_two_photon, self.mode_overlap
        if not (0.0 <= x0 <= 1.0 and 0.0 <= x2 <= 1.0 and x0 + x2 <= 1.0):
            raise ValueError(
                f"photon-number weights must be probabilities summing <= 1, "
                f"got vacuum={x0}, two_photon={x2}"
            )
        if not 0.0 <= m <= 1.0:
            raise ValueError(f"mode_overlap must lie in [0, 1], got {m}")

    @property
    def weight_single(self) -> float:
        return 1.0 - self.weight_vacuum - self.weight_two_photon

    @property
    def is_ideal(self) -> bool:
        return (self.weight_vacuum == 0.0 and self.weight_two_photon == 0.0
                and self.mode_overlap == 1.0)


IDEAL_SOURCE = SourceModel()

#: imperfect-source working point bracketing the bench success rates
#: (percent-level at weak input rising to a few percent near |alpha| = 1,
#: with both herald branches accepted and no D2 veto)
EXPERIMENT_PRESET = SourceModel(weight_vacuum=0.08, weight_two_photon=0.04,
                                mode_overlap=0.92)
EXPERIMENT_PRESET_MU = 0.07
"""Detector efficiency paired with EXPERIMENT_PRESET."""


@dataclass(frozen=True)
class AmplifierConfig:
    """Full description of one amplifier run.

    Exactly one of ``gain`` and ``reflectivity`` must be given; the other
    is derived through g = sqrt(1 - r^2) / r.
    """

    alpha: complex
    gain: float | None = None
    reflectivity: float | None = None
    source: SourceModel = IDEAL_SOURCE
    detector_mu: float = 1.0
    use_d2_veto: bool = False
    accept_both_heralds: bool = False
    n_max: int = 12

    def __post_init__(self):
        if (self.gain is None) == (self.reflectivity is None):
            raise ValueError("specify exactly one of gain or reflectivity")
        if self.gain is not None and self.gain <= 0.0:
            raise ValueError(f"gain must be positive, got {self.gain}")
        if self.reflectivity is not None and not 0.0 < self.reflectivity < 1.0:
            raise ValueError(
                f"reflectivity must lie in (0, 1), got {self.reflectivity}"
            )
        if not 0.0 < self.detector_mu <= 1.0:
            raise ValueError(f"detector_mu must lie in (0, 1], got {self.detector_mu}")
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")

    @property
    def g(self) -> float:
        if self.gain is not None:
            return float(self.gain)
        return reflectivity_to_gain(float(self.reflectivity))

    @property
    def r(self) -> float:
        if self.reflectivity is not None:
            return float(self.reflectivity)
        return gain_to_reflectivity(float(self.gain))


@dataclass(frozen=True)
class HeraldedOutput:
    """Normalized heralded state on T plus the branch bookkeeping."""

    state: DensityOperator
    success_probability: float
    branch: str  # "d1" or "both"


# ---------------------------------------------------------------------------
# detector POVM weights (diagonal in total photon number)

def no_click_weights(mu: float, n: np.ndarray | int) -> np.ndarray:
    """P(no click | n incident photons) for an efficiency-mu on/off diode."""
    n = np.asarray(n, dtype=float)
    return (1.0 - mu) ** n


def click_weights(mu: float, n: np.ndarray | int) -> np.ndarray:
    """P(click | n incident photons); complement of no_click_weights."""
    return 1.0 - no_click_weights(mu, n)


def single_photon_weights(mu: float, n: np.ndarray | int) -> np.ndarray:
    """P(exactly one photon registered | n incident) = n mu (1-mu)^{n-1}."""
    n = np.asarray(n, dtype=float)
    return n * mu * (1.0 - mu) ** np.maximum(n - 1.0, 0.0)


# ---------------------------------------------------------------------------
# resource construction

def _source_components(source: SourceModel) -> list[tuple[float, dict[int, np.ndarray]]]:
    """Pure components of the raw source, before the A-BS.

    Each entry is (weight, {photon count -> amplitudes over (T, Tc)}):
    amplitudes are given on the (matched, companion) pair as a dims-(3,3)
    tensor; the companion axis is dropped later when mode_overlap == 1.
    """
    m = source.mode_overlap
    mc = math.sqrt(max(0.0, 1.0 - m * m))
    comps = []
    if source.weight_vacuum > 0.0:
        t = np.zeros((_ANCILLA_DIM, _ANCILLA_DIM), dtype=complex)
        t[0, 0] = 1.0
        comps.append((source.weight_vacuum, t))
    if source.weight_single > 0.0:
        t = np.zeros((_ANCILLA_DIM, _ANCILLA_DIM), dtype=complex)
        t[1, 0] = m
        t[0, 1] = mc
        comps.append((source.weight_single, t))
    if source.weight_two_photon > 0.0:
        # (m a_T^+ + mc a_Tc^+)^2 / sqrt(2) acting on vacuum
        t = np.zeros((_ANCILLA_DIM, _ANCILLA_DIM), dtype=complex)
        t[2, 0] = m * m
        t[1, 1] = math.sqrt(2.0) * m * mc
        t[0, 2] = mc * mc
        comps.append((source.weight_two_photon, t))
    return comps


def _resource_components(r: float, source: SourceModel,
                         with_companion: bool) -> list[tuple[float, FockVector]]:
    """Pure components of the A-BS output over (T, R[, Tc, Rc])."""
    a_bs = BeamsplitterSpec(r=r, modes=(0, 1))
    comps = []
    for weight, amp_t_tc in _source_components(source):
        if with_companion:
            tensor = np.zeros((_ANCILLA_DIM,) * 4, dtype=complex)
            tensor[:, 0, :, 0] = amp_t_tc
            vec = FockVector(tensor.reshape(-1), (_ANCILLA_DIM,) * 4)
            vec = apply_beamsplitter(vec, a_bs)                      # T with R
            vec = apply_beamsplitter(vec, BeamsplitterSpec(r=r, modes=(2, 3)))
        else:
            tensor = np.zeros((_ANCILLA_DIM,) * 2, dtype=complex)
            tensor[:, 0] = amp_t_tc[:, 0]
            vec = FockVector(tensor.reshape(-1), (_ANCILLA_DIM,) * 2)
            vec = apply_beamsplitter(vec, a_bs)
        comps.append((weight, vec))
    return comps


def build_resource(r: float, source: SourceModel = IDEAL_SOURCE,
                   policy: NumericalPolicy = DEFAULT_POLICY) -> DensityOperator:
    """Entangled ancilla resource behind the amplifier.

    Returns the state over modes (T, R) for a fully mode-matched source, or
    (T, R, Tc, Rc) when mode_overlap < 1, with every mode truncated at two
    photons (the source never emits more).
    """
    if not 0.0 < r < 1.0:
        raise ValueError(f"reflectivity must lie in (0, 1), got {r}")
    with_companion = source.mode_overlap < 1.0
    comps = _resource_components(r, source, with_companion)
    dims = (_ANCILLA_DIM,) * (4 if with_companion else 2)
    d = math.prod(dims)
    mat = np.zeros((d, d), dtype=complex)
    for weight, vec in comps:
        mat += weight * np.outer(vec.amplitudes, vec.amplitudes.conj())
    return DensityOperator(mat, dims).validate(policy)


# ---------------------------------------------------------------------------
# the analytic reference and the full circuit

def ideal_output(alpha: complex, g: float, n_max: int = 12,
                 accept_both_heralds: bool = False,
                 policy: NumericalPolicy = DEFAULT_POLICY) -> HeraldedOutput:
    """Closed-form heralded state ~ |0> + g alpha |1> and its probability.

    The success probability of the single-detector branch is
    exp(-|alpha|^2) (r^2 / 2) (1 + g^2 |alpha|^2); accepting the
    phase-flipped partner herald doubles it without changing the state.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    r = gain_to_reflectivity(g)
    amps = np.zeros(n_max + 1, dtype=complex)
    amps[0] = 1.0
    amps[1] = g * alpha
    vec = FockVector(amps, (n_max + 1,)).normalized()
    a2 = abs(alpha) ** 2
    p = math.exp(-a2) * (r * r / 2.0) * (1.0 + g * g * a2)
    branch = "both" if accept_both_heralds else "d1"
    if accept_both_heralds:
        p *= 2.0
    return HeraldedOutput(vec.to_density(), p, branch)


def _propagated_components(config: AmplifierConfig,
                           policy: NumericalPolicy) -> tuple[list, tuple, bool]:
    """Propagate each pure source component through both beamsplitters.

    Returns (components, dims, with_companion) where each component is
    (weight, amplitudes reshaped to dims) over the mode order
    [S, T, R] or [S, T, R, Sc, Tc, Rc].  Signal-carrying mode dimensions
    are padded to n_max + 3 so the balanced beamsplitter is exactly
    unitary for every populated photon-number sector.
    """
    n_max = config.n_max
    with_companion = config.source.mode_overlap < 1.0
    d_sig = n_max + _ANCILLA_DIM
    dims = (d_sig, _ANCILLA_DIM, d_sig) + \
        ((_ANCILLA_DIM,) * 3 if with_companion else ())
    if math.prod(dims) > policy.dimension_cap:
        raise CapacityError(
            f"simulation dimension {math.prod(dims)} exceeds cap "
            f"{policy.dimension_cap}"
        )
    signal = coherent_state(config.alpha, n_max, policy)
    signal = resize_mode(signal, 0, d_sig)
    s_bs = BeamsplitterSpec(r=1.0 / math.sqrt(2.0), modes=(0, 2))
    comps = []
    for weight, res in _resource_components(config.r, config.source, with_companion):
        # resource arrives over (T, R[, Tc, Rc]); lift R to the padded dim
        res = resize_mode(res, 1, d_sig)
        vec = tensor_product(signal, res, policy)
        if with_companion:
            # insert the companion signal mode Sc (vacuum) before (Tc, Rc)
            t = vec.amplitudes.reshape(vec.mode_dims)
            t = t[:, :, :, np.newaxis, :, :]
            vec = FockVector(np.ascontiguousarray(
                np.pad(t, [(0, 0)] * 3 + [(0, _ANCILLA_DIM - 1)] + [(0, 0)] * 2)
            ).reshape(-1), dims)
            vec = apply_beamsplitter(vec, s_bs, policy)
            vec = apply_beamsplitter(
                vec, BeamsplitterSpec(r=1.0 / math.sqrt(2.0), modes=(3, 5)), policy)
        else:
            vec = apply_beamsplitter(vec, s_bs, policy)
        comps.append((weight, vec.amplitudes.reshape(dims)))
    return comps, dims, with_companion


def simulate(config: AmplifierConfig,
             policy: NumericalPolicy = DEFAULT_POLICY) -> HeraldedOutput:
    """Run the full heralded circuit and condition on the D1 herald.

    Builds input (x) resource, mixes signal and R on the balanced
    beamsplitter (likewise the companion pair when the source is only
    partially mode-matched), applies the efficiency-mu detector POVMs --
    exactly one photon across D1's modes, no click across D2's when the
    veto is enabled -- and returns the normalized reduced state on T with
    the herald probability.

    Raises TruncationError if the herald probability falls below the
    conditioning floor, and CapacityError if the joint space would exceed
    the dimension cap.
    """
    comps, dims, with_companion = _propagated_components(config, policy)
    mu = config.detector_mu
    # D1 = reflected arm(s): R (+ Rc); D2 = transmitted arm(s): S (+ Sc)
    n_s = np.arange(dims[0]).reshape(-1, 1, 1)
    n_r = np.arange(dims[2]).reshape(1, 1, -1)
    if with_companion:
        n_s = n_s.reshape(-1, 1, 1, 1, 1, 1)
        n_r = n_r.reshape(1, 1, -1, 1, 1, 1)
        n_sc = np.arange(dims[3]).reshape(1, 1, 1, -1, 1, 1)
        n_rc = np.arange(dims[5]).reshape(1, 1, 1, 1, 1, -1)
        n_d1 = n_r + n_rc
        n_d2 = n_s + n_sc
    else:
        n_d1 = n_r
        n_d2 = n_s
    w = single_photon_weights(mu, n_d1)
    if config.use_d2_veto:
        w = w * no_click_weights(mu, n_d2)
    sqrt_w = np.sqrt(w)
    t_dim = dims[1]
    rho_t = np.zeros((t_dim, t_dim), dtype=complex)
    p_success = 0.0
    for weight, tensor in comps:
        psi_w = tensor * sqrt_w
        if with_companion:
            branch = np.einsum("strucv,sTrucv->tT", psi_w, psi_w.conj())
        else:
            branch = np.einsum("str,sTr->tT", psi_w, psi_w.conj())
        rho_t += weight * branch
        p_success += weight * float(np.trace(branch).real)
    if p_success < policy.conditioning_floor:
        raise TruncationError(
            f"herald probability {p_success:.3e} below conditioning floor"
        )
    rho_t = rho_t / p_success
    out = DensityOperator(0.5 * (rho_t + rho_t.conj().T), (t_dim,))
    out = resize_mode(out, 0, config.n_max + 1, policy)
    out.validate(policy)
    branch = "d1"
    if config.accept_both_heralds:
        # the partner herald (single photon on D2, none on D1) occurs with
        # equal probability and is folded back by an exact phase flip
        p_success *= 2.0
        branch = "both"
    return HeraldedOutput(out, float(p_success), branch)


@dataclass(frozen=True)
class PhaseCovarianceReport:
    thetas: tuple[float, ...]
    deviations: tuple[float, ...]

    @property
    def max_deviation(self) -> float:
        return max(self.deviations)


def phase_covariance_check(config: AmplifierConfig, thetas,
                           policy: NumericalPolicy = DEFAULT_POLICY
                           ) -> PhaseCovarianceReport:
    """Verify simulate(alpha e^{i theta}) equals the rotated simulate(alpha).

    Returns the trace distance between the two routes for each theta; the
    circuit contains no phase reference, so deviations should sit at
    numerical noise.
    """
    from .fock import trace_distance

    base = simulate(config, policy)
    devs = []
    for theta in thetas:
        rotated_cfg = replace(config, alpha=config.alpha * cmath.exp(1j * theta))
        direct = simulate(rotated_cfg, policy)
        reference = apply_phase(base.state, theta, mode=0)
        devs.append(trace_distance(direct.state, reference))
    return PhaseCovarianceReport(tuple(float(t) for t in thetas),
                                 tuple(float(d) for d in devs))
