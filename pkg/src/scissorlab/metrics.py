"""Figures of merit: Wigner maps, effective gain, equivalent input noise,
and the classical-information budget of the heralded amplifier.

Phase-space convention matches the quadrature convention X = a + a^+:
the vacuum Wigner function is exp(-(x^2+p^2)/2) / (2 pi) with unit peak
value 1/(2 pi), and a coherent state |alpha> peaks at
(x, p) = (2 Re alpha, 2 Im alpha).
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .fock import DensityOperator, FockVector, State
from .measurement import quadrature_moments

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class WignerGrid:
    """W(x_i, p_j) sampled on a rectangular grid; values[i, j] = W(x[i], p[j])."""

    x: np.ndarray
    p: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        p = np.asarray(self.p, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.shape != (x.size, p.size):
            raise ValueError("values shape must be (len(x), len(p))")
        for arr in (x, p, v):
            arr.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "values", v)

    def riemann_mass(self) -> float:
        dx = self.x[1] - self.x[0]
        dp = self.p[1] - self.p[0]
        return float(self.values.sum() * dx * dp)

    def marginal_x(self) -> np.ndarray:
        """Integrate over p; matches quadrature_pdf at theta = 0."""
        dp = self.p[1] - self.p[0]
        return self.values.sum(axis=1) * dp

    def marginal_p(self) -> np.ndarray:
        """Integrate over x; matches quadrature_pdf at theta = pi/2."""
        dx = self.x[1] - self.x[0]
        return self.values.sum(axis=0) * dx


def phase_space_axes(extent: float = 6.0, points: int = 201) -> np.ndarray:
    if extent <= 0.0 or points < 2:
        raise ValueError("need a positive extent and at least two points")
    return np.linspace(-extent, extent, points)


def wigner(rho: State, x=None, p=None) -> WignerGrid:
    """Evaluate the Wigner function of a single-mode state on a grid.

    Uses the Fock-basis kernel expansion: with s = x^2 + p^2, the
    |m><n| (m >= n) kernel is

        (-1)^n / (2 pi) * e^{-s/2} (x - i p)^{m-n}
        sqrt(n!/m!) L_n^{m-n}(s)

    and W = sum_{mn} rho_mn K_mn, accumulated over the upper triangle
    via conjugate symmetry.
    """
    if isinstance(rho, FockVector):
        rho = rho.to_density()
    if rho.n_modes != 1:
        raise ValueError("Wigner maps are computed for single-mode states")
    x = phase_space_axes() if x is None else np.asarray(x, dtype=float)
    p = phase_space_axes() if p is None else np.asarray(p, dtype=float)
    gx, gp = np.meshgrid(x, p, indexing="ij")
    s = gx * gx + gp * gp
    base = np.exp(-0.5 * s) / TWO_PI
    lowered = gx - 1j * gp
    d = rho.dim
    values = np.zeros_like(s)
    mat = rho.matrix
    for m in range(d):
        for n in range(m + 1):
            c = mat[m, n]
            if c == 0.0 and m != n:
                continue
            k = m - n
            coeff = math.exp(0.5 * (gammaln(n + 1) - gammaln(m + 1)))
            kernel = ((-1.0) ** n) * coeff * base * eval_genlaguerre(n, k, s)
            if k == 0:
                values += c.real * kernel
            else:
                values += 2.0 * (c * kernel * lowered ** k).real
    return WignerGrid(x, p, values)


def write_wigner_csv(grid: WignerGrid, path) -> None:
    """Persist the grid as CSV rows ``x,p,w`` (x outer loop)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,p,w\n")
        for i, xv in enumerate(grid.x):
            for j, pv in enumerate(grid.p):
                fh.write(f"{xv:.17g},{pv:.17g},{grid.values[i, j]:.17g}\n")


# ---------------------------------------------------------------------------
# gain and noise

def effective_gain(rho_out: State, alpha_in: complex,
                   eta_hd: float = 1.0) -> float:
    """<X_out> / <X_in> along the input phase, with <X_in> = 2 |alpha|.

    When rho_out is a measured state observed behind a homodyne efficiency
    eta_hd, the mean shrinks by sqrt(eta_hd); passing that efficiency
    refers the gain back to the amplifier output plane.
    """
    if alpha_in == 0:
        raise ValueError("effective gain is undefined for a vacuum input")
    if not 0.0 < eta_hd <= 1.0:
        raise ValueError(f"eta_hd must lie in (0, 1], got {eta_hd}")
    theta = cmath.phase(complex(alpha_in))
    mean, _ = quadrature_moments(rho_out, theta)
    return mean / (2.0 * abs(alpha_in) * math.sqrt(eta_hd))


def equivalent_input_noise(rho_out: State, g_eff: float, theta: float,
                           eta_hd: float = 1.0,
                           input_variance: float = 1.0) -> float:
    """N_eq = Var(X_out, theta) / g_eff^2 - Var(X_in).

    A state measured behind homodyne efficiency eta_hd has its variance
    pulled toward the vacuum; the inverse map
    Var = 1 + (Var_measured - 1) / eta_hd restores the output-plane value
    before referring the noise to the input.  Negative values certify
    noiseless (better-than-unity-noise-figure) operation.
    """
    if g_eff == 0.0:
        raise ValueError("g_eff must be nonzero")
    if not 0.0 < eta_hd <= 1.0:
        raise ValueError(f"eta_hd must lie in (0, 1], got {eta_hd}")
    _, var_measured = quadrature_moments(rho_out, theta)
    var_out = 1.0 + (var_measured - 1.0) / eta_hd
    return var_out / (g_eff * g_eff) - input_variance


def ein_statistics(rho_out: State, g_eff: float, phases,
                   eta_hd: float = 1.0,
                   input_variance: float = 1.0) -> tuple[float, float, float]:
    """(min, average, max) equivalent input noise across the phase list."""
    phases = [float(t) for t in phases]
    if not phases:
        raise ValueError("need at least one phase")
    vals = [equivalent_input_noise(rho_out, g_eff, t, eta_hd, input_variance)
            for t in phases]
    return min(vals), float(np.mean(vals)), max(vals)


def reference_ein(g_eff: float) -> float:
    """Noise floor of the comparable deterministic device.

    A phase-insensitive amplifier must add (g^2 - 1)/g^2 of input-referred
    noise; below unit gain the comparison is a beamsplitter, which adds
    (1 - g^2)/g^2.
    """
    if g_eff <= 0.0:
        raise ValueError(f"g_eff must be positive, got {g_eff}")
    g2 = g_eff * g_eff
    return (g2 - 1.0) / g2 if g_eff >= 1.0 else (1.0 - g2) / g2


# ---------------------------------------------------------------------------
# information budget

def mutual_info_bound(snr: float, g: float | None = None,
                      r: float | None = None,
                      accept_both_heralds: bool = False
                      ) -> tuple[float, float, float]:
    """Channel information with and without the heralded amplifier.

    For a coherent ensemble with signal-to-noise ratio ``snr`` the direct
    homodyne channel carries I = ln(1 + snr) / 2 nats.  Routing through
    the amplifier keeps only the heralded fraction (r^2/2 per accepted
    branch, evaluated at vanishing input) of events, each now worth
    ln(1 + g^2 snr) / 2, so the budget is their product.

    Returns (I_direct, I_amplified_bound, ratio); at snr = 0 the ratio is
    reported as its analytic limit P_success * g^2.
    """
    if snr < 0.0:
        raise ValueError(f"snr cannot be negative, got {snr}")
    if (g is None) == (r is None):
        raise ValueError("specify exactly one of g or r")
    if g is None:
        if not 0.0 < r < 1.0:
            raise ValueError(f"reflectivity must lie in (0, 1), got {r}")
        g = math.sqrt(1.0 - r * r) / r
    else:
        if g <= 0.0:
            raise ValueError(f"gain must be positive, got {g}")
        r = 1.0 / math.sqrt(1.0 + g * g)
    p_success = r * r / 2.0
    if accept_both_heralds:
        p_success *= 2.0
    i_direct = 0.5 * math.log1p(snr)
    i_bound = p_success * 0.5 * math.log1p(g * g * snr)
    if snr == 0.0:
        ratio = p_success * g * g
    else:
        ratio = i_bound / i_direct
    return i_direct, i_bound, ratio


# ---------------------------------------------------------------------------
# consolidated report

@dataclass(frozen=True)
class MetricsReport:
    g_eff: float
    ein_min: float
    ein_avg: float
    ein_max: float
    success_probability: float
    reference_ein: float
    phases: tuple[float, ...]
    variance_provenance: str  # "output_plane" or "eta_corrected"

    def to_dict(self) -> dict:
        return {
            "g_eff": self.g_eff,
            "ein_min": self.ein_min,
            "ein_avg": self.ein_avg,
            "ein_max": self.ein_max,
            "success_probability": self.success_probability,
            "reference_ein": self.reference_ein,
            "phases": list(self.phases),
            "variance_provenance": self.variance_provenance,
        }


def build_metrics_report(rho_out: State, alpha_in: complex,
                         success_probability: float, phases,
                         eta_hd: float = 1.0) -> MetricsReport:
    """Assemble gain, noise statistics, and the reference noise floor.

    ``eta_hd`` < 1 marks rho_out as a measured (efficiency-degraded)
    state: both gain and variances are referred back to the output plane.
    For a vacuum input the gain-based entries are NaN.
    """
    phases = tuple(float(t) for t in phases)
    if alpha_in == 0:
        nan = float("nan")
        return MetricsReport(nan, nan, nan, nan, float(success_probability),
                             nan, phases, _provenance(eta_hd))
    g_eff = effective_gain(rho_out, alpha_in, eta_hd)
    lo, avg, hi = ein_statistics(rho_out, g_eff, phases, eta_hd)
    return MetricsReport(g_eff, lo, avg, hi, float(success_probability),
                         reference_ein(abs(g_eff)), phases, _provenance(eta_hd))


def _provenance(eta_hd: float) -> str:
    return "output_plane" if eta_hd == 1.0 else "eta_corrected"


def write_metrics_json(report: MetricsReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")
