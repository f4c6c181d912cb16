"""Kohn-Nirenberg operator application, parametrix inversion, resolvent
application on the sector, contour-integral semigroup evaluation, and the
analyticity/smoothing gauges.

Quantization is Kohn-Nirenberg throughout:

    (s(x, D) u)(x_i) = sum_k e^{i <x_i, xi_k>} s(x_i, xi_k) u_hat[k],

with ``u_hat`` the synthesis coefficients of the grid function.  Under the
package's sign convention the semigroup generator is ``A = -a(x, D)``, the
resolvent is ``R(lambda, A) = (lambda + a(x, D))^{-1}``, and

    P_t u = (1 / 2 pi i) * contour integral of e^{lambda t} R(lambda, A) u.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .besov import DyadicPartition
from .errors import ContractionError, SpectralDistanceError
from .grids import GridFunction, TorusGrid
from .ratefit import RateFit, fit_rate
from .symbols import SymbolGrid, cutoff_split

__all__ = [
    "apply_symbol",
    "dense_symbol_matrix",
    "SolveReport",
    "parametrix_solve",
    "parametrix_probe_contraction",
    "resolvent_apply",
    "ContourSpec",
    "build_contour",
    "contour_for_time",
    "semigroup_apply",
    "analyticity_gauge",
    "smoothing_gauge",
    "SmoothingReport",
    "write_gauge_csv",
]

_PHASE_CACHE: dict = {}


def _phase_matrix(grid: TorusGrid) -> np.ndarray:
    """Per-axis synthesis phases exp(i x_i xi_k), cached per grid geometry."""
    key = (grid.n, grid.length_factor)
    if key not in _PHASE_CACHE:
        _PHASE_CACHE[key] = np.exp(1j * np.outer(grid.x, grid.xi))
    return _PHASE_CACHE[key]


def apply_symbol(s: SymbolGrid, u: GridFunction) -> GridFunction:
    """Apply the Kohn-Nirenberg quantization of ``s`` to ``u``."""
    grid = s.grid
    if u.grid != grid:
        raise ValueError("grid mismatch between symbol and function")
    P = _phase_matrix(grid)
    if grid.dimension == 1:
        out = np.einsum("ik,ik,k->i", P, s.values, u.coeffs)
    else:
        out = np.einsum("ak,bl,abkl,kl->ab", P, P, s.values, u.coeffs, optimize=True)
    return GridFunction(grid, out)


def _is_x_independent(s: SymbolGrid, rtol: float = 1e-13) -> bool:
    ref = s.values[(0,) * s.grid.dimension]
    scale = max(float(np.abs(s.values).max()), 1e-300)
    return bool(np.abs(s.values - ref).max() <= rtol * scale)


def dense_symbol_matrix(s: SymbolGrid) -> np.ndarray:
    """Dense matrix of ``s(x, D)`` acting on value vectors (test oracle only).

    Cost and memory are quadratic in the total grid size; intended for
    cross-checks at N <= 256 in one dimension.
    """
    grid = s.grid
    n_total = int(np.prod(grid.shape))
    if n_total > 4096:
        raise ValueError("dense operator matrices are a small-grid test oracle")
    P = _phase_matrix(grid)
    if grid.dimension == 1:
        forward = np.exp(-1j * np.outer(grid.xi, grid.x)) / grid.n
        return (P * s.values) @ forward
    pp = np.einsum("ak,bl->abkl", P, P).reshape(n_total, n_total)
    svals = s.values.reshape(n_total, n_total)
    x1 = np.repeat(grid.x, grid.n)
    x2 = np.tile(grid.x, grid.n)
    k1 = np.repeat(grid.xi, grid.n)
    k2 = np.tile(grid.xi, grid.n)
    forward = np.exp(-1j * (np.outer(k1, x1) + np.outer(k2, x2))) / n_total
    return (pp * svals) @ forward


# ---------------------------------------------------------------------------
# parametrix inversion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    residual_history: tuple
    contraction_estimate: float


def parametrix_solve(
    a: SymbolGrid,
    f: GridFunction,
    R: float,
    tol: float = 1e-8,
    maxit: int = 40,
):
    """Invert the high-frequency part of ``a(x, D)`` by parametrix iteration.

    With the cutoff split ``p = a chi_R`` and parametrix ``q = chi_R / a``,
    iterate ``u <- u + q(x, D)(f_high - p(x, D) u)`` where ``f_high`` is the
    spectral restriction of ``f`` to ``supp chi_R``.  Equivalent to summing
    the alternating Neumann series of the composition defect; converges
    geometrically when the measured contraction is below one.

    Returns ``(u, SolveReport)``; raises :class:`ContractionError` when the
    measured ratio of successive residuals stays >= 1 after 5 iterations
    (choose a larger cutoff radius).
    """
    grid = a.grid
    if f.grid != grid:
        raise ValueError("grid mismatch")
    split = cutoff_split(a, R)
    f_high = GridFunction.from_coeffs(grid, f.coeffs * (split.chi > 0.0))
    f_scale = max(f.norm_l2(), 1e-300)

    u = GridFunction(grid, np.zeros(grid.shape, dtype=complex))
    residual = f_high
    history = [residual.norm_l2()]
    ratios = []
    if history[0] <= tol * f_scale:
        return u, SolveReport(0, tuple(history), 0.0)
    for it in range(1, maxit + 1):
        u = u + apply_symbol(split.q, residual)
        residual = f_high - apply_symbol(split.p_high, u)
        history.append(residual.norm_l2())
        ratios.append(history[-1] / max(history[-2], 1e-300))
        if history[-1] <= tol * f_scale:
            return u, SolveReport(it, tuple(history), max(ratios))
        if it >= 5 and min(ratios[-3:]) >= 1.0:
            raise ContractionError(
                "parametrix iteration is not contracting; increase the cutoff "
                f"radius R (measured ratio {min(ratios[-3:]):.3f} at R={R})",
                contraction_estimate=max(ratios),
            )
    raise ContractionError(
        f"parametrix iteration did not reach tol={tol} within {maxit} iterations "
        f"(last residual {history[-1]:.3e}, contraction {max(ratios):.3f})",
        contraction_estimate=max(ratios),
    )


def parametrix_probe_contraction(a: SymbolGrid, R: float, iters: int = 4) -> float:
    """Measured contraction of the parametrix iteration on an in-range probe.

    The probe right-hand side is ``p_R(x, D) w`` for a fixed-seed random ``w``
    supported well inside the cutoff plateau, so the iteration's target is
    consistent; returns ``inf`` when the plateau is empty.
    """
    grid = a.grid
    try:
        split = cutoff_split(a, R)
    except Exception:
        return float("inf")
    mags = grid.xi_norm()
    plateau = (mags >= 4.0 * R) & (mags <= 0.85 * float(mags.max()))
    if not plateau.any():
        return float("inf")
    rng = np.random.default_rng(20240915)
    coeffs = np.zeros(grid.shape, dtype=complex)
    coeffs[plateau] = rng.standard_normal(int(plateau.sum())) + 1j * rng.standard_normal(
        int(plateau.sum())
    )
    w = GridFunction.from_coeffs(grid, coeffs)
    f_full = apply_symbol(split.p_high, w)
    f_high = GridFunction.from_coeffs(grid, f_full.coeffs * (split.chi > 0.0))
    u = GridFunction(grid, np.zeros(grid.shape, dtype=complex))
    residual = f_high
    norms = [residual.norm_l2()]
    for _ in range(iters):
        u = u + apply_symbol(split.q, residual)
        residual = f_high - apply_symbol(split.p_high, u)
        norms.append(residual.norm_l2())
        if norms[-1] <= 1e-14 * norms[0]:
            break
    ratios = [norms[i + 1] / max(norms[i], 1e-300) for i in range(len(norms) - 1)]
    return max(ratios[1:]) if len(ratios) > 1 else ratios[0]


# ---------------------------------------------------------------------------
# resolvent
# ---------------------------------------------------------------------------


def resolvent_apply(
    lam: complex,
    a: SymbolGrid,
    v: GridFunction,
    tol: float = 1e-10,
    maxit: int = 400,
    min_distance: float = 1e-8,
) -> GridFunction:
    """Apply ``(lambda + a(x, D))^{-1}`` by a preconditioned fixed point.

    The preconditioner is the pointwise reciprocal symbol
    ``q_lambda = 1 / (lambda + a(x, xi))`` (no cutoff: the shifted symbol is
    bounded away from zero).  A one-term Anderson mixing accelerates the
    plain iteration when it stagnates.  Exact in one step for
    x-independent symbols.
    """
    grid = a.grid
    if v.grid != grid:
        raise ValueError("grid mismatch")
    shifted = a.values + lam
    dist = np.abs(shifted)
    if dist.min() < min_distance:
        flat = int(np.argmin(dist))
        raise SpectralDistanceError(
            f"shift {lam} is within {dist.min():.2e} of the symbol range",
            point=np.unravel_index(flat, dist.shape),
        )
    q = SymbolGrid(grid, 1.0 / shifted, -a.order)
    s_shift = SymbolGrid(grid, shifted, a.order)

    u = apply_symbol(q, v)
    if _is_x_independent(a):
        return u
    v_scale = max(v.norm_l2(), 1e-300)
    res_prev = None
    plain_prev = None
    for _ in range(maxit):
        residual = v - apply_symbol(s_shift, u)
        rnorm = residual.norm_l2()
        if rnorm <= tol * v_scale:
            return u
        plain = u + apply_symbol(q, residual)
        u_next = plain
        if res_prev is not None:
            # Anderson(1): mix the last two plain updates to shrink the residual
            dr = residual.values - res_prev.values
            denom = float(np.vdot(dr, dr).real)
            if denom > 0:
                theta = complex(np.vdot(dr, residual.values)) / denom
                u_next = GridFunction(
                    grid, (1 - theta) * plain.values + theta * plain_prev.values
                )
        res_prev, plain_prev, u = residual, plain, u_next
    raise ContractionError(
        f"resolvent iteration did not reach tol={tol} within {maxit} iterations "
        f"(relative residual {rnorm / v_scale:.2e} at lambda={lam})"
    )


# ---------------------------------------------------------------------------
# sector contour and semigroup
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContourSpec:
    """Sector contour: two rays ``r e^{+-i(pi/2 + theta')}``, r in [rho0, M],
    joined by the arc of radius rho0, with quadrature nodes and weights.

    Nodes are Gauss-Legendre per piece (rays use the grading
    ``r = rho0 + sinh(s)``); weights absorb the prefactor ``1/(2 pi i)``.
    On construction the rule must reproduce ``e^{-t}`` from the integrand
    ``e^{lambda t} / (lambda + 1)`` to 1e-8 (residue self-test).
    """

    theta_prime: float
    rho0: float
    M: float
    n_ray: int
    n_arc: int
    nodes: np.ndarray
    weights: np.ndarray

    def quadrature(self, integrand) -> complex:
        """Sum ``weights * integrand(nodes)`` (integrand vectorized over nodes)."""
        return complex(np.sum(self.weights * integrand(self.nodes)))

    def to_dict(self) -> dict:
        return {
            "theta_prime": self.theta_prime,
            "rho0": self.rho0,
            "M": self.M,
            "n_ray": self.n_ray,
            "n_arc": self.n_arc,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ContourSpec":
        return build_contour(
            theta_prime=float(data["theta_prime"]),
            rho0=float(data["rho0"]),
            M=float(data["M"]),
            n_ray=int(data.get("n_ray", 48)),
            n_arc=int(data.get("n_arc", 48)),
        )


def _contour_nodes(theta_prime: float, rho0: float, M: float, n_ray: int, n_arc: int):
    phi = math.pi / 2.0 + theta_prime
    smax = math.asinh(max(M - rho0, 1e-12))
    xg, wg = np.polynomial.legendre.leggauss(n_ray)
    s = 0.5 * smax * (xg + 1.0)
    ws = 0.5 * smax * wg
    r = rho0 + np.sinh(s)
    dr = np.cosh(s)
    lam_bot = r * np.exp(-1j * phi)
    w_bot = -np.exp(-1j * phi) * dr * ws  # traversed inward (M -> rho0)
    xa, wa = np.polynomial.legendre.leggauss(n_arc)
    beta = phi * xa
    lam_arc = rho0 * np.exp(1j * beta)
    w_arc = 1j * rho0 * np.exp(1j * beta) * (phi * wa)
    lam_top = r * np.exp(1j * phi)
    w_top = np.exp(1j * phi) * dr * ws
    nodes = np.concatenate([lam_bot[::-1], lam_arc, lam_top])
    weights = np.concatenate([w_bot[::-1], w_arc, w_top]) / (2j * math.pi)
    return nodes, weights


def build_contour(
    theta_prime: float,
    rho0: float,
    M: float,
    n_ray: int = 48,
    n_arc: int = 48,
    residue_tol: float = 1e-8,
    t_check: float = 1.0,
) -> ContourSpec:
    """Construct a sector contour, doubling node counts until the residue
    self-test ``quad(e^{lambda t}/(lambda+1)) = e^{-t}`` passes at ``t_check``."""
    if not 0.0 < theta_prime < math.pi / 2.0:
        raise ValueError("ray angle offset must lie in (0, pi/2)")
    if rho0 <= 0 or M <= rho0:
        raise ValueError("need 0 < rho0 < M")
    nr, na = n_ray, n_arc
    for _ in range(6):
        nodes, weights = _contour_nodes(theta_prime, rho0, M, nr, na)
        val = np.sum(weights * np.exp(nodes * t_check) / (nodes + 1.0))
        if abs(val - math.exp(-t_check)) <= residue_tol:
            return ContourSpec(theta_prime, rho0, M, nr, na, nodes, weights)
        nr *= 2
        na *= 2
    raise ContractionError(
        f"contour quadrature failed the residue self-test at tol {residue_tol}"
    )


def contour_for_time(t: float, theta_prime: float, decay_exponent: float = 40.0) -> ContourSpec:
    """Contour scaled for time ``t``: ``rho0 = 1/t`` and the ray truncation M
    chosen so the truncation term ``e^{-M t sin theta'}`` is below 1e-12."""
    if t <= 0:
        raise ValueError("time must be positive")
    rho0 = 1.0 / t
    M = max(2.0 * rho0, decay_exponent / (t * math.sin(theta_prime)))
    return build_contour(theta_prime, rho0, M, t_check=t)


def _default_theta_prime(a: SymbolGrid, fraction: float = 0.5) -> float:
    re = a.values.real
    im = a.values.imag
    ratio = float((np.abs(im) / np.maximum(re, 1e-300)).max())
    theta = math.atan(1.0 / max(ratio, 1e-12))
    return fraction * min(theta, 1.45)


def semigroup_apply(
    t: float,
    a: SymbolGrid,
    u: GridFunction,
    contour: ContourSpec = None,
    tol: float = 1e-8,
) -> GridFunction:
    """Evaluate ``P_t u`` by contour quadrature of the resolvent.

    ``P_t u = (1/2 pi i) int_Gamma e^{lambda t} (lambda + a(x,D))^{-1} u dlambda``
    over the sector contour.  The ray truncation and node counts rescale with
    ``t`` so the discarded tail is below 1e-12; sectoriality of the symbol is
    required (negative real parts are rejected).
    """
    if t <= 0:
        raise ValueError("time must be positive")
    scale = max(float(np.abs(a.values).max()), 1.0)
    if float(a.values.real.min()) < -1e-10 * scale:
        raise ValueError("symbol has negative real part: not sectorial")
    if contour is None:
        contour = contour_for_time(t, _default_theta_prime(a))
    else:
        needed_M = 40.0 / (t * math.sin(contour.theta_prime))
        if contour.M < 0.99 * needed_M or abs(contour.rho0 * t - 1.0) > 10.0:
            contour = contour_for_time(t, contour.theta_prime)

    if _is_x_independent(a):
        # diagonal fast path: exact multiplier on each lattice mode
        sym = a.values[(0,) * a.grid.dimension]
        mult = np.zeros_like(sym)
        for lam, w in zip(contour.nodes, contour.weights):
            mult += w * np.exp(lam * t) / (lam + sym)
        return GridFunction.from_coeffs(u.grid, mult * u.coeffs)

    acc = np.zeros(u.grid.shape, dtype=complex)
    for lam, w in zip(contour.nodes, contour.weights):
        try:
            r = resolvent_apply(lam, a, u, tol=tol)
        except (SpectralDistanceError, ContractionError) as exc:
            raise type(exc)(f"{exc} (contour node lambda={lam})") from exc
        acc += (w * np.exp(lam * t)) * r.values
    return GridFunction(u.grid, acc)


# ---------------------------------------------------------------------------
# gauges
# ---------------------------------------------------------------------------


def analyticity_gauge(a: SymbolGrid, u: GridFunction, t_list, contour: ContourSpec = None):
    """Gauge sequence ``(t, |t A P_t u|_2 / |u|_2)`` with ``A = -a(x, D)``.

    Uniform boundedness of the gauge over decades of ``t`` is the working
    signature of an analytic semigroup.
    """
    u_scale = max(u.norm_l2(), 1e-300)
    rows = []
    for t in t_list:
        pt = semigroup_apply(t, a, u, contour=contour)
        apu = apply_symbol(a, pt)
        rows.append((float(t), float(t) * apu.norm_l2() / u_scale))
    return rows


@dataclass(frozen=True)
class SmoothingReport:
    slope: float
    c_fit: float
    times: tuple
    norms: tuple
    fit: RateFit


def smoothing_gauge(
    a: SymbolGrid,
    u: GridFunction,
    gamma: float,
    delta: float,
    t_list,
    p: float = 2.0,
    q: float = 2.0,
    contour: ContourSpec = None,
    partition: DyadicPartition = None,
) -> SmoothingReport:
    """Fitted decay rate of ``|P_t u|_{B^gamma_{p,q}}`` against ``t``.

    For inputs that are rough at scale ``gamma - delta`` the smoothing bound
    caps the blow-up at one power of ``1/t``, so the fitted slope should not
    fall below -1.  Returns the slope and the fitted constant
    ``C = exp(intercept)``.
    """
    if len(list(t_list)) < 4:
        raise ValueError("smoothing fits need at least 4 time points")
    part = partition if partition is not None else DyadicPartition(u.grid)
    times, norms = [], []
    for t in t_list:
        pt = semigroup_apply(t, a, u, contour=contour)
        times.append(float(t))
        norms.append(part.besov_norm(pt, gamma, p, q))
    fit = fit_rate(list(zip(times, norms)))
    return SmoothingReport(
        slope=fit.slope,
        c_fit=math.exp(fit.intercept),
        times=tuple(times),
        norms=tuple(norms),
        fit=fit,
    )


def write_gauge_csv(path, rows, header_comment: str = None, columns=("t", "value", "residual")):
    """Emit (t or lambda, value, residual) rows as CSV."""
    with open(path, "w") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            padded = tuple(row) + ("",) * (len(columns) - len(row))
            fh.write(",".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in padded) + "\n")
