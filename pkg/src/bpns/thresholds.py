"""Closed-form determining-mode and determining-node thresholds.

All thresholds are expressed in units of ``kappa0`` (modes) or as a node
count.  Unspecified dimensionless constants are collected in
:class:`Constants` and default to one; the viscosity dependence is carried by
the explicit ``nu0`` powers of the underlying inequalities.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from typing import Sequence, Union

from scipy.optimize import brentq

from .dynamics import PhysicalParams
from .forcing import Algebraic, Analytic, BandLimited, zeta
from .spectral import DomainError, SpectralField, norm

__all__ = [
    "Constants",
    "GrashofSet",
    "ThresholdReport",
    "grashof",
    "grashof_set",
    "m0",
    "classical_thresholds",
    "modes_threshold",
    "nodes_threshold",
    "f_alpha",
    "f_alpha_inverse",
    "c_zeta",
    "balanced_kappa_f",
    "algebraic_modes_sides",
]

CASES = ("band_limited", "algebraic", "analytic")
_P = {"modes": 2.5, "nodes": 2.0 / 3.0}


@dataclass(frozen=True)
class Constants:
    """Dimensionless constants of the threshold formulas (all default 1).

    ``c`` is the generic constant of the balancing relations and validity
    conditions, ``c1``/``c2`` the classical ones, ``c3`` enters ``M0``,
    ``c4``..``c6`` the mode thresholds, ``c7``..``c9`` the node thresholds.
    """

    c: float = 1.0
    c1: float = 1.0
    c2: float = 1.0
    c3: float = 1.0
    c4: float = 1.0
    c5: float = 1.0
    c6: float = 1.0
    c7: float = 1.0
    c8: float = 1.0
    c9: float = 1.0
    c_star: float = 1.0
    c_alpha: float = 1.0
    c_eta: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"constant {f.name} must be positive and finite, got {v}")


@dataclass(frozen=True)
class GrashofSet:
    G0: float
    G1: float = 0.0
    G2: float = 0.0
    G3: float = 0.0

    def __post_init__(self):
        for name in ("G0", "G1", "G2", "G3"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise DomainError(f"{name} must be finite and nonnegative, got {v}")


@dataclass(frozen=True)
class ThresholdReport:
    """Result of :func:`modes_threshold` or :func:`nodes_threshold`.

    ``kappa_over_kappa0`` is set for mode reports and ``N_nodes`` for node
    reports; the other is ``None``.  ``eps_term`` and ``zonal_term`` are the
    two arguments of the max (constant multiplier included).
    """

    family: str
    case: str
    kappa_over_kappa0: float | None
    N_nodes: float | None
    kappa_f_over_kappa0: float
    eps_term: float
    zonal_term: float
    epsilon_valid: bool
    classical_kappa: float
    classical_N: float
    inputs: dict = field(default_factory=dict)

    @property
    def value(self) -> float:
        return self.kappa_over_kappa0 if self.family == "modes" else self.N_nodes

    def as_dict(self) -> dict:
        return asdict(self)


def _vec_norm(parts: Sequence[SpectralField], s: float) -> float:
    return math.sqrt(sum(norm(p, s) ** 2 for p in parts))


def grashof(m: int, f_v: Union[SpectralField, Sequence[SpectralField]],
            params: PhysicalParams) -> float:
    """``G_m = |grad^m f_v| / (mu kappa0)^(2 - m)``.

    ``f_v`` is either a pair ``(f_x, f_y)`` of velocity-forcing components or a
    single field, taken to be the vorticity forcing ``f = curl f_v``; in that
    case ``|grad^(m-1) f|`` stands in for ``|grad^m f_v|``.
    """
    if m not in (0, 1, 2, 3):
        raise DomainError(f"Grashof index must be 0..3, got {m}")
    scale = (params.mu * params.kappa0) ** (2 - m)
    if isinstance(f_v, SpectralField):
        if abs(f_v.coeffs[0, 0]) != 0:
            raise DomainError("vorticity forcing must have zero mean")
        num = norm(f_v, m - 1.0)
    else:
        parts = tuple(f_v)
        if len(parts) != 2:
            raise DomainError("velocity forcing needs exactly two components")
        for p in parts:
            if abs(p.coeffs[0, 0]) != 0:
                raise DomainError("velocity forcing must have zero mean")
        num = _vec_norm(parts, float(m))
    return num / scale


def grashof_set(f_v, params: PhysicalParams) -> GrashofSet:
    return GrashofSet(*(grashof(m, f_v, params) for m in range(4)))


def m0(gs: GrashofSet, consts: Constants = Constants()) -> float:
    """``M0 = c3 G2 G3 (1 + G0^2)``."""
    return consts.c3 * gs.G2 * gs.G3 * (1.0 + gs.G0**2)


def classical_thresholds(G0: float, consts: Constants = Constants()) -> tuple[float, float]:
    """Non-rotating thresholds ``(c1 G0^(1/2), c2 G0)``."""
    if G0 < 0:
        raise DomainError(f"G0 must be nonnegative, got {G0}")
    return consts.c1 * math.sqrt(G0), consts.c2 * G0


def c_zeta(s: float) -> float:
    """``1 / ((2s + 1) zeta(2s + 2))`` for ``s > 5/2``."""
    if not s > 2.5:
        raise DomainError(f"s must exceed 5/2 (got {s})")
    return 1.0 / ((2 * s + 1) * zeta(2 * s + 2))


def f_alpha_inverse(y: float, alpha: float, c_alpha: float = 1.0,
                    variant: str = "modes") -> float:
    """Forward map ``y^p exp(2 alpha (y - 1)) / c_alpha`` (p = 5/2 or 2/3)."""
    p = _P[variant]
    return y**p * math.exp(2 * alpha * (y - 1)) / c_alpha


def f_alpha(u: float, alpha: float, c_alpha: float = 1.0, variant: str = "modes") -> float:
    """The unique ``y > 0`` with ``f_alpha_inverse(y) = u``.

    The root of the strictly increasing ``p log y + 2 alpha (y - 1) - log(c_alpha u)``
    is bracketed by ``[min(1, (c_alpha u)^(1/p)), 1 + log(1 + c_alpha u)/(2 alpha) + u^(1/p)]``,
    located with Brent's method and polished with Newton steps.
    """
    if variant not in _P:
        raise ValueError(f"variant must be 'modes' or 'nodes', got {variant!r}")
    if not u > 0:
        raise DomainError(f"F_alpha needs u > 0, got {u}")
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    p = _P[variant]
    target = math.log(c_alpha * u)

    def g(y):
        return p * math.log(y) + 2 * alpha * (y - 1) - target

    lo = min(1.0, (c_alpha * u) ** (1 / p))
    hi = max(1.0, 1 + math.log1p(c_alpha * u) / (2 * alpha) + u ** (1 / p))
    if g(lo) == 0:
        return lo
    y = brentq(g, lo, hi, xtol=1e-300, rtol=4 * 2.0**-52, maxiter=500)
    for _ in range(3):
        r = g(y)
        if r == 0:
            break
        y_new = y - r / (p / y + 2 * alpha)
        if not lo <= y_new <= hi:
            break
        y = y_new
    return y


def _case_name(case) -> str:
    if isinstance(case, BandLimited):
        return "band_limited"
    if isinstance(case, Algebraic):
        return "algebraic"
    if isinstance(case, Analytic):
        return "analytic"
    name = str(case).lower().replace("-", "_")
    aliases = {"bandlimited": "band_limited", "band": "band_limited"}
    name = aliases.get(name, name)
    if name not in CASES:
        raise ValueError(f"unknown forcing case {case!r}")
    return name


def _case_parameter(case, alpha_or_s, kappa_f, params):
    """Normalise (case, alpha_or_s, kappa_f) into (name, parameter, kappa_f/kappa0)."""
    name = _case_name(case)
    if isinstance(case, Algebraic):
        alpha_or_s = case.s
    elif isinstance(case, Analytic):
        alpha_or_s = case.alpha
    elif isinstance(case, BandLimited):
        kappa_f = case.kappa_f
    r = None
    if name == "band_limited":
        if kappa_f is None or not kappa_f > 0:
            raise DomainError("band-limited case needs a positive kappa_f")
        r = kappa_f / params.kappa0
    elif name == "algebraic":
        if alpha_or_s is None or not alpha_or_s > 2.5:
            raise DomainError(f"s must exceed 5/2 (got {alpha_or_s})")
    else:
        if alpha_or_s is None or not alpha_or_s > 0:
            raise DomainError(f"alpha must be positive (got {alpha_or_s})")
    return name, alpha_or_s, r


def balanced_kappa_f(family: str, case, G0: float, params: PhysicalParams,
                     consts: Constants = Constants(), alpha_or_s: float | None = None) -> float:
    """Balanced ``kappa_f/kappa0`` for algebraic or analytic zonal forcing.

    The raw root is returned; callers clamp it to at least one.
    """
    name, par, _ = _case_parameter(case, alpha_or_s, 1.0, params)
    nu0 = params.nu0
    if G0 <= 0:
        return 0.0
    if family == "modes":
        if name == "algebraic":
            return (consts.c * c_zeta(par) * nu0**-0.5 * G0) ** (1 / (2 * par + 3.5))
        if name == "analytic":
            return f_alpha(G0 / math.sqrt(nu0), par, consts.c_alpha, "modes")
    elif family == "nodes":
        if name == "algebraic":
            return (consts.c * c_zeta(par) / nu0 * G0 ** (2 / 3)) ** (1 / (2 * par + 5 / 3))
        if name == "analytic":
            return f_alpha(G0 ** (2 / 3) / nu0, par, consts.c_alpha, "nodes")
    else:
        raise ValueError(f"family must be 'modes' or 'nodes', got {family!r}")
    raise ValueError("balancing applies only to algebraic and analytic forcing")


def algebraic_modes_sides(r: float, s: float, G0: float, nu0: float,
                          consts: Constants = Constants()) -> tuple[float, float]:
    """The two lower bounds on ``kappa/kappa0`` that fix the algebraic ``kappa_f``.

    Returns ``(nu0^(-1/8) r^(3/8) G0^(1/4), (c c_zeta nu0^(-1) r^(-(2s+2)) G0^2)^(1/4))``
    with ``r = kappa_f/kappa0``; they coincide at the balanced ``r``.
    """
    left = nu0**-0.125 * r**0.375 * G0**0.25
    right = (consts.c * c_zeta(s) / nu0 * r ** (-(2 * s + 2)) * G0**2) ** 0.25
    return left, right


def _echo(eps, gs, consts, params, par, kappa_f, M0):
    return {
        "epsilon": eps, "G0": gs.G0, "G1": gs.G1, "G2": gs.G2, "G3": gs.G3,
        "M0": M0, "nu0": params.nu0, "kappa0": params.kappa0,
        "alpha_or_s": par, "kappa_f": kappa_f, "constants": asdict(consts),
    }


def modes_threshold(case, eps: float, gs: GrashofSet, consts: Constants,
                    params: PhysicalParams, alpha_or_s: float | None = None,
                    kappa_f: float | None = None, M0: float | None = None) -> ThresholdReport:
    """Lower bound on ``kappa/kappa0`` for the low modes to be determining.

    Parameters
    ----------
    case : forcing class instance or one of ``"band_limited"``, ``"algebraic"``, ``"analytic"``
    eps : rotation parameter (``eps >= 0``; 0 is the formal limit)
    gs : Grashof numbers, used for ``G0`` and (through :func:`m0`) ``M0``
    alpha_or_s : decay parameter for the analytic or algebraic cases
    kappa_f : absolute forcing cutoff for the band-limited case
    M0 : overrides :func:`m0` when given
    """
    if eps < 0:
        raise DomainError(f"epsilon must be nonnegative, got {eps}")
    name, par, r = _case_parameter(case, alpha_or_s, kappa_f, params)
    nu0, G0 = params.nu0, gs.G0
    M = m0(gs, consts) if M0 is None else float(M0)
    eM = eps * M
    eps_term = (eM / nu0**3) ** 0.25
    if name == "band_limited":
        mult = consts.c4
        zonal = nu0**-0.125 * r**0.375 * G0**0.25
        valid = eM <= consts.c * nu0**2 * r
    elif name == "algebraic":
        mult = consts.c5
        s = par
        r = max(1.0, balanced_kappa_f("modes", name, G0, params, consts, s))
        cz = c_zeta(s)
        zonal = (cz**1.5 * nu0 ** (-(s + 2.5)) * G0 ** (2 * s + 5)) ** (1 / (8 * s + 14))
        c_s = consts.c * cz ** (-1 / (8 * s + 14))
        valid = eM <= consts.c * c_s**-4 * nu0 ** (2 - 1 / (4 * s + 7)) * G0 ** (2 / (4 * s + 7))
    else:
        mult = consts.c6
        r = max(1.0, balanced_kappa_f("modes", name, G0, params, consts, par)) if G0 > 0 else 1.0
        zonal = nu0**-0.125 * r**0.375 * G0**0.25
        valid = eM <= consts.c * nu0**2 * r
    ck, cN = classical_thresholds(G0, consts)
    return ThresholdReport(
        family="modes", case=name,
        kappa_over_kappa0=mult * max(eps_term, zonal), N_nodes=None,
        kappa_f_over_kappa0=r, eps_term=mult * eps_term, zonal_term=mult * zonal,
        epsilon_valid=bool(valid), classical_kappa=ck, classical_N=cN,
        inputs=_echo(eps, gs, consts, params, par, kappa_f, M))


def nodes_threshold(case, eps: float, gs: GrashofSet, consts: Constants,
                    params: PhysicalParams, alpha_or_s: float | None = None,
                    kappa_f: float | None = None, M0: float | None = None) -> ThresholdReport:
    """Lower bound on the number ``N`` of determining nodes.

    Arguments as in :func:`modes_threshold`.  The algebraic zonal term is
    ``(c_zeta nu0^(-1) G0^(4s+5))^(1/(6s+5))``.
    """
    if eps < 0:
        raise DomainError(f"epsilon must be nonnegative, got {eps}")
    name, par, r = _case_parameter(case, alpha_or_s, kappa_f, params)
    nu0, G0 = params.nu0, gs.G0
    M = m0(gs, consts) if M0 is None else float(M0)
    eM = eps * M
    eps_term = math.sqrt(eM) * nu0**-1.5
    if name == "band_limited":
        mult = consts.c7
        zonal = nu0 ** (-1 / 3) * r ** (1 / 3) * G0 ** (2 / 3)
    elif name == "algebraic":
        mult = consts.c8
        s = par
        r = max(1.0, balanced_kappa_f("nodes", name, G0, params, consts, s))
        zonal = (c_zeta(s) / nu0 * G0 ** (4 * s + 5)) ** (1 / (6 * s + 5))
    else:
        mult = consts.c9
        r = max(1.0, balanced_kappa_f("nodes", name, G0, params, consts, par)) if G0 > 0 else 1.0
        zonal = nu0 ** (-1 / 3) * r ** (1 / 3) * G0 ** (2 / 3)
    valid = eM <= consts.c * nu0**2
    ck, cN = classical_thresholds(G0, consts)
    return ThresholdReport(
        family="nodes", case=name,
        kappa_over_kappa0=None, N_nodes=mult * max(eps_term, zonal),
        kappa_f_over_kappa0=r, eps_term=mult * eps_term, zonal_term=mult * zonal,
        epsilon_valid=bool(valid), classical_kappa=ck, classical_N=cN,
        inputs=_echo(eps, gs, consts, params, par, kappa_f, M))
