"""Closed-form spectra and partition predictions for the model domains.

Cylinder strips ``C(d, b)`` (angular period ``d``, perimeter of one sheet 1,
width ``b``) separate variables; their eigenvalues are rational multiples of
``pi^2`` whenever ``b`` is rational, and they are handled here with
:class:`fractions.Fraction`.  Round annuli are handled semi-analytically by
shooting on the radial Bessel equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .discretization import DIRICHLET, NEUMANN, parse_bc
from .errors import InvalidArgument, NumericalFailure

PI2 = math.pi ** 2
SYMMETRIC = "symmetric"
ANTISYMMETRIC = "antisymmetric"
NOT_APPLICABLE = "not-applicable"
MIXED = "mixed"


def as_fraction(x):
    """Exact rational for ``x``; floats go through their shortest repr (0.2 -> 1/5)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(repr(float(x)))


def deck_class_of(m, degree):
    if degree != 2:
        return NOT_APPLICABLE
    return SYMMETRIC if m % 2 == 0 else ANTISYMMETRIC


@dataclass(frozen=True)
class SpectrumEntry:
    value_over_pi2: Fraction
    m: int
    n: int
    multiplicity: int
    deck_class: str
    modes: tuple = ()

    @property
    def value(self):
        return float(self.value_over_pi2) * PI2


class Spectrum(list):
    """List of :class:`SpectrumEntry` with a ``meta`` dict attached."""

    def __init__(self, entries=(), meta=None):
        super().__init__(entries)
        self.meta = dict(meta or {})

    def values_over_pi2(self, expand=True):
        out = []
        for e in self:
            out.extend([e.value_over_pi2] * (e.multiplicity if expand else 1))
        return out

    def values(self, expand=True):
        return [float(v) * PI2 for v in self.values_over_pi2(expand)]


def _transverse(bc, b, n):
    """Transverse factor (divided by pi^2) of mode ``n``."""
    bottom, top = bc
    if bottom == top == NEUMANN:
        return Fraction(n * n) / (b * b)
    if bottom == top == DIRICHLET:
        return Fraction((n + 1) ** 2) / (b * b)
    return Fraction((2 * n + 1) ** 2) / (4 * b * b)


def _angular(m, degree):
    return Fraction(2 * m, degree) ** 2


def cylinder_spectrum(b, degree=1, bc="NN", count=10):
    """Lowest eigenvalues of ``-Delta`` on ``C(degree, b)`` with bottom/top conditions.

    Modes are ``cos/sin(2 pi m x / degree) * Y_n(y)`` with eigenvalue
    ``pi^2 ((2m/degree)^2 + t_n)``; ``t_n`` is ``n^2/b^2`` (NN, n >= 0),
    ``(2n+1)^2/(4b^2)`` (ND or DN) and ``(n+1)^2/b^2`` (DD; the index
    ``n`` is shifted so that every family starts at 0).  Entries are
    returned until at least ``count`` eigenvalues (with multiplicity) are
    covered; a tie at the cut-off is never split.
    """
    bc = parse_bc(bc)
    b = as_fraction(b)
    if b <= 0:
        raise InvalidArgument(f"b must be positive, got {b}")
    if count < 1:
        raise InvalidArgument("count must be >= 1")
    if degree not in (1, 2):
        raise InvalidArgument("degree must be 1 or 2")

    # Ladders along m (n = 0) and along n (m = 0) give an upper bound for the
    # count-th eigenvalue; every mode below it lies in the box they span.
    ladder = []
    for m in range(count):
        ladder += [_angular(m, degree) + _transverse(bc, b, 0)] * (1 if m == 0 else 2)
    for n in range(1, count):
        ladder.append(_transverse(bc, b, n))
    bound = sorted(ladder)[count - 1]
    t0 = _transverse(bc, b, 0)
    m_max = 0
    while _angular(m_max + 1, degree) + t0 <= bound:
        m_max += 1
    n_max = 0
    while _transverse(bc, b, n_max + 1) <= bound:
        n_max += 1

    n_shift = 1 if bc == (DIRICHLET, DIRICHLET) else 0
    merged = {}
    for m in range(m_max + 1):
        for n in range(n_max + 1):
            v = _angular(m, degree) + _transverse(bc, b, n)
            if v <= bound:
                merged.setdefault(v, []).append((m, n + n_shift))

    entries = []
    covered = 0
    for v in sorted(merged):
        modes = tuple(sorted(merged[v]))
        mult = sum(1 if m == 0 else 2 for m, _ in modes)
        classes = {deck_class_of(m, degree) for m, _ in modes}
        entries.append(SpectrumEntry(v, modes[0][0], modes[0][1], mult,
                                     classes.pop() if len(classes) == 1 else MIXED, modes))
        covered += mult
        if covered >= count:
            break

    meta = {"b": b, "degree": degree, "bc": "".join(bc)}
    if bc[0] != bc[1]:
        meta["second_mixed_eigenvalue"] = mixed_second_eigenvalue(b)
    return Spectrum(entries, meta)


def mixed_second_eigenvalue(b):
    """Second N/D-mixed eigenvalue of ``C(1, b)`` over ``pi^2``, two ways.

    Separation of variables gives ``min(9/(4b^2), 1/(4b^2) + 4)``; the
    closed form quoted with the thinness argument uses ``1/b^2`` as first
    argument.  Both are reported together with whether they agree.
    """
    b = as_fraction(b)
    direct = min(Fraction(9) / (4 * b * b), Fraction(1) / (4 * b * b) + 4)
    quoted = min(Fraction(1) / (b * b), Fraction(1) / (4 * b * b) + 4)
    return {"separation_of_variables": direct, "quoted_formula": quoted, "agree": direct == quoted}


def circle_partition_eigenvalue(k):
    """Partition eigenvalue ``pi^2 k^2`` of the unit-perimeter circle.

    Returns ``(value, is_eigenvalue, note)``.  For ``k = 1`` the parity rule is
    extended mechanically and flagged with ``note = "out-of-paper"``.
    """
    if k < 1:
        raise InvalidArgument("k must be >= 1")
    note = "out-of-paper" if k == 1 else ""
    return PI2 * k * k, k % 2 == 0, note


@dataclass(frozen=True)
class CourantReport:
    b: Fraction
    case: int | None
    spectrum: Spectrum
    lambda3_sharp: bool
    lambda4_not_sharp: bool
    lambda5_not_sharp: bool
    note: str = ""


def courant_sharp_classification(b):
    """Low Neumann spectrum of ``C(1, b)`` and the four-case sharpness flags.

    Cases: 1 for ``b < 1/2``, 2 for ``1/2 < b < 1``, 3 for ``b = 1``, 4 for
    ``b > 1``; ``b = 1/2`` is a triple-eigenvalue boundary returned with
    ``case=None``.
    """
    b = as_fraction(b)
    if b <= 0:
        raise InvalidArgument("b must be positive")
    half = Fraction(1, 2)
    if b < half:
        case = 1
    elif b == half:
        case = None
    elif b < 1:
        case = 2
    elif b == 1:
        case = 3
    else:
        case = 4
    return CourantReport(
        b=b,
        case=case,
        spectrum=cylinder_spectrum(b, 1, "NN", 6),
        lambda3_sharp=b >= 1,
        lambda4_not_sharp=half < b <= 1,
        lambda5_not_sharp=b == 1,
        note="boundary case b = 1/2 (lambda_2 = lambda_3 = lambda_4)" if case is None else "",
    )


@dataclass(frozen=True)
class ThinnessThreshold:
    k: int
    bound_squared: Fraction
    branch: str

    @property
    def bound(self):
        return 1.0 / math.sqrt(1.0 / self.bound_squared)

    @property
    def surd(self):
        return f"1/sqrt({1 / self.bound_squared})"

    def admits(self, b):
        """Exact test ``b <= bound``."""
        b = as_fraction(b)
        return b > 0 and b * b <= self.bound_squared


def thin_threshold(k):
    """Width below which equal sectors are a minimal k-partition of ``C(1, b)`` (odd k)."""
    if k < 3 or k % 2 == 0:
        raise InvalidArgument(f"k must be odd and >= 3, got {k}")
    if k % 4 == 3:
        return ThinnessThreshold(k, Fraction(1, (3 * k + 1) * (k - 1)), "k=4p+3")
    return ThinnessThreshold(k, Fraction(1, (3 * k - 1) * (k + 1)), "k=4p+1")


def dn_sufficient_condition(k, b):
    """Check ``lambda^{DN}_{(k+1)/2}(C(b)) >= k^2 pi^2`` and ``b < 1/k`` from the catalog.

    Returns a dict with the exact ``lambda/pi^2`` value and the verdict.  The
    DN and ND strips have the same spectrum (reflection ``y -> b - y``), which
    is recorded as well.
    """
    if k < 3 or k % 2 == 0:
        raise InvalidArgument("k must be odd and >= 3")
    b = as_fraction(b)
    idx = (k + 1) // 2
    dn = cylinder_spectrum(b, 1, "DN", idx).values_over_pi2()
    nd = cylinder_spectrum(b, 1, "ND", idx).values_over_pi2()
    value = dn[idx - 1]
    return {
        "k": k,
        "b": b,
        "index": idx,
        "lambda_dn_over_pi2": value,
        "dn_equals_nd": dn[:idx] == nd[:idx],
        "thin": b < Fraction(1, k),
        "holds": value >= k * k and b < Fraction(1, k),
    }


@dataclass(frozen=True)
class L3Prediction:
    status: str          # "exact" | "nodal-beatable" | "unknown"
    value_over_pi2: Fraction
    is_upper_bound: bool
    strict: bool = False

    @property
    def value(self):
        return float(self.value_over_pi2) * PI2


def predicted_L3(b):
    """What is known about the Neumann 3-partition eigenvalue of ``C(1, b)``."""
    b = as_fraction(b)
    if b <= 0:
        raise InvalidArgument("b must be positive")
    if b * b * 20 <= 1:
        return L3Prediction("exact", Fraction(9), False)
    if b >= 1:
        return L3Prediction("exact", Fraction(4) / (b * b), False)
    if Fraction(2, 3) < b < 1:
        return L3Prediction("nodal-beatable", min(Fraction(9), Fraction(4) / (b * b)), True, True)
    return L3Prediction("unknown", Fraction(9), True)


# --------------------------------------------------------------------------
# round annulus: radial shooting


@dataclass(frozen=True)
class AnnulusMode:
    value: float
    m: int               # angular index on the (possibly covering) domain
    n: int               # radial index
    deck_class: str
    angular: float = field(default=0.0)   # angular frequency m / degree


def _radial_residual(lam, nu, r_in, r_out, bc, rtol):
    """Outer boundary residual of the radial ODE for trial ``lam``.

    Integrates ``(r u')' = (nu^2 / r - lam r) u`` from the inner radius with
    the inner condition imposed.
    """
    inner, outer = bc
    y0 = [1.0, 0.0] if inner == NEUMANN else [0.0, 1.0]

    def rhs(r, y):
        return [y[1] / r, (nu * nu / r - lam * r) * y[0]]

    sol = solve_ivp(rhs, (r_in, r_out), y0, method="DOP853", rtol=rtol, atol=1e-14 * (1 + abs(lam)))
    if not sol.success:
        raise NumericalFailure("radial ODE integration failed", {"lam": lam, "nu": nu})
    u, flux = sol.y[0, -1], sol.y[1, -1]
    return flux if outer == NEUMANN else u


def radial_eigenvalues(nu, r_in, r_out, bc, upper, rtol=1e-12):
    """All radial eigenvalues ``<= upper`` for angular frequency ``nu``."""
    bc = parse_bc(bc)
    width = r_out - r_in
    step = (math.pi / width) ** 2 / 32
    found = []
    lo = 0.0
    if bc == (NEUMANN, NEUMANN) and nu == 0:
        found.append(0.0)
        lo = 1e-9 * step
    f_lo = _radial_residual(lo, nu, r_in, r_out, bc, rtol)
    lam = lo
    while lam < upper:
        hi = min(lam + step, upper + step)
        f_hi = _radial_residual(hi, nu, r_in, r_out, bc, rtol)
        if f_lo == 0.0 and lam > lo:
            found.append(lam)
        elif f_lo * f_hi < 0:
            try:
                root = brentq(_radial_residual, lam, hi, args=(nu, r_in, r_out, bc, rtol),
                              xtol=1e-13 * max(1.0, hi), rtol=1e-15, maxiter=200)
            except (ValueError, RuntimeError) as exc:
                raise NumericalFailure("bracketing failed in radial root search",
                                       {"interval": (lam, hi), "nu": nu}) from exc
            if root <= upper:
                found.append(root)
        lam, f_lo = hi, f_hi
    return found


def annulus_spectrum_round(r_in, r_out, bc="NN", count=6, degree=1):
    """Lowest ``count`` eigenvalues of the round annulus ``r_in < r < r_out``.

    ``bc`` is (inner, outer).  On the ``degree``-fold covering the angular
    frequencies are ``m / degree``.  Each eigenvalue is listed once per
    eigenfunction (``m >= 1`` modes twice).
    """
    if not 0 < r_in < r_out:
        raise InvalidArgument("need 0 < r_in < r_out")
    if count < 1:
        raise InvalidArgument("count must be >= 1")
    bc = parse_bc(bc)
    # Upper bound from the lowest radial mode of each angular frequency.
    lows = []
    for m in range(count):
        first = None
        upper = (math.pi / (r_out - r_in)) ** 2 * 4 + (m / degree / r_in) ** 2 + 1.0
        roots = radial_eigenvalues(m / degree, r_in, r_out, bc, upper)
        if not roots:
            raise NumericalFailure("no radial eigenvalue found below the safety bound", {"m": m})
        first = roots[0]
        lows += [first] * (1 if m == 0 else 2)
    bound = sorted(lows)[count - 1] * (1 + 1e-12)

    modes = []
    m = 0
    while (m / degree / r_out) ** 2 <= bound:
        for n, lam in enumerate(radial_eigenvalues(m / degree, r_in, r_out, bc, bound)):
            for _ in range(1 if m == 0 else 2):
                modes.append(AnnulusMode(lam, m, n, deck_class_of(m, degree), m / degree))
        m += 1
    modes.sort(key=lambda e: (e.value, e.m, e.n))
    return modes[:count]


def spectrum_rows(spectrum):
    """CSV rows (header first) for a cylinder spectrum."""
    rows = [["index", "value_over_pi2", "value", "m", "n", "multiplicity", "deck_class"]]
    for i, e in enumerate(spectrum, start=1):
        v = e.value_over_pi2
        rows.append([
            i,
            f"{v.numerator}/{v.denominator}",
            repr(e.value),
            ";".join(str(m) for m, _ in e.modes),
            ";".join(str(n) for _, n in e.modes),
            e.multiplicity,
            e.deck_class,
        ])
    return rows


def annulus_rows(modes):
    rows = [["index", "value", "m", "n", "angular", "deck_class"]]
    for i, e in enumerate(modes, start=1):
        rows.append([i, repr(e.value), e.m, e.n, repr(e.angular), e.deck_class])
    return rows


def as_array(values):
    return np.array([float(v) for v in values])
