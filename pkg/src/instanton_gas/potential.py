"""Polynomial double-well potentials: minima, curvatures, tunneling action.

Units: hbar = 1, particle mass = 1.  The harmonic frequency of a well is
omega = sqrt(V'') and its ground level omega/2.  The tunneling suppression
exponent between two degenerate minima x0 < x1 is the zero-energy action

    S = integral_{x0}^{x1} sqrt(2 (V(x) - V(x0))) dx.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import exp, sqrt

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.integrate import quad


class PotentialError(Exception):
    """Base error for potential analysis."""


class NoWellsError(PotentialError):
    """No minima found ("no wells")."""


class RootRefinementError(PotentialError):
    """Newton polishing failed; carries the last iterate."""

    def __init__(self, message, last_iterate):
        super().__init__(f"{message} (last iterate {last_iterate!r})")
        self.last_iterate = last_iterate


class AsymmetricDepthsError(PotentialError):
    """The two wells are not degenerate in energy."""


@dataclass(frozen=True)
class PolynomialPotential:
    """Confining real polynomial V(x) = sum_k coefficients[k] x^k."""

    coefficients: tuple

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        degree = len(coeffs) - 1
        while degree > 0 and coeffs[degree] == 0.0:
            degree -= 1
        if degree < 4 or degree % 2 != 0:
            raise PotentialError(f"degree must be even and >= 4, got {degree}")
        if coeffs[degree] <= 0.0:
            raise PotentialError("leading coefficient must be positive")

    @property
    def degree(self):
        return len(self.coefficients) - 1

    def __call__(self, x):
        return npoly.polyval(x, self.coefficients)

    def derivative(self, x, order=1):
        return npoly.polyval(x, npoly.polyder(self.coefficients, order))

    def mirrored(self):
        """The reflected potential V(-x)."""
        flipped = [c if k % 2 == 0 else -c for k, c in enumerate(self.coefficients)]
        return PolynomialPotential(tuple(flipped))

    def scaled(self, factor):
        """The potential factor * V(x)."""
        return PolynomialPotential(tuple(factor * c for c in self.coefficients))

    def to_json(self):
        return json.dumps({"coefficients": list(self.coefficients)})

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        return cls(tuple(float(c) for c in data["coefficients"]))


@dataclass(frozen=True)
class WellMinimum:
    """A stationary point of V classified as a local minimum."""

    location: float
    value: float
    curvature: float
    frequency: float
    harmonic: bool = True


@dataclass(frozen=True)
class WellParameters:
    """Reduced parameter set feeding every amplitude formula.

    delta = (omega0 - omega1)/2 is derived, never supplied; it may be
    negative.  Either B or the pair (K, s_inst) may be given; the missing
    side is derived (B = K exp(-s_inst)) or left as None.
    """

    omega0: float
    omega1: float
    T: float
    B: float = None
    K: float = None
    s_inst: float = None
    delta: float = field(init=False)

    def __post_init__(self):
        if not self.omega0 > 0 or not self.omega1 > 0:
            raise ValueError("omega0 and omega1 must be positive")
        if not self.T > 0:
            raise ValueError("T must be positive")
        object.__setattr__(self, "delta", (self.omega0 - self.omega1) / 2.0)
        if self.K is not None and self.K < 0:
            raise ValueError("K must be >= 0")
        if self.s_inst is not None and self.s_inst < 0:
            raise ValueError("s_inst must be >= 0")
        derived = None
        if self.K is not None and self.s_inst is not None:
            derived = self.K * exp(-self.s_inst)
        if self.B is None:
            object.__setattr__(self, "B", derived)
        else:
            if self.B < 0:
                raise ValueError("B must be >= 0")
            if derived is not None:
                tol = 1e-12 * max(abs(self.B), abs(derived), 1e-300)
                if abs(self.B - derived) > tol:
                    raise ValueError(
                        f"inconsistent inputs: B={self.B!r} but "
                        f"K*exp(-s_inst)={derived!r}"
                    )


def _real_roots(coeffs):
    roots = npoly.polyroots(np.asarray(coeffs, dtype=float))
    out = []
    for z in roots:
        if abs(z.imag) <= 1e-9 * (1.0 + abs(z)):
            out.append(float(z.real))
    return sorted(out)


def _merge_close(values, radius):
    merged = []
    for v in sorted(values):
        if merged and abs(v - merged[-1][-1]) <= radius(v):
            merged[-1].append(v)
        else:
            merged.append([v])
    return [float(np.mean(group)) for group in merged]


def find_minima(potential, curvature_tol=1e-6):
    """Locate the local minima of the potential.

    Stationary points are found from the companion matrix of V', harmonic
    ones (V'' > curvature_tol) are polished by Newton iteration on V', and
    degenerate ones (|V''| <= curvature_tol, e.g. a quartic-bottom well) are
    kept but flagged non-harmonic.  Maxima and inflections are dropped.
    Returns minima sorted by location; raises NoWellsError if none remain.
    """
    dcoeffs = npoly.polyder(potential.coefficients)
    candidates = _real_roots(dcoeffs)
    if not candidates:
        raise NoWellsError("no wells")

    harmonic_pts = []
    flat_pts = []
    for x in candidates:
        if potential.derivative(x, 2) > curvature_tol:
            harmonic_pts.append(x)
        else:
            flat_pts.append(x)

    # Multiple roots of V' scatter by ~eps^(1/multiplicity), far wider than
    # the 1e-8 radius used for simple minima.
    harmonic_pts = _merge_close(harmonic_pts, lambda v: 1e-8)
    flat_pts = _merge_close(flat_pts, lambda v: 1e-5 * (1.0 + abs(v)))

    minima = []
    for x in harmonic_pts:
        x = _newton_polish(potential, x)
        curv = potential.derivative(x, 2)
        minima.append(
            WellMinimum(
                location=x,
                value=float(potential(x)),
                curvature=curv,
                frequency=sqrt(curv),
                harmonic=True,
            )
        )
    for x in flat_pts:
        if not _is_local_minimum(potential, x):
            continue
        curv = max(potential.derivative(x, 2), 0.0)
        minima.append(
            WellMinimum(
                location=x,
                value=float(potential(x)),
                curvature=curv,
                frequency=sqrt(curv),
                harmonic=False,
            )
        )
    if not minima:
        raise NoWellsError("no wells")
    return sorted(minima, key=lambda w: w.location)


def _newton_polish(potential, x, max_iter=60):
    for _ in range(max_iter):
        g = potential.derivative(x)
        h = potential.derivative(x, 2)
        scale = 1e-12 * max(1.0, abs(h) * abs(x))
        if abs(g) <= scale:
            return x
        if h == 0.0:
            break
        step = g / h
        x = x - step
    g = potential.derivative(x)
    if abs(g) <= 1e-12 * max(1.0, abs(potential.derivative(x, 2)) * abs(x)):
        return x
    raise RootRefinementError("Newton polishing did not converge", x)


def _is_local_minimum(potential, x, h=1e-3):
    step = h * (1.0 + abs(x))
    v0 = potential(x)
    return potential(x - step) >= v0 - 1e-12 and potential(x + step) >= v0 - 1e-12


def instanton_action(potential, x0, x1):
    """Zero-energy tunneling action between degenerate minima x0 < x1.

    The integrand sqrt(2 (V - V_floor)) vanishes linearly at the endpoints;
    a u^2 substitution removes the derivative kink there and the interior
    is handled by adaptive Gauss-Kronrod at 1e-12 relative tolerance.
    """
    if not x0 < x1:
        raise PotentialError("need x0 < x1")
    floor = 0.5 * (float(potential(x0)) + float(potential(x1)))
    span = x1 - x0

    probe = np.linspace(x0, x1, 2001)
    depth = npoly.polyval(probe, potential.coefficients) - floor
    scale = max(1.0, float(np.max(depth)))
    if float(np.min(depth)) < -1e-10 * scale:
        raise PotentialError("potential dips below well floor")

    def integrand(x):
        return sqrt(max(2.0 * (float(potential(x)) - floor), 0.0))

    eps = 1e-3 * span

    def left_piece(u):
        # x = x0 + u^2, dx = 2u du
        return integrand(x0 + u * u) * 2.0 * u

    def right_piece(u):
        return integrand(x1 - u * u) * 2.0 * u

    total = 0.0
    val, _ = quad(left_piece, 0.0, sqrt(eps), epsabs=0.0, epsrel=1e-12, limit=200)
    total += val
    val, _ = quad(integrand, x0 + eps, x1 - eps, epsabs=0.0, epsrel=1e-12, limit=200)
    total += val
    val, _ = quad(right_piece, 0.0, sqrt(eps), epsabs=0.0, epsrel=1e-12, limit=200)
    total += val
    return total


def well_parameters(potential, left, right, K=None, T=1.0):
    """Assemble WellParameters from two located minima of the potential.

    Both minima must be harmonic and degenerate in energy; omega0 belongs
    to the left well and omega1 to the right, so delta = (omega0-omega1)/2
    carries the sign of the curvature difference.  B is derived from K via
    the tunneling action when K is given, otherwise left absent.
    """
    if not (left.harmonic and right.harmonic):
        raise PotentialError("non-harmonic minimum: frequencies undefined")
    tol = 1e-9 * max(1.0, abs(left.value), abs(right.value))
    if abs(left.value - right.value) > tol:
        raise AsymmetricDepthsError("asymmetric depths unsupported")
    s = instanton_action(potential, left.location, right.location)
    return WellParameters(
        omega0=left.frequency,
        omega1=right.frequency,
        T=T,
        K=K,
        s_inst=s,
    )
