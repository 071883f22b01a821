"""Grid benchmark: exact low spectrum of -psi''/2 + V psi.

Second-order central differences on a uniform grid with Dirichlet walls
turn the operator into a symmetric tridiagonal matrix whose lowest
eigenvalues are bracketed by bisection on the Sturm sign-change count.
The doublet gap of the benchmark family

    V(x) = lam (x^2-1)^2 (x^2 + b x + 1),   |b| < 2,

(degenerate minima at +-1 with curvatures 8 lam (2 -+ b)) provides an
independent check of the summed-gas splitting formula: the extracted
coupling should scale like e^(-S) with the tunneling action S.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .potential import PolynomialPotential, find_minima, well_parameters
from .spectrum import extract_coupling

DEFAULT_GRID = None  # set below, after GridSpec is defined


class SolverError(Exception):
    """Base error for the grid solver."""


class DomainError(SolverError):
    """Boundary potential too low to confine the states of interest."""


class BracketError(SolverError):
    """Sturm bisection could not bracket the requested eigenvalue."""


class ScalingError(SolverError):
    """Scaling study has too few usable points."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on [x_min, x_max] with the given number of points."""

    x_min: float
    x_max: float
    points: int

    def __post_init__(self):
        if self.points < 3:
            raise SolverError("need at least 3 grid points")
        if not self.x_max > self.x_min:
            raise SolverError("x_max must exceed x_min")

    @property
    def spacing(self):
        return (self.x_max - self.x_min) / (self.points - 1)

    def array(self):
        return np.linspace(self.x_min, self.x_max, self.points)

    def refined(self):
        """Same domain with halved spacing."""
        return GridSpec(self.x_min, self.x_max, 2 * self.points - 1)


DEFAULT_GRID = GridSpec(-3.5, 3.5, 4001)


@dataclass(frozen=True)
class TridiagonalOperator:
    """Dirichlet discretization: diagonal 1/h^2 + V(x_k), off-diagonal -1/(2h^2).

    The strictly negative off-diagonal makes the matrix irreducible, so all
    eigenvalues are simple.
    """

    diagonal: np.ndarray
    off_diagonal: float
    size: int

    def __post_init__(self):
        if not self.off_diagonal < 0.0:
            raise SolverError("off-diagonal must be strictly negative")
        if len(self.diagonal) != self.size:
            raise SolverError("diagonal length must equal size")


def discretize(potential, grid, min_boundary_potential=None):
    """Central-difference operator for -psi''/2 + V psi on interior points.

    `potential` is any callable accepting an array of positions (the
    polynomial potentials of this package, or a plain function for
    validation cases like the harmonic oscillator).
    """
    x = grid.array()
    if min_boundary_potential is not None:
        v_edge = min(float(potential(x[0])), float(potential(x[-1])))
        if v_edge < min_boundary_potential:
            raise DomainError(
                f"domain too small: boundary potential {v_edge:.6g} < "
                f"required {min_boundary_potential:.6g}"
            )
    h = grid.spacing
    interior = x[1:-1]
    values = np.broadcast_to(np.asarray(potential(interior), dtype=float), interior.shape)
    diag = 1.0 / h**2 + values
    return TridiagonalOperator(diagonal=diag, off_diagonal=-0.5 / h**2, size=grid.points - 2)


def sturm_count(operator, x):
    """Number of eigenvalues strictly below x (negative LDL pivots).

    Pivots inside the pivmin window are clamped to -pivmin *before*
    counting, so an exactly singular leading minor registers as a crossing;
    clamping only the divisor would silently drop such eigenvalues.
    """
    diag = operator.diagonal.tolist()
    off_sq = operator.off_diagonal**2
    pivmin = 1e-290 * max(1.0, off_sq)
    t = diag[0] - x
    if abs(t) < pivmin:
        t = -pivmin
    count = 1 if t < 0.0 else 0
    for a in diag[1:]:
        t = (a - x) - off_sq / t
        if abs(t) < pivmin:
            t = -pivmin
        if t < 0.0:
            count += 1
    return count


def lowest_eigenvalues(operator, count):
    """The `count` smallest eigenvalues by Sturm-count bisection.

    Each eigenvalue is bracketed to absolute width 1e-12 max(1, |E|);
    eigenvalues of the irreducible operator are simple, so the result is
    strictly increasing.
    """
    if count < 1 or count > 4:
        raise SolverError("count must be between 1 and 4")
    diag = operator.diagonal
    bound = 2.0 * abs(operator.off_diagonal)
    lo0 = float(np.min(diag)) - bound
    hi0 = float(np.max(diag)) + bound
    if sturm_count(operator, hi0) < count:
        raise BracketError(
            f"cannot bracket {count} eigenvalues within Gershgorin bounds "
            f"[{lo0:.6g}, {hi0:.6g}]"
        )
    eigs = []
    lo_base = lo0
    for k in range(count):
        lo, hi = lo_base, hi0
        while hi - lo > 1e-12 * max(1.0, 0.5 * abs(hi + lo)):
            mid = 0.5 * (lo + hi)
            if sturm_count(operator, mid) >= k + 1:
                hi = mid
            else:
                lo = mid
        eigs.append(0.5 * (lo + hi))
        lo_base = lo  # the next eigenvalue lies at or above this one
    return eigs


def eigenvector(operator, eigenvalue, iterations=3):
    """Inverse iteration for the eigenvector of an already-located eigenvalue."""
    n = operator.size
    ab = np.zeros((3, n))
    ab[0, 1:] = operator.off_diagonal
    ab[1, :] = operator.diagonal - eigenvalue - 1e-11 * max(1.0, abs(eigenvalue))
    ab[2, :-1] = operator.off_diagonal
    rng = np.random.default_rng(20210615)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    for _ in range(iterations):
        v = solve_banded((1, 1), ab, v)
        v /= np.linalg.norm(v)
    return v


def parity_overlap(vector):
    """Overlap <psi, P psi> with P the grid reflection (unit-norm input)."""
    return float(np.dot(vector, vector[::-1]))


class GapEstimate(tuple):
    """(gap, error_estimate) with named access."""

    def __new__(cls, gap, error_estimate):
        return super().__new__(cls, (gap, error_estimate))

    @property
    def gap(self):
        return self[0]

    @property
    def error_estimate(self):
        return self[1]


def numeric_gap(potential, grid, min_boundary_potential=None):
    """Doublet gap E1 - E0 with a Richardson error estimate.

    Solves on the given grid and on the spacing-halved grid; the returned
    gap is the fine-grid value and the error estimate (gap_fine -
    gap_coarse)/3 follows from the second-order convergence of the stencil.
    """
    gaps = []
    for g in (grid, grid.refined()):
        op = discretize(potential, g, min_boundary_potential)
        e0, e1 = lowest_eigenvalues(op, 2)
        gaps.append(e1 - e0)
    return GapEstimate(gaps[1], abs(gaps[1] - gaps[0]) / 3.0)


def benchmark_potential(lam, b):
    """The double-well family lam (x^2-1)^2 (x^2 + b x + 1)."""
    if not abs(b) < 2:
        raise SolverError("need |b| < 2 for two harmonic minima")
    if not lam > 0:
        raise SolverError("lam must be positive")
    coeffs = (1.0, b, -1.0, -2.0 * b, -1.0, b, 1.0)
    return PolynomialPotential(tuple(lam * c for c in coeffs))


@dataclass(frozen=True)
class BenchmarkRecord:
    """One row of the scaling study."""

    lam: float
    s_inst: float
    omega0: float
    omega1: float
    gap_numeric: float
    b_prime: float
    refinement_error: float

    CSV_FIELDS = ("lambda", "s_inst", "omega0", "omega1", "gap_numeric", "b_prime", "refinement_error")

    def csv_row(self):
        return (self.lam, self.s_inst, self.omega0, self.omega1,
                self.gap_numeric, self.b_prime, self.refinement_error)


@dataclass(frozen=True)
class ScalingStudy:
    """Fit of ln B' against the tunneling action across the family."""

    records: tuple
    slope: float
    intercept: float
    residuals: tuple
    excluded: tuple
    predicted_gaps: tuple = ()

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(BenchmarkRecord.CSV_FIELDS)
        for rec in self.records:
            writer.writerow(f"{v:.17g}" for v in rec.csv_row())
        return buf.getvalue()

    def to_json(self):
        payload = {
            "slope": self.slope,
            "intercept": self.intercept,
            "residuals": list(self.residuals),
            "excluded": [
                {"lambda": lam, "reason": reason} for lam, reason in self.excluded
            ],
            "records": [
                dict(zip(BenchmarkRecord.CSV_FIELDS, rec.csv_row()))
                for rec in self.records
            ],
        }
        if self.predicted_gaps:
            payload["predicted_gaps"] = list(self.predicted_gaps)
        return json.dumps(payload, sort_keys=True)


def benchmark_point(lam, b, grid=None):
    """Single family member: frequencies, action, numeric gap, coupling.

    Returns (record, asymmetry_dominated flag).
    """
    grid = grid or DEFAULT_GRID
    pot = benchmark_potential(lam, b)
    minima = [w for w in find_minima(pot) if w.harmonic]
    if len(minima) != 2:
        raise SolverError(f"expected two harmonic minima, found {len(minima)}")
    params = well_parameters(pot, minima[0], minima[1])
    confine = 25.0 * max(params.omega0, params.omega1)
    gap, err = numeric_gap(pot, grid, min_boundary_potential=confine)
    coupling = extract_coupling(gap, params.omega0, params.omega1)
    record = BenchmarkRecord(
        lam=lam,
        s_inst=params.s_inst,
        omega0=params.omega0,
        omega1=params.omega1,
        gap_numeric=gap,
        b_prime=coupling.b_prime,
        refinement_error=err,
    )
    return record, coupling.asymmetry_dominated


def scaling_study(b, lambdas, K_hint=None, grid=None, max_workers=1):
    """Test the exponential suppression law ln B' ~ const - S across the family.

    For each lam the well frequencies, tunneling action and numeric doublet
    gap are computed and the coupling extracted; points whose extraction is
    clamped or fails the regime guard (gap^2 - d^2 must exceed 10x its
    numerical uncertainty) are excluded and reported.  The remaining points
    (at least 3) are fitted by least squares.  With K_hint given, the gap
    predicted by the splitting formula at that prefactor is attached per
    record as `predicted_gaps`.
    """
    lambdas = [float(v) for v in lambdas]
    if lambdas != sorted(lambdas):
        raise SolverError("lambdas must be ascending")
    grid = grid or DEFAULT_GRID

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(lambda lam: benchmark_point(lam, b, grid), lambdas))
    else:
        results = [benchmark_point(lam, b, grid) for lam in lambdas]

    records = []
    excluded = []
    usable = []
    for lam, (rec, clamped) in zip(lambdas, results):
        records.append(rec)
        if clamped:
            excluded.append((lam, "clamped"))
            continue
        delta = (rec.omega0 - rec.omega1) / 2.0
        disc = rec.gap_numeric**2 - delta**2
        uncertainty = 2.0 * rec.gap_numeric * rec.refinement_error
        if disc <= 10.0 * uncertainty:
            excluded.append((lam, "regime-guard"))
            continue
        usable.append(rec)
    if len(usable) < 3:
        raise ScalingError(
            f"fewer than 3 usable points ({len(usable)} of {len(lambdas)}); "
            f"excluded: {excluded}"
        )
    s = np.array([rec.s_inst for rec in usable])
    lnb = np.log(np.array([rec.b_prime for rec in usable]))
    design = np.vstack([s, np.ones_like(s)]).T
    (slope, intercept), *_ = np.linalg.lstsq(design, lnb, rcond=None)
    residuals = lnb - (slope * s + intercept)
    predicted = ()
    if K_hint is not None:
        predicted = tuple(
            float(np.hypot(rec.omega1 - rec.omega0, 4.0 * K_hint * np.exp(-rec.s_inst)) / 2.0)
            for rec in records
        )
    return ScalingStudy(
        records=tuple(records),
        slope=float(slope),
        intercept=float(intercept),
        residuals=tuple(float(rv) for rv in residuals),
        excluded=tuple(excluded),
        predicted_gaps=predicted,
    )
