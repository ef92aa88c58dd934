"""Pointer wavefunctions for dichotomic von Neumann measurements.

A measurement of a spin-1/2 observable couples the spin to a continuous
pointer whose wavefunction is phi(q).  The coupling displaces the pointer
by the eigenvalue (+1 or -1, in units where the coupling constant is 1),
so the shape of phi fixes the two figures of merit of the measurement:

    quality factor   F = integral phi(q+1) phi(q-1) dq
    precision        G = integral_{-1}^{+1} phi(q)^2 dq

F is the fraction of the post-measurement state left undisturbed; G is
the weight of the strong-measurement term in the outcome probabilities.
Every physical pointer satisfies F^2 + G^2 <= 1, and the frontier
F^2 + G^2 = 1 is attained by the "optimal" family built here: an
arbitrary central profile on (-1, 1], copied to every interval
(2n-1, 2n+1] with amplitude factor ((1-G)/(1+G))^(|n|/2).

Wavefunctions are real, have symmetric modulus, and live on a uniform
grid of spacing 1/2^k whose nodes sit at half-cell offsets.  Odd
integers and zero therefore fall on cell boundaries, never on nodes:
unit shifts are exact integer index shifts, piecewise-constant profiles
are integrated exactly, and sign digitization never sees a tie at q=0.
Integrals are uniform-weight sums h * sum(...) (composite trapezoid
with vanishing boundary terms).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, InvalidStateError, PhysicalityError

DEFAULT_GRID_SPACING = 1.0 / 512

_NORM_TOL = 1e-9
_SYMMETRY_TOL = 1e-9
_CIRCLE_TOL = 1e-9


def _cells_per_unit(grid_spacing: float) -> int:
    """Number of grid cells per unit length; spacing must be 1/2^k."""
    if not grid_spacing > 0:
        raise InvalidParameterError(f"grid spacing must be positive, got {grid_spacing}")
    cells = round(1.0 / grid_spacing)
    if cells < 2 or cells & (cells - 1) or cells * grid_spacing != 1.0:
        raise InvalidParameterError(
            f"grid spacing must be 1/2^k so unit shifts stay on the grid, got {grid_spacing}"
        )
    return cells


def _symmetric_positions(radius_cells: int, grid_spacing: float) -> np.ndarray:
    """Node coordinates (j - M + 1/2) h for j = 0 .. 2M-1."""
    j = np.arange(2 * radius_cells, dtype=float)
    return (j - radius_cells + 0.5) * grid_spacing


@dataclass(frozen=True)
class PointerState:
    """Real pointer wavefunction sampled on a uniform symmetric grid.

    Invariants checked at construction: real 1-D samples, unit norm
    (sum samples^2 * spacing = 1 within 1e-9) and symmetric modulus.
    """

    samples: np.ndarray
    grid_spacing: float
    grid_origin: float
    label: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples)
        if np.iscomplexobj(samples):
            raise InvalidStateError("pointer amplitudes must be real")
        samples = samples.astype(float, copy=True)
        if samples.ndim != 1 or samples.size < 2:
            raise InvalidStateError("pointer samples must be a 1-D array")
        _cells_per_unit(self.grid_spacing)
        norm = float(np.sum(samples * samples) * self.grid_spacing)
        if abs(norm - 1.0) > _NORM_TOL:
            raise InvalidStateError(f"pointer not normalized on the grid: norm^2 = {norm!r}")
        asym = float(np.max(np.abs(np.abs(samples) - np.abs(samples[::-1]))))
        if asym > _SYMMETRY_TOL:
            raise InvalidStateError(f"pointer modulus not symmetric: max asymmetry {asym:.3e}")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @property
    def positions(self) -> np.ndarray:
        return self.grid_origin + np.arange(self.samples.size) * self.grid_spacing

    @property
    def domain_radius(self) -> float:
        return -self.grid_origin + 0.5 * self.grid_spacing

    def index_of(self, q: float) -> int | None:
        """Index of the node nearest q, or None outside the grid."""
        idx = round((q - self.grid_origin) / self.grid_spacing)
        if 0 <= idx < self.samples.size:
            return idx
        return None

    def value_at(self, q: float) -> float:
        """Amplitude at the node nearest q; zero outside the grid."""
        idx = self.index_of(q)
        return float(self.samples[idx]) if idx is not None else 0.0


@dataclass(frozen=True)
class MeasurementStrength:
    """Pair (quality factor, precision) with the unit-circle constraint."""

    quality_factor: float
    precision: float

    def __post_init__(self):
        F, G = self.quality_factor, self.precision
        if not (-1e-12 <= F <= 1.0 + 1e-12 and -1e-12 <= G <= 1.0 + 1e-12):
            raise PhysicalityError(f"quality factor and precision must lie in [0, 1], got ({F}, {G})")
        if F * F + G * G > 1.0 + _CIRCLE_TOL:
            raise PhysicalityError(f"unphysical strength: F^2 + G^2 = {F * F + G * G!r} > 1")

    @classmethod
    def optimal(cls, precision: float) -> "MeasurementStrength":
        """Frontier strength (sqrt(1 - G^2), G) for a given precision."""
        if not 0.0 <= precision <= 1.0:
            raise InvalidParameterError(f"precision must lie in [0, 1], got {precision}")
        return cls(math.sqrt(max(0.0, (1.0 - precision) * (1.0 + precision))), precision)


def _normalized_state(samples: np.ndarray, grid_spacing: float, label: str) -> PointerState:
    norm = math.sqrt(float(np.sum(samples * samples)) * grid_spacing)
    if norm == 0.0:
        raise InvalidStateError("pointer has zero norm")
    n = samples.size
    origin = -(n / 2 - 0.5) * grid_spacing
    return PointerState(samples / norm, grid_spacing, origin, label)


def make_square(half_width: float, grid_spacing: float = DEFAULT_GRID_SPACING) -> PointerState:
    """Flat pointer 1/sqrt(2 half_width) on (-half_width, +half_width).

    Width at most 1 gives a strong measurement (F=0, G=1); beyond that
    the pointer obeys G = 1 - F: it measures strongly with probability G
    and returns a coin flip otherwise.
    """
    if not half_width > 0:
        raise InvalidParameterError(f"half width must be positive, got {half_width}")
    cells = _cells_per_unit(grid_spacing)
    if grid_spacing > half_width / 50:
        raise InvalidParameterError(
            f"grid spacing {grid_spacing} too coarse for half width {half_width} (need <= width/50)"
        )
    radius_cells = math.ceil(half_width / grid_spacing) + cells
    q = _symmetric_positions(radius_cells, grid_spacing)
    samples = np.where(np.abs(q) < half_width, 1.0, 0.0)
    return _normalized_state(samples, grid_spacing, f"square(half_width={half_width})")


def make_gaussian(
    width: float,
    grid_spacing: float = DEFAULT_GRID_SPACING,
    truncation_radius: float | None = None,
) -> PointerState:
    """Gaussian pointer whose probability density phi^2 is normal(0, width^2).

    The width convention is the standard deviation of phi^2.  The tail is
    truncated at truncation_radius (default 8 width, mass < 1e-14 beyond)
    and the state renormalized on the grid.
    """
    if not width > 0:
        raise InvalidParameterError(f"width must be positive, got {width}")
    if truncation_radius is None:
        truncation_radius = 8.0 * width
    if truncation_radius < 8.0 * width:
        raise InvalidParameterError(
            f"truncation radius {truncation_radius} must be at least 8 width = {8.0 * width}"
        )
    radius_cells = math.ceil(truncation_radius / grid_spacing)
    q = _symmetric_positions(radius_cells, grid_spacing)
    samples = np.exp(-(q * q) / (4.0 * width * width))
    return _normalized_state(samples, grid_spacing, f"gaussian(width={width})")


def make_exponential(
    scale: float,
    grid_spacing: float = DEFAULT_GRID_SPACING,
    truncation_radius: float | None = None,
) -> PointerState:
    """Pointer with phi^2 proportional to exp(-|q|/scale), truncated and renormalized."""
    if not scale > 0:
        raise InvalidParameterError(f"scale must be positive, got {scale}")
    if truncation_radius is None:
        truncation_radius = max(40.0 * scale, 2.0)
    radius_cells = math.ceil(truncation_radius / grid_spacing)
    q = _symmetric_positions(radius_cells, grid_spacing)
    samples = np.exp(-np.abs(q) / (2.0 * scale))
    return _normalized_state(samples, grid_spacing, f"exponential(scale={scale})")


def _interval_indices(q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split positions into (interval index n, offset x) with q in (2n-1, 2n+1]."""
    n = np.rint(q / 2.0)
    return n, q - 2.0 * n


def optimal_from_central(
    central_samples: np.ndarray,
    target_precision: float,
    grid_spacing: float = DEFAULT_GRID_SPACING,
    envelope_cutoff: float = 1e-14,
    label: str = "optimal(custom)",
) -> PointerState:
    """Frontier pointer generated by an explicit central profile.

    central_samples are amplitudes on the 2/h nodes of the central
    interval (-1, 1]; they are rescaled so their mass is the target
    precision, then copied to interval n with amplitude factor
    ((1-G)/(1+G))^(|n|/2).  Intervals whose envelope weight (relative to
    the central interval) drops below envelope_cutoff are dropped, and
    the state is renormalized.  The resulting quality factor is
    sqrt(1 - G^2) for any admissible profile.
    """
    if not 0.0 < target_precision < 1.0:
        raise InvalidParameterError(f"target precision must lie in (0, 1), got {target_precision}")
    if not 0.0 < envelope_cutoff < 1.0:
        raise InvalidParameterError(f"envelope cutoff must lie in (0, 1), got {envelope_cutoff}")
    cells = _cells_per_unit(grid_spacing)
    central = np.asarray(central_samples, dtype=float)
    if central.shape != (2 * cells,):
        raise InvalidParameterError(
            f"central profile must have {2 * cells} samples for spacing {grid_spacing}"
        )
    mass = float(np.sum(central * central)) * grid_spacing
    if mass <= 0.0:
        raise InvalidParameterError("central profile has zero mass")
    central = central * math.sqrt(target_precision / mass)

    ratio = (1.0 - target_precision) / (1.0 + target_precision)
    n_intervals = max(1, math.ceil(math.log(envelope_cutoff) / math.log(ratio)))
    radius_cells = (2 * n_intervals + 1) * cells
    q = _symmetric_positions(radius_cells, grid_spacing)
    n, _ = _interval_indices(q)
    # with the grid radius an odd number of units, node j sits at central
    # offset j mod 2*cells within its interval
    samples = central[np.arange(q.size) % (2 * cells)] * np.power(ratio, np.abs(n) / 2.0)
    return _normalized_state(samples, grid_spacing, label)


def make_optimal(
    target_precision: float,
    profile: str = "flat",
    grid_spacing: float = DEFAULT_GRID_SPACING,
    envelope_cutoff: float = 1e-14,
    bump_sharpness: float = 1.0,
) -> PointerState:
    """Frontier pointer with a flat or smooth-bump central profile.

    profile "flat" uses a constant on (-1, 1]; "smooth_bump" uses
    exp(-alpha/(1-q^2)), which vanishes with all derivatives at the odd
    integers and yields an infinitely differentiable wavefunction.
    """
    cells = _cells_per_unit(grid_spacing)
    x = _symmetric_positions(cells, grid_spacing)
    if profile == "flat":
        central = np.ones_like(x)
    elif profile == "smooth_bump":
        if not bump_sharpness > 0:
            raise InvalidParameterError(f"bump sharpness must be positive, got {bump_sharpness}")
        central = np.exp(-bump_sharpness / (1.0 - x * x))
    else:
        raise InvalidParameterError(f"unknown central profile {profile!r}")
    return optimal_from_central(
        central,
        target_precision,
        grid_spacing,
        envelope_cutoff,
        label=f"optimal(G={target_precision}, {profile})",
    )


def make_worst(
    target_precision: float,
    grid_spacing: float = DEFAULT_GRID_SPACING,
    envelope_cutoff: float = 1e-14,
) -> PointerState:
    """Maximally disturbing pointer: frontier state with alternate intervals zeroed.

    Zeroing every odd interval makes the +1/-1 displaced copies disjoint,
    so the quality factor vanishes identically.  The precision of the
    renormalized state is larger than the generating target.
    """
    base = make_optimal(target_precision, "flat", grid_spacing, envelope_cutoff)
    q = base.positions
    n, _ = _interval_indices(q)
    samples = np.where(np.abs(n) % 2 == 1, 0.0, base.samples)
    return _normalized_state(samples, grid_spacing, f"worst(G_target={target_precision})")


def quality_factor(state: PointerState) -> float:
    """Overlap of the +1 and -1 displaced copies, by grid quadrature."""
    cells = _cells_per_unit(state.grid_spacing)
    shift = 2 * cells
    phi = state.samples
    if phi.size <= shift:
        return 0.0
    value = float(np.sum(phi[shift:] * phi[:-shift]) * state.grid_spacing)
    return _clamp_unit(value, "quality factor")


def precision(state: PointerState) -> float:
    """Pointer mass on the central interval (-1, +1), by grid quadrature."""
    q = state.positions
    inside = np.abs(q) < 1.0
    value = float(np.sum(state.samples[inside] ** 2) * state.grid_spacing)
    return _clamp_unit(value, "precision")


def _clamp_unit(value: float, name: str) -> float:
    if value < -_CIRCLE_TOL or value > 1.0 + _CIRCLE_TOL:
        raise InvalidStateError(f"{name} {value!r} outside [0, 1] beyond tolerance")
    return min(1.0, max(0.0, value))


def strength_of(state: PointerState) -> MeasurementStrength:
    """Measure (quality factor, precision) of a pointer by quadrature."""
    return MeasurementStrength(quality_factor(state), precision(state))


_FAMILY_BUILDERS = {
    "square": make_square,
    "gaussian": make_gaussian,
    "exponential": make_exponential,
    "optimal": make_optimal,
    "worst": make_worst,
}


def tradeoff_curve(
    family: str,
    parameters,
    grid_spacing: float = DEFAULT_GRID_SPACING,
) -> list[tuple[float, float, float]]:
    """Rows (parameter, F, G) for one pointer family.

    The parameter is the half width (square), width (gaussian), scale
    (exponential) or target precision (optimal, worst).
    """
    try:
        builder = _FAMILY_BUILDERS[family]
    except KeyError:
        raise InvalidParameterError(f"unknown pointer family {family!r}") from None
    parameters = [float(p) for p in parameters]
    if not parameters:
        raise InvalidParameterError("parameter grid is empty")
    rows = []
    for value in parameters:
        state = builder(value, grid_spacing=grid_spacing)
        rows.append((value, quality_factor(state), precision(state)))
    return rows


TRADEOFF_CSV_HEADER = "family,parameter,F,G"


def tradeoff_to_csv(family: str, rows) -> str:
    lines = [TRADEOFF_CSV_HEADER]
    for parameter, fq, gp in rows:
        lines.append(f"{family},{parameter!r},{fq!r},{gp!r}")
    return "\n".join(lines) + "\n"


POINTER_CSV_HEADER = "q,phi"


def samples_to_csv(state: PointerState) -> str:
    lines = [POINTER_CSV_HEADER]
    for q, amp in zip(state.positions, state.samples):
        lines.append(f"{float(q)!r},{float(amp)!r}")
    return "\n".join(lines) + "\n"
