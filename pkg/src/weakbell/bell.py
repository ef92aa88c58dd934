"""One Alice, many sequential Bobs: steering, CHSH and double violations.

Alice holds one half of a singlet and measures strongly along u_x; a
chain of Bobs measures the other half, each with intermediate strength,
each ignorant of the others' inputs and outcomes.  The joint outcome
distribution for one weak Bob followed by a strong one is

    P(a b1 b2 | x y1 y2) =
        (b1 G / 8) (b2 w.v - a u.w)
      + (F / 8) (1 - a b2 u.v)
      + ((1-F) / 8) (1 - a b2 (u.w)(w.v))

with u = u_x, w = w_{y1}, v = v_{y2}.  The a-dependent terms carry the
singlet anti-correlation (a strong aligned pair gives b1 = -a).
Positivity of every outcome bounds the strength pair by the unit circle:
at the tangent geometry u=Z, w=-X, v=Z sin(t) - X cos(t), the outcome
(1,-1,1) has probability (1 - F sin(t) - G cos(t))/8, so F sin(t) +
G cos(t) <= 1 for every t.

Chain states are propagated with input-averaged channels: averaging the
state first is exact because every stage map is linear in the state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, PhysicalityError
from .channel import (
    Direction,
    as_density,
    decohere,
    on_second_qubit,
    projectors,
    spin_operator,
    strength_pair,
    symmetrize,
    weak_conditional,
)
from .pointer import MeasurementStrength, PointerState

_SQ2 = math.sqrt(2.0)


def singlet() -> np.ndarray:
    """Projector onto (|ud> - |du>)/sqrt(2); correlations are -u.v."""
    psi = np.array([0.0, 1.0, -1.0, 0.0], dtype=complex) / _SQ2
    return np.outer(psi, psi.conj())


def steered_state(direction, outcome: int) -> np.ndarray:
    """Bob's state after Alice's strong outcome a along u: (I - a u.sigma)/2."""
    if outcome not in (1, -1):
        raise InvalidParameterError(f"outcome must be +1 or -1, got {outcome}")
    return (np.eye(2, dtype=complex) - outcome * spin_operator(direction)) / 2.0


@dataclass(frozen=True)
class TripleGeometry:
    """Directions for Alice, the weak stage and the strong stage (inputs 0/1)."""

    alice: tuple[Direction, Direction]
    first: tuple[Direction, Direction]
    second: tuple[Direction, Direction]


def tangent_geometry(angle: float) -> TripleGeometry:
    """Geometry whose zero-probability outcome traces the unit-circle tangents."""
    return TripleGeometry(
        alice=(DIRECTIONS["z"], DIRECTIONS["x"]),
        first=(Direction(-1.0, 0.0, 0.0), DIRECTIONS["z"]),
        second=(
            Direction(-math.cos(angle), 0.0, math.sin(angle)),
            DIRECTIONS["x"],
        ),
    )


def _triple_formula(a, b1, b2, u, w, v, quality: float, prec: float) -> float:
    uw = float(np.dot(u, w))
    wv = float(np.dot(w, v))
    uv = float(np.dot(u, v))
    return (
        (b1 * prec / 8.0) * (b2 * wv - a * uw)
        + (quality / 8.0) * (1.0 - a * b2 * uv)
        + ((1.0 - quality) / 8.0) * (1.0 - a * b2 * uw * wv)
    )


def _check_outcomes_inputs(a, b1, b2, x, y1, y2):
    if any(o not in (1, -1) for o in (a, b1, b2)):
        raise InvalidParameterError(f"outcomes must be +/-1, got {(a, b1, b2)}")
    if any(i not in (0, 1) for i in (x, y1, y2)):
        raise InvalidParameterError(f"inputs must be 0/1, got {(x, y1, y2)}")


def triple_probability(a, b1, b2, x, y1, y2, geometry: TripleGeometry, strength) -> float:
    """P(a b1 b2 | x y1 y2) in closed form for the singlet scenario."""
    _check_outcomes_inputs(a, b1, b2, x, y1, y2)
    F, G = strength_pair(strength)
    u = geometry.alice[x].vector
    w = geometry.first[y1].vector
    v = geometry.second[y2].vector
    return _triple_formula(a, b1, b2, u, w, v, F, G)


def triple_probability_oracle(a, b1, b2, x, y1, y2, geometry: TripleGeometry, strength) -> float:
    """Same probability by explicit state propagation.

    Composes Alice's steering, the conditional weak channel and a strong
    projective measurement; used to cross-check the closed form.
    """
    _check_outcomes_inputs(a, b1, b2, x, y1, y2)
    rho = steered_state(geometry.alice[x], a)
    conditional = weak_conditional(rho, geometry.first[y1], strength, b1)
    pp, pm = projectors(geometry.second[y2])
    pi_b2 = pp if b2 == 1 else pm
    return 0.5 * float(np.trace(pi_b2 @ conditional).real)


def positivity_bound_scan(angle_grid, quality_factor: float, precision: float):
    """Rows (theta, min outcome probability, F sin(theta) + G cos(theta)).

    Evaluates the closed form directly, so deliberately unphysical
    (quality factor, precision) pairs are allowed; those produce a
    negative minimum at some angle.
    """
    angles = [float(t) for t in angle_grid]
    rows = []
    for angle in angles:
        geometry = tangent_geometry(angle)
        u = geometry.alice[0].vector
        w = geometry.first[0].vector
        v = geometry.second[0].vector
        probs = [
            _triple_formula(a, b1, b2, u, w, v, quality_factor, precision)
            for a in (1, -1)
            for b1 in (1, -1)
            for b2 in (1, -1)
        ]
        tangent_value = quality_factor * math.sin(angle) + precision * math.cos(angle)
        rows.append((angle, min(probs), tangent_value))
    return rows


POSITIVITY_CSV_HEADER = "theta,min_prob,tangent_value"


def positivity_scan_to_csv(rows) -> str:
    lines = [POSITIVITY_CSV_HEADER]
    for angle, min_prob, tangent in rows:
        lines.append(f"{angle!r},{min_prob!r},{tangent!r}")
    return "\n".join(lines) + "\n"


# --- chain configuration ---------------------------------------------------


@dataclass(frozen=True)
class BobStage:
    """One Bob: directions for inputs 0/1, strength (or pointer), input bias.

    bias is the probability of receiving input 1.
    """

    dir0: Direction
    dir1: Direction
    strength: MeasurementStrength | PointerState
    bias: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.bias <= 1.0:
            raise InvalidParameterError(f"input bias must lie in [0, 1], got {self.bias}")
        strength_pair(self.strength)  # validates the type and physicality

    def resolved_strength(self) -> MeasurementStrength:
        return MeasurementStrength(*strength_pair(self.strength))


@dataclass(frozen=True)
class BellChainConfig:
    """Alice's two directions plus the ordered Bob stages and initial state."""

    alice_dir0: Direction
    alice_dir1: Direction
    stages: tuple[BobStage, ...]
    initial_state: np.ndarray | None = None

    def __post_init__(self):
        if not self.stages:
            raise InvalidParameterError("a Bell chain needs at least one Bob stage")
        object.__setattr__(self, "stages", tuple(self.stages))
        state = singlet() if self.initial_state is None else as_density(self.initial_state, 4)
        state = state.copy()
        state.flags.writeable = False
        object.__setattr__(self, "initial_state", state)


@dataclass(frozen=True)
class CorrelationTable:
    """Correlators E[x][y] of Alice and one Bob, |E| <= 1."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (2, 2):
            raise InvalidParameterError(f"correlation table must be 2x2, got {values.shape}")
        if np.max(np.abs(values)) > 1.0 + 1e-9:
            raise PhysicalityError("correlator magnitude exceeds 1")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def chsh(self) -> float:
        e = self.values
        return float(e[0, 0] + e[0, 1] + e[1, 0] - e[1, 1])


def correlation_table(state, alice_dirs, bob_dirs, precision: float = 1.0) -> CorrelationTable:
    """E[x][y] = G tr(rho sigma_ux (x) sigma_wy) on a two-qubit state."""
    state = as_density(state, 4)
    values = np.empty((2, 2))
    for x, u in enumerate(alice_dirs):
        su = spin_operator(u)
        for y, w in enumerate(bob_dirs):
            observable = np.kron(su, spin_operator(w))
            values[x, y] = precision * float(np.trace(state @ observable).real)
    return CorrelationTable(values)


def chsh(state, alice_dirs, bob_dirs, precision: float = 1.0) -> float:
    """CHSH combination E00 + E01 + E10 - E11 at Bob precision G."""
    return correlation_table(state, alice_dirs, bob_dirs, precision).chsh


def _stage_channel(stage: BobStage):
    """Input-averaged unconditional channel of one stage, on a 2x2 state."""
    F = stage.resolved_strength().quality_factor
    r = stage.bias
    d0, d1 = stage.dir0, stage.dir1

    def channel(rho):
        mixed = (1.0 - r) * decohere(rho, d0) + r * decohere(rho, d1)
        return F * rho + (1.0 - F) * mixed

    return channel


def sequential_average_state(cfg: BellChainConfig, n: int) -> np.ndarray:
    """State of Alice and Bob_n before their measurements.

    Averages over the prior Bobs' inputs with their biases; exact by
    linearity of the stage channels, replacing the 2^(n-1)-branch sum
    with n-1 channel applications.
    """
    if not 1 <= n <= len(cfg.stages) + 1:
        raise InvalidParameterError(f"stage index {n} outside 1..{len(cfg.stages) + 1}")
    state = np.array(cfg.initial_state, dtype=complex)
    for stage in cfg.stages[: n - 1]:
        state = symmetrize(on_second_qubit(_stage_channel(stage), state))
    return state


# --- named settings ---------------------------------------------------------


DIRECTIONS = {
    "x": Direction(1.0, 0.0, 0.0),
    "z": Direction(0.0, 0.0, 1.0),
}


def tsirelson_alice() -> tuple[Direction, Direction]:
    """Alice's settings attaining the Tsirelson bound on the singlet: Z, X."""
    return DIRECTIONS["z"], DIRECTIONS["x"]


def tsirelson_bob() -> tuple[Direction, Direction]:
    """Bob's settings -(Z+X)/sqrt(2), (-Z+X)/sqrt(2)."""
    return (
        Direction(-1.0 / _SQ2, 0.0, -1.0 / _SQ2),
        Direction(1.0 / _SQ2, 0.0, -1.0 / _SQ2),
    )


def protocol_alice() -> tuple[Direction, Direction]:
    """Alice's settings in the biased-input protocol: -Z, X."""
    return Direction(0.0, 0.0, -1.0), DIRECTIONS["x"]


def protocol_bob(angle: float) -> tuple[Direction, Direction]:
    """Bob_n's settings in the biased-input protocol: Z, cos(t) Z + sin(t) X."""
    return DIRECTIONS["z"], Direction(math.sin(angle), 0.0, math.cos(angle))


# --- double and triple violation scans --------------------------------------


def _strength_for_target(family: str, target: float) -> MeasurementStrength:
    from . import pointer as pt
    from scipy.special import erfinv

    if family in ("analytic", "analytic-optimal"):
        return MeasurementStrength.optimal(target)
    if family == "optimal":
        return pt.strength_of(pt.make_optimal(target))
    if family == "square":
        return pt.strength_of(pt.make_square(1.0 / target))
    if family == "gaussian":
        width = 1.0 / (_SQ2 * float(erfinv(target)))
        return pt.strength_of(pt.make_gaussian(width))
    raise InvalidParameterError(f"unknown stage family {family!r}")


def double_violation_curve(family: str, precision_grid) -> list[tuple[float, float, float]]:
    """Rows (G, I1, I2) for a weak Bob of precision G followed by a strong Bob.

    Both Bobs use the Tsirelson settings with unbiased inputs; family
    selects how the weak stage's strength is produced ("analytic" for
    the frontier pair (sqrt(1-G^2), G), or a constructed square,
    gaussian or optimal pointer matched to the target precision).
    Reported G is the actual stage precision.
    """
    alice = tsirelson_alice()
    bob = tsirelson_bob()
    strong = MeasurementStrength(0.0, 1.0)
    rows = []
    for target in precision_grid:
        target = float(target)
        if not 0.0 < target < 1.0:
            raise InvalidParameterError(f"precision grid values must lie in (0, 1), got {target}")
        stage_strength = _strength_for_target(family, target)
        cfg = BellChainConfig(
            alice[0],
            alice[1],
            stages=(
                BobStage(bob[0], bob[1], stage_strength, bias=0.5),
                BobStage(bob[0], bob[1], strong, bias=0.5),
            ),
        )
        first = chsh(sequential_average_state(cfg, 1), alice, bob, stage_strength.precision)
        second = chsh(sequential_average_state(cfg, 2), alice, bob, 1.0)
        rows.append((stage_strength.precision, first, second))
    return rows


DOUBLE_CSV_HEADER = "G,I1,I2"


def double_curve_to_csv(rows) -> str:
    lines = [DOUBLE_CSV_HEADER]
    for g, first, second in rows:
        lines.append(f"{g!r},{first!r},{second!r}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class TripleScanReport:
    """Best min(I1, I2, I3) over an (F1, F2) grid of frontier-pointer stages."""

    best_quality_factors: tuple[float, float]
    best_values: tuple[float, float, float]
    max_min_chsh: float
    cells: int

    def to_dict(self) -> dict:
        return {
            "best_F1": self.best_quality_factors[0],
            "best_F2": self.best_quality_factors[1],
            "best_I1": self.best_values[0],
            "best_I2": self.best_values[1],
            "best_I3": self.best_values[2],
            "max_min_chsh": self.max_min_chsh,
            "cells": self.cells,
        }


def unbiased_triple_scan(f1_grid, f2_grid, settings: str = "tsirelson") -> TripleScanReport:
    """Scan two weak frontier stages plus a strong third for a triple violation.

    Restricted to the standard settings family: all Bobs share the
    Tsirelson directions, inputs unbiased.  Reports the largest
    min(I1, I2, I3) found; no scanned cell is expected to exceed 2.
    """
    if settings != "tsirelson":
        raise InvalidParameterError(f"unsupported settings strategy {settings!r}")
    alice = tsirelson_alice()
    bob = tsirelson_bob()
    strong = MeasurementStrength(0.0, 1.0)
    best = (-math.inf, (0.0, 0.0), (0.0, 0.0, 0.0))
    cells = 0
    f1_grid = [float(v) for v in f1_grid]
    f2_grid = [float(v) for v in f2_grid]
    for f1 in f1_grid:
        if not 0.0 < f1 < 1.0:
            raise InvalidParameterError(f"quality-factor grid values must lie in (0, 1), got {f1}")
        g1 = math.sqrt((1.0 - f1) * (1.0 + f1))
        s1 = MeasurementStrength(f1, g1)
        stage1 = BobStage(bob[0], bob[1], s1, bias=0.5)
        # I1 and the post-stage-1 state do not depend on F2
        cfg1 = BellChainConfig(alice[0], alice[1], stages=(stage1,))
        first = chsh(sequential_average_state(cfg1, 1), alice, bob, g1)
        state_after_1 = sequential_average_state(cfg1, 2)
        for f2 in f2_grid:
            if not 0.0 < f2 < 1.0:
                raise InvalidParameterError(f"quality-factor grid values must lie in (0, 1), got {f2}")
            cells += 1
            g2 = math.sqrt((1.0 - f2) * (1.0 + f2))
            stage2 = BobStage(bob[0], bob[1], MeasurementStrength(f2, g2), bias=0.5)
            second = chsh(state_after_1, alice, bob, g2)
            state_after_2 = symmetrize(on_second_qubit(_stage_channel(stage2), state_after_1))
            third = chsh(state_after_2, alice, bob, 1.0)
            score = min(first, second, third)
            if score > best[0]:
                best = (score, (f1, f2), (first, second, third))
    return TripleScanReport(
        best_quality_factors=best[1],
        best_values=best[2],
        max_min_chsh=best[0],
        cells=cells,
    )
