"""Shared helpers: random scenario generators and brute-force oracles."""

import itertools
import math

import numpy as np

from weakbell import BobStage, Direction, MeasurementStrength
from weakbell.channel import on_second_qubit, projectors


def random_direction(rng) -> Direction:
    v = rng.normal(size=3)
    v = v / np.linalg.norm(v)
    return Direction(float(v[0]), float(v[1]), float(v[2]))


def random_strength(rng, radius: float = 0.99) -> MeasurementStrength:
    """Uniform-ish strength strictly inside the unit quarter disc."""
    r = radius * math.sqrt(rng.random())
    angle = rng.random() * math.pi / 2.0
    return MeasurementStrength(r * math.sin(angle), r * math.cos(angle))


def random_density(rng, dim: int = 2) -> np.ndarray:
    """Random full-rank density matrix via a Wishart-style construction."""
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_stage(rng) -> BobStage:
    return BobStage(
        random_direction(rng),
        random_direction(rng),
        random_strength(rng),
        bias=float(rng.random()),
    )


def enumerate_chain_state(cfg, n: int) -> np.ndarray:
    """Brute-force oracle for the state before Bob_n's measurement.

    Sums over every input string of the prior Bobs (weighted by the
    biases) and every subset of decohering Bobs (weighted by the
    quality factors), applying the decoherence maps in chain order.
    Exponential in n; for cross-checking the averaged propagation only.
    """
    stages = cfg.stages[: n - 1]
    m = len(stages)
    total = np.zeros((4, 4), dtype=complex)
    for inputs in itertools.product((0, 1), repeat=m):
        weight_inputs = 1.0
        for stage, y in zip(stages, inputs):
            weight_inputs *= stage.bias if y == 1 else 1.0 - stage.bias
        for subset in itertools.product((False, True), repeat=m):
            weight = weight_inputs
            rho = np.array(cfg.initial_state, dtype=complex)
            for stage, y, decoheres in zip(stages, inputs, subset):
                quality = stage.resolved_strength().quality_factor
                if decoheres:
                    weight *= 1.0 - quality
                    direction = stage.dir1 if y == 1 else stage.dir0
                    pp, pm = projectors(direction)
                    rho = on_second_qubit(lambda r, pp=pp, pm=pm: pp @ r @ pp + pm @ r @ pm, rho)
                else:
                    weight *= quality
            total += weight * rho
    return total
