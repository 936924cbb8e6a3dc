"""Iterative factorization of a bound product into codebook entries.

The update per factor is: unbind the current estimates of the other factors
from the composite, score the result against the factor's codebook, and
rebuild the estimate as the ReLU-weighted superposition of the codebook,
scaled to unit L2 norm. The superposition keeps its amplitudes (it is not
pushed back to a pure vector); that keeps several candidates alive early on,
which is what lets the network escape spurious fixed points.

With restarts enabled, an attempt is accepted as soon as the cleanup keys
explain the composite (reconstruction cosine at least ``accept``). The keys
are then polished by hard re-reads until they stop changing. Attempts still
below ``accept`` after ``ABANDON_AFTER`` iterations are dropped and the
network restarts from a random superposition drawn from a fixed-seed
generator, so results are deterministic. The iteration budget is shared by
all attempts. Without restarts a single attempt runs until its keys repeat
for ``STABLE_ITERATIONS`` iterations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .codebook import Codebook, argmax_first, superpose
from .core import (
    GcTensor,
    GcVsaError,
    bind_all,
    coefficients_to_phases,
    cosine_similarity,
    fundamental_coefficients,
    module_activations,
    unbind,
)

STABLE_ITERATIONS = 3
ABANDON_AFTER = 2
DEFAULT_ACCEPT = 0.2
RESTART_SEED = 12345
MAX_POLISH = 5


def normalize_to_pure(v: GcTensor, eps: float = 1e-12) -> GcTensor:
    """Rescale every module's fundamental bins to unit amplitude, keeping phases.

    All other bins (DC and harmonics) are dropped. A bin whose amplitude is
    below ``eps`` has no usable phase and is set to phase 0.
    """
    coeffs = fundamental_coefficients(v.data)
    coeffs = np.where(np.abs(coeffs) > eps, coeffs, 1.0)
    phases = coefficients_to_phases(coeffs, v.config.n)
    return GcTensor(module_activations(phases, v.config.n), v.config)


@dataclass
class ResonatorState:
    """Outcome of ``factorize``.

    ``trace[t][f]`` holds the similarity profile of factor ``f`` at global
    iteration ``t`` and ``attempt_of[t]`` the attempt it belongs to.
    """

    estimates: list[GcTensor]
    trace: list[list[np.ndarray]] = field(default_factory=list)
    attempt_of: list[int] = field(default_factory=list)
    keys: list = field(default_factory=list)
    iterations: int = 0
    attempts: int = 0
    converged: bool = False
    reconstruction: float = 0.0

    def trace_rows(self, codebooks: Sequence[Codebook]):
        """Long-format rows (iteration, attempt, factor, key, similarity)."""
        for t, (profiles, a) in enumerate(zip(self.trace, self.attempt_of), start=1):
            for f, (cb, prof) in enumerate(zip(codebooks, profiles)):
                for key, s in zip(cb.keys, prof):
                    yield t, a, f, key, float(s)


def _relu(s: np.ndarray) -> np.ndarray:
    # the tiny floor keeps an all-negative profile from collapsing to zero
    return np.maximum(s, 0.0) + 1e-300


def _unit(v: GcTensor) -> GcTensor:
    n = v.norm
    return v * (1.0 / n) if n > 0 else v


def _profile(composite, cb, others) -> np.ndarray:
    residual = unbind(composite, bind_all(others)) if others else composite
    if residual.norm == 0.0:
        return np.zeros(len(cb))
    return cb.similarities(residual)


def reconstruction_similarity(
    composite: GcTensor, codebooks: Sequence[Codebook], keys: Sequence
) -> float:
    """Cosine between the composite and the product of the chosen entries."""
    return cosine_similarity(composite, bind_all([cb[k] for cb, k in zip(codebooks, keys)]))


def polish(composite: GcTensor, codebooks: Sequence[Codebook], keys, max_rounds=MAX_POLISH):
    """Re-read each factor against the hard entries of the others until stable.

    Returns the final keys and the similarity profiles of every round.
    """
    keys = list(keys)
    rounds = []
    for _ in range(max_rounds):
        changed = False
        profiles = []
        for f, cb in enumerate(codebooks):
            others = [c[k] for g, (c, k) in enumerate(zip(codebooks, keys)) if g != f]
            sims = _profile(composite, cb, others)
            profiles.append(sims)
            k = cb.keys[argmax_first(sims)]
            if k != keys[f]:
                keys[f] = k
                changed = True
        rounds.append(profiles)
        if not changed:
            break
    return keys, rounds


def _validate(composite, codebooks):
    if len(codebooks) < 2:
        raise GcVsaError("factorization needs at least two codebooks")
    for cb in codebooks:
        if cb.config != composite.config:
            raise GcVsaError("codebook and composite use different GridConfigs")
        if len(cb) == 0:
            raise GcVsaError("empty codebook")
    if composite.norm == 0.0:
        raise GcVsaError("cannot factorize a zero composite")


def factorize(
    composite: GcTensor,
    codebooks: Sequence[Codebook],
    max_iter: int = 100,
    tol: float = 1e-4,
    accept: float = DEFAULT_ACCEPT,
    restarts: bool = True,
    seed: int = RESTART_SEED,
) -> ResonatorState:
    """Recover one entry per codebook whose binding matches ``composite``.

    ``max_iter`` bounds the total number of iterations over all attempts.
    ``tol`` is a second settling test: the keys held and no estimate moved by
    more than ``tol`` (max abs change, estimates have unit norm). With
    ``restarts=False`` a single attempt runs from the uniform superposition
    and is never abandoned early.
    """
    _validate(composite, codebooks)
    if max_iter < 1:
        raise GcVsaError("max_iter must be at least 1")
    rng = np.random.default_rng(seed)
    state = ResonatorState(estimates=[])
    keys: list = []
    while state.iterations < max_iter:
        if state.attempts == 0:
            init = [np.ones(len(cb)) for cb in codebooks]
        else:
            init = [rng.random(len(cb)) for cb in codebooks]
        est = [normalize_to_pure(superpose(cb, w)) for cb, w in zip(codebooks, init)]
        state.attempts += 1
        history: list[list] = []
        good = False
        while state.iterations < max_iter:
            profiles = []
            moved = 0.0
            keys = []
            for f, cb in enumerate(codebooks):
                others = [e for g, e in enumerate(est) if g != f]
                sims = _profile(composite, cb, others)
                new = _unit(superpose(cb, _relu(sims)))
                moved = max(moved, float(np.max(np.abs(new.data - est[f].data))))
                est[f] = new
                profiles.append(sims)
                keys.append(cb.keys[argmax_first(sims)])
            state.iterations += 1
            state.trace.append(profiles)
            state.attempt_of.append(state.attempts)
            history.append(keys)
            rc = reconstruction_similarity(composite, codebooks, keys)
            stable = len(history) >= STABLE_ITERATIONS and all(
                h == keys for h in history[-STABLE_ITERATIONS:]
            )
            settled = len(history) >= 2 and history[-2] == keys and moved < tol
            if restarts and rc >= accept:
                good = True
                break
            if stable or settled:
                good = not restarts
                break
            if restarts and len(history) >= ABANDON_AFTER and rc < accept:
                break
        state.estimates = est
        if good:
            keys, rounds = polish(composite, codebooks, keys)
            state.trace.extend(rounds)
            state.attempt_of.extend([state.attempts] * len(rounds))
            state.iterations += len(rounds)
            state.converged = True
            break
        if not restarts:
            break
    state.keys = list(keys)
    state.reconstruction = reconstruction_similarity(composite, codebooks, state.keys)
    return state
