"""
Per-sample core fitting: gradient descent with Armijo backtracking.

By default each core's gradient is scaled by the inverse Gram matrix of its environment
(all other cores contracted), which makes the step independent of how the bond scale is
shared between cores. The unscaled path uses Barzilai-Borwein step estimates instead.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from errors import NumericalFailureError
from tensors.network import (
    CoreSet,
    TNStructure,
    check_cores,
    contract_environment,
    gaussian_cores,
    relative_error,
    tnc_contract,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FitConfig:
    """Inner solver settings for min over the cores of one sample."""

    max_iters: int = 500
    tolerance: float = 1e-6
    restarts: int = 1
    initial_step: float = 1.0
    shrink: float = 0.5
    armijo: float = 1e-4
    max_backtracks: int = 60
    bb_steps: bool = True
    precondition: bool = True
    damping: float = 1e-6
    stall_iters: int = 3
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tolerance <= 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")
        if not 0 < self.shrink < 1:
            raise ValueError(f"shrink must lie in (0, 1), got {self.shrink}")
        if self.initial_step <= 0 or self.armijo <= 0:
            raise ValueError("initial_step and armijo must be > 0")
        if self.damping < 0:
            raise ValueError(f"damping must be >= 0, got {self.damping}")
        if self.stall_iters < 1:
            raise ValueError(f"stall_iters must be >= 1, got {self.stall_iters}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


def init_cores(structure: TNStructure, shape: Sequence[int], seed) -> CoreSet:
    """Seeded Gaussian cores; `seed` is an int or a numpy SeedSequence."""
    return gaussian_cores(structure, shape, np.random.default_rng(seed))


def _loss(sample: np.ndarray, cores: CoreSet, structure: TNStructure) -> float:
    residual = tnc_contract(cores, structure) - sample
    return 0.5 * float(np.vdot(residual, residual))


def _loss_gradients_envs(sample: np.ndarray, cores: CoreSet,
                         structure: TNStructure) -> tuple[float, CoreSet, CoreSet]:
    residual = tnc_contract(cores, structure) - sample
    loss = 0.5 * float(np.vdot(residual, residual))
    grads, envs = [], []
    n = structure.order
    for i in range(n):
        env = contract_environment(cores, structure, i)
        grads.append(np.tensordot(residual, env, axes=(structure.partners(i), list(range(n - 1)))))
        envs.append(env)
    return loss, grads, envs


def loss_and_gradient(sample: np.ndarray, cores: Sequence[np.ndarray],
                      structure: TNStructure) -> tuple[float, CoreSet]:
    """
    loss = 0.5 * ||sample - TNC(cores)||_F^2 and its gradient for every core.

    The gradient for core i is the residual contracted with the environment of i.
    """
    sample = np.asarray(sample, dtype=np.float64)
    cores = check_cores(cores, structure, sample.shape)
    loss, grads, _ = _loss_gradients_envs(sample, cores, structure)
    return loss, grads


def _inner(a: CoreSet, b: CoreSet) -> float:
    return sum(float(np.vdot(x, y)) for x, y in zip(a, b))


def scaled_directions(grads: CoreSet, envs: CoreSet, damping: float) -> CoreSet:
    """
    Each core's gradient right-multiplied by the inverse Gram matrix of its environment.

    The Gram matrix is damped by `damping` times its mean diagonal so rank-deficient
    environments stay solvable. Every direction has a non-negative inner product with its
    gradient.
    """
    directions = []
    for grad, env in zip(grads, envs):
        bonds = math.prod(grad.shape[1:])
        unfolded = env.reshape(-1, bonds)
        gram = unfolded.T @ unfolded
        gram[np.diag_indices(bonds)] += damping * max(np.trace(gram) / bonds, np.finfo(float).tiny)
        step = np.linalg.solve(gram, grad.reshape(grad.shape[0], bonds).T).T
        directions.append(step.reshape(grad.shape))
    return directions


def _match_norm(sample: np.ndarray, cores: CoreSet, structure: TNStructure) -> CoreSet:
    """Rescale every core equally so the initial contraction has the sample's norm."""
    norm = float(np.linalg.norm(tnc_contract(cores, structure).ravel()))
    if norm == 0.0 or not np.isfinite(norm):
        return cores
    factor = (float(np.linalg.norm(sample.ravel())) / norm) ** (1.0 / structure.order)
    return [core * factor for core in cores]


def _descend(sample: np.ndarray, cores: CoreSet, structure: TNStructure,
             config: FitConfig) -> tuple[CoreSet, list[float]]:
    loss, grads, envs = _loss_gradients_envs(sample, cores, structure)
    if not np.isfinite(loss):
        raise NumericalFailureError(structure)
    losses = [loss]
    prev_cores: Optional[CoreSet] = None
    prev_grads: Optional[CoreSet] = None
    stalled = 0

    for _ in range(config.max_iters):
        if loss == 0.0:
            break
        if config.precondition:
            directions = scaled_directions(grads, envs, config.damping)
        else:
            directions = grads
        slope = _inner(grads, directions)
        if not slope > 0.0:
            break

        step = config.initial_step
        if config.bb_steps and not config.precondition and prev_cores is not None:
            s = [c - p for c, p in zip(cores, prev_cores)]
            y = [g - p for g, p in zip(grads, prev_grads)]
            sy = _inner(s, y)
            if sy > 0:
                step = _inner(s, s) / sy

        accepted = None
        for _ in range(config.max_backtracks):
            trial = [c - step * d for c, d in zip(cores, directions)]
            with np.errstate(over="ignore", invalid="ignore"):
                trial_loss = _loss(sample, trial, structure)
            if np.isfinite(trial_loss) and trial_loss <= loss - config.armijo * step * slope:
                accepted = trial
                break
            step *= config.shrink
        if accepted is None:
            break

        prev_cores, prev_grads = cores, grads
        cores = accepted
        new_loss, grads, envs = _loss_gradients_envs(sample, cores, structure)
        if not np.isfinite(new_loss):
            raise NumericalFailureError(structure)
        losses.append(new_loss)
        change = (loss - new_loss) / loss
        loss = new_loss
        stalled = stalled + 1 if change < config.tolerance else 0
        if stalled >= config.stall_iters:
            break
    return cores, losses


def fit_cores(
    sample: np.ndarray,
    structure: TNStructure,
    config: FitConfig = FitConfig(),
    sample_index: int = 0,
    history: Optional[list[list[float]]] = None,
) -> tuple[CoreSet, float]:
    """
    Fit one sample at a fixed structure and return the best cores over all restarts
    together with their relative error.

    Restart r of sample l starts from cores seeded by (config.seed, l, r), rescaled so their
    contraction has the norm of the sample. A run stops after `stall_iters` consecutive
    iterations whose relative loss change is below `tolerance`. When `history` is given,
    each restart's loss sequence is appended to it.
    """
    sample = np.asarray(sample, dtype=np.float64)
    if not np.any(sample):
        raise ValueError("Cannot fit an all-zero sample")

    best_cores, best_error = None, np.inf
    for restart in range(config.restarts):
        seed = np.random.SeedSequence([config.seed, sample_index, restart])
        cores = _match_norm(sample, init_cores(structure, sample.shape, seed), structure)
        cores, losses = _descend(sample, cores, structure, config)
        if history is not None:
            history.append(losses)
        error = relative_error(sample, tnc_contract(cores, structure))
        if not np.isfinite(error):
            raise NumericalFailureError(structure, "non-finite relative error")
        if error < best_error:
            best_cores, best_error = cores, error
    return best_cores, float(best_error)
