"""
Objective evaluation: ln(phi + lambda * mean relative error) over a dataset.

An evaluation is one full fitting pass over every sample for one structure. Cached
structures are never refitted and never count as evaluations.
"""
import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

from objective.fitting import FitConfig, fit_cores
from tensors.dataset import TensorDataset
from tensors.network import TNStructure, compression_ratio, param_count

logger = logging.getLogger(__name__)

SOURCES = ("init", "neighborhood", "enumeration", "llm", "exhaustive")


@dataclass(frozen=True)
class EvaluationResult:
    structure: TNStructure
    phi: float
    mean_relative_error: float
    objective: float
    param_count: int
    eval_index: int
    source: str

    @property
    def ranks(self) -> tuple[int, ...]:
        return self.structure.ranks

    def sort_key(self):
        """Smaller objective, then fewer parameters, then lexicographic ranks."""
        return (self.objective, self.param_count, self.structure.ranks)


def objective_value(phi: float, mean_error: float, lam: float) -> float:
    return math.log(phi + lam * mean_error)


def best_of(results) -> Optional[EvaluationResult]:
    results = list(results)
    return min(results, key=EvaluationResult.sort_key) if results else None


class EvalCache:
    """
    Structure key -> EvaluationResult for one (dataset, lambda, fit config) context.

    Reads are lock-free; inserts and index assignment are serialized.
    """

    def __init__(self):
        self._results: dict[tuple[int, ...], EvaluationResult] = {}
        self._records: list[EvaluationResult] = []
        self._lock = threading.Lock()
        self._context = None

    def bind(self, dataset: TensorDataset, lam: float, config: FitConfig) -> None:
        """Tie the cache to one dataset object, lambda and fit config on first use."""
        with self._lock:
            if self._context is None:
                self._context = (dataset, lam, config)
                return
            bound, bound_lam, bound_config = self._context
            if bound is not dataset or bound_lam != lam or bound_config != config:
                raise ValueError("EvalCache is already bound to a different dataset/lambda/config")

    def get(self, structure: TNStructure) -> Optional[EvaluationResult]:
        return self._results.get(structure.key)

    def __contains__(self, structure: TNStructure) -> bool:
        return structure.key in self._results

    def __len__(self) -> int:
        return len(self._results)

    @property
    def evaluations(self) -> int:
        return len(self._records)

    @property
    def records(self) -> list[EvaluationResult]:
        """Every distinct evaluation in evaluation order."""
        return list(self._records)

    def insert(self, structure: TNStructure, phi: float, mean_error: float, objective: float,
               params: int, source: str) -> EvaluationResult:
        with self._lock:
            existing = self._results.get(structure.key)
            if existing is not None:
                return existing
            result = EvaluationResult(
                structure=structure,
                phi=phi,
                mean_relative_error=mean_error,
                objective=objective,
                param_count=params,
                eval_index=len(self._records) + 1,
                source=source,
            )
            self._results[structure.key] = result
            self._records.append(result)
            return result


def _fit_errors(dataset: TensorDataset, structure: TNStructure, config: FitConfig) -> list[float]:
    def fit_one(index: int) -> float:
        return fit_cores(dataset[index], structure, config, sample_index=index)[1]

    indices = range(dataset.num_samples)
    if config.workers > 1 and dataset.num_samples > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(fit_one, indices))
    return [fit_one(i) for i in indices]


def evaluate_structure(
    dataset: TensorDataset,
    structure: TNStructure,
    lam: float,
    config: FitConfig,
    cache: EvalCache,
    source: str = "init",
) -> EvaluationResult:
    if lam <= 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    if source not in SOURCES:
        raise ValueError(f"Unknown evaluation source {source!r}")
    cache.bind(dataset, lam, config)
    hit = cache.get(structure)
    if hit is not None:
        return hit

    # summed in sample order regardless of worker count
    errors = _fit_errors(dataset, structure, config)
    mean_error = sum(errors) / len(errors)
    phi = compression_ratio(structure, dataset.shape)
    return cache.insert(
        structure,
        phi=phi,
        mean_error=mean_error,
        objective=objective_value(phi, mean_error, lam),
        params=param_count(structure, dataset.shape),
        source=source,
    )


class StructureEvaluator:
    """
    Shared evaluation service for the search loops.

    Holds the dataset, lambda, fit config and cache; `on_evaluated` fires once per new
    (non-cached) evaluation, in evaluation order.
    """

    def __init__(
        self,
        dataset: TensorDataset,
        lam: float = 10.0,
        config: Optional[FitConfig] = None,
        cache: Optional[EvalCache] = None,
        on_evaluated: Optional[Callable[[EvaluationResult], None]] = None,
    ):
        self.dataset = dataset
        self.lam = lam
        self.config = config or FitConfig()
        self.cache = cache if cache is not None else EvalCache()
        self.on_evaluated = on_evaluated

    @property
    def evals_used(self) -> int:
        return self.cache.evaluations

    @property
    def records(self) -> list[EvaluationResult]:
        return self.cache.records

    def is_cached(self, structure: TNStructure) -> bool:
        return structure in self.cache

    def evaluate(self, structure: TNStructure, source: str = "init") -> EvaluationResult:
        before = self.cache.evaluations
        result = evaluate_structure(self.dataset, structure, self.lam, self.config, self.cache, source)
        if result.eval_index > before:
            logger.info(
                f"[OBJECTIVE] #{result.eval_index} {structure} ({source}) "
                f"phi={result.phi:.4f} err={result.mean_relative_error:.4f} obj={result.objective:.4f}"
            )
            if self.on_evaluated is not None:
                self.on_evaluated(result)
        else:
            logger.debug(f"[OBJECTIVE] cache hit {structure} -> #{result.eval_index}")
        return result
