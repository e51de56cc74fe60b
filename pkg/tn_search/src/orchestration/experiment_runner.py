"""
Experiment runner - 4 steps.

Step 1: Setup      → Validate config, load bundle, temporal train/test split
Step 2: Search     → Run the chosen algorithm on the train split, streaming run.jsonl
Step 3: Test       → Refit the best structure on the test split
Step 4: Artifacts  → best.json, explanations.md (LLM modes)
"""
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from agents.domain_info import load_domain
from config import LLM_ALGORITHMS, RunConfig, build_chat_client
from errors import (
    BundleError,
    LLMError,
    NumericalFailureError,
    TemplateError,
)
from objective.evaluation import EvalCache, EvaluationResult, StructureEvaluator, evaluate_structure
from objective.fitting import FitConfig
from orchestration.hybrid_workflow import hybrid_search
from orchestration.llm_search_workflow import DialogueState, run_llm_search
from plugins.bundle_store import load_bundle, save_bundle
from search.exhaustive import exhaustive_search
from search.local_search import (
    EnumConfig,
    NeighborhoodConfig,
    SearchState,
    StoppingConfig,
    default_rank_max,
    run_local_search,
)
from tensors.dataset import TensorDataset, delay_embed, minmax_normalize, split_dataset
from tensors.network import TNStructure
from tensors.synthetic import generate_synthetic
from utils.run_log import RunLogWriter, write_best, write_explanations

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_LLM = 4
EXIT_NUMERICAL = 5

LOCAL_STRATEGIES = {"tnls": "neighborhood", "tnale": "alternating"}


@dataclass
class RunContext:
    """Data flowing through the run steps."""
    config: RunConfig
    out_dir: Path
    train: Optional[TensorDataset] = None
    test: Optional[TensorDataset] = None
    rank_max: int = 0
    fit: Optional[FitConfig] = None
    evaluator: Optional[StructureEvaluator] = None
    best: Optional[EvaluationResult] = None
    state: Optional[SearchState] = None
    dialogue: Optional[DialogueState] = None
    test_result: Optional[EvaluationResult] = None
    metadata: dict = field(default_factory=dict)


class ExperimentRunner:
    def __init__(self, config: RunConfig):
        self.config = config

    def execute(self) -> RunContext:
        """
        Execute the complete run: Setup → Search → Test → Artifacts.

        Returns:
            RunContext with the best result, the search state and the test objective
        """
        context = RunContext(config=self.config.validate(), out_dir=Path(self.config.output_dir))
        context = self._step_setup(context)
        context = self._step_search(context)
        context = self._step_test(context)
        return self._step_artifacts(context)

    def _step_setup(self, context: RunContext) -> RunContext:
        config = context.config
        logger.info("=" * 80)
        logger.info(f"Stage 1: Setup ({config.algorithm} on {config.dataset})")
        logger.info("=" * 80)
        dataset = load_bundle(config.dataset)
        if dataset.split == "unsplit":
            context.train, context.test = split_dataset(dataset, config.train_fraction)
        else:
            if dataset.split == "test":
                logger.warning(f"[RUN] Bundle {config.dataset} is tagged 'test'; searching on it anyway")
            context.train, context.test = dataset, None

        context.rank_max = config.rank_max or default_rank_max(dataset.shape)
        context.fit = FitConfig(
            max_iters=config.max_iters,
            tolerance=config.tolerance,
            restarts=config.restarts,
            bb_steps=config.bb_steps,
            precondition=config.precondition,
            seed=config.seed,
            workers=config.workers,
        )
        context.out_dir.mkdir(parents=True, exist_ok=True)
        context.evaluator = StructureEvaluator(
            context.train, config.lam, context.fit, on_evaluated=RunLogWriter(context.out_dir)
        )
        logger.info(f"✓ Train {context.train.num_samples} x {context.train.shape}, "
                    f"test {context.test.num_samples if context.test else 0}, rank_max {context.rank_max}")
        return context

    def _init_structure(self, context: RunContext) -> TNStructure:
        order = context.train.order
        if self.config.init_ranks:
            return TNStructure(order, tuple(self.config.init_ranks))
        return TNStructure.all_ones(order)

    def _step_search(self, context: RunContext) -> RunContext:
        config = context.config
        logger.info("=" * 80)
        logger.info(f"Stage 2: Search ({config.algorithm})")
        logger.info("=" * 80)
        stopping = StoppingConfig(config.max_evals, config.patience, config.delta)
        neighborhood = NeighborhoodConfig(config.n_sample, config.p, context.rank_max, config.rank_min, config.seed)
        enumeration = EnumConfig(config.radius, config.rounds, context.rank_max, config.rank_min)

        if config.algorithm == "exhaustive":
            context.best = exhaustive_search(
                context.evaluator, context.rank_max, rank_min=config.rank_min, max_structures=config.max_structures
            )
        elif config.algorithm in ("tnls", "tnale"):
            context.state = run_local_search(
                context.evaluator, self._init_structure(context), LOCAL_STRATEGIES[config.algorithm], stopping,
                neighborhood, enumeration,
            )
        else:
            domain = load_domain(config.domain, context.train.shape, config.domain_aware)
            client = build_chat_client(config)
            if config.algorithm == "tnllm":
                context.state, context.dialogue = run_llm_search(
                    context.evaluator, domain, client, stopping, context.rank_max, config.rank_min,
                    config.domain_aware,
                )
            else:
                context.state, context.dialogue = hybrid_search(
                    context.evaluator, domain, client, config.llm_budget, LOCAL_STRATEGIES[config.local_strategy],
                    stopping, neighborhood, enumeration, context.rank_max, config.rank_min, config.domain_aware,
                )
        if context.state is not None:
            context.best = context.state.best
            context.metadata.update(context.state.metadata)
            context.metadata["stopped_early"] = context.state.stopped_early
        logger.info(f"✓ Best {context.best.structure} obj={context.best.objective:.4f}")
        return context

    def _step_test(self, context: RunContext) -> RunContext:
        if context.test is None:
            logger.info("[RUN] No test split; skipping test objective")
            return context
        logger.info("=" * 80)
        logger.info("Stage 3: Test objective (refit on held-out split)")
        logger.info("=" * 80)
        context.test_result = evaluate_structure(
            context.test, context.best.structure, context.config.lam, context.fit, EvalCache(), context.best.source
        )
        logger.info(f"✓ Test obj={context.test_result.objective:.4f} err={context.test_result.mean_relative_error:.4f}")
        return context

    def _step_artifacts(self, context: RunContext) -> RunContext:
        config = context.config
        logger.info("=" * 80)
        logger.info(f"Stage 4: Artifacts ({context.out_dir})")
        logger.info("=" * 80)
        records = context.evaluator.records
        evals_to_best = next(r.eval_index for r in records if r.objective == context.best.objective)
        payload = {
            "algorithm": config.algorithm,
            "ranks": list(context.best.ranks),
            "structure": str(context.best.structure),
            "train_objective": context.best.objective,
            "train_mean_relative_error": context.best.mean_relative_error,
            "phi": context.best.phi,
            "param_count": context.best.param_count,
            "test_objective": context.test_result.objective if context.test_result else None,
            "test_mean_relative_error": context.test_result.mean_relative_error if context.test_result else None,
            "lambda": config.lam,
            "rank_min": config.rank_min,
            "rank_max": context.rank_max,
            "seed": config.seed,
            "evals_used": context.evaluator.evals_used,
            "evals_to_best": evals_to_best,
            "dataset": config.dataset,
            "planted_ranks": context.train.metadata.get("planted_ranks"),
            "search": context.metadata,
            "config": config.to_dict(),
            "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
        }
        write_best(context.out_dir, payload)
        logger.info(f"✓ Wrote best.json (evals to best: {evals_to_best})")
        if config.algorithm in LLM_ALGORITHMS and context.dialogue is not None:
            write_explanations(context.out_dir, context.dialogue.explanations, records)
            logger.info(f"✓ Wrote explanations.md ({len(context.dialogue.explanations)} proposals)")
        return context


def cmd_run(config: RunConfig) -> int:
    """Run one experiment and map failures to exit codes."""
    try:
        ExperimentRunner(config).execute()
    except (TemplateError, ValueError) as e:
        logger.error(f"✗ Configuration error: {e}")
        return EXIT_CONFIG
    except OSError as e:
        logger.error(f"✗ I/O error: {e}")
        return EXIT_IO
    except LLMError as e:
        logger.error(f"✗ LLM error: {e}")
        return EXIT_LLM
    except NumericalFailureError as e:
        logger.error(f"✗ Numerical failure: {e}")
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_gen_synthetic(shape, ranks, samples: int, seed: int, out, noise: float = 0.0) -> int:
    try:
        planted = TNStructure(len(shape), tuple(ranks))
        dataset = generate_synthetic(shape, planted, samples, noise=noise, seed=seed)
        save_bundle(dataset, out)
    except ValueError as e:
        logger.error(f"✗ Configuration error: {e}")
        return EXIT_CONFIG
    except OSError as e:
        logger.error(f"✗ I/O error: {e}")
        return EXIT_IO
    return EXIT_OK


def cmd_split(bundle, frac: float = 0.8, out=None) -> int:
    """Write <out>/train and <out>/test bundles (default: next to the input)."""
    try:
        dataset = load_bundle(bundle)
        train, test = split_dataset(dataset, frac)
        out = Path(out) if out else Path(bundle)
        save_bundle(train, out / "train")
        save_bundle(test, out / "test")
    except BundleError as e:
        logger.error(f"✗ I/O error: {e}")
        return EXIT_IO
    except ValueError as e:
        logger.error(f"✗ Configuration error: {e}")
        return EXIT_CONFIG
    return EXIT_OK


def cmd_embed(bundle, axis: int, window: int, out, stride: int = 1) -> int:
    """
    Delay-embed the single series held in `bundle` and write the windows as a new bundle.

    The embedded axis becomes the last mode; the windows are min-max normalized to [0, 1]
    as one dataset.
    """
    try:
        series = load_bundle(bundle)
        if series.num_samples != 1:
            raise ValueError(f"Embedding needs a bundle holding one series, got {series.num_samples} samples")
        embedded = delay_embed(series[0], axis, window, stride)
        if series.mode_names is not None:
            names = list(series.mode_names)
            moved = names.pop(axis % series.order)
            embedded.mode_names = names + [moved]
        dataset = minmax_normalize(embedded)
        save_bundle(dataset, out)
        logger.info(f"✓ Embedded {bundle} into {dataset.num_samples} windows of shape {dataset.shape} at {out}")
    except BundleError as e:
        logger.error(f"✗ I/O error: {e}")
        return EXIT_IO
    except ValueError as e:
        logger.error(f"✗ Configuration error: {e}")
        return EXIT_CONFIG
    return EXIT_OK
