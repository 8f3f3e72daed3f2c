"""
Subcommand implementations. Each returns a process exit code; library
exceptions propagate to main(), which maps them to codes.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import pandas as pd

from src.autofuse.params import FusionMode
from src.bregman.checks import report_frame
from src.fedsim.metrics import SCORE_WINDOW, select_best
from src.fedsim.runner import ExperimentResult, run_grid, way_label
from src.interp.sweep import interp_sweep, recommend_way
from src.scenes.stats import partition_stats, scene_summary
from src.splitnet.ways import PrivatizationWay, WayKind, canonical
from src.storage.result_storage import ResultStorage
from src.utils.config import Settings, get_settings
from src.utils.exceptions import ConfigurationError, UsageError
from src.utils.helpers import STREAM_CHECKS, derive_rng, format_duration, lr_tag
from src.xcli.checks import SUITES, run_suite
from src.xcli.models import ExperimentConfig, load_config
from src.xcli.scene_builder import all_way_names, build_scene, build_split, expected_blocks, resolve_way, \
    validate_ways

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ["way", "best_lr", "global_acc", "local_acc"]


@dataclass
class CommandContext:
    """Everything a subcommand needs besides its own arguments"""

    config: ExperimentConfig
    storage: ResultStorage
    settings: Settings
    threads: int


def prepare(config_path: str, out: Optional[str] = None, seed: Optional[int] = None,
            threads: Optional[int] = None, settings: Optional[Settings] = None) -> CommandContext:
    """Load and validate the config, open the output directory, echo the effective config"""
    settings = settings or get_settings()
    config = load_config(config_path, {"seed": seed})
    out_dir = out or config.output_dir or settings.output_dir
    config = config.model_copy(update={"output_dir": str(out_dir)})
    validate_ways(config)
    storage = ResultStorage(out_dir)
    storage.write_toml("effective_config.toml", config.effective())
    return CommandContext(config, storage, settings, settings.effective_threads(threads))


def _write_scene_stats(ctx: CommandContext, scene) -> pd.DataFrame:
    ctx.storage.write_frame("partition_stats.csv", partition_stats(scene.partition, scene.dataset).to_frame())
    summary = scene_summary(scene.partition, scene.dataset, scene.global_test)
    ctx.storage.write_frame("scene_summary.csv", summary)
    return summary


def _train(ctx: CommandContext, scene, split, way) -> List[ExperimentResult]:
    cfg = ctx.config
    results = run_grid(scene, split, way, cfg.fed_config(), ctx.threads, cfg.fusion.temperature,
                       ctx.settings.eval_batch_size)
    for result in results:
        stem = f"{result.name}_lr{lr_tag(result.lr)}"
        ctx.storage.write_frame(f"metrics_{stem}.csv", result.metrics_frame(ctx.settings.record_timing))
        if isinstance(way, FusionMode):
            ctx.storage.write_frame(f"coefficients_{stem}.csv", result.coefficient_frame())
    return results


def summarize(results: Sequence[ExperimentResult], metric: str = "local") -> Dict[str, object]:
    """select_best over the learning-rate grid, then both window scores at the chosen rate"""
    name = results[0].name
    has_global = all(r.global_acc is not None for r in results[0].log)
    if metric == "global" and not has_global:
        logger.warning(f"⚠️ {name} has no global model; selecting by local accuracy")
        metric = "local"
    best_lr, _ = select_best({r.lr: r.log for r in results}, metric)
    best = next(r for r in results if r.lr == best_lr)
    global_acc, local_acc = best.final_scores()
    return {"way": name, "best_lr": best_lr, "global_acc": global_acc, "local_acc": local_acc}


def _final_values(results: Sequence[ExperimentResult]) -> List[Dict[str, object]]:
    """Last recorded values, used when a run is too short to score"""
    return [{"way": r.name, "lr": r.lr, "global_acc": r.log[-1].global_acc, "local_acc": r.log[-1].local_acc}
            for r in results]


def cmd_run(ctx: CommandContext) -> int:
    scene = build_scene(ctx.config.scene, ctx.config.seed)
    split = build_split(ctx.config.model, scene, ctx.config.seed)
    way = resolve_way(ctx.config.way, split.num_blocks)
    _write_scene_stats(ctx, scene)

    results = _train(ctx, scene, split, way)
    if len(results[0].log) >= SCORE_WINDOW:
        row = summarize(results, ctx.config.compare.select_metric)
        ctx.storage.write_frame("summary.csv", pd.DataFrame([row], columns=SUMMARY_COLUMNS))
        print(f"📊 {row['way']}: best lr {row['best_lr']}, global {row['global_acc']}, local {row['local_acc']}")
    else:
        logger.warning(f"⚠️ fewer than {SCORE_WINDOW} records; reporting last recorded values")
        for row in _final_values(results):
            print(f"📊 {row['way']} lr {row['lr']}: global {row['global_acc']}, local {row['local_acc']}")
    return 0


def cmd_compare(ctx: CommandContext, ways: Optional[Sequence[str]] = None) -> int:
    num_blocks = expected_blocks(ctx.config.model)
    names = list(ways or ctx.config.compare.ways or all_way_names(num_blocks))
    key = "--ways" if ways else "compare.ways"
    # parse every name before any data is built
    resolved = [resolve_way(name, num_blocks, key) for name in names]
    scene = build_scene(ctx.config.scene, ctx.config.seed)
    split = build_split(ctx.config.model, scene, ctx.config.seed)
    _write_scene_stats(ctx, scene)

    rows = []
    for way in resolved:
        logger.info(f"🚀 comparing {way_label(way, split.num_blocks)}")
        rows.append(summarize(_train(ctx, scene, split, way), ctx.config.compare.select_metric))
    summary = pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
    ctx.storage.write_frame("summary.csv", summary)
    print(summary.to_string(index=False))
    return 0


def _pick_for_interp(results: Sequence[ExperimentResult]) -> ExperimentResult:
    if len(results[0].log) >= SCORE_WINDOW:
        best_lr, _ = select_best({r.lr: r.log for r in results}, "local")
        return next(r for r in results if r.lr == best_lr)
    # too short to score: the latest local accuracy decides, smaller lr on ties
    return max(results, key=lambda r: (r.log[-1].local_acc or 0.0, -r.lr))


def cmd_interp(ctx: CommandContext) -> int:
    scene = build_scene(ctx.config.scene, ctx.config.seed)
    split = build_split(ctx.config.model, scene, ctx.config.seed)
    full_double: PrivatizationWay = canonical(WayKind.SSP, 1)
    if split.num_blocks < 2:
        raise ConfigurationError(f"interpolation needs an encoder and a classifier block, split has L={split.num_blocks}")
    _write_scene_stats(ctx, scene)

    trained = _pick_for_interp(_train(ctx, scene, split, full_double))
    grid = interp_sweep(trained.clients, ctx.config.interp.alphas, ctx.config.interp.betas,
                        ctx.settings.eval_batch_size)
    ctx.storage.write_frame("interp_heatmap.csv", grid.to_frame())
    verdict = recommend_way(grid, split.num_blocks)
    line = f"alpha={verdict.alpha} beta={verdict.beta} local_acc={verdict.accuracy} way={verdict.way}"
    ctx.storage.write_text("recommendation.txt", line + "\n")
    print(f"✅ trained {trained.name} at lr {trained.lr}; recommended: {line}")
    return 0


def cmd_check(suite: str, out: Optional[str] = None, seed: int = 0, trials: int = 100,
              settings: Optional[Settings] = None) -> int:
    settings = settings or get_settings()
    if suite not in SUITES:
        raise UsageError(f"unknown check suite '{suite}', expected one of {SUITES}")
    rng = derive_rng(seed, STREAM_CHECKS)
    results = run_suite(suite, rng, trials)
    frame = report_frame(results)
    ResultStorage(out or settings.output_dir).write_frame(f"check_{suite}.csv", frame)
    print(frame.to_string(index=False))
    failed = [r for r in results if not r.passed]
    for r in failed:
        logger.error(f"❌ {suite}: {r.check} {r.generator} violation {r.max_violation:.3e}")
    if failed:
        return 1
    print(f"✅ {suite}: {len(results)} checks passed, max deviation "
          f"{max((r.max_violation for r in results), default=0.0):.3e}")
    return 0


def cmd_stats(ctx: CommandContext) -> int:
    scene = build_scene(ctx.config.scene, ctx.config.seed)
    summary = _write_scene_stats(ctx, scene)
    print(summary.to_string(index=False))
    return 0


def elapsed_note(seconds: float) -> str:
    return f"finished in {format_duration(seconds)}"
