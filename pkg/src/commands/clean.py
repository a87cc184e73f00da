"""clean 커맨드: 갤러리 정제와 쿼리 제거 곡선"""
from typing import Any, Dict, List, Optional

import numpy as np

from ..hetero.evaluation import evaluate
from ..hetero.uncertainty import clean_gallery, drop_query_experiment
from ..schemas.reports import CleaningReport, CleaningResult
from ..utils.logging import LogContext, get_logger, log_command
from ..utils.metrics import track_execution
from .helpers import (
    embed_split,
    load_dataset,
    load_experiment_config,
    load_trained_model,
    output_dir,
    resolve_threads,
    write_csv,
    write_json,
)

logger = get_logger(__name__)


def gallery_rows(results: List[CleaningResult]) -> List[Dict[str, Any]]:
    return [
        {
            "strategy": r.strategy,
            "seed": r.seed if r.seed is not None else "",
            "drop_fraction": r.drop_fraction,
            "map_before": r.map_before,
            "map_after": r.map_after,
            "dropped": len(r.dropped_ids),
            "emptied_classes": len(r.emptied_classes),
        }
        for r in results
    ]


def summarize_gallery(results: List[CleaningResult]) -> Dict[str, float]:
    """전략별 평균 map_after와 정제 전 mAP"""
    summary: Dict[str, float] = {"map_before": results[0].map_before}
    for strategy in ("by_uncertainty", "random"):
        values = [r.map_after for r in results if r.strategy == strategy]
        if values:
            summary[f"{strategy}_map_after"] = float(np.mean(values))
    return summary


@log_command("clean")
@track_execution("clean")
def cmd_clean(
    config: Optional[str] = None,
    data: Optional[str] = None,
    model: Optional[str] = None,
    out: Optional[str] = None,
    seed: Optional[int] = None,
    threads: Optional[int] = None,
) -> Dict[str, Any]:
    """갤러리 정제(전략 × 시드)와 쿼리 제거 곡선을 계산해 JSON/CSV로 저장

    --seed를 주면 random 전략 시드 목록 대신 그 시드 하나만 사용합니다.
    """
    experiment = load_experiment_config(config)
    cleaning = experiment.cleaning
    ks = experiment.eval.ks
    seeds = [seed] if seed is not None else list(cleaning.seeds)
    workers = resolve_threads(threads)

    params = load_trained_model(model)
    dataset = load_dataset(data)
    s_bounds = (experiment.train.s_min, experiment.train.s_max)
    query = embed_split(params, dataset, "query", s_bounds)
    gallery = embed_split(params, dataset, "gallery", s_bounds)

    with LogContext(logger, "cleaning sweep", strategies=list(cleaning.strategies), seeds=seeds) as sweep:
        map_before = evaluate(query, gallery, ks, threads=workers).micro_map
        results: List[CleaningResult] = []
        for strategy in cleaning.strategies:
            runs = [None] if strategy == "by_uncertainty" else seeds
            for run_seed in runs:
                results.append(clean_gallery(
                    query, gallery, cleaning.gallery_fraction, strategy, run_seed, ks, map_before=map_before,
                ))
        curve = drop_query_experiment(query, gallery, cleaning.query_fractions, cleaning.strategies, seeds, ks)
        sweep.update(map_before=map_before, gallery_runs=len(results), curve_points=len(curve))

    report = CleaningReport(gallery=results, query_curve=curve, summary=summarize_gallery(results))
    directory = output_dir(out, experiment)
    report_path = write_json(directory / "cleaning_report.json", report)
    write_csv(directory / "gallery_cleaning.csv", gallery_rows(results))
    write_csv(directory / "query_curve.csv", [
        {**point.model_dump(), "seed": point.seed if point.seed is not None else ""} for point in curve
    ])

    return {
        "success": True,
        "command": "clean",
        "report": str(report_path),
        "gallery_fraction": cleaning.gallery_fraction,
        **report.summary,
    }
