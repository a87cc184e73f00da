"""analyze 커맨드: 불확실성 구간, AP–불확실성 상관, 노이즈 순위, 클래스별 진단, 쿼리 임베딩 PCA 투영"""
from typing import Any, Dict, Optional

from ..hetero.evaluation import evaluate
from ..hetero.uncertainty import (
    ap_uncertainty_correlation,
    bin_by_uncertainty,
    class_diagnostics,
    project_split,
    rank_training_noise,
)
from ..schemas.reports import AnalysisReport
from ..utils.errors import InsufficientDataError, UndefinedCorrelationError
from ..utils.logging import get_logger, log_command
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


@log_command("analyze")
@track_execution("analyze")
def cmd_analyze(
    config: Optional[str] = None,
    data: Optional[str] = None,
    model: Optional[str] = None,
    out: Optional[str] = None,
    threads: Optional[int] = None,
) -> Dict[str, Any]:
    """쿼리 s 구간화와 상관 분석, train split 노이즈 순위, 클래스별 진단을 하나의 리포트로 저장"""
    experiment = load_experiment_config(config)
    cleaning = experiment.cleaning
    workers = resolve_threads(threads)

    params = load_trained_model(model)
    dataset = load_dataset(data)
    s_bounds = (experiment.train.s_min, experiment.train.s_max)
    query = embed_split(params, dataset, "query", s_bounds)
    gallery = embed_split(params, dataset, "gallery", s_bounds)
    train_split = embed_split(params, dataset, "train", s_bounds)

    report = evaluate(query, gallery, experiment.eval.ks, threads=workers)
    bins = bin_by_uncertainty([q.s for q in report.per_query])

    correlation = None
    correlation_error = None
    try:
        correlation = ap_uncertainty_correlation(report)
    except (UndefinedCorrelationError, InsufficientDataError) as e:
        # 리포트의 나머지 섹션은 그대로 출력
        logger.warning(f"Correlation skipped: {e.message}")
        correlation_error = e.message

    train_mask = dataset.split("train").noise_mask
    top_n = max(1, round(cleaning.noise_top_fraction * len(train_split)))
    ranking = rank_training_noise(
        train_split.ids,
        train_split.labels,
        train_split.log_variances,
        top_n,
        noise_mask=train_mask,
        per_class_top=cleaning.per_class_top,
    )
    per_class = class_diagnostics(train_split.labels, train_split.log_variances, report)

    analysis = AnalysisReport(
        uncertainty_bins=bins,
        correlation=correlation,
        correlation_error=correlation_error,
        noise_ranking=ranking,
        per_class=per_class,
        micro_map=report.micro_map,
        macro_map=report.macro_map,
    )
    directory = output_dir(out, experiment)
    report_path = write_json(directory / "analysis_report.json", analysis)
    if correlation is not None:
        write_csv(directory / "correlation_buckets.csv", correlation.buckets)
    write_csv(directory / "class_diagnostics.csv", per_class)
    projection_path = write_csv(directory / "query_projection.csv", project_split(query))

    return {
        "success": True,
        "command": "analyze",
        "report": str(report_path),
        "projection": str(projection_path),
        "pearson_r": correlation.pearson_r if correlation is not None else None,
        "bin_counts": bins.counts,
        "noise_precision_at_n": ranking.precision_at_n,
        "noise_base_rate": ranking.base_rate,
        "top_n": ranking.top_n,
        "micro_map": report.micro_map,
        "macro_map": report.macro_map,
    }
