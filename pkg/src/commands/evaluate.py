"""eval 커맨드: 검색 평가 리포트"""
from typing import Any, Dict, List, Optional

from ..hetero.evaluation import evaluate, leave_one_out_evaluate, retrieval_examples
from ..schemas.reports import RetrievalReport
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


def per_query_rows(report: RetrievalReport) -> List[Dict[str, Any]]:
    """쿼리별 CSV 행 (top-k 적중은 hit@k 열로 펼침)"""
    rows = []
    for q in report.per_query:
        row: Dict[str, Any] = {"query_id": q.query_id, "label": q.label, "ap": q.ap, "s": q.s}
        for k, hit in sorted(q.top_k_hits.items()):
            row[f"hit@{k}"] = int(hit)
        rows.append(row)
    return rows


def summarize(report: RetrievalReport) -> Dict[str, Any]:
    return {
        "micro_map": report.micro_map,
        "macro_map": report.macro_map,
        "top_k_accuracy": {str(k): v for k, v in report.top_k_accuracy.items()},
        "macro_top_k_accuracy": {str(k): v for k, v in report.macro_top_k_accuracy.items()},
        "queries": len(report.per_query),
        "excluded_queries": report.excluded_queries,
    }


@log_command("eval")
@track_execution("eval")
def cmd_eval(
    config: Optional[str] = None,
    data: Optional[str] = None,
    model: Optional[str] = None,
    out: Optional[str] = None,
    k: Optional[List[int]] = None,
    leave_one_out: bool = False,
    threads: Optional[int] = None,
) -> Dict[str, Any]:
    """query split으로 gallery split을 검색해 평가 (leave_one_out이면 gallery split 내부 평가)"""
    experiment = load_experiment_config(config)
    ks = sorted(set(k)) if k else experiment.eval.ks
    workers = resolve_threads(threads)
    params = load_trained_model(model)
    dataset = load_dataset(data)
    s_bounds = (experiment.train.s_min, experiment.train.s_max)

    gallery = embed_split(params, dataset, "gallery", s_bounds)
    loo = leave_one_out or experiment.eval.leave_one_out
    if loo:
        report = leave_one_out_evaluate(gallery, ks, threads=workers)
        examples = retrieval_examples(gallery, gallery, exclude_self=True)
    else:
        query = embed_split(params, dataset, "query", s_bounds)
        report = evaluate(query, gallery, ks, threads=workers)
        examples = retrieval_examples(query, gallery)

    directory = output_dir(out, experiment)
    report_path = write_json(directory / "retrieval_report.json", report)
    write_csv(directory / "per_query.csv", per_query_rows(report))
    write_json(directory / "retrieval_examples.json", examples)

    return {
        "success": True,
        "command": "eval",
        "protocol": "leave_one_out" if loo else "query_gallery",
        "report": str(report_path),
        **summarize(report),
    }
