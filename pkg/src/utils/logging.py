"""로깅 유틸리티

모든 로그는 stderr(와 선택적 파일)로 갑니다. stdout은 커맨드의 JSON 요약 전용입니다.
"""
import logging
import sys
import time
from functools import wraps
from typing import Any, Dict, Optional

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s%(context_text)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


class ContextFormatter(logging.Formatter):
    """extra={"context": {...}} 로 전달된 값을 메시지 뒤에 key=value 로 붙이는 포매터"""

    def format(self, record: logging.LogRecord) -> str:
        context = getattr(record, "context", None)
        items = context.items() if isinstance(context, dict) else ()
        record.context_text = " [" + " ".join(f"{k}={_short(v)}" for k, v in items) + "]" if items else ""
        return super().format(record)


def _short(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, (list, tuple)) and len(value) > 8:
        return f"[{len(value)} items]"
    return str(value)


def resolve_level(level: str, quiet: bool = False) -> int:
    """레벨 이름 → logging 상수 (알 수 없는 이름은 INFO, quiet이면 최소 WARNING)"""
    resolved = getattr(logging, str(level).upper(), None)
    if not isinstance(resolved, int):
        resolved = logging.INFO
    return max(resolved, logging.WARNING) if quiet else resolved


def setup_logging(level: str = "INFO", log_file: Optional[str] = None, quiet: bool = False) -> None:
    """루트 로거 초기화 (반복 호출해도 핸들러가 쌓이지 않음)"""
    log_level = resolve_level(level, quiet)
    formatter = ContextFormatter(LOG_FORMAT, datefmt=DATE_FORMAT)

    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))

    root_logger = logging.getLogger()
    for handler in list(root_logger.handlers):
        root_logger.removeHandler(handler)
        handler.close()
    root_logger.setLevel(log_level)
    for handler in handlers:
        handler.setFormatter(formatter)
        handler.setLevel(log_level)
        root_logger.addHandler(handler)


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)


def _summarize_arguments(arguments: Dict[str, Any]) -> Dict[str, Any]:
    """커맨드 인자 중 로그에 남길 스칼라/짧은 목록만 추림 (None은 생략)"""
    summary = {}
    for key, value in arguments.items():
        if value is None:
            continue
        if isinstance(value, (str, int, float, bool)):
            summary[key] = value
        elif isinstance(value, (list, tuple)):
            summary[key] = list(value)
    return summary


def log_command(command_name: str):
    """서브커맨드 시작/완료/실패와 소요 시간을 기록하는 데코레이터"""
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            logger = get_logger(func.__module__)
            logger.info(f"{command_name}: started", extra={"context": _summarize_arguments(kwargs)})
            started = time.perf_counter()
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                logger.error(
                    f"{command_name}: failed after {time.perf_counter() - started:.2f}s",
                    extra={"context": {"error": type(e).__name__}},
                )
                raise
            logger.info(f"{command_name}: done in {time.perf_counter() - started:.2f}s")
            return result

        return wrapper
    return decorator


class LogContext:
    """오래 걸리는 단계(학습 루프, 정제 스윕)의 시작/종료 로깅

    단계 도중 update()로 넣은 값은 종료 로그에 함께 기록됩니다.
    """

    def __init__(self, logger: logging.Logger, operation: str, **context: Any):
        self.logger = logger
        self.operation = operation
        self.context = dict(context)
        self.results: Dict[str, Any] = {}
        self._started = 0.0

    def update(self, **values: Any) -> None:
        self.results.update(values)

    def __enter__(self) -> "LogContext":
        self._started = time.perf_counter()
        self.logger.info(f"{self.operation}: starting", extra={"context": self.context})
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> bool:
        elapsed = time.perf_counter() - self._started
        if exc_type is not None:
            self.logger.error(
                f"{self.operation}: failed after {elapsed:.2f}s",
                extra={"context": {**self.results, "error": exc_type.__name__}},
            )
        else:
            self.logger.info(f"{self.operation}: finished in {elapsed:.2f}s", extra={"context": self.results})
        return False
