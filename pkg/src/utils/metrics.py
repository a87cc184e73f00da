"""카운터 및 실행 시간 수집 유틸리티"""
import time
from typing import Dict, Any
from collections import defaultdict
from functools import wraps
import logging

logger = logging.getLogger(__name__)


class Metrics:
    """경고 카운터와 커맨드 실행 시간을 관리하는 클래스

    카운터는 건너뛴 triplet, 제외된 쿼리처럼 "경고와 함께 계수되는" 사건을 기록합니다.
    실험 결과 수치는 여기에 두지 않고 항상 리포트 파일로 내보냅니다.
    """

    def __init__(self):
        self.counters: Dict[str, int] = defaultdict(int)
        self.command_metrics = defaultdict(lambda: {
            "call_count": 0,
            "error_count": 0,
            "total_duration": 0.0,
        })

    def increment(self, name: str, amount: int = 1) -> None:
        """카운터 증가"""
        if amount:
            self.counters[name] += amount

    def count(self, name: str) -> int:
        """카운터 값 조회"""
        return self.counters.get(name, 0)

    def record_command(self, command_name: str, duration: float, success: bool) -> None:
        """커맨드 실행 기록"""
        metrics = self.command_metrics[command_name]
        metrics["call_count"] += 1
        metrics["total_duration"] += duration
        if not success:
            metrics["error_count"] += 1

    def get_metrics(self) -> Dict[str, Any]:
        """전체 메트릭 조회"""
        commands = {}
        for name, metrics in self.command_metrics.items():
            avg_duration = (
                metrics["total_duration"] / metrics["call_count"]
                if metrics["call_count"] > 0
                else 0
            )
            commands[name] = {
                "call_count": metrics["call_count"],
                "error_count": metrics["error_count"],
                "avg_duration": f"{avg_duration:.3f}s",
            }
        return {"counters": dict(sorted(self.counters.items())), "commands": commands}

    def log_summary(self) -> None:
        """카운터 요약을 로그로 남김"""
        for name, value in sorted(self.counters.items()):
            logger.info(f"counter {name} = {value}")

    def reset(self):
        """메트릭 초기화"""
        self.counters.clear()
        self.command_metrics.clear()


# 전역 메트릭 인스턴스
_metrics = Metrics()


def get_metrics() -> Metrics:
    """전역 메트릭 인스턴스"""
    return _metrics


def count_warning(name: str, amount: int = 1) -> None:
    """계수되는 경고 기록"""
    _metrics.increment(name, amount)


def track_execution(command_name: str):
    """커맨드 실행 추적 데코레이터"""
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            start_time = time.time()
            success = False
            try:
                result = func(*args, **kwargs)
                success = True
                return result
            finally:
                _metrics.record_command(command_name, time.time() - start_time, success)

        return wrapper
    return decorator


def reset_global_metrics():
    """전역 메트릭 초기화"""
    _metrics.reset()
