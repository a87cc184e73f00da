"""에러 처리 유틸리티"""
from typing import Any, Dict, Optional
import logging
from functools import wraps

logger = logging.getLogger(__name__)

# CLI 종료 코드
EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


class HembError(Exception):
    """라이브러리 기본 에러"""
    exit_code = EXIT_UNEXPECTED

    def __init__(self, message: str, code: str = "HEMB_ERROR", details: Optional[Dict[str, Any]] = None):
        self.message = message
        self.code = code
        self.details = details or {}
        super().__init__(message)


class ConfigError(HembError):
    """설정 에러 (잘못된 설정 파일, 스케줄, 비율 등)"""
    exit_code = EXIT_CONFIG

    def __init__(self, message: str, field: Optional[str] = None, **details: Any):
        if field:
            details["field"] = field
        super().__init__(message, "CONFIG_ERROR", details)


class DataError(HembError):
    """데이터 에러"""
    exit_code = EXIT_DATA

    def __init__(self, message: str, code: str = "DATA_ERROR", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, code, details)


class FormatError(DataError):
    """바이너리/CSV 파일 형식 에러"""
    def __init__(self, message: str, offset: Optional[int] = None, path: Optional[str] = None):
        details: Dict[str, Any] = {}
        if offset is not None:
            details["offset"] = offset
        if path:
            details["path"] = path
        self.offset = offset
        super().__init__(
            f"{message} (byte offset {offset})" if offset is not None else message,
            "FORMAT_ERROR",
            details,
        )


class CapacityError(DataError):
    """배치를 구성할 샘플이 부족함"""
    def __init__(self, message: str, class_id: Optional[int] = None):
        self.class_id = class_id
        details = {"class_id": class_id} if class_id is not None else {}
        super().__init__(message, "CAPACITY_ERROR", details)


class InsufficientDataError(DataError):
    """분석에 필요한 샘플 수 부족"""
    def __init__(self, message: str, required: int, actual: int):
        super().__init__(message, "INSUFFICIENT_DATA", {"required": required, "actual": actual})


class EmptyReportError(DataError):
    """평가 가능한 쿼리가 하나도 없음"""
    def __init__(self, message: str, excluded: int = 0):
        super().__init__(message, "EMPTY_REPORT", {"excluded": excluded})


class ValidationError(HembError):
    """입력 검증 에러"""
    exit_code = EXIT_DATA

    def __init__(self, message: str, field: Optional[str] = None, code: str = "VALIDATION_ERROR"):
        details = {"field": field} if field else {}
        super().__init__(message, code, details)


class ShapeError(ValidationError):
    """배열 차원/길이 불일치"""
    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message, field, "SHAPE_ERROR")


class ArityError(ValidationError):
    """k-tuple 원소 수 부족"""
    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message, field, "ARITY_ERROR")


class ConstraintError(ValidationError):
    """순서/라벨 제약 위반"""
    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message, field, "CONSTRAINT_ERROR")


class TripletIndexError(ValidationError):
    """triplet이 배치 범위를 벗어난 인덱스를 참조함"""
    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message, field, "INDEX_ERROR")


class NumericalError(HembError):
    """수치 에러 (NaN/Inf 발생 등)"""
    exit_code = EXIT_NUMERICAL

    def __init__(self, message: str, code: str = "NUMERICAL_ERROR", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, code, details)


class InvalidInputError(NumericalError):
    """유한하지 않은 입력값"""
    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message, "INVALID_INPUT", {"field": field} if field else {})


class UndefinedCorrelationError(NumericalError):
    """분산이 0이라 상관계수를 정의할 수 없음"""
    def __init__(self, message: str, variable: str):
        super().__init__(message, "UNDEFINED_CORRELATION", {"variable": variable})


class ExcludedQueryError(HembError):
    """관련 항목이 없는 쿼리 (평가에서 제외해야 함)"""
    def __init__(self, message: str = "관련 항목이 없는 쿼리입니다"):
        super().__init__(message, "EXCLUDED_QUERY")


def exit_code_for(error: BaseException) -> int:
    """예외에 대응하는 CLI 종료 코드"""
    if isinstance(error, HembError):
        return error.exit_code
    return EXIT_UNEXPECTED


def error_response(error: Exception) -> Dict[str, Any]:
    """에러를 표준 응답 형식으로 변환"""
    if isinstance(error, HembError):
        return {
            "success": False,
            "error": {
                "code": error.code,
                "message": error.message,
                "details": error.details
            }
        }

    # 일반 예외
    logger.error(f"Unexpected error: {str(error)}", exc_info=True)
    return {
        "success": False,
        "error": {
            "code": "INTERNAL_ERROR",
            "message": "내부 오류가 발생했습니다",
            "details": {
                "type": type(error).__name__,
                "message": str(error)
            }
        }
    }


def handle_error(func):
    """커맨드 에러 처리 데코레이터: 예외를 (종료 코드, 에러 응답)으로 변환"""
    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return EXIT_OK, func(*args, **kwargs)
        except HembError as e:
            logger.error(f"{e.code} in {func.__name__}: {e.message}", extra={"context": e.details})
            return exit_code_for(e), error_response(e)
        except Exception as e:
            logger.error(f"Unexpected error in {func.__name__}: {str(e)}", exc_info=True)
            return exit_code_for(e), error_response(e)

    return wrapper
