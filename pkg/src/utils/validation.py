"""입력 검증 유틸리티"""
from typing import Any, Optional, Sequence

import numpy as np

from .errors import ConfigError, InvalidInputError, ShapeError


def as_vector(value: Any, field: str, length: Optional[int] = None) -> np.ndarray:
    """1차원 float64 배열로 변환 및 길이 검증

    Args:
        value: 변환할 값 (list, tuple, ndarray)
        field: 에러 메시지에 사용할 필드 이름
        length: 기대 길이 (None이면 검사하지 않음)

    Returns:
        검증된 1차원 배열
    """
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"1차원 벡터여야 합니다: {field} (ndim={arr.ndim})", field)
    if length is not None and arr.shape[0] != length:
        raise ShapeError(f"길이가 맞지 않습니다: {field} ({arr.shape[0]} != {length})", field)
    return arr


def as_matrix(value: Any, field: str, cols: Optional[int] = None) -> np.ndarray:
    """2차원 float64 배열로 변환 및 열 수 검증"""
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, cols or 0)
    if arr.ndim != 2:
        raise ShapeError(f"2차원 행렬이어야 합니다: {field} (ndim={arr.ndim})", field)
    if cols is not None and arr.shape[1] != cols:
        raise ShapeError(f"열 수가 맞지 않습니다: {field} ({arr.shape[1]} != {cols})", field)
    return arr


def require_same_length(field: str, *arrays: Sequence[Any]) -> int:
    """모든 배열의 길이가 같은지 검증하고 그 길이를 반환"""
    lengths = {len(a) for a in arrays}
    if len(lengths) > 1:
        raise ShapeError(f"길이가 서로 다릅니다: {field} {sorted(lengths)}", field)
    return lengths.pop() if lengths else 0


def require_finite(value: Any, field: str) -> None:
    """NaN/Inf 값 거부"""
    if not np.all(np.isfinite(value)):
        raise InvalidInputError(f"유한한 값이어야 합니다: {field}", field)


def require_fraction(value: float, field: str, low: float = 0.0, high: float = 1.0, inclusive_high: bool = True) -> float:
    """비율 범위 검증"""
    ok = low <= value <= high if inclusive_high else low <= value < high
    if not ok:
        bracket = "]" if inclusive_high else ")"
        raise ConfigError(f"값이 범위를 벗어났습니다: {field}={value} (허용 [{low}, {high}{bracket})", field)
    return float(value)
