"""CLI 커맨드 모듈

각 커맨드는 (설정, 입력 파일, 시드)의 순수 함수로 결과 파일을 쓰고 요약 dict를 반환합니다.
"""
import argparse

from .analyze import cmd_analyze
from .clean import cmd_clean
from .data import cmd_gen_data
from .evaluate import cmd_eval
from .registry import CommandRegistry
from .train import cmd_train


def _config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="실험 설정 JSON 경로 (없으면 기본값)")


def _model_args(parser: argparse.ArgumentParser) -> None:
    _config_args(parser)
    parser.add_argument("--data", required=True, help="데이터셋 파일 (HDST)")
    parser.add_argument("--model", required=True, help="모델 파일 (HEMB)")
    parser.add_argument("--out", help="출력 디렉터리 (기본값: config.output_dir 또는 현재 디렉터리)")
    parser.add_argument("--threads", type=int, help="평가 워커 수 (기본값: HEMB_THREADS 또는 1)")


def _configure_gen_data(parser: argparse.ArgumentParser) -> None:
    _config_args(parser)
    parser.add_argument("--out", help="데이터셋 출력 경로 (기본값: <output_dir>/dataset.hdst)")
    parser.add_argument("--seed", type=int, help="시드 (설정보다 우선)")
    parser.add_argument("--csv", help="CSV로도 내보낼 경로")


def _configure_train(parser: argparse.ArgumentParser) -> None:
    _config_args(parser)
    parser.add_argument("--data", required=True, help="데이터셋 파일 (HDST)")
    parser.add_argument("--out", help="모델 출력 경로 (기본값: <output_dir>/model.hemb)")
    parser.add_argument("--seed", type=int, help="시드 (설정보다 우선)")
    parser.add_argument("--resume", help="이어서 학습할 모델 파일")
    parser.add_argument("--clean-only", action="store_true", help="뒤집힌 라벨 샘플을 빼고 학습")


def _configure_eval(parser: argparse.ArgumentParser) -> None:
    _model_args(parser)
    parser.add_argument("--k", type=int, nargs="+", help="top-k 목록 (설정보다 우선)")
    parser.add_argument("--leave-one-out", action="store_true", help="gallery split 내 leave-one-out 평가")


def _configure_clean(parser: argparse.ArgumentParser) -> None:
    _model_args(parser)
    parser.add_argument("--seed", type=int, help="random 전략 시드 하나만 사용")


def _configure_analyze(parser: argparse.ArgumentParser) -> None:
    _model_args(parser)


def build_registry() -> CommandRegistry:
    """모든 서브커맨드를 등록한 레지스트리"""
    registry = CommandRegistry()
    registry.register("gen-data", "합성 데이터셋 생성", cmd_gen_data, _configure_gen_data)
    registry.register("train", "인코더 학습", cmd_train, _configure_train)
    registry.register("eval", "검색 평가 (mAP, top-k)", cmd_eval, _configure_eval)
    registry.register("clean", "불확실성 기반 정제 실험", cmd_clean, _configure_clean)
    registry.register("analyze", "불확실성 분석 리포트", cmd_analyze, _configure_analyze)
    return registry


__all__ = [
    "CommandRegistry",
    "build_registry",
    "cmd_gen_data",
    "cmd_train",
    "cmd_eval",
    "cmd_clean",
    "cmd_analyze",
]
