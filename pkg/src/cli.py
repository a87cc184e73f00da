#!/usr/bin/env python3
"""hemb 커맨드라인 엔트리 포인트

서브커맨드: gen-data, train, eval, clean, analyze
종료 코드: 0 성공, 2 설정 에러, 3 데이터 에러, 4 수치 에러, 1 예상치 못한 에러
"""
import json
import sys
from typing import List, Optional

from dotenv import load_dotenv

from .commands import build_registry
from .config import reload_settings
from .utils.logging import get_logger, setup_logging
from .utils.metrics import get_metrics

logger = get_logger(__name__)


def main(argv: Optional[List[str]] = None) -> int:
    # .env는 있으면 읽되 이미 설정된 환경 변수를 덮어쓰지 않음
    load_dotenv(".env", override=False)
    settings = reload_settings()

    registry = build_registry()
    parser = registry.build_parser("hemb", "Heteroscedastic triplet embedding experiments")
    args = parser.parse_args(argv)

    setup_logging(settings.log_level, settings.log_file, quiet=args.quiet)

    code, result = registry.execute(args.command, vars(args))
    get_metrics().log_summary()

    if code == 0:
        print(json.dumps(result, ensure_ascii=False, indent=2))
    else:
        print(json.dumps(result, ensure_ascii=False, indent=2), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
