"""CLI 서브커맨드 레지스트리"""
import argparse
import logging
from typing import Any, Callable, Dict, List, Optional, Tuple

from ..utils.errors import handle_error

logger = logging.getLogger(__name__)

# 커맨드 함수 인자로 넘기지 않는 argparse 속성
_RESERVED = ("command", "quiet")


class CommandRegistry:
    """서브커맨드 관리를 위한 레지스트리"""

    def __init__(self):
        self.commands: Dict[str, Dict[str, Any]] = {}
        self.handlers: Dict[str, Callable[..., Dict[str, Any]]] = {}

    def register(
        self,
        name: str,
        description: str,
        handler: Callable[..., Dict[str, Any]],
        configure: Optional[Callable[[argparse.ArgumentParser], None]] = None,
    ):
        """커맨드 등록

        Args:
            name: 서브커맨드 이름
            description: 도움말 설명
            handler: 키워드 인자를 받아 요약 dict를 반환하는 함수
            configure: 서브커맨드 전용 인자를 추가하는 함수
        """
        if name in self.commands:
            raise ValueError(f"Command already registered: {name}")

        self.commands[name] = {
            "name": name,
            "description": description,
            "configure": configure,
        }
        self.handlers[name] = handler

        logger.debug(f"Registered command: {name}")

    def build_parser(self, prog: str, description: str) -> argparse.ArgumentParser:
        """등록된 커맨드로 argparse 파서 구성"""
        parser = argparse.ArgumentParser(prog=prog, description=description)
        subparsers = parser.add_subparsers(dest="command", required=True)
        for command in self.commands.values():
            sub = subparsers.add_parser(command["name"], help=command["description"], description=command["description"])
            sub.add_argument("--quiet", action="store_true", help="경고 이상만 로그 출력")
            if command["configure"]:
                command["configure"](sub)
        return parser

    def execute(self, name: str, arguments: Dict[str, Any]) -> Tuple[int, Dict[str, Any]]:
        """커맨드 실행

        Returns:
            (종료 코드, 요약 또는 에러 응답)

        Raises:
            ValueError: 커맨드를 찾을 수 없을 때
        """
        if name not in self.handlers:
            raise ValueError(f"Command not found: {name}")

        kwargs = {key: value for key, value in arguments.items() if key not in _RESERVED}
        return handle_error(self.handlers[name])(**kwargs)

    def has_command(self, name: str) -> bool:
        """커맨드 존재 여부 확인"""
        return name in self.commands

    def list_commands(self) -> List[str]:
        return list(self.commands)
