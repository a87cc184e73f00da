"""설정 관리"""

from typing import Optional
from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field


class Settings(BaseSettings):
    """프로세스 설정 (환경 변수 HEMB_* 및 .env)"""

    model_config = SettingsConfigDict(
        env_prefix="HEMB_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # 로깅 설정
    log_level: str = Field("INFO", description="로그 레벨")
    log_file: Optional[str] = Field(None, description="로그 파일 경로")

    # 재현성 설정
    seed: Optional[int] = Field(None, ge=0, description="가장 낮은 우선순위의 시드 (HEMB_SEED)")

    # 성능 설정
    threads: int = Field(1, ge=1, description="평가 워커 수 (1이면 완전 결정적 순차 실행)")

    def resolve_seed(self, *candidates: Optional[int]) -> int:
        """시드 우선순위 결정: 앞쪽 후보가 우선, 모두 None이면 HEMB_SEED, 그것도 없으면 0"""
        for candidate in candidates:
            if candidate is not None:
                return int(candidate)
        if self.seed is not None:
            return int(self.seed)
        return 0


# 전역 설정 인스턴스
_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """설정 인스턴스 가져오기 (싱글톤)"""
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings


def reload_settings() -> Settings:
    """설정 다시 로드"""
    global _settings
    _settings = Settings()
    return _settings
