"""데이터 스키마 및 타입 정의"""
from .config import (
    MarginMode, LrSchedule, TrainConfig, GeneratorConfig,
    EvalConfig, CleaningConfig, ExperimentConfig,
)
from .reports import (
    QueryResult, RetrievalReport, RetrievalExample, UncertaintyBins,
    CorrelationBucket, CorrelationResult, CleaningResult, DropCurvePoint,
    NoiseRanking, ClassDiagnostic, ProjectionPoint, AnalysisReport, CleaningReport, TraceRow,
)

__all__ = [
    # Config
    'MarginMode', 'LrSchedule', 'TrainConfig', 'GeneratorConfig',
    'EvalConfig', 'CleaningConfig', 'ExperimentConfig',
    # Reports
    'QueryResult', 'RetrievalReport', 'RetrievalExample', 'UncertaintyBins',
    'CorrelationBucket', 'CorrelationResult', 'CleaningResult', 'DropCurvePoint',
    'NoiseRanking', 'ClassDiagnostic', 'ProjectionPoint', 'AnalysisReport', 'CleaningReport', 'TraceRow',
]
