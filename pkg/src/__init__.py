"""Heteroscedastic triplet embedding: 학습, 검색 평가, 불확실성 분석"""

__version__ = "0.1.0"
