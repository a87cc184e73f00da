"""버전 관리되는 리틀엔디언 바이너리 포맷 공용 코덱 (magic + version + 본문 + CRC32)"""
import struct
import zlib
from typing import Tuple

import numpy as np

from ..utils.errors import FormatError


class BinaryWriter:
    """헤더와 배열을 순서대로 기록하고 마지막에 CRC32를 붙임"""

    def __init__(self, magic: bytes, version: int):
        self._chunks = [magic, struct.pack("<I", version)]

    def u32(self, value: int) -> None:
        self._chunks.append(struct.pack("<I", value))

    def u64(self, value: int) -> None:
        self._chunks.append(struct.pack("<Q", value))

    def array(self, values: np.ndarray, dtype: str) -> None:
        self._chunks.append(np.ascontiguousarray(values, dtype=dtype).tobytes(order="C"))

    def getvalue(self) -> bytes:
        body = b"".join(self._chunks)
        return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


class BinaryReader:
    """BinaryWriter 형식 읽기: magic/CRC 검증 후 앞에서부터 순차 해석"""

    def __init__(self, data: bytes, magic: bytes, supported_versions: Tuple[int, ...], path: str = ""):
        self.path = path
        header_size = len(magic) + 4
        if len(data) < header_size + 4:
            raise FormatError("파일이 너무 짧습니다", offset=len(data), path=path)
        if data[:len(magic)] != magic:
            raise FormatError(f"magic 바이트가 {magic!r}가 아닙니다", offset=0, path=path)
        body, trailer = data[:-4], data[-4:]
        (expected,) = struct.unpack("<I", trailer)
        if zlib.crc32(body) & 0xFFFFFFFF != expected:
            raise FormatError("CRC32가 일치하지 않습니다", offset=len(body), path=path)
        self._data = body
        self._pos = len(magic)
        self.version = self.u32()
        if self.version not in supported_versions:
            raise FormatError(f"지원하지 않는 포맷 버전: {self.version}", offset=len(magic), path=path)

    @property
    def offset(self) -> int:
        return self._pos

    def _take(self, size: int) -> bytes:
        if self._pos + size > len(self._data):
            raise FormatError(f"{size}바이트를 읽을 수 없습니다 (잘린 파일)", offset=self._pos, path=self.path)
        chunk = self._data[self._pos:self._pos + size]
        self._pos += size
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self._take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self._take(8))[0]

    def array(self, count: int, dtype: str) -> np.ndarray:
        itemsize = np.dtype(dtype).itemsize
        raw = self._take(count * itemsize)
        return np.frombuffer(raw, dtype=dtype).copy()

    def finish(self) -> None:
        """본문을 모두 소비했는지 확인"""
        if self._pos != len(self._data):
            raise FormatError(f"해석되지 않은 {len(self._data) - self._pos}바이트가 남아 있습니다", offset=self._pos, path=self.path)
