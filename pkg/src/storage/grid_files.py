"""
Binary grid container and CSV tables.

Container layout, all little-endian:

    b"LZSM" | version u32 | n_eps u32 | n_A u32 | flag u8 (0 real, 1 complex)
    | first axis f8[n_eps] | second axis f8[n_A] | values f8[n_eps * n_A (* 2)]
    | metadata length u32 | metadata (UTF-8 JSON)

Values are row-major with eps0 (tau_eps) as the slow index; complex values
are interleaved (re, im). The metadata carries the full run configuration.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.analysis.grids import PatternGrid, SpectrumGrid
from src.core.errors import LZSMError
from src.observability.logger import setup_logger

logger = setup_logger("grid_files")

MAGIC = b"LZSM"
FORMAT_VERSION = 1
REAL, COMPLEX = 0, 1

PathLike = Union[str, Path]


class GridFormatError(LZSMError, ValueError):
    """File is not a readable grid container"""


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def _encode(first: np.ndarray, second: np.ndarray, values: np.ndarray, flag: int, metadata: Dict) -> bytes:
    header = np.array([FORMAT_VERSION, first.size, second.size], dtype="<u4").tobytes()
    if flag == COMPLEX:
        payload = np.ascontiguousarray(values, dtype="<c16").view("<f8")
    else:
        payload = np.ascontiguousarray(values, dtype="<f8")
    meta = json.dumps(metadata, default=_json_default).encode("utf-8")
    return b"".join([
        MAGIC,
        header,
        np.array([flag], dtype="u1").tobytes(),
        np.asarray(first, dtype="<f8").tobytes(),
        np.asarray(second, dtype="<f8").tobytes(),
        payload.tobytes(),
        np.array([len(meta)], dtype="<u4").tobytes(),
        meta,
    ])


def _decode(data: bytes, source: str) -> Tuple[np.ndarray, np.ndarray, np.ndarray, int, Dict]:
    if data[:4] != MAGIC:
        raise GridFormatError(f"{source}: not an LZSM grid file")
    try:
        version, n1, n2 = np.frombuffer(data, dtype="<u4", count=3, offset=4)
        if version != FORMAT_VERSION:
            raise GridFormatError(f"{source}: unsupported format version {version}")
        flag = int(np.frombuffer(data, dtype="u1", count=1, offset=16)[0])
        if flag not in (REAL, COMPLEX):
            raise GridFormatError(f"{source}: bad payload flag {flag}")

        offset = 17
        first = np.frombuffer(data, dtype="<f8", count=n1, offset=offset).copy()
        offset += 8 * int(n1)
        second = np.frombuffer(data, dtype="<f8", count=n2, offset=offset).copy()
        offset += 8 * int(n2)

        count = int(n1) * int(n2) * (2 if flag == COMPLEX else 1)
        raw = np.frombuffer(data, dtype="<f8", count=count, offset=offset).copy()
        offset += 8 * count
        values = raw.view("<c16") if flag == COMPLEX else raw
        values = values.reshape(int(n1), int(n2)).astype(complex if flag == COMPLEX else float)

        (length,) = np.frombuffer(data, dtype="<u4", count=1, offset=offset)
        offset += 4
        metadata = json.loads(data[offset:offset + int(length)].decode("utf-8"))
    except GridFormatError:
        raise
    except (ValueError, json.JSONDecodeError) as e:
        raise GridFormatError(f"{source}: truncated or corrupt grid file ({e})") from e
    return first, second, values, flag, metadata


def write_pattern(path: PathLike, grid: PatternGrid) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(_encode(grid.eps, grid.amp, grid.values, REAL, grid.metadata))
    logger.info("pattern_written", file=str(path), shape=list(grid.values.shape))
    return path


def read_pattern(path: PathLike) -> PatternGrid:
    path = Path(path)
    eps, amp, values, flag, metadata = _decode(path.read_bytes(), str(path))
    if flag != REAL:
        raise GridFormatError(f"{path}: holds a complex spectrum, not a pattern")
    return PatternGrid(eps, amp, values, metadata)


def write_spectrum(path: PathLike, spec: SpectrumGrid) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    flag = COMPLEX if np.iscomplexobj(spec.values) else REAL
    path.write_bytes(_encode(spec.tau_eps, spec.tau_amp, spec.values, flag, spec.metadata))
    logger.info("spectrum_written", file=str(path), shape=list(spec.values.shape))
    return path


def read_spectrum(path: PathLike) -> SpectrumGrid:
    path = Path(path)
    tau_eps, tau_amp, values, _, metadata = _decode(path.read_bytes(), str(path))
    return SpectrumGrid(tau_eps, tau_amp, values, metadata)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def write_table(path: PathLike, frame: pd.DataFrame, comments: Optional[Sequence[str]] = None) -> Path:
    """
    CSV with an optional '#' comment block (the run config) above the
    header line.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        for line in comments or []:
            f.write(line if line.startswith("#") else f"# {line}")
            f.write("\n")
        frame.to_csv(f, index=False, float_format="%.12g")
    logger.info("table_written", file=str(path), rows=len(frame))
    return path


def read_table(path: PathLike) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def pattern_frame(grid: PatternGrid) -> pd.DataFrame:
    """Long format, one row per grid point; blank-line free for gnuplot 'with image'"""
    eps, amp = np.meshgrid(grid.eps, grid.amp, indexing="ij")
    return pd.DataFrame({
        "eps0": eps.ravel(),
        "A": amp.ravel(),
        "p_ex": grid.values.ravel(),
    })


def spectrum_frame(spec: SpectrumGrid) -> pd.DataFrame:
    tau_eps, tau_amp = np.meshgrid(spec.tau_eps, spec.tau_amp, indexing="ij")
    return pd.DataFrame({
        "tau_eps": tau_eps.ravel(),
        "tau_A": tau_amp.ravel(),
        "abs_W": np.abs(spec.values).ravel(),
        "re_W": spec.values.real.ravel(),
        "im_W": np.imag(spec.values).ravel(),
    })


def metadata_lines(metadata: Dict[str, Any]) -> List[str]:
    pretty = json.dumps(metadata, indent=2, sort_keys=True, default=_json_default)
    return [f"# {line}" for line in pretty.splitlines()]
