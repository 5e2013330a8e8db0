"""
Machine-readable run reports and table writers.

Reports are pydantic models dumped through ``simplejson`` with every float
rendered to 17 significant digits, so identical runs give identical bytes.
CSV tables use the same number format and are replaced atomically.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import tempfile
from decimal import Decimal
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import simplejson
from pydantic import BaseModel, Field

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 17
DISCREPANCY_FACTOR = 10.0


class InputEcho(BaseModel):
    """
    Parameters the run was computed for.
    """
    spec_hash: str = Field(..., description="SHA-256 of the canonical network JSON.")
    n: int = Field(..., description="Number of generator buses.")
    edges: int = Field(..., description="Number of transmission lines.")
    inertia: float = Field(..., description="Homogeneous inertia M.")
    damping: float = Field(..., description="Homogeneous damping D.")
    kappa: float = Field(1.0, description="Frequency weight of the combined output.")
    bus_susceptance: float = Field(0.0, description="Susceptance of the infinite-bus tie on node 0.")


class ModeReport(BaseModel):
    """
    Poles of one Laplacian mode.
    """
    index: int = Field(..., description="1-based mode index in ascending eigenvalue order.")
    eigenvalue: float = Field(..., description="Laplacian eigenvalue lambda_i.")
    poles: List[List[float]] = Field(..., description="Two poles as [real, imag] pairs.")
    damping_ratio: Optional[float] = Field(None, description="D / (2 sqrt(M lambda_i)); absent for lambda_i = 0.")
    natural_frequency: float = Field(..., description="sqrt(lambda_i / M).")


class EigenAnalysis(BaseModel):
    modes: List[ModeReport] = Field(default_factory=list)
    zeta_min: Optional[float] = Field(None, description="Smallest modal damping ratio (closed form).")
    zeta_min_numeric: Optional[float] = Field(None, description="Smallest damping ratio of the dense eigensolver poles.")
    pole_match_error: Optional[float] = Field(None, description="Largest closed-form vs dense pole distance.")


class NormReport(BaseModel):
    """
    Closed-form and oracle value of one norm.
    """
    closed_form: Optional[float] = Field(None, description="Closed-form value, absent when none exists.")
    regime: str = Field("not-applicable", description="Branch of the closed form that applied.")
    source: Optional[str] = Field(None, description="Closed-form identifier.")
    annotations: Dict[str, float] = Field(default_factory=dict, description="Alternative closed-form values.")
    oracle: Optional[float] = Field(None, description="Numerical oracle value.")
    oracle_tolerance: Optional[float] = Field(None, description="Absolute tolerance of the oracle value.")
    argmax_omega: Optional[float] = Field(None, description="Frequency of the H-infinity peak.")
    governing_mode: Optional[int] = Field(None, description="Mode attaining the H-infinity peak.")
    discrepancy: bool = Field(False, description="Closed form and oracle differ by more than 10x the tolerance.")
    known_discrepancy: bool = Field(False, description="The discrepancy is the documented n vs n-1 phase H2 gap.")


class OutputReport(BaseModel):
    output: str = Field(..., description="Output kind.")
    h2: NormReport
    hinf: NormReport


class RunReport(BaseModel):
    """
    Top-level report printed to stdout by every subcommand.
    """
    command: str = Field(..., description="Subcommand that produced the report.")
    input: Optional[InputEcho] = None
    eigen: Optional[EigenAnalysis] = None
    norms: List[OutputReport] = Field(default_factory=list)
    artifacts: Dict[str, str] = Field(default_factory=dict, description="Files written by the run.")
    details: Dict[str, Any] = Field(default_factory=dict, description="Subcommand-specific values.")

    def discrepancies(self, *, allow_known: bool = False) -> List[str]:
        """Names of the norms whose discrepancy flag fired."""
        flagged = []
        for entry in self.norms:
            for name, norm in (("h2", entry.h2), ("hinf", entry.hinf)):
                if norm.discrepancy and not (allow_known and norm.known_discrepancy):
                    flagged.append(f"{entry.output}.{name}")
        return flagged


def is_discrepant(closed: Optional[float], oracle: Optional[float], tolerance: Optional[float]) -> bool:
    if closed is None or oracle is None or tolerance is None:
        return False
    return abs(closed - oracle) > DISCREPANCY_FACTOR * tolerance


# ------------------------------------------------------------------ numbers
def format_number(value: float, digits: int = SIGNIFICANT_DIGITS) -> str:
    return format(float(value), f".{digits}g")


def _decimalize(value: Any, digits: int) -> Any:
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            return None
        return Decimal(format_number(value, digits))
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {str(k): _decimalize(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_decimalize(v, digits) for v in value]
    return value


def dumps_json(payload: Any, *, indent: Optional[int] = 2, digits: int = SIGNIFICANT_DIGITS) -> str:
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="python")
    return simplejson.dumps(
        _decimalize(payload, digits), use_decimal=True, sort_keys=True, indent=indent, ensure_ascii=False
    )


def dumps_report(report: RunReport, digits: int = SIGNIFICANT_DIGITS) -> str:
    return dumps_json(report, digits=digits)


# -------------------------------------------------------------------- files
def atomic_write_text(path: str | Path, text: str) -> Path:
    """Write ``text`` to a temp file next to ``path`` and rename it into place."""
    out_path = Path(path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(prefix=f".{out_path.name}.", suffix=".tmp", dir=out_path.parent, text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp_path, out_path)
    except Exception:
        try:
            os.remove(tmp_path)
        except OSError:
            pass
        raise
    return out_path


def _cell(value: Any, digits: int) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, float):
        return format_number(value, digits) if math.isfinite(value) else ""
    return str(value)


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], digits: int = SIGNIFICANT_DIGITS) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(value, digits) for value in row])
    return buffer.getvalue()


def write_csv(
    path: str | Path,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    digits: int = SIGNIFICANT_DIGITS,
) -> Path:
    out_path = atomic_write_text(path, render_csv(header, rows, digits))
    logger.debug(f"Wrote {out_path}")
    return out_path
