"""Hearing-threshold criteria and impact radii for marine species."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Sequence

from .acoustics import is_silent

#: Reference daily exposure (8 h) at which the threshold offsets apply unchanged.
REFERENCE_EXPOSURE_S = 28_800.0
TTS_OFFSET_DB = 75.0
PTS_OFFSET_DB = 95.0

SPECIES_HEADER = ("name", "group", "gtv_db", "audiogram")


class SpeciesDataError(ValueError):
    pass


@dataclass(frozen=True)
class SpeciesProfile:
    name: str
    group: Literal["mammal", "fish"]
    gtv: float
    audiogram: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.group not in ("mammal", "fish"):
            raise SpeciesDataError(f"{self.name}: group must be 'mammal' or 'fish', got {self.group!r}")
        if not math.isfinite(self.gtv):
            raise SpeciesDataError(f"{self.name}: GTV must be finite")
        freqs = [f for f, _ in self.audiogram]
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise SpeciesDataError(f"{self.name}: audiogram frequencies must be strictly increasing")
        if self.audiogram and self.gtv > min(th for _, th in self.audiogram) + 1e-9:
            raise SpeciesDataError(f"{self.name}: GTV {self.gtv} exceeds the audiogram minimum")


@dataclass(frozen=True)
class ExposureCriteria:
    t_exposure: float = REFERENCE_EXPOSURE_S  # daily exposure, s

    def __post_init__(self):
        if not self.t_exposure > 0:
            raise ValueError(f"exposure duration must be positive, got {self.t_exposure}")


@dataclass(frozen=True)
class ImpactResult:
    species: str
    tts_level: float
    pts_level: float
    audible_radius: float
    tts_radius: float
    pts_radius: float


def _duration_term(t: float) -> float:
    if not t > 0:
        raise ValueError(f"exposure duration must be positive, got {t}")
    return 10.0 * math.log10(t / REFERENCE_EXPOSURE_S)


def tts_threshold(gtv: float, t: float) -> float:
    """Temporary threshold shift onset: GTV + 75 - 10 log10(T / 28800)."""
    return gtv + TTS_OFFSET_DB - _duration_term(t)


def pts_threshold(gtv: float, t: float) -> float:
    """Permanent threshold shift onset: GTV + 95 - 10 log10(T / 28800)."""
    # built on the TTS value so the 20 dB spacing carries a single rounding
    return tts_threshold(gtv, t) + (PTS_OFFSET_DB - TTS_OFFSET_DB)


def is_audible(spl: float, gtv: float) -> bool:
    return spl > gtv


def impact_radius(source_total: float, threshold: float) -> float:
    """Range out to which a 1 m source level stays at or above ``threshold``.

    Inverts spherical spreading; 0 when the threshold is never reached,
    otherwise at least the 1 m reference distance.
    """
    if is_silent(source_total) or threshold > source_total:
        return 0.0
    return max(1.0, 10.0 ** ((source_total - threshold) / 20.0))


def assess(source_total: float, species: Sequence[SpeciesProfile],
           exposure: ExposureCriteria = ExposureCriteria()) -> list[ImpactResult]:
    """Threshold levels and impact radii for each species around one source level."""
    if not species:
        raise SpeciesDataError("no species profiles to assess")
    results = []
    for sp in species:
        tts = tts_threshold(sp.gtv, exposure.t_exposure)
        pts = pts_threshold(sp.gtv, exposure.t_exposure)
        results.append(ImpactResult(
            species=sp.name,
            tts_level=tts,
            pts_level=pts,
            audible_radius=impact_radius(source_total, sp.gtv),
            tts_radius=impact_radius(source_total, tts),
            pts_radius=impact_radius(source_total, pts),
        ))
    return results


def _parse_audiogram(text: str, where: str) -> tuple[tuple[float, float], ...]:
    text = text.strip()
    if not text:
        return ()
    pairs = []
    for item in text.split(";"):
        try:
            f, th = item.split(":")
            pairs.append((float(f), float(th)))
        except ValueError:
            raise SpeciesDataError(f"{where}: bad audiogram entry {item!r} (want freq_hz:threshold_db)") from None
    return tuple(pairs)


def load_species_csv(path) -> list[SpeciesProfile]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"species file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(h.strip() for h in next(reader, ()))
        if header != SPECIES_HEADER:
            raise SpeciesDataError(f"{path}:1: expected header {','.join(SPECIES_HEADER)!r}")
        profiles = []
        for lineno, row in enumerate(reader, start=2):
            if not row or row[0].lstrip().startswith("#"):
                continue
            where = f"{path}:{lineno}"
            if len(row) != 4:
                raise SpeciesDataError(f"{where}: expected 4 fields, got {len(row)}")
            try:
                gtv = float(row[2])
            except ValueError:
                raise SpeciesDataError(f"{where}: non-numeric gtv_db {row[2]!r}") from None
            try:
                profiles.append(SpeciesProfile(row[0].strip(), row[1].strip(), gtv,
                                               _parse_audiogram(row[3], where)))
            except SpeciesDataError as exc:
                raise SpeciesDataError(f"{where}: {exc}") from None
    if not profiles:
        raise SpeciesDataError(f"{path}: no species rows")
    return profiles


def default_mammal(species: Sequence[SpeciesProfile]) -> SpeciesProfile:
    for sp in species:
        if sp.group == "mammal":
            return sp
    raise SpeciesDataError("no mammal profile available")

