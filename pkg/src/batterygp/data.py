"""Cyclic-ageing datasets: CSV ingestion, validation, synthetic generation.

A dataset is a set of cases, each one cell's capacity-versus-cycle
trajectory recorded at a constant cyclic temperature and depth of
discharge.  The interchange format is CSV with the header

    case_id,temperature_c,dod_pct,cycle_index,capacity_ah,std_ah

one row per measurement point (std_ah may be empty).  The synthetic
generator produces the standard six-case test matrix -- DODs of 50/80/100 %
crossed with 35/45 C -- from an Arrhenius-in-temperature, power-law-in-DOD
fade law with square-root cycle dependence:

    capacity(n) = c0 - a * exp(-Ea / (R * T_K)) * dod^beta * n^z + noise
"""

from __future__ import annotations

import csv
import json
import zlib
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .exceptions import (
    BelowAbsoluteZero,
    OverlappingSplit,
    ParseError,
    UnknownCase,
    ValidationError,
)

CSV_COLUMNS = ("case_id", "temperature_c", "dod_pct", "cycle_index", "capacity_ah", "std_ah")

ABSOLUTE_ZERO_C = -273.15


def to_kelvin(temperature_c: float) -> float:
    """Celsius to Kelvin; rejects temperatures at or below absolute zero."""
    if temperature_c <= ABSOLUTE_ZERO_C:
        raise BelowAbsoluteZero(f"{temperature_c} C is at or below absolute zero")
    return temperature_c + 273.15


@dataclass(frozen=True)
class CapacityPoint:
    cycle_index: int
    capacity_ah: float
    std_ah: float | None = None


@dataclass(frozen=True)
class CyclicCase:
    """One cell's trajectory under constant cyclic temperature and DOD."""

    case_id: str
    temperature_c: float
    dod_pct: float
    points: tuple[CapacityPoint, ...]

    def __post_init__(self):
        if self.temperature_c <= ABSOLUTE_ZERO_C:
            raise ValidationError(f"case {self.case_id}: temperature below absolute zero")
        if not 0.0 < self.dod_pct <= 100.0:
            raise ValidationError(f"case {self.case_id}: dod_pct must be in (0, 100], got {self.dod_pct}")
        cycles = [p.cycle_index for p in self.points]
        if any(b <= a for a, b in zip(cycles, cycles[1:])):
            raise ValidationError(f"case {self.case_id}: cycle_index must be strictly increasing")
        if any(p.capacity_ah <= 0.0 for p in self.points):
            raise ValidationError(f"case {self.case_id}: capacity_ah must be positive")
        if any(p.std_ah is not None and p.std_ah < 0.0 for p in self.points):
            raise ValidationError(f"case {self.case_id}: std_ah must be non-negative")

    @property
    def capacities(self) -> np.ndarray:
        return np.array([p.capacity_ah for p in self.points])

    @property
    def cycles(self) -> np.ndarray:
        return np.array([p.cycle_index for p in self.points])

    @property
    def temperature_k(self) -> float:
        return to_kelvin(self.temperature_c)

    @property
    def dod_fraction(self) -> float:
        return self.dod_pct / 100.0

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class Dataset:
    cases: tuple[CyclicCase, ...]
    nominal_capacity_ah: float = 21.0

    def __post_init__(self):
        ids = [c.case_id for c in self.cases]
        if len(set(ids)) != len(ids):
            raise ValidationError("case ids must be unique")
        if self.nominal_capacity_ah <= 0.0:
            raise ValidationError("nominal capacity must be positive")

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(c.case_id for c in self.cases)

    def case(self, case_id: str) -> CyclicCase:
        for c in self.cases:
            if c.case_id == case_id:
                return c
        raise UnknownCase(f"case '{case_id}' not in dataset (have {list(self.ids)})")


def load_csv(path, nominal_capacity_ah: float = 21.0) -> Dataset:
    """Read a dataset from CSV, validating schema and case invariants.

    Malformed cells raise ParseError naming the row and column; invariant
    violations raise ValidationError naming the case.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file, expected header {','.join(CSV_COLUMNS)}") from None
        if tuple(h.strip() for h in header) != CSV_COLUMNS:
            raise ParseError(f"{path}: bad header {header!r}, expected {list(CSV_COLUMNS)}")

        rows: dict[str, dict] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(CSV_COLUMNS):
                raise ParseError(f"{path}:{lineno}: expected {len(CSV_COLUMNS)} columns, got {len(row)}")

            def parse(column: str, text: str, kind=float):
                try:
                    return kind(text)
                except ValueError:
                    raise ParseError(f"{path}:{lineno}: column '{column}': cannot parse {text!r}") from None

            case_id = row[0].strip()
            if not case_id:
                raise ParseError(f"{path}:{lineno}: column 'case_id': empty")
            temperature = parse("temperature_c", row[1])
            dod = parse("dod_pct", row[2])
            cycle = int(parse("cycle_index", row[3]))
            capacity = parse("capacity_ah", row[4])
            std = parse("std_ah", row[5]) if row[5].strip() else None

            entry = rows.setdefault(case_id, {"temperature_c": temperature, "dod_pct": dod, "points": []})
            if entry["temperature_c"] != temperature or entry["dod_pct"] != dod:
                raise ValidationError(
                    f"case {case_id}: temperature/DOD must be constant within a case (line {lineno})"
                )
            entry["points"].append(CapacityPoint(cycle, capacity, std))

    cases = tuple(
        CyclicCase(case_id, entry["temperature_c"], entry["dod_pct"], tuple(entry["points"]))
        for case_id, entry in rows.items()
    )
    return Dataset(cases=cases, nominal_capacity_ah=nominal_capacity_ah)


def write_csv(path, dataset: Dataset) -> None:
    """Write a dataset in the interchange schema (inverse of load_csv)."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_COLUMNS)
        for case in dataset.cases:
            for point in case.points:
                writer.writerow(
                    [
                        case.case_id,
                        repr(case.temperature_c),
                        repr(case.dod_pct),
                        point.cycle_index,
                        repr(point.capacity_ah),
                        "" if point.std_ah is None else repr(point.std_ah),
                    ]
                )


# -- synthetic generation ----------------------------------------------------

# The six-case (DOD %, temperature C) test matrix.
CASE_MATRIX = (
    ("1", 100.0, 35.0),
    ("2", 50.0, 45.0),
    ("3", 50.0, 35.0),
    ("4", 100.0, 45.0),
    ("5", 80.0, 35.0),
    ("6", 80.0, 45.0),
)
TRAIN_CASE_IDS = ("1", "2", "3", "4")
TEST_CASE_IDS = ("5", "6")


@dataclass(frozen=True)
class SynthConfig:
    """Fade-law parameters for the synthetic generator.

    Defaults are calibrated so the hottest/deepest case (100 % DOD, 45 C)
    loses roughly a fifth of its initial capacity by the final point.
    ``beta = 0`` decouples DOD from fade entirely, which is useful for
    relevance-detection experiments.
    """

    c0_ah: float = 21.0
    a: float = 4.5e5
    ea_j_mol: float = 4.0e4
    r_j_molk: float = 8.314
    beta: float = 1.2
    z: float = 0.5
    noise_std_ah: float = 0.05
    seed: int = 0
    n_points: int = 16
    cycles_per_point: int = 100

    def __post_init__(self):
        if min(self.c0_ah, self.a, self.ea_j_mol, self.r_j_molk) <= 0.0:
            raise ValidationError("c0_ah, a, ea_j_mol, r_j_molk must be positive")
        if self.beta < 0.0:
            raise ValidationError("beta must be non-negative")
        if not 0.0 < self.z <= 1.5:
            raise ValidationError("z must be in (0, 1.5]")
        if self.noise_std_ah < 0.0:
            raise ValidationError("noise_std_ah must be non-negative")
        if self.n_points < 3 or self.cycles_per_point < 1:
            raise ValidationError("need n_points >= 3 and cycles_per_point >= 1")

    @classmethod
    def from_json(cls, path) -> "SynthConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON: {exc}") from None
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ValidationError(f"{path}: unknown config field(s) {sorted(unknown)}")
        return cls(**raw)


def expected_capacity(cfg: SynthConfig, temperature_c: float, dod_pct: float, cycle_index: float) -> float:
    """Noise-free fade law evaluated at one cycle index."""
    rate = cfg.a * np.exp(-cfg.ea_j_mol / (cfg.r_j_molk * to_kelvin(temperature_c)))
    return cfg.c0_ah - rate * (dod_pct / 100.0) ** cfg.beta * float(cycle_index) ** cfg.z


def synth_case(
    cfg: SynthConfig,
    case_id: str,
    temperature_c: float,
    dod_pct: float,
    n_points: int | None = None,
    cycles_per_point: int | None = None,
) -> CyclicCase:
    """Generate one case's trajectory; reproducible per (seed, case_id)."""
    n_points = cfg.n_points if n_points is None else n_points
    cycles_per_point = cfg.cycles_per_point if cycles_per_point is None else cycles_per_point
    if n_points < 3:
        raise ValidationError("n_points must be >= 3")
    rng = np.random.default_rng([cfg.seed, zlib.crc32(case_id.encode("utf-8"))])
    points = []
    for i in range(n_points):
        cycle = i * cycles_per_point
        capacity = expected_capacity(cfg, temperature_c, dod_pct, cycle)
        if cfg.noise_std_ah > 0.0:
            capacity += rng.normal(0.0, cfg.noise_std_ah)
        std = cfg.noise_std_ah if cfg.noise_std_ah > 0.0 else None
        points.append(CapacityPoint(cycle, float(capacity), std))
    return CyclicCase(case_id, temperature_c, dod_pct, tuple(points))


def synth_matrix(cfg: SynthConfig) -> Dataset:
    """Generate the full six-case matrix with the standard pairings."""
    cases = tuple(synth_case(cfg, case_id, t, d) for case_id, d, t in CASE_MATRIX)
    return Dataset(cases=cases, nominal_capacity_ah=cfg.c0_ah)


def split(dataset: Dataset, train_ids, test_ids) -> tuple[Dataset, Dataset]:
    """Partition a dataset by case id into train and test datasets."""
    train_ids = list(train_ids)
    test_ids = list(test_ids)
    overlap = set(train_ids) & set(test_ids)
    if overlap:
        raise OverlappingSplit(f"case id(s) {sorted(overlap)} appear in both splits")
    train = Dataset(tuple(dataset.case(i) for i in train_ids), dataset.nominal_capacity_ah)
    test = Dataset(tuple(dataset.case(i) for i in test_ids), dataset.nominal_capacity_ah)
    return train, test


def with_seed(cfg: SynthConfig, seed: int) -> SynthConfig:
    """Copy of the config with a different RNG seed (everything else equal)."""
    return replace(cfg, seed=seed)
