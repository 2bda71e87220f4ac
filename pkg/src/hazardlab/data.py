"""Right-censored survival records and their event-table reduction.

A record is one drive (or subject): how long it lasted, whether it ended in
an observed event or was cut off, and its covariate vector.  The on-disk
format is a small CSV:

    duration_s,event,rain,fog,night,experts,universal[,label]

with duration_s a nonnegative float in seconds, event 1 for an observed
event and 0 for right-censoring, rain in {0} or [70, 100], fog in {0} or
[50, 100], the three model flags in {0, 1}, and label free text.  Event
markers for left-censoring ("2"/"left") and truncation ("3"/"truncated")
are recognized so they can be rejected loudly instead of silently misread.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "COVARIATE_NAMES",
    "CensoringKind",
    "ModelType",
    "ValidationError",
    "Observation",
    "Dataset",
    "EventTable",
    "build_event_table",
    "encode_campaign_covariates",
    "load_csv",
    "write_csv",
]

COVARIATE_NAMES = ("rain", "fog", "night", "experts", "universal")


class ValidationError(ValueError):
    """Raised for malformed inputs and violated preconditions."""


class CensoringKind(enum.Enum):
    UNCENSORED = "uncensored"
    RIGHT_CENSORED = "right_censored"
    LEFT_CENSORED = "left_censored"
    TRUNCATED = "truncated"


class ModelType(str, enum.Enum):
    BASELINE = "baseline"
    EXPERT = "expert"
    UNIVERSAL = "universal"


@dataclass(frozen=True)
class Observation:
    """One subject: time observed, outcome, covariates, optional annotation."""

    duration: float
    event: bool
    covariates: tuple[float, ...]
    label: str | None = None


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ordered collection of observations sharing one covariate layout.

    Stored column-wise (durations, events, covariates) so estimation code
    works on arrays directly; `observations` materializes the row view.
    """

    durations: np.ndarray
    events: np.ndarray
    covariates: np.ndarray
    covariate_names: tuple[str, ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        durations = np.asarray(self.durations, dtype=float)
        events = np.asarray(self.events, dtype=bool)
        covariates = np.asarray(self.covariates, dtype=float)
        names = tuple(str(n) for n in self.covariate_names)
        if durations.ndim != 1 or durations.size == 0:
            raise ValidationError("dataset needs at least one observation")
        n = durations.size
        if events.shape != (n,):
            raise ValidationError("events and durations lengths differ")
        if covariates.ndim != 2 or covariates.shape[0] != n:
            raise ValidationError("covariates must be a (n_observations, n_covariates) matrix")
        if covariates.shape[1] != len(names):
            raise ValidationError(
                f"{len(names)} covariate names for {covariates.shape[1]} columns"
            )
        if len(set(names)) != len(names):
            raise ValidationError("covariate names must be unique")
        if not np.all(np.isfinite(durations)):
            raise ValidationError("durations must be finite")
        if np.any(durations < 0):
            raise ValidationError("durations must be nonnegative")
        if not np.all(np.isfinite(covariates)):
            raise ValidationError("covariates must be finite")
        if self.labels is not None and len(self.labels) != n:
            raise ValidationError("labels and durations lengths differ")
        object.__setattr__(self, "durations", _readonly(durations))
        object.__setattr__(self, "events", _readonly(events))
        object.__setattr__(self, "covariates", _readonly(covariates))
        object.__setattr__(self, "covariate_names", names)
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))

    @classmethod
    def from_observations(
        cls, observations: Iterable[Observation], covariate_names: Sequence[str]
    ) -> "Dataset":
        obs = list(observations)
        if not obs:
            raise ValidationError("dataset needs at least one observation")
        labels = None
        if any(o.label is not None for o in obs):
            labels = tuple(o.label or "" for o in obs)
        return cls(
            durations=np.array([o.duration for o in obs], dtype=float),
            events=np.array([o.event for o in obs], dtype=bool),
            covariates=np.array([o.covariates for o in obs], dtype=float),
            covariate_names=tuple(covariate_names),
            labels=labels,
        )

    @property
    def n(self) -> int:
        return int(self.durations.size)

    @property
    def n_events(self) -> int:
        return int(np.count_nonzero(self.events))

    @property
    def observations(self) -> tuple[Observation, ...]:
        labels = self.labels or (None,) * self.n
        return tuple(
            Observation(
                duration=float(self.durations[i]),
                event=bool(self.events[i]),
                covariates=tuple(float(v) for v in self.covariates[i]),
                label=labels[i],
            )
            for i in range(self.n)
        )

    def select(self, mask: np.ndarray) -> "Dataset":
        """Subset by boolean mask, keeping order and labels."""
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != self.durations.shape:
            raise ValidationError("mask length must match dataset size")
        if not mask.any():
            raise ValidationError("selection leaves no observations")
        labels = None
        if self.labels is not None:
            labels = tuple(s for s, keep in zip(self.labels, mask) if keep)
        return Dataset(
            durations=self.durations[mask],
            events=self.events[mask],
            covariates=self.covariates[mask],
            covariate_names=self.covariate_names,
            labels=labels,
        )


@dataclass(frozen=True, eq=False)
class EventTable:
    """Distinct event times with risk-set and removal counts.

    Row i: at time times[i] there were at_risk[i] subjects still under
    observation (ties count as at risk; events precede censorings),
    deaths[i] >= 1 observed events happened, and censored[i] subjects were
    censored in (times[i-1], times[i]].
    """

    times: np.ndarray
    at_risk: np.ndarray
    deaths: np.ndarray
    censored: np.ndarray

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        at_risk = np.asarray(self.at_risk, dtype=np.int64)
        deaths = np.asarray(self.deaths, dtype=np.int64)
        censored = np.asarray(self.censored, dtype=np.int64)
        if not (times.shape == at_risk.shape == deaths.shape == censored.shape):
            raise ValidationError("event table columns must share one length")
        if times.size:
            if np.any(np.diff(times) <= 0):
                raise ValidationError("event times must be strictly increasing")
            if np.any(deaths < 1):
                raise ValidationError("every event-table row needs at least one event")
            if np.any(at_risk < deaths):
                raise ValidationError("at-risk counts cannot be below death counts")
        object.__setattr__(self, "times", _readonly(times))
        object.__setattr__(self, "at_risk", _readonly(at_risk))
        object.__setattr__(self, "deaths", _readonly(deaths))
        object.__setattr__(self, "censored", _readonly(censored))

    @property
    def n_rows(self) -> int:
        return int(self.times.size)


def build_event_table(dataset: Dataset) -> EventTable:
    """Reduce a dataset to its distinct-event-time table.

    Rows appear only at times with at least one observed event.  A subject
    censored exactly at an event time is still at risk there.
    """
    durations = dataset.durations
    events = dataset.events
    times, deaths = np.unique(durations[events], return_counts=True)
    sorted_durations = np.sort(durations)
    n = durations.size
    at_risk = n - np.searchsorted(sorted_durations, times, side="left")
    censor_sorted = np.sort(durations[~events])
    upper = np.searchsorted(censor_sorted, times, side="right")
    censored = np.diff(upper, prepend=0)
    return EventTable(times=times, at_risk=at_risk, deaths=deaths, censored=censored)


def encode_campaign_covariates(
    rain_raw: float, fog_raw: float, sun_position: float, model_type: ModelType | str
) -> np.ndarray:
    """Map raw condition readings to the model covariate vector.

    Returns (rain, fog, night, experts, universal): rain and fog pass
    through, night is 1 exactly when the sun position is negative, and the
    model type sets one of the two flag columns.
    """
    rain_raw = float(rain_raw)
    fog_raw = float(fog_raw)
    sun_position = float(sun_position)
    if rain_raw != 0.0 and not 70.0 <= rain_raw <= 100.0:
        raise ValidationError(f"rain intensity must be 0 or in [70, 100], got {rain_raw}")
    if fog_raw != 0.0 and not 50.0 <= fog_raw <= 100.0:
        raise ValidationError(f"fog density must be 0 or in [50, 100], got {fog_raw}")
    if not -90.0 <= sun_position <= 90.0:
        raise ValidationError(f"sun position must lie in [-90, 90], got {sun_position}")
    model = ModelType(model_type)
    night = 1.0 if sun_position < 0.0 else 0.0
    experts = 1.0 if model is ModelType.EXPERT else 0.0
    universal = 1.0 if model is ModelType.UNIVERSAL else 0.0
    return np.array([rain_raw, fog_raw, night, experts, universal], dtype=float)


_LEFT_MARKERS = {"2", "left", "left_censored", "left-censored"}
_TRUNCATED_MARKERS = {"3", "truncated"}


def _parse_event(raw: str, line: int) -> bool:
    value = raw.strip().lower()
    if value == "1":
        return True
    if value == "0":
        return False
    if value in _LEFT_MARKERS:
        raise ValidationError(
            f"line {line}: unsupported censoring kind 'left_censored'; "
            "only observed events and right-censoring are accepted"
        )
    if value in _TRUNCATED_MARKERS:
        raise ValidationError(
            f"line {line}: unsupported censoring kind 'truncated'; "
            "only observed events and right-censoring are accepted"
        )
    raise ValidationError(f"line {line}: event flag must be 0 or 1, got {raw!r}")


def load_csv(path, schema: Sequence[str] = COVARIATE_NAMES) -> Dataset:
    """Read a dataset from CSV, rejecting malformed rows by line number."""
    schema = tuple(schema)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        expected = ["duration_s", "event", *schema]
        has_label = header == expected + ["label"]
        if not has_label and header != expected:
            raise ValidationError(
                f"{path}: header mismatch; expected {','.join(expected)}[,label] "
                f"but found {','.join(header)}"
            )
        width = len(header)
        durations: list[float] = []
        events: list[bool] = []
        rows: list[list[float]] = []
        labels: list[str] = []
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise ValidationError(
                    f"line {line}: expected {width} fields, found {len(row)}"
                )
            try:
                duration = float(row[0])
            except ValueError:
                raise ValidationError(
                    f"line {line}: duration_s must be a number, got {row[0]!r}"
                ) from None
            if not np.isfinite(duration) or duration < 0:
                raise ValidationError(
                    f"line {line}: duration_s must be finite and nonnegative, got {row[0]}"
                )
            events.append(_parse_event(row[1], line))
            durations.append(duration)
            values = []
            for name, cell in zip(schema, row[2 : 2 + len(schema)]):
                try:
                    value = float(cell)
                except ValueError:
                    raise ValidationError(
                        f"line {line}: covariate {name!r} must be a number, got {cell!r}"
                    ) from None
                if not np.isfinite(value):
                    raise ValidationError(f"line {line}: covariate {name!r} must be finite")
                values.append(value)
            rows.append(values)
            if has_label:
                labels.append(row[-1])
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    return Dataset(
        durations=np.array(durations, dtype=float),
        events=np.array(events, dtype=bool),
        covariates=np.array(rows, dtype=float),
        covariate_names=schema,
        labels=tuple(labels) if has_label else None,
    )


def format_number(value: float) -> str:
    """Render a float compactly but round-trip exactly."""
    value = float(value)
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def write_csv(dataset: Dataset, path) -> None:
    """Write a dataset in the standard CSV layout, round-tripping exactly."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["duration_s", "event", *dataset.covariate_names]
        if dataset.labels is not None:
            header.append("label")
        writer.writerow(header)
        for i in range(dataset.n):
            row = [format_number(dataset.durations[i]), "1" if dataset.events[i] else "0"]
            row.extend(format_number(v) for v in dataset.covariates[i])
            if dataset.labels is not None:
                row.append(dataset.labels[i])
            writer.writerow(row)
