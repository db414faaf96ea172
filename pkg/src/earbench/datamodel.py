"""Shared data types and manifest IO.

A manifest is a UTF-8 JSON-lines file: one record per line, each carrying a
"kind" discriminator ("asset" for audio files, "sample" for instruction
samples).  Audio payloads are referenced by path, never inlined, so manifests
stay streamable and diff-friendly.

All types here are immutable value objects and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence


class ManifestError(ValueError):
    """Malformed manifest content or unresolvable references."""


ORIGINS = ("template", "generated")
DOMAINS = ("speech", "audio")

# Metric名 -> the only direction that makes sense for it.
METRIC_DIRECTIONS = {
    "wer": "lower_better",
    "medae": "lower_better",
    "bleu": "higher_better",
    "judge_accuracy": "higher_better",
}


@dataclass(frozen=True)
class AudioAsset:
    """One audio file plus open-ended string metadata (gender, language, ...)."""

    id: str
    path: str
    sample_rate: int
    channels: int = 1
    duration_s: float = 0.0
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.id:
            raise ManifestError("asset id must be non-empty")
        if self.sample_rate <= 0:
            raise ManifestError(f"asset {self.id!r}: sample_rate must be positive")
        if self.duration_s < 0:
            raise ManifestError(f"asset {self.id!r}: duration_s must be >= 0")
        object.__setattr__(self, "metadata", dict(self.metadata))

    def has_fields(self, required: Iterable[str]) -> bool:
        return all(key in self.metadata for key in required)

    def to_record(self) -> dict:
        return {
            "kind": "asset",
            "id": self.id,
            "path": self.path,
            "sample_rate": self.sample_rate,
            "channels": self.channels,
            "duration_s": self.duration_s,
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_record(cls, rec: Mapping) -> "AudioAsset":
        return cls(
            id=rec["id"],
            path=rec["path"],
            sample_rate=int(rec["sample_rate"]),
            channels=int(rec.get("channels", 1)),
            duration_s=float(rec.get("duration_s", 0.0)),
            metadata=rec.get("metadata", {}),
        )


@dataclass(frozen=True)
class InstructionSample:
    """One training/eval item: a request, optional audio refs, and the expected answer."""

    id: str
    task: str
    request_text: str
    expected_response: str
    audio_ids: tuple[str, ...] = ()
    origin: str = "template"
    prompt_style_id: str = ""
    class_label: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ManifestError("sample id must be non-empty")
        if not self.request_text or not self.request_text.strip():
            raise ManifestError(f"sample {self.id!r}: request_text must be non-empty")
        if not self.expected_response or not self.expected_response.strip():
            raise ManifestError(f"sample {self.id!r}: expected_response must be non-empty")
        if self.origin not in ORIGINS:
            raise ManifestError(
                f"sample {self.id!r}: origin must be one of {ORIGINS}, got {self.origin!r}"
            )
        object.__setattr__(self, "audio_ids", tuple(self.audio_ids))

    def to_record(self) -> dict:
        rec = {
            "kind": "sample",
            "id": self.id,
            "task": self.task,
            "request_text": self.request_text,
            "expected_response": self.expected_response,
            "audio_ids": list(self.audio_ids),
            "origin": self.origin,
            "prompt_style_id": self.prompt_style_id,
        }
        if self.class_label is not None:
            rec["class_label"] = self.class_label
        return rec

    @classmethod
    def from_record(cls, rec: Mapping) -> "InstructionSample":
        return cls(
            id=rec["id"],
            task=rec.get("task", ""),
            request_text=rec["request_text"],
            expected_response=rec["expected_response"],
            audio_ids=tuple(rec.get("audio_ids", ())),
            origin=rec.get("origin", "template"),
            prompt_style_id=rec.get("prompt_style_id", ""),
            class_label=rec.get("class_label"),
        )


@dataclass(frozen=True)
class TaskSpec:
    """A task name bound to its domain, metric and metric direction."""

    name: str
    domain: str
    metric: str
    direction: str

    def __post_init__(self) -> None:
        if self.domain not in DOMAINS and self.domain:
            # Non-core domains (e.g. per-corpus domains in reports) are allowed;
            # only the empty string is rejected.
            pass
        if not self.domain:
            raise ManifestError(f"task {self.name!r}: domain must be non-empty")
        if self.metric not in METRIC_DIRECTIONS:
            raise ManifestError(
                f"task {self.name!r}: unknown metric {self.metric!r}"
            )
        if self.direction != METRIC_DIRECTIONS[self.metric]:
            raise ManifestError(
                f"task {self.name!r}: metric {self.metric!r} requires direction "
                f"{METRIC_DIRECTIONS[self.metric]!r}, got {self.direction!r}"
            )

    @classmethod
    def for_metric(cls, name: str, domain: str, metric: str) -> "TaskSpec":
        return cls(name=name, domain=domain, metric=metric, direction=METRIC_DIRECTIONS[metric])


def validate_manifest(
    samples: Sequence[InstructionSample], assets: Sequence[AudioAsset]
) -> None:
    """Check cross-record invariants: unique ids and resolvable audio refs."""
    seen_assets: set[str] = set()
    for asset in assets:
        if asset.id in seen_assets:
            raise ManifestError(f"duplicate asset id {asset.id!r}")
        seen_assets.add(asset.id)

    seen_samples: set[str] = set()
    dangling: list[tuple[str, str]] = []
    for sample in samples:
        if sample.id in seen_samples:
            raise ManifestError(f"duplicate sample id {sample.id!r}")
        seen_samples.add(sample.id)
        for ref in sample.audio_ids:
            if ref not in seen_assets:
                dangling.append((sample.id, ref))
    if dangling:
        offenders = ", ".join(f"{sid} -> {ref!r}" for sid, ref in dangling[:20])
        more = "" if len(dangling) <= 20 else f" (+{len(dangling) - 20} more)"
        raise ManifestError(f"unresolved audio_ids: {offenders}{more}")


def load_manifest(
    path: str | Path,
) -> tuple[list[InstructionSample], list[AudioAsset]]:
    """Parse a JSON-lines manifest and validate it.

    Raises ManifestError with the offending line number on malformed records,
    and a single error naming all dangling audio_ids after parsing.
    """
    samples: list[InstructionSample] = []
    assets: list[AudioAsset] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            kind = rec.get("kind")
            try:
                if kind == "asset":
                    assets.append(AudioAsset.from_record(rec))
                elif kind == "sample":
                    samples.append(InstructionSample.from_record(rec))
                else:
                    raise ManifestError(f"unknown record kind {kind!r}")
            except ManifestError as exc:
                raise ManifestError(f"{path}:{lineno}: {exc}") from exc
            except (KeyError, TypeError, ValueError) as exc:
                raise ManifestError(f"{path}:{lineno}: bad record: {exc}") from exc
    validate_manifest(samples, assets)
    return samples, assets


def write_manifest(
    path: str | Path,
    samples: Sequence[InstructionSample],
    assets: Sequence[AudioAsset],
) -> None:
    """Write assets then samples, one JSON object per line, stable key order."""
    validate_manifest(samples, assets)
    with open(path, "w", encoding="utf-8") as fh:
        for asset in assets:
            fh.write(json.dumps(asset.to_record(), sort_keys=True, ensure_ascii=False))
            fh.write("\n")
        for sample in samples:
            fh.write(json.dumps(sample.to_record(), sort_keys=True, ensure_ascii=False))
            fh.write("\n")


def asset_index(assets: Iterable[AudioAsset]) -> dict[str, AudioAsset]:
    return {asset.id: asset for asset in assets}


def drop_partial_annotations(
    samples: Sequence[InstructionSample],
    assets: Sequence[AudioAsset] | Mapping[str, AudioAsset],
    required_fields: Sequence[str],
) -> list[InstructionSample]:
    """Drop samples whose referenced assets lack any of required_fields.

    Order is preserved.  Text-only samples (no audio refs) always survive.
    """
    if not required_fields:
        raise ValueError("required_fields must be non-empty")
    index = assets if isinstance(assets, Mapping) else asset_index(assets)
    kept: list[InstructionSample] = []
    for sample in samples:
        try:
            referenced = [index[ref] for ref in sample.audio_ids]
        except KeyError as exc:
            raise ManifestError(
                f"sample {sample.id!r}: unresolved audio_id {exc.args[0]!r}"
            ) from exc
        if all(asset.has_fields(required_fields) for asset in referenced):
            kept.append(sample)
    return kept
