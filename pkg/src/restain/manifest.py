"""Tile dataset manifests.

A manifest is a JSON file listing tiles with their domain, slide-level grade
and split::

    {"root": ".",
     "entries": [{"path": "tile_0000.png", "domain_id": "her2-brand-b",
                  "her2_score": "2+", "split": "train"}, ...]}

Entry paths are resolved against ``root``, which in turn resolves against the
manifest's own directory when relative. Serialization is canonical (sorted
keys, two-space indent, trailing newline) so load/store round-trips are
byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from restain.errors import (
    ManifestFormatError,
    MissingTileError,
    UnknownDomainError,
    ValidationError,
)
from restain.imgio import atomic_write_bytes, load_rgb_png
from restain.synth import CLASS_NAMES

VALID_SPLITS = ("train", "test")


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    domain_id: str
    her2_score: str
    split: str

    def __post_init__(self):
        if not self.path:
            raise ManifestFormatError("entry path must be non-empty")
        if not self.domain_id:
            raise ManifestFormatError("entry domain_id must be non-empty")
        if self.her2_score not in CLASS_NAMES:
            raise ManifestFormatError(
                f"her2_score must be one of {CLASS_NAMES}, got {self.her2_score!r}"
            )
        if self.split not in VALID_SPLITS:
            raise ManifestFormatError(f"split must be one of {VALID_SPLITS}, got {self.split!r}")


@dataclass(frozen=True, eq=False)
class TileManifest:
    root: str
    entries: tuple
    base_dir: Path | None = None

    def __post_init__(self):
        paths = [e.path for e in self.entries]
        if len(set(paths)) != len(paths):
            raise ManifestFormatError("entry paths must be unique")

    def resolve(self, entry: ManifestEntry) -> Path:
        root = Path(self.root)
        if not root.is_absolute() and self.base_dir is not None:
            root = self.base_dir / root
        return root / entry.path


def manifest_to_dict(manifest: TileManifest) -> dict:
    return {
        "root": manifest.root,
        "entries": [
            {
                "path": e.path,
                "domain_id": e.domain_id,
                "her2_score": e.her2_score,
                "split": e.split,
            }
            for e in manifest.entries
        ],
    }


def manifest_from_dict(data: dict, base_dir: Path | None = None) -> TileManifest:
    if not isinstance(data, dict):
        raise ManifestFormatError(f"manifest must be a JSON object, got {type(data).__name__}")
    try:
        root = data["root"]
        raw_entries = data["entries"]
    except KeyError as exc:
        raise ManifestFormatError(f"manifest missing field: {exc}") from exc
    if not isinstance(raw_entries, list):
        raise ManifestFormatError("manifest 'entries' must be a list")
    entries = []
    for i, raw in enumerate(raw_entries):
        try:
            entries.append(
                ManifestEntry(
                    path=raw["path"],
                    domain_id=raw["domain_id"],
                    her2_score=raw["her2_score"],
                    split=raw["split"],
                )
            )
        except (KeyError, TypeError) as exc:
            raise ManifestFormatError(f"entry {i} missing field: {exc}") from exc
    return TileManifest(root=str(root), entries=tuple(entries), base_dir=base_dir)


def load_manifest(path, known_domains=None) -> TileManifest:
    """Parse a manifest file; optionally check domains against a known set."""
    path = Path(path)
    if not path.is_file():
        raise MissingTileError(f"manifest file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestFormatError(f"manifest is not valid JSON: {exc}") from exc
    manifest = manifest_from_dict(data, base_dir=path.parent)
    if known_domains is not None:
        for entry in manifest.entries:
            if entry.domain_id not in known_domains:
                raise UnknownDomainError(
                    f"entry {entry.path!r} references unknown domain {entry.domain_id!r}"
                )
    return manifest


def write_manifest(manifest: TileManifest, path) -> None:
    text = json.dumps(manifest_to_dict(manifest), indent=2, sort_keys=True) + "\n"
    atomic_write_bytes(path, text.encode("utf-8"))


def iterate_split(manifest: TileManifest, split: str, domain: str | None = None):
    """Yield ``(RgbTile, ManifestEntry)`` for one split in manifest order."""
    if split not in VALID_SPLITS:
        raise ValidationError(f"split must be one of {VALID_SPLITS}, got {split!r}")
    for entry in manifest.entries:
        if entry.split != split:
            continue
        if domain is not None and entry.domain_id != domain:
            continue
        tile_path = manifest.resolve(entry)
        if not tile_path.is_file():
            raise MissingTileError(f"tile file not found: {tile_path}")
        yield load_rgb_png(tile_path), entry
