"""Download and unpack source archives into the raw-sources directory.

Supported sources are UEA/UCR repository zip bundles and the public
PhysioNet 2012/2019 challenge files. Downloads resume from a ``.part``
file via HTTP range requests when the server allows, verify an expected
SHA256 when one is pinned, and are idempotent: complete verified files are
never re-downloaded.
"""

import tarfile
import zipfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional
from urllib.parse import urlparse

import requests

from tsprep.util import sha256_file

RAW_DIRNAME = ".torchtime/raw"
_TIMEOUT = 30
_CHUNK = 1 << 16


class FetchError(RuntimeError):
    """Download or extraction failure."""


@dataclass(frozen=True)
class SourceFile:
    url: str
    kind: str  # "zip", "tar-gz" or "file" (no extraction)
    sha256: Optional[str] = None

    @property
    def filename(self) -> str:
        name = Path(urlparse(self.url).path).name
        if not name:
            raise FetchError(f"cannot derive a filename from {self.url}")
        return name


@dataclass(frozen=True)
class SourceDescriptor:
    name: str
    files: tuple[SourceFile, ...]

    def __post_init__(self) -> None:
        if not self.files:
            raise ValueError("descriptor needs at least one url")


_UEA_BASE = "https://www.timeseriesclassification.com/aeon-toolkit"
_PN2012_BASE = "https://physionet.org/files/challenge-2012/1.0.0"
_PN2019_BASE = "https://physionet.org/files/challenge-2019/1.0.0/training"


def uea_descriptor(dataset: str) -> SourceDescriptor:
    return SourceDescriptor(
        name=dataset.lower(),
        files=(SourceFile(url=f"{_UEA_BASE}/{dataset}.zip", kind="zip"),),
    )


REGISTRY: dict[str, SourceDescriptor] = {
    "arrowhead": uea_descriptor("ArrowHead"),
    "charactertrajectories": uea_descriptor("CharacterTrajectories"),
    "physionet2012": SourceDescriptor(
        name="physionet2012",
        files=tuple(
            [SourceFile(url=f"{_PN2012_BASE}/set-{s}.tar.gz", kind="tar-gz") for s in "abc"]
            + [SourceFile(url=f"{_PN2012_BASE}/Outcomes-{s}.txt", kind="file") for s in "abc"]
        ),
    ),
    "physionet2019": SourceDescriptor(
        name="physionet2019",
        files=tuple(
            SourceFile(url=f"{_PN2019_BASE}/training_set{s}.zip", kind="zip") for s in "AB"
        ),
    ),
}
# the binary variant consumes the same raw files
REGISTRY["physionet2019binary"] = SourceDescriptor(
    name="physionet2019", files=REGISTRY["physionet2019"].files
)


def raw_dir(root: Path, name: str) -> Path:
    return Path(root) / RAW_DIRNAME / name


def download_file(
    source: SourceFile, dest_dir: Path, session: Optional[requests.Session] = None
) -> Path:
    """Fetch one file to ``dest_dir``, resuming a partial download if the
    server honours range requests. Verifies ``source.sha256`` when set; a
    mismatch removes the file and raises."""
    sess = session or requests.Session()
    dest_dir.mkdir(parents=True, exist_ok=True)
    target = dest_dir / source.filename
    if target.exists():
        if source.sha256 is None or sha256_file(target) == source.sha256:
            return target
        target.unlink()

    part = target.with_suffix(target.suffix + ".part")
    headers = {}
    mode = "wb"
    if part.exists() and part.stat().st_size > 0:
        headers["Range"] = f"bytes={part.stat().st_size}-"
    try:
        response = sess.get(source.url, headers=headers, stream=True, timeout=_TIMEOUT)
        if response.status_code == 206:
            mode = "ab"
        elif response.status_code == 416:
            # nothing left to fetch; fall through to verification
            response.close()
            response = None
        else:
            response.raise_for_status()
        if response is not None:
            with open(part, mode) as f:
                for chunk in response.iter_content(chunk_size=_CHUNK):
                    f.write(chunk)
    except requests.RequestException as err:
        raise FetchError(f"download failed for {source.url}: {err}") from err

    if source.sha256 is not None and sha256_file(part) != source.sha256:
        part.unlink()
        raise FetchError(f"{source.url}: SHA256 mismatch, removed partial file")
    part.replace(target)
    return target


def _safe_members(names: list[str], archive: Path) -> None:
    for name in names:
        p = Path(name)
        if p.is_absolute() or ".." in p.parts:
            raise FetchError(f"{archive}: unsafe entry name {name!r}")


def extract(archive: Path, kind: str, dest: Path) -> list[Path]:
    """Unpack ``archive`` under ``dest``, rejecting path-traversal entries."""
    dest.mkdir(parents=True, exist_ok=True)
    extracted: list[Path] = []
    if kind == "zip":
        try:
            with zipfile.ZipFile(archive) as zf:
                _safe_members(zf.namelist(), archive)
                zf.extractall(dest)
                extracted = [dest / n for n in zf.namelist() if not n.endswith("/")]
        except zipfile.BadZipFile as err:
            raise FetchError(f"{archive}: corrupt zip: {err}") from err
    elif kind == "tar-gz":
        try:
            with tarfile.open(archive, "r:gz") as tf:
                _safe_members(tf.getnames(), archive)
                tf.extractall(dest)
                extracted = [dest / m.name for m in tf.getmembers() if m.isfile()]
        except tarfile.TarError as err:
            raise FetchError(f"{archive}: corrupt tar: {err}") from err
    elif kind == "file":
        extracted = [archive]
    else:
        raise FetchError(f"unknown archive kind {kind!r}")
    return extracted


def fetch_dataset(
    root: Path, name: str, session: Optional[requests.Session] = None
) -> Path:
    """Download and extract every source file for a registered dataset name,
    returning the raw directory. Re-running with verified complete files is
    a no-op apart from re-extraction of archives already on disk."""
    descriptor = REGISTRY.get(name.lower())
    if descriptor is None:
        supported = ", ".join(sorted(REGISTRY))
        raise KeyError(f"unknown dataset {name!r}; supported: {supported}")
    dest = raw_dir(root, descriptor.name)
    for source in descriptor.files:
        archive = download_file(source, dest, session=session)
        extract(archive, source.kind, dest)
    return dest
