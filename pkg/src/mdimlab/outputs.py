"""Result files: CSV tables, JSON documents, plot-data series, manifests and the run cache.

Everything written here is a deterministic function of its inputs, except the
``run`` block of a manifest (wall-clock, worker count, cache status), which is
kept separate so that byte comparisons can drop it.
"""

import csv
import hashlib
import io
import json
import math
import os
import shutil
from pathlib import Path

MANIFEST = "manifest.json"
VOLATILE = "run"


def fmt(x) -> str:
    """Shortest round-trip text for numbers; other values via ``str``."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    if hasattr(x, "item"):  # numpy scalar
        return fmt(x.item())
    return str(x)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def _plain(obj):
    """JSON-safe copy: non-finite floats become strings, tuples become lists."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return fmt(obj)
    if hasattr(obj, "item"):
        return _plain(obj.item())
    if isinstance(obj, (str, int, float, bool)) or obj is None:
        return obj
    return str(obj)


def json_text(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=1) + "\n"


def plot_text(xs, ys, x_label="x", y_label="y") -> str:
    lines = [f"# {x_label} {y_label}"]
    lines += [f"{fmt(float(x))} {fmt(float(y))}" for x, y in zip(xs, ys)]
    return "\n".join(lines) + "\n"


def digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class ResultSet:
    """Named text files collected in memory, then written together with a manifest."""

    def __init__(self):
        self.files = {}

    def add(self, name: str, text: str):
        if name == MANIFEST or name in self.files:
            raise ValueError(f"duplicate output name {name!r}")
        self.files[name] = text

    def csv(self, name, header, rows):
        self.add(name, csv_text(header, rows))

    def json(self, name, obj):
        self.add(name, json_text(obj))

    def plot(self, name, xs, ys, x_label="x", y_label="y"):
        self.add(name, plot_text(xs, ys, x_label, y_label))

    def listing(self) -> list:
        return [{"name": n, "sha256": digest(self.files[n].encode())} for n in sorted(self.files)]


def build_manifest(command, config_hash, version, provenance, results: ResultSet, run=None) -> dict:
    m = {"command": command, "config_hash": config_hash, "tool_version": version,
         "provenance": provenance, "files": results.listing()}
    m[VOLATILE] = run or {}
    return m


def write_results(out_dir, results: ResultSet, manifest: dict):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in results.files.items():
        with open(out / name, "w", newline="") as fh:
            fh.write(text)
    (out / MANIFEST).write_text(json_text(manifest))


def read_manifest(out_dir) -> dict:
    return json.loads((Path(out_dir) / MANIFEST).read_text())


def check_manifest(out_dir) -> list:
    """Names whose content digest differs from the manifest (empty when consistent)."""
    out = Path(out_dir)
    bad = []
    for entry in read_manifest(out)["files"]:
        p = out / entry["name"]
        if not p.exists() or digest(p.read_bytes()) != entry["sha256"]:
            bad.append(entry["name"])
    return bad


def stable_manifest_text(out_dir) -> str:
    """Manifest text without the volatile run block (for byte comparisons)."""
    m = read_manifest(out_dir)
    m.pop(VOLATILE, None)
    return json_text(m)


# -- run cache ----------------------------------------------------------------------------------

def default_cache_dir() -> Path:
    return Path(os.environ.get("MDIMLAB_CACHE", Path.home() / ".cache" / "mdimlab"))


class RunCache:
    """Stored result sets keyed by ``(config hash, tool version)``.

    Entries live in ``<root>/<version>/<hash>/``; entries written by another
    tool version are never consulted.
    """

    def __init__(self, root=None):
        self.root = Path(root) if root is not None else default_cache_dir()

    def _entry(self, key, version) -> Path:
        return self.root / version / key

    def load(self, key, version):
        """``(ResultSet, manifest)`` on a hit with intact digests, else ``None``."""
        d = self._entry(key, version)
        if not (d / MANIFEST).exists():
            return None
        try:
            m = read_manifest(d)
            if m.get("tool_version") != version or m.get("config_hash") != key or check_manifest(d):
                return None
            rs = ResultSet()
            for entry in m["files"]:
                with open(d / entry["name"], newline="") as fh:
                    rs.add(entry["name"], fh.read())
            return rs, m
        except (OSError, ValueError, KeyError):
            return None

    def store(self, key, version, results: ResultSet, manifest: dict):
        d = self._entry(key, version)
        tmp = d.with_name(d.name + ".tmp")
        if tmp.exists():
            shutil.rmtree(tmp)
        m = dict(manifest)
        m[VOLATILE] = {}
        write_results(tmp, results, m)
        if d.exists():
            shutil.rmtree(d)
        tmp.rename(d)
