"""Binary containers: the EITD dataset format and its manifest.

EITD layout (all integers u32, all floats f64, little-endian, C array order):

    magic "EITD" | version | S | N | n1 | n2 | nb
    then S records, each:
        sigma[n1*n2] | truth[n1*n2]
        then for omega = 1..N:
            g[nb] | f[nb] | phi[n1*n2] | dphi_dx[n1*n2] | dphi_dy[n1*n2]

nb = 2*(n1+n2) - 4 is the boundary node count; traces follow the boundary
loop order (counter-clockwise from (-1,-1)).  A sidecar UTF-8 manifest
"<blob>.manifest.txt" records the generation parameters as key=value lines
plus the blob's sha256; identical parameters reproduce identical bytes.
"""

from __future__ import annotations

import hashlib
import os
import struct

import numpy as np

from .grid import CartesianGrid

MAGIC = b"EITD"
VERSION = 1
_HEADER = struct.Struct("<4sIIIIII")


class DatasetFormatError(RuntimeError):
    pass


def _boundary_count(n1: int, n2: int) -> int:
    return 2 * (n1 + n2) - 4


class DatasetWriter:
    """Streams records to disk; removes the partial blob if abandoned."""

    def __init__(self, path: str, grid: CartesianGrid, samples: int, pairs: int):
        self.path = path
        self.grid = grid
        self.samples = samples
        self.pairs = pairs
        self.nb = _boundary_count(grid.n1, grid.n2)
        self._written = 0
        self._sha = hashlib.sha256()
        self._fh = open(path, "wb")
        header = _HEADER.pack(MAGIC, VERSION, samples, pairs, grid.n1, grid.n2, self.nb)
        self._fh.write(header)
        self._sha.update(header)

    def _put(self, arr: np.ndarray, size: int):
        buf = np.ascontiguousarray(arr, dtype="<f8")
        if buf.size != size:
            raise DatasetFormatError(f"array size {buf.size}, expected {size}")
        raw = buf.tobytes()
        self._fh.write(raw)
        self._sha.update(raw)

    def add_record(self, sigma, truth, gs, fs, phis, gxs, gys):
        nn = self.grid.n_nodes
        if not (len(gs) == len(fs) == len(phis) == len(gxs) == len(gys) == self.pairs):
            raise DatasetFormatError("record does not hold the declared pair count")
        self._put(sigma, nn)
        self._put(truth, nn)
        for omega in range(self.pairs):
            self._put(gs[omega], self.nb)
            self._put(fs[omega], self.nb)
            self._put(phis[omega], nn)
            self._put(gxs[omega], nn)
            self._put(gys[omega], nn)
        self._written += 1

    def close(self) -> str:
        """Finalize and return the blob sha256 (hex)."""
        self._fh.close()
        if self._written != self.samples:
            os.remove(self.path)
            raise DatasetFormatError(
                f"wrote {self._written} of {self.samples} declared records"
            )
        return self._sha.hexdigest()

    def abort(self):
        self._fh.close()
        if os.path.exists(self.path):
            os.remove(self.path)


class Dataset:
    """Memory-mapped reader for EITD blobs."""

    def __init__(self, path: str):
        self.path = path
        with open(path, "rb") as fh:
            head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise DatasetFormatError(f"{path}: truncated header")
        magic, version, s, n, n1, n2, nb = _HEADER.unpack(head)
        if magic != MAGIC:
            raise DatasetFormatError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise DatasetFormatError(f"{path}: unsupported version {version}")
        if nb != _boundary_count(n1, n2):
            raise DatasetFormatError(f"{path}: inconsistent boundary count")
        self.samples = s
        self.pairs = n
        self.grid = CartesianGrid(n1, n2)
        self.nb = nb
        nn = n1 * n2
        self._rec_len = 2 * nn + n * (2 * nb + 3 * nn)
        expected = _HEADER.size + 8 * s * self._rec_len
        actual = os.path.getsize(path)
        if actual != expected:
            raise DatasetFormatError(
                f"{path}: size {actual} does not match declared shape ({expected})"
            )
        self._mm = np.memmap(path, dtype="<f8", mode="r", offset=_HEADER.size)

    def __len__(self) -> int:
        return self.samples

    def record(self, index: int) -> dict:
        """Views into one record: sigma, truth (n2,n1); g, f (N,nb);
        phi, dphi_dx, dphi_dy (N,n2,n1)."""
        if not 0 <= index < self.samples:
            raise IndexError(index)
        nn = self.grid.n_nodes
        shape = self.grid.shape
        base = index * self._rec_len
        out = {
            "sigma": self._mm[base : base + nn].reshape(shape),
            "truth": self._mm[base + nn : base + 2 * nn].reshape(shape),
        }
        gs, fs, phis, gxs, gys = [], [], [], [], []
        pos = base + 2 * nn
        for _ in range(self.pairs):
            gs.append(self._mm[pos : pos + self.nb])
            pos += self.nb
            fs.append(self._mm[pos : pos + self.nb])
            pos += self.nb
            phis.append(self._mm[pos : pos + nn].reshape(shape))
            pos += nn
            gxs.append(self._mm[pos : pos + nn].reshape(shape))
            pos += nn
            gys.append(self._mm[pos : pos + nn].reshape(shape))
            pos += nn
        out["g"] = gs
        out["f"] = fs
        out["phi"] = phis
        out["dphi_dx"] = gxs
        out["dphi_dy"] = gys
        return out

    def truth_stack(self) -> np.ndarray:
        """(S, n2, n1) ground-truth fields (copies)."""
        return np.stack([np.asarray(self.record(s)["truth"]) for s in range(len(self))])

    def phi_stack(self, n_pairs: int) -> np.ndarray:
        """(S, n2, n1, n_pairs) Cauchy-difference fields for the leading pairs."""
        if n_pairs > self.pairs:
            raise ValueError(f"dataset holds {self.pairs} pairs, requested {n_pairs}")
        out = np.empty((self.samples, *self.grid.shape, n_pairs))
        for s in range(self.samples):
            rec = self.record(s)
            for w in range(n_pairs):
                out[s, :, :, w] = rec["phi"][w]
        return out

    def gradient_features(self, n_pairs: int) -> np.ndarray:
        """(S, n_nodes, 2*n_pairs) per-node [dx phi^1..N, dy phi^1..N]."""
        if n_pairs > self.pairs:
            raise ValueError(f"dataset holds {self.pairs} pairs, requested {n_pairs}")
        nn = self.grid.n_nodes
        out = np.empty((self.samples, nn, 2 * n_pairs))
        for s in range(self.samples):
            rec = self.record(s)
            for w in range(n_pairs):
                out[s, :, w] = rec["dphi_dx"][w].ravel()
                out[s, :, n_pairs + w] = rec["dphi_dy"][w].ravel()
        return out


def write_manifest(path: str, entries: dict) -> None:
    lines = [f"{key}={entries[key]}" for key in entries]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_manifest(path: str) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DatasetFormatError(f"{path}: bad manifest line {line!r}")
            key, value = line.split("=", 1)
            out[key] = value
    return out


def manifest_path(blob_path: str) -> str:
    return blob_path + ".manifest.txt"


def file_sha256(path: str) -> str:
    sha = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            sha.update(chunk)
    return sha.hexdigest()
