"""Interaction ingestion, k-core filtering, train/test splitting, BPR sampling.

All randomness flows through numpy's PCG64 generator (np.random.default_rng),
so splits and samples reproduce exactly for a given seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, ParseError
from .graph import InteractionMatrix
from .util import write_atomic_text

FORMATS = ("edge-pairs", "adjacency-list")


@dataclass
class RawInteractions:
    """Deduplicated (user_token, item_token) pairs in first-seen order."""

    pairs: list[tuple[str, str]]
    source_path: str | None = None


@dataclass(eq=False)
class DatasetSplit:
    """Per-user train/test partition over contiguously re-indexed tokens."""

    train: InteractionMatrix
    test: list[list[int]]  # per user, ascending held-out item indices
    user_map: dict[str, int]
    item_map: dict[str, int]
    seed: int
    _train_flat: np.ndarray | None = field(default=None, repr=False)

    @property
    def m(self) -> int:
        return self.train.m

    @property
    def n(self) -> int:
        return self.train.n

    def train_flat(self) -> np.ndarray:
        """Sorted u*n+i codes of all train pairs, for O(log nnz) membership tests."""
        if self._train_flat is None:
            r = self.train.rows
            users = np.repeat(np.arange(self.m, dtype=np.int64), np.diff(r.indptr))
            self._train_flat = np.sort(users * self.n + r.indices.astype(np.int64))
        return self._train_flat


def parse_interactions(path: str | Path, fmt: str) -> RawInteractions:
    """Read an interaction file.

    edge-pairs: one "user<TAB>item" per line.
    adjacency-list: one "user item1 item2 ..." whitespace-separated line per user.
    Blank lines are ignored; duplicate pairs are dropped.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}, expected one of {FORMATS}")
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    pairs: list[tuple[str, str]] = []
    seen: set[tuple[str, str]] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if fmt == "edge-pairs":
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                raise ParseError(f"{path}:{lineno}: expected 'user<TAB>item', got {line!r}")
            new = [(parts[0].strip(), parts[1].strip())]
        else:
            parts = line.split()
            if len(parts) < 2:
                raise ParseError(f"{path}:{lineno}: expected 'user item1 item2 ...', got {line!r}")
            new = [(parts[0], item) for item in parts[1:]]
        for p in new:
            if p not in seen:
                seen.add(p)
                pairs.append(p)
    if not pairs:
        raise DataError(f"{path}: no interactions found")
    return RawInteractions(pairs=pairs, source_path=str(path))


def k_core_filter(raw: RawInteractions, k: int) -> RawInteractions:
    """Maximal subgraph where every surviving user and item has >= k interactions.

    Each round deletes all currently under-degree nodes at once and repeats to
    a fixed point; the result is the unique maximal k-core (possibly empty).
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    pairs = raw.pairs
    while True:
        udeg: dict[str, int] = {}
        ideg: dict[str, int] = {}
        for u, i in pairs:
            udeg[u] = udeg.get(u, 0) + 1
            ideg[i] = ideg.get(i, 0) + 1
        bad_u = {u for u, c in udeg.items() if c < k}
        bad_i = {i for i, c in ideg.items() if c < k}
        if not bad_u and not bad_i:
            return RawInteractions(pairs=list(pairs), source_path=raw.source_path)
        pairs = [(u, i) for u, i in pairs if u not in bad_u and i not in bad_i]
        if not pairs:
            return RawInteractions(pairs=[], source_path=raw.source_path)


def split_train_test(raw: RawInteractions, test_ratio: float, seed: int) -> DatasetSplit:
    """Hold out a per-user uniform random ceil(test_ratio * degree) subset.

    At least one interaction always stays in train, so single-interaction users
    contribute nothing to test. Tokens are remapped to contiguous indices in
    lexicographic token order, which makes the split a pure function of
    (pairs, ratio, seed).
    """
    if not 0.0 < test_ratio < 1.0:
        raise ValueError(f"test_ratio must be in (0, 1), got {test_ratio}")
    if not raw.pairs:
        raise DataError("cannot split an empty interaction set")
    user_map = {tok: idx for idx, tok in enumerate(sorted({u for u, _ in raw.pairs}))}
    item_map = {tok: idx for idx, tok in enumerate(sorted({i for _, i in raw.pairs}))}
    m, n = len(user_map), len(item_map)
    per_user: list[list[int]] = [[] for _ in range(m)]
    for u, i in raw.pairs:
        per_user[user_map[u]].append(item_map[i])
    rng = np.random.default_rng(seed)
    train_pairs: list[tuple[int, int]] = []
    test: list[list[int]] = []
    for u in range(m):
        items = np.sort(np.asarray(per_user[u], dtype=np.int64))
        cnt = len(items)
        t = min(math.ceil(test_ratio * cnt), cnt - 1)
        if t > 0:
            held = rng.choice(cnt, size=t, replace=False)
            mask = np.zeros(cnt, dtype=bool)
            mask[held] = True
            test.append(sorted(int(i) for i in items[mask]))
            kept = items[~mask]
        else:
            test.append([])
            kept = items
        train_pairs.extend((u, int(i)) for i in kept)
    train = InteractionMatrix.from_pairs(m, n, train_pairs)
    return DatasetSplit(train=train, test=test, user_map=user_map, item_map=item_map, seed=seed)


def sample_bpr_triples(split: DatasetSplit, batch_size: int, rng: np.random.Generator) -> np.ndarray:
    """Sample (u, i_pos, j_neg) triples, shape (batch_size, 3).

    u is uniform over users with at least one train interaction and at least
    one non-interacted item; i_pos uniform over u's train items; j_neg uniform
    over items outside u's train set, by rejection.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    r = split.train.rows
    deg = np.diff(r.indptr)
    eligible = np.flatnonzero((deg >= 1) & (deg < split.n))
    if len(eligible) == 0:
        raise DataError("no sampleable users: every user has no or all items in train")
    flat = split.train_flat()
    users = eligible[rng.integers(0, len(eligible), size=batch_size)]
    offsets = rng.integers(0, deg[users])
    pos = r.indices[r.indptr[users] + offsets].astype(np.int64)
    neg = rng.integers(0, split.n, size=batch_size)
    while True:
        codes = users * split.n + neg
        loc = np.searchsorted(flat, codes)
        loc[loc >= len(flat)] = len(flat) - 1
        hit = flat[loc] == codes
        if not hit.any():
            break
        neg[hit] = rng.integers(0, split.n, size=int(hit.sum()))
    return np.stack([users, pos, neg], axis=1).astype(np.int64)


def save_split(split: DatasetSplit, out_dir: str | Path, k_core: int) -> None:
    """Write train.txt/test.txt (adjacency-list of internal indices), token maps,
    and stats.json into out_dir. Every file is written atomically."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = []
    for u in range(split.m):
        items = split.train.user_items(u)
        if len(items):
            lines.append(" ".join([str(u)] + [str(int(i)) for i in items]))
    write_atomic_text(out / "train.txt", "\n".join(lines) + "\n")
    lines = []
    for u, items in enumerate(split.test):
        if items:
            lines.append(" ".join([str(u)] + [str(i) for i in items]))
    write_atomic_text(out / "test.txt", "\n".join(lines) + "\n" if lines else "")
    for name, mapping in (("user_map.tsv", split.user_map), ("item_map.tsv", split.item_map)):
        rows = sorted(mapping.items(), key=lambda kv: kv[1])
        write_atomic_text(out / name, "".join(f"{tok}\t{idx}\n" for tok, idx in rows))
    stats = {"m": split.m, "n": split.n, "nnz": split.train.nnz, "seed": split.seed, "k": k_core}
    write_atomic_text(out / "stats.json", json.dumps(stats, sort_keys=True) + "\n")


def load_split(data_dir: str | Path) -> DatasetSplit:
    """Reconstruct a DatasetSplit from a directory written by save_split."""
    d = Path(data_dir)
    if not d.is_dir():
        raise DataError(f"dataset directory not found: {d}")
    stats = json.loads((d / "stats.json").read_text(encoding="utf-8"))
    m, n = int(stats["m"]), int(stats["n"])
    user_map = _read_map(d / "user_map.tsv")
    item_map = _read_map(d / "item_map.tsv")
    if len(user_map) != m or len(item_map) != n:
        raise DataError(f"{d}: token maps disagree with stats.json")
    train_pairs: list[tuple[int, int]] = []
    for u, items in _read_adjacency(d / "train.txt").items():
        train_pairs.extend((u, i) for i in items)
    test: list[list[int]] = [[] for _ in range(m)]
    test_path = d / "test.txt"
    if test_path.exists() and test_path.stat().st_size:
        for u, items in _read_adjacency(test_path).items():
            if u >= m:
                raise DataError(f"{test_path}: user index {u} out of range")
            test[u] = sorted(items)
    train = InteractionMatrix.from_pairs(m, n, train_pairs)
    return DatasetSplit(train=train, test=test, user_map=user_map, item_map=item_map,
                        seed=int(stats["seed"]))


def _read_map(path: Path) -> dict[str, int]:
    mapping: dict[str, int] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError(f"{path}:{lineno}: expected 'token<TAB>index'")
        mapping[parts[0]] = int(parts[1])
    return mapping


def _read_adjacency(path: Path) -> dict[int, list[int]]:
    out: dict[int, list[int]] = {}
    raw = parse_interactions(path, "adjacency-list")
    for u, i in raw.pairs:
        out.setdefault(int(u), []).append(int(i))
    return out
