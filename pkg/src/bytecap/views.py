"""Traffic views, header-byte categories and dataset assembly.

A capture is grouped into units per view (packet / flow / session), each
unit's packets are stripped per header category, and the concatenated
bytes become one fixed-length labeled sample. Datasets serialize to a
small binary format (magic "FTLD") that round-trips byte-exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from .pcap import (
    Dissection,
    L3Kind,
    PacketRecord,
    dissect,
    keys,
    read_pcap,
)

DEFAULT_SAMPLE_LEN = 115  # reproduces the reference model's shape column


class ViewKind(Enum):
    PACKET = "packet"
    FLOW = "flow"
    SESSION = "session"


class HeaderCategory(Enum):
    ALL_HEADERS = "all_headers"
    ONLY_ETHERNET = "only_ethernet"
    WITHOUT_ETHERNET = "without_ethernet"
    NO_HEADERS = "no_headers"


BINARY_CLASSES = ["benign", "malicious"]

# 12 botnet scenario names, fixed order.
BOTNET_CLASSES = [
    "Hide and Seek",
    "Muhstik",
    "Linux.Mirai",
    "Hakai",
    "Linux.Hajime",
    "Kenjiro",
    "Torii",
    "Mirai",
    "Okiru",
    "IRCBot",
    "Trojan",
    "Gagfyt",
]


def class_catalog(task: str) -> list[str]:
    if task == "binary":
        return list(BINARY_CLASSES)
    if task == "multi":
        return list(BOTNET_CLASSES)
    raise ValueError(f"unknown task {task!r}, expected 'binary' or 'multi'")


@dataclass
class Sample:
    """One fixed-length labeled byte vector.

    source/unit/stripped_len are build-time provenance; they are not
    serialized and are None on datasets read back from disk.
    """

    label: int
    data: bytes
    source: Optional[str] = None
    unit: object = None
    stripped_len: Optional[int] = None


@dataclass
class DatasetFile:
    view: ViewKind
    category: HeaderCategory
    sample_len: int
    class_names: list[str]
    samples: list[Sample] = field(default_factory=list)

    def class_counts(self) -> dict[str, int]:
        counts = {name: 0 for name in self.class_names}
        for s in self.samples:
            counts[self.class_names[s.label]] += 1
        return counts

    def tensors(self) -> tuple[np.ndarray, np.ndarray]:
        """Byte matrix scaled to [0,1] as (count, sample_len, 1) plus labels."""
        n = len(self.samples)
        x = np.frombuffer(
            b"".join(s.data for s in self.samples), dtype=np.uint8
        ).reshape(n, self.sample_len, 1)
        y = np.array([s.label for s in self.samples], dtype=np.int64)
        return x.astype(np.float32) / 255.0, y


PacketPair = tuple[PacketRecord, Dissection]


def filter_packets(pairs: Iterable[PacketPair], view: ViewKind,
                   include_non_ip: bool = False) -> list[PacketPair]:
    """Drop non-IP packets; optionally keep them for the packet view."""
    kept = []
    for rec, dis in pairs:
        if dis.l3_kind is L3Kind.NON_IP and not (include_non_ip and view is ViewKind.PACKET):
            continue
        kept.append((rec, dis))
    return kept


def split_view(pairs: Sequence[PacketPair], view: ViewKind) -> dict:
    """Group packets into units; keys are flow/session keys or packet index.

    Insertion order is first-appearance order, so iterating the result
    visits units by their first packet's position in the capture.
    """
    units: dict = {}
    if view is ViewKind.PACKET:
        for rec, dis in pairs:
            units[rec.index] = [(rec, dis)]
        return units
    for rec, dis in pairs:
        flow, session = keys(dis)
        key = session if view is ViewKind.SESSION else flow
        units.setdefault(key, []).append((rec, dis))
    return units


def strip_headers(data: bytes, d: Dissection, cat: HeaderCategory) -> bytes:
    """Excise header bytes per category.

    When a needed boundary is absent (non-IP or truncated layer) the rule
    falls back to the nearest present boundary rather than dropping data.
    """
    if cat is HeaderCategory.ALL_HEADERS:
        return data
    if cat is HeaderCategory.WITHOUT_ETHERNET:
        return data[d.eth_end:]
    if cat is HeaderCategory.ONLY_ETHERNET:
        if d.ip_end is None:
            return data
        return data[:d.eth_end] + data[d.ip_end:]
    if cat is HeaderCategory.NO_HEADERS:
        cut = d.ip_end if d.ip_end is not None else d.eth_end
        return data[cut:]
    raise ValueError(f"unknown category {cat!r}")


def assemble_sample(unit: Sequence[PacketPair], cat: HeaderCategory,
                    n: int) -> tuple[bytes, int]:
    """Concatenate stripped packet bytes in time order into an n-byte vector.

    Returns (vector, total stripped length before truncation). Truncation
    keeps the first n bytes; shorter streams are right-padded with zeros.
    """
    if n < 1:
        raise ValueError("sample length must be >= 1")
    total = 0
    pieces = []
    have = 0
    for rec, dis in unit:
        sb = strip_headers(rec.data, dis, cat)
        total += len(sb)
        if have < n:
            take = sb[:n - have]
            pieces.append(take)
            have += len(take)
    data = b"".join(pieces)
    if len(data) < n:
        data = data.ljust(n, b"\x00")
    return data, total


def label_index(name: str, task: str) -> Optional[int]:
    """Map a scenario name to its class index; None means 'skip this file'."""
    if task == "binary":
        if name == "benign":
            return 0
        if name == "malicious" or name in BOTNET_CLASSES:
            return 1
        raise ValueError(f"unknown class label {name!r} for binary task")
    if task == "multi":
        if name == "benign":
            return None  # multi-class is botnet-only
        try:
            return BOTNET_CLASSES.index(name)
        except ValueError:
            raise ValueError(f"unknown class label {name!r} for multi task") from None
    raise ValueError(f"unknown task {task!r}")


def build_dataset(inputs: Sequence[tuple[str, str]], view: ViewKind,
                  cat: HeaderCategory, n: int, task: str, *,
                  include_non_ip: bool = False,
                  drop_empty: bool = False) -> DatasetFile:
    """Turn labeled pcaps into one dataset: per-file units, merged in order.

    `inputs` is a list of (pcap path, class name). Every unit inherits its
    capture's label. Output order is source file order, then unit
    first-packet order, so rebuilding the same inputs is deterministic.
    """
    names = class_catalog(task)
    ds = DatasetFile(view=view, category=cat, sample_len=n, class_names=names)
    for path, label_name in inputs:
        label = label_index(label_name, task)
        if label is None:
            continue
        with read_pcap(path) as reader:
            pairs = [(rec, dissect(rec, reader.meta.link_type)) for rec in reader]
        pairs = filter_packets(pairs, view, include_non_ip)
        for key, unit in split_view(pairs, view).items():
            data, total = assemble_sample(unit, cat, n)
            if drop_empty and total == 0:
                continue
            ds.samples.append(Sample(
                label=label, data=data, source=str(path), unit=key,
                stripped_len=total,
            ))
    return ds


def byte_distribution(ds: DatasetFile) -> dict[str, int]:
    """Total stripped (pre-padding) byte count per class.

    Needs build-time provenance; datasets loaded from disk no longer carry
    per-sample stripped lengths.
    """
    if not ds.samples:
        return {}
    totals = {name: 0 for name in ds.class_names}
    for s in ds.samples:
        if s.stripped_len is None:
            raise ValueError("byte_distribution needs an in-memory dataset "
                             "built by build_dataset (stripped lengths are "
                             "not serialized)")
        totals[ds.class_names[s.label]] += s.stripped_len
    return totals


_DATASET_MAGIC = b"FTLD"
_DATASET_VERSION = 1
_VIEW_CODES = {ViewKind.PACKET: 0, ViewKind.FLOW: 1, ViewKind.SESSION: 2}
_CATEGORY_CODES = {
    HeaderCategory.ALL_HEADERS: 0,
    HeaderCategory.ONLY_ETHERNET: 1,
    HeaderCategory.WITHOUT_ETHERNET: 2,
    HeaderCategory.NO_HEADERS: 3,
}
_VIEW_FROM_CODE = {v: k for k, v in _VIEW_CODES.items()}
_CATEGORY_FROM_CODE = {v: k for k, v in _CATEGORY_CODES.items()}


class DatasetFormatError(ValueError):
    pass


def write_dataset(path, ds: DatasetFile):
    """Serialize (little-endian): FTLD, version, view, category, sample_len,
    class table, then sample_count records of label u16 + raw bytes."""
    with open(path, "wb") as fp:
        fp.write(_DATASET_MAGIC)
        fp.write(struct.pack("<HBBIH", _DATASET_VERSION, _VIEW_CODES[ds.view],
                             _CATEGORY_CODES[ds.category], ds.sample_len,
                             len(ds.class_names)))
        for name in ds.class_names:
            raw = name.encode("utf-8")
            fp.write(struct.pack("<H", len(raw)))
            fp.write(raw)
        fp.write(struct.pack("<Q", len(ds.samples)))
        for s in ds.samples:
            if len(s.data) != ds.sample_len:
                raise ValueError("sample length does not match dataset sample_len")
            if not 0 <= s.label < len(ds.class_names):
                raise ValueError(f"label {s.label} out of range")
            fp.write(struct.pack("<H", s.label))
            fp.write(s.data)


def read_dataset(path) -> DatasetFile:
    with open(path, "rb") as fp:
        magic = fp.read(4)
        if magic != _DATASET_MAGIC:
            raise DatasetFormatError(f"{path}: bad dataset magic {magic!r}")
        head = fp.read(10)
        if len(head) < 10:
            raise DatasetFormatError(f"{path}: truncated dataset header")
        version, view_code, cat_code, sample_len, class_count = struct.unpack("<HBBIH", head)
        if version != _DATASET_VERSION:
            raise DatasetFormatError(f"{path}: unsupported dataset version {version}")
        if view_code not in _VIEW_FROM_CODE or cat_code not in _CATEGORY_FROM_CODE:
            raise DatasetFormatError(f"{path}: unknown view/category codes")
        if class_count == 0:
            raise DatasetFormatError(f"{path}: empty class table")
        names = []
        for _ in range(class_count):
            ln = fp.read(2)
            if len(ln) < 2:
                raise DatasetFormatError(f"{path}: truncated class table")
            (name_len,) = struct.unpack("<H", ln)
            raw = fp.read(name_len)
            if len(raw) < name_len:
                raise DatasetFormatError(f"{path}: truncated class name")
            names.append(raw.decode("utf-8"))
        cnt_raw = fp.read(8)
        if len(cnt_raw) < 8:
            raise DatasetFormatError(f"{path}: truncated sample count")
        (count,) = struct.unpack("<Q", cnt_raw)
        ds = DatasetFile(view=_VIEW_FROM_CODE[view_code],
                         category=_CATEGORY_FROM_CODE[cat_code],
                         sample_len=sample_len, class_names=names)
        for i in range(count):
            rec = fp.read(2 + sample_len)
            if len(rec) < 2 + sample_len:
                raise DatasetFormatError(f"{path}: truncated at sample {i}")
            (label,) = struct.unpack("<H", rec[:2])
            if label >= class_count:
                raise DatasetFormatError(f"{path}: sample {i} label {label} out of range")
            ds.samples.append(Sample(label=label, data=rec[2:]))
        return ds


def split_indices(labels, val_fraction: float = 0.2,
                  seed: int = 0) -> tuple[list[int], list[int]]:
    """Stratified (train, val) index split with a seeded shuffle.

    Every class with >= 2 members contributes at least one index to each
    side; singleton classes stay in the training side.
    """
    rng = np.random.default_rng(seed)
    by_class: dict[int, list[int]] = {}
    for i, label in enumerate(labels):
        by_class.setdefault(int(label), []).append(i)
    val_idx: list[int] = []
    train_idx: list[int] = []
    for label in sorted(by_class):
        idx = np.array(by_class[label])
        rng.shuffle(idx)
        n_val = int(round(len(idx) * val_fraction))
        if len(idx) >= 2:
            n_val = min(max(n_val, 1), len(idx) - 1)
        else:
            n_val = 0
        val_idx.extend(int(i) for i in idx[:n_val])
        train_idx.extend(int(i) for i in idx[n_val:])
    train_idx.sort()
    val_idx.sort()
    return train_idx, val_idx


def train_val_split(ds: DatasetFile, val_fraction: float = 0.2,
                    seed: int = 0) -> tuple[DatasetFile, DatasetFile]:
    """Stratified dataset split; see split_indices for the rules."""
    train_idx, val_idx = split_indices([s.label for s in ds.samples],
                                       val_fraction, seed)

    def subset(indices):
        return DatasetFile(view=ds.view, category=ds.category,
                           sample_len=ds.sample_len,
                           class_names=list(ds.class_names),
                           samples=[ds.samples[i] for i in indices])

    return subset(train_idx), subset(val_idx)
