"""Piano-roll datasets: binary frames over a fixed pitch range.

On disk a dataset is one UTF-8 JSON document::

    {"name": "jsb", "num_pitches": 88, "sequences": [[[39, 43, 46], [], ...], ...]}

Each frame is the sorted list of active pitch indices. With 88 pitches,
index 0 is A0 (MIDI note 21) and index 87 is C8 (MIDI note 108).
"""

import json
from dataclasses import dataclass
from importlib.resources import files

import numpy as np

from .errors import DataError
from .numerics import make_rng

PIANO_PITCHES = 88
MIDI_OFFSET = 21


@dataclass(frozen=True)
class Frame:
    active_pitches: tuple = ()

    def __post_init__(self):
        pitches = tuple(sorted(int(i) for i in self.active_pitches))
        if len(set(pitches)) != len(pitches):
            raise DataError(f"duplicate pitch in frame {pitches}")
        object.__setattr__(self, "active_pitches", pitches)


@dataclass(frozen=True)
class SequenceData:
    frames: tuple

    def __post_init__(self):
        frames = tuple(f if isinstance(f, Frame) else Frame(tuple(f)) for f in self.frames)
        if not frames:
            raise DataError("a sequence needs at least one frame")
        object.__setattr__(self, "frames", frames)

    def __len__(self):
        return len(self.frames)


@dataclass(frozen=True)
class Dataset:
    name: str
    num_pitches: int
    sequences: tuple

    def __post_init__(self):
        if int(self.num_pitches) != self.num_pitches or self.num_pitches < 1:
            raise DataError(f"num_pitches must be a positive integer, got {self.num_pitches}")
        seqs = tuple(s if isinstance(s, SequenceData) else SequenceData(tuple(s))
                     for s in self.sequences)
        if not seqs:
            raise DataError("a dataset needs at least one sequence")
        for i, s in enumerate(seqs):
            for t, f in enumerate(s.frames):
                for pitch in f.active_pitches:
                    if not 0 <= pitch < self.num_pitches:
                        raise DataError(
                            f"pitch index {pitch} out of range [0, {self.num_pitches}) "
                            f"at sequence {i}, frame {t}"
                        )
        object.__setattr__(self, "sequences", seqs)

    def binary_sequences(self):
        return [to_binary_vectors(s, self.num_pitches) for s in self.sequences]

    def all_frames(self):
        return np.vstack(self.binary_sequences())


def to_binary_vectors(s, num_pitches):
    """``(T, num_pitches)`` array with ones at each frame's active pitches."""
    out = np.zeros((len(s.frames), num_pitches))
    for t, f in enumerate(s.frames):
        for pitch in f.active_pitches:
            if not 0 <= pitch < num_pitches:
                raise DataError(f"pitch index {pitch} out of range at frame {t}")
            out[t, pitch] = 1.0
    return out


def from_binary_vectors(V):
    """Inverse of :func:`to_binary_vectors`."""
    V = np.asarray(V)
    if V.ndim != 2 or not np.all((V == 0) | (V == 1)):
        raise DataError("expected a 2-D array of zeros and ones")
    return SequenceData(tuple(Frame(tuple(np.flatnonzero(row).tolist())) for row in V))


def dumps(d):
    """Canonical text: fixed key order, sorted pitches, one sequence per line."""
    seqs = ",\n    ".join(
        json.dumps([list(f.active_pitches) for f in s.frames]) for s in d.sequences
    )
    return (
        "{\n"
        f'  "name": {json.dumps(d.name)},\n'
        f'  "num_pitches": {int(d.num_pitches)},\n'
        f'  "sequences": [\n    {seqs}\n  ]\n'
        "}\n"
    )


def loads(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise DataError(f"not valid JSON: {e}") from e
    if not isinstance(doc, dict) or "sequences" not in doc:
        raise DataError('expected an object with a "sequences" field')
    num_pitches = doc.get("num_pitches", PIANO_PITCHES)
    seqs = doc["sequences"]
    if not isinstance(seqs, list):
        raise DataError('"sequences" must be a list')
    parsed = []
    for i, s in enumerate(seqs):
        if not isinstance(s, list) or not s:
            raise DataError(f"sequence {i} must be a non-empty list of frames")
        frames = []
        for t, f in enumerate(s):
            if not isinstance(f, list) or not all(isinstance(x, int) and not isinstance(x, bool)
                                                  for x in f):
                raise DataError(f"frame {t} of sequence {i} must be a list of integers")
            frames.append(Frame(tuple(f)))
        parsed.append(SequenceData(tuple(frames)))
    return Dataset(str(doc.get("name", "")), num_pitches, tuple(parsed))


def load_pianoroll(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e
    return loads(text)


def save_pianoroll(d, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(d))


def split(d, fractions, seed):
    """Seeded shuffle of whole sequences, cut into train/valid/test parts."""
    if len(fractions) != 3 or any(not f > 0 for f in fractions):
        raise ValueError(f"need three positive fractions, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {sum(fractions)}")
    n = len(d.sequences)
    n_valid = int(round(fractions[1] * n))
    n_test = int(round(fractions[2] * n))
    n_train = n - n_valid - n_test
    if min(n_train, n_valid, n_test) < 1:
        raise DataError(f"{n} sequences are too few for a three-way split {fractions}")
    order = make_rng(seed).permutation(n)
    parts = np.split(order, [n_train, n_train + n_valid])
    return tuple(
        Dataset(f"{d.name}-{tag}", d.num_pitches, tuple(d.sequences[i] for i in idx))
        for tag, idx in zip(("train", "valid", "test"), parts)
    )


def corpus_path(name):
    """Path of a corpus bundled with the package, e.g. ``"tiny_pattern"``."""
    return str(files("rnndbn") / "corpora" / f"{name}.json")
