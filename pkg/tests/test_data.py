import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rnndbn.data import (
    Dataset,
    Frame,
    SequenceData,
    corpus_path,
    dumps,
    from_binary_vectors,
    load_pianoroll,
    loads,
    save_pianoroll,
    split,
    to_binary_vectors,
)
from rnndbn.errors import DataError


def write(tmp_path, text, name="d.json"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_single_triad_sequence(tmp_path):
    path = write(tmp_path, '{"name": "t", "num_pitches": 88, "sequences": [[[60, 64, 67], [60, 64, 67]]]}')
    d = load_pianoroll(path)
    assert len(d.sequences) == 1 and len(d.sequences[0]) == 2
    V = to_binary_vectors(d.sequences[0], 88)
    assert V.shape == (2, 88)
    assert list(np.flatnonzero(V[0])) == [60, 64, 67] and np.array_equal(V[0], V[1])


def test_out_of_range_pitch_names_position(tmp_path):
    path = write(tmp_path, '{"name": "t", "num_pitches": 88, "sequences": [[[1], []], [[2], [5, 88]]]}')
    with pytest.raises(DataError, match=r"88.*sequence 1, frame 1"):
        load_pianoroll(path)


@pytest.mark.parametrize("text", [
    "not json",
    "[1, 2]",
    '{"sequences": [[]]}',
    '{"sequences": []}',
    '{"sequences": [[[1.5]]]}',
    '{"sequences": [[[1, 1]]]}',
    '{"num_pitches": 0, "sequences": [[[]]]}',
])
def test_malformed_documents_rejected(text):
    with pytest.raises(DataError):
        loads(text)


def test_missing_file(tmp_path):
    with pytest.raises(DataError):
        load_pianoroll(tmp_path / "absent.json")


def test_round_trip_and_canonical_bytes(tmp_path):
    d = Dataset("mix", 10, ((Frame((3, 1)), Frame(()), Frame((9,))), ((0, 2),)))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    save_pianoroll(d, a)
    loaded = load_pianoroll(a)
    assert loaded == d
    save_pianoroll(loaded, b)
    assert a.read_bytes() == b.read_bytes()
    assert "[]" in a.read_text()
    # same content written in a different order loads to the same dataset
    shuffled = '{"sequences": [[[3, 1], [], [9]], [[2, 0]]], "num_pitches": 10, "name": "mix"}'
    assert dumps(loads(shuffled)) == a.read_text()


def test_binary_vector_boundaries():
    s = SequenceData((Frame(()), Frame((0, 87))))
    V = to_binary_vectors(s, 88)
    assert not V[0].any()
    assert V[1, 0] == 1 and V[1, 87] == 1 and V[1].sum() == 2
    assert from_binary_vectors(V) == s


@given(st.lists(st.sets(st.integers(0, 15), max_size=16), min_size=1, max_size=8))
@settings(max_examples=50, deadline=None)
def test_binary_vectors_bijective(frames):
    s = SequenceData(tuple(Frame(tuple(f)) for f in frames))
    V = to_binary_vectors(s, 16)
    assert list(V.sum(axis=1)) == [len(f) for f in frames]
    assert from_binary_vectors(V) == s


def test_binary_vector_range_error():
    with pytest.raises(DataError):
        to_binary_vectors(SequenceData((Frame((12,)),)), 12)


def ten_sequences():
    return Dataset("ten", 4, tuple(((i % 4,),) for i in range(10)))


def test_split_sizes_and_determinism():
    d = ten_sequences()
    parts = split(d, (0.8, 0.1, 0.1), seed=5)
    assert [len(x.sequences) for x in parts] == [8, 1, 1]
    assert parts == split(d, (0.8, 0.1, 0.1), seed=5)


@given(st.integers(0, 2**64 - 1))
@settings(max_examples=30, deadline=None)
def test_split_disjoint_and_exhaustive(seed):
    d = Dataset("ids", 40, tuple(((i,),) for i in range(40)))
    parts = split(d, (0.6, 0.2, 0.2), seed)
    ids = [s.frames[0].active_pitches[0] for x in parts for s in x.sequences]
    assert sorted(ids) == list(range(40))


@pytest.mark.parametrize("fractions", [(1.0, 0.0, 0.0), (0.5, 0.5), (0.5, 0.3, 0.3), (0.9, -0.1, 0.2)])
def test_split_rejects_bad_fractions(fractions):
    with pytest.raises(ValueError):
        split(ten_sequences(), fractions, 0)


def test_split_needs_enough_sequences():
    with pytest.raises(DataError):
        split(Dataset("two", 4, (((0,),), ((1,),))), (0.8, 0.1, 0.1), 0)


def test_bundled_corpora_load():
    tiny = load_pianoroll(corpus_path("tiny_pattern"))
    assert tiny.num_pitches == 4 and len(tiny.sequences) == 4
    chords = load_pianoroll(corpus_path("tiny_chords"))
    assert chords.num_pitches == 88
    assert chords.all_frames().shape[1] == 88
