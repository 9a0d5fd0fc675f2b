import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaborbarcode.barcodes import Barcode
from gaborbarcode.index import (BarcodeIndex, CorruptIndexError, DuplicateIdError,
                                EmptyIndexError, IndexEntry, IndexFormatError,
                                MixedDescriptorError, build_index, dumps, load_index, loads,
                                query, save_index, similarity)
from gaborbarcode.irma import parse_irma

from oracles import naive_hamming, sort_all_top_k

TAG = "GBC(1,1,5,5)"


def code(bits, tag=TAG):
    return Barcode(np.asarray(bits), tag[:3], tag)


def random_index(rng, n, length, tag=TAG):
    return build_index([IndexEntry(f"img{i}", code(rng.integers(0, 2, length), tag)) for i in range(n)])


def test_similarity_examples(rng):
    a = code(rng.integers(0, 2, 100))
    assert similarity(a, a) == 1.0
    assert similarity(a, code(1 - a.bits)) == 0.0
    b = code([0, 1, 1, 0, 1, 0, 0, 1])
    c = code([1, 1, 1, 0, 1, 0, 0, 0])
    assert similarity(b, c) == 0.75


def test_similarity_length_mismatch():
    with pytest.raises(MixedDescriptorError):
        similarity(code([0, 1]), code([0, 1, 1]))


bitvecs = st.integers(1, 200).flatmap(
    lambda n: st.tuples(*[st.lists(st.integers(0, 1), min_size=n, max_size=n)] * 3))


@settings(max_examples=100)
@given(bitvecs)
def test_similarity_metric_laws(triple):
    a, b, c = (code(x) for x in triple)
    n = a.length
    assert similarity(a, b) == similarity(b, a)
    assert similarity(a, a) == 1.0
    assert similarity(a, b) == 1 - naive_hamming(triple[0], triple[1]) / n
    d = lambda x, y: round((1 - similarity(x, y)) * n)
    assert d(a, c) <= d(a, b) + d(b, c)


def test_self_retrieval(rng):
    index = random_index(rng, 50, 256)
    probe = index["img17"].barcode
    assert query(index, probe, 1) == [("img17", 1.0)]


def test_k_larger_than_index(rng):
    index = random_index(rng, 5, 64)
    hits = index.query(index["img0"].barcode, 10)
    assert len(hits) == 5 and hits[0] == ("img0", 1.0)
    sims = [s for _, s in hits]
    assert sims == sorted(sims, reverse=True)


def test_query_matches_sort_all_oracle(rng):
    index = random_index(rng, 100, 300)
    for _ in range(20):
        probe = code(rng.integers(0, 2, 300))
        dists = [naive_hamming(probe.bits, e.barcode.bits) for e in index]
        expected = [f"img{i}" for i in sort_all_top_k(dists, 7)]
        assert [i for i, _ in index.query(probe, 7)] == expected


def test_ties_broken_by_insertion_order():
    entries = [IndexEntry(n, code([1, 0, 1, 0])) for n in ("c", "a", "b")]
    assert [i for i, _ in build_index(entries).query(code([1, 0, 1, 0]), 3)] == ["c", "a", "b"]


def test_query_permutation_invariance(rng):
    index = random_index(rng, 40, 128)
    perm = rng.permutation(40)
    shuffled = build_index([index.entries[i] for i in perm])
    probe = code(rng.integers(0, 2, 128))
    a = dict(index.query(probe, 40))
    b = dict(shuffled.query(probe, 40))
    assert a == b


def test_query_errors(rng):
    index = random_index(rng, 3, 64)
    with pytest.raises(MixedDescriptorError):
        index.query(code(np.zeros(32)), 1)
    with pytest.raises(MixedDescriptorError):
        index.query(code(np.zeros(64), "RBC(1,64)"), 1)
    with pytest.raises(ValueError):
        index.query(code(np.zeros(64)), 0)


def test_build_errors():
    assert len(build_index([IndexEntry("x", code([1, 0]))])) == 1
    with pytest.raises(DuplicateIdError):
        build_index([IndexEntry("x", code([1, 0])), IndexEntry("x", code([0, 0]))])
    with pytest.raises(MixedDescriptorError):
        build_index([IndexEntry("x", code(np.zeros(512))), IndexEntry("y", code(np.zeros(1024)))])
    with pytest.raises(MixedDescriptorError):
        build_index([IndexEntry("x", code([1, 0])), IndexEntry("y", code([1, 0], "RBC(1,2)"))])
    with pytest.raises(EmptyIndexError):
        build_index([])


def labeled_index(rng, length=200):
    labels = ["1121-4a0-914-700", None, "1123-127-500-000"]
    return build_index([IndexEntry(f"id-{i}-é", code(rng.integers(0, 2, length)),
                                   parse_irma(l) if l else None) for i, l in enumerate(labels)])


def test_roundtrip(tmp_path, rng):
    index = labeled_index(rng)
    save_index(index, tmp_path / "x.gbcx")
    loaded = load_index(tmp_path / "x.gbcx")
    assert loaded == index
    assert dumps(loaded) == dumps(index)
    assert loaded["id-1-é"].label is None
    assert str(loaded["id-0-é"].label) == "1121-4a0-914-700"


def test_layout_header(rng):
    data = dumps(labeled_index(rng, 130))
    assert data[:4] == b"GBCX"
    assert int.from_bytes(data[4:6], "little") == 1
    assert int.from_bytes(data[6:10], "little") == 130
    assert int.from_bytes(data[10:14], "little") == 3
    assert int.from_bytes(data[14:16], "little") == len(TAG)
    assert data[16:16 + len(TAG)] == TAG.encode()


def test_truncated_file_rejected(rng):
    data = dumps(labeled_index(rng))
    for cut in (5, 20, len(data) // 2, len(data) - 1):
        with pytest.raises(CorruptIndexError):
            loads(data[:cut])


def test_flipped_bit_rejected(rng):
    data = bytearray(dumps(labeled_index(rng)))
    data[len(data) // 2] ^= 0x10
    with pytest.raises(CorruptIndexError):
        loads(bytes(data))


def test_bad_magic_and_version(rng):
    data = dumps(labeled_index(rng))
    with pytest.raises(IndexFormatError):
        loads(b"XXXX" + data[4:])
    with pytest.raises(IndexFormatError):
        loads(data[:4] + (2).to_bytes(2, "little") + data[6:])
