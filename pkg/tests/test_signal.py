import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tvseg.signal import (
    GeneratorSpec,
    GridSignal,
    SignalError,
    SplitMix64,
    from_csv,
    from_json,
    generate,
    normalize_to_unit,
    parse_generator,
    read_signal,
    to_csv,
    to_json,
)

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


class TestGridSignal:
    def test_basic(self):
        f = GridSignal([0.2, 0.8])
        assert f.n == 2
        assert f.dx == 0.5
        np.testing.assert_allclose(f.cell_centers(), [0.25, 0.75])

    def test_empty(self):
        with pytest.raises(SignalError, match="empty signal"):
            GridSignal([])

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_non_finite(self, bad):
        with pytest.raises(SignalError):
            GridSignal([0.0, bad])

    def test_values_read_only(self):
        f = GridSignal([1.0, 2.0])
        with pytest.raises(ValueError):
            f.values[0] = 5.0

    def test_equality_and_hash(self):
        a, b = GridSignal([0.1, 0.2]), GridSignal(np.array([0.1, 0.2]))
        assert a == b and hash(a) == hash(b)
        assert a != GridSignal([0.1, 0.3])


class TestCsv:
    def test_two_values(self):
        f = from_csv("0.2\n0.8\n")
        assert f.n == 2
        assert list(f.values) == [0.2, 0.8]

    def test_empty(self):
        with pytest.raises(SignalError, match="empty signal"):
            from_csv("")

    def test_bad_line(self):
        with pytest.raises(SignalError, match="parse error at line 2"):
            from_csv("0.1\nabc\n")

    def test_header_and_blank_lines(self):
        f = from_csv("value\n0.5\n\n0.25\n")
        assert list(f.values) == [0.5, 0.25]

    def test_header_only_is_empty(self):
        with pytest.raises(SignalError, match="empty signal"):
            from_csv("value\n")

    @given(st.lists(finite, min_size=1, max_size=50))
    def test_round_trip(self, vals):
        f = GridSignal(vals)
        g = from_csv(to_csv(f))
        assert np.array_equal(f.values, g.values)


class TestJson:
    def test_format(self):
        d = json.loads(to_json(GridSignal([0.0, 1.0])))
        assert d == {"n": 2, "values": [0.0, 1.0]}

    @given(st.lists(finite, min_size=1, max_size=30))
    def test_round_trip(self, vals):
        f = GridSignal(vals)
        assert np.array_equal(from_json(to_json(f)).values, f.values)

    def test_length_mismatch(self):
        with pytest.raises(SignalError):
            from_json('{"n": 3, "values": [1, 2]}')

    def test_malformed(self):
        with pytest.raises(SignalError):
            from_json("{not json")


def test_read_signal_by_extension(tmp_path):
    f = GridSignal([0.1, 0.7, 0.3])
    (tmp_path / "a.csv").write_text(to_csv(f))
    (tmp_path / "a.json").write_text(to_json(f))
    assert read_signal(str(tmp_path / "a.csv")) == f
    assert read_signal(str(tmp_path / "a.json")) == f


class TestNormalize:
    @pytest.mark.parametrize("vals, want", [
        ([2, 4, 6], [0, 0.5, 1]),
        ([3, 3, 3], [0.5, 0.5, 0.5]),
        ([0.1, 0.9], [0, 1]),
    ])
    def test_examples(self, vals, want):
        np.testing.assert_allclose(normalize_to_unit(GridSignal(vals)).values, want, atol=1e-15)

    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40))
    def test_range_and_order(self, vals):
        g = normalize_to_unit(GridSignal(vals)).values
        assert g.min() >= 0.0 and g.max() <= 1.0
        v = np.asarray(vals)
        i, j = np.argsort(v, kind="stable")[[0, -1]]
        assert g[i] <= g[j]
        # monotone: order is never reversed
        for a in range(len(v) - 1):
            if v[a] < v[a + 1]:
                assert g[a] <= g[a + 1]

    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=40))
    def test_idempotent(self, vals):
        once = normalize_to_unit(GridSignal(vals))
        assert np.array_equal(normalize_to_unit(once).values, once.values)


class TestSplitMix64:
    def test_reference_sequence(self):
        # published reference outputs for seed 1234567
        r = SplitMix64(1234567)
        assert [r.next_u64() for _ in range(5)] == [
            6457827717110365317, 3203168211198807973, 9817491932198370423,
            4593380528125082431, 16408922859458223821,
        ]

    def test_uniform_range(self):
        r = SplitMix64(3)
        xs = [r.uniform() for _ in range(2000)]
        assert min(xs) >= 0.0 and max(xs) < 1.0
        assert abs(np.mean(xs) - 0.5) < 0.03

    def test_below(self):
        r = SplitMix64(9)
        xs = [r.below(7) for _ in range(700)]
        assert set(xs) == set(range(7))


class TestGenerate:
    def test_two_segments_one_jump(self):
        f = generate(GeneratorSpec(seed=7, segments=2), 8)
        assert np.count_nonzero(np.diff(f.values)) == 1

    @pytest.mark.parametrize("segments, n", [(1, 5), (3, 3), (5, 40), (12, 256)])
    def test_segment_count(self, segments, n):
        f = generate(GeneratorSpec(seed=segments, segments=segments), n)
        assert np.count_nonzero(np.diff(f.values)) == segments - 1
        assert f.is_unit()

    def test_weierstrass_zero_terms(self):
        f = generate(GeneratorSpec(kind="weierstrass-type", terms=0), 16)
        assert np.all(f.values == 0.5)

    def test_weierstrass_matches_direct_sum(self):
        n = 1024
        f = generate(GeneratorSpec(kind="weierstrass-type", a=0.5, b=3, terms=8), n)
        x = (np.arange(n) + 0.5) / n
        raw = sum(0.5 ** k * np.cos(3 ** k * np.pi * x) for k in range(8))
        ref = (raw - raw.min()) / (raw.max() - raw.min())
        np.testing.assert_allclose(f.values, ref, atol=1e-12)
        assert f.values.min() == 0.0 and f.values.max() == 1.0
        s = np.sign(ref - 0.5)
        assert np.count_nonzero(s[1:] != s[:-1]) > 10

    def test_deterministic(self):
        spec = GeneratorSpec(seed=42, segments=6)
        assert generate(spec, 300) == generate(spec, 300)
        assert generate(spec, 300) != generate(GeneratorSpec(seed=43, segments=6), 300)

    @pytest.mark.parametrize("spec", [
        GeneratorSpec(segments=0),
        GeneratorSpec(kind="weierstrass-type", a=1.0),
        GeneratorSpec(kind="weierstrass-type", a=0.0),
        GeneratorSpec(kind="weierstrass-type", b=0),
        GeneratorSpec(kind="bogus"),
    ])
    def test_invalid(self, spec):
        with pytest.raises(SignalError, match="invalid generator spec"):
            generate(spec, 10)

    def test_too_many_segments(self):
        with pytest.raises(SignalError, match="invalid generator spec"):
            generate(GeneratorSpec(segments=5), 3)


class TestParseGenerator:
    def test_pwc(self):
        spec = parse_generator("pwc:5:seed=7")
        assert spec.kind == "piecewise-constant" and spec.segments == 5 and spec.seed == 7

    def test_weierstrass(self):
        spec = parse_generator("weierstrass:a=0.5:b=3:terms=8")
        assert (spec.kind, spec.a, spec.b, spec.terms) == ("weierstrass-type", 0.5, 3, 8)

    @pytest.mark.parametrize("text", ["", "nope:3", "pwc:x", "pwc:seed=-1", "weierstrass:a=2"])
    def test_bad(self, text):
        with pytest.raises(SignalError):
            parse_generator(text)


@settings(max_examples=50)
@given(st.integers(0, 2**63), st.integers(1, 8), st.integers(8, 64))
def test_generated_pwc_contract(seed, segments, n):
    f = generate(GeneratorSpec(seed=seed, segments=segments), n)
    assert f.n == n and f.is_unit()
    assert np.count_nonzero(np.diff(f.values)) == segments - 1
