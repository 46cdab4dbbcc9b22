from bocast.rng import MASK64, SplitMix64, derive, mix64


def test_streams_are_reproducible():
    a = SplitMix64(123)
    b = SplitMix64(123)
    assert [a.next_u64() for _ in range(10)] == [b.next_u64() for _ in range(10)]


def test_known_finalizer_value():
    # Reference first output for seed 0; guards against platform or
    # refactoring drift that would silently change every trace.
    assert mix64(0x9E3779B97F4A7C15) == 0xE220A8397B1DCDAF
    assert SplitMix64(0).next_u64() == 0xE220A8397B1DCDAF


def test_derive_distinguishes_label_paths():
    assert derive(1, "ab", "c") != derive(1, "a", "bc")
    assert derive(1, "x") != derive(2, "x")
    assert derive(7, 0, 1) != derive(7, 0, 2)
    assert 0 <= derive(5, "anything") <= MASK64


def test_randrange_bounds_and_determinism():
    rng = SplitMix64(99)
    vals = [rng.randrange(7) for _ in range(200)]
    assert all(0 <= v < 7 for v in vals)
    assert set(vals) == set(range(7))


def test_shuffle_and_sample_are_seed_deterministic():
    r1, r2 = SplitMix64(5), SplitMix64(5)
    xs, ys = list(range(12)), list(range(12))
    r1.shuffle(xs)
    r2.shuffle(ys)
    assert xs == ys and sorted(xs) == list(range(12))
    assert SplitMix64(5).sample(range(10), 4) == SplitMix64(5).sample(range(10), 4)
