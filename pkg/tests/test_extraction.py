import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vcselrng.extraction import (
    BitStream, ExtractionConfig, LatchState, TimingError, comparator_bit, delay_schedule,
    extract, extract_reference, interpolate, throughput, validate_timing, write_trace_csv,
)
from vcselrng.sfm import Trajectory, integrate, paper_operating_point


def synthetic(values, dt=1e-3, t0=0.0):
    v = np.asarray(values, dtype=np.float64)
    return Trajectory(dt=dt, t0=t0, I_x=v, I_y=v.copy())


class TestSchedule:
    def test_examples(self):
        assert delay_schedule(1)[0] == pytest.approx(math.sqrt(2.2), rel=1e-15)
        T = delay_schedule(39)
        assert T[-1] == pytest.approx(math.sqrt(123.8), rel=1e-15)
        assert T[-1] - T[-2] == pytest.approx(math.sqrt(123.8) - math.sqrt(120.6), rel=1e-12)
        assert np.all(np.diff(T) > 0)

    def test_invalid(self):
        with pytest.raises(ValueError):
            delay_schedule(0)


class TestTiming:
    def test_desk_scale_passes(self):
        cfg = ExtractionConfig(M=4, f_c=10.0)
        rep = validate_timing(cfg, 15.0)
        assert rep.passes and rep.min_gap > 0.1
        assert rep.min_gap == pytest.approx(math.sqrt(11.8) - math.sqrt(8.6))

    def test_paper_advisory(self):
        rep = validate_timing(ExtractionConfig(M=39, f_c=34.5), 30.0)
        assert rep.delta_tau == pytest.approx(1 / 34.5 / 39)
        assert rep.ratio == pytest.approx(30.0 / 34.5 / 39)
        assert not rep.advisory and not rep.strong

    def test_equal_delays_name_pair(self):
        with pytest.raises(TimingError) as e:
            ExtractionConfig(M=3, f_c=1.0, schedule=(2.0, 5.0, 2.0))
        assert e.value.pair == (1, 3)

    def test_short_delay(self):
        with pytest.raises(TimingError):
            ExtractionConfig(M=1, f_c=1.0, schedule=(0.5,))

    def test_delta_tau_exact(self):
        cfg = ExtractionConfig(M=39, f_c=34.5)
        assert cfg.delta_tau == cfg.tau / 39

    @pytest.mark.parametrize("kw", [dict(M=0, f_c=1.0), dict(M=2, f_c=0.0),
                                    dict(M=2, f_c=1.0, tie_rule=2),
                                    dict(M=2, f_c=1.0, schedule=(3.0,))])
    def test_invalid_config(self, kw):
        with pytest.raises(ValueError):
            ExtractionConfig(**kw)


class TestThroughput:
    def test_examples(self):
        assert throughput(ExtractionConfig(M=39, f_c=34.5), 2) == 2.691e12
        assert throughput(ExtractionConfig(M=1, f_c=1.0), 1) == 1e9
        assert throughput(ExtractionConfig(M=4, f_c=10.0), 2) == 8e10

    def test_channels(self):
        with pytest.raises(ValueError):
            throughput(ExtractionConfig(M=1, f_c=1.0), 3)


class TestInterpolation:
    @given(st.lists(st.floats(-5, 5), min_size=4, max_size=4), st.floats(0.002, 0.9))
    def test_exact_on_cubics(self, coef, t):
        grid = np.arange(1000) * 1e-3
        poly = np.polynomial.Polynomial(coef)
        v = interpolate(poly(grid), 0.0, 1e-3, [t])[0]
        assert v == pytest.approx(poly(t), abs=1e-9)

    def test_against_dense_resampling(self):
        dense = integrate(paper_operating_point(), h=5e-5, t_end=230.0, decimation=1,
                          warmup=220.0)
        coarse_I = dense.I_x[::20]
        t = dense.times[40:-60]
        approx = interpolate(coarse_I, dense.t0, dense.dt * 20, t)
        err = np.max(np.abs(approx - dense.I_x[40:-60])) / np.ptp(dense.I_x)
        assert err < 1e-3

    def test_on_grid_returns_sample(self, rng):
        v = rng.normal(size=50)
        assert interpolate(v, 2.0, 0.5, [2.0 + 10 * 0.5])[0] == v[10]


class TestComparator:
    def test_tie(self):
        I = np.ones(100)
        assert comparator_bit(I, 0.0, 1e-3, 0.05, 0.02) == 0
        assert comparator_bit(I, 0.0, 1e-3, 0.05, 0.02, tie_rule=1) == 1

    def test_ramps(self):
        t = np.arange(1000) * 1e-3
        assert comparator_bit(t, 0.0, 1e-3, 0.5, 0.1234) == 1
        assert comparator_bit(-t, 0.0, 1e-3, 0.5, 0.1234) == 0

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            comparator_bit(np.zeros(100), 0.0, 1e-3, 0.05, 0.2)


class TestExtract:
    def test_hand_trace_m3(self):
        cfg = ExtractionConfig(M=3, f_c=10.0, t_start=5.0)
        dt = 1e-3
        t = np.arange(6000) * dt
        I = np.zeros_like(t)
        I[(t > 4.99) & (t < 5.02)] = 1.0   # ff1 sees I(e) > I(e - T1)
        I[(t > 5.05) & (t < 5.08)] = 1.0   # ff3 likewise; ff2 sees a tie
        res = extract(synthetic(I, dt), "x", cfg, cfg.tau)
        assert list(res.bits.bits()) == [1, 1, 0]
        res1 = extract(synthetic(I, dt), "x", ExtractionConfig(M=3, f_c=10.0, t_start=5.0,
                                                               tie_rule=1), cfg.tau)
        assert list(res1.bits.bits()) == [1, 0, 1]

    def test_m1_is_latched_stream(self, short_trajectory):
        cfg = ExtractionConfig(M=1, f_c=20.0)
        res = extract(short_trajectory, "x", cfg, 20.0)
        t0 = cfg.start_for(short_trajectory)
        I = short_trajectory.I_x
        expect = [comparator_bit(I, short_trajectory.t0, short_trajectory.dt,
                                 cfg.edge_time(k, 0, t0), cfg.schedule[0])
                  for k in range(len(res.bits))]
        assert list(res.bits.bits()) == expect

    @pytest.mark.parametrize("M", [1, 2, 3, 4, 5])
    def test_monotone_degeneracy(self, M):
        cfg = ExtractionConfig(M=M, f_c=5.0)
        t = np.arange(30000) * 1e-3
        up = extract(synthetic(t), "x", cfg, 10.0).bits.bits()
        down = extract(synthetic(-t), "x", cfg, 10.0).bits.bits()
        assert np.all(up[M:] == M % 2)
        assert np.all(down == 0)

    def test_rate_exactness(self, short_trajectory):
        for M, fc, dur in ((4, 10.0, 13.37), (39, 34.5, 7.0), (3, 2.9, 11.0)):
            cfg = ExtractionConfig(M=M, f_c=fc)
            res = extract(short_trajectory, "y", cfg, dur)
            assert len(res.bits) == M * math.floor(dur * fc + 1e-9)

    def test_parity_locality(self, short_trajectory):
        cfg = ExtractionConfig(M=4, f_c=10.0)
        res = extract(short_trajectory, "x", cfg, 30.0, trace_rows=400)
        bits = res.bits.bits()[:400]
        assert np.array_equal(bits, np.bitwise_xor.reduce(res.trace, axis=1))
        changed = np.count_nonzero(res.trace[1:] != res.trace[:-1], axis=1)
        assert np.all(changed <= 1)
        assert np.array_equal(bits[1:] != bits[:-1], changed == 1)
        # each emission may only change the latch of the flip-flop that fired
        rows, cols = np.nonzero(res.trace[1:] != res.trace[:-1])
        assert np.all(cols == (rows + 1) % 4)

    def test_reference_equivalence(self, short_trajectory):
        rng = np.random.default_rng(7)
        for M in (1, 3, 4, 17, 39):
            fc = float(rng.uniform(10, 30)) if M < 39 else 34.5
            cfg = ExtractionConfig(M=M, f_c=fc, tie_rule=int(rng.integers(2)))
            a = extract(short_trajectory, "x", cfg, 20.0).bits
            b = extract_reference(short_trajectory, "x", cfg, 20.0)
            assert a == b

    def test_discard(self, short_trajectory):
        cfg = ExtractionConfig(M=4, f_c=10.0)
        full = extract(short_trajectory, "x", cfg, 10.0).bits.bits()
        cut = extract(short_trajectory, "x", ExtractionConfig(M=4, f_c=10.0, discard=4),
                      10.0).bits.bits()
        assert np.array_equal(full[4:], cut)

    def test_deterministic(self, short_trajectory):
        cfg = ExtractionConfig(M=17, f_c=20.0)
        assert extract(short_trajectory, "y", cfg, 10.0).bits == \
            extract(short_trajectory, "y", cfg, 10.0).bits

    def test_range_error(self, short_trajectory):
        with pytest.raises(ValueError):
            extract(short_trajectory, "x", ExtractionConfig(M=4, f_c=10.0), 500.0)

    def test_meta_and_trace_csv(self, short_trajectory, tmp_path):
        cfg = ExtractionConfig(M=4, f_c=10.0)
        res = extract(short_trajectory, "x", cfg, 5.0, trace_rows=8)
        assert res.bits.meta["M"] == 4 and res.bits.meta["channel"] == "x"
        write_trace_csv(tmp_path / "tr.csv", res)
        lines = (tmp_path / "tr.csv").read_text().splitlines()
        assert lines[0] == "t_ns,ff_1,ff_2,ff_3,ff_4,xor"
        assert len(lines) == 9

    def test_latch_state(self):
        s = LatchState.reset(3)
        assert s.parity == 0 and s.latches.tolist() == [0, 0, 0]


class TestBitStream:
    def test_lsb_first(self):
        bs = BitStream.from_bits([1, 0, 0, 0, 0, 0, 0, 0, 1, 1])
        assert bs.data == bytes([0x01, 0x03])
        assert bs.bit_count == 10

    def test_trailing_bits_checked(self):
        with pytest.raises(ValueError):
            BitStream(bytes([0xFF]), 3)

    @given(st.lists(st.integers(0, 1), max_size=200))
    def test_roundtrip(self, bits):
        assert BitStream.from_bits(bits).bits().tolist() == bits

    def test_save_load(self, tmp_path):
        bs = BitStream.from_bits([1, 1, 0, 1, 0], {"channel": "x", "M": 4})
        bs.save(tmp_path / "b.bin")
        side = json.loads((tmp_path / "b.bin.json").read_text())
        assert side["bit_count"] == 5 and side["channel"] == "x"
        back = BitStream.load(tmp_path / "b.bin")
        assert back == bs and back.meta["M"] == 4

    def test_load_ascii_and_raw(self, tmp_path):
        (tmp_path / "a.txt").write_text("0110\n1\n")
        assert BitStream.load(tmp_path / "a.txt").bits().tolist() == [0, 1, 1, 0, 1]
        (tmp_path / "r.bin").write_bytes(bytes([0x80]))
        assert BitStream.load(tmp_path / "r.bin").bits().tolist() == [0] * 7 + [1]

    def test_concat_split(self):
        a = BitStream.from_bits([1, 0, 1])
        b = BitStream.from_bits([0, 0])
        c = a.concat(b)
        assert c.bits().tolist() == [1, 0, 1, 0, 0]
        parts = c.split(2)
        assert [p.bits().tolist() for p in parts] == [[1, 0], [1, 0]]
        with pytest.raises(ValueError):
            c.split(2, count=3)
