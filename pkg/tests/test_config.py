import math

import pytest

from vcselrng.config import ConfigError, load_config, parse_config, preset_path

MINIMAL = """
[extraction]
M = 4
f_c = 10
[nist]
sequence_length = 1000
sequence_count = 4
"""


def test_paper_preset_loads():
    cfg = load_config(preset_path("paper_operating_point"))
    p = cfg.vcsel
    assert (p.g1, p.g2, p.tau_o, p.tau_e, p.mu) == (15.0, 15.0, 6.0, 23.25, 4.5)
    assert (cfg.extraction.M, cfg.extraction.f_c) == (39, 34.5)
    assert cfg.nist.sequence_length == 1_000_000 and cfg.nist.sequence_count == 100
    p = cfg.nist.params
    assert (p.block_frequency_m, p.template_m, p.linear_complexity_m, p.serial_m,
            p.apen_m) == (128, 9, 500, 16, 10)
    # enough simulated time for 50 Mbit per channel at 39 x 34.5 GHz
    assert cfg.duration * 34.5 * 39 >= 50_000_000
    assert cfg.integration.t_end > 200.0 + cfg.duration


def test_desk_preset_loads():
    cfg = load_config(preset_path("desk_scale"))
    assert (cfg.extraction.M, cfg.extraction.f_c, cfg.nist.sequence_length) == (4, 10.0, 100_000)
    assert cfg.integration.h <= cfg.extraction.delta_tau / 10


def test_minimal_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.integration.h == 5e-5 and cfg.channels == ("x", "y")
    assert cfg.vcsel.theta_p1 == pytest.approx(math.radians(22.5))
    assert cfg.sequences_per_channel() == {"x": 2, "y": 2}


def test_missing_f_c():
    with pytest.raises(ConfigError) as e:
        parse_config("[extraction]\nM = 4\n")
    assert e.value.key == "extraction.f_c"
    assert "extraction.f_c" in str(e.value)


def test_m_zero():
    with pytest.raises(ConfigError) as e:
        parse_config(MINIMAL.replace("M = 4", "M = 0"))
    assert e.value.key == "extraction.M"
    assert e.value.line == 3


def test_unknown_key_with_line():
    with pytest.raises(ConfigError) as e:
        parse_config(MINIMAL + "[sfm]\nmuu = 3\n")
    assert e.value.key == "sfm.muu" and e.value.line == 9


def test_unknown_section():
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config(MINIMAL + "[plots]\nx = 1\n")


def test_parse_error_line():
    with pytest.raises(ConfigError) as e:
        parse_config("[extraction]\nM = 4\nthis line has no equals sign\n")
    assert e.value.line == 3


def test_duplicate_key():
    with pytest.raises(ConfigError) as e:
        parse_config(MINIMAL.replace("M = 4", "M = 4\nM = 5"))
    assert e.value.key == "extraction.M"


def with_keys(**sections):
    base = {"extraction": {"M": "4", "f_c": "10"},
            "nist": {"sequence_length": "1000", "sequence_count": "4"}}
    for sec, kv in sections.items():
        base.setdefault(sec, {}).update(kv)
    return "".join(f"[{sec}]\n" + "".join(f"{k} = {v}\n" for k, v in kv.items())
                   for sec, kv in base.items())


@pytest.mark.parametrize("section, key, value", [
    ("integration", "h", "7e-5"),
    ("integration", "t_end", "220"),
    ("integration", "decimation", "2.5"),
    ("sfm", "mu", "-1"),
    ("sfm", "anisotropy", "odd"),
    ("sfm", "noise", "maybe"),
    ("extraction", "channels", "z"),
    ("extraction", "tie_rule", "3"),
    ("analysis", "max_lag", "10"),
    ("nist", "alpha", "2"),
    ("nist", "sequence_count", "1"),
])
def test_validation_names_field(section, key, value):
    with pytest.raises(ConfigError) as e:
        parse_config(with_keys(**{section: {key: value}}))
    assert e.value.key == f"{section}.{key}"
    assert e.value.line is not None


def test_cross_field_duration():
    with pytest.raises(ConfigError) as e:
        parse_config(MINIMAL.replace("f_c = 10", "f_c = 10\nduration = 10"))
    assert e.value.key == "extraction.duration"


def test_equal_delays_rejected():
    with pytest.raises(ConfigError) as e:
        parse_config(MINIMAL.replace("M = 4", "M = 2\nschedule = 3.0, 3.0"))
    assert e.value.key == "extraction.schedule"


def test_digest_stable_and_sensitive():
    a = parse_config(MINIMAL).digest()
    assert a == parse_config(MINIMAL + "\n# comment\n").digest()
    assert a != parse_config(MINIMAL + "[integration]\nseed = 1\n").digest()
    assert a == parse_config(MINIMAL).with_output("/elsewhere").digest()


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "nope.ini")


def test_unknown_preset():
    with pytest.raises(ConfigError):
        preset_path("nonexistent")
