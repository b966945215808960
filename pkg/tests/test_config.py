import pytest
import yaml

from fiberindex.config import ConfigError, default_config, load_config, validate
from fiberindex.constants import TOLERANCES, tolerance, tolerance_ledger, tolerance_overrides


def _write(tmp_path, doc):
    p = tmp_path / "cfg.yaml"
    p.write_text(yaml.safe_dump(doc))
    return p


def test_defaults_recorded():
    cfg = default_config("pair")
    d = cfg.to_dict()
    assert d["truncation"] == {"J": 4, "N": 128, "N_check": 256, "grids": [24, 48]}
    assert d["cycle"] == {"point": []} and d["connection"]["base_rank"] == 0
    assert cfg.seed == 0 and cfg.tol_scale == 1.0


def test_family_defaults():
    d = default_config("family").to_dict()
    assert d["cycle"] == {"torus2": True}
    assert d["connection"]["base_rank"] == 2 and d["truncation"]["N"] == 64


def test_invalid_cycle_for_point_base(tmp_path):
    p = _write(tmp_path, {"version": 1, "mode": "pair", "cycle": {"torus2": True}})
    with pytest.raises(ConfigError) as exc:
        load_config(p)
    assert exc.value.field == "cycle.torus2"


def test_point_cycle_dimension():
    with pytest.raises(ConfigError) as exc:
        validate({"version": 1, "mode": "check", "cycle": {"point": [0.1]}})
    assert exc.value.field == "cycle.point"


@pytest.mark.parametrize("doc,field", [
    ({"version": 1, "mode": "pair", "bogus": 1}, "bogus"),
    ({"version": 1, "mode": "pair", "truncation": {"J": 0}}, "truncation.J"),
    ({"version": 1, "mode": "pair", "truncation": {"M": 3}}, "truncation.M"),
    ({"version": 1, "mode": "nope"}, "mode"),
    ({"version": 2, "mode": "pair"}, "version"),
    ({"mode": "pair"}, "version"),
    ({"version": 1, "mode": "pair", "tolerances": {"made_up": 1.0}}, "tolerances.made_up"),
    ({"version": 1, "mode": "pair", "tolerances": {"identity": -1.0}}, "tolerances.identity"),
    ({"version": 1, "mode": "pair", "connection": {"kind": "flat"}}, "connection.base_rank"),
    ({"version": 1, "mode": "pair", "symbol": {"plus": []}}, "symbol"),
    ({"version": 1, "mode": "pair", "connection": {"base_rank": 1}, "cycle": {"point": [0.0]}},
     "connection.base_rank"),
    ({"version": 1, "mode": "family", "families": []}, "families"),
])
def test_schema_errors_name_field(doc, field):
    with pytest.raises(ConfigError) as exc:
        validate(doc)
    assert exc.value.field == field
    assert field in str(exc.value)


def test_bad_yaml(tmp_path):
    p = tmp_path / "cfg.yaml"
    p.write_text("mode: [unclosed")
    with pytest.raises(ConfigError):
        load_config(p)


def test_non_mapping():
    with pytest.raises(ConfigError):
        validate([1, 2])


def test_user_values_override_defaults(tmp_path):
    p = _write(tmp_path, {"version": 1, "mode": "check", "seed": 7, "check": {"trials": 3},
                          "truncation": {"J": 5}})
    cfg = load_config(p)
    assert cfg.seed == 7 and cfg["check"] == {"suite": "all", "trials": 3}
    assert cfg.truncation["J"] == 5 and cfg.truncation["N"] == 128


def test_tolerance_overrides_scoped():
    base = tolerance("identity")
    with tolerance_overrides({"identity": 0.5}):
        assert tolerance("identity") == 0.5
        assert tolerance("identity", 2.0) == 1.0
        assert tolerance_ledger()["identity"] == 0.5
    assert tolerance("identity") == base == TOLERANCES["identity"]


def test_tolerance_override_unknown():
    with pytest.raises(KeyError):
        with tolerance_overrides({"nope": 1.0}):
            pass


def test_ledger_scaled():
    led = tolerance_ledger(10.0)
    assert set(led) == set(TOLERANCES)
    assert led["fedosov"] == pytest.approx(10 * TOLERANCES["fedosov"])
