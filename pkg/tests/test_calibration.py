import math
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from cetsim.calibration import (
    CalibrationError,
    MissingVariant,
    check_constraints,
    compute_cost,
    default_calibration_path,
    default_table,
    effective_accuracy,
    load_calibration,
    parse_calibration,
    sensing_accuracy,
    subset_accuracy,
    total_latency,
)
from cetsim.core import ALL_VARIANTS, CRM_PIM, GFM, PIM_PC, PIM_PI, PIM_PM, Modality, Scenario
from cetsim.netmodel import default_topology

TEXT = default_calibration_path().read_text()


def edited(old, new):
    assert old in TEXT
    return TEXT.replace(old, new)


def test_anchor_solved_value():
    # independent oracle: c + (0.769 - c) / sigmoid(4)
    c = 1 / 64
    peak = c + (0.769 - c) * (1 + math.exp(-4))
    table = default_table()
    assert table.quality.peak[(GFM, Scenario.DAYTIME)] == pytest.approx(peak, abs=1e-9)
    assert sensing_accuracy(GFM, Scenario.DAYTIME, 25, table) == pytest.approx(0.769, abs=1e-9)


def test_logistic_shape():
    t = default_table()
    c = t.chance
    a = t.quality.peak[(PIM_PM, Scenario.NIGHTTIME)]
    assert sensing_accuracy(PIM_PM, Scenario.NIGHTTIME, 5.0, t) == pytest.approx(c + (a - c) / 2)
    assert sensing_accuracy(PIM_PM, Scenario.NIGHTTIME, -10, t) > c


def test_all_constraints_pass_on_default():
    results = check_constraints(default_table())
    assert [r.name for r in results] == [
        "chance-level", "subset-monotonicity", "anchor", "night-vision-penalty", "crm-night-close-to-gfm",
    ]
    assert all(r.passed for r in results)


def test_content_hash_is_stable():
    a = load_calibration()
    b = parse_calibration(TEXT)
    assert a.content_hash == b.content_hash and len(a.content_hash) == 64
    assert parse_calibration(TEXT + "\n# note\n").content_hash != a.content_hash


def test_missing_variant_rejected():
    text = edited("PIM(P+C) = 9.45e+00, 1.05e+02, 3.22e+01\n", "")
    with pytest.raises(MissingVariant) as err:
        parse_calibration(text)
    assert err.value.constraint == "MissingVariant" and err.value.line == 15


def test_syntax_error_has_line_number():
    text = edited("PIM(P+M) = 7.30e+00, 1.89e+01, 5.51e+00", "PIM(P+M) = 7.30e+00, 1.89e+01")
    with pytest.raises(CalibrationError) as err:
        parse_calibration(text)
    assert err.value.line == 18 and "line 18" in str(err.value)
    with pytest.raises(CalibrationError) as err:
        parse_calibration(edited("PIM(P+M)@Nighttime = 0.60", "PIM(P+M)@Nighttime = lots"))
    assert err.value.line == 43
    with pytest.raises(CalibrationError):
        parse_calibration(TEXT + "\n[extra]\nx = 1\n")


def test_ordering_violation_detected(tmp_path: Path):
    text = edited("PIM(P+I)@Daytime = 0.66", "PIM(P+I)@Daytime = 0.75")
    failed = [r.name for r in check_constraints(parse_calibration(text)) if not r.passed]
    assert failed == ["subset-monotonicity"]
    path = tmp_path / "bad.ini"
    path.write_text(text)
    with pytest.raises(CalibrationError) as err:
        load_calibration(path)
    assert err.value.constraint == "subset-monotonicity"


def test_anchor_checks_optional():
    text = edited("GFM@Daytime = 0.7827985444", "GFM@Daytime = 0.80")
    table = parse_calibration(text)
    assert not all(r.passed for r in check_constraints(table))
    assert all(r.passed for r in check_constraints(table, anchor_checks=False))


def test_subset_accuracy():
    t = default_table()
    v, acc = subset_accuracy({Modality.RF_POWER, Modality.IMAGE, Modality.MMWAVE}, Scenario.DAYTIME, 25, t)
    assert v == CRM_PIM and acc == sensing_accuracy(CRM_PIM, Scenario.DAYTIME, 25, t)
    assert subset_accuracy({Modality.IMAGE, Modality.MMWAVE}, Scenario.DAYTIME, 25, t) == (None, t.chance)
    assert subset_accuracy(set(Modality), Scenario.NIGHTTIME, 10, t)[0] == GFM


@given(st.floats(0, 1), st.lists(st.floats(0, 1), max_size=5), st.floats(0, 0.5))
def test_effective_accuracy_bounds(base, fids, chance):
    if base < chance:
        base, chance = chance, base
    acc = effective_accuracy(base, fids, chance)
    assert chance - 1e-12 <= acc <= base + 1e-12


def _hop(n, bw, prop, proc=1e-3):
    return n * 8 / bw + prop + proc


def test_total_latency_composition():
    topo, t = default_topology(), default_table()
    edge, d2d, up = (1e9, 0.5e-3), (1e9, 0.1e-3), (50e6, 5e-3)
    gfm_bytes = 131_072 + 52_429 + 1_048_576 + 838_861
    g = total_latency(GFM, topo, t)
    assert g.inference_s == 0.0382
    assert g.transmission_s == pytest.approx(_hop(gfm_bytes, *edge) + _hop(gfm_bytes, *up), rel=1e-12)
    assert g.total_s == pytest.approx(0.393617584, rel=1e-9)

    c = total_latency(CRM_PIM, topo, t)
    assert c.transmission_s == pytest.approx(_hop(52_429 + 838_861, *edge) + _hop(2048, *edge), rel=1e-12)
    assert c.total_s == pytest.approx(0.0234467, abs=1e-7)

    p = total_latency(PIM_PM, topo, t)
    assert p.transmission_s == pytest.approx(_hop(2048, *d2d), rel=1e-12)
    assert p.total_s == pytest.approx(0.0066264, abs=1e-7)
    assert total_latency(PIM_PI, topo, t).total_s == pytest.approx(0.0083864, abs=1e-7)
    assert total_latency(PIM_PC, topo, t).total_s == pytest.approx(0.0333164, abs=1e-7)


def test_crm_transmission_far_below_gfm():
    topo, t = default_topology(), default_table()
    g = total_latency(GFM, topo, t).transmission_s
    for v in ALL_VARIANTS[1:4]:
        assert total_latency(v, topo, t).transmission_s < 0.1 * g


def test_cost_lookup_is_exact():
    t = default_table()
    cost = compute_cost(PIM_PM, t)
    assert (cost.flops_g, cost.memory_mb, cost.inference_s, cost.inference_ms) == (7.30, 18.9, 0.00551, 5.51)
