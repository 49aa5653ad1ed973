import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cetsim.calibration import default_table, sensing_accuracy, total_latency
from cetsim.core import (
    ALL_VARIANTS, CRM_PIM, GFM, PIM_PM, Modality, Mode, NodeKind, Scenario, ScenarioConfig, SemanticFeature,
)
from cetsim.engine import EventKind, rng_stream
from cetsim.netmodel import default_topology
from cetsim.protocols import (
    Agent,
    DefenseSpec,
    Directive,
    ModeInfeasible,
    NoZoneFact,
    PeerAlert,
    ReputationState,
    Tool,
    UntrustedFeature,
    crm_translate,
    default_knowledge,
    pim_consistency_check,
    reputation_update,
    run_round,
)
from cetsim.semantics import DEFAULT_CODECS, AttackKind, AttackSpec

DAY25 = ScenarioConfig(Scenario.DAYTIME, 25.0, 42)
NIGHT25 = ScenarioConfig(Scenario.NIGHTTIME, 25.0, 42)


def rnd(v, cfg=DAY25, attacks=(), seed=0, topo=None, **kw):
    return run_round(
        v, topo or default_topology(), default_table(), DEFAULT_CODECS, attacks, rng_stream(f"r{seed}", seed), config=cfg, **kw
    )


def hop_classes(trace):
    out = []
    for ev in trace.of_kind(EventKind.DELIVERED):
        fields = dict(p.split("=", 1) for p in ev.detail.split(";"))
        out.append(fields["link"])
    return out


# -- agents and wire formats --


def test_agent_rule_table_and_memory():
    a = Agent(2, memory_capacity=3)
    assert a.perceive(0.0, "sensed") is Tool.ENCODE
    assert a.perceive(0.1, "directive_ok") is Tool.ADJUST_BEAM
    assert a.perceive(0.2, "weather") is Tool.NOOP
    a.perceive(0.3, "alert")
    assert len(a.memory) == 3 and a.memory[0][1] == "directive_ok"
    limited = Agent(2, tools=frozenset({Tool.ENCODE}))
    assert limited.perceive(0.0, "alert") is Tool.NOOP


def test_directive_wire_format():
    d = Directive(1, Modality.MMWAVE, "focus", (12.0, 34.0))
    assert d.to_text() == "DIR v1|issuer=1|mod=M|action=focus|x=12.0|y=34.0|sig=1"
    assert Directive.from_text(d.to_text()) == d


@given(
    st.integers(0, 99), st.sampled_from(list(Modality)), st.sampled_from(["focus", "scan", "hold"]),
    st.floats(-1e6, 1e6), st.floats(-1e6, 1e6), st.booleans(),
)
def test_directive_round_trip(issuer, mod, action, x, y, sig):
    d = Directive(issuer, mod, action, (x, y), sig)
    assert Directive.from_text(d.to_text()) == d
    assert Directive.from_text(d.to_text()).to_text() == d.to_text()


def test_alert_round_trip():
    a = PeerAlert(3, "vehicle", (18.5, 40.25))
    assert a.to_text() == "ALERT v1|src=3|obj=vehicle|x=18.5|y=40.25"
    assert PeerAlert.from_text(a.to_text()) == a


def test_crm_translate():
    topo = default_topology()
    kb = default_knowledge(topo, 1)
    f = SemanticFeature(Modality.IMAGE, 100, 0.95, 2)
    d = crm_translate(f, kb)
    assert (d.action, d.coords, d.issuer) == ("focus", (12.0, 34.0), 1)
    assert crm_translate(f, kb).to_text() == d.to_text()
    with pytest.raises(UntrustedFeature):
        crm_translate(SemanticFeature(Modality.IMAGE, 100, 0.5, 2, True, False), kb)
    with pytest.raises(NoZoneFact):
        crm_translate(SemanticFeature(Modality.IMAGE, 100, 0.5, 9), kb)


# -- defenses --


def test_consistency_check():
    obs = ("vehicle", 18.5, 40.25)
    truth = PeerAlert(3, "vehicle", (18.5, 40.25))
    fake = PeerAlert(3, "phantom", (268.5, 290.25))
    assert pim_consistency_check(truth, obs, 1.0, rng_stream("c", 0))
    assert not pim_consistency_check(fake, obs, 1.0, rng_stream("c", 0))
    rng = rng_stream("mc/consistency", 11)
    fails = sum(not pim_consistency_check(fake, obs, 0.8, rng) for _ in range(10_000))
    assert abs(fails / 10_000 - 0.8) <= 0.02


def test_reputation_examples():
    s = ReputationState()
    assert reputation_update(s, 3, True).weight(3) == 1.0
    assert reputation_update(ReputationState(decay=0.5), 3, False).weight(3) == 0.5
    for _ in range(5):
        s = reputation_update(s, 3, False)
    assert s.weight(3) == pytest.approx(0.8**5) and not s.trusted(3)
    assert s.weight(4) == 1.0 and s.trusted(4)


@given(st.lists(st.tuples(st.integers(0, 3), st.booleans()), max_size=60), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_reputation_bounded(updates, decay, reward):
    s = ReputationState(decay=decay, reward=reward)
    for peer, ok in updates:
        s = reputation_update(s, peer, ok)
        assert all(0.0 <= w <= 1.0 for w in s.weights.values())


# -- rounds --


def test_gfm_clean_round():
    res = rnd(GFM)
    # 1/64 + (0.769 - 1/64) * 0.95**4
    assert res.accuracy == pytest.approx(0.015625 + (0.769 - 0.015625) * 0.95**4, abs=1e-9)
    assert res.clean_accuracy == pytest.approx(0.769, abs=1e-9)
    assert res.total_s > 0.340 and res.transmission_s > 0.300
    assert res.total_s == pytest.approx(total_latency(GFM, default_topology(), default_table()).total_s, rel=1e-12)
    assert hop_classes(res.trace) == ["EdgeLocal", "CloudUplink"]
    assert res.trace.of_kind(EventKind.DECISION)[-1].node == 0


def test_gfm_needs_cloud():
    topo = default_topology()
    topo.set_link_up(1, 0, False)
    with pytest.raises(ModeInfeasible):
        rnd(GFM, topo=topo)


def test_gfm_excluding_image_lowers_accuracy():
    clean = rnd(GFM)
    hit = AttackSpec(AttackKind.SEMANTIC_TAMPER, 1.0, 0.5, Modality.IMAGE)
    res = rnd(GFM, attacks=(hit,), defenses=DefenseSpec(watermark_detection=1.0))
    assert res.attacks_hit == 1 and res.defenses_hit == 1
    assert res.accuracy < clean.accuracy
    assert res.trace.of_kind(EventKind.DEFENSE_TRIGGERED)


def test_crm_round_shape_and_night_gap():
    res = rnd(CRM_PIM, NIGHT25)
    topo = default_topology()
    assert hop_classes(res.trace) == ["EdgeLocal", "EdgeLocal"]
    kinds = {topo.kind(n) for n in res.trace.nodes()}
    assert NodeKind.EDGE in kinds and NodeKind.CLOUD not in kinds
    gfm_night = sensing_accuracy(GFM, Scenario.NIGHTTIME, 25, default_table())
    assert abs(res.clean_accuracy - gfm_night) <= 0.05
    assert res.transmission_s < 0.1 * rnd(GFM).transmission_s


def test_crm_malicious_relay_falls_back():
    relay = AttackSpec(AttackKind.MALICIOUS_RELAY, 1.0)
    res = rnd(CRM_PIM, attacks=(relay,), defenses=DefenseSpec(directive_verification=1.0))
    assert res.fallback is not None and res.fallback.mode is Mode.PIM
    assert res.defenses_hit == 1 and res.trace.of_kind(EventKind.DEFENSE_TRIGGERED)
    assert res.accuracy < rnd(CRM_PIM).accuracy


def test_crm_needs_edge():
    topo = default_topology()
    for t in (2, 3, 4):
        topo.set_link_up(t, 1, False)
    with pytest.raises(ModeInfeasible):
        rnd(CRM_PIM, topo=topo)


def test_pim_round_latency_and_shape():
    res = rnd(PIM_PM)
    assert 0.005 <= res.total_s <= 0.010
    topo = default_topology()
    assert {topo.kind(n) for n in res.trace.nodes()} == {NodeKind.TERMINAL}
    assert hop_classes(res.trace) == ["PeerD2D"]


def test_pim_mislead_lowers_reputation():
    mislead = AttackSpec(AttackKind.CROSS_MODAL_MISLEAD, 1.0)
    res = rnd(PIM_PM, attacks=(mislead,), defenses=DefenseSpec(consistency_detection=1.0))
    assert res.defenses_hit >= 1
    assert any(w < 1.0 for w in res.reputation.weights.values())


def test_pim_needs_peer():
    topo = default_topology()
    topo.set_link_up(2, 3, False)
    topo.set_link_up(3, 4, False)
    with pytest.raises(ModeInfeasible):
        rnd(PIM_PM, topo=topo)


@settings(max_examples=40, deadline=None)
@given(
    st.sampled_from(ALL_VARIANTS), st.sampled_from(list(Scenario)), st.floats(-10, 30),
    st.floats(0, 1), st.floats(0.05, 1), st.integers(0, 2**32),
)
def test_round_accuracy_never_exceeds_clean(v, s, snr, p, sev, seed):
    attacks = tuple(AttackSpec(k, p, sev) for k in AttackKind)
    res = rnd(v, ScenarioConfig(s, snr, seed), attacks, seed)
    clean = sensing_accuracy(v, s, snr, default_table())
    assert res.accuracy <= clean + 1e-12
    assert res.accuracy >= default_table().chance - 1e-12


def test_rounds_are_deterministic():
    attacks = tuple(AttackSpec(k, 0.5) for k in AttackKind)
    for v in ALL_VARIANTS:
        a, b = rnd(v, attacks=attacks, seed=9), rnd(v, attacks=attacks, seed=9)
        assert a.accuracy == b.accuracy and a.trace.to_text() == b.trace.to_text()


@pytest.mark.parametrize(
    "v,kind,defense",
    [
        (GFM, AttackKind.SEMANTIC_TAMPER, "watermark_detection"),
        (CRM_PIM, AttackKind.MALICIOUS_RELAY, "directive_verification"),
        (PIM_PM, AttackKind.CROSS_MODAL_MISLEAD, "consistency_detection"),
    ],
)
def test_defenses_never_hurt_on_common_seeds(v, kind, defense):
    attack = (AttackSpec(kind, 0.5, 0.5),)
    on, off = [], []
    rep_on = rep_off = ReputationState()
    for i in range(1000):
        kw_on = dict(defenses=DefenseSpec(), seed=i, attacks=attack)
        kw_off = dict(defenses=DefenseSpec.disabled(), seed=i, attacks=attack)
        if v.mode is Mode.PIM:
            kw_on["reputation"], kw_off["reputation"] = rep_on, rep_off
        a, b = rnd(v, **kw_on), rnd(v, **kw_off)
        if v.mode is Mode.PIM:
            rep_on, rep_off = a.reputation, b.reputation
        on.append(a.accuracy)
        off.append(b.accuracy)
    assert np.mean(on) >= np.mean(off)
