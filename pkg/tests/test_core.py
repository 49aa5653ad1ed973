import itertools

import pytest
from hypothesis import given, strategies as st

from cetsim.core import (
    ALL_VARIANTS,
    CRM_PIM,
    GFM,
    PIM_PM,
    IllegalVariant,
    LinkClass,
    LinkSpec,
    Message,
    MessageKind,
    Modality,
    Mode,
    ModeVariant,
    Node,
    NodeKind,
    ParseError,
    Scenario,
    ScenarioConfig,
    SemanticFeature,
    communication_load_rank,
    parse_modality_set,
    variant_modalities,
)

modalities = st.sampled_from(list(Modality))
finite = st.floats(min_value=1e-6, max_value=1e12, allow_nan=False, allow_infinity=False)


def test_variant_enumeration_is_closed():
    built = set()
    for mode in Mode:
        for r in range(1, 5):
            for combo in itertools.combinations(Modality, r):
                try:
                    built.add(ModeVariant(mode, combo))
                except IllegalVariant:
                    pass
    assert built == set(ALL_VARIANTS)
    assert len(built) == 7


@pytest.mark.parametrize(
    "mode,tags",
    [(Mode.PIM, "PIC"), (Mode.CRM, "PI"), (Mode.GFM, "PIC"), (Mode.PIM, "IC"), (Mode.CRM, "ICM")],
)
def test_illegal_variants_rejected(mode, tags):
    with pytest.raises(IllegalVariant):
        ModeVariant(mode, tuple(Modality(t) for t in tags))


def test_variant_text_forms():
    assert [v.to_text() for v in ALL_VARIANTS] == [
        "GFM", "CRM(P+I+C)", "CRM(P+I+M)", "CRM(P+C+M)", "PIM(P+I)", "PIM(P+C)", "PIM(P+M)",
    ]
    for v in ALL_VARIANTS:
        assert ModeVariant.from_text(v.to_text()) == v
    # modality order in the input does not matter
    assert ModeVariant(Mode.CRM, (Modality.MMWAVE, Modality.IMAGE, Modality.RF_POWER)) == CRM_PIM


@pytest.mark.parametrize("bad", ["", "GFM()", "CRM(P+I", "XYZ(P+I)", "PIM(P+Q)", "PIM(P+I+C)"])
def test_variant_parse_errors(bad):
    with pytest.raises((ParseError, IllegalVariant)):
        ModeVariant.from_text(bad)


def test_variant_modalities_and_index():
    assert variant_modalities(GFM) == tuple(Modality)
    assert variant_modalities(PIM_PM) == (Modality.RF_POWER, Modality.MMWAVE)
    assert [v.index for v in ALL_VARIANTS] == list(range(7))


def test_communication_load_rank_total_order():
    assert communication_load_rank(Mode.GFM) > communication_load_rank(Mode.CRM) > communication_load_rank(Mode.PIM)
    assert communication_load_rank(CRM_PIM) == communication_load_rank(Mode.CRM)


def test_modality_order_and_set_parse():
    assert sorted([Modality.MMWAVE, Modality.RF_POWER, Modality.POINT_CLOUD]) == [
        Modality.RF_POWER, Modality.POINT_CLOUD, Modality.MMWAVE,
    ]
    assert parse_modality_set("P+I") == parse_modality_set("I, P") == {Modality.RF_POWER, Modality.IMAGE}
    assert parse_modality_set("") == frozenset()
    with pytest.raises(ParseError):
        parse_modality_set("P,X")


@given(st.integers(0, 1000), st.sampled_from(list(NodeKind)), st.frozensets(modalities, min_size=1))
def test_node_round_trip(nid, kind, sensors):
    node = Node(nid, kind, sensors if kind is NodeKind.TERMINAL else frozenset())
    assert Node.from_text(node.to_text()) == node


def test_node_sensor_rule():
    with pytest.raises(ValueError):
        Node(1, NodeKind.TERMINAL)
    with pytest.raises(ValueError):
        Node(1, NodeKind.EDGE, frozenset({Modality.IMAGE}))


@given(
    st.integers(0, 50), st.integers(0, 50), finite,
    st.floats(0, 1, allow_nan=False), st.floats(0, 1, allow_nan=False),
    st.sampled_from(list(LinkClass)), st.booleans(),
)
def test_link_round_trip(a, b, bw, prop, proc, cls, up):
    if a == b:
        b += 1
    link = LinkSpec((a, b), bw, prop, proc, cls, up)
    assert link.endpoints == (min(a, b), max(a, b))
    assert LinkSpec.from_text(link.to_text()) == link
    assert link.other(a) == b and link.other(b) == a


def test_link_validation():
    with pytest.raises(ValueError):
        LinkSpec((1, 1), 1e6, 0.0, 0.0, LinkClass.PEER_D2D)
    with pytest.raises(ValueError):
        LinkSpec((1, 2), 0.0, 0.0, 0.0, LinkClass.PEER_D2D)


@given(
    st.sampled_from(list(Scenario)), st.floats(-10, 30, allow_nan=False),
    st.integers(0, 2**64 - 1), st.integers(2, 1024),
)
def test_scenario_round_trip(s, snr, seed, beams):
    cfg = ScenarioConfig(s, snr, seed, beams)
    assert ScenarioConfig.from_text(cfg.to_text()) == cfg


def test_scenario_ids_and_ranges():
    assert Scenario.DAYTIME.value == 31 and Scenario.NIGHTTIME.value == 33
    assert Scenario.from_text("33") is Scenario.NIGHTTIME
    for bad in (dict(snr_db=30.5), dict(snr_db=-11), dict(snr_db=0, num_beams=1), dict(snr_db=0, seed=-1)):
        with pytest.raises(ValueError):
            ScenarioConfig(Scenario.DAYTIME, **bad)


features = st.builds(
    SemanticFeature,
    modalities,
    st.integers(1, 10**8),
    st.floats(0, 1, allow_nan=False),
    st.integers(0, 100),
    st.booleans(),
    st.booleans(),
)


@given(features)
def test_feature_round_trip(f):
    assert SemanticFeature.from_text(f.to_text()) == f


@given(st.lists(features, min_size=1, max_size=4))
def test_upload_round_trip_and_size(feats):
    msg = Message(MessageKind.FEATURE_UPLOAD, 2, 1, tuple(feats))
    assert msg.payload_bytes == sum(f.payload_bytes for f in feats)
    assert Message.from_text(msg.to_text()) == msg


@given(st.text(alphabet="abcxyz0123456789=.|-", min_size=1, max_size=200))
def test_control_message_round_trip(body):
    msg = Message(MessageKind.DIRECTIVE, 1, 3, body=body)
    assert msg.payload_bytes == 2048
    assert Message.from_text(msg.to_text()) == msg


def test_message_shape_rules():
    f = SemanticFeature(Modality.IMAGE, 10, 0.9, 2)
    with pytest.raises(ValueError):
        Message(MessageKind.FEATURE_UPLOAD, 2, 1)
    with pytest.raises(ValueError):
        Message(MessageKind.PEER_ALERT, 2, 3, (f,), "x")
    with pytest.raises(ValueError):
        Message(MessageKind.DIRECTIVE, 1, 2, body="x" * 3000)
    text = Message(MessageKind.FEATURE_UPLOAD, 2, 1, (f,)).to_text()
    with pytest.raises(ParseError):
        Message.from_text(text.replace("|bytes=10|features", "|bytes=11|features"))
