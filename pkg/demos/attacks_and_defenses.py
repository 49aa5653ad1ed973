"""Attack one mode at a time and watch the matching defense pull accuracy back.

Each pair of runs shares its random streams, so the only difference
between "defended" and "exposed" is the defense switch.
"""

from cetsim import (
    CRM_PIM,
    GFM,
    PIM_PM,
    AttackKind,
    AttackSpec,
    DefenseSpec,
    ReputationState,
    Scenario,
    ScenarioConfig,
    default_table,
    default_topology,
    rng_stream,
    run_round,
)
from cetsim.semantics import DEFAULT_CODECS

topo, table = default_topology(), default_table()
ROUNDS = 500


def campaign(variant, attack, defenses):
    rep, acc, caught = ReputationState(), 0.0, 0
    for i in range(ROUNDS):
        res = run_round(
            variant, topo, table, DEFAULT_CODECS, (attack,), rng_stream(f"demo/{i}", 1),
            config=ScenarioConfig(Scenario.DAYTIME, 20.0, i), defenses=defenses, reputation=rep,
        )
        rep = res.reputation or rep
        acc += res.accuracy
        caught += res.defenses_hit
    return acc / ROUNDS, caught, rep


for variant, kind in ((GFM, AttackKind.SEMANTIC_TAMPER), (CRM_PIM, AttackKind.MALICIOUS_RELAY), (PIM_PM, AttackKind.CROSS_MODAL_MISLEAD)):
    attack = AttackSpec(kind, probability=0.5, severity=0.5)
    exposed, _, _ = campaign(variant, attack, DefenseSpec.disabled())
    defended, caught, rep = campaign(variant, attack, DefenseSpec())
    print(f"{variant.to_text():<11} under {kind.value:<17} exposed {exposed:.4f}  defended {defended:.4f}  ({caught} catches)")
    if rep.weights:
        print("            peer trust after the campaign:", {p: round(w, 3) for p, w in rep.weights.items()})
