"""Let the controller choose a mode as links fail and budgets tighten."""

from cetsim import NoFeasibleMode, Scenario, SelectionRequest, default_table, default_topology, select_mode

table = default_table()


def choose(topo, budget_s, floor=0.0, terminal=2):
    req = SelectionRequest.for_terminal(
        topo, terminal, latency_budget_s=budget_s, min_accuracy=floor, scenario=Scenario.NIGHTTIME, snr_db=15.0
    )
    try:
        sel = select_mode(req, topo, table)
    except NoFeasibleMode as exc:
        return f"no mode ({exc})"
    flag = " degraded" if sel.degraded else ""
    return f"{sel.variant.to_text():<11} acc {sel.accuracy:.3f}  {sel.total_s * 1e3:6.1f} ms{flag}"


topo = default_topology()
for budget in (1.0, 0.1, 0.03, 0.02, 0.005):
    print(f"budget {budget * 1e3:6.0f} ms -> {choose(topo, budget)}")

print("\ncloud uplink fails")
topo.set_link_up(1, 0, False)
print("budget   1000 ms ->", choose(topo, 1.0))

print("edge link of terminal 2 fails too")
topo.set_link_up(2, 1, False)
print("budget   1000 ms ->", choose(topo, 1.0))

print("\nan accuracy floor nothing fast can meet")
print("budget     20 ms ->", choose(default_topology(), 0.02, floor=0.7))
