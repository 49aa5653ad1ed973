"""Where does the time go in each fusion mode?

Splits every variant's round latency on the default topology into
on-device inference and network transmission, then shows how a faster
cloud uplink changes the GFM budget.
"""

from cetsim import ALL_VARIANTS, GFM, LinkClass, Topology, default_table, default_topology, total_latency
from cetsim.netmodel import make_link

topo = default_topology()
table = default_table()

print(f"{'variant':<12} {'infer ms':>9} {'tx ms':>9} {'total ms':>9}")
for v in ALL_VARIANTS:
    lat = total_latency(v, topo, table)
    print(f"{v.to_text():<12} {lat.inference_s * 1e3:9.2f} {lat.transmission_s * 1e3:9.2f} {lat.total_s * 1e3:9.2f}")

# The full four-modality bundle crosses a 50 Mbps uplink; a peer alert is
# a single 2 KiB frame on a 1 Gbps D2D hop.
gfm = total_latency(GFM, topo, table)
print(f"\nGFM spends {gfm.transmission_s / gfm.total_s:.0%} of its round on the network.")

links = [
    make_link(*l.endpoints, l.link_class, bandwidth_bits_per_s=500e6) if l.link_class is LinkClass.CLOUD_UPLINK else l
    for l in topo.links
]
fast = Topology(topo.nodes.values(), links)
print(f"With a 500 Mbps uplink GFM takes {total_latency(GFM, fast, table).total_s * 1e3:.1f} ms.")
