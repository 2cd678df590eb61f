"""In-process TTP/RSU/vehicle network for protocol tests."""

from __future__ import annotations

from dataclasses import dataclass

from huffrev.planner import HuffmanPlan
from huffrev.proof import DuplexMac
from huffrev.revnet import LocalLink, ManualClock, RsuNode, TtpNode, VehicleClient
from huffrev.tree import RevocationTree

TTP_KEY = bytes.fromhex("a5" * 32)


def rsu_key(i: int) -> bytes:
    return bytes([0x30 + i]) * 32


@dataclass
class Network:
    ttp: TtpNode
    rsus: dict[str, RsuNode]
    links: dict[str, LocalLink]
    clock: ManualClock
    ttp_mac: DuplexMac

    def vehicle(self, window: int = 1, max_age: int = 60) -> VehicleClient:
        keys = {name: rsu.signer for name, rsu in self.rsus.items()}
        return VehicleClient(self.ttp_mac, keys, window, self.clock, max_age)

    def query(self, vehicle: VehicleClient, rsu: str, cert_id: int):
        return vehicle.query(self.links[rsu], rsu, cert_id)


def make_network(plan: HuffmanPlan, n_rsus: int = 3, bootstrap: bool = True) -> Network:
    clock = ManualClock(1_700_000_000)
    mac = DuplexMac(TTP_KEY)
    ttp = TtpNode(RevocationTree(plan, mac))
    upstream = LocalLink(ttp, "ttp")
    rsus, links = {}, {}
    for i in range(n_rsus):
        name = f"rsu-{i}"
        rsus[name] = RsuNode(name, DuplexMac(rsu_key(i)), mac, upstream, clock)
        links[name] = LocalLink(rsus[name], name)
    ttp.roster = dict(links)
    if bootstrap:
        ttp.bootstrap_all()
    return Network(ttp, rsus, links, clock, mac)
