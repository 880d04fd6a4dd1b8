"""Python front end for the simulated SDN fabric.

Every call maps onto one operation of the underlying system; results come
back as plain dicts and lists, and failures raise FabricError.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Iterable, Optional, Union

from . import _core

__all__ = ["Fabric", "FabricError", "data_path", "HOLD_TICKS"]

HOLD_TICKS = _core.HOLD_TICKS

_HERE = Path(__file__).resolve().parent
# Wheels bundle the topologies; editable installs read them from the source tree.
_DATA = next((d for d in (_HERE / "data", _HERE.parents[1] / "data") if d.is_dir()), _HERE / "data")


class FabricError(Exception):
    """An operation failed; ``code`` names the error kind."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message

    @property
    def rejected(self) -> bool:
        return self.code in ("Infeasible", "BadWindow", "EndpointBusy")


def data_path(name: str) -> Path:
    """Path of a bundled topology, e.g. ``data_path("pilot.topo")``."""
    return _DATA / name


def _wrap(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except _core.FabricError as e:
        code, message = e.args if len(e.args) == 2 else ("Error", str(e))
        raise FabricError(code, message) from None


def _topology_text(t: Union[str, os.PathLike, dict]) -> str:
    if isinstance(t, dict):
        return json.dumps(t)
    p = Path(t)
    if not p.exists() and (_DATA / str(t)).exists():
        p = _DATA / str(t)
    return p.read_text()


def _edge(endpoint: str, vlan: Optional[int]) -> dict:
    return {"endpoint": endpoint, "vlan": vlan}


class Fabric:
    """One or more domains, each a replicated controller over a simulated data plane."""

    def __init__(self, *topologies: Union[str, os.PathLike, dict], replicas: int = 3,
                 vlans: tuple[int, int] = (2, 4094)):
        if not topologies:
            topologies = (data_path("pilot.topo"),)
        texts = [_topology_text(t) for t in topologies]
        self._sys = _wrap(_core.System, texts, replicas, vlans[0], vlans[1])

    # Raw access

    def execute(self, op: dict) -> Any:
        return json.loads(_wrap(self._sys.execute, json.dumps(op)))

    def replay(self, session: Iterable[dict]) -> None:
        _wrap(self._sys.replay, [json.dumps(op) for op in session])

    def http(self, method: str, path: str, body: Optional[dict] = None,
             **query: str) -> tuple[int, Any]:
        """Routes one request through the HTTP API without a socket."""
        status, text, ctype = self._sys.handle(method, path, {k: str(v) for k, v in query.items()},
                                               json.dumps(body) if body is not None else "")
        if ctype == "application/x-ndjson":
            return status, [json.loads(l) for l in text.splitlines() if l]
        if ctype == "text/plain":
            return status, text
        return status, json.loads(text)

    def _op(self, _op: str, _domain: Optional[str] = None, **args: Any) -> Any:
        op, domain = {"op": _op, **args}, _domain
        if domain:
            op["domain"] = domain
        return self.execute(op)

    # Bandwidth on demand

    def request_bod(self, src: str, dst: str, mbps: int, start: int, end: int,
                    src_vlan: Optional[int] = None, dst_vlan: Optional[int] = None,
                    domain: Optional[str] = None) -> dict:
        return self._op("bod.request", domain, src=src, dst=dst, mbps=mbps, start=start, end=end,
                        src_vlan=src_vlan, dst_vlan=dst_vlan)

    def cancel_bod(self, service_id: int, domain: Optional[str] = None) -> dict:
        return self._op("bod.cancel", domain, id=service_id)

    def services(self, domain: str = "") -> list:
        return json.loads(_wrap(self._sys.query, "services", domain))

    # SDX-L2

    def create_circuit(self, name: str, ep1: str, ep2: str, vlan1: Optional[int] = None,
                       vlan2: Optional[int] = None, domain: Optional[str] = None) -> dict:
        return self._op("l2.create", domain, name=name, ep1=_edge(ep1, vlan1), ep2=_edge(ep2, vlan2))

    def remove_circuit(self, name: str, domain: Optional[str] = None) -> dict:
        return self._op("l2.remove", domain, name=name)

    def circuits(self, domain: str = "") -> dict:
        return json.loads(_wrap(self._sys.query, "circuits", domain))

    # Topology events and time

    def set_link(self, link_id: str, up: bool, domain: Optional[str] = None) -> dict:
        return self._op("topo.link", domain, link_id=link_id, state="Up" if up else "Down")

    def set_port(self, vfc: str, port: str, up: bool, domain: Optional[str] = None) -> dict:
        return self._op("topo.port", domain, vfc=vfc, port=port, state="Up" if up else "Down")

    def advance(self, ticks: int) -> dict:
        return self._op("clock.advance", ticks=ticks)

    def inject(self, endpoint: str, vlan: Optional[int] = None, size_bits: int = 1000,
               count: int = 1, domain: Optional[str] = None) -> dict:
        return self._op("dataplane.inject", domain, endpoint=endpoint, vlan=vlan,
                        size_bits=size_bits, count=count)

    def topology(self, domain: str = "") -> dict:
        return json.loads(_wrap(self._sys.query, "topology", domain))

    def rules(self, domain: str = "") -> dict:
        return json.loads(_wrap(self._sys.query, "rules", domain))

    # Cluster

    def kill(self, replica: int, domain: Optional[str] = None) -> dict:
        return self._op("cluster.kill", domain, id=replica)

    def revive(self, replica: int, domain: Optional[str] = None) -> dict:
        return self._op("cluster.revive", domain, id=replica)

    def cluster(self, domain: str = "") -> dict:
        return json.loads(_wrap(self._sys.query, "cluster", domain))

    # NSI

    def nsi_reserve(self, src: str, dst: str, mbps: int, start: int, end: int,
                    src_vlan: Optional[int] = None, dst_vlan: Optional[int] = None,
                    domain: Optional[str] = None) -> dict:
        return self._op("nsi.reserve", domain, src=src, dst=dst, mbps=mbps, start=start, end=end,
                        src_vlan=src_vlan, dst_vlan=dst_vlan)

    def nsi_commit(self, cid: str) -> dict:
        return self._op("nsi.commit", correlation_id=cid)

    def nsi_provision(self, cid: str) -> dict:
        return self._op("nsi.provision", correlation_id=cid)

    def nsi_release(self, cid: str) -> dict:
        return self._op("nsi.release", correlation_id=cid)

    def nsi(self, cid: Optional[str] = None) -> Any:
        if cid is None:
            return json.loads(_wrap(self._sys.query, "nsi", ""))
        return json.loads(_wrap(self._sys.nsi_reservation, cid))

    def nsi_trace(self) -> list[str]:
        return list(self._sys.nsi_trace())

    # Feed and bookkeeping

    def events(self, since: int = 0) -> list[dict]:
        return [json.loads(e) for e in self._sys.events(since)]

    def session(self) -> list[dict]:
        return [json.loads(op) for op in self._sys.session()]

    def hashes(self) -> dict:
        return json.loads(_wrap(self._sys.query, "hashes", ""))

    @property
    def domains(self) -> list[str]:
        return list(self._sys.domains())
