"""Happens-before race detection at barrier granularity.

Vector clocks are sparse dicts ``agent -> clock``. Agents are instruction
streams plus one agent per asynchronous operation (copy, remote store),
whose clock starts from the issuer's. Arrivals release into the barrier's
phase accumulator, a completed phase publishes the accumulated clock and a
satisfied wait acquires it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

VC = dict


def join(a: VC, b: VC) -> VC:
    out = dict(a)
    for k, v in b.items():
        if out.get(k, 0) < v:
            out[k] = v
    return out


def join_into(a: VC, b: VC) -> None:
    for k, v in b.items():
        if a.get(k, 0) < v:
            a[k] = v


@dataclass
class Access:
    agent: str
    clock: int
    task: str
    site: str


@dataclass
class Location:
    write: Access | None = None
    reads: dict[str, Access] = field(default_factory=dict)


class RaceDetector:
    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self.locations: dict[tuple, Location] = {}
        self.reports: list[dict] = []
        self._seen: set[tuple] = set()

    def _report(self, kind: str, key: tuple, first: Access, second: Access) -> dict | None:
        sig = (kind, key, first.site, second.site)
        if sig in self._seen:
            return None
        self._seen.add(sig)
        cta, buffer, stage = key
        rep = {
            "kind": kind,
            "cta": cta,
            "buffer": buffer,
            "stage": stage,
            "first": {"task": first.task, "site": first.site},
            "second": {"task": second.task, "site": second.site},
        }
        self.reports.append(rep)
        return rep

    @staticmethod
    def _ordered(prev: Access, vc: VC) -> bool:
        return prev.clock <= vc.get(prev.agent, 0)

    def write(self, key: tuple, agent: str, vc: VC, task: str, site: str) -> list[dict]:
        if not self.enabled:
            return []
        loc = self.locations.setdefault(key, Location())
        me = Access(agent, vc.get(agent, 0), task, site)
        out = []
        w = loc.write
        if w is not None and w.agent != agent and not self._ordered(w, vc):
            out.append(self._report("W/W", key, w, me))
        for r in loc.reads.values():
            if r.agent != agent and not self._ordered(r, vc):
                out.append(self._report("R/W", key, r, me))
        loc.write = me
        loc.reads = {}
        return [r for r in out if r]

    def read(self, key: tuple, agent: str, vc: VC, task: str, site: str) -> list[dict]:
        if not self.enabled:
            return []
        loc = self.locations.setdefault(key, Location())
        me = Access(agent, vc.get(agent, 0), task, site)
        out = []
        w = loc.write
        if w is not None and w.agent != agent and not self._ordered(w, vc):
            out.append(self._report("R/W", key, w, me))
        loc.reads[agent] = me
        return [r for r in out if r]

    def uninitialized_arrive(self, cta: int, barrier: str, index: int, task: str, site: str) -> dict | None:
        sig = ("uninit", cta, barrier, index, site)
        if sig in self._seen:
            return None
        self._seen.add(sig)
        rep = {
            "kind": "uninit",
            "cta": cta,
            "buffer": barrier,
            "stage": index,
            "message": "arrive on uninitialized barrier",
            "first": {"task": task, "site": site},
            "second": None,
        }
        self.reports.append(rep)
        return rep
