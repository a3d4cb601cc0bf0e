"""Newline-delimited JSON event trace.

Each record is ``{"step", "cluster", "cta", "task", "event", "detail"}``;
the last line is ``{"summary": {...}}``. Keys keep this order and floats
never appear in event details, so the bytes are stable across platforms.
"""

from __future__ import annotations

import json


class Trace:
    def __init__(self):
        self.records: list[dict] = []

    def emit(self, step: int, cluster: int, cta: int, task: str, event: str, **detail) -> None:
        self.records.append(
            {"step": step, "cluster": cluster, "cta": cta, "task": task, "event": event, "detail": detail}
        )

    def events(self, event: str | None = None, **match) -> list[dict]:
        out = []
        for r in self.records:
            if event is not None and r["event"] != event:
                continue
            if all(r.get(k) == v for k, v in match.items()):
                out.append(r)
        return out


def dumps_record(rec: dict) -> str:
    return json.dumps(rec, separators=(",", ":"), sort_keys=False)


def render(records: list[dict], summary: dict) -> str:
    lines = [dumps_record(r) for r in records]
    lines.append(dumps_record({"summary": summary}))
    return "\n".join(lines) + "\n"
