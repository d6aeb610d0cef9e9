"""Metrics CSV and JSONL episode logs."""

from __future__ import annotations

import json
from typing import IO, Iterator, Optional

from rivetline.agents.training import EpisodeRecord
from rivetline.env import StepResult
from rivetline.factory import event_to_dict

METRICS_HEADER = "episode,return,steps,completed,all_correct,exploration"


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def metrics_row(rec: EpisodeRecord) -> str:
    return f"{rec.episode},{rec.ret!r},{rec.steps},{int(rec.completed)},{int(rec.all_correct)},{rec.exploration!r}"


class MetricsWriter:
    """CSV writer flushing one complete row per episode.

    The resolved run configuration is embedded above the header as ``#`` lines.
    """

    def __init__(self, path, config: Optional[dict] = None):
        self._fh: IO[str] = open(path, "w", encoding="utf-8", newline="")
        if config is not None:
            self._fh.write("# rivetline metrics v1\n")
            for line in json.dumps(config, sort_keys=True, indent=1).splitlines():
                self._fh.write(f"# {line}\n")
        self._fh.write(METRICS_HEADER + "\n")
        self._fh.flush()

    def write(self, rec: EpisodeRecord) -> None:
        self._fh.write(metrics_row(rec) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_metrics(log, path, config: Optional[dict] = None) -> None:
    with MetricsWriter(path, config) as out:
        for rec in log:
            out.write(rec)


def read_metrics(path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if not ln.startswith("#")]
    header = lines[0].split(",")
    for line in lines[1:]:
        rows.append(dict(zip(header, line.split(","))))
    return rows


class EpisodeLogWriter:
    """JSONL episode log.

    Lines are ``{"type": "header", "config": ...}`` once, then per episode an
    ``{"type": "episode", "episode": i, "seed": s}`` line followed by one
    ``{"type": "step", ...}`` line per step.
    """

    def __init__(self, path_or_file, config: dict):
        if hasattr(path_or_file, "write"):
            self._fh, self._owned = path_or_file, False
        else:
            self._fh, self._owned = open(path_or_file, "w", encoding="utf-8"), True
        self._episode = -1
        self._write({"type": "header", "config": config})

    def _write(self, obj) -> None:
        self._fh.write(_dumps(obj) + "\n")
        self._fh.flush()

    def episode(self, index: int, seed: Optional[int]) -> None:
        self._episode = index
        self._write({"type": "episode", "episode": index, "seed": seed})

    def step(self, action: int, result: StepResult, step: int) -> None:
        self._write({
            "type": "step",
            "episode": self._episode,
            "step": step,
            "actionIndex": action,
            "reward": result.reward,
            "done": result.done,
            "events": [event_to_dict(e) for e in result.events],
            "observation": list(result.observation),
        })

    def close(self) -> None:
        if self._owned:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_episode_log(path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield json.loads(line)
