import io
import json

from rivetline.agents import EpisodeRecord
from rivetline.env import make_env
from rivetline.logs import (
    METRICS_HEADER, EpisodeLogWriter, MetricsWriter, metrics_row, read_episode_log, read_metrics, write_metrics,
)
from rivetline.render import render


def _records(n):
    return [EpisodeRecord(i, -1.5 * i, 10 + i, i % 2 == 0, i % 3 == 0, 0.1) for i in range(n)]


def test_metrics_row_format():
    assert metrics_row(EpisodeRecord(3, -56.0, 6, True, False, 0.25)) == "3,-56.0,6,1,0,0.25"


def test_ten_episode_file(tmp_path):
    path = tmp_path / "m.csv"
    write_metrics(_records(10), path, {"factory": {"nProducts": 1}})
    lines = path.read_text().splitlines()
    comments = [ln for ln in lines if ln.startswith("#")]
    data = [ln for ln in lines if not ln.startswith("#")]
    assert comments[0] == "# rivetline metrics v1"
    assert json.loads("\n".join(c[2:] for c in comments[1:])) == {"factory": {"nProducts": 1}}
    assert data[0] == METRICS_HEADER and len(data) == 11
    rows = read_metrics(path)
    assert [int(r["episode"]) for r in rows] == list(range(10))


def test_identical_runs_identical_files(tmp_path):
    for name in ("a.csv", "b.csv"):
        write_metrics(_records(10), tmp_path / name, {"x": 1})
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_rows_are_flushed_as_written(tmp_path):
    path = tmp_path / "m.csv"
    writer = MetricsWriter(path)
    for rec in _records(5):
        writer.write(rec)
    # readable before close
    assert len(read_metrics(path)) == 5
    writer.close()


def test_episode_log_lines():
    buf = io.StringIO()
    env = make_env(1, forced_colors=["Blue"])
    with EpisodeLogWriter(buf, {"k": 1}) as log:
        log.episode(0, 7)
        result = env.step(6)
        log.step(6, result, env.steps)
    lines = [json.loads(ln) for ln in buf.getvalue().splitlines()]
    assert [ln["type"] for ln in lines] == ["header", "episode", "step"]
    step = lines[2]
    assert step["events"] == [{"kind": "Dispatched", "color": "Blue"}]
    assert step["reward"] == -1.0 and step["actionIndex"] == 6 and step["step"] == 1
    assert step["observation"] == list(result.observation)


def test_read_episode_log_skips_blank_lines(tmp_path):
    path = tmp_path / "e.jsonl"
    path.write_text('{"type":"header"}\n\n{"type":"episode"}\n')
    assert [r["type"] for r in read_episode_log(path)] == ["header", "episode"]


def test_render_shows_products():
    env = make_env(1, forced_colors=["Green"])
    obs = env.step(6).observation
    text = render(obs)
    assert "[G0]" in text and "table->Belt2" in text
    assert len(text.splitlines()) == 3
