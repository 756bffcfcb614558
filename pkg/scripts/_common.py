"""Shared output helpers for the experiment scripts."""
import json
from pathlib import Path

from sintheta import cli
from sintheta.harness import config_dict


def save(out, name, cfg, summary, records):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{name}_config.json").write_text(json.dumps(config_dict(cfg), indent=2, default=str) + "\n")
    cli.emit_csv(records, out / f"{name}.csv")
    cli.emit_report([summary], out / f"{name}_report.txt")
    print((out / f"{name}_report.txt").read_text(), end="")
