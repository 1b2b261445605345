"""Logs that prove themselves.

Every episode log carries a per-turn state hash chained over config,
seed, and events. Replaying a log re-executes the recorded actions and
recomputes the chain, so any edit, even one flipped action, is caught
at the exact turn it happens. Same config and seed always produce the
same bytes.
"""

import json
import tempfile
from pathlib import Path

from polis.runner import run_replay, run_simulate

with tempfile.TemporaryDirectory() as tmp:
    out_a = Path(tmp) / "a"
    out_b = Path(tmp) / "b"
    run_simulate("c_star", episodes=2, base_seed=21, out_dir=out_a)
    run_simulate("c_star", episodes=2, base_seed=21, out_dir=out_b)

    for name in sorted(p.name for p in out_a.iterdir()):
        same = (out_a / name).read_bytes() == (out_b / name).read_bytes()
        print(f"{name}: reruns {'byte-identical' if same else 'DIVERGED'}")

    print("\nreplaying the originals:")
    for path, report in run_replay([out_a]):
        print(f"  {Path(path).name}: {'verified' if report.verified else 'FAILED'}")

    # now flip one action inside one log
    victim = sorted(out_a.glob("*.jsonl"))[0]
    lines = victim.read_text().splitlines()
    index = next(i for i, line in enumerate(lines) if '"GATHER"' in line)
    turn = json.loads(lines[index])["turn"]
    lines[index] = lines[index].replace('"GATHER"', '"REST"', 1)
    tampered = Path(tmp) / "tampered.jsonl"
    tampered.write_text("\n".join(lines) + "\n", encoding="utf-8")

    print(f"\nflipped one GATHER to REST at turn {turn}, replaying the copy:")
    ((path, report),) = run_replay([tampered])
    print(f"  verified: {report.verified}")
    print(f"  first divergence: turn {report.first_divergence}")
    print(f"  detail: {report.detail}")
