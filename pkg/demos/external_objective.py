"""Optimizing an objective that lives in another process.

The child speaks one JSON line per evaluation on stdin/stdout:
request {"version": 1, "values": [...]} and response {"value": ...}.
Any language works; this child happens to be Python and scores a noisy
quadratic with a preferred discrete level.
"""
import sys
import tempfile

from moldbo.bench import external_task
from moldbo.engine import RunConfig, run_prior_graph
from moldbo.external import ExternalObjective
from moldbo.space import MixedSpace, Variable

CHILD = """\
import json, sys

for line in sys.stdin:
    request = json.loads(line)
    assert request["version"] == 1
    level, x = request["values"]
    value = (2 - abs(level - 1)) - (x - 0.3) ** 2
    print(json.dumps({"value": value}), flush=True)
"""

with tempfile.NamedTemporaryFile("w", suffix=".py", delete=False) as fh:
    fh.write(CHILD)
    child_path = fh.name

space = MixedSpace([
    Variable.discrete("level", 3),
    Variable.continuous("x", 0.0, 1.0),
])
ext = ExternalObjective.from_command((sys.executable, child_path), timeout=30.0)
task = external_task(ext, space)

trace = run_prior_graph(RunConfig(task=task, budget=10, n_initial=15, seed=0,
                                  mode="prior-graph"))
print(f"evaluations: {len(trace.records)}")
print(f"best value found: {trace.best:.4f}  (optimum 2.0 at level=1, x=0.3)")
print(f"best configuration: {trace.best_values}")
