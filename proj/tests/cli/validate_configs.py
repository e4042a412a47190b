"""Bundled configs satisfy the published schema, and broken ones do not."""
import copy
import json
import pathlib
import sys

import jsonschema

config_dir = pathlib.Path(sys.argv[1])
extra = [pathlib.Path(p) for p in sys.argv[2:]]
schema = json.loads((config_dir / "config.schema.json").read_text())
jsonschema.Draft202012Validator.check_schema(schema)
validator = jsonschema.Draft202012Validator(schema)

failures = 0
good = sorted(config_dir.glob("benchmark_*.json")) + extra
for path in good:
    errors = list(validator.iter_errors(json.loads(path.read_text())))
    for e in errors:
        print(f"{path.name}: /{'/'.join(map(str, e.absolute_path))}: {e.message}")
    failures += bool(errors)

base = json.loads(good[0].read_text())
mutations = {
    "missing mass": lambda c: c["system"].pop("mass"),
    "unknown field": lambda c: c["system"].update(colour="red"),
    "bad potential kind": lambda c: c["system"]["potential"].update(kind="quartic"),
    "negative n_modes": lambda c: c["bath"].update(n_modes=-4),
    "one quadrature node": lambda c: c["numerics"].update(quadrature_nodes=1),
    "beta with ground state": lambda c: c["initial_state"].update(ground_state=True),
    "string mass": lambda c: c["system"].update(mass="heavy"),
}
for name, mutate in mutations.items():
    doc = copy.deepcopy(base)
    mutate(doc)
    if validator.is_valid(doc):
        print(f"schema accepted a config with {name}")
        failures += 1

print(f"{len(good)} configs checked, {len(mutations)} mutations rejected" if not failures else "FAILED")
sys.exit(1 if failures else 0)
