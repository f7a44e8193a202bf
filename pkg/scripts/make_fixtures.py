"""Regenerate the serialized fixtures under tests/fixtures from the
shared builders. Run from the repository root:

    python3 scripts/make_fixtures.py
"""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from scenariokit import sbafile  # noqa: E402
from scenariokit.dynamics import apply_update  # noqa: E402

import fixture_builders as fb  # noqa: E402


def main() -> None:
    out = ROOT / "tests" / "fixtures"
    out.mkdir(parents=True, exist_ok=True)

    objects = {
        "bi_tree.sba": fb.build_bi_tree(),
        "mlp_tree.sba": fb.build_mlp_tree(),
        "border_db.sba": fb.build_border_db(),
        "border_gen_params.sba": fb.build_border_gen_params(),
        "border_tree_a.sba": fb.build_border_trees()[0],
        "border_tree_b.sba": fb.build_border_trees()[1],
        "border_spec.sba": fb.build_border_spec(),
        "border_scenarios.sba": fb.build_border_scenarios(),
        "border_eval.sba": fb.build_border_eval(),
        "micro_scenarios.sba": fb.build_micro_scenarios(),
        "micro_eval.sba": fb.build_micro_eval(),
        "noncomm_db.sba": fb.build_noncomm_db(),
        "noncomm_gen_params.sba": fb.build_noncomm_gen_params(),
        "noncomm_grid.sba": fb.build_noncomm_grid(),
        "noncomm_spec.sba": fb.build_noncomm_spec(),
        "noncomm_changeset.sba": fb.build_noncomm_changeset(),
        "noncomm_trace.sba": fb.build_trace_config(),
        "records_manifest.sba": fb.build_manifest(),
    }
    state1, _ = apply_update(fb.build_noncomm_db(),
                             fb.build_noncomm_changeset())
    objects["noncomm_state1.sba"] = state1

    for name, obj in sorted(objects.items()):
        path = out / name
        sbafile.save(obj, path)
        print(f"wrote {path}")

    lines = "\n".join(json.dumps(doc, sort_keys=True)
                      for doc in fb.record_documents()) + "\n"
    path = out / "records.ndjson"
    path.write_text(lines, encoding="utf-8")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
