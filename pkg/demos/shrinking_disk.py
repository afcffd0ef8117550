"""A disk moving with the flow, for three radii, against the disk-free flow.

Uses configs/shrink.json with a shorter horizon.  The distance to the
reference flow away from the disk and the disk path should both settle
as the radius halves, for massless and for massive disks.
"""
import json
import sys
import tempfile
from pathlib import Path

from fsilab.studies import StudySpec, run_study

root = Path(__file__).resolve().parents[1]
doc = json.loads((root / "configs" / "shrink.json").read_text())
doc["time"] = {"T": 0.5, "samples": 10}

with tempfile.TemporaryDirectory() as out:
    res = run_study(StudySpec.from_dict(doc, study="shrink", out=out))
    for scaling in doc["study"]["scalings"]:
        print(f"--- {scaling}")
        print((Path(out) / f"shrink_{scaling}.csv").read_text().rstrip())
    print("PASS" if res.passed else "FAIL")
sys.exit(res.exit_code)
