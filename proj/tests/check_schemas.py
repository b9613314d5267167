"""Runs every report-producing subcommand once and validates its JSON output
(and the sidecars and scenario.json it writes) against schemas/."""
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema

tool, schema_dir = sys.argv[1], pathlib.Path(sys.argv[2])
failures = 0


def check(schema, doc, what):
    global failures
    s = json.loads((schema_dir / schema).read_text())
    jsonschema.Draft202012Validator.check_schema(s)
    errors = list(jsonschema.Draft202012Validator(s).iter_errors(doc))
    print(("ok  " if not errors else "FAIL"), what)
    for e in errors[:5]:
        print("     ", e.json_path, e.message)
    failures += bool(errors)


def run(*args, schema):
    p = subprocess.run([tool, *args], capture_output=True, text=True)
    if p.returncode != 0:
        global failures
        failures += 1
        print("FAIL", " ".join(args[:2]), "exit", p.returncode, p.stderr)
        return None
    doc = json.loads(p.stdout)
    check(schema, doc, " ".join(a for a in args if not a.startswith("/")))
    return doc


with tempfile.TemporaryDirectory() as tmp:
    t = pathlib.Path(tmp)
    run("--seed", "5", "synth", "--out", str(t / "s"), "--d", "6", "--noise", "0.02", schema="synth_report.schema.json")
    check("scenario.schema.json", json.loads((t / "s/scenario.json").read_text()), "scenario.json")
    check("emb_sidecar.schema.json", json.loads((t / "s/a_image.emb.json").read_text()), "a_image.emb.json")
    f = {k: str(t / "s" / f"{k}.emb") for k in ["a_image", "a_text", "b_image", "b_text"]}
    run("fit", "--source", f["a_image"], "--target", f["b_image"], "--out", str(t / "m.map"),
        "--method", "orthogonal-centered", schema="fit_report.schema.json")
    check("map_sidecar.schema.json", json.loads((t / "m.map.json").read_text()), "m.map.json")
    run("invert", "--map", str(t / "m.map"), "--out", str(t / "inv.map"), schema="map_report.schema.json")
    run("compose", "--first", str(t / "m.map"), "--second", str(t / "inv.map"), "--out", str(t / "id.map"),
        schema="map_report.schema.json")
    run("apply", "--map", str(t / "m.map"), "--source", f["a_text"], "--out", str(t / "at.emb"),
        schema="set_report.schema.json")
    run("prototypes", "--source", f["b_text"], "--out", str(t / "p.emb"), schema="set_report.schema.json")
    run("inspect", str(t / "m.map"), schema="inspect_report.schema.json")
    run("inspect", f["a_image"], schema="inspect_report.schema.json")
    ev = ["--map", str(t / "m.map"), "--source-image", f["a_image"], "--target-image", f["b_image"],
          "--source-text", f["a_text"], "--target-text", f["b_text"]]
    run("eval", *ev, "--recenter", schema="eval_report.schema.json")
    run("two-path", *ev, "--k", "3", schema="two_path_report.schema.json")
    run("sweep", *[a for a in ev[2:]], "--classes", "2,4", schema="sweep_report.schema.json")
    run("cycle", "--a", f["a_image"], "--b", f["b_image"], "--c", f["b_image"], schema="cycle_report.schema.json")
    run("theory", "--count", "20", "--instances", "--negative-controls", "--spanning", f["a_image"],
        schema="theory_report.schema.json")
    run("theory", "--sweep", "text_bound", "--count", "1", "--instances", schema="theory_report.schema.json")
    (t / "x.csv").write_text("0,1.0,0.0\n1,0.0,1.0\n")
    run("import-csv", "--input", str(t / "x.csv"), "--out", str(t / "x.emb"), "--labels", schema="set_report.schema.json")

sys.exit(1 if failures else 0)
