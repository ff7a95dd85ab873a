"""Validates CLI outputs and every HTTP response shape against schemas/."""

import argparse
import glob
import json
import re
import subprocess
import sys
import tempfile
import urllib.error
import urllib.request
from pathlib import Path

from jsonschema import Draft202012Validator

failures = []


def check(schema_dir, name, obj, what):
    schema = json.loads((schema_dir / name).read_text())
    errors = list(Draft202012Validator(schema).iter_errors(obj))
    if errors:
        failures.append(f"{what}: {name}: {errors[0].message}")


def request(base, path, body=None):
    data = None if body is None else json.dumps(body).encode()
    req = urllib.request.Request(base + path, data=data, method="GET" if body is None else "POST",
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=60) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read())


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--cli", required=True)
    parser.add_argument("--schemas", required=True, type=Path)
    args = parser.parse_args()
    schemas = args.schemas

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        run = lambda *a: subprocess.run([args.cli, *a], check=True, capture_output=True)
        run("synth", "-n", "5", "--seed", "3", "-o", str(tmp / "truth"))
        run("simulate", "-t", str(tmp / "truth"), "-o", str(tmp / "proposals"))
        run("structure", "-p", str(tmp / "proposals"), "-o", str(tmp / "layouts"))
        for f in sorted(glob.glob(str(tmp / "layouts" / "*.json"))):
            check(schemas, "layout.schema.json", json.loads(Path(f).read_text()), f)
        proposal_files = sorted(glob.glob(str(tmp / "proposals" / "*.json")))
        for f in proposal_files:
            check(schemas, "proposals.schema.json", json.loads(Path(f).read_text()), f)

        server = subprocess.Popen(
            [args.cli, "serve", "--port", "0", "--data-dir", str(tmp / "data")],
            stderr=subprocess.PIPE, text=True)
        try:
            line = server.stderr.readline()
            match = re.search(r"http://[^ ]+", line)
            if not match:
                print(f"FAIL could not start the server: {line.strip()}")
                return 1
            base = match.group(0)

            status, body = request(base, "/documents",
                                   json.loads(Path(proposal_files[0]).read_text()))
            page = body["page_id"]
            _, layout = request(base, f"/documents/{page}/layout")
            check(schemas, "layout.schema.json", layout, "GET layout")
            _, summary = request(base, f"/documents/{page}")
            check(schemas, "document_summary.schema.json", summary, "GET document")

            first = layout["regions"][0]
            new_class = "text_block" if first["class"] == "handwriting" else "handwriting"
            correction = {"operator": "schema-check", "edits": [
                {"action": "relabel", "target": {"class": first["class"], "bbox": first["bbox"]},
                 "class": new_class}]}
            check(schemas, "correction.schema.json", correction, "correction request")
            _, ack = request(base, f"/documents/{page}/corrections", correction)
            check(schemas, "correction_ack.schema.json", ack, "POST corrections")
            _, staged = request(base, "/corrections/staged")
            for c in staged["staged"]:
                check(schemas, "correction.schema.json", c, "GET staged")

            _, job = request(base, "/train/incremental", {"max_steps": 30})
            check(schemas, "training_job.schema.json", job, "POST train")
            _, job = request(base, f"/train/jobs/{job['id']}")
            check(schemas, "training_job.schema.json", job, "GET job")
            _, noop = request(base, "/train/incremental", {})
            check(schemas, "training_job.schema.json", noop, "POST train noop")
            _, model = request(base, "/models/current")
            check(schemas, "model.schema.json", model, "GET model")

            synth = {"synth": {"gen": {"seed": 3}, "noise": {}}}
            check(schemas, "ingest_synth.schema.json", synth, "synthetic ingest request")
            status, _ = request(base, "/documents", synth)
            if status != 201:
                failures.append(f"synthetic ingest returned {status}")
            _, err = request(base, "/documents", {"regions": [{"class": "blob", "bbox": [1]}]})
            check(schemas, "error.schema.json", err, "400 body")
            _, err = request(base, "/documents/none/layout")
            check(schemas, "error.schema.json", err, "404 body")
        finally:
            server.terminate()
            server.wait(timeout=30)

    for f in failures:
        print(f"FAIL {f}")
    print("schemas: all outputs conform" if not failures else f"{len(failures)} failures")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
