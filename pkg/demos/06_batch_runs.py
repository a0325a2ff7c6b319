"""Reproducible batch runs through the harness (and the faddeev-ep CLI).

Builds a config, runs the validation suite plus a locus trace and a
parity check, and shows where the artifacts land.  The same run is
available from the shell as

    faddeev-ep run config.json
    faddeev-ep validate --curve circle --n 128
    faddeev-ep scan --rmin 1e-3 --rmax 1 --nr 16 --nphi 8
"""

import json
import pathlib

from faddeev_ep.harness import RunConfig, run

outdir = pathlib.Path("demo_runs")
cfg = RunConfig(
    detectors=["validate", "locus", "xi_fit", "parity"],
    lam=0.05,
    locus_angles=16,
    outdir=str(outdir),
    workers=2,
)

path = outdir / "config.json"
outdir.mkdir(exist_ok=True)
path.write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
print(f"config written to {path} (hash {cfg.config_hash()})")

manifest = run(cfg)

print("\n== manifest ==")
print(json.dumps({
    "config_hash": manifest.config_hash,
    "versions": manifest.versions,
    "timings": manifest.timings,
    "validation_passed": manifest.validation_passed,
    "errors": manifest.detector_errors,
}, indent=2, sort_keys=True))

rundir = outdir / manifest.config_hash
summary = json.loads((rundir / "summary.json").read_text())
print("\n== summary highlights ==")
print(f"locus:   mean eps* = {summary['locus']['mean_eps']:.6f}, "
      f"prediction (mu/nu) lambda = {summary['locus']['prediction']:.6f}")
print(f"xi fit:  a = {summary['xi_fit']['a']:.5f}, b = {summary['xi_fit']['b']:.5f}")
print(f"parity:  {summary['parity']['message']}")
print(f"\nartifacts in {rundir}: {sorted(p.name for p in rundir.iterdir())}")
print("re-running the same config reproduces every CSV byte for byte "
      "and hits the operator cache for the interior solves")
