"""``restain`` command line: deconvolution, restaining, estimation, synthesis
and evaluation over PNG tiles, profile JSONs and CMAP containers.

All commands print one JSON object on stdout and report failures as a JSON
object on stderr with exit codes 2 (input validation), 3 (numerical failure)
or 4 (I/O). Outputs are written atomically; re-running a command with
identical inputs reproduces identical bytes.

Profile arguments accept a file path, a name resolved under
``$RESTAIN_PROFILE_DIR``, or a built-in name (``her2-default``,
``her2-brand-a``, ``her2-brand-b``).
"""

from __future__ import annotations

import csv
import functools
import io
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from restain import __version__, backend
from restain.cmap import read_cmap, write_cmap
from restain.color import ConcentrationMap, deconvolve, linear_transfer, od_to_rgb, recompose, rgb_to_od
from restain.errors import RestainError, ValidationError
from restain.estimation import EstimationConfig, estimate_stains
from restain.imgio import atomic_write_bytes, load_label_png, load_rgb_png, save_label_png, save_rgb_png
from restain.manifest import ManifestEntry, TileManifest, write_manifest
from restain.metrics import CellLabelMap, FEATURE_VERSION, extract_features, frechet_distance, summarize, weighted_f1
from restain.profiles import resolve_profile, save_profile
from restain.synth import dominant_class, generate_tile

PROFILE_DIR_ENV = "RESTAIN_PROFILE_DIR"


def _emit(payload: dict) -> None:
    click.echo(json.dumps(payload, sort_keys=True))


def _json_flag(fn):
    return click.option(
        "--json", "json_output", is_flag=True, default=False,
        help="Structured JSON output (the default; flag kept for scripting).",
    )(fn)


def _cli_command(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        kwargs.pop("json_output", None)
        try:
            return fn(*args, **kwargs)
        except RestainError as exc:
            sys.stderr.write(json.dumps({"error": exc.kind, "message": str(exc)}) + "\n")
            raise SystemExit(exc.exit_code)
        except OSError as exc:
            sys.stderr.write(json.dumps({"error": "io", "message": str(exc)}) + "\n")
            raise SystemExit(4)

    return wrapper


def _profile(spec: str):
    return resolve_profile(spec, profile_dir=os.environ.get(PROFILE_DIR_ENV))


@click.group()
@click.version_option(version=__version__)
def main():
    """Stain unmixing, restaining and transfer evaluation for HER2 tiles."""


@main.command()
@_json_flag
@_cli_command
def info():
    """Show version, kernel backend and feature descriptor version."""
    _emit(
        {
            "version": __version__,
            "backend": backend.BACKEND_NAME,
            "have_compiled": backend.HAVE_COMPILED,
            "feature_version": FEATURE_VERSION,
        }
    )


@main.command(name="deconvolve")
@click.argument("image", type=click.Path())
@click.argument("profile")
@click.argument("out_cmap", type=click.Path())
@_json_flag
@_cli_command
def deconvolve_cmd(image, profile, out_cmap):
    """Unmix IMAGE with PROFILE and write concentrations to OUT_CMAP."""
    prof = _profile(profile)
    tile = load_rgb_png(image, white_point=prof.white_point)
    conc = deconvolve(rgb_to_od(tile), prof.stain_matrix)
    write_cmap(out_cmap, conc.values)
    _emit(
        {
            "width": conc.width,
            "height": conc.height,
            "channels": conc.channels,
            "mean_concentration": [float(x) for x in conc.values.mean(axis=(0, 1))],
            "out": str(out_cmap),
        }
    )


@main.command(name="recompose")
@click.argument("cmap_path", type=click.Path())
@click.argument("profile")
@click.argument("out_image", type=click.Path())
@_json_flag
@_cli_command
def recompose_cmd(cmap_path, profile, out_image):
    """Compose CMAP_PATH concentrations through PROFILE into OUT_IMAGE."""
    prof = _profile(profile)
    values = read_cmap(cmap_path).astype(np.float64)
    if values.shape[2] != prof.stain_matrix.n_s:
        raise ValidationError(
            f"cmap has {values.shape[2]} channels but profile has {prof.stain_matrix.n_s} stains"
        )
    tile = od_to_rgb(recompose(ConcentrationMap(values), prof.stain_matrix), prof.white_point)
    save_rgb_png(tile, out_image)
    _emit({"width": tile.width, "height": tile.height, "out": str(out_image)})


@main.command(name="transfer-linear")
@click.argument("image", type=click.Path())
@click.argument("profile_src")
@click.argument("profile_dst")
@click.argument("out_image", type=click.Path())
@_json_flag
@_cli_command
def transfer_linear_cmd(image, profile_src, profile_dst, out_image):
    """Restain IMAGE from PROFILE_SRC into PROFILE_DST and write OUT_IMAGE."""
    src = _profile(profile_src)
    dst = _profile(profile_dst)
    tile = load_rgb_png(image, white_point=src.white_point)
    out = linear_transfer(tile, src, dst)
    save_rgb_png(out, out_image)
    _emit(
        {
            "width": out.width,
            "height": out.height,
            "source_domain": src.domain_id,
            "target_domain": dst.domain_id,
            "out": str(out_image),
        }
    )


@main.command(name="estimate-stains")
@click.argument("image", type=click.Path())
@click.argument("seed_profile")
@click.argument("out_profile", type=click.Path())
@click.option("--trace-csv", type=click.Path(), default=None, help="Objective trace CSV (default: alongside OUT_PROFILE).")
@click.option("--max-iters", type=int, default=50, show_default=True)
@click.option("--tol", type=float, default=1e-5, show_default=True)
@click.option("--allow-negative", is_flag=True, help="Skip the non-negative projection of concentrations.")
@_json_flag
@_cli_command
def estimate_stains_cmd(image, seed_profile, out_profile, trace_csv, max_iters, tol, allow_negative):
    """Optimize SEED_PROFILE's color vectors on IMAGE; write profile + trace."""
    seed = _profile(seed_profile)
    tile = load_rgb_png(image, white_point=seed.white_point)
    cfg = EstimationConfig(
        init=seed, max_iters=max_iters, tol=tol, nonneg_concentrations=not allow_negative
    )
    result = estimate_stains(rgb_to_od(tile), cfg)
    optimized = type(seed)(
        domain_id=seed.domain_id,
        stain_matrix=result.stain_matrix,
        white_point=seed.white_point,
        source=f"optimized on {Path(image).name} from {seed.domain_id}",
    )
    save_profile(optimized, out_profile)
    if trace_csv is None:
        trace_csv = str(Path(out_profile).with_suffix("")) + "_trace.csv"
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["iteration", "objective"])
    for i, value in enumerate(result.objective_trace, start=1):
        writer.writerow([i, f"{value:.17g}"])
    atomic_write_bytes(trace_csv, buf.getvalue().encode("utf-8"))
    _emit(
        {
            "iterations_used": result.iterations_used,
            "converged": result.converged,
            "final_objective": result.objective_trace[-1],
            "out_profile": str(out_profile),
            "trace_csv": str(trace_csv),
        }
    )


@main.command(name="synth")
@click.argument("out_dir", type=click.Path())
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--count", type=int, default=4, show_default=True)
@click.option("--size", type=int, default=128, show_default=True)
@click.option("--profile", "profile_specs", multiple=True, help="Profile per domain; repeat for several (round-robin). Default: her2-default.")
@click.option("--cells", type=int, default=12, show_default=True)
@click.option("--class-mix", default="0.25,0.25,0.25,0.25", show_default=True, help="Probabilities for classes 0,1+,2+,3+.")
@click.option("--split", type=click.Choice(["train", "test"]), default="train", show_default=True)
@_json_flag
@_cli_command
def synth_cmd(out_dir, seed, count, size, profile_specs, cells, class_mix, split):
    """Generate COUNT synthetic tiles with labels, truth CMAPs and a manifest."""
    profiles = [_profile(p) for p in (profile_specs or ("her2-default",))]
    try:
        mix = tuple(float(x) for x in class_mix.split(","))
    except ValueError:
        raise ValidationError(f"cannot parse class mix {class_mix!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(count):
        prof = profiles[i % len(profiles)]
        st = generate_tile(seed + i, size, prof, cells, mix)
        name = f"tile_{i:04d}"
        save_rgb_png(st.tile, out / f"{name}.png")
        save_label_png(st.label_map, out / f"{name}_labels.png")
        write_cmap(out / f"{name}.cmap", st.truth_c.values)
        entries.append(
            ManifestEntry(
                path=f"{name}.png",
                domain_id=prof.domain_id,
                her2_score=dominant_class(st.cells),
                split=split,
            )
        )
    manifest = TileManifest(root=".", entries=tuple(entries), base_dir=out)
    write_manifest(manifest, out / "manifest.json")
    _emit(
        {
            "out_dir": str(out),
            "count": count,
            "domains": sorted({e.domain_id for e in entries}),
            "manifest": str(out / "manifest.json"),
        }
    )


def _features_from_arg(path_arg: str) -> list:
    """Feature vectors from a directory of PNG tiles or a CSV (one vector per row)."""
    path = Path(path_arg)
    if path.is_file() and path.suffix.lower() == ".csv":
        data = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
        return [row for row in data]
    if path.is_dir():
        pngs = sorted(path.glob("*.png"))
        pngs = [p for p in pngs if not p.stem.endswith("_labels")]
        if not pngs:
            raise ValidationError(f"no tile PNGs found in {path}")
        return [extract_features(load_rgb_png(p)) for p in pngs]
    raise ValidationError(f"expected a directory of PNGs or a .csv file, got {path_arg!r}")


@main.command(name="eval-fid")
@click.argument("side_a")
@click.argument("side_b")
@_json_flag
@_cli_command
def eval_fid_cmd(side_a, side_b):
    """Fréchet feature distance between two tile directories (or feature CSVs)."""
    features_a = _features_from_arg(side_a)
    features_b = _features_from_arg(side_b)
    value = frechet_distance(summarize(features_a), summarize(features_b))
    _emit({"frechet_distance": value, "n_a": len(features_a), "n_b": len(features_b)})


@main.command(name="eval-f1")
@click.argument("pred_dir", type=click.Path())
@click.argument("truth_dir", type=click.Path())
@_json_flag
@_cli_command
def eval_f1_cmd(pred_dir, truth_dir):
    """Weighted F1 between label-map directories paired by filename."""
    pred_dir, truth_dir = Path(pred_dir), Path(truth_dir)
    if not truth_dir.is_dir() or not pred_dir.is_dir():
        raise ValidationError("eval-f1 expects two directories of label PNGs")
    truth_files = sorted(truth_dir.glob("*.png"))
    if not truth_files:
        raise ValidationError(f"no label PNGs found in {truth_dir}")
    pred_pixels, truth_pixels = [], []
    for truth_path in truth_files:
        pred_path = pred_dir / truth_path.name
        if not pred_path.is_file():
            raise ValidationError(f"prediction missing for {truth_path.name}")
        t = load_label_png(truth_path)
        p = load_label_png(pred_path)
        if t.shape != p.shape:
            raise ValidationError(f"label shapes differ for {truth_path.name}: {p.shape} vs {t.shape}")
        truth_pixels.append(t.ravel())
        pred_pixels.append(p.ravel())
    truth_all = np.concatenate(truth_pixels).reshape(1, -1)
    pred_all = np.concatenate(pred_pixels).reshape(1, -1)
    result = weighted_f1(CellLabelMap(pred_all), CellLabelMap(truth_all))
    _emit(
        {
            "weighted_f1": result.weighted_f1,
            "per_class_f1": [float(x) for x in result.per_class_f1],
            "support": [int(x) for x in result.support],
            "n_images": len(truth_files),
        }
    )


if __name__ == "__main__":
    main()
