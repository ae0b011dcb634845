"""Command-line entry points: scene synthesis, batch segmentation, demos.

The demo subcommand reproduces the synthetic experiments: the two-rectangles
scene segmented without seeds (epsilon 1 and 0.0001) and with one or two
constraint bars.  Reported horizons for the small-epsilon runs are rescaled
to this implementation's time step; the claims they reproduce are
topological (component counts), which settle well before the horizon.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np
from PIL import Image as PILImage

from . import engine
from .edgemap import EdgeStopForm, EdgeStopParams, MollifierParams, build_edge_map
from .engine import SegmentationParams, initial_circle, run
from .grid import GridField, GridSpec
from .ingest import (
    Image,
    IngestError,
    SceneParams,
    SeedLabel,
    SeedMask,
    load_image,
    load_seed_mask,
    save_pgm,
    save_seed_mask,
    scene_image,
    synth_bar_seed,
    synth_two_rectangles,
    image_to_field,
)
from .solver import SolverParams

DEMOS = ("no-obstacle-eps1", "no-obstacle-eps4", "one-obstacle", "two-obstacles")


def _threads() -> int:
    """SEEDSEG_THREADS caps internal row parallelism (1 = sequential)."""
    raw = os.environ.get("SEEDSEG_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise click.UsageError(f"SEEDSEG_THREADS={raw!r} is not an integer")
    if n < 1:
        raise click.UsageError("SEEDSEG_THREADS must be positive")
    return n


def _grid_for_image(img: Image) -> GridSpec:
    return GridSpec(img.width / img.height, 1.0, img.width, img.height)


def _default_circle(spec: GridSpec):
    return (spec.L1 / 2, spec.L2 / 2), 0.25 * min(spec.L1, spec.L2)


def seed_distance_init(mask: SeedMask, spec: GridSpec) -> GridField:
    """Signed distance to the Inside-seed region boundary (negative inside)."""
    from scipy import ndimage

    inside = mask.inside
    if not inside.any():
        raise click.UsageError("mask has no Inside seeds; give --init-circle")
    h = min(spec.h1, spec.h2)
    d_out = ndimage.distance_transform_edt(~inside, sampling=(spec.h2, spec.h1))
    d_in = ndimage.distance_transform_edt(inside, sampling=(spec.h2, spec.h1))
    return GridField.from_grid(spec, np.where(inside, -d_in - h / 2, d_out - h / 2))


def _segmentation_params(epsilon, lam, g_form, sigma, tau, omega, tol,
                         max_sweeps, final_time, steps, steady_tol, delta,
                         big_m) -> SegmentationParams:
    if final_time is None and steps is None:
        final_time = 1.0
    return SegmentationParams(
        epsilon=epsilon,
        lam=lam,
        form=EdgeStopForm(g_form),
        sigma=sigma,
        tau=tau,
        solver=SolverParams(omega=omega, tol=tol, max_sweeps=max_sweeps),
        final_time=final_time,
        step_count=steps,
        steady_tol=steady_tol,
        delta=delta,
        big_m=big_m,
    )


def _param_options(f):
    opts = [
        click.option("--epsilon", type=float, default=1e-4, show_default=True,
                     help="Tichonov regularization of |grad u|."),
        click.option("--lambda", "lam", type=float, default=100.0, show_default=True,
                     help="Edge-detector contrast parameter."),
        click.option("--g-form", type=click.Choice(["rational", "inverse_sqrt"]),
                     default="inverse_sqrt", show_default=True),
        click.option("--sigma", type=float, default=None,
                     help="Gaussian mollifier dispersion [default: h1]."),
        click.option("--tau", type=float, default=None,
                     help="Time step [default: h1*h2]."),
        click.option("--omega", type=float, default=1.2, show_default=True),
        click.option("--tol", type=float, default=1e-9, show_default=True),
        click.option("--max-sweeps", type=int, default=2000, show_default=True),
        click.option("--final-time", type=float, default=None),
        click.option("--steps", type=int, default=None),
        click.option("--steady-tol", type=float, default=1e-6, show_default=True),
        click.option("--delta", type=float, default=None,
                     help="Obstacle magnitude on seeds [default: 0.05*min(L)]."),
        click.option("--big-m", type=float, default=1e6, show_default=True),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def draw_overlay(img: Image, polylines, path, extent=(1.0, 1.0)) -> None:
    """Contour rasterized in red over the grayscale image, 1 px wide."""
    rgb = np.repeat(
        np.rint(img.intensities * 255).astype(np.uint8)[..., None], 3, axis=2
    )
    w, h = img.width, img.height
    l1, l2 = extent
    for poly in polylines:
        pts = [(x1 / l1, x2 / l2) for x1, x2 in poly.points]
        if poly.closed:
            pts.append(pts[0])
        for (ax, ay), (bx, by) in zip(pts, pts[1:]):
            n = max(int(np.hypot((bx - ax) * w, (by - ay) * h) * 2), 1)
            for t in np.linspace(0.0, 1.0, n + 1):
                px = int(round((ax + t * (bx - ax)) * (w - 1)))
                py = int(round((ay + t * (by - ay)) * (h - 1)))
                if 0 <= px < w and 0 <= py < h:
                    rgb[py, px] = (255, 0, 0)
    PILImage.fromarray(rgb, "RGB").save(path)


def _write_run_outputs(out: Path, img: Image, snap, history) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    contour_json = engine.contour_to_json(snap.contour)
    (out / "contour.json").write_text(contour_json)
    (out / "levelset.bin").write_bytes(engine.dump_level_set(snap.u, snap.time))
    spec = snap.u.spec
    draw_overlay(img, snap.contour, out / "overlay.png", (spec.L1, spec.L2))
    count, areas = snap.interior
    report = {
        "time": snap.time,
        "steps": len(history),
        "sweepsLastStep": snap.report.sweeps,
        "sweepDiff": snap.report.sweep_diff,
        "linearResidual": snap.report.linear_residual,
        "complementarityResidual": snap.report.complementarity_residual,
        "converged": snap.report.converged,
        "interiorComponents": count,
        "componentAreas": areas,
    }
    (out / "report.json").write_text(json.dumps(report, indent=2))
    return report


@click.group()
def main():
    """Seed-constrained level-set segmentation toolkit."""
    _threads()


@main.command()
@click.option("--out", type=click.Path(path_type=Path), default=Path("."),
              show_default=True)
@click.option("--width", type=int, default=128, show_default=True)
@click.option("--height", type=int, default=128, show_default=True)
@click.option("--hole-height", type=float, default=0.04, show_default=True)
@click.option("--edge-thickness", type=float, default=0.04, show_default=True)
@click.option("--bar", "bars", multiple=True, nargs=5,
              type=(str, float, float, float, float),
              metavar="LABEL CX CY W H",
              help="Add a seed bar (label inside|outside) to seeds.png.")
def synth(out, width, height, hole_height, edge_thickness, bars):
    """Write the two-rectangles scene PGM (and an optional seed mask PNG)."""
    params = SceneParams(hole_height=hole_height, edge_thickness=edge_thickness)
    out.mkdir(parents=True, exist_ok=True)
    save_pgm(scene_image(params, width, height), out / "scene.pgm")
    click.echo(f"wrote {out / 'scene.pgm'}")
    if bars:
        spec = GridSpec(1.0, 1.0, width, height)
        mask = SeedMask.all_free(spec)
        for label, cx, cy, w, h in bars:
            mask = mask.union(
                synth_bar_seed((cx, cy), w, h, SeedLabel[label.upper()], spec)
            )
        save_seed_mask(mask, out / "seeds.png")
        click.echo(f"wrote {out / 'seeds.png'}")


@main.command()
@click.argument("image_path", type=click.Path(path_type=Path))
@click.option("--mask", "mask_path", type=click.Path(path_type=Path), default=None)
@click.option("--init-circle", nargs=3, type=float, default=None,
              metavar="CX CY R", help="Initial circle (signed distance).")
@click.option("--out", type=click.Path(path_type=Path), default=Path("seedseg-out"),
              show_default=True)
@_param_options
def segment(image_path, mask_path, init_circle, out, **param_kw):
    """Segment an image; writes contour.json, levelset.bin, overlay.png, report.json."""
    try:
        img = load_image(image_path)
    except IngestError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    spec = _grid_for_image(img)
    i0 = image_to_field(img, spec, "bilinear")
    mask = None
    if mask_path is not None:
        try:
            mask = load_seed_mask(mask_path, spec)
        except IngestError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
    params = _segmentation_params(**param_kw)
    if init_circle:
        u_ini = initial_circle(init_circle[:2], init_circle[2], spec)
    elif mask is not None and mask.inside.any():
        u_ini = seed_distance_init(mask, spec)
    else:
        center, radius = _default_circle(spec)
        u_ini = initial_circle(center, radius, spec)
    snap, history = run(i0, mask, u_ini, params)
    report = _write_run_outputs(out, img, snap, history)
    click.echo(json.dumps(report, indent=2))
    sys.exit(0 if report["converged"] else 2)


def demo_config(selector: str):
    """Canned scene, seeds and parameters for one named experiment."""
    spec = GridSpec(1.0, 1.0, 128, 128)
    scene = synth_two_rectangles(SceneParams(), spec)
    solver = SolverParams(omega=1.5, tol=1e-8, max_sweeps=500)
    mask = None
    expected = 1
    if selector == "no-obstacle-eps1":
        params = SegmentationParams(epsilon=1.0, tau=2e-3, final_time=1.2,
                                    steady_tol=1e-6, solver=solver)
    else:
        params = SegmentationParams(epsilon=1e-4, tau=2e-3, final_time=1.0,
                                    steady_tol=1e-6, solver=solver)
    if selector in ("one-obstacle", "two-obstacles"):
        mask = synth_bar_seed((0.5, 0.5), 0.04, 0.6, SeedLabel.OUTSIDE, spec)
        expected = 2
    if selector == "two-obstacles":
        mask = mask.union(
            synth_bar_seed((0.4, 0.5), 0.04, 0.2, SeedLabel.INSIDE, spec)
        )
    u_ini = initial_circle((0.5, 0.5), float(np.sqrt(0.08)), spec)
    return spec, scene, mask, u_ini, params, expected


def run_demo(selector: str, out: Path) -> dict:
    spec, scene, mask, u_ini, params, expected = demo_config(selector)
    em = build_edge_map(
        scene,
        MollifierParams(spec.h1),
        EdgeStopParams(params.lam, params.form),
    )
    snap, history = run(scene, mask, u_ini, params, edge_map=em)
    img = Image(spec.N1 + 1, spec.N2 + 1, scene.as_grid())
    report = _write_run_outputs(out, img, snap, history)
    if mask is not None:
        save_seed_mask(mask, out / "seeds.png")
    report["demo"] = selector
    report["expectedComponents"] = expected
    report["topologyPass"] = report["interiorComponents"] == expected
    (out / "summary.json").write_text(json.dumps(report, indent=2))
    return report


@main.command()
@click.argument("selector", type=click.Choice(DEMOS))
@click.option("--out", type=click.Path(path_type=Path), default=None)
def demo(selector, out):
    """Run a canned synthetic experiment and write a topology summary."""
    out = out if out is not None else Path(f"demo-{selector}")
    report = run_demo(selector, out)
    click.echo(json.dumps(report, indent=2))
    sys.exit(0 if report["topologyPass"] and report["converged"] else 2)


@main.command()
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(port, host):
    """Start the interactive session HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
