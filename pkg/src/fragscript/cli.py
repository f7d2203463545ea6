"""Command-line client for the service.

Every subcommand speaks the HTTP API; without --server the service app is
mounted in-process, so no daemon is needed for scripting or CI.  Exit
codes: 0 success, 1 user error, 2 internal invariant violation.
"""

from __future__ import annotations

import base64
import json
import pathlib
import sys

import click
import httpx

USER_ERROR, INTERNAL_ERROR = 1, 2


def make_client(server: "str | None") -> httpx.Client:
    if server:
        return httpx.Client(base_url=server.rstrip("/"), timeout=120.0)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient
    from .service import create_app
    return TestClient(create_app())


def _fail(message: str, code: int = USER_ERROR):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _call(client, method: str, path: str, **kw):
    resp = client.request(method, path, **kw)
    if resp.status_code >= 500:
        _fail(resp.text, INTERNAL_ERROR)
    if resp.status_code >= 400:
        detail = resp.json().get("detail", resp.text) if resp.headers.get(
            "content-type", "").startswith("application/json") else resp.text
        _fail(str(detail))
    return resp.json()


def _read_source(path: "str | None", inline: "str | None") -> str:
    if (path is None) == (inline is None):
        _fail("give exactly one of a source file or -e EXPRESSION")
    if inline is not None:
        return inline
    p = pathlib.Path(path)
    if not p.exists():
        _fail(f"no such file: {path}")
    return p.read_text()


def _env_options(pairs) -> dict:
    env = {}
    for pair in pairs:
        if "=" not in pair:
            _fail(f"--set needs name=value, got {pair!r}")
        name, value = pair.split("=", 1)
        env[name.strip()] = value.strip()
    return env


@click.group()
@click.option("--server", envvar="FRAGSCRIPT_SERVER", default=None,
              help="Remote service URL; default runs the service in-process.")
@click.pass_context
def main(ctx, server):
    """Compile a math scripting language to GLSL fragment shaders."""
    ctx.obj = {"server": server}


def _client(ctx):
    return make_client(ctx.obj["server"])


source_arg = click.argument("source", required=False)
inline_opt = click.option("-e", "--expression", default=None, help="Inline source text.")
set_opt = click.option("--set", "env", multiple=True,
                       help="Bind a variable: name=value (value is source text).")


@main.command()
@source_arg
@inline_opt
@set_opt
@click.option("--clock", default=0.0, show_default=True)
@click.option("--precision", default="highp", type=click.Choice(["highp", "mediump"]))
@click.option("-o", "--out", default=None, help="Write the artifact bundle here.")
@click.pass_context
def compile(ctx, source, expression, env, clock, precision, out):
    """Compile to a shader artifact bundle (JSON)."""
    body = {"source": _read_source(source, expression), "env": _env_options(env),
            "clock": clock, "precision": precision}
    data = _call(_client(ctx), "POST", "/compile", json=body)
    text = json.dumps(data["artifact"], indent=1)
    if out:
        pathlib.Path(out).write_text(text + "\n")
        click.echo(f"wrote {out} (output type {data['output_type']})")
    else:
        click.echo(text)


@main.command()
@source_arg
@inline_opt
@set_opt
@click.pass_context
def check(ctx, source, expression, env):
    """Print the fixed-point iteration table and the final types."""
    body = {"source": _read_source(source, expression), "env": _env_options(env)}
    data = _call(_client(ctx), "POST", "/check", json=body)
    rows = data["rows"]
    if not rows:
        click.echo("no terms")
        return
    iters = len(rows[0]["types"])
    head = ["term"] + [f"F^{k}" for k in range(iters)]
    widths = [max(len(head[0]), *(len(r["term"]) for r in rows))]
    for k in range(iters):
        widths.append(max(len(head[k + 1]), *(len(r["types"][k]) for r in rows)))
    def fmt(cells):
        return " | ".join(c.ljust(w) for c, w in zip(cells, widths))
    click.echo(fmt(head))
    click.echo("-+-".join("-" * w for w in widths))
    for r in rows:
        click.echo(fmt([r["term"]] + r["types"]))
    click.echo(data["stationary"])
    click.echo(f"well typed: {'yes' if data['well_typed'] else 'no'}")
    if data["offenders"]:
        click.echo("offending terms: " + ", ".join(data["offenders"]))


@main.command()
@source_arg
@inline_opt
@set_opt
@click.option("--ast", "want_ast", is_flag=True, help="Dump the AST as JSON instead.")
@click.option("-o", "--out", default=None)
@click.pass_context
def graph(ctx, source, expression, env, want_ast, out):
    """Write the dependency graph as DOT (GPU nodes orange, uniforms blue)."""
    body = {"source": _read_source(source, expression), "env": _env_options(env)}
    if want_ast:
        data = _call(_client(ctx), "POST", "/ast", json=body)
        text = json.dumps(data["ast"], indent=1)
    else:
        data = _call(_client(ctx), "POST", "/graph", json=body)
        text = data["dot"]
    if out:
        pathlib.Path(out).write_text(text + "\n")
        click.echo(f"wrote {out}")
    else:
        click.echo(text)


@main.command()
@click.pass_context
def builtins(ctx):
    """Print the builtin overload table."""
    data = _call(_client(ctx), "GET", "/builtins")
    for entry in data["entries"]:
        purity = "" if entry["pure"] else "   [impure: evaluated per frame on the CPU]"
        click.echo(f"{entry['name']}/{entry['arity']}{purity}")
        for line in entry["overloads"]:
            click.echo(f"  {line}")


@main.command()
@source_arg
@inline_opt
@set_opt
@click.option("--viewport", nargs=4, type=float, default=(-4.0, -4.0, 4.0, 4.0),
              show_default=True, help="xmin ymin xmax ymax")
@click.option("--size", nargs=2, type=int, default=(64, 64), show_default=True)
@click.option("--clock", default=0.0, show_default=True)
@click.option("--target", default=None, help="Render to a named texture.")
@click.option("--iterations", default=1, show_default=True)
@click.option("--backend", default="sim", type=click.Choice(["cpu", "sim", "harness"]),
              envvar="FRAGSCRIPT_BACKEND", show_default=True)
@click.option("--harness-url", default=None, envvar="FRAGSCRIPT_HARNESS_URL")
@click.option("-o", "--out", default=None, help="PNG output path.")
@click.option("--floats", default=None, help="Raw float32 dump output path.")
@click.pass_context
def run(ctx, source, expression, env, viewport, size, clock, target, iterations,
        backend, harness_url, out, floats):
    """Render a program and write the image."""
    src = _read_source(source, expression)
    client = _client(ctx)
    body = {
        "source": src, "env": _env_options(env), "target": target,
        "viewport": list(viewport), "resolution": list(size), "clock": clock,
        "iterations": iterations, "want_png": True,
    }
    if backend == "cpu":
        data = _cpu_reference_run(body)
        frame, image = data["frame"], data["image"]
        click.echo(f"mode: {frame['mode']}")
        _write_outputs(image, out, floats)
        return
    if backend == "harness":
        if not harness_url:
            _fail("--backend harness needs --harness-url (or FRAGSCRIPT_HARNESS_URL)")
        session = _call(client, "POST", "/sessions",
                        json={"backend": "harness", "harness_url": harness_url})
        sid = session["session_id"]
        frame = _call(client, "POST", f"/sessions/{sid}/frames", json=body)
        image = _call(client, "GET",
                      f"/sessions/{sid}/textures/{target or '@screen'}?png=true")
        _call(client, "DELETE", f"/sessions/{sid}")
        data = {"frame": frame, "image": image}
    else:
        data = _call(client, "POST", "/run", json=body)
    frame = data["frame"]
    click.echo(f"mode: {frame['mode']}"
               + (" (recompiled)" if frame.get("compiled") else "")
               + (f"; notes: {frame['notes']}" if frame.get("notes") else ""))
    _write_outputs(data["image"], out, floats)


def _write_outputs(image: dict, out, floats) -> None:
    if out:
        pathlib.Path(out).write_bytes(base64.b64decode(image["png_b64"]))
        click.echo(f"wrote {out}")
    if floats:
        pathlib.Path(floats).write_bytes(base64.b64decode(image["data_b64"]))
        click.echo(f"wrote {floats}")
    if not out and not floats:
        click.echo(f"{image['width']}x{image['height']} rendered; "
                   "use -o/--floats to save it")


def _cpu_reference_run(body: dict) -> dict:
    from .corpus import run_cpu_source
    buf = run_cpu_source(
        body["source"], dict(body["env"]), body["viewport"], body["resolution"],
        clock=body["clock"], target=body["target"], iterations=body["iterations"],
    )
    return {
        "frame": {"mode": "cpu-reference", "compiled": False, "notes": None},
        "image": {
            "width": buf.width, "height": buf.height, "rect": buf.rect,
            "data_b64": base64.b64encode(buf.to_f32_bytes()).decode(),
            "png_b64": base64.b64encode(buf.to_png_bytes()).decode(),
        },
    }


@main.command()
@click.option("--name", default=None, help="Check a single corpus entry.")
@click.option("--update", is_flag=True, help="Regenerate golden files (development).")
@click.option("--export-jobs", default=None, metavar="DIR",
              help="Write harness job files for every entry instead of checking.")
@click.pass_context
def corpus(ctx, name, update, export_jobs):
    """Run the bundled example programs against their golden files."""
    from . import corpus as corpus_mod
    if export_jobs:
        out_dir = pathlib.Path(export_jobs)
        out_dir.mkdir(parents=True, exist_ok=True)
        entries = [corpus_mod.by_name(name)] if name else corpus_mod.ENTRIES
        for entry in entries:
            job = corpus_mod.export_job(entry)
            path = out_dir / f"{entry.name}.job.json"
            path.write_text(json.dumps(job) + "\n")
            click.echo(f"wrote {path}")
        return
    if update:
        entries = [corpus_mod.by_name(name)] if name else corpus_mod.ENTRIES
        for entry in entries:
            buf = corpus_mod.run_cpu(entry)
            corpus_mod.write_golden(entry.name, buf)
            click.echo(f"updated golden for {entry.name}")
        return
    params = {"name": name} if name else {}
    data = _call(_client(ctx), "POST", "/corpus/check", params=params)
    failed = False
    for r in data["results"]:
        ok = r["cpu_ok"] and r["sim_ok"]
        failed = failed or not ok
        click.echo(
            f"{'PASS' if ok else 'FAIL'} {r['name']}: mode={r['mode']} "
            f"cpu_diff={r['cpu_max_diff']:.2g} sim_diff={r['sim_max_diff']:.2g} "
            f"compiles={r['compiles']}"
        )
    sys.exit(0 if not failed else 1)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8712, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn
    from .service import create_app
    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
