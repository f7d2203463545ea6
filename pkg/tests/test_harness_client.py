"""The HTTP client backend against a stubbed harness server."""

import base64
import json

import httpx
import numpy as np
import pytest

from fragscript.harness_client import HarnessBackend, HarnessError


class _StubHarness:
    """Implements the job protocol: one pending poll, then pixels."""

    def __init__(self, fail=False):
        self.jobs = {}
        self.polls = {}
        self.fail = fail

    def handler(self, request: httpx.Request) -> httpx.Response:
        if request.url.path == "/job" and request.method == "POST":
            job = json.loads(request.content)
            job_id = f"job-{len(self.jobs) + 1}"
            self.jobs[job_id] = job
            return httpx.Response(200, json={"id": job_id})
        if request.url.path.startswith("/result/"):
            job_id = request.url.path.rsplit("/", 1)[1]
            if job_id not in self.jobs:
                return httpx.Response(404, json={"error": "unknown"})
            if self.polls.get(job_id, 0) < 1:
                self.polls[job_id] = self.polls.get(job_id, 0) + 1
                return httpx.Response(200, json={"status": "pending"})
            if self.fail:
                return httpx.Response(200, json={
                    "status": "error", "error": "driver rejected the shader",
                    "driverLog": "0:1: bad",
                })
            job = self.jobs[job_id]
            n = job["width"] * job["height"] * 4
            data = np.full(n, 0.25, dtype="<f4")
            return httpx.Response(200, json={
                "status": "done", "width": job["width"], "height": job["height"],
                "data_b64": base64.b64encode(data.tobytes()).decode(),
                "passes": job["iterations"], "precision": "float", "driverLog": None,
            })
        return httpx.Response(404, json={"error": "nope"})


def _backend(stub):
    client = httpx.Client(transport=httpx.MockTransport(stub.handler))
    return HarnessBackend("http://harness.test", client=client)


ARTIFACT = {
    "glsl": "precision highp float;\nvoid main() { gl_FragColor = vec4(1.0); }\n",
    "uniforms": [], "textures": [], "typeKey": "0" * 64,
}


def test_run_pass_round_trip():
    stub = _StubHarness()
    backend = _backend(stub)
    backend.create_texture("t@a", 4, 4, (-1, -1, 1, 1))
    backend.run_pass(ARTIFACT, {}, (-1, -1, 1, 1), (4, 4), {}, "t@a")
    out = backend.download("t@a")
    assert out.shape == (4, 4, 4)
    assert np.all(out == 0.25)
    (job,) = stub.jobs.values()
    assert job["iterations"] == 1 and job["readback"] is True


def test_sampler_state_travels_with_the_job():
    stub = _StubHarness()
    backend = _backend(stub)
    backend.create_texture("src@a", 2, 2, (0, 0, 1, 1))
    backend.upload("src@a", np.ones((2, 2, 4), dtype=np.float32), (0, 0, 1, 1))
    artifact = dict(ARTIFACT, textures=[{"sampler": "_t0", "texture": "src"}])
    backend.create_texture("dst@a", 2, 2, (0, 0, 1, 1))
    backend.run_pass(artifact, {}, (0, 0, 1, 1), (2, 2), {"_t0": "src@a"}, "dst@a")
    (job,) = stub.jobs.values()
    init = job["textures"]["_t0"]
    decoded = np.frombuffer(base64.b64decode(init["data_b64"]), dtype="<f4")
    assert np.all(decoded == 1.0)
    assert init["rect"] == [0, 0, 1, 1]


def test_harness_error_surfaces():
    stub = _StubHarness(fail=True)
    backend = _backend(stub)
    backend.create_texture("t@a", 2, 2, (0, 0, 1, 1))
    with pytest.raises(HarnessError) as exc:
        backend.run_pass(ARTIFACT, {}, (0, 0, 1, 1), (2, 2), {}, "t@a")
    assert "rejected" in str(exc.value)
