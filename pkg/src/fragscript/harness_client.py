"""Execution backend that drives a remote WebGL harness over HTTP.

The wire contract: POST /job with the artifact bundle, uniform values,
target size/viewport, texture initializations, and a readback request;
poll GET /result/{id} for float32 pixel rows plus pass metadata.  One job
is submitted per render pass, so the pipeline keeps full control of the
ping-pong schedule; the harness's own iteration support remains available
for direct and file-drop use.
"""

from __future__ import annotations

import base64
import time

import httpx
import numpy as np

from .errors import FragscriptError


class HarnessError(FragscriptError):
    pass


class HarnessBackend:
    name = "harness"

    def __init__(self, base_url: str, timeout: float = 30.0, client=None):
        self.base_url = base_url.rstrip("/")
        self.client = client or httpx.Client(timeout=timeout)
        self.buffers: dict = {}
        self.rects: dict = {}

    # mirrors SimulationBackend's interface ------------------------------

    def create_texture(self, key: str, width: int, height: int, rect) -> None:
        self.buffers[key] = np.zeros((height, width, 4), dtype=np.float32)
        self.rects[key] = tuple(rect)

    def upload(self, key: str, data: np.ndarray, rect) -> None:
        self.buffers[key] = data.astype(np.float32).copy()
        self.rects[key] = tuple(rect)

    def download(self, key: str) -> np.ndarray:
        return self.buffers[key].copy()

    def run_pass(self, artifact: dict, uniform_values: dict, viewport, resolution,
                 sampler_keys: dict, target_key: str) -> None:
        width, height = resolution
        textures = {}
        frames = {}
        for sampler, key in sampler_keys.items():
            buf = self.buffers[key]
            textures[sampler] = {
                "width": int(buf.shape[1]),
                "height": int(buf.shape[0]),
                "rect": list(self.rects[key]),
                "data_b64": base64.b64encode(buf.astype("<f4").tobytes()).decode(),
            }
            frames[sampler] = list(self.rects[key])
        job = {
            "artifact": artifact,
            "uniformValues": uniform_values,
            "width": width,
            "height": height,
            "viewport": list(viewport),
            "textures": textures,
            "iterations": 1,
            "feedback": None,
            "readback": True,
        }
        result = self.submit(job)
        data = np.frombuffer(
            base64.b64decode(result["data_b64"]), dtype="<f4"
        ).reshape(height, width, 4).copy()
        self.buffers[target_key] = data
        self.rects[target_key] = tuple(viewport)

    # wire helpers ---------------------------------------------------------

    def submit(self, job: dict) -> dict:
        resp = self.client.post(f"{self.base_url}/job", json=job)
        if resp.status_code >= 400:
            raise HarnessError(f"harness rejected the job: {resp.text}")
        job_id = resp.json()["id"]
        deadline = time.monotonic() + 60.0
        while True:
            out = self.client.get(f"{self.base_url}/result/{job_id}")
            if out.status_code == 404:
                raise HarnessError(f"job {job_id} vanished")
            body = out.json()
            if body.get("status") == "pending":
                if time.monotonic() > deadline:
                    raise HarnessError(f"job {job_id} timed out")
                time.sleep(0.05)
                continue
            if body.get("status") == "error":
                raise HarnessError(body.get("error", "unknown harness error"))
            return body
