"""Line-delimited JSON wire protocol for hosting an inpainting backend in
another process.

Each message is one JSON object per line. Arrays travel as base64 raw bytes
with shape and dtype. The client side is itself an InpaintBackend, so the
controller cannot tell a remote backend from a local one.

    -> {"type": "hello", "version": 1}
    <- {"type": "hello", "version": 1, "name": ...}
    -> {"type": "init_latent"}
    <- {"type": "latent", "latent": ARR}
    -> {"type": "denoise", "t": 37, "prompt": "...", "latent": ARR,
        "mask": ARR, "image": ARR | null}
    <- {"type": "step", "latent": ARR, "attention": ARR}
    -> {"type": "decode", "latent": ARR}
    <- {"type": "image", "image": ARR}
    -> {"type": "bye"}
    <- {"type": "bye"}

ARR = {"shape": [...], "dtype": "float64", "data": "<base64>"}; any error is
{"type": "error", "message": "..."}.
"""

from __future__ import annotations

import argparse
import base64
import json
import subprocess
import sys

import numpy as np

from .controller import AttentionMap, InpaintBackend, MaskingError

PROTOCOL_VERSION = 1


def encode_array(arr) -> dict:
    arr = np.ascontiguousarray(arr)
    return {
        "shape": list(arr.shape),
        "dtype": str(arr.dtype),
        "data": base64.b64encode(arr.tobytes()).decode("ascii"),
    }


def decode_array(obj: dict) -> np.ndarray:
    raw = base64.b64decode(obj["data"])
    arr = np.frombuffer(raw, dtype=np.dtype(obj["dtype"]))
    return arr.reshape(obj["shape"]).copy()


def _write_msg(wfile, msg: dict) -> None:
    wfile.write((json.dumps(msg, separators=(",", ":")) + "\n").encode("utf-8"))
    wfile.flush()


def _read_msg(rfile) -> dict:
    line = rfile.readline()
    if not line:
        raise MaskingError("backend connection closed")
    return json.loads(line.decode("utf-8"))


class ProtocolClient(InpaintBackend):
    """Backend proxy speaking the wire protocol over a byte stream pair."""

    def __init__(self, rfile, wfile, proc: subprocess.Popen | None = None):
        self._r = rfile
        self._w = wfile
        self._proc = proc
        reply = self._call({"type": "hello", "version": PROTOCOL_VERSION})
        if reply.get("version") != PROTOCOL_VERSION:
            raise MaskingError(f"backend protocol version {reply.get('version')} "
                               f"!= {PROTOCOL_VERSION}")
        self.backend_name = reply.get("name", "?")

    @classmethod
    def spawn(cls, cmd: list) -> "ProtocolClient":
        proc = subprocess.Popen(cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE)
        return cls(proc.stdout, proc.stdin, proc)

    def _call(self, msg: dict) -> dict:
        _write_msg(self._w, msg)
        reply = _read_msg(self._r)
        if reply.get("type") == "error":
            raise MaskingError(f"backend error: {reply.get('message')}")
        return reply

    def init_latent(self):
        return decode_array(self._call({"type": "init_latent"})["latent"])

    def denoise_step(self, latent, mask, image, prompt: str, t: int):
        msg = {
            "type": "denoise",
            "t": int(t),
            "prompt": prompt,
            "latent": encode_array(latent),
            "mask": encode_array(np.asarray(mask)),
            "image": None if image is None else encode_array(np.asarray(image)),
        }
        reply = self._call(msg)
        return decode_array(reply["latent"]), AttentionMap(decode_array(reply["attention"]))

    def decode(self, latent):
        return decode_array(self._call({"type": "decode", "latent": encode_array(latent)})["image"])

    def close(self) -> None:
        try:
            self._call({"type": "bye"})
        except MaskingError:
            pass
        if self._proc is not None:
            self._proc.wait(timeout=10)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def serve_backend(backend: InpaintBackend, rfile, wfile, name: str = "poselift") -> None:
    """Host a backend over the protocol until the peer says bye."""
    while True:
        try:
            msg = _read_msg(rfile)
        except MaskingError:
            return
        try:
            kind = msg.get("type")
            if kind == "hello":
                _write_msg(wfile, {"type": "hello", "version": PROTOCOL_VERSION,
                                   "name": name})
            elif kind == "init_latent":
                _write_msg(wfile, {"type": "latent",
                                   "latent": encode_array(backend.init_latent())})
            elif kind == "denoise":
                image = msg.get("image")
                latent, att = backend.denoise_step(
                    decode_array(msg["latent"]),
                    decode_array(msg["mask"]).astype(bool),
                    None if image is None else decode_array(image),
                    msg.get("prompt", ""),
                    int(msg["t"]),
                )
                _write_msg(wfile, {"type": "step", "latent": encode_array(latent),
                                   "attention": encode_array(att.values)})
            elif kind == "decode":
                _write_msg(wfile, {"type": "image",
                                   "image": encode_array(backend.decode(decode_array(msg["latent"])))})
            elif kind == "bye":
                _write_msg(wfile, {"type": "bye"})
                return
            else:
                _write_msg(wfile, {"type": "error", "message": f"unknown type {kind!r}"})
        except Exception as e:  # report and keep serving
            _write_msg(wfile, {"type": "error", "message": str(e)})


def main(argv=None) -> int:
    """Serve the scripted mock backend on stdio (used by tests and as a
    reference peer for other protocol implementations)."""
    from .mock import MockInpaintBackend

    ap = argparse.ArgumentParser(prog="poselift-mock-backend")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tokens", type=int, default=8)
    ap.add_argument("--static", action="store_true", help="blob does not drift")
    args = ap.parse_args(argv)
    backend = MockInpaintBackend(seed=args.seed, n_tokens=args.tokens,
                                 moving=not args.static)
    serve_backend(backend, sys.stdin.buffer, sys.stdout.buffer, name="poselift-mock")
    return 0


if __name__ == "__main__":
    sys.exit(main())
