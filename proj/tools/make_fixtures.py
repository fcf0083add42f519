#!/usr/bin/env python3
"""Train the small fixture models shipped under fixtures/ and write them in
the rdprune model/calibration formats (see docs/FORMAT.md).

Needs torch and numpy. Run once; outputs are committed:

    python3 tools/make_fixtures.py --out fixtures
"""
import argparse
import json
import os
import struct
import zlib

import numpy as np
import torch
from torch import nn

CALIB_MAGIC = b"RDPCALIB"


class Skip(nn.Module):
    """Marker: output = previous output + output of layer `source`."""

    def __init__(self, source):
        super().__init__()
        self.source = source


def run(layers, x):
    outs = []
    h = x
    for layer in layers:
        if isinstance(layer, Skip):
            h = h + (x if layer.source < 0 else outs[layer.source])
        else:
            h = layer(h)
        outs.append(h)
    return h


class Net(nn.Module):
    def __init__(self, layers):
        super().__init__()
        self.layers = nn.ModuleList(layers)

    def forward(self, x):
        # Leading batch dimension; flatten keeps it.
        return run(self.layers, x)


def tensor_entry(arr, blob):
    arr = np.ascontiguousarray(arr, dtype="<f4")
    raw = arr.tobytes()
    entry = {
        "shape": list(arr.shape),
        "offset": len(blob),
        "count": int(arr.size),
        "crc32": zlib.crc32(raw) & 0xFFFFFFFF,
    }
    blob.extend(raw)
    return entry


def export(net, name, input_shape, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    blob = bytearray()
    layers = []
    for m in net.layers:
        if isinstance(m, nn.Linear):
            e = {"kind": "dense"}
            e["weight"] = tensor_entry(m.weight.detach().numpy(), blob)
            e["bias"] = tensor_entry(m.bias.detach().numpy(), blob)
        elif isinstance(m, nn.Conv2d):
            e = {"kind": "conv2d", "stride": m.stride[0], "padding": m.padding[0]}
            e["weight"] = tensor_entry(m.weight.detach().numpy(), blob)
            e["bias"] = tensor_entry(m.bias.detach().numpy(), blob)
        elif isinstance(m, nn.ReLU):
            e = {"kind": "relu"}
        elif isinstance(m, nn.MaxPool2d):
            e = {"kind": "maxpool2d", "kernel": m.kernel_size, "stride": m.stride}
        elif isinstance(m, nn.AvgPool2d):
            e = {"kind": "avgpool2d", "kernel": m.kernel_size, "stride": m.stride}
        elif isinstance(m, nn.Flatten):
            e = {"kind": "flatten"}
        elif isinstance(m, Skip):
            e = {"kind": "add-skip", "source": m.source}
        else:
            raise ValueError(f"unsupported module {m}")
        layers.append(e)
    manifest = {
        "format": "rdprune.model",
        "version": 1,
        "name": name,
        "input_shape": list(input_shape),
        "blob": "model.bin",
        "blob_bytes": len(blob),
        "layers": layers,
    }
    with open(os.path.join(out_dir, "model.bin"), "wb") as f:
        f.write(blob)
    with open(os.path.join(out_dir, "model.json"), "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")


def save_calib(samples, path):
    samples = np.ascontiguousarray(samples, dtype="<f4")
    count, *shape = samples.shape
    with open(path, "wb") as f:
        f.write(CALIB_MAGIC)
        f.write(struct.pack("<II", count, len(shape)))
        f.write(struct.pack(f"<{len(shape)}I", *shape))
        f.write(samples.tobytes())


def write_reference(net, samples, path):
    # Per-sample forward outputs, used by the engine parity test.
    with torch.no_grad():
        single = [net(torch.from_numpy(s[None]).float())[0].numpy().tolist() for s in samples]
    with open(path, "w") as f:
        json.dump({"inputs": samples.reshape(len(samples), -1).tolist(), "outputs": single}, f)


def train(net, x, y, steps, lr):
    opt = torch.optim.Adam(net.parameters(), lr=lr)
    loss_fn = nn.CrossEntropyLoss()
    xt, yt = torch.from_numpy(x).float(), torch.from_numpy(y).long()
    for step in range(steps):
        idx = torch.randint(0, len(xt), (128,))
        opt.zero_grad()
        loss = loss_fn(net(xt[idx]), yt[idx])
        loss.backward()
        opt.step()
    with torch.no_grad():
        acc = (net(xt).argmax(1) == yt).float().mean().item()
    return acc


def mixture_data(rng, n, dim, classes):
    centers = rng.normal(0, 1.5, (classes, dim))
    y = rng.integers(0, classes, n)
    x = centers[y] + rng.normal(0, 1.0, (n, dim))
    return x.astype(np.float32), y


def image_data(rng, n, size, classes):
    # Class templates are smooth random blobs; samples are shifted noisy copies.
    yy, xx = np.mgrid[0:size, 0:size]
    templates = []
    for _ in range(classes):
        img = np.zeros((size, size))
        for _ in range(3):
            cy, cx = rng.uniform(0, size, 2)
            s = rng.uniform(1.0, 2.5)
            img += rng.choice([-1, 1]) * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * s * s))
        templates.append(img)
    templates = np.stack(templates)
    y = rng.integers(0, classes, n)
    x = np.empty((n, 1, size, size), np.float32)
    for i in range(n):
        dy, dx = rng.integers(-1, 2, 2)
        x[i, 0] = np.roll(templates[y[i]], (dy, dx), axis=(0, 1)) + rng.normal(0, 0.3, (size, size))
    return x, y


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="fixtures")
    args = ap.parse_args()
    torch.manual_seed(0)
    rng = np.random.default_rng(0)

    # mlp_toy: six dense layers.
    x, y = mixture_data(rng, 4096, 16, 10)
    mlp = Net([nn.Linear(16, 48), nn.ReLU(), nn.Linear(48, 48), nn.ReLU(),
               nn.Linear(48, 48), nn.ReLU(), nn.Linear(48, 48), nn.ReLU(),
               nn.Linear(48, 48), nn.ReLU(), nn.Linear(48, 10)])
    print("mlp_toy train acc", train(mlp, x, y, 1500, 3e-3))
    d = os.path.join(args.out, "mlp_toy")
    export(mlp, "mlp_toy", (16,), d)
    calib = x[rng.choice(len(x), 128, replace=False)]
    save_calib(calib, os.path.join(d, "calib.bin"))
    write_reference(mlp, calib[:4], os.path.join(d, "reference.json"))

    # cnn_toy: three convolutions and two dense layers.
    x, y = image_data(rng, 4096, 12, 10)
    cnn = Net([nn.Conv2d(1, 8, 3, padding=1), nn.ReLU(), nn.Conv2d(8, 16, 3, padding=1), nn.ReLU(),
               nn.MaxPool2d(2, 2), nn.Conv2d(16, 16, 3, padding=1), nn.ReLU(), nn.MaxPool2d(2, 2),
               nn.Flatten(), nn.Linear(144, 32), nn.ReLU(), nn.Linear(32, 10)])
    print("cnn_toy train acc", train(cnn, x, y, 1200, 3e-3))
    d = os.path.join(args.out, "cnn_toy")
    export(cnn, "cnn_toy", (1, 12, 12), d)
    calib = x[rng.choice(len(x), 64, replace=False)]
    save_calib(calib, os.path.join(d, "calib.bin"))
    write_reference(cnn, calib[:4], os.path.join(d, "reference.json"))

    # resnet_tiny: two residual blocks.
    x, y = image_data(rng, 4096, 8, 10)
    res = Net([nn.Conv2d(1, 8, 3, padding=1), nn.ReLU(),                      # 0, 1
               nn.Conv2d(8, 8, 3, padding=1), nn.ReLU(),                      # 2, 3
               nn.Conv2d(8, 8, 3, padding=1), Skip(1), nn.ReLU(),             # 4, 5, 6
               nn.Conv2d(8, 8, 3, padding=1), nn.ReLU(),                      # 7, 8
               nn.Conv2d(8, 8, 3, padding=1), Skip(6), nn.ReLU(),             # 9, 10, 11
               nn.AvgPool2d(2, 2), nn.Flatten(), nn.Linear(128, 10)])         # 12, 13, 14
    print("resnet_tiny train acc", train(res, x, y, 1200, 3e-3))
    d = os.path.join(args.out, "resnet_tiny")
    export(res, "resnet_tiny", (1, 8, 8), d)
    calib = x[rng.choice(len(x), 64, replace=False)]
    save_calib(calib, os.path.join(d, "calib.bin"))
    write_reference(res, calib[:4], os.path.join(d, "reference.json"))


if __name__ == "__main__":
    main()
