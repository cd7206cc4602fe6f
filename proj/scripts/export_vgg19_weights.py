#!/usr/bin/env python3
"""Export pretrained VGG19 conv weights to the srtk container format.

Requires torch + torchvision (and network access, or a pre-downloaded
checkpoint via --pth). The output file is consumed by the feature extractor:

    python3 scripts/export_vgg19_weights.py --out assets/vgg19_weights.srtk
    export SRTK_VGG_WEIGHTS=assets/vgg19_weights.srtk
"""

import argparse
import json
import struct

MAGIC = b"SRTKCP01"

# torchvision vgg19 .features indices of the 16 conv layers, in order.
CONV_INDICES = [0, 2, 5, 7, 10, 12, 14, 16, 19, 21, 23, 25, 28, 30, 32, 34]
STAGE_CONVS = [2, 2, 4, 4, 4]


def layer_names():
    names = []
    for stage, count in enumerate(STAGE_CONVS, start=1):
        for i in range(1, count + 1):
            names.append(f"conv{stage}_{i}")
    return names


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", required=True, help="output .srtk weight file")
    ap.add_argument("--pth", default="", help="optional local vgg19 state_dict (.pth)")
    args = ap.parse_args()

    import torch

    if args.pth:
        state = torch.load(args.pth, map_location="cpu", weights_only=True)
    else:
        from torchvision.models import vgg19, VGG19_Weights

        state = vgg19(weights=VGG19_Weights.IMAGENET1K_V1).state_dict()

    names = layer_names()
    tensors = []
    for name, idx in zip(names, CONV_INDICES):
        w = state[f"features.{idx}.weight"].float().contiguous()
        b = state[f"features.{idx}.bias"].float().contiguous()
        tensors.append((f"{name}.weight", w))
        tensors.append((f"{name}.bias", b))

    header = {
        "format_version": 1,
        "stage": "vgg",
        "iteration": 0,
        "config": {"source": "torchvision vgg19 IMAGENET1K_V1"},
        "extra": {},
        "tensors": [{"name": n, "shape": list(t.shape)} for n, t in tensors],
    }
    blob = json.dumps(header).encode()
    with open(args.out, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(blob)))
        f.write(blob)
        for _, t in tensors:
            f.write(t.numpy().astype("<f4").tobytes())
    total = sum(t.numel() for _, t in tensors)
    print(f"wrote {args.out}: {len(tensors)} tensors, {total} parameters")


if __name__ == "__main__":
    main()
