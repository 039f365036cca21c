"""Layer graphs for UNet and its depthwise-separable variant, with cost counting.

Graphs are flat, ordered layer lists. A ``concat`` layer names the earlier
layer whose output it appends, which is all the skip topology a cost count
needs. Spatial size is tracked as a pooling level: ``maxpool`` goes one
level down, ``upconv`` one level up.
"""
import csv
from dataclasses import dataclass, field
from typing import Optional

from .errors import InconsistentGraph, IndivisibleResolution

ENCODER = (64, 128, 256, 512)
BOTTLENECK = 1024
LEVELS = len(ENCODER)

# Published budgets the graphs are checked against.
UNET_PARAMS = 31.04e6
DSUNET_PARAMS = 6.01e6
UNET_MACS = 62.51e9
DSUNET_MACS = 9.56e9
PARAM_RATIO = 5.16
MAC_RATIO = 6.54

# Input resolution that reproduces both MAC budgets (see ``resolution_sweep``).
DOCUMENTED_HW = (288, 288)

CONV_KINDS = ("conv", "depthwise", "pointwise", "upconv")


@dataclass(frozen=True)
class LayerSpec:
    name: str
    kind: str
    cin: int = 0
    cout: int = 0
    k: int = 1
    stride: int = 1
    pad: int = 0
    bias: bool = True
    rate: float = 0.0
    skip: Optional[str] = None

    @property
    def is_conv(self):
        return self.kind in CONV_KINDS

    def weights(self) -> int:
        """Learnable parameters excluding bias."""
        if self.kind == "conv":
            return self.k * self.k * self.cin * self.cout
        if self.kind == "depthwise":
            return self.k * self.k * self.cin
        if self.kind == "pointwise":
            return self.cin * self.cout
        if self.kind == "upconv":
            return 4 * self.cin * self.cout
        if self.kind == "batchnorm":
            return self.cin
        return 0

    def params(self) -> int:
        if self.kind == "batchnorm":
            return 2 * self.cin
        extra = self.cout if (self.bias and self.is_conv) else 0
        return self.weights() + extra


@dataclass(frozen=True)
class NetGraph:
    name: str
    layers: tuple
    in_ch: int
    out_ch: int

    def conv_layers(self):
        return [l for l in self.layers if l.is_conv]

    def census(self) -> dict:
        out = {}
        for l in self.layers:
            key = f"conv{l.k}x{l.k}" if l.kind == "conv" else l.kind
            out[key] = out.get(key, 0) + 1
        return out

    def walk(self):
        """Yield ``(layer, level_after)``; raises on any channel or topology mismatch."""
        ch, level = self.in_ch, 0
        seen = {}
        for l in self.layers:
            if l.kind in ("conv", "pointwise", "upconv"):
                if l.cin != ch:
                    raise InconsistentGraph(f"{l.name}: expects {l.cin} channels, receives {ch}")
                ch = l.cout
            elif l.kind in ("depthwise", "batchnorm"):
                if l.cin != ch or (l.kind == "depthwise" and l.cout != ch):
                    raise InconsistentGraph(f"{l.name}: channel-wise layer on {ch} channels declares {l.cin}")
            elif l.kind == "concat":
                if l.skip not in seen:
                    raise InconsistentGraph(f"{l.name}: unknown skip source {l.skip!r}")
                src_ch, src_level = seen[l.skip]
                if src_level != level:
                    raise InconsistentGraph(f"{l.name}: skip from level {src_level} joins level {level}")
                if l.cout != ch + src_ch:
                    raise InconsistentGraph(f"{l.name}: concat gives {ch + src_ch} channels, declares {l.cout}")
                ch = l.cout
            elif l.kind not in ("maxpool", "dropout"):
                raise InconsistentGraph(f"{l.name}: unknown layer kind {l.kind!r}")
            if l.kind == "maxpool":
                level += 1
            elif l.kind == "upconv":
                level -= 1
            if level < 0:
                raise InconsistentGraph(f"{l.name}: upsampled above input resolution")
            seen[l.name] = (ch, level)
            yield l, level
        if ch != self.out_ch:
            raise InconsistentGraph(f"graph ends with {ch} channels, declares {self.out_ch}")
        if level != 0:
            raise InconsistentGraph(f"graph ends at pooling level {level}")

    def validate(self):
        for _ in self.walk():
            pass
        return self


# ------------------------------------------------------------------ builders


def _conv3(name, cin, cout, separable):
    if not separable:
        return [LayerSpec(name, "conv", cin, cout, k=3, pad=1), LayerSpec(name + ".bn", "batchnorm", cout, cout)]
    return [
        LayerSpec(name + ".dw", "depthwise", cin, cin, k=3, pad=1),
        LayerSpec(name + ".dw.bn", "batchnorm", cin, cin),
        LayerSpec(name + ".pw", "pointwise", cin, cout),
        LayerSpec(name + ".pw.bn", "batchnorm", cout, cout),
    ]


def _build(name, in_ch, out_ch, separable, dropout):
    layers = []
    ch = in_ch
    first = True
    skips = []
    widths = ENCODER + (BOTTLENECK,)
    for i, w in enumerate(widths):
        tag = f"enc{i + 1}" if w != BOTTLENECK else "bottleneck"
        # the input conv stays standard: three input channels leave nothing to factorize
        layers += _conv3(f"{tag}.conv1", ch, w, separable and not first)
        first = False
        layers += _conv3(f"{tag}.conv2", w, w, separable)
        ch = w
        if dropout and i >= LEVELS - 1:
            layers.append(LayerSpec(f"{tag}.drop", "dropout", ch, ch, rate=0.5))
        if w != BOTTLENECK:
            skips.append((layers[-1].name, w))
            layers.append(LayerSpec(f"{tag}.pool", "maxpool", ch, ch, k=2, stride=2))
    for i in range(LEVELS - 1, -1, -1):
        w = ENCODER[i]
        tag = f"dec{i + 1}"
        layers.append(LayerSpec(f"{tag}.up", "upconv", ch, w, k=2, stride=2))
        src, src_ch = skips.pop()
        layers.append(LayerSpec(f"{tag}.cat", "concat", w, w + src_ch, skip=src))
        layers += _conv3(f"{tag}.conv1", w + src_ch, w, separable)
        layers += _conv3(f"{tag}.conv2", w, w, separable)
        ch = w
        if dropout and i == LEVELS - 1:
            layers.append(LayerSpec(f"{tag}.drop", "dropout", ch, ch, rate=0.5))
    layers.append(LayerSpec("head", "conv", ch, out_ch, k=1))
    return NetGraph(name, tuple(layers), in_ch, out_ch).validate()


def unet_graph(in_ch=1, out_ch=2) -> NetGraph:
    return _build("UNet", in_ch, out_ch, separable=False, dropout=False)


def dsunet_graph(in_ch=3, out_ch=1) -> NetGraph:
    return _build("DSUNet", in_ch, out_ch, separable=True, dropout=True)


# ------------------------------------------------------------------ costs


@dataclass
class CostReport:
    graph: str
    params: int
    macs: Optional[int] = None
    input_hw: Optional[tuple] = None
    rows: list = field(default_factory=list)

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["layer", "kind", "in_ch", "out_ch", "kernel", "out_h", "out_w", "params", "macs"])
            for r in self.rows:
                w.writerow([r["layer"], r["kind"], r["in_ch"], r["out_ch"], r["kernel"],
                            r["out_h"], r["out_w"], r["params"], r["macs"]])


def count_params(g: NetGraph) -> CostReport:
    rows = []
    for l, _ in g.walk():
        rows.append({"layer": l.name, "kind": l.kind, "in_ch": l.cin, "out_ch": l.cout, "kernel": l.k,
                     "out_h": "", "out_w": "", "params": l.params(), "macs": ""})
    return CostReport(g.name, sum(r["params"] for r in rows), rows=rows)


def count_macs(g: NetGraph, input_hw=DOCUMENTED_HW, upconv="strided") -> CostReport:
    """Multiply-accumulates for one forward pass at ``input_hw = (width, height)``.

    Every conv-type layer costs its bias-free weights once per output
    position, except a stride-2 transposed conv under the default
    ``upconv="strided"``: each output pixel there receives a single kernel
    tap per input channel, so its cost is ``in*out`` per output position.
    ``upconv="per_output"`` charges all four taps per output position.
    Batchnorm is treated as folded into the preceding conv.
    """
    if upconv not in ("strided", "per_output"):
        raise ValueError(f"unknown upconv convention {upconv!r}")
    wid, hgt = (int(v) for v in input_hw)
    div = 2 ** LEVELS
    if wid <= 0 or hgt <= 0 or wid % div or hgt % div:
        raise IndivisibleResolution(f"input {wid}x{hgt} must be positive multiples of {div}")
    rows = []
    total_params = 0
    for l, level in g.walk():
        oh, ow = hgt >> level, wid >> level
        macs = 0
        if l.is_conv:
            per_pos = l.weights()
            if l.kind == "upconv" and upconv == "strided":
                per_pos = l.cin * l.cout
            macs = per_pos * oh * ow
        total_params += l.params()
        rows.append({"layer": l.name, "kind": l.kind, "in_ch": l.cin, "out_ch": l.cout, "kernel": l.k,
                     "out_h": oh, "out_w": ow, "params": l.params(), "macs": macs})
    return CostReport(g.name, total_params, sum(r["macs"] for r in rows), (wid, hgt), rows)


def mac_pair(input_hw, upconv="strided"):
    """UNet and DSUNet MACs with DSUNet's I/O (3 in, 1 out) for both."""
    u = count_macs(unet_graph(3, 1), input_hw, upconv).macs
    d = count_macs(dsunet_graph(3, 1), input_hw, upconv).macs
    return u, d


def sweep_candidates():
    """The usual camera resolutions with their halvings, plus square sides in steps of 16."""
    named = []
    for w, h in ((256, 256), (320, 240), (640, 480)):
        while w >= 64 and h >= 64:
            named.append((w, h))
            w, h = w // 2, h // 2
    squares = [(s, s) for s in range(128, 641, 16)]
    return list(dict.fromkeys(named + squares))


def resolution_sweep(candidates=None, upconv="strided"):
    """Relative MAC errors against the published budgets for each candidate ``(w, h)``.

    Candidates the network cannot take (sides not multiples of 16) are
    listed with ``worst=None`` after the ranked ones. MACs are linear in
    pixel count, so a single 16x16 evaluation is scaled per candidate.
    """
    u1, d1 = mac_pair((16, 16), upconv)
    ranked, skipped = [], []
    for w, h in candidates or sweep_candidates():
        if w % 16 or h % 16:
            skipped.append({"w": w, "h": h, "unet_macs": None, "dsunet_macs": None,
                            "unet_err": None, "dsunet_err": None, "worst": None})
            continue
        scale = (w * h) / 256.0
        u, d = u1 * scale, d1 * scale
        eu, ed = u / UNET_MACS - 1.0, d / DSUNET_MACS - 1.0
        ranked.append({"w": w, "h": h, "unet_macs": u, "dsunet_macs": d, "unet_err": eu, "dsunet_err": ed,
                       "worst": max(abs(eu), abs(ed))})
    ranked.sort(key=lambda r: (r["worst"], -r["w"]))
    return ranked + skipped


def summary(input_hw=DOCUMENTED_HW, upconv="strided") -> dict:
    pu = count_params(unet_graph()).params
    pd = count_params(dsunet_graph()).params
    mu, md = mac_pair(input_hw, upconv)
    return {
        "input_hw": list(input_hw),
        "upconv_convention": upconv,
        "unet_params": pu,
        "dsunet_params": pd,
        "param_ratio": pu / pd,
        "unet_macs": mu,
        "dsunet_macs": md,
        "mac_ratio": mu / md,
        "unet_conv_layers": len(unet_graph().conv_layers()),
        "dsunet_conv_layers": len(dsunet_graph().conv_layers()),
    }
