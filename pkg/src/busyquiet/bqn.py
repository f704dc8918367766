"""Forward-only two-pathway network at toy scale with band-pass lateral connections.

Each pathway is a stack of per-frame 2-d residual blocks (stride-2 downsampling
at stage boundaries, projection shortcuts on channel changes).  After block i
a lateral connection may fuse information across pathways; the default design
alternates direction with block parity and embeds a stride-1 band-pass module
on the quiet-to-busy direction.  Lateral batch-norm scales start at zero, so a
freshly built graph computes exactly what the two isolated pathways would.

Everything is deterministic given the config seed; batch norm runs in
inference mode on stored statistics (no batch statistics are ever computed).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clip import ResizePolicy, VideoClip, bilinear_resize
from .disentangle import DisentangledPair
from .errors import ConfigError, DimensionError, FormatError
from .mbpm import MbpmParams, init_mbpm, mbpm_forward

FUSION_METHODS = ("avg-after-fc", "avg-before-fc", "max-after-fc", "concat-before-fc")
LC_DESIGNS = ("BPLC", "LC-I", "LC-II", "LC-III", "LC-V")
STAGES = ("res2", "res3", "res4", "res5")

# lateral band-pass settings per stage: 7x7 at sigma 0.9 early, 3x3 for the
# small res5 feature maps
STAGE_LATERAL_DEFAULTS = {
    "res2": (0.9, 7),
    "res3": (0.9, 7),
    "res4": (0.9, 7),
    "res5": (0.9, 3),
}


@dataclass(frozen=True)
class BlockSpec:
    stage: str
    in_channels: int
    out_channels: int
    stride: int

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ConfigError(f"unknown stage {self.stage!r}")
        if self.in_channels < 1 or self.out_channels < 1:
            raise ConfigError("channel counts must be positive")
        if self.stride not in (1, 2):
            raise ConfigError(f"stride must be 1 or 2, got {self.stride}")


@dataclass(frozen=True)
class LateralSpec:
    index: int  # 1-based block index
    design: str = "BPLC"
    sigma: float | None = None  # None = stage default
    k: int | None = None

    def __post_init__(self):
        if self.design not in LC_DESIGNS:
            raise ConfigError(f"unknown lateral design {self.design!r}")
        if self.index < 1:
            raise ConfigError(f"lateral index must be >= 1, got {self.index}")


@dataclass(frozen=True)
class BqnConfig:
    widths: tuple[int, ...] = (16, 32, 64, 128)
    laterals: tuple[LateralSpec, ...] = ()
    fusion: str = "avg-after-fc"
    shared_fc: bool = True
    classes: int = 2
    seed: int = 0
    in_channels: int = 3

    def __post_init__(self):
        if not self.widths:
            raise ConfigError("widths must not be empty")
        if self.fusion not in FUSION_METHODS:
            raise ConfigError(f"fusion must be one of {FUSION_METHODS}, got {self.fusion!r}")
        if self.classes < 2:
            raise ConfigError(f"need at least 2 classes, got {self.classes}")
        if self.in_channels < 1:
            raise ConfigError("in_channels must be positive")
        seen = set()
        for spec in self.laterals:
            if spec.index > len(self.widths):
                raise ConfigError(f"lateral index {spec.index} exceeds block count {len(self.widths)}")
            if spec.index in seen:
                raise ConfigError(f"more than one lateral at block {spec.index}")
            seen.add(spec.index)

    @property
    def blocks(self) -> int:
        return len(self.widths)


def block_specs_from_widths(widths: tuple[int, ...]) -> list[BlockSpec]:
    """Derive stages and strides: a width change starts the next stage with stride 2."""
    specs = []
    stage_idx = 0
    prev = widths[0]
    for b, width in enumerate(widths):
        if b == 0:
            stride = 1
            in_ch = width
        elif width != prev:
            stage_idx += 1
            if stage_idx >= len(STAGES):
                raise ConfigError(f"more than {len(STAGES)} stages in widths {widths}")
            stride = 2
            in_ch = prev
        else:
            stride = 1
            in_ch = width
        specs.append(BlockSpec(stage=STAGES[stage_idx], in_channels=in_ch, out_channels=width, stride=stride))
        prev = width
    return specs


@dataclass
class BnState:
    """Inference-mode batch norm: y = (x - mean) / sqrt(var + eps) * gamma + beta."""

    gamma: np.ndarray
    beta: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    eps: float = 1e-5

    def __post_init__(self):
        if np.any(self.var <= 0):
            raise ConfigError("batch norm variance must be positive")

    @classmethod
    def zero_scale(cls, c: int) -> "BnState":
        return cls(gamma=np.zeros(c), beta=np.zeros(c), mean=np.zeros(c), var=np.ones(c))

    @classmethod
    def unit(cls, c: int) -> "BnState":
        return cls(gamma=np.ones(c), beta=np.zeros(c), mean=np.zeros(c), var=np.ones(c))

    def apply(self, x: np.ndarray) -> np.ndarray:
        scale = (self.gamma / np.sqrt(self.var + self.eps))[None, :, None, None]
        shift = (self.beta - self.mean * self.gamma / np.sqrt(self.var + self.eps))[None, :, None, None]
        return x * scale + shift

    def force_identity(self):
        """Test/demo hook: make this BN an exact pass-through."""
        self.gamma = np.ones_like(self.gamma)
        self.beta = np.zeros_like(self.beta)
        self.mean = np.zeros_like(self.mean)
        self.var = np.ones_like(self.var)
        self.eps = 0.0


@dataclass
class ConvLayer:
    weights: np.ndarray  # (cout, cin, k, k)
    stride: int = 1

    def apply(self, x: np.ndarray) -> np.ndarray:
        k = self.weights.shape[2]
        p = (k - 1) // 2
        if p:
            x = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
        windows = np.lib.stride_tricks.sliding_window_view(x, (k, k), axis=(2, 3))
        windows = windows[:, :, :: self.stride, :: self.stride]
        return np.einsum("tchwij,ocij->tohw", windows, self.weights)


@dataclass
class ResidualBlock:
    spec: BlockSpec
    conv1: ConvLayer
    bn1: BnState
    conv2: ConvLayer
    bn2: BnState
    proj: ConvLayer | None = None
    proj_bn: BnState | None = None

    def apply(self, x: np.ndarray) -> np.ndarray:
        out = np.maximum(self.bn1.apply(self.conv1.apply(x)), 0.0)
        out = self.bn2.apply(self.conv2.apply(out))
        shortcut = x if self.proj is None else self.proj_bn.apply(self.proj.apply(x))
        return np.maximum(out + shortcut, 0.0)


@dataclass
class LateralParams:
    """Per-lateral state; every design variant can run from the same bundle."""

    design: str
    mbpm: MbpmParams           # stride-1 band-pass (quiet -> busy branch)
    phi: np.ndarray            # (c, c) pointwise channel mix (busy -> quiet branch)
    bn_busy: BnState           # normalizes what is added to the busy pathway
    bn_quiet: BnState          # normalizes what is added to the quiet pathway


@dataclass
class Classifier:
    weights: np.ndarray  # (classes, features)
    bias: np.ndarray     # (classes,)

    def apply(self, feats: np.ndarray) -> np.ndarray:
        return self.weights @ feats + self.bias


@dataclass
class BqnGraph:
    config: BqnConfig
    specs: list[BlockSpec]
    stem_busy: tuple[ConvLayer, BnState]
    stem_quiet: tuple[ConvLayer, BnState]
    blocks_busy: list[ResidualBlock]
    blocks_quiet: list[ResidualBlock]
    laterals: dict[int, LateralParams] = field(default_factory=dict)
    fc_busy: Classifier | None = None
    fc_quiet: Classifier | None = None
    fc_fused: Classifier | None = None

    def fusion_targets(self) -> dict[int, str]:
        """Which pathway receives fused information at each lateral block index."""
        targets = {}
        for i, lp in self.laterals.items():
            if lp.design in ("BPLC", "LC-V"):
                targets[i] = "busy" if i % 2 == 0 else "quiet"
            elif lp.design == "LC-I":
                targets[i] = "busy"
            elif lp.design == "LC-II":
                targets[i] = "quiet"
            else:
                targets[i] = "both"
        return targets


def _he_conv(rng: np.random.Generator, cout: int, cin: int, k: int) -> np.ndarray:
    std = np.sqrt(2.0 / (cin * k * k))
    return rng.normal(0.0, std, size=(cout, cin, k, k))


def _build_pathway(rng: np.random.Generator, specs: list[BlockSpec], in_channels: int):
    stem = (ConvLayer(_he_conv(rng, specs[0].in_channels, in_channels, 3)), BnState.unit(specs[0].in_channels))
    blocks = []
    for spec in specs:
        conv1 = ConvLayer(_he_conv(rng, spec.out_channels, spec.in_channels, 3), stride=spec.stride)
        conv2 = ConvLayer(_he_conv(rng, spec.out_channels, spec.out_channels, 3))
        proj = proj_bn = None
        if spec.stride != 1 or spec.in_channels != spec.out_channels:
            proj = ConvLayer(_he_conv(rng, spec.out_channels, spec.in_channels, 1), stride=spec.stride)
            proj_bn = BnState.unit(spec.out_channels)
        blocks.append(
            ResidualBlock(
                spec=spec,
                conv1=conv1,
                bn1=BnState.unit(spec.out_channels),
                conv2=conv2,
                bn2=BnState.unit(spec.out_channels),
                proj=proj,
                proj_bn=proj_bn,
            )
        )
    return stem, blocks


def build_bqn(config: BqnConfig) -> BqnGraph:
    """Deterministically initialize a graph from its config seed.

    Independent random streams are used for the two backbones, the laterals
    and the classifiers, so adding or removing laterals never changes the
    backbone or classifier weights for a given seed.
    """
    specs = block_specs_from_widths(config.widths)
    ss_busy, ss_quiet, ss_lat, ss_fc = np.random.SeedSequence(config.seed).spawn(4)
    stem_busy, blocks_busy = _build_pathway(np.random.default_rng(ss_busy), specs, config.in_channels)
    stem_quiet, blocks_quiet = _build_pathway(np.random.default_rng(ss_quiet), specs, config.in_channels)

    rng_lat = np.random.default_rng(ss_lat)
    laterals: dict[int, LateralParams] = {}
    for spec in sorted(config.laterals, key=lambda s: s.index):
        block = specs[spec.index - 1]
        c = block.out_channels
        sigma, k = STAGE_LATERAL_DEFAULTS[block.stage]
        if spec.sigma is not None:
            sigma = spec.sigma
        if spec.k is not None:
            k = spec.k
        phi = rng_lat.normal(0.0, np.sqrt(1.0 / c), size=(c, c))
        laterals[spec.index] = LateralParams(
            design=spec.design,
            mbpm=init_mbpm(sigma, k, c, stride=1),
            phi=phi,
            bn_busy=BnState.zero_scale(c),
            bn_quiet=BnState.zero_scale(c),
        )

    rng_fc = np.random.default_rng(ss_fc)
    feat = specs[-1].out_channels
    graph = BqnGraph(
        config=config,
        specs=specs,
        stem_busy=stem_busy,
        stem_quiet=stem_quiet,
        blocks_busy=blocks_busy,
        blocks_quiet=blocks_quiet,
        laterals=laterals,
    )

    def make_fc(features: int) -> Classifier:
        std = np.sqrt(1.0 / features)
        return Classifier(
            weights=rng_fc.normal(0.0, std, size=(config.classes, features)),
            bias=np.zeros(config.classes),
        )

    if config.fusion in ("avg-after-fc", "max-after-fc"):
        graph.fc_busy = make_fc(feat)
        graph.fc_quiet = graph.fc_busy if config.shared_fc else make_fc(feat)
    elif config.fusion == "avg-before-fc":
        graph.fc_fused = make_fc(feat)
    else:  # concat-before-fc doubles the classifier input width
        graph.fc_fused = make_fc(2 * feat)
    return graph


def _match_size(clip: VideoClip, target: VideoClip) -> VideoClip:
    if (clip.h, clip.w) == (target.h, target.w):
        return clip
    return bilinear_resize(clip, ResizePolicy(out_h=target.h, out_w=target.w))


def _into_busy(x_f: VideoClip, x_c: VideoClip, lp: LateralParams, use_mbpm: bool) -> VideoClip:
    branch = mbpm_forward(x_c, lp.mbpm) if use_mbpm else x_c
    branch = _match_size(branch, x_f)
    return VideoClip(lp.bn_busy.apply(branch.data) + x_f.data, copy=False)


def _into_quiet(x_f: VideoClip, x_c: VideoClip, lp: LateralParams) -> VideoClip:
    if lp.phi.shape[1] != x_f.c:
        raise ConfigError(f"phi expects {lp.phi.shape[1]} channels, busy features have {x_f.c}")
    branch = VideoClip(np.einsum("tchw,oc->tohw", x_f.data, lp.phi), copy=False)
    branch = _match_size(branch, x_c)
    return VideoClip(lp.bn_quiet.apply(branch.data) + x_c.data, copy=False)


def bplc(x_f: VideoClip, x_c: VideoClip, i: int, lp: LateralParams) -> tuple[VideoClip, VideoClip]:
    """Alternating band-pass lateral connection (1-based block index i).

    Even i: the busy pathway receives the band-passed quiet features.
    Odd i: the quiet pathway receives the channel-mixed busy features.
    Spatial sizes are matched by bilinear interpolation after the transform.
    """
    if x_f.c != x_c.c:
        raise DimensionError(f"pathway channel mismatch {x_f.c} vs {x_c.c}")
    if i % 2 == 0:
        return _into_busy(x_f, x_c, lp, use_mbpm=True), x_c
    return x_f, _into_quiet(x_f, x_c, lp)


def lc_variant(
    x_f: VideoClip, x_c: VideoClip, i: int, design: str, lp: LateralParams
) -> tuple[VideoClip, VideoClip]:
    """Apply one lateral-connection design at block i.

    BPLC alternates direction by parity; LC-I fuses quiet->busy at every
    block, LC-II busy->quiet at every block, LC-III both directions at every
    block, and LC-V follows the BPLC alternation with the band-pass module
    replaced by identity.
    """
    if x_f.c != x_c.c:
        raise DimensionError(f"pathway channel mismatch {x_f.c} vs {x_c.c}")
    if design == "BPLC":
        return bplc(x_f, x_c, i, lp)
    if design == "LC-I":
        return _into_busy(x_f, x_c, lp, use_mbpm=True), x_c
    if design == "LC-II":
        return x_f, _into_quiet(x_f, x_c, lp)
    if design == "LC-III":
        return _into_busy(x_f, x_c, lp, use_mbpm=True), _into_quiet(x_f, x_c, lp)
    if design == "LC-V":
        if i % 2 == 0:
            return _into_busy(x_f, x_c, lp, use_mbpm=False), x_c
        return x_f, _into_quiet(x_f, x_c, lp)
    raise ConfigError(f"unknown lateral design {design!r}")


def _run_stem(x: VideoClip, stem: tuple[ConvLayer, BnState]) -> VideoClip:
    conv, bn = stem
    return VideoClip(np.maximum(bn.apply(conv.apply(x.data)), 0.0), copy=False)


def _pooled(x: VideoClip) -> np.ndarray:
    return x.data.mean(axis=(0, 2, 3))


def fuse_scores(a: np.ndarray, b: np.ndarray, method: str, classifier: Classifier | None = None) -> np.ndarray:
    """Combine the two pathway outputs into final class scores.

    after-fc methods take two score vectors; before-fc methods take the two
    pooled feature vectors and need the classifier to apply afterwards.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if method in ("avg-after-fc", "max-after-fc", "avg-before-fc") and a.shape != b.shape:
        raise ConfigError(f"shape mismatch {a.shape} vs {b.shape} for {method}")
    if method == "avg-after-fc":
        return (a + b) / 2.0
    if method == "max-after-fc":
        return np.maximum(a, b)
    if method in ("avg-before-fc", "concat-before-fc"):
        if classifier is None:
            raise ConfigError(f"{method} requires the classifier")
        feats = (a + b) / 2.0 if method == "avg-before-fc" else np.concatenate([a, b])
        return classifier.apply(feats)
    raise ConfigError(f"unknown fusion method {method!r}")


def forward(graph: BqnGraph, pair: DisentangledPair) -> np.ndarray:
    """Run both pathways with laterals in block order; returns (classes,) scores."""
    if pair.busy.c != graph.config.in_channels or pair.quiet.c != graph.config.in_channels:
        raise DimensionError(
            f"pair has {pair.busy.c}/{pair.quiet.c} channels, graph expects {graph.config.in_channels}"
        )
    x_f = _run_stem(pair.busy, graph.stem_busy)
    x_c = _run_stem(pair.quiet, graph.stem_quiet)
    for i in range(1, graph.config.blocks + 1):
        x_f = VideoClip(graph.blocks_busy[i - 1].apply(x_f.data), copy=False)
        x_c = VideoClip(graph.blocks_quiet[i - 1].apply(x_c.data), copy=False)
        lp = graph.laterals.get(i)
        if lp is not None:
            x_f, x_c = lc_variant(x_f, x_c, i, lp.design, lp)
    feat_f = _pooled(x_f)
    feat_c = _pooled(x_c)
    if graph.config.fusion in ("avg-after-fc", "max-after-fc"):
        return fuse_scores(
            graph.fc_busy.apply(feat_f), graph.fc_quiet.apply(feat_c), graph.config.fusion
        )
    return fuse_scores(feat_f, feat_c, graph.config.fusion, classifier=graph.fc_fused)


def config_from_dict(doc: dict) -> BqnConfig:
    """Parse the graph-config JSON document into a BqnConfig."""
    try:
        widths = tuple(int(v) for v in doc["widths"])
        laterals = tuple(
            LateralSpec(
                index=int(entry["i"]),
                design=str(entry.get("design", "BPLC")),
                sigma=float(entry["sigma"]) if "sigma" in entry else None,
                k=int(entry["k"]) if "k" in entry else None,
            )
            for entry in doc.get("laterals", [])
        )
        config = BqnConfig(
            widths=widths,
            laterals=laterals,
            fusion=str(doc.get("fusion", "avg-after-fc")),
            shared_fc=bool(doc.get("shared_fc", True)),
            classes=int(doc.get("classes", 2)),
            seed=int(doc.get("seed", 0)),
            in_channels=int(doc.get("in_channels", 3)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed graph config: {exc}") from exc
    if "blocks" in doc and int(doc["blocks"]) != len(widths):
        raise FormatError(f"blocks={doc['blocks']} does not match {len(widths)} widths")
    return config


def load_bqn_config(path) -> BqnConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"graph config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError("graph config must be a JSON object")
    return config_from_dict(doc)
