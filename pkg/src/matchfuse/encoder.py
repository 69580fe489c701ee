"""Late-fusion encoder: pool image sets, concatenate modalities, project to
the unit-normalized matching space.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .model import Corpus, DomainError, Offer

HEAD_MAGIC = b"MFPH"
HEAD_VERSION = 1

MODALITIES = ("image", "text", "numerical")


def pool_images(image_embeddings) -> np.ndarray:
    """Componentwise arithmetic mean over an offer's image embedding set."""
    if len(image_embeddings) == 0:
        raise DomainError("an offer must have at least one image embedding")
    stack = np.asarray(image_embeddings, dtype=np.float64)
    return stack.mean(axis=0)


@dataclass
class ProjectionHead:
    """Affine map (optionally with one 256-dim ReLU hidden layer) from the
    fused feature space to the unit sphere in the output space.

    ``input_mean``/``input_std`` standardize the 3 numerical features; they are
    fit on the training corpus and persisted with the weights.
    """

    weights: list[np.ndarray]          # each (out, in), float64
    biases: list[np.ndarray]           # each (out,), float64
    modality_mask: tuple = MODALITIES  # active subset of MODALITIES, in order
    input_mean: np.ndarray = field(default_factory=lambda: np.zeros(3))
    input_std: np.ndarray = field(default_factory=lambda: np.ones(3))

    def __post_init__(self):
        if len(self.weights) not in (1, 2) or len(self.weights) != len(self.biases):
            raise DomainError("head must have 1 linear layer or 1 hidden + 1 output layer")
        for w, b in zip(self.weights, self.biases):
            if w.shape[0] != b.shape[0]:
                raise DomainError(f"weight/bias shape mismatch: {w.shape} vs {b.shape}")
        if len(self.weights) == 2 and self.weights[0].shape[0] != self.weights[1].shape[1]:
            raise DomainError("hidden layer output dim must match final layer input dim")
        self.modality_mask = tuple(m for m in MODALITIES if m in self.modality_mask)
        if not self.modality_mask:
            raise DomainError("modality_mask must keep at least one modality")

    @property
    def d_in(self) -> int:
        return self.weights[0].shape[1]

    @property
    def d_out(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    @classmethod
    def create(cls, d_img: int, d_txt: int, d_out: int = 192, hidden: bool = False,
               modality_mask=MODALITIES, seed: int = 0) -> "ProjectionHead":
        """Seeded fan-in uniform initialization in [-1/sqrt(d_in), 1/sqrt(d_in)]."""
        mask = tuple(m for m in MODALITIES if m in modality_mask)
        d_in = 0
        if "image" in mask:
            d_in += d_img
        if "text" in mask:
            d_in += d_txt
        if "numerical" in mask:
            d_in += 3
        rng = np.random.default_rng(seed)
        dims = [d_in, 256, d_out] if hidden else [d_in, d_out]
        weights, biases = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            a = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-a, a, size=(fan_out, fan_in)))
            biases.append(rng.uniform(-a, a, size=fan_out))
        return cls(weights=weights, biases=biases, modality_mask=mask)

    def fit_standardization(self, corpus: Corpus) -> None:
        """Fit per-component mean/std of the numerical features on a corpus."""
        feats = np.array([o.numerical_features() for o in corpus])
        self.input_mean = feats.mean(axis=0)
        std = feats.std(axis=0)
        self.input_std = np.where(std > 0, std, 1.0)

    def save(self, path) -> None:
        """Binary head file: MFPH header + float64 payload (see README)."""
        mask_bits = sum(1 << i for i, m in enumerate(MODALITIES) if m in self.modality_mask)
        with open(path, "wb") as fh:
            fh.write(struct.pack("<4sIIIII", HEAD_MAGIC, HEAD_VERSION,
                                 self.d_in, self.d_out, len(self.weights), mask_bits))
            for w, b in zip(self.weights, self.biases):
                fh.write(struct.pack("<II", w.shape[0], w.shape[1]))
                fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
                fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(self.input_mean, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(self.input_std, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path) -> "ProjectionHead":
        with open(path, "rb") as fh:
            magic, version, d_in, d_out, n_layers, mask_bits = struct.unpack(
                "<4sIIIII", fh.read(24))
            if magic != HEAD_MAGIC:
                raise DomainError(f"{path}: bad head magic {magic!r}")
            if version != HEAD_VERSION:
                raise DomainError(f"{path}: unsupported head version {version}")
            weights, biases = [], []
            for _ in range(n_layers):
                rows, cols = struct.unpack("<II", fh.read(8))
                w = np.frombuffer(fh.read(8 * rows * cols), dtype="<f8").reshape(rows, cols)
                b = np.frombuffer(fh.read(8 * rows), dtype="<f8")
                weights.append(w.copy())
                biases.append(b.copy())
            mean = np.frombuffer(fh.read(24), dtype="<f8").copy()
            std = np.frombuffer(fh.read(24), dtype="<f8").copy()
        mask = tuple(m for i, m in enumerate(MODALITIES) if mask_bits & (1 << i))
        head = cls(weights=weights, biases=biases, modality_mask=mask,
                   input_mean=mean, input_std=std)
        if head.d_in != d_in or head.d_out != d_out:
            raise DomainError(f"{path}: header dims disagree with payload")
        return head


def fuse(offer: Offer, head: ProjectionHead) -> np.ndarray:
    """Concatenate [pooled image | text | standardized numerical], honoring
    the head's modality mask. Order is fixed."""
    segments = []
    if "image" in head.modality_mask:
        segments.append(pool_images(offer.image_embeddings))
    if "text" in head.modality_mask:
        segments.append(np.asarray(offer.text_embedding, dtype=np.float64))
    if "numerical" in head.modality_mask:
        raw = offer.numerical_features()
        segments.append((raw - head.input_mean) / head.input_std)
    fused = np.concatenate(segments)
    if fused.shape[0] != head.d_in:
        raise DomainError(
            f"offer {offer.offer_id}: fused dimension {fused.shape[0]} "
            f"does not match head input dimension {head.d_in}"
        )
    return fused


def forward(head: ProjectionHead, fused: np.ndarray) -> np.ndarray:
    """Affine layers (+ ReLU between, if hidden) without normalization.

    Accepts a single vector or a (n, d_in) batch.
    """
    z = np.asarray(fused, dtype=np.float64)
    z = z @ head.weights[0].T + head.biases[0]
    if len(head.weights) == 2:
        z = np.maximum(z, 0.0)
        z = z @ head.weights[1].T + head.biases[1]
    return z


def project(head: ProjectionHead, fused: np.ndarray) -> np.ndarray:
    """Project a fused vector (or batch) and L2-normalize to the unit sphere."""
    z = forward(head, fused)
    norm = np.linalg.norm(z, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise DomainError("projection produced a zero vector; cannot normalize")
    return z / norm


def embed_corpus(corpus: Corpus, head: ProjectionHead) -> dict[str, np.ndarray]:
    """Unit embedding per offer id; pointwise project(fuse(offer))."""
    out: dict[str, np.ndarray] = {}
    for offer in corpus:
        try:
            out[offer.offer_id] = project(head, fuse(offer, head))
        except DomainError as exc:
            raise DomainError(f"offer {offer.offer_id}: {exc}") from exc
    return out
