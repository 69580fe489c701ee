"""Corpus serialization: offer JSONL plus a binary embedding sidecar.

JSONL schema (one object per line):

    {"offer_id": str, "domain": str, "brand": str, "title": str,
     "price": float, "n_sizes": int, "category"?: str, "product_id"?: str,
     "image_emb": [[f64...], ...] | {"ref": int, "count": int},
     "text_emb": [f64...] | {"ref": int}}

Sidecar format ("MFEB"): little-endian, header = magic "MFEB", version u32,
dim u32, count u32, followed by float32 values. With dim > 0 the payload is
count vectors of that dimension and a "ref" indexes a vector row. With
dim = 0 the payload is a flat run of count floats holding mixed-dimension
vectors; refs then carry an explicit "dim" and index into the float run.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .model import Corpus, DomainError, Offer

SIDECAR_MAGIC = b"MFEB"
SIDECAR_VERSION = 1
_HEADER = struct.Struct("<4sIII")


class IngestError(ValueError):
    """Malformed corpus file; carries the offending line number when known."""


def write_sidecar(path, vectors) -> None:
    """Write vectors as an MFEB sidecar file.

    A 2-d array stores as uniform rows (dim > 0); a list of 1-d arrays with
    differing lengths stores as a flat run (dim = 0).
    """
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        data = np.ascontiguousarray(vectors, dtype="<f4")
        dim, count = data.shape[1], data.shape[0]
    else:
        parts = [np.asarray(v, dtype="<f4").reshape(-1) for v in vectors]
        dims = {p.size for p in parts}
        if len(dims) == 1:
            data = np.stack(parts)
            dim, count = data.shape[1], data.shape[0]
        else:
            data = np.concatenate(parts) if parts else np.zeros(0, dtype="<f4")
            dim, count = 0, data.size
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SIDECAR_MAGIC, SIDECAR_VERSION, dim, count))
        fh.write(data.tobytes(order="C"))


def read_sidecar(path) -> np.ndarray:
    """Returns a (count, dim) array for uniform files, a flat 1-d float run
    for mixed-dimension files."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise IngestError(f"{path}: truncated sidecar header")
        magic, version, dim, count = _HEADER.unpack(header)
        if magic != SIDECAR_MAGIC:
            raise IngestError(f"{path}: bad sidecar magic {magic!r}")
        if version != SIDECAR_VERSION:
            raise IngestError(f"{path}: unsupported sidecar version {version}")
        payload = fh.read()
        expected = dim * count if dim > 0 else count
        if len(payload) != 4 * expected:
            raise IngestError(
                f"{path}: expected {4 * expected} payload bytes, got {len(payload)}")
        data = np.frombuffer(payload, dtype="<f4")
        out = data.astype(np.float64)
        return out.reshape(count, dim) if dim > 0 else out


def _resolve_vectors(value, sidecar: np.ndarray | None, line_no: int, field: str):
    """Resolve an embedding field: inline list or sidecar reference."""
    if isinstance(value, dict):
        if sidecar is None:
            raise IngestError(f"line {line_no}: {field} references a sidecar but none was given")
        ref = value.get("ref")
        if ref is None:
            raise IngestError(f"line {line_no}: {field} reference missing 'ref'")
        count = value.get("count", 1)
        if sidecar.ndim == 2:
            if ref < 0 or ref + count > len(sidecar):
                raise IngestError(f"line {line_no}: {field} ref {ref}+{count} outside sidecar")
            return sidecar[ref : ref + count]
        dim = value.get("dim")
        if dim is None:
            raise IngestError(
                f"line {line_no}: {field} reference into a mixed-dimension "
                f"sidecar needs an explicit 'dim'")
        end = ref + count * dim
        if ref < 0 or end > sidecar.size:
            raise IngestError(f"line {line_no}: {field} ref {ref}..{end} outside sidecar")
        return sidecar[ref:end].reshape(count, dim)
    return np.asarray(value, dtype=np.float64)


def ingest_offers(path, sidecar_path=None, role: str = "train",
                  index_domain: str | None = None, query_domain: str | None = None) -> Corpus:
    """Read an offer JSONL file (and optional sidecar) into a Corpus.

    Errors carry the 1-based line number of the offending record.
    """
    path = Path(path)
    sidecar = None
    if sidecar_path is not None:
        sidecar = read_sidecar(sidecar_path)
    else:
        implied = path.with_suffix(".mfeb")
        if implied.exists():
            sidecar = read_sidecar(implied)

    offers: list[Offer] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(f"line {line_no}: invalid JSON: {exc}") from exc
            try:
                raw_img = rec["image_emb"]
                if isinstance(raw_img, dict):
                    image_emb = _resolve_vectors(raw_img, sidecar, line_no, "image_emb")
                else:
                    # per-vector conversion keeps ragged input intact so the
                    # offer invariant can report the dimension mismatch
                    image_emb = [np.asarray(v, dtype=np.float64) for v in raw_img]
                text_emb = _resolve_vectors(rec["text_emb"], sidecar, line_no, "text_emb")
                text_emb = np.asarray(text_emb, dtype=np.float64).reshape(-1)
                offer = Offer(
                    offer_id=rec["offer_id"],
                    domain=rec["domain"],
                    brand_raw=rec["brand"],
                    title_raw=rec["title"],
                    price=float(rec["price"]),
                    n_sizes=int(rec["n_sizes"]),
                    image_embeddings=tuple(np.asarray(v, dtype=np.float64) for v in image_emb),
                    text_embedding=text_emb,
                    product_id=rec.get("product_id"),
                    category=rec.get("category", "unknown"),
                )
            except KeyError as exc:
                raise IngestError(f"line {line_no}: missing field {exc}") from exc
            except DomainError as exc:
                raise IngestError(f"line {line_no}: {exc}") from exc
            offers.append(offer)
    try:
        return Corpus(offers=offers, role=role, index_domain=index_domain,
                      query_domain=query_domain)
    except DomainError as exc:
        raise IngestError(str(exc)) from exc


def write_offers(path, corpus: Corpus, sidecar_path=None) -> None:
    """Write a corpus as JSONL; embeddings go to a sidecar when a path is given."""
    path = Path(path)
    if sidecar_path is not None:
        parts: list[np.ndarray] = []
        refs = []
        offset = 0
        for offer in corpus:
            img_ref = offset
            for v in offer.image_embeddings:
                parts.append(np.asarray(v))
                offset += len(v)
            txt_ref = offset
            parts.append(np.asarray(offer.text_embedding))
            offset += len(offer.text_embedding)
            refs.append((img_ref, len(offer.image_embeddings), offer.d_img,
                         txt_ref, offer.d_txt))
        flat = np.concatenate(parts) if parts else np.zeros(0)
        # single flat run so image and text dims can differ within one file
        with open(sidecar_path, "wb") as fh:
            fh.write(_HEADER.pack(SIDECAR_MAGIC, SIDECAR_VERSION, 0, flat.size))
            fh.write(np.asarray(flat, dtype="<f4").tobytes(order="C"))

    with open(path, "w", encoding="utf-8") as fh:
        for i, offer in enumerate(corpus):
            rec = {
                "offer_id": offer.offer_id,
                "domain": offer.domain,
                "brand": offer.brand_raw,
                "title": offer.title_raw,
                "price": offer.price,
                "n_sizes": offer.n_sizes,
                "category": offer.category,
            }
            if offer.product_id is not None:
                rec["product_id"] = offer.product_id
            if sidecar_path is not None:
                img_ref, n_img, d_img, txt_ref, d_txt = refs[i]
                rec["image_emb"] = {"ref": img_ref, "count": n_img, "dim": d_img}
                rec["text_emb"] = {"ref": txt_ref, "dim": d_txt}
            else:
                rec["image_emb"] = [list(map(float, v)) for v in offer.image_embeddings]
                rec["text_emb"] = [float(x) for x in offer.text_embedding]
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
